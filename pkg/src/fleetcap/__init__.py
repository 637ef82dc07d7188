"""Fixed-asset reproduction, depreciation, productivity and demand analytics for road freight carriers."""

__version__ = "0.1.0"
