"""Command-line front end.

Every report starts with a metadata header (tool version, rounding mode and
the SHA-256 of each input).  Outputs are written all-or-nothing: nothing
touches disk unless every report was produced.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from . import __version__
from . import depreciation as dep
from . import econometrics as eco
from . import forecasting as fc
from . import ledger as led
from . import productivity as prod
from . import reproduction as rep
from .errors import FleetcapError, ValidationError
from .golden import golden_suite
from .rounding import RoundingMode

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_IO = 3


class InputFile:
    """Text of one input plus its digest for the report header."""

    def __init__(self, path: str):
        self.path = Path(path)
        try:
            raw = self.path.read_bytes()
        except OSError as exc:
            raise _IOFailure(f"{path}: cannot read input ({exc.strerror or exc})") from None
        self.digest = hashlib.sha256(raw).hexdigest()
        try:
            self.text = raw.decode("utf-8-sig")
        except UnicodeDecodeError:
            raise ValidationError(f"{path}: input is not UTF-8 text") from None


class _IOFailure(Exception):
    pass


def _meta(args, inputs: Sequence[InputFile]) -> dict:
    return {
        "tool": "fleetcap",
        "version": __version__,
        "command": args.command,
        "rounding": getattr(args, "round", RoundingMode.EXACT.value),
        "inputs": {f.path.name: f.digest for f in inputs},
    }


def _csv_report(meta: dict, body: str, extra: dict | None = None) -> str:
    lines = [f"# fleetcap {meta['version']}", f"# command: {meta['command']}", f"# rounding: {meta['rounding']}"]
    lines += [f"# input {name} sha256={digest}" for name, digest in meta["inputs"].items()]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return "\n".join(lines) + "\n" + body


def _clean(obj):
    """JSON-safe copy: NaN becomes null and infinities become strings."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return obj


def _json_report(meta: dict, payload: dict) -> str:
    return json.dumps(_clean({"meta": meta, **payload}), indent=2, allow_nan=False) + "\n"


def _write_all(outputs: dict[str | None, str]) -> None:
    """Write every report or none; ``None`` means standard output."""
    staged: list[tuple[str, Path]] = []
    try:
        for target, text in outputs.items():
            if target is None:
                continue
            dest = Path(target)
            fd, tmp = tempfile.mkstemp(prefix=f".{dest.name}.", dir=dest.parent if str(dest.parent) else ".")
            staged.append((tmp, dest))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, dest in staged:
            os.replace(tmp, dest)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise _IOFailure(f"cannot write output ({exc.strerror or exc}: {exc.filename or ''})") from None
    if None in outputs:
        sys.stdout.write(outputs[None])


def _with_file(path: Path, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except FleetcapError as exc:
        exc.args = (f"{path}: {exc}",)
        raise


# ---------------------------------------------------------------------------
# commands; each returns ``{output target: text}``

def cmd_ledger(args) -> dict:
    balances = InputFile(args.input)
    records = _with_file(balances.path, led.parse_balance_table, balances.text, args.tolerance)
    inputs = [balances]
    payload: dict = {"records": len(records), "balanced": True}
    if args.structure:
        struct = InputFile(args.structure)
        inputs.append(struct)
        registry = led.load_registry(args.registry)
        rows = _with_file(struct.path, led.parse_structure_table, struct.text)
        shares = _with_file(struct.path, led.structure_shares, rows, registry)
        payload["structure"] = [
            {"group": r.group, "value": r.value, "share": r.share, "activity": registry.activity(r.group).value}
            for r in shares
        ]
        payload["active_share"] = sum(s["share"] for s in payload["structure"] if s["activity"] == "active")
        payload["passive_share"] = sum(s["share"] for s in payload["structure"] if s["activity"] == "passive")
    return {args.output: _json_report(_meta(args, inputs), payload)}


def cmd_repro(args) -> dict:
    balances = InputFile(args.input)
    records = _with_file(balances.path, led.parse_balance_table, balances.text)
    inputs = [balances]
    payload: dict = {"reports": [rep.reproduction_report(r).to_dict() for r in records]}
    if args.index:
        index = InputFile(args.index)
        inputs.append(index)
        tables = _with_file(index.path, rep.parse_index_table, index.text)
        chains = []
        for table in tables:
            price = rep.chain_indices(table.price_steps, table.periods, percent=True)
            asset = rep.chain_indices(table.asset_steps, table.periods, percent=True)
            chains.append({
                "group": table.group,
                "periods": list(table.periods),
                "price_cumulative": list(price.as_percent()),
                "asset_cumulative": list(asset.as_percent()),
                "gap": [rep.indexation_gap(p, a) for p, a in zip(price.cumulative, asset.cumulative)],
            })
        payload["indexation"] = chains
    return {args.output: _json_report(_meta(args, inputs), payload)}


def cmd_depr(args) -> dict:
    src = InputFile(args.input)
    fmt = "csv" if src.path.suffix.lower() == ".csv" else "json"
    scenario = _with_file(src.path, dep.parse_scenario, src.text, fmt)
    mode = RoundingMode(args.round)
    sched = dep.schedule(scenario, args.method, mode)
    ndv = dep.net_discounted_value(scenario, sched, salvage_as_inflow=args.salvage_inflow, rounding=mode)
    meta = _meta(args, [src])
    extra = {"method": args.method, "ndv": f"{ndv:.2f}" if mode is RoundingMode.PAPER else repr(ndv)}
    if sched.capped_at is not None:
        extra["capped_at_period"] = sched.capped_at
    outputs = {args.output: _csv_report(meta, dep.format_schedule(sched), extra)}
    if args.costs:
        rows = dep.cost_per_km_table(scenario, args.method, anchor=args.anchor, rounding=mode)
        outputs[args.costs] = _csv_report(meta, dep.format_cost_table(rows, mode), {"method": args.method})
    return outputs


def cmd_prod(args) -> dict:
    src = InputFile(args.input)
    meta = _meta(args, [src])
    if args.assess:
        series = _with_file(src.path, prod.parse_productivity_series, src.text)
        if len(series) < 2:
            raise ValidationError(f"{src.path}: assessment needs at least two periods")
        rows = []
        for (_, p0, f0), (period, p1, f1) in zip(series, series[1:]):
            a = prod.efficiency_assessment(p0, p1, f0, f1)
            rows.append({"period": period, **a.to_dict()})
        return {args.output: _json_report(meta, {"assessments": rows})}
    observations = _with_file(src.path, prod.parse_observations, src.text)
    if args.edges is None:
        return {args.output: _csv_report(meta, prod.format_observation_report(observations))}
    where = None
    if args.ownership:
        where = lambda o: o.ownership == args.ownership  # noqa: E731
    rows = prod.band_report(observations, args.factor, args.edges, where=where)
    return {args.output: _csv_report(meta, prod.format_band_report(rows), {"factor": args.factor})}


def _fit(sample: eco.Sample, args) -> eco.RegressionModel:
    if args.multi:
        return eco.fit_multilinear(sample, args.t_value)
    if args.factor:
        if args.factor not in sample.names:
            raise ValidationError(f"sample has no factor column {args.factor!r}")
        sample = sample.column(sample.names.index(args.factor))
    fit = eco.fit_parabola if args.degree == 2 else eco.fit_linear
    return fit(sample, args.t_value)


def cmd_fit(args) -> dict:
    src = InputFile(args.input)
    sample = _with_file(src.path, eco.parse_sample, src.text)
    model = _fit(sample, args)
    payload: dict = {"model": model.to_dict()}
    if model.form is not eco.Form.MULTILINEAR and model.determination is not None:
        k = 2 if model.form is eco.Form.PARABOLA else 1
        if sample.n > k + 1:
            test = eco.f_test(model.determination, sample.n, k, args.critical)
            payload["f_test"] = asdict(test)
    elif model.determination is not None and sample.n > sample.k + 1:
        payload["f_test"] = asdict(eco.f_test(model.determination, sample.n, sample.k, args.critical))
    if model.form is eco.Form.PARABOLA and model.coefficients[2] != 0:
        payload["extremum"] = eco.parabola_extremum(model)
    names, matrix = eco.correlation_matrix(sample)
    payload["correlation_matrix"] = {"names": list(names), "values": matrix}
    return {args.output: _json_report(_meta(args, [src]), payload)}


def cmd_reserve(args) -> dict:
    src = InputFile(args.input)
    sample = _with_file(src.path, eco.parse_sample, src.text)
    inputs = [src]
    if args.model:
        model_file = InputFile(args.model)
        inputs.append(model_file)
        try:
            spec = json.loads(model_file.text)
            spec = spec.get("model", spec)
            model = eco.RegressionModel.from_coefficients(
                spec.get("form", "multilinear"), spec["coefficients"], spec.get("names")
            )
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"{model_file.path}: not a model file ({exc})") from None
    else:
        model = eco.fit_multilinear(sample, args.t_value)
    report = eco.reserve_estimate(sample, model, args.mode)
    extra = {"mode": report.mode.value, "y_mean": repr(report.y_mean)}
    outputs = {args.output: _csv_report(_meta(args, inputs), report.to_csv(), extra)}
    if args.scores:
        lines = ["enterprise_id,efficiency"]
        for i, ident in enumerate(sample.ids):
            x = sample.x[i] if sample.k > 1 else sample.x[i, 0]
            score = eco.enterprise_efficiency(model, x, sample.y[i])
            lines.append(f"{ident},{'' if score is None else repr(score)}")
        outputs[args.scores] = _csv_report(_meta(args, inputs), "\n".join(lines) + "\n")
    return outputs


def cmd_forecast(args) -> dict:
    src = InputFile(args.input)
    series = _with_file(src.path, fc.parse_series, src.text)
    model = fc.fit_forecast_model(series, args.degree, smooth=not args.raw, wave=args.wave)
    rows = fc.compose_and_forecast(model, args.horizon)
    extra = {
        "trend": ";".join(repr(c) for c in model.trend.coefficients),
        "amplitude": repr(model.amplitude),
        "wave": model.wave_form.value,
    }
    if model.warning:
        extra["warning"] = model.warning
    return {args.output: _csv_report(_meta(args, [src]), fc.format_forecast(rows), extra)}


def cmd_golden(args) -> tuple[dict, int]:
    results = golden_suite()
    text = "".join(r.line() + "\n" for r in results)
    failed = sum(not r.passed for r in results)
    text += f"{len(results) - failed}/{len(results)} checks passed\n"
    outputs: dict = {None: text}
    if args.output:
        payload = {"checks": [asdict(r) for r in results], "passed": failed == 0}
        outputs[args.output] = _json_report(_meta(args, []), payload)
    return outputs, EXIT_OK if failed == 0 else EXIT_FAILED_CHECKS


# ---------------------------------------------------------------------------

def _edges(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"band edges must be numbers: {text!r}") from None


def _wave(text: str) -> str:
    text = text.strip().replace("−", "-")
    if text != "auto" and text not in {w.value for w in fc.WaveForm}:
        raise argparse.ArgumentTypeError("wave must be auto, +sin, -sin, +cos or -cos")
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fleetcap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fleetcap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text, needs_input=True):
        p = sub.add_parser(name, help=help_text)
        if needs_input:
            p.add_argument("--input", required=True, help="input file")
        p.add_argument("--output", help="report file (default: standard output)")
        p.add_argument("--round", choices=[m.value for m in RoundingMode], default="exact")
        return p

    p = command("ledger", "validate balance rows and compute structure shares")
    p.add_argument("--structure", help="group,value CSV for structure shares")
    p.add_argument("--registry", default="official", help="official, refined or a registry CSV path")
    p.add_argument("--tolerance", type=float, default=led.BALANCE_TOLERANCE)
    p.set_defaults(func=cmd_ledger)

    p = command("repro", "renewal, retirement, liquidation and reproduction coefficients")
    p.add_argument("--index", help="period,price_step,asset_step[,group] CSV of indexation steps")
    p.set_defaults(func=cmd_repro)

    p = command("depr", "mileage depreciation schedule, NDV and per-km cost table")
    p.add_argument("--method", choices=[m.value for m in dep.Method], default="degressive")
    p.add_argument("--costs", help="also write the per-km cost table here")
    p.add_argument("--anchor", choices=[a.value for a in dep.MileageAnchor], default="start")
    p.add_argument("--salvage-inflow", action="store_true", help="count the liquidation value as an inflow")
    p.set_defaults(func=cmd_depr)

    p = command("prod", "utilization ratios, band reports and efficiency assessment")
    p.add_argument("--assess", action="store_true", help="input is period,transport_work,fund_value")
    p.add_argument("--factor", choices=sorted(prod.FACTORS), default="tonne_day_utilization")
    p.add_argument("--edges", type=_edges, help="comma-separated band edges")
    p.add_argument("--ownership", help="keep only observations with this ownership form")
    p.set_defaults(func=cmd_prod)

    for name, help_text, func in (
        ("fit", "regression of productivity on utilization factors", cmd_fit),
        ("reserve", "productivity reserves from a multilinear model", cmd_reserve),
    ):
        p = command(name, help_text)
        p.add_argument("--t-value", type=float, default=eco.DEFAULT_T, help="confidence multiplier")
        p.add_argument("--degree", type=int, choices=(1, 2), default=1)
        p.add_argument("--multi", action="store_true", help="fit all x columns jointly")
        p.add_argument("--factor", help="x column for a single-factor fit")
        p.add_argument("--critical", type=float, help="F critical value (default: 5%% table)")
        p.set_defaults(func=func)
        if name == "reserve":
            p.add_argument("--mode", choices=[m.value for m in eco.ReserveMode], default="optimal")
            p.add_argument("--model", help="JSON with form and coefficients instead of fitting")
            p.add_argument("--scores", help="also write per-enterprise efficiency scores here")

    p = command("forecast", "trend plus seasonal wave forecast of quarterly demand")
    p.add_argument("--degree", type=int, choices=(1, 2), default=1)
    p.add_argument("--wave", type=_wave, default="auto")
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--raw", action="store_true", help="fit the trend on raw rather than smoothed data")
    p.set_defaults(func=cmd_forecast)

    p = command("golden", "run the embedded reference checks", needs_input=False)
    p.set_defaults(func=cmd_golden)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
        outputs, status = result if isinstance(result, tuple) else (result, EXIT_OK)
        _write_all(outputs)
        return status
    except _IOFailure as exc:
        print(f"fleetcap: {exc}", file=sys.stderr)
        return EXIT_IO
    except FleetcapError as exc:
        print(f"fleetcap: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
