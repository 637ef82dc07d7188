"""Reference implementations used only by the tests.

They are deliberately naive: exact rational arithmetic and textbook formulas,
sharing no code with the package.
"""

from __future__ import annotations

from fractions import Fraction


def normal_equations(design, y):
    """Least-squares coefficients from X'X b = X'y solved in exact fractions."""
    rows = [[Fraction(v) for v in row] for row in design]
    ys = [Fraction(v) for v in y]
    p = len(rows[0])
    a = [[sum(r[i] * r[j] for r in rows) for j in range(p)] for i in range(p)]
    b = [sum(r[i] * v for r, v in zip(rows, ys)) for i in range(p)]
    for col in range(p):
        pivot = next(r for r in range(col, p) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        for r in range(p):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y_ for x, y_ in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return [float(b[i] / a[i][i]) for i in range(p)]


def pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    mxy = sum(x * y for x, y in zip(xs, ys)) / n
    sx = (sum(x * x for x in xs) / n - mx * mx) ** 0.5
    sy = (sum(y * y for y in ys) / n - my * my) ** 0.5
    return (mxy - mx * my) / (sx * sy)


def rel_err(got, want):
    num = sum((g - w) ** 2 for g, w in zip(got, want)) ** 0.5
    den = sum(w * w for w in want) ** 0.5
    return num / max(den, 1e-300)
