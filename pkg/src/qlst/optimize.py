"""Scalar search helpers: golden-section maximization and monotone bisection."""

import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, xtol: float = 1e-6, max_iter: int = 200):
    """Maximize a unimodal f on [a, b] to |b - a| <= xtol; returns (x, f(x)).

    Interior evaluations are reused across iterations (one new call per
    step).  Non-finite objective values are treated as -inf so isolated
    solver failures shrink the bracket instead of aborting the search.
    """

    def val(x):
        y = f(x)
        return y if y is not None and math.isfinite(y) else -math.inf

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = val(c), val(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = val(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = val(d)
    if fc > fd:
        return c, fc
    return d, fd


def bisect_monotone(f, target: float, lo: float, hi: float, rtol: float = 1e-3,
                    increasing: bool = True, max_iter: int = 200):
    """Solve f(x) = target for monotone f by bisection on log x.

    Assumes f(lo) and f(hi) bracket the target (callers check
    reachability first).  Returns the geometric midpoint of the final
    bracket.
    """
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(max_iter):
        if lhi - llo <= math.log1p(rtol):
            break
        mid = 0.5 * (llo + lhi)
        high_side = f(math.exp(mid)) >= target
        if high_side == increasing:
            lhi = mid
        else:
            llo = mid
    return math.exp(0.5 * (llo + lhi))


def coarse_then_golden(f, grid: np.ndarray, xtol: float, min_valid_frac: float = 0.9,
                       extend_low: float | None = None):
    """Grid scan followed by golden-section refinement around the best point.

    ``f`` may be a vectorized callable (called once on the full grid) or a
    scalar one; refinement always uses scalar calls.  Returns
    (x_best, f_best, curve) where curve stacks the grid and its values.
    Raises ValueError when fewer than ``min_valid_frac`` of the grid
    points produced finite values.  When the argmax pins to the first
    grid point and ``extend_low`` is given, the refinement bracket is
    widened down to it so maximizers below the grid floor are still found.
    """
    values = np.asarray(f(grid), dtype=float)
    valid = np.isfinite(values)
    if valid.mean() < min_valid_frac:
        raise ValueError(
            f"only {int(valid.sum())}/{len(grid)} grid evaluations succeeded"
        )
    best = int(np.nanargmax(np.where(valid, values, -np.inf)))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    if best == 0 and extend_low is not None and extend_low < lo:
        lo = extend_low

    def scalar(x):
        y = f(np.asarray([x]))
        return float(np.asarray(y).reshape(-1)[0])

    x_best, f_best = golden_section_max(scalar, float(lo), float(hi), xtol)
    if values[best] > f_best:
        x_best, f_best = float(grid[best]), float(values[best])
    curve = np.column_stack([grid, values])
    return x_best, f_best, curve
