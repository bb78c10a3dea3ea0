"""QFI bounds for n channel uses, evaluated from a :class:`~qfibounds.gauge.GTable`.

All bounds minimise over the sampled grid ``(b_j, g_j)``; restricting the
minimisation to grid points can only raise a bound, so every series stays a
valid upper bound at any grid resolution. Grid ties resolve to the smallest
``b``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .gauge import GTable

# l below this is treated as zero (beta can be removed by a gauge choice)
SS_TOL = 1e-7
_CHUNK = 4096


class BoundKind(str, enum.Enum):
    PARALLEL = "Parallel"
    ADAPTIVE_OLD = "AdaptiveOld"
    ADAPTIVE_ITER = "AdaptiveIter"
    CS_ITER = "CSIter"
    CLOSED_FORM = "ClosedForm"
    ASYMPTOTIC = "Asymptotic"
    PARALLEL_DP = "ParallelDP"


ALL_KINDS = tuple(BoundKind)


@dataclass(frozen=True, eq=False)
class BoundSeries:
    kind: BoundKind
    values: np.ndarray
    argmin_b: np.ndarray | None = field(default=None, repr=False)

    @property
    def nmax(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> float:
        """Bound for ``n`` channel uses (1-based)."""
        if not 1 <= n <= self.nmax:
            raise IndexError(f"n = {n} outside 1..{self.nmax}")
        return float(self.values[n - 1])

    def normalized(self, f1: float) -> np.ndarray:
        """Values divided by ``n * f1``; ``f1`` is the single-use QFI ``4 r^2``."""
        n = np.arange(1, self.nmax + 1)
        return self.values / (n * f1)


def is_ss(gt: GTable) -> bool:
    return gt.l <= SS_TOL


def _check_nmax(nmax: int) -> None:
    if nmax < 1:
        raise InvalidInputError(f"nmax must be >= 1, got {nmax}")


def _closed(gt: GTable, nmax: int, kind: BoundKind, quad) -> BoundSeries:
    """Grid minimum of ``4 [n g + n (n-1) quad(b, g)]`` for n = 1..nmax."""
    _check_nmax(nmax)
    b, g = gt.bgrid, gt.gvalues
    q = quad(b, g)
    values = np.empty(nmax)
    args = np.empty(nmax)
    for start in range(1, nmax + 1, _CHUNK):
        n = np.arange(start, min(start + _CHUNK, nmax + 1), dtype=float)[:, None]
        tot = n * g[None, :] + n * (n - 1) * q[None, :]
        j = np.argmin(tot, axis=1)
        values[start - 1:start - 1 + len(n)] = 4 * tot[np.arange(len(n)), j]
        args[start - 1:start - 1 + len(n)] = b[j]
    return BoundSeries(kind, values, args)


def bound_parallel(gt: GTable, nmax: int) -> BoundSeries:
    """``min 4[n ||alpha|| + n(n-1) ||beta||^2]`` over the grid."""
    return _closed(gt, nmax, BoundKind.PARALLEL, lambda b, g: b * b)


def bound_ad_old(gt: GTable, nmax: int) -> BoundSeries:
    """Previously known adaptive bound ``4[n||alpha|| + n(n-1)||beta||(||beta|| + 2 sqrt||alpha||)]``."""
    return _closed(gt, nmax, BoundKind.ADAPTIVE_OLD, lambda b, g: b * (b + 2 * np.sqrt(g)))


def bound_closed_form(gt: GTable, nmax: int) -> BoundSeries:
    """Closed-form adaptive/causal-superposition bound ``4[n||alpha|| + n(n-1)||beta|| sqrt||alpha||]``."""
    return _closed(gt, nmax, BoundKind.CLOSED_FORM, lambda b, g: b * np.sqrt(g))


def bound_asymptotic(gt: GTable, nmax: int) -> BoundSeries | None:
    """Bound with the ``n log n`` correction; ``None`` for linear-scaling (l = 0) models.

    For n >= 2 each grid point with ``b > 0`` contributes
    ``4[n g + n(n-1) b^2 + n log(n) (g - b^2)]``; the n = 1 entry is ``4 r^2``.
    """
    _check_nmax(nmax)
    if is_ss(gt):
        return None
    mask = gt.bgrid > 0
    b, g = gt.bgrid[mask], gt.gvalues[mask]
    values = np.empty(nmax)
    args = np.empty(nmax)
    values[0], args[0] = 4 * gt.r ** 2, gt.r
    for start in range(2, nmax + 1, _CHUNK):
        n = np.arange(start, min(start + _CHUNK, nmax + 1), dtype=float)[:, None]
        tot = n * g + n * (n - 1) * b * b + n * np.log(n) * (g - b * b)
        j = np.argmin(tot, axis=1)
        values[start - 1:start - 1 + len(n)] = 4 * tot[np.arange(len(n)), j]
        args[start - 1:start - 1 + len(n)] = b[j]
    return BoundSeries(BoundKind.ASYMPTOTIC, values, args)


def bound_ad_iter(gt: GTable, nmax: int) -> BoundSeries:
    """Adaptive bound with a fresh representation chosen at every step.

    ``a_0 = 0``, ``a_{i+1} = min_j [a_i + g_j + 2 b_j sqrt(a_i)]``, value ``4 a_n``.
    Stepwise minimisation is exact because the update is increasing in ``a_i``.
    """
    _check_nmax(nmax)
    b, g = gt.bgrid, gt.gvalues
    values = np.empty(nmax)
    args = np.empty(nmax)
    a = 0.0
    for i in range(nmax):
        t = a + g + 2 * b * math.sqrt(a)
        j = int(np.argmin(t))
        a = float(t[j])
        values[i], args[i] = 4 * a, b[j]
    return BoundSeries(BoundKind.ADAPTIVE_ITER, values, args)


def bound_cs_iter(gt: GTable, nmax: int) -> BoundSeries:
    """Bound valid for causal superpositions: one representation shared by all steps.

    Runs ``a_{i+1}(b) = a_i(b) + g(b) + 2 b sqrt(a_i(b))`` per grid point and
    takes the grid minimum after each step.
    """
    _check_nmax(nmax)
    b, g = gt.bgrid, gt.gvalues
    a = np.zeros_like(g)
    values = np.empty(nmax)
    args = np.empty(nmax)
    for i in range(nmax):
        a = a + g + 2 * b * np.sqrt(a)
        j = int(np.argmin(a))
        values[i], args[i] = 4 * a[j], b[j]
    return BoundSeries(BoundKind.CS_ITER, values, args)


def bound_parallel_dp(gt: GTable, nmax: int, accgrid: int | None = None) -> BoundSeries:
    """Parallel bound with a separate representation per channel use.

    The recursion ``a' = a + g_j + 2 b_j B``, ``B' = B + b_j`` telescopes to
    ``a_n = sum_i (g_i - b_i^2) + (sum_i b_i)^2``, which depends only on the
    multiset of choices. On the arithmetic grid the accumulated ``B`` after
    ``i`` steps is ``i*l + m*step`` for an integer offset ``m``, so keeping the
    least ``sum (g - b^2)`` per ``m`` (a min-plus convolution per step) gives
    the exact optimum. Cost grows like ``nmax^2 * p^2``.

    With an integer ``accgrid`` the offsets are instead rounded up to
    multiples of ``r * nmax / accgrid``; ``B`` is then overestimated, which
    keeps the result a valid (looser) bound at a cost of ``nmax * p * accgrid``.
    """
    _check_nmax(nmax)
    b, g = gt.bgrid, gt.gvalues
    h = g - b * b
    if accgrid is None:
        offsets = np.arange(gt.size)

        def acc(i, m):
            return i * gt.l + m * gt.step
    else:
        if accgrid < nmax:
            raise InvalidInputError(f"accgrid must be >= nmax ({accgrid} < {nmax})")
        spacing = gt.r * nmax / accgrid
        offsets = np.zeros(gt.size, dtype=int) if spacing == 0 else np.ceil(b / spacing - 1e-12).astype(int)

        def acc(i, m):
            return m * spacing

    # items sharing an offset: only the cheapest matters
    width = int(offsets.max()) + 1
    best = np.full(width, np.inf)
    np.minimum.at(best, offsets, h)
    items = [(int(k), float(best[k])) for k in range(width) if np.isfinite(best[k])]

    c = np.zeros(1)
    values = np.empty(nmax)
    for i in range(1, nmax + 1):
        nxt = np.full(len(c) + width - 1, np.inf)
        for k, hk in items:
            seg = nxt[k:k + len(c)]
            np.minimum(seg, c + hk, out=seg)
        c = nxt
        m = np.arange(len(c))
        values[i - 1] = 4 * np.min(c + acc(i, m) ** 2)
    return BoundSeries(BoundKind.PARALLEL_DP, values)


_DISPATCH = {
    BoundKind.PARALLEL: bound_parallel,
    BoundKind.ADAPTIVE_OLD: bound_ad_old,
    BoundKind.ADAPTIVE_ITER: bound_ad_iter,
    BoundKind.CS_ITER: bound_cs_iter,
    BoundKind.CLOSED_FORM: bound_closed_form,
    BoundKind.ASYMPTOTIC: bound_asymptotic,
    BoundKind.PARALLEL_DP: bound_parallel_dp,
}


def compute_bounds(gt: GTable, nmax: int, kinds=ALL_KINDS) -> dict[BoundKind, BoundSeries | None]:
    """Evaluate several bound families on one table. Inapplicable kinds map to ``None``."""
    return {BoundKind(k): _DISPATCH[BoundKind(k)](gt, nmax) for k in kinds}
