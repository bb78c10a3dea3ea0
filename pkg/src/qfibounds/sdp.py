"""Neutral linear-matrix-inequality problems and a conic backend.

Problems are stated as::

    minimize    c . x
    subject to  F_k(x) = C_k + sum_i x_i G_{k,i}  is PSD   for every block k

with real ``x`` and complex Hermitian ``C_k``, ``G_{k,i}``. A backend only has
to honour :meth:`solve`. The bundled backend hands the problem to cvxpy with
the standard real embedding of each Hermitian block.
"""
from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import InfeasibleError, SolverError
from .linalg import hermitian_part, min_eig, real_embedding

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
GAP_TOL = 1e-8
# points whose blocks dip below this are rejected even if the solver says optimal
ACCEPT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LmiBlock:
    const: np.ndarray
    coeffs: np.ndarray  # (nvars, n, n)

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def evaluate(self, x) -> np.ndarray:
        return self.const + np.tensordot(np.asarray(x, dtype=float), self.coeffs, axes=1)


@dataclass(frozen=True, eq=False)
class SdpProblem:
    c: np.ndarray
    blocks: tuple[LmiBlock, ...]
    labels: tuple[str, ...] = ()

    @property
    def nvars(self) -> int:
        return len(self.c)

    def residuals(self, x) -> list[float]:
        """Smallest eigenvalue of every block at ``x`` (negative means violated)."""
        return [min_eig(b.evaluate(x)) for b in self.blocks]

    def structure_key(self) -> str:
        """Digest of everything except the objective and the block constants."""
        h = hashlib.sha1()
        h.update(np.int64(self.nvars).tobytes())
        for b in self.blocks:
            h.update(np.ascontiguousarray(b.coeffs).tobytes())
        return h.hexdigest()


@dataclass
class SdpResult:
    x: np.ndarray
    value: float
    status: str
    residuals: list[float] = field(default_factory=list)


class CvxpyBackend:
    """Solve :class:`SdpProblem` instances through cvxpy.

    Problems sharing the same coefficient structure reuse one compiled cvxpy
    problem; only the objective vector and block constants are refreshed, so a
    sweep over a grid of constants costs one canonicalisation.
    """

    def __init__(self, solver: str = "CLARABEL", **solver_opts):
        self.solver = solver
        if solver == "CLARABEL" and not solver_opts:
            solver_opts = dict(tol_feas=FEAS_TOL, tol_gap_abs=GAP_TOL, tol_gap_rel=GAP_TOL)
        self.solver_opts = solver_opts
        self._cache: dict[str, tuple] = {}

    def _compile(self, problem: SdpProblem):
        m = problem.nvars
        x = cp.Variable(m)
        cpar = cp.Parameter(m)
        params, cons = [], []
        for blk in problem.blocks:
            n2 = 2 * blk.size
            P = cp.Parameter((n2, n2), symmetric=True)
            G = np.stack([real_embedding(hermitian_part(g)).reshape(-1) for g in blk.coeffs], axis=1)
            cons.append(P + cp.reshape(G @ x, (n2, n2), order="C") >> 0)
            params.append(P)
        return cp.Problem(cp.Minimize(cpar @ x), cons), x, cpar, params

    def solve(self, problem: SdpProblem) -> SdpResult:
        key = problem.structure_key()
        if key not in self._cache:
            self._cache[key] = self._compile(problem)
        prob, x, cpar, params = self._cache[key]
        cpar.value = np.asarray(problem.c, dtype=float)
        for P, blk in zip(params, problem.blocks):
            P.value = real_embedding(hermitian_part(blk.const))
        try:
            with warnings.catch_warnings():
                # accuracy is judged below from the PSD residuals instead
                warnings.simplefilter("ignore", UserWarning)
                prob.solve(solver=self.solver, **self.solver_opts)
        except cp.error.SolverError as exc:
            raise SolverError(f"{self.solver} failed: {exc}", status="error") from exc

        status = prob.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise InfeasibleError("problem is infeasible", status=status)
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or x.value is None:
            raise SolverError(f"solver returned status {status!r}", status=status)
        xv = np.array(x.value, dtype=float)
        res = problem.residuals(xv)
        if min(res) < -ACCEPT_TOL:
            raise SolverError(
                f"solution violates PSD constraints (min eigenvalue {min(res):.3g})",
                status=status, residuals=res)
        if status == cp.OPTIMAL_INACCURATE:
            log.debug("solver reported %s; residuals %s", status, res)
        return SdpResult(xv, float(np.dot(problem.c, xv)), status, res)


_default_backend: CvxpyBackend | None = None


def default_backend() -> CvxpyBackend:
    global _default_backend
    if _default_backend is None:
        _default_backend = CvxpyBackend()
    return _default_backend
