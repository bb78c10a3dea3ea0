"""Optimisation over equivalent Kraus representations.

Every representation of a channel is reached by a Hermitian gauge matrix
``h`` acting as ``dK_k -> dK_k - i sum_j h_kj K_j``. The quantities computed
here are

* ``r = min_h sqrt(||alpha(h)||)``
* ``l = min_h ||beta(h)||``
* ``g(b) = min_h ||alpha(h)||`` subject to ``||beta(h)|| <= b``

each through a Schur-complement SDP, plus a derivative-free search used as an
independent check on the SDP.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .channel import Channel
from .errors import InfeasibleError, InvalidInputError, SolverError, UnsupportedError
from .linalg import dag, op_norm
from .sdp import LmiBlock, SdpProblem, default_backend

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-7
GTABLE_SLACK = 1e-7
ENDPOINT_TOL = 1e-6


@lru_cache(maxsize=None)
def hermitian_basis(r: int) -> np.ndarray:
    """Real-linear basis of r x r Hermitian matrices, shape ``(r*r, r, r)``.

    Order: diagonal units, then for each ``k < j`` the symmetric and the
    antisymmetric (imaginary) off-diagonal pair.
    """
    basis = []
    for k in range(r):
        E = np.zeros((r, r), dtype=complex)
        E[k, k] = 1.0
        basis.append(E)
    for k in range(r):
        for j in range(k + 1, r):
            S = np.zeros((r, r), dtype=complex)
            S[k, j] = S[j, k] = 1.0
            A = np.zeros((r, r), dtype=complex)
            A[k, j], A[j, k] = -1j, 1j
            basis += [S, A]
    out = np.array(basis)
    out.setflags(write=False)
    return out


def gauge_from_vector(x, r: int) -> np.ndarray:
    return np.tensordot(np.asarray(x, dtype=float), hermitian_basis(r), axes=1)


def vector_from_gauge(h: np.ndarray) -> np.ndarray:
    r = h.shape[0]
    x = [h[k, k].real for k in range(r)]
    for k in range(r):
        for j in range(k + 1, r):
            x += [h[k, j].real, -h[k, j].imag]
    return np.array(x)


def _dkraus_directions(ch: Channel) -> np.ndarray:
    """Change of each dK_k per unit gauge coordinate, shape ``(r*r, r, d, d)``."""
    K = ch.kraus_stack()
    return -1j * np.einsum("tkj,jab->tkab", hermitian_basis(ch.rank), K)


def shifted_dkraus(ch: Channel, x) -> np.ndarray:
    return ch.dkraus_stack() + np.tensordot(np.asarray(x, dtype=float), _dkraus_directions(ch), axes=1)


def alpha_beta_norms(ch: Channel, x) -> tuple[float, float]:
    """``(||alpha||, ||beta||)`` of the representation with gauge coordinates ``x``."""
    return norm_evaluator(ch)(x)


def norm_evaluator(ch: Channel):
    """Fast ``x -> (||alpha(x)||, ||beta(x)||)`` for repeated evaluation on one channel.

    The stacked derivative column ``M(x)`` (shape ``r*d x d``) is affine in
    ``x``; ``alpha = M^dagger M`` and ``beta = M^dagger K`` with ``K`` the
    stacked Kraus column.
    """
    d, r = ch.dim, ch.rank
    base = ch.dkraus_stack().reshape(r * d * d)
    lin = _dkraus_directions(ch).reshape(r * r, r * d * d).T
    Kcol = ch.kraus_stack().reshape(r * d, d)

    def evaluate(x):
        M = (base + lin @ np.asarray(x, dtype=float)).reshape(r * d, d)
        Mh = M.conj().T
        beta = Mh @ Kcol
        a = np.linalg.eigvalsh(Mh @ M)[-1]
        bsq = np.linalg.eigvalsh(beta.conj().T @ beta)[-1]
        return float(a), float(np.sqrt(max(bsq, 0.0)))

    return evaluate


# --- LMI blocks ---------------------------------------------------------------

def alpha_block(ch: Channel, with_lambda: bool = True) -> LmiBlock:
    """Block ``[[lam I, dK~^dagger], [dK~, I]]``; PSD iff ``lam >= ||alpha~||``.

    Variables are ``(lam, x_1..x_{r^2})`` when ``with_lambda`` else just ``x``.
    """
    d, r = ch.dim, ch.rank
    n = d + d * r

    def embed(stack: np.ndarray) -> np.ndarray:
        col = stack.reshape(r * d, d)
        M = np.zeros((n, n), dtype=complex)
        M[d:, :d] = col
        M[:d, d:] = dag(col)
        return M

    const = embed(ch.dkraus_stack())
    const[d:, d:] = np.eye(d * r)
    coeffs = [embed(D) for D in _dkraus_directions(ch)]
    if with_lambda:
        lam = np.zeros((n, n), dtype=complex)
        lam[:d, :d] = np.eye(d)
        coeffs.insert(0, lam)
    return LmiBlock(const, np.array(coeffs))


def beta_block(ch: Channel, b: float | None) -> LmiBlock:
    """Block ``[[b I, i beta~], [(i beta~)^dagger, b I]]``; PSD iff ``b >= ||beta~||``.

    With ``b=None`` the bound is the leading variable; otherwise it is a
    constant and the leading variable (``lam``) has a zero coefficient.
    """
    d = ch.dim
    K = ch.kraus_stack()

    def embed(beta: np.ndarray) -> np.ndarray:
        M = np.zeros((2 * d, 2 * d), dtype=complex)
        M[:d, d:] = 1j * beta
        M[d:, :d] = dag(1j * beta)
        return M

    beta0 = np.einsum("kba,kbc->ac", ch.dkraus_stack().conj(), K)
    coeffs = [embed(np.einsum("kba,kbc->ac", D.conj(), K)) for D in _dkraus_directions(ch)]
    lead = np.zeros((2 * d, 2 * d), dtype=complex)
    const = embed(beta0)
    if b is None:
        lead = np.eye(2 * d, dtype=complex)
    else:
        const = const + b * np.eye(2 * d)
    return LmiBlock(const, np.array([lead] + coeffs))


def _objective(nvars: int) -> np.ndarray:
    c = np.zeros(nvars)
    c[0] = 1.0
    return c


def r_problem(ch: Channel) -> SdpProblem:
    return SdpProblem(_objective(1 + ch.rank ** 2), (alpha_block(ch),))


def l_problem(ch: Channel) -> SdpProblem:
    return SdpProblem(_objective(1 + ch.rank ** 2), (beta_block(ch, None),))


def g_problem(ch: Channel, b: float) -> SdpProblem:
    return SdpProblem(_objective(1 + ch.rank ** 2), (alpha_block(ch), beta_block(ch, b)))


# --- solves -------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeSolution:
    value: float
    h: np.ndarray
    alpha_norm: float
    beta_norm: float
    residuals: tuple[float, ...] = ()


def _solve(problem: SdpProblem, ch: Channel, backend) -> GaugeSolution:
    res = (backend or default_backend()).solve(problem)
    x = res.x[1:]
    a, bnorm = alpha_beta_norms(ch, x)
    return GaugeSolution(res.value, gauge_from_vector(x, ch.rank), a, bnorm, tuple(res.residuals))


def compute_r(ch: Channel, backend=None) -> float:
    """``min_h sqrt(||alpha(h)||)``; ``4 r**2`` is the single-use ancilla-assisted QFI."""
    sol = _solve(r_problem(ch), ch, backend)
    return float(np.sqrt(max(sol.value, 0.0)))


def compute_l(ch: Channel, backend=None) -> float:
    """``min_h ||beta(h)||``; zero exactly for models limited to linear scaling."""
    sol = _solve(l_problem(ch), ch, backend)
    return max(sol.value, 0.0)


def solve_g(ch: Channel, b: float, backend=None) -> GaugeSolution:
    if b < 0:
        raise InvalidInputError(f"b must be non-negative, got {b}")
    try:
        return _solve(g_problem(ch, b), ch, backend)
    except InfeasibleError as exc:
        raise InfeasibleError(f"no representation has ||beta|| <= {b:.10g}",
                              status=exc.status) from exc


def g_of_b(ch: Channel, b: float, backend=None) -> float:
    """Smallest ``||alpha||`` over representations with ``||beta|| <= b``."""
    return max(solve_g(ch, b, backend).value, 0.0)


@dataclass(frozen=True, eq=False)
class GTable:
    """Samples of ``g`` on an arithmetic grid from ``l`` to ``r``."""

    bgrid: np.ndarray
    gvalues: np.ndarray
    l: float
    r: float

    def __post_init__(self):
        b = np.asarray(self.bgrid, dtype=float)
        g = np.asarray(self.gvalues, dtype=float)
        if b.ndim != 1 or b.shape != g.shape or b.size == 0:
            raise InvalidInputError("bgrid and gvalues must be equal-length 1-D arrays")
        object.__setattr__(self, "bgrid", b)
        object.__setattr__(self, "gvalues", g)

    @property
    def size(self) -> int:
        return len(self.bgrid)

    @property
    def step(self) -> float:
        return 0.0 if self.size == 1 else (self.r - self.l) / (self.size - 1)

    def check(self, slack: float = GTABLE_SLACK) -> list[str]:
        """Return a list of violated invariants (empty when consistent)."""
        problems = []
        b, g = self.bgrid, self.gvalues
        if self.l > self.r + slack:
            problems.append(f"l = {self.l} exceeds r = {self.r}")
        if abs(b[0] - self.l) > 1e-12 or abs(b[-1] - self.r) > 1e-12:
            problems.append("grid endpoints differ from (l, r)")
        if self.size > 1 and np.max(np.abs(np.diff(b) - self.step)) > 1e-12:
            problems.append("grid is not an arithmetic progression")
        rises = np.diff(g)
        if rises.size and rises.max() > slack:
            j = int(np.argmax(rises))
            problems.append(f"g increases by {rises[j]:.3g} between grid points {j} and {j + 1}")
        if abs(g[-1] - self.r ** 2) > ENDPOINT_TOL:
            problems.append(f"g(r) = {g[-1]} differs from r^2 = {self.r ** 2}")
        return problems


def g_table(ch: Channel, p: int = 500, backend=None, l: float | None = None,
            r: float | None = None) -> GTable:
    """Evaluate ``g`` on ``Linspace(l, r, p)``.

    ``l`` and ``r`` are solved independently unless supplied. When they
    coincide the table collapses to a single point.
    """
    if p < 1:
        raise InvalidInputError("grid size must be positive")
    r = compute_r(ch, backend) if r is None else r
    l = compute_l(ch, backend) if l is None else l
    if l > r:
        log.debug("clamping l = %.3g to r = %.3g", l, r)
        l = r
    if r - l <= DEGENERATE_TOL or p == 1:
        if r - l > DEGENERATE_TOL:
            raise InvalidInputError("a one-point grid requires l == r")
        return GTable(np.array([r]), np.array([r * r]), r, r)
    bgrid = np.linspace(l, r, p)
    bgrid[0], bgrid[-1] = l, r
    gvals = np.empty(p)
    for j, b in enumerate(bgrid):
        try:
            gvals[j] = g_of_b(ch, b, backend)
        except InfeasibleError:
            if j != 0:
                raise SolverError(f"grid point {j} (b = {b:.10g}) is infeasible")
            # l itself sits on the feasibility boundary
            gvals[j] = g_of_b(ch, b + DEGENERATE_TOL * 1e-2, backend)
        except SolverError as exc:
            raise SolverError(f"grid point {j} (b = {b:.10g}): {exc}",
                              status=exc.status, residuals=exc.residuals) from exc
    # a constrained minimum cannot undercut the unconstrained one, and at b = r
    # the constraint is inactive; this removes solver noise of order 1e-8
    gvals = np.maximum(gvals, r * r)
    gvals[-1] = r * r
    table = GTable(bgrid, gvals, l, r)
    problems = table.check()
    if problems:
        raise SolverError("inconsistent g table: " + "; ".join(problems))
    return table


# --- independent oracle -----------------------------------------------------

def brute_force_g(ch: Channel, b: float, starts: int = 4, seed: int = 0,
                  penalty: float = 1e3, max_restarts: int = 8) -> float:
    """Direct search for ``g(b)`` without any conic solver.

    Minimises ``||alpha(h)|| + penalty * max(0, ||beta(h)|| - b)`` over the
    gauge coordinates by restarted Nelder-Mead from several seeded starting
    points. The result is an upper estimate of ``g(b)``; it is intended only
    for small ranks (at most 3).
    """
    r = ch.rank
    if r > 3:
        raise UnsupportedError(f"brute-force search supports rank <= 3, got {r}")
    if not np.any(ch.dkraus_stack()):
        return 0.0
    nv = r * r
    scale = max(op_norm(m) for m in ch.dkraus) or 1.0

    norms = norm_evaluator(ch)

    def f(x):
        a, bn = norms(x)
        return a + penalty * max(0.0, bn - b)

    rng = np.random.default_rng(seed)
    inits = [np.zeros(nv)] + [scale * rng.normal(size=nv) for _ in range(starts - 1)]
    best = np.inf
    for x in inits:
        fx, step = f(x), 0.2 * scale
        # restarting with a fresh simplex gets Nelder-Mead past the kinks of the norm
        for _ in range(max_restarts):
            out = minimize(f, x, method="Nelder-Mead",
                           options=dict(xatol=1e-10, fatol=1e-11, maxiter=1000 * nv,
                                        adaptive=True, initial_simplex=_simplex(x, step)))
            improved = fx - out.fun
            if out.fun < fx:
                x, fx = out.x, out.fun
            if improved < 1e-10:
                break
            step = max(0.5 * step, 1e-6 * scale)
        best = min(best, fx)
    return float(best)


def _simplex(x: np.ndarray, step: float) -> np.ndarray:
    nv = len(x)
    return np.vstack([x] + [x + step * np.eye(nv)[i] for i in range(nv)])
