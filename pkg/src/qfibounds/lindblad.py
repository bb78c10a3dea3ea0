"""QFI growth-rate bound for Markovian (GKSL) dynamics.

The gauge freedom of the infinitesimal channel reduces to a real scalar
``h00``, a complex vector ``hvec`` (one entry per collapse operator) and a
Hermitian matrix ``hmat``. With ``G = -i beta1`` and ``M_j`` as below, the
QFI obeys ``dF/dt <= 4 min (||alpha1|| + ||beta1|| sqrt(F))``::

    G   = dH - (i/2) sum_j (dL_j^+ L_j - L_j^+ dL_j) + h00 I
          + sum_j (h_j L_j^+ + conj(h_j) L_j) + sum_jk hmat_jk L_j^+ L_k
    M_j = h_j I + sum_k hmat_jk L_k + i dL_j,      alpha1 = sum_j M_j^+ M_j
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm, expm_frechet, null_space, solve_sylvester, sqrtm

from .channel import Channel, matrix_from_json
from .errors import InvalidInputError, SolverError
from .gauge import hermitian_basis
from .linalg import dag, is_hermitian, op_norm
from .sdp import LmiBlock, SdpProblem, default_backend

log = logging.getLogger(__name__)

SPAN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LindbladModel:
    H: np.ndarray
    dH: np.ndarray
    collapse: tuple[np.ndarray, ...] = ()
    dcollapse: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        dH = np.array(self.dH, dtype=complex)
        L = tuple(np.array(m, dtype=complex) for m in self.collapse)
        dL = tuple(np.array(m, dtype=complex) for m in self.dcollapse)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise InvalidInputError("H must be a square matrix")
        d = H.shape[0]
        if dH.shape != (d, d) or any(m.shape != (d, d) for m in L + dL):
            raise InvalidInputError(f"all operators must be {d}x{d}")
        if len(L) != len(dL):
            raise InvalidInputError("collapse and dcollapse must have equal length")
        if not (is_hermitian(H) and is_hermitian(dH)):
            raise InvalidInputError("H and dH must be Hermitian")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "dH", dH)
        object.__setattr__(self, "collapse", L)
        object.__setattr__(self, "dcollapse", dL)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def njumps(self) -> int:
        return len(self.collapse)

    @property
    def ngauge(self) -> int:
        J = self.njumps
        return 1 + 2 * J + J * J


@dataclass(frozen=True)
class ContinuousGauge:
    h00: float = 0.0
    hvec: np.ndarray | None = None
    hmat: np.ndarray | None = None

    def to_vector(self, J: int) -> np.ndarray:
        hv = np.zeros(J, dtype=complex) if self.hvec is None else np.asarray(self.hvec, dtype=complex)
        hm = np.zeros((J, J), dtype=complex) if self.hmat is None else np.asarray(self.hmat, dtype=complex)
        if hv.shape != (J,) or hm.shape != (J, J):
            raise InvalidInputError(f"gauge blocks must have sizes {J} and {J}x{J}")
        if not is_hermitian(hm):
            raise InvalidInputError("hmat must be Hermitian")
        coords = [hm[k, k].real for k in range(J)]
        for k in range(J):
            for j in range(k + 1, J):
                coords += [hm[k, j].real, -hm[k, j].imag]
        return np.concatenate(([float(self.h00)], hv.real, hv.imag, coords))

    @classmethod
    def from_vector(cls, x, J: int) -> "ContinuousGauge":
        x = np.asarray(x, dtype=float)
        hv = x[1:1 + J] + 1j * x[1 + J:1 + 2 * J]
        hm = np.tensordot(x[1 + 2 * J:], hermitian_basis(J), axes=1) if J else np.zeros((0, 0))
        return cls(float(x[0]), hv, hm)


# --- affine structure -------------------------------------------------------

def _g_affine(m: LindbladModel) -> tuple[np.ndarray, np.ndarray]:
    """``G(x) = G0 + sum_i x_i Gs[i]``, all Hermitian d x d."""
    d, J = m.dim, m.njumps
    L, dL = m.collapse, m.dcollapse
    I = np.eye(d, dtype=complex)
    G0 = m.dH.copy()
    for Lj, dLj in zip(L, dL):
        G0 = G0 - 0.5j * (dag(dLj) @ Lj - dag(Lj) @ dLj)
    Gs = [I]
    Gs += [dag(Lj) + Lj for Lj in L]                   # Re h_j
    Gs += [1j * dag(Lj) - 1j * Lj for Lj in L]         # Im h_j
    for E in hermitian_basis(J) if J else ():
        Gs.append(sum(E[j, k] * dag(L[j]) @ L[k] for j in range(J) for k in range(J)))
    return G0, np.array(Gs)


def _m_affine(m: LindbladModel) -> tuple[np.ndarray, np.ndarray]:
    """Stacked ``M(x) = M0 + sum_i x_i Ms[i]``, shape ``(J*d, d)``; empty when J = 0."""
    d, J = m.dim, m.njumps
    I = np.eye(d, dtype=complex)
    M0 = np.concatenate([1j * dLj for dLj in m.dcollapse]) if J else np.zeros((0, d), dtype=complex)
    Ms = [np.zeros_like(M0)]                           # h00 does not enter alpha
    for part in (1.0, 1j):
        for j in range(J):
            blk = np.zeros((J, d, d), dtype=complex)
            blk[j] = part * I
            Ms.append(blk.reshape(J * d, d))
    for E in hermitian_basis(J) if J else ():
        blk = np.array([sum(E[j, k] * m.collapse[k] for k in range(J)) for j in range(J)])
        Ms.append(blk.reshape(J * d, d))
    return M0, np.array(Ms)


def _as_vector(m: LindbladModel, g) -> np.ndarray:
    if isinstance(g, ContinuousGauge):
        return g.to_vector(m.njumps)
    x = np.asarray(g, dtype=float)
    if x.shape != (m.ngauge,):
        raise InvalidInputError(f"gauge vector must have length {m.ngauge}")
    return x


def beta1(m: LindbladModel, g) -> np.ndarray:
    G0, Gs = _g_affine(m)
    return 1j * (G0 + np.tensordot(_as_vector(m, g), Gs, axes=1))


def alpha1(m: LindbladModel, g) -> np.ndarray:
    M0, Ms = _m_affine(m)
    M = M0 + np.tensordot(_as_vector(m, g), Ms, axes=1)
    return dag(M) @ M if m.njumps else np.zeros((m.dim, m.dim), dtype=complex)


def _alpha_block(m: LindbladModel, lead: int, M0, Ms) -> LmiBlock:
    """``[[lam I, M^+], [M, I]]`` with ``lam`` at variable index 0 and gauge after ``lead`` slots."""
    d, J = m.dim, m.njumps
    n = d + J * d

    def embed(M):
        out = np.zeros((n, n), dtype=complex)
        out[d:, :d] = M
        out[:d, d:] = dag(M)
        return out

    const = embed(M0)
    const[d:, d:] = np.eye(J * d)
    heads = [np.zeros((n, n), dtype=complex) for _ in range(lead)]
    heads[0][:d, :d] = np.eye(d)
    return LmiBlock(const, np.array(heads + [embed(M) for M in Ms]))


def _norm_block(m: LindbladModel, lead: int, index: int, G0, Gs) -> LmiBlock:
    """``[[mu I, G], [G, mu I]]`` with ``mu`` at variable ``index``."""
    d = m.dim

    def embed(G):
        out = np.zeros((2 * d, 2 * d), dtype=complex)
        out[:d, d:] = G
        out[d:, :d] = dag(G)
        return out

    heads = [np.zeros((2 * d, 2 * d), dtype=complex) for _ in range(lead)]
    heads[index] = np.eye(2 * d, dtype=complex)
    return LmiBlock(embed(G0), np.array(heads + [embed(G) for G in Gs]))


@dataclass(frozen=True)
class RateSolution:
    rate: float
    alpha_norm: float
    beta_norm: float
    gauge: ContinuousGauge


def solve_rate(m: LindbladModel, F: float, backend=None) -> RateSolution:
    """Minimise ``||alpha1|| + ||beta1|| sqrt(F)`` over the gauge (one SDP)."""
    if F < 0:
        raise InvalidInputError(f"F must be non-negative, got {F}")
    G0, Gs = _g_affine(m)
    M0, Ms = _m_affine(m)
    c = np.zeros(2 + m.ngauge)
    c[0], c[1] = 1.0, math.sqrt(F)
    prob = SdpProblem(c, (_alpha_block(m, 2, M0, Ms), _norm_block(m, 2, 1, G0, Gs)))
    res = (backend or default_backend()).solve(prob)
    x = res.x[2:]
    a = float(np.linalg.eigvalsh(alpha1(m, x))[-1])
    b = op_norm(beta1(m, x))
    return RateSolution(4 * max(res.value, 0.0), a, b, ContinuousGauge.from_vector(x, m.njumps))


def rate_bound(m: LindbladModel, F: float, backend=None) -> float:
    """Upper bound on ``dF/dt`` at QFI value ``F``."""
    return solve_rate(m, F, backend).rate


@dataclass(frozen=True, eq=False)
class BoundCurve:
    t: np.ndarray
    F: np.ndarray
    steps: int


class _LineCache:
    """Optimal-gauge norms ``(a, b)`` reused for nearby ``s = sqrt(F)``.

    Any gauge gives the valid line ``R <= 4 (a + b s)``, so reusing a gauge
    solved at a slightly different ``s`` only costs second-order tightness.
    Buckets are 0.2% wide in ``log s``.
    """

    def __init__(self, m: LindbladModel, backend):
        self.m, self.backend, self.lines = m, backend, {}

    def __call__(self, s: float) -> tuple[float, float]:
        key = None if s <= 0 else int(round(math.log(s) * 500))
        if key not in self.lines:
            sol = solve_rate(self.m, s * s, self.backend)
            self.lines[key] = (sol.alpha_norm, sol.beta_norm)
        return self.lines[key]


def _implicit_curve(T: float, steps: int, lines: _LineCache) -> np.ndarray:
    """Right-endpoint Euler ``F_{k+1} = F_k + dt * R(F_{k+1})``.

    Each implicit step linearises ``R`` at the current gauge: any fixed gauge
    gives ``R(F) <= 4(a + b sqrt F)``, so every iterate overestimates the
    implicit solution and the iteration descends onto it.
    """
    dt = T / steps
    F = np.zeros(steps + 1)
    a, b = lines(0.0)
    for k in range(steps):
        Fk = F[k]
        s = 2 * dt * b + math.sqrt(4 * dt * dt * b * b + Fk + 4 * dt * a)
        for _ in range(30):
            a2, b2 = lines(s)
            s2 = 2 * dt * b2 + math.sqrt(4 * dt * dt * b2 * b2 + Fk + 4 * dt * a2)
            if s2 < s:
                s, a, b = s2, a2, b2
            if s - s2 <= 1e-12 * max(1.0, s) or s2 >= s:
                break
        F[k + 1] = max(s * s, Fk)
    return F


def integrate_bound(m: LindbladModel, T: float, steps: int = 10, rtol: float = 5e-3,
                    max_steps: int = 1 << 14, backend=None) -> BoundCurve:
    """Integrate the rate bound from ``F(0) = 0`` up to time ``T``.

    The step count doubles from ``steps`` until two successive resolutions
    agree at ``T`` to within ``rtol``; the finer curve is returned.
    """
    if T <= 0:
        raise InvalidInputError("T must be positive")
    if steps < 10:
        raise InvalidInputError("at least 10 steps are required")
    lines = _LineCache(m, backend)
    prev = _implicit_curve(T, steps, lines)
    while True:
        steps *= 2
        cur = _implicit_curve(T, steps, lines)
        if abs(cur[-1] - prev[-1]) <= rtol * max(abs(cur[-1]), 1e-300) or cur[-1] == prev[-1]:
            break
        if steps >= max_steps:
            log.warning("integration did not reach rtol=%g with %d steps", rtol, steps)
            break
        prev = cur
    return BoundCurve(np.linspace(0.0, T, steps + 1), cur, steps)


class SpanClass(str, enum.Enum):
    IN_SPAN = "InSpan"
    NOT_IN_SPAN = "NotInSpan"


@dataclass(frozen=True)
class SpanResult:
    kind: SpanClass
    coefficient: float
    residual: float


def _real_system(G0, Gs):
    A = np.stack([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in Gs], axis=1)
    y = -np.concatenate([G0.real.ravel(), G0.imag.ravel()])
    return A, y


def classify_span(m: LindbladModel, backend=None) -> SpanResult:
    """Decide whether ``beta1`` can be gauged to zero and return the asymptotic coefficient.

    ``InSpan``: ``F(t) ~ coefficient * t`` with coefficient ``4 min{||alpha1|| : beta1 = 0}``.
    ``NotInSpan``: ``F(t) ~ coefficient * t^2`` with coefficient ``4 min ||beta1||^2``.
    """
    G0, Gs = _g_affine(m)
    A, y = _real_system(G0, Gs)
    x0, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.linalg.norm(A @ x0 - y))
    M0, Ms = _m_affine(m)
    bk = backend or default_backend()
    if residual < SPAN_TOL:
        N = null_space(A, rcond=1e-12)
        M0r = M0 + np.tensordot(x0, Ms, axes=1)
        Msr = np.tensordot(N.T, Ms, axes=1) if N.size else np.zeros((0,) + M0.shape, dtype=complex)
        c = np.zeros(1 + Msr.shape[0])
        c[0] = 1.0
        res = bk.solve(SdpProblem(c, (_alpha_block(m, 1, M0r, Msr),)))
        return SpanResult(SpanClass.IN_SPAN, 4 * max(res.value, 0.0), residual)
    c = np.zeros(1 + m.ngauge)
    c[0] = 1.0
    res = bk.solve(SdpProblem(c, (_norm_block(m, 1, 0, G0, Gs),)))
    return SpanResult(SpanClass.NOT_IN_SPAN, 4 * max(res.value, 0.0) ** 2, residual)


def discretize(m: LindbladModel, dt: float) -> Channel:
    """Trace-preserving short-time channel matching the GKSL generator to first order.

    ``K_0 = exp(-i H dt) sqrt(I - dt sum L^+ L)``, ``K_j = sqrt(dt) L_j``,
    with exact parameter derivatives of these expressions.
    """
    d = m.dim
    I = np.eye(d, dtype=complex)
    LL = sum((dag(L) @ L for L in m.collapse), np.zeros((d, d), dtype=complex))
    dLL = sum((dag(dL) @ L + dag(L) @ dL for L, dL in zip(m.collapse, m.dcollapse)),
              np.zeros((d, d), dtype=complex))
    X = I - dt * LL
    if np.linalg.eigvalsh(X)[0] <= 0:
        raise InvalidInputError("dt too large for the collapse operators")
    S = sqrtm(X)
    dS = solve_sylvester(S, S, -dt * dLL)
    E = expm(-1j * dt * m.H)
    dE = expm_frechet(-1j * dt * m.H, -1j * dt * m.dH, compute_expm=False)
    kraus = [E @ S] + [math.sqrt(dt) * L for L in m.collapse]
    dkraus = [dE @ S + E @ dS] + [math.sqrt(dt) * dL for dL in m.dcollapse]
    return Channel(tuple(kraus), tuple(dkraus))


def model_from_dict(obj: dict) -> LindbladModel:
    if not isinstance(obj, dict):
        raise InvalidInputError("Lindblad description must be a JSON object")
    for key in ("H", "dH"):
        if key not in obj:
            raise InvalidInputError(f"missing field {key!r}")
    collapse = obj.get("collapse", [])
    dcollapse = obj.get("dcollapse", [])
    if not isinstance(collapse, list) or not isinstance(dcollapse, list):
        raise InvalidInputError("'collapse' and 'dcollapse' must be arrays")
    m = LindbladModel(
        matrix_from_json(obj["H"], "H"),
        matrix_from_json(obj["dH"], "dH"),
        tuple(matrix_from_json(c, f"collapse[{i}]") for i, c in enumerate(collapse)),
        tuple(matrix_from_json(c, f"dcollapse[{i}]") for i, c in enumerate(dcollapse)),
    )
    if "dim" in obj and int(obj["dim"]) != m.dim:
        raise InvalidInputError(f"'dim' = {obj['dim']} does not match H size {m.dim}")
    return m


def load_model(path) -> LindbladModel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(obj)


__all__ = [
    "LindbladModel", "ContinuousGauge", "beta1", "alpha1", "rate_bound", "solve_rate",
    "integrate_bound", "classify_span", "SpanClass", "SpanResult", "BoundCurve",
    "discretize", "model_from_dict", "load_model", "SolverError",
]
