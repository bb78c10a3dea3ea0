"""Exact quantum Fisher information and the two-use qubit protocols.

These routines are ground truth for checking that bounds are never beaten
and are saturated where expected.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import build_model
from .errors import InvalidInputError
from .linalg import PAULI_X, dag, herm_eig, is_hermitian, kron

SUPPORT_TOL = 1e-12
STATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ParamState:
    rho: np.ndarray
    drho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        drho = np.asarray(self.drho, dtype=complex)
        if rho.ndim != 2 or rho.shape != drho.shape or rho.shape[0] != rho.shape[1]:
            raise InvalidInputError("rho and drho must be square matrices of equal size")
        if not (is_hermitian(rho, 1e-10) and is_hermitian(drho, 1e-10)):
            raise InvalidInputError("rho and drho must be Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise InvalidInputError(f"trace(rho) = {np.trace(rho).real:.12g}, expected 1")
        if abs(np.trace(drho)) > STATE_TOL:
            raise InvalidInputError("drho must be traceless")
        if np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0] < -STATE_TOL:
            raise InvalidInputError("rho is not positive semidefinite")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "drho", drho)


def sld(s: ParamState) -> np.ndarray:
    """Symmetric logarithmic derivative, zero on the kernel-kernel block of rho."""
    w, V = herm_eig(s.rho, 1e-10)
    D = dag(V) @ s.drho @ V
    denom = w[:, None] + w[None, :]
    L = np.where(denom > SUPPORT_TOL, 2 * D / np.where(denom > SUPPORT_TOL, denom, 1.0), 0.0)
    return V @ L @ dag(V)


def qfi_mixed(s: ParamState) -> float:
    L = sld(s)
    return float(np.real(np.trace(s.rho @ L @ L)))


def qfi_pure(psi, dpsi) -> float:
    psi = np.asarray(psi, dtype=complex).ravel()
    dpsi = np.asarray(dpsi, dtype=complex).ravel()
    if abs(np.vdot(psi, psi).real - 1) > STATE_TOL:
        raise InvalidInputError("state vector is not normalised")
    overlap = np.vdot(dpsi, psi)
    return float(4 * (np.vdot(dpsi, dpsi).real - abs(overlap) ** 2))


def apply_kraus(rho, drho, kraus, dkraus):
    """Push ``(rho, drho)`` through a channel with parameter-dependent Kraus operators."""
    out = np.zeros_like(kraus[0] @ rho @ dag(kraus[0]))
    dout = np.zeros_like(out)
    for K, dK in zip(kraus, dkraus):
        out += K @ rho @ dag(K)
        dout += dK @ rho @ dag(K) + K @ drho @ dag(K) + K @ rho @ dag(dK)
    return out, dout


class Strategy(str, enum.Enum):
    SEQUENTIAL_C = "SequentialC"
    PARALLEL_E = "ParallelE"
    ADAPTIVE_AD = "AdaptiveAD"


_KET00 = np.array([1, 0, 0, 0], dtype=complex)
_KET11 = np.array([0, 0, 0, 1], dtype=complex)
_BELL = (_KET00 + _KET11) / np.sqrt(2)
_PROJ_C = np.diag([1, 0, 0, 1]).astype(complex)
_PROJ_E = np.diag([0, 1, 1, 0]).astype(complex)
_I2 = np.eye(2, dtype=complex)


def recovery_kraus(variant: str) -> list[np.ndarray]:
    """Syndrome-conditioned recovery on probe (first) and ancilla (second) qubits.

    ``"keep"`` leaves the no-error subspace alone and flips the ancilla on the
    error subspace, which realigns the accumulated phase. ``"swap"`` follows
    this with a probe flip, so that the second channel adds phase only when an
    error occurs there; it is the better choice when errors dominate.
    """
    flip_anc = kron(_I2, PAULI_X)
    flip_probe = kron(PAULI_X, _I2)
    if variant == "keep":
        return [_PROJ_C, flip_anc @ _PROJ_E]
    if variant == "swap":
        return [flip_probe @ _PROJ_C, flip_probe @ flip_anc @ _PROJ_E]
    raise InvalidInputError(f"unknown recovery variant {variant!r}")


def _on_probe(ch):
    return [kron(k, _I2) for k in ch.kraus], [kron(k, _I2) for k in ch.dkraus]


def output_state(p: float, phi: float, strategy, variant: str = "keep") -> ParamState:
    """Exact output state of a two-use protocol on the perpendicular dephasing qubit."""
    ch = build_model("dephasing_perp", p, phi)
    strategy = Strategy(strategy)
    if strategy is Strategy.SEQUENTIAL_C:
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        rho, drho = np.outer(plus, plus.conj()), np.zeros((2, 2), dtype=complex)
        for _ in range(2):
            rho, drho = apply_kraus(rho, drho, ch.kraus, ch.dkraus)
        return ParamState(rho, drho)

    rho = np.outer(_BELL, _BELL.conj())
    drho = np.zeros_like(rho)
    if strategy is Strategy.PARALLEL_E:
        K = [kron(a, b) for a in ch.kraus for b in ch.kraus]
        dK = [kron(da, b) + kron(a, db)
              for a, da in zip(ch.kraus, ch.dkraus) for b, db in zip(ch.kraus, ch.dkraus)]
        return ParamState(*apply_kraus(rho, drho, K, dK))

    K, dK = _on_probe(ch)
    R = recovery_kraus(variant)
    rho, drho = apply_kraus(rho, drho, K, dK)
    rho, drho = apply_kraus(rho, drho, R, [np.zeros_like(r) for r in R])
    rho, drho = apply_kraus(rho, drho, K, dK)
    return ParamState(rho, drho)


def simulate_intro(p: float, phi: float, strategy) -> float:
    """QFI of the two-use strategies for the perpendicular dephasing qubit.

    The adaptive strategy reports the better of the two recovery variants.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"p must lie in [0, 1], got {p}")
    strategy = Strategy(strategy)
    if strategy is Strategy.ADAPTIVE_AD:
        return max(qfi_mixed(output_state(p, phi, strategy, v)) for v in ("keep", "swap"))
    return qfi_mixed(output_state(p, phi, strategy))
