"""Elementary channels at a fixed parameter point and their Kraus gauge freedom.

A :class:`Channel` holds the Kraus operators ``K_k`` and their parameter
derivatives ``dK_k``. Everything downstream depends only on this pair.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .linalg import PAULI_X, PAULI_Z, dag, is_hermitian

TP_TOL = 1e-9

MODEL_NAMES = ("dephasing_perp", "dephasing_par", "damping_perp", "damping_par")


@dataclass(frozen=True, eq=False)
class Channel:
    kraus: tuple[np.ndarray, ...]
    dkraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        K = tuple(np.array(k, dtype=complex) for k in self.kraus)
        dK = tuple(np.array(k, dtype=complex) for k in self.dkraus)
        if not K:
            raise InvalidInputError("a channel needs at least one Kraus operator")
        if len(K) != len(dK):
            raise InvalidInputError(
                f"kraus and dkraus lengths differ ({len(K)} vs {len(dK)})")
        d = K[0].shape[0]
        for M in K + dK:
            if M.shape != (d, d):
                raise InvalidInputError(f"Kraus operators must be {d}x{d}, got {M.shape}")
        for M in K + dK:
            M.setflags(write=False)
        object.__setattr__(self, "kraus", K)
        object.__setattr__(self, "dkraus", dK)
        dev = np.max(np.abs(sum(dag(k) @ k for k in K) - np.eye(d)))
        if dev > TP_TOL:
            raise InvalidInputError(f"channel is not trace preserving (deviation {dev:.3g})")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def rank(self) -> int:
        return len(self.kraus)

    def kraus_stack(self) -> np.ndarray:
        return np.stack(self.kraus)

    def dkraus_stack(self) -> np.ndarray:
        return np.stack(self.dkraus)

    def choi(self) -> np.ndarray:
        """Choi matrix built from the Kraus operators alone (derivatives ignored)."""
        d = self.dim
        vecs = [k.reshape(-1) for k in self.kraus]
        return sum(np.outer(v, v.conj()) for v in vecs).reshape(d * d, d * d)


def _signal(phi: float) -> tuple[np.ndarray, np.ndarray]:
    U = np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
    return U, (-0.5j * PAULI_Z) @ U


def model_kraus(name: str, p: float) -> list[np.ndarray]:
    """Noise Kraus operators of the built-in qubit models (before the signal rotation)."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"p must lie in [0, 1], got {p}")
    sp, sq = np.sqrt(p), np.sqrt(1.0 - p)
    ket0 = np.array([1, 0], dtype=complex)
    ket1 = np.array([0, 1], dtype=complex)
    plus = (ket0 + ket1) / np.sqrt(2)
    minus = (ket0 - ket1) / np.sqrt(2)
    if name == "dephasing_perp":
        return [sp * np.eye(2, dtype=complex), sq * PAULI_X]
    if name == "dephasing_par":
        return [sp * np.eye(2, dtype=complex), sq * PAULI_Z]
    if name == "damping_perp":
        return [np.outer(minus, minus) + sp * np.outer(plus, plus), sq * np.outer(minus, plus)]
    if name == "damping_par":
        return [np.outer(ket0, ket0) + sp * np.outer(ket1, ket1), sq * np.outer(ket0, ket1)]
    raise InvalidInputError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def build_model(name: str, p: float, phi: float = 0.0) -> Channel:
    """Built-in qubit model with the phase rotation applied after the noise.

    ``K_{phi,k} = U_phi K_k`` with ``U_phi = exp(-i sigma_z phi / 2)``; the
    derivatives ``(-i sigma_z / 2) U_phi K_k`` are exact.
    """
    noise = model_kraus(name, p)
    U, dU = _signal(phi)
    return Channel(tuple(U @ k for k in noise), tuple(dU @ k for k in noise))


def apply_gauge(ch: Channel, h) -> Channel:
    """Shift the derivatives along the gauge direction ``dK_k - i sum_j h_kj K_j``."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 0:
        h = h.reshape(1, 1)
    if h.shape != (ch.rank, ch.rank):
        raise InvalidInputError(f"gauge matrix must be {ch.rank}x{ch.rank}, got {h.shape}")
    if not is_hermitian(h):
        raise InvalidInputError("gauge matrix must be Hermitian")
    K = ch.kraus_stack()
    shifted = ch.dkraus_stack() - 1j * np.einsum("kj,jab->kab", h, K)
    return Channel(ch.kraus, tuple(shifted))


def alpha_matrix(ch: Channel) -> np.ndarray:
    dK = ch.dkraus_stack()
    return np.einsum("kba,kbc->ac", dK.conj(), dK)


def beta_matrix(ch: Channel) -> np.ndarray:
    return np.einsum("kba,kbc->ac", ch.dkraus_stack().conj(), ch.kraus_stack())


# --- JSON I/O -------------------------------------------------------------

def matrix_from_json(obj, field: str = "matrix") -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{field}: expected {{'re': [[...]], 'im': [[...]]}} ({exc})") from exc
    if re.ndim != 2 or re.shape != im.shape:
        raise InvalidInputError(f"{field}: 're' and 'im' must be equal-shape 2-D arrays")
    return re + 1j * im


def matrix_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def channel_from_dict(obj: dict) -> Channel:
    if not isinstance(obj, dict):
        raise InvalidInputError("channel description must be a JSON object")
    if "model" in obj:
        try:
            return build_model(str(obj["model"]), float(obj["p"]), float(obj.get("phi", 0.0)))
        except KeyError as exc:
            raise InvalidInputError(f"model description is missing field {exc}") from exc
    for key in ("kraus", "dkraus"):
        if key not in obj or not isinstance(obj[key], list):
            raise InvalidInputError(f"missing or malformed field {key!r}")
    kraus = [matrix_from_json(m, f"kraus[{i}]") for i, m in enumerate(obj["kraus"])]
    dkraus = [matrix_from_json(m, f"dkraus[{i}]") for i, m in enumerate(obj["dkraus"])]
    if "dim" in obj and kraus and int(obj["dim"]) != kraus[0].shape[0]:
        raise InvalidInputError(f"'dim' = {obj['dim']} does not match Kraus size {kraus[0].shape[0]}")
    return Channel(tuple(kraus), tuple(dkraus))


def channel_to_dict(ch: Channel) -> dict:
    return {
        "dim": ch.dim,
        "kraus": [matrix_to_json(k) for k in ch.kraus],
        "dkraus": [matrix_to_json(k) for k in ch.dkraus],
    }


def load_channel(path) -> Channel:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return channel_from_dict(obj)
