import json

import numpy as np
import pytest

from qfibounds.channel import (MODEL_NAMES, Channel, alpha_matrix, apply_gauge, beta_matrix,
                               build_model, channel_from_dict, channel_to_dict, load_channel)
from qfibounds.errors import InvalidInputError
from qfibounds.linalg import PAULI_X, PAULI_Z, dag, is_hermitian, op_norm


def random_gauge(rng, r):
    A = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return A + dag(A)


def test_dephasing_perp_kraus():
    ch = build_model("dephasing_perp", 0.75)
    np.testing.assert_allclose(ch.kraus[0], np.sqrt(0.75) * np.eye(2))
    np.testing.assert_allclose(ch.kraus[1], np.sqrt(0.25) * PAULI_X)
    for K, dK in zip(ch.kraus, ch.dkraus):
        np.testing.assert_allclose(dK, -0.5j * PAULI_Z @ K)


def test_damping_par_kraus():
    ch = build_model("damping_par", 0.75)
    np.testing.assert_allclose(ch.kraus[0], np.diag([1, np.sqrt(0.75)]))
    np.testing.assert_allclose(ch.kraus[1], [[0, 0.5], [0, 0]])


def test_noiseless_limit_keeps_zero_operator():
    ch = build_model("dephasing_perp", 1.0, 0.4)
    assert ch.rank == 2
    assert not np.any(ch.kraus[1])
    assert abs(abs(np.linalg.det(ch.kraus[0])) - 1) < 1e-12


@pytest.mark.parametrize("name", MODEL_NAMES)
@pytest.mark.parametrize("p", [0.0, 0.15, 0.5, 0.75, 1.0])
def test_builtins_trace_preserving(name, p):
    ch = build_model(name, p, phi=0.7)
    dev = np.max(np.abs(sum(dag(k) @ k for k in ch.kraus) - np.eye(2)))
    assert dev < 1e-12


def test_derivative_matches_finite_difference():
    eps = 1e-6
    for name in MODEL_NAMES:
        ch = build_model(name, 0.6, 0.3)
        up, dn = build_model(name, 0.6, 0.3 + eps), build_model(name, 0.6, 0.3 - eps)
        for k in range(2):
            fd = (up.kraus[k] - dn.kraus[k]) / (2 * eps)
            np.testing.assert_allclose(ch.dkraus[k], fd, atol=1e-8)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_rejects_bad_p(p):
    with pytest.raises(InvalidInputError):
        build_model("dephasing_perp", p)


def test_rejects_unknown_model_and_non_tp():
    with pytest.raises(InvalidInputError):
        build_model("depolarizing", 0.5)
    with pytest.raises(InvalidInputError):
        Channel((np.eye(2), np.eye(2)), (np.zeros((2, 2)),) * 2)
    with pytest.raises(InvalidInputError):
        Channel((np.eye(2),), ())


def test_alpha_beta_hand_values():
    ch = build_model("dephasing_perp", 0.75)
    np.testing.assert_allclose(alpha_matrix(ch), np.eye(2) / 4, atol=1e-15)
    np.testing.assert_allclose(beta_matrix(ch), 0.5j * (2 * 0.75 - 1) * PAULI_Z, atol=1e-15)
    assert op_norm(beta_matrix(ch)) == pytest.approx(0.25)
    assert op_norm(alpha_matrix(build_model("dephasing_par", 0.75))) == pytest.approx(0.25)
    assert op_norm(beta_matrix(build_model("dephasing_perp", 0.5))) < 1e-15


def test_zero_derivatives():
    ch = Channel((np.eye(2),), (np.zeros((2, 2)),))
    assert not np.any(alpha_matrix(ch))
    assert not np.any(beta_matrix(ch))


def test_apply_gauge_identity_and_additivity():
    rng = np.random.default_rng(0)
    ch = build_model("damping_perp", 0.4, 0.2)
    same = apply_gauge(ch, np.zeros((2, 2)))
    np.testing.assert_array_equal(same.dkraus_stack(), ch.dkraus_stack())
    h1, h2 = random_gauge(rng, 2), random_gauge(rng, 2)
    two = apply_gauge(apply_gauge(ch, h1), h2)
    one = apply_gauge(ch, h1 + h2)
    assert np.max(np.abs(two.dkraus_stack() - one.dkraus_stack())) < 1e-12


def test_apply_gauge_keeps_channel_action():
    rng = np.random.default_rng(1)
    ch = build_model("damping_par", 0.3, 0.1)
    shifted = apply_gauge(ch, random_gauge(rng, 2))
    np.testing.assert_array_equal(shifted.choi(), ch.choi())
    np.testing.assert_array_equal(shifted.kraus_stack(), ch.kraus_stack())


def test_apply_gauge_rejects_bad_shape():
    ch = build_model("damping_par", 0.3)
    with pytest.raises(InvalidInputError):
        apply_gauge(ch, np.eye(3))
    with pytest.raises(InvalidInputError):
        apply_gauge(ch, np.array([[0, 1], [0, 0]]))


def test_scalar_gauge_unitary_channel():
    # rank-1 unitary channel: ||i beta|| = max(|1/2 - h|, |1/2 + h|), smallest 1/2 at h = 0
    U = np.diag(np.exp([-0.2j, 0.2j]))
    ch = Channel((U,), (-0.5j * PAULI_Z @ U,))
    hs = np.linspace(-1, 1, 201)
    norms = [op_norm(beta_matrix(apply_gauge(ch, h))) for h in hs]
    oracle = [max(abs(0.5 - h), abs(0.5 + h)) for h in hs]
    np.testing.assert_allclose(norms, oracle, atol=1e-12)
    assert min(norms) == pytest.approx(0.5)


def test_beta_bounded_by_alpha_and_antihermitian():
    rng = np.random.default_rng(2)
    for name in MODEL_NAMES:
        for p in (0.15, 0.5, 0.9):
            ch = build_model(name, p, rng.uniform(0, 3))
            for _ in range(20):
                g = apply_gauge(ch, random_gauge(rng, 2))
                a, b = alpha_matrix(g), beta_matrix(g)
                assert op_norm(b) <= np.sqrt(op_norm(a)) + 1e-12
                assert is_hermitian(1j * b, 1e-9)
                assert np.linalg.eigvalsh(a)[0] >= -1e-12


def test_json_round_trip(tmp_path):
    ch = build_model("damping_perp", 0.3, 0.5)
    path = tmp_path / "ch.json"
    path.write_text(json.dumps(channel_to_dict(ch)))
    back = load_channel(path)
    np.testing.assert_array_equal(back.kraus_stack(), ch.kraus_stack())
    np.testing.assert_array_equal(back.dkraus_stack(), ch.dkraus_stack())
    named = channel_from_dict({"model": "damping_perp", "p": 0.3, "phi": 0.5})
    np.testing.assert_array_equal(named.kraus_stack(), ch.kraus_stack())


def test_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kraus": [\n')
    with pytest.raises(InvalidInputError, match="line 2"):
        load_channel(bad)
    with pytest.raises(InvalidInputError, match="dkraus"):
        channel_from_dict({"kraus": []})
    with pytest.raises(InvalidInputError, match="kraus\\[0\\]"):
        channel_from_dict({"kraus": [{"re": 1}], "dkraus": [{"re": 1}]})
    with pytest.raises(InvalidInputError, match="p"):
        channel_from_dict({"model": "dephasing_par"})
