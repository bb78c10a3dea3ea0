import json

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import minimize

from qfibounds.errors import InvalidInputError
from qfibounds.gauge import g_table
from qfibounds.lindblad import (ContinuousGauge, LindbladModel, SpanClass, alpha1, beta1,
                                classify_span, discretize, integrate_bound, load_model,
                                model_from_dict, rate_bound, solve_rate)
from qfibounds.linalg import PAULI_X, PAULI_Z, dag, is_hermitian, op_norm

Z2 = np.zeros((2, 2))


def noiseless():
    return LindbladModel(Z2, PAULI_Z / 2)


def dephasing(gamma=1.0, axis=PAULI_Z):
    return LindbladModel(Z2, PAULI_Z / 2, (np.sqrt(gamma) * axis,), (Z2,))


def random_model(rng, d=2, J=2):
    c = lambda: rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    herm = lambda A: 0.5 * (A + dag(A))
    return LindbladModel(herm(c()), herm(c()), tuple(0.5 * c() for _ in range(J)),
                         tuple(0.3 * c() for _ in range(J)))


def test_beta1_simple_cases():
    b = beta1(noiseless(), ContinuousGauge())
    np.testing.assert_allclose(-1j * b, PAULI_Z / 2)
    assert op_norm(b) == pytest.approx(0.5)
    zero = LindbladModel(Z2, Z2, (Z2,), (Z2,))
    assert not np.any(beta1(zero, ContinuousGauge(0.0, np.zeros(1), np.zeros((1, 1)))))


def test_beta1_hand_formula():
    rng = np.random.default_rng(0)
    m = random_model(rng)
    hv = rng.normal(size=2) + 1j * rng.normal(size=2)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    hm = A + dag(A)
    g = ContinuousGauge(0.7, hv, hm)
    L, dL = m.collapse, m.dcollapse
    G = m.dH + 0.7 * np.eye(2)
    for j in range(2):
        G = G - 0.5j * (dag(dL[j]) @ L[j] - dag(L[j]) @ dL[j])
        G = G + hv[j] * dag(L[j]) + np.conj(hv[j]) * L[j]
        for k in range(2):
            G = G + hm[j, k] * dag(L[j]) @ L[k]
    np.testing.assert_allclose(beta1(m, g), 1j * G, atol=1e-12)
    M = [hv[j] * np.eye(2) + sum(hm[j, k] * L[k] for k in range(2)) + 1j * dL[j] for j in range(2)]
    np.testing.assert_allclose(alpha1(m, g), sum(dag(x) @ x for x in M), atol=1e-12)


def test_alpha1_examples():
    m = dephasing(0.8)
    assert not np.any(alpha1(m, ContinuousGauge(0.0, np.zeros(1), np.zeros((1, 1)))))
    c = 0.3 - 0.4j
    a = alpha1(m, ContinuousGauge(0.0, np.array([c]), np.zeros((1, 1))))
    np.testing.assert_allclose(a, abs(c) ** 2 * np.eye(2), atol=1e-15)


def test_random_gauges_keep_structure():
    rng = np.random.default_rng(1)
    for _ in range(10):
        m = random_model(rng)
        x = rng.normal(size=m.ngauge)
        assert is_hermitian(1j * beta1(m, x), 1e-10)
        assert np.linalg.eigvalsh(alpha1(m, x))[0] >= -1e-10
        g = ContinuousGauge.from_vector(x, m.njumps)
        np.testing.assert_allclose(g.to_vector(m.njumps), x, atol=1e-14)


def test_validation():
    with pytest.raises(InvalidInputError):
        LindbladModel(np.array([[0, 1], [0, 0]]), Z2)
    with pytest.raises(InvalidInputError):
        LindbladModel(Z2, Z2, (Z2,), ())
    with pytest.raises(InvalidInputError):
        LindbladModel(Z2, np.zeros((3, 3)))
    with pytest.raises(InvalidInputError):
        rate_bound(noiseless(), -1.0)
    with pytest.raises(InvalidInputError):
        beta1(dephasing(), np.zeros(2))


def test_rate_noiseless():
    assert rate_bound(noiseless(), 0.0) == pytest.approx(0.0, abs=1e-7)
    assert rate_bound(noiseless(), 1.0) == pytest.approx(2.0, abs=1e-6)
    assert rate_bound(noiseless(), 9.0) == pytest.approx(6.0, abs=1e-6)


def brute_force_span_alpha(m):
    """min ||alpha1|| over gauges with beta1 = 0, by Nelder-Mead on the null-space coordinates."""
    from qfibounds.lindblad import _g_affine, _real_system
    from scipy.linalg import null_space
    A, y = _real_system(*_g_affine(m))
    x0, *_ = np.linalg.lstsq(A, y, rcond=None)
    N = null_space(A)
    f = lambda z: np.linalg.eigvalsh(alpha1(m, x0 + N @ z))[-1]
    best = min((minimize(f, z, method="Nelder-Mead", options=dict(xatol=1e-10, fatol=1e-12))
                for z in [np.zeros(N.shape[1]), np.ones(N.shape[1])]), key=lambda r: r.fun)
    return best.fun


@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_dephasing_rate_saturates_at_span_value(gamma):
    m = dephasing(gamma)
    span = classify_span(m)
    assert span.kind is SpanClass.IN_SPAN and span.residual < 1e-10
    assert span.coefficient == pytest.approx(1 / (4 * gamma), rel=1e-6)
    assert span.coefficient == pytest.approx(4 * brute_force_span_alpha(m), rel=1e-6)
    assert rate_bound(m, 1e6) == pytest.approx(span.coefficient, rel=1e-4)
    assert rate_bound(m, 1e-2) < span.coefficient


def test_rate_monotone_in_f():
    rng = np.random.default_rng(3)
    Fs = [0.0, 0.1, 1.0, 5.0, 50.0]
    for _ in range(10):
        m = random_model(rng, J=int(rng.integers(1, 3)))
        rates = [rate_bound(m, F) for F in Fs]
        assert np.all(np.diff(rates) >= -1e-6)


def test_solution_norms_certify_rate():
    rng = np.random.default_rng(4)
    m = random_model(rng)
    sol = solve_rate(m, 2.0)
    assert 4 * (sol.alpha_norm + sol.beta_norm * np.sqrt(2.0)) == pytest.approx(sol.rate, rel=1e-5)


def test_span_classification():
    assert classify_span(dephasing(1.0, PAULI_X)).kind is SpanClass.NOT_IN_SPAN
    assert classify_span(dephasing(1.0, PAULI_X)).residual > 1e-3
    sx = classify_span(dephasing(1.0, PAULI_X))
    assert sx.coefficient == pytest.approx(1.0, rel=1e-6)  # min ||sigma_z/2 + c + d sigma_x|| = 1/2
    dH = np.diag([0.3, -0.2, 1.1])
    bare = classify_span(LindbladModel(np.zeros((3, 3)), dH))
    assert bare.kind is SpanClass.NOT_IN_SPAN
    assert bare.coefficient == pytest.approx(4 * ((1.1 + 0.2) / 2) ** 2, rel=1e-6)


def test_integrate_noiseless_heisenberg():
    c = integrate_bound(noiseless(), 10.0)
    assert abs(c.F[-1] - 100) < 1.0
    assert c.F[-1] >= 100 - 1e-6  # the implicit scheme overestimates
    assert np.all(np.diff(c.F) >= 0)
    assert c.t[-1] == 10.0 and len(c.t) == len(c.F) == c.steps + 1


def test_integrate_dephasing_linear_slope():
    gamma = 1.0
    m = dephasing(gamma)
    c = integrate_bound(m, 40.0)
    slope = (c.F[-1] - c.F[len(c.F) // 2]) / 20.0
    assert slope == pytest.approx(classify_span(m).coefficient, rel=0.02)
    assert np.all(np.diff(c.F) >= 0)


def test_integrate_not_in_span_quadratic():
    m = dephasing(0.25, PAULI_X)
    c = integrate_bound(m, 10.0)
    coef = classify_span(m).coefficient
    assert c.F[-1] / 100 == pytest.approx(coef, rel=0.05)


def test_integrate_short_time_and_validation():
    c = integrate_bound(dephasing(), 1e-6)
    assert c.F[-1] < 1e-9
    with pytest.raises(InvalidInputError):
        integrate_bound(dephasing(), 1.0, steps=5)
    with pytest.raises(InvalidInputError):
        integrate_bound(dephasing(), 0.0)


def phase_family(phi, L0, H0):
    """H and L depending on phi through a z rotation and a linear Hamiltonian term."""
    U = expm(-0.5j * phi * PAULI_Z)
    return H0 + phi * PAULI_Z / 2, [U @ L for L in L0]


def test_discretize_matches_finite_difference():
    rng = np.random.default_rng(5)
    L0 = [0.5 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))]
    H0 = np.array([[0.2, 0.1 - 0.3j], [0.1 + 0.3j, -0.4]])
    phi, eps, dt = 0.3, 1e-6, 1e-2
    H, L = phase_family(phi, L0, H0)
    dL = [-0.5j * PAULI_Z @ x for x in L]
    ch = discretize(LindbladModel(H, PAULI_Z / 2, tuple(L), tuple(dL)), dt)
    assert np.max(np.abs(sum(dag(k) @ k for k in ch.kraus) - np.eye(2))) < 1e-12
    Hp, Lp = phase_family(phi + eps, L0, H0)
    Hm, Lm = phase_family(phi - eps, L0, H0)
    up = discretize(LindbladModel(Hp, PAULI_Z / 2, tuple(Lp), tuple(Lp)), dt)
    dn = discretize(LindbladModel(Hm, PAULI_Z / 2, tuple(Lm), tuple(Lm)), dt)
    for k in range(ch.rank):
        np.testing.assert_allclose(ch.dkraus[k], (up.kraus[k] - dn.kraus[k]) / (2 * eps), atol=1e-8)
    with pytest.raises(InvalidInputError):
        discretize(LindbladModel(H, PAULI_Z / 2, tuple(L), tuple(dL)), 100.0)


def test_discrete_increment_stated_form_dephasing():
    # per-step increment 4 (g(b) + 2 b sqrt F) / dt at dt = 1e-4
    m = dephasing()
    dt = 1e-4
    gt = g_table(discretize(m, dt), 100)
    for F in (0.5, 4.0, 100.0):
        disc = np.min(4 * (gt.gvalues + 2 * gt.bgrid * np.sqrt(F)) / dt)
        assert disc == pytest.approx(rate_bound(m, F), rel=0.01)


def test_discrete_increment_converges_where_beta_matters():
    # one adaptive step raises a = F/4 by g + 2 b sqrt(a), i.e. F by 4 (g + b sqrt F)
    H = 0.15 * PAULI_Z
    m = LindbladModel(H, PAULI_Z / 2, (np.array([[0, 1], [0, 0]]),), (Z2,))
    F = 0.5
    rate = rate_bound(m, F)
    errs = []
    for dt in (1e-2, 1e-3):
        gt = g_table(discretize(m, dt), 100)
        errs.append(abs(np.min(4 * (gt.gvalues + gt.bgrid * np.sqrt(F)) / dt) - rate) / rate)
    assert errs[1] < 0.01
    assert errs[1] < errs[0] / 5


def test_json_loading(tmp_path):
    obj = {"dim": 2,
           "H": {"re": [[0, 0], [0, 0]], "im": [[0, 0], [0, 0]]},
           "dH": {"re": [[0.5, 0], [0, -0.5]]},
           "collapse": [{"re": [[1, 0], [0, -1]]}],
           "dcollapse": [{"re": [[0, 0], [0, 0]]}]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(obj))
    m = load_model(path)
    assert m.dim == 2 and m.njumps == 1
    np.testing.assert_allclose(m.collapse[0], PAULI_Z)
    path.write_text("{")
    with pytest.raises(InvalidInputError, match="line 1"):
        load_model(path)
    with pytest.raises(InvalidInputError, match="dH"):
        model_from_dict({"H": obj["H"]})
    with pytest.raises(InvalidInputError, match="dim"):
        model_from_dict(dict(obj, dim=3))
