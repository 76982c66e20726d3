import numpy as np
import pytest
from scipy.integrate import quad

from birknet.energy import build_energy, energy_rate, verify_identity

from _netgen import random_network, section4
from helpers import as_expr_netlist, system_from_text

LC_LOOP = "L1 1 2 1\nC1 1 2 1\n"


def _samples(rng, m, n=100, scale=1.0):
    return [tuple(scale * rng.normal(size=(3, m))) for _ in range(n)]


def test_unit_loop_energy():
    sys, *_ = system_from_text(LC_LOOP)
    E, D = build_energy(sys)
    assert D is None
    assert E.value([0.5], [2.0]) == pytest.approx(0.5 * 4 + 0.5 * 0.25)


def test_section4_storage_function():
    vals = dict(R1=2, L1=3, L2=5, C1=0.5, C2=4, C3=0.25)
    sys, *_ = system_from_text(section4(**vals) + ".ic C1 0.7\n.ic C2 0.2\n.ic C3 -0.1\n",
                               coords=[4, 5])
    E, D = build_energy(sys)
    k = 0.7 - 0.2 - 0.1
    q, qd = np.array([0.3, -0.4]), np.array([1.1, 0.6])
    expected = (0.5 * 3 * qd[0] ** 2 + 0.5 * 5 * qd[1] ** 2 + (q[0] - q[1]) ** 2 / (2 * 0.5)
                + q[0] ** 2 / (2 * 4) + q[1] ** 2 / (2 * 0.25) + k / 0.5 * (q[0] - q[1]))
    assert E.value(q, qd) == pytest.approx(expected, rel=1e-14)
    assert np.allclose(D.components(qd), [2 * qd[0], 0.0])
    assert E.value([0, 0], [0, 0]) == 0.0


def test_quadrature_matches_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(5):
        sys, *_ = system_from_text(random_network(rng, True))
        E, _ = build_energy(sys)
        Eq, _ = build_energy(sys, quadrature=True)
        for _ in range(20):
            q, qd = rng.normal(size=(2, sys.m))
            assert Eq.value(q, qd) == pytest.approx(E.value(q, qd), rel=1e-12, abs=1e-12)


def test_nonlinear_energy_against_scipy_quadrature():
    text = "L1 1 2 expr: 2 + sin(x)\nC1 1 2 expr: x + tanh(x)\n.ic C1 0.4\n"
    sys, cs, *_ = system_from_text(text)
    E, _ = build_energy(sys)
    q, qd = np.array([1.3]), np.array([-0.8])
    sig = float(sys.sigma(qd)[0])
    s = float(sys.charges(q)[1])
    K = float(cs.K[1])
    kin, _ = quad(lambda u: (2 + np.sin(u)) * u, 0, sig, epsabs=1e-14)
    pot, _ = quad(lambda u: u + np.tanh(u), K, s, epsabs=1e-14)
    assert E.kinetic(qd) == pytest.approx(kin, abs=1e-12)
    assert E.potential(q) == pytest.approx(pot, abs=1e-12)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(9)
    h = 1e-6
    count = 0
    for _ in range(4):
        sys, *_ = system_from_text(random_network(rng, True, linear=False))
        E, _ = build_energy(sys)
        for _ in range(50):
            q, qd = rng.normal(size=(2, sys.m))
            gq, gv = E.grad_q(q), E.grad_qd(qd)
            for i in range(sys.m):
                e = np.zeros(sys.m)
                e[i] = h
                fq = E.potential_difference(q - e, q + e) / (2 * h)
                fv = E.kinetic_difference(qd - e, qd + e) / (2 * h)
                assert fq == pytest.approx(gq[i], rel=1e-6, abs=1e-6)
                assert fv == pytest.approx(gv[i], rel=1e-6, abs=1e-6)
            count += 1
    assert count == 200


def test_identity_section4_linear():
    sys, *_ = system_from_text(section4() + ".ic C1 1\n", coords=[4, 5])
    E, D = build_energy(sys)
    rep = verify_identity(sys, E, D, _samples(np.random.default_rng(0), 2))
    assert rep.ok and rep.samples == 100
    assert rep.max_residual_analytic <= 1e-12


def test_identity_at_rest():
    sys, *_ = system_from_text(section4())
    E, D = build_energy(sys)
    rep = verify_identity(sys, E, D, [(np.array([0.4, -0.2]), np.zeros(2), np.zeros(2))])
    assert rep.max_residual_analytic == 0.0


def test_identity_fails_for_wrong_dissipation():
    sys, *_ = system_from_text(section4(R1=2))
    E, _ = build_energy(sys)
    rep = verify_identity(sys, E, None, _samples(np.random.default_rng(1), 2, n=10))
    assert not rep.ok


def test_energy_rate_examples():
    sys, *_ = system_from_text(LC_LOOP)
    E, D = build_energy(sys)
    assert energy_rate(E, D, sys)([1.0], [1.0]) == pytest.approx(0.0, abs=1e-15)

    sys, *_ = system_from_text(section4(R1=2), coords=[4, 5])
    E, D = build_energy(sys)
    assert energy_rate(E, D, sys)([0.0, 0.0], [3.0, 0.0]) == pytest.approx(-18.0)

    sys, *_ = system_from_text(section4(R1="expr: 1 + x"), coords=[4, 5])
    E, D = build_energy(sys, shifted=True)
    a = 1.7
    assert energy_rate(E, D, sys)([0.2, 0.1], [a, 0.0]) == pytest.approx(-a * a)


def test_power_balance_and_conservation_on_random_states():
    rng = np.random.default_rng(21)
    for with_r in (False, True):
        for _ in range(5):
            sys, *_ = system_from_text(random_network(rng, with_r, linear=False, shifted=with_r))
            E, D = build_energy(sys, shifted=with_r)
            rate = energy_rate(E, D, sys)
            for _ in range(20):
                q, qd = rng.normal(size=(2, sys.m))
                r = rate(q, qd)
                power = D.power(qd) if D is not None else 0.0
                assert abs(r + power) <= 1e-9 * (1 + abs(r) + abs(power))
                if with_r:
                    resistor_flow = sys.sigma(qd)[list(sys.resistors)]
                    assert power >= 0
                    assert (power > 0) == bool(np.any(np.abs(resistor_flow) > 1e-12))


def test_linear_closed_form_equals_expression_quadrature():
    text = section4(R1=1.5, L1=2, L2=0.5, C1=3, C2=1, C3=2) + ".ic C3 0.3\n"
    lin, *_ = system_from_text(text)
    nl, *_ = system_from_text(as_expr_netlist(text))
    El, _ = build_energy(lin)
    En, _ = build_energy(nl)
    rng = np.random.default_rng(2)
    for _ in range(50):
        q, qd = rng.normal(size=(2, 2))
        assert En.value(q, qd) == pytest.approx(El.value(q, qd), rel=1e-12, abs=1e-12)
