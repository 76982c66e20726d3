import numpy as np
import pytest

from birknet.birkhoffian import CaseTag, SingularMassError, acceleration, regularity, vector_field

from _netgen import random_network, section4
from helpers import as_expr_netlist, system_from_text

LC_LOOP = "L1 1 2 1\nC1 1 2 1\n"


def test_section4_unit_linear_components():
    sys, *_ = system_from_text(section4(), coords=[4, 5])
    assert sys.case is CaseTag.LIN_RLC
    Q = sys.Q([1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    assert Q.tolist() == [2.0, -1.0]


def test_section4_coefficients_for_general_constants():
    vals = dict(R1=2, L1=3, L2=5, C1=0.5, C2=4, C3=0.25)
    text = section4(**vals) + ".ic C1 0.7\n.ic C2 0.2\n.ic C3 -0.1\n"
    sys, cs, *_ = system_from_text(text, coords=[4, 5])
    k = 0.7 - 0.2 - 0.1  # Q1(0) - Q2(0) + Q3(0)
    C1, C2, C3 = vals["C1"], vals["C2"], vals["C3"]
    q, qd, qdd = np.array([0.3, -0.4]), np.array([1.1, 0.6]), np.array([-0.5, 2.0])
    Q1 = 3 * qdd[0] + 2 * qd[0] + (1 / C1 + 1 / C2) * q[0] - q[1] / C1 + k / C1
    Q2 = 5 * qdd[1] - q[0] / C1 + (1 / C1 + 1 / C3) * q[1] - k / C1
    assert np.allclose(sys.Q(q, qd, qdd), [Q1, Q2], rtol=1e-14, atol=1e-14)


def test_section4_nonlinear_components():
    text = section4(R1="expr: x^3", L1="expr: 1 + x^2", L2="expr: 2 + x^2", C1="expr: x + x^3",
                    C2="expr: 2*x", C3="expr: x^3 + 3*x") + ".ic C1 0.5\n"
    sys, cs, *_ = system_from_text(text, coords=[4, 5])
    assert sys.case is CaseTag.NONLIN_RLC
    K3 = cs.K[3]
    assert K3 == 0.5
    q, qd, qdd = np.array([0.2, -0.3]), np.array([0.7, -1.2]), np.array([0.4, 0.9])
    s1 = q[0] - q[1] + K3
    Q1 = (1 + qd[0] ** 2) * qdd[0] + qd[0] ** 3 + (s1 + s1**3) + 2 * q[0]
    Q2 = (2 + qd[1] ** 2) * qdd[1] - (s1 + s1**3) + (q[1] ** 3 + 3 * q[1])
    assert np.allclose(sys.Q(q, qd, qdd), [Q1, Q2], rtol=1e-14, atol=1e-14)


def test_single_loop_is_harmonic_oscillator():
    sys, *_ = system_from_text(LC_LOOP)
    assert sys.case is CaseTag.LIN_LC and sys.m == 1
    q, qd, qdd = 0.3, -0.2, 0.9
    assert sys.Q([q], [qd], [qdd])[0] == pytest.approx(qdd + q)
    assert vector_field(sys)(np.array([1.0]), np.array([0.0]))[0] == pytest.approx(-1.0)


def test_section4_acceleration():
    sys, *_ = system_from_text(section4(), coords=[4, 5])
    # zero resistor current and unit devices: q'' = -stiffness q
    assert np.allclose(acceleration(sys, [1.0, 0.0], [0.0, 0.0]), [-2.0, 1.0])


def test_regularity():
    sys, *_ = system_from_text(section4(), coords=[4, 5])
    assert regularity(sys, [np.array([1.0, 2.0])])
    sys, *_ = system_from_text("L1 1 2 expr: 1 + x^2\nC1 1 2 1\n")
    assert regularity(sys, [np.array([v]) for v in np.linspace(-10, 10, 21)])
    # a capacitor-only loop leaves the mass form zero on that direction
    sys, *_ = system_from_text("L1 1 2 1\nC1 2 3 1\nC2 3 1 1\nC3 1 2 1\n")
    assert not regularity(sys)
    with pytest.raises(SingularMassError):
        acceleration(sys, np.zeros(sys.m), np.zeros(sys.m))


def test_lc_has_no_resistive_part_and_symmetric_mass():
    rng = np.random.default_rng(3)
    for _ in range(10):
        sys, *_ = system_from_text(random_network(rng, False, linear=False))
        assert sys.case is CaseTag.NONLIN_LC
        for _ in range(5):
            qd = rng.normal(size=sys.m)
            assert not np.any(sys.resistive(qd))
            M = sys.mass(qd)
            assert np.array_equal(M, M.T)


def test_zero_resistor_limit_matches_lc_block():
    # the dissipative linear path on a resistor-free network is the LC Birkhoffian
    sys_lc, *_ = system_from_text("L1 1 2 2\nC1 2 3 1\nL2 3 1 1\nC2 1 2 3\n")
    sys_forced, *_ = system_from_text("L1 1 2 2\nC1 2 3 1\nL2 3 1 1\nC2 1 2 3\n",
                                      case=CaseTag.LIN_RLC)
    rng = np.random.default_rng(0)
    for _ in range(20):
        q, qd, qdd = rng.normal(size=(3, sys_lc.m))
        assert np.array_equal(sys_lc.Q(q, qd, qdd), sys_forced.Q(q, qd, qdd))


def test_linear_and_expression_encodings_agree():
    rng = np.random.default_rng(11)
    for _ in range(5):
        text = random_network(rng, True, linear=True)
        lin, *_ = system_from_text(text)
        nl, *_ = system_from_text(as_expr_netlist(text))
        assert lin.case.linear and not nl.case.linear
        for _ in range(100):
            q, qd, qdd = rng.normal(size=(3, lin.m))
            a, b = lin.Q(q, qd, qdd), nl.Q(q, qd, qdd)
            assert np.max(np.abs(a - b)) <= 1e-12 * (1 + np.max(np.abs(a)))


def test_forcing_linear_case_on_nonlinear_network_is_rejected():
    with pytest.raises(ValueError):
        system_from_text("L1 1 2 expr: 1+x^2\nC1 1 2 1\n", case=CaseTag.LIN_LC)


def test_equilibrium_residual_vanishes_at_rest_state():
    sys, *_ = system_from_text(section4())
    assert np.allclose(sys.Q([0, 0], [0, 0], [0, 0]), 0)
    assert np.allclose(acceleration(sys, [0.0, 0.0], [0.0, 0.0]), 0)
