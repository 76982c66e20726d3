import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import quad

from birknet import expr as ex
from birknet import kernels
from birknet.energy import build_energy

from _netgen import random_network
from helpers import system_from_text

BACKENDS = list(kernels.available_backends())


def test_selected_backend_is_available():
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_pure_python_fallback_can_be_forced():
    env = dict(os.environ, BIRKNET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from birknet import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("text, a, b, weighted", [
    ("exp(x) * sin(x)", -1.0, 2.0, False),
    ("1 + x^2", 0.0, -1.5, True),
    ("x + tanh(x)", 0.3, 4.0, False),
    ("sqrt(1 + x^2)", -2.0, 3.0, True),
])
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_quadrature_matches_scipy(backend, text, a, b, weighted):
    tree = ex.parse_expr(text)
    f = (lambda u: u * ex.evaluate(tree, u)[0]) if weighted else (lambda u: ex.evaluate(tree, u)[0])
    ref, _ = quad(f, a, b, epsabs=1e-14, epsrel=1e-14)
    status, val = kernels.quad_program(ex.compile_expr(tree), a, b, weighted=weighted,
                                       backend=backend)
    assert status == kernels.OK
    assert val == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("backend", BACKENDS)
def test_quadrature_reports_domain_failure(backend):
    status, _ = kernels.quad_program(ex.compile_expr(ex.parse_expr("ln(x)")), -1.0, 1.0,
                                     backend=backend)
    assert status == kernels.DOMAIN


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_on_trajectories():
    rng = np.random.default_rng(4)
    for with_r in (False, True):
        for _ in range(5):
            sys_, *_ = system_from_text(random_network(rng, with_r, linear=False, shifted=with_r))
            E, _ = build_energy(sys_, shifted=with_r)
            arrays = sys_.kernel_arrays()
            q0, qd0 = rng.normal(size=(2, sys_.m)) * 0.5
            for name in BACKENDS:
                st, acc = kernels.get_backend(name).accel_state(*arrays, q0, qd0)
                assert st == kernels.OK
            runs = {}
            for name in BACKENDS:
                impl = kernels.get_backend(name)
                runs[name] = impl.rk4(*arrays, np.ascontiguousarray(E.linear_shift), q0, qd0,
                                      1e-2, 200, 1e-2, 10)
            a, b = runs["python"], runs["compiled"]
            assert a[0] == b[0] == kernels.OK
            for x, y in zip(a[2:], b[2:]):
                assert np.allclose(x, y, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rk4_records_every_stride_and_final_step(backend):
    sys_, *_ = system_from_text("L1 1 2 1\nC1 1 2 1\n")
    E, _ = build_energy(sys_)
    out = kernels.get_backend(backend).rk4(*sys_.kernel_arrays(), np.zeros(1), np.array([1.0]),
                                           np.array([0.0]), 0.1, 25, 0.05, 10)
    times = out[2]
    assert np.allclose(times, [0.0, 1.0, 2.0, 2.45])


def test_pack_programs_offsets_constants():
    progs = [ex.compile_expr(ex.parse_expr(t)) for t in ("2*x", "x + 3", "5")]
    code, starts, consts = kernels.pack_programs(progs)
    for i, x in enumerate((0.5, -1.0, 2.0)):
        for name in BACKENDS:
            impl = kernels.get_backend(name)
            st, f, _ = impl.eval_program(code, consts, int(starts[i]), int(starts[i + 1]), x)
            assert st == kernels.OK
            assert f == [1.0, 2.0, 5.0][i]
