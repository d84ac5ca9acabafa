import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from creepdam import _kernels_py, kernels
from creepdam.evolution import material_tuple
from creepdam.material import MaterialParams, creep_rate, damage_rate, make_rho

compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernel not built")

params_st = st.builds(MaterialParams, E=st.floats(10, 1e4), nu=st.floats(0, 0.49),
                      A=st.floats(0, 1), n=st.floats(1, 6), B=st.floats(0, 2), m=st.floats(1, 5),
                      qd=st.floats(0, 4), omega_crit=st.floats(0.5, 0.999),
                      coupling=st.sampled_from(["fully", "partly"]))


def inputs(seed, n=25, scale=1e-3):
    rng = np.random.default_rng(seed)
    eps0 = scale * rng.standard_normal((n, 3))
    eps1 = eps0 + 0.1 * scale * rng.standard_normal((n, 3))
    epscr = 0.1 * scale * rng.standard_normal((n, 3))
    omega = rng.uniform(0.0, 0.9, n)
    return eps0, eps1, epscr, omega


@given(params_st, st.integers(0, 10_000))
def test_rates_match_material(params, seed):
    eps0, _, epscr, omega = inputs(seed)
    dcr, dom = _kernels_py.nodal_rates(material_tuple(params), eps0, epscr, omega)
    rho = make_rho(eps0, epscr, omega)
    np.testing.assert_allclose(dcr, creep_rate(params, rho), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(dom, damage_rate(params, rho), rtol=1e-12, atol=1e-300)


@compiled
@given(params_st, st.integers(0, 10_000), st.sampled_from([kernels.EULER, kernels.RK4]),
       st.floats(1e-6, 1e-2))
def test_backends_agree(params, seed, method, dt):
    from creepdam import _kernels_c
    args = (material_tuple(params),) + inputs(seed) + (dt, method, 0.975, 1e-9)
    ec_p, om_p, bad_p = _kernels_py.integrate_nodes(*args)
    ec_c, om_c, bad_c = _kernels_c.integrate_nodes(*args)
    assert bad_p == bad_c
    if bad_p < 0:
        np.testing.assert_allclose(ec_c, ec_p, rtol=1e-11, atol=1e-300)
        np.testing.assert_allclose(om_c, om_p, rtol=1e-11, atol=1e-300)


@compiled
def test_compiled_rates_agree():
    from creepdam import _kernels_c
    p = MaterialParams(A=0.3, n=2.5, B=1.0, m=3.0, qd=0.5)
    eps0, _, epscr, omega = inputs(0, 200)
    for a, b in zip(_kernels_c.nodal_rates(material_tuple(p), eps0, epscr, omega),
                    _kernels_py.nodal_rates(material_tuple(p), eps0, epscr, omega)):
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_flags_lowest_bad_node():
    p = MaterialParams(E=1000.0, nu=0.3, B=1.0, m=2.0, qd=1.0, coupling="partly")
    eps = np.tile([0.0, 1e-3, 0.0], (4, 1))
    omega = np.array([0.1, 0.97, 0.1, 0.99])
    for backend in {kernels.backend, _kernels_py}:
        _, _, bad = backend.integrate_nodes(material_tuple(p), eps, eps, np.zeros((4, 3)), omega,
                                            0.01, kernels.RK4, 0.975, 1e-9)
        assert bad == 1


def test_backend_selection():
    forced = os.environ.get("CREEPDAM_PURE_PYTHON", "") not in ("", "0")
    expected = "cython" if kernels.compiled_available() and not forced else "python"
    assert kernels.BACKEND_NAME == expected


def test_pure_python_switch():
    env = dict(os.environ, CREEPDAM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "from creepdam import kernels; print(kernels.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
