import numpy as np
import pytest

from sfwm import kernel, obe
from sfwm.params import PhysicalParams


@pytest.fixture(scope="module")
def small_problem():
    params = PhysicalParams()
    nodes = np.linspace(-90.0, 90.0, 51)
    weights = np.exp(-((nodes / 53.3) ** 2)) / 53.3
    zeroth = obe.solve_zeroth_order_batch(params, nodes)
    delta_s = np.linspace(-20.0, 20.0, 33)
    return params, nodes, weights, zeroth, delta_s


def reference_sums(params, nodes, weights, zeroth, delta_s):
    """Same weighted sums through the dense per-point solver."""
    out = [np.zeros(delta_s.size, complex) for _ in range(3)]
    for i, omega_d in enumerate(nodes):
        rho33 = zeroth["pop33_44"][i] + zeroth["rho44"][i]
        rho11 = zeroth["pop11_33"][i] + rho33
        sol = obe.ZerothOrderSolution(
            rho11=rho11,
            rho22=1.0 - rho11 - rho33 - zeroth["rho44"][i],
            rho33=rho33,
            rho44=zeroth["rho44"][i],
            rho21=zeroth["rho21"][i],
            rho42=zeroth["rho42"][i],
            rho41=zeroth["rho41"][i],
        )
        for j, ds in enumerate(delta_s):
            triple = obe.solve_first_order(sol, params, float(omega_d), float(ds))
            out[0][j] += weights[i] * triple.d_rho31_d_omega_s_conj
            out[1][j] += weights[i] * triple.d_rho43_d_omega_s
            out[2][j] += weights[i] * triple.d_rho31_d_omega_i
    return out


@pytest.mark.parametrize("backend", kernel.available_backends())
def test_kernel_matches_dense_reference(small_problem, backend):
    params, nodes, weights, zeroth, delta_s = small_problem
    fast = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend=backend)
    ref = reference_sums(params, nodes, weights, zeroth, delta_s)
    for name, a, b in zip(("kappa", "zeta", "xi"), fast, ref):
        err = np.max(np.abs(a - b)) / np.max(np.abs(b))
        assert err < 1e-10, f"{backend}/{name}: {err:.3g}"


@pytest.mark.skipif(len(kernel.available_backends()) < 2, reason="compiled kernel not built")
def test_backends_agree(small_problem):
    params, nodes, weights, zeroth, delta_s = small_problem
    a = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend="cython")
    b = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend="numpy")
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) / np.max(np.abs(x)) < 1e-9


@pytest.mark.parametrize("backend", kernel.available_backends())
def test_kernel_is_deterministic(small_problem, backend):
    params, nodes, weights, zeroth, delta_s = small_problem
    a = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend=backend)
    b = kernel.susceptibility_sums(delta_s, nodes, weights, zeroth, params, backend=backend)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_backend_selection_round_trip():
    initial = kernel.active_backend()
    try:
        assert kernel.set_backend("numpy") == "numpy"
        assert kernel.active_backend() == "numpy"
        with pytest.raises(ValueError):
            kernel.set_backend("fortran")
    finally:
        kernel.set_backend(None)
    assert kernel.active_backend() == initial
