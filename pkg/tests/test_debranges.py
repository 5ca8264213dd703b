import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from divkernels.debranges import (
    MAX_POINTS,
    BlaschkeSpec,
    ModelSpaceKernel,
    blaschke_product,
    model_space_kernel,
    rational_direction,
)
from divkernels.division import model_subspace, pole_set, strong_division_operator
from divkernels.errors import ArgumentError, CapacityError, IllConditionedError, PoleError
from divkernels.grid import build_grid
from divkernels.kernels import PerturbedSine, Sine, kernel_matrix


def test_empty_spec_is_sine():
    x, y = np.array([0.3, -2.0]), np.array([1.1, 4.0])
    assert np.allclose(model_space_kernel(BlaschkeSpec(), x, y), Sine(1)(x, y), atol=1e-15)


def test_matches_perturbed_sine():
    spec = BlaschkeSpec.from_points([-1j, 2 - 1j, 0.5 + 2j])
    ps = PerturbedSine(1, (-1j, 2 - 1j, 0.5 + 2j))
    x = np.linspace(-6, 6, 13)
    assert np.max(np.abs(model_space_kernel(spec, x[:, None], x[None, :]) - ps(x[:, None], x[None, :]))) < 1e-13


@pytest.mark.parametrize("lam", [-1j, 1 - 0.5j, 2j])
def test_direction_is_orthogonal_to_paley_wiener(lam):
    # <v_lambda, sinc(. - y)> over the real line
    v = rational_direction(lam)
    for y in (0.0, 1.7):
        def integrand(t, part):
            val = v(t) * Sine(1)(t, y)
            return val.real if part == 0 else val.imag
        tot = sum(abs(integrate.quad(integrand, -400, 400, args=(part,), limit=4000)[0]) for part in (0, 1))
        assert tot < 5e-3


def test_onb_is_orthonormal():
    # one half-plane keeps the products non-oscillatory, so quad converges
    k = ModelSpaceKernel(BlaschkeSpec.from_points([-1j, 1 - 2j, -0.5 - 3j]))
    G = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            for part, f in ((1, np.real), (1j, np.imag)):
                G[i, j] += part * integrate.quad(lambda t: f(k.onb(t)[i] * np.conj(k.onb(t)[j])), -np.inf, np.inf,
                                                 limit=400)[0]
    assert np.max(np.abs(G - np.eye(3))) < 1e-6


def test_dimension_grows_with_points():
    g = build_grid((-20, 20), 300)
    dims = []
    for pts in ([], [-1j], [-1j, 2 - 1j]):
        spec = ModelSpaceKernel(BlaschkeSpec.from_points(pts))
        S = model_subspace(spec, (-20, 20), 300)
        dims.append(S.dim)
    assert dims[1] >= dims[0] + 1 and dims[2] >= dims[1] + 1
    assert g.n == 300


def test_projection_spectrum():
    g = build_grid((-20, 20), 300)
    K = kernel_matrix(ModelSpaceKernel(BlaschkeSpec.from_points([-1j])), g)
    ev = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    assert ev.min() > -1e-8 and ev.max() < 1 + 1e-8


def test_round_trip_poles():
    pts = [-1j, 2 - 1j]
    S = model_subspace(ModelSpaceKernel(BlaschkeSpec.from_points(pts)), (-20, 20), 300)
    assert strong_division_operator(S, 0.3).residual < 1e-3
    N = pole_set(S, 0.3).N_set
    assert len(N) == 2
    assert all(min(abs(z - p) for z in N) < 2e-2 for p in pts)


def test_blaschke_product():
    assert blaschke_product([-1j], "lower", 0.0) == pytest.approx(-1.0)
    for x in (-3.0, 0.5, 7.0):
        assert abs(blaschke_product([-1j, 2 - 3j], "lower", x)) == pytest.approx(1.0)
    with pytest.raises(PoleError):
        blaschke_product([-1j], "lower", 1j)
    with pytest.raises(ArgumentError):
        blaschke_product([1j], "lower", 0.0)


@given(st.lists(st.complex_numbers(max_magnitude=10).filter(lambda z: z.imag < -0.1), min_size=1, max_size=5),
       st.floats(-50, 50))
def test_blaschke_unimodular_on_line(pts, x):
    assert abs(abs(blaschke_product(pts, "lower", x)) - 1) < 1e-12


def test_spec_validation():
    with pytest.raises(CapacityError):
        BlaschkeSpec.from_points([-1j * (k + 1) for k in range(MAX_POINTS + 1)])
    with pytest.raises(IllConditionedError):
        BlaschkeSpec.from_points([-1j, -1j + 1e-8])
    with pytest.raises(ArgumentError):
        BlaschkeSpec.from_points([1.0])
    with pytest.raises(ArgumentError):
        BlaschkeSpec((-1j,), ())
    with pytest.raises(ArgumentError):
        model_space_kernel(BlaschkeSpec(), 1j, 0.0)


def test_scalar_returns_complex():
    v = model_space_kernel(BlaschkeSpec.from_points([-1j]), 0.0, 0.0)
    assert isinstance(v, complex)
    assert v.real == pytest.approx(1 / math.pi + PerturbedSine(1, (-1j,)).diag(np.array(0.0)) - 1 / math.pi)


def test_derivative_matches_difference():
    k = ModelSpaceKernel(BlaschkeSpec.from_points([-1j, 1 + 1j]))
    x, y, h = np.array([0.4, -2.0]), np.array([1.3, 0.7]), 1e-5
    fd = (k(x + h, y) - k(x - h, y)) / (2 * h)
    assert np.max(np.abs(k.d1(x, y) - fd)) < 1e-8
