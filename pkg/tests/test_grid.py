import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from divkernels.errors import ArgumentError, DomainError
from divkernels.grid import Grid, build_grid, inner_product
from divkernels.kernels import Sine


def test_gauss_weights_sum_to_length():
    g = build_grid((-1, 1), 16, "gauss-legendre")
    assert abs(g.weights.sum() - 2.0) < 1e-14


def test_lattice_counting_measure():
    g = build_grid((-5, 5), 11, "lattice")
    assert g.n == 11
    assert np.all(g.weights == 1.0)
    assert np.array_equal(g.nodes, np.arange(-5, 6))
    assert g.measure_kind == "counting"


def test_trapezoid_integrates_sine():
    g = build_grid((0, math.pi), 64, "uniform-trapezoid")
    assert abs(g.integrate(np.sin(g.nodes)) - 2.0) < 1e-3


def test_gauss_exactness_degree():
    g = build_grid((0, 3), 8)
    # degree 2n - 1 = 15 is integrated exactly
    assert abs(g.integrate(g.nodes**15) - 3**16 / 16) < 1e-6 * 3**16


@pytest.mark.parametrize("domain", [(-math.inf, 1), (0, math.nan), (2, 2), (3, 1)])
def test_bad_domains(domain):
    with pytest.raises(DomainError):
        build_grid(domain, 10)


def test_too_few_nodes():
    with pytest.raises(ArgumentError):
        build_grid((0, 1), 1)


def test_lattice_count_must_match():
    with pytest.raises(ArgumentError):
        build_grid((-5, 5), 10, "lattice")


def test_invariants_enforced():
    with pytest.raises(ArgumentError):
        Grid(np.array([0.0, 0.0]), np.array([1.0, 1.0]), (0, 1), "gauss-legendre")
    with pytest.raises(ArgumentError):
        Grid(np.array([0.0, 1.0]), np.array([1.0, -1.0]), (0, 1), "gauss-legendre")
    with pytest.raises(ArgumentError):
        Grid(np.array([0.0, 0.5]), np.array([1.0, 1.0]), (0, 1), "lattice", "counting")


def test_grid_is_read_only():
    g = build_grid((0, 1), 4)
    with pytest.raises(ValueError):
        g.nodes[0] = 3.0


def test_build_is_deterministic():
    a, b = build_grid((-3, 7), 33), build_grid((-3, 7), 33)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)


def test_zero_inner_product():
    g = build_grid((-1, 1), 10)
    z = g.function(np.zeros(10))
    assert inner_product(z, z) == 0


def test_reproducing_pairing_sine():
    g = build_grid((-40, 40), 400)
    k0 = g.function(Sine(1)(g.nodes, np.zeros(g.n)))
    assert abs(inner_product(k0, k0) - 1 / math.pi) < 2e-2


def test_real_functions_have_real_pairing(rng):
    g = build_grid((-2, 2), 30)
    f, h = g.function(rng.normal(size=30)), g.function(rng.normal(size=30))
    assert abs(inner_product(f, h).imag) < 1e-15


def test_grid_mismatch():
    g1, g2 = build_grid((0, 1), 5), build_grid((0, 1), 5)
    with pytest.raises(ArgumentError):
        inner_product(g1.function(np.ones(5)), g2.function(np.ones(5)))
    with pytest.raises(ArgumentError):
        g1.function(np.ones(4))


@given(arrays(np.float64, (2, 12), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (2, 12), elements=st.floats(-1e3, 1e3)))
def test_conjugate_symmetry(a, b):
    g = build_grid((-1, 2), 12)
    f = g.function(a[0] + 1j * a[1])
    h = g.function(b[0] + 1j * b[1])
    lhs, rhs = inner_product(f, h), np.conj(inner_product(h, f))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


@pytest.mark.parametrize("x,y", [(0.0, 0.0), (0.5, -1.0), (2.0, 3.0)])
def test_refinement_reduces_pairing_error(x, y):
    s = Sine(1)
    errs = []
    for n in (20, 40, 80, 160):
        g = build_grid((-40, 40), n)
        kx = g.function(s(g.nodes, np.full(n, x)))
        ky = g.function(s(g.nodes, np.full(n, y)))
        errs.append(abs(inner_product(kx, ky) - s(x, y)))
    assert errs[1] < errs[0]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_restrict_and_serialisation():
    g = build_grid((-4, 4), 20)
    r = g.restrict((0, 2))
    assert r.n == 20 and r.domain == (0.0, 2.0)
    with pytest.raises(DomainError):
        g.restrict((-5, 0))
    back = Grid.from_json(g.to_json())
    assert np.array_equal(back.nodes, g.nodes) and np.array_equal(back.weights, g.weights)
    lines = g.to_csv().split("\r\n")
    assert lines[0] == "node,weight" and len(lines) == 22
    lat = build_grid((-5, 5), 11, "lattice").restrict((-2.5, 3))
    assert np.array_equal(lat.nodes, np.arange(-2, 4))
