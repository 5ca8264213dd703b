import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divkernels.errors import DegenerateAnchorError, DiagonalError, SequenceDegenerateError
from divkernels.grid import build_grid
from divkernels.integrable import (
    extract_AB,
    reconstruct_kernel,
    residual_report,
    self_adjoint_report,
    stable_extract_sequence,
)
from divkernels.kernels import PerturbedSine, RankOne, Sine, airy_kernel, bessel_kernel, gaussian_rank_one


@pytest.fixture(scope="module")
def grid():
    return build_grid((-20, 20), 200)


def test_rank_one_has_trivial_phi(grid):
    k = gaussian_rank_one(0.5, 2.0)
    pair = extract_AB(k, grid, 0.3)
    x = grid.nodes
    kxp = k(x, np.full_like(x, 0.3))
    assert np.max(np.abs(pair.phi_p_values.values)) < 1e-12
    assert np.max(np.abs(pair.B.values - kxp)) < 1e-12
    assert np.max(np.abs(pair.A.values - (x - 0.3) * kxp)) < 1e-15
    assert residual_report(pair)["max"] < 1e-13


def test_sine_closed_forms(grid):
    pair = extract_AB(Sine(1), grid, 0.0)
    x = grid.nodes
    assert np.max(np.abs(pair.A.values - np.sin(x) / math.pi)) < 1e-10
    # B~ = cos(x)/pi after the phi correction
    assert np.max(np.abs(pair.B.values - np.cos(x) / math.pi)) < 1e-10
    assert residual_report(pair)["max"] < 1e-9


def test_perturbed_residual(grid):
    pair = extract_AB(PerturbedSine(1, (-1j,)), grid, 0.0)
    assert residual_report(pair)["max"] < 1e-8


@pytest.mark.parametrize("spec,p,window", [
    (airy_kernel(), 0.2, (-8, 4)),
    (bessel_kernel(1.5), 2.0, (0.1, 30)),
])
def test_literature_kernels_reconstruct(spec, p, window):
    g = build_grid(window, 120)
    pair = extract_AB(spec, g, p)
    scale = np.max(np.abs(spec.diag(g.nodes)))
    assert residual_report(pair)["max"] < 1e-6 * scale


def test_anchor_values(grid):
    g = build_grid((-5, 5), 11, "uniform-trapezoid")  # 0 is a node
    for k in (Sine(1), PerturbedSine(1, (-1j,))):
        pair = extract_AB(k, g, 0.0)
        i = int(np.flatnonzero(g.nodes == 0.0)[0])
        assert pair.A.values[i] == 0
        assert pair.B.values[i] == pair.kpp


def test_degenerate_anchor(grid):
    k = RankOne(lambda t: np.asarray(t, dtype=float) * np.exp(-np.asarray(t, dtype=float) ** 2))
    with pytest.raises(DegenerateAnchorError):
        extract_AB(k, grid, 0.0)


def test_reconstruct_pointwise_and_diagonal(grid):
    pair = extract_AB(Sine(1), grid, 0.0)
    assert abs(reconstruct_kernel(pair, 1.3, -0.2) - Sine(1)(1.3, -0.2)) < 1e-12
    with pytest.raises(DiagonalError):
        reconstruct_kernel(pair, 0.5, 0.5)


def test_real_kernel_gives_real_pair(grid):
    pair = extract_AB(Sine(2.0), grid, 0.7)
    assert np.max(np.abs(pair.A.values.imag)) < 1e-12
    assert np.max(np.abs(pair.B.values.imag)) < 1e-12


def test_anchor_independence(grid):
    k = PerturbedSine(1, (-1j,))
    r1 = residual_report(extract_AB(k, grid, 0.0))["max"]
    r2 = residual_report(extract_AB(k, grid, 2.5))["max"]
    x, y = 1.1, -3.4
    v1 = reconstruct_kernel(extract_AB(k, grid, 0.0), x, y)
    v2 = reconstruct_kernel(extract_AB(k, grid, 2.5), x, y)
    assert abs(v1 - v2) <= 10 * max(r1, r2, 1e-15)


@given(st.floats(-10, 10), st.floats(0.3, 3))
def test_anchor_identities_property(p, a):
    g = build_grid((-12, 12), 60)
    pair = extract_AB(Sine(a), g, p)
    assert abs(pair.A_at(np.array(p))) == 0
    assert abs(pair.B_at(np.array(p)) - pair.kpp) < 1e-14
    assert residual_report(pair)["max"] < 1e-9


def test_self_adjointness(grid, rng):
    xs, ys = rng.uniform(-15, 15, 20), rng.uniform(-15, 15, 20)
    for k in (Sine(1), PerturbedSine(1, (-1j, 1 + 2j))):
        rep = self_adjoint_report(k, grid, 0.0, xs, ys)
        assert rep["pairing"] < 1e-10
        assert rep["pointwise"] < 1e-10


def test_constant_sequence_has_zero_differences(grid):
    _, rep = stable_extract_sequence([Sine(1)] * 5, grid, 0.0)
    assert rep.sup_cauchy == [0.0] * 4 and rep.x_cauchy == [0.0] * 4


def test_bandwidth_sequence_cauchy_monotone(grid):
    specs = [Sine(1 + 1 / n) for n in range(1, 11)]
    out, rep = stable_extract_sequence(specs, grid, 0.0)
    assert all(b < a for a, b in zip(rep.x_cauchy, rep.x_cauchy[1:]))
    # each A_n is the closed form sin(a_n x)/pi
    for (A, _), n in zip(out, range(1, 11)):
        assert np.max(np.abs(A.values - np.sin((1 + 1 / n) * grid.nodes) / math.pi)) < 1e-10


def test_normalised_b_matches_proof_formula(grid):
    specs = [Sine(1 + 1 / n) for n in range(1, 4)]
    out, rep = stable_extract_sequence(specs, grid, 0.0)
    ys = rep.y_star
    x = grid.nodes
    for (A, B), k in zip(out, specs):
        a_star = k(ys, 0.0) * ys
        ref = k.diag(np.array(0.0)) * k(x, np.full_like(x, ys)) * (ys - x) / a_star
        assert np.max(np.abs(B.values - ref)) < 1e-10


def test_rank_one_sequence_rate(grid):
    u = gaussian_rank_one(0.2)
    specs = [RankOne(lambda x, c=1 + 1 / n: c * u.u(x)) for n in range(1, 11)]
    _, rep = stable_extract_sequence(specs, grid, 0.0)
    n = np.arange(1, 10)
    # differences of (1 + 1/n)^2 are O(1/n^2); stay within a constant of that
    ratio = np.array(rep.x_cauchy) * n**2
    assert ratio.max() < 5 * ratio.min()


def test_degenerate_sequence(grid):
    zero = RankOne(lambda t: np.where(np.abs(np.asarray(t)) < 1e-9, 1.0, 0.0))
    with pytest.raises((SequenceDegenerateError, DegenerateAnchorError)):
        stable_extract_sequence([zero], grid, 0.0)


def test_exports(grid):
    pair = extract_AB(Sine(1), grid, 0.0)
    lines = pair.to_csv().split("\r\n")
    assert lines[0] == "node,A_real,A_imag,B_real,B_imag" and len(lines) == grid.n + 2
    assert '"kpp"' in pair.to_json(residual_report(pair))
