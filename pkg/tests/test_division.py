import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divkernels.division import (
    analytic_continue_ratio,
    analytic_continue_strong,
    blaschke_condition_sum,
    build_subspace,
    compressions,
    distance_to_ess_window,
    division_closure_residual,
    ess_localization,
    ess_window,
    model_subspace,
    numerical_rank,
    pole_set,
    resolvent_apply,
    resolvent_identity_error,
    strong_division_operator,
    weak_division_operator,
)
from divkernels.errors import (
    ArgumentError,
    DomainError,
    NearSpectrumError,
    PreconditionError,
    StrongDivisionViolated,
    WeakDivisionViolated,
)
from divkernels.grid import build_grid
from divkernels.kernels import PerturbedSine, Sine, discrete_sine_kernel, gaussian_rank_one


@pytest.fixture(scope="module")
def sine_model():
    return model_subspace(Sine(1), (-20, 20), 300)


@pytest.fixture(scope="module")
def pert_model():
    return model_subspace(PerturbedSine(1, (-1j,)), (-20, 20), 300)


def column(spec, q):
    return lambda x: spec(x, np.full(np.shape(x), q))


def test_model_is_orthonormal(sine_model):
    assert sine_model.orthonormality_defect() < 1e-10
    assert 12 < sine_model.dim < sine_model.anchors.size


def test_model_evaluates_off_grid(sine_model):
    c = sine_model.coeffs(Sine(1)(sine_model.grid.nodes, np.zeros(300)))
    z = np.array([-7.3, 0.11, 4.0])
    assert np.max(np.abs(sine_model.eval(z) @ c - np.sin(z) / (math.pi * z))) < 1e-6


def test_pi_spaced_anchors_give_full_dimension():
    # sinc columns at pi-spaced points are orthogonal, so nothing is discarded
    g = build_grid((-40, 40), 500)
    anchors = math.pi * np.arange(-5, 6)
    assert build_subspace(Sine(1), g, anchors).dim == 11


def test_duplicate_and_outside_anchors():
    g = build_grid((-5, 5), 50)
    with pytest.raises(ArgumentError):
        build_subspace(Sine(1), g, [0.0, 0.0])
    with pytest.raises(DomainError):
        build_subspace(Sine(1), g, [0.0, 9.0])


def test_strong_operator_residual_is_small(sine_model, pert_model):
    for S in (sine_model, pert_model):
        assert strong_division_operator(S, 0.0).residual < 1e-4
        assert weak_division_operator(S, 0.0).residual < 1e-4


def test_gaussian_model_is_not_closed():
    S = model_subspace(gaussian_rank_one(0.0), (-20, 20), 300)
    assert S.dim == 1
    with pytest.raises(StrongDivisionViolated):
        strong_division_operator(S, 0.5)
    with pytest.raises(WeakDivisionViolated):
        weak_division_operator(S, 0.5)


def test_center_outside_window(sine_model):
    with pytest.raises(DomainError):
        strong_division_operator(sine_model, 50.0)


def test_resolvent_identity_is_approximate(sine_model):
    # exact only in the limit of an invariant model; the error shrinks for large |lambda|
    errs = [resolvent_identity_error(sine_model, 0.0, lam) for lam in (0.3, 1.0, 4.0)]
    assert errs[2] < errs[0]
    assert errs[2] < 1e-3


def test_near_spectrum(sine_model):
    D = strong_division_operator(sine_model, 0.0, tolerance=np.inf)
    ev = np.linalg.eigvals(D.matrix)
    lam = ev[np.argmax(np.abs(ev))]
    with pytest.raises(NearSpectrumError) as info:
        resolvent_apply(D, lam, np.ones(sine_model.dim))
    assert abs(info.value.nearest - lam) < 1e-12


def test_continuation_of_kernel_column():
    S = model_subspace(Sine(1), (-40, 40), 300)
    c = S.coeffs(Sine(1)(S.grid.nodes, np.zeros(300)))
    D = strong_division_operator(S, 0.5)
    assert abs(analytic_continue_strong(S, c, 0.5, 1j, D) - math.sinh(1) / math.pi) < 5e-3
    zr = np.linspace(-15, 15, 20)
    direct = S.eval(zr) @ c
    cont = np.array([analytic_continue_strong(S, c, 0.5, z, D) for z in zr])
    assert np.max(np.abs(cont - direct)) < 1e-6
    assert analytic_continue_strong(S, c, 0.5, 0.5, D) == pytest.approx(complex(S.evaluation(0.5) @ c))


def test_ratio_continuation(sine_model):
    S = sine_model
    k = Sine(1)
    c = S.coeffs(column(k, 1.0)(S.grid.nodes))
    z = 2.3 + 0.4j
    got = analytic_continue_ratio(S, c, 0.0, z)
    want = (S.eval(z) @ c)[0] / (S.eval(z) @ S.kernel_coeffs(0.0))[0]
    # the model is only approximately invariant, so agreement is to the closure residual
    assert abs(got - want) < 1e-3 * abs(want)


def test_poles_sine_empty(sine_model):
    assert pole_set(sine_model, 0.3).N_set == []


def test_poles_single(pert_model):
    rep = pole_set(pert_model, 0.3)
    assert len(rep.N_set) == 1 and abs(rep.N_set[0] + 1j) < 1e-2
    d = rep.to_dict()
    assert d["N"][0][1] == pytest.approx(-1.0, abs=1e-2)
    assert ess_localization(pert_model, 0.3, rep) < 0.5


def test_poles_two():
    S = model_subspace(PerturbedSine(1, (-1j, 2 - 1j)), (-20, 20), 300)
    N = pole_set(S, 0.3).N_set
    assert len(N) == 2
    for lam in (-1j, 2 - 1j):
        assert min(abs(z - lam) for z in N) < 2e-2


def test_weak_poles_on_lattice_are_real():
    g = build_grid((-30, 30), 61, "lattice")
    S = build_subspace(discrete_sine_kernel(math.pi / 2), g, g.nodes)
    rep = pole_set(S, 0.0, "weak")
    zs = np.array(rep.pole_candidates)
    sel = (np.array(rep.cosines) > 0.99) & (np.abs(zs) < 100)  # drop the null eigenvalue
    assert np.all(np.abs(zs[sel].imag) < 1e-6)
    assert rep.N_set == []


def test_compressions(pert_model):
    Dp = weak_division_operator(pert_model, 0.0)
    _, T = compressions(Dp)
    assert np.max(np.abs(T - T.conj().T)) < 1e-12
    scale = np.linalg.norm(Dp.matrix, 2)
    assert numerical_rank(Dp.matrix - T, 1e-8, scale) <= 1
    Dw = strong_division_operator(pert_model, 0.3)
    _, A = compressions(Dw)
    assert numerical_rank(Dw.matrix - A, 1e-8, np.linalg.norm(Dw.matrix, 2)) <= 2


def test_compression_spectrum(sine_model):
    Dp = weak_division_operator(sine_model, 0.0)
    _, T = compressions(Dp)
    ev_d = np.linalg.eigvals(Dp.matrix)
    ev_t = np.linalg.eigvalsh((T + T.conj().T) / 2)
    a = np.sort(ev_d[np.abs(ev_d) > 1e-8].real)
    b = np.sort(ev_t[np.abs(ev_t) > 1e-8])
    assert a.size == b.size
    assert np.max(np.abs(a - b)) < 1e-6


def test_closure_residuals():
    S = model_subspace(Sine(1), (-40, 40), 500)
    k = Sine(1)
    f = lambda x: column(k, 1.0)(x) - k(0.0, 1.0) / k(0.0, 0.0) * column(k, 0.0)(x)
    assert division_closure_residual(S, 0.0, f) < 1e-6
    with pytest.raises(PreconditionError):
        division_closure_residual(S, 0.0, column(k, 1.0))


def test_closure_coefficients(sine_model):
    S = sine_model
    c = S.coeffs(column(Sine(1), 2.0)(S.grid.nodes))
    c = c - (S.evaluation(0.0) @ c) / (S.evaluation(0.0) @ S.kernel_coeffs(0.0)) * S.kernel_coeffs(0.0)
    assert division_closure_residual(S, 0.0, c) < 1e-3


def test_ess_window_and_distance():
    g = build_grid((-20, 20), 10)
    win = ess_window(g, 0.0)
    assert win["gap"] == [-0.05, 0.05]
    d = distance_to_ess_window(np.array([0.0, 0.04, 1.0, 2j]), win)
    assert d.tolist() == pytest.approx([0.05, 0.01, 0.0, math.hypot(2.0, 0.05)])


def test_blaschke_sum():
    assert blaschke_condition_sum([-1j]).sum == 0.5
    r = blaschke_condition_sum((-1j * n for n in range(1, 1001)))
    assert r.diverging
    assert not blaschke_condition_sum([1j, 2 + 3j], "upper").diverging
    with pytest.raises(ArgumentError):
        blaschke_condition_sum([1j], "lower")
    with pytest.raises(ArgumentError):
        blaschke_condition_sum([2.0])


@given(st.lists(st.complex_numbers(max_magnitude=50).filter(lambda z: z.imag < -1e-3), max_size=20))
def test_blaschke_sum_properties(pts):
    r = blaschke_condition_sum(pts, cap=math.inf)
    assert r.sum >= 0 and r.terms == len(pts)
    assert r.sum == pytest.approx(math.fsum(-z.imag / (1 + abs(z) ** 2) for z in pts))


@settings(max_examples=10)
@given(st.floats(-8, 8))
def test_weak_compression_is_hermitian(p):
    S = model_subspace(Sine(1), (-10, 10), 120)
    _, T = compressions(weak_division_operator(S, p, tolerance=np.inf))
    assert np.max(np.abs(T - T.conj().T)) < 1e-10


def test_anchor_at_weak_center_is_ignored():
    # 133 evenly spaced anchors on [-20, 20] include 0 itself
    S = model_subspace(Sine(1), (-20, 20), 200)
    assert np.any(S.anchors == 0.0)
    assert weak_division_operator(S, 0.0).residual < 1e-4
