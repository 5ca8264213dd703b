"""Finite models of a kernel space and its division operators.

The space is modelled by kernel columns K(., a_j) at anchors a_j, sampled on a
quadrature grid and orthonormalised in L2(mu).  Every model function is a
finite combination of kernel columns, so it can be evaluated anywhere in the
kernel's domain (and at complex points where the kernel continues), which is
what the evaluation functionals of the division operators need.

Operators are compressions: the image of each basis function is computed on
the grid and projected back onto the model.  The evaluation functional and
the reproducing kernel used inside the operators are those of the model, so
the algebraic relations between D_w, D_p and their self-adjoint parts hold to
rounding, independent of the projection residual.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateAnchorError,
    DomainError,
    EmptySpaceError,
    NearSpectrumError,
    NumericError,
    PreconditionError,
    StrongDivisionViolated,
    WeakDivisionViolated,
)
from .grid import Grid, GridFunction
from .kernels import KernelSpec

RANK_THRESHOLD = 1e-10
# relative projection residual tolerated for "the model is closed under division"
DIVISION_TOLERANCE = 1e-3
COND_LIMIT = 1e12
BACKWARD_TOL = 1e-8
SHAPE_COSINE = 0.99
PERSIST_TOL = 1e-2


@dataclass(frozen=True, eq=False)
class Subspace:
    grid: Grid
    spec: KernelSpec
    anchors: np.ndarray
    basis: np.ndarray   # kernel columns K(x_i, a_j)
    gram: np.ndarray
    onb: np.ndarray     # orthonormal functions on the grid, one per column
    coef: np.ndarray    # onb = basis @ coef

    @property
    def dim(self) -> int:
        return self.onb.shape[1]

    def eval(self, z) -> np.ndarray:
        """Values of the orthonormal functions at arbitrary points, shape (len(z), dim)."""
        z = np.atleast_1d(np.asarray(z))
        return self.spec(z[:, None], self.anchors[None, :]) @ self.coef

    def deriv(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        h = self.grid.spacing * 1e-2
        zz, aa = np.broadcast_arrays(z[:, None], self.anchors[None, :])
        return self.spec.d1(zz, aa, h) @ self.coef

    def evaluation(self, z) -> np.ndarray:
        """Row vector e with f(z) = e @ c for f = onb @ c."""
        return self.eval(z)[0]

    def coeffs(self, values) -> np.ndarray:
        """Coefficients of the orthogonal projection of sampled values."""
        v = values.values if isinstance(values, GridFunction) else np.asarray(values)
        return self.onb.conj().T @ (self.grid.weights * v)

    def function(self, c) -> GridFunction:
        return self.grid.function(self.onb @ np.asarray(c))

    def model_kernel(self, x, y) -> np.ndarray:
        """Reproducing kernel of the model, sum_j onb_j(x) conj(onb_j(y))."""
        return self.eval(x) @ self.eval(y).conj().T

    def kernel_coeffs(self, p) -> np.ndarray:
        """Coefficients of the model kernel column at p."""
        return np.conj(self.evaluation(p))

    def orthonormality_defect(self) -> float:
        G = self.onb.conj().T @ (self.grid.weights[:, None] * self.onb)
        return float(np.max(np.abs(G - np.eye(self.dim))))

    def projection_residual(self, values) -> float:
        """||(I - P) g|| / ||g|| on the grid."""
        v = np.asarray(values)
        w = self.grid.weights
        r = v - self.onb @ self.coeffs(v)
        den = math.sqrt(float(np.sum(w * np.abs(v) ** 2)))
        if den == 0:
            return 0.0
        return math.sqrt(float(np.sum(w * np.abs(r) ** 2))) / den


def default_anchors(grid: Grid, count: int) -> np.ndarray:
    """Evenly spaced anchors across the grid window (lattice points for counting grids)."""
    if grid.measure_kind == "counting":
        return np.array(grid.nodes)
    a, b = grid.domain
    return np.linspace(a, b, int(count))


def build_subspace(spec: KernelSpec, grid: Grid, anchors: Sequence[float],
                   threshold: float = RANK_THRESHOLD) -> Subspace:
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim != 1 or anchors.size == 0:
        raise ArgumentError("need at least one anchor")
    if np.unique(anchors).size != anchors.size:
        raise ArgumentError("anchors must be distinct")
    spec.check_domain(anchors)
    a, b = grid.domain
    if np.any(anchors < a) or np.any(anchors > b):
        raise DomainError("anchors must lie in the grid window")
    x = grid.nodes
    basis = spec(x[:, None], anchors[None, :])
    sw = grid.sqrt_weights
    U, s, Vh = np.linalg.svd(sw[:, None] * basis, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise EmptySpaceError("kernel columns vanish on the grid")
    keep = s**2 > threshold * s[0] ** 2
    onb = U[:, keep] / sw[:, None]
    coef = Vh[keep].conj().T / s[keep]
    gram = basis.conj().T @ (grid.weights[:, None] * basis)
    return Subspace(grid, spec, anchors, basis, gram, onb, coef)


def model_subspace(spec: KernelSpec, window=(-20.0, 20.0), n: int = 300, n_anchors: Optional[int] = None,
                   rule: str = "gauss-legendre", threshold: float = RANK_THRESHOLD) -> Subspace:
    """Gauss grid on ``window`` with anchors every ~0.2 units (2n/3 by default)."""
    from .grid import build_grid
    grid = build_grid(window, n, rule)
    count = n_anchors or max(2, (2 * n) // 3)
    return build_subspace(spec, grid, default_anchors(grid, count), threshold)


@dataclass(frozen=True, eq=False)
class DivisionOperatorMatrix:
    kind: str
    center: float
    matrix: np.ndarray
    rho: Optional[float]
    residual: float
    subspace: Subspace = field(repr=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def _quotient_images(S: Subspace, c: float, subtract: np.ndarray, dsubtract: np.ndarray) -> np.ndarray:
    """(onb_j - subtract_j) / (x - c) on the grid; nodes at c use the derivative."""
    x = S.grid.nodes
    d = x - c
    at_c = d == 0
    G = (S.onb - subtract) / np.where(at_c, 1.0, d)[:, None]
    if np.any(at_c):
        G[at_c] = S.deriv(c)[0] - dsubtract
    return G


def _generator_residual(S: Subspace, c: float, kind: str) -> float:
    """Largest relative projection residual over the images of the kernel columns.

    The orthonormal directions include rapidly oscillating combinations that
    amplify truncation error, so closure is judged on the spanning columns.
    """
    x = S.grid.nodes
    h = S.grid.spacing * 1e-2
    d = x - c
    at_c = d == 0
    cc = np.full(S.anchors.shape, c)
    vals_c = S.spec(cc, S.anchors)
    dvals_c = S.spec.d1(cc, S.anchors, h)
    if kind == "strong":
        num, dnum = S.basis - vals_c, dvals_c
    else:
        kcol = S.spec(x, np.full(x.shape, c))
        rho = 1.0 / float(np.real(S.spec.diag(np.asarray(c))))
        dk = complex(S.spec.d1(np.asarray(c), np.asarray(c), h))
        num = S.basis - rho * np.outer(kcol, vals_c)
        dnum = dvals_c - rho * dk * vals_c
    G = num / np.where(at_c, 1.0, d)[:, None]
    if np.any(at_c):
        G[at_c] = dnum
    w = S.grid.weights
    R = G - S.onb @ (S.onb.conj().T @ (w[:, None] * G))
    res = np.sqrt(np.sum(w[:, None] * np.abs(R) ** 2, axis=0))
    den = np.sqrt(np.sum(w[:, None] * np.abs(G) ** 2, axis=0))
    # a column anchored at the center divides to rounding noise; skip it
    ok = den > 1e-8 * den.max() if den.size else den > 0
    return float(np.max(res[ok] / den[ok])) if np.any(ok) else 0.0


def strong_division_operator(S: Subspace, w: float, tolerance: float = DIVISION_TOLERANCE) -> DivisionOperatorMatrix:
    """Matrix of f -> (f - f(w)) / (x - w) compressed to the model."""
    w = float(w)
    _check_center(S, w)
    e = S.evaluation(w)
    G = _quotient_images(S, w, e[None, :], np.zeros_like(e))
    M = S.onb.conj().T @ (S.grid.weights[:, None] * G)
    res = _generator_residual(S, w, "strong")
    if res > tolerance:
        raise StrongDivisionViolated(
            f"projection residual {res:.3e} exceeds {tolerance:.1e}; the space is not closed under D_w")
    return DivisionOperatorMatrix("strong", w, M, None, res, S)


def weak_division_operator(S: Subspace, p: float, tolerance: float = DIVISION_TOLERANCE,
                           floor: float = 1e-8) -> DivisionOperatorMatrix:
    """Matrix of f -> (f - rho f(p) K_p) / (x - p), rho = 1/K(p, p), on the model."""
    p = float(p)
    _check_center(S, p)
    e = S.evaluation(p)
    kpp = float(np.real(np.vdot(e, e)))
    diag_scale = float(np.max(np.abs(S.spec.diag(S.grid.nodes))))
    if not kpp > floor * diag_scale:
        raise DegenerateAnchorError(f"K(p,p) = {kpp:.3e} below the anchor floor at p={p}")
    rho = 1.0 / kpp
    kp = S.onb @ np.conj(e)          # model kernel column at p
    dkp = S.deriv(p)[0] @ np.conj(e)  # its derivative at p
    G = _quotient_images(S, p, rho * np.outer(kp, e), rho * dkp * e)
    M = S.onb.conj().T @ (S.grid.weights[:, None] * G)
    res = _generator_residual(S, p, "weak")
    if res > tolerance:
        raise WeakDivisionViolated(
            f"projection residual {res:.3e} exceeds {tolerance:.1e}; the space is not closed under D_p")
    return DivisionOperatorMatrix("weak", p, M, rho, res, S)


def _check_center(S: Subspace, c: float):
    a, b = S.grid.domain
    if not a <= c <= b:
        raise DomainError(f"center {c} outside the model window {S.grid.domain}")
    S.spec.check_domain(np.asarray(c))


def division_operator(S: Subspace, center: float, kind: str, **kw) -> DivisionOperatorMatrix:
    if kind == "strong":
        return strong_division_operator(S, center, **kw)
    if kind == "weak":
        return weak_division_operator(S, center, **kw)
    raise ArgumentError(f"unknown operator kind {kind!r}")


def resolvent_apply(D: DivisionOperatorMatrix, lam: complex, g, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Solve (D - lam) f = g in model coordinates."""
    M = D.matrix - lam * np.eye(D.matrix.shape[0])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_limit:
        ev = np.linalg.eigvals(D.matrix)
        nearest = complex(ev[np.argmin(np.abs(ev - lam))])
        raise NearSpectrumError(f"lambda={lam} is within the numerical spectrum (cond {cond:.2e})",
                                nearest=nearest, cond=cond)
    return np.linalg.solve(M, np.asarray(g, dtype=complex))


def resolvent_matrix(D: DivisionOperatorMatrix, lam: complex, cond_limit: float = COND_LIMIT) -> np.ndarray:
    return resolvent_apply(D, lam, np.eye(D.matrix.shape[0], dtype=complex), cond_limit)


def resolvent_identity_error(S: Subspace, w: float, lam: complex) -> float:
    """Frobenius norm of (D_w - lam)^{-1} + lam^{-1} I + lam^{-2} D_{w + 1/lam}."""
    Dw = strong_division_operator(S, w, tolerance=np.inf)
    Ds = strong_division_operator(S, float(np.real(w + 1 / lam)), tolerance=np.inf)
    R = resolvent_matrix(Dw, lam)
    I = np.eye(S.dim)
    return float(np.linalg.norm(R + I / lam + Ds.matrix / lam**2))


def analytic_continue_strong(S: Subspace, f, w: float, z: complex, D: Optional[DivisionOperatorMatrix] = None) -> complex:
    """f(z) = -lam <(D_w - lam)^{-1} f, K_w> with lam = 1/(z - w)."""
    c = np.asarray(f, dtype=complex)
    e = S.evaluation(w)
    if z == w:
        return complex(e @ c)
    D = D or strong_division_operator(S, w, tolerance=np.inf)
    lam = 1.0 / (z - w)
    return complex(-lam * (e @ resolvent_apply(D, lam, c)))


def analytic_continue_ratio(S: Subspace, f, p: float, z: complex, D: Optional[DivisionOperatorMatrix] = None) -> complex:
    """(f / K_p)(z) = -lam rho <(D_p - lam)^{-1} f, K_p> with lam = 1/(z - p)."""
    c = np.asarray(f, dtype=complex)
    D = D or weak_division_operator(S, p, tolerance=np.inf)
    e = S.evaluation(p)
    if z == p:
        return complex(D.rho * (e @ c))
    lam = 1.0 / (z - p)
    return complex(-lam * D.rho * (e @ resolvent_apply(D, lam, c)))


def compressions(D: DivisionOperatorMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(Q, Q D Q) with Q the projection onto functions vanishing at the center.

    For the weak kind Q D Q is T_p; for the strong kind it is the self-adjoint
    operator A = P (x - w)^{-1} P.
    """
    e = D.subspace.evaluation(D.center)
    v = np.conj(e) / np.linalg.norm(e)
    Q = np.eye(e.size) - np.outer(v, v.conj())
    return Q, Q @ D.matrix @ Q


def numerical_rank(M: np.ndarray, rel: float = 1e-8, scale: Optional[float] = None) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    ref = scale if scale is not None else (s[0] if s.size else 0.0)
    return int(np.sum(s > rel * ref)) if ref > 0 else 0


def ess_window(grid: Grid, w: float) -> dict:
    """clos((supp mu - w)^{-1}) for a window [a, b] containing w: the real line minus a gap."""
    a, b = grid.domain
    lo = 1.0 / (a - w) if a != w else -math.inf
    hi = 1.0 / (b - w) if b != w else math.inf
    return {"type": "real-line-minus-gap", "gap": [lo, hi]}


def distance_to_ess_window(lam, window: dict) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    lo, hi = window["gap"]
    re = lam.real
    inside_gap = (re > lo) & (re < hi)
    gap_dist = np.where(inside_gap, np.minimum(re - lo, hi - re), 0.0)
    return np.hypot(np.abs(lam.imag), gap_dist)


@dataclass(frozen=True)
class SpectralReport:
    center: float
    kind: str
    eigenvalues: list
    pole_candidates: list
    N_set: list
    ess_window: dict
    residuals: list
    cosines: list = field(default_factory=list)
    pole_or_regular: list = field(default_factory=list)
    degenerate: bool = False
    centers: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def pairs(zs):
            return [[float(np.real(z)), float(np.imag(z))] for z in zs]

        return {
            "center": self.center,
            "kind": self.kind,
            "eigenvalues": pairs(self.eigenvalues),
            "pole_candidates": pairs(self.pole_candidates),
            "N": pairs(self.N_set),
            "ess_window": self.ess_window,
            "residuals": [float(r) for r in self.residuals],
            "cosines": [float(c) for c in self.cosines],
            "pole_or_regular": pairs(self.pole_or_regular),
            "degenerate_eigenvalues": self.degenerate,
            "centers": list(self.centers),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _eigen(D: DivisionOperatorMatrix):
    M = D.matrix
    try:
        ev, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    order = np.lexsort((ev.imag, ev.real))
    ev, V = ev[order], V[:, order]
    nM = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
    back = np.linalg.norm(M @ V - V * ev, axis=0) / (nM * np.linalg.norm(V, axis=0))
    return ev, V, back


def _shape_cosines(D: DivisionOperatorMatrix, ev, V) -> tuple[np.ndarray, np.ndarray]:
    """Candidate poles z = c + 1/lam and cosine similarity with the predicted eigenfunction."""
    S = D.subspace
    x = S.grid.nodes
    w = S.grid.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = D.center + 1.0 / ev
    F = S.onb @ V
    cos = np.zeros(ev.size)
    if D.kind == "weak":
        shape_num = S.onb @ np.conj(S.evaluation(D.center))
    else:
        shape_num = np.ones_like(x)
    for j, z in enumerate(zs):
        if not np.isfinite(z) or np.any(x == z):
            continue
        r = shape_num / (x - z)
        f = F[:, j]
        num = abs(np.sum(w * f * np.conj(r)))
        den = math.sqrt(np.sum(w * abs(f) ** 2) * np.sum(w * abs(r) ** 2))
        cos[j] = num / den if den > 0 else 0.0
    return zs, cos


def _default_centers(S: Subspace, w: float) -> list:
    a, b = S.grid.domain
    span = b - a
    out = []
    for shift in (-0.05 * span, 0.05 * span):
        c = min(max(w + shift, a + 0.25 * span), b - 0.25 * span)
        if abs(c - w) > 1e-3 * span:
            out.append(float(c))
    return out or [float(w + 0.1 * span)]


def pole_set(S: Subspace, w: float, kind: str = "strong", centers: Optional[Sequence[float]] = None,
             cosine: float = SHAPE_COSINE, persist: float = PERSIST_TOL, collar: float = 0.05,
             max_distance: Optional[float] = None, real_tol: float = 1e-2) -> SpectralReport:
    """Eigenvalues of the division operator mapped to candidate poles and filtered.

    A candidate enters N when its eigenfunction matches the predicted shape,
    it reappears within ``persist`` at every other center, and it lies in the
    certification region: real part inside the window minus a ``collar``
    fraction at each end and |z - w| at most ``max_distance`` (default the
    window half-width).  For the weak kind, real candidates at zeros of K_p
    inside the window are listed as pole-or-regular instead.
    """
    if S.dim == 0:
        raise EmptySpaceError("empty model")
    D = division_operator(S, w, kind, tolerance=np.inf)
    ev, V, back = _eigen(D)
    zs, cos = _shape_cosines(D, ev, V)
    a, b = S.grid.domain
    span = b - a
    max_distance = max_distance if max_distance is not None else 0.5 * span
    centers = list(centers) if centers is not None else _default_centers(S, w)

    others = []
    for c in centers:
        Dc = division_operator(S, c, kind, tolerance=np.inf)
        evc, Vc, _ = _eigen(Dc)
        zc, cc = _shape_cosines(Dc, evc, Vc)
        others.append(zc[cc > cosine])

    N, por = [], []
    for z, cs in zip(zs, cos):
        if not np.isfinite(z) or cs <= cosine:
            continue
        if not all(o.size and np.min(np.abs(o - z)) < persist for o in others):
            continue
        if not (a + collar * span <= z.real <= b - collar * span) or abs(z - w) > max_distance:
            continue
        on_line = abs(z.imag) < real_tol
        if kind == "strong" and on_line:
            continue  # real points of U are never poles for strong division
        if kind == "weak" and on_line and a < z.real < b:
            kz = abs(complex(S.model_kernel(np.array([z.real]), np.array([w]))[0, 0]))
            if kz < 1e-2 * abs(complex(S.model_kernel(np.array([w]), np.array([w]))[0, 0])):
                por.append(complex(z))
                continue
        N.append(complex(z))
    gaps = np.abs(np.diff(ev))
    degenerate = bool(np.any(gaps < 1e-8 * max(1.0, float(np.max(np.abs(ev))))))
    return SpectralReport(float(w), kind, [complex(v) for v in ev], [complex(z) for z in zs], N,
                          ess_window(S.grid, w), [float(r) for r in back], [float(c) for c in cos],
                          por, degenerate, [float(w)] + [float(c) for c in centers])


def ess_localization(S: Subspace, w: float, report: SpectralReport, eta: float = 0.05) -> float:
    """Fraction of unexplained eigenvalues farther than eta from the essential-spectrum window."""
    ev = np.asarray(report.eigenvalues, dtype=complex)
    explained = np.zeros(ev.size, dtype=bool)
    for z in report.N_set:
        with np.errstate(divide="ignore"):
            explained |= np.abs(ev - 1.0 / (z - w)) < 1e-6 * max(1.0, abs(1.0 / (z - w)))
    rest = ev[~explained]
    if rest.size == 0:
        return 0.0
    d = distance_to_ess_window(rest, report.ess_window)
    return float(np.mean(d > eta))


def division_closure_residual(S: Subspace, k: float, f, df: Optional[Callable] = None) -> float:
    """||(I - P) f/(x - k)|| / ||f/(x - k)|| for f vanishing at k.

    ``f`` is a coefficient vector in the model, a GridFunction, or a callable
    (evaluated on the grid; at a node equal to k its derivative is needed and
    taken from ``df`` or a central difference).
    """
    x = S.grid.nodes
    w = S.grid.weights
    k = float(k)
    if callable(f):
        vals = np.asarray(f(x), dtype=complex)
        fk = complex(np.asarray(f(np.array([k])))[0])

        def deriv():
            if df is not None:
                return complex(np.asarray(df(np.array([k])))[0])
            h = S.grid.spacing * 1e-2
            return complex((np.asarray(f(np.array([k + h])))[0] - np.asarray(f(np.array([k - h])))[0]) / (2 * h))
    elif isinstance(f, GridFunction):
        vals = np.asarray(f.values)
        at = np.flatnonzero(x == k)
        if at.size == 0:
            raise PreconditionError("a sampled function can only be divided at a grid node")
        fk = complex(vals[at[0]])

        def deriv():
            return complex(np.gradient(vals, x)[at[0]])
    else:
        c = np.asarray(f, dtype=complex)
        vals = S.onb @ c
        fk = complex(S.evaluation(k) @ c)

        def deriv():
            return complex(S.deriv(k)[0] @ c)

    norm = math.sqrt(float(np.sum(w * np.abs(vals) ** 2)))
    if norm == 0:
        return 0.0
    if abs(fk) >= 1e-8 * norm:
        raise PreconditionError(f"f(k) = {fk:.3e} does not vanish at k={k}")
    d = x - k
    at_k = d == 0
    g = vals / np.where(at_k, 1.0, d)
    if np.any(at_k):
        g[at_k] = deriv()
    return S.projection_residual(g)


@dataclass(frozen=True)
class BlaschkeSum:
    sum: float
    diverging: bool
    terms: int

    def to_dict(self) -> dict:
        return {"sum": self.sum, "diverging": self.diverging, "terms": self.terms}


BLASCHKE_CAP = 5.0


def blaschke_condition_sum(points, halfplane: str = "lower", cap: float = BLASCHKE_CAP,
                           max_terms: int = 10**6) -> BlaschkeSum:
    """-+ sum Im z / (1 + |z|^2) over the points, signed to be positive.

    ``points`` may be any iterable, including an infinite generator; summation
    stops once the partial sum exceeds ``cap`` (flagged as diverging) or after
    ``max_terms`` terms.
    """
    if halfplane not in ("upper", "lower"):
        raise ArgumentError("halfplane must be 'upper' or 'lower'")
    sign = 1.0 if halfplane == "upper" else -1.0
    terms = []
    running = 0.0
    diverging = False
    for z in points:
        z = complex(z)
        if z.imag == 0:
            raise ArgumentError(f"point {z} lies on the real line")
        if sign * z.imag < 0:
            raise ArgumentError(f"point {z} is not in the {halfplane} half-plane")
        terms.append(sign * z.imag / (1.0 + abs(z) ** 2))
        running += terms[-1]
        if running > cap and math.fsum(terms) > cap:
            diverging = True
            break
        if len(terms) >= max_terms:
            break
    return BlaschkeSum(math.fsum(terms), diverging, len(terms))
