"""Recovering the integrable form (A, B) of a kernel from its values.

At an anchor p with K(p, p) != 0,

    A_p(x) = (x - p) K(x, p)
    B_p(x) = K(x, p) - (x - p) conj(phi_x(p)) / K(p, p)

where (t - p) phi_x(t) = K(t, x) K(p, p) - K(p, x) K(t, p).  Then
K(x, y) = (A(x) conj B(y) - conj A(y) B(x)) / (K(p, p) (x - y)).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateAnchorError, DiagonalError, DomainError, SequenceDegenerateError
from .grid import Grid, GridFunction, inner_product
from .kernels import KernelSpec

ANCHOR_FLOOR = 1e-8
N_PROBES = 32


def default_step(grid: Grid) -> float:
    return grid.spacing * 1e-2


def anchor_value(spec: KernelSpec, grid: Grid, p: float, floor: float = ANCHOR_FLOOR) -> float:
    """K(p, p), checked against ``floor`` times the largest diagonal value on the grid."""
    kpp = complex(spec.diag(np.asarray(float(p))))
    scale = float(np.max(np.abs(spec.diag(grid.nodes))))
    if not abs(kpp) > floor * max(scale, np.finfo(float).tiny):
        raise DegenerateAnchorError(f"|K(p,p)| = {abs(kpp):.3e} at p={p} is below the anchor floor")
    return kpp.real


def phi_at_anchor(spec: KernelSpec, x, p: float, kpp: float, h: float) -> np.ndarray:
    """x -> phi_x(p) = K(p,p) dK(t,x)/dt - K(p,x) dK(t,p)/dt, both at t = p."""
    x = np.asarray(x, dtype=float)
    pp = np.full_like(x, p)
    dtx = spec.d1(pp, x, h)
    dtp = complex(spec.d1(np.asarray(p), np.asarray(p), h))
    return kpp * dtx - spec(pp, x) * dtp


@dataclass(frozen=True, eq=False)
class IntegrablePair:
    p: float
    A: GridFunction
    B: GridFunction
    kpp: float
    phi_p_values: GridFunction
    spec: Optional[KernelSpec] = field(default=None, repr=False)
    step: float = 1e-3

    @property
    def grid(self) -> Grid:
        return self.A.grid

    def A_at(self, x):
        """A_p off the grid, straight from the kernel."""
        x = np.asarray(x, dtype=float)
        return (x - self.p) * self.spec(x, np.full_like(x, self.p))

    def B_at(self, x):
        x = np.asarray(x, dtype=float)
        phi = phi_at_anchor(self.spec, x, self.p, self.kpp, self.step)
        return self.spec(x, np.full_like(x, self.p)) - (x - self.p) * np.conj(phi) / self.kpp

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["node", "A_real", "A_imag", "B_real", "B_imag"])
        for x, a, b in zip(self.grid.nodes, self.A.values, self.B.values):
            w.writerow([repr(float(x)), repr(float(a.real)), repr(float(a.imag)),
                        repr(float(b.real)), repr(float(b.imag))])
        return buf.getvalue()

    def to_dict(self, residuals: Optional[dict] = None) -> dict:
        d = {"p": self.p, "kpp": self.kpp, "n": self.grid.n, "domain": list(self.grid.domain)}
        if residuals is not None:
            d["residuals"] = residuals
        return d

    def to_json(self, residuals: Optional[dict] = None) -> str:
        return json.dumps(self.to_dict(residuals), sort_keys=True)


def extract_AB(spec: KernelSpec, grid: Grid, p: float, floor: float = ANCHOR_FLOOR,
               step: Optional[float] = None) -> IntegrablePair:
    p = float(p)
    spec.check_domain(np.asarray(p))
    lo, hi = grid.domain
    if not lo <= p <= hi:
        raise DomainError(f"anchor {p} outside grid domain {grid.domain}")
    h = step or default_step(grid)
    kpp = anchor_value(spec, grid, p, floor)
    x = grid.nodes
    kxp = spec(x, np.full_like(x, p))
    phi = phi_at_anchor(spec, x, p, kpp, h)
    A = (x - p) * kxp
    B = kxp - (x - p) * np.conj(phi) / kpp
    # at x = p these are exactly 0 and K(p, p); enforce against rounding in K(p, p)
    at_p = x == p
    A[at_p] = 0.0
    B[at_p] = kpp
    return IntegrablePair(p, grid.function(A), grid.function(B), kpp, grid.function(phi), spec, h)


def reconstruct_kernel(pair: IntegrablePair, x, y):
    """(A(x) conj B(y) - conj A(y) B(x)) / (kpp (x - y)) for x != y.

    Grid nodes use the stored samples; other points are evaluated from the kernel.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x == y):
        raise DiagonalError("the integrable representation is stated for x != y")
    Ax, Bx = pair.A_at(x), pair.B_at(x)
    Ay, By = pair.A_at(y), pair.B_at(y)
    out = (Ax * np.conj(By) - np.conj(Ay) * Bx) / (pair.kpp * (x - y))
    return complex(out) if out.ndim == 0 else out


def reconstruction_matrix(pair: IntegrablePair) -> np.ndarray:
    """Reconstructed K on all grid pairs; the diagonal is left as NaN."""
    A, B = pair.A.values, pair.B.values
    x = pair.grid.nodes
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.nan)
    with np.errstate(invalid="ignore"):
        return (A[:, None] * np.conj(B)[None, :] - np.conj(A)[None, :] * B[:, None]) / (pair.kpp * d)


def residual_report(pair: IntegrablePair, grid: Optional[Grid] = None) -> dict:
    """Max and mean |reconstructed - K| over off-diagonal grid pairs."""
    if grid is not None and grid is not pair.grid:
        pair = extract_AB(pair.spec, grid, pair.p, step=pair.step)
    x = pair.grid.nodes
    R = reconstruction_matrix(pair)
    K = pair.spec(x[:, None], x[None, :])
    err = np.abs(R - K)
    off = ~np.eye(x.size, dtype=bool)
    return {"max": float(np.max(err[off])), "mean": float(np.mean(err[off]))}


def phi_function(spec: KernelSpec, grid: Grid, x: float, p: float, kpp: float, h: float) -> GridFunction:
    """t -> phi_x(t) sampled on the grid, with the t = p limit filled in."""
    t = grid.nodes
    xs = np.full_like(t, x)
    num = spec(t, xs) * kpp - complex(spec(np.asarray(p), np.asarray(x))) * spec(t, np.full_like(t, p))
    d = t - p
    at_p = d == 0
    vals = num / np.where(at_p, 1.0, d)
    if np.any(at_p):
        vals[at_p] = phi_at_anchor(spec, np.asarray([x]), p, kpp, h)[0]
    return grid.function(vals)


def self_adjoint_report(spec: KernelSpec, grid: Grid, p: float, xs: Sequence[float], ys: Sequence[float],
                        step: Optional[float] = None) -> dict:
    """Symmetry of multiplication by (t - p) on the phi functions.

    ``pairing`` is max |<(t-p)phi_x, phi_y> - <phi_x, (t-p)phi_y>|.  ``pointwise``
    is the defect of the resulting identity
    K(p,p) conj(phi_y(x)) - K(p,x) conj(phi_y(p)) = K(p,p) phi_x(y) - conj(K(p,y)) phi_x(p),
    evaluated from the kernel directly.
    """
    h = step or default_step(grid)
    kpp = anchor_value(spec, grid, p)
    t = grid.nodes
    pairing, pointwise = 0.0, 0.0
    for x, y in zip(xs, ys):
        fx = phi_function(spec, grid, x, p, kpp, h)
        fy = phi_function(spec, grid, y, p, kpp, h)
        lhs = inner_product(grid.function((t - p) * fx.values), fy)
        rhs = inner_product(fx, grid.function((t - p) * fy.values))
        pairing = max(pairing, abs(lhs - rhs))

        def phi(a, b):  # phi_a(b)
            if b == p:
                return phi_at_anchor(spec, np.asarray([a]), p, kpp, h)[0]
            return (complex(spec(b, a)) * kpp - complex(spec(p, a)) * complex(spec(b, p))) / (b - p)

        left = kpp * np.conj(phi(y, x)) - complex(spec(p, x)) * np.conj(phi(y, p))
        right = kpp * phi(x, y) - np.conj(complex(spec(p, y))) * phi(x, p)
        pointwise = max(pointwise, abs(left - right))
    return {"pairing": float(pairing), "pointwise": float(pointwise)}


@dataclass(frozen=True)
class StabilityReport:
    y_star: float
    sup_cauchy: list
    x_cauchy: list
    A_star: list

    def to_dict(self) -> dict:
        return {"y_star": self.y_star, "sup_cauchy": self.sup_cauchy,
                "x_cauchy": self.x_cauchy, "A_at_y_star": self.A_star}


def x_norm(grid: Grid, values) -> float:
    """L2 norm for the weighted measure (1 + x^2)^{-1} dmu."""
    v = np.asarray(values)
    return math.sqrt(float(np.sum(np.abs(v) ** 2 * grid.weights / (1 + grid.nodes**2))))


def stable_extract_sequence(specs: Sequence[KernelSpec], grid: Grid, p: float,
                            n_probes: int = N_PROBES, floor: float = 1e-8):
    """Extract (A_n, B_n) along a kernel sequence with a common normalisation at y*.

    B_n = B~_n - (B~_n(y*) / A_n(y*)) A_n, which equals
    K^n(p,p) K^n(x, y*) (y* - x) / A_n(y*).
    Returns (list of (A_n, B_n) GridFunctions, StabilityReport).
    """
    if not specs:
        raise SequenceDegenerateError("empty kernel sequence")
    pairs = [extract_AB(s, grid, p) for s in specs]
    idx = np.unique(np.linspace(0, grid.n - 1, n_probes).round().astype(int))
    idx = idx[grid.nodes[idx] != p]
    # the limit of A_n is unknown, so score each probe by its worst case along the sequence
    tail = np.min(np.abs(np.array([pr.A.values[idx] for pr in pairs])), axis=0)
    scale = max(float(np.max(np.abs(pairs[-1].A.values))), np.finfo(float).tiny)
    k = int(np.argmax(tail))
    if not tail[k] > floor * scale:
        raise SequenceDegenerateError("A_n vanishes at every probe point")
    j_star = idx[k]
    out = []
    for pr in pairs:
        a = pr.A.values
        b = pr.B.values - (pr.B.values[j_star] / a[j_star]) * a
        out.append((grid.function(a), grid.function(b)))
    sup_c, x_c = [], []
    for (a0, b0), (a1, b1) in zip(out, out[1:]):
        da, db = a1.values - a0.values, b1.values - b0.values
        sup_c.append(float(max(np.max(np.abs(da)), np.max(np.abs(db)))))
        x_c.append(math.hypot(x_norm(grid, da), x_norm(grid, db)))
    report = StabilityReport(float(grid.nodes[j_star]), sup_c, x_c,
                             [[complex(a.values[j_star]).real, complex(a.values[j_star]).imag] for a, _ in out])
    return out, report
