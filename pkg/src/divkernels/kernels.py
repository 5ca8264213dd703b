"""Reproducing kernels: closed forms and the generic integrable constructor.

Every kernel evaluates elementwise with numpy broadcasting, handles the
diagonal by an analytic limit and exposes ``d1``, the derivative in the
first argument, which the integrable-form extraction needs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ArgumentError, DomainError, NumericError
from .grid import Grid

_EPS = np.finfo(float).eps
# |x - y| below this (relative) uses the midpoint diagonal value instead of
# the difference quotient; balances cancellation against Taylor error.
_NEAR_DIAG = _EPS ** (1.0 / 3.0)


def _pts(x):
    x = np.asarray(x)
    return x if np.iscomplexobj(x) else x.astype(float)


def richardson_d1(f: Callable, x, y, h) -> tuple[np.ndarray, np.ndarray]:
    """Central difference in the first argument with one Richardson step.

    Returns (estimate, |estimate - plain central difference|).
    """
    x = np.asarray(x, dtype=float)
    d_h = (f(x + h, y) - f(x - h, y)) / (2 * h)
    d_h2 = (f(x + h / 2, y) - f(x - h / 2, y)) / h
    est = (4 * d_h2 - d_h) / 3
    return est, np.abs(est - d_h2)


class KernelSpec:
    """Base class. Subclasses implement ``_offdiag`` and ``diag``."""

    domain: tuple = (-math.inf, math.inf)
    real: bool = True
    fd_step: float = 1e-3

    def __call__(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(_pts(x), _pts(y))
        self.check_domain(x)
        self.check_domain(y)
        return self._eval(x, y)

    def _eval(self, x, y):
        return self._offdiag(x, y)

    def diag(self, x) -> np.ndarray:
        x = _pts(x)
        return self._eval(x, x)

    def d1(self, x, y, h: Optional[float] = None) -> np.ndarray:
        """d/dx K(x, y); finite differences unless a subclass knows better."""
        est, _ = richardson_d1(self, x, y, h or self.fd_step)
        return est

    def check_domain(self, x):
        lo, hi = self.domain
        if math.isinf(lo) and math.isinf(hi):
            return
        xr = np.real(x)
        if np.any(xr <= lo) or np.any(xr >= hi):
            raise DomainError(f"point outside kernel domain {self.domain}")

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Sine(KernelSpec):
    """sin(a(x-y)) / (pi (x-y))."""

    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ArgumentError("bandwidth must be positive")

    def _eval(self, x, y):
        d = x - y
        return (self.a / math.pi) * np.sinc(self.a * d / math.pi) + 0j

    def diag(self, x):
        return np.full(np.shape(x), self.a / math.pi, dtype=complex)

    def d1(self, x, y, h=None):
        x, y = np.broadcast_arrays(_pts(x), _pts(y))
        return _sine_d1(x - y, self.a) + 0j

    def to_config(self):
        return {"type": "sine", "a": self.a}


def _sine_d1(d, a):
    ad = a * d
    small = np.abs(ad) < 1e-3
    safe = np.where(small, 1.0, d)
    full = (ad * np.cos(ad) - np.sin(ad)) / (math.pi * safe**2)
    series = -(a**3) * d / (3 * math.pi) + (a**5) * d**3 / (30 * math.pi)
    return np.where(small, series, full)


def rational_gram(lambdas: Sequence[complex]) -> np.ndarray:
    """H[k, m] = <v_m, v_k> for v_j(x) = exp(+-i a x)/(x - lambda_j).

    Closed form by residues; the exponential factor is the same within a
    half-plane and the two half-planes are orthogonal.
    """
    lam = np.asarray(lambdas, dtype=complex)
    n = lam.size
    H = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for m in range(n):
            lk, lm = lam[k], lam[m]
            if lk.imag < 0 and lm.imag < 0:
                H[k, m] = 2j * math.pi / (np.conj(lk) - lm)
            elif lk.imag > 0 and lm.imag > 0:
                H[k, m] = 2j * math.pi / (lm - np.conj(lk))
    return H


@dataclass(frozen=True)
class PerturbedSine(KernelSpec):
    """Sine kernel plus the projection onto the rational directions.

    For one point lambda in the lower half-plane this is
    sin(x-y)/(pi(x-y)) + C e^{ia(x-y)} / ((y - conj(lambda))(x - lambda))
    with C = |Im lambda| / pi.  Upper half-plane points use e^{-ia(x-y)}.
    """

    a: float = 1.0
    lambdas: tuple = (-1j,)
    coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ArgumentError("bandwidth must be positive")
        lam = tuple(complex(l) for l in self.lambdas)
        if any(l.imag == 0 for l in lam):
            raise ArgumentError("perturbation points must lie off the real axis")
        object.__setattr__(self, "lambdas", lam)
        H = rational_gram(lam)
        for j, l in enumerate(lam):
            # normalisation oracle: int dx / |x - l|^2 = pi / |Im l|
            val, _ = integrate.quad(lambda t: 1.0 / ((t - l.real) ** 2 + l.imag**2), -np.inf, np.inf,
                                    epsabs=0, epsrel=1e-12)
            if abs(val - H[j, j].real) > 1e-8 * val:
                raise NumericError(f"normalisation mismatch for lambda={l}: {val} vs {H[j, j].real}")
        object.__setattr__(self, "coef", np.linalg.inv(H) if lam else np.zeros((0, 0)))

    @property
    def real(self):
        return not self.lambdas

    @property
    def normalization(self) -> float:
        """C for a single perturbation point."""
        return float(self.coef[0, 0].real)

    def _v(self, x):
        lam = np.asarray(self.lambdas)
        sgn = np.where(lam.imag < 0, 1.0, -1.0)
        x = np.asarray(x)[..., None]
        return np.exp(1j * self.a * sgn * x) / (x - lam), sgn

    def _eval(self, x, y):
        base = (self.a / math.pi) * np.sinc(self.a * (x - y) / math.pi) + 0j
        if not self.lambdas:
            return base
        vx, _ = self._v(x)
        vy, _ = self._v(np.conj(y) if np.iscomplexobj(y) else y)
        return base + np.einsum("...j,jk,...k->...", vx, self.coef, np.conj(vy))

    def d1(self, x, y, h=None):
        x, y = np.broadcast_arrays(_pts(x), _pts(y))
        out = _sine_d1(x - y, self.a) + 0j
        if not self.lambdas:
            return out
        vx, sgn = self._v(x)
        dvx = vx * (1j * self.a * sgn - 1.0 / (np.asarray(x)[..., None] - np.asarray(self.lambdas)))
        vy, _ = self._v(y)
        return out + np.einsum("...j,jk,...k->...", dvx, self.coef, np.conj(vy))

    def to_config(self):
        return {"type": "perturbed-sine", "a": self.a,
                "lambdas": [[l.real, l.imag] for l in self.lambdas]}


@dataclass(frozen=True)
class FromAB(KernelSpec):
    """(A(x) conj B(y) - B(x) conj A(y)) / (x - y), diagonal A'B - B'A."""

    A: Callable
    B: Callable
    dA: Callable
    dB: Callable
    domain: tuple = (-math.inf, math.inf)
    label: str = "from-ab"
    fd_step: float = 1e-3

    def _eval(self, x, y):
        d = x - y
        scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        near = np.abs(d) < _NEAR_DIAG * scale
        safe_d = np.where(near, 1.0, d)
        Ax, Bx = self.A(x), self.B(x)
        Ay, By = self.A(y), self.B(y)
        off = (Ax * np.conj(By) - Bx * np.conj(Ay)) / safe_d
        if np.any(near):
            m = np.where(near, 0.5 * (x + y), x)
            return np.where(near, self._diag(m), off) + 0j
        return off + 0j

    def _diag(self, x):
        return self.dA(x) * np.conj(self.B(x)) - self.dB(x) * np.conj(self.A(x))

    def diag(self, x):
        x = _pts(x)
        self.check_domain(x)
        return self._diag(x) + 0j

    def d1(self, x, y, h=None):
        x, y = np.broadcast_arrays(_pts(x), _pts(y))
        d = x - y
        scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        step = h or self.fd_step
        near = np.abs(d) < 10 * step * scale
        safe_d = np.where(near, 1.0, d)
        K = self._eval(x, y)
        off = (self.dA(x) * np.conj(self.B(y)) - self.dB(x) * np.conj(self.A(y)) - K) / safe_d
        if np.any(near):
            fd, _ = richardson_d1(self, x, y, step)
            return np.where(near, fd, off)
        return off

    def to_config(self):
        return {"type": self.label}


@dataclass(frozen=True)
class RankOne(KernelSpec):
    """u(x) conj(u(y))."""

    u: Callable
    du: Optional[Callable] = None
    label: str = "rank-one"

    def _eval(self, x, y):
        return self.u(x) * np.conj(self.u(y)) + 0j

    def d1(self, x, y, h=None):
        if self.du is None:
            return super().d1(x, y, h)
        x, y = np.broadcast_arrays(_pts(x), _pts(y))
        return self.du(x) * np.conj(self.u(y)) + 0j

    def to_config(self):
        return {"type": self.label}


def gaussian_rank_one(center: float = 0.0, width: float = 1.0) -> RankOne:
    """Rank-one kernel of an L2(dx)-normalised Gaussian."""
    c = (2 / (math.pi * width**2)) ** 0.25

    def u(x):
        return c * np.exp(-((np.asarray(x) - center) / width) ** 2)

    def du(x):
        x = np.asarray(x)
        return -2 * (x - center) / width**2 * u(x)

    return RankOne(u, du, label="gaussian")


def sine_column_rank_one(q: float, a: float = 1.0) -> RankOne:
    """Rank-one kernel spanned by the sine-kernel column K_q."""
    s = Sine(a)
    norm = math.sqrt(a / math.pi)

    def u(x):
        return s(x, q) / norm

    def du(x):
        return s.d1(x, q) / norm

    return RankOne(u, du, label="sine-column")


def airy_kernel() -> FromAB:
    """Airy kernel with A = Ai, B = Ai' (literature-supplied pair)."""
    def A(x):
        return special.airy(x)[0]

    def B(x):
        return special.airy(x)[1]

    def dB(x):
        return x * special.airy(x)[0]

    return FromAB(A, B, B, dB, label="airy")


def bessel_kernel(s: float) -> FromAB:
    """Bessel kernel of order s > -1 on (0, inf) (literature-supplied pair).

    A(x) = J_s(sqrt x), B(x) = sqrt(x) J_s'(sqrt x) / 2.
    """
    if not s > -1:
        raise ArgumentError("Bessel order must exceed -1")

    def A(x):
        return special.jv(s, np.sqrt(x))

    def B(x):
        r = np.sqrt(x)
        return 0.5 * r * special.jvp(s, r)

    def dA(x):
        r = np.sqrt(x)
        return special.jvp(s, r) / (2 * r)

    def dB(x):
        return -0.25 * (1 - s**2 / np.asarray(x)) * special.jv(s, np.sqrt(x))

    return FromAB(A, B, dA, dB, domain=(0.0, math.inf), label=f"bessel-{s:g}")


def discrete_sine_kernel(theta: float) -> FromAB:
    """sin(theta(x-y))/(pi(x-y)) written through A = sin(theta x)/pi, B = cos(theta x).

    On the integer lattice this is the discrete sine kernel.
    """
    def A(x):
        return np.sin(theta * np.asarray(x)) / math.pi

    def B(x):
        return np.cos(theta * np.asarray(x))

    def dA(x):
        return theta * np.cos(theta * np.asarray(x)) / math.pi

    def dB(x):
        return -theta * np.sin(theta * np.asarray(x))

    return FromAB(A, B, dA, dB, label=f"discrete-sine-{theta:g}")


def eval_kernel(spec: KernelSpec, x, y):
    """K(x, y); scalars in, Python complex out."""
    out = spec(x, y)
    return complex(out) if np.ndim(out) == 0 else out


def kernel_matrix(spec: KernelSpec, grid: Grid) -> np.ndarray:
    """Symmetric Nystrom matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j)."""
    x = grid.nodes
    sw = grid.sqrt_weights
    K = spec(x[:, None], x[None, :])
    return sw[:, None] * K * sw[None, :]


def matrix_to_csv(M: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    cplx = np.iscomplexobj(M) and np.any(np.imag(M) != 0)
    for row in M:
        if cplx:
            w.writerow([f"{complex(v).real!r}{complex(v).imag:+}j" for v in row])
        else:
            w.writerow([repr(float(np.real(v))) for v in row])
    return buf.getvalue()
