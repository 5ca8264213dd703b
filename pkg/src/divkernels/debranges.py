"""Paley-Wiener spaces enlarged by finitely many rational directions.

For a finite set Lambda off the real line, H = PW_a + span{(t - lambda)^{-1}}.
Modulo PW_a, (t - lambda)^{-1} is the function e^{iat}/(t - lambda) for
lambda in the lower half-plane (e^{-iat}/(t - lambda) in the upper one),
whose Fourier transform lives outside [-a, a].  The kernel of H is therefore
the sine kernel plus the projection kernel onto those rational directions.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, CapacityError, IllConditionedError, PoleError
from .kernels import KernelSpec, Sine, rational_gram

MAX_POINTS = 16
MIN_SEPARATION = 1e-6


def _halfplane_points(points, halfplane: str) -> tuple:
    pts = tuple(complex(z) for z in points)
    for z in pts:
        if z.imag == 0:
            raise ArgumentError(f"{z} lies on the real line")
        if (halfplane == "upper") != (z.imag > 0):
            raise ArgumentError(f"{z} is not in the {halfplane} half-plane")
    return pts


@dataclass(frozen=True)
class BlaschkeSpec:
    lambdas_plus: tuple = ()
    lambdas_minus: tuple = ()
    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ArgumentError("bandwidth must be positive")
        plus = _halfplane_points(self.lambdas_plus, "upper")
        minus = _halfplane_points(self.lambdas_minus, "lower")
        object.__setattr__(self, "lambdas_plus", plus)
        object.__setattr__(self, "lambdas_minus", minus)
        allpts = plus + minus
        if len(allpts) > MAX_POINTS:
            raise CapacityError(f"{len(allpts)} points exceed the cap of {MAX_POINTS}")
        for i, z in enumerate(allpts):
            for u in allpts[i + 1:]:
                if abs(z - u) < MIN_SEPARATION:
                    raise IllConditionedError(f"points {z} and {u} are closer than {MIN_SEPARATION}")

    @property
    def points(self) -> tuple:
        return self.lambdas_plus + self.lambdas_minus

    @classmethod
    def from_points(cls, points: Sequence[complex], a: float = 1.0) -> "BlaschkeSpec":
        pts = [complex(z) for z in points]
        if any(z.imag == 0 for z in pts):
            raise ArgumentError("points must lie off the real line")
        return cls(tuple(z for z in pts if z.imag > 0), tuple(z for z in pts if z.imag < 0), a)

    def to_config(self) -> dict:
        return {"a": self.a,
                "lambdas_plus": [[z.real, z.imag] for z in self.lambdas_plus],
                "lambdas_minus": [[z.real, z.imag] for z in self.lambdas_minus]}


def blaschke_product(points: Sequence[complex], halfplane: str, z: complex) -> complex:
    """prod (z - lambda_k) / (z - conj lambda_k) over a finite set in one half-plane."""
    if halfplane not in ("upper", "lower"):
        raise ArgumentError("halfplane must be 'upper' or 'lower'")
    pts = _halfplane_points(points, halfplane)
    z = complex(z)
    out = 1.0 + 0j
    for lam in pts:
        den = z - lam.conjugate()
        if den == 0:
            raise PoleError(f"z = {z} is the reflected pole conj({lam})")
        out *= (z - lam) / den
    return out


@dataclass(frozen=True)
class ModelSpaceKernel(KernelSpec):
    """Reproducing kernel of PW_a + span{(t - lambda)^{-1}}.

    The rational directions are orthonormalised once, by Gram-Schmidt in order
    of decreasing |Im lambda| with closed-form inner products.
    """

    spec: BlaschkeSpec = field(default_factory=BlaschkeSpec)
    order: tuple = field(init=False, repr=False, compare=False)
    factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = self.spec.points
        order = tuple(sorted(pts, key=lambda z: (-abs(z.imag), z.real, z.imag)))
        object.__setattr__(self, "order", order)
        if not order:
            object.__setattr__(self, "factor", np.zeros((0, 0)))
            return
        # H[k, m] = <v_m, v_k> = L L^H; e = v @ inv(L)^H is upper triangular in v,
        # i.e. Gram-Schmidt in the sorted order.
        H = rational_gram(order)
        L = np.linalg.cholesky(H)
        object.__setattr__(self, "factor", np.linalg.inv(L).conj().T)

    @property
    def real(self):
        return not self.order

    def _v(self, x):
        lam = np.asarray(self.order)
        sgn = np.where(lam.imag < 0, 1.0, -1.0)
        x = np.asarray(x)[..., None]
        return np.exp(1j * self.spec.a * sgn * x) / (x - lam), sgn

    def onb(self, x) -> np.ndarray:
        """Orthonormal rational functions at x, shape x.shape + (|Lambda|,)."""
        v, _ = self._v(x)
        return v @ self.factor

    def _eval(self, x, y):
        base = Sine(self.spec.a)._eval(x, y)
        if not self.order:
            return base
        ex = self.onb(x)
        ey = self.onb(np.conj(y) if np.iscomplexobj(y) else y)
        return base + np.sum(ex * np.conj(ey), axis=-1)

    def d1(self, x, y, h=None):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = Sine(self.spec.a).d1(x, y)
        if not self.order:
            return out
        v, sgn = self._v(x)
        dv = v * (1j * self.spec.a * sgn - 1.0 / (x[..., None] - np.asarray(self.order)))
        return out + np.sum((dv @ self.factor) * np.conj(self.onb(y)), axis=-1)

    def to_config(self):
        return {"type": "model-space", **self.spec.to_config()}


@functools.lru_cache(maxsize=64)
def _kernel_for(spec: BlaschkeSpec) -> ModelSpaceKernel:
    return ModelSpaceKernel(spec)


def model_space_kernel(spec: BlaschkeSpec, x, y):
    """K(x, y) for the space built from ``spec``; scalars give a Python complex."""
    x = np.asarray(x)
    y = np.asarray(y)
    if np.iscomplexobj(x) and np.any(np.imag(x) != 0) or np.iscomplexobj(y) and np.any(np.imag(y) != 0):
        raise ArgumentError("model_space_kernel takes real points")
    out = _kernel_for(spec)(x, y)
    return complex(out) if np.ndim(out) == 0 else out


def rational_direction(lam: complex, a: float = 1.0):
    """t -> e^{+-iat}/(t - lambda), the component of (t - lambda)^{-1} orthogonal to PW_a."""
    lam = complex(lam)
    sgn = 1.0 if lam.imag < 0 else -1.0
    return lambda t: np.exp(1j * a * sgn * np.asarray(t)) / (np.asarray(t) - lam)
