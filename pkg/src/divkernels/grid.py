"""Quadrature grids for (R, mu) and the induced L2 pairing.

Two measure kinds are supported: Lebesgue measure with an optional density,
discretised by a fixed quadrature rule on a finite window, and counting
measure on integer lattice points.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, DomainError

RULES = ("gauss-legendre", "uniform-trapezoid", "lattice")


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple
    rule: str
    measure_kind: str = "lebesgue-density"
    density: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ArgumentError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ArgumentError("grid nodes must be strictly increasing")
        if not np.all(weights > 0):
            raise ArgumentError("grid weights must be positive")
        if self.measure_kind == "counting":
            if not np.all(weights == 1.0) or not np.all(nodes == np.round(nodes)):
                raise ArgumentError("counting measure needs unit weights on lattice points")
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    def __len__(self):
        return self.nodes.size

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        """Smallest gap between neighbouring nodes."""
        return float(np.min(np.diff(self.nodes))) if self.n > 1 else 1.0

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def contains(self, x, collar: float = 0.0) -> np.ndarray:
        a, b = self.domain
        x = np.asarray(x)
        return (x >= a + collar) & (x <= b - collar)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, f: Callable) -> "GridFunction":
        return GridFunction(self, f(self.nodes))

    def integrate(self, values) -> complex:
        return np.sum(np.asarray(values) * self.weights)

    def restrict(self, window) -> "Grid":
        """Grid of the same rule and size over a sub-window.

        For counting measure the lattice points inside the window are kept.
        """
        lo, hi = float(window[0]), float(window[1])
        a, b = self.domain
        if lo < a - 1e-12 or hi > b + 1e-12:
            raise DomainError(f"window {window} is not inside grid domain {self.domain}")
        if (lo, hi) == self.domain:
            return self
        if self.measure_kind == "counting":
            nodes = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
            return Grid(nodes, np.ones_like(nodes), (lo, hi), "lattice", "counting")
        return build_grid((lo, hi), self.n, self.rule, density=self.density)

    def to_json(self) -> str:
        return json.dumps(
            {
                "domain": list(self.domain),
                "rule": self.rule,
                "measure_kind": self.measure_kind,
                "nodes": self.nodes.tolist(),
                "weights": self.weights.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Grid":
        d = json.loads(text)
        return cls(
            np.array(d["nodes"]),
            np.array(d["weights"]),
            tuple(d["domain"]),
            d["rule"],
            d.get("measure_kind", "lebesgue-density"),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["node", "weight"])
        for x, wt in zip(self.nodes, self.weights):
            w.writerow([repr(float(x)), repr(float(wt))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of an element of L2(R, mu) on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.nodes.shape:
            raise ArgumentError(
                f"{v.shape[0] if v.ndim else 0} values for a grid of {self.grid.n} nodes"
            )
        object.__setattr__(self, "values", _frozen(v))

    def norm(self) -> float:
        return math.sqrt(inner_product(self, self).real)

    def __add__(self, other):
        _check_same(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__


def _check_same(f: GridFunction, g: GridFunction):
    if f.grid is not g.grid:
        raise ArgumentError("grid functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """sum_i f(x_i) conj(g(x_i)) w_i; conjugate-linear in ``g``."""
    _check_same(f, g)
    return complex(np.sum(f.values * np.conj(g.values) * f.grid.weights))


def build_grid(domain, n: int, rule: str = "gauss-legendre", density: Optional[Callable] = None) -> Grid:
    """Deterministic quadrature grid on ``domain = (a, b)``.

    ``density`` multiplies the weights (mu = density * dx); it is ignored by
    the lattice rule, which always carries counting measure.
    """
    if rule not in RULES:
        raise ArgumentError(f"unknown rule {rule!r}; expected one of {RULES}")
    n = int(n)
    if n < 2:
        raise ArgumentError("a grid needs n >= 2 nodes")
    a, b = float(domain[0]), float(domain[1])
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"quadrature rules need a finite interval, got {domain}")
    if not b > a:
        raise DomainError(f"empty interval {domain}")

    if rule == "lattice":
        nodes = np.arange(math.ceil(a), math.floor(b) + 1, dtype=float)
        if nodes.size != n:
            raise ArgumentError(f"[{a}, {b}] holds {nodes.size} lattice points, not n={n}")
        return Grid(nodes, np.ones(n), (a, b), "lattice", "counting")

    if rule == "gauss-legendre":
        t, wt = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        nodes = a + half * (t + 1.0)
        weights = half * wt
    else:
        nodes = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = 0.5 * h
    if density is not None:
        weights = weights * np.asarray(density(nodes), dtype=float)
    return Grid(nodes, weights, (a, b), rule, "lebesgue-density", density)
