"""Determinantal point processes of projection kernels on a quadrature grid.

Sampling is the spectral algorithm: eigen-decompose the symmetric Nystrom
matrix, keep each eigenvector with probability equal to its eigenvalue and
run sequential projection sampling over the grid nodes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import ArgumentError, ConsistencyError, DomainError, NotAProjectionError, RefinementWarning
from .grid import Grid, build_grid
from .integrable import extract_AB
from .kernels import FromAB, KernelSpec, kernel_matrix

PROJECTION_SLACK = 0.05
GAP_REFINE_TOL = 1e-4


@dataclass(frozen=True)
class PointConfiguration:
    points: tuple
    window: tuple
    seed: int
    kernel_tag: str = ""

    def __post_init__(self):
        pts = tuple(float(x) for x in self.points)
        a, b = float(self.window[0]), float(self.window[1])
        if any(y <= x for x, y in zip(pts, pts[1:])):
            raise ArgumentError("points must be sorted without duplicates")
        if pts and (pts[0] <= a or pts[-1] >= b):
            raise ArgumentError("points must lie strictly inside the window")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", (a, b))

    def __len__(self):
        return len(self.points)

    def to_csv(self, metadata: Optional[dict] = None) -> str:
        meta = {"window": list(self.window), "seed": self.seed, "kernel": self.kernel_tag}
        if metadata:
            meta.update(metadata)
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["point"])
        for x in self.points:
            w.writerow([repr(x)])
        return buf.getvalue()


def _window_grid(grid: Grid, window) -> Grid:
    a, b = float(window[0]), float(window[1])
    if (a, b) == grid.domain:
        return grid
    return grid.restrict((a, b))


class DPPSampler:
    """Spectral sampler with the eigendecomposition computed once."""

    def __init__(self, spec: KernelSpec, grid: Grid, slack: float = PROJECTION_SLACK, tag: str = ""):
        self.grid = grid
        self.tag = tag
        K = kernel_matrix(spec, grid)
        K = 0.5 * (K + K.conj().T)
        ev, V = np.linalg.eigh(K)
        self.raw_range = (float(ev[0]), float(ev[-1])) if ev.size else (0.0, 0.0)
        if ev.size and (ev[0] < -slack or ev[-1] > 1 + slack):
            raise NotAProjectionError(f"eigenvalues span {self.raw_range}, outside [-{slack}, 1+{slack}]")
        self.eigenvalues = np.clip(ev, 0.0, 1.0)
        self.vectors = V
        self.rank = int(np.sum(ev > 1e-10 * max(1.0, float(np.max(np.abs(ev))) if ev.size else 1.0)))

    def sample_indices(self, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        keep = rng.random(self.eigenvalues.size) < self.eigenvalues
        V = self.vectors[:, keep]
        k = V.shape[1]
        chosen = []
        for _ in range(k):
            prob = np.sum(np.abs(V) ** 2, axis=1)
            prob = np.maximum(prob, 0.0)
            total = prob.sum()
            if total <= 0:
                break
            i = int(rng.choice(prob.size, p=prob / total))
            chosen.append(i)
            # drop one direction so that every remaining column vanishes at node i
            j = int(np.argmax(np.abs(V[i])))
            col = V[:, j].copy()
            V = np.delete(V, j, axis=1)
            if V.shape[1] == 0:
                break
            V = V - np.outer(col, V[i] / col[i])
            V, _ = np.linalg.qr(V)
        return np.sort(np.array(chosen, dtype=int)), k

    def sample(self, seed: int) -> PointConfiguration:
        idx, _ = self.sample_indices(np.random.default_rng(seed))
        return PointConfiguration(tuple(self.grid.nodes[idx]), self.grid.domain, int(seed), self.tag)


def sample_dpp(spec: KernelSpec, window, grid: Grid, seed: int) -> PointConfiguration:
    g = _window_grid(grid, window)
    return DPPSampler(spec, g, tag=type(spec).__name__).sample(seed)


def _default_threads() -> int:
    env = os.environ.get("DIVKERNELS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ReplicaStats:
    count: int
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    counts: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {"replicas": self.count, "mean": self.mean, "variance": self.variance,
                "mean_se": self.mean_se, "variance_se": self.variance_se}


def count_statistics(counts: Sequence[int]) -> ReplicaStats:
    """Mean and variance of counts with their standard errors (compensated sums)."""
    c = [float(x) for x in counts]
    n = len(c)
    if n < 2:
        raise ArgumentError("need at least two replicas")
    mean = math.fsum(c) / n
    dev2 = [(x - mean) ** 2 for x in c]
    var = math.fsum(dev2) / (n - 1)
    m4 = math.fsum(d * d for d in dev2) / n
    # standard error of the sample variance from the fourth central moment
    var_se = math.sqrt(max(m4 - var**2 * (n - 3) / (n - 1), 0.0) / n)
    return ReplicaStats(n, mean, var, math.sqrt(var / n), var_se, [int(x) for x in counts])


def sample_replicas(spec: KernelSpec, window, grid: Grid, base_seed: int, replicas: int,
                    threads: Optional[int] = None) -> tuple[list, ReplicaStats]:
    """Configurations for seeds base_seed + i, i < replicas, and their count statistics."""
    sampler = DPPSampler(spec, _window_grid(grid, window), tag=type(spec).__name__)
    seeds = [int(base_seed) + i for i in range(int(replicas))]
    n_threads = threads or _default_threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as ex:
            configs = list(ex.map(sampler.sample, seeds))
    else:
        configs = [sampler.sample(s) for s in seeds]
    return configs, count_statistics([len(c) for c in configs])


def expected_count(spec: KernelSpec, window, grid: Grid) -> float:
    """Integral of K(x, x) dmu over the window."""
    a, b = float(window[0]), float(window[1])
    if not b > a:
        return 0.0
    g = _window_grid(grid, (a, b))
    return float(np.real(g.integrate(spec.diag(g.nodes))))


def _gap_det(spec: KernelSpec, a: float, b: float, n: int) -> float:
    g = build_grid((a, b), n, "gauss-legendre")
    K = kernel_matrix(spec, g)
    K = 0.5 * (K + K.conj().T)
    return float(np.real(np.linalg.det(np.eye(n) - K)))


def gap_probability(spec: KernelSpec, interval, n_quad: int = 40, refine_tol: float = GAP_REFINE_TOL) -> float:
    """det(I - K) on the interval, Gauss-Legendre Nystrom with n_quad nodes.

    ``interval`` is (a, b) or a length s meaning [0, s].  The value at 2 n_quad
    is computed as a convergence check; disagreement beyond ``refine_tol``
    raises a RefinementWarning.
    """
    if np.ndim(interval) == 0:
        a, b = 0.0, float(interval)
    else:
        a, b = float(interval[0]), float(interval[1])
    if int(n_quad) < 10:
        raise ArgumentError("n_quad must be at least 10")
    if b < a:
        raise DomainError(f"reversed interval ({a}, {b})")
    if b == a:
        return 1.0
    d1 = _gap_det(spec, a, b, int(n_quad))
    d2 = _gap_det(spec, a, b, 2 * int(n_quad))
    if abs(d1 - d2) > refine_tol:
        warnings.warn(f"gap probability not converged: n={n_quad} gives {d1}, 2n gives {d2}", RefinementWarning)
    return d1


@dataclass(frozen=True)
class TraceReport:
    window: tuple
    trace: float
    hs_norm_sq: float
    hs_compression_sq: float
    eigenvalue_range: tuple
    offdiag_integral: float
    near_diag_integral: float
    bound_rhs: float
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "trace": self.trace,
            "hs_norm_sq": self.hs_norm_sq,
            "hs_compression_sq": self.hs_compression_sq,
            "eigenvalue_range": list(self.eigenvalue_range),
            "offdiag_integral": self.offdiag_integral,
            "near_diag_integral": self.near_diag_integral,
            "bound_rhs": self.bound_rhs,
            "epsilon": self.epsilon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _real_zeros(f, a: float, b: float, samples: int = 2001) -> list:
    t = np.linspace(a, b, samples)
    v = np.real(f(t))
    out = [float(x) for x, y in zip(t, v) if y == 0]
    for i in np.flatnonzero(v[:-1] * v[1:] < 0):
        out.append(optimize.brentq(lambda s: float(np.real(f(np.asarray(s)))), t[i], t[i + 1]))
    return sorted(out)


def default_epsilon(spec: KernelSpec, omega) -> float:
    """Half the distance between zeros and poles of m = A/B on omega (FromAB data), else 0.5."""
    if not isinstance(spec, FromAB):
        return 0.5
    a, b = omega
    za, zb = _real_zeros(spec.A, a, b), _real_zeros(spec.B, a, b)
    if not za or not zb:
        return 0.5
    d = min(abs(x - y) for x in za for y in zb)
    return 0.5 * d if d > 0 else 0.5


def local_trace_report(spec: KernelSpec, omega, grid: Grid, epsilon: Optional[float] = None,
                       anchor: Optional[float] = None, sym_tol: float = 1e-8) -> TraceReport:
    """Trace and Hilbert-Schmidt data of the kernel localised to omega.

    hs_norm_sq integrates |K|^2 over omega x (grid window); hs_compression_sq
    over omega x omega.  The off-diagonal part |x - y| > epsilon is compared
    with the bound
    2 C_eps (int_omega |A|^2 int |B|^2/(1+y^2) + int_omega |B|^2 int |A|^2/(1+y^2)) / K(p,p)^2,
    C_eps = sup (1 + y^2)/(x - y)^2 over the same pairs.
    """
    a, b = float(omega[0]), float(omega[1])
    lo, hi = grid.domain
    if not (lo <= a < b <= hi):
        raise DomainError(f"omega {omega} is not a compact sub-interval of {grid.domain}")
    eps = float(epsilon) if epsilon is not None else default_epsilon(spec, (a, b))
    if not eps > 0:
        raise ArgumentError("epsilon must be positive")
    go = _window_grid(grid, (a, b))
    x, wx = go.nodes, go.weights
    y, wy = grid.nodes, grid.weights

    trace = float(np.real(go.integrate(spec.diag(x))))
    Kc = kernel_matrix(spec, go)
    asym = float(np.max(np.abs(Kc - Kc.conj().T)))
    if asym > sym_tol:
        raise ConsistencyError(f"compressed kernel is not Hermitian (asymmetry {asym:.2e})")
    ev = np.linalg.eigvalsh(0.5 * (Kc + Kc.conj().T))
    hs_comp = float(np.sum(np.abs(Kc) ** 2))

    K = spec(x[:, None], y[None, :])
    W = wx[:, None] * wy[None, :]
    K2 = np.abs(K) ** 2 * W
    if not np.all(np.isfinite(K2)):
        raise ConsistencyError("non-finite kernel values in the trace report")
    far = np.abs(x[:, None] - y[None, :]) > eps
    hs = float(np.sum(K2))
    off = float(np.sum(K2[far]))
    near = float(np.sum(K2[~far]))

    p = anchor if anchor is not None else 0.5 * (a + b)
    pair = extract_AB(spec, grid, p)
    Ay, By = np.abs(pair.A.values) ** 2, np.abs(pair.B.values) ** 2
    Ax, Bx = np.abs(pair.A_at(x)) ** 2, np.abs(pair.B_at(x)) ** 2
    with np.errstate(divide="ignore"):
        ratio = (1 + y[None, :] ** 2) / (x[:, None] - y[None, :]) ** 2
    c_eps = float(max(np.max(ratio[far]) if np.any(far) else 0.0, 1.0))
    yw = wy / (1 + y**2)
    rhs = 2 * c_eps * (np.sum(wx * Ax) * np.sum(yw * By) + np.sum(wx * Bx) * np.sum(yw * Ay)) / pair.kpp**2
    return TraceReport((a, b), trace, hs, hs_comp, (float(ev[0]), float(ev[-1])), off, near, float(rhs), eps)
