"""Degree/strength/weight distributions, power-law fits and log-binned curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from hashtagnet.graph import WeightedGraph

DIST_KINDS = ("degree", "strength", "weight")
FIT_METHODS = ("mle", "logbin-ls")
CURVE_KINDS = ("knn", "strength_vs_degree", "weight_vs_kk")
MIN_TAIL = 10
# search interval for the exponent
GAMMA_BOUNDS = (1.0 + 1e-6, 20.0)
GAMMA_XTOL = 1e-6


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalDistribution:
    kind: str
    samples: np.ndarray

    @property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted distinct values and their counts."""
        return np.unique(self.samples, return_counts=True)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    x_min: int
    method: str
    stderr: float
    n_tail: int
    x_max: int | None = None

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "method": self.method,
            "stderr": self.stderr,
            "n_tail": self.n_tail,
        }


@dataclass(frozen=True)
class BinnedCurve:
    """Bin means of ``y`` over base-2 logarithmic bins of ``x``.

    ``x`` holds the mean of the member x-values of each bin, ``bin_lo`` and
    ``bin_hi`` the half-open bin edges.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    counts: np.ndarray
    bin_lo: np.ndarray
    bin_hi: np.ndarray

    def slope(self) -> float | None:
        """Least-squares log-log slope across bins, or None with fewer than two bins."""
        ok = (self.x > 0) & (self.y > 0)
        if ok.sum() < 2:
            return None
        return float(stats.linregress(np.log(self.x[ok]), np.log(self.y[ok])).slope)

    def rows(self):
        return zip(self.x.tolist(), self.y.tolist(), self.counts.tolist())


def distribution(graph: WeightedGraph, kind: str) -> EmpiricalDistribution:
    if graph.n_vertices == 0:
        raise ValueError("empty graph")
    if kind == "degree":
        samples = graph.degree[graph.degree > 0]
    elif kind == "strength":
        samples = graph.strength[graph.strength > 0]
    elif kind == "weight":
        samples = graph.weight
    else:
        raise ValueError(f"unknown distribution kind {kind!r}")
    return EmpiricalDistribution(kind, np.array(samples, dtype=np.int64))


def fit_power_law(
    dist: EmpiricalDistribution | np.ndarray,
    x_min: int = 1,
    method: str = "mle",
    x_max: int | None = None,
) -> PowerLawFit:
    """Fit ``P(x) ~ x**-gamma`` to the samples in ``[x_min, x_max]``.

    ``mle`` maximises the discrete likelihood normalised by the Hurwitz zeta
    function (a finite sum when ``x_max`` is set); ``logbin-ls`` regresses the
    log-binned density. ``gamma`` is always the positive decay magnitude.
    """
    if method not in FIT_METHODS:
        raise ValueError(f"unknown fit method {method!r}")
    if x_min < 1:
        raise ValueError("x_min must be a positive integer")
    samples = dist.samples if isinstance(dist, EmpiricalDistribution) else np.asarray(dist)
    tail = samples[samples >= x_min]
    if x_max is not None:
        if x_max < x_min:
            raise ValueError("x_max below x_min")
        tail = tail[tail <= x_max]
    if len(tail) < MIN_TAIL:
        raise FitError("tail too small")
    if np.all(tail == tail[0]):
        raise FitError("degenerate sample")
    if method == "mle":
        gamma, stderr = _discrete_mle(tail.astype(np.float64), x_min, x_max)
    else:
        gamma, stderr = _logbin_ls(tail, x_min, x_max)
    return PowerLawFit(gamma, int(x_min), method, stderr, len(tail), x_max)


def _discrete_mle(tail: np.ndarray, x_min: int, x_max: int | None) -> tuple[float, float]:
    n = len(tail)
    sum_log = float(np.log(tail).sum())

    if x_max is None:
        lo = GAMMA_BOUNDS[0]

        def log_norm(g):
            return math.log(special.zeta(g, x_min))

    else:
        # bounded support keeps exponents <= 1 normalisable
        lo = 1e-3
        support = np.arange(x_min, x_max + 1, dtype=np.float64)
        log_support = np.log(support)

        def log_norm(g):
            return float(special.logsumexp(-g * log_support))

    def nll(g):
        return n * log_norm(g) + g * sum_log

    res = optimize.minimize_scalar(nll, bounds=(lo, GAMMA_BOUNDS[1]), method="bounded", options={"xatol": GAMMA_XTOL})
    gamma = float(res.x)

    h = 1e-4
    g0 = max(gamma, lo + h)
    curv = (nll(g0 + h) - 2 * nll(g0) + nll(g0 - h)) / (h * h)
    stderr = 1.0 / math.sqrt(curv) if curv > 0 else math.inf
    return gamma, stderr


def _logbin_ls(tail: np.ndarray, x_min: int, x_max: int | None) -> tuple[float, float]:
    hi_val = int(tail.max()) if x_max is None else int(x_max)
    edges = _log2_edges(x_min, hi_val)
    lo_e, hi_e = edges[:-1], edges[1:]
    # integer points of each bin inside [x_min, hi_val]
    lo_c = np.maximum(lo_e, x_min)
    hi_c = np.minimum(hi_e, hi_val + 1)
    width = hi_c - lo_c
    counts = np.histogram(tail, bins=edges)[0]
    ok = (counts > 0) & (width > 0)
    if ok.sum() < 2:
        raise FitError("degenerate sample")
    density = counts[ok] / (len(tail) * width[ok])
    centers = np.sqrt(lo_c[ok] * (hi_c[ok] - 1).astype(np.float64))
    reg = stats.linregress(np.log(centers), np.log(density))
    return float(-reg.slope), float(reg.stderr)


def _log2_edges(lo: int, hi: int) -> np.ndarray:
    """Base-2 bin edges anchored at 1 covering ``[lo, hi]``."""
    k_lo = int(math.floor(math.log2(lo)))
    k_hi = int(math.floor(math.log2(hi))) + 1
    return np.array([2**k for k in range(k_lo, k_hi + 1)], dtype=np.int64)


def log_binned_mean(x, y, kind: str) -> BinnedCurve:
    """Mean of ``y`` within base-2 logarithmic bins of positive ``x``; empty bins dropped."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ok = x > 0
    x, y = x[ok], y[ok]
    if len(x) == 0:
        empty = np.empty(0)
        return BinnedCurve(kind, empty, empty, np.empty(0, dtype=np.int64), empty, empty)
    k = np.floor(np.log2(x)).astype(np.int64)
    # guard against log2 rounding at exact powers of two
    k[2.0 ** (k + 1) <= x] += 1
    k[2.0**k > x] -= 1
    bins, inv = np.unique(k, return_inverse=True)
    inv = inv.ravel()
    counts = np.bincount(inv, minlength=len(bins))
    xm = np.bincount(inv, weights=x, minlength=len(bins)) / counts
    ym = np.bincount(inv, weights=y, minlength=len(bins)) / counts
    return BinnedCurve(kind, xm, ym, counts.astype(np.int64), 2.0**bins, 2.0 ** (bins + 1))


def average_neighbor_degree(graph: WeightedGraph) -> np.ndarray:
    """Per-vertex mean degree of neighbours (unweighted); NaN for isolated vertices."""
    adj = graph.adjacency()
    pattern = adj.copy()
    pattern.data = np.ones_like(pattern.data)
    total = pattern @ graph.degree.astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(graph.degree > 0, total / graph.degree, np.nan)


def knn_curve(graph: WeightedGraph) -> BinnedCurve:
    if graph.n_edges == 0:
        raise ValueError("empty graph")
    knn = average_neighbor_degree(graph)
    ok = graph.degree > 0
    return log_binned_mean(graph.degree[ok], knn[ok], "knn")


def correlation_curve(graph: WeightedGraph, kind: str) -> BinnedCurve:
    if graph.n_edges == 0:
        raise ValueError("empty graph")
    if kind == "strength_vs_degree":
        ok = graph.degree > 0
        return log_binned_mean(graph.degree[ok], graph.strength[ok], kind)
    if kind == "weight_vs_kk":
        kk = graph.degree[graph.src].astype(np.float64) * graph.degree[graph.dst]
        return log_binned_mean(kk, graph.weight, kind)
    raise ValueError(f"unknown curve kind {kind!r}")


def curve(graph: WeightedGraph, kind: str) -> BinnedCurve:
    if kind == "knn":
        return knn_curve(graph)
    return correlation_curve(graph, kind)
