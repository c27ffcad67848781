"""Scripted studies: parameter sweeps, mixture splitting, robustness,
empirical convergence rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distances import kbw_distance, kt_distance, mmd, mmd_k2
from .kernels import KernelSpec, gaussian
from .measures import DiscreteMeasure, sample_gaussian, substream

METRICS = ("kt", "mmd", "mmd_k2", "kbw")


def _metric_value(metric: str, spec: KernelSpec, mu, nu) -> float:
    if metric == "kt":
        return kt_distance(spec, mu, nu)
    if metric == "mmd":
        return mmd(spec, mu, nu)
    if metric == "mmd_k2":
        return mmd_k2(spec, mu, nu)
    if metric == "kbw":
        return kbw_distance(spec, mu, nu)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class SweepResult:
    parameter: np.ndarray
    values: dict  # metric name -> array aligned with parameter

    def __post_init__(self):
        for name, v in self.values.items():
            if len(v) != len(self.parameter):
                raise ValueError(f"length mismatch for metric {name}")


def bandwidth_sweep(
    n: int,
    mean_gap: float,
    sigma_grid: Sequence[float],
    metrics: Sequence[str] = ("kt", "mmd_k2"),
    seed: int = 0,
) -> SweepResult:
    """Distances between N(0,1) and N(mean_gap,1) samples across Gaussian
    kernel bandwidths; one sample pair is shared across the grid."""
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if np.any(sigma_grid <= 0) or np.any(np.diff(sigma_grid) <= 0):
        raise ValueError("sigma_grid must be positive and increasing")
    rng = substream(seed, 0)
    mu = DiscreteMeasure.uniform(sample_gaussian([0.0], 1.0, n, rng))
    nu = DiscreteMeasure.uniform(sample_gaussian([mean_gap], 1.0, n, rng))
    values = {m: np.empty(len(sigma_grid)) for m in metrics}
    for j, sigma in enumerate(sigma_grid):
        spec = gaussian(float(sigma))
        for m in metrics:
            values[m][j] = _metric_value(m, spec, mu, nu)
    return SweepResult(sigma_grid, values)


def mean_sweep(
    theta_grid: Sequence[float],
    n: int = 1000,
    sigma: float = 1.0,
    metrics: Sequence[str] = ("kt", "mmd_k2", "kbw"),
    seed: int = 0,
) -> SweepResult:
    """Distances between N(0,1) and N(theta,1); the second sample is one
    base draw shifted by theta, so curves are smooth in theta."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    rng = substream(seed, 0)
    spec = gaussian(sigma)
    x = sample_gaussian([0.0], 1.0, n, rng)
    y0 = sample_gaussian([0.0], 1.0, n, rng)
    mu = DiscreteMeasure.uniform(x)
    values = {m: np.empty(len(theta_grid)) for m in metrics}
    for j, theta in enumerate(theta_grid):
        nu = DiscreteMeasure.uniform(y0 + theta)
        for m in metrics:
            values[m][j] = _metric_value(m, spec, mu, nu)
    return SweepResult(theta_grid, values)


def std_sweep(
    s_grid: Sequence[float],
    gap: float = 100.0,
    n: int = 1000,
    sigma: float = 1.0,
    metrics: Sequence[str] = ("kt", "mmd_k2", "kbw"),
    seed: int = 0,
) -> SweepResult:
    """Distances between N(0,s) and N(gap,s) as the standard deviation s
    varies; base draws are shared and rescaled."""
    s_grid = np.asarray(s_grid, dtype=float)
    rng = substream(seed, 0)
    spec = gaussian(sigma)
    x0 = sample_gaussian([0.0], 1.0, n, rng)
    y0 = sample_gaussian([0.0], 1.0, n, rng)
    values = {m: np.empty(len(s_grid)) for m in metrics}
    for j, s in enumerate(s_grid):
        mu = DiscreteMeasure.uniform(s * x0)
        nu = DiscreteMeasure.uniform(gap + s * y0)
        for m in metrics:
            values[m][j] = _metric_value(m, spec, mu, nu)
    return SweepResult(s_grid, values)


def mixture_split_check(
    shift=(0.3, 0.3),
    delta=(10.0, 10.0),
    sigma: float = 0.5,
    n: int = 100,
    seed: int = 0,
) -> dict:
    """Mixture-splitting identities for far-separated translated copies.

    P mixes a 2-D Gaussian blob with its copy translated by delta, Q the
    same blob shifted by `shift`.  Returns the kernel trace distance and
    squared MMD_k2 for the pair and for each component.
    """
    shift = np.asarray(shift, dtype=float)
    delta = np.asarray(delta, dtype=float)
    rng = substream(seed, 0)
    spec = gaussian(sigma)
    x1 = sample_gaussian([0.0, 0.0], 1.0, n, rng)
    y1 = sample_gaussian(shift, 1.0, n, rng)
    x2, y2 = x1 + delta, y1 + delta
    mu1, nu1 = DiscreteMeasure.uniform(x1), DiscreteMeasure.uniform(y1)
    mu2, nu2 = DiscreteMeasure.uniform(x2), DiscreteMeasure.uniform(y2)
    P = DiscreteMeasure.uniform(np.vstack([x1, x2]))
    Q = DiscreteMeasure.uniform(np.vstack([y1, y2]))
    return {
        "kt_PQ": kt_distance(spec, P, Q),
        "kt_11": kt_distance(spec, mu1, nu1),
        "kt_22": kt_distance(spec, mu2, nu2),
        "mmd2_PQ": mmd_k2(spec, P, Q) ** 2,
        "mmd2_11": mmd_k2(spec, mu1, nu1) ** 2,
        "mmd2_22": mmd_k2(spec, mu2, nu2) ** 2,
    }


def contaminated_mixture(
    P: DiscreteMeasure, C: DiscreteMeasure, eps: float
) -> DiscreteMeasure:
    """(1 - eps) P + eps C by exact reweighting of the joint support."""
    if eps == 0.0:
        return P
    return DiscreteMeasure(
        np.vstack([P.points, C.points]),
        np.concatenate([(1.0 - eps) * P.weights, eps * C.weights]),
    )


def robustness_check(
    spec: KernelSpec,
    P: DiscreteMeasure,
    Q: DiscreteMeasure,
    contamination: DiscreteMeasure,
    eps_grid: Sequence[float],
) -> dict:
    """Deviation |d(P_eps, Q) - d(P, Q)| per epsilon for kt and mmd_k2."""
    base = {"kt": kt_distance(spec, P, Q), "mmd_k2": mmd_k2(spec, P, Q)}
    out = {}
    for eps in eps_grid:
        P_eps = contaminated_mixture(P, contamination, float(eps))
        out[float(eps)] = {
            "kt": abs(kt_distance(spec, P_eps, Q) - base["kt"]),
            "mmd_k2": abs(mmd_k2(spec, P_eps, Q) - base["mmd_k2"]),
        }
    return out


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def rate_study(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_grid: Sequence[int],
    reps: int,
    ref_size: int,
    metrics: Sequence[str] = ("kt", "mmd_k2"),
    spec: KernelSpec = None,
    seed: int = 0,
) -> dict:
    """Empirical convergence of d(sample_n, reference) in n.

    The population measure is proxied by one large independent sample of
    ref_size points per replication.  Returns per-n means and stds and
    the least-squares slope of log(mean) against log(n) per metric.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be increasing")
    if ref_size <= max(n_grid):
        raise ValueError("ref_size must exceed max(n_grid)")
    if spec is None:
        spec = gaussian(1.0)
    vals = {m: np.empty((len(n_grid), reps)) for m in metrics}
    for rep in range(reps):
        ref = DiscreteMeasure.uniform(sampler(substream(seed, 1, rep), ref_size))
        for j, n in enumerate(n_grid):
            mu = DiscreteMeasure.uniform(sampler(substream(seed, 2, rep, n), n))
            for m in metrics:
                vals[m][j, rep] = _metric_value(m, spec, mu, ref)
    table = {
        m: {
            "n": n_grid,
            "mean": vals[m].mean(axis=1),
            "std": vals[m].std(axis=1),
        }
        for m in metrics
    }
    slopes = {
        m: _ols_slope(np.log(np.asarray(n_grid, float)), np.log(table[m]["mean"]))
        for m in metrics
    }
    return {"table": table, "slopes": slopes}
