"""Discrete measures, signed differences, samplers, contamination, RNG.

All randomness flows through counter-based Philox generators keyed by a
64-bit seed, so identical seeds give identical streams on every
platform.  Parallel or per-iteration work derives child streams from
(seed, path) instead of sharing one generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

WEIGHT_TOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Root generator for a run (Philox, fixed constants)."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, 0]))


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent child generator for (seed, path).

    The path is folded into the second Philox key word with a splitmix
    multiplier; distinct paths give distinct, reproducible streams.
    """
    h = 0
    for p in path:
        h = ((h ^ (int(p) & _MASK64)) * _GOLDEN) & _MASK64
        h = (h ^ (h >> 31)) & _MASK64
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, h]))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud: points (n, d), nonnegative weights summing to 1."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(self.points, dtype=float)))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] < 1:
            raise ValueError("measure needs at least one point")
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points/weights length mismatch")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite point coordinates")
        if np.any(w < 0):
            raise ValueError("negative weight")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class SignedAtomList:
    """Merged support of mu - nu: distinct atoms with signed weights."""

    atoms: np.ndarray
    signed_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]


def _empty_atoms(dim: int) -> SignedAtomList:
    return SignedAtomList(np.empty((0, dim)), np.empty(0))


def merge_difference(mu: DiscreteMeasure, nu: DiscreteMeasure) -> SignedAtomList:
    """Signed atom list of mu - nu with bitwise-exact deduplication.

    Atoms with net weight exactly 0 are dropped.  Order: mu-only atoms,
    shared atoms, nu-only atoms, each in first-occurrence order.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    index: dict[bytes, int] = {}
    rows: list[np.ndarray] = []
    mass: list[float] = []
    in_mu: list[bool] = []
    in_nu: list[bool] = []
    for p, w in zip(mu.points, mu.weights):
        key = p.tobytes()
        i = index.get(key)
        if i is None:
            index[key] = len(rows)
            rows.append(p)
            mass.append(w)
            in_mu.append(True)
            in_nu.append(False)
        else:
            mass[i] += w
    for p, w in zip(nu.points, nu.weights):
        key = p.tobytes()
        i = index.get(key)
        if i is None:
            index[key] = len(rows)
            rows.append(p)
            mass.append(-w)
            in_mu.append(False)
            in_nu.append(True)
        else:
            mass[i] -= w
            in_nu[i] = True
    order = (
        [i for i in range(len(rows)) if in_mu[i] and not in_nu[i]]
        + [i for i in range(len(rows)) if in_mu[i] and in_nu[i]]
        + [i for i in range(len(rows)) if in_nu[i] and not in_mu[i]]
    )
    keep = [i for i in order if mass[i] != 0.0]
    if not keep:
        return _empty_atoms(mu.dim)
    return SignedAtomList(
        np.array([rows[i] for i in keep]), np.array([mass[i] for i in keep])
    )


def contaminate(p_points, c_sampler, eps: float, rng: np.random.Generator):
    """Replace round(eps * n) uniformly chosen rows by draws from c_sampler.

    c_sampler(rng, count) must return a (count, d) matrix.
    """
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"contamination fraction {eps} outside [0, 1)")
    pts = np.atleast_2d(np.asarray(p_points, dtype=float)).copy()
    n = pts.shape[0]
    count = int(round(eps * n))
    if count == 0:
        return pts
    idx = rng.choice(n, size=count, replace=False)
    pts[idx] = np.atleast_2d(c_sampler(rng, count))
    return pts


def sample_gaussian(mean, std: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from an isotropic normal with the given mean vector."""
    if not (std > 0):
        raise ValueError("std must be positive")
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.shape[0]
    if n == 0:
        return np.empty((0, d))
    return mean[None, :] + std * rng.standard_normal((n, d))


def sample_mixture(components, weights, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws from a mixture; components are callables (rng, count) -> matrix."""
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > WEIGHT_TOL or np.any(weights < 0):
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    counts = rng.multinomial(n, weights)
    parts = [comp(rng, int(c)) for comp, c in zip(components, counts) if c > 0]
    if not parts:
        first = components[0](rng, 0)
        return np.empty((0, np.atleast_2d(first).shape[1]))
    out = np.vstack([np.atleast_2d(p) for p in parts])
    rng.shuffle(out, axis=0)
    return out
