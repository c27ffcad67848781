"""Positive-definite kernels: evaluation, gradients, squaring, normalization.

All kernels used for spectral computations are expected to have unit
diagonal, k(x, x) = 1 (Gaussian, Laplacian, normalized).  The energy
kernel is the exception: it is evaluation-only and exists as a baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

FAMILIES = ("gaussian", "laplacian", "energy", "squared", "normalized")


class KernelError(ValueError):
    """Invalid kernel specification or unsupported kernel operation."""


@dataclass(frozen=True)
class KernelSpec:
    """Immutable kernel description.

    family : one of 'gaussian', 'laplacian', 'energy', 'squared', 'normalized'
    bandwidth : positive bandwidth, required for gaussian/laplacian
    inner : wrapped spec, required for squared/normalized
    """

    family: str
    bandwidth: Optional[float] = None
    inner: Optional["KernelSpec"] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}")
        if self.family in ("gaussian", "laplacian"):
            if self.bandwidth is None or not (self.bandwidth > 0):
                raise KernelError(f"{self.family} kernel requires bandwidth > 0")
            if self.inner is not None:
                raise KernelError(f"{self.family} kernel takes no inner spec")
        elif self.family in ("squared", "normalized"):
            if self.inner is None:
                raise KernelError(f"{self.family} kernel requires an inner spec")
        else:  # energy
            if self.inner is not None:
                raise KernelError("energy kernel takes no inner spec")

    @property
    def unit_diagonal(self) -> bool:
        """Whether k(x, x) = 1 for all x."""
        if self.family in ("gaussian", "laplacian", "normalized"):
            return True
        if self.family == "squared":
            return self.inner.unit_diagonal
        return False  # energy

    @property
    def differentiable(self) -> bool:
        """Whether kernel_grad_y supports this spec (Laplacian: a.e.)."""
        if self.family in ("gaussian", "laplacian"):
            return True
        if self.family == "squared":
            return self.inner.differentiable
        return False

    def to_json(self) -> dict:
        d = {"family": self.family}
        if self.bandwidth is not None:
            d["bandwidth"] = self.bandwidth
        if self.inner is not None:
            d["inner"] = self.inner.to_json()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "KernelSpec":
        inner = cls.from_json(d["inner"]) if "inner" in d else None
        return cls(d["family"], d.get("bandwidth"), inner)


def gaussian(bandwidth: float = 1.0) -> KernelSpec:
    return KernelSpec("gaussian", bandwidth)


def laplacian(bandwidth: float = 1.0) -> KernelSpec:
    return KernelSpec("laplacian", bandwidth)


def energy() -> KernelSpec:
    return KernelSpec("energy")


def normalized(inner: KernelSpec) -> KernelSpec:
    return KernelSpec("normalized", inner=inner)


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2:
        raise KernelError("points must be vectors or n x d matrices")
    return x


def kernel_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """Evaluate the kernel on all pairs, returning the |X| x |Y| matrix."""
    X, Y = _as_2d(X), _as_2d(Y)
    if X.shape[1] != Y.shape[1]:
        raise KernelError(
            f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}"
        )
    if spec.family == "gaussian":
        d2 = cdist(X, Y, "sqeuclidean")
        return np.exp(-d2 / (2.0 * spec.bandwidth**2))
    if spec.family == "laplacian":
        d1 = cdist(X, Y, "cityblock")
        return np.exp(-d1 / spec.bandwidth)
    if spec.family == "energy":
        nx = np.linalg.norm(X, axis=1)
        ny = np.linalg.norm(Y, axis=1)
        dxy = cdist(X, Y, "euclidean")
        return 0.5 * (nx[:, None] + ny[None, :] - dxy)
    if spec.family == "squared":
        return kernel_matrix(spec.inner, X, Y) ** 2
    # normalized: k(x,y)/sqrt(k(x,x) k(y,y)), diagonals evaluated lazily
    kxy = kernel_matrix(spec.inner, X, Y)
    dx = np.array([kernel_matrix(spec.inner, x, x)[0, 0] for x in X])
    dy = np.array([kernel_matrix(spec.inner, y, y)[0, 0] for y in Y])
    return kxy / np.sqrt(dx[:, None] * dy[None, :])


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of points."""
    return float(kernel_matrix(spec, _as_2d(x), _as_2d(y))[0, 0])


def kernel_square(spec: KernelSpec) -> KernelSpec:
    """Spec evaluating k(x, y)^2 pointwise.

    Closed forms: squaring a Gaussian kernel divides the bandwidth by
    sqrt(2), squaring a Laplacian divides it by 2.  Other families get a
    'squared' wrapper.
    """
    if spec.family == "gaussian":
        return KernelSpec("gaussian", spec.bandwidth / math.sqrt(2.0))
    if spec.family == "laplacian":
        return KernelSpec("laplacian", spec.bandwidth / 2.0)
    return KernelSpec("squared", inner=spec)


def kernel_grad_matrix(spec: KernelSpec, Z, X) -> np.ndarray:
    """Gradients grad_x k(z_k, x_j) for all pairs, shape (r, n, d).

    For the Laplacian, components where a coordinate ties are set to 0
    (a valid subgradient).
    """
    Z, X = _as_2d(Z), _as_2d(X)
    if Z.shape[1] != X.shape[1]:
        raise KernelError(
            f"dimension mismatch: {Z.shape[1]} vs {X.shape[1]}"
        )
    diff = X[None, :, :] - Z[:, None, :]  # (r, n, d)
    if spec.family == "gaussian":
        k = kernel_matrix(spec, Z, X)
        return -diff / spec.bandwidth**2 * k[:, :, None]
    if spec.family == "laplacian":
        k = kernel_matrix(spec, Z, X)
        return -np.sign(diff) / spec.bandwidth * k[:, :, None]
    if spec.family == "squared":
        if not spec.inner.differentiable:
            raise KernelError("gradient of squared kernel needs differentiable inner")
        k = kernel_matrix(spec.inner, Z, X)
        return 2.0 * k[:, :, None] * kernel_grad_matrix(spec.inner, Z, X)
    raise KernelError(f"gradient unsupported for {spec.family} kernel")


def kernel_grad_y(spec: KernelSpec, x, y) -> np.ndarray:
    """Gradient of k(x, y) with respect to y, for a single pair."""
    return kernel_grad_matrix(spec, _as_2d(x), _as_2d(y))[0, 0]
