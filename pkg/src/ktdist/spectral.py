"""Spectrum of the signed operator built from a kernel and signed atoms.

The canonical route is real-symmetric: with G the Gram matrix on the
merged atoms and D = diag(signed weights), the matrix
L = G^{1/2} D G^{1/2} is similar to G D and therefore shares the
spectrum of the signed operator.  The computation is organised in the
eigenbasis of G, so after one dense eigendecomposition of G everything
else happens at the retained numerical rank.

The complex difference kernel matrix (signed square-root scalings,
imaginary for negative weights) is kept as a cross-check oracle via its
trace moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, kernel_matrix
from .measures import SignedAtomList

DEFAULT_TOL = 1e-10
_PSD_SLACK = 1e-6  # relative floor below which G is declared not PSD
_IMAG_TOL = 1e-8


class NotPSDError(ValueError):
    """Gram matrix has a significantly negative eigenvalue."""


class SpectralMismatchError(RuntimeError):
    """Trace moment of the complex route has a non-negligible imaginary part."""


def gram(spec: KernelSpec, atoms: SignedAtomList) -> np.ndarray:
    """Symmetric Gram matrix G[j, k] = k(z_j, z_k) on the atom support."""
    if atoms.size == 0:
        raise ValueError("empty atom list")
    G = kernel_matrix(spec, atoms.atoms, atoms.atoms)
    return 0.5 * (G + G.T)


def _checked_eigh(G: np.ndarray, tol: float):
    """Eigendecomposition of G with PSD check and relative clipping."""
    lam, Q = np.linalg.eigh(G)
    top = lam[-1] if lam.size else 0.0
    if top <= 0:
        raise NotPSDError("Gram matrix has no positive eigenvalue")
    if lam[0] < -_PSD_SLACK * top:
        raise NotPSDError(f"Gram eigenvalue {lam[0]} below -{_PSD_SLACK} * max")
    keep = lam > tol * top
    return lam[keep], Q[:, keep]


def psd_sqrt(G: np.ndarray, tol: float = DEFAULT_TOL):
    """Matrix square root and pseudo-inverse square root of a PSD matrix.

    Eigenvalues below tol * max(eig) are clipped to zero; the inverse is
    taken on the retained range only.
    """
    G = np.asarray(G, dtype=float)
    lam, Q = _checked_eigh(G, tol)
    root = np.sqrt(lam)
    sqrt = (Q * root) @ Q.T
    pinv = (Q / root) @ Q.T
    return sqrt, pinv


@dataclass(frozen=True)
class SignedSpectrum:
    """Eigenvalues and sample-basis coefficients of the signed operator.

    eigenvalues : (r,) sorted by decreasing |lambda|
    coeffs : (r, r); row i gives c_ik with eigenfunction
        u_i = sum_k c_ik phi(z_k)
    zero_flags : (r,) bool, True where |lambda| is numerically zero
    atoms : the SignedAtomList the spectrum was computed from
    """

    eigenvalues: np.ndarray
    coeffs: np.ndarray
    zero_flags: np.ndarray
    atoms: SignedAtomList

    @property
    def numerical_rank(self) -> int:
        return int(np.count_nonzero(~self.zero_flags))

    def schatten_norm(self, p: int) -> float:
        lam = np.abs(self.eigenvalues)
        if p == 1:
            return float(lam.sum())
        return float((lam**p).sum() ** (1.0 / p))


def empty_spectrum(atoms: SignedAtomList) -> SignedSpectrum:
    return SignedSpectrum(
        np.empty(0), np.empty((0, 0)), np.empty(0, dtype=bool), atoms
    )


def signed_operator_spectrum(
    spec: KernelSpec, atoms: SignedAtomList, tol: float = DEFAULT_TOL
) -> SignedSpectrum:
    """Eigenvalues and eigenfunction coefficients of the signed operator.

    Diagonalises L = G^{1/2} D G^{1/2} in the eigenbasis of G: with
    G = Q diag(g) Q^T (clipped at tol * max(g)), L is similar to the
    retained-rank core M = diag(sqrt(g)) Q^T D Q diag(sqrt(g)), and the
    coefficients are recovered through the pseudo-inverse square root.
    """
    r = atoms.size
    if r == 0:
        return empty_spectrum(atoms)
    G = gram(spec, atoms)
    g, Q = _checked_eigh(G, tol)
    root = np.sqrt(g)
    W = Q.T @ (atoms.signed_weights[:, None] * Q)
    M = root[:, None] * W * root[None, :]
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    # coeffs of u_i in the phi(z_k) basis: row = v_i^T diag(1/sqrt(g)) Q^T
    C = (V / root[:, None]).T @ Q.T
    q = lam.shape[0]
    order = np.argsort(-np.abs(lam))
    lam, C = lam[order], C[order]
    eigenvalues = np.concatenate([lam, np.zeros(r - q)])
    coeffs = np.vstack([C, np.zeros((r - q, r))])
    top = np.abs(lam).max() if q else 0.0
    zero = np.abs(eigenvalues) < tol * top if top > 0 else np.ones(r, dtype=bool)
    return SignedSpectrum(eigenvalues, coeffs, zero, atoms)


def build_operator_matrix(spec: KernelSpec, atoms: SignedAtomList, tol: float = DEFAULT_TOL):
    """Dense L = G^{1/2} D G^{1/2}; debugging and oracle use only."""
    G = gram(spec, atoms)
    sqrt, _ = psd_sqrt(G, tol)
    return sqrt @ (atoms.signed_weights[:, None] * sqrt)


def complex_diff_kernel(spec: KernelSpec, atoms: SignedAtomList) -> np.ndarray:
    """Complex symmetric matrix K[j, k] = s_j s_k k(z_j, z_k).

    s_j = sqrt(w_j) for nonnegative weights, i * sqrt(|w_j|) otherwise.
    Used only for cross-validation through trace moments.
    """
    w = atoms.signed_weights
    s = np.where(w >= 0, np.sqrt(np.abs(w)), 1j * np.sqrt(np.abs(w)))
    return np.outer(s, s) * gram(spec, atoms)


def trace_moments(M: np.ndarray, p: int) -> float:
    """Tr(M^p) for p in 1..3 by direct multiplication.

    Complex inputs must yield a real result up to 1e-8; the imaginary
    residual is checked and discarded.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    if p not in (1, 2, 3):
        raise ValueError("p must be 1, 2 or 3")
    P = M
    for _ in range(p - 1):
        P = P @ M
    t = np.trace(P)
    if np.iscomplexobj(P):
        if abs(t.imag) > _IMAG_TOL:
            raise SpectralMismatchError(
                f"trace moment has imaginary part {t.imag}"
            )
        t = t.real
    return float(t)
