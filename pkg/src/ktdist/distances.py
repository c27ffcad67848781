"""Scalar discrepancies between discrete measures, and the dual witness.

The kernel trace distance is the Schatten 1-norm of the difference of
the two RKHS covariance operators, computed exactly from the spectrum of
the signed operator on the merged sample support.  The companion
quantities (MMD with the squared kernel, normalized MMD, kernel
Bures-Wasserstein, 1-D Wasserstein) share the same discrete-measure
interface.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import KernelError, KernelSpec, kernel_matrix, kernel_square
from .measures import DiscreteMeasure, SignedAtomList, merge_difference
from .spectral import DEFAULT_TOL, SignedSpectrum, signed_operator_spectrum

_NEG_CLAMP = 1e-12


class NumericalError(ArithmeticError):
    """A quantity left its mathematically guaranteed range by too much."""


def _warn_non_unit_diagonal(spec: KernelSpec, name: str):
    if not spec.unit_diagonal:
        warnings.warn(
            f"{name} with a non-unit-diagonal kernel: normalisation "
            "guarantees (range [0, 2], witness bounds) do not apply",
            stacklevel=3,
        )


def kt_distance(
    spec: KernelSpec,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    tol: float = DEFAULT_TOL,
) -> float:
    """Kernel trace distance: sum of |eigenvalues| of the signed operator.

    Under a unit-diagonal kernel the value lies in [0, 2].
    """
    _warn_non_unit_diagonal(spec, "kt_distance")
    atoms = merge_difference(mu, nu)
    if atoms.size == 0:
        return 0.0
    return signed_operator_spectrum(spec, atoms, tol).schatten_norm(1)


def _signed_quadratic(spec: KernelSpec, atoms: SignedAtomList) -> float:
    w = atoms.signed_weights
    return float(w @ kernel_matrix(spec, atoms.atoms, atoms.atoms) @ w)


def mmd(spec: KernelSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Maximum mean discrepancy (biased V-statistic over the signed atoms)."""
    atoms = merge_difference(mu, nu)
    if atoms.size == 0:
        return 0.0
    sq = _signed_quadratic(spec, atoms)
    if sq < -_NEG_CLAMP:
        raise NumericalError(f"squared MMD radicand {sq} below -{_NEG_CLAMP}")
    return float(np.sqrt(max(sq, 0.0)))


def mmd_k2(spec: KernelSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """MMD with the pointwise-squared kernel; equals the Schatten 2-norm
    of the covariance operator difference."""
    return mmd(kernel_square(spec), mu, nu)


def mmd_normalized(spec: KernelSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """MMD_k2 divided by the root-sum-of-squares of the operators' 2-norms."""
    k2 = kernel_square(spec)
    num = mmd(k2, mu, nu)

    def energy(m: DiscreteMeasure) -> float:
        w = m.weights
        return float(w @ kernel_matrix(k2, m.points, m.points) @ w)

    den = np.sqrt(energy(mu) + energy(nu))
    return float(num / den)


def kbw_distance(spec: KernelSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Kernel Bures-Wasserstein distance sqrt(2 - 2 F).

    The fidelity F is the nuclear norm of
    M = W_x^{1/2} K_xy W_y^{1/2}; its singular values come from the
    eigenvalues of the smaller of M^T M and M M^T, clipped at 0.
    """
    if not spec.unit_diagonal:
        raise KernelError("kbw_distance requires a unit-diagonal kernel")
    Kxy = kernel_matrix(spec, mu.points, nu.points)
    M = np.sqrt(mu.weights)[:, None] * Kxy * np.sqrt(nu.weights)[None, :]
    S = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    s2 = np.clip(np.linalg.eigvalsh(0.5 * (S + S.T)), 0.0, None)
    fidelity = min(float(np.sqrt(s2).sum()), 1.0)
    return float(np.sqrt(2.0 - 2.0 * fidelity))


def wasserstein1_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact 1-D Wasserstein-1 distance by CDF-difference integration."""
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("wasserstein1_1d supports dimension 1 only")
    x = np.concatenate([mu.points[:, 0], nu.points[:, 0]])
    dF = np.concatenate([mu.weights, -nu.weights])
    order = np.argsort(x, kind="stable")
    x, dF = x[order], dF[order]
    cdf_diff = np.cumsum(dF)[:-1]
    gaps = np.diff(x)
    return float(np.abs(cdf_diff) @ gaps)


@dataclass(frozen=True)
class Witness:
    """Evaluable optimal dual function f(x) = sum_i s_i (a_i(x))^2.

    a_i(x) = sum_k c_ik k(z_k, x) are the eigenfunction evaluations and
    s_i = sign(lambda_i), with 0 for numerically-zero eigenvalues.  For
    unit-diagonal kernels |f| <= 1 everywhere.
    """

    atoms: np.ndarray
    coeffs: np.ndarray
    signs: np.ndarray
    kernel: KernelSpec


def build_witness(
    spec: KernelSpec,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    tol: float = DEFAULT_TOL,
) -> Witness:
    """Witness of the kernel trace distance from the signed spectrum."""
    _warn_non_unit_diagonal(spec, "build_witness")
    atoms = merge_difference(mu, nu)
    if atoms.size == 0:
        return Witness(np.empty((0, mu.dim)), np.empty((0, 0)), np.empty(0), spec)
    return witness_from_spectrum(spec, signed_operator_spectrum(spec, atoms, tol))


def witness_from_spectrum(spec: KernelSpec, spectrum: SignedSpectrum) -> Witness:
    keep = ~spectrum.zero_flags
    signs = np.sign(spectrum.eigenvalues[keep])
    return Witness(spectrum.atoms.atoms, spectrum.coeffs[keep], signs, spec)


def witness_evaluate(w: Witness, x) -> float | np.ndarray:
    """Evaluate the witness at a point (d,) or at each row of an (n, d) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if w.atoms.shape[0] == 0:
        vals = np.zeros(X.shape[0])
        return float(vals[0]) if single else vals
    A = w.coeffs @ kernel_matrix(w.kernel, w.atoms, X)  # (kept, n)
    vals = w.signs @ (A**2)
    return float(vals[0]) if single else vals
