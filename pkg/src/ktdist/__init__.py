"""Kernel trace distance between discrete measures, with companion
kernel distances, dual witness functions, particle gradient flows and
rejection ABC."""

from .distances import (
    Witness,
    build_witness,
    kbw_distance,
    kt_distance,
    mmd,
    mmd_k2,
    mmd_normalized,
    wasserstein1_1d,
    witness_evaluate,
)
from .kernels import KernelSpec, energy, gaussian, kernel_eval, kernel_square, laplacian
from .measures import (
    DiscreteMeasure,
    SignedAtomList,
    make_rng,
    merge_difference,
    substream,
)
from .spectral import SignedSpectrum, signed_operator_spectrum

__all__ = [
    "DiscreteMeasure",
    "KernelSpec",
    "SignedAtomList",
    "SignedSpectrum",
    "Witness",
    "build_witness",
    "energy",
    "gaussian",
    "kbw_distance",
    "kernel_eval",
    "kernel_square",
    "kt_distance",
    "laplacian",
    "make_rng",
    "merge_difference",
    "mmd",
    "mmd_k2",
    "mmd_normalized",
    "signed_operator_spectrum",
    "substream",
    "wasserstein1_1d",
    "witness_evaluate",
]

__version__ = "0.1.0"
