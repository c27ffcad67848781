"""Particle gradient descent on kernel distances to a fixed target.

Two losses: the kernel trace distance itself (differentiated with a
frozen-witness envelope rule) and the squared MMD with the squared
kernel (closed-form V-statistic derivative).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelError, KernelSpec, kernel_grad_matrix, kernel_matrix, kernel_square
from .measures import DiscreteMeasure, make_rng, merge_difference
from .spectral import DEFAULT_TOL, signed_operator_spectrum

LOSSES = ("kt", "mmd_k2_squared")

_JITTER = 1e-9
_JITTER_SEED = 0x6A69747465  # fixed; collisions are rare and only need breaking


@dataclass(frozen=True)
class FlowConfig:
    kernel: KernelSpec
    loss: str = "kt"
    learning_rate: float = 0.005
    steps: int = 1000
    record_every: int = 100

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown flow loss {self.loss!r}")
        if not (self.learning_rate >= 0):
            raise ValueError("learning_rate must be nonnegative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    """Recorded flow snapshots: (step index, particle matrix, loss value)."""

    snapshots: list = field(default_factory=list)

    def add(self, step: int, particles: np.ndarray, loss: float):
        if self.snapshots and step <= self.snapshots[-1][0]:
            raise ValueError("snapshot steps must be strictly increasing")
        if not np.isfinite(loss):
            raise ValueError(f"non-finite loss {loss} at step {step}")
        self.snapshots.append((step, particles.copy(), float(loss)))

    @property
    def final_particles(self) -> np.ndarray:
        return self.snapshots[-1][1]

    @property
    def final_loss(self) -> float:
        return self.snapshots[-1][2]


def _deduplicated(particles: np.ndarray, target: DiscreteMeasure) -> np.ndarray:
    """Jitter particles that collide bitwise with each other or the target.

    Keeps the distinct-atom precondition of the spectral reduction; the
    1e-9 perturbation is far below any meaningful particle scale.
    """
    seen = {p.tobytes() for p in target.points}
    out = particles
    rng = None
    for j in range(out.shape[0]):
        key = out[j].tobytes()
        while key in seen:
            if rng is None:
                rng = make_rng(_JITTER_SEED)
                out = out.copy()
            out[j] = out[j] + rng.uniform(-_JITTER, _JITTER, size=out.shape[1])
            key = out[j].tobytes()
        seen.add(key)
    return out


def kt_flow_gradient(
    spec: KernelSpec,
    particles: np.ndarray,
    target: DiscreteMeasure,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Envelope gradient of the kernel trace distance in the particles.

    The spectrum is frozen (Danskin rule for the nuclear norm) and each
    particle moves along the witness gradient at its own position,
    grad f(x_j) = 2 sum_i sign(lambda_i) a_i(x_j) grad a_i(x_j), with
    numerically zero eigenvalues contributing nothing.  This is the
    first variation of the loss in the particle measure, i.e. the
    particle-flow velocity field, without the 1/n mass factor.
    """
    if not spec.differentiable:
        raise KernelError(f"flow gradient unsupported for {spec.family} kernel")
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    n, d = particles.shape
    atoms = merge_difference(DiscreteMeasure.uniform(particles), target)
    if atoms.size == 0:
        return np.zeros((n, d))
    particles = _deduplicated(particles, target)
    atoms = merge_difference(DiscreteMeasure.uniform(particles), target)
    spectrum = signed_operator_spectrum(spec, atoms, tol)
    keep = ~spectrum.zero_flags
    C = spectrum.coeffs[keep]
    signs = np.sign(spectrum.eigenvalues[keep])
    A = C @ kernel_matrix(spec, atoms.atoms, particles)  # a_i(x_j), (kept, n)
    E = C.T @ (signs[:, None] * A)  # (r, n)
    gK = kernel_grad_matrix(spec, atoms.atoms, particles)  # (r, n, d)
    return 2.0 * np.einsum("kj,kjd->jd", E, gK)


def mmd_k2_flow_gradient(
    spec: KernelSpec, particles: np.ndarray, target: DiscreteMeasure
) -> np.ndarray:
    """Velocity field of the squared-kernel MMD flow at each particle.

    Gradient of the first variation (m_mu - m_nu under kernel k^2), the
    same per-particle convention as the trace-distance flow.
    """
    if not spec.differentiable:
        raise KernelError(f"flow gradient unsupported for {spec.family} kernel")
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    n = particles.shape[0]
    k2 = kernel_square(spec)
    g_self = kernel_grad_matrix(k2, particles, particles)  # (n, n, d)
    g_tgt = kernel_grad_matrix(k2, target.points, particles)  # (m, n, d)
    return (1.0 / n) * g_self.sum(axis=0) - np.einsum(
        "t,tjd->jd", target.weights, g_tgt
    )


def flow_loss(
    config: FlowConfig, particles: np.ndarray, target: DiscreteMeasure
) -> float:
    from .distances import kt_distance, mmd_k2

    mu = DiscreteMeasure.uniform(np.atleast_2d(particles))
    if config.loss == "kt":
        return kt_distance(config.kernel, mu, target)
    return mmd_k2(config.kernel, mu, target) ** 2


def run_flow(
    config: FlowConfig, init: np.ndarray, target: DiscreteMeasure
) -> Trajectory:
    """Plain gradient descent x <- x - lr * grad, recording snapshots.

    Records step 0, every record_every-th step, and the final step.
    Aborts with a diagnostic on non-finite loss or gradient.
    """
    x = np.atleast_2d(np.asarray(init, dtype=float)).copy()
    traj = Trajectory()
    traj.add(0, x, flow_loss(config, x, target))
    for step in range(1, config.steps + 1):
        if config.loss == "kt":
            g = kt_flow_gradient(config.kernel, x, target)
        else:
            g = mmd_k2_flow_gradient(config.kernel, x, target)
        if not np.all(np.isfinite(g)):
            raise ArithmeticError(f"non-finite gradient at step {step}")
        x = x - config.learning_rate * g
        if step % config.record_every == 0 or step == config.steps:
            traj.add(step, x, flow_loss(config, x, target))
    return traj


def default_clouds(n: int = 100, seed: int = 0):
    """Seeded pair of Gaussian-blob clouds inside the unit square.

    Returns (init, target) point matrices of n 2-D points each.
    """
    rng = make_rng(seed)
    init = np.array([0.25, 0.25]) + 0.08 * rng.standard_normal((n, 2))
    target = np.array([0.75, 0.75]) + 0.08 * rng.standard_normal((n, 2))
    return init, target
