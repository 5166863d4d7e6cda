"""One-clean-qubit estimation of Tr[V(phi1) V(phi2)^dagger] / 2^n.

The probe is the most significant qubit of an (n+1)-qubit register prepared
in |0><0| (x) I/2^n. The sequence H_1 . Vc(phi2)^dagger . Vc(phi1) . H_1, with
controlled maps acting on probe state |1>, leaves the probe with
<sigma_z> = Re hs and <sigma_y> = -Im hs, where hs = Tr[V1 V2^dagger]/2^n.

Sampling uses numpy's PCG64 bit generator seeded with an integer, which yields
the same stream on every platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .featuremap import FeatureMapConfig, build_feature_map
from .qmath import H, I2, Y, Z, adjoint, as_matrix, kron, normalized_trace

DEFAULT_SEED = 0


@dataclass(frozen=True)
class Dqc1Outcome:
    expectation_z: float
    expectation_y: float | None = None
    shots: int = 0
    std_error: float = 0.0


@dataclass(frozen=True)
class ShotPlan:
    epsilon: float
    failure_prob: float
    shots: int


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def hs_inner_exact(v1, v2) -> complex:
    """Normalized Hilbert-Schmidt overlap Tr(v1 v2^dagger) / dim."""
    v1, v2 = as_matrix(v1), as_matrix(v2)
    if v1.shape != v2.shape:
        raise ShapeError(f"unitaries differ in shape: {v1.shape} vs {v2.shape}")
    return normalized_trace(v1 @ adjoint(v2))


def controlled(u: np.ndarray) -> np.ndarray:
    """|0><0| (x) I + |1><1| (x) u, control on the leading qubit."""
    dim = u.shape[0]
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = np.eye(dim)
    out[dim:, dim:] = u
    return out


def build_dqc1_sequence(cfg: FeatureMapConfig, phi1, phi2) -> np.ndarray:
    v1 = build_feature_map(cfg, phi1)
    v2 = build_feature_map(cfg, phi2)
    h1 = kron(H, np.eye(cfg.dim))
    # right to left: H1, Vc(phi1), Vc(phi2)^dagger, H1
    return h1 @ adjoint(controlled(v2)) @ controlled(v1) @ h1


def initial_state(cfg: FeatureMapConfig) -> np.ndarray:
    probe = np.array([[1, 0], [0, 0]], dtype=complex)
    return kron(probe, np.eye(cfg.dim) / cfg.dim)


def dqc1_exact(cfg: FeatureMapConfig, phi1, phi2) -> Dqc1Outcome:
    u = build_dqc1_sequence(cfg, phi1, phi2)
    rho = u @ initial_state(cfg) @ adjoint(u)
    ez = np.trace(kron(Z, np.eye(cfg.dim)) @ rho).real
    ey = np.trace(kron(Y, np.eye(cfg.dim)) @ rho).real
    return Dqc1Outcome(float(np.clip(ez, -1.0, 1.0)), float(np.clip(ey, -1.0, 1.0)))


def sample_pm1(expectation: float, shots: int, rng: np.random.Generator) -> tuple[float, float]:
    """Mean and standard error of ``shots`` +/-1 draws with the given mean."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + expectation)))
    k = int(rng.binomial(shots, p_plus))
    mean = (2 * k - shots) / shots
    if shots == 1:
        return mean, 0.0
    # unbiased variance of the +/-1 sample
    var = max(0.0, 1.0 - mean * mean) * shots / (shots - 1)
    return mean, math.sqrt(var / shots)


def dqc1_sampled(cfg: FeatureMapConfig, phi1, phi2, shots: int, seed: int = DEFAULT_SEED) -> Dqc1Outcome:
    exact = dqc1_exact(cfg, phi1, phi2)
    mean, err = sample_pm1(exact.expectation_z, shots, make_rng(seed))
    return Dqc1Outcome(mean, None, shots, err)


def plan_shots(epsilon: float, failure_prob: float) -> ShotPlan:
    """Hoeffding budget for +/-1 outcomes: ceil(2 ln(2/p) / eps^2).

    This fixes the constant hidden in the O(log(1/p)/eps^2) repetition count.
    """
    if not (0.0 < epsilon <= 2.0):
        raise DomainError("epsilon must lie in (0, 2]")
    if not (0.0 < failure_prob < 1.0):
        raise DomainError("failure probability must lie in (0, 1)")
    shots = math.ceil(2.0 * math.log(2.0 / failure_prob) / epsilon**2)
    return ShotPlan(epsilon, failure_prob, max(1, shots))


def pair_seed(master_seed: int, index: int) -> int:
    """Deterministic per-pair seed derived from (master seed, pair index)."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])
