"""ZZ feature map V(phi) = {exp[i sum_k phi_k Z_k + phi_{n+k} Z_k Z_{k+1}] H^n}^M.

Angles: the first ``n`` entries multiply single-qubit Z_k, the remaining
``n - 1`` multiply the open-chain neighbour terms Z_k Z_{k+1}. The exponent is
diagonal in the computational basis, so each layer is a phase diagonal times
Hadamards on every qubit. For M > 1 the same angles are reused in every layer.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError
from .qmath import H, kron_all, matrix_exp_diagonal


@dataclass(frozen=True)
class FeatureMapConfig:
    n_qubits: int = 3
    layers: int = 1

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ShapeError("the ZZ feature map needs at least two qubits")
        if self.layers < 1:
            raise ShapeError("layers must be >= 1")

    @property
    def n_angles(self) -> int:
        return 2 * self.n_qubits - 1

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


@lru_cache(maxsize=None)
def z_signs(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of Pauli-Z eigenvalues; column 0 is qubit 1 (the MSB)."""
    idx = np.arange(2 ** n_qubits)
    bits = (idx[:, None] >> np.arange(n_qubits - 1, -1, -1)) & 1
    out = 1 - 2 * bits
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def phase_features(n_qubits: int) -> np.ndarray:
    """(2^n, 2n-1) matrix F with theta_b(phi) = (F @ phi)[b]."""
    z = z_signs(n_qubits)
    out = np.hstack([z, z[:, :-1] * z[:, 1:]]).astype(float)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _hadamard_all(n_qubits: int) -> np.ndarray:
    out = kron_all(*[H] * n_qubits)
    out.setflags(write=False)
    return out


def check_angles(cfg: FeatureMapConfig, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (cfg.n_angles,):
        raise ShapeError(f"expected {cfg.n_angles} angles for n={cfg.n_qubits}, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ShapeError("angles must be finite")
    return phi


def diagonal_phases(cfg: FeatureMapConfig, phi) -> np.ndarray:
    """theta_b(phi) for every basis index b."""
    return phase_features(cfg.n_qubits) @ check_angles(cfg, phi)


def build_feature_map(cfg: FeatureMapConfig, phi) -> np.ndarray:
    layer = matrix_exp_diagonal(diagonal_phases(cfg, phi)) @ _hadamard_all(cfg.n_qubits)
    return np.linalg.matrix_power(layer, cfg.layers)


def embed_state(cfg: FeatureMapConfig, phi) -> np.ndarray:
    """V(phi)|0...0>."""
    return build_feature_map(cfg, phi)[:, 0].copy()
