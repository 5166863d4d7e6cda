"""Separability diagnostics: class ensembles, trace distance, the Helstrom
lower bound on the empirical risk, and a depolarizing channel for
contractivity checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import embedder
from .data import Dataset
from .embedder import MlpParams
from .errors import DomainError, ShapeError
from .featuremap import FeatureMapConfig, embed_state
from .qmath import as_matrix, hermitian_eigenvalues, pure_density


@dataclass(frozen=True)
class ClassEnsembles:
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    m_plus: int
    m_minus: int


@dataclass(frozen=True)
class DepolarizingChannel:
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError("depolarizing strength must lie in [0, 1]")


def embedding_angles(params: MlpParams | None, features) -> np.ndarray:
    """Feature-map angles per row: g(x, w), or x itself for the raw ZZ map."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if params is None:
        return features
    return np.array([embedder.forward(params, x) for x in features])


def embedded_states(params: MlpParams | None, features, cfg: FeatureMapConfig) -> np.ndarray:
    return np.array([embed_state(cfg, phi) for phi in embedding_angles(params, features)])


def build_ensembles(params: MlpParams | None, data: Dataset, cfg: FeatureMapConfig) -> ClassEnsembles:
    data.require_both_labels()
    states = embedded_states(params, data.features, cfg)
    rhos = {}
    for y in (1, -1):
        s = states[data.labels == y]
        rhos[y] = s.T @ s.conj() / len(s)
    return ClassEnsembles(rhos[1], rhos[-1], int(np.sum(data.labels == 1)), int(np.sum(data.labels == -1)))


def trace_norm(a) -> float:
    return float(np.sum(np.abs(hermitian_eigenvalues(a))))


def trace_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"states differ in shape: {a.shape} vs {b.shape}")
    return 0.5 * trace_norm(a - b)


def risk_lower_bound(ens: ClassEnsembles) -> float:
    """1/2 - D_tr(p- rho-, p+ rho+) with the class priors inside the norm."""
    total = ens.m_plus + ens.m_minus
    p_plus, p_minus = ens.m_plus / total, ens.m_minus / total
    return 0.5 - 0.5 * trace_norm(p_plus * ens.rho_plus - p_minus * ens.rho_minus)


def apply_depolarizing(ch: DepolarizingChannel, rho) -> np.ndarray:
    rho = as_matrix(rho)
    dim = rho.shape[0]
    return (1.0 - ch.lam) * rho + ch.lam * np.eye(dim) / dim


def sample_cross_pairs(data: Dataset, n_pairs: int = 20, seed: int = 0) -> np.ndarray:
    """(n_pairs, 2, d) array; each pair holds one class -1 and one class +1 sample."""
    data.require_both_labels()
    rng = np.random.Generator(np.random.PCG64(seed))
    minus = rng.choice(np.flatnonzero(data.labels == -1), size=n_pairs)
    plus = rng.choice(np.flatnonzero(data.labels == 1), size=n_pairs)
    return np.stack([data.features[minus], data.features[plus]], axis=1)


def pair_trace_distances(params: MlpParams | None, eval_pairs, cfg: FeatureMapConfig) -> np.ndarray:
    eval_pairs = np.asarray(eval_pairs, dtype=float)
    if eval_pairs.ndim != 3 or eval_pairs.shape[1] != 2:
        raise DomainError(f"eval pairs must have shape (P, 2, d), got {eval_pairs.shape}")
    out = np.empty(len(eval_pairs))
    for k, (xa, xb) in enumerate(eval_pairs):
        sa, sb = embedded_states(params, np.stack([xa, xb]), cfg)
        out[k] = trace_distance(pure_density(sa), pure_density(sb))
    return out


def eval_trace_distance_over_training(checkpoints, eval_pairs, cfg: FeatureMapConfig) -> list[tuple[float, float]]:
    """(mean, std) of pairwise trace distances for each checkpoint.

    A ``None`` checkpoint stands for the raw ZZ embedding.
    """
    stats = []
    for params in checkpoints:
        d = pair_trace_distances(params, eval_pairs, cfg)
        stats.append((float(d.mean()), float(d.std())))
    return stats
