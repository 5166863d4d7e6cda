"""Two-layer, four-angle, two-CNOT classifier circuit on a 3-qubit register.

Layer 1 applies Ry(theta[0]) to qubit 2 and Ry(theta[1]) to qubit 3, layer 2
applies Rx(theta[2]) and Rx(theta[3]); each layer ends with CNOT(2 -> 3).
The prediction is f = <sigma_z> on qubit 3 and the label is sign(f) with
sign(0) = +1.

The second layer rotates about x because a circuit made only of Ry and CNOT
is a real matrix: it returns the same f for a state and its complex
conjugate, and an embedder that is odd in its input maps classes placed
symmetrically about the origin to (nearly) conjugate states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dqc1 import make_rng, sample_pm1
from .errors import DomainError, ShapeError
from .qmath import I2, Z, kron_all

N_QUBITS = 3
N_PARAMS = 4
SHIFT = np.pi / 2

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CNOT_23 = np.kron(I2, _CNOT)
OBSERVABLE = kron_all(I2, I2, Z)


@dataclass(frozen=True)
class PqcTrainConfig:
    iterations: int = 30
    batch_size: int = 10
    learning_rate: float = 0.5
    estimator: str = "exact"
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.batch_size < 1:
            raise DomainError("iterations and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise DomainError("learning_rate must be >= 0")
        if self.estimator not in ("exact", "sampled"):
            raise DomainError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "sampled" and (self.shots is None or self.shots < 1):
            raise DomainError("sampled estimation needs shots >= 1")


@dataclass(frozen=True)
class ClassifierOutput:
    f: float
    predicted_label: int


def ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


LAYER_GATES = (ry, rx)


def check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_PARAMS,) or not np.all(np.isfinite(theta)):
        raise ShapeError(f"theta must be {N_PARAMS} finite angles, got {theta!r}")
    return theta


def pqc_circuit(theta) -> np.ndarray:
    theta = check_theta(theta)
    u = np.eye(2**N_QUBITS, dtype=complex)
    for k, gate in enumerate(LAYER_GATES):
        layer = CNOT_23 @ kron_all(I2, gate(theta[2 * k]), gate(theta[2 * k + 1]))
        u = layer @ u
    return u


def _states(states) -> np.ndarray:
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    if states.shape[1] != 2**N_QUBITS:
        raise ShapeError(f"classifier expects {N_QUBITS}-qubit states, got dimension {states.shape[1]}")
    return states


def expectations(theta, states) -> np.ndarray:
    """f for every row of ``states``."""
    out = _states(states) @ pqc_circuit(theta).T
    return np.real(np.einsum("ni,i,ni->n", out.conj(), np.diag(OBSERVABLE).real, out))


def sign_label(f: float) -> int:
    return 1 if f >= 0 else -1


def classify(theta, embedded) -> ClassifierOutput:
    f = float(expectations(theta, embedded)[0])
    return ClassifierOutput(f, sign_label(f))


def _check_batch(states, labels):
    states = _states(states)
    labels = np.asarray(labels, dtype=int)
    if len(labels) == 0:
        raise DomainError("empty batch")
    if len(labels) != len(states):
        raise ShapeError("one label per state required")
    return states, labels


def loss_from_f(f, labels) -> float:
    return float(np.mean(0.5 * (1.0 - np.asarray(f) * labels)))


def pqc_loss(theta, states, labels, shots: int | None = None, rng: np.random.Generator | None = None) -> float:
    """L = mean of (1 - f_i y_i) / 2; with ``shots`` each f_i is a shot estimate."""
    states, labels = _check_batch(states, labels)
    f = expectations(theta, states)
    if shots is not None:
        rng = rng if rng is not None else make_rng(0)
        f = np.array([sample_pm1(v, shots, rng)[0] for v in f])
    return loss_from_f(f, labels)


def parameter_shift_grad(theta, states, labels, shots: int | None = None, rng=None) -> np.ndarray:
    """dL/dtheta_k = [L(theta_k + pi/2) - L(theta_k - pi/2)] / 2."""
    theta = check_theta(theta)
    grad = np.zeros(N_PARAMS)
    for k in range(N_PARAMS):
        e = np.zeros(N_PARAMS)
        e[k] = SHIFT
        grad[k] = 0.5 * (pqc_loss(theta + e, states, labels, shots, rng) - pqc_loss(theta - e, states, labels, shots, rng))
    return grad


def init_theta(seed: int) -> np.ndarray:
    return make_rng(seed).uniform(-np.pi, np.pi, size=N_PARAMS)


def train_pqc(states, labels, cfg: PqcTrainConfig = PqcTrainConfig(), theta0=None):
    """Gradient descent with parameter-shift gradients on random mini-batches.

    Returns (theta, per-iteration batch losses evaluated before each update).
    """
    states, labels = _check_batch(states, labels)
    if len(np.unique(labels)) < 2:
        raise DomainError("training data must contain both labels")
    rng = make_rng(cfg.seed)
    theta = init_theta(cfg.seed) if theta0 is None else check_theta(theta0).copy()
    shots = cfg.shots if cfg.estimator == "sampled" else None
    losses = []
    for _ in range(cfg.iterations):
        idx = rng.choice(len(labels), size=min(cfg.batch_size, len(labels)), replace=False)
        losses.append(pqc_loss(theta, states[idx], labels[idx], shots, rng))
        theta = theta - cfg.learning_rate * parameter_shift_grad(theta, states[idx], labels[idx], shots, rng)
    return theta, np.array(losses)


def predict(theta, states) -> tuple[np.ndarray, np.ndarray]:
    f = expectations(theta, states)
    return f, np.where(f >= 0, 1, -1)


def evaluate_accuracy(theta, states, labels) -> float:
    states, labels = _check_batch(states, labels)
    return float(np.mean(predict(theta, states)[1] == labels))
