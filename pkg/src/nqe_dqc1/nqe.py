"""Neural quantum embedding training driven by one-clean-qubit overlaps.

For a pair (x_i, x_j) the loss term is (hs - (1 + y_i y_j)/2)^2, with
hs = Re Tr[V(g(x_i)) V(g(x_j))^dagger] / 2^n as read from the probe qubit.
A batch loss is the plain sum over its pairs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import embedder
from .data import Dataset
from .dqc1 import dqc1_exact, dqc1_sampled, hs_inner_exact, make_rng, pair_seed
from .embedder import DEFAULT_LAYER_SIZES, MlpParams
from .errors import DomainError
from .featuremap import FeatureMapConfig, build_feature_map, check_angles

FD_STEP = 1e-5
MIN_PAIRS_PER_KIND = 3


@dataclass
class PairBatch:
    xi: np.ndarray  # (P, d)
    xj: np.ndarray
    yi: np.ndarray  # (P,) of +/-1
    yj: np.ndarray

    def __post_init__(self):
        for name in ("yi", "yj"):
            y = np.asarray(getattr(self, name), dtype=int)
            if not np.all(np.isin(y, (-1, 1))):
                raise DomainError("pair labels must be -1 or +1")
            setattr(self, name, y)
        self.xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        self.xj = np.atleast_2d(np.asarray(self.xj, dtype=float))

    def __len__(self) -> int:
        return len(self.yi)


@dataclass(frozen=True)
class NqeTrainConfig:
    iterations: int = 15
    batch_pairs: int = 10
    learning_rate: float = 0.02
    optimizer: str = "adam"  # "adam" or "sgd"
    beta1: float = 0.0
    beta2: float = 0.999
    adam_eps: float = 1e-8
    estimator: str = "exact"  # "exact" or "sampled"
    shots: int | None = None
    sampled_gradient: bool = False
    seed: int = 0
    layer_sizes: tuple[int, ...] = DEFAULT_LAYER_SIZES
    init_output_gain: float = 0.3
    feature_map: FeatureMapConfig = field(default_factory=FeatureMapConfig)

    def __post_init__(self):
        if self.iterations < 1 or self.batch_pairs < 1:
            raise DomainError("iterations and batch_pairs must be >= 1")
        if self.learning_rate < 0:
            raise DomainError("learning_rate must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise DomainError(f"unknown optimizer {self.optimizer!r}")
        if self.estimator not in ("exact", "sampled"):
            raise DomainError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "sampled" and (self.shots is None or self.shots < 1):
            raise DomainError("sampled estimation needs shots >= 1")
        if self.layer_sizes[-1] != self.feature_map.n_angles:
            raise DomainError(f"embedder output size must be {self.feature_map.n_angles}")


@dataclass
class NqeRecord:
    iteration: int
    loss: float  # summed over the batch
    mean_hs_same: float
    mean_hs_diff: float
    wall_time: float
    batch_pairs: int

    @property
    def loss_per_pair(self) -> float:
        return self.loss / self.batch_pairs


@dataclass
class NqeTrace:
    records: list[NqeRecord] = field(default_factory=list)
    checkpoints: list[MlpParams] = field(default_factory=list)  # initial + one per iteration

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def to_csv(self) -> str:
        lines = ["iteration,loss,mean_hs_same,mean_hs_diff"]
        for r in self.records:
            lines.append(f"{r.iteration},{r.loss_per_pair!r},{r.mean_hs_same!r},{r.mean_hs_diff!r}")
        return "\n".join(lines) + "\n"


def target(y_i: int, y_j: int) -> float:
    return 0.5 * (1 + y_i * y_j)


def pair_loss(hs_real: float, y_i: int, y_j: int) -> float:
    return (hs_real - target(y_i, y_j)) ** 2


def hs_real(cfg: FeatureMapConfig, phi1, phi2) -> float:
    return hs_inner_exact(build_feature_map(cfg, phi1), build_feature_map(cfg, phi2)).real


def frobenius_distance_sq(cfg: FeatureMapConfig, phi1, phi2) -> float:
    """||V1 - V2||_F^2 expressed through the overlap: 2 d (1 - Re hs), d = 2^n.

    Minimizing L_NQE on different-label pairs therefore maximizes this distance.
    """
    return 2.0 * cfg.dim * (1.0 - hs_real(cfg, phi1, phi2))


def estimate_hs(cfg: FeatureMapConfig, phi1, phi2, shots: int | None = None, seed: int = 0) -> float:
    if shots is None:
        return dqc1_exact(cfg, phi1, phi2).expectation_z
    return dqc1_sampled(cfg, phi1, phi2, shots, seed).expectation_z


def batch_loss(params: MlpParams, batch: PairBatch, cfg: FeatureMapConfig, shots: int | None = None, seed: int = 0) -> float:
    total = 0.0
    for k in range(len(batch)):
        phi_i = embedder.forward(params, batch.xi[k])
        phi_j = embedder.forward(params, batch.xj[k])
        hs = estimate_hs(cfg, phi_i, phi_j, shots, pair_seed(seed, k))
        total += pair_loss(hs, batch.yi[k], batch.yj[k])
    return total


def hs_grad_wrt_angles(cfg: FeatureMapConfig, phi1, phi2, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Central differences of Re hs w.r.t. each angle of both arguments."""
    phi1, phi2 = check_angles(cfg, phi1), check_angles(cfg, phi2)
    g1, g2 = np.zeros_like(phi1), np.zeros_like(phi2)
    for k in range(len(phi1)):
        e = np.zeros_like(phi1)
        e[k] = h
        g1[k] = (hs_real(cfg, phi1 + e, phi2) - hs_real(cfg, phi1 - e, phi2)) / (2 * h)
        g2[k] = (hs_real(cfg, phi1, phi2 + e) - hs_real(cfg, phi1, phi2 - e)) / (2 * h)
    return g1, g2


def loss_grad_wrt_angles(phi1, phi2, y_i: int, y_j: int, cfg: FeatureMapConfig, hs: float | None = None):
    """d(pair_loss)/d(phi1), d(pair_loss)/d(phi2).

    ``hs`` overrides the overlap used in the chain factor 2 (hs - target),
    which is how shot-noise gradients are formed; by default it is exact.
    """
    if hs is None:
        hs = hs_real(cfg, phi1, phi2)
    g1, g2 = hs_grad_wrt_angles(cfg, phi1, phi2)
    chain = 2.0 * (hs - target(y_i, y_j))
    return chain * g1, chain * g2


def batch_loss_and_grad(params: MlpParams, batch: PairBatch, cfg: FeatureMapConfig, shots: int | None = None,
                        seed: int = 0, sampled_gradient: bool = False):
    """Summed loss, flat parameter gradient and per-pair overlap estimates."""
    grad = np.zeros(params.flat().size)
    total = 0.0
    overlaps = np.zeros(len(batch))
    for k in range(len(batch)):
        xi, xj, yi, yj = batch.xi[k], batch.xj[k], batch.yi[k], batch.yj[k]
        phi_i = embedder.forward(params, xi)
        phi_j = embedder.forward(params, xj)
        hs = estimate_hs(cfg, phi_i, phi_j, shots, pair_seed(seed, k))
        overlaps[k] = hs
        total += pair_loss(hs, yi, yj)
        d_i, d_j = loss_grad_wrt_angles(phi_i, phi_j, yi, yj, cfg, hs if sampled_gradient else None)
        grad += embedder.backward(params, xi, d_i).flat()
        grad += embedder.backward(params, xj, d_j).flat()
    return total, grad, overlaps


def sample_pairs(data: Dataset, n_pairs: int, rng: np.random.Generator) -> PairBatch:
    """Ordered pairs drawn with replacement, with at least MIN_PAIRS_PER_KIND
    same-label and different-label pairs (fewer when the batch is small)."""
    data.require_both_labels()
    by_label = {y: np.flatnonzero(data.labels == y) for y in (-1, 1)}
    n_kind = min(MIN_PAIRS_PER_KIND, n_pairs // 2)
    kinds = ["same"] * n_kind + ["diff"] * n_kind + ["any"] * (n_pairs - 2 * n_kind)
    kinds = [kinds[i] for i in rng.permutation(n_pairs)]
    ii, jj = [], []
    for kind in kinds:
        i = int(rng.integers(len(data)))
        yi = data.labels[i]
        if kind == "same":
            j = int(rng.choice(by_label[yi]))
        elif kind == "diff":
            j = int(rng.choice(by_label[-yi]))
        else:
            j = int(rng.integers(len(data)))
        ii.append(i)
        jj.append(j)
    return PairBatch(data.features[ii], data.features[jj], data.labels[ii], data.labels[jj])


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m, self.v = np.zeros_like(theta), np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, theta, grad):
        return theta - self.lr * grad


def train_nqe(data: Dataset, cfg: NqeTrainConfig = NqeTrainConfig(), params: MlpParams | None = None):
    """Run the NQE loop; returns (trained params, trace with checkpoints)."""
    data.require_both_labels()
    fmap = cfg.feature_map
    if params is None:
        params = embedder.init_params(cfg.layer_sizes, cfg.seed, cfg.init_output_gain)
    rng = make_rng(cfg.seed)
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps) if cfg.optimizer == "adam" else Sgd(cfg.learning_rate)
    shots = cfg.shots if cfg.estimator == "sampled" else None
    trace = NqeTrace(checkpoints=[params.copy()])
    for it in range(1, cfg.iterations + 1):
        start = time.perf_counter()
        batch = sample_pairs(data, cfg.batch_pairs, rng)
        loss, grad, overlaps = batch_loss_and_grad(params, batch, fmap, shots, pair_seed(cfg.seed, it),
                                                   cfg.sampled_gradient)
        same = batch.yi == batch.yj
        params = params.with_flat(opt.step(params.flat(), grad))
        trace.checkpoints.append(params.copy())
        trace.records.append(NqeRecord(
            iteration=it,
            loss=float(loss),
            mean_hs_same=float(overlaps[same].mean()) if same.any() else float("nan"),
            mean_hs_diff=float(overlaps[~same].mean()) if (~same).any() else float("nan"),
            wall_time=time.perf_counter() - start,
            batch_pairs=len(batch),
        ))
    return params, trace
