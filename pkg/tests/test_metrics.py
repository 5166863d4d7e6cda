import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nqe_dqc1 import metrics
from nqe_dqc1.data import Dataset, synthetic_dataset
from nqe_dqc1.embedder import init_params
from nqe_dqc1.errors import DomainError, ShapeError
from nqe_dqc1.featuremap import FeatureMapConfig, embed_state
from nqe_dqc1.metrics import ClassEnsembles, DepolarizingChannel
from nqe_dqc1.qmath import PSD_TOL, hermitian_eigenvalues, pure_density

from conftest import random_state, random_unitary

CFG = FeatureMapConfig(3, 1)
seeds = st.integers(0, 2**32 - 1)
KET0 = np.array([1, 0])
KET1 = np.array([0, 1])
PLUS = np.array([1, 1]) / np.sqrt(2)


def random_density(dim, rng, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_one_sample_per_class_gives_projectors(rng):
    d = Dataset(rng.normal(size=(2, 5)), [1, -1])
    ens = metrics.build_ensembles(None, d, CFG)
    for rho in (ens.rho_plus, ens.rho_minus):
        assert np.allclose(rho @ rho, rho, atol=1e-12)
        assert np.trace(rho).real == pytest.approx(1.0)
    assert (ens.m_plus, ens.m_minus) == (1, 1)


def test_duplicate_sample_same_ensemble(rng):
    x = rng.normal(size=(2, 5))
    one = metrics.build_ensembles(None, Dataset(x, [1, -1]), CFG)
    dup = metrics.build_ensembles(None, Dataset(np.vstack([x, x[:1]]), [1, -1, 1]), CFG)
    assert np.allclose(one.rho_plus, dup.rho_plus, atol=1e-14)


def test_random_ensembles_are_states(rng):
    d = Dataset(rng.normal(size=(20, 5)), [1] * 10 + [-1] * 10)
    ens = metrics.build_ensembles(init_params((5, 8, 5), seed=1), d, CFG)
    for rho in (ens.rho_plus, ens.rho_minus):
        assert abs(np.trace(rho) - 1) < 1e-10
        assert hermitian_eigenvalues(rho)[0] > -PSD_TOL


def test_single_class_rejected(rng):
    with pytest.raises(DomainError):
        metrics.build_ensembles(None, Dataset(rng.normal(size=(3, 5)), [1, 1, 1]), CFG)


def test_trace_distance_known_values():
    r0 = pure_density(KET0)
    assert metrics.trace_distance(r0, r0) == pytest.approx(0, abs=1e-15)
    assert metrics.trace_distance(r0, pure_density(KET1)) == pytest.approx(1.0, abs=1e-12)
    expected = np.sqrt(1 - abs(np.vdot(KET0, PLUS)) ** 2)
    assert metrics.trace_distance(r0, pure_density(PLUS)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.70711, abs=1e-5)


def test_trace_distance_shape_mismatch():
    with pytest.raises(ShapeError):
        metrics.trace_distance(np.eye(2) / 2, np.eye(4) / 4)


@given(seeds)
@settings(max_examples=30)
def test_pure_state_formula(seed):
    r = np.random.default_rng(seed)
    a, b = random_state(8, r), random_state(8, r)
    expected = np.sqrt(1 - abs(np.vdot(a, b)) ** 2)
    assert abs(metrics.trace_distance(pure_density(a), pure_density(b)) - expected) < 1e-9


@given(seeds)
@settings(max_examples=30)
def test_metric_axioms(seed):
    r = np.random.default_rng(seed)
    a, b, c = (random_density(8, r, rank=3) for _ in range(3))
    ab, ba = metrics.trace_distance(a, b), metrics.trace_distance(b, a)
    assert ab == ba
    assert ab <= metrics.trace_distance(a, c) + metrics.trace_distance(c, b) + 1e-9
    assert ab > 1e-6
    assert metrics.trace_distance(a, a) < 1e-12


@given(seeds)
@settings(max_examples=30)
def test_unitary_invariance(seed):
    r = np.random.default_rng(seed)
    a, b, u = random_density(8, r), random_density(8, r), random_unitary(8, r)
    rotated = metrics.trace_distance(u @ a @ u.conj().T, u @ b @ u.conj().T)
    assert abs(rotated - metrics.trace_distance(a, b)) < 1e-9


def test_risk_bound_identical_ensembles(rng):
    rho = random_density(8, rng)
    assert metrics.risk_lower_bound(ClassEnsembles(rho, rho, 5, 5)) == pytest.approx(0.5, abs=1e-12)


def test_risk_bound_orthogonal_states():
    e = np.eye(8)
    ens = ClassEnsembles(pure_density(e[0]), pure_density(e[3]), 4, 4)
    assert metrics.risk_lower_bound(ens) == pytest.approx(0.0, abs=1e-12)


def test_risk_bound_unbalanced_identical():
    # with priors inside the norm: 1/2 - 1/2 |p+ - p-| = min(p+, p-)
    rho = np.eye(8) / 8
    assert metrics.risk_lower_bound(ClassEnsembles(rho, rho, 3, 1)) == pytest.approx(0.25)


@given(seeds)
@settings(max_examples=30)
def test_risk_bound_range(seed):
    r = np.random.default_rng(seed)
    ens = ClassEnsembles(random_density(8, r, 2), random_density(8, r, 2), 6, 6)
    assert -1e-12 <= metrics.risk_lower_bound(ens) <= 0.5 + 1e-12


def test_depolarizing_endpoints(rng):
    rho = random_density(8, rng)
    assert np.array_equal(metrics.apply_depolarizing(DepolarizingChannel(0.0), rho), rho)
    assert np.allclose(metrics.apply_depolarizing(DepolarizingChannel(1.0), rho), np.eye(8) / 8)


def test_depolarizing_domain():
    with pytest.raises(DomainError):
        DepolarizingChannel(1.5)


@given(seeds, st.floats(0, 1))
@settings(max_examples=30)
def test_depolarizing_preserves_trace(seed, lam):
    rho = random_density(8, np.random.default_rng(seed))
    out = metrics.apply_depolarizing(DepolarizingChannel(lam), rho)
    assert abs(np.trace(out) - 1) < 1e-12


@given(seeds, st.floats(1e-3, 1.0))
@settings(max_examples=40)
def test_depolarizing_contracts_strictly(seed, lam):
    r = np.random.default_rng(seed)
    a, b = random_density(8, r), random_density(8, r)
    ch = DepolarizingChannel(lam)
    before = metrics.trace_distance(a, b)
    after = metrics.trace_distance(metrics.apply_depolarizing(ch, a), metrics.apply_depolarizing(ch, b))
    assert after <= before + 1e-10
    assert after < before
    assert after == pytest.approx((1 - lam) * before, abs=1e-9)


def test_identical_pair_distance_zero():
    d = synthetic_dataset(5, 2.0)
    x = d.features[0]
    pairs = np.stack([np.stack([x, x])])
    assert metrics.pair_trace_distances(None, pairs, CFG)[0] < 1e-12


def test_cross_pairs_have_one_of_each():
    d = synthetic_dataset(10, 4.0, seed=2)
    pairs = metrics.sample_cross_pairs(d, 20, seed=0)
    assert pairs.shape == (20, 2, 5)
    lookup = {tuple(f): y for f, y in zip(d.features, d.labels)}
    for a, b in pairs:
        assert (lookup[tuple(a)], lookup[tuple(b)]) == (-1, 1)


def test_eval_pairs_shape_checked():
    with pytest.raises(DomainError):
        metrics.pair_trace_distances(None, np.zeros((3, 5)), CFG)


def test_embedded_states_match_feature_map(rng):
    x = rng.normal(size=(3, 5))
    states = metrics.embedded_states(None, x, CFG)
    assert np.allclose(states[1], embed_state(CFG, x[1]))


def test_untrained_checkpoint_low_and_final_high(trained_nqe, mnist_splits):
    _, trace = trained_nqe
    for part in mnist_splits:
        pairs = metrics.sample_cross_pairs(part, 20, seed=0)
        (first, _), (last, _) = metrics.eval_trace_distance_over_training(
            [trace.checkpoints[0], trace.checkpoints[-1]], pairs, CFG)
        assert first < 0.5
        assert last >= 0.85


def test_raw_zz_single_pairs_already_far_apart(mnist_splits):
    # single 8-dim pure states from distinct images are nearly orthogonal
    pairs = metrics.sample_cross_pairs(mnist_splits[0], 20, seed=0)
    mean, _ = metrics.eval_trace_distance_over_training([None], pairs, CFG)[0]
    assert mean > 0.85
