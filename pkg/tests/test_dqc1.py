import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nqe_dqc1 import dqc1
from nqe_dqc1.errors import DomainError
from nqe_dqc1.featuremap import FeatureMapConfig, build_feature_map
from nqe_dqc1.qmath import is_unitary

from conftest import random_unitary

CFG = FeatureMapConfig(3, 1)
angles = st.lists(st.floats(-np.pi, np.pi), min_size=5, max_size=5).map(np.array)
PI1 = np.array([np.pi, 0, 0, 0, 0])
ZERO = np.zeros(5)


def probe_expectations(u1, u2):
    """Probe <Z>, <Y> by explicit statevector averaging over the register basis."""
    dim = u1.shape[0]
    ez = ey = 0.0
    for j in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[j] = 1
        # after H, controlled-u1, controlled-u2^dagger: (|0>e + |1>u2^dag u1 e)/sqrt2, then H
        a, b = e, u2.conj().T @ u1 @ e
        top, bot = (a + b) / 2, (a - b) / 2
        ez += (np.vdot(top, top) - np.vdot(bot, bot)).real / dim
        ey += (2 * np.vdot(top, bot).imag) / dim
    return ez, ey


def test_hs_inner_self(rng):
    u = random_unitary(8, rng)
    assert abs(dqc1.hs_inner_exact(u, u) - 1) < 1e-12


def test_hs_inner_known_values():
    v0 = build_feature_map(CFG, ZERO)
    assert abs(dqc1.hs_inner_exact(build_feature_map(CFG, PI1), v0) - (-1)) < 1e-12
    half = np.array([np.pi / 2, 0, 0, 0, 0])
    assert abs(dqc1.hs_inner_exact(build_feature_map(CFG, half), v0)) < 1e-12


def test_sequence_unitary_and_trivial_for_equal_angles(rng):
    phi = rng.uniform(-np.pi, np.pi, 5)
    assert is_unitary(dqc1.build_dqc1_sequence(CFG, phi, phi))
    assert is_unitary(dqc1.build_dqc1_sequence(CFG, phi, rng.uniform(-np.pi, np.pi, 5)))
    assert dqc1.dqc1_exact(CFG, phi, phi).expectation_z == pytest.approx(1.0, abs=1e-12)


def test_exact_known_values():
    assert dqc1.dqc1_exact(CFG, PI1, ZERO).expectation_z == pytest.approx(-1.0, abs=1e-12)


def test_exact_matches_hs_over_random_pairs(rng):
    for _ in range(100):
        p1, p2 = rng.uniform(-np.pi, np.pi, (2, 5))
        hs = dqc1.hs_inner_exact(build_feature_map(CFG, p1), build_feature_map(CFG, p2))
        out = dqc1.dqc1_exact(CFG, p1, p2)
        assert abs(out.expectation_z - hs.real) < 1e-10
        # sign convention: the probe's <sigma_y> reads minus the imaginary part
        assert abs(out.expectation_y + hs.imag) < 1e-10


@settings(max_examples=25)
@given(angles, angles)
def test_exact_matches_statevector_oracle(p1, p2):
    ez, ey = probe_expectations(build_feature_map(CFG, p1), build_feature_map(CFG, p2))
    out = dqc1.dqc1_exact(CFG, p1, p2)
    assert abs(out.expectation_z - ez) < 1e-10
    assert abs(out.expectation_y - ey) < 1e-10


def test_multilayer_exact_matches_hs(rng):
    cfg = FeatureMapConfig(3, 2)
    p1, p2 = rng.uniform(-np.pi, np.pi, (2, 5))
    hs = dqc1.hs_inner_exact(build_feature_map(cfg, p1), build_feature_map(cfg, p2))
    assert abs(dqc1.dqc1_exact(cfg, p1, p2).expectation_z - hs.real) < 1e-10


def test_sampled_equal_angles_is_exact(rng):
    phi = rng.uniform(-np.pi, np.pi, 5)
    for shots in (1, 7, 1000):
        assert dqc1.dqc1_sampled(CFG, phi, phi, shots).expectation_z == 1.0


def test_sampled_zero_mean_concentrates():
    half = np.array([np.pi / 2, 0, 0, 0, 0])
    assert abs(dqc1.dqc1_sampled(CFG, half, ZERO, 10_000).expectation_z) < 0.05
    for seed in range(20):
        assert abs(dqc1.dqc1_sampled(CFG, half, ZERO, 10_000, seed).expectation_z) < 0.05


def test_sampled_std_error_shrinks(rng):
    p1, p2 = rng.uniform(-np.pi, np.pi, (2, 5))
    small = dqc1.dqc1_sampled(CFG, p1, p2, 100, 3)
    large = dqc1.dqc1_sampled(CFG, p1, p2, 10**6, 3)
    assert large.std_error < small.std_error
    assert large.shots == 10**6


def test_sampled_is_seed_deterministic(rng):
    p1, p2 = rng.uniform(-np.pi, np.pi, (2, 5))
    assert dqc1.dqc1_sampled(CFG, p1, p2, 500, 9) == dqc1.dqc1_sampled(CFG, p1, p2, 500, 9)


def test_sample_pm1_rejects_zero_shots():
    with pytest.raises(DomainError):
        dqc1.sample_pm1(0.3, 0, dqc1.make_rng(0))


def test_plan_shots_values():
    assert dqc1.plan_shots(0.1, 0.05).shots == math.ceil(2 * math.log(40) / 0.01) == 738
    assert dqc1.plan_shots(2.0, 0.5).shots == 1


@given(st.floats(0.01, 1.0), st.floats(0.001, 0.9))
def test_plan_shots_scaling(eps, p):
    base = dqc1.plan_shots(eps, p).shots
    halved = dqc1.plan_shots(eps / 2, p).shots
    # ceil() costs at most 4 shots of slack
    assert 4 * base - 4 <= halved <= 4 * base
    assert dqc1.plan_shots(eps, p / 2).shots >= base


@pytest.mark.parametrize("eps,p", [(0, 0.1), (2.5, 0.1), (0.1, 0), (0.1, 1)])
def test_plan_shots_domain(eps, p):
    with pytest.raises(DomainError):
        dqc1.plan_shots(eps, p)


def test_pair_seeds_distinct():
    seeds = {dqc1.pair_seed(0, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert dqc1.pair_seed(5, 3) == dqc1.pair_seed(5, 3) != dqc1.pair_seed(6, 3)
