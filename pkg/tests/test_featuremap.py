import numpy as np
import pytest
from hypothesis import given, strategies as st

from nqe_dqc1.errors import ShapeError
from nqe_dqc1.featuremap import FeatureMapConfig, build_feature_map, embed_state
from nqe_dqc1.qmath import H, I2, Z

CFG = FeatureMapConfig(3, 1)
angles = st.lists(st.floats(-np.pi, np.pi), min_size=5, max_size=5).map(np.array)


def reference_map(phi, n=3, layers=1):
    """exp(i (sum phi_k Z_k + sum phi_{n+k} Z_k Z_{k+1})) H^n, built from Pauli strings."""
    def z_on(*qubits):
        out = np.eye(1)
        for q in range(n):
            out = np.kron(out, Z if q in qubits else I2)
        return out
    gen = sum(phi[k] * z_on(k) for k in range(n))
    gen = gen + sum(phi[n + k] * z_on(k, k + 1) for k in range(n - 1))
    hn = np.eye(1)
    for _ in range(n):
        hn = np.kron(hn, H)
    layer = np.diag(np.exp(1j * np.diag(gen))) @ hn
    return np.linalg.matrix_power(layer, layers)


def test_zero_angles_give_hadamards():
    hn = np.kron(np.kron(H, H), H)
    assert np.allclose(build_feature_map(CFG, np.zeros(5)), hn, atol=1e-15)


@given(angles)
def test_unitary(phi):
    v = build_feature_map(CFG, phi)
    assert np.max(np.abs(v @ v.conj().T - np.eye(8))) < 1e-10


def test_pi_on_first_qubit_is_global_sign():
    phi = np.array([np.pi, 0, 0, 0, 0])
    prod = build_feature_map(CFG, phi) @ build_feature_map(CFG, np.zeros(5)).conj().T
    assert np.max(np.abs(prod + np.eye(8))) < 1e-12


@given(angles, st.integers(1, 3))
def test_matches_pauli_string_construction(phi, layers):
    cfg = FeatureMapConfig(3, layers)
    assert np.max(np.abs(build_feature_map(cfg, phi) - reference_map(phi, 3, layers))) < 1e-12


def test_four_qubit_map_matches_reference(rng):
    phi = rng.uniform(-np.pi, np.pi, 7)
    assert np.allclose(build_feature_map(FeatureMapConfig(4, 1), phi), reference_map(phi, 4), atol=1e-12)


def test_zero_angles_give_uniform_state():
    assert np.allclose(embed_state(CFG, np.zeros(5)), np.full(8, 8**-0.5))


@given(angles)
def test_single_layer_amplitude_moduli(phi):
    psi = embed_state(CFG, phi)
    assert np.allclose(np.abs(psi), 8**-0.5, atol=1e-12)
    assert np.allclose(psi, reference_map(phi)[:, 0], atol=1e-12)


def test_norm_over_random_angles(rng):
    for layers in (1, 2):
        cfg = FeatureMapConfig(3, layers)
        for phi in rng.uniform(-np.pi, np.pi, (100, 5)):
            assert abs(np.linalg.norm(embed_state(cfg, phi)) - 1) < 1e-10


@pytest.mark.parametrize("phi", [np.zeros(4), np.zeros(6), np.array([0, 0, np.nan, 0, 0])])
def test_bad_angles(phi):
    with pytest.raises(ShapeError):
        build_feature_map(CFG, phi)


def test_bad_config():
    with pytest.raises(ShapeError):
        FeatureMapConfig(1, 1)
    with pytest.raises(ShapeError):
        FeatureMapConfig(3, 0)
