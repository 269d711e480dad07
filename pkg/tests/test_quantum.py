import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapse_rng import oracle
from collapse_rng.quantum import (
    KET_ONE,
    KET_PLUS,
    KET_ZERO,
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    DimensionError,
    Distribution,
    InvariantError,
    Measurement,
    MeasurementKind,
    collision_entropy,
    collision_uncertainty,
    dephase,
    kl_divergence,
    lueders_channel,
    operator_sqrt,
    outcome_distribution,
    overlap_factor,
    overlap_matrix,
    realized_instrument,
    relative_entropy_to_dephased,
    renyi_half_entropy,
    rotated_qubit_basis,
    shannon_entropy,
    trace_distance,
    tv_distance,
    von_neumann_entropy,
)

HALF = DensityMatrix.maximally_mixed(2)
seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 8)


def theta_for_overlap(c):
    return 2 * math.acos(math.sqrt(c))


# -- value types ----------------------------------------------------------------


def test_density_matrix_rejects_bad_input():
    with pytest.raises(InvariantError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(InvariantError):
        DensityMatrix(np.eye(2))
    with pytest.raises(InvariantError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvariantError):
        DensityMatrix(np.eye(9) / 9)


def test_measurement_invariants():
    with pytest.raises(InvariantError):
        Measurement((np.diag([1, 0]), np.diag([0, 0.5])))
    with pytest.raises(InvariantError):
        Measurement((np.diag([0.5, 0.5]), np.diag([0.5, 0.5])), MeasurementKind.PROJECTIVE)
    with pytest.raises(InvariantError):
        Measurement(SIGMA_Z.effects, MeasurementKind.RANK_ONE_PROJECTIVE)
    assert SIGMA_X.kind is MeasurementKind.RANK_ONE_PROJECTIVE


def test_distribution_clamps_tiny_negatives():
    d = Distribution([1 + 5e-13, -5e-13])
    assert d.probs[1] == 0.0
    with pytest.raises(InvariantError):
        Distribution([0.6, 0.6])


# -- outcome_distribution ---------------------------------------------------------


def test_outcome_distribution_eigenstate():
    assert outcome_distribution(SIGMA_Z, KET_ZERO).probs.tolist() == [1.0, 0.0]


def test_outcome_distribution_plus_is_uniform():
    np.testing.assert_allclose(outcome_distribution(SIGMA_Z, KET_PLUS).probs, [0.5, 0.5], atol=1e-12)


def test_outcome_distribution_bloch_vector():
    # hand expansion: rho = (I + 0.3 X + 0.4 Z)/2 has diagonal ((1+0.4)/2, (1-0.4)/2)
    rho = DensityMatrix.from_bloch([0.3, 0, 0.4])
    np.testing.assert_allclose(outcome_distribution(SIGMA_Z, rho).probs, [0.7, 0.3], atol=1e-12)


def test_outcome_distribution_dimension_mismatch():
    with pytest.raises(DimensionError):
        outcome_distribution(SIGMA_Z, DensityMatrix.maximally_mixed(3))


# -- operator_sqrt --------------------------------------------------------------


def test_operator_sqrt_examples():
    np.testing.assert_allclose(operator_sqrt(np.eye(3)), np.eye(3), atol=1e-12)
    proj = SIGMA_X.effects[0]
    np.testing.assert_allclose(operator_sqrt(proj), proj, atol=1e-12)
    np.testing.assert_allclose(operator_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)


def test_operator_sqrt_rejects():
    with pytest.raises(InvariantError):
        operator_sqrt(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvariantError):
        operator_sqrt(np.diag([1.0, -1e-6]))
    # rounding-level negatives are clamped
    assert np.allclose(operator_sqrt(np.diag([1.0, -1e-10])), np.diag([1.0, 0.0]))


@settings(max_examples=200, deadline=None)
@given(dims, seeds)
def test_operator_sqrt_squares_back(dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = x @ x.conj().T
    r = operator_sqrt(m)
    assert np.max(np.abs(r - r.conj().T)) <= 1e-9
    assert np.linalg.eigvalsh(r)[0] >= -1e-9
    assert np.max(np.abs(r @ r - m)) <= 1e-8 * max(1.0, np.max(np.abs(m)))


# -- channels -------------------------------------------------------------------


def test_lueders_examples():
    np.testing.assert_allclose(lueders_channel(SIGMA_Z, KET_PLUS).op, np.eye(2) / 2, atol=1e-12)
    np.testing.assert_allclose(lueders_channel(SIGMA_Z, KET_ZERO).op, KET_ZERO.op, atol=1e-12)
    rho = oracle.random_state(3, 2, seed=4)
    np.testing.assert_allclose(lueders_channel(Measurement.trivial(3), rho).op, rho.op, atol=1e-12)


def test_lueders_trace_and_positivity_many_instances():
    rng = np.random.default_rng(2024)
    for i in range(10_000):
        dim = int(rng.integers(2, 9))
        rho = oracle.random_state(dim, int(rng.integers(1, dim + 1)), seed=(1, i))
        m = oracle.random_measurement(dim, int(rng.integers(1, 5)), "general", seed=(2, i))
        out = lueders_channel(m, rho)  # construction validates Hermiticity and PSD
        assert abs(np.trace(out.op).real - 1) <= 1e-9


def test_realized_instrument_examples():
    eye = np.eye(2)
    np.testing.assert_allclose(realized_instrument(SIGMA_Z, [eye, eye], KET_PLUS).op, np.eye(2) / 2, atol=1e-12)
    # U_1 = sigma_x maps the collapsed |1> onto |0>
    sx = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(realized_instrument(SIGMA_Z, [eye, sx], KET_ONE).op, KET_ZERO.op, atol=1e-12)
    np.testing.assert_allclose(realized_instrument(SIGMA_Z, [eye, eye], KET_ONE).op, KET_ONE.op, atol=1e-12)


def test_realized_instrument_errors():
    with pytest.raises(InvariantError):
        realized_instrument(SIGMA_Z, [np.eye(2)], KET_PLUS)
    with pytest.raises(InvariantError):
        realized_instrument(SIGMA_Z, [np.eye(2), 2 * np.eye(2)], KET_PLUS)


def test_dephase_examples():
    np.testing.assert_allclose(dephase(SIGMA_Z, KET_PLUS).op, np.eye(2) / 2, atol=1e-12)
    diag = DensityMatrix(np.diag([0.2, 0.3, 0.5]))
    basis = Measurement.from_basis(np.eye(3))
    np.testing.assert_allclose(dephase(basis, diag).op, diag.op, atol=1e-12)
    with pytest.raises(InvariantError):
        dephase(Measurement.trivial(2), KET_PLUS)


@settings(max_examples=100, deadline=None)
@given(dims, seeds)
def test_dephase_idempotent_and_relative_entropy_identity(dim, seed):
    rho = oracle.random_state(dim, 1 + seed % dim, seed=seed)
    basis = oracle.random_measurement(dim, dim, "rank_one", seed=seed + 1)
    once = dephase(basis, rho)
    np.testing.assert_allclose(dephase(basis, once).op, once.op, atol=1e-12)
    assert abs(np.trace(once.op).real - 1) <= 1e-9
    # S(rho || Delta(rho)) = H(diag) - S(rho)
    diag = outcome_distribution(basis, rho)
    direct = relative_entropy_to_dephased(rho, basis)
    assert abs(direct - (shannon_entropy(diag) - von_neumann_entropy(rho))) <= 1e-8


# -- distances ------------------------------------------------------------------


def test_trace_distance_examples():
    assert trace_distance(KET_ZERO, KET_ONE) == pytest.approx(1.0, abs=1e-12)
    assert trace_distance(KET_PLUS, KET_PLUS) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(KET_PLUS, HALF) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(dims, seeds)
def test_trace_distance_is_a_metric(dim, seed):
    a, b, c = (oracle.random_state(dim, 1 + (seed + k) % dim, seed=(seed, k)) for k in range(3))
    assert trace_distance(a, b) == trace_distance(b, a)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-9


@settings(max_examples=200, deadline=None)
@given(dims, seeds, st.integers(2, 5))
def test_data_processing(dim, seed, k):
    a, b = (oracle.random_state(dim, 1 + (seed + j) % dim, seed=(seed, j)) for j in range(2))
    m = oracle.random_measurement(dim, k, "general", seed=(seed, 9))
    assert trace_distance(a, b) >= tv_distance(outcome_distribution(m, a), outcome_distribution(m, b)) - 1e-9


def test_tv_distance_examples():
    assert tv_distance(Distribution([1, 0]), Distribution([0.5, 0.5])) == pytest.approx(0.5)
    assert tv_distance(Distribution([0.3, 0.7]), Distribution([0.3, 0.7])) == 0.0
    assert tv_distance(Distribution([1, 0]), Distribution([0, 1])) == 1.0
    with pytest.raises(DimensionError):
        tv_distance(Distribution([1, 0]), Distribution([1, 0, 0]))


# -- entropies ------------------------------------------------------------------


def test_shannon_entropy_examples():
    assert shannon_entropy(Distribution([0.5, 0.5])) == pytest.approx(1.0)
    assert shannon_entropy(Distribution([1, 0])) == 0.0
    assert shannon_entropy(Distribution([0.75, 0.25])) == pytest.approx(0.811278124459133, abs=1e-12)


def test_collision_uncertainty_examples():
    assert collision_uncertainty(Distribution([0.5, 0.5])) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    assert collision_uncertainty(Distribution([1, 0])) == 0.0
    p = 0.9
    assert collision_uncertainty(Distribution([p, 1 - p])) == pytest.approx(math.sqrt(2 * p * (1 - p)), abs=1e-12)
    assert collision_uncertainty(Distribution([p, 1 - p])) == pytest.approx(0.424264068711929, abs=1e-12)
    # H_2 = -log2(sum p^2)
    assert collision_entropy(Distribution([p, 1 - p])) == pytest.approx(-math.log2(0.82), abs=1e-12)


def test_renyi_half_examples():
    assert renyi_half_entropy(Distribution([1, 0])) == 0.0
    assert renyi_half_entropy(Distribution([0.5, 0.5])) == pytest.approx(1.0, abs=1e-12)
    # 2 log2(sqrt(3)/2 + 1/2), evaluated at 30 digits with mpmath
    assert renyi_half_entropy(Distribution([0.75, 0.25])) == pytest.approx(0.899968626952992, abs=1e-12)


def test_kl_examples():
    assert kl_divergence(Distribution([1, 0]), Distribution([0.5, 0.5])) == pytest.approx(1.0)
    q = Distribution([0.2, 0.3, 0.5])
    assert kl_divergence(q, q) == 0.0
    assert kl_divergence(Distribution([1, 0]), Distribution([0, 1])) == math.inf
    with pytest.raises(DimensionError):
        kl_divergence(Distribution([1, 0]), Distribution([1, 0, 0]))


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 6), seeds)
def test_gibbs_inequality(k, seed):
    rng = np.random.default_rng(seed)
    p = Distribution(oracle.simplex_weights(k, rng))
    q = Distribution(oracle.simplex_weights(k, rng))
    kl = kl_divergence(p, q)
    assert kl >= 0
    if tv_distance(p, q) > 1e-6:
        assert kl > 0
    assert kl_divergence(p, p) <= 1e-12


def test_relative_entropy_to_dephased_examples():
    assert relative_entropy_to_dephased(KET_PLUS, SIGMA_Z) == pytest.approx(1.0, abs=1e-10)
    diag = DensityMatrix(np.diag([0.6, 0.4]))
    assert relative_entropy_to_dephased(diag, SIGMA_Z) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy_to_dephased(KET_ZERO, SIGMA_Z) == pytest.approx(0.0, abs=1e-12)


# -- overlaps -------------------------------------------------------------------


def test_overlap_matrix_examples():
    np.testing.assert_allclose(overlap_matrix(SIGMA_Z, SIGMA_Z), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(overlap_matrix(SIGMA_Z, SIGMA_X), np.full((2, 2), 0.5), atol=1e-12)
    b = rotated_qubit_basis(theta_for_overlap(0.75))
    np.testing.assert_allclose(overlap_matrix(SIGMA_Z, b), [[0.75, 0.25], [0.25, 0.75]], atol=1e-12)
    with pytest.raises(InvariantError):
        overlap_matrix(SIGMA_Z, Measurement.trivial(2))


@settings(max_examples=100, deadline=None)
@given(dims, seeds)
def test_overlap_matrix_doubly_stochastic(dim, seed):
    a = oracle.random_measurement(dim, dim, "rank_one", seed=(seed, 0))
    b = oracle.random_measurement(dim, dim, "rank_one", seed=(seed, 1))
    c = overlap_matrix(a, b)
    assert np.max(np.abs(c.sum(axis=0) - 1)) <= 1e-9
    assert np.max(np.abs(c.sum(axis=1) - 1)) <= 1e-9


def test_overlap_factor_examples():
    assert overlap_factor(np.full((2, 2), 0.5)) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert overlap_factor(np.eye(2)) == 0.0
    assert overlap_factor([[0.75, 0.25], [0.25, 0.75]]) == pytest.approx(1.224744871391589, abs=1e-12)


@settings(max_examples=100)
@given(st.floats(0.0, 1.0))
def test_overlap_factor_binary_closed_form(c):
    assert overlap_factor([[c, 1 - c], [1 - c, c]]) == pytest.approx(2 * math.sqrt(2 * c * (1 - c)), abs=1e-12)
