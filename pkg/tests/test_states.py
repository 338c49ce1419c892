import numpy as np
import pytest

from qmeasure import harness, matkit
from qmeasure.errors import TargetMismatchError, UnsupportedMemberError
from qmeasure.measure import probabilities
from qmeasure.states import (BipartiteState, DensityOperator, Ensemble, mix,
                             pure_ket, purify, steering_povm)

KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
MINUS = np.array([1.0, -1.0]) / np.sqrt(2)


def outer(v):
    return np.outer(v, np.asarray(v).conj())


def test_density_operator_invariants():
    with pytest.raises(ValueError):
        DensityOperator(np.diag([0.6, 0.6]))  # trace 1.2
    with pytest.raises(ValueError):
        DensityOperator(np.array([[1.5, 0.0], [0.0, -0.5]]))  # negative eigenvalue
    with pytest.raises(ValueError):
        DensityOperator(np.array([[0.5, 0.5], [0.0, 0.5]]))  # not Hermitian


def test_mix_single_member():
    e = Ensemble.of((1.0, KET0))
    np.testing.assert_allclose(mix(e).mat, outer(KET0), atol=1e-12)


def test_mix_computational_pair():
    e = Ensemble.of((0.5, KET0), (0.5, KET1))
    np.testing.assert_allclose(mix(e).mat, np.eye(2) / 2, atol=1e-12)


def test_mix_zero_plus_pair():
    # direct outer-product sum oracle
    expected = 0.5 * outer(KET0) + 0.5 * outer(PLUS)
    np.testing.assert_allclose(expected, np.array([[3, 1], [1, 1]]) / 4, atol=1e-12)
    e = Ensemble.of((0.5, KET0), (0.5, PLUS))
    np.testing.assert_allclose(mix(e).mat, expected, atol=1e-12)


def test_ensemble_weight_sum_checked():
    with pytest.raises(ValueError):
        Ensemble.of((0.5, KET0), (0.4, KET1))


def test_purify_pure_state():
    psi = purify(DensityOperator(outer(KET0)))
    ket = pure_ket(psi.state)
    expected = np.zeros(4)
    expected[0] = 1.0  # |0> (x) |0>
    np.testing.assert_allclose(np.abs(ket), expected, atol=1e-12)


def test_purify_maximally_mixed_gives_bell():
    psi = purify(DensityOperator(np.eye(2) / 2))
    ket = pure_ket(psi.state)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(np.abs(ket), np.abs(bell), atol=1e-12)
    np.testing.assert_allclose(psi.reduced(1).mat, np.eye(2) / 2, atol=1e-12)


def test_purify_spectral_weights():
    rho = DensityOperator(np.diag([0.75, 0.25]))
    psi = purify(rho)
    ket = pure_ket(psi.state)
    expected = np.array([np.sqrt(0.75), 0, 0, np.sqrt(0.25)])
    np.testing.assert_allclose(np.abs(ket), expected, atol=1e-12)
    np.testing.assert_allclose(psi.reduced(1).mat, rho.mat, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_purify_round_trips_random_states(d):
    rng = np.random.default_rng(40 + d)
    for _ in range(5):
        rho = harness.random_density(d, rng)
        psi = purify(rho)
        assert np.max(np.abs(psi.reduced(1).mat - rho.mat)) <= 1e-10


def steered_member(psi, effect_mat, d_b):
    """Partial-trace oracle for what one POVM element leaves on the second factor."""
    lifted = np.kron(effect_mat, np.eye(d_b)) @ psi.state.mat
    return matkit.partial_trace(lifted, psi.dims, keep=1)


def test_steering_computational_target_on_bell():
    psi = BipartiteState.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    target = Ensemble.of((0.5, KET0), (0.5, KET1))
    povm = steering_povm(psi, target)
    np.testing.assert_allclose(povm.effects[0].mat, outer(KET0), atol=1e-10)
    np.testing.assert_allclose(povm.effects[1].mat, outer(KET1), atol=1e-10)
    for eff, (w, member) in zip(povm.effects, target.members):
        np.testing.assert_allclose(steered_member(psi, eff.mat, 2), w * member.mat,
                                   atol=1e-10)


def test_steering_x_basis_target_on_bell():
    psi = BipartiteState.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    target = Ensemble.of((0.5, PLUS), (0.5, MINUS))
    povm = steering_povm(psi, target)
    np.testing.assert_allclose(povm.effects[0].mat, outer(PLUS), atol=1e-10)
    np.testing.assert_allclose(povm.effects[1].mat, outer(MINUS), atol=1e-10)


def test_steering_complex_target_verified_by_oracle():
    psi = BipartiteState.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    y_plus = np.array([1.0, 1.0j]) / np.sqrt(2)
    y_minus = np.array([1.0, -1.0j]) / np.sqrt(2)
    target = Ensemble.of((0.5, y_plus), (0.5, y_minus))
    povm = steering_povm(psi, target)
    for eff, (w, member) in zip(povm.effects, target.members):
        np.testing.assert_allclose(steered_member(psi, eff.mat, 2), w * member.mat,
                                   atol=1e-10)


def test_steering_single_member_gives_identity():
    psi = purify(DensityOperator(outer(KET0)))
    povm = steering_povm(psi, Ensemble.of((1.0, KET0)))
    np.testing.assert_allclose(povm.effects[0].mat, np.eye(2), atol=1e-10)


def test_steering_completeness_and_positivity():
    rng = np.random.default_rng(55)
    for d in (2, 3):
        rho = harness.random_density(d, rng)
        psi = purify(rho)
        target = harness.steered_ensemble(psi, harness.random_povm(d, 3, rng))
        povm = steering_povm(psi, target)
        total = sum(e.mat for e in povm.effects)
        assert np.max(np.abs(total - np.eye(d))) <= 1e-9 * d
        for eff in povm.effects:
            assert np.linalg.eigvalsh(eff.mat).min() >= -1e-9


def test_steering_target_mismatch():
    psi = BipartiteState.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    with pytest.raises(TargetMismatchError):
        steering_povm(psi, Ensemble.of((1.0, KET0)))


def test_steering_unsupported_member():
    psi = purify(DensityOperator(outer(KET0)))
    slack = 5e-10  # keeps the mix within tolerance while the member leaks support
    target = Ensemble.of((1.0 - slack, KET0), (slack, KET1))
    with pytest.raises(UnsupportedMemberError):
        steering_povm(psi, target)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_equal_mix_means_equal_statistics(d):
    # operational core: same density operator, same outcome statistics
    rng = np.random.default_rng(70 + d)
    rho = harness.random_density(d, rng)
    psi = purify(rho)
    e1 = harness.steered_ensemble(psi, harness.random_povm(d, 2, rng))
    e2 = harness.steered_ensemble(psi, harness.random_povm(d, 3, rng))
    assert np.max(np.abs(mix(e1).mat - mix(e2).mat)) <= 1e-10
    for _ in range(34):  # >= 100 POVMs across the three dims
        povm = harness.random_povm(d, int(rng.integers(2, 4)), rng)
        p1 = {label: w for label, w in _ensemble_probs(e1, povm)}
        p2 = {label: w for label, w in _ensemble_probs(e2, povm)}
        for label in p1:
            assert abs(p1[label] - p2[label]) <= 1e-10


def _ensemble_probs(e, povm):
    acc = {}
    for w, member in e.members:
        for label, p in probabilities(member, povm):
            acc[label] = acc.get(label, 0.0) + w * p
    return acc.items()
