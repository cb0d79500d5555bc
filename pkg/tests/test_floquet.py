import numpy as np
import pytest

from src.dynamics.floquet import (
    ABSORBING,
    build_floquet,
    check_heisenberg_relations,
    evolve,
    extract_momentum_map,
    extract_position_map,
    heisenberg_matrix_element,
    shift_labels,
)
from src.dynamics.kicks import KickModel, orientation_matrix
from src.torus.lattice import LatticeSpec, StateVector, reduce_momentum
from src.torus.observables import ObservableMatrix, apply_observable
from src.utils.errors import HeisenbergRelationError, InvalidArgumentError

GOLDEN_M = np.array([[1, 1], [1, 2]])


def _wrong_orientation(op):
    return "M_inv" if op.orientation in ("M", "M_T") else "M"


def test_resonant_free_motion_is_identity_at_zero_beta(origin_sector):
    op = build_floquet(KickModel.free(), LatticeSpec(4), origin_sector)
    np.testing.assert_allclose(op.dense(), np.eye(81), atol=1e-12)


def test_free_phase_of_a_mode(lattice8, generic_sector):
    tau = 1.0
    op = build_floquet(KickModel.free(tau=tau), lattice8, generic_sector)
    v = StateVector.basis(lattice8, (1, -2), generic_sector.beta)
    out, record = op.apply(v)
    expected = np.exp(0.5j * tau * ((0.3 + 1) ** 2 + (0.7 - 2) ** 2))
    assert out.amplitudes[lattice8.index_of((1, -2))] == pytest.approx(expected)
    assert record.lost_weight == 0.0


def test_resonant_phase_keeps_beta_terms(lattice8, generic_sector):
    resonant = build_floquet(KickModel.free(), lattice8, generic_sector)
    direct = build_floquet(KickModel.free(tau=4 * np.pi, resonant=False), lattice8, generic_sector)
    np.testing.assert_allclose(resonant.free_phases, direct.free_phases, atol=1e-9)


@pytest.mark.parametrize("name", ["free", "position_kick", "cat_kick"])
def test_periodic_operators_are_unitary(periodic_ops, name, rng):
    op = periodic_ops[name]
    d = op.lattice.d
    amplitudes = rng.standard_normal((d, 5)) + 1j * rng.standard_normal((d, 5))
    amplitudes /= np.linalg.norm(amplitudes, axis=0)
    v = StateVector(amplitudes, op.sector.beta, op.lattice)
    forward, _ = op.apply(v)
    back, _ = op.apply_adjoint(forward)
    np.testing.assert_allclose(forward.column_norms_sq(), 1.0, atol=1e-12)
    np.testing.assert_allclose(back.amplitudes, amplitudes, atol=1e-12)
    assert back.beta == pytest.approx(op.sector.beta)


def test_absorbing_kick_reports_lost_weight(origin_sector):
    lattice = LatticeSpec(4)
    op = build_floquet(KickModel.position_kick(1.0), lattice, origin_sector, ABSORBING)
    edge = StateVector.basis(lattice, (4, 0))
    out, record = op.apply(edge)
    assert record.lost_weight > 1e-3
    assert out.norm_sq() + record.lost_weight == pytest.approx(1.0, abs=1e-12)


def test_evolve_leakage_is_cumulative(origin_sector):
    lattice = LatticeSpec(4)
    op = build_floquet(KickModel.position_kick(1.0), lattice, origin_sector, ABSORBING)
    _, records = evolve(op, StateVector.basis(lattice, (0, 0)), 6)
    lost = [record.lost_weight for record in records]
    assert lost == sorted(lost)
    assert [record.step for record in records] == list(range(1, 7))


def test_cat_kick_moves_sector():
    lattice = LatticeSpec(4)
    op = build_floquet(KickModel.cat_kick(), lattice, reduce_momentum((0.5, 0.0)))
    out, _ = op.apply(StateVector.basis(lattice, (0, 0), (0.5, 0.0)))
    image = orientation_matrix(GOLDEN_M, op.orientation) @ np.array([0.5, 0.0])
    assert out.beta == pytest.approx(tuple(image - np.floor(image)))


def test_cat_heisenberg_relation_at_production_size(origin_sector):
    op = build_floquet(KickModel.cat_kick(), LatticeSpec(64), origin_sector)
    deviations = check_heisenberg_relations(op, steps=2)
    assert max(deviations.values()) <= 1e-12
    np.testing.assert_allclose(extract_momentum_map(op, 1), GOLDEN_M, atol=1e-12)


def test_corrupted_orientation_fails_loudly(origin_sector):
    good = build_floquet(KickModel.cat_kick(), LatticeSpec(8), origin_sector)
    bad = build_floquet(KickModel.cat_kick(orientation=_wrong_orientation(good)), LatticeSpec(8), origin_sector)
    with pytest.raises(HeisenbergRelationError, match="expected M"):
        check_heisenberg_relations(bad)


def test_heisenberg_relations_only_for_cat(periodic_ops):
    with pytest.raises(InvalidArgumentError):
        check_heisenberg_relations(periodic_ops["free"])


def test_momentum_matrix_element_under_free_motion(lattice8, generic_sector):
    op = build_floquet(KickModel.free(tau=1.0), lattice8, generic_sector)
    index = lattice8.index_of((2, -1))
    value = heisenberg_matrix_element(op, index, ObservableMatrix("momentum-1", lattice8), index, 3)
    assert value == pytest.approx(2.3)


def test_position_kick_shifts_momentum(origin_sector):
    lattice = LatticeSpec(8)
    op = build_floquet(KickModel.position_kick(1.0, tau=4 * np.pi), lattice, origin_sector)
    index = lattice.index_of((0, 0))
    value = heisenberg_matrix_element(op, index, ObservableMatrix("momentum-1", lattice), index, 1)
    # <0| p + alpha grad g |0> with g = cos x1 + cos x2 has zero mean
    assert abs(value) < 1e-12


def test_invalid_boundary(lattice8, origin_sector):
    with pytest.raises(InvalidArgumentError, match="boundary"):
        build_floquet(KickModel.free(), lattice8, origin_sector, "reflecting")


def test_lattice_mismatch(periodic_ops):
    with pytest.raises(InvalidArgumentError):
        periodic_ops["free"].apply(StateVector.basis(LatticeSpec(3), 0))


def test_cat_kick_pushes_corner_mode_out(origin_sector):
    lattice = LatticeSpec(8)
    op = build_floquet(KickModel.cat_kick(), lattice, origin_sector)
    out, record = op.apply(StateVector.basis(lattice, (8, 8)))
    assert out.norm_sq() == 0.0
    assert record.lost_weight == 1.0


def test_cat_round_trip_on_interior_mode(origin_sector):
    lattice = LatticeSpec(32)
    op = build_floquet(KickModel.cat_kick(), lattice, origin_sector)
    v = StateVector.basis(lattice, (1, 1))
    forward, _ = op.apply(v)
    back, _ = op.apply_adjoint(forward)
    np.testing.assert_array_equal(back.amplitudes, v.amplitudes)


INTERIOR = [(k1, k2) for k1 in range(-1, 2) for k2 in range(-1, 2)]


def _interior_vectors(lattice, beta, rng, count=10):
    amplitudes = np.zeros((lattice.d, count), dtype=complex)
    rows = [lattice.index_of(label) for label in INTERIOR]
    amplitudes[rows] = rng.standard_normal((len(rows), count)) + 1j * rng.standard_normal((len(rows), count))
    amplitudes /= np.linalg.norm(amplitudes, axis=0)
    return StateVector(amplitudes, beta, lattice)


@pytest.mark.parametrize("n", [1, 2])
def test_cat_position_relation(origin_sector, n):
    op = build_floquet(KickModel.cat_kick(), LatticeSpec(8), origin_sector)
    expected = np.linalg.matrix_power(np.rint(np.linalg.inv(GOLDEN_M).T), n)
    np.testing.assert_array_equal(extract_position_map(op, n), expected)


def test_wrong_orientation_breaks_position_relation(origin_sector):
    good = build_floquet(KickModel.cat_kick(), LatticeSpec(8), origin_sector)
    bad = build_floquet(KickModel.cat_kick(orientation=_wrong_orientation(good)), LatticeSpec(8), origin_sector)
    assert not np.array_equal(extract_position_map(bad, 1), extract_position_map(good, 1))


def test_shift_labels_drops_overflow():
    grid = np.arange(9, dtype=complex).reshape(3, 3)
    shifted = shift_labels(grid, (1, -1))
    np.testing.assert_array_equal(shifted, [[0, 0, 0], [1, 2, 0], [4, 5, 0]])


def test_position_kick_commutes_with_position(origin_sector):
    lattice = LatticeSpec(16)
    op = build_floquet(KickModel.position_kick(1.0), lattice, origin_sector, ABSORBING)
    columns = StateVector.basis(lattice, INTERIOR)
    kicked, _ = op.apply(columns)
    for kind in ("position-1", "position-2"):
        obs = ObservableMatrix(kind, lattice)
        before = columns.amplitudes.conj().T @ apply_observable(obs, columns).amplitudes
        after = kicked.amplitudes.conj().T @ apply_observable(obs, kicked).amplitudes
        np.testing.assert_allclose(after, before, atol=1e-10)


def test_absorbing_position_kick_round_trip_on_interior(origin_sector, rng):
    lattice = LatticeSpec(16)
    op = build_floquet(KickModel.position_kick(1.0, tau=1.0), lattice, origin_sector, ABSORBING)
    v = _interior_vectors(lattice, origin_sector.beta, rng)
    forward, _ = op.apply(v)
    back, _ = op.apply_adjoint(forward)
    assert np.max(np.abs(back.amplitudes - v.amplitudes)) < 1e-10


@pytest.mark.parametrize(
    "model",
    [KickModel.free(tau=1.0), KickModel.position_kick(1.0, tau=1.0), KickModel.cat_kick()],
    ids=["free", "position_kick", "cat_kick"],
)
def test_norm_is_kept_on_interior_vectors(model, origin_sector, rng):
    lattice = LatticeSpec(16)
    op = build_floquet(model, lattice, origin_sector, ABSORBING)
    v = _interior_vectors(lattice, origin_sector.beta, rng)
    evolved, records = evolve(op, v, 2)
    np.testing.assert_allclose(evolved.column_norms_sq(), 1.0, atol=1e-10)
    assert records[-1].lost_weight < 1e-10


def test_apply_labels_its_record_with_the_step(periodic_ops):
    op = periodic_ops["free"]
    _, record = op.apply(StateVector.basis(op.lattice, (0, 0), op.sector.beta), 5)
    assert record.step == 5
