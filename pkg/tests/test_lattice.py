import numpy as np
import pytest

from src.torus.lattice import BlochSector, LatticeSpec, StateVector, build_lattice, reduce_momentum
from src.utils.errors import InvalidArgumentError


def test_lattice_dimensions():
    lattice = LatticeSpec(3)
    assert lattice.n == 7
    assert lattice.d == 49
    np.testing.assert_array_equal(lattice.axis_labels, np.arange(-3, 4))


@pytest.mark.parametrize("K", [0, -1, 2.5, True])
def test_lattice_rejects_bad_cutoff(K):
    with pytest.raises(InvalidArgumentError):
        LatticeSpec(K)


def test_flat_index_ordering():
    lattice = LatticeSpec(2)
    assert lattice.index_of((-2, -2)) == 0
    assert lattice.index_of((-2, -1)) == 1
    assert lattice.index_of((-1, -2)) == lattice.n
    assert lattice.index_of((0, 0)) == 12
    assert lattice.label_of(12) == (0, 0)
    for index in range(lattice.d):
        assert lattice.index_of(lattice.label_of(index)) == index


def test_out_of_window_label_raises():
    lattice = LatticeSpec(2)
    assert not lattice.contains((3, 0))
    with pytest.raises(InvalidArgumentError, match="outside window"):
        lattice.index_of((3, 0))
    with pytest.raises(InvalidArgumentError):
        lattice.label_of(lattice.d)


def test_reduce_momentum_splits_integer_part():
    sector = reduce_momentum((1.25, -0.5))
    assert sector.beta == pytest.approx((0.25, 0.5))
    assert sector.integer_part == (1, -1)
    np.testing.assert_allclose(sector.p0, [1.25, -0.5])


def test_reduce_momentum_keeps_beta_below_one():
    sector = reduce_momentum((-1e-18, 2.0))
    assert 0.0 <= sector.beta[0] < 1.0
    assert sector.beta[1] == 0.0
    assert sector.integer_part[1] == 2


@pytest.mark.parametrize("p0", [(np.nan, 0.0), (np.inf, 1.0), (1.0,)])
def test_reduce_momentum_rejects_non_finite(p0):
    with pytest.raises(InvalidArgumentError):
        reduce_momentum(p0)


def test_shifted_sector_may_leave_unit_interval():
    sector = BlochSector((0.0, 0.0)).shifted((-1e-3, 0.0))
    assert sector.beta == pytest.approx((-1e-3, 0.0))
    assert sector.integer_part == (0, 0)


def test_build_lattice():
    lattice, sector = build_lattice(4, (0.5, 0.0))
    assert lattice.K == 4
    assert sector.beta == (0.5, 0.0)


def test_basis_vector_grid_layout():
    lattice = LatticeSpec(3)
    v = StateVector.basis(lattice, (1, -2), beta=(0.2, 0.0))
    grid = v.grid()
    assert grid[1 + 3, -2 + 3] == 1.0
    assert v.norm_sq() == pytest.approx(1.0)
    assert v.beta == (0.2, 0.0)


def test_batched_basis_columns():
    lattice = LatticeSpec(2)
    v = StateVector.basis(lattice, [(0, 0), (1, 0), (0, 1)])
    assert v.batched
    assert v.amplitudes.shape == (lattice.d, 3)
    np.testing.assert_allclose(v.column_norms_sq(), [1.0, 1.0, 1.0])
    assert v.grid().shape == (5, 5, 3)


def test_state_shape_mismatch_raises():
    with pytest.raises(InvalidArgumentError, match="do not fit"):
        StateVector(np.zeros(10), (0.0, 0.0), LatticeSpec(2))


def test_inner_product_requires_same_lattice():
    a = StateVector.basis(LatticeSpec(2), 0)
    b = StateVector.basis(LatticeSpec(3), 0)
    with pytest.raises(InvalidArgumentError):
        a.inner(b)
