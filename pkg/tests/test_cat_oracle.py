import numpy as np
import pytest

from src.analysis.cat_oracle import OMEGA, CatOracle, cat_oracle_power, unstable_direction
from src.utils.errors import InvalidArgumentError


def test_golden_ratio_closed_form_rounds_to_integer_powers():
    oracle = CatOracle()
    assert oracle.max_rounding_mismatch(30, cat_oracle_power) == 0
    assert oracle.max_rounding_mismatch(30) == 0


@pytest.mark.parametrize("n", [0, 1, 2, 7])
def test_closed_form_values(n):
    np.testing.assert_allclose(cat_oracle_power(n), CatOracle().exact_power(n), atol=1e-9)


def test_rate_is_twice_log_golden_ratio():
    oracle = CatOracle()
    assert oracle.omega == pytest.approx(OMEGA)
    assert oracle.rate == pytest.approx(2.0 * np.log(OMEGA))
    assert oracle.rate == pytest.approx(0.96242, abs=1e-5)


def test_other_hyperbolic_matrix():
    oracle = CatOracle(((2, 1), (1, 1)))
    assert oracle.max_rounding_mismatch(20) == 0
    np.testing.assert_array_equal(oracle.exact_power(2), [[5, 3], [3, 2]])


def test_unstable_direction_is_eigenvector():
    v = unstable_direction()
    M = np.array([[1, 1], [1, 2]])
    np.testing.assert_allclose(M @ v, OMEGA ** 2 * v, atol=1e-12)
    assert v[1] == pytest.approx(OMEGA)


@pytest.mark.parametrize("M", [((1, 1), (0, 1)), ((1, 0), (0, 1)), ((2, 1), (1, 2)), ((1, 0.5), (1, 2))])
def test_rejects_non_hyperbolic_or_bad_matrices(M):
    with pytest.raises(InvalidArgumentError):
        CatOracle(M)


def test_negative_power():
    with pytest.raises(InvalidArgumentError):
        cat_oracle_power(-1)
