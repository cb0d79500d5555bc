"""
Closed-form powers of hyperbolic cat matrices
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

OMEGA = 0.5 * (1.0 + np.sqrt(5.0))
GOLDEN_CAT = ((1, 1), (1, 2))


def cat_oracle_power(n: int) -> np.ndarray:
    """[[1,1],[1,2]]^n from powers of the golden ratio, with the 1/sqrt(5) factor"""
    if n < 0:
        raise InvalidArgumentError(f"power must be >= 0, got {n}")
    w = OMEGA
    off_diagonal = w ** (2 * n) - w ** (-2 * n)
    return np.array(
        [
            [w ** (-2 * n + 1) + w ** (2 * n - 1), off_diagonal],
            [off_diagonal, w ** (-2 * n - 1) + w ** (2 * n + 1)],
        ]
    ) / np.sqrt(5.0)


def _integer_matrix(M: Sequence[Sequence[int]]) -> np.ndarray:
    matrix = np.asarray(M)
    if matrix.shape != (2, 2) or not np.all(np.equal(np.mod(matrix, 1), 0)):
        raise InvalidArgumentError(f"expected a 2x2 integer matrix, got {M!r}")
    return matrix.astype(np.int64)


@dataclass(frozen=True)
class CatOracle:
    """Hyperbolic det-1 integer matrix with its expanding eigenvalue"""

    M: tuple = GOLDEN_CAT

    def __post_init__(self):
        matrix = _integer_matrix(self.M)
        det = int(round(np.linalg.det(matrix)))
        if det != 1:
            raise InvalidArgumentError(f"cat matrix must have determinant 1, got {det}")
        if abs(int(np.trace(matrix))) <= 2:
            raise InvalidArgumentError(f"cat matrix must be hyperbolic (|trace| > 2), got trace {np.trace(matrix)}")
        object.__setattr__(self, "M", tuple(tuple(int(x) for x in row) for row in matrix))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.M, dtype=np.int64)

    @property
    def expanding_eigenvalue(self) -> float:
        t = float(np.trace(self.matrix))
        return 0.5 * (t + np.sign(t) * np.sqrt(t * t - 4.0))

    @property
    def omega(self) -> float:
        """sqrt of the expanding eigenvalue modulus; the golden ratio for [[1,1],[1,2]]"""
        return float(np.sqrt(abs(self.expanding_eigenvalue)))

    @property
    def rate(self) -> float:
        """Per-kick growth rate log |lambda_max| (2 log omega)"""
        return float(np.log(abs(self.expanding_eigenvalue)))

    def power(self, n: int) -> np.ndarray:
        """M^n = s_n M - s_{n-1} I with s_n = (l^n - l^-n) / (l - 1/l)"""
        if n < 0:
            raise InvalidArgumentError(f"power must be >= 0, got {n}")
        lam = self.expanding_eigenvalue
        gap = lam - 1.0 / lam

        def s(k: int) -> float:
            return (lam ** k - lam ** (-k)) / gap

        return s(n) * self.matrix - s(n - 1) * np.eye(2)

    def exact_power(self, n: int) -> np.ndarray:
        """Integer M^n by repeated multiplication"""
        if n < 0:
            raise InvalidArgumentError(f"power must be >= 0, got {n}")
        a, b, c, d = 1, 0, 0, 1
        (m11, m12), (m21, m22) = self.M
        for _ in range(n):
            a, b, c, d = a * m11 + b * m21, a * m12 + b * m22, c * m11 + d * m21, c * m12 + d * m22
        return np.array([[a, b], [c, d]], dtype=np.int64)

    def max_rounding_mismatch(self, n_max: int = 30, closed_form=None) -> int:
        """Largest |round(closed form) - exact| over 0 <= n <= n_max"""
        closed_form = closed_form or self.power
        worst = 0
        for n in range(n_max + 1):
            rounded = np.rint(closed_form(n)).astype(np.int64)
            worst = max(worst, int(np.max(np.abs(rounded - self.exact_power(n)))))
        return worst


def unstable_direction(M: Sequence[Sequence[int]] = GOLDEN_CAT) -> np.ndarray:
    """Eigenvector of the expanding eigenvalue, first component 1"""
    oracle = CatOracle(tuple(tuple(row) for row in M))
    (m11, m12), _ = oracle.M
    lam = oracle.expanding_eigenvalue
    if m12 == 0:
        raise InvalidArgumentError(f"cannot normalize the expanding direction of {oracle.M}")
    return np.array([1.0, (lam - m11) / m12])
