"""Sparse multivariate polynomials with exact integer coefficients.

Monomials have every exponent in {0, 1, 2}. An exponent vector is packed
into a single integer key in base 3, variable i at digit i, so a product of
monomials is a sum of keys provided no digit carries. Carries are detected
by comparing digit sums and rejected, since they would mean an exponent
above 2.

This module also builds the symmetric polynomials used by the certificate:
elementary symmetric polynomials, their partial sums Phi_m and the Turan
defect T_N = Phi_{N-1}^2 - Phi_{N-2} Phi_N.

Example:
    >>> x = SparsePoly.variable(2, 0)
    >>> y = SparsePoly.variable(2, 1)
    >>> ((1 + x) * (1 + y)).coefficient((1, 1))
    1
"""

from collections.abc import Iterable, Iterator, Mapping, Sequence
from functools import lru_cache
from typing import Union

MAX_EXPONENT = 2

Scalar = int
PolyLike = Union["SparsePoly", int]


@lru_cache(maxsize=None)
def _digit_sum(key: int) -> int:
    total = 0
    while key:
        key, digit = divmod(key, 3)
        total += digit
    return total


def pack(exponents: Sequence[int]) -> int:
    """Base-3 key of an exponent vector."""
    key = 0
    for exponent in reversed(exponents):
        if not 0 <= exponent <= MAX_EXPONENT:
            msg = f"Exponent {exponent} outside 0..{MAX_EXPONENT}"
            raise ValueError(msg)
        key = key * 3 + exponent
    return key


def unpack(key: int, n_vars: int) -> tuple[int, ...]:
    """Exponent vector of a base-3 key."""
    exponents = []
    for _ in range(n_vars):
        key, digit = divmod(key, 3)
        exponents.append(digit)
    return tuple(exponents)


class SparsePoly:
    """Polynomial in a fixed number of variables with integer coefficients.

    Zero coefficients are never stored. Instances are treated as immutable.
    """

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: Mapping[int, int] | None = None) -> None:
        self.n_vars = n_vars
        self.terms: dict[int, int] = {
            key: int(coeff) for key, coeff in (terms or {}).items() if coeff != 0
        }

    @classmethod
    def zero(cls, n_vars: int) -> "SparsePoly":
        return cls(n_vars)

    @classmethod
    def constant(cls, n_vars: int, value: int) -> "SparsePoly":
        return cls(n_vars, {0: value})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "SparsePoly":
        if not 0 <= index < n_vars:
            msg = f"Variable {index} out of range for {n_vars} variables"
            raise ValueError(msg)
        return cls(n_vars, {3**index: 1})

    def _coerce(self, other: PolyLike) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            if other.n_vars != self.n_vars:
                msg = f"Variable counts differ: {self.n_vars} vs {other.n_vars}"
                raise ValueError(msg)
            return other
        if isinstance(other, int):
            return SparsePoly.constant(self.n_vars, other)
        return NotImplemented

    def __add__(self, other: PolyLike) -> "SparsePoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0) + coeff
        return SparsePoly(self.n_vars, terms)

    __radd__ = __add__

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.n_vars, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: PolyLike) -> "SparsePoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: PolyLike) -> "SparsePoly":
        return (-self) + other

    def __mul__(self, other: PolyLike) -> "SparsePoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: dict[int, int] = {}
        for key_a, coeff_a in self.terms.items():
            sum_a = _digit_sum(key_a)
            for key_b, coeff_b in other.terms.items():
                key = key_a + key_b
                if _digit_sum(key) != sum_a + _digit_sum(key_b):
                    msg = (
                        f"Product {unpack(key_a, self.n_vars)} * "
                        f"{unpack(key_b, self.n_vars)} exceeds exponent {MAX_EXPONENT}"
                    )
                    raise ValueError(msg)
                terms[key] = terms.get(key, 0) + coeff_a * coeff_b
        return SparsePoly(self.n_vars, terms)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = SparsePoly.constant(self.n_vars, other)
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.n_vars == other.n_vars and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"SparsePoly(n_vars={self.n_vars}, terms={len(self.terms)})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, exponents: Sequence[int]) -> int:
        if len(exponents) != self.n_vars:
            msg = f"Expected {self.n_vars} exponents, got {len(exponents)}"
            raise ValueError(msg)
        return self.terms.get(pack(exponents), 0)

    def monomials(self) -> Iterator[tuple[tuple[int, ...], int]]:
        """(exponent vector, coefficient) pairs in increasing key order."""
        for key in sorted(self.terms):
            yield unpack(key, self.n_vars), self.terms[key]

    def max_exponent(self) -> int:
        """Largest exponent of any single variable."""
        return max(
            (max(exps, default=0) for exps, _ in self.monomials()), default=0
        )

    def total_degree(self) -> int:
        return max((_digit_sum(key) for key in self.terms), default=0)

    def evaluate(self, point: Sequence[float]) -> float:
        """Numeric value at a point (float arithmetic)."""
        if len(point) != self.n_vars:
            msg = f"Expected {self.n_vars} coordinates, got {len(point)}"
            raise ValueError(msg)
        total = 0.0
        for exponents, coeff in self.monomials():
            term = float(coeff)
            for x, e in zip(point, exponents, strict=True):
                if e:
                    term *= x**e
            total += term
        return total


def _elementary_table(
    variables: Iterable[int], max_degree: int, n_vars: int
) -> list[SparsePoly]:
    """[e_0, ..., e_max_degree] over ``variables`` by the incremental product rule."""
    table = [SparsePoly.constant(n_vars, 1)] + [
        SparsePoly.zero(n_vars) for _ in range(max_degree)
    ]
    for index in variables:
        x = SparsePoly.variable(n_vars, index)
        for degree in range(max_degree, 0, -1):
            table[degree] = table[degree] + x * table[degree - 1]
    return table


def _distinct(variables: Sequence[int]) -> list[int]:
    if len(set(variables)) != len(variables):
        msg = f"Variables must be distinct, got {list(variables)}"
        raise ValueError(msg)
    return list(variables)


def elem_sym(variables: Sequence[int], k: int, n_vars: int) -> SparsePoly:
    """Elementary symmetric polynomial e_k over the given variables.

    e_0 = 1, and e_k = 0 when k is negative or exceeds the number of
    variables.

    Args:
        variables: Distinct variable indices
        k: Degree
        n_vars: Number of variables of the ambient ring

    Example:
        >>> len(elem_sym([0, 1, 2], 2, 3))
        3
    """
    variables = _distinct(variables)
    if k < 0 or k > len(variables):
        return SparsePoly.zero(n_vars)
    return _elementary_table(variables, k, n_vars)[k]


def phi_poly(variables: Sequence[int], m: int, n_vars: int) -> SparsePoly:
    """Phi_m = e_0 + e_1 + ... + e_m; zero for m < 0."""
    variables = _distinct(variables)
    if m < 0:
        return SparsePoly.zero(n_vars)
    table = _elementary_table(variables, min(m, len(variables)), n_vars)
    total = SparsePoly.zero(n_vars)
    for poly in table:
        total = total + poly
    return total


def turan_defect(variables: Sequence[int], n_level: int, n_vars: int) -> SparsePoly:
    """T_N = Phi_{N-1}^2 - Phi_{N-2} Phi_N over the given variables."""
    previous = phi_poly(variables, n_level - 1, n_vars)
    return previous * previous - phi_poly(variables, n_level - 2, n_vars) * phi_poly(
        variables, n_level, n_vars
    )
