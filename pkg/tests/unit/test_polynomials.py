"""Unit tests for exact sparse polynomials.

Tests cover:
- Base-3 key packing and carry detection
- Ring arithmetic with integer coercion
- Elementary symmetric polynomials, their partial sums and the Turan defect
- Coefficients of the Turan defect against a binomial law and sympy
"""

import itertools
import math

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from src.certificate.polynomials import (
    SparsePoly,
    elem_sym,
    pack,
    phi_poly,
    turan_defect,
    unpack,
)


def _binom(m: int, r: int) -> int:
    return math.comb(m, r) if 0 <= r <= m else 0


def _to_sympy(poly: SparsePoly, symbols: list[sympy.Symbol]) -> sympy.Expr:
    expr = sympy.Integer(0)
    for exponents, coeff in poly.monomials():
        term = sympy.Integer(coeff)
        for symbol, e in zip(symbols, exponents, strict=True):
            term *= symbol**e
        expr += term
    return expr


class TestPacking:
    """Tests for pack and unpack."""

    def test_pack_digits(self):
        """Test variable i sits at base-3 digit i."""
        assert pack((1, 0, 2)) == 1 + 2 * 9
        assert unpack(19, 3) == (1, 0, 2)

    @given(st.lists(st.integers(0, 2), min_size=1, max_size=9))
    def test_unpack_inverts_pack(self, exponents):
        """Test unpack recovers any exponent vector."""
        assert unpack(pack(exponents), len(exponents)) == tuple(exponents)

    def test_exponent_out_of_range(self):
        """Test exponents above two cannot be packed."""
        with pytest.raises(ValueError, match="outside"):
            pack((3,))


class TestSparsePoly:
    """Tests for SparsePoly arithmetic."""

    def test_binomial_expansion(self):
        """Test (1 + x)(1 + y) has four unit terms."""
        x = SparsePoly.variable(2, 0)
        y = SparsePoly.variable(2, 1)
        product = (1 + x) * (1 + y)
        assert len(product) == 4
        assert all(coeff == 1 for _, coeff in product.monomials())

    def test_cancellation_drops_terms(self):
        """Test zero coefficients are not stored."""
        x = SparsePoly.variable(3, 1)
        assert (x - x).is_zero
        assert x - x == 0

    def test_square_allowed(self):
        """Test x^2 is representable."""
        x = SparsePoly.variable(1, 0)
        assert (x * x).coefficient((2,)) == 1
        assert (x * x).max_exponent() == 2

    def test_carry_rejected(self):
        """Test x^3 raises instead of corrupting a neighbouring digit."""
        x = SparsePoly.variable(2, 0)
        with pytest.raises(ValueError, match="exceeds exponent"):
            x * x * x

    def test_mixed_variable_counts(self):
        """Test polynomials over different rings cannot be combined."""
        with pytest.raises(ValueError, match="Variable counts differ"):
            SparsePoly.variable(2, 0) + SparsePoly.variable(3, 0)

    def test_variable_out_of_range(self):
        """Test a variable index beyond the ring is rejected."""
        with pytest.raises(ValueError, match="out of range"):
            SparsePoly.variable(2, 2)

    def test_integer_coercion(self):
        """Test integers act as constants on either side."""
        x = SparsePoly.variable(1, 0)
        assert (3 - x) + (x - 3) == 0
        assert 2 * x == x + x
        assert (-x).coefficient((1,)) == -1

    def test_degree_and_evaluate(self):
        """Test total degree and numeric evaluation."""
        x = SparsePoly.variable(2, 0)
        y = SparsePoly.variable(2, 1)
        poly = x * x * y + 5
        assert poly.total_degree() == 3
        assert poly.evaluate((2.0, 3.0)) == 17.0

    def test_unhashable(self):
        """Test mutable-equality polynomials cannot be hashed."""
        with pytest.raises(TypeError):
            hash(SparsePoly.zero(1))


class TestSymmetricPolynomials:
    """Tests for elem_sym, phi_poly and turan_defect."""

    def test_elem_sym_counts(self):
        """Test e_k of n variables has C(n, k) unit terms."""
        for k in range(5):
            poly = elem_sym(range(4), k, 4)
            assert len(poly) == math.comb(4, k)
            assert all(coeff == 1 for _, coeff in poly.monomials())

    def test_elem_sym_out_of_range(self):
        """Test e_k vanishes for negative k or k beyond the variable count."""
        assert elem_sym([0, 1], -1, 2).is_zero
        assert elem_sym([0, 1], 3, 2).is_zero
        assert elem_sym([], 0, 2) == 1

    def test_elem_sym_subset(self):
        """Test e_k over a subset only involves that subset."""
        poly = elem_sym([0, 2], 2, 3)
        assert list(poly.monomials()) == [((1, 0, 1), 1)]

    def test_repeated_variables_rejected(self):
        """Test repeated variable indices are rejected."""
        with pytest.raises(ValueError, match="distinct"):
            elem_sym([0, 0], 1, 2)

    def test_splitting_identity(self):
        """Test e_k(S) = e_k(S - i) + x_i e_{k-1}(S - i)."""
        x = SparsePoly.variable(5, 2)
        rest = [0, 1, 3, 4]
        for k in range(6):
            assert elem_sym(range(5), k, 5) == elem_sym(rest, k, 5) + x * elem_sym(
                rest, k - 1, 5
            )

    def test_phi_negative_level(self):
        """Test Phi_m is zero for m < 0."""
        assert phi_poly([0, 1, 2], -1, 3).is_zero

    def test_phi_saturates(self):
        """Test Phi_m over n variables stops growing once m >= n."""
        assert phi_poly([0, 1], 2, 2) == phi_poly([0, 1], 5, 2)
        assert len(phi_poly([0, 1], 2, 2)) == 4

    def test_turan_level_one(self):
        """Test T_1 = Phi_0^2 = 1."""
        assert turan_defect([0, 1], 1, 2) == 1

    def test_turan_level_two(self):
        """Test T_2 = e_1 + e_1^2 - e_2."""
        variables = [0, 1, 2]
        e1 = elem_sym(variables, 1, 3)
        e2 = elem_sym(variables, 2, 3)
        assert turan_defect(variables, 2, 3) == e1 + e1 * e1 - e2

    @pytest.mark.parametrize("n_level", [1, 2, 3])
    def test_turan_coefficient_law(self, n_level):
        """Test the coefficient of a monomial with a squares and b linear factors."""
        n_vars = 2 * n_level - 1
        poly = turan_defect(range(n_vars), n_level, n_vars)
        for exponents in itertools.product((0, 1, 2), repeat=n_vars):
            a, b = exponents.count(2), exponents.count(1)
            level = n_level - 1 - a
            expected = max(_binom(b, level) - _binom(b, level + 1), 0)
            assert poly.coefficient(exponents) == expected, exponents

    @pytest.mark.parametrize(("n_vars", "n_level"), [(3, 2), (4, 2), (5, 3)])
    def test_turan_matches_sympy(self, n_vars, n_level):
        """Test the Turan defect against a symbolic expansion."""
        symbols = list(sympy.symbols(f"x0:{n_vars}"))

        def phi(m: int) -> sympy.Expr:
            return sympy.Add(
                *(
                    sympy.Mul(*combo)
                    for k in range(m + 1)
                    for combo in itertools.combinations(symbols, k)
                )
            )

        expected = sympy.expand(
            phi(n_level - 1) ** 2 - phi(n_level - 2) * phi(n_level)
        )
        actual = _to_sympy(turan_defect(range(n_vars), n_level, n_vars), symbols)
        assert sympy.expand(actual - expected) == 0

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(0.0, 10.0, allow_nan=False), min_size=4, max_size=4
        )
    )
    def test_turan_nonnegative(self, point):
        """Test T_N is nonnegative on the nonnegative orthant."""
        assert turan_defect(range(4), 2, 4).evaluate(point) >= 0.0
