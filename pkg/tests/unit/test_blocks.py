"""Unit tests for the exact-integer PSD certificate.

Tests cover:
- Construction of the polynomial matrix and its numeric values
- Block extraction and its structural errors
- Binomial closed forms on hand-expanded classes
- Scalar PSD inequalities on passing and failing blocks
- End-to-end certification for small N
- Numeric congruence with enumerated moments
"""

import pytest

from src.certificate.blocks import (
    BLOCK_VALUES,
    CONGRUENCE_RTOL,
    CertificateError,
    CoefficientBlock,
    block_from_matrix,
    build_tilde_m,
    certify,
    check_block_psd,
    closed_form_block,
    congruence_residual,
    extract_blocks,
    spot_check_tilde_m,
)
from src.certificate.polynomials import unpack


@pytest.fixture(scope="module")
def tilde_m_3():
    """M~ for three battles."""
    return build_tilde_m(3)


@pytest.fixture(scope="module")
def tilde_m_5():
    """M~ for five battles."""
    return build_tilde_m(5)


class TestBuildTildeM:
    """Tests for build_tilde_m and PolynomialMatrix."""

    def test_diagonal_at_unit_odds(self, tilde_m_3):
        """Test M~_11 = 20 at phi = (1, 1, 1)."""
        assert tilde_m_3.entry(0, 0).evaluate([1.0, 1.0, 1.0]) == 20.0

    def test_off_diagonal_at_unit_odds(self, tilde_m_3):
        """Test M~_12 = 4 at phi = (1, 1, 1)."""
        assert tilde_m_3.entry(0, 1).evaluate([1.0, 1.0, 1.0]) == 4.0

    def test_symmetric(self, tilde_m_5):
        """Test M~ is symmetric."""
        assert tilde_m_5.is_symmetric()

    def test_degree_bounds(self, tilde_m_5):
        """Test exponents stay at most 2 and total degree at most 2N + 2."""
        assert tilde_m_5.max_exponent() == 2
        assert tilde_m_5.total_degree() <= 6

    @pytest.mark.parametrize("n", [1, 4, 11])
    def test_invalid_sizes(self, n):
        """Test even, too small and too large battle counts are rejected."""
        with pytest.raises(ValueError, match="odd battle count"):
            build_tilde_m(n)

    def test_support_sorted(self, tilde_m_3):
        """Test support keys come back in increasing order."""
        keys = tilde_m_3.support()
        assert keys == sorted(keys)
        assert 0 not in keys


class TestExtractBlocks:
    """Tests for extract_blocks and block_from_matrix."""

    def test_level_one_hand_expansions(self, tilde_m_3):
        """Test blocks of N = 1 against hand-expanded coefficients."""
        blocks = {}
        for key in tilde_m_3.support():
            alpha = unpack(key, 3)
            matrix = tilde_m_3.coefficient_matrix(key)
            blocks[alpha] = block_from_matrix(matrix, alpha, 1)
        assert (blocks[(2, 2, 0)].d2, blocks[(2, 2, 0)].c22) == (1, 1)
        assert (blocks[(1, 1, 0)].d1, blocks[(1, 1, 0)].c11) == (2, 1)
        assert blocks[(1, 1, 1)].d1 == 4
        assert blocks[(1, 2, 0)].d2 == 2
        assert blocks[(1, 1, 2)].d2 == 2

    def test_one_block_per_class(self, tilde_m_5):
        """Test classes are unique and sorted by (b, a)."""
        shapes = [(block.b, block.a) for _, block in extract_blocks(tilde_m_5)]
        assert shapes == sorted(set(shapes))

    def test_unobservable_values_are_none(self, tilde_m_3):
        """Test fields with no entries in the block are None."""
        for _, block in extract_blocks(tilde_m_3):
            if block.b < 2:
                assert block.c11 is None
            if block.a == 0:
                assert block.d2 is None
                assert block.c12 is None

    def test_nonzero_outside_support(self):
        """Test an entry outside S1 and S2 breaks the structure."""
        matrix = [[1, 0, 0], [0, 0, 0], [0, 0, 5]]
        with pytest.raises(CertificateError, match="outside its support") as exc:
            block_from_matrix(matrix, (1, 0, 0), 1)
        assert exc.value.alpha == (1, 0, 0)

    def test_non_constant_class(self):
        """Test two different diagonal values within S1 are rejected."""
        matrix = [[1, 0, 0], [0, 2, 0], [0, 0, 0]]
        with pytest.raises(CertificateError, match="several d1 values"):
            block_from_matrix(matrix, (1, 1, 0), 1)


class TestClosedForm:
    """Tests for closed_form_block and CoefficientBlock."""

    def test_level_two_example(self):
        """Test b = 3, a = 1 at N = 2 gives (4, 6, 0, 1, 2)."""
        assert closed_form_block(3, 1, 2).values() == (4, 6, 0, 1, 2)

    def test_empty_class(self):
        """Test the constant class is identically zero."""
        assert closed_form_block(0, 0, 1).values() == (0, 0, 0, 0, 0)

    def test_negative_size_rejected(self):
        """Test negative class sizes are rejected."""
        with pytest.raises(ValueError, match="nonnegative"):
            closed_form_block(-1, 0, 1)

    @pytest.mark.parametrize("n_level", [1, 2])
    def test_matches_extraction(self, n_level):
        """Test every extracted block agrees with its closed form."""
        pm = build_tilde_m(2 * n_level + 1)
        for alpha, block in extract_blocks(pm):
            assert block.matches(closed_form_block(block.b, block.a, n_level)), alpha

    def test_matches_treats_none_as_wildcard(self):
        """Test None fields do not take part in the comparison."""
        partial = CoefficientBlock(b=1, a=0, l=1, d1=2)
        assert partial.matches(CoefficientBlock(b=1, a=0, l=1, d1=2, c11=9))
        assert not partial.matches(CoefficientBlock(b=1, a=0, l=1, d1=3))
        assert not partial.matches(CoefficientBlock(b=2, a=0, l=1, d1=2))

    def test_to_matrix_layout(self):
        """Test S1 indices come first and None reads as zero."""
        block = CoefficientBlock(b=2, a=1, l=0, d1=5, d2=7, c11=1, c12=2)
        assert block.to_matrix().tolist() == [
            [5.0, 1.0, 2.0],
            [1.0, 5.0, 2.0],
            [2.0, 2.0, 7.0],
        ]

    def test_to_dict(self):
        """Test every field is serialized."""
        data = closed_form_block(1, 1, 1).to_dict()
        assert set(data) == {"b", "a", "l", *BLOCK_VALUES}


class TestCheckBlockPSD:
    """Tests for check_block_psd."""

    def test_passing_block(self):
        """Test a closed-form block passes every inequality."""
        report = check_block_psd(closed_form_block(3, 1, 2))
        assert report.passed
        assert [c.name for c in report.checks] == [
            "d1_minus_c11",
            "s1_row_sum",
            "d2_minus_c22",
            "s2_row_sum",
            "determinant",
            "dense_min_eigenvalue",
        ]

    def test_failing_off_diagonal(self):
        """Test c11 above d1 fails the within-S1 inequality."""
        report = check_block_psd(CoefficientBlock(b=2, a=0, l=1, d1=1, c11=2))
        assert not report.passed
        assert {c.name for c in report.failures} == {
            "d1_minus_c11",
            "dense_min_eigenvalue",
        }

    def test_failing_determinant(self):
        """Test a large c12 fails only the determinant and eigenvalue checks."""
        report = check_block_psd(CoefficientBlock(b=1, a=1, l=0, d1=1, d2=1, c12=2))
        assert {c.name for c in report.failures} == {
            "determinant",
            "dense_min_eigenvalue",
        }

    def test_empty_block(self):
        """Test an empty block has no checks and passes."""
        report = check_block_psd(CoefficientBlock(b=0, a=0, l=1))
        assert report.checks == []
        assert report.passed


class TestCertify:
    """Tests for certify."""

    @pytest.mark.parametrize("n_level", [1, 2])
    def test_small_levels_pass(self, n_level):
        """Test the certificate holds for three and five battles."""
        result = certify(n_level)
        assert result.passed, [c.message for c in result.report.failures]
        assert result.n_classes > 0

    @pytest.mark.slow
    @pytest.mark.parametrize("n_level", [3, 4])
    def test_large_levels_pass(self, n_level):
        """Test the certificate holds for seven and nine battles."""
        result = certify(n_level)
        assert result.passed, [c.message for c in result.report.failures]

    @pytest.mark.parametrize("n_level", [0, 5])
    def test_level_out_of_range(self, n_level):
        """Test N outside 1..4 is rejected."""
        with pytest.raises(ValueError, match="N must lie"):
            certify(n_level)

    def test_report_dict(self):
        """Test the serialized report."""
        data = certify(1).to_dict()
        assert data["n_battles"] == 3
        assert data["passed"] is True
        assert data["failures"] == []
        assert data["n_classes"] == len(data["classes"])
        assert {"alpha", "b", "a", "l", "values"} <= set(data["classes"][0])

    def test_check_names_carry_class(self):
        """Test per-class checks are suffixed with their (b, a) label."""
        names = [c.name for c in certify(1).report.checks]
        assert names[:3] == ["symmetric", "exponent_bound", "degree_bound"]
        assert any(name.startswith("closed_form_b") for name in names)
        assert any(name.endswith("_b2_a0") for name in names)


class TestNumericCrossChecks:
    """Tests for spot_check_tilde_m and congruence_residual."""

    def test_spot_check(self, tilde_m_5):
        """Test M~ is numerically PSD at random odds."""
        assert spot_check_tilde_m(tilde_m_5, n_points=30).passed

    @pytest.mark.parametrize("fixture", ["tilde_m_3", "tilde_m_5"])
    def test_congruence(self, request, rng, fixture):
        """Test M~ equals Phi_N^2 D M0 D with M0 from enumeration."""
        pm = request.getfixturevalue(fixture)
        for _ in range(10):
            phi = rng.lognormal(mean=0.0, sigma=1.0, size=pm.n)
            assert congruence_residual(pm, phi) < CONGRUENCE_RTOL
