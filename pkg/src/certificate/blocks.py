"""Exact-integer certificate that M0 is positive semidefinite.

M0 is congruent to the polynomial matrix

    M~(phi) = Phi_N(phi)^2 * D * M0 * D,   D = diag(1 + phi_t),

whose entries are integer polynomials in the odds phi_t = (1 - p_t) / p_t:

    diagonal t:      phi_t e_N(phi_-t) (2 Phi_N(phi) + phi_t e_N(phi_-t))
    off-diagonal ts: phi_t phi_s (1 + phi_t)(1 + phi_s) T_N(phi_-{t,s})

Expanding M~ in monomials phi^alpha gives one integer coefficient matrix
C_alpha per exponent pattern. Every C_alpha is supported on the indices
with nonzero exponent and takes only five values, depending on whether an
index has exponent 1 (set S1, size b) or 2 (set S2, size a). If each
C_alpha is PSD then M~, and so M0, is PSD at every positive phi.

This module:
- builds M~ exactly for n = 2N + 1 battles
- extracts each C_alpha and verifies its support and five-value pattern
- compares every block against binomial closed forms
- checks each block through three scalar inequalities
"""

import logging
import time
from collections.abc import Iterator
from dataclasses import dataclass, field, fields
from math import comb
from typing import Any

import numpy as np

from src.certificate.polynomials import (
    SparsePoly,
    elem_sym,
    phi_poly,
    turan_defect,
    unpack,
)
from src.contest.domain import CheckResult, VerificationReport, tolerance_check
from src.utils.config import warn_if_slow
from src.verification.moments import conditional_moments, elementary_symmetric

logger = logging.getLogger(__name__)

MAX_CERTIFIED_BATTLES = 9
MAX_CERTIFIED_LEVEL = 4
EIGEN_RTOL = 1e-10
CONGRUENCE_RTOL = 1e-9

BLOCK_VALUES = ("d1", "d2", "c11", "c12", "c22")


class CertificateError(Exception):
    """Exception raised when a coefficient matrix breaks the block structure.

    Attributes:
        message: Explanation of the error
        alpha: Exponent pattern of the offending monomial, if any
    """

    def __init__(self, message: str, alpha: tuple[int, ...] | None = None) -> None:
        self.message = message
        self.alpha = alpha
        super().__init__(self.message)


@dataclass(frozen=True)
class PolynomialMatrix:
    """Symmetric n x n matrix of SparsePoly entries in n variables."""

    n: int
    entries: tuple[tuple[SparsePoly, ...], ...]

    @property
    def n_level(self) -> int:
        return (self.n - 1) // 2

    def entry(self, t: int, s: int) -> SparsePoly:
        return self.entries[t][s]

    def is_symmetric(self) -> bool:
        return all(
            self.entries[t][s] == self.entries[s][t]
            for t in range(self.n)
            for s in range(t + 1, self.n)
        )

    def support(self) -> list[int]:
        """Sorted packed keys of every monomial appearing in some entry."""
        keys: set[int] = set()
        for row in self.entries:
            for poly in row:
                keys.update(poly.terms)
        return sorted(keys)

    def coefficient_matrix(self, key: int) -> list[list[int]]:
        return [[poly.terms.get(key, 0) for poly in row] for row in self.entries]

    def max_exponent(self) -> int:
        return max(poly.max_exponent() for row in self.entries for poly in row)

    def total_degree(self) -> int:
        return max(poly.total_degree() for row in self.entries for poly in row)

    def evaluate(self, point: np.ndarray | list[float]) -> np.ndarray:
        """Numeric matrix at a point phi."""
        values = [float(x) for x in point]
        return np.array(
            [[poly.evaluate(values) for poly in row] for row in self.entries]
        )


def build_tilde_m(n: int) -> PolynomialMatrix:
    """Build M~ for n = 2N + 1 battles with exact integer coefficients.

    Args:
        n: Odd battle count with 3 <= n <= 9

    Returns:
        Symmetric PolynomialMatrix

    Raises:
        ValueError: If n is even, below 3 or above 9
    """
    if n < 3 or n % 2 == 0 or n > MAX_CERTIFIED_BATTLES:
        msg = f"Need an odd battle count in [3, {MAX_CERTIFIED_BATTLES}], got {n}"
        raise ValueError(msg)
    n_level = (n - 1) // 2
    everyone = list(range(n))
    phi_all = phi_poly(everyone, n_level, n)
    odds = [SparsePoly.variable(n, t) for t in everyone]

    rows: list[list[SparsePoly]] = [[SparsePoly.zero(n)] * n for _ in everyone]
    for t in everyone:
        others = [i for i in everyone if i != t]
        e_rest = elem_sym(others, n_level, n)
        rows[t][t] = odds[t] * e_rest * (2 * phi_all + odds[t] * e_rest)
        for s in range(t + 1, n):
            rest = [i for i in everyone if i not in (t, s)]
            value = (
                odds[t]
                * odds[s]
                * (1 + odds[t])
                * (1 + odds[s])
                * turan_defect(rest, n_level, n)
            )
            rows[t][s] = rows[s][t] = value

    logger.debug("Built M~ for n=%d", n)
    return PolynomialMatrix(n=n, entries=tuple(tuple(row) for row in rows))


@dataclass(frozen=True)
class CoefficientBlock:
    """Five-value form of one coefficient matrix C_alpha.

    Fields that no entry of the block can carry (for example c11 with fewer
    than two exponent-1 indices) are None on extracted blocks.

    Attributes:
        b: Size of S1, the indices with exponent 1
        a: Size of S2, the indices with exponent 2
        l: L = N - a
        d1: Diagonal value on S1
        d2: Diagonal value on S2
        c11: Off-diagonal value within S1
        c12: Value between S1 and S2
        c22: Off-diagonal value within S2
    """

    b: int
    a: int
    l: int  # noqa: E741
    d1: int | None = None
    d2: int | None = None
    c11: int | None = None
    c12: int | None = None
    c22: int | None = None

    @property
    def size(self) -> int:
        return self.b + self.a

    def values(self) -> tuple[int | None, ...]:
        return tuple(getattr(self, name) for name in BLOCK_VALUES)

    def matches(self, other: "CoefficientBlock") -> bool:
        """Equal shape and equal on every value both blocks carry."""
        if (self.b, self.a, self.l) != (other.b, other.a, other.l):
            return False
        return all(
            mine is None or theirs is None or mine == theirs
            for mine, theirs in zip(self.values(), other.values(), strict=True)
        )

    def to_matrix(self) -> np.ndarray:
        """Dense (b + a) square matrix, S1 indices first; None reads as 0."""
        d1, d2, c11, c12, c22 = (value or 0 for value in self.values())
        b, a = self.b, self.a
        matrix = np.zeros((b + a, b + a))
        matrix[:b, :b] = c11
        matrix[b:, b:] = c22
        matrix[:b, b:] = c12
        matrix[b:, :b] = c12
        matrix[range(b), range(b)] = d1
        matrix[range(b, b + a), range(b, b + a)] = d2
        return matrix

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _uniform(
    values: Iterator[int], alpha: tuple[int, ...], label: str
) -> int | None:
    seen = set(values)
    if len(seen) > 1:
        msg = f"C_alpha for alpha={alpha} has several {label} values: {sorted(seen)}"
        raise CertificateError(msg, alpha)
    return seen.pop() if seen else None


def block_from_matrix(
    matrix: list[list[int]], alpha: tuple[int, ...], n_level: int
) -> CoefficientBlock:
    """Read the five values off one coefficient matrix.

    Raises:
        CertificateError: If the matrix is nonzero outside S1 and S2, or if
            any of the five classes of entries is not constant
    """
    n = len(alpha)
    s1 = [i for i in range(n) if alpha[i] == 1]
    s2 = [i for i in range(n) if alpha[i] == 2]
    support = set(s1) | set(s2)
    for t in range(n):
        for s in range(n):
            if (t not in support or s not in support) and matrix[t][s] != 0:
                msg = (
                    f"C_alpha for alpha={alpha} is nonzero at ({t + 1}, {s + 1}) "
                    "outside its support"
                )
                raise CertificateError(msg, alpha)

    return CoefficientBlock(
        b=len(s1),
        a=len(s2),
        l=n_level - len(s2),
        d1=_uniform((matrix[t][t] for t in s1), alpha, "d1"),
        d2=_uniform((matrix[t][t] for t in s2), alpha, "d2"),
        c11=_uniform((matrix[t][s] for t in s1 for s in s1 if t != s), alpha, "c11"),
        c12=_uniform((matrix[t][s] for t in s1 for s in s2), alpha, "c12"),
        c22=_uniform((matrix[t][s] for t in s2 for s in s2 if t != s), alpha, "c22"),
    )


def extract_blocks(
    pm: PolynomialMatrix,
) -> list[tuple[tuple[int, ...], CoefficientBlock]]:
    """Extract every coefficient block of M~, one per (b, a) class.

    All monomials of the same class must give the same block; the first
    pattern met in key order represents its class.

    Args:
        pm: Matrix from build_tilde_m

    Returns:
        (representative alpha, block) pairs sorted by (b, a)

    Raises:
        CertificateError: On a support or five-value violation, or when two
            patterns of one class disagree
    """
    classes: dict[tuple[int, int], tuple[tuple[int, ...], CoefficientBlock]] = {}
    support = pm.support()
    for key in support:
        alpha = unpack(key, pm.n)
        block = block_from_matrix(pm.coefficient_matrix(key), alpha, pm.n_level)
        shape = (block.b, block.a)
        if shape not in classes:
            classes[shape] = (alpha, block)
            continue
        first_alpha, first = classes[shape]
        if block.values() != first.values():
            msg = (
                f"Patterns {first_alpha} and {alpha} share (b, a) = {shape} "
                f"but give blocks {first.values()} and {block.values()}"
            )
            raise CertificateError(msg, alpha)

    logger.info(
        "Extracted %d monomials in %d (b, a) classes for n=%d",
        len(support),
        len(classes),
        pm.n,
    )
    return [classes[shape] for shape in sorted(classes)]


def _binom(m: int, r: int) -> int:
    if m < 0 or r < 0 or r > m:
        return 0
    return comb(m, r)


def closed_form_block(b: int, a: int, n_level: int) -> CoefficientBlock:
    """Binomial closed forms for the five block values.

    With L = N - a, C(m, r) = 0 outside 0 <= r <= m and [x]+ = max(x, 0):

        d1  = 2 C(b-1, L) [b-1 <= 2L]
        d2  = 2 C(b, L+1) [b <= 2L+1] + C(b, L+1) [b = 2L+2]
        c11 = [C(b-2, L-1) - C(b-2, L)]+
        c12 = [C(b-1, L) - C(b-1, L+1)]+
        c22 = [C(b, L+1) - C(b, L+2)]+

    Example:
        >>> closed_form_block(3, 1, 2).values()
        (4, 6, 0, 1, 2)
    """
    if b < 0 or a < 0:
        msg = f"Block sizes must be nonnegative, got b={b}, a={a}"
        raise ValueError(msg)
    l = n_level - a  # noqa: E741
    d1 = 2 * _binom(b - 1, l) if b - 1 <= 2 * l else 0
    d2 = 2 * _binom(b, l + 1) if b <= 2 * l + 1 else 0
    if b == 2 * l + 2:
        d2 += _binom(b, l + 1)
    return CoefficientBlock(
        b=b,
        a=a,
        l=l,
        d1=d1,
        d2=d2,
        c11=max(_binom(b - 2, l - 1) - _binom(b - 2, l), 0),
        c12=max(_binom(b - 1, l) - _binom(b - 1, l + 1), 0),
        c22=max(_binom(b, l + 1) - _binom(b, l + 2), 0),
    )


def _inequality(name: str, value: int, detail: str) -> CheckResult:
    passed = value >= 0
    return CheckResult(
        name=name,
        passed=passed,
        message=f"{detail} = {value} {'>=' if passed else '<'} 0",
        details={"value": value},
    )


def check_block_psd(block: CoefficientBlock) -> VerificationReport:
    """Certify one block PSD by exact scalar inequalities.

    The block has eigenvalue d1 - c11 on the b - 1 directions inside S1
    summing to zero, d2 - c22 likewise inside S2, and the remaining two
    eigenvalues are those of

        [[d1 + (b-1) c11, sqrt(ab) c12], [sqrt(ab) c12, d2 + (a-1) c22]].

    Inequalities for empty parts are dropped. A floating-point eigenvalue
    check on the dense block runs alongside.
    """
    d1, d2, c11, c12, c22 = (value or 0 for value in block.values())
    b, a = block.b, block.a
    report = VerificationReport(
        title=f"PSD block b={b}, a={a}", values=block.to_dict()
    )
    ones_1 = d1 + (b - 1) * c11
    ones_2 = d2 + (a - 1) * c22
    if b >= 1:
        report.add(_inequality("d1_minus_c11", d1 - c11, "d1 - c11"))
        report.add(_inequality("s1_row_sum", ones_1, "d1 + (b-1) c11"))
    if a >= 1:
        report.add(_inequality("d2_minus_c22", d2 - c22, "d2 - c22"))
        report.add(_inequality("s2_row_sum", ones_2, "d2 + (a-1) c22"))
    if a >= 1 and b >= 1:
        report.add(
            _inequality(
                "determinant",
                ones_1 * ones_2 - a * b * c12 * c12,
                "(d1 + (b-1) c11)(d2 + (a-1) c22) - ab c12^2",
            )
        )

    if block.size:
        matrix = block.to_matrix()
        scale = float(np.max(np.abs(matrix)))
        min_eig = float(np.linalg.eigvalsh(matrix)[0])
        report.add(
            tolerance_check(
                "dense_min_eigenvalue",
                max(-min_eig, 0.0),
                EIGEN_RTOL * max(scale, 1.0),
                {"min_eigenvalue": min_eig},
            )
        )
    return report


@dataclass
class CertificateReport:
    """Outcome of certify for one N."""

    n_level: int
    n_monomials: int
    blocks: list[tuple[tuple[int, ...], CoefficientBlock]] = field(
        default_factory=list
    )
    report: VerificationReport = field(
        default_factory=lambda: VerificationReport(title="certificate")
    )

    @property
    def passed(self) -> bool:
        return self.report.passed

    @property
    def n_classes(self) -> int:
        return len(self.blocks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_level": self.n_level,
            "n_battles": 2 * self.n_level + 1,
            "n_monomials": self.n_monomials,
            "n_classes": self.n_classes,
            "classes": [
                {
                    "alpha": list(alpha),
                    "b": block.b,
                    "a": block.a,
                    "l": block.l,
                    "values": list(block.values()),
                }
                for alpha, block in self.blocks
            ],
            "passed": self.passed,
            "failures": [check.to_dict() for check in self.report.failures],
        }


def certify(n_level: int) -> CertificateReport:
    """Certify M0 PSD for n = 2N + 1 battles in exact integer arithmetic.

    Builds M~, extracts every block, requires each to equal its closed form
    and to pass check_block_psd, and checks the degree bounds of M~. Classes
    (b, a) with no monomial must have an all-zero closed form.

    Args:
        n_level: N with 1 <= N <= 4

    Returns:
        CertificateReport; failed checks name the offending class and alpha

    Raises:
        ValueError: If N is out of range
        CertificateError: If some coefficient matrix breaks the five-value form
    """
    if not 1 <= n_level <= MAX_CERTIFIED_LEVEL:
        msg = f"N must lie in [1, {MAX_CERTIFIED_LEVEL}], got {n_level}"
        raise ValueError(msg)
    start = time.perf_counter()
    n = 2 * n_level + 1
    pm = build_tilde_m(n)
    blocks = extract_blocks(pm)
    report = VerificationReport(title=f"Certificate for N={n_level}")

    report.add(
        CheckResult(
            name="symmetric",
            passed=pm.is_symmetric(),
            message="M~ is symmetric",
        )
    )
    max_exponent = pm.max_exponent()
    report.add(
        CheckResult(
            name="exponent_bound",
            passed=max_exponent <= 2,
            message=f"largest single-variable exponent {max_exponent} (bound 2)",
        )
    )
    degree = pm.total_degree()
    report.add(
        CheckResult(
            name="degree_bound",
            passed=degree <= 2 * n_level + 2,
            message=f"total degree {degree} (bound {2 * n_level + 2})",
        )
    )

    for alpha, block in blocks:
        label = f"b{block.b}_a{block.a}"
        expected = closed_form_block(block.b, block.a, n_level)
        report.add(
            CheckResult(
                name=f"closed_form_{label}",
                passed=block.matches(expected),
                message=(
                    f"extracted {block.values()} vs closed form {expected.values()}"
                ),
                details={"alpha": list(alpha)},
            )
        )
        for check in check_block_psd(block).checks:
            check.name = f"{check.name}_{label}"
            check.details = {**(check.details or {}), "alpha": list(alpha)}
            report.add(check)

    present = {(block.b, block.a) for _, block in blocks}
    for a in range(n + 1):
        for b in range(n + 1 - a):
            if (b, a) in present:
                continue
            empty = _observable(b, a, n_level)
            expected = closed_form_block(b, a, n_level)
            if not empty.matches(expected):
                report.add(
                    CheckResult(
                        name=f"absent_b{b}_a{a}",
                        passed=False,
                        message=(
                            f"no monomial with (b, a) = ({b}, {a}) but closed form "
                            f"gives {expected.values()}"
                        ),
                    )
                )

    report.values = {"n_monomials": len(pm.support()), "n_classes": len(blocks)}
    warn_if_slow(logger, f"certify N={n_level}", time.perf_counter() - start)
    return CertificateReport(
        n_level=n_level,
        n_monomials=len(pm.support()),
        blocks=blocks,
        report=report,
    )


def _observable(b: int, a: int, n_level: int) -> CoefficientBlock:
    """Zero on every value a block of this shape can carry, None elsewhere."""
    return CoefficientBlock(
        b=b,
        a=a,
        l=n_level - a,
        d1=0 if b >= 1 else None,
        d2=0 if a >= 1 else None,
        c11=0 if b >= 2 else None,
        c12=0 if a >= 1 and b >= 1 else None,
        c22=0 if a >= 2 else None,
    )


def spot_check_tilde_m(
    pm: PolynomialMatrix, n_points: int = 100, seed: int = 42
) -> CheckResult:
    """Sample M~ at random positive phi and confirm it is PSD numerically."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        phi = rng.lognormal(mean=0.0, sigma=1.0, size=pm.n)
        matrix = pm.evaluate(phi)
        scale = float(np.max(np.abs(matrix)))
        min_eig = float(np.linalg.eigvalsh(matrix)[0])
        worst = max(worst, -min_eig / scale if scale > 0 else 0.0)
    return tolerance_check(
        "tilde_m_psd_samples", worst, EIGEN_RTOL, {"points": n_points}
    )


def congruence_residual(pm: PolynomialMatrix, phi: np.ndarray | list[float]) -> float:
    """Relative gap between M~(phi) and Phi_N^2 D M0 D, M0 by enumeration.

    M0 = D_p + diag(G) - Cov(X | A) is taken from conditional_moments at
    p_t = 1 / (1 + phi_t).
    """
    phi = np.asarray(phi, dtype=float)
    probs = 1.0 / (1.0 + phi)
    moments = conditional_moments(probs)
    m0 = np.diag(moments.d + moments.g) - moments.sigma_a
    phi_n = float(elementary_symmetric(phi, pm.n_level).sum())
    scale = np.diag(1.0 + phi)
    expected = phi_n**2 * scale @ m0 @ scale
    actual = pm.evaluate(phi)
    return float(np.max(np.abs(actual - expected)) / np.max(np.abs(expected)))

