"""Integer quadratic forms ``7 x1^2 - x2^2 - x3^2 - A x4^2`` and the lattice
of ``Q = -1`` vectors they produce after rescaling.

Lattice points are kept as integer tuples ``m``; the real embedding
``(sqrt(A/7) m1, sqrt(A) m2, sqrt(A) m3, m4)`` is only used to report norms.
Everything that decides membership (Q-value, norm comparisons) is done in
exact integer or rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ResourceError
from .geometry import tube_volume

DEFAULT_SAFETY_CAP = 10**12


@dataclass(frozen=True)
class DiagonalForm:
    coefficients: tuple

    @classmethod
    def for_parameter(cls, a: int) -> "DiagonalForm":
        if a <= 0:
            raise DomainError("A must be a positive integer")
        return cls((7, -1, -1, -int(a)))

    @property
    def parameter(self) -> int:
        return -self.coefficients[3]

    def evaluate(self, x) -> int:
        return sum(c * xi * xi for c, xi in zip(self.coefficients, x))


def is_square_ratio(p: int, q: int) -> bool:
    """True if p/q is the square of a rational."""
    if p * q < 0:
        return False
    f = Fraction(p, q)
    return _is_square(f.numerator) and _is_square(f.denominator)


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def count_mod8_solutions(coefficients) -> int:
    """Tuples in (Z/8)^4, not all even, on which the form vanishes mod 8."""
    count = 0
    for x in itertools.product(range(8), repeat=4):
        if all(xi % 2 == 0 for xi in x):
            continue
        if sum(c * xi * xi for c, xi in zip(coefficients, x)) % 8 == 0:
            count += 1
    return count


def mod8_solubility(form: DiagonalForm | int) -> int:
    """Exhaustive mod-8 solution count for ``7x1^2 - x2^2 - x3^2 - A x4^2``.

    Zero means the form has no primitive rational zero, so its orthogonal group
    is cocompact.
    """
    if not isinstance(form, DiagonalForm):
        form = DiagonalForm.for_parameter(int(form))
    a = form.parameter
    if a % 8 != 1:
        raise DomainError(f"A = {a} is not 1 mod 8")
    return count_mod8_solutions(form.coefficients)


@dataclass(frozen=True)
class ScaledLatticeVector:
    m: tuple
    a: int

    @property
    def integral(self) -> bool:
        """Whether the first coordinate is divisible by 7."""
        return self.m[0] % 7 == 0

    def seven_q(self) -> int:
        """``7 * Q(embedded)`` as an exact integer."""
        m1, m2, m3, m4 = self.m
        return self.a * m1 * m1 - 7 * self.a * (m2 * m2 + m3 * m3) - 7 * m4 * m4

    def seven_norm_sq(self) -> int:
        m1, m2, m3, m4 = self.m
        return self.a * m1 * m1 + 7 * self.a * (m2 * m2 + m3 * m3) + 7 * m4 * m4

    def q_value(self) -> Fraction:
        return Fraction(self.seven_q(), 7)

    def norm_sq(self) -> Fraction:
        return Fraction(self.seven_norm_sq(), 7)

    @property
    def embedded(self):
        m1, m2, m3, m4 = self.m
        r = math.sqrt(self.a)
        return (math.sqrt(self.a / 7) * m1, r * m2, r * m3, float(m4))

    @property
    def norm(self) -> float:
        return math.sqrt(self.seven_norm_sq() / 7)

    def is_w0(self, include_negative: bool = True) -> bool:
        m1, m2, m3, m4 = self.m
        if m1 or m2 or m3:
            return False
        return m4 == 1 or (include_negative and m4 == -1)


def enumerate_q_minus_one(a: int, norm_bound: float, safety_cap: int = DEFAULT_SAFETY_CAP,
                          strict: bool = False) -> list:
    """All lattice vectors with ``Q = -1`` and norm at most ``norm_bound``
    (strictly below it when ``strict``), sorted lexicographically by ``m``.

    For each (m1, m2, m3) the last coordinate is solved from
    ``7 m4^2 = A m1^2 - 7A(m2^2 + m3^2) + 7`` with an integer square root.
    """
    if a < 9:
        raise DomainError("A must be at least 9")
    if norm_bound < 0:
        raise DomainError("norm bound must be nonnegative")
    bound_sq = Fraction(norm_bound) ** 2
    if a * bound_sq > safety_cap:
        raise ResourceError(f"A * bound^2 = {float(a * bound_sq):.3g} exceeds cap {safety_cap}")
    seven_bound = 7 * bound_sq

    def within(vec: ScaledLatticeVector) -> bool:
        n = vec.seven_norm_sq()
        return n < seven_bound if strict else n <= seven_bound

    r1 = math.isqrt(int(seven_bound / a)) + 1
    r23 = math.isqrt(int(bound_sq / a)) + 1
    found = []
    for m1 in range(-r1, r1 + 1):
        if a * m1 * m1 > seven_bound:
            continue
        for m2 in range(-r23, r23 + 1):
            for m3 in range(-r23, r23 + 1):
                rest = a * m1 * m1 - 7 * a * (m2 * m2 + m3 * m3) + 7
                if rest < 0 or rest % 7:
                    continue
                m4 = math.isqrt(rest // 7)
                if m4 * m4 * 7 != rest:
                    continue
                for s4 in {m4, -m4}:
                    vec = ScaledLatticeVector((m1, m2, m3, s4), a)
                    if within(vec):
                        assert vec.seven_q() == -7
                        found.append(vec)
    found.sort(key=lambda v: v.m)
    return found


def norm_gap_check(a: int, include_negative: bool = True):
    """Check that every ``Q = -1`` vector of norm below ``sqrt(A/7)`` is ``w0``
    (or ``-w0`` when ``include_negative``).

    Returns ``(holds, witness)`` with ``witness`` the first offending vector.
    """
    if a % 8 != 1:
        raise DomainError(f"A = {a} is not 1 mod 8")
    for vec in enumerate_q_minus_one(a, math.sqrt(a / 7) + 1.0, strict=False):
        if vec.seven_norm_sq() >= a:
            continue
        if not vec.is_w0(include_negative):
            return False, vec
    return True, None


def separation_constant(a: float, c0: float, c: float) -> float:
    """``log(A)/4 - C0 + log(c)``."""
    if a <= 0 or c <= 0:
        raise DomainError("A and c must be positive")
    return 0.25 * math.log(a) - c0 + math.log(c)


def volume_lower_bound(a: float, area: float, c0: float, c: float) -> float:
    if area < 0:
        raise DomainError("area must be nonnegative")
    if area == 0:
        return 0.0
    sep = separation_constant(a, c0, c)
    if sep < 0:
        raise DomainError(f"separation constant {sep} is negative for these parameters")
    return tube_volume(area, sep)


def lattice_report(a: int, norm_bound: float, include_negative: bool = True) -> dict:
    """JSON-ready enumeration summary."""
    vectors = enumerate_q_minus_one(a, norm_bound)
    threshold = a  # compare 7 * norm^2 against A
    gap = all(v.is_w0(include_negative) for v in vectors if v.seven_norm_sq() < threshold)
    return {
        "A": a,
        "norm_bound": norm_bound,
        "vectors": [list(v.m) for v in vectors],
        "gap_holds": gap,
    }
