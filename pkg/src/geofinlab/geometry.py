"""Hyperbolic geometry over H^2 and H^3 and the SL2 / SO(3,1) formulas used
throughout the package.

Conventions
-----------
* ``a(t) = diag(e^{t/2}, e^{-t/2})`` and ``u(s) = [[1, s], [0, 1]]``.
* Boundary points of H^2 are floats; any infinite float is the single point
  at infinity of R u {inf}.
* ``W`` is the space of 2x2 Hermitian matrices with ``g.A = g^{-*} A g^{-1}``,
  identified with R^4 through the basis ``HERMITIAN_BASIS``. In these
  coordinates ``det`` becomes ``Q(x) = x1^2 - x2^2 - x3^2 - x4^2`` and
  ``w0 = (0, 0, 0, 1)``.
* H^3 is the sheet ``{Q = 1, x1 > 0}``; the reference plane H^2 is ``{x4 = 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateConfigurationError, DomainError

INF = math.inf

DET_TOL = 1e-12
LORENTZ_TOL = 1e-10

# Band in |d(p, plane) - log||g.w0||| <= C0. The observed supremum is log(2)/2;
# log 2 is the frozen regression value.
PLANE_DISTANCE_C0 = math.log(2.0)
# sup |Psi(v, w)| over unit v, w (coordinate norm on W).
PSI_BOUND_C0 = math.sqrt(2.0)
# sup ||w|| over Q(w) = -1 with ||pi_w0(w)|| <= 1.
PSI_NORM_C1 = math.sqrt(3.0)
NONCONTRACTING_CONSTANT = 4.0

J = np.diag([1.0, -1.0, -1.0, -1.0])
W0 = np.array([0.0, 0.0, 0.0, 1.0])
P0 = np.array([1.0, 0.0, 0.0, 0.0])

HERMITIAN_BASIS = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
)
W0_MATRIX = HERMITIAN_BASIS[3]

# Fixed element of K_G sending (0, 1, 0, 0) to w0.
K_PRIME = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)


# ---------------------------------------------------------------------------
# Boundary of H^2
# ---------------------------------------------------------------------------

def is_infinite(x) -> bool:
    return math.isinf(x)


def _same_point(x, y) -> bool:
    if is_infinite(x) or is_infinite(y):
        return is_infinite(x) and is_infinite(y)
    return x == y


@dataclass(frozen=True)
class GeodesicLine:
    """A complete geodesic of H^2 given by its two labeled boundary endpoints."""

    x: float
    y: float

    def __post_init__(self):
        if _same_point(self.x, self.y):
            raise DegenerateConfigurationError(f"geodesic endpoints coincide: {self.x}")

    @property
    def endpoints(self):
        return (self.x, self.y)


def cross_ratio(a, b, c, d) -> float:
    """``[a, b; c, d] = (a-c)(b-d) / ((a-d)(b-c))`` with the point at infinity
    handled by the limit formula (factors containing it cancel)."""
    pts = (a, b, c, d)
    for i in range(4):
        for j in range(i + 1, 4):
            if _same_point(pts[i], pts[j]):
                raise DegenerateConfigurationError(
                    f"cross ratio of coincident points {pts[i]!r} (positions {i}, {j})"
                )
    if is_infinite(a):
        return (b - d) / (b - c)
    if is_infinite(b):
        return (a - c) / (a - d)
    if is_infinite(c):
        return (b - d) / (a - d)
    if is_infinite(d):
        return (a - c) / (b - c)
    return (a - c) * (b - d) / ((a - d) * (b - c))


def _angle(x) -> float:
    # Cayley transform R u {inf} -> circle; inf sits at angle pi.
    if is_infinite(x):
        return math.pi
    return 2.0 * math.atan(x)


def _in_open_arc(p, start, end) -> bool:
    """True if ``p`` lies strictly inside the counterclockwise arc start -> end."""
    two_pi = 2.0 * math.pi
    span = (_angle(end) - _angle(start)) % two_pi
    off = (_angle(p) - _angle(start)) % two_pi
    return 0.0 < off < span


class LineDistance(NamedTuple):
    distance: float
    relation: str  # "disjoint", "asymptotic" or "intersecting"


def line_relation(l1: GeodesicLine, l2: GeodesicLine) -> str:
    shared = sum(_same_point(p, q) for p in l1.endpoints for q in l2.endpoints)
    if shared:
        return "asymptotic"
    inside = sum(_in_open_arc(p, l1.x, l1.y) for p in l2.endpoints)
    return "intersecting" if inside == 1 else "disjoint"


def circular_labels(l1: GeodesicLine, l2: GeodesicLine):
    """Relabel endpoints of two disjoint lines so that x1, y1, x2, y2 are in
    counterclockwise circular order."""
    if any(_in_open_arc(p, l1.x, l1.y) for p in l2.endpoints):
        x1, y1 = l1.y, l1.x
    else:
        x1, y1 = l1.x, l1.y
    # l2 now sits on the arc y1 -> x1; x2 is its endpoint met first from y1
    two_pi = 2.0 * math.pi
    c, d = l2.endpoints
    off_c = (_angle(c) - _angle(y1)) % two_pi
    off_d = (_angle(d) - _angle(y1)) % two_pi
    x2, y2 = (c, d) if off_c < off_d else (d, c)
    return x1, y1, x2, y2


def line_distance(l1: GeodesicLine, l2: GeodesicLine) -> LineDistance:
    """Hyperbolic distance between two geodesics via
    ``sinh(d/2) = sqrt|[x1, x2; y2, y1]|``.

    Intersecting or asymptotic pairs return distance 0 together with the
    relation flag instead of raising.
    """
    relation = line_relation(l1, l2)
    if relation != "disjoint":
        return LineDistance(0.0, relation)
    x1, y1, x2, y2 = circular_labels(l1, l2)
    cr = abs(cross_ratio(x1, x2, y2, y1))
    return LineDistance(2.0 * math.asinh(math.sqrt(cr)), relation)


def halfplane_distance(z: complex, w: complex) -> float:
    """Distance in the upper half plane model."""
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


# ---------------------------------------------------------------------------
# Mobius maps (real 2x2 matrices, positive determinant)
# ---------------------------------------------------------------------------

def mobius_boundary(m: np.ndarray, x) -> float:
    """Action of a real Mobius matrix on R u {inf}."""
    a, b, c, d = (float(v) for v in np.asarray(m).ravel())
    if is_infinite(x):
        return INF if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return INF
    return (a * x + b) / den


def mobius_point(m: np.ndarray, z: complex) -> complex:
    a, b, c, d = (float(v) for v in np.asarray(m).ravel())
    return (a * z + b) / (c * z + d)


def normalize_mobius(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    det = np.linalg.det(m)
    if det <= 0:
        raise DomainError("Mobius matrix must have positive determinant")
    return m / math.sqrt(det)


def mobius_to_zero_one(u, v) -> np.ndarray:
    """An orientation preserving Mobius map with u -> 0 and v -> 1, or with
    u -> 1 and v -> 0 when the first is orientation reversing."""
    for p, q in ((u, v), (v, u)):
        # z -> (z - p) / (z - r) * (q - r) / (q - p) with r chosen as a third point
        r = _third_point(p, q)
        if is_infinite(p):
            m = np.array([[0.0, q - r], [1.0, -r]])
        elif is_infinite(q):
            m = np.array([[1.0, -p], [1.0, -r]])
        elif is_infinite(r):
            m = np.array([[1.0, -p], [0.0, q - p]])
        else:
            m = np.array([[q - r, -p * (q - r)], [q - p, -r * (q - p)]])
        if np.linalg.det(m) > 0:
            return normalize_mobius(m)
    raise AssertionError("unreachable: one of the two orientations is positive")


def _third_point(p, q):
    if not is_infinite(p) and not is_infinite(q):
        return INF
    finite = q if is_infinite(p) else p
    return finite + 1.0


# Elliptic involution swapping 0 <-> 1 and the two arcs of the boundary cut by them.
SWAP_ZERO_ONE = np.array([[1.0, -1.0], [2.0, -1.0]])


# ---------------------------------------------------------------------------
# SL2 and the QR decomposition
# ---------------------------------------------------------------------------

def a_matrix(t: float) -> np.ndarray:
    return np.diag([math.exp(t / 2.0), math.exp(-t / 2.0)])


def u_matrix(s) -> np.ndarray:
    dtype = complex if isinstance(s, complex) else float
    return np.array([[1, s], [0, 1]], dtype=dtype)


def check_unimodular(g: np.ndarray, tol: float = DET_TOL) -> None:
    g = np.asarray(g)
    if g.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {g.shape}")
    det = np.linalg.det(g)
    if abs(det - 1.0) > tol * max(1.0, float(np.abs(g).max()) ** 2):
        raise DomainError(f"determinant {det} is not 1")


class QR(NamedTuple):
    k: np.ndarray
    t: float
    s: complex | float


def qr_decompose(g: np.ndarray) -> QR:
    """Write ``g = k a(t) u(s)`` with ``k`` in SO(2) (real input) or SU(2).

    The triangular factor ``a(t) u(s)`` has positive real diagonal, which makes
    the decomposition unique and continuous.
    """
    g = np.asarray(g)
    check_unimodular(g, tol=1e-9)
    q, r = np.linalg.qr(g)
    diag = np.diag(r)
    phases = diag / np.abs(diag)
    q = q * phases[np.newaxis, :]
    r = np.conj(phases)[:, np.newaxis] * r
    r11 = float(np.real(r[0, 0]))
    t = 2.0 * math.log(r11)
    s = r[0, 1] / r11
    if np.isrealobj(g):
        s = float(np.real(s))
    else:
        s = complex(s)
    return QR(q, t, s)


def siegel_height(h: np.ndarray) -> float:
    """``-log ||h e1||``."""
    h = np.asarray(h)
    return -math.log(float(np.linalg.norm(h[:, 0])))


# ---------------------------------------------------------------------------
# The representation W: Hermitian matrices and Lorentz coordinates
# ---------------------------------------------------------------------------

def q_form(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x[0] ** 2 - x[1] ** 2 - x[2] ** 2 - x[3] ** 2)


def to_hermitian(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return sum(xi * b for xi, b in zip(x, HERMITIAN_BASIS))


def from_hermitian(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    return np.array(
        [
            0.5 * (a[0, 0] + a[1, 1]).real,
            0.5 * (a[0, 0] - a[1, 1]).real,
            a[0, 1].real,
            a[0, 1].imag,
        ]
    )


def is_hermitian(a: np.ndarray, tol: float = 1e-14) -> bool:
    a = np.asarray(a)
    return a.shape == (2, 2) and np.abs(a - a.conj().T).max() <= tol * max(1.0, np.abs(a).max())


def hermitian_action(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``g.A = g^{-*} A g^{-1}``; the result is re-symmetrized."""
    g = np.asarray(g, dtype=complex)
    check_unimodular(g, tol=1e-9)
    ginv = np.linalg.inv(g)
    out = ginv.conj().T @ np.asarray(a, dtype=complex) @ ginv
    return 0.5 * (out + out.conj().T)


def lorentz_matrix(g: np.ndarray) -> np.ndarray:
    """The 4x4 real matrix of ``A -> g.A`` in the basis ``HERMITIAN_BASIS``."""
    cols = [from_hermitian(hermitian_action(g, b)) for b in HERMITIAN_BASIS]
    return np.column_stack(cols)


def is_lorentz(m: np.ndarray, tol: float = LORENTZ_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    return m.shape == (4, 4) and np.abs(m.T @ J @ m - J).max() <= tol * scale


def lorentz_inverse(m: np.ndarray) -> np.ndarray:
    return J @ np.asarray(m).T @ J


def lorentz_a(t: float) -> np.ndarray:
    """Image of ``a(t)``: a boost in the (x1, x2) plane."""
    ch, sh = math.cosh(t), math.sinh(t)
    m = np.eye(4)
    m[0, 0] = m[1, 1] = ch
    m[0, 1] = m[1, 0] = -sh
    return m


def rotation_to_first_axis(u) -> np.ndarray:
    """A rotation R in SO(3) with ``R u = |u| e1`` (minimal angle)."""
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if n == 0:
        raise DomainError("cannot rotate the zero vector")
    u = u / n
    e = np.array([1.0, 0.0, 0.0])
    axis = np.cross(u, e)
    s = np.linalg.norm(axis)
    c = float(u @ e)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([-1.0, 1.0, -1.0])
    k = axis / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * kx @ kx


def embed_k(rot3: np.ndarray) -> np.ndarray:
    """SO(3) acting on the last three coordinates (the stabilizer of p0)."""
    m = np.eye(4)
    m[1:, 1:] = rot3
    return m


class Regulation(NamedTuple):
    k: np.ndarray
    k_prime: np.ndarray
    t: float


def hyperbolic_regulation(v, tol: float = 1e-9) -> Regulation:
    """Find ``k, k'`` in K_G and ``t`` with ``k' a(t) k . v = w0`` and
    ``cosh(t) <= ||v||`` for a vector with ``Q(v) = -1``."""
    v = np.asarray(v, dtype=float)
    qv = q_form(v)
    if abs(qv + 1.0) > tol * max(1.0, float(v @ v)):
        raise DomainError(f"Q(v) = {qv}, expected -1")
    k = embed_k(rotation_to_first_axis(v[1:]))
    t = math.asinh(v[0])
    return Regulation(k, K_PRIME.copy(), t)


def signed_plane_distance(p, tol: float = 1e-9) -> float:
    """Signed distance from a point of H^3 (hyperboloid model) to the plane
    ``{x4 = 0}``; positive on the side ``x4 > 0``."""
    p = np.asarray(p, dtype=float)
    qp = q_form(p)
    if abs(qp - 1.0) > tol * max(1.0, float(p @ p)) or p[0] <= 0:
        raise DomainError(f"point is not on the upper sheet of Q = 1 (Q = {qp}, x1 = {p[0]})")
    return math.asinh(p[3])


def plane_transverse_coordinate(g: np.ndarray) -> float:
    """``(g.w0)_1`` for a Lorentz matrix g; equals sinh of the signed distance."""
    return float((np.asarray(g) @ W0)[0])


def plane_distance_exact(g2: np.ndarray, g1: np.ndarray) -> float:
    w = np.asarray(g2) @ lorentz_inverse(g1) @ W0
    return abs(math.asinh(w[0]))


def plane_distance_linearized(g2: np.ndarray, g1: np.ndarray):
    """``(log ||g2 g1^{-1} w0||, C0)``; the exact distance lies within C0 of
    the first entry."""
    w = np.asarray(g2) @ lorentz_inverse(g1) @ W0
    return math.log(float(np.linalg.norm(w))), PLANE_DISTANCE_C0


# ---------------------------------------------------------------------------
# The pairing Psi between V = C^2 and W
# ---------------------------------------------------------------------------

def psi_form(v, w: np.ndarray) -> float:
    """``Psi(v, w) = v^* w v`` (real for Hermitian w)."""
    v = np.asarray(v, dtype=complex)
    return float(np.real(v.conj() @ np.asarray(w, dtype=complex) @ v))


def psi_closed_form(v) -> float:
    """``Psi(v, w0) = 2 Im(x conj(y))`` for ``v = (x, y)``."""
    x, y = complex(v[0]), complex(v[1])
    return 2.0 * (x * y.conjugate()).imag


def stabilizing_element(v) -> np.ndarray:
    """An ``h`` in SL2(R) minimizing ``||h v||^2`` over SL2(R), built by making
    the real and imaginary parts of ``h v`` orthogonal with equal norms.

    Raises ``DomainError`` when ``Psi(v, w0) = 0`` (the infimum is not attained).
    """
    v = np.asarray(v, dtype=complex)
    m = np.column_stack([v.real, v.imag])
    det = float(np.linalg.det(m))
    if abs(det) < 1e-300:
        raise DomainError("Psi(v, w0) = 0: real and imaginary parts are dependent")
    orth = np.eye(2) if det > 0 else np.diag([1.0, -1.0])
    return math.sqrt(abs(det)) * orth @ np.linalg.inv(m)


# ---------------------------------------------------------------------------
# Heights
# ---------------------------------------------------------------------------

def project_w0(x) -> np.ndarray:
    """Quotient map W -> W / R w0 in coordinates (drop the w0 coordinate)."""
    return np.asarray(x, dtype=float)[:3]


def hs_norm(a: np.ndarray) -> float:
    """Hilbert-Schmidt norm sqrt(a^2 + 2|b|^2 + d^2) of a Hermitian matrix."""
    return float(np.linalg.norm(np.asarray(a)))


def project_w0_matrix(a: np.ndarray) -> np.ndarray:
    """Orthogonal (Hilbert-Schmidt) projection killing the w0 component."""
    x = from_hermitian(a)
    x[3] = 0.0
    return to_hermitian(x)


def noncontracting_ratio(k: np.ndarray, w: np.ndarray, t: float) -> float:
    """``||pi(k a(t).w)|| / (e^t ||pi(k.w)||)`` in the Hilbert-Schmidt norm."""
    lhs = hs_norm(project_w0_matrix(hermitian_action(k @ a_matrix(t), w)))
    base = hs_norm(project_w0_matrix(hermitian_action(k, w)))
    if base == 0.0:
        return 0.0 if lhs == 0.0 else INF
    return lhs / (math.exp(t) * base)


def noncontracting_bound_check(k: np.ndarray, w: np.ndarray, t: float, tol: float = 1e-12) -> bool:
    """Check ``||pi(k a(t).w)|| <= 4 e^t ||pi(k.w)||`` for ``k`` in SU(2),
    ``w`` Hermitian with vanishing upper-left entry and ``t >= 0``."""
    k = np.asarray(k, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if t < 0:
        raise DomainError("t must be nonnegative")
    if np.abs(k.conj().T @ k - np.eye(2)).max() > 1e-10 or abs(np.linalg.det(k) - 1) > 1e-10:
        raise DomainError("k is not in SU(2)")
    if not is_hermitian(w, tol=1e-12) or abs(w[0, 0]) > tol * max(1.0, np.abs(w).max()):
        raise DomainError("w must be Hermitian with zero upper-left entry")
    lhs = hs_norm(project_w0_matrix(hermitian_action(k @ a_matrix(t), w)))
    rhs = NONCONTRACTING_CONSTANT * math.exp(t) * hs_norm(project_w0_matrix(hermitian_action(k, w)))
    return lhs <= rhs


def height_over_vectors(g: np.ndarray, family: Sequence, mode: str = "cusp") -> float:
    """Height of ``g`` with respect to a finite family of vectors.

    ``mode="cusp"``: family in V = C^2, value ``max(0, max -log ||g v||)`` over
    vectors with ``||g v|| < 1``.

    ``mode="orbit"``: family in W (4 coordinates), ``g`` either a 4x4 Lorentz
    matrix or an element of SL2(C); value ``max -log ||pi_w0(g.w)||`` with
    ``inf`` when some image lies on the line through w0.
    """
    if len(family) == 0:
        raise DomainError("empty vector family")
    g = np.asarray(g)
    if mode == "cusp":
        best = 0.0
        for v in family:
            n = float(np.linalg.norm(g @ np.asarray(v, dtype=complex)))
            if n < 1.0:
                best = max(best, -math.log(n) if n > 0 else INF)
        return best
    if mode == "orbit":
        m = lorentz_matrix(g) if g.shape == (2, 2) else g
        best = -INF
        for w in family:
            n = float(np.linalg.norm(project_w0(m @ np.asarray(w, dtype=float))))
            if n <= 1e-300:
                return INF
            best = max(best, -math.log(n))
        return best
    raise DomainError(f"unknown mode {mode!r}")


def tube_volume(area: float, t0: float) -> float:
    """Volume of the tube of half-width t0 over a region of the plane:
    ``area * (t0 + sinh(t0) cosh(t0))``."""
    if area < 0 or t0 < 0:
        raise DomainError("area and t0 must be nonnegative")
    return area * (t0 + math.sinh(t0) * math.cosh(t0))
