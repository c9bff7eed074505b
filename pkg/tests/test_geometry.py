import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from geofinlab import geometry as G
from geofinlab.errors import DegenerateConfigurationError, DomainError

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def random_sl2c(rng):
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return g / np.sqrt(np.linalg.det(g))


def random_sl2r(rng):
    while True:
        g = rng.standard_normal((2, 2))
        d = np.linalg.det(g)
        if abs(d) > 1e-3:
            if d < 0:
                g[:, 0] *= -1
                d = -d
            return g / math.sqrt(d)


def random_su2(rng):
    a = rng.standard_normal(4)
    a /= np.linalg.norm(a)
    x, y = a[0] + 1j * a[1], a[2] + 1j * a[3]
    return np.array([[x, -y.conjugate()], [y, x.conjugate()]])


# ---------------------------------------------------------------- cross ratio

def test_cross_ratio_with_infinity_uses_limit():
    assert G.cross_ratio(0, 1, math.inf, -1) == pytest.approx(2.0)


def test_cross_ratio_hand_expansion_at_t2():
    e2 = math.exp(2)
    val = G.cross_ratio(e2, -1, 1, -e2)
    assert val == pytest.approx((e2 - 1) ** 2 / (-4 * e2), rel=1e-14)
    assert abs(val) == pytest.approx(math.sinh(1) ** 2, rel=1e-14)
    assert abs(val) == pytest.approx(1.38109, abs=1e-5)


def test_cross_ratio_rejects_coincident_points():
    with pytest.raises(DegenerateConfigurationError):
        G.cross_ratio(0, 1, 1, 0)


@given(st.lists(finite, min_size=4, max_size=4, unique=True),
       st.floats(0.1, 5), st.floats(-5, 5))
def test_cross_ratio_invariant_under_affine_maps(pts, scale, shift):
    if min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]) < 1e-3:
        return
    moved = [scale * p + shift for p in pts]
    assert G.cross_ratio(*moved) == pytest.approx(G.cross_ratio(*pts), rel=1e-7, abs=1e-9)


@given(st.lists(finite, min_size=4, max_size=4, unique=True))
def test_cross_ratio_invariant_under_inversion(pts):
    if min(abs(p) for p in pts) < 1e-2 or min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]) < 1e-3:
        return
    inv = [-1.0 / p for p in pts]  # z -> -1/z lies in PSL2(R)
    assert G.cross_ratio(*inv) == pytest.approx(G.cross_ratio(*pts), rel=1e-6, abs=1e-9)


# ---------------------------------------------------------------- line distance

@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0])
def test_concentric_lines_are_t_apart(t):
    d = G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(math.exp(t), -math.exp(t)))
    assert d.relation == "disjoint"
    assert abs(d.distance - t) <= 1e-9


def test_identical_lines_report_asymptotic_zero():
    d = G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(1, -1))
    assert d == (0.0, "asymptotic")


def test_crossing_lines_report_intersecting():
    assert G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(0, 2)).relation == "intersecting"


def _semicircle_point(a, b, theta):
    c, r = (a + b) / 2, abs(b - a) / 2
    return complex(c + r * math.cos(theta), r * math.sin(theta))


def geodesic_min_distance(l1, l2):
    """Oracle: minimize the point-to-point distance over both semicircles."""
    def f(p):
        th1 = math.pi / (1 + math.exp(-p[0]))
        th2 = math.pi / (1 + math.exp(-p[1]))
        return G.halfplane_distance(_semicircle_point(*l1, th1), _semicircle_point(*l2, th2))

    best = min((minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
                for x0 in ([0, 0], [1, -1], [-1, 1], [2, 2])), key=lambda r: r.fun)
    return best.fun


@pytest.mark.parametrize("l2", [(2, 4), (1.5, 10), (-7, -3)])
def test_line_distance_matches_minimization_oracle(l2):
    got = G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(*l2)).distance
    assert got == pytest.approx(geodesic_min_distance((-1, 1), l2), abs=1e-6)


def test_line_through_infinity_handled():
    # the vertical line Re z = 3 is the limit of ever wider semicircles from 3
    d = G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(3, math.inf)).distance
    approx = G.line_distance(G.GeodesicLine(-1, 1), G.GeodesicLine(3, 1e9)).distance
    assert d == pytest.approx(approx, abs=1e-6)


@settings(max_examples=60)
@given(st.floats(-3, 3), st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.05, 3))
def test_line_distance_symmetric_and_mobius_invariant(a, w1, gap, w2):
    l1 = G.GeodesicLine(a, a + w1)
    l2 = G.GeodesicLine(a + w1 + gap, a + w1 + gap + w2)
    d = G.line_distance(l1, l2).distance
    assert G.line_distance(l2, l1).distance == pytest.approx(d, rel=1e-9, abs=1e-12)
    m = np.array([[2.0, 1.0], [1.0, 1.0]])
    img = lambda l: G.GeodesicLine(G.mobius_boundary(m, l.x), G.mobius_boundary(m, l.y))
    assert G.line_distance(img(l1), img(l2)).distance == pytest.approx(d, rel=1e-7, abs=1e-9)


def test_mobius_to_zero_one_sends_points():
    m = G.mobius_to_zero_one(2.0, 5.0)
    assert np.linalg.det(m) == pytest.approx(1.0)
    images = sorted([G.mobius_boundary(m, 2.0), G.mobius_boundary(m, 5.0)])
    assert images == pytest.approx([0.0, 1.0], abs=1e-12)


# ---------------------------------------------------------------- QR

def gram_schmidt(g):
    c1, c2 = g[:, 0], g[:, 1]
    r11 = np.linalg.norm(c1)
    q1 = c1 / r11
    r12 = np.vdot(q1, c2)
    w = c2 - r12 * q1
    r22 = np.linalg.norm(w)
    return np.column_stack([q1, w / r22]), np.array([[r11, r12], [0, r22]])


def test_qr_identity():
    k, t, s = G.qr_decompose(np.eye(2))
    assert np.allclose(k, np.eye(2)) and t == pytest.approx(0) and s == pytest.approx(0)


def test_qr_of_unipotent():
    k, t, s = G.qr_decompose(G.u_matrix(2.5))
    assert np.allclose(k, np.eye(2)) and abs(t) < 1e-14 and s == pytest.approx(2.5)


def test_qr_matches_gram_schmidt():
    g = np.array([[1.0, 0.0], [1.0, 1.0]])
    k, t, s = G.qr_decompose(g)
    q, r = gram_schmidt(g)
    assert np.allclose(k, q, atol=1e-14)
    assert t == pytest.approx(2 * math.log(r[0, 0]))
    assert s == pytest.approx(r[0, 1] / r[0, 0])
    assert np.allclose(k @ G.a_matrix(t) @ G.u_matrix(s), g, atol=1e-14)


def test_qr_complex_reconstructs():
    rng = np.random.default_rng(1)
    for _ in range(200):
        g = random_sl2c(rng)
        k, t, s = G.qr_decompose(g)
        assert np.allclose(k.conj().T @ k, np.eye(2), atol=1e-12)
        assert np.allclose(k @ G.a_matrix(t) @ G.u_matrix(s), g, atol=1e-10)


def test_qr_rejects_non_unimodular():
    with pytest.raises(DomainError):
        G.qr_decompose(np.diag([2.0, 2.0]))


# ---------------------------------------------------------------- heights

def test_siegel_height_values():
    assert G.siegel_height(np.eye(2)) == 0.0
    assert G.siegel_height(G.a_matrix(-3.0)) == pytest.approx(1.5)


def test_siegel_height_invariant_under_upper_unipotents_and_rotations():
    rng = np.random.default_rng(2)
    for _ in range(200):
        h = random_sl2r(rng)
        th = rng.uniform(0, 2 * math.pi)
        k = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        b = G.u_matrix(rng.normal())
        assert G.siegel_height(k @ h @ b) == pytest.approx(G.siegel_height(h), abs=1e-10)


def test_cusp_height_modes():
    assert G.height_over_vectors(np.eye(2), [[1, 0], [0, 2]]) == 0.0
    assert G.height_over_vectors(G.a_matrix(-4.0), [[1, 0]]) == pytest.approx(2.0)
    h = G.a_matrix(0.3) @ G.u_matrix(1.0)
    assert G.height_over_vectors(h, [G.W0], mode="orbit") == math.inf


# ---------------------------------------------------------------- Hermitian model

def test_basis_round_trip_and_q():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        x = rng.standard_normal(4)
        a = G.to_hermitian(x)
        assert G.is_hermitian(a)
        assert np.allclose(G.from_hermitian(a), x)
        assert np.linalg.det(a).real == pytest.approx(G.q_form(x), abs=1e-12 * max(1, x @ x))


def test_action_preserves_determinant_and_hermitian():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        g = random_sl2c(rng)
        a = G.to_hermitian(rng.standard_normal(4))
        b = G.hermitian_action(g, a)
        assert G.is_hermitian(b, tol=1e-12)
        scale = max(1.0, np.abs(b).max() ** 2)
        assert abs(np.linalg.det(b) - np.linalg.det(a)) <= 1e-10 * scale


def test_identity_acts_trivially():
    a = G.to_hermitian([1.0, 2.0, -0.5, 0.25])
    assert np.allclose(G.hermitian_action(np.eye(2), a), a)


def test_real_group_stabilizes_w0():
    rng = np.random.default_rng(5)
    for _ in range(500):
        h = random_sl2r(rng)
        assert np.allclose(G.hermitian_action(h, G.W0_MATRIX), G.W0_MATRIX, atol=1e-10)


def test_lorentz_matrix_is_homomorphism():
    rng = np.random.default_rng(6)
    for _ in range(200):
        g, h = random_sl2c(rng), random_sl2c(rng)
        lg, lh = G.lorentz_matrix(g), G.lorentz_matrix(h)
        assert G.is_lorentz(lg)
        assert np.allclose(G.lorentz_matrix(g @ h), lg @ lh, atol=1e-8 * np.abs(lg).max() * np.abs(lh).max())
        assert np.allclose(G.lorentz_inverse(lg) @ lg, np.eye(4), atol=1e-8 * np.abs(lg).max() ** 2)


@given(st.floats(-5, 5))
def test_boost_is_image_of_diagonal(t):
    assert np.allclose(G.lorentz_matrix(G.a_matrix(t)), G.lorentz_a(t), atol=1e-9 * math.exp(abs(t)))


# ---------------------------------------------------------------- regulation

def test_regulation_of_w0():
    k, kp, t = G.hyperbolic_regulation(G.W0)
    assert t == 0.0
    assert np.allclose(kp, G.K_PRIME)
    assert np.allclose(kp @ G.lorentz_a(t) @ k @ G.W0, G.W0)


def test_regulation_cosh_bound_on_boosted_axis():
    v = np.array([math.sinh(1), math.cosh(1), 0, 0])
    k, kp, t = G.hyperbolic_regulation(v)
    assert math.cosh(t) == pytest.approx(math.cosh(1))
    assert math.cosh(t) <= np.linalg.norm(v)
    assert np.allclose(kp @ G.lorentz_a(t) @ k @ v, G.W0, atol=1e-12)


def test_regulation_random_reconstruction():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        u = rng.standard_normal(3)
        x1 = rng.normal(scale=3)
        u *= math.sqrt(1 + x1 * x1) / np.linalg.norm(u)
        v = np.concatenate([[x1], u])
        k, kp, t = G.hyperbolic_regulation(v)
        assert G.is_lorentz(k) and G.is_lorentz(kp)
        assert np.abs(kp @ G.lorentz_a(t) @ k @ v - G.W0).max() <= 1e-9 * max(1, np.linalg.norm(v))
        assert math.cosh(t) <= np.linalg.norm(v) * (1 + 1e-12)


def test_regulation_rejects_wrong_level_set():
    with pytest.raises(DomainError):
        G.hyperbolic_regulation([2, 1, 1, 1])


# ---------------------------------------------------------------- plane distance

def test_plane_distance_on_plane_and_normal_geodesic():
    assert G.signed_plane_distance([1, 0, 0, 0]) == 0.0
    for t in (0.3, 1.0, -2.0):
        assert G.signed_plane_distance([math.cosh(t), 0, 0, math.sinh(t)]) == pytest.approx(t)


def min_distance_to_plane(p):
    def d(q):
        r, th = q
        pt = np.array([math.cosh(r), math.sinh(r) * math.cos(th), math.sinh(r) * math.sin(th), 0.0])
        inner = p[0] * pt[0] - p[1] * pt[1] - p[2] * pt[2] - p[3] * pt[3]
        return math.acosh(max(1.0, inner))

    grid = [(r, th) for r in np.linspace(0, 4, 21) for th in np.linspace(0, 2 * math.pi, 24, endpoint=False)]
    start = min(grid, key=d)
    return minimize(d, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12}).fun


def test_plane_distance_matches_sampled_minimum():
    rng = np.random.default_rng(8)
    for _ in range(30):
        spatial = rng.normal(size=3)
        p = np.concatenate([[math.sqrt(1 + spatial @ spatial)], spatial])
        assert abs(G.signed_plane_distance(p)) == pytest.approx(min_distance_to_plane(p), abs=1e-4)


def test_linearized_plane_distance_trivial_and_bounded():
    log_norm, c0 = G.plane_distance_linearized(np.eye(4), np.eye(4))
    assert log_norm == 0.0 and G.plane_distance_exact(np.eye(4), np.eye(4)) == 0.0
    assert c0 == pytest.approx(math.log(2))
    deficits = []
    for t in np.linspace(0, 20, 401):
        # conjugating by K_PRIME turns the boost toward the plane normal
        g2 = G.K_PRIME @ G.lorentz_a(t) @ G.lorentz_inverse(G.K_PRIME)
        exact = G.plane_distance_exact(g2, np.eye(4))
        approx, _ = G.plane_distance_linearized(g2, np.eye(4))
        deficits.append(exact - approx)
    assert max(abs(d) for d in deficits) <= math.log(2)
    assert max(abs(d) for d in deficits) == pytest.approx(0.5 * math.log(2), abs=1e-6)


def test_linearization_band_over_random_level_set():
    rng = np.random.default_rng(9)
    x = rng.normal(scale=10, size=(100_000, 4))
    spatial = np.linalg.norm(x[:, 1:], axis=1)
    x[:, 1:] *= (np.sqrt(1 + x[:, 0] ** 2) / spatial)[:, None]
    gap = np.abs(np.arcsinh(x[:, 0])) - np.log(np.linalg.norm(x, axis=1))
    assert gap.min() >= -math.log(2) and gap.max() <= math.log(2)


# ---------------------------------------------------------------- Psi

def test_psi_examples():
    assert G.psi_form([1, 0], G.W0_MATRIX) == 0.0
    v = np.array([1, 1j])
    assert G.psi_form(v, G.W0_MATRIX) == pytest.approx(-2.0)
    h = G.stabilizing_element(v)
    assert np.linalg.norm(h @ v) ** 2 == pytest.approx(2.0)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_psi_closed_form(x, y):
    assert G.psi_form([x, y], G.W0_MATRIX) == pytest.approx(G.psi_closed_form([x, y]), abs=1e-9)


def test_psi_invariance():
    rng = np.random.default_rng(10)
    for _ in range(10_000):
        g = random_sl2c(rng)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        w = G.to_hermitian(rng.standard_normal(4))
        before = G.psi_form(v, w)
        after = G.psi_form(g @ v, G.hermitian_action(g, w))
        assert abs(after - before) <= 1e-10 * max(1.0, np.linalg.norm(g) ** 2 * np.linalg.norm(v) ** 2 * 10)


def test_stabilizing_element_in_sl2r_and_optimal():
    rng = np.random.default_rng(11)
    for _ in range(500):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        h = G.stabilizing_element(v)
        assert np.isrealobj(h) and np.linalg.det(h) == pytest.approx(1.0)
        hv = h @ v
        assert np.linalg.norm(hv) ** 2 == pytest.approx(abs(G.psi_closed_form(v)), rel=1e-9)
        # any other real unimodular image is at least as long
        g = random_sl2r(rng)
        assert np.linalg.norm(g @ v) ** 2 >= abs(G.psi_closed_form(v)) * (1 - 1e-9)


def test_stabilizing_element_rejects_real_vectors():
    with pytest.raises(DomainError):
        G.stabilizing_element([1.0, 2.0])


# ---------------------------------------------------------------- noncontraction

def test_noncontracting_trivial_time():
    rng = np.random.default_rng(12)
    k = random_su2(rng)
    w = G.to_hermitian([0.0, 0.0, 1.0, 0.5])
    w[0, 0] = 0
    w[1, 1] = 0
    assert G.noncontracting_ratio(k, w, 0.0) == pytest.approx(1.0)
    assert G.noncontracting_bound_check(np.eye(2), G.W0_MATRIX, 2.0)


def test_noncontracting_monte_carlo():
    rng = np.random.default_rng(13)
    for _ in range(20_000):
        k = random_su2(rng)
        b = rng.normal() + 1j * rng.normal()
        w = np.array([[0, b], [b.conjugate(), rng.normal()]])
        assert G.noncontracting_bound_check(k, w, rng.uniform(0, 10))


def test_noncontracting_rejects_bad_input():
    with pytest.raises(DomainError):
        G.noncontracting_bound_check(np.eye(2), np.eye(2), 1.0)
    with pytest.raises(DomainError):
        G.noncontracting_bound_check(np.eye(2), G.W0_MATRIX, -1.0)


# ---------------------------------------------------------------- tube volume

def test_tube_volume_values():
    assert G.tube_volume(0.0, 3.0) == 0.0
    assert G.tube_volume(1.0, 0.0) == 0.0
    assert G.tube_volume(1.0, 1.0) == pytest.approx(2.81343, abs=1e-5)


@pytest.mark.parametrize("t", [10.0, 15.0])
def test_tube_volume_growth(t):
    assert G.tube_volume(1.0, t) / math.exp(2 * t) == pytest.approx(0.25, rel=1e-3)
