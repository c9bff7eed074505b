"""Additive Margulis functions on finite Markov chains.

A height ``alpha`` on the states of a chain with kernel ``P`` and stationary
law ``mu`` is an (eps; T0, T1)-additive Margulis function when

* every step from a ``mu``-positive state changes ``alpha`` by at most T1, and
* the states with ``alpha >= T1`` whose expected next height exceeds
  ``alpha - T0`` carry ``mu``-mass below eps.

This module checks those conditions exactly (linear algebra on the kernel),
evaluates the resulting tail bound, builds the max-combination of two heights,
and measures the logarithmic growth of unipotent averages in Sym^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConfigurationError, DomainError

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10
COMPARE_TOL = 1e-12
DIRECT_SOLVE_LIMIT = 1000

# Sym^2 decay constant: the optimizer-found supremum of the deficit is
# 3.6526 at m = 12 and increases to about 3.654 as m grows; rounded up.
REP_DECAY_CW = 3.66


class FiniteChain:
    """Markov chain on ``range(n)`` with a dense row-stochastic kernel."""

    def __init__(self, kernel, names=None):
        p = np.asarray(kernel, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise ConfigurationError("kernel must be a nonempty square matrix")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ConfigurationError("kernel entries must be finite and nonnegative")
        rows = p.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > ROW_TOL):
            bad = int(np.argmax(np.abs(rows - 1.0)))
            raise ConfigurationError(f"row {bad} sums to {rows[bad]!r}")
        self.kernel = p
        self.names = list(names) if names is not None else None
        self._mu = None
        self._support = None

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteChain":
        """``kernel`` is a dense matrix or, per state, a list of ``[to, prob]``."""
        try:
            kernel = data["kernel"]
            states = data.get("states")
            n = len(states) if isinstance(states, list) else (int(states) if states is not None else len(kernel))
            if kernel and isinstance(kernel[0], list) and kernel[0] and isinstance(kernel[0][0], list):
                dense = np.zeros((n, n))
                for s, arcs in enumerate(kernel):
                    for to, prob in arcs:
                        dense[s, int(to)] += float(prob)
                kernel = dense
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigurationError(f"malformed chain descriptor: {exc}") from None
        return cls(kernel, states if isinstance(states, list) else None)

    def recurrent_states(self) -> np.ndarray:
        """Boolean mask of states in closed communicating classes; these are
        exactly the states any stationary law can charge."""
        if self._support is None:
            graph = csr_matrix(self.kernel > 0)
            ncomp, labels = connected_components(graph, directed=True, connection="strong")
            rows, cols = graph.nonzero()
            leaks = np.zeros(ncomp, dtype=bool)
            leaks[labels[rows][labels[rows] != labels[cols]]] = True
            self._support = ~leaks[labels]
        return self._support

    def stationary(self) -> np.ndarray:
        """Unique stationary law (exactly one closed class required)."""
        if self._mu is None:
            support = self.recurrent_states()
            graph = csr_matrix(self.kernel > 0)
            _, labels = connected_components(graph, directed=True, connection="strong")
            if len(set(labels[support].tolist())) != 1:
                raise DomainError("chain has several closed classes; stationary law is not unique")
            n = self.n_states
            if n <= DIRECT_SOLVE_LIMIT:
                a = np.vstack([self.kernel.T - np.eye(n), np.ones((1, n))])
                rhs = np.zeros(n + 1)
                rhs[-1] = 1.0
                mu, *_ = np.linalg.lstsq(a, rhs, rcond=None)
            else:
                mu = _power_iteration(self.kernel)
            mu = np.where(support, np.clip(mu, 0.0, None), 0.0)
            self._mu = mu / mu.sum()
        return self._mu

    def stationarity_residual(self) -> float:
        mu = self.stationary()
        return float(np.abs(mu @ self.kernel - mu).sum())

    def expectation(self, height) -> np.ndarray:
        """``x -> sum_y P(x, y) h(y)``."""
        return self.kernel @ np.asarray(height, dtype=float)


def _power_iteration(p: np.ndarray, tol: float = 1e-14, max_iter: int = 200000) -> np.ndarray:
    n = p.shape[0]
    lazy = 0.5 * (p + np.eye(n))
    mu = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = mu @ lazy
        if np.abs(nxt - mu).sum() < tol:
            return nxt
        mu = nxt
    return mu


def _heights(chain: FiniteChain, alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (chain.n_states,):
        raise ConfigurationError(f"height must have {chain.n_states} entries")
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise ConfigurationError("heights must be nonnegative")
    return a


def _less(lhs, rhs):
    """``lhs < rhs`` with a relative tolerance, so exact ties are not counted."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs < rhs - COMPARE_TOL * scale


def check_condition_a(chain: FiniteChain, alpha, t1: float) -> bool:
    """Every step out of a recurrent state moves the height by at most ``t1``."""
    a = _heights(chain, alpha)
    rows, cols = np.nonzero(chain.kernel)
    live = chain.recurrent_states()[rows]
    jumps = np.abs(a[cols[live]] - a[rows[live]])
    if np.any(np.isinf(jumps)):
        return False
    return bool(np.all(jumps <= t1 * (1.0 + COMPARE_TOL) + COMPARE_TOL))


def bad_set_mask(chain: FiniteChain, alpha, t0: float, t1: float) -> np.ndarray:
    a = _heights(chain, alpha)
    return (a >= t1) & _less(a, t0 + chain.expectation(a))


def bad_set_measure(chain: FiniteChain, alpha, t0: float, t1: float) -> float:
    """Stationary mass of ``{T1 <= alpha < T0 + E[alpha(next)]}``."""
    return float(chain.stationary()[bad_set_mask(chain, alpha, t0, t1)].sum())


def semi_bad_measure(chain: FiniteChain, alpha, beta, t0: float, t1: float) -> float:
    """Stationary mass of ``{alpha + T1 <= beta < T0 + E[beta(next)]}``."""
    a = _heights(chain, alpha)
    b = _heights(chain, beta)
    mask = (a + t1 <= b) & _less(b, t0 + chain.expectation(b))
    return float(chain.stationary()[mask].sum())


def tail_bound(t: float, t0: float, t1: float, eps: float, corrected: bool = False) -> float:
    """``1 / (log floor(t/T1) - 1) + eps (T0 + T1) / T0`` for ``t >= 3 T1``.

    With ``corrected=True`` the first term carries the factor ``T1 / T0``
    that the averaging argument actually produces.
    """
    if t0 <= 0 or t1 <= 0:
        raise DomainError("T0 and T1 must be positive")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if t < 3 * t1 * (1.0 - 1e-15):
        raise DomainError(f"t = {t} is below 3 T1 = {3 * t1}")
    n = math.floor(t / t1 + 1e-12)
    main = 1.0 / (math.log(n) - 1.0)
    if corrected:
        main *= t1 / t0
    return main + eps * (t0 + t1) / t0


def stationary_tail(chain: FiniteChain, alpha, t: float) -> float:
    a = _heights(chain, alpha)
    return float(chain.stationary()[a >= t].sum())


@dataclass
class TailCheck:
    ok: bool
    worst_ratio: float
    worst_t: float | None
    rows: list  # (t, tail, bound)

    def to_csv(self) -> str:
        lines = ["t,tail,bound"]
        lines += [f"{t!r},{tail!r},{bound!r}" for t, tail, bound in self.rows]
        return "\n".join(lines) + "\n"


def verify_tail(chain: FiniteChain, alpha, t0: float, t1: float, eps: float | None = None,
                corrected: bool = False, t_max: float | None = None) -> TailCheck:
    """Compare the exact stationary tail with ``tail_bound`` for every
    ``t in [3 T1, max alpha]``.

    Both sides are step functions: the bound is constant on ``[j T1, (j+1) T1)``
    and the tail is nonincreasing, so checking ``t = j T1`` covers every t.
    ``eps`` defaults to the measured bad-set mass.
    """
    a = _heights(chain, alpha)
    if eps is None:
        eps = bad_set_measure(chain, a, t0, t1)
    top = float(a.max()) if t_max is None else min(float(a.max()), t_max)
    mu = chain.stationary()
    order = np.argsort(a)
    sorted_a = a[order]
    # suffix sums give mu(alpha >= t) by binary search
    suffix = np.concatenate([np.cumsum(mu[order][::-1])[::-1], [0.0]])
    rows, worst, worst_t = [], 0.0, None
    j = 3
    while j * t1 <= top * (1.0 + 1e-15):
        t = j * t1
        tail = float(suffix[np.searchsorted(sorted_a, t * (1.0 - 1e-15), side="left")])
        bound = tail_bound(t, t0, t1, eps, corrected=corrected)
        rows.append((t, tail, bound))
        ratio = tail / bound
        if ratio > worst:
            worst, worst_t = ratio, t
        j += 1
    return TailCheck(worst <= 1.0, worst, worst_t, rows)


@dataclass
class MargulisCertificate:
    t0: float
    t1: float
    eps: float
    condition_a_ok: bool
    bad_set_mass: float

    @property
    def certified(self) -> bool:
        return self.condition_a_ok and self.bad_set_mass <= self.eps * (1.0 + 1e-12) + 1e-15

    def to_dict(self) -> dict:
        return {
            "T0": self.t0,
            "T1": self.t1,
            "eps": self.eps,
            "condition_a_ok": self.condition_a_ok,
            "bad_set_mass": self.bad_set_mass,
            "certified": self.certified,
        }


def certify(chain: FiniteChain, alpha, t0: float, t1: float, eps: float) -> MargulisCertificate:
    return MargulisCertificate(
        t0, t1, eps, check_condition_a(chain, alpha, t1), bad_set_measure(chain, alpha, t0, t1)
    )


@dataclass
class CombineResult:
    gamma: np.ndarray
    certificate: MargulisCertificate
    eps: float
    alpha_bad: float
    beta_semi_bad: float
    hypotheses: dict

    @property
    def ok(self) -> bool:
        return all(self.hypotheses.values()) and self.certificate.certified


def max_combine(chain: FiniteChain, alpha, beta, t0: float, t1: float, eps: float | None = None) -> CombineResult:
    """``gamma = max(0, alpha - 2 T1, beta - 5 T1)`` with a certificate for
    ``(2 eps; 2 T0 - T1, T1)`` computed from scratch on ``gamma``.

    ``eps`` defaults to the larger of the measured bad mass of ``alpha`` and
    the semi-bad mass of ``beta``. Failed hypotheses raise ``DomainError``
    naming the condition.
    """
    if t0 <= t1 / 2:
        raise DomainError(f"need T0 > T1/2, got T0 = {t0}, T1 = {t1}")
    a = _heights(chain, alpha)
    b = _heights(chain, beta)
    alpha_bad = bad_set_measure(chain, a, t0, t1)
    beta_semi = semi_bad_measure(chain, a, b, t0, t1)
    if eps is None:
        eps = max(alpha_bad, beta_semi)
    hyp = {
        "alpha_condition_a": check_condition_a(chain, a, t1),
        "beta_condition_a": check_condition_a(chain, b, t1),
        "alpha_bad_mass": alpha_bad <= eps,
        "beta_semi_bad_mass": beta_semi <= eps,
    }
    failed = [k for k, v in hyp.items() if not v]
    if failed:
        raise DomainError(f"max_combine hypotheses fail: {', '.join(failed)}")
    gamma = np.maximum(0.0, np.maximum(a - 2 * t1, b - 5 * t1))
    cert = certify(chain, gamma, 2 * t0 - t1, t1, 2 * eps)
    return CombineResult(gamma, cert, eps, alpha_bad, beta_semi, hyp)


# ---------------------------------------------------------------------------
# Chain generators
# ---------------------------------------------------------------------------

def drift_chain(n_states: int, p_down: float = 0.75, step: float = 1.0):
    """Reflected nearest-neighbour walk with ``alpha(k) = k * step``."""
    if n_states < 2:
        raise DomainError("need at least two states")
    p = np.zeros((n_states, n_states))
    for k in range(n_states):
        p[k, max(k - 1, 0)] += p_down
        p[k, min(k + 1, n_states - 1)] += 1.0 - p_down
    return FiniteChain(p), step * np.arange(n_states, dtype=float)


def slow_drift_chain(n_states: int, t0: float, t1: float = 1.0):
    """Walk with steps of exactly ``t1`` and mean drift exactly ``-t0``."""
    if not 0 < t0 < t1:
        raise DomainError("need 0 < T0 < T1")
    return drift_chain(n_states, 0.5 * (1.0 + t0 / t1), t1)


@dataclass
class ChainInstance:
    chain: FiniteChain
    alpha: np.ndarray
    t0: float
    t1: float
    eps: float
    beta: np.ndarray | None = None


def _neighbour_kernel(rng, n: int) -> np.ndarray:
    p = np.zeros((n, n))
    for k in range(n):
        down = rng.uniform(0.3, 0.9)
        up = rng.uniform(0.0, 1.0 - down)
        stay = 1.0 - down - up
        p[k, max(k - 1, 0)] += down
        p[k, min(k + 1, n - 1)] += up
        p[k, k] += stay
    return p


def _increments(rng, n: int, t1: float, low: float) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(rng.uniform(low, 1.0, size=n - 1) * t1)])


def random_certified_chain(rng, t1: float = 1.0, n_range=(20, 200)) -> ChainInstance:
    """Random nearest-neighbour chain with a Lipschitz height.

    Heights rise by random amounts in ``[0.2, 1] T1`` per state; transition
    probabilities are random with a downward bias. ``T0`` is uniform on
    ``(0, T1)`` and ``eps`` is the exact bad-set mass, so the instance is an
    (eps; T0, T1)-additive Margulis function by construction.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    chain = FiniteChain(_neighbour_kernel(rng, n))
    alpha = _increments(rng, n, t1, 0.2)
    t0 = float(rng.uniform(0.0, 1.0)) * t1
    while t0 == 0.0:
        t0 = float(rng.uniform(0.0, 1.0)) * t1
    eps = bad_set_measure(chain, alpha, t0, t1)
    return ChainInstance(chain, alpha, t0, t1, eps)


def _biased_kernel(rng, n: int, weak_fraction: float) -> np.ndarray:
    """Nearest-neighbour kernel with strong downward pull, except for a random
    ``weak_fraction`` of states whose pull is weaker."""
    p = np.zeros((n, n))
    for k in range(n):
        if rng.random() < weak_fraction:
            down = rng.uniform(0.3, 0.8)
        else:
            down = rng.uniform(0.8, 0.95)
        up = rng.uniform(0.0, (1.0 - down) / 2)
        p[k, max(k - 1, 0)] += down
        p[k, min(k + 1, n - 1)] += up
        p[k, k] += 1.0 - down - up
    return p


def random_combine_instance(rng, t1: float = 1.0, n_states: int = 50) -> ChainInstance:
    """Chain with two Lipschitz heights for the max-combination.

    ``alpha`` rises steadily with the state; ``beta`` is a second ramp that
    stays at 0 on an initial stretch of states. ``T0`` is uniform on
    ``(T1/2, 0.6 T1)`` and ``eps`` is the larger of the two measured bad masses.
    """
    chain = FiniteChain(_biased_kernel(rng, n_states, float(rng.uniform(0.0, 0.5))))
    alpha = _increments(rng, n_states, t1, 0.85)
    beta = np.maximum(0.0, _increments(rng, n_states, t1, 0.85) - rng.uniform(0.0, 4.0) * t1)
    t0 = float(rng.uniform(0.5, 0.6)) * t1
    while t0 <= t1 / 2:
        t0 = float(rng.uniform(0.5, 0.6)) * t1
    eps = max(bad_set_measure(chain, alpha, t0, t1), semi_bad_measure(chain, alpha, beta, t0, t1))
    return ChainInstance(chain, alpha, t0, t1, eps, beta)


# ---------------------------------------------------------------------------
# Unipotent averages in Sym^2
# ---------------------------------------------------------------------------

def sym2_orbit_norms(w, m: int) -> np.ndarray:
    """Frobenius norms of ``u(i) a(m log 2) . w`` for ``i = 0..2^m - 1``.

    ``w = (S11, S12, S22)`` is a symmetric matrix acted on by ``g S g^T``;
    ``a(m log 2)`` scales ``S11`` by ``2^m`` and ``S22`` by ``2^-m`` exactly.
    """
    s11, s12, s22 = (float(v) for v in w)
    a11 = math.ldexp(s11, m)
    a22 = math.ldexp(s22, -m)
    i = np.arange(2**m, dtype=float)
    u11 = a11 + 2.0 * i * s12 + i * i * a22
    u12 = s12 + i * a22
    return np.sqrt(u11 * u11 + 2.0 * u12 * u12 + a22 * a22)


def sym2_norm(w) -> float:
    s11, s12, s22 = (float(v) for v in w)
    return math.sqrt(s11 * s11 + 2.0 * s12 * s12 + s22 * s22)


def rep_decay_value(w, m: int, weight: int = 2) -> float:
    """``n m log 2 / 2 - (mean_i log ||u(i) a(m log 2) w|| - log ||w||)``."""
    if weight != 2:
        raise DomainError("only the weight-2 representation is implemented")
    avg = float(np.log(sym2_orbit_norms(w, m)).mean())
    return weight * m * math.log(2.0) / 2.0 - (avg - math.log(sym2_norm(w)))


def rep_decay_deficit(weight: int, m: int, trials: int, seed: int) -> float:
    """Largest deficit over ``trials`` Gaussian random vectors at scale ``m``."""
    if trials < 1:
        raise DomainError("trials must be positive")
    rng = np.random.default_rng(seed)
    ws = rng.standard_normal((trials, 3))
    return max(rep_decay_value(w, m, weight) for w in ws)


def rep_decay_supremum(m: int, starts: int, seed: int, weight: int = 2) -> float:
    """Largest deficit found by Nelder-Mead restarts on the sphere."""
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    best = -math.inf
    for _ in range(starts):
        res = minimize(
            lambda w: -rep_decay_value(w, m, weight) if np.linalg.norm(w) > 1e-9 else 0.0,
            rng.standard_normal(3),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        best = max(best, -float(res.fun))
    return best


def rep_decay_sweep(ms, trials: int, seed: int, weight: int = 2) -> float:
    """Largest deficit over ``m in ms`` with the same random vectors for all m."""
    rng = np.random.default_rng(seed)
    ws = rng.standard_normal((trials, 3))
    return max(rep_decay_value(w, m, weight) for m in ms for w in ws)
