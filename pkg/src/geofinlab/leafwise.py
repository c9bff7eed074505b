"""Finite-state binary digit sources as computable leafwise measures.

A point ``s`` of [0, 1) is read through its binary digits ``b_1 b_2 ...``; a
``DigitSource`` assigns mass to dyadic cells by emitting digits from a Markov
chain on hidden states. Sources are unifilar: from each state each digit leads
to exactly one next state, so the state after a digit string is determined by
the start state and the string. That makes cell masses exact products and
the entropy rate equal to ``sum_s pi_s H(p_s)`` with ``p_s`` the probability
of emitting 0 from state ``s``.

Entropies are in nats; dimensions divide by ``log 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, ResourceError

ROW_TOL = 1e-12
MAX_L1_DIGITS = 24
MAX_ITERATE_DIGITS = 20
_CHUNK_DIGITS = 18


def binary_entropy(p) -> np.ndarray | float:
    """``H(p, 1 - p)`` in nats, elementwise, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return float(h) if h.ndim == 0 else h


def entropy(dist) -> float:
    d = np.asarray(dist, dtype=float)
    d = d[d > 0]
    return float(-(d * np.log(d)).sum())


class DigitSource:
    """Unifilar Markov source of binary digits.

    Parameters
    ----------
    prob0 : sequence of float
        Probability of emitting digit 0 from each state.
    next_state : array of shape (n, 2)
        ``next_state[s, b]`` is the state reached after emitting ``b`` from ``s``.
    initial : sequence of float, optional
        Start distribution; defaults to the stationary one.
    names : sequence of str, optional
    """

    def __init__(self, prob0, next_state, initial=None, names=None):
        p = np.asarray(prob0, dtype=float)
        nxt = np.asarray(next_state, dtype=np.int64)
        n = p.shape[0]
        if p.ndim != 1 or n == 0:
            raise ConfigurationError("prob0 must be a nonempty vector")
        if nxt.shape != (n, 2):
            raise ConfigurationError(f"next_state must have shape ({n}, 2)")
        if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
            raise ConfigurationError("digit probabilities must lie in [0, 1]")
        if np.any((nxt < 0) | (nxt >= n)):
            raise ConfigurationError("next_state refers to an unknown state")
        self.prob0 = p
        self.next_state = nxt
        self.names = list(names) if names is not None else [str(i) for i in range(n)]
        if len(self.names) != n:
            raise ConfigurationError("names must match the number of states")
        self._stationary = None
        if initial is None:
            self.initial = None
        else:
            init = np.asarray(initial, dtype=float)
            if init.shape != (n,) or np.any(init < 0) or abs(init.sum() - 1.0) > ROW_TOL * n:
                raise ConfigurationError("initial must be a probability vector over the states")
            self.initial = init

    # construction -----------------------------------------------------------

    @classmethod
    def bernoulli(cls, q: float) -> "DigitSource":
        """I.i.d. digits with ``P(0) = q``."""
        return cls([q], [[0, 0]])

    @classmethod
    def from_matrices(cls, transition, emission, initial=None, states=None) -> "DigitSource":
        """Build from an ``n x n`` transition matrix and the digit emitted on
        each transition."""
        t = np.asarray(transition, dtype=float)
        e = np.asarray(emission)
        n = t.shape[0]
        if t.shape != (n, n) or e.shape != (n, n):
            raise ConfigurationError("transition and emission must be square of the same size")
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > ROW_TOL):
            raise ConfigurationError("transition rows must be probability vectors")
        arcs = []
        for s in range(n):
            for u in range(n):
                if t[s, u] > 0:
                    arcs.append((s, int(e[s, u]), u, float(t[s, u])))
        return cls._from_arcs(n, arcs, initial, states)

    @classmethod
    def from_arcs(cls, n_states: int, arcs, initial=None, states=None) -> "DigitSource":
        """Build from ``(from, digit, to, prob)`` tuples."""
        return cls._from_arcs(n_states, [tuple(a) for a in arcs], initial, states)

    @classmethod
    def _from_arcs(cls, n, arcs, initial, states):
        prob = np.zeros((n, 2))
        nxt = np.tile(np.arange(n)[:, None], (1, 2))
        seen = set()
        for s, b, u, pr in arcs:
            s, b, u = int(s), int(b), int(u)
            if b not in (0, 1):
                raise ConfigurationError(f"digit {b} is not binary")
            if not (0 <= s < n and 0 <= u < n):
                raise ConfigurationError(f"arc ({s}, {b}, {u}) refers to an unknown state")
            if pr < 0:
                raise ConfigurationError("negative arc probability")
            if pr == 0:
                continue
            if (s, b) in seen:
                raise ConfigurationError(
                    f"state {s} has two arcs emitting {b}; only unifilar sources are supported"
                )
            seen.add((s, b))
            prob[s, b] = pr
            nxt[s, b] = u
        rows = prob.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > ROW_TOL):
            raise ConfigurationError(f"outgoing probabilities do not sum to 1: {rows.tolist()}")
        return cls(prob[:, 0] / rows, nxt, initial, states)

    @classmethod
    def from_dict(cls, data: dict) -> "DigitSource":
        """Parse a source descriptor.

        Accepted forms: ``{"bernoulli": q}``; ``{"states", "transition",
        "emission", "initial"}`` with ``n x n`` matrices; or ``{"states",
        "arcs": [[from, digit, to, prob], ...], "initial"}``.
        """
        if not isinstance(data, dict):
            raise ConfigurationError("source descriptor must be a JSON object")
        try:
            if "bernoulli" in data:
                return cls.bernoulli(float(data["bernoulli"]))
            states = data.get("states")
            initial = data.get("initial")
            if "arcs" in data:
                n = len(states) if isinstance(states, list) else int(states)
                names = states if isinstance(states, list) else None
                return cls.from_arcs(n, data["arcs"], initial, names)
            transition = data["transition"]
            emission = data["emission"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed source descriptor: {exc}") from None
        names = states if isinstance(states, list) else None
        return cls.from_matrices(transition, emission, initial, names)

    def to_dict(self) -> dict:
        arcs = []
        for s in range(self.n_states):
            for b, pr in ((0, self.prob0[s]), (1, 1.0 - self.prob0[s])):
                if pr > 0:
                    arcs.append([s, b, int(self.next_state[s, b]), float(pr)])
        out = {"states": self.names, "arcs": arcs}
        if self.initial is not None:
            out["initial"] = self.initial.tolist()
        return out

    # structure --------------------------------------------------------------

    @property
    def n_states(self) -> int:
        return self.prob0.shape[0]

    def digit_probs(self) -> np.ndarray:
        return np.column_stack([self.prob0, 1.0 - self.prob0])

    def transition_matrix(self) -> np.ndarray:
        n = self.n_states
        m = np.zeros((n, n))
        probs = self.digit_probs()
        for s in range(n):
            for b in (0, 1):
                m[s, self.next_state[s, b]] += probs[s, b]
        return m

    def is_irreducible(self) -> bool:
        n = self.n_states
        reach = (self.transition_matrix() > 0) | np.eye(n, dtype=bool)
        for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
            reach = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
        return bool(reach.all())

    def stationary(self) -> np.ndarray:
        """Stationary distribution of the hidden chain (irreducible sources only)."""
        if self._stationary is None:
            if not self.is_irreducible():
                raise DomainError("source is reducible; stationary law is not unique")
            n = self.n_states
            a = np.vstack([self.transition_matrix().T - np.eye(n), np.ones((1, n))])
            rhs = np.zeros(n + 1)
            rhs[-1] = 1.0
            pi, *_ = np.linalg.lstsq(a, rhs, rcond=None)
            pi = np.clip(pi, 0.0, None)
            self._stationary = pi / pi.sum()
        return self._stationary

    def start(self) -> np.ndarray:
        return self.stationary() if self.initial is None else self.initial


@dataclass(frozen=True)
class ChainState:
    state: int
    history: str = ""

    def advance(self, src: DigitSource, digit: int) -> "ChainState":
        return ChainState(int(src.next_state[self.state, digit]), self.history + str(digit))


def transition_prob(src: DigitSource, state: ChainState | int) -> float:
    """Probability that the next digit is 0 (the chain moves by the dilation
    alone rather than dilation plus unit shift)."""
    s = state.state if isinstance(state, ChainState) else int(state)
    if not 0 <= s < src.n_states:
        raise DomainError(f"unknown state {s}")
    return float(src.prob0[s])


# ---------------------------------------------------------------------------
# Cell masses
# ---------------------------------------------------------------------------

def _digits_of(j: int, k: int):
    return [(j >> (k - 1 - i)) & 1 for i in range(k)]


def leafwise_mass(src: DigitSource, k: int, j: int, initial=None) -> float:
    """Mass of the dyadic cell ``[j 2^-k, (j+1) 2^-k)``."""
    if k < 0 or not 0 <= j < 2**k:
        raise DomainError(f"cell index {j} out of range at level {k}")
    init = src.start() if initial is None else np.asarray(initial, dtype=float)
    probs = src.digit_probs()
    digits = _digits_of(j, k)
    total = 0.0
    for s0 in range(src.n_states):
        if init[s0] == 0:
            continue
        m, s = init[s0], s0
        for b in digits:
            m *= probs[s, b]
            s = src.next_state[s, b]
        total += m
    return float(total)


def _expand(probs, nxt, mass, state, digits: int):
    """Extend (mass, state) arrays by ``digits`` more digits, new digits as
    low-order bits."""
    for _ in range(digits):
        m0 = mass * probs[state, 0]
        m1 = mass * probs[state, 1]
        s0 = nxt[state, 0]
        s1 = nxt[state, 1]
        mass = np.stack([m0, m1], axis=-1).reshape(*mass.shape[:-1], -1)
        state = np.stack([s0, s1], axis=-1).reshape(*state.shape[:-1], -1)
    return mass, state


def level_masses_chunks(src: DigitSource, n: int, initial=None, chunk_digits: int = _CHUNK_DIGITS):
    """Yield cell masses at level ``n`` in index order, in chunks of at most
    ``2^chunk_digits`` cells."""
    init = src.start() if initial is None else np.asarray(initial, dtype=float)
    probs = src.digit_probs()
    nxt = src.next_state
    starts = np.flatnonzero(init > 0)
    head = max(0, n - chunk_digits)
    mass = init[starts][:, None].copy()
    state = starts[:, None].copy()
    mass, state = _expand(probs, nxt, mass, state, head)
    for i in range(mass.shape[1]):
        m, s = _expand(probs, nxt, mass[:, i : i + 1], state[:, i : i + 1], n - head)
        yield m.sum(axis=0)


def level_masses(src: DigitSource, n: int, initial=None) -> np.ndarray:
    if n > MAX_L1_DIGITS:
        raise ResourceError(f"level {n} exceeds the cap {MAX_L1_DIGITS}")
    return np.concatenate(list(level_masses_chunks(src, n, initial)))


# ---------------------------------------------------------------------------
# Entropy and dimension
# ---------------------------------------------------------------------------

def entropy_rate(src: DigitSource) -> float:
    """``sum_s pi_s H(p_s)`` in nats."""
    return float(src.stationary() @ binary_entropy(src.prob0))


def dimension(src: DigitSource) -> float:
    return entropy_rate(src) / math.log(2.0)


def block_entropy(src: DigitSource, k: int, initial=None) -> float:
    """Shannon entropy of the first ``k`` digits, summed over cells."""
    total = 0.0
    for m in level_masses_chunks(src, k, initial):
        m = m[m > 0]
        total -= float((m * np.log(m)).sum())
    return total


def mass_slope_dimension(src: DigitSource, k: int = 20) -> float:
    """Dimension read off cell masses: least-squares slope of
    ``-E[log mass at level j] / log 2`` against ``j`` over ``j in [k/2, k]``."""
    if k > MAX_L1_DIGITS:
        raise ResourceError(f"level {k} exceeds the cap {MAX_L1_DIGITS}")
    levels = np.arange(max(1, k // 2), k + 1)
    values = [block_entropy(src, int(j), src.stationary()) / math.log(2.0) for j in levels]
    return float(np.polyfit(levels.astype(float), values, 1)[0])


def per_step_entropies(src: DigitSource, n: int, initial=None) -> list:
    """``H(b_m | b_1..b_{m-1}, y_0)`` for ``m = 1..n``."""
    dist = (src.start() if initial is None else np.asarray(initial, dtype=float)).copy()
    h = binary_entropy(src.prob0)
    t = src.transition_matrix()
    out = []
    for _ in range(n):
        out.append(float(dist @ h))
        dist = dist @ t
    return out


def accumulated_entropy(src: DigitSource, n: int, initial=None) -> float:
    """``H(b_1..b_n | y_0)`` by propagating the state distribution."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    return float(sum(per_step_entropies(src, n, initial)))


@dataclass
class EntropyReport:
    per_step: list
    estimate: float
    stderr: float
    dimension: float
    target: float

    def to_dict(self) -> dict:
        return {
            "entropy_estimate": self.estimate,
            "stderr": self.stderr,
            "dimension": self.dimension,
            "target": self.target,
            "per_step": self.per_step,
        }


def simulate_states(src: DigitSource, steps: int, samples: int, seed: int, initial=None):
    """State trajectories of shape ``(samples, steps + 1)`` and emitted digits
    of shape ``(samples, steps)``."""
    rng = np.random.default_rng(seed)
    init = src.start() if initial is None else np.asarray(initial, dtype=float)
    states = np.empty((samples, steps + 1), dtype=np.int64)
    digits = np.empty((samples, steps), dtype=np.int8)
    states[:, 0] = rng.choice(src.n_states, size=samples, p=init)
    for k in range(steps):
        s = states[:, k]
        b = (rng.random(samples) >= src.prob0[s]).astype(np.int64)
        digits[:, k] = b
        states[:, k + 1] = src.next_state[s, b]
    return states, digits


def run_chain(src: DigitSource, steps: int, samples: int, seed: int) -> EntropyReport:
    """Monte Carlo estimate of ``E[H(p(y), 1 - p(y))]`` along the chain
    started from the stationary law.

    Each sample contributes the time average of ``H(p(y_n))`` over
    ``n < steps``; the estimate is the sample mean and ``stderr`` its
    standard error.
    """
    if steps < 1 or samples < 1:
        raise DomainError("steps and samples must be positive")
    states, _ = simulate_states(src, steps, samples, seed, initial=src.stationary())
    h = binary_entropy(src.prob0)[states[:, :steps]]
    per_sample = h.mean(axis=1)
    per_step = h.mean(axis=0).tolist()
    est = float(per_sample.mean())
    err = float(per_sample.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    dim = dimension(src)
    return EntropyReport(per_step, est, err, dim, dim * math.log(2.0))


def stationarity_check(src: DigitSource, steps: int, samples: int, seed: int, initial=None) -> float:
    """Largest total-variation distance between empirical state laws at
    consecutive steps ``k`` and ``k + 1`` for ``k < steps``."""
    if steps < 1 or samples < 1:
        raise DomainError("steps and samples must be positive")
    init = src.stationary() if initial is None else initial
    states, _ = simulate_states(src, steps, samples, seed, initial=init)
    n = src.n_states
    freq = np.stack([np.bincount(states[:, k], minlength=n) / samples for k in range(steps + 1)])
    return float(0.5 * np.abs(np.diff(freq, axis=0)).sum(axis=1).max())


# ---------------------------------------------------------------------------
# L1 convergence and iterated chain
# ---------------------------------------------------------------------------

def un_l1_error(src: DigitSource, n: int) -> float:
    """``sum mass * | -(1/n) log mass - dim log 2 |`` over the ``2^n`` cells."""
    if n < 1:
        raise DomainError("n must be positive")
    if n > MAX_L1_DIGITS:
        raise ResourceError(f"n = {n} exceeds the exact-summation cap {MAX_L1_DIGITS}")
    target = dimension(src) * math.log(2.0)
    total = 0.0
    for m in level_masses_chunks(src, n):
        m = m[m > 0]
        total += float((m * np.abs(-np.log(m) / n - target)).sum())
    return total


def iterate_chain(src: DigitSource, length: int, state=None) -> np.ndarray:
    """Law of the next ``length`` digits as a vector indexed by
    ``j = sum b_i 2^(length - i)``. ``state`` is a state index, a
    ``ChainState`` or a distribution (default: the source's start law)."""
    if length < 0:
        raise DomainError("length must be nonnegative")
    if length > MAX_ITERATE_DIGITS:
        raise ResourceError(f"length {length} exceeds the cap {MAX_ITERATE_DIGITS}")
    if state is None:
        init = src.start()
    elif isinstance(state, (ChainState, int, np.integer)):
        s = state.state if isinstance(state, ChainState) else int(state)
        if not 0 <= s < src.n_states:
            raise DomainError(f"unknown state {s}")
        init = np.eye(src.n_states)[s]
    else:
        init = np.asarray(state, dtype=float)
    return level_masses(src, length, init)


def uniformity_gap(dist) -> float:
    """``max_i |p_i - 1/n|``."""
    d = np.asarray(dist, dtype=float)
    if d.ndim != 1 or d.size == 0 or np.any(d < 0) or abs(d.sum() - 1.0) > 1e-9:
        raise DomainError("input must be a probability vector")
    return float(np.abs(d - 1.0 / d.size).max())


def entropy_deficit(dist) -> float:
    """``log n - H(dist)``; zero exactly at the uniform law."""
    d = np.asarray(dist, dtype=float)
    uniformity_gap(d)
    return math.log(d.size) - entropy(d)


def leafwise_report(src: DigitSource, steps: int = 32, samples: int = 10**5, seed: int = 0,
                    l1_levels=(4, 8, 16)) -> dict:
    rep = run_chain(src, steps, samples, seed)
    return {
        "dimension": rep.dimension,
        "entropy_estimate": rep.estimate,
        "stderr": rep.stderr,
        "l1_curve": [[n, un_l1_error(src, n)] for n in l1_levels],
    }
