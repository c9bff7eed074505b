"""The twelve acceptance criteria as runnable checks with pinned seeds.

Each ``criterion_*`` function returns a ``CriterionResult`` whose ``checks``
map names to booleans; a criterion passes when every check holds and the run
finished inside its time limit. Oracles used here are computed independently
of the code under test wherever the criterion asks for a comparison.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import cantor, geometry, lattice, leafwise, margulis


@dataclass
class CriterionResult:
    number: int
    title: str
    area: str
    checks: dict
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    time_limit: float = math.inf

    @property
    def within_time(self) -> bool:
        return self.elapsed < self.time_limit

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and self.within_time

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [k for k, v in self.checks.items() if not v]
        if not self.within_time:
            failed.append(f"runtime {self.elapsed:.1f}s >= {self.time_limit:.0f}s")
        note = f"  [failed: {', '.join(failed)}]" if failed else ""
        return f"criterion {self.number:2d} {status}  {self.title} ({self.elapsed:.2f}s){note}"

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "number": self.number,
            "title": self.title,
            "area": self.area,
            "checks": dict(self.checks),
            "details": self.details,
            "pass": self.passed,
        }
        if timing:
            out["elapsed"] = self.elapsed
            out["time_limit"] = self.time_limit
        return out


def _timed(number, title, area, limit):
    def wrap(fn):
        def run(**kwargs):
            start = time.perf_counter()
            checks, details = fn(**kwargs)
            elapsed = time.perf_counter() - start
            return CriterionResult(number, title, area, checks, details, elapsed, limit)

        run.number = number
        run.area = area
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

@_timed(1, "cross-ratio distance of concentric lines", "geometry", 1.0)
def criterion_line_distance():
    errors = {}
    for t in (0.5, 1.0, 2.0, 5.0):
        d = geometry.line_distance(
            geometry.GeodesicLine(-1.0, 1.0), geometry.GeodesicLine(math.exp(t), -math.exp(t))
        ).distance
        errors[str(t)] = abs(d - t)
    return {"distance_equals_t": all(e <= 1e-9 for e in errors.values())}, {"errors": errors}


def _random_sl2c(rng):
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return g / np.sqrt(np.linalg.det(g))


@_timed(2, "determinant invariance of the Hermitian action", "geometry", 5.0)
def criterion_q_invariance(seed: int = 2, trials: int = 10**4):
    rng = np.random.default_rng(seed)
    worst_det = 0.0
    worst_basis = 0.0
    for _ in range(trials):
        g = _random_sl2c(rng)
        x = rng.standard_normal(4)
        a = geometry.to_hermitian(x)
        image = geometry.hermitian_action(g, a)
        scale = max(1.0, float(np.abs(a).max()) ** 2, float(np.abs(image).max()) ** 2)
        worst_det = max(worst_det, abs(np.linalg.det(image).real - np.linalg.det(a).real) / scale)
        qx = x[0] ** 2 - x[1] ** 2 - x[2] ** 2 - x[3] ** 2
        worst_basis = max(worst_basis, abs(np.linalg.det(a).real - qx) / max(1.0, float(x @ x)))
    checks = {"det_preserved": worst_det <= 1e-8, "basis_preserves_q": worst_basis <= 1e-12}
    return checks, {"worst_det_rel": worst_det, "worst_basis": worst_basis}


def _grid_refine_infimum(v) -> float:
    """min over SL2(R) of ||g v||^2 via the Iwasawa chart g = k a(t) u(s):
    coarse grid in (t, s) then Nelder-Mead from the best cell."""
    x, y = complex(v[0]), complex(v[1])

    def f(p):
        t, s = p
        return math.exp(t) * abs(x + s * y) ** 2 + math.exp(-t) * abs(y) ** 2

    ts = np.linspace(-12.0, 12.0, 121)
    ss = np.linspace(-30.0, 30.0, 241)
    tt, sg = np.meshgrid(ts, ss, indexing="ij")
    vals = np.exp(tt) * np.abs(x + sg * y) ** 2 + np.exp(-tt) * abs(y) ** 2
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    res = minimize(f, [ts[i], ss[j]], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000})
    return float(res.fun)


@_timed(3, "Psi infimum over SL2(R)", "geometry", 10.0)
def criterion_psi_infimum(seed: int = 3, trials: int = 100):
    rng = np.random.default_rng(seed)
    worst_grid = 0.0
    worst_constructive = 0.0
    done = 0
    while done < trials:
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi = geometry.psi_form(v, geometry.W0_MATRIX)
        if abs(psi) < 1e-3:
            continue
        done += 1
        grid = _grid_refine_infimum(v)
        h = geometry.stabilizing_element(v)
        built = float(np.linalg.norm(h @ v) ** 2)
        worst_grid = max(worst_grid, abs(grid - abs(psi)))
        worst_constructive = max(worst_constructive, abs(built - abs(psi)))
    checks = {"grid_minimizer": worst_grid <= 1e-3, "constructive_minimizer": worst_constructive <= 1e-6}
    return checks, {"worst_grid_gap": worst_grid, "worst_constructive_gap": worst_constructive}


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------

@_timed(4, "mod-8 insolubility", "lattice", 1.0)
def criterion_mod8():
    counts = {a: lattice.mod8_solubility(a) for a in (17, 41, 73, 89)}
    control = lattice.count_mod8_solutions((1, -1, -1, -1))
    checks = {"no_solutions": all(c == 0 for c in counts.values()), "control_soluble": control > 0}
    return checks, {"counts": {str(k): v for k, v in counts.items()}, "control": control}


@_timed(5, "lattice norm gap", "lattice", 30.0)
def criterion_norm_gap():
    checks, details = {}, {}
    for a in (17, 41):
        vecs = lattice.enumerate_q_minus_one(a, 3 * math.sqrt(a))
        small = [v for v in vecs if v.seven_norm_sq() < a]
        ok = all(v.is_w0() for v in small) and {v.m for v in small} == {(0, 0, 0, 1), (0, 0, 0, -1)}
        checks[f"gap_A{a}"] = ok
        details[str(a)] = {"found": len(vecs), "below_gap": [list(v.m) for v in small]}
    return checks, details


# ---------------------------------------------------------------------------
# cantor
# ---------------------------------------------------------------------------

@_timed(6, "Cantor sampler invariants and dimension", "cantor", 60.0)
def criterion_cantor(seed: int = 6, samples: int = 10**5, depth: int = 30, threads=None):
    aprime = 3.0**10
    family = cantor.synth_family(aprime, 50, seed)
    batch = cantor.sample_paths(family, depth, samples, seed, threads=threads)
    small = cantor.synth_family(aprime, 10, seed + 1)
    dist = cantor.level_distribution(small, 8)
    bound = cantor.path_probability_bound(8, aprime)
    max_prob = max(dist.values())
    box = cantor.box_dimension_estimate(family, 12)
    control = cantor.box_dimension_estimate(cantor.middle_thirds_family(12), 12)
    lower = cantor.dim_lower_bound(aprime)
    checks = {
        "zero_violations": batch.violations == 0,
        "tree_probabilities_sum_to_one": sum(dist.values()) == 1,
        "tree_dominated_by_bound": float(max_prob) <= bound,
        "box_estimate_near_bound": box.box_estimate >= lower - 0.05,
        "middle_thirds_control": abs(control.box_estimate - math.log(2) / math.log(3)) <= 0.02,
    }
    details = {
        "violations": batch.violations,
        "mean_irregular_levels": float(batch.irregular_counts.mean()),
        "max_tree_probability": float(max_prob),
        "tree_bound": bound,
        "box_estimate": box.box_estimate,
        "dimension_lower_bound": lower,
        "middle_thirds_estimate": control.box_estimate,
    }
    return checks, details


@_timed(7, "uniqueness of the blocking interval", "cantor", 30.0)
def criterion_irregular_uniqueness(seed: int = 7, trials: int = 10**4):
    valid_hi, found_hi = cantor.double_blocker_search(100.0, trials, seed)
    valid_lo, found_lo = cantor.double_blocker_search(50.0, trials, seed + 1)
    checks = {
        "searched_full_budget": valid_hi == trials,
        "none_above_99": len(found_hi) == 0,
        "witness_at_50": len(found_lo) >= 1,
    }
    example = None
    if found_lo:
        w = found_lo[0]
        example = {"level": w["level"], "numerator": w["numerator"], "family": w["family"].to_dict()}
    return checks, {"valid_families": [valid_hi, valid_lo], "witnesses_at_50": len(found_lo), "example": example}


# ---------------------------------------------------------------------------
# leafwise
# ---------------------------------------------------------------------------

def _h_nats(p: float) -> float:
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


@_timed(8, "leafwise entropy identity", "leafwise", 20.0)
def criterion_entropy_identity(seed: int = 8, samples: int = 10**5):
    bern = leafwise.DigitSource.bernoulli(0.1)
    est = leafwise.run_chain(bern, 16, samples, seed).estimate
    dim_oracle = _h_nats(0.1) / math.log(2)
    rows = [[0.9, 0.1], [0.2, 0.8]]
    two = leafwise.DigitSource.from_matrices(rows, [[0, 1], [0, 1]])
    # two-state stationary law in closed form
    a, b = rows[0][1], rows[1][0]
    pi = (b / (a + b), a / (a + b))
    rate = pi[0] * _h_nats(rows[0][0]) + pi[1] * _h_nats(rows[1][0])
    rep = leafwise.run_chain(two, 32, samples, seed + 1)
    checks = {
        "bernoulli_estimate": abs(est - 0.32508) <= 0.005,
        "dimension_oracle": abs(leafwise.dimension(bern) - dim_oracle) <= 1e-12 and round(dim_oracle, 5) == 0.469,
        "two_state_rate": abs(rep.estimate - rate) <= 0.005,
    }
    return checks, {"bernoulli_estimate": est, "dimension": leafwise.dimension(bern),
                    "two_state_estimate": rep.estimate, "two_state_rate": rate}


@_timed(9, "L1 convergence of cell exponents", "leafwise", 30.0)
def criterion_l1_convergence():
    src = leafwise.DigitSource.bernoulli(0.3)
    curve = {n: leafwise.un_l1_error(src, n) for n in (4, 8, 16, 24)}
    values = list(curve.values())
    checks = {
        "n24_below_0.05": curve[24] <= 0.05,
        "decreasing": all(x > y for x, y in zip(values, values[1:])),
    }
    return checks, {"l1_curve": {str(k): v for k, v in curve.items()}}


# ---------------------------------------------------------------------------
# margulis
# ---------------------------------------------------------------------------

@_timed(10, "Margulis tail bound", "margulis", 60.0)
def criterion_tail(seed: int = 10, instances: int = 1000):
    chain, alpha = margulis.drift_chain(200)
    eps = margulis.bad_set_measure(chain, alpha, 0.5, 1.0)
    drift = margulis.verify_tail(chain, alpha, 0.5, 1.0, eps=0.0, t_max=50.0)
    rng = np.random.default_rng(seed)
    worst, failures = 0.0, 0
    for _ in range(instances):
        inst = margulis.random_certified_chain(rng)
        res = margulis.verify_tail(inst.chain, inst.alpha, inst.t0, inst.t1, inst.eps)
        worst = max(worst, res.worst_ratio)
        failures += not res.ok
    checks = {
        "drift_chain_eps_zero": eps == 0.0,
        "drift_chain_tail": drift.ok,
        "random_chains": failures == 0 and worst <= 1.0,
    }
    return checks, {"drift_worst_ratio": drift.worst_ratio, "random_worst_ratio": worst, "random_failures": failures}


@_timed(11, "max-combination certificate", "margulis", 30.0)
def criterion_max_combine(seed: int = 11, instances: int = 100):
    rng = np.random.default_rng(seed)
    failures, worst_fraction, eps_values = 0, 0.0, []
    for _ in range(instances):
        inst = margulis.random_combine_instance(rng)
        res = margulis.max_combine(inst.chain, inst.alpha, inst.beta, inst.t0, inst.t1)
        failures += not res.ok
        eps_values.append(res.eps)
        if res.eps > 0:
            worst_fraction = max(worst_fraction, res.certificate.bad_set_mass / (2 * res.eps))
    checks = {"all_certified": failures == 0}
    return checks, {"failures": failures, "max_eps": max(eps_values), "worst_bad_fraction_of_2eps": worst_fraction}


@_timed(12, "representation decay in Sym^2", "margulis", 30.0)
def criterion_rep_decay(seed: int = 12, trials: int = 1000):
    frozen = margulis.REP_DECAY_CW
    worst = margulis.rep_decay_sweep(range(1, 13), trials, seed)
    fresh = [margulis.rep_decay_sweep(range(1, 13), trials, seed + 100 + k) for k in range(5)]
    checks = {
        "inequality_holds": worst <= frozen,
        "frozen_value_stable": all(abs(f - frozen) / frozen <= 0.10 for f in fresh),
    }
    return checks, {"frozen_cw": frozen, "worst_deficit": worst, "fresh_seed_deficits": fresh}


CRITERIA = [
    criterion_line_distance,
    criterion_q_invariance,
    criterion_psi_infimum,
    criterion_mod8,
    criterion_norm_gap,
    criterion_cantor,
    criterion_irregular_uniqueness,
    criterion_entropy_identity,
    criterion_l1_convergence,
    criterion_tail,
    criterion_max_combine,
    criterion_rep_decay,
]

SUITES = ("all", "geometry", "lattice", "cantor", "leafwise", "margulis")


def run_suite(name: str = "all", threads=None) -> list:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    out = []
    for crit in CRITERIA:
        if name in ("all", crit.area):
            kwargs = {"threads": threads} if crit is criterion_cantor else {}
            out.append(crit(**kwargs))
    return out
