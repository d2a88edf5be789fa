"""One-shot reproduction report: every headline claim checked at its tolerance.

Each suite yields rows ``{criterion, family, param, expected, measured, tol,
relation, status}``.  A suite that raises produces a single failing row
carrying the error message, so one broken family never hides the others.
"""

from __future__ import annotations

import csv
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import atomic, bounds, instances, nonatomic, nonatomic_solvers
from .atomic_solvers import brute_force, potential_descent, profile_table, summarize
from .random_games import DEFAULT_SEED, random_atomic_game, random_profile


def grid(start: float, stop: float, step: float) -> list:
    """Inclusive decimal grid, rounded so that 0.1 steps land on 0.3 rather than 0.30000000000000004."""
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


@dataclass
class Row:
    criterion: int
    family: str
    param: str
    expected: float
    measured: float
    tol: float
    relation: str = "eq"  # eq: |m-e| <= tol; le: m <= e + tol; ge: m >= e - tol; lt: m < e
    status: str = ""
    note: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self._holds() else "fail"

    def _holds(self) -> bool:
        m, e = self.measured, self.expected
        if isinstance(m, float) and math.isnan(m):
            return False
        if self.relation == "eq":
            return abs(m - e) <= self.tol
        if self.relation == "le":
            return m <= e + self.tol
        if self.relation == "ge":
            return m >= e - self.tol
        if self.relation == "lt":
            return m < e
        raise ValueError(self.relation)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class ReproductionReport:
    rows: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    seconds: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    def criteria(self) -> dict:
        """Pass flag per criterion number."""
        out = {}
        for r in self.rows:
            out[r.criterion] = out.get(r.criterion, True) and r.passed
        return out

    def as_dict(self) -> dict:
        from .io import report_number

        return {
            "passed": self.passed,
            "seed": self.seed,
            "criteria": {str(k): v for k, v in sorted(self.criteria().items())},
            "seconds": {k: round(v, 3) for k, v in self.seconds.items()},
            "rows": [
                {k: (report_number(v) if isinstance(v, float) else v) for k, v in asdict(r).items()}
                for r in self.rows
            ],
        }

    def write_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(["criterion", "family", "param", "expected", "measured", "tol", "relation", "status", "note"])
        for r in self.rows:
            w.writerow(
                [r.criterion, r.family, r.param, f"{r.expected:.6g}", f"{r.measured:.6g}",
                 f"{r.tol:.1e}", r.relation, r.status, r.note]
            )


# --- suites ------------------------------------------------------------------


def atomic_poa_rows(eps_grid=None):
    eps_grid = eps_grid if eps_grid is not None else grid(0, 3, 0.1)
    rows = []
    for e in eps_grid:
        b = instances.atomic_poa_lb(e)
        rows.append(Row(1, "atomic-poa", f"eps={e} ratio", bounds.atomic_poa_bound(e), b.measured_ratio(), 1e-9))
        rows.append(Row(1, "atomic-poa", f"eps={e} epsilon_star", e, b.measured_epsilon(), 1e-9))
    b = instances.atomic_poa_lb(0.0)
    rows.append(Row(1, "atomic-poa", "eps=0 ratio is 5/2", 2.5, b.measured_ratio(), 1e-12))
    return rows


def _ceiling_chunk(args):
    seed, start, stop, eps_list = args
    rng = np.random.default_rng(seed)
    worst = {e: -math.inf for e in eps_list}
    for k in range(stop):
        game = random_atomic_game(rng)
        if k < start:
            continue
        table = profile_table(game)
        for e in eps_list:
            worst[e] = max(worst[e], summarize(table, e, with_descent=False).poa)
    return worst


def atomic_poa_ceiling_rows(n_games: int = 1000, seed: int = DEFAULT_SEED, jobs: int = 1):
    eps_list = (0.0, 0.25, 0.5, 1.0)
    if jobs <= 1:
        parts = [_ceiling_chunk((seed, 0, n_games, eps_list))]
    else:
        # every worker replays the same stream and keeps its own slice
        cuts = np.linspace(0, n_games, jobs + 1).astype(int)
        tasks = [(seed, int(lo), int(hi), eps_list) for lo, hi in zip(cuts[:-1], cuts[1:])]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_ceiling_chunk, tasks))
    rows = []
    for e in eps_list:
        worst = max(p[e] for p in parts)
        rows.append(
            Row(2, "atomic-poa-ceiling", f"eps={e} max PoA over {n_games} games",
                bounds.atomic_poa_bound(e), worst, 1e-9, "le")
        )
    return rows


def nonatomic_poa_rows():
    rows = []
    for e in grid(0, 1, 0.1):
        b = instances.nonatomic_poa_lb(e)
        rows.append(Row(3, "nonatomic-poa", f"eps={e} ratio", 4 * (1 + e) / (3 - e), b.measured_ratio(), 1e-9))
        rows.append(Row(3, "nonatomic-poa", f"eps={e} epsilon_star", e, b.measured_epsilon(), 1e-9))
    for e in (1.0, 2.0, 3.0):
        b = instances.nonatomic_poa_lb(e)
        rows.append(Row(3, "nonatomic-poa", f"eps={e} ratio (integral 1+eps)", (1 + e) ** 2, b.measured_ratio(), 1e-9))
        rows.append(Row(3, "nonatomic-poa", f"eps={e} epsilon_star", e, b.measured_epsilon(), 1e-9))
    for e in (1.25, 1.5):
        b = instances.nonatomic_poa_lb(e)
        bound = bounds.nonatomic_poa_bound(e)
        r = b.measured_ratio()
        rows.append(
            Row(3, "nonatomic-poa", f"eps={e} ratio vs lower-bound formula",
                bounds.nonatomic_poa_lower_large(e), r, 1e-9)
        )
        rows.append(
            Row(3, "nonatomic-poa", f"eps={e} documented gap", bound, r, 0.0, "lt",
                note=f"ratio/bound = {r / bound:.6f}")
        )
    return rows


def descent_rows(n_triples: int = 1000, seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    eps_choices = grid(0, 2, 0.05)
    worst = -math.inf
    failures = 0
    unconverged = 0
    for _ in range(n_triples):
        game = random_atomic_game(rng)
        start = random_profile(game, rng)
        e = float(rng.choice(eps_choices))
        term, trace = potential_descent(game, start, e)
        unconverged += not trace.converged
        excess = atomic.profile_epsilon(game, term).epsilon_star - e
        worst = max(worst, excess)
        failures += excess > 1e-9
    return [
        Row(4, "descent", f"{n_triples} triples: max(epsilon_star - eps)", 0.0, worst, 1e-9, "le"),
        Row(4, "descent", "terminal profiles failing the check", 0.0, float(failures), 0.0),
        Row(4, "descent", "runs stopped by max_steps", 0.0, float(unconverged), 0.0),
    ]


def nonatomic_bundles() -> list:
    """The non-atomic instances every solver/inequality suite runs over."""
    out = [instances.nonatomic_poa_lb(e) for e in (0.0, 0.5, 1.0, 1.5, 2.0)]
    out += [instances.routing_poa_lb(e) for e in (0.0, 0.5, 1.0)]
    out += [instances.pigou(e) for e in (0.0, 0.5, 0.9)]
    return out


def _bundle_label(b) -> str:
    tag = "network" if b.metadata.get("network") else b.family
    return f"{tag}(eps={b.metadata.get('epsilon')})"


def fw_rows(bundles=None):
    bundles = bundles if bundles is not None else nonatomic_bundles()
    rows = []
    for b in bundles:
        worst = -math.inf
        unconverged = 0
        for e in grid(0, 1, 0.1):
            res = nonatomic_solvers.minimize(b.game, "potential", e, tol=1e-8)
            unconverged += not res.converged
            worst = max(worst, nonatomic.flow_epsilon(b.game, res.flow).epsilon_star - e)
        label = _bundle_label(b)
        rows.append(Row(5, "fw-potential", f"{label}: max(epsilon_star - eps)", 0.0, worst, 1e-6, "le"))
        rows.append(Row(5, "fw-potential", f"{label}: unconverged solves", 0.0, float(unconverged), 0.0))
    return rows


def pigou_rows():
    rows = []
    for e in grid(0, 0.9, 0.1):
        b = instances.pigou(e)
        bound = bounds.nonatomic_pos_bound(e)
        rows.append(Row(6, "pigou", f"eps={e} ratio", bound, b.measured_ratio(), 1e-9))
        cert = nonatomic_solvers.pos_certificate(b.game, e)
        rows.append(Row(6, "pigou", f"eps={e} pos_certificate", bound, cert.ratio, 1e-6))
    rows.append(Row(6, "pigou", "eps=0 ratio is 4/3", 4 / 3, instances.pigou(0.0).measured_ratio(), 1e-12))
    return rows


def atomic_pos_bounds_rows():
    rows = []
    target = 1 + math.sqrt(3) / 3
    for e in grid(0, 1, 0.1):
        p = bounds.atomic_pos_bounds(e)
        rows.append(Row(7, "atomic-pos-bounds", f"eps={e} lower <= upper", p["upper"], p["lower"], 1e-12, "le"))
        rows.append(Row(7, "atomic-pos-bounds", f"eps={e} upper <= 2/(1+eps)", p["coarse"], p["upper"], 1e-12, "le"))
    p0 = bounds.atomic_pos_bounds(0.0)
    rows.append(Row(7, "atomic-pos-bounds", "eps=0 lower = 1+sqrt3/3", target, p0["lower"], 1e-9))
    rows.append(Row(7, "atomic-pos-bounds", "eps=0 upper = 1+sqrt3/3", target, p0["upper"], 1e-9))
    rows.append(Row(7, "atomic-pos-bounds", "eps=1 upper", 1.0, bounds.atomic_pos_bounds(1.0)["upper"], 1e-12))
    return rows


def atomic_pos_rows(jobs: int = 1):
    target = 1 + math.sqrt(3) / 3
    rows = []
    b200 = instances.atomic_pos_lb(0.0, 200, None, 1e-9)
    r200 = b200.measured_ratio()
    rows.append(
        Row(8, "atomic-pos", f"n=200 lambda={b200.metadata['lambda']} relative gap to 1+sqrt3/3",
            0.0, abs(r200 - target) / target, 0.02, "le", note=f"ratio {r200:.6f}")
    )
    gaps = {}
    for n in (100, 400):
        lam = instances.best_lambda(0.0, n, 1e-9)
        gaps[n] = abs(instances.dominant_ratio(0.0, n, lam, 1e-9) - target)
    rows.append(
        Row(8, "atomic-pos", "gap at n=400 below gap at n=100", gaps[100], gaps[400], 0.0, "lt",
            note=f"gaps {gaps[100]:.3e} -> {gaps[400]:.3e}")
    )
    b3 = instances.atomic_pos_lb(0.0, 3, 1, 1e-6)
    es = brute_force(b3.game, 0.0, jobs=jobs)
    unique = len(es.equilibria) == 1 and es.equilibria[0] == b3.equilibrium
    rows.append(
        Row(8, "atomic-pos", "n=3 lambda=1: A-profile is the unique equilibrium",
            1.0, float(unique), 0.0, note=f"{len(es.equilibria)} equilibria found")
    )
    return rows


def two_links_rows():
    rows = []
    gamma = 0.5
    for n in (3, 5, 10):
        b = instances.two_links(n, gamma)
        rows.append(
            Row(9, "two-links", f"n={n} epsilon_star of optimum", 1 - (1 + gamma) / n, b.measured_epsilon(), 1e-9)
        )
        es = brute_force(b.game, 1.0)
        designated = atomic.social_cost(b.game, b.optimum)
        k_costs = [instances.two_links_cost(n, gamma, k) for k in range(n + 1)]
        rows.append(Row(9, "two-links", f"n={n} designated cost = min over k", min(k_costs), designated, 1e-9))
        rows.append(Row(9, "two-links", f"n={n} designated cost = enumerated optimum", es.opt_cost, designated, 1e-9))
    return rows


def lemma_rows(n_random: int = 100_000, seed: int = DEFAULT_SEED):
    rows = []
    bad = 0
    for z in range(1, 13):
        for a in range(41):
            for b in range(41):
                bad += not bounds.lemma_check("L3_1", alpha=a, beta=b, z=z)
    rows.append(Row(10, "lemmas", "L3_1 exhaustive violations", 0.0, float(bad), 0.0))

    rng = np.random.default_rng(seed)
    alpha = rng.uniform(-100, 100, n_random)
    beta = rng.uniform(-100, 100, n_random)
    lam = rng.uniform(1e-3, 50, n_random)
    slack = alpha**2 / (4 * lam) + lam * beta**2 - alpha * beta
    scale = np.maximum(1.0, np.maximum(alpha**2, beta**2))
    # vectorized form of lemma_check, cross-checked on a subsample below
    bad = int(np.sum(slack < -1e-9 * scale))
    sub = sum(
        not bounds.lemma_check("L4_1", alpha=float(x), beta=float(y), lam=float(l))
        for x, y, l in zip(alpha[:2000], beta[:2000], lam[:2000])
    )
    rows.append(Row(10, "lemmas", f"L4_1 violations over {n_random} triples", 0.0, float(bad + sub), 0.0))

    bad = 0
    for e in grid(0, 1, 0.05):
        for a in range(26):
            for b in range(26):
                bad += not bounds.lemma_check("L5_3", alpha=a, beta=b, epsilon=e)
    rows.append(Row(10, "lemmas", "L5_3 grid violations", 0.0, float(bad), 0.0))

    alpha = rng.uniform(-100, 100, n_random)
    beta = rng.uniform(-100, 100, n_random)
    eps = rng.uniform(0, 1, n_random)
    slack = (1 + eps) / 4 * alpha**2 + beta**2 / (1 + eps) - alpha * beta
    scale = np.maximum(1.0, np.maximum(alpha**2, beta**2))
    bad = int(np.sum(slack < -1e-9 * scale))
    sub = sum(
        not bounds.lemma_check("INEQ_POS", alpha=float(x), beta=float(y), epsilon=float(e))
        for x, y, e in zip(alpha[:2000], beta[:2000], eps[:2000])
    )
    rows.append(Row(10, "lemmas", f"INEQ_POS violations over {n_random} triples", 0.0, float(bad + sub), 0.0))
    return rows


def inequality_rows(bundles=None, n_flows: int = 100, seed: int = DEFAULT_SEED):
    bundles = bundles if bundles is not None else nonatomic_bundles()
    rng = np.random.default_rng(seed)
    rows = []
    for b in bundles:
        e = float(b.metadata.get("epsilon", b.expected_epsilon))
        minimizer = nonatomic_solvers.minimize(b.game, "potential", e).flow
        worst_bmw = worst_var = math.inf
        for _ in range(n_flows):
            alt = nonatomic.random_flow(b.game, rng)
            worst_bmw = min(worst_bmw, nonatomic.bmw_check(b.game, b.equilibrium, alt, e).slack)
            worst_var = min(worst_var, nonatomic.variational_check(b.game, minimizer, alt, e).slack)
        label = _bundle_label(b)
        rows.append(Row(11, "inequalities", f"{label}: min BMW slack", 0.0, worst_bmw, 1e-6, "ge"))
        rows.append(Row(11, "inequalities", f"{label}: min variational slack", 0.0, worst_var, 1e-6, "ge"))
    return rows


SUITES = {
    "atomic-poa": (1, lambda ctx: atomic_poa_rows()),
    "atomic-poa-ceiling": (2, lambda ctx: atomic_poa_ceiling_rows(seed=ctx["seed"], jobs=ctx["jobs"])),
    "nonatomic-poa": (3, lambda ctx: nonatomic_poa_rows()),
    "descent": (4, lambda ctx: descent_rows(seed=ctx["seed"])),
    "fw-potential": (5, lambda ctx: fw_rows()),
    "pigou": (6, lambda ctx: pigou_rows()),
    "atomic-pos-bounds": (7, lambda ctx: atomic_pos_bounds_rows()),
    "atomic-pos": (8, lambda ctx: atomic_pos_rows(jobs=ctx["jobs"])),
    "two-links": (9, lambda ctx: two_links_rows()),
    "lemmas": (10, lambda ctx: lemma_rows(seed=ctx["seed"])),
    "inequalities": (11, lambda ctx: inequality_rows(seed=ctx["seed"])),
}


def run(
    families: Optional[list] = None,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    progress: Optional[Callable[[str], None]] = None,
) -> ReproductionReport:
    """Run the selected suites (all by default) and collect their rows."""
    names = list(SUITES) if not families else list(families)
    unknown = [f for f in names if f not in SUITES]
    if unknown:
        raise ValueError(f"unknown families {unknown}; choose from {list(SUITES)}")
    report = ReproductionReport(seed=seed)
    ctx = {"seed": seed, "jobs": jobs}
    for name in names:
        crit, fn = SUITES[name]
        t0 = time.perf_counter()
        try:
            rows = fn(ctx)
        except Exception as exc:  # a broken family must show up as a failed row
            rows = [
                Row(crit, name, "suite raised", 0.0, math.nan, 0.0, status="fail",
                    note=f"{type(exc).__name__}: {exc}")
            ]
            if progress:
                progress(traceback.format_exc())
        report.rows.extend(rows)
        report.seconds[name] = time.perf_counter() - t0
        if progress:
            ok = all(r.passed for r in rows)
            progress(f"[{'pass' if ok else 'FAIL'}] {name} ({report.seconds[name]:.1f}s)")
    return report
