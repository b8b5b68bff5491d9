"""Batch ratio experiments over seeded random instances, and robustness sweeps over theta.

Every run writes a CSV table plus a JSON log of the per-instance verdicts the table was
aggregated from. Wall-clock times only go into the JSON log so that identical plans give
byte-identical CSVs.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .equilibrium import DEFAULT_ASSIGNMENT_BUDGET, BudgetError, solve_msse
from .instances import InstanceGenConfig, default_deception_grid, fixture, generate_random
from .model import SecurityGame, attack_values
from .robustness import favoured_targets, robustness_report
from .stability import AssumptionError, certify_dsse_stability, certify_msse_stability

CASES = ("case1", "case2", "case3", "case4", "robustness-msse", "robustness-dsse")
MAX_ASSIGNMENTS = 10 ** 5
WORKERS_ENV = "HYPERSSG_WORKERS"
# instance j at sweep point p gets seed base_seed + SEED_STRIDE * p + j
SEED_STRIDE = 10_000


def fmt(v) -> str:
    """Float as 17 significant digits, so the text round-trips exactly."""
    if v is None:
        return "undefined"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass
class ExperimentPlan:
    case: str
    axis: str = "K"                 # swept dimension, "n" or "K"
    values: list = field(default_factory=lambda: [2, 3, 4])
    fixed: int = 2                  # the other dimension
    instances: int = 10             # per sweep point
    base_seed: int = 0
    budget: int = DEFAULT_ASSIGNMENT_BUDGET
    use_milp: bool = False
    mixed: bool = True              # HNE check lets followers split over tied targets
    full_cover: bool = False        # stricter trick condition for case3/case4
    fixture: str | None = None      # robustness cases
    fixture_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.axis not in ("n", "K"):
            raise ValueError("axis must be 'n' or 'K'")
        self.values = [int(v) for v in self.values]

    def sizes(self):
        for v in self.values:
            yield (v, self.fixed) if self.axis == "n" else (self.fixed, v)

    def estimated_lps(self) -> int:
        """Worst-case LP count: one LP per target assignment per instance (per grid point
        for the deception cases)."""
        total = 0
        for n, K in self.sizes():
            per = K ** n
            if self.case in ("case3", "case4"):
                per *= default_deception_grid(n, K) ** (n * K)
            total += per * self.instances
        return total

    def check_budget(self):
        if self.case.startswith("robustness"):
            return
        worst = max(K ** n for n, K in self.sizes())
        milp_ok = self.use_milp and self.case in ("case1", "case2")
        if worst > MAX_ASSIGNMENTS and not milp_ok:
            raise BudgetError(f"plan needs up to {worst} assignments per solve "
                              f"(cap {MAX_ASSIGNMENTS}); select the MILP path or shrink the sweep")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown plan keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class ExperimentRow:
    value: int
    numerator: int
    denominator: int
    ratio: float | None
    instances: int
    skipped: int = 0
    wall_time: float = 0.0

    @property
    def partial(self) -> bool:
        return self.skipped > 0


def _verdict(job):
    case, n, K, seed, budget, use_milp, mixed, full_cover = job
    t0 = time.perf_counter()
    out = {"n": n, "K": K, "seed": seed, "status": "ok"}
    try:
        if case in ("case1", "case2"):
            game = generate_random(InstanceGenConfig(n, K, seed))
            rep = certify_msse_stability(game, mixed_followers=mixed, budget=budget, milp=use_milp)
            if rep.equilibrium.status != "optimal":
                out["status"] = rep.equilibrium.status
            out.update(condition=bool(rep.condition_holds), hne=bool(rep.hne.is_hne),
                       literal_hne=bool(rep.hne.literal_is_hne),
                       lam=None if rep.certificate is None else float(rep.certificate.lam),
                       targets=list(rep.equilibrium.chosen_targets),
                       leader_value=float(rep.equilibrium.leader_value))
        else:
            game = generate_random(InstanceGenConfig(n, K, seed, mode="deception"))
            rep = certify_dsse_stability(game, mixed_followers=mixed, budget=budget,
                                         full_cover=full_cover)
            out.update(condition=bool(rep.condition_holds), hne=bool(rep.hne.is_hne),
                       literal_hne=bool(rep.hne.literal_is_hne), value_matches=rep.value_matches,
                       leader_value=float(rep.equilibrium.leader_value),
                       expected_value=float(rep.expected_value),
                       theta_star=[float(t) for t in rep.equilibrium.theta_used])
    except BudgetError as e:
        out.update(status="budget-exceeded", detail=str(e))
    except AssumptionError as e:
        out.update(status="assumption-failed", detail=str(e))
    out["wall_time"] = time.perf_counter() - t0
    return out


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


def _map(fn, jobs, workers):
    if workers == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))       # map keeps submission order


def _count(case, verdicts):
    ok = [v for v in verdicts if v["status"] == "ok"]
    both = sum(v["condition"] and v["hne"] for v in ok)
    if case in ("case1", "case3"):
        den = sum(v["condition"] for v in ok)
    else:
        den = sum(v["hne"] for v in ok)
    return both, den, len(verdicts) - len(ok)


CASE_COLUMNS = ["case", "axis", "value", "fixed", "numerator", "denominator", "ratio",
                "instances", "skipped", "partial"]


def run_cases(plan: ExperimentPlan, out_dir=None, workers: int | None = None):
    """Case 1: #(SOL nonempty and HNE) / #(SOL nonempty); case 2 divides by #HNE instead.
    Cases 3 and 4 do the same with the trick condition and the DSSE.

    Returns (rows, verdicts). With ``out_dir`` writes <case>.csv and <case>.verdicts.json.
    """
    if plan.case.startswith("robustness"):
        raise ValueError("robustness plans go through run_robustness")
    plan.check_budget()
    jobs, where = [], []
    for p, (n, K) in enumerate(plan.sizes()):
        for j in range(plan.instances):
            jobs.append((plan.case, n, K, plan.base_seed + SEED_STRIDE * p + j, plan.budget,
                         plan.use_milp, plan.mixed, plan.full_cover))
            where.append(p)
    verdicts = _map(_verdict, jobs, _workers(workers))
    rows = []
    for p, v in enumerate(plan.values):
        vs = [d for d, q in zip(verdicts, where) if q == p]
        num, den, skipped = _count(plan.case, vs)
        rows.append(ExperimentRow(v, num, den, num / den if den else None, len(vs), skipped,
                                  sum(d["wall_time"] for d in vs)))
    if out_dir is not None:
        write_case_outputs(plan, rows, verdicts, out_dir)
    return rows, verdicts


def write_case_outputs(plan, rows, verdicts, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{plan.case}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASE_COLUMNS)
        for r in rows:
            w.writerow([plan.case, plan.axis, r.value, plan.fixed, r.numerator, r.denominator,
                        fmt(r.ratio), r.instances, r.skipped, fmt(r.partial)])
    log = {"plan": plan.to_dict(), "rows": [asdict(r) for r in rows], "verdicts": verdicts}
    with open(out / f"{plan.case}.verdicts.json", "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=1)
        fh.write("\n")
    return out / f"{plan.case}.csv"


def recount(case, verdict_log: dict) -> list[tuple[int, int]]:
    """(numerator, denominator) per row recomputed from a verdict log."""
    plan = ExperimentPlan.from_dict(verdict_log["plan"])
    out = []
    for n, K in plan.sizes():
        vs = [v for v in verdict_log["verdicts"] if v["n"] == n and v["K"] == K]
        num, den, _ = _count(case, vs)
        out.append((num, den))
    return out


# ---------------------------------------------------------------------------
# robustness sweeps
# ---------------------------------------------------------------------------

def run_robustness(game: SecurityGame, plan: ExperimentPlan, out_dir=None, sigma=None,
                   x_sse=None):
    """Utilities along the theta grid next to the analytic and sampled radii.

    One row per grid point theta': the leader value of the MSSE at theta' (compare with the
    SSE value for deception), and each follower's true utility when it best-responds at
    theta' to the fixed SSE allocation. Then the radius columns and whether theta' lies
    inside each radius. Returns (header, rows, report).
    """
    which = plan.case.split("-")[1]
    rep = robustness_report(game, sigma=sigma, which=(which,), seed=plan.base_seed, x_sse=x_sse)
    delta = rep.delta_msse if which == "msse" else rep.delta_dsse
    emp = rep.empirical_msse if which == "msse" else rep.empirical_dsse
    th0 = game.theta.theta0
    x = rep.x_sse
    g0 = attack_values(game, x, th0)
    sse_value = solve_msse(game, th0, budget=plan.budget).leader_value
    m = game.theta.dim
    header = ([f"theta_{j}" for j in range(m)] + ["distance", "leader_value", "sse_value"]
              + [f"follower_{i}_actual" for i in range(game.n)]
              + ["delta_theta", "empirical_radius", "inside_delta", "inside_empirical"])
    rows = []
    for t in game.theta.grid_points():
        eq = solve_msse(game, t, budget=plan.budget)
        ks = favoured_targets(game, x, t)
        actual = game.R * g0[np.arange(game.n), ks]
        dist = float(np.linalg.norm(t - th0))
        rows.append([*(fmt(a) for a in t), fmt(dist), fmt(eq.leader_value), fmt(sse_value),
                     *(fmt(a) for a in actual), fmt(delta), fmt(emp),
                     fmt(dist <= delta), fmt(dist < emp)])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{plan.case}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        log = {"plan": plan.to_dict(), "game": game.name, "delta_theta": delta,
               "empirical_radius": emp, "shell_width": rep.shell_width, "tags": rep.tags,
               "sigma": rep.ingredients.sigma, "sigma_source": rep.ingredients.sigma_source}
        with open(out / f"{plan.case}.verdicts.json", "w", encoding="utf-8") as fh:
            json.dump(log, fh, indent=1)
            fh.write("\n")
    return header, rows, rep


def run_plan(plan: ExperimentPlan, out_dir=None, workers: int | None = None):
    if plan.case.startswith("robustness"):
        if not plan.fixture:
            raise ValueError("robustness plans need a fixture name")
        game, info = fixture(plan.fixture, **plan.fixture_params)
        return run_robustness(game, plan, out_dir, x_sse=info.params.get("x_sse"))
    return run_cases(plan, out_dir, workers)
