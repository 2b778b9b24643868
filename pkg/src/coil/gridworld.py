"""Gridworld scenarios, the simulated human, and experiment suites."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import make_planner
from .errors import BadConfig
from .model import PROFILES, CostProfile, PreferenceSpace, Skill, TaskFeatures, TeachModel
from .planner import EpisodeLog, run_interaction

GRID_SIZE = (17, 17)
TYPES = ("mug", "plate", "bowl", "cup", "spoon")
COLORS = ("red", "green", "blue", "yellow")

# Optimistic prior: every variety is assumed teachable until a failure is observed.
DEFAULT_TEACH_PRIOR = TeachModel(1.0, 0.0)

# (type, color, category) for the conveyor table
CONVEYOR_OBJECTS = (
    ("bottle", "pink", "kitchen"), ("bottle", "green", "kitchen"),
    ("mug", "white", "kitchen"), ("mug", "red", "kitchen"),
    ("tape", "brown", "office"), ("tape", "black", "office"),
    ("block", "orange", "toys"), ("block", "blue", "toys"),
    ("banana", "yellow", "kitchen"), ("lemon", "yellow", "kitchen"),
    ("can", "silver", "kitchen"), ("spam", "blue", "kitchen"),
)
CONVEYOR_PROFILE = CostProfile(c_hum=50.0, c_skill=100.0)


@dataclass(frozen=True)
class ScenarioConfig:
    seq_len: int = 15
    n_varieties: int = 9
    n_goals: int = 3
    challenging_frac: float = 0.0
    variety_weights: tuple | None = None
    domain: str = "gridworld"

    def validate(self):
        if not 0.0 <= self.challenging_frac <= 1.0:
            raise BadConfig("challenging_frac", f"{self.challenging_frac} outside [0, 1]")
        if self.n_varieties < 1:
            raise BadConfig("n_varieties", "need at least one variety")
        if self.n_goals < 1:
            raise BadConfig("n_goals", "need at least one goal")
        if self.seq_len < 0:
            raise BadConfig("seq_len", "must be nonnegative")
        if self.domain == "gridworld" and self.n_varieties > len(TYPES) * len(COLORS):
            raise BadConfig("n_varieties", f"at most {len(TYPES) * len(COLORS)} gridworld varieties")
        if self.variety_weights is not None:
            w = np.asarray(self.variety_weights, dtype=float)
            if w.shape != (self.n_varieties,) or np.any(w < 0) or w.sum() <= 0:
                raise BadConfig("variety_weights", "need one nonnegative weight per variety")
        if self.domain not in ("gridworld", "conveyor"):
            raise BadConfig("domain", f"unknown domain {self.domain!r}")


def conveyor_config(seq_len: int = 20, high_freq_weight: float = 5.0) -> ScenarioConfig:
    """Conveyor-like table: 12 objects, one object five times as frequent, three bins.
    Skills generalise across an object type, preferences across a category."""
    weights = (high_freq_weight,) + (1.0,) * (len(CONVEYOR_OBJECTS) - 1)
    return ScenarioConfig(seq_len=seq_len, n_varieties=len(CONVEYOR_OBJECTS), n_goals=3,
                          variety_weights=weights, domain="conveyor")


@dataclass(frozen=True)
class Scenario:
    seed: int
    varieties: tuple       # distinct TaskFeatures templates
    sequence: tuple        # TaskFeatures in arrival order
    goals: PreferenceSpace
    hidden_prefs: dict     # preference group -> goal index
    challenging: frozenset  # variety ids that can never be taught
    grid_size: tuple = GRID_SIZE

    def to_dict(self) -> dict:
        def task(t):
            return {"object_type": t.object_type, "color": t.color, "category": t.category,
                    "position": list(t.position) if t.position else None,
                    "variety_keys": list(t.variety_keys),
                    "pref_keys": list(t.pref_keys) if t.pref_keys else None}
        return {
            "seed": self.seed,
            "grid_size": list(self.grid_size),
            "varieties": [task(t) for t in self.varieties],
            "sequence": [task(t) for t in self.sequence],
            "goals": list(self.goals.params),
            "hidden_prefs": dict(self.hidden_prefs),
            "challenging": sorted(self.challenging),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        def task(t):
            return TaskFeatures(t["object_type"], t["color"], t.get("category"),
                                tuple(t["position"]) if t.get("position") else None,
                                tuple(t["variety_keys"]),
                                tuple(t["pref_keys"]) if t.get("pref_keys") else None)
        return cls(d["seed"], tuple(task(t) for t in d["varieties"]),
                   tuple(task(t) for t in d["sequence"]), PreferenceSpace(tuple(d["goals"])),
                   {k: int(v) for k, v in d["hidden_prefs"].items()},
                   frozenset(d["challenging"]), tuple(d.get("grid_size", GRID_SIZE)))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _templates(config: ScenarioConfig):
    if config.domain == "conveyor":
        objs = CONVEYOR_OBJECTS[:config.n_varieties]
        return [TaskFeatures(t, c, cat, variety_keys=("object_type",), pref_keys=("category",))
                for t, c, cat in objs]
    combos = [(t, c) for c in COLORS for t in TYPES]
    return [TaskFeatures(t, c) for t, c in combos[:config.n_varieties]]


def generate_scenario(seed: int, config: ScenarioConfig = ScenarioConfig()) -> Scenario:
    config.validate()
    rng = np.random.default_rng(seed)
    templates = _templates(config)
    if config.variety_weights is None:
        p = None
    else:
        w = np.asarray(config.variety_weights, dtype=float)
        p = w / w.sum()
    picks = rng.choice(len(templates), size=config.seq_len, p=p)
    cells = rng.integers(0, GRID_SIZE[0], size=(config.seq_len, 2))
    sequence = tuple(
        TaskFeatures(templates[v].object_type, templates[v].color, templates[v].category,
                     (int(x), int(y)), templates[v].variety_keys, templates[v].pref_keys)
        for v, (x, y) in zip(picks, cells))
    groups = sorted({t.pref_group for t in templates})
    prefs = rng.integers(config.n_goals, size=len(groups))
    hidden = {g: int(z) for g, z in zip(groups, prefs)}
    variety_ids = sorted({t.variety_id for t in templates})
    n_hard = min(round_half_up(config.challenging_frac * len(variety_ids)), len(variety_ids))
    hard = rng.choice(len(variety_ids), size=n_hard, replace=False)
    goals = PreferenceSpace(tuple(f"goal{g}" for g in range(config.n_goals)))
    return Scenario(seed, tuple(templates), sequence, goals, hidden,
                    frozenset(variety_ids[h] for h in hard))


def oracle_answer_pref(scenario: Scenario, task: TaskFeatures) -> int:
    return scenario.hidden_prefs[task.pref_group]


def oracle_teach(scenario: Scenario, task: TaskFeatures) -> bool:
    return task.variety_id not in scenario.challenging


def adjudicate_execution(scenario: Scenario, task: TaskFeatures, skill: Skill, theta: int,
                         profile: CostProfile) -> tuple[float, float]:
    """(safety penalty, preference penalty) of executing ``skill`` with ``theta`` on ``task``."""
    safety = profile.c_skill_fail if skill.trained_variety != task.variety_id else 0.0
    pref = profile.c_pref_fail if theta != oracle_answer_pref(scenario, task) else 0.0
    return safety, pref


class SimulatedHuman:
    """Deterministic human for a scenario; demonstrations follow the hidden preference."""

    def __init__(self, scenario: Scenario, profile: CostProfile):
        self.scenario, self.profile = scenario, profile

    def answer_pref(self, i):
        return oracle_answer_pref(self.scenario, self.scenario.sequence[i])

    def teach(self, i):
        return oracle_teach(self.scenario, self.scenario.sequence[i])

    def taught_skill(self, i):
        task = self.scenario.sequence[i]
        return Skill(task.variety_id, self.answer_pref(i))

    def adjudicate(self, i, skill, theta):
        return adjudicate_execution(self.scenario, self.scenario.sequence[i], skill, theta,
                                    self.profile)


@dataclass
class EpisodeMetrics:
    n_teach: int
    n_human: int
    n_pref: int
    n_robot: int
    realized_cost: float
    planned_cost_initial: float
    runtime_ms: float
    penalties: float = 0.0

    @classmethod
    def from_log(cls, log: EpisodeLog) -> "EpisodeMetrics":
        return cls(log.n_teach, log.n_human, log.n_pref, log.n_robot, log.realized_cost,
                   log.planned_cost_initial, log.runtime_ms, log.penalties)

    def decomposition(self, profile: CostProfile) -> float:
        return (self.n_teach * profile.c_skill + self.n_human * profile.c_hum
                + self.n_pref * profile.c_pref + self.n_robot * profile.c_rob + self.penalties)


def run_episode(scenario: Scenario, algorithm: str, profile: CostProfile,
                teach_prior: TeachModel = DEFAULT_TEACH_PRIOR, **planner_kw) -> EpisodeLog:
    planner = make_planner(algorithm, **planner_kw)
    return run_interaction(scenario, planner, SimulatedHuman(scenario, profile), profile,
                           teach_prior=teach_prior)


METRIC_FIELDS = ("n_teach", "n_human", "n_pref", "n_robot", "realized_cost", "runtime_ms")


@dataclass
class SuiteResult:
    rows: list = field(default_factory=list)
    logs: dict = field(default_factory=dict)  # (seed, profile, algorithm) -> EpisodeLog
    scenarios: dict = field(default_factory=dict)

    def summary(self) -> dict:
        """``{(profile, algorithm): {metric: (mean, std)}}``; std is the sample std."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r["profile"], r["algorithm"]), []).append(r)
        out = {}
        for key, rs in groups.items():
            out[key] = {}
            for m in METRIC_FIELDS:
                v = np.array([r[m] for r in rs], dtype=float)
                out[key][m] = (float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0)
        return out

    def mean(self, profile, algorithm, metric="realized_cost") -> float:
        return self.summary()[(profile, algorithm)][metric][0]

    def per_seed(self, profile, algorithm, metric="realized_cost") -> dict:
        return {r["seed"]: r[metric] for r in self.rows
                if r["profile"] == profile and r["algorithm"] == algorithm}


def _resolve_profile(p) -> tuple[str, CostProfile]:
    if isinstance(p, tuple):
        return p
    if p not in PROFILES:
        raise BadConfig("profile", f"unknown profile {p!r}")
    return p, PROFILES[p]


def _job(args):
    seed, pname, profile, algo, config, prior, planner_kw = args
    scenario = generate_scenario(seed, config)
    log = run_episode(scenario, algo, profile, prior, **planner_kw)
    return seed, pname, algo, scenario, log


def run_suite(profiles=("low", "med", "high"), algorithms=("COIL", "C-ADL", "IG", "CBA"),
              n_seeds: int = 30, root_seed: int = 0, config: ScenarioConfig = ScenarioConfig(),
              teach_prior: TeachModel = DEFAULT_TEACH_PRIOR, workers: int = 1,
              **planner_kw) -> SuiteResult:
    """Run every (profile, algorithm) on scenarios seeded ``root_seed + e`` for
    ``e < n_seeds``; all algorithms see the same scenarios."""
    config.validate()
    resolved = [_resolve_profile(p) for p in profiles]
    for a in algorithms:
        try:
            make_planner(a)
        except KeyError:
            raise BadConfig("algorithms", f"unknown algorithm {a!r}") from None
    jobs = [(root_seed + e, pname, prof, algo, config, teach_prior, planner_kw)
            for e in range(n_seeds) for pname, prof in resolved for algo in algorithms]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_job, jobs, chunksize=4))
    else:
        results = [_job(j) for j in jobs]
    out = SuiteResult()
    for seed, pname, algo, scenario, log in results:
        m = EpisodeMetrics.from_log(log)
        row = {"seed": seed, "algorithm": algo, "profile": pname}
        row.update({k: getattr(m, k) for k in METRIC_FIELDS})
        row["penalties"] = m.penalties
        out.rows.append(row)
        out.logs[(seed, pname, algo)] = log
        out.scenarios[seed] = scenario
    return out


def summary_table(result: SuiteResult, digits: int = 2) -> str:
    cols = ("n_teach", "n_human", "n_pref", "n_robot", "realized_cost")
    summary = result.summary()
    pw = max([len("Cost")] + [len(p) for p, _ in summary]) + 2
    aw = max([len("Algo")] + [len(a) for _, a in summary]) + 2
    head = f"{'Cost':<{pw}}{'Algo':<{aw}}" + "".join(
        f"{c:>18}" for c in ("#teach", "#human", "#pref", "#robot", "Cost"))
    lines = [head]
    for (pname, algo), stats in summary.items():
        cells = "".join(f"{stats[c][0]:.{digits}f} ({stats[c][1]:.{digits}f})".rjust(18) for c in cols)
        lines.append(f"{pname:<{pw}}{algo:<{aw}}{cells}")
    return "\n".join(lines)


__all__ = [
    "Scenario", "ScenarioConfig", "generate_scenario", "conveyor_config", "oracle_answer_pref",
    "oracle_teach", "adjudicate_execution", "CONVEYOR_PROFILE", "SimulatedHuman", "EpisodeMetrics", "run_episode",
    "run_suite", "SuiteResult", "summary_table", "DEFAULT_TEACH_PRIOR",
]
