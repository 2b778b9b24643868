"""COIL: task horizons compiled to facility location, preference-request lookahead,
and the replanning interaction loop."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyHorizon, NonTermination
from .model import (
    CostProfile,
    Skill,
    TaskFeatures,
    TeachModels,
    belief_update,
    best_theta,
    entropy,
)
from .ufl import TIE_TOL, UflInstance, UflSolution, solve_greedy

# ---------------------------------------------------------------- actions


@dataclass(frozen=True)
class ExecuteSkill:
    task_index: int
    skill: Skill
    theta: int
    taught_at: int | None = None  # set when the skill is still to be taught in this plan
    kind = "rob"


@dataclass(frozen=True)
class RequestSkill:
    task_index: int
    theta: int
    kind = "skill"


@dataclass(frozen=True)
class RequestHuman:
    task_index: int
    kind = "hum"


@dataclass(frozen=True)
class RequestPref:
    task_index: int
    kind = "pref"


def action_to_dict(action) -> dict:
    d = {"kind": action.kind, "task_index": action.task_index}
    if isinstance(action, ExecuteSkill):
        d.update(skill=[action.skill.trained_variety, action.skill.trained_pref], theta=action.theta)
    elif isinstance(action, RequestSkill):
        d["theta"] = action.theta
    return d


# ---------------------------------------------------------------- UFL compilation


@dataclass(frozen=True)
class Facility:
    kind: str           # "human", "skill" or "robot"
    task: int | None    # horizon position the facility was created for (human/skill)
    skill: Skill | None
    lam: float = 1.0


def _teach_lambda(teach_models: TeachModels | None) -> Callable[[str], float]:
    if teach_models is None:
        return lambda variety: 1.0
    return teach_models.mean


def build_ufl(tasks: Sequence[TaskFeatures], beliefs, library: Sequence[Skill],
              teach_models: TeachModels | None, profile: CostProfile,
              blocked: frozenset = frozenset()) -> tuple[UflInstance, list[Facility]]:
    """UFL instance for a horizon (positions ``0..n-1``).

    Per task ``i``: a human facility (open ``c_hum``, serves only ``i`` at 0) and, unless
    ``i`` is in ``blocked``, a skill facility (open ``c_skill``, serves every ``j >= i``).
    Per library skill: a robot facility (open 0, serves every task). Skill and robot
    service costs are ``c_rob`` minus the best predicted return; the to-be-taught skill at
    ``i`` is assumed trained for the MAP preference of task ``i`` and discounted by the
    teach-success estimate of its variety, learned skills are not discounted.
    ``teach_models=None`` pins every teach estimate to 1.
    """
    n = len(tasks)
    if n == 0:
        raise EmptyHorizon("no tasks in horizon")
    B = np.asarray(beliefs, dtype=float)
    if B.shape[0] != n:
        raise ValueError("beliefs not aligned with horizon")
    csf, cpf = profile.c_skill_fail, profile.c_pref_fail
    varieties = np.array([t.variety_id for t in tasks], dtype=object)
    same = varieties[:, None] == varieties[None, :]
    # penalty when no skill is safe: safety term in full, best preference guess
    base = csf + cpf * (1.0 - B.max(axis=1))

    lam_of = _teach_lambda(teach_models)
    lam = np.array([lam_of(v) for v in varieties])
    sp = B.argmax(axis=1)
    match_pen = csf * (1.0 - lam[:, None]) + cpf * (1.0 - B[:, sp].T)
    later = np.triu(np.ones((n, n), dtype=bool))
    skill_pen = np.where(same & later, np.minimum(base[None, :], match_pen), base[None, :])

    open_cost, service, feasible, decode = [], [], [], []
    for i in range(n):
        row = np.zeros(n)
        hum = np.zeros(n, dtype=bool)
        hum[i] = True
        open_cost.append(profile.c_hum)
        service.append(row)
        feasible.append(hum)
        decode.append(Facility("human", i, None))
        if i in blocked:
            continue
        open_cost.append(profile.c_skill)
        service.append(profile.c_rob + skill_pen[i])
        feasible.append(later[i])
        decode.append(Facility("skill", i, Skill(tasks[i].variety_id, int(sp[i])), float(lam[i])))
    for skill in library:
        match = varieties == skill.trained_variety
        pen = np.where(match, np.minimum(base, cpf * (1.0 - B[:, skill.trained_pref])), base)
        open_cost.append(0.0)
        service.append(profile.c_rob + pen)
        feasible.append(np.ones(n, dtype=bool))
        decode.append(Facility("robot", None, skill, 1.0))
    inst = UflInstance(np.array(open_cost), np.array(service), np.array(feasible))
    return inst, decode


# ---------------------------------------------------------------- plans


@dataclass
class Plan:
    actions: tuple            # one resolving action per horizon task
    expected_cost: float      # J
    facility_decode: list
    solution: UflSolution
    instance: UflInstance
    start: int = 0
    pref_request: RequestPref | None = None
    known_prefs_cost: float | None = None   # J before the preference lookahead
    expected_pref_cost: float | None = None  # normalised expected J' over responses

    @property
    def first_action(self):
        return self.pref_request if self.pref_request is not None else self.actions[0]


def _decode(tasks, beliefs, decode, solution, profile, start):
    n = len(tasks)
    open_skill_at = {fac.task: idx for idx, fac in enumerate(decode)
                     if fac.kind == "skill" and idx in solution.open_facilities}
    actions = []
    for j in range(n):
        fac = decode[solution.assignment[j]]
        if j in open_skill_at:
            # the skill facility opened at j is taught here even if j itself is served elsewhere
            fac = decode[open_skill_at[j]]
            theta, _ = best_theta(fac.skill, tasks[j], beliefs[j], fac.lam, profile)
            actions.append(RequestSkill(start + j, theta))
        elif fac.kind == "human":
            actions.append(RequestHuman(start + j))
        else:
            theta, _ = best_theta(fac.skill, tasks[j], beliefs[j], fac.lam, profile)
            taught = start + fac.task if fac.kind == "skill" else None
            actions.append(ExecuteSkill(start + j, fac.skill, theta, taught))
    return tuple(actions)


def plan_known_prefs(tasks, beliefs, library, teach_models, profile, *, start=0,
                     blocked=frozenset(), solver=solve_greedy) -> Plan:
    """Solve the horizon's UFL instance and decode it into one action per task."""
    inst, decode = build_ufl(tasks, beliefs, library, teach_models, profile, blocked)
    sol = solver(inst)
    actions = _decode(tasks, np.asarray(beliefs), decode, sol, profile, start)
    return Plan(actions, sol.total_cost, decode, sol, inst, start)


def plan(tasks, beliefs, library, teach_models, profile, *, start=0, blocked=frozenset(),
         solver=solve_greedy) -> Plan:
    """Known-preference plan, prefixed with a preference request for the first task
    when the request cost plus the belief-weighted replanned cost does not exceed
    the current plan cost."""
    beliefs = np.asarray(beliefs, dtype=float)
    base = plan_known_prefs(tasks, beliefs, library, teach_models, profile, start=start,
                            blocked=blocked, solver=solver)
    base.known_prefs_cost = base.expected_cost
    b1 = beliefs[0]
    if entropy(b1) == 0.0:
        return base
    j_bar = 0.0
    for theta in range(b1.size):
        if b1[theta] == 0.0:
            continue
        hyp = belief_update(beliefs, 0, theta, tasks)
        j_prime = plan_known_prefs(tasks, hyp, library, teach_models, profile, start=start,
                                   blocked=blocked, solver=solver).expected_cost
        j_bar += b1[theta] * j_prime
    expected = j_bar / b1.sum()
    base.expected_pref_cost = expected
    if profile.c_pref + expected <= base.expected_cost + TIE_TOL:
        base.pref_request = RequestPref(start)
        base.expected_cost = profile.c_pref + expected
    return base


# ---------------------------------------------------------------- episodes


@dataclass(frozen=True)
class EpisodeState:
    tasks: tuple
    n_prefs: int
    current: int
    beliefs: np.ndarray
    library: tuple
    teach_models: TeachModels
    profile: CostProfile
    failed_teach: frozenset = frozenset()

    @property
    def horizon(self):
        return self.tasks[self.current:]

    @property
    def horizon_beliefs(self):
        return self.beliefs[self.current:]

    @property
    def task(self) -> TaskFeatures:
        return self.tasks[self.current]

    @property
    def horizon_blocked(self) -> frozenset:
        return frozenset(i - self.current for i in self.failed_teach if i >= self.current)


class CoilPlanner:
    """Replans with :func:`plan` on the remaining horizon and returns its first action.

    With ``adaptive=False`` every teach estimate is pinned to 1 and teaching
    outcomes are ignored (the no-adaptation ablation).
    """

    def __init__(self, adaptive: bool = True, solver=solve_greedy):
        self.adaptive = adaptive
        self.solver = solver
        self.name = "COIL" if adaptive else "COIL-NoAdapt"

    @property
    def adapts(self) -> bool:
        return self.adaptive

    def next_action(self, state: EpisodeState):
        p = plan(state.horizon, state.horizon_beliefs, state.library,
                 state.teach_models if self.adaptive else None, state.profile,
                 start=state.current, blocked=state.horizon_blocked, solver=self.solver)
        info = {"plan_cost": p.expected_cost, "known_prefs_cost": p.known_prefs_cost}
        if p.expected_pref_cost is not None:
            info["expected_pref_cost"] = p.expected_pref_cost
        return p.first_action, info


@dataclass
class StepRecord:
    step: int
    task_index: int
    action: dict
    outcome: str
    charged_cost: float
    penalty: float
    lambda_teach_snapshot: float
    belief_entropy: float
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "type": "step",
            "step": self.step,
            "task_index": self.task_index,
            "action": self.action,
            "outcome": self.outcome,
            "charged_cost": self.charged_cost,
            "penalty": self.penalty,
            "lambda_teach_snapshot": self.lambda_teach_snapshot,
            "belief_entropy": self.belief_entropy,
            "info": self.info,
        }


@dataclass
class EpisodeLog:
    algorithm: str
    profile: CostProfile
    n_tasks: int
    steps: list = field(default_factory=list)
    runtime_ms: float = 0.0
    final_teach_models: TeachModels | None = None

    def count(self, kind: str) -> int:
        return sum(1 for s in self.steps if s.action["kind"] == kind)

    @property
    def n_teach(self):
        return self.count("skill")

    @property
    def n_human(self):
        return self.count("hum")

    @property
    def n_pref(self):
        return self.count("pref")

    @property
    def n_robot(self):
        return self.count("rob")

    @property
    def penalties(self) -> float:
        return float(sum(s.penalty for s in self.steps))

    @property
    def realized_cost(self) -> float:
        return float(sum(s.charged_cost for s in self.steps))

    @property
    def planned_cost_initial(self) -> float:
        if self.steps and "plan_cost" in self.steps[0].info:
            return float(self.steps[0].info["plan_cost"])
        return float("nan")

    def teach_counts_by_variety(self, tasks) -> dict:
        out = {}
        for s in self.steps:
            if s.action["kind"] == "skill":
                v = tasks[s.task_index].variety_id
                out[v] = out.get(v, 0) + 1
        return out


def run_interaction(scenario, planner, oracle, profile: CostProfile, *,
                    teach_prior=None, max_repeats: int = 25) -> EpisodeLog:
    """Run one episode: replan, execute the first action against ``oracle``, repeat.

    ``scenario`` needs ``sequence`` (tasks) and ``goals`` (preference space). ``oracle``
    answers ``answer_pref(i)``, ``teach(i)``, ``taught_skill(i)`` and
    ``adjudicate(i, skill, theta) -> (safety_penalty, preference_penalty)``.
    """
    tasks = tuple(scenario.sequence)
    k = len(scenario.goals)
    teach_models = TeachModels(teach_prior) if teach_prior is not None else TeachModels()
    state = EpisodeState(tasks, k, 0, np.tile(scenario.goals.uniform(), (len(tasks), 1)),
                         (), teach_models, profile)
    log = EpisodeLog(getattr(planner, "name", type(planner).__name__), profile, len(tasks))
    repeats: dict = {}
    t0 = time.perf_counter()
    step = 0
    while state.current < len(tasks):
        action, info = planner.next_action(state)
        i = state.current
        if action.task_index != i:
            raise ValueError(f"planner acted on task {action.task_index}, current is {i}")
        key = (i, action.kind)
        repeats[key] = repeats.get(key, 0) + 1
        if repeats[key] > max_repeats:
            raise NonTermination(f"{planner_name(planner)}: {action.kind} repeated on task {i}")
        variety = tasks[i].variety_id
        lam = state.teach_models.mean(variety)
        h = entropy(state.beliefs[i])
        penalty = 0.0
        if isinstance(action, RequestPref):
            theta = oracle.answer_pref(i)
            state = _replace(state, beliefs=belief_update(state.beliefs, i, theta, tasks))
            charged, outcome = profile.c_pref, f"pref={theta}"
        elif isinstance(action, RequestHuman):
            charged, outcome = profile.c_hum, "done"
            state = _replace(state, current=i + 1)
            repeats = {}
        elif isinstance(action, RequestSkill):
            if i in state.failed_teach:
                raise ValueError(f"task {i} already had a failed teaching attempt")
            success = bool(oracle.teach(i))
            charged = profile.c_skill
            models = state.teach_models.updated(variety, success) if planner.adapts else state.teach_models
            if success:
                skill = oracle.taught_skill(i)
                lib = state.library if skill in state.library else state.library + (skill,)
                state = _replace(state, library=lib, teach_models=models)
                outcome = "taught"
            else:
                state = _replace(state, teach_models=models,
                                 failed_teach=state.failed_teach | {i})
                outcome = "teach_failed"
        elif isinstance(action, ExecuteSkill):
            if action.skill not in state.library:
                raise ValueError(f"skill {action.skill} is not in the library")
            safety, pref = oracle.adjudicate(i, action.skill, action.theta)
            penalty = float(safety + pref)
            charged = profile.c_rob + penalty
            outcome = "done" if penalty == 0 else f"done_penalty={penalty:g}"
            state = _replace(state, current=i + 1)
            repeats = {}
        else:
            raise TypeError(f"unknown action {action!r}")
        log.steps.append(StepRecord(step, i, action_to_dict(action), outcome, float(charged),
                                    penalty, lam, h, info))
        step += 1
    log.runtime_ms = 1e3 * (time.perf_counter() - t0)
    log.final_teach_models = state.teach_models
    return log


def planner_name(planner) -> str:
    return getattr(planner, "name", type(planner).__name__)


def _replace(state: EpisodeState, **changes) -> EpisodeState:
    fields = dict(state.__dict__)
    fields.update(changes)
    return EpisodeState(**fields)


# ---------------------------------------------------------------- scaling probe


def synthetic_horizon(n: int, k: int, n_varieties: int = 9, seed: int = 0):
    rng = np.random.default_rng(seed)
    tasks = [TaskFeatures(f"obj{v}", "c") for v in rng.integers(n_varieties, size=n)]
    beliefs = np.full((n, k), 1.0 / k)
    return tasks, beliefs


def planner_runtime_bound_check(ns=(25, 50, 100, 200), ks=(3,), repeats: int = 5,
                                profile: CostProfile | None = None, seed: int = 0) -> dict:
    """Median wall time (seconds) of :func:`plan` on synthetic horizons, keyed by ``(n, k)``."""
    profile = profile or CostProfile()
    out = {}
    for k in ks:
        for n in ns:
            tasks, beliefs = synthetic_horizon(n, k, seed=seed)
            samples = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                plan(tasks, beliefs, (), TeachModels(), profile)
                samples.append(time.perf_counter() - t0)
            out[(n, k)] = float(np.median(samples))
    return out
