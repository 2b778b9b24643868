"""Comparison planners: confidence-thresholded ADL, information gain, confidence-based
autonomy and COIL without teach adaptation.

Every planner exposes ``name``, ``adapts`` and ``next_action(state) -> (action, info)``
so that all of them run through :func:`coil.planner.run_interaction`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Skill, belief_update, best_theta, entropy, map_pref, rho_safe
from .planner import (
    CoilPlanner,
    EpisodeState,
    ExecuteSkill,
    RequestHuman,
    RequestPref,
    RequestSkill,
    plan_known_prefs,
)
from .ufl import solve_greedy


@dataclass(frozen=True)
class IgConfig:
    beta_scale: float = 0.01
    # "reduction": sum over j >= i of H(b_j) - H(b_j^g); "verbatim": sum H(b_j^g) - H(b_i)
    entropy_form: str = "reduction"

    def __post_init__(self):
        if self.beta_scale < 0:
            raise ValueError("beta_scale must be nonnegative")
        if self.entropy_form not in ("reduction", "verbatim"):
            raise ValueError(f"unknown entropy_form {self.entropy_form!r}")


@dataclass(frozen=True)
class ConfidenceConfig:
    alpha_threshold: float = 0.8

    def __post_init__(self):
        if not 0 < self.alpha_threshold <= 1:
            raise ValueError("alpha_threshold must lie in (0, 1]")


def _library_rho(library, task, theta) -> float:
    return max((rho_safe(s, task, theta) for s in library), default=0.0)


def _best_library_execution(state: EpisodeState):
    """(skill, theta, return) of the best learned skill on the current task."""
    best = None
    for skill in state.library:
        theta, value = best_theta(skill, state.task, state.beliefs[state.current], 1.0, state.profile)
        if best is None or value > best[2]:
            best = (skill, theta, value)
    return best


def _map_delta(beliefs) -> np.ndarray:
    out = np.zeros_like(beliefs)
    out[np.arange(len(beliefs)), np.argmax(beliefs, axis=1)] = 1.0
    return out


def cadl_step(state: EpisodeState, config: ConfidenceConfig = ConfidenceConfig(),
              solver=solve_greedy):
    i = state.current
    if state.beliefs[i].max() < config.alpha_threshold:
        return RequestPref(i), {}
    p = plan_known_prefs(state.horizon, _map_delta(state.horizon_beliefs), state.library, None,
                         state.profile, start=i, blocked=state.horizon_blocked, solver=solver)
    return p.actions[0], {"plan_cost": p.expected_cost}


def cba_step(state: EpisodeState, config: ConfidenceConfig = ConfidenceConfig()):
    i = state.current
    b = state.beliefs[i]
    if b.max() < config.alpha_threshold:
        return RequestPref(i), {}
    theta = map_pref(b)
    rho = _library_rho(state.library, state.task, theta)
    if rho <= config.alpha_threshold:
        if i not in state.failed_teach:
            return RequestSkill(i, theta), {}
        # teaching this task already failed; nothing left to learn from it
        return RequestHuman(i), {"fallback": "teach_failed"}
    skill = next(s for s in state.library if rho_safe(s, state.task, theta) == rho)
    return ExecuteSkill(i, skill, theta), {}


def ig_scores(state: EpisodeState, config: IgConfig = IgConfig()) -> dict:
    """Score of every admissible action kind (gain minus scaled cost)."""
    i, tasks, B, prof = state.current, state.tasks, state.beliefs, state.profile
    lib = state.library
    k = B.shape[1]
    theta_hat = map_pref(B[i])
    beta = config.beta_scale
    scores = {}

    h_i = entropy(B[i])
    if h_i > 0:
        gains = []
        for g in np.flatnonzero(B[i] > 0):
            Bg = belief_update(B, i, int(g), tasks)
            if config.entropy_form == "reduction":
                gains.append(sum(entropy(B[j]) - entropy(Bg[j]) for j in range(i, len(tasks))))
            else:
                gains.append(sum(entropy(Bg[j]) for j in range(i, len(tasks))) - h_i)
        scores["pref"] = max(gains) - beta * prof.c_pref

    # a repeat demonstration of a known variety reproduces the skill already held
    known = any(s.trained_variety == tasks[i].variety_id for s in lib)
    if i not in state.failed_teach and not known:
        best_g, best_gain = 0, -np.inf
        for g in range(k):
            new = Skill(tasks[i].variety_id, g)
            gain = 0.0
            for j in range(i, len(tasks)):
                for th in range(k):
                    old = _library_rho(lib, tasks[j], th)
                    gain += B[j, th] * (max(old, rho_safe(new, tasks[j], th)) - old)
            if gain > best_gain:
                best_g, best_gain = g, gain
        rho_after = _library_rho(lib + (Skill(tasks[i].variety_id, best_g),), tasks[i], theta_hat)
        cost = prof.c_skill + prof.c_rob + prof.c_skill_fail * (1.0 - rho_after)
        scores["skill"] = best_gain - beta * cost

    if lib:
        cost = (prof.c_rob + prof.c_skill_fail * (1.0 - _library_rho(lib, tasks[i], theta_hat))
                + prof.c_pref_fail * (1.0 - B[i, theta_hat]))
        scores["rob"] = -beta * cost

    scores["hum"] = -beta * prof.c_hum
    return scores


def ig_step(state: EpisodeState, config: IgConfig = IgConfig()):
    scores = ig_scores(state, config)
    choice = None
    for kind in ("pref", "skill", "rob", "hum"):
        if kind in scores and (choice is None or scores[kind] > scores[choice]):
            choice = kind
    i = state.current
    info = {"scores": {k: float(v) for k, v in scores.items()}}
    if choice == "pref":
        return RequestPref(i), info
    if choice == "skill":
        return RequestSkill(i, map_pref(state.beliefs[i])), info
    if choice == "rob":
        skill, theta, _ = _best_library_execution(state)
        return ExecuteSkill(i, skill, theta), info
    return RequestHuman(i), info


def coil_noadapt_step(state: EpisodeState, solver=solve_greedy):
    return CoilPlanner(adaptive=False, solver=solver).next_action(state)


class CAdl:
    name = "C-ADL"
    adapts = False

    def __init__(self, config: ConfidenceConfig = ConfidenceConfig(), solver=solve_greedy):
        self.config, self.solver = config, solver

    def next_action(self, state):
        return cadl_step(state, self.config, self.solver)


class Cba:
    name = "CBA"
    adapts = False

    def __init__(self, config: ConfidenceConfig = ConfidenceConfig()):
        self.config = config

    def next_action(self, state):
        return cba_step(state, self.config)


class InfoGain:
    name = "IG"
    adapts = False

    def __init__(self, config: IgConfig = IgConfig()):
        self.config = config

    def next_action(self, state):
        return ig_step(state, self.config)


def make_planner(name: str, *, alpha: float = 0.8, beta_scale: float = 0.01,
                 ig_entropy_form: str = "reduction", solver=solve_greedy):
    key = name.upper().replace("_", "-")
    if key == "COIL":
        return CoilPlanner(adaptive=True, solver=solver)
    if key in ("COIL-NOADAPT", "NOADAPT"):
        return CoilPlanner(adaptive=False, solver=solver)
    if key in ("C-ADL", "CADL"):
        return CAdl(ConfidenceConfig(alpha), solver)
    if key == "CBA":
        return Cba(ConfidenceConfig(alpha))
    if key == "IG":
        return InfoGain(IgConfig(beta_scale, ig_entropy_form))
    raise KeyError(name)


ALGORITHMS = ("COIL", "C-ADL", "IG", "CBA", "COIL-NoAdapt")
