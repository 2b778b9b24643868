"""Tasks, preferences, beliefs, costs, skills and the skill return model."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Hashable, Sequence

import numpy as np

from .errors import DegenerateBelief

BELIEF_TOL = 1e-9


@dataclass(frozen=True)
class TaskFeatures:
    """One task (object) in a sequence.

    ``variety_keys`` names the features that define the skill-similarity class;
    ``pref_keys`` the ones that define which tasks share a preference.
    """

    object_type: str
    color: str = ""
    category: str | None = None
    position: tuple[int, int] | None = None
    variety_keys: tuple[str, ...] = ("object_type", "color")
    pref_keys: tuple[str, ...] | None = None

    @property
    def variety_id(self) -> str:
        return "/".join(str(getattr(self, k)) for k in self.variety_keys)

    @property
    def pref_group(self) -> str:
        keys = self.variety_keys if self.pref_keys is None else self.pref_keys
        return "/".join(str(getattr(self, k)) for k in keys)


@dataclass(frozen=True)
class PreferenceSpace:
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if not self.params:
            raise ValueError("preference space must be non-empty")
        if len(set(self.params)) != len(self.params):
            raise ValueError("preference parameters must be distinct")

    def __len__(self):
        return len(self.params)

    def index(self, theta: Hashable) -> int:
        return self.params.index(theta)

    def uniform(self) -> np.ndarray:
        return np.full(len(self.params), 1.0 / len(self.params))


@dataclass(frozen=True)
class CostProfile:
    c_rob: float = 10.0
    c_hum: float = 80.0
    c_pref: float = 20.0
    c_skill: float = 100.0
    c_skill_fail: float = 100.0
    c_pref_fail: float = 100.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative")


PROFILES = {
    "low": CostProfile(c_skill=50.0),
    "med": CostProfile(c_skill=100.0),
    "high": CostProfile(c_skill=200.0),
}


@dataclass(frozen=True)
class Skill:
    """A learned (or to-be-learned) skill; ``trained_pref`` is an index into the preference space."""

    trained_variety: str
    trained_pref: int


@dataclass(frozen=True)
class TeachModel:
    """Beta posterior over teaching success for one variety.

    ``beta`` may be 0 for the optimistic prior (mean 1 until a failure is seen).
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0 or self.beta < 0:
            raise ValueError("need alpha > 0 and beta >= 0")


@dataclass
class TeachModels:
    """Per-variety teach models sharing one prior."""

    prior: TeachModel = field(default_factory=TeachModel)
    by_variety: dict = field(default_factory=dict)

    def get(self, variety: str) -> TeachModel:
        return self.by_variety.get(variety, self.prior)

    def mean(self, variety: str) -> float:
        return teach_mean(self.get(variety))

    def updated(self, variety: str, success: bool) -> "TeachModels":
        table = dict(self.by_variety)
        table[variety] = teach_update(self.get(variety), success)
        return TeachModels(self.prior, table)


def validate_belief(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > BELIEF_TOL:
        raise ValueError(f"not a normalized belief: {p}")
    return p


def entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def rho_safe(skill: Skill, task: TaskFeatures, theta: int) -> float:
    return 1.0 if task.variety_id == skill.trained_variety and theta == skill.trained_pref else 0.0


def teach_mean(model: TeachModel) -> float:
    return model.alpha / (model.alpha + model.beta)


def teach_update(model: TeachModel, success: bool) -> TeachModel:
    if success:
        return replace(model, alpha=model.alpha + 1)
    return replace(model, beta=model.beta + 1)


def expected_return(skill: Skill, task: TaskFeatures, theta: int, belief, lambda_teach: float,
                    profile: CostProfile) -> float:
    """Predicted (nonpositive) return of running ``skill`` on ``task`` with preference ``theta``:
    the expected safety penalty, discounted by teaching success, plus the expected
    preference-violation penalty under ``belief``."""
    rho = rho_safe(skill, task, theta)
    return -(profile.c_skill_fail * (1.0 - lambda_teach * rho)
             + profile.c_pref_fail * (1.0 - float(belief[theta])))


def best_theta(skill: Skill, task: TaskFeatures, belief, lambda_teach: float,
               profile: CostProfile) -> tuple[int, float]:
    # strict '>' keeps the first preference on ties
    best, value = 0, expected_return(skill, task, 0, belief, lambda_teach, profile)
    for theta in range(1, len(belief)):
        r = expected_return(skill, task, theta, belief, lambda_teach, profile)
        if r > value:
            best, value = theta, r
    return best, value


def map_pref(belief) -> int:
    return int(np.argmax(np.asarray(belief)))


def belief_update(beliefs: np.ndarray, task_index: int, response: int,
                  tasks: Sequence[TaskFeatures]) -> np.ndarray:
    """Posterior beliefs after the human names ``response`` for task ``task_index``.

    The likelihood is a delta on the named preference. It is applied to the queried
    task and to every later task in the same preference group; earlier tasks keep
    their beliefs. Returns a new array.
    """
    beliefs = np.array(beliefs, dtype=float)
    group = tasks[task_index].pref_group
    likelihood = np.zeros(beliefs.shape[1])
    likelihood[response] = 1.0
    for j in range(task_index, len(tasks)):
        if j != task_index and tasks[j].pref_group != group:
            continue
        post = beliefs[j] * likelihood
        mass = post.sum()
        if mass <= 0:
            raise DegenerateBelief(f"task {j}: response {response} has zero prior mass")
        beliefs[j] = post / mass
    return beliefs
