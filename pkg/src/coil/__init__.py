"""Cost-optimal interactive learning: plan when a robot should ask for preferences,
ask to be taught, hand a task to the human, or act on its own."""
from .errors import (
    BadConfig,
    BoundExceeded,
    CoilError,
    DegenerateBelief,
    EmptyHorizon,
    Infeasible,
    InconsistentSolution,
    InvariantViolation,
    NonTermination,
    ParseError,
)
from .model import PROFILES, CostProfile, PreferenceSpace, Skill, TaskFeatures, TeachModel, TeachModels
from .planner import (
    CoilPlanner,
    ExecuteSkill,
    RequestHuman,
    RequestPref,
    RequestSkill,
    build_ufl,
    plan,
    plan_known_prefs,
    run_interaction,
)
from .ufl import UflInstance, UflSolution, solution_cost, solve_exact, solve_greedy

__version__ = "0.1.0"
