"""Walk through one short episode by hand: five identical mugs, three bins.

The robot starts knowing nothing about where mugs go. Asking costs 20, a
demonstration 100, each robot execution 10, handing a mug to the human 80.

Run: python3 demos/five_mugs.py
"""
import numpy as np

from coil.gridworld import Scenario, SimulatedHuman
from coil.model import PROFILES, PreferenceSpace, TaskFeatures, TeachModel, TeachModels
from coil.planner import CoilPlanner, plan, run_interaction

mug = TaskFeatures("mug", "red")
profile = PROFILES["med"]
beliefs = np.full((5, 3), 1 / 3)

p = plan([mug] * 5, beliefs, (), TeachModels(TeachModel(1, 0)), profile)
print(f"plan cost without asking: {p.known_prefs_cost:.2f}")
print(f"expected cost after asking: {profile.c_pref:.0f} + {p.expected_pref_cost:.2f}")
print(f"first action: {p.first_action}")

scenario = Scenario(0, (mug,), (mug,) * 5, PreferenceSpace(("bin0", "bin1", "bin2")),
                    {mug.variety_id: 2}, frozenset())
log = run_interaction(scenario, CoilPlanner(), SimulatedHuman(scenario, profile), profile,
                      teach_prior=TeachModel(1, 0))
print("\nepisode:")
for s in log.steps:
    print(f"  task {s.task_index}: {s.action['kind']:<5} -> {s.outcome:<8} charged {s.charged_cost:g}")
print(f"realized cost {log.realized_cost:g}")

# the same mugs, but mugs turn out to be unteachable
hard = Scenario(0, (mug,), (mug,) * 5, scenario.goals, scenario.hidden_prefs,
                frozenset({mug.variety_id}))
log = run_interaction(hard, CoilPlanner(), SimulatedHuman(hard, profile), profile,
                      teach_prior=TeachModel(1, 0))
print("\nwhen teaching fails:", " ".join(s.action["kind"] for s in log.steps),
      f"(cost {log.realized_cost:g})")
