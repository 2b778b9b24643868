"""Reproduce the gridworld comparison table on 30 paired random task sequences,
then repeat it with half of the object varieties impossible to teach.

Run: python3 demos/gridworld_table.py   (about half a minute)
"""
from coil.gridworld import ScenarioConfig, run_suite, summary_table

algorithms = ("COIL", "C-ADL", "IG", "CBA")
print(summary_table(run_suite(("low", "med", "high"), algorithms, n_seeds=30)))

print("\nhalf the varieties cannot be taught:")
hard = run_suite(("low", "med", "high"), ("COIL", "COIL-NoAdapt"), n_seeds=30,
                 config=ScenarioConfig(challenging_frac=0.5))
print(summary_table(hard))
