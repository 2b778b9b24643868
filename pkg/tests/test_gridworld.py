import numpy as np
import pytest

from coil.errors import BadConfig
from coil.gridworld import (
    EpisodeMetrics,
    Scenario,
    ScenarioConfig,
    SimulatedHuman,
    adjudicate_execution,
    conveyor_config,
    generate_scenario,
    oracle_answer_pref,
    oracle_teach,
    run_episode,
    run_suite,
    summary_table,
)
from coil.model import PROFILES, Skill

MED = PROFILES["med"]


def test_scenario_shape_and_determinism():
    a, b = generate_scenario(42), generate_scenario(42)
    assert a == b
    assert len(a.varieties) == 9 and len({t.variety_id for t in a.varieties}) == 9
    assert len(a.sequence) == 15 and len(a.goals) == 3
    assert a.grid_size == (17, 17)
    ids = {t.variety_id for t in a.varieties}
    assert all(t.variety_id in ids for t in a.sequence)
    assert all(t.pref_group in a.hidden_prefs for t in a.sequence)
    assert generate_scenario(43) != a


@pytest.mark.parametrize("frac,count", [(0.0, 0), (0.1, 1), (0.5, 5), (0.9, 8), (1.0, 9)])
def test_challenging_count_rounds_half_up(frac, count):
    sc = generate_scenario(0, ScenarioConfig(challenging_frac=frac))
    assert len(sc.challenging) == count


@pytest.mark.parametrize("kw,field", [({"challenging_frac": 1.5}, "challenging_frac"),
                                      ({"challenging_frac": -0.1}, "challenging_frac"),
                                      ({"n_varieties": 0}, "n_varieties"),
                                      ({"n_goals": 0}, "n_goals"),
                                      ({"variety_weights": (1, 2)}, "variety_weights"),
                                      ({"domain": "kitchen"}, "domain")])
def test_bad_config(kw, field):
    with pytest.raises(BadConfig) as exc:
        generate_scenario(0, ScenarioConfig(**kw))
    assert exc.value.field == field


def test_variety_weights_skew_draws():
    w = (50.0,) + (1.0,) * 8
    sc = generate_scenario(0, ScenarioConfig(seq_len=200, variety_weights=w))
    top = sc.varieties[0].variety_id
    assert sum(t.variety_id == top for t in sc.sequence) > 100


def test_oracle_lookups():
    sc = generate_scenario(5, ScenarioConfig(challenging_frac=0.5))
    seen = {}
    for t in sc.sequence:
        assert oracle_answer_pref(sc, t) == sc.hidden_prefs[t.variety_id]
        assert oracle_teach(sc, t) == (t.variety_id not in sc.challenging)
        seen.setdefault(t.variety_id, oracle_teach(sc, t))
        assert oracle_teach(sc, t) == seen[t.variety_id]  # same answer on every retry


def test_empty_challenging_set_teaches_everything():
    sc = generate_scenario(1)
    assert all(oracle_teach(sc, t) for t in sc.sequence)


def test_adjudication():
    sc = generate_scenario(2)
    task = sc.sequence[0]
    z = sc.hidden_prefs[task.variety_id]
    other = next(t for t in sc.varieties if t.variety_id != task.variety_id)
    wrong = (z + 1) % 3
    assert adjudicate_execution(sc, task, Skill(task.variety_id, z), z, MED) == (0, 0)
    assert sum(adjudicate_execution(sc, task, Skill(task.variety_id, z), wrong, MED)) == 100
    assert sum(adjudicate_execution(sc, task, Skill(other.variety_id, z), wrong, MED)) == 200


def test_taught_skill_carries_true_preference():
    sc = generate_scenario(3)
    human = SimulatedHuman(sc, MED)
    t = sc.sequence[0]
    assert human.taught_skill(0) == Skill(t.variety_id, sc.hidden_prefs[t.variety_id])


def test_scenario_json_round_trip():
    sc = generate_scenario(9, conveyor_config())
    assert Scenario.loads(sc.dumps()) == sc
    sc = generate_scenario(9, ScenarioConfig(challenging_frac=0.5))
    assert Scenario.loads(sc.dumps()) == sc


def test_conveyor_config():
    sc = generate_scenario(0, conveyor_config())
    assert len(sc.sequence) == 20 and len(sc.varieties) == 12
    assert set(sc.hidden_prefs) == {"kitchen", "office", "toys"}
    assert sc.sequence[0].variety_id == sc.sequence[0].object_type


def test_zero_length_sequence():
    sc = generate_scenario(0, ScenarioConfig(seq_len=0))
    m = EpisodeMetrics.from_log(run_episode(sc, "COIL", MED))
    assert (m.n_teach, m.n_human, m.n_pref, m.n_robot, m.realized_cost) == (0, 0, 0, 0, 0)


def test_metrics_identity():
    for seed in range(4):
        sc = generate_scenario(seed, ScenarioConfig(challenging_frac=0.5))
        for algo in ("COIL", "IG"):
            m = EpisodeMetrics.from_log(run_episode(sc, algo, MED))
            assert m.realized_cost == pytest.approx(m.decomposition(MED))


def test_suite_pairs_seeds_and_summarises():
    res = run_suite(("low", "med"), ("COIL", "CBA"), n_seeds=3, root_seed=10)
    assert len(res.rows) == 12
    assert sorted(res.scenarios) == [10, 11, 12]
    summary = res.summary()
    assert set(summary) == {(p, a) for p in ("low", "med") for a in ("COIL", "CBA")}
    costs = [r["realized_cost"] for r in res.rows if r["profile"] == "med" and r["algorithm"] == "COIL"]
    assert summary[("med", "COIL")]["realized_cost"][0] == pytest.approx(np.mean(costs), abs=1e-9)
    assert summary[("med", "COIL")]["realized_cost"][1] == pytest.approx(np.std(costs, ddof=1), abs=1e-9)
    assert "COIL" in summary_table(res)


def test_suite_is_worker_count_independent():
    a = run_suite(("high",), ("COIL", "IG"), n_seeds=4, workers=1)
    b = run_suite(("high",), ("COIL", "IG"), n_seeds=4, workers=2)
    key = lambda r: (r["seed"], r["algorithm"])
    strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ms"} for r in sorted(rows, key=key)]
    assert strip(a.rows) == strip(b.rows)


def test_suite_rejects_unknown_names():
    with pytest.raises(BadConfig):
        run_suite(("extreme",), ("COIL",), n_seeds=1)
    with pytest.raises(BadConfig):
        run_suite(("low",), ("GREEDY",), n_seeds=1)


def test_low_profile_teaches_every_present_variety():
    res = run_suite(("low",), ("COIL", "C-ADL", "IG", "CBA"), n_seeds=5)
    for r in res.rows:
        present = {t.variety_id for t in res.scenarios[r["seed"]].sequence}
        assert r["n_teach"] == len(present) and r["n_human"] == 0
