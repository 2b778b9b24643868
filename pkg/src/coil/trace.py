"""Line-delimited JSON episode traces and their offline verification.

A trace holds one JSON object per line:

``{"type": "header", "schema": 1, "algorithm", "profile": {c_*}, "seed", "n_tasks"}``
    exactly once, first.
``{"type": "step", "step", "task_index", "action": {"kind", ...}, "outcome",
"charged_cost", "penalty", "lambda_teach_snapshot", "belief_entropy", "info"}``
    one per interactive action, in execution order.
``{"type": "summary", "realized_cost", "n_teach", "n_human", "n_pref", "n_robot", "penalties"}``
    exactly once, last.
"""
from __future__ import annotations

import json
from pathlib import Path

from .errors import InvariantViolation, ParseError
from .model import CostProfile
from .planner import EpisodeLog
from .ufl import TIE_TOL

SCHEMA = 1
COST_TOL = 1e-9
KIND_COST = {"rob": "c_rob", "hum": "c_hum", "pref": "c_pref", "skill": "c_skill"}
COUNT_KEY = {"skill": "n_teach", "hum": "n_human", "pref": "n_pref", "rob": "n_robot"}


def episode_records(log: EpisodeLog, seed=None) -> list[dict]:
    header = {"type": "header", "schema": SCHEMA, "algorithm": log.algorithm,
              "profile": vars(log.profile), "seed": seed, "n_tasks": log.n_tasks}
    summary = {"type": "summary", "realized_cost": log.realized_cost, "n_teach": log.n_teach,
               "n_human": log.n_human, "n_pref": log.n_pref, "n_robot": log.n_robot,
               "penalties": log.penalties}
    return [header] + [s.to_dict() for s in log.steps] + [summary]


def write_trace(path, log: EpisodeLog, seed=None) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in episode_records(log, seed):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def read_trace(path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(rec, dict) or "type" not in rec:
                raise ParseError(f"{path}:{lineno}: record without a type")
            records.append(rec)
    return records


def _num(rec, key, where):
    try:
        return float(rec[key])
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"{where}: missing or non-numeric {key!r}") from None


def verify_records(records: list[dict]) -> dict:
    """Check per-step charges, the totals identity, and preference-request rationality
    for COIL traces. Returns the recomputed totals; an empty record list is vacuously valid."""
    if not records:
        return {}
    header, *rest = records
    if header["type"] != "header":
        raise ParseError("first record must be the header")
    if not rest or rest[-1]["type"] != "summary":
        raise ParseError("last record must be the summary")
    steps, summary = rest[:-1], rest[-1]
    try:
        profile = CostProfile(**header["profile"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"header profile: {exc}") from None
    coil = str(header.get("algorithm", "")).upper().startswith("COIL")

    counts = dict.fromkeys(COUNT_KEY.values(), 0)
    total = penalties = 0.0
    for pos, rec in enumerate(steps):
        if rec["type"] != "step":
            raise ParseError(f"record {pos + 1}: expected a step, got {rec['type']!r}")
        step = int(rec.get("step", pos))
        try:
            kind = rec["action"]["kind"]
        except (KeyError, TypeError):
            raise ParseError(f"step {step}: missing action kind") from None
        if kind not in KIND_COST:
            raise ParseError(f"step {step}: unknown action kind {kind!r}")
        charged = _num(rec, "charged_cost", f"step {step}")
        penalty = _num(rec, "penalty", f"step {step}")
        if penalty < 0 or (penalty and kind != "rob"):
            raise InvariantViolation(step, f"penalty {penalty} on a {kind} action")
        expected = getattr(profile, KIND_COST[kind]) + penalty
        if abs(charged - expected) > COST_TOL:
            raise InvariantViolation(step, f"charged {charged} but {kind} costs {expected}")
        if coil and kind == "pref":
            info = rec.get("info") or {}
            if "expected_pref_cost" not in info or "known_prefs_cost" not in info:
                raise InvariantViolation(step, "preference request without its lookahead values")
            lhs = profile.c_pref + float(info["expected_pref_cost"])
            if lhs > float(info["known_prefs_cost"]) + TIE_TOL:
                raise InvariantViolation(step, f"preference request not justified: {lhs} > "
                                               f"{info['known_prefs_cost']}")
        counts[COUNT_KEY[kind]] += 1
        total += charged
        penalties += penalty

    last = len(steps)
    for key, n in counts.items():
        if int(summary.get(key, -1)) != n:
            raise InvariantViolation(last, f"summary {key}={summary.get(key)} but trace has {n}")
    realized = _num(summary, "realized_cost", "summary")
    decomposed = (counts["n_teach"] * profile.c_skill + counts["n_human"] * profile.c_hum
                  + counts["n_pref"] * profile.c_pref + counts["n_robot"] * profile.c_rob
                  + penalties)
    if abs(realized - total) > COST_TOL * max(1.0, abs(total)):
        raise InvariantViolation(last, f"realized_cost {realized} != sum of charges {total}")
    if abs(realized - decomposed) > COST_TOL * max(1.0, abs(total)):
        raise InvariantViolation(last, f"realized_cost {realized} != decomposition {decomposed}")
    return {**counts, "realized_cost": total, "penalties": penalties}


def verify_trace(path) -> dict:
    return verify_records(read_trace(path))
