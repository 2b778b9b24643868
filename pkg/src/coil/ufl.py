"""Uncapacitated facility location: instances, a greedy ratio solver and an exact oracle.

Infeasible (facility, demand) edges are carried as a boolean mask next to the
cost matrix; the cost stored under a masked-out edge is never read.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BoundExceeded, InconsistentSolution, Infeasible, ParseError

#: Returned by :meth:`UflInstance.cost` for edges that cannot be used.
INFEASIBLE = None

TIE_TOL = 1e-9
ENUMERATION_BOUND = 22
NODE_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class UflInstance:
    """Demands ``0..n_demands-1``, facilities ``0..n_facilities-1``.

    ``service_cost[i, j]`` is only meaningful where ``feasible[i, j]`` is true.
    """

    open_cost: np.ndarray
    service_cost: np.ndarray
    feasible: np.ndarray

    def __post_init__(self):
        f = np.array(self.open_cost, dtype=float).reshape(-1)
        feas = np.array(self.feasible, dtype=bool)
        c = np.where(feas, np.array(self.service_cost, dtype=float), 0.0)
        if feas.ndim != 2 or c.shape != feas.shape or feas.shape[0] != f.shape[0]:
            raise ValueError("service_cost/feasible must be (n_facilities, n_demands)")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("open costs must be finite and nonnegative")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("feasible service costs must be finite and nonnegative")
        for name, arr in (("open_cost", f), ("service_cost", c), ("feasible", feas)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n_demands: int, open_costs: Sequence[float],
                   edges: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]]):
        """Build from ``{(facility, demand): cost}`` or ``(facility, demand, cost)`` triples."""
        items = edges.items() if isinstance(edges, Mapping) else (((i, j), c) for i, j, c in edges)
        n_fac = len(open_costs)
        cost = np.zeros((n_fac, n_demands))
        feas = np.zeros((n_fac, n_demands), dtype=bool)
        for (i, j), c in items:
            if c is INFEASIBLE:
                continue
            cost[i, j] = c
            feas[i, j] = True
        return cls(np.asarray(open_costs, dtype=float), cost, feas)

    @property
    def n_demands(self) -> int:
        return self.feasible.shape[1]

    @property
    def n_facilities(self) -> int:
        return self.feasible.shape[0]

    def cost(self, facility: int, demand: int):
        if not self.feasible[facility, demand]:
            return INFEASIBLE
        return float(self.service_cost[facility, demand])

    def check_feasible(self):
        uncovered = np.flatnonzero(~self.feasible.any(axis=0))
        if uncovered.size:
            raise Infeasible(f"demands {uncovered.tolist()} have no feasible facility")


@dataclass(frozen=True)
class UflSolution:
    open_facilities: frozenset
    assignment: tuple
    total_cost: float


@dataclass
class GreedyStep:
    facility: int
    demands: tuple
    ratio: float
    paid_open_cost: float


def _cheapest_assignment(instance: UflInstance, opened: np.ndarray) -> UflSolution:
    # argmin picks the lowest facility id among equal costs
    feas = instance.feasible & opened[:, None]
    if not feas.any(axis=0).all():
        raise Infeasible("open set does not cover every demand")
    big = instance.service_cost.max(initial=0.0) + 1.0
    masked = np.where(feas, instance.service_cost, big)
    assign = masked.argmin(axis=0)
    used = np.zeros(instance.n_facilities, dtype=bool)
    used[assign] = True
    total = float(instance.open_cost[used].sum()
                  + instance.service_cost[assign, np.arange(instance.n_demands)].sum())
    return UflSolution(frozenset(np.flatnonzero(used).tolist()),
                       tuple(int(a) for a in assign), total)


def solve_greedy(instance: UflInstance, trace: list | None = None) -> UflSolution:
    """Greedy minimum cost-per-demand heuristic.

    Each round picks the facility and the set of its cheapest unserved demands
    minimising ``(remaining open cost + service costs) / |set|``; the facility's
    open cost is then zeroed. Ties (within ``TIE_TOL``) go to the lowest facility
    id, then the shortest prefix. A final pass moves every demand to its cheapest
    open facility and drops facilities left without demands.

    If ``trace`` is a list, one :class:`GreedyStep` per round is appended.
    """
    instance.check_feasible()
    n_fac, n = instance.feasible.shape
    if n == 0:
        return UflSolution(frozenset(), (), 0.0)
    f_eff = instance.open_cost.copy()
    unserved = np.ones(n, dtype=bool)
    opened = np.zeros(n_fac, dtype=bool)
    version = np.zeros(n_fac, dtype=np.int64)

    # per-facility demand lists sorted by cost (stable: demand id breaks ties)
    lists, costs = [], []
    for i in range(n_fac):
        js = np.flatnonzero(instance.feasible[i])
        cs = instance.service_cost[i, js]
        order = np.argsort(cs, kind="stable")
        lists.append(js[order])
        costs.append(cs[order])

    def prefix_ratios(i):
        live = unserved[lists[i]]
        if not live.any():
            return None, None
        c = costs[i][live]
        return lists[i][live], (f_eff[i] + np.cumsum(c)) / np.arange(1, c.size + 1)

    # Keys are lower bounds: dropping demands never lowers a facility's best ratio.
    heap = []
    for i in range(n_fac):
        _, r = prefix_ratios(i)
        if r is not None:
            heap.append((float(r.min()), i, 0))
    heapq.heapify(heap)

    def fresh_key(i):
        _, r = prefix_ratios(i)
        return None if r is None else (float(r.min()), i, int(version[i]))

    while unserved.any():
        while True:
            entry = heapq.heappop(heap)
            if entry[2] == version[entry[1]]:
                break
            entry = fresh_key(entry[1])
            if entry is not None:
                heapq.heappush(heap, entry)
        best = entry[0]
        candidates, keep = [entry[1]], [entry]
        while heap and heap[0][0] <= best + TIE_TOL:
            entry = heapq.heappop(heap)
            if entry[2] != version[entry[1]]:
                entry = fresh_key(entry[1])
                if entry is None:
                    continue
            keep.append(entry)
            if entry[0] <= best + TIE_TOL:
                candidates.append(entry[1])
        for entry in keep:
            heapq.heappush(heap, entry)
        i = min(candidates)
        demands, r = prefix_ratios(i)
        k = int(np.flatnonzero(r <= best + TIE_TOL)[0]) + 1
        chosen = demands[:k]
        if trace is not None:
            trace.append(GreedyStep(i, tuple(int(j) for j in chosen), float(r[k - 1]),
                                    float(f_eff[i])))
        opened[i] = True
        f_eff[i] = 0.0
        unserved[chosen] = False
        touched = instance.feasible[:, chosen].any(axis=1)
        touched[i] = True
        version[touched] += 1
        # the opened facility's ratio can drop, so it needs a fresh key
        _, r = prefix_ratios(i)
        if r is not None:
            heapq.heappush(heap, (float(r.min()), i, int(version[i])))
    return _cheapest_assignment(instance, opened)


def _enumerate(instance: UflInstance) -> UflSolution:
    n_fac, n = instance.feasible.shape
    big = instance.service_cost.max(initial=0.0) + 1.0
    masked = np.where(instance.feasible, instance.service_cost, big)
    feas_int = instance.feasible.astype(np.int64)
    bit_idx = np.arange(n_fac)
    best_cost, best_mask = math.inf, None
    chunk = 1 << 14
    for start in range(1, 1 << n_fac, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n_fac), dtype=np.int64)
        bits = ((masks[:, None] >> bit_idx) & 1).astype(bool)
        covered = (bits.astype(np.int64) @ feas_int > 0).all(axis=1)
        if not covered.any():
            continue
        bits, masks = bits[covered], masks[covered]
        serve = np.full((masks.size, n), big)
        for i in range(n_fac):
            serve = np.where(bits[:, i, None], np.minimum(serve, masked[i]), serve)
        total = bits @ instance.open_cost + serve.sum(axis=1)
        k = int(total.argmin())
        if total[k] < best_cost - TIE_TOL:
            best_cost, best_mask = float(total[k]), int(masks[k])
    opened = ((best_mask >> bit_idx) & 1).astype(bool)
    return _cheapest_assignment(instance, opened)


def _branch_and_bound(instance: UflInstance, node_budget: int) -> UflSolution:
    n_fac, n = instance.feasible.shape
    f, feas, cost = instance.open_cost, instance.feasible, instance.service_cost
    big = cost.max(initial=0.0) + 1.0
    masked = np.where(feas, cost, big)

    def bound(open_set, closed_set):
        allowed = ~closed_set
        if not feas[allowed].any(axis=0).all():
            return None
        return float(f[open_set].sum() + masked[allowed].min(axis=0).sum())

    incumbent = solve_greedy(instance)
    best_cost = incumbent.total_cost
    root_open = np.zeros(n_fac, dtype=bool)
    root_closed = np.zeros(n_fac, dtype=bool)
    heap = [(bound(root_open, root_closed), 0, 0, root_open, root_closed)]
    counter, nodes = 1, 0
    while heap:
        lb, _, depth, op, cl = heapq.heappop(heap)
        if lb >= best_cost - TIE_TOL:
            break
        nodes += 1
        if nodes > node_budget:
            raise BoundExceeded(f"exceeded {node_budget} nodes")
        if depth == n_fac:
            # leaf: every facility decided, the bound is the exact cost
            incumbent = _cheapest_assignment(instance, op)
            best_cost = incumbent.total_cost
            continue
        for take in (True, False):
            o, c = op.copy(), cl.copy()
            (o if take else c)[depth] = True
            b = bound(o, c)
            if b is not None and b < best_cost - TIE_TOL:
                heapq.heappush(heap, (b, counter, depth + 1, o, c))
                counter += 1
    return incumbent


def solve_exact(instance: UflInstance, enumeration_bound: int = ENUMERATION_BOUND,
                node_budget: int = NODE_BUDGET) -> UflSolution:
    """Minimum-cost solution by subset enumeration, or best-first branch and bound
    (bounded by the sum of per-demand cheapest allowed edges) on larger instances."""
    instance.check_feasible()
    if instance.n_demands == 0:
        return UflSolution(frozenset(), (), 0.0)
    if instance.n_facilities <= enumeration_bound:
        return _enumerate(instance)
    return _branch_and_bound(instance, node_budget)


def solution_cost(solution: UflSolution, instance: UflInstance) -> float:
    """Open costs of the solution plus each demand's cheapest open edge."""
    opened = np.zeros(instance.n_facilities, dtype=bool)
    for i in solution.open_facilities:
        if not 0 <= i < instance.n_facilities:
            raise InconsistentSolution(f"unknown facility {i}")
        opened[i] = True
    if len(solution.assignment) != instance.n_demands:
        raise InconsistentSolution("assignment length does not match demand count")
    for j, i in enumerate(solution.assignment):
        if not (0 <= i < instance.n_facilities and opened[i]):
            raise InconsistentSolution(f"demand {j} assigned to closed facility {i}")
        if not instance.feasible[i, j]:
            raise InconsistentSolution(f"demand {j} assigned over infeasible edge from {i}")
    if instance.n_demands == 0:
        return float(instance.open_cost[opened].sum())
    big = instance.service_cost.max(initial=0.0) + 1.0
    serve = np.where(instance.feasible & opened[:, None], instance.service_cost, big).min(axis=0)
    return float(instance.open_cost[opened].sum() + serve.sum())


def random_instance(rng: np.random.Generator, n_demands: int, n_facilities: int,
                    open_range=(1.0, 100.0), service_range=(1.0, 50.0),
                    infeasible_frac=0.2, metric=False) -> UflInstance:
    """Random instance; every demand keeps at least one feasible edge.

    With ``metric`` true, facilities and demands are points in the unit square and
    service costs are scaled Euclidean distances (all edges feasible).
    """
    f = rng.uniform(*open_range, size=n_facilities)
    if metric:
        fac = rng.uniform(size=(n_facilities, 2))
        dem = rng.uniform(size=(n_demands, 2))
        dist = np.linalg.norm(fac[:, None, :] - dem[None, :, :], axis=2)
        lo, hi = service_range
        return UflInstance(f, lo + (hi - lo) * dist / math.sqrt(2),
                           np.ones((n_facilities, n_demands), dtype=bool))
    c = rng.uniform(*service_range, size=(n_facilities, n_demands))
    feas = rng.uniform(size=(n_facilities, n_demands)) >= infeasible_frac
    for j in np.flatnonzero(~feas.any(axis=0)):
        feas[rng.integers(n_facilities), j] = True
    return UflInstance(f, c, feas)


def dumps(instance: UflInstance) -> str:
    """Line format: ``n_demands n_facilities``, ``id open_cost`` per facility, then
    ``facility demand cost`` per feasible edge."""
    lines = [f"{instance.n_demands} {instance.n_facilities}"]
    lines += [f"{i} {float(c)!r}" for i, c in enumerate(instance.open_cost)]
    for i, j in zip(*np.nonzero(instance.feasible)):
        lines.append(f"{i} {j} {float(instance.service_cost[i, j])!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> UflInstance:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        if not rows or len(rows[0]) != 2:
            raise ParseError("missing 'n_demands n_facilities' header")
        n_dem, n_fac = int(rows[0][0]), int(rows[0][1])
        if len(rows) < 1 + n_fac:
            raise ParseError("truncated facility block")
        open_costs = [0.0] * n_fac
        for row in rows[1:1 + n_fac]:
            open_costs[int(row[0])] = float(row[1])
        edges = [(int(a), int(b), float(c)) for a, b, c in rows[1 + n_fac:]]
        return UflInstance.from_edges(n_dem, open_costs, edges)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad instance text: {exc}") from None
