"""Greedy construction, local search, shaking and the top-level VNS loop.

The loop follows the classic scheme: build a greedy covering solution, make
it feasible (capacity/battery repairs plus AMR merging), then iterate
local search -> feasibility pipeline -> shake, keeping the incumbent only
when the penalized cost of the shaken solution beats the best seen so far.
The returned best solution always carries zero penalty; when no zero-penalty
solution is ever reached the least-penalized one is returned and flagged by
its evaluation.

Runs are fully deterministic for a fixed (instance, iterations, seed).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .model import DEPOT, Instance, Solution, normalize_solution
from .evaluation import SolutionEvaluation, evaluate_solution, solution_cost, _caches
from .operators import (amr_decrease, charging_insert_repair,
                        depot_insert_repair, relocation_star, shake_2opt_l,
                        shake_cost, swap_star, two_opt_star)

_NEIGHBORHOODS = (swap_star, two_opt_star, relocation_star)


@dataclass
class SearchState:
    incumbent: Solution
    best: Solution | None
    best_objective: float
    neighborhood_index: int
    iteration: int
    max_iterations: int
    rng: random.Random
    history: list[float] = field(default_factory=list)


def greedy_initial(inst: Instance, rng: random.Random | None = None) -> Solution:
    """Nearest-feasible-insertion construction.

    Grows one trip at a time: repeatedly take the unserved request closest to
    the trip's last stop that still fits capacity and keeps every chance test
    green at its cheapest insertion slot, dropping in a charging stop when
    the battery profile would dip under alpha.  A full trip opens a new one;
    a request nothing can host feasibly is force-placed on a fresh trip (the
    feasibility pipeline deals with it afterwards).  Each trip starts on its
    own provisional AMR; merging is the AMR-decrease operator's job.

    With an rng the two nearest candidates trade places on a coin flip, so
    different seeds start the search from different constructions; without
    one the build is the deterministic nearest-first variant.
    """
    unserved = set(range(1, inst.n_requests + 1))
    trips: list[tuple[int, ...]] = []
    body: list[int] = []
    trip_cache = _caches(inst)["trip"]

    def trip_ok(nodes):
        from .evaluation import _trip_fast
        full = (DEPOT, *nodes, DEPOT)
        mean, bat, dist, twv, cap_bad, bat_bad, viol = _trip_fast(
            inst, full, inst.shift_start, inst.amr.battery_init, trip_cache)
        return twv == 0 and not cap_bad, bat_bad

    while unserved:
        last = next((n for n in reversed(body) if not inst.is_charging(n)), DEPOT)
        load = sum(inst.demand[n] for n in body)
        order = sorted(unserved, key=lambda r: (inst.distance[last][r], r))
        if rng is not None and len(order) >= 2 and rng.random() < 0.5:
            order[0], order[1] = order[1], order[0]
        placed = False
        for r in order:
            if load + inst.demand[r] > inst.amr.capacity + 1e-9:
                continue
            best = None
            for pos in range(len(body) + 1):
                trial = body[:pos] + [r] + body[pos:]
                ok, bat_bad = trip_ok(trial)
                if ok and bat_bad:
                    trial = _patch_battery(inst, trial)
                    if trial is None:
                        continue
                    ok, bat_bad = trip_ok(trial)
                if ok and not bat_bad:
                    added = _insertion_cost(inst, body, pos, r)
                    if best is None or added < best[0]:
                        best = (added, trial)
            if best is not None:
                body = best[1]
                unserved.discard(r)
                placed = True
                break
        if not placed:
            if body:
                trips.append((DEPOT, *body, DEPOT))
                body = []
            else:
                r = order[0]
                patched = _patch_battery(inst, [r])
                body = patched if patched is not None else [r]
                unserved.discard(r)
    if body:
        trips.append((DEPOT, *body, DEPOT))
    return normalize_solution([[t] for t in trips])


def _insertion_cost(inst, body, pos, r):
    seq = [DEPOT] + body + [DEPOT]
    prev, nxt = seq[pos], seq[pos + 1]
    return inst.distance[prev][r] + inst.distance[r][nxt] - inst.distance[prev][nxt]


def _patch_battery(inst, body):
    """Insert nearest charging stops into a single trip body until its battery
    profile is legal; None when impossible."""
    if not inst.charging_nodes:
        return None
    nodes = list(body)
    for _ in range(2 * len(body) + 2):
        trip = [DEPOT] + nodes + [DEPOT]
        hit = _single_trip_battery_violation(inst, trip)
        if hit is None:
            return nodes
        i = hit
        prev = trip[i - 1]
        if inst.is_charging(prev):
            return None
        station = min(inst.charging_nodes, key=lambda c: (inst.distance[prev][c], c))
        nodes.insert(i - 1, station)
    return None


def _single_trip_battery_violation(inst, trip):
    battery = inst.amr.battery_init
    alpha, beta = inst.amr.battery_low, inst.amr.battery_high
    for i in range(1, len(trip)):
        battery -= inst.drain[trip[i - 1]][trip[i]]
        if battery < alpha - 1e-12:
            return i
        if inst.is_charging(trip[i]) and battery < beta - 1e-12:
            battery = beta
    return None


def local_search(inst: Instance, x: Solution, rng: random.Random) -> Solution:
    """Variable neighborhood descent over swap*, 2-opt*, relocation*.

    Each accepted move (strictly smaller penalized cost) resets to the first
    neighborhood; three consecutive failures end the descent.
    """
    cx = solution_cost(inst, x)
    k = 1
    while k <= len(_NEIGHBORHOODS):
        candidate = _NEIGHBORHOODS[k - 1](inst, x, cx, rng)
        cc = solution_cost(inst, candidate)
        if cc.penalized < cx.penalized:
            x, cx = candidate, cc
            k = 1
        else:
            k += 1
    return x


def feasible_operation(inst: Instance, x: Solution) -> Solution:
    """Capacity/battery repair pipeline followed by AMR merging.

    Repairs loop because a depot split changes the distances travelled and
    therefore the battery plan; chance-constraint violations are left to the
    penalized search.
    """
    cs = solution_cost(inst, x)
    rounds = max(4, 2 * inst.n_requests)
    for _ in range(rounds):
        if cs.flag_failures == 0:
            break
        x = depot_insert_repair(inst, x)
        x = charging_insert_repair(inst, x)
        cs = solution_cost(inst, x)
    else:
        from .model import StructuralError
        raise StructuralError("repair pipeline did not converge")
    return amr_decrease(inst, x)


def shaking(inst: Instance, x_l: Solution, rng: random.Random,
            delta: float | None = None, candidates: int = 20) -> Solution:
    """Best-of-L tail-exchange shake, accepted when its shake cost stays
    under delta times the current one.

    Acceptance prices violated constraints at one fixed cost each (see
    shake_cost): under the full xi3 surrogate no window-breaking perturbation
    could ever pass a delta gate, and the search would stay locked inside the
    first feasible basin it reaches.
    """
    if delta is None:
        delta = inst.cost.shake_delta
    x_s = shake_2opt_l(inst, x_l, rng, candidates)
    cost_s = shake_cost(inst, solution_cost(inst, x_s))
    cost_l = shake_cost(inst, solution_cost(inst, x_l))
    if cost_s < cost_l * delta:
        return x_s
    return x_l


def solve(inst: Instance, max_iterations: int, seed: int = 0,
          shake_candidates: int = 20, delta: float | None = None,
          on_iteration=None):
    """Run the full VNS loop and return (solution, evaluation, history).

    history[i] is the best zero-penalty objective known after iteration i+1
    (inf until one exists).  `on_iteration(n, best_objective, incumbent_pen)`
    is invoked once per iteration when given.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    rng = random.Random(seed)
    x = greedy_initial(inst, rng)
    x = feasible_operation(inst, x)
    cx = solution_cost(inst, x)

    least_pen = cx.penalized
    least_pen_sol = x
    best: Solution | None = x if cx.feasible else None
    best_obj = cx.objective if cx.feasible else math.inf
    state = SearchState(incumbent=x, best=best, best_objective=best_obj,
                        neighborhood_index=1, iteration=0,
                        max_iterations=max_iterations, rng=rng)

    for n in range(1, max_iterations + 1):
        x_l = local_search(inst, state.incumbent, rng)
        x_l = feasible_operation(inst, x_l)
        cl = solution_cost(inst, x_l)
        if cl.feasible and cl.objective < state.best_objective:
            state.best = x_l
            state.best_objective = cl.objective
        x_prime = shaking(inst, x_l, rng, delta=delta, candidates=shake_candidates)
        cp = solution_cost(inst, x_prime)
        # The delta-accepted shake is the next working solution; the best
        # solution only moves on a strict zero-penalty improvement.
        state.incumbent = x_prime
        if cp.penalized < least_pen:
            least_pen = cp.penalized
            least_pen_sol = x_prime
        if cp.feasible and cp.objective < state.best_objective:
            state.best = x_prime
            state.best_objective = cp.objective
        state.iteration = n
        state.history.append(state.best_objective)
        if on_iteration is not None:
            on_iteration(n, state.best_objective, cp.penalized)

    returned = state.best if state.best is not None else least_pen_sol
    evaluation = evaluate_solution(inst, returned)
    return returned, evaluation, state.history
