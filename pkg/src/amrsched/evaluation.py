"""Trip and solution evaluation: load/battery profiles, stochastic timings,
the two-term objective and its penalized search surrogate.

Two code paths cover the same math:

* ``evaluate_trip`` / ``evaluate_solution`` build full per-node profiles and
  are the reference implementation of the contracts.
* ``solution_cost`` is the memoized fast path the search loop runs millions
  of times; it walks the identical recurrences inline and caches per trip,
  per AMR and per solution.  ``tests/test_evaluation.py`` pins the two paths
  to each other on random solutions.

Trips of one AMR chain at the depot: the next trip starts at the mean of the
previous depot-arrival distribution with the variance reset (the reload is
instantaneous and deterministic), and the battery carries over unchanged.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

from .model import (DEPOT, Gaussian, Instance, Solution, StructuralError,
                    check_solution_structure, format_time)
from .stochastic import (NodeTiming, chance_satisfied, charging_departure,
                         propagate, travel_params, truncated_start,
                         violation_probability)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_BATTERY_EPS = 1e-12
_LOAD_EPS = 1e-9


@dataclass(frozen=True)
class TripEvaluation:
    timings: tuple[NodeTiming, ...]
    load_after: tuple[float, ...]
    battery_after: tuple[float, ...]
    distance: float
    capacity_ok: bool
    battery_ok: bool
    tw_ok: bool
    tw_violations: int
    violating_requests: tuple[int, ...]   # request ids failing the chance test


@dataclass(frozen=True)
class SolutionEvaluation:
    amr_count: int
    total_distance: float
    objective: float
    penalized: float
    feasible: bool
    per_trip: tuple[TripEvaluation, ...]  # AMR-major order

    @property
    def violating_requests(self) -> tuple[int, ...]:
        return tuple(r for te in self.per_trip for r in te.violating_requests)


def evaluate_trip(inst: Instance, trip, start_time: float, start_battery: float,
                  start_load: float) -> TripEvaluation:
    """Walk one depot-to-depot node sequence.

    Arrival at each node adds the travel law for the leg; request nodes wait
    for their window (truncated start), consume service time and demand;
    charging nodes top the battery up to beta in deterministic time.
    Infeasibility is reported in the flags, never raised.
    """
    amr = inst.amr
    alpha = amr.battery_low
    timings = [NodeTiming(Gaussian(start_time, 0.0), Gaussian(start_time, 0.0),
                          start_time)]
    loads = [start_load]
    batteries = [start_battery]
    battery = start_battery
    load = start_load
    distance = 0.0
    tw_violations = 0
    violating = []
    battery_ok = battery >= alpha - _BATTERY_EPS
    capacity_ok = True
    out_mean = start_time          # departure mean of the previous node
    out_var = 0.0                  # variance leaving the previous node
    prev = trip[0]
    for node in trip[1:]:
        travel = travel_params(inst, prev, node)
        arrival = propagate(Gaussian(out_mean, out_var), Gaussian(0.0, 0.0), travel)
        distance += inst.distance[prev][node]
        battery -= inst.drain[prev][node]
        if battery < alpha - _BATTERY_EPS:
            battery_ok = False
        if inst.is_request(node):
            req = inst.request_at(node)
            if not chance_satisfied(arrival, req.window_close, inst.cost.epsilon):
                tw_violations += 1
                violating.append(req.id)
            start = truncated_start(arrival, req.window_open)
            load -= req.demand
            if load < -_LOAD_EPS:
                capacity_ok = False
            departure = start.mean + req.service.mean
            out_mean = departure
            out_var = start.variance + req.service.variance
        elif inst.is_charging(node):
            start = arrival
            departure = charging_departure(arrival.mean, battery, amr)
            if battery < amr.battery_high - _BATTERY_EPS:
                battery = amr.battery_high
            out_mean = departure
            out_var = arrival.variance
        else:  # trailing depot
            start = arrival
            departure = arrival.mean
            out_mean = departure
            out_var = arrival.variance
        timings.append(NodeTiming(arrival, start, departure))
        loads.append(load)
        batteries.append(battery)
        prev = node
    return TripEvaluation(
        timings=tuple(timings),
        load_after=tuple(loads),
        battery_after=tuple(batteries),
        distance=distance,
        capacity_ok=capacity_ok,
        battery_ok=battery_ok,
        tw_ok=tw_violations == 0,
        tw_violations=tw_violations,
        violating_requests=tuple(violating),
    )


def evaluate_solution(inst: Instance, sol: Solution) -> SolutionEvaluation:
    """Chain every AMR's trips and aggregate cost and feasibility.

    Raises StructuralError when a request is missing or duplicated; ordinary
    infeasibility only clears the flags.
    """
    check_solution_structure(inst, sol)
    per_trip = []
    total_distance = 0.0
    tw_violations = 0
    flag_failures = 0
    for amr_trips in sol.amrs:
        t = inst.shift_start
        battery = inst.amr.battery_init
        for trip in amr_trips:
            te = evaluate_trip(inst, trip, t, battery, inst.amr.capacity)
            per_trip.append(te)
            total_distance += te.distance
            tw_violations += te.tw_violations
            flag_failures += (not te.capacity_ok) + (not te.battery_ok)
            t = te.timings[-1].arrival.mean
            battery = te.battery_after[-1]
    m = len(sol.amrs)
    objective = inst.cost.fixed_per_amr * m + inst.cost.per_meter * total_distance
    penalized = objective + inst.cost.tw_penalty * (tw_violations + flag_failures)
    feasible = tw_violations == 0 and flag_failures == 0
    return SolutionEvaluation(
        amr_count=m,
        total_distance=total_distance,
        objective=objective,
        penalized=penalized,
        feasible=feasible,
        per_trip=tuple(per_trip),
    )


# ---------------------------------------------------------------------------
# fast path

# Aggregate cost record used by the search; `violating` holds node indices.
CostSummary = namedtuple(
    "CostSummary",
    "objective penalized feasible m distance tw_violations flag_failures violating",
)

_TRIP_CACHE_LIMIT = 1 << 18
_AMR_CACHE_LIMIT = 1 << 17
_SOL_CACHE_LIMIT = 1 << 16


def _caches(inst: Instance) -> dict:
    c = inst._caches
    if not c:
        c["trip"] = {}
        c["amr"] = {}
        c["sol"] = {}
    return c


def _trip_fast(inst, trip, t0, b0, cache):
    key = (trip, t0, b0)
    hit = cache.get(key)
    if hit is not None:
        return hit
    tm = inst.travel_mean
    tv = inst.travel_var
    drain = inst.drain
    dmat = inst.distance
    wo = inst.window_open
    wc = inst.window_close
    sm = inst.service_mean
    sv = inst.service_var
    dem = inst.demand
    z = inst.z_quantile
    nreq = inst.n_requests
    alpha = inst.amr.battery_low
    beta = inst.amr.battery_high
    vq = inst.amr.charge_rate
    erfc = math.erfc
    exp = math.exp
    sqrt = math.sqrt

    mean = t0
    var = 0.0
    bat = b0
    load = inst.amr.capacity
    dist = 0.0
    twv = 0
    cap_bad = False
    bat_bad = bat < alpha - _BATTERY_EPS
    viol = ()
    prev = trip[0]
    for node in trip[1:]:
        row = prev
        dist += dmat[row][node]
        bat -= drain[row][node]
        mean += tm[row][node]
        var += tv[row][node]
        if bat < alpha - _BATTERY_EPS:
            bat_bad = True
        if 0 < node <= nreq:
            if mean + z * sqrt(var) > wc[node]:
                twv += 1
                viol += (node,)
            e = wo[node]
            if var > 0.0:
                sigma = sqrt(var)
                zz = (e - mean) / sigma
                upper = 0.5 * erfc(zz / _SQRT2)
                pdf = _INV_SQRT_2PI * exp(-0.5 * zz * zz)
                c = mean - e
                excess = c * upper + sigma * pdf
                second = (c * c + var) * upper + c * sigma * pdf
                var_y = second - excess * excess
                if var_y < 0.0:
                    var_y = 0.0
                elif var_y > var:
                    var_y = var
                var = var_y
                mean = e + excess
            elif mean < e:
                mean = e
            load -= dem[node]
            if load < -_LOAD_EPS:
                cap_bad = True
            mean += sm[node]
            var += sv[node]
        elif node != DEPOT:
            if bat < beta - _BATTERY_EPS:
                mean += (beta - bat) / vq
                bat = beta
        prev = node
    result = (mean, bat, dist, twv, cap_bad, bat_bad, viol)
    if len(cache) >= _TRIP_CACHE_LIMIT:
        cache.clear()
    cache[key] = result
    return result


def _amr_fast(inst, trips, caches):
    cache = caches["amr"]
    hit = cache.get(trips)
    if hit is not None:
        return hit
    trip_cache = caches["trip"]
    t = inst.shift_start
    bat = inst.amr.battery_init
    dist = 0.0
    twv = 0
    cap_n = 0
    bat_n = 0
    viol = ()
    for trip in trips:
        mean, bat, d, tv_, cap_bad, bat_bad, v = _trip_fast(inst, trip, t, bat,
                                                            trip_cache)
        t = mean
        dist += d
        twv += tv_
        cap_n += cap_bad
        bat_n += bat_bad
        viol += v
    result = (dist, twv, cap_n, bat_n, viol)
    if len(cache) >= _AMR_CACHE_LIMIT:
        cache.clear()
    cache[trips] = result
    return result


def solution_cost(inst: Instance, sol: Solution) -> CostSummary:
    """Memoized aggregate cost of a solution; same numbers as
    evaluate_solution but without per-node profiles."""
    caches = _caches(inst)
    cache = caches["sol"]
    hit = cache.get(sol.amrs)
    if hit is not None:
        return hit
    check_solution_structure(inst, sol)
    dist = 0.0
    twv = 0
    flags = 0
    viol = ()
    for trips in sol.amrs:
        d, tv_, cap_n, bat_n, v = _amr_fast(inst, trips, caches)
        dist += d
        twv += tv_
        flags += cap_n + bat_n
        viol += v
    m = len(sol.amrs)
    objective = inst.cost.fixed_per_amr * m + inst.cost.per_meter * dist
    penalized = objective + inst.cost.tw_penalty * (twv + flags)
    result = CostSummary(
        objective=objective,
        penalized=penalized,
        feasible=twv == 0 and flags == 0,
        m=m,
        distance=dist,
        tw_violations=twv,
        flag_failures=flags,
        violating=viol,
    )
    if len(cache) >= _SOL_CACHE_LIMIT:
        cache.clear()
    cache[sol.amrs] = result
    return result


def violating_nodes(inst: Instance, eval_like) -> tuple[int, ...]:
    """Node indices of chance-violating requests from either evaluation flavor."""
    if isinstance(eval_like, CostSummary):
        return eval_like.violating
    return tuple(inst.node_of_id[r] for r in eval_like.violating_requests)


# ---------------------------------------------------------------------------
# reporting


def solution_to_dict(inst: Instance, sol: Solution,
                     evaluation: SolutionEvaluation | None = None) -> dict:
    """Solution JSON payload: routes by request id plus per-request arrival stats."""
    if evaluation is None:
        evaluation = evaluate_solution(inst, sol)
    per_request = _per_request_stats(inst, sol, evaluation)
    return {
        "amrs": [
            {"trips": [[inst.node_label(n) if not inst.is_request(n)
                        else inst.request_at(n).id for n in trip]
                       for trip in amr]}
            for amr in sol.amrs
        ],
        "m": evaluation.amr_count,
        "objective": evaluation.objective,
        "distance": evaluation.total_distance,
        "feasible": evaluation.feasible,
        "per_request": per_request,
    }


def _per_request_stats(inst, sol, evaluation):
    stats = []
    idx = 0
    for amr in sol.amrs:
        for trip in amr:
            te = evaluation.per_trip[idx]
            idx += 1
            for node, timing in zip(trip, te.timings):
                if inst.is_request(node):
                    req = inst.request_at(node)
                    stats.append({
                        "id": req.id,
                        "arrival_mean": timing.arrival.mean,
                        "arrival_std": math.sqrt(max(timing.arrival.variance, 0.0)),
                        "violation_prob": violation_probability(
                            timing.arrival, req.window_close),
                    })
    stats.sort(key=lambda s: s["id"])
    return stats


def route_table(inst: Instance, sol: Solution,
                evaluation: SolutionEvaluation | None = None) -> str:
    """Human-readable per-route table: route, distance, load, charges and the
    mean arrival times along the route."""
    if evaluation is None:
        evaluation = evaluate_solution(inst, sol)
    header = ("AMR No. | Service Route | Distance (m) | Load (kg) | "
              "Number of Charges | Mean Arrival Time of Requests")
    lines = [header]
    idx = 0
    for amr_no, amr in enumerate(sol.amrs, start=1):
        for trip in amr:
            te = evaluation.per_trip[idx]
            idx += 1
            route = " -> ".join(inst.node_label(n) for n in trip)
            load = sum(inst.demand[n] for n in trip if inst.is_request(n))
            charges = sum(1 for n in trip if inst.is_charging(n))
            times = "-".join(format_time(t.arrival.mean) for t in te.timings)
            lines.append(f"{amr_no} | {route} | {te.distance:g} | {load:g} | "
                         f"{charges} | {times}")
    return "\n".join(lines)
