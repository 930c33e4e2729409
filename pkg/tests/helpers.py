"""Shared builders for the test suite: random instances/solutions and the
independent Monte Carlo oracle for truncated-normal moments."""

from __future__ import annotations

import math
import random

import numpy as np

from amrsched.model import (AmrParams, CostParams, DEPOT, Gaussian, Instance,
                            Request, Solution, StochasticParams,
                            default_shift_start, normalize_solution,
                            solution_from_ids)

# The published optimum for the shipped 12-request instance.
OPTIMAL_ROUTES = [[[1, 3, 6, 7], [9, 11, 10]], [[4, 2, 5, 8, 12]]]


def paper_optimum(inst: Instance) -> Solution:
    return solution_from_ids(inst, OPTIMAL_ROUTES)


def random_instance(rng: random.Random, n_requests: int, *,
                    tight_battery: bool = False,
                    tight_windows: bool = False) -> Instance:
    """Random but always-serviceable instance.

    Windows are wide enough that every request alone on a fresh AMR passes
    its chance test, so a feasible solution always exists.  With
    tight_battery the consumption rate is raised until multi-stop trips
    need mid-route charging while any single leg stays coverable.
    """
    n_nodes = n_requests + 2  # depot + requests + one charging station
    coords = [(rng.uniform(0, 400), rng.uniform(0, 400)) for _ in range(n_nodes)]
    floors = [0] + [rng.randint(0, 4) for _ in range(n_requests)] + [0]
    distance = tuple(
        tuple(0.0 if i == j else round(math.dist(coords[i], coords[j]), 1)
              for j in range(n_nodes))
        for i in range(n_nodes)
    )
    floor_diff = tuple(
        tuple(float(abs(floors[i] - floors[j])) for j in range(n_nodes))
        for i in range(n_nodes)
    )
    capacity = 20.0
    requests = []
    for i in range(n_requests):
        if tight_windows:
            open_ = rng.uniform(29_000, 30_500)
            width = rng.uniform(1500, 2600)
        else:
            open_ = rng.uniform(29_000, 33_000)
            width = rng.uniform(1500, 3600)
        requests.append(Request(
            id=i + 1,
            demand=float(rng.randint(1, 8)),
            window_open=round(open_, 0),
            window_close=round(open_ + width, 0),
            service=Gaussian(float(rng.randint(60, 240)), 36.0),
            floor=floors[i + 1],
        ))
    max_arc = max(max(row) for row in distance)
    if tight_battery:
        consume = 0.8 / (3.0 * max_arc)   # one leg <= (beta-alpha)/3
        battery_init = 0.8
    else:
        consume = 1.0 / 21600.0
        battery_init = 1.0
    amr = AmrParams(capacity=capacity, speed=1.0, consume_rate=consume,
                    charge_rate=1.0 / 16200.0, battery_low=0.0,
                    battery_high=0.8, battery_init=battery_init)
    cost = CostParams(fixed_per_amr=30.0, per_meter=0.01, tw_penalty=1000.0,
                      epsilon=0.05, shake_delta=1.1)
    stoch = StochasticParams()
    shift = default_shift_start(requests, distance, floor_diff, amr, stoch)
    return Instance(requests=tuple(requests), depot_floor=0, charging_floors=(0,),
                    distance=distance, floor_diff=floor_diff, amr=amr,
                    cost=cost, stoch=stoch, shift_start=shift)


def random_solution(rng: random.Random, inst: Instance,
                    max_trip: int = 6) -> Solution:
    """Random covering solution; may break capacity, battery or windows."""
    nodes = list(range(1, inst.n_requests + 1))
    rng.shuffle(nodes)
    amrs: list[list[tuple[int, ...]]] = []
    i = 0
    while i < len(nodes):
        k = rng.randint(1, min(max_trip, len(nodes) - i))
        trip = (DEPOT, *nodes[i:i + k], DEPOT)
        i += k
        if amrs and rng.random() < 0.5:
            amrs[-1].append(trip)
        else:
            amrs.append([trip])
    return normalize_solution(amrs)


def mc_truncated_moments(mu: float, sigma: float, e: float, samples: int,
                         seed: int = 0, stratified: bool = True):
    """Monte Carlo mean/variance of max(X, e), X ~ N(mu, sigma^2).

    Stratified sampling (inverse CDF over a jittered uniform grid) is
    unbiased and shrinks the estimator noise enough that tight relative
    tolerances stay meaningful deep in the truncation regime.
    """
    from scipy.special import ndtri

    rng = np.random.default_rng(seed)
    if stratified:
        u = (np.arange(samples) + rng.random(samples)) / samples
        x = mu + sigma * ndtri(u)
    else:
        x = rng.normal(mu, sigma, samples)
    y = np.maximum(x, e)
    return float(y.mean()), float(y.var())


def sub_instance(inst: Instance, ids: list[int]) -> Instance:
    """Restrict an instance to the given request ids (matrices re-sliced)."""
    keep_nodes = [DEPOT] + [inst.node_of_id[r] for r in ids] + list(inst.charging_nodes)
    requests = tuple(inst.request_at(inst.node_of_id[r]) for r in ids)
    distance = tuple(tuple(inst.distance[i][j] for j in keep_nodes)
                     for i in keep_nodes)
    floor_diff = tuple(tuple(inst.floor_diff[i][j] for j in keep_nodes)
                       for i in keep_nodes)
    shift = default_shift_start(requests, distance, floor_diff, inst.amr, inst.stoch)
    return Instance(requests=requests, depot_floor=inst.depot_floor,
                    charging_floors=inst.charging_floors, distance=distance,
                    floor_diff=floor_diff, amr=inst.amr, cost=inst.cost,
                    stoch=inst.stoch, shift_start=shift)
