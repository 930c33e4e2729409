#!/usr/bin/env python3
"""Regenerate instances/hospital64.json (the 64-request hospital case).

Request data (demands, service means, windows) is clean.  The published
ward distance table is ragged: some rows carry an extra entry and mirror
entries disagree, so the matrix is rebuilt deterministically: a row vouches
for an entry when it is well formed (33 columns) or at least prefix-aligned
through its diagonal zero; symmetric conflicts resolve to the minimum; the
few pairs with no vouching row fall back to the median of their ward-block.
Floor differences derive from the absolute ward floors (depot floor 0).

Requests i and 32+i share ward i; the depot doubles as the charger.
"""

import json
import statistics
from pathlib import Path

WINDOWS = [
    ("11:21", "14:23"), ("11:24", "14:18"), ("11:09", "14:02"), ("11:08", "14:09"),
    ("11:22", "14:27"), ("11:13", "14:25"), ("10:59", "14:18"), ("10:56", "14:29"),
    ("11:23", "14:26"), ("10:59", "14:19"), ("11:20", "14:26"), ("10:48", "14:15"),
    ("10:54", "14:09"), ("11:26", "14:02"), ("10:38", "14:14"), ("10:39", "14:25"),
    ("10:44", "14:16"), ("11:07", "17:00"), ("11:16", "14:13"), ("11:02", "14:09"),
    ("11:02", "14:05"), ("10:43", "14:23"), ("10:39", "14:19"), ("11:26", "14:26"),
    ("10:56", "14:06"), ("11:14", "14:14"), ("11:20", "14:16"), ("10:43", "14:02"),
    ("10:55", "14:23"), ("11:02", "14:25"), ("11:11", "14:13"), ("11:21", "14:15"),
    ("10:43", "14:08"), ("10:48", "14:29"), ("11:12", "14:17"), ("11:09", "14:14"),
    ("10:32", "14:01"), ("11:16", "14:18"), ("11:47", "14:34"), ("10:51", "14:08"),
    ("10:47", "14:23"), ("10:40", "14:14"), ("11:05", "14:06"), ("10:50", "14:11"),
    ("11:06", "14:00"), ("11:14", "14:25"), ("11:04", "14:28"), ("10:37", "14:03"),
    ("11:17", "14:26"), ("11:08", "14:10"), ("10:32", "14:04"), ("10:54", "14:24"),
    ("11:25", "14:20"), ("11:16", "14:14"), ("11:14", "14:19"), ("11:41", "14:13"),
    ("11:02", "14:04"), ("11:24", "14:05"), ("10:49", "14:02"), ("10:50", "14:22"),
    ("10:30", "14:15"), ("11:05", "14:10"), ("11:09", "14:24"), ("10:53", "14:26"),
]
BIG_DEMAND = {32, 64}

# Ward distance rows as published (wards 0..32; 0 is the depot).
RAW_DISTANCE = """
0 141 141 141 141 141 141 148 148 148 148 148 148 157 157 157 157 157 157 161 161 161 161 161 161 201 201 201 201 200 197 197 163
141 0 54 54 54 54 54 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
141 54 0 54 54 54 54 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
141 54 54 0 54 54 54 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
141 54 54 54 0 54 54 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
141 54 54 54 54 0 54 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
141 54 54 54 54 54 0 61 61 61 61 61 61 70 70 70 70 70 70 74 74 74 74 74 74 311 311 311 310 310 307 307 76
148 61 61 61 61 61 61 0 69 69 69 69 69 77 77 77 77 77 77 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
148 61 61 61 61 61 61 69 0 69 69 69 77 77 77 77 77 77 82 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
148 61 61 61 61 61 61 69 69 0 0 69 77 77 77 77 77 77 82 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
148 61 61 61 61 61 61 69 69 0 0 69 77 77 77 77 77 77 82 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
148 70 61 61 61 61 61 69 69 69 69 0 77 77 77 77 77 77 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
148 70 61 61 61 61 61 69 77 77 77 77 0 77 77 77 77 77 82 82 82 82 82 82 318 318 318 318 318 318 315 315 84
157 70 70 70 70 70 70 77 77 77 77 77 77 0 86 86 86 90 90 90 90 90 90 90 327 327 327 327 326 323 323 323 93
157 70 70 70 70 70 70 77 77 77 77 77 77 86 0 86 86 90 90 90 90 90 90 90 327 327 327 327 326 323 323 323 93
157 70 70 70 70 70 70 77 77 77 77 77 77 86 86 0 86 90 90 90 90 90 90 90 327 327 327 327 326 323 323 323 93
157 70 70 70 70 70 70 77 77 77 77 77 77 86 86 86 0 90 90 90 90 90 90 90 327 327 327 327 326 323 323 323 93
157 70 70 70 70 70 70 77 77 77 77 77 77 90 90 90 90 0 90 90 90 90 90 90 327 327 327 327 326 323 323 323 93
157 70 70 70 70 70 70 77 82 82 82 82 82 82 90 90 90 90 0 90 90 90 90 90 327 327 327 327 326 323 323 323 93
161 74 74 74 74 74 74 82 82 82 82 82 82 82 90 90 90 90 90 90 0 95 95 95 332 332 332 332 331 328 328 328 97
161 74 74 74 74 74 74 82 82 82 82 82 82 82 90 90 90 90 90 90 95 0 95 95 332 332 332 332 331 328 328 328 97
161 74 74 74 74 74 74 82 82 82 82 82 82 82 90 90 90 90 90 90 95 95 0 95 332 332 332 332 331 328 328 328 97
161 74 74 74 74 74 74 82 82 82 82 82 82 82 90 90 90 90 90 90 95 95 95 0 332 332 332 332 331 328 328 328 97
161 74 74 74 74 74 74 82 82 82 82 82 82 82 327 327 327 327 327 327 332 332 332 332 0 332 332 332 331 328 328 328 97
161 74 74 74 74 74 74 82 318 318 318 318 318 318 327 327 327 327 327 327 332 332 332 332 332 0 332 332 331 328 328 328 97
201 311 311 311 310 310 310 318 318 318 318 318 318 318 327 327 327 327 327 327 332 332 332 332 332 332 0 39 39 35 35 35 334
201 311 311 311 310 310 310 318 318 318 318 318 318 318 327 327 327 327 327 327 332 332 332 332 332 332 39 0 39 35 35 35 334
201 311 311 311 310 310 310 318 318 318 318 318 318 318 326 326 326 326 326 326 331 331 331 331 331 331 39 39 0 35 35 35 334
201 311 311 311 310 310 310 318 318 318 318 318 318 318 323 323 323 323 323 323 328 328 328 328 328 328 35 35 35 0 35 35 334
200 310 310 310 310 310 310 318 315 315 315 315 315 315 323 323 323 323 323 323 328 328 328 328 328 328 35 35 35 35 0 35 334
197 307 307 307 307 307 307 315 315 315 315 315 315 315 323 323 323 323 323 323 328 328 328 328 328 328 35 35 35 35 0 31 330
197 307 307 307 307 307 307 315 315 315 315 315 315 315 323 323 323 323 323 323 328 328 328 328 328 328 35 35 35 35 35 31 0 330
163 76 76 76 76 76 76 84 84 84 84 84 84 84 93 93 93 93 93 93 97 97 97 97 97 97 334 334 334 334 333 330 163
"""

# Absolute floor of each ward (row 0 of the published floor table; depot = 0).
WARD_FLOORS = [0, 4, 5, 6, 7, 8, 9, 3, 5, 5, 7, 8, 9, 4, 5, 6, 7, 8, 9,
               4, 5, 6, 7, 8, 9, 5, 6, 0, 8, 4, 7, 8, 3]

N_WARDS = 33  # including the depot as ward 0


def ward_block(w: int) -> int:
    if w == 0:
        return 0
    if w <= 24:
        return (w - 1) // 6 + 1
    if w <= 31:
        return 5
    return 6


def rebuild_ward_distance():
    rows = [[int(tok) for tok in line.split()]
            for line in RAW_DISTANCE.strip().splitlines()]
    assert len(rows) == N_WARDS

    def trusted_upto(i):
        row = rows[i]
        if len(row) == N_WARDS and row[i] == 0:
            return N_WARDS - 1
        if len(row) > i and row[i] == 0:
            return i
        return -1

    trust = [trusted_upto(i) for i in range(N_WARDS)]
    dist = [[0.0] * N_WARDS for _ in range(N_WARDS)]
    pending = []
    for i in range(N_WARDS):
        for j in range(i + 1, N_WARDS):
            cands = []
            if j <= trust[i]:
                cands.append(rows[i][j])
            if i <= trust[j]:
                cands.append(rows[j][i])
            if cands:
                dist[i][j] = dist[j][i] = float(min(cands))
            else:
                pending.append((i, j))
    for i, j in pending:
        bi, bj = ward_block(i), ward_block(j)
        pool = [dist[a][b]
                for a in range(N_WARDS) for b in range(N_WARDS)
                if a != b and dist[a][b] > 0
                and ward_block(a) == bi and ward_block(b) == bj]
        dist[i][j] = dist[j][i] = float(statistics.median(pool)) if pool else 100.0
    return dist


def build():
    ward_dist = rebuild_ward_distance()
    n = 64
    ward_of = [None] + [((k - 1) % 32) + 1 for k in range(1, n + 1)]  # 1-based
    # node order: depot, requests 1..64, charging (at the depot)
    node_ward = [0] + [ward_of[k] for k in range(1, n + 1)] + [0]
    size = len(node_ward)
    distance = [[ward_dist[node_ward[i]][node_ward[j]] for j in range(size)]
                for i in range(size)]
    floors = [WARD_FLOORS[w] for w in node_ward]
    floor_diff = [[abs(floors[i] - floors[j]) for j in range(size)]
                  for i in range(size)]
    for i in range(size):
        distance[i][i] = 0.0
        floor_diff[i][i] = 0

    requests = [
        {
            "id": k,
            "demand": 6 if k in BIG_DEMAND else 2,
            "window": list(WINDOWS[k - 1]),
            "service_mean": 300,
            "service_var": 360,
            "floor": floors[k],
        }
        for k in range(1, n + 1)
    ]
    data = {
        "requests": requests,
        "depot": {"floor": 0},
        "charging": [{"floor": 0}],
        "distance": distance,
        "floor_diff": floor_diff,
        "amr": {
            "capacity": 20,
            "speed": 1.0,
            "consume_rate": 1 / 21600,
            "charge_rate": 1 / 16200,
            "alpha": 0.0,
            "beta": 0.8,
            "battery_init": 0.5,
        },
        "cost": {"xi1": 30, "xi2": 0.01, "xi3": 1000, "epsilon": 0.05, "delta": 1.1},
        "stoch": {"floor_time_mean": 51.25, "stop_overhead": 6,
                  "sigma0_sq": 40, "sigmaf_sq": 160},
    }
    return data


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "instances" / "hospital64.json"
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")
