"""Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines.
The optional greedy sweep of criterion 4 runs only when
``GRAPHFLOW_ACCEPTANCE_GREEDY=1``.
"""

import itertools
import math
import os
import subprocess
import sys
import time

import networkx as nx
import numpy as np
import pytest

from graphflow import (
    ExactSpreadOracle,
    ExperimentSpec,
    Graph,
    GraphGenSpec,
    celf_im,
    exact_expected_spread,
    expected_spread,
    generate,
    greedy_block,
    greedy_im,
    ic,
    jordan_center,
    netsleuth,
    plant_cascade,
    proxy_block,
    proxy_im,
    run_experiments,
    select_seeds,
    si,
    simulate,
    sir,
    source_distance,
)
from graphflow.cli import main as cli_main
from graphflow.graph import bfs_distances
from graphflow.im import PROXIES
from graphflow.runner import MethodSpec, SeedStrategy

import oracles
from helpers import star

# Pinned tolerances.
MC_RUNS = 100_000
MC_SIGMAS = 3.0
MC_MIN_PASS = 19
APPROX = 1.0 - 1.0 / math.e
BETA_RATIO = 4.0
SL_MARGIN = 0.30
PROXY_TIME_FRACTION = 0.01


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def _random_small_graph(rng, max_nodes=8, max_edges=14):
    n = int(rng.integers(2, max_nodes + 1))
    pairs = list(itertools.combinations(range(n), 2))
    m = int(rng.integers(1, min(len(pairs), max_edges) + 1))
    chosen = rng.choice(len(pairs), size=m, replace=False)
    return n, [pairs[i] for i in sorted(chosen)]


def _random_connected_edges(rng, n, extra):
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    for _ in range(extra):
        u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
        edges.add((u, v))
    return sorted(edges)


def test_criterion_01_monte_carlo_matches_exact(capsys):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    hits, worst = 0, 0.0
    for case in range(20):
        n, edges = _random_small_graph(rng)
        graph = Graph.from_edges(n, edges)
        p = (0.2, 0.5, 1.0)[case % 3]
        seeds = sorted(rng.choice(n, size=int(rng.integers(1, min(2, n) + 1)), replace=False).tolist())
        exact = exact_expected_spread(graph, ic(p), seeds)
        assert exact == pytest.approx(oracles.ic_spread(n, edges, p, seeds), abs=1e-12)
        est = expected_spread(graph, ic(p), seeds, runs=MC_RUNS, rng_seed=case)
        se = est.std / math.sqrt(est.runs)
        ok = est.mean == exact if se == 0 else abs(est.mean - exact) <= MC_SIGMAS * se
        if se > 0:
            worst = max(worst, abs(est.mean - exact) / se)
        hits += ok
    elapsed = time.perf_counter() - start
    _report(
        capsys, 1, hits >= MC_MIN_PASS and elapsed < 60,
        f"{hits}/20 within {MC_SIGMAS} SE (max |z| {worst:.2f}), {elapsed:.1f}s < 60s",
    )


def _atlas_connected():
    for g in nx.graph_atlas_g()[1:]:
        if g.number_of_nodes() <= 7 and nx.is_connected(g):
            yield Graph.from_networkx(g)


def test_criteria_02_03_greedy_and_lazy_variants_under_exact_oracle(capsys):
    config = ic(0.5)
    start = time.perf_counter()
    instances = ratio_ok = same = 0
    worst = 1.0
    for graph in _atlas_connected():
        oracle = ExactSpreadOracle(graph, config, max_edges=21)
        n = graph.node_count
        for k in range(1, min(3, n) + 1):
            greedy = greedy_im(graph, config, k, oracle=oracle)
            best = max(oracle(s) for s in itertools.combinations(range(n), k))
            value = oracle(greedy.seeds.ids)
            worst = min(worst, value / best)
            ratio_ok += value >= APPROX * best - 1e-12
            celf = celf_im(graph, config, k, oracle=oracle)
            celfpp = celf_im(graph, config, k, oracle=oracle, lookahead=True)
            same += celf.seeds.ids == greedy.seeds.ids == celfpp.seeds.ids
            instances += 1
    elapsed = time.perf_counter() - start

    k19 = star(9)
    oracle = ExactSpreadOracle(k19, config)
    counts = {}
    for k in (2, 3):
        counts[k] = (
            greedy_im(k19, config, k, oracle=oracle).evaluations,
            celf_im(k19, config, k, oracle=oracle).evaluations,
            celf_im(k19, config, k, oracle=oracle, lookahead=True).evaluations,
        )
    n = k19.node_count
    fewer = counts[2][1] < 2 * n and counts[2][2] < 2 * n and counts[3][1] < counts[3][0] and counts[3][2] < counts[3][0]

    with capsys.disabled():
        print(f"\n[{'PASS' if ratio_ok == instances and elapsed < 120 else 'FAIL'}] criterion 2: "
              f"{ratio_ok}/{instances} instances >= (1-1/e) OPT (worst ratio {worst:.4f}), {elapsed:.1f}s < 120s")
    _report(
        capsys, 3, same == instances and fewer,
        f"{same}/{instances} identical seed sets; K1,9 evaluations greedy/CELF/CELF++ "
        f"k=2 {counts[2]} (k*n={2 * n}), k=3 {counts[3]}",
    )
    assert ratio_ok == instances and elapsed < 120


def _ie(graph, config, seeds, rng_seed=11):
    return expected_spread(graph, config, seeds, runs=1000, rng_seed=rng_seed).mean


def test_criterion_04_budget_and_beta_trends(capsys):
    graph = generate(GraphGenSpec("ws", 1000, k=6, p=0.1), 0)
    low, high = si(0.1, 10), si(0.5, 10)
    budgets = range(5, 31, 5)
    start = time.perf_counter()
    curves, ratios = {}, {}
    for method in ("degree", "eigen"):
        top = proxy_im(graph, method, 30).picks
        curves[method] = [_ie(graph, low, top[:b]) for b in budgets]
        ratios[method] = _ie(graph, high, top[:5]) / curves[method][0]
    if os.environ.get("GRAPHFLOW_ACCEPTANCE_GREEDY") == "1":
        picks = greedy_im(graph, low, 30, sims_per_eval=100).picks
        curves["greedy"] = [_ie(graph, low, picks[:b]) for b in budgets]
        ratios["greedy"] = _ie(graph, high, picks[:5]) / curves["greedy"][0]
    elapsed = time.perf_counter() - start
    monotone = all(np.all(np.diff(c) >= 0) for c in curves.values())
    ratio_ok = all(r >= BETA_RATIO for r in ratios.values())
    detail = "; ".join(f"{m} IE {[round(v, 1) for v in c]} ratio {ratios[m]:.2f}" for m, c in curves.items())
    gated = "" if "greedy" in curves else " (greedy sweep gated off)"
    _report(capsys, 4, monotone and ratio_ok and elapsed < 1800, f"{detail}; {elapsed:.1f}s{gated}")


def test_criterion_05_greedy_blocking_dominates_proxies(capsys):
    spec = ExperimentSpec(
        graphs=[GraphGenSpec("ws", 500, k=6, p=0.1)],
        diffusions=[si(0.1, 10)],
        seed_strategies=[SeedStrategy("random", 5)],
        methods=[MethodSpec.of("greedy")] + [MethodSpec.of(p) for p in PROXIES],
        task="ibm",
        epochs=50,
        master_seed=0,
    )
    start = time.perf_counter()
    records = run_experiments(spec)
    elapsed = time.perf_counter() - start
    effects = {r.method: r.mean for r in records}
    ok = not any(r.failed for r in records) and all(effects["greedy"] > effects[p] for p in PROXIES)
    detail = ", ".join(f"{m} {v:.2f}" for m, v in effects.items())
    _report(capsys, 5, ok and elapsed < 1800, f"mean blocking effect {detail}; {elapsed:.1f}s")


def test_criterion_06_sir_conservation_and_si_completeness(capsys):
    rng = np.random.default_rng(6)
    conserved = 0
    for i in range(1000):
        n = int(rng.integers(2, 30))
        graph = Graph.from_edges(n, _random_connected_edges(rng, n, int(rng.integers(0, 2 * n))))
        seeds = sorted(rng.choice(n, size=int(rng.integers(1, min(3, n) + 1)), replace=False).tolist())
        trace = simulate(graph, sir(rng.uniform(), rng.uniform(), 30), seeds, i)
        steps = trace.steps
        counts = np.stack([(steps == s).sum(axis=1) for s in (0, 1, 2)], axis=1)
        legal = np.all(np.diff(steps.astype(int), axis=0) >= 0)
        conserved += bool(np.all(counts.sum(axis=1) == n) and legal)
    complete = 0
    for i in range(100):
        n = int(rng.integers(2, 60))
        edges = _random_connected_edges(rng, n, int(rng.integers(0, n)))
        graph = Graph.from_edges(n, edges)
        seed = int(rng.integers(0, n))
        ecc = max(oracles.bfs(oracles.adjacency_lists(n, edges), [seed]).values())
        trace = simulate(graph, si(1.0, n), [seed], i)
        complete += trace.spread == n and len(trace.steps) - 1 <= ecc
    _report(capsys, 6, conserved == 1000 and complete == 100,
            f"{conserved}/1000 SIR traces conserve counts, {complete}/100 SI beta=1 runs complete within eccentricity")


def _connected_infected_set(rng, n, edges, size):
    adj = oracles.adjacency_lists(n, edges)
    infected = {int(rng.integers(0, n))}
    while len(infected) < size:
        frontier = sorted({w for v in infected for w in adj[v]} - infected)
        if not frontier:
            break
        infected.add(int(rng.choice(frontier)))
    return sorted(infected)


def test_criterion_07_jordan_matches_brute_force(capsys):
    rng = np.random.default_rng(7)
    matches = 0
    for _ in range(200):
        n = int(rng.integers(1, 40))
        edges = _random_connected_edges(rng, n, int(rng.integers(0, n + 1))) if n > 1 else []
        graph = Graph.from_edges(n, edges)
        infected = _connected_infected_set(rng, n, edges, int(rng.integers(1, 16)))
        got = jordan_center(graph, infected, 1).predicted
        matches += got == (oracles.jordan_brute(n, edges, infected),)
    _report(capsys, 7, matches == 200, f"{matches}/200 exact matches")


def _random_pair_baseline(graph, truth, infected):
    """Exact mean source distance of a uniformly random pair of infected nodes."""
    infected = np.asarray(infected)
    d0 = bfs_distances(graph, truth[0])[infected]
    d1 = bfs_distances(graph, truth[1])[infected]
    cost = np.minimum(d0[:, None] + d1[None, :], d0[None, :] + d1[:, None])
    return cost[np.triu_indices(infected.size, 1)].mean()


def test_criterion_08_localization_beats_random(capsys):
    graph = generate(GraphGenSpec("ws", 1000, k=6, p=0.1), 0)
    config = si(0.1, 20)
    start = time.perf_counter()
    dist = {"jordan": [], "netsleuth": []}
    baseline = []
    for trial in range(30):
        truth, obs = plant_cascade(graph, config, 2, trial)
        baseline.append(_random_pair_baseline(graph, truth.ids, obs.infected))
        dist["jordan"].append(source_distance(graph, jordan_center(graph, obs, 2).predicted, truth))
        dist["netsleuth"].append(source_distance(graph, netsleuth(graph, obs, 2).predicted, truth))
    elapsed = time.perf_counter() - start
    base = float(np.mean(baseline))
    gains = {m: 1.0 - np.mean(d) / base for m, d in dist.items()}
    detail = ", ".join(f"{m} {np.mean(d):.2f} ({gains[m]:.0%} below)" for m, d in dist.items())
    _report(capsys, 8, all(g >= SL_MARGIN for g in gains.values()) and elapsed < 600,
            f"random baseline {base:.2f}; {detail}; {elapsed:.1f}s")


def test_criterion_09_proxy_runtime(capsys):
    graph = generate(GraphGenSpec("ws", 500, k=6, p=0.1), 0)
    config = si(0.1, 10)
    seeds = select_seeds(graph, "random", 5, 1)

    def timed(fn):
        start = time.perf_counter()
        fn()
        return time.perf_counter() - start

    greedy_im_t = timed(lambda: greedy_im(graph, config, 5))
    greedy_block_t = timed(lambda: greedy_block(graph, config, seeds, 5))
    proxy_im_t = max(timed(lambda: proxy_im(graph, p, 5)) for p in PROXIES)
    proxy_block_t = max(timed(lambda: proxy_block(graph, p, seeds, 5)) for p in PROXIES)
    ok = proxy_im_t <= PROXY_TIME_FRACTION * greedy_im_t and proxy_block_t <= PROXY_TIME_FRACTION * greedy_block_t
    _report(capsys, 9, ok,
            f"IM greedy {greedy_im_t:.2f}s vs slowest proxy {proxy_im_t * 1e3:.2f}ms; "
            f"IBM greedy {greedy_block_t:.2f}s vs slowest proxy {proxy_block_t * 1e3:.2f}ms")


DETERMINISM_CONFIG = """
[experiment]
task = im
epochs = 3
master_seed = 17
outputs = csv, trace_json

[graph.ws]
kind = ws
n = 60
k = 4
p = 0.2

[graph.ba]
kind = ba
n = 60
m = 2

[diffusion.si]
kind = si
beta = 0.2
max_steps = 6

[diffusion.sir]
kind = sir
beta = 0.4
gamma = 0.3
max_steps = 8

[seed.random]
strategy = random
budget = 3

[method.degree]

[method.celf]
sims_per_eval = 20

[method.greedy]
sims_per_eval = 10
"""


def _strip_runtime(path):
    lines = path.read_text().splitlines()
    return [line.rsplit(",", 1)[0] for line in lines]


def test_criterion_10_determinism(tmp_path, capsys):
    config = tmp_path / "exp.ini"
    config.write_text(DETERMINISM_CONFIG)
    dirs = []
    for par in (1, 2, 8):
        out = tmp_path / f"par{par}"
        assert cli_main(["run", "--config", str(config), "--parallelism", str(par), "--out-dir", str(out)]) == 0
        dirs.append(out)
    again = tmp_path / "again"
    subprocess.run(
        [sys.executable, "-m", "graphflow.cli", "run", "--config", str(config), "--out-dir", str(again)],
        check=True, capture_output=True,
    )
    dirs.append(again)
    csvs = [_strip_runtime(d / "results.csv") for d in dirs]
    traces = sorted(p.name for p in dirs[0].glob("trace_*.json"))
    same_csv = all(c == csvs[0] for c in csvs)
    same_trace = bool(traces) and all(
        sorted(p.name for p in d.glob("trace_*.json")) == traces
        and all((d / t).read_bytes() == (dirs[0] / t).read_bytes() for t in traces)
        for d in dirs
    )
    _report(capsys, 10, same_csv and same_trace,
            f"{len(csvs[0]) - 1} CSV rows and {len(traces)} trace files identical across parallelism 1/2/8 and a second process")
