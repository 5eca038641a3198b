"""End-to-end experiment drivers and record emission.

Two entry points: run_experiment solves independently drawn instances with a
selection of algorithms and times each solve; run_distributed_slots plays
the slotted protocol where links first exchange gains over the signaling
channel, then each schedules itself from its own (possibly inconsistent)
view, collides, and backs off probabilistically.

Seed discipline: trial t draws all of its randomness from substreams keyed
by (master_seed, t, stage), so records do not depend on execution order and
a sweep over link counts reuses the same positions and fading for the links
common to two counts.

Objectives in records are bits/s: solver-side rates are natural-log units
and get scaled by tone_bandwidth / ln(2) here.  Each record's objective is
recomputed from the returned allocation, not copied from the solver.
"""

from dataclasses import dataclass
import csv
import time
import numpy as np

from .channel import ScenarioConfig, drop_topology, realize_channels, pathloss_db
from .signaling import build_cdf_table, run_signaling_slot
from .tssolver import TSProblem, subgradient_solve, recover_primal
from .soa import assign_channels, soa_allocate
from .baselines import iwfa_solve, oracle_orthogonal, evaluate_concurrent, ORACLE_MAX_ASSIGNMENTS

ALGORITHMS = ("SOA", "TS-Subgradient", "IWFA", "Oracle")

CSV_COLUMNS = ("trial_id", "scenario", "num_links", "num_tones", "algorithm",
               "objective_bps", "runtime_us", "iterations", "collisions", "seed")


@dataclass
class TrialRecord:
    trial_id: int
    scenario: str
    num_links: int
    num_tones: int
    algorithm: str
    objective_bps: float
    runtime_us: float
    iterations: int
    collisions: int
    seed: int
    per_link_rates_bps: np.ndarray = None
    skipped: bool = False


@dataclass
class SlotState:
    """Outcome of one traffic slot of the distributed protocol."""

    slot_index: int
    views: list                      # per-link GainView, shared across slots
    claims: list                     # per-link list of claimed tone indices
    intended_power: np.ndarray       # (I, K) mW each link meant to transmit
    intended_rate_bps: np.ndarray    # (I,) interference-free rates at true gains
    realized_rate_bps: np.ndarray    # (I,) rates under actual concurrent transmission
    collisions: list                 # (tone, [claimant links]) with >= 2 claimants
    giveup_probability: float


def _bps_factor(cfg: ScenarioConfig) -> float:
    return cfg.tone_bandwidth_hz / np.log(2.0)


def _trial_realization(cfg: ScenarioConfig, master_seed: int, trial: int):
    pos_rng = np.random.default_rng((master_seed, trial, 1))
    positions = drop_topology(cfg, pos_rng)
    return realize_channels(cfg, positions, (master_seed, trial, 2))


def _orthogonal_objective(problem: TSProblem, power: np.ndarray, factor: float):
    """Re-score an orthogonal allocation from scratch."""
    rate = np.log1p(problem.gains * power).sum(axis=1) * factor
    return float(problem.weights @ rate), rate


def run_experiment(cfg: ScenarioConfig, algorithms=("SOA", "IWFA"), trials: int = 100,
                   master_seed=None, power_mode: str = "equal",
                   subgradient_iters: int = 2000, signaling_overhead: float = 0.0):
    """Solve `trials` independent instances with each algorithm.

    Every algorithm sees the identical realization within a trial.  Wall
    clock covers the solve call only.  An Oracle request on an instance past
    the enumeration guard yields a record marked skipped instead of a crash.
    signaling_overhead discounts all objectives by the fraction of the slot
    spent signaling.
    """
    cfg.validate()
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}, expected subset of {ALGORITHMS}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0.0 <= signaling_overhead < 1.0:
        raise ValueError("signaling_overhead must be in [0, 1)")
    if master_seed is None:
        master_seed = cfg.rng_seed

    factor = _bps_factor(cfg) * (1.0 - signaling_overhead)
    records = []
    for t in range(trials):
        realization = _trial_realization(cfg, master_seed, t)
        weights = np.ones(cfg.num_links)
        budgets = np.full(cfg.num_links, cfg.max_power_mw)
        problem = TSProblem(gains=realization.direct_gain, weights=weights, budgets=budgets)

        for name in algorithms:
            objective = 0.0
            rates = np.zeros(cfg.num_links)
            iterations = 0
            skipped = False

            t0 = time.perf_counter_ns()
            if name == "SOA":
                alloc = soa_allocate(problem, power_mode=power_mode)
                runtime_ns = time.perf_counter_ns() - t0
                objective, rates = _orthogonal_objective(problem, alloc.power, factor)
                iterations = int(alloc.share.sum())
            elif name == "TS-Subgradient":
                result = subgradient_solve(problem, max_iters=subgradient_iters)
                alloc = recover_primal(problem, result.best_multipliers)
                runtime_ns = time.perf_counter_ns() - t0
                objective, rates = _orthogonal_objective(problem, alloc.power, factor)
                iterations = result.iterations
            elif name == "IWFA":
                result = iwfa_solve(realization, budgets)
                runtime_ns = time.perf_counter_ns() - t0
                rates = evaluate_concurrent(realization, result.power) * factor
                objective = float(weights @ rates)
                iterations = result.rounds
            else:  # Oracle
                if (cfg.num_links + 1) ** cfg.num_tones > ORACLE_MAX_ASSIGNMENTS:
                    runtime_ns = time.perf_counter_ns() - t0
                    skipped = True
                else:
                    alloc, _ = oracle_orthogonal(problem)
                    runtime_ns = time.perf_counter_ns() - t0
                    objective, rates = _orthogonal_objective(problem, alloc.power, factor)
                    iterations = (cfg.num_links + 1) ** cfg.num_tones

            records.append(TrialRecord(
                trial_id=t,
                scenario=cfg.scenario,
                num_links=cfg.num_links,
                num_tones=cfg.num_tones,
                algorithm=name,
                objective_bps=objective,
                runtime_us=max(runtime_ns, 1) / 1000.0,
                iterations=iterations,
                collisions=0,
                seed=master_seed,
                per_link_rates_bps=rates,
                skipped=skipped,
            ))
    return records


def scenario_gain_samples(cfg: ScenarioConfig, rng: np.random.Generator, count: int = 2048) -> np.ndarray:
    """Draw direct-gain samples from the scenario distribution.

    Used to build the shared quantization codebook: fresh endpoint pairs and
    shadowing draws, independent of any particular realization.
    """
    u = rng.random((count, 2, 2))
    r = cfg.cell_radius_m * np.sqrt(u[..., 0])
    phi = 2.0 * np.pi * u[..., 1]
    tx = np.stack([r[:, 0] * np.cos(phi[:, 0]), r[:, 0] * np.sin(phi[:, 0])], axis=-1)
    rx = np.stack([r[:, 1] * np.cos(phi[:, 1]), r[:, 1] * np.sin(phi[:, 1])], axis=-1)
    dist = np.maximum(np.linalg.norm(tx - rx, axis=1), 1.0)
    pl = pathloss_db(cfg, dist) + rng.normal(0.0, cfg.shadow_sigma_db, size=count)
    return 10.0 ** (-pl / 10.0) / cfg.noise_power_mw


def run_distributed_slots(cfg: ScenarioConfig, num_slots: int, p_loss: float = 0.0,
                          giveup_probability: float = 0.5, signaling_levels: int = 16,
                          master_seed=None, power_mode: str = "equal"):
    """Play the slotted protocol on one topology and return per-slot states.

    Signal losses are persistent for the whole run (a blocked propagation
    path stays blocked), so every link holds a fixed decoded view.  Each
    slot, every link greedily schedules itself from its own view, excluding
    tones it has given up; tones claimed by two or more links collide and
    every collider independently abandons the tone for the rest of the run
    with giveup_probability.
    """
    cfg.validate()
    if not 0.0 <= giveup_probability <= 1.0:
        raise ValueError("giveup_probability must be in [0, 1]")
    if num_slots < 1:
        raise ValueError("num_slots must be at least 1")
    if master_seed is None:
        master_seed = cfg.rng_seed

    I, K = cfg.num_links, cfg.num_tones
    factor = _bps_factor(cfg)
    budgets = np.full(I, cfg.max_power_mw)
    weights = np.ones(I)

    realization = _trial_realization(cfg, master_seed, 0)
    table_rng = np.random.default_rng((master_seed, 0, 5))
    table = build_cdf_table(scenario_gain_samples(cfg, table_rng), signaling_levels)

    loss_rng = np.random.default_rng((master_seed, 0, 3))
    loss_mask = loss_rng.random((I, I, K)) < p_loss if p_loss > 0 else np.zeros((I, I, K), dtype=bool)
    views = run_signaling_slot(realization, table, cfg.max_power_mw, loss_mask=loss_mask)

    giveup_rng = np.random.default_rng((master_seed, 0, 4))
    given_up = [set() for _ in range(I)]
    states = []

    for slot in range(num_slots):
        claims = []
        power = np.zeros((I, K))
        for i in range(I):
            gains = views[i].effective_gains().copy()
            if given_up[i]:
                gains[i, list(given_up[i])] = 0.0   # own abandoned tones are off the table
            local = TSProblem(gains=gains, weights=weights, budgets=budgets)
            if power_mode == "equal":
                mine = assign_channels(local)[i]
                if mine:
                    power[i, mine] = budgets[i] / len(mine)
            else:
                alloc = soa_allocate(local, power_mode=power_mode)
                mine = list(np.where(alloc.power[i] > 0)[0])
                power[i] = alloc.power[i]
            claims.append(list(mine))

        counts = np.zeros(K, dtype=int)
        for mine in claims:
            counts[mine] += 1
        collisions = [(int(k), [i for i in range(I) if k in claims[i]])
                      for k in np.where(counts >= 2)[0]]

        intended = np.log1p(realization.direct_gain * power).sum(axis=1) * factor
        realized = evaluate_concurrent(realization, power) * factor

        states.append(SlotState(
            slot_index=slot,
            views=views,
            claims=claims,
            intended_power=power,
            intended_rate_bps=intended,
            realized_rate_bps=realized,
            collisions=collisions,
            giveup_probability=giveup_probability,
        ))

        for tone, group in collisions:
            for i in group:
                if giveup_rng.random() < giveup_probability:
                    given_up[i].add(tone)
    return states


def summarize(records):
    """Aggregate records into per-(algorithm, link count) rows.

    Returns a list of dicts with mean/stddev objective and mean runtime;
    when both SOA and IWFA ran at a link count, every row of that count also
    carries their throughput ratio.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for rec in records:
        if rec.skipped:
            continue
        groups.setdefault((rec.algorithm, rec.num_links), []).append(rec)

    means = {key: float(np.mean([r.objective_bps for r in recs])) for key, recs in groups.items()}
    rows = []
    for (algo, links) in sorted(groups, key=lambda k: (k[0], k[1])):
        recs = groups[(algo, links)]
        objs = np.array([r.objective_bps for r in recs])
        ratio = None
        if ("SOA", links) in means and ("IWFA", links) in means and means[("IWFA", links)] > 0:
            ratio = means[("SOA", links)] / means[("IWFA", links)]
        rows.append({
            "algorithm": algo,
            "num_links": links,
            "trials": len(recs),
            "mean_objective_bps": float(objs.mean()),
            "std_objective_bps": float(objs.std()),
            "mean_runtime_us": float(np.mean([r.runtime_us for r in recs])),
            "soa_iwfa_ratio": ratio,
        })
    return rows


def render_summary(rows) -> str:
    """Aligned text table of summarize() rows, objective in Mbit/s."""
    header = f"{'algorithm':<15}{'links':>6}{'trials':>8}{'mean Mbit/s':>13}{'std':>10}{'mean us':>12}{'SOA/IWFA':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        ratio = f"{row['soa_iwfa_ratio']:.2f}" if row["soa_iwfa_ratio"] else ""
        lines.append(f"{row['algorithm']:<15}{row['num_links']:>6}{row['trials']:>8}"
                     f"{row['mean_objective_bps'] / 1e6:>13.3f}{row['std_objective_bps'] / 1e6:>10.3f}"
                     f"{row['mean_runtime_us']:>12.1f}{ratio:>10}")
    return "\n".join(lines)


def write_records_csv(records, path):
    """Emit records with the stable column set, sorted by trial then algorithm.

    Skipped records keep their row with empty objective/runtime/iterations.
    """
    ordered = sorted(records, key=lambda r: (r.trial_id, r.num_links, r.algorithm))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in ordered:
            if r.skipped:
                writer.writerow([r.trial_id, r.scenario, r.num_links, r.num_tones,
                                 r.algorithm, "", "", "", r.collisions, r.seed])
            else:
                writer.writerow([r.trial_id, r.scenario, r.num_links, r.num_tones,
                                 r.algorithm, f"{r.objective_bps:.6f}", f"{r.runtime_us:.3f}",
                                 r.iterations, r.collisions, r.seed])
