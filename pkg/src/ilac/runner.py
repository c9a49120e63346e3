"""Experiment driver: config parsing, scenario construction, curve caching,
baseline designs, bandwidth sweeps and CSV emission.

Config files are flat ``key = value`` text with ``#`` comments; every key can
also be overridden on the command line with ``--set key=value``.  A single
global seed drives all randomness, so the whole experiment is reproducible
byte for byte.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import solver, sysmodel
from .radio import ChannelState, NoiseModel, RadioAllocation, place_clients, rate
from .solver import InfeasibleError, SolveResult, SolverOptions
from .sysmodel import Assignment, ClientSpec, EncoderConfig, Scenario
from .taskdata import TaskSpec

MODES = ("dual", "comm_only", "learn_only")

SUMMARY_HEADER = ["mode", "b_max_hz", "cpr", "rate_sum_bps", "mean_accuracy",
                  "cost_sum", "outer_iters", "inner_iters", "feasible"]
TRACE_HEADER = ["mode", "b_max_hz", "iteration", "lambda", "objective_residual"]


@dataclass(frozen=True)
class RunConfig:
    # scenario
    n_clients: int = 12
    n_tasks: int = 5
    task_classes: tuple = (10, 20, 30, 40, 50)
    area_m: float = 100.0
    min_client_distance_m: float = 1.0
    hv_dims: int = 10_000
    bits_per_dim: int = 32
    noise_psd_dbm_per_hz: float = -134.0
    p_max_w: float = 0.2
    t_max_s: float = 0.5
    e_max: float = math.inf
    eta_coeff: float = 1.0
    binarize: bool = False
    # synthetic data
    feature_dim: int = 64
    samples_per_class: int = 50
    separation: float = 6.0
    noise_std: float = 1.0
    train_fraction: float = 0.8
    feature_scale: float = 8.0
    # accuracy curves
    curve_seeds: int = 3
    ratio_grid: tuple = (1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0,
                         12.0, 16.0, 24.0, 48.0, 96.0)
    curve_cache: str = ""
    # sweep
    b_max_sweep_hz: tuple = tuple(float(m) * 1e6 for m in range(1, 11))
    modes: tuple = MODES
    # solver
    lambda_tol: float = 1e-6
    max_dinkelbach_iters: int = 100
    max_ao_iters: int = 20
    assignment_mode: str = "greedy"
    bisection_tol: float = 1e-9
    # run
    global_seed: int = 2026

    def __post_init__(self):
        if len(self.task_classes) != self.n_tasks:
            raise ValueError("task_classes must list one class count per task")
        if self.n_clients < 2 * self.n_tasks:
            raise ValueError("n_clients must be at least twice n_tasks")
        sweep = tuple(float(b) for b in self.b_max_sweep_hz)
        if not sweep or any(b2 <= b1 for b1, b2 in zip(sweep, sweep[1:])):
            raise ValueError("sweep must be nonempty and strictly increasing")
        if any(b <= 0 for b in sweep):
            raise ValueError("sweep bandwidths must be positive")
        unknown = set(self.modes) - set(MODES)
        if unknown or not self.modes:
            raise ValueError(f"modes must be a nonempty subset of {MODES}")
        object.__setattr__(self, "b_max_sweep_hz", sweep)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "task_classes", tuple(int(k) for k in self.task_classes))
        object.__setattr__(self, "ratio_grid", tuple(float(r) for r in self.ratio_grid))

    @property
    def effective_bits_per_dim(self) -> int:
        return 1 if self.binarize else self.bits_per_dim

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            lambda_tol=self.lambda_tol,
            max_dinkelbach_iters=self.max_dinkelbach_iters,
            max_ao_iters=self.max_ao_iters,
            ratio_grid=self.ratio_grid,
            assignment_mode=self.assignment_mode,
            bisection_tol=self.bisection_tol,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            hv_dims=self.hv_dims,
            feature_scale=self.feature_scale,
            train_fraction=self.train_fraction,
            metric="hamming" if self.binarize else "cosine",
        )


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_value(name: str, text: str, kind):
    text = text.strip()
    if kind is bool:
        return _parse_bool(text)
    if kind in (int, float, str):
        return kind(text)
    if kind is tuple:
        items = [t for t in text.split(",") if t.strip()]
        return tuple(items)
    raise ValueError(f"unsupported config key {name}")


_FIELD_TYPES = {
    "task_classes": lambda s: tuple(int(v) for v in s),
    "ratio_grid": lambda s: tuple(float(v) for v in s),
    "b_max_sweep_hz": lambda s: tuple(float(v) for v in s),
    "modes": lambda s: tuple(str(v).strip() for v in s),
}


def parse_config(path: str | None = None, overrides=(), seed: int | None = None) -> RunConfig:
    """RunConfig from an optional key=value file plus --set overrides."""
    raw: dict[str, str] = {}
    if path:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, value = line.split("=", 1)
                raw[key.strip()] = value.strip()
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()

    known = {f.name: f.type for f in fields(RunConfig)}
    kwargs = {}
    for key, text in raw.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        default = getattr(RunConfig, key)
        kind = type(default) if default is not None else str
        if isinstance(default, float) and not isinstance(default, bool):
            kind = float
        value = _parse_value(key, text, tuple if isinstance(default, tuple) else kind)
        if key in _FIELD_TYPES and isinstance(value, tuple):
            value = _FIELD_TYPES[key](value)
        kwargs[key] = value
    if seed is not None:
        kwargs["global_seed"] = int(seed)
    return RunConfig(**kwargs)


def task_specs(cfg: RunConfig):
    return tuple(
        TaskSpec(task_id=i, classes=k, feature_dim=cfg.feature_dim,
                 samples_per_class=cfg.samples_per_class,
                 separation=cfg.separation, noise_std=cfg.noise_std)
        for i, k in enumerate(cfg.task_classes)
    )


def build_scenario(cfg: RunConfig, b_max_hz: float) -> Scenario:
    """Seeded scenario for one sweep point (placement depends only on the seed)."""
    positions, dist_km = place_clients(cfg.n_clients, cfg.area_m, cfg.global_seed,
                                       cfg.min_client_distance_m)
    clients = tuple(
        ClientSpec(client_id=j, position_m=tuple(positions[j]),
                   p_max_w=cfg.p_max_w, e_max=cfg.e_max)
        for j in range(cfg.n_clients)
    )
    channels = tuple(ChannelState.from_distance(j, dist_km[j])
                     for j in range(cfg.n_clients))
    return Scenario(
        tasks=task_specs(cfg), clients=clients, channels=channels,
        b_max_hz=b_max_hz, t_max_s=cfg.t_max_s, hv_dims=cfg.hv_dims,
        noise=NoiseModel(cfg.noise_psd_dbm_per_hz), eta_coeff=cfg.eta_coeff,
        bits_per_dim=cfg.effective_bits_per_dim,
    )


def build_curves(cfg: RunConfig) -> dict:
    """Accuracy curves for every task, honoring the on-disk cache if set."""
    if cfg.curve_cache and os.path.exists(cfg.curve_cache):
        curves = sysmodel.load_curves(cfg.curve_cache)
        missing = [t.task_id for t in task_specs(cfg) if t.task_id not in curves]
        if not missing:
            return curves
    encoder = cfg.encoder_config()
    seeds = [cfg.global_seed + 1000 * (k + 1) for k in range(cfg.curve_seeds)]
    curves = {
        spec.task_id: sysmodel.build_accuracy_curve(spec, cfg.ratio_grid, seeds, encoder)
        for spec in task_specs(cfg)
    }
    if cfg.curve_cache:
        sysmodel.save_curves(curves.values(), cfg.curve_cache)
    return curves


# ---------------------------------------------------------------------------
# Baseline designs
# ---------------------------------------------------------------------------


def _seeded_round_robin(scenario: Scenario, client_order) -> np.ndarray:
    """Fill every task with two clients from `client_order`, then spread the rest."""
    m, n = scenario.num_tasks, scenario.num_clients
    task_order = sorted(range(m), key=lambda i: (-scenario.task_classes[i], i))
    task_of = np.full(n, -1, dtype=np.int64)
    pool = list(client_order)
    for i in task_order:
        for _ in range(2):
            task_of[pool.pop(0)] = i
    counts = [int((task_of == i).sum()) for i in range(m)]
    for j in sorted(pool):
        i = min(range(m), key=lambda i: (counts[i], i))
        task_of[j] = i
        counts[i] += 1
    matrix = np.zeros((m, n), dtype=np.int8)
    matrix[task_of, np.arange(n)] = 1
    return matrix


def _least_compression_sizing(scenario: Scenario, matrix: np.ndarray,
                              rates: np.ndarray, ratio_grid) -> np.ndarray:
    """Smallest latency-feasible grid ratio per client (ratio 1 when it fits)."""
    task = np.argmax(matrix, axis=0)
    kept = np.empty(scenario.num_clients, dtype=np.int64)
    blocked = []
    for j in range(scenario.num_clients):
        i = task[j]
        choice = None
        for rho in ratio_grid:
            k = math.ceil(scenario.hv_dims / rho)
            cost = scenario.eta_coeff * (scenario.hv_dims / k - 1.0)
            size = scenario.task_classes[i] * k * scenario.bits_per_dim
            if cost > scenario.e_max[j] * (1.0 + 1e-12):
                continue
            if size <= rates[j] * scenario.t_max_s * (1.0 + 1e-12):
                choice = k
                break
        if choice is None:
            blocked.append(j)
            choice = math.ceil(scenario.hv_dims / ratio_grid[-1])
        kept[j] = choice
    if blocked:
        raise InfeasibleError(
            f"clients {blocked} have no latency-feasible compression ratio",
            clients=blocked,
        )
    return kept


def _one_shot_result(scenario, curves, matrix, kept, allocation) -> SolveResult:
    met = solver.evaluate_point(scenario, curves, matrix, kept, allocation)
    task_of = np.argmax(matrix, axis=0)
    _, sc = solver._client_sizes(scenario, matrix, kept)
    per_client = tuple(
        solver.PerClient(
            client_id=scenario.clients[j].client_id,
            task_id=scenario.tasks[task_of[j]].task_id,
            ratio=scenario.hv_dims / float(kept[j]),
            kept_dims=int(kept[j]),
            size_bits=float(sc[j]),
            cost=float(met.costs[j]),
            rate_bps=float(met.rates[j]),
            tx_time_s=float(met.latencies[j]),
            bandwidth_hz=float(allocation.bandwidth_hz[j]),
            power_w=float(allocation.power_w[j]),
            accuracy=float(met.phis[j]),
        )
        for j in range(scenario.num_clients)
    )
    return SolveResult(
        assignment=Assignment(matrix=matrix, compressed_dims=kept),
        allocation=allocation,
        lambda_trace=(met.cpr,), residual_trace=(0.0,),
        cpr=met.cpr, per_client=per_client,
        per_task_accuracy=tuple(float(v) for v in met.task_means),
        feasible=True, outer_iters=0, inner_iters=0,
    )


def solve_baseline(mode: str, scenario: Scenario, curves: dict,
                   opts: SolverOptions) -> SolveResult:
    """Single-objective designs evaluated on the shared CPR metric.

    ``comm_only`` maximizes the rate sum (unfloored bandwidth split, highest
    rates first in the assignment, only as much compression as latency
    forces).  ``learn_only`` maximizes the mean accuracy (equal bandwidth
    split, accuracy-greedy assignment, ratio 1 wherever latency allows).
    """
    n = scenario.num_clients
    if mode == "comm_only":
        provisional = solver.allocate(scenario, enforce_floors=False,
                                      bisection_tol=opts.bisection_tol)
        rates0 = np.array([
            rate(provisional.bandwidth_hz[j], provisional.power_w[j],
                 scenario.gains[j], scenario.noise) for j in range(n)
        ])
        order = sorted(range(n), key=lambda j: (-rates0[j], j))
        matrix = _seeded_round_robin(scenario, order)
        # Rate-sum maximization subject only to the floors any feasible point
        # must satisfy: delivering the deepest-compressed model in time.
        deepest = np.full(n, math.ceil(scenario.hv_dims / opts.ratio_grid[-1]),
                          dtype=np.int64)
        allocation = solver.allocate(scenario, matrix, deepest,
                                     bisection_tol=opts.bisection_tol)
        rates = np.array([
            rate(allocation.bandwidth_hz[j], allocation.power_w[j],
                 scenario.gains[j], scenario.noise) for j in range(n)
        ])
        kept = _least_compression_sizing(scenario, matrix, rates, opts.ratio_grid)
        return _one_shot_result(scenario, curves, matrix, kept, allocation)

    if mode == "learn_only":
        allocation = RadioAllocation(
            bandwidth_hz=np.full(n, scenario.b_max_hz / n),
            power_w=scenario.p_max.copy(),
        )
        rates = np.array([
            rate(allocation.bandwidth_hz[j], allocation.power_w[j],
                 scenario.gains[j], scenario.noise) for j in range(n)
        ])

        def best_phi(j, i):
            choices = solver._ratio_options(
                scenario, curves[scenario.tasks[i].task_id],
                int(scenario.task_classes[i]), float(rates[j]),
                float(scenario.e_max[j]), opts.ratio_grid)
            if not choices:
                return None
            kept_j = max(k for k, _, _ in choices)  # least compression
            phi = [p for k, _, p in choices if k == kept_j][0]
            return kept_j, phi

        m = scenario.num_tasks
        task_of = np.full(n, -1, dtype=np.int64)
        member_phi = [[] for _ in range(m)]
        for i in sorted(range(m), key=lambda i: (-scenario.task_classes[i], i)):
            scored = []
            for j in range(n):
                if task_of[j] >= 0:
                    continue
                got = best_phi(j, i)
                scored.append((-(got[1]) if got else math.inf, j))
            scored.sort()
            for _, j in scored[:2]:
                task_of[j] = i
                got = best_phi(j, i)
                member_phi[i].append(got[1] if got else 0.0)
        for j in range(n):
            if task_of[j] >= 0:
                continue
            best_choice = None
            for i in range(m):
                got = best_phi(j, i)
                if got is None:
                    continue
                gain = (got[1] - float(np.mean(member_phi[i]))) / (len(member_phi[i]) + 1)
                if best_choice is None or gain > best_choice[0]:
                    best_choice = (gain, i, got[1])
            if best_choice is None:
                best_choice = (-math.inf, 0, 0.0)
            task_of[j] = best_choice[1]
            member_phi[best_choice[1]].append(best_choice[2])
        matrix = np.zeros((m, n), dtype=np.int8)
        matrix[task_of, np.arange(n)] = 1
        kept = _least_compression_sizing(scenario, matrix, rates, opts.ratio_grid)
        return _one_shot_result(scenario, curves, matrix, kept, allocation)

    raise ValueError(f"unknown baseline mode {mode!r}")


# ---------------------------------------------------------------------------
# Experiment loop and CSV emission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    mode: str
    b_max_hz: float
    result: SolveResult | None  # None marks an infeasible sweep point

    def record(self) -> dict:
        if self.result is None:
            return {
                "mode": self.mode, "b_max_hz": self.b_max_hz,
                "cpr": math.nan, "rate_sum_bps": math.nan,
                "mean_accuracy": math.nan, "cost_sum": math.nan,
                "outer_iters": 0, "inner_iters": 0, "feasible": False,
            }
        rec = {"mode": self.mode, "b_max_hz": self.b_max_hz}
        rec.update(self.result.as_record())
        return rec


@dataclass(frozen=True)
class ExperimentResult:
    config: RunConfig
    rows: tuple  # SummaryRow in (mode, b_max) order

    @property
    def any_feasible(self) -> bool:
        return any(row.result is not None for row in self.rows)


def run(cfg: RunConfig) -> ExperimentResult:
    """Solve every requested (mode, b_max) pair on shared curves.

    The dual mode warm-starts each sweep point with both baseline solutions
    and the previous point's solution, which pins the reported orderings
    (dual never worse than a baseline, CPR falling as bandwidth grows) to
    the optimizer's accept-only-improving structure.
    """
    curves = build_curves(cfg)
    opts = cfg.solver_options()
    results: dict[tuple, SolveResult | None] = {}
    baseline_cache: dict[tuple, SolveResult | None] = {}

    def baseline(mode: str, b_max: float, scenario: Scenario):
        key = (mode, b_max)
        if key not in baseline_cache:
            try:
                baseline_cache[key] = solve_baseline(mode, scenario, curves, opts)
            except InfeasibleError:
                baseline_cache[key] = None
        return baseline_cache[key]

    for mode in cfg.modes:
        previous: SolveResult | None = None
        for b_max in cfg.b_max_sweep_hz:
            scenario = build_scenario(cfg, b_max)
            try:
                if mode == "dual":
                    warm = []
                    for base_mode in ("comm_only", "learn_only"):
                        base = baseline(base_mode, b_max, scenario)
                        if base is not None:
                            warm.append(base.assignment)
                    if previous is not None:
                        warm.append(previous.assignment)
                    result = solver.solve(scenario, curves, opts,
                                          warm_assignments=warm)
                    previous = result
                else:
                    result = baseline(mode, b_max, scenario)
                    if result is None:
                        raise InfeasibleError("baseline infeasible")
            except InfeasibleError:
                results[(mode, b_max)] = None
                continue
            results[(mode, b_max)] = result

    rows = tuple(
        SummaryRow(mode=mode, b_max_hz=b_max, result=results[(mode, b_max)])
        for mode in cfg.modes for b_max in cfg.b_max_sweep_hz
    )
    return ExperimentResult(config=cfg, rows=rows)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: ExperimentResult, out_dir: str):
    """Emit summary.csv and trace.csv; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "summary.csv")
    trace_path = os.path.join(out_dir, "trace.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in result.rows:
            rec = row.record()
            writer.writerow([_fmt(rec[col]) for col in SUMMARY_HEADER])
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in result.rows:
            if row.result is None:
                continue
            for it, (lam, res) in enumerate(zip(row.result.lambda_trace,
                                                row.result.residual_trace)):
                writer.writerow([row.mode, _fmt(row.b_max_hz), it,
                                 _fmt(float(lam)), _fmt(float(res))])
    return summary_path, trace_path


def verify_summary(path: str) -> list:
    """Re-check the emitted summary rows; returns a list of problems."""
    problems = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SUMMARY_HEADER:
            return [f"unexpected header {header}"]
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(SUMMARY_HEADER):
                problems.append(f"line {lineno}: wrong column count")
                continue
            rec = dict(zip(SUMMARY_HEADER, row))
            if rec["mode"] not in MODES:
                problems.append(f"line {lineno}: unknown mode {rec['mode']!r}")
            feasible = rec["feasible"] == "true"
            cpr = float(rec["cpr"])
            rate_sum = float(rec["rate_sum_bps"])
            acc = float(rec["mean_accuracy"])
            cost = float(rec["cost_sum"])
            if not feasible:
                continue
            if not (rate_sum > 0 and 0.0 <= acc <= 1.0 and cost >= 0.0):
                problems.append(f"line {lineno}: implausible feasible row")
                continue
            q = rate_sum * acc
            if q <= 0 or abs(cpr - cost / q) > 1e-9 * max(1.0, abs(cpr)):
                problems.append(
                    f"line {lineno}: cpr {cpr} disagrees with cost/(rate*acc)")
    return problems
