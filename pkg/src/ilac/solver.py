"""Fractional-programming solver for the cost-to-performance ratio.

Outer loop: the classic parametric update for fractional objectives — solve
``min  total_cost - lam * Q`` and refresh ``lam`` with the achieved ratio
until the parametric objective's residual vanishes.  Because each outer
round warm-starts from the incumbent and every inner move is accepted only
if it improves, the ``lam`` trace is monotone nonincreasing by construction.

Inner loop: block descent alternating between {assignment, model sizing}
with the radio allocation fixed, and {bandwidth, power} with the assignment
fixed.  Power saturates at its cap (the objective is increasing in power,
which appears nowhere in the cost), so the radio block reduces to a concave
bandwidth allocation solved by dual bisection with per-client rate floors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .radio import LN2, RadioAllocation, rate
from .sysmodel import Assignment, Scenario


class InfeasibleError(RuntimeError):
    """No point satisfies the constraints; `clients` lists the blockers."""

    def __init__(self, message: str, clients=()):
        super().__init__(message)
        self.clients = tuple(clients)


class GuardExceededError(RuntimeError):
    """Exhaustive assignment was requested on an instance above the size guard."""


@dataclass(frozen=True)
class SolverOptions:
    lambda_tol: float = 1e-6
    max_dinkelbach_iters: int = 100
    max_ao_iters: int = 20
    ratio_grid: tuple = (1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
    assignment_mode: str = "greedy"
    bisection_tol: float = 1e-9
    exact_guard_tasks: int = 4
    exact_guard_clients: int = 8

    def __post_init__(self):
        if self.lambda_tol <= 0 or self.bisection_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_dinkelbach_iters < 1 or self.max_ao_iters < 1:
            raise ValueError("iteration caps must be positive")
        grid = tuple(float(r) for r in self.ratio_grid)
        if not grid or grid[0] != 1.0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("ratio grid must start at 1.0 and increase strictly")
        if self.assignment_mode not in ("greedy", "exact"):
            raise ValueError("assignment_mode must be 'greedy' or 'exact'")
        object.__setattr__(self, "ratio_grid", grid)


@dataclass(frozen=True)
class PerClient:
    client_id: int
    task_id: int
    ratio: float
    kept_dims: int
    size_bits: float
    cost: float
    rate_bps: float
    tx_time_s: float
    bandwidth_hz: float
    power_w: float
    accuracy: float


@dataclass(frozen=True)
class SolveResult:
    assignment: Assignment
    allocation: RadioAllocation
    lambda_trace: tuple
    residual_trace: tuple
    cpr: float
    per_client: tuple
    per_task_accuracy: tuple
    feasible: bool
    outer_iters: int
    inner_iters: int

    @property
    def rate_sum_bps(self) -> float:
        return float(sum(pc.rate_bps for pc in self.per_client))

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.per_task_accuracy))

    @property
    def cost_sum(self) -> float:
        return float(sum(pc.cost for pc in self.per_client))

    def as_record(self) -> dict:
        """Flat key/value summary consumed by the CSV writer."""
        return {
            "cpr": self.cpr,
            "rate_sum_bps": self.rate_sum_bps,
            "mean_accuracy": self.mean_accuracy,
            "cost_sum": self.cost_sum,
            "outer_iters": self.outer_iters,
            "inner_iters": self.inner_iters,
            "feasible": self.feasible,
        }


# ---------------------------------------------------------------------------
# Bandwidth allocation (concave, dual bisection with rate floors)
# ---------------------------------------------------------------------------


def _rate_cb(c: float, b: float) -> float:
    """b * log2(1 + c/b) with the continuous extension at b == 0."""
    if b <= 0.0:
        return 0.0
    return b * math.log2(1.0 + c / b)


def _marginal_rate(x: float) -> float:
    """d(rate)/d(bandwidth) expressed through the per-Hz SNR x = c/b."""
    return math.log2(1.0 + x) - x / (LN2 * (1.0 + x))


def _x_for_marginal(mu: float) -> float:
    """Invert the marginal rate: unique x with _marginal_rate(x) == mu."""
    lo, hi = 0.0, 1.0
    for _ in range(400):
        if _marginal_rate(hi) >= mu:
            break
        hi *= 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _marginal_rate(mid) < mu:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _b_for_rate(c: float, target: float, b_cap: float):
    """Smallest bandwidth reaching `target` bits/s, or None if unreachable.

    Returns the upper end of the final bracket, so the floor is met rather
    than undershot by the bisection rounding.
    """
    if target <= 0.0:
        return 0.0
    if c <= 0.0 or target >= c / LN2 or _rate_cb(c, b_cap) < target:
        return None
    lo, hi = 0.0, b_cap
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _rate_cb(c, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _client_sizes(scenario: Scenario, matrix: np.ndarray, kept: np.ndarray):
    task = np.argmax(matrix, axis=0)
    classes = scenario.task_classes[task]
    s0 = classes * scenario.hv_dims * scenario.bits_per_dim
    sc = classes * np.asarray(kept, dtype=np.int64) * scenario.bits_per_dim
    return s0.astype(np.float64), sc.astype(np.float64)


def allocate(scenario: Scenario, matrix=None, kept=None, *,
             enforce_floors: bool = True,
             bisection_tol: float = 1e-9) -> RadioAllocation:
    """Power-saturated bandwidth split maximizing the rate sum.

    With floors enabled, each client must reach rate >= size/t_max; the
    remaining budget is spread so that interior clients share one marginal
    rate (equivalently, one per-Hz SNR), which is the stationarity condition
    of the concave program.
    """
    n = scenario.num_clients
    p = scenario.p_max.copy()
    c = p * scenario.gains / scenario.noise.psd_w_per_hz
    b_max = scenario.b_max_hz

    if enforce_floors:
        if matrix is None or kept is None:
            raise ValueError("floors require an assignment and kept dimensions")
        _, sc = _client_sizes(scenario, matrix, kept)
        floors = sc / scenario.t_max_s
    else:
        floors = np.zeros(n)

    b_floor = np.zeros(n)
    blocked = []
    for j in range(n):
        bf = _b_for_rate(c[j], floors[j], b_max)
        if bf is None:
            blocked.append(j)
        else:
            b_floor[j] = bf
    if blocked:
        raise InfeasibleError(
            f"clients {blocked} cannot reach their rate floors within the "
            f"bandwidth budget", clients=blocked,
        )
    if b_floor.sum() > b_max * (1.0 + 1e-12):
        order = np.argsort(-b_floor)
        cum, binding = 0.0, []
        for j in order:
            binding.append(int(j))
            cum += b_floor[j]
            if cum > b_max:
                break
        raise InfeasibleError(
            f"rate floors need {b_floor.sum():.6g} Hz but only {b_max:.6g} Hz "
            f"is available; binding clients {binding}", clients=binding,
        )

    def bandwidths(mu: float) -> np.ndarray:
        x = _x_for_marginal(mu)
        if x <= 0.0:
            return np.full(n, math.inf)
        return np.maximum(c / x, b_floor)

    mu_hi = 1.0
    for _ in range(400):
        if bandwidths(mu_hi).sum() <= b_max:
            break
        mu_hi *= 2.0
    mu_lo = mu_hi / 2.0
    for _ in range(400):
        if bandwidths(mu_lo).sum() > b_max:
            break
        mu_lo /= 2.0
    for _ in range(200):
        if mu_hi - mu_lo <= bisection_tol * mu_hi:
            break
        mid = 0.5 * (mu_lo + mu_hi)
        if bandwidths(mid).sum() <= b_max:
            mu_hi = mid
        else:
            mu_lo = mid

    b = bandwidths(mu_hi)
    slack = b_max - b.sum()
    if slack > 0.0:
        interior = b > b_floor
        share = c * interior if interior.any() else c
        b = b + slack * share / share.sum()
    return RadioAllocation(bandwidth_hz=b, power_w=p)


# ---------------------------------------------------------------------------
# Metrics and model sizing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointMetrics:
    costs: np.ndarray
    rates: np.ndarray
    phis: np.ndarray
    latencies: np.ndarray
    task_means: np.ndarray
    rate_sum: float
    q: float
    cost_sum: float

    @property
    def cpr(self) -> float:
        return self.cost_sum / self.q

    def objective(self, lam: float) -> float:
        return self.cost_sum - lam * self.q


def evaluate_point(scenario: Scenario, curves: dict, matrix: np.ndarray,
                   kept: np.ndarray, allocation: RadioAllocation) -> PointMetrics:
    """All derived quantities for a candidate (assignment, sizing, allocation)."""
    task = np.argmax(matrix, axis=0)
    _, sc = _client_sizes(scenario, matrix, kept)
    ratios = scenario.hv_dims / np.asarray(kept, dtype=np.float64)
    costs = scenario.eta_coeff * (ratios - 1.0)
    rates = np.array([
        rate(allocation.bandwidth_hz[j], allocation.power_w[j],
             scenario.gains[j], scenario.noise)
        for j in range(scenario.num_clients)
    ])
    latencies = np.where(rates > 0.0, sc / np.maximum(rates, 1e-300), math.inf)
    phis = np.array([
        curves[scenario.tasks[task[j]].task_id].value(ratios[j])
        for j in range(scenario.num_clients)
    ])
    task_means = np.array([
        phis[task == i].mean() for i in range(scenario.num_tasks)
    ])
    rate_sum = float(rates.sum())
    q = rate_sum * float(task_means.mean())
    return PointMetrics(costs=costs, rates=rates, phis=phis, latencies=latencies,
                        task_means=task_means, rate_sum=rate_sum, q=q,
                        cost_sum=float(costs.sum()))


def _ratio_options(scenario: Scenario, curve, n_classes: int, rate_bps: float,
                   e_cap: float, ratio_grid):
    """Feasible (kept, cost, phi) triples for one client/task pair."""
    d = scenario.hv_dims
    out = []
    for rho in ratio_grid:
        kept = math.ceil(d / rho)
        actual = d / kept
        cost = scenario.eta_coeff * (actual - 1.0)
        if cost > e_cap * (1.0 + 1e-12) + 1e-15:
            continue
        size = n_classes * kept * scenario.bits_per_dim
        if size > rate_bps * scenario.t_max_s * (1.0 + 1e-12):
            continue
        out.append((kept, cost, curve.value(actual)))
    return out


def _best_ratio(scenario, curve, n_classes, rate_bps, e_cap, phi_weight, ratio_grid):
    """Feasible kept count minimizing cost - phi_weight * accuracy, or None."""
    best = None
    for kept, cost, phi in _ratio_options(scenario, curve, n_classes, rate_bps,
                                          e_cap, ratio_grid):
        obj = cost - phi_weight * phi
        if best is None or obj < best[0]:
            best = (obj, kept, cost, phi)
    return best


def size_models(matrix: np.ndarray, curves: dict, lam: float, rates: np.ndarray,
                scenario: Scenario, ratio_grid):
    """Per-client grid scan for the sizing block at fixed assignment and rates.

    Q is linear in each client's accuracy once the assignment and rates are
    fixed, so scanning clients independently solves the block exactly.  A
    client with no feasible grid point gets the deepest compression and an
    infeasibility flag for the caller to resolve.
    """
    task = np.argmax(matrix, axis=0)
    members = matrix.sum(axis=1)
    rate_sum = float(np.asarray(rates).sum())
    m = scenario.num_tasks
    kept = np.empty(scenario.num_clients, dtype=np.int64)
    feasible = np.ones(scenario.num_clients, dtype=bool)
    e_max = scenario.e_max
    for j in range(scenario.num_clients):
        i = task[j]
        weight = lam * rate_sum / (m * members[i])
        curve = curves[scenario.tasks[i].task_id]
        best = _best_ratio(scenario, curve, int(scenario.task_classes[i]),
                           float(rates[j]), float(e_max[j]), weight, ratio_grid)
        if best is None:
            kept[j] = math.ceil(scenario.hv_dims / ratio_grid[-1])
            feasible[j] = False
        else:
            kept[j] = best[1]
    return kept, feasible


# ---------------------------------------------------------------------------
# Assignment search
# ---------------------------------------------------------------------------


def _matrix_from_tasks(task_of: np.ndarray, m: int) -> np.ndarray:
    n = task_of.shape[0]
    matrix = np.zeros((m, n), dtype=np.int8)
    matrix[task_of, np.arange(n)] = 1
    return matrix


def _exact_objective(scenario, curves, lam, rates, combo, ratio_grid):
    """Objective of one enumerated assignment with exact per-client sizing."""
    counts = np.bincount(combo, minlength=scenario.num_tasks)
    rate_sum = float(np.asarray(rates).sum())
    m = scenario.num_tasks
    kept = np.empty(scenario.num_clients, dtype=np.int64)
    costs = np.empty(scenario.num_clients)
    phis = np.empty(scenario.num_clients)
    for j, i in enumerate(combo):
        weight = lam * rate_sum / (m * counts[i])
        best = _best_ratio(scenario, curves[scenario.tasks[i].task_id],
                           int(scenario.task_classes[i]), float(rates[j]),
                           float(scenario.e_max[j]), weight, ratio_grid)
        if best is None:
            return None
        kept[j], costs[j], phis[j] = best[1], best[2], best[3]
    task_means = np.array([phis[np.asarray(combo) == i].mean() for i in range(m)])
    q = rate_sum * float(task_means.mean())
    return float(costs.sum()) - lam * q, kept


def assign_exact(scenario: Scenario, curves: dict, lam: float, rates,
                 ratio_grid, guard_tasks: int = 4, guard_clients: int = 8) -> Assignment:
    """Exhaustive assignment search (column choices with row-feasibility pruning).

    Exact on small instances; ties on the objective break lexicographically
    on the flattened matrix.
    """
    m, n = scenario.num_tasks, scenario.num_clients
    if m > guard_tasks or n > guard_clients:
        raise GuardExceededError(
            f"exact assignment guarded at {guard_tasks} tasks x {guard_clients} "
            f"clients; use greedy mode for {m} x {n}"
        )
    if n < 2 * m:
        raise InfeasibleError(f"{n} clients cannot give every task two of them")
    best = None
    for combo in itertools.product(range(m), repeat=n):
        counts = np.bincount(np.asarray(combo), minlength=m)
        if (counts < 2).any():
            continue
        scored = _exact_objective(scenario, curves, lam, rates, np.asarray(combo),
                                  ratio_grid)
        if scored is None:
            continue
        obj, kept = scored
        key = tuple(_matrix_from_tasks(np.asarray(combo), m).ravel())
        if best is None or obj < best[0] or (obj == best[0] and key < best[1]):
            best = (obj, key, np.asarray(combo), kept)
    if best is None:
        raise InfeasibleError("no assignment admits a feasible model sizing")
    return Assignment(matrix=_matrix_from_tasks(best[2], m), compressed_dims=best[3])


def assign_greedy(scenario: Scenario, curves: dict, lam: float, rates,
                  ratio_grid) -> Assignment:
    """Two-phase greedy assignment.

    Phase 1 walks tasks in descending class count and seeds each with the
    two clients whose best sizing gives the lowest parametric objective
    contribution.  Phase 2 places the remaining clients, in ascending index,
    on the task whose objective worsens least.  Ties break toward the lower
    client index, then the lower task index.
    """
    m, n = scenario.num_tasks, scenario.num_clients
    if n < 2 * m:
        raise InfeasibleError(f"{n} clients cannot give every task two of them")
    rates = np.asarray(rates, dtype=np.float64)
    rate_sum = float(rates.sum())
    task_of = np.full(n, -1, dtype=np.int64)
    member_phi: list[list[float]] = [[] for _ in range(m)]

    def scan(j: int, i: int, weight: float):
        return _best_ratio(scenario, curves[scenario.tasks[i].task_id],
                           int(scenario.task_classes[i]), float(rates[j]),
                           float(scenario.e_max[j]), weight, ratio_grid)

    order = sorted(range(m), key=lambda i: (-scenario.task_classes[i], i))
    for i in order:
        weight = lam * rate_sum / (m * 2)
        scored = []
        for j in range(n):
            if task_of[j] >= 0:
                continue
            best = scan(j, i, weight)
            scored.append((best[0] if best else math.inf, j,
                           best[3] if best else 0.0))
        scored.sort(key=lambda t: (t[0], t[1]))
        for score, j, phi in scored[:2]:
            task_of[j] = i
            member_phi[i].append(phi)

    for j in range(n):
        if task_of[j] >= 0:
            continue
        best_choice = None
        for i in range(m):
            n_i = len(member_phi[i])
            weight = lam * rate_sum / (m * (n_i + 1))
            best = scan(j, i, weight)
            if best is None:
                continue
            mean_i = float(np.mean(member_phi[i]))
            delta = best[2] - lam * rate_sum * (best[3] - mean_i) / (m * (n_i + 1))
            if best_choice is None or delta < best_choice[0]:
                best_choice = (delta, i, best[3])
        if best_choice is None:
            best_choice = (math.inf, 0, 0.0)
        task_of[j] = best_choice[1]
        member_phi[best_choice[1]].append(best_choice[2])

    matrix = _matrix_from_tasks(task_of, m)
    kept, _ = size_models(matrix, curves, lam, rates, scenario, ratio_grid)
    return Assignment(matrix=matrix, compressed_dims=kept)


# ---------------------------------------------------------------------------
# Block descent and the outer loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Point:
    matrix: np.ndarray
    kept: np.ndarray
    allocation: RadioAllocation
    metrics: PointMetrics


def _evaluate(scenario, curves, matrix, kept, allocation) -> _Point:
    return _Point(matrix=matrix, kept=np.asarray(kept, dtype=np.int64),
                  allocation=allocation,
                  metrics=evaluate_point(scenario, curves, matrix, kept, allocation))


def ao_inner(scenario: Scenario, curves: dict, lam: float, warm: _Point,
             opts: SolverOptions):
    """Alternate {assignment, sizing} and {bandwidth, power} from a warm start.

    Every sub-step accepts only non-worsening moves, so the recorded
    objective trace is nonincreasing.  Returns (point, objective, trace,
    sweeps).
    """
    point = warm
    obj = point.metrics.objective(lam)
    trace = [obj]
    sweeps = 0
    for _ in range(opts.max_ao_iters):
        sweeps += 1
        prev = obj
        rates = point.metrics.rates

        # Sizing at the incumbent assignment is an exact block minimum.
        kept2, feas2 = size_models(point.matrix, curves, lam, rates, scenario,
                                   opts.ratio_grid)
        if feas2.all():
            cand = _evaluate(scenario, curves, point.matrix, kept2, point.allocation)
            cobj = cand.metrics.objective(lam)
            if cobj <= obj:
                point, obj = cand, cobj
        trace.append(obj)

        # Fresh assignment candidate, accepted only on strict improvement.
        if opts.assignment_mode == "exact":
            try:
                proposal = assign_exact(scenario, curves, lam, rates,
                                        opts.ratio_grid, opts.exact_guard_tasks,
                                        opts.exact_guard_clients)
            except InfeasibleError:
                proposal = None
        else:
            proposal = assign_greedy(scenario, curves, lam, rates, opts.ratio_grid)
        if proposal is not None:
            _, feas = size_models(proposal.matrix, curves, lam, rates, scenario,
                                  opts.ratio_grid)
            if feas.all():
                cand = _evaluate(scenario, curves, proposal.matrix,
                                 proposal.compressed_dims, point.allocation)
                cobj = cand.metrics.objective(lam)
                if cobj < obj:
                    point, obj = cand, cobj
        trace.append(obj)

        # Radio block: exact concave maximization of the rate sum.
        alloc2 = allocate(scenario, point.matrix, point.kept,
                          bisection_tol=opts.bisection_tol)
        cand = _evaluate(scenario, curves, point.matrix, point.kept, alloc2)
        cobj = cand.metrics.objective(lam)
        if cobj <= obj + 1e-12 * (1.0 + abs(obj)):
            point, obj = cand, cobj
        trace.append(obj)

        if prev - obj < 1e-9 * (1.0 + abs(prev)):
            break
    return point, obj, trace, sweeps


def _initial_point(scenario: Scenario, curves: dict, opts: SolverOptions) -> _Point:
    """Feasibility-first start: greedy assignment under an equal bandwidth
    split, the least compression latency allows, then a floor-respecting
    allocation."""
    n = scenario.num_clients
    equal = RadioAllocation(bandwidth_hz=np.full(n, scenario.b_max_hz / n),
                            power_w=scenario.p_max.copy())
    rates = np.array([
        rate(equal.bandwidth_hz[j], equal.power_w[j], scenario.gains[j],
             scenario.noise)
        for j in range(n)
    ])
    assignment = assign_greedy(scenario, curves, 0.0, rates, opts.ratio_grid)
    task = assignment.task_of
    kept = np.empty(n, dtype=np.int64)
    for j in range(n):
        i = task[j]
        options = _ratio_options(scenario, curves[scenario.tasks[i].task_id],
                                 int(scenario.task_classes[i]), float(rates[j]),
                                 float(scenario.e_max[j]), opts.ratio_grid)
        if options:
            kept[j] = max(k for k, _, _ in options)  # least compression
        else:
            kept[j] = math.ceil(scenario.hv_dims / opts.ratio_grid[-1])
    alloc = allocate(scenario, assignment.matrix, kept,
                     bisection_tol=opts.bisection_tol)
    return _evaluate(scenario, curves, assignment.matrix, kept, alloc)


def solve(scenario: Scenario, curves: dict, opts: SolverOptions | None = None,
          warm_assignments=()) -> SolveResult:
    """Minimize the cost-to-performance ratio over assignment, sizing,
    bandwidth and power.

    `warm_assignments` may carry additional Assignment candidates (for
    example from baseline designs or a neighboring sweep point); each is
    re-allocated under this scenario's budget and the best starting ratio
    seeds the outer loop.
    """
    opts = opts or SolverOptions()
    missing = [t.task_id for t in scenario.tasks if t.task_id not in curves]
    if missing:
        raise ValueError(f"accuracy curves missing for tasks {missing}")

    starts = [_initial_point(scenario, curves, opts)]
    for cand in warm_assignments:
        try:
            alloc = allocate(scenario, cand.matrix, cand.compressed_dims,
                             bisection_tol=opts.bisection_tol)
        except InfeasibleError:
            continue
        starts.append(_evaluate(scenario, curves, cand.matrix,
                                cand.compressed_dims, alloc))
    incumbent = min(starts, key=lambda pt: pt.metrics.cpr)

    lam = incumbent.metrics.cpr
    trace = [lam]
    residuals = [0.0]
    inner_total = 0
    outer = 0
    for _ in range(opts.max_dinkelbach_iters):
        outer += 1
        point, obj, _, sweeps = ao_inner(scenario, curves, lam, incumbent, opts)
        inner_total += sweeps
        residual = point.metrics.objective(lam)
        residuals.append(residual)
        if residual <= 0.0:
            incumbent = point
        new_lam = incumbent.metrics.cpr
        trace.append(new_lam)
        converged = abs(residual) <= opts.lambda_tol * max(1.0, incumbent.metrics.q)
        lam = new_lam
        if converged:
            break

    met = incumbent.metrics
    task_of = np.argmax(incumbent.matrix, axis=0)
    _, sc = _client_sizes(scenario, incumbent.matrix, incumbent.kept)
    per_client = tuple(
        PerClient(
            client_id=scenario.clients[j].client_id,
            task_id=scenario.tasks[task_of[j]].task_id,
            ratio=scenario.hv_dims / float(incumbent.kept[j]),
            kept_dims=int(incumbent.kept[j]),
            size_bits=float(sc[j]),
            cost=float(met.costs[j]),
            rate_bps=float(met.rates[j]),
            tx_time_s=float(met.latencies[j]),
            bandwidth_hz=float(incumbent.allocation.bandwidth_hz[j]),
            power_w=float(incumbent.allocation.power_w[j]),
            accuracy=float(met.phis[j]),
        )
        for j in range(scenario.num_clients)
    )
    return SolveResult(
        assignment=Assignment(matrix=incumbent.matrix,
                              compressed_dims=incumbent.kept),
        allocation=incumbent.allocation,
        lambda_trace=tuple(trace),
        residual_trace=tuple(residuals),
        cpr=float(trace[-1]),
        per_client=per_client,
        per_task_accuracy=tuple(float(v) for v in met.task_means),
        feasible=True,
        outer_iters=outer,
        inner_iters=inner_total,
    )


# ---------------------------------------------------------------------------
# Independent verification
# ---------------------------------------------------------------------------


def verify_solution(scenario: Scenario, curves: dict, result: SolveResult) -> list:
    """Recompute every constraint from the decision variables; returns violations."""
    problems = []
    matrix = result.assignment.matrix
    kept = result.assignment.compressed_dims
    b = result.allocation.bandwidth_hz
    p = result.allocation.power_w

    if (matrix.sum(axis=0) != 1).any():
        problems.append("a client carries != 1 task")
    if (matrix.sum(axis=1) < 2).any():
        problems.append("a task has fewer than 2 clients")
    if (kept < 1).any() or (kept > scenario.hv_dims).any():
        problems.append("kept dimensions outside 1..D")
    if (b < 0).any() or b.sum() > scenario.b_max_hz * (1.0 + 1e-9):
        problems.append("bandwidth budget violated")
    if (p < 0).any() or (p > scenario.p_max * (1.0 + 1e-12)).any():
        problems.append("power cap violated")

    task = np.argmax(matrix, axis=0)
    classes = scenario.task_classes[task]
    d = scenario.hv_dims
    for j in range(scenario.num_clients):
        s0 = classes[j] * d * scenario.bits_per_dim
        scj = classes[j] * int(kept[j]) * scenario.bits_per_dim
        if scj > s0:
            problems.append(f"client {j}: compressed size above the model size")
        cost = scenario.eta_coeff * (d / kept[j] - 1.0)
        if cost > scenario.e_max[j] * (1.0 + 1e-9) + 1e-12:
            problems.append(f"client {j}: compression cost above its cap")
        rj = rate(float(b[j]), float(p[j]), float(scenario.gains[j]), scenario.noise)
        if rj <= 0.0:
            problems.append(f"client {j}: zero rate")
            continue
        if scj / rj > scenario.t_max_s * (1.0 + 1e-9):
            problems.append(f"client {j}: latency {scj / rj:.6g}s above t_max")

    lam = np.asarray(result.lambda_trace)
    if lam.size and (np.diff(lam) > 1e-9).any():
        problems.append("lambda trace increases")

    phis = np.array([
        curves[scenario.tasks[task[j]].task_id].value(d / float(kept[j]))
        for j in range(scenario.num_clients)
    ])
    rates = np.array([
        rate(float(b[j]), float(p[j]), float(scenario.gains[j]), scenario.noise)
        for j in range(scenario.num_clients)
    ])
    means = np.array([phis[task == i].mean() for i in range(scenario.num_tasks)])
    q = rates.sum() * means.mean()
    if q <= 0.0:
        problems.append("performance Q is not positive")
    else:
        total_cost = float(np.sum(scenario.eta_coeff * (d / kept - 1.0)))
        if abs(total_cost / q - result.cpr) > 1e-6 * max(1.0, abs(result.cpr)):
            problems.append("reported CPR disagrees with the recomputed ratio")
    return problems
