"""Deterministic simulator for jointly optimizing hyperdimensional-computing
model delivery and wireless uplink resources.

Clients train lightweight hypervector classifiers on assigned tasks, compress
them, and upload them over a shared band; a fractional-programming solver
picks the task assignment, compression ratios, bandwidth and power that
minimize the cost-to-performance ratio (compression compute cost over the
rate-times-accuracy product).
"""

from .hdc import (
    AssociativeMemory,
    ItemMemory,
    bind,
    bundle,
    classify,
    cosine_similarity,
    encode_record,
    hamming_similarity,
    inject_metadata,
    permute,
    random_hv,
    train_am,
)
from .radio import ChannelState, NoiseModel, RadioAllocation, path_loss_db, rate, tx_time
from .runner import ExperimentResult, RunConfig, run, solve_baseline, write_csv
from .solver import (
    GuardExceededError,
    InfeasibleError,
    SolveResult,
    SolverOptions,
    allocate,
    assign_exact,
    assign_greedy,
    solve,
    verify_solution,
)
from .sysmodel import (
    AccuracyCurve,
    Assignment,
    ClientSpec,
    Scenario,
    aggregate,
    build_accuracy_curve,
    compress,
    compression_cost,
    cpr,
    model_size_bits,
    performance_q,
)
from .taskdata import Dataset, TaskSpec, generate, split

__version__ = "0.1.0"
