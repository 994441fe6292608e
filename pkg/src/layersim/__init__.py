"""Layered state-vector circuit simulator with per-layer kernel autotuning.

States are (batch, 2**n) complex vectors (qubit 0 is the most
significant index bit). Each circuit layer can run through any of nine
gate-application kernels; the planner measures the applicable ones and
replays the fastest per layer. Gradients of sum_k <Z_k> come from an
adjoint reverse sweep.
"""

from .backend import active_backend, available_backends, use_backend
from .bench import BenchConfig, build_circuit, compare_backends, run_benchmark
from .circuits import (
    Circuit,
    Layer,
    PatternKind,
    Role,
    WirePattern,
    all_qubits,
    chain_pairs,
    explicit,
    positions,
    ring_pairs,
)
from .core import apply_circuit, plan_kernels
from .errors import CapacityError, CorrectnessError, PlanMismatchError
from .gates import GateKind, TraitFlags, GATE_TRAITS, gate_matrix
from .grad import GradResult, backward_sweep, fd_gradient, gradient
from .kernels import KernelKind, applicable_kernels, default_kernel
from .planner import (
    Objective,
    Plan,
    PlanMeasurement,
    TimingStats,
    build_plan,
    load_plan,
    plan_roundtrip,
    save_plan,
)
from .states import (
    StateBatch,
    expectation_z_sum,
    random_state,
    z_weights,
    zero_state,
)

__version__ = "0.1.0"
