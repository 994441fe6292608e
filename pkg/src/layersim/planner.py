"""Empirical kernel selection: time every applicable kernel per layer
and assign each layer the argmin, producing a serializable Plan.

Timing follows a warmup-then-measure protocol with an injectable clock
so tests can drive selection with fake timings. Layers with the same
signature (gate, pattern kind, qubit count, batch, parameter role)
share one measurement set.
"""

from __future__ import annotations

import json
import platform
import time
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import grad as _grad
from .circuits import Circuit, Layer, Role, positions
from .gates import GATE_TRAITS
from .kernels import KernelKind, applicable_kernels, kernel_rank, prepare
from .states import random_state, z_weights

__all__ = [
    "Objective",
    "TimingStats",
    "PlanMeasurement",
    "Plan",
    "applicable_kernels",
    "machine_id",
    "time_kernel",
    "build_plan",
    "serialize_plan",
    "parse_plan",
    "save_plan",
    "load_plan",
    "plan_roundtrip",
]


class Objective(Enum):
    FORWARD = "forward"
    FORWARD_BACKWARD = "forward+backward"


@dataclass(frozen=True)
class TimingStats:
    """Mean and population std of the timed reps, in seconds.

    Real clocks give mean_seconds > 0; a fake timer may legitimately
    produce zero intervals, so only negative values are rejected.
    """

    mean_seconds: float
    std_seconds: float
    reps: int
    warmup: int

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.mean_seconds < 0 or self.std_seconds < 0:
            raise ValueError("timing statistics cannot be negative")


@dataclass(frozen=True)
class PlanMeasurement:
    layer_index: int
    kernel: KernelKind
    mean_s: float
    std_s: float
    reps: int


@dataclass(frozen=True)
class Plan:
    """Per-layer kernel assignments for one (circuit, batch, objective)."""

    machine_id: str
    n: int
    batch: int
    objective: Objective
    assignments: tuple[KernelKind, ...]
    measurements: tuple[PlanMeasurement, ...]


def machine_id() -> str:
    """Host name plus CPU model, informational only."""
    cpu = ""
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    if not cpu:
        cpu = platform.processor() or platform.machine()
    return f"{platform.node()}/{cpu}"


def time_kernel(
    kernel: KernelKind,
    layer: Layer,
    n: int,
    batch: int,
    reps: int = 10,
    warmup: int = 3,
    timer=None,
    seed: int = 0,
    objective: Objective = Objective.FORWARD,
) -> TimingStats:
    """Time one kernel on one layer: warmup runs untimed, then reps
    timed runs, each on the same pre-drawn state restored outside the
    timed region. Exactly two timer calls per timed rep.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if warmup < 0:
        raise ValueError("warmup cannot be negative")
    if timer is None:
        timer = time.perf_counter
    applier = prepare(kernel, layer, n)
    rng = np.random.default_rng(seed)
    traits = GATE_TRAITS[layer.gate]
    params = None
    if traits.param_count:
        pos = len(positions(layer, n))
        shape = (pos, traits.param_count)
        if layer.role is Role.ENCODING:
            shape = (batch,) + shape
        params = rng.uniform(-np.pi, np.pi, shape)
    base = random_state(n, batch, seed=rng).amplitudes
    buf = base.copy()
    fb = objective is Objective.FORWARD_BACKWARD
    lam_base = base * z_weights(n)[None, :] if fb else None
    lam = lam_base.copy() if fb else None
    need = traits.param_count > 0

    def run_once():
        applier.apply(buf, params)
        if fb:
            _grad.layer_backward(layer, n, applier, buf, lam, params, need)

    for _ in range(warmup):
        buf[:] = base
        if fb:
            lam[:] = lam_base
        run_once()
    samples = np.empty(reps)
    for r in range(reps):
        buf[:] = base
        if fb:
            lam[:] = lam_base
        start = timer()
        run_once()
        samples[r] = timer() - start
    return TimingStats(float(samples.mean()), float(samples.std()), reps, warmup)


def build_plan(
    circuit: Circuit,
    batch: int,
    objective: Objective = Objective.FORWARD,
    timer=None,
    reps: int = 10,
    warmup: int = 3,
    seed: int = 0,
    measure=None,
) -> Plan:
    """Measure every applicable kernel per layer signature and assign
    each layer the fastest (ties broken by kernel enum order).

    ``measure(layer, kernel) -> TimingStats`` overrides real timing so
    selection logic can be tested with injected tables.
    """
    cache: dict[tuple, tuple[KernelKind, dict]] = {}
    assignments = []
    measurements = []
    for index, layer in enumerate(circuit.layers):
        sig = (layer.gate, layer.pattern.kind, circuit.n, batch, layer.role)
        if sig not in cache:
            stats = {}
            for kern in applicable_kernels(layer, circuit.n):
                if measure is not None:
                    stats[kern] = measure(layer, kern)
                else:
                    stats[kern] = time_kernel(
                        kern,
                        layer,
                        circuit.n,
                        batch,
                        reps=reps,
                        warmup=warmup,
                        timer=timer,
                        seed=seed,
                        objective=objective,
                    )
            best = min(
                stats, key=lambda k: (stats[k].mean_seconds, kernel_rank(k))
            )
            cache[sig] = (best, stats)
        best, stats = cache[sig]
        assignments.append(best)
        for kern, st in stats.items():
            measurements.append(
                PlanMeasurement(index, kern, st.mean_seconds, st.std_seconds, st.reps)
            )
    return Plan(
        machine_id(),
        circuit.n,
        batch,
        objective,
        tuple(assignments),
        tuple(measurements),
    )


def serialize_plan(plan: Plan) -> str:
    doc = {
        "machine_id": plan.machine_id,
        "n": plan.n,
        "batch": plan.batch,
        "objective": plan.objective.value,
        "assignments": [
            {"layer_index": i, "kernel": k.value}
            for i, k in enumerate(plan.assignments)
        ],
        "measurements": [
            {
                "layer_index": m.layer_index,
                "kernel": m.kernel.value,
                "mean_s": m.mean_s,
                "std_s": m.std_s,
                "reps": m.reps,
            }
            for m in plan.measurements
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _require(obj, field, where):
    if not isinstance(obj, dict):
        raise ValueError(f"plan {where} must be an object")
    if field not in obj:
        raise ValueError(f"plan {where} is missing field {field!r}")
    return obj[field]


def parse_plan(text: str) -> Plan:
    doc = json.loads(text)
    machine = str(_require(doc, "machine_id", "document"))
    n = int(_require(doc, "n", "document"))
    batch = int(_require(doc, "batch", "document"))
    objective = Objective(_require(doc, "objective", "document"))
    pairs = []
    for i, item in enumerate(_require(doc, "assignments", "document")):
        where = f"assignments[{i}]"
        pairs.append(
            (
                int(_require(item, "layer_index", where)),
                KernelKind(_require(item, "kernel", where)),
            )
        )
    pairs.sort(key=lambda p: p[0])
    if [p[0] for p in pairs] != list(range(len(pairs))):
        raise ValueError("assignments must cover layer indices 0..L-1 exactly once")
    meas = []
    for i, item in enumerate(_require(doc, "measurements", "document")):
        where = f"measurements[{i}]"
        meas.append(
            PlanMeasurement(
                int(_require(item, "layer_index", where)),
                KernelKind(_require(item, "kernel", where)),
                float(_require(item, "mean_s", where)),
                float(_require(item, "std_s", where)),
                int(_require(item, "reps", where)),
            )
        )
    return Plan(
        machine, n, batch, objective, tuple(k for _, k in pairs), tuple(meas)
    )


def plan_roundtrip(plan: Plan) -> Plan:
    """Serialize then parse; structurally equal to the input."""
    return parse_plan(serialize_plan(plan))


def save_plan(plan: Plan, path) -> None:
    with open(path, "w") as f:
        f.write(serialize_plan(plan))


def load_plan(path) -> Plan:
    with open(path) as f:
        plan = parse_plan(f.read())
    if plan.machine_id != machine_id():
        warnings.warn(
            f"plan was built on {plan.machine_id!r}, this host is "
            f"{machine_id()!r}; timings may not transfer",
            stacklevel=2,
        )
    return plan
