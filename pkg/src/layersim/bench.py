"""Benchmark harness: circuit families, timing sweeps, CSV reports.

Each run first passes a correctness gate (planned output vs default
kernels within 1e-12), then times three phases per (n, batch): forward,
backward (the adjoint sweep alone), and total (full gradient). Rows go
to one CSV; the per-signature kernel choices go to a companion
crossover CSV.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import available_backends, use_backend
from .circuits import (
    Circuit,
    Layer,
    PatternKind,
    Role,
    all_qubits,
    chain_pairs,
    explicit,
    ring_pairs,
)
from .core import apply_circuit
from .errors import CapacityError, CorrectnessError
from .gates import GateKind
from .grad import backward_sweep, gradient
from .planner import Objective, Plan, TimingStats, build_plan, load_plan
from .states import zero_state

FAMILIES = ("vq", "qdi", "ibm", "ionq")

CSV_COLUMNS = (
    "family",
    "n",
    "batch",
    "phase",
    "plan_source",
    "mean_s",
    "std_s",
    "reps",
    "warmup",
    "seed",
)

CROSSOVER_COLUMNS = ("family", "n", "batch", "gate", "pattern", "role", "kernel")

CORRECTNESS_TOL = 1e-12


@dataclass(frozen=True)
class BenchConfig:
    family: str
    qubits: tuple[int, ...]
    batches: tuple[int, ...]
    blocks: int = 8
    reps: int = 10
    warmup: int = 3
    objective: Objective = Objective.FORWARD
    seed: int = 0
    out: str = "results.csv"
    plan_path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.blocks < 1:
            raise ValueError("blocks must be at least 1")
        if not self.qubits or not self.batches:
            raise ValueError("need at least one qubit count and one batch size")


def build_circuit(family: str, n: int, blocks: int = 8) -> Circuit:
    """One of the four benchmark circuit families.

    vq and qdi share the layout (initial Ry + CNOT ring, then blocks of
    Rz / Ry / CNOT ring); vq encodes inputs only in the first block's Rz
    layer, qdi in every block's. ibm and ionq use the respective native
    gate sets with one encoding Rz layer per block.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if n < 2:
        raise ValueError("benchmark families need n >= 2")
    if blocks < 1:
        raise ValueError("blocks must be at least 1")
    layers: list[Layer] = []
    if family in ("vq", "qdi"):
        layers.append(Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE))
        layers.append(Layer(GateKind.CNOT, ring_pairs()))
        for block in range(blocks):
            encode = family == "qdi" or block == 0
            role = Role.ENCODING if encode else Role.TRAINABLE
            layers.append(Layer(GateKind.RZ, all_qubits(), role=role))
            layers.append(Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE))
            layers.append(Layer(GateKind.CNOT, ring_pairs()))
    elif family == "ibm":
        for _ in range(blocks):
            layers.append(Layer(GateKind.RZ, all_qubits(), role=Role.ENCODING))
            layers.append(Layer(GateKind.SX, all_qubits()))
            layers.append(Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE))
            layers.append(Layer(GateKind.X, all_qubits()))
            layers.append(Layer(GateKind.ECR, chain_pairs()))
    else:
        for _ in range(blocks):
            layers.append(Layer(GateKind.RZ, all_qubits(), role=Role.ENCODING))
            layers.append(Layer(GateKind.GPI2, all_qubits(), role=Role.TRAINABLE))
            layers.append(Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE))
            layers.append(Layer(GateKind.GPI, all_qubits(), role=Role.TRAINABLE))
            layers.append(Layer(GateKind.RZZ, ring_pairs(), role=Role.TRAINABLE))
    return Circuit(n, layers)


def _draw_params(circuit: Circuit, batch: int, seed: int, n: int):
    rng = np.random.default_rng([seed, n, batch])
    trainable = None
    if circuit.trainable_count:
        trainable = rng.uniform(-np.pi, np.pi, circuit.trainable_count)
    encoding = None
    if circuit.encoding_count:
        encoding = rng.uniform(-np.pi, np.pi, (batch, circuit.encoding_count))
    return trainable, encoding


def _time_callable(fn, reps: int, warmup: int, timer=None) -> TimingStats:
    if timer is None:
        timer = time.perf_counter
    for _ in range(warmup):
        fn()
    samples = np.empty(reps)
    for r in range(reps):
        start = timer()
        fn()
        samples[r] = timer() - start
    return TimingStats(float(samples.mean()), float(samples.std()), reps, warmup)


def _crossover_rows(circuit: Circuit, plan: Plan, family: str, n: int, batch: int):
    seen: dict[tuple, str] = {}
    for i, layer in enumerate(circuit.layers):
        role = layer.role.value if layer.role is not None else ""
        sig = (layer.gate.value, layer.pattern.kind.value, role)
        if sig not in seen:
            seen[sig] = plan.assignments[i].value
    return [
        [family, n, batch, gate, pattern, role, kernel]
        for (gate, pattern, role), kernel in seen.items()
    ]


def crossover_path(out) -> Path:
    p = Path(out)
    suffix = p.suffix or ".csv"
    return p.with_name(p.stem + ".crossover" + suffix)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_benchmark(config: BenchConfig, timer=None) -> list[list]:
    """Run the sweep and write the report CSVs; returns the data rows.

    Capacity overflows are reported on stderr and skipped; a failed
    correctness gate aborts the whole run.
    """
    rows: list[list] = []
    cross: list[list] = []
    for n in config.qubits:
        for batch in config.batches:
            try:
                circuit = build_circuit(config.family, n, config.blocks)
                trainable, encoding = _draw_params(circuit, batch, config.seed, n)
                state = zero_state(n, batch)
                if config.plan_path is not None:
                    plan = load_plan(config.plan_path)
                    source = "file"
                else:
                    plan = build_plan(
                        circuit,
                        batch,
                        objective=config.objective,
                        timer=timer,
                        reps=config.reps,
                        warmup=config.warmup,
                        seed=config.seed,
                    )
                    source = "autotuned"
                planned = apply_circuit(circuit, trainable, encoding, state, plan)
                default = apply_circuit(circuit, trainable, encoding, state)
                gap = np.abs(planned.amplitudes - default.amplitudes).max()
                if gap > CORRECTNESS_TOL:
                    raise CorrectnessError(
                        f"planned vs default outputs differ by {gap:.3e} "
                        f"(family={config.family} n={n} batch={batch})"
                    )
            except CapacityError as exc:
                print(
                    f"skipping family={config.family} n={n} batch={batch}: {exc}",
                    file=sys.stderr,
                )
                continue

            phases = {
                "forward": lambda: apply_circuit(
                    circuit, trainable, encoding, state, plan
                ),
                "backward": lambda: backward_sweep(
                    circuit, trainable, encoding, planned, plan
                ),
                "total": lambda: gradient(
                    circuit, trainable, encoding, batch, plan
                ),
            }
            for phase, fn in phases.items():
                stats = _time_callable(fn, config.reps, config.warmup, timer)
                rows.append(
                    [
                        config.family,
                        n,
                        batch,
                        phase,
                        source,
                        stats.mean_seconds,
                        stats.std_seconds,
                        config.reps,
                        config.warmup,
                        config.seed,
                    ]
                )
            cross.extend(_crossover_rows(circuit, plan, config.family, n, batch))

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    cross.sort(key=lambda r: tuple(str(x) for x in r))
    _write_csv(config.out, CSV_COLUMNS, rows)
    _write_csv(crossover_path(config.out), CROSSOVER_COLUMNS, cross)
    return rows


def compare_backends(n: int = 8, batch: int = 4, blocks: int = 4, reps: int = 5,
                     warmup: int = 2, timer=None) -> list[list]:
    """Time the vq family on every available backend (forward and total).

    Returns rows [backend, phase, mean_s, std_s] so the compiled kernels
    can be judged against the pure-numpy fallback on this machine.
    """
    circuit = build_circuit("vq", n, blocks)
    trainable, encoding = _draw_params(circuit, batch, 0, n)
    state = zero_state(n, batch)
    rows = []
    for backend in available_backends():
        with use_backend(backend):
            fwd = _time_callable(
                lambda: apply_circuit(circuit, trainable, encoding, state),
                reps,
                warmup,
                timer,
            )
            tot = _time_callable(
                lambda: gradient(circuit, trainable, encoding, batch),
                reps,
                warmup,
                timer,
            )
        rows.append([backend, "forward", fwd.mean_seconds, fwd.std_seconds])
        rows.append([backend, "total", tot.mean_seconds, tot.std_seconds])
    return rows


_PATTERN_BUILDERS = {
    PatternKind.ALL_QUBITS.value: lambda item: all_qubits(),
    PatternKind.RING_PAIRS.value: lambda item: ring_pairs(),
    PatternKind.CHAIN_PAIRS.value: lambda item: chain_pairs(),
    PatternKind.EXPLICIT.value: lambda item: explicit(
        *[tuple(w) for w in item.get("wires", [])]
    ),
}


def parse_circuit(text: str) -> Circuit:
    """Circuit from its JSON file form: {"n": ..., "layers": [...]}.

    Each layer object needs "gate" and "pattern"; "wires" for explicit
    patterns, "role" when the gate is parametrized, "values" when the
    role is fixed.
    """
    doc = json.loads(text)
    if not isinstance(doc, dict) or "n" not in doc or "layers" not in doc:
        raise ValueError("circuit file needs top-level fields 'n' and 'layers'")
    layers = []
    for i, item in enumerate(doc["layers"]):
        try:
            gate = GateKind(item["gate"])
            builder = _PATTERN_BUILDERS[item["pattern"]]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"layer {i}: {exc}") from exc
        role = Role(item["role"]) if "role" in item else None
        values = item.get("values")
        try:
            layers.append(Layer(gate, builder(item), role=role, values=values))
        except ValueError as exc:
            raise ValueError(f"layer {i}: {exc}") from exc
    return Circuit(int(doc["n"]), layers)


def load_circuit(path) -> Circuit:
    with open(path) as f:
        return parse_circuit(f.read())


def load_params(path) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Parameter file form: {"trainable": [...], "encoding": [[...]]}."""
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError("params file must be a JSON object")
    trainable = doc.get("trainable")
    encoding = doc.get("encoding")
    if trainable is not None:
        trainable = np.asarray(trainable, dtype=np.float64)
    if encoding is not None:
        encoding = np.asarray(encoding, dtype=np.float64)
        if encoding.ndim != 2:
            raise ValueError("encoding must be a matrix (batch x inputs)")
    return trainable, encoding
