"""Command line entry points: bench, plan, run, backends.

Exit codes: 0 success, 1 correctness-gate failure, 2 invalid arguments
or unreadable inputs, 3 capacity overflow.
"""

from __future__ import annotations

import argparse
import json
import sys

from .backend import active_backend
from .bench import (
    FAMILIES,
    BenchConfig,
    build_circuit,
    compare_backends,
    crossover_path,
    load_circuit,
    load_params,
    run_benchmark,
)
from .core import apply_circuit
from .errors import CapacityError, CorrectnessError, PlanMismatchError
from .planner import Objective, build_plan, load_plan, save_plan
from .states import expectation_z_sum, zero_state


def _parse_qubits(text: str) -> tuple[int, ...]:
    """'5' -> (5,); '4..7' -> (4,5,6,7); '4,6,8' -> (4,6,8)."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty qubit range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in text.split(","))


def _parse_batches(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layersim",
        description="Layered state-vector simulator benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    objectives = [o.value for o in Objective]

    bench = sub.add_parser("bench", help="run a timing sweep, write CSV reports")
    bench.add_argument("--family", required=True, choices=FAMILIES)
    bench.add_argument("--qubits", required=True, type=_parse_qubits,
                       metavar="A..B|N[,M...]")
    bench.add_argument("--batch", default=(1,), type=_parse_batches,
                       metavar="B[,B2...]")
    bench.add_argument("--blocks", type=int, default=8)
    bench.add_argument("--reps", type=int, default=10)
    bench.add_argument("--warmup", type=int, default=3)
    bench.add_argument("--objective", choices=objectives, default="forward")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True)
    bench.add_argument("--plan", default=None, help="replay a saved plan file")

    plan = sub.add_parser("plan", help="autotune one circuit and save the plan")
    plan.add_argument("--family", required=True, choices=FAMILIES)
    plan.add_argument("--qubits", required=True, type=int, metavar="N")
    plan.add_argument("--batch", required=True, type=int, metavar="B")
    plan.add_argument("--blocks", type=int, default=8)
    plan.add_argument("--reps", type=int, default=10)
    plan.add_argument("--warmup", type=int, default=3)
    plan.add_argument("--objective", choices=objectives, default="forward")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--out", required=True)

    run = sub.add_parser("run", help="evaluate a circuit file, print expectations")
    run.add_argument("--circuit", required=True)
    run.add_argument("--params", default=None)
    run.add_argument("--plan", default=None)

    backends = sub.add_parser(
        "backends", help="compare the compiled and pure-python kernels"
    )
    backends.add_argument("--qubits", type=int, default=8)
    backends.add_argument("--batch", type=int, default=4)
    backends.add_argument("--blocks", type=int, default=4)
    backends.add_argument("--reps", type=int, default=5)
    backends.add_argument("--warmup", type=int, default=2)
    return parser


def _cmd_bench(args) -> int:
    config = BenchConfig(
        family=args.family,
        qubits=tuple(args.qubits),
        batches=tuple(args.batch),
        blocks=args.blocks,
        reps=args.reps,
        warmup=args.warmup,
        objective=Objective(args.objective),
        seed=args.seed,
        out=args.out,
        plan_path=args.plan,
    )
    rows = run_benchmark(config)
    print(f"wrote {len(rows)} rows to {args.out}")
    print(f"wrote kernel choices to {crossover_path(args.out)}")
    return 0


def _cmd_plan(args) -> int:
    circuit = build_circuit(args.family, args.qubits, args.blocks)
    plan = build_plan(
        circuit,
        args.batch,
        objective=Objective(args.objective),
        reps=args.reps,
        warmup=args.warmup,
        seed=args.seed,
    )
    save_plan(plan, args.out)
    print(f"wrote plan for {args.family} n={args.qubits} batch={args.batch} "
          f"to {args.out}")
    return 0


def _cmd_run(args) -> int:
    circuit = load_circuit(args.circuit)
    trainable, encoding = (None, None)
    if args.params is not None:
        trainable, encoding = load_params(args.params)
    plan = load_plan(args.plan) if args.plan is not None else None
    batch = encoding.shape[0] if encoding is not None else 1
    state = zero_state(circuit.n, batch)
    out = apply_circuit(circuit, trainable, encoding, state, plan)
    for value in expectation_z_sum(out):
        print(value)
    return 0


def _cmd_backends(args) -> int:
    rows = compare_backends(
        n=args.qubits,
        batch=args.batch,
        blocks=args.blocks,
        reps=args.reps,
        warmup=args.warmup,
    )
    print(f"active backend: {active_backend()}")
    print(f"{'backend':<10} {'phase':<9} {'mean_s':>12} {'std_s':>12}")
    for backend, phase, mean_s, std_s in rows:
        print(f"{backend:<10} {phase:<9} {mean_s:>12.6f} {std_s:>12.6f}")
    return 0


_COMMANDS = {
    "bench": _cmd_bench,
    "plan": _cmd_plan,
    "run": _cmd_run,
    "backends": _cmd_backends,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CorrectnessError as exc:
        print(f"correctness failure: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, PlanMismatchError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
