"""Circuit execution: routes each layer through its assigned kernel.

Without a plan every layer runs on the default kernel (dense matmul up
to 9 qubits, einsum beyond). With a plan, assignments are validated
against the circuit before anything executes.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, check_parameters
from .errors import PlanMismatchError
from .kernels import KernelKind, applicable_kernels, default_kernel, prepare
from .states import StateBatch


def plan_kernels(circuit: Circuit, plan) -> list[KernelKind]:
    """Per-layer kernel choices, validated against the circuit.

    ``plan`` needs ``n`` and ``assignments`` attributes; None selects the
    defaults.
    """
    if plan is None:
        return [default_kernel(layer, circuit.n) for layer in circuit.layers]
    if plan.n != circuit.n:
        raise PlanMismatchError(
            f"plan is for n={plan.n}, circuit has n={circuit.n}"
        )
    if len(plan.assignments) != len(circuit.layers):
        raise PlanMismatchError(
            f"plan has {len(plan.assignments)} assignments, circuit has "
            f"{len(circuit.layers)} layers"
        )
    out = []
    for i, (layer, kernel) in enumerate(zip(circuit.layers, plan.assignments)):
        if kernel not in applicable_kernels(layer, circuit.n):
            raise PlanMismatchError(
                f"layer {i}: kernel {kernel.value} is not applicable to a "
                f"{layer.gate.value}/{layer.pattern.kind.value} layer"
            )
        out.append(kernel)
    return out


def apply_circuit(
    circuit: Circuit,
    trainable: np.ndarray | None = None,
    encoding: np.ndarray | None = None,
    state: StateBatch | None = None,
    plan=None,
) -> StateBatch:
    """Evolve a copy of ``state`` through the circuit.

    ``trainable`` is a flat vector of the circuit's shared parameters,
    ``encoding`` a (batch, encoding_count) matrix of per-row inputs. The
    input state is left untouched.
    """
    if state is None:
        raise ValueError("apply_circuit needs an input state")
    if state.n != circuit.n:
        raise ValueError(f"state has n={state.n}, circuit has n={circuit.n}")
    trainable, encoding = check_parameters(
        circuit, trainable, encoding, state.batch
    )
    kernels = plan_kernels(circuit, plan)
    out = state.copy()
    amps = out.amplitudes
    for i, layer in enumerate(circuit.layers):
        applier = prepare(kernels[i], layer, circuit.n)
        applier.apply(amps, circuit.layer_params(i, trainable, encoding))
    return out
