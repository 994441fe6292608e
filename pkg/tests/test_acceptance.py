"""End-to-end acceptance checks.

Each test covers one release criterion and prints a single
``criterion N (<name>): PASS|FAIL|WARN`` line (visible under
``pytest -s``). Criteria 6 and 7 involve wall-clock behaviour: 7 is
advisory and never fails the suite, 6 downgrades to a warning when the
``CI`` environment variable is set because shared runners make timing
ratios unreliable.
"""

import os
import time
import warnings
from itertools import product

import numpy as np

from layersim.backend import HAVE_COMPILED, use_backend
from layersim.bench import FAMILIES, build_circuit
from layersim.circuits import (
    Circuit,
    Layer,
    Role,
    all_qubits,
    positions,
    ring_pairs,
)
from layersim.core import apply_circuit
from layersim.gates import GATE_TRAITS, GateKind, gate_matrix
from layersim.grad import fd_gradient, gradient
from layersim.kernels import (
    KernelKind,
    MultCounter,
    applicable_kernels,
    build_k_matrix,
    compose_permutation,
    diag_tensor_product,
    kernel_rank,
    prepare,
)
from layersim.oracle import layer_unitary
from layersim.planner import TimingStats, build_plan, parse_plan, serialize_plan
from layersim.states import random_state, zero_state


def report(num, name, failures):
    status = "PASS" if not failures else "FAIL"
    print(f"criterion {num} ({name}): {status}")
    assert not failures, f"criterion {num}: {failures[:8]}"


def report_soft(num, name, problems, hard):
    if not problems:
        print(f"criterion {num} ({name}): PASS")
        return
    if hard:
        print(f"criterion {num} ({name}): FAIL")
        raise AssertionError(f"criterion {num}: {problems}")
    print(f"criterion {num} ({name}): WARN")
    for p in problems:
        warnings.warn(f"criterion {num}: {p}")


def test_criterion_1_kernel_oracle_equivalence():
    """Every applicable kernel matches the dense layer unitary for every
    gate, n = 1..8, batches 1 and 4, 50 random draws, within 1e-12."""
    start = time.monotonic()
    failures = []
    draws = 50
    for gate in GateKind:
        traits = GATE_TRAITS[gate]
        pattern = all_qubits() if traits.arity == 1 else ring_pairs()
        role = Role.TRAINABLE if traits.param_count else None
        layer = Layer(gate, pattern, role=role)
        rng = np.random.default_rng(hash(gate.value) % (1 << 31))
        for n in range(traits.arity, 9):
            appliers = [prepare(k, layer, n) for k in applicable_kernels(layer, n)]
            npos = len(positions(layer, n))
            const_u = None if traits.param_count else layer_unitary(layer, n)
            for _ in range(draws):
                params = None
                u = const_u
                if traits.param_count:
                    params = rng.uniform(-np.pi, np.pi, (npos, traits.param_count))
                    u = layer_unitary(layer, n, params)
                state = random_state(n, batch=4, seed=rng)
                for batch in (1, 4):
                    amps = state.amplitudes[:batch]
                    expected = amps @ u.T
                    for applier in appliers:
                        psi = amps.copy()
                        applier.apply(psi, params)
                        gap = np.abs(psi - expected).max()
                        if gap > 1e-12:
                            failures.append(
                                (gate.value, applier.kernel.value, n, batch, gap)
                            )
    elapsed = time.monotonic() - start
    if elapsed >= 120:
        failures.append(("runtime budget exceeded", elapsed))
    report(1, "kernel-oracle equivalence", failures)


K_RZ_3 = np.array(
    [
        [+1, +1, +1],
        [+1, +1, -1],
        [+1, -1, +1],
        [+1, -1, -1],
        [-1, +1, +1],
        [-1, +1, -1],
        [-1, -1, +1],
        [-1, -1, -1],
    ],
    dtype=np.float64,
)


def test_criterion_2_printed_values():
    """Frozen small cases: the 8x3 Rz coefficient matrix, the two-qubit
    CNOT index permutation, and the diagonal build's multiplication
    count 2^{n+1} - 4."""
    failures = []
    kmat = build_k_matrix(GateKind.RZ, 3)
    if not np.array_equal(kmat.k, K_RZ_3):
        failures.append(("k_rz_3", kmat.k.tolist()))

    sigma = compose_permutation(Layer(GateKind.CNOT, ring_pairs()), 2).sigma
    if tuple(sigma) != (0, 1, 3, 2):
        failures.append(("sigma_cnot", tuple(sigma)))

    rng = np.random.default_rng(7)
    layer = Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE)
    for n in range(2, 11):
        counter = MultCounter()
        diag_tensor_product(
            layer, n, rng.uniform(-np.pi, np.pi, (n, 1)), counter=counter
        )
        if counter.mults != 2 ** (n + 1) - 4:
            failures.append(("mult_count", n, counter.mults))
    report(2, "printed-value reproduction", failures)


def hrz_effective_matrix(gate, params):
    """2x2 matrix realized by the Hadamard/Rz factorization at n=1."""
    layer = Layer(gate, all_qubits(), role=Role.TRAINABLE)
    applier = prepare(KernelKind.HRZ_EXPANSION, layer, 1)
    psi = np.ascontiguousarray(np.eye(2, dtype=np.complex128))
    applier.apply(psi, params.reshape(1, -1))
    return psi.T  # rows transform as psi' = psi @ u.T


def test_criterion_3_rotation_factorizations():
    """The Hadamard/Rz expansion reproduces each rotation gate's matrix
    to 1e-13 over 100 draws (full three-angle rotation up to a global
    phase)."""
    failures = []
    rng = np.random.default_rng(12)
    h = gate_matrix(GateKind.H)

    def rz(theta):
        return gate_matrix(GateKind.RZ, np.array([theta]))

    for _ in range(100):
        cases = {
            GateKind.RX: rng.uniform(-np.pi, np.pi, 1),
            GateKind.RY: rng.uniform(-np.pi, np.pi, 1),
            GateKind.ROT: rng.uniform(-np.pi, np.pi, 3),
            GateKind.GPI2: rng.uniform(-1.0, 1.0, 1),
        }
        composed = {
            GateKind.RX: h @ rz(cases[GateKind.RX][0]) @ h,
            GateKind.RY: rz(np.pi / 2)
            @ h
            @ rz(cases[GateKind.RY][0])
            @ h
            @ rz(-np.pi / 2),
            GateKind.ROT: rz(cases[GateKind.ROT][2] + np.pi / 2)
            @ h
            @ rz(cases[GateKind.ROT][1])
            @ h
            @ rz(cases[GateKind.ROT][0] - np.pi / 2),
            GateKind.GPI2: rz(2 * np.pi * cases[GateKind.GPI2][0])
            @ h
            @ rz(np.pi / 2)
            @ h
            @ rz(-2 * np.pi * cases[GateKind.GPI2][0]),
        }
        for gate, params in cases.items():
            target = gate_matrix(gate, params)
            for label, got in (
                ("matrix", composed[gate]),
                ("applier", hrz_effective_matrix(gate, params)),
            ):
                if gate is GateKind.ROT:
                    anchor = np.unravel_index(np.argmax(np.abs(target)), (2, 2))
                    got = got * (target[anchor] / got[anchor])
                gap = np.abs(got - target).max()
                if gap > 1e-13:
                    failures.append((gate.value, label, params.tolist(), gap))
    report(3, "rotation factorization identities", failures)


def test_criterion_4_gradient_correctness():
    """Adjoint gradients agree with central finite differences
    (h = 1e-6) on every circuit family, within 1e-6 relative error
    and a 1e-9 absolute floor."""
    start = time.monotonic()
    failures = []
    for family, n, blocks, batch in product(FAMILIES, (3, 6), (1, 3), (1, 3)):
        rng = np.random.default_rng(hash((family, n, blocks, batch)) % (1 << 31))
        c = build_circuit(family, n, blocks=blocks)
        tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
        enc = rng.uniform(-np.pi, np.pi, (batch, c.encoding_count))
        adj = gradient(c, tr, enc, batch=batch)
        fd = fd_gradient(c, tr, enc, batch=batch, h=1e-6)
        key = (family, n, blocks, batch)
        for label, a, f in (
            ("value", adj.value, fd.value),
            ("trainable", adj.grads, fd.grads),
            ("encoding", adj.encoding_grads, fd.encoding_grads),
        ):
            err = np.abs(a - f)
            bound = 1e-9 + 1e-6 * np.abs(f)
            if np.any(err > bound):
                failures.append((key, label, float(err.max())))
    elapsed = time.monotonic() - start
    if elapsed >= 120:
        failures.append(("runtime budget exceeded", elapsed))
    report(4, "adjoint gradient correctness", failures)


def test_criterion_5_planner_correctness():
    """Injected timings pick the exact argmin with rank tie-breaks, the
    plan file roundtrip is lossless, and replay matches the default
    execution path to 1e-12."""
    failures = []
    c = build_circuit("vq", 4, blocks=2)

    table = {
        (GateKind.RY, KernelKind.EINSUM): 1e-6,
        (GateKind.CNOT, KernelKind.PERMUTATION): 2e-6,
        (GateKind.RZ, KernelKind.DIAG_EINSUM): 3e-6,
    }

    def fake(layer, kernel):
        return TimingStats(table.get((layer.gate, kernel), 5e-5), 0.0, 3, 1)

    plan = build_plan(c, batch=1, measure=fake)
    want = {
        GateKind.RY: KernelKind.EINSUM,
        GateKind.CNOT: KernelKind.PERMUTATION,
        GateKind.RZ: KernelKind.DIAG_EINSUM,
    }
    for i, (layer, kernel) in enumerate(zip(c.layers, plan.assignments)):
        if kernel is not want[layer.gate]:
            failures.append(("argmin", i, kernel.value))

    tied = build_plan(c, batch=1, measure=lambda l, k: TimingStats(1e-6, 0.0, 3, 1))
    for i, (layer, kernel) in enumerate(zip(c.layers, tied.assignments)):
        lowest = min(applicable_kernels(layer, 4), key=kernel_rank)
        if kernel is not lowest:
            failures.append(("tie-break", i, kernel.value))

    rng = np.random.default_rng(31)
    noisy = build_plan(
        c,
        batch=1,
        measure=lambda l, k: TimingStats(
            float(rng.uniform(1e-7, 1e-3)), float(rng.uniform(0, 1e-6)), 10, 3
        ),
    )
    if parse_plan(serialize_plan(noisy)) != noisy:
        failures.append(("roundtrip",))

    real = build_plan(c, batch=2, reps=3, warmup=1)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (2, c.encoding_count))
    state = random_state(4, batch=2, seed=3)
    gap = np.abs(
        apply_circuit(c, tr, enc, state, real).amplitudes
        - apply_circuit(c, tr, enc, state).amplitudes
    ).max()
    if gap > 1e-12:
        failures.append(("replay", float(gap)))
    report(5, "planner correctness", failures)


def median_apply_seconds(kernel, layer, n, batch, reps=7):
    applier = prepare(kernel, layer, n)
    rng = np.random.default_rng(n)
    params = None
    if GATE_TRAITS[layer.gate].param_count:
        params = rng.uniform(-np.pi, np.pi, (n, 1))
    state = random_state(n, batch=batch, seed=n)
    buf = state.amplitudes.copy()
    for _ in range(2):
        applier.apply(buf, params)
    times = []
    for _ in range(reps):
        buf[:, :] = state.amplitudes
        t0 = time.perf_counter()
        applier.apply(buf, params)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def per_qubit_growth(kernel, layer, ns, batch):
    t_lo = median_apply_seconds(kernel, layer, ns[0], batch)
    t_hi = median_apply_seconds(kernel, layer, ns[-1], batch)
    return (t_hi / t_lo) ** (1.0 / (ns[-1] - ns[0]))


def test_criterion_6_scaling_exponents():
    """Median apply time grows per added qubit by a factor in [1.5, 3.5]
    for the diagonal tensor-product kernel (n = 12..16) and [2.5, 6.5]
    for the dense kernel (n = 8..11): exponential with base near 2 vs
    near 4."""
    problems = []
    diag_factor = per_qubit_growth(
        KernelKind.DIAG_TP,
        Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE),
        range(12, 17),
        batch=4,
    )
    full_factor = per_qubit_growth(
        KernelKind.FULL_UNITARY,
        Layer(GateKind.H, all_qubits()),
        range(8, 12),
        batch=1,
    )
    print(
        f"  growth per qubit: diag_tp {diag_factor:.2f} (want 1.5..3.5), "
        f"full_unitary {full_factor:.2f} (want 2.5..6.5)"
    )
    if not 1.5 <= diag_factor <= 3.5:
        problems.append(f"diag_tp growth {diag_factor:.2f} outside [1.5, 3.5]")
    if not 2.5 <= full_factor <= 6.5:
        problems.append(f"full_unitary growth {full_factor:.2f} outside [2.5, 6.5]")
    report_soft(6, "scaling exponents", problems, hard="CI" not in os.environ)


def test_criterion_7_kernel_crossover():
    """Advisory: a timed plan for one parametrized-diagonal layer should
    move from the dense kernel at small n to a diagonal-family kernel by
    n = 12. Reported and warned about, never failed: the dense path
    rebuilds its matrix per call here, which can sink it even at n = 6.
    """
    problems = []
    diag_family = {KernelKind.EIGENPHASE, KernelKind.DIAG_TP, KernelKind.DIAG_EINSUM}
    choices = {}
    with use_backend("python"):
        for n, reps, warmup in ((4, 7, 2), (6, 7, 2), (12, 3, 1)):
            c = Circuit(n, [Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE)])
            plan = build_plan(c, batch=1, reps=reps, warmup=warmup)
            choices[n] = plan.assignments[0]
    print(
        "  single-layer plan choices: "
        + ", ".join(f"n={n}: {k.value}" for n, k in choices.items())
        + (" (python backend; compiled available)" if HAVE_COMPILED else "")
    )
    for n in (4, 6):
        if choices[n] is not KernelKind.FULL_UNITARY:
            problems.append(
                f"n={n} picked {choices[n].value}, not full_unitary"
            )
    if choices[12] not in diag_family:
        problems.append(f"n=12 picked {choices[12].value}, not a diagonal kernel")
    report_soft(7, "kernel crossover", problems, hard=False)


def test_criterion_8_batch_scaling_report():
    """Forward time at n = 10 for batch sizes 1, 10, 100, 1000 under one
    replayed plan is reported and must be monotone non-decreasing."""
    n = 10
    c = build_circuit("vq", n, blocks=2)
    rng = np.random.default_rng(0)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    plan = build_plan(c, batch=1, reps=3, warmup=1)
    medians = []
    batches = (1, 10, 100, 1000)
    for batch in batches:
        enc = rng.uniform(-np.pi, np.pi, (batch, c.encoding_count))
        state = zero_state(n, batch)
        for _ in range(2):
            apply_circuit(c, tr, enc, state, plan)
        times = []
        for _ in range(9):
            t0 = time.perf_counter()
            apply_circuit(c, tr, enc, state, plan)
            times.append(time.perf_counter() - t0)
        medians.append(float(np.median(times)))
    print(
        "  forward medians: "
        + ", ".join(f"B={b}: {m * 1e3:.2f}ms" for b, m in zip(batches, medians))
    )
    failures = []
    for (b0, t0), (b1, t1) in zip(
        zip(batches, medians), zip(batches[1:], medians[1:])
    ):
        if t1 < t0:
            failures.append(f"B={b1} ({t1:.2e}s) faster than B={b0} ({t0:.2e}s)")
    report(8, "batch scaling report", failures)
