"""Circuit intermediate representation: wire patterns, layers, circuits.

A circuit is a sequence of layers; each layer applies one gate kind over a
wire pattern. Parametrized layers bind their scalars to one of three
roles: fixed literals, shared trainable slots, or per-batch-row encoding
slots. Slot ranges are assigned contiguously in layer order when the
Circuit is constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gates import GateKind, gate_traits


class PatternKind(Enum):
    ALL_QUBITS = "all"
    RING_PAIRS = "ring"
    CHAIN_PAIRS = "chain"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class WirePattern:
    kind: PatternKind
    wires: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.kind is PatternKind.EXPLICIT and not self.wires:
            raise ValueError("explicit pattern needs at least one wire tuple")
        if self.kind is not PatternKind.EXPLICIT and self.wires:
            raise ValueError(f"{self.kind.value} pattern takes no explicit wires")


def all_qubits() -> WirePattern:
    return WirePattern(PatternKind.ALL_QUBITS)


def ring_pairs() -> WirePattern:
    return WirePattern(PatternKind.RING_PAIRS)


def chain_pairs() -> WirePattern:
    return WirePattern(PatternKind.CHAIN_PAIRS)


def explicit(*wires: tuple[int, ...]) -> WirePattern:
    return WirePattern(PatternKind.EXPLICIT, tuple(tuple(w) for w in wires))


class Role(Enum):
    FIXED = "fixed"
    TRAINABLE = "trainable"
    ENCODING = "encoding"


@dataclass(frozen=True)
class Layer:
    """One gate kind applied across a wire pattern.

    ``role`` is required exactly when the gate is parametrized; ``values``
    is required (shape: positions x param_count) exactly when the role is
    FIXED.
    """

    gate: GateKind
    pattern: WirePattern
    role: Role | None = None
    values: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        count = gate_traits(self.gate).param_count
        if count == 0:
            if self.role is not None or self.values is not None:
                raise ValueError(f"gate {self.gate.value} takes no parameters")
        else:
            if self.role is None:
                raise ValueError(
                    f"parametrized gate {self.gate.value} needs a role"
                )
            if (self.role is Role.FIXED) != (self.values is not None):
                raise ValueError("values are required iff role is fixed")
        if self.values is not None:
            object.__setattr__(
                self,
                "values",
                tuple(tuple(float(x) for x in row) for row in self.values),
            )


def positions(layer: Layer, n: int) -> tuple[tuple[int, ...], ...]:
    """Wire tuples the layer's gate is applied to, in application order."""
    arity = gate_traits(layer.gate).arity
    kind = layer.pattern.kind
    if kind is PatternKind.ALL_QUBITS:
        if arity != 1:
            raise ValueError("all-qubits pattern requires a single-qubit gate")
        return tuple((q,) for q in range(n))
    if kind is PatternKind.RING_PAIRS:
        if arity != 2:
            raise ValueError("ring pattern requires a two-qubit gate")
        if n < 2:
            raise ValueError("ring pattern needs at least 2 qubits")
        if n == 2:  # a 2-qubit ring degenerates to the single pair (0, 1)
            return ((0, 1),)
        return tuple((q, (q + 1) % n) for q in range(n))
    if kind is PatternKind.CHAIN_PAIRS:
        if arity != 2:
            raise ValueError("chain pattern requires a two-qubit gate")
        if n < 2:
            raise ValueError("chain pattern needs at least 2 qubits")
        return tuple((q, q + 1) for q in range(n - 1))
    for wires in layer.pattern.wires:
        if len(wires) != arity:
            raise ValueError(
                f"gate {layer.gate.value} acts on {arity} wire(s), got {wires}"
            )
        if len(set(wires)) != len(wires):
            raise ValueError(f"repeated wire in {wires}")
        if any(not 0 <= w < n for w in wires):
            raise ValueError(f"wire out of range in {wires} for n={n}")
    return layer.pattern.wires


def layer_param_count(layer: Layer, n: int) -> int:
    return len(positions(layer, n)) * gate_traits(layer.gate).param_count


@dataclass(frozen=True)
class _Slot:
    role: Role
    start: int
    count: int


class Circuit:
    """A fixed-width layered circuit with assigned parameter slots."""

    def __init__(self, n: int, layers) -> None:
        if n < 1:
            raise ValueError("circuit needs at least one qubit")
        self.n = int(n)
        self.layers: tuple[Layer, ...] = tuple(layers)
        slots: list[_Slot | None] = []
        t_next = 0
        e_next = 0
        for layer in self.layers:
            count = layer_param_count(layer, self.n)
            if count == 0 or layer.role is None:
                slots.append(None)
            elif layer.role is Role.FIXED:
                vals = np.asarray(layer.values, dtype=np.float64)
                expected = (
                    len(positions(layer, self.n)),
                    gate_traits(layer.gate).param_count,
                )
                if vals.shape != expected:
                    raise ValueError(
                        f"fixed values shape {vals.shape} != expected {expected}"
                    )
                slots.append(_Slot(Role.FIXED, 0, count))
            elif layer.role is Role.TRAINABLE:
                slots.append(_Slot(Role.TRAINABLE, t_next, count))
                t_next += count
            else:
                slots.append(_Slot(Role.ENCODING, e_next, count))
                e_next += count
        self._slots = tuple(slots)
        self.trainable_count = t_next
        self.encoding_count = e_next

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Circuit)
            and self.n == other.n
            and self.layers == other.layers
        )

    def __hash__(self) -> int:
        return hash((self.n, self.layers))

    def layer_slot(self, index: int) -> _Slot | None:
        return self._slots[index]

    def layer_params(
        self,
        index: int,
        trainable: np.ndarray | None,
        encoding: np.ndarray | None,
    ) -> np.ndarray | None:
        """Bound parameter array for one layer.

        Shape (positions, k) for fixed/trainable layers, (batch,
        positions, k) for encoding layers; None for unparametrized ones.
        """
        layer = self.layers[index]
        slot = self._slots[index]
        if slot is None:
            return None
        k = gate_traits(layer.gate).param_count
        pos = len(positions(layer, self.n))
        if slot.role is Role.FIXED:
            return np.asarray(layer.values, dtype=np.float64).reshape(pos, k)
        if slot.role is Role.TRAINABLE:
            if trainable is None:
                raise ValueError("circuit has trainable parameters but none given")
            return trainable[slot.start : slot.start + slot.count].reshape(pos, k)
        if encoding is None:
            raise ValueError("circuit has encoding parameters but none given")
        return encoding[:, slot.start : slot.start + slot.count].reshape(-1, pos, k)


def check_parameters(
    circuit: Circuit,
    trainable: np.ndarray | None,
    encoding: np.ndarray | None,
    batch: int | None = None,
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Validate and normalize parameter arrays against a circuit."""
    if circuit.trainable_count:
        if trainable is None:
            raise ValueError("circuit has trainable parameters but none given")
        trainable = np.asarray(trainable, dtype=np.float64)
        if trainable.shape != (circuit.trainable_count,):
            raise ValueError(
                f"trainable shape {trainable.shape} != ({circuit.trainable_count},)"
            )
    if circuit.encoding_count:
        if encoding is None:
            raise ValueError("circuit has encoding parameters but none given")
        encoding = np.asarray(encoding, dtype=np.float64)
        if encoding.ndim != 2 or encoding.shape[1] != circuit.encoding_count:
            raise ValueError(
                f"encoding shape {encoding.shape} != (batch, {circuit.encoding_count})"
            )
        if batch is not None and encoding.shape[0] != batch:
            raise ValueError(
                f"encoding rows {encoding.shape[0]} != batch {batch}"
            )
    return trainable, encoding
