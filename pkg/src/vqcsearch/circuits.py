"""Circuit genomes, device models, and device-aware candidate generation.

A genome is an ordered gate list; rotation gates carry exactly one angle
source (a fixed angle, a trainable parameter slot, or a data feature index).
Generation is purely topology-aware: two-qubit gates are placed only on
coupling edges, and the noise scoring stage is left to discriminate noisy
structures.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .seeding import rng_from
from .simulator import GATE_KINDS, ROTATION_KINDS, TWO_QUBIT_KINDS

GENOME_FORMAT_VERSION = 1

CLIFFORD_ANGLES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


class GenomeParseError(ValueError):
    """Raised when a genome record cannot be parsed; carries the line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class GateSpec:
    """One gate: kind, qubit indices, and (for rotations) an angle source."""

    kind: str
    qubits: tuple[int, ...]
    angle: Optional[float] = None
    param_slot: Optional[int] = None
    feature_index: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected_arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != expected_arity:
            raise ValueError(f"{self.kind} takes {expected_arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} qubits must be distinct, got {self.qubits}")
        sources = [s is not None for s in (self.angle, self.param_slot, self.feature_index)]
        if self.kind in ROTATION_KINDS:
            if sum(sources) != 1:
                raise ValueError(f"rotation {self.kind} needs exactly one angle source")
        elif any(sources):
            raise ValueError(f"{self.kind} carries no angle source")

    @property
    def is_rotation(self) -> bool:
        return self.kind in ROTATION_KINDS


@dataclass(frozen=True)
class CircuitGenome:
    """Ordered gate list over a fixed qubit register; the searchable unit."""

    n_qubits: int
    gates: tuple[GateSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")

    @property
    def n_params(self) -> int:
        slots = [g.param_slot for g in self.gates if g.param_slot is not None]
        return max(slots) + 1 if slots else 0

    @property
    def feature_indices(self) -> frozenset[int]:
        return frozenset(g.feature_index for g in self.gates if g.feature_index is not None)

    def param_gate_indices(self) -> dict[int, list[int]]:
        """Map param slot -> positions of the gates reading it."""
        out: dict[int, list[int]] = {}
        for i, g in enumerate(self.gates):
            if g.param_slot is not None:
                out.setdefault(g.param_slot, []).append(i)
        return out


@dataclass(frozen=True)
class DeviceModel:
    """Qubit count, coupling graph and coarse error rates of a target device."""

    n_qubits: int
    coupling_edges: tuple[tuple[int, int], ...]
    native_two_qubit: str = "CX"
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0

    def __post_init__(self) -> None:
        edges = []
        for edge in self.coupling_edges:
            a, b = int(edge[0]), int(edge[1])
            if a == b:
                raise ValueError(f"coupling edge ({a}, {b}) is a self-loop")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"coupling edge ({a}, {b}) references invalid qubits")
            edges.append((min(a, b), max(a, b)))
        object.__setattr__(self, "coupling_edges", tuple(sorted(set(edges))))
        if self.native_two_qubit not in TWO_QUBIT_KINDS:
            raise ValueError(f"native_two_qubit must be one of {TWO_QUBIT_KINDS}")
        for name in ("p1", "p2", "readout_flip"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")

    def edge_set(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.coupling_edges)

    def scaled(self, factor: float) -> "DeviceModel":
        """Same topology with all error rates multiplied by ``factor``."""
        return DeviceModel(
            n_qubits=self.n_qubits,
            coupling_edges=self.coupling_edges,
            native_two_qubit=self.native_two_qubit,
            p1=min(1.0, self.p1 * factor),
            p2=min(1.0, self.p2 * factor),
            readout_flip=min(1.0, self.readout_flip * factor),
        )


def line_device(n_qubits: int, **kwargs) -> DeviceModel:
    """Linear-chain coupling map, handy for tests and demos."""
    edges = tuple((i, i + 1) for i in range(n_qubits - 1))
    return DeviceModel(n_qubits=n_qubits, coupling_edges=edges, **kwargs)


def load_device(path) -> DeviceModel:
    """Read a device model from a JSON config file.

    Documented keys: n_qubits, edges, p1, p2, readout_flip, native_two_qubit.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return DeviceModel(
            n_qubits=int(raw["n_qubits"]),
            coupling_edges=tuple(tuple(e) for e in raw["edges"]),
            native_two_qubit=str(raw.get("native_two_qubit", "CX")),
            p1=float(raw.get("p1", 0.0)),
            p2=float(raw.get("p2", 0.0)),
            readout_flip=float(raw.get("readout_flip", 0.0)),
        )
    except KeyError as exc:
        raise ValueError(f"device config {path} missing key {exc.args[0]!r}") from exc


def save_device(device: DeviceModel, path) -> None:
    payload = {
        "n_qubits": device.n_qubits,
        "edges": [list(e) for e in device.coupling_edges],
        "native_two_qubit": device.native_two_qubit,
        "p1": device.p1,
        "p2": device.p2,
        "readout_flip": device.readout_flip,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class GeneratorConfig:
    """Candidate-generation knobs.

    The gate mixture is sampled per gate; embedding gates get their feature
    index round-robin over a seeded random permutation of 0..n_features-1, so
    a budget of at least n_features embedding gates covers every feature.
    """

    n_candidates: int = 250
    gate_budget: int = 160
    embed_fraction: float = 0.8
    trainable_fraction: float = 0.15
    entangle_fraction: float = 0.05
    n_features: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        fractions = (self.embed_fraction, self.trainable_fraction, self.entangle_fraction)
        if any(f < 0 for f in fractions):
            raise ValueError("mixture fractions must be >= 0")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"mixture fractions sum to {sum(fractions)}, expected 1")
        if self.gate_budget < 1:
            raise ValueError("gate_budget must be >= 1")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")


def generate_candidates(device: DeviceModel, config: GeneratorConfig) -> list[CircuitGenome]:
    """Sample ``n_candidates`` random genomes compatible with the device.

    The gate budget is apportioned exactly across the mixture (largest
    remainders) and the category sequence shuffled per circuit, so a budget
    of ``n_features / embed_fraction`` guarantees full feature coverage --
    a plain iid category draw could leave features unused.  Deterministic
    given the config seed; generation is sequential so the genome list is
    reproducible across machines.
    """
    if config.entangle_fraction > 0 and not device.coupling_edges:
        raise ValueError("entangle_fraction > 0 requires a non-empty coupling graph")
    rng = rng_from(config.seed)
    fractions = (config.embed_fraction, config.trainable_fraction, config.entangle_fraction)
    counts = _apportion(config.gate_budget, fractions)
    genomes = []
    for _ in range(config.n_candidates):
        perm = [int(i) for i in rng.permutation(config.n_features)]
        feat_cursor = 0
        next_slot = 0
        categories = np.repeat(np.arange(3), counts)
        categories = categories[rng.permutation(categories.shape[0])]
        gates: list[GateSpec] = []
        for category in categories:
            if category == 0:  # embedding rotation
                kind = ROTATION_KINDS[int(rng.integers(3))]
                qubit = int(rng.integers(device.n_qubits))
                feat = perm[feat_cursor % config.n_features]
                feat_cursor += 1
                gates.append(GateSpec(kind, (qubit,), feature_index=feat))
            elif category == 1:  # trainable rotation, fresh slot
                kind = ROTATION_KINDS[int(rng.integers(3))]
                qubit = int(rng.integers(device.n_qubits))
                gates.append(GateSpec(kind, (qubit,), param_slot=next_slot))
                next_slot += 1
            else:  # entangler on a coupling edge
                a, b = device.coupling_edges[int(rng.integers(len(device.coupling_edges)))]
                if rng.integers(2):
                    a, b = b, a
                gates.append(GateSpec(device.native_two_qubit, (a, b)))
        genomes.append(CircuitGenome(n_qubits=device.n_qubits, gates=tuple(gates)))
    return genomes


def _apportion(total: int, fractions: tuple[float, float, float]) -> list[int]:
    """Split ``total`` across the mixture by largest remainders."""
    raw = [total * f for f in fractions]
    counts = [int(math.floor(r)) for r in raw]
    leftovers = sorted(range(3), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in range(total - sum(counts)):
        counts[leftovers[i % 3]] += 1
    return counts


def validate_genome(genome: CircuitGenome, device: DeviceModel) -> list[str]:
    """All contract violations of a genome against a device; empty means ok."""
    violations = []
    if genome.n_qubits != device.n_qubits:
        violations.append(
            f"genome has {genome.n_qubits} qubits, device has {device.n_qubits}"
        )
    edge_set = device.edge_set()
    slots = set()
    for i, gate in enumerate(genome.gates):
        for q in gate.qubits:
            if not 0 <= q < genome.n_qubits:
                violations.append(f"gate {i} ({gate.kind}) uses invalid qubit {q}")
        if gate.kind in TWO_QUBIT_KINDS and frozenset(gate.qubits) not in edge_set:
            violations.append(
                f"gate {i} ({gate.kind}) acts on ({gate.qubits[0]}, {gate.qubits[1]}), "
                f"not a coupling edge"
            )
        if gate.param_slot is not None:
            slots.add(gate.param_slot)
    if slots:
        expected = set(range(max(slots) + 1))
        for missing in sorted(expected - slots):
            violations.append(f"param slot {missing} unused (slots must be gap-free)")
    return violations


def save_genome(genome: CircuitGenome) -> str:
    """Serialize to the line-oriented text format (one gate per line)."""
    lines = [
        f"genome v{GENOME_FORMAT_VERSION}",
        f"qubits {genome.n_qubits}",
        f"params {genome.n_params}",
        f"gates {len(genome.gates)}",
    ]
    for gate in genome.gates:
        qubits = " ".join(f"q{q}" for q in gate.qubits)
        if gate.angle is not None:
            lines.append(f"{gate.kind} {qubits} fixed {gate.angle!r}")
        elif gate.param_slot is not None:
            lines.append(f"{gate.kind} {qubits} param {gate.param_slot}")
        elif gate.feature_index is not None:
            lines.append(f"{gate.kind} {qubits} feat {gate.feature_index}")
        else:
            lines.append(f"{gate.kind} {qubits}")
    return "\n".join(lines) + "\n"


def _parse_qubit(token: str, lineno: int) -> int:
    if not token.startswith("q") or not token[1:].isdigit():
        raise GenomeParseError(f"expected qubit token like 'q0', got {token!r}", lineno)
    return int(token[1:])


def load_genome(text: str) -> CircuitGenome:
    """Parse the text format back into a genome; inverse of ``save_genome``."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise GenomeParseError("truncated record: missing header")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "genome":
        raise GenomeParseError(f"bad header {lines[0]!r}", 1)
    if header[1] != f"v{GENOME_FORMAT_VERSION}":
        raise GenomeParseError(f"unsupported genome format version {header[1]!r}", 1)

    def header_int(lineno: int, key: str) -> int:
        parts = lines[lineno - 1].split()
        if len(parts) != 2 or parts[0] != key or not parts[1].lstrip("-").isdigit():
            raise GenomeParseError(f"expected '{key} <int>', got {lines[lineno - 1]!r}", lineno)
        return int(parts[1])

    n_qubits = header_int(2, "qubits")
    declared_params = header_int(3, "params")
    declared_gates = header_int(4, "gates")

    gate_lines = [(i + 5, ln) for i, ln in enumerate(lines[4:]) if ln.strip()]
    if len(gate_lines) != declared_gates:
        raise GenomeParseError(
            f"truncated record: header declares {declared_gates} gates, found {len(gate_lines)}"
        )
    gates = []
    for lineno, line in gate_lines:
        parts = line.split()
        kind = parts[0]
        if kind not in GATE_KINDS:
            raise GenomeParseError(f"unknown gate kind {kind!r}", lineno)
        arity = 2 if kind in TWO_QUBIT_KINDS else 1
        if len(parts) < 1 + arity:
            raise GenomeParseError(f"{kind} needs {arity} qubit token(s)", lineno)
        qubits = tuple(_parse_qubit(tok, lineno) for tok in parts[1 : 1 + arity])
        rest = parts[1 + arity :]
        angle = slot = feat = None
        if kind in ROTATION_KINDS:
            if len(rest) != 2 or rest[0] not in ("fixed", "param", "feat"):
                raise GenomeParseError(
                    f"rotation {kind} needs 'fixed <angle>' | 'param <slot>' | 'feat <index>'",
                    lineno,
                )
            tag, value = rest
            if tag == "fixed":
                try:
                    angle = float(value)
                except ValueError:
                    raise GenomeParseError(f"bad angle {value!r}", lineno) from None
            elif tag == "param":
                if not value.isdigit():
                    raise GenomeParseError(f"bad param slot {value!r}", lineno)
                slot = int(value)
            else:
                if not value.isdigit():
                    raise GenomeParseError(f"bad feature index {value!r}", lineno)
                feat = int(value)
        elif rest:
            raise GenomeParseError(f"{kind} takes no angle source", lineno)
        try:
            gates.append(GateSpec(kind, qubits, angle=angle, param_slot=slot, feature_index=feat))
        except ValueError as exc:
            raise GenomeParseError(str(exc), lineno) from None
    genome = CircuitGenome(n_qubits=n_qubits, gates=tuple(gates))
    if genome.n_params != declared_params:
        raise GenomeParseError(
            f"header declares {declared_params} params, gates use {genome.n_params}"
        )
    return genome
