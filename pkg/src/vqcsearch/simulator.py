"""Dense noiseless statevector simulation.

Basis ordering is little-endian throughout the package: qubit 0 is the least
significant bit of the computational-basis index, so index 1 == |0...01> means
qubit 0 is excited.  The noisy density-matrix simulator in ``noise`` follows
the same convention.

All operations are pure functions; states are treated as immutable values.
The private ``batch_statevectors`` engine evaluates one circuit over a whole
batch of feature vectors in a single vectorised pass, which is what makes
training and similarity scoring cheap at small qubit counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from .tolerances import NORM_ATOL

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .circuits import CircuitGenome, GateSpec

ROTATION_KINDS = ("RX", "RY", "RZ")
SINGLE_QUBIT_KINDS = ROTATION_KINDS + ("H", "S", "X", "Y", "Z", "I")
TWO_QUBIT_KINDS = ("CX", "CZ")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS

# Classical features in [-1, 1] enter the circuit as rotation angles
# feature * EMBED_ANGLE_SCALE, covering one full period without aliasing.
EMBED_ANGLE_SCALE = np.pi

_SQ2 = 1.0 / np.sqrt(2.0)
FIXED_1Q = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "S": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "I": np.eye(2, dtype=np.complex128),
}


@dataclass(frozen=True)
class QuantumState:
    """Normalised amplitude vector over 2**n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"amplitude vector has length {amps.shape}, expected {1 << self.n_qubits}"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 100 * NORM_ATOL:
            raise ValueError(f"state norm {norm!r} is not 1")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(n_qubits: int) -> QuantumState:
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def rotation_entries(kind: str, theta):
    """2x2 entries (u00, u01, u10, u11) of RX/RY/RZ; ``theta`` may be an array."""
    theta = np.asarray(theta, dtype=np.float64)
    half = theta / 2.0
    c = np.cos(half)
    s = np.sin(half)
    if kind == "RX":
        return c + 0j, -1j * s, -1j * s, c + 0j
    if kind == "RY":
        return c + 0j, -s + 0j, s + 0j, c + 0j
    if kind == "RZ":
        zero = np.zeros_like(c, dtype=np.complex128)
        return np.exp(-1j * half), zero, zero, np.exp(1j * half)
    raise ValueError(f"unknown rotation kind {kind!r}")


def gate_matrix(kind: str, angle: Optional[float] = None) -> np.ndarray:
    """Dense matrix of a gate (2x2 or 4x4); used by callers needing explicit
    unitaries, e.g. the brute-force oracle tests."""
    if kind in ROTATION_KINDS:
        if angle is None:
            raise ValueError(f"{kind} requires an angle")
        u00, u01, u10, u11 = rotation_entries(kind, angle)
        return np.array([[u00, u01], [u10, u11]], dtype=np.complex128)
    if angle is not None:
        raise ValueError(f"{kind} takes no angle")
    if kind in FIXED_1Q:
        return FIXED_1Q[kind]
    if kind == "CX":
        # control is the high-order qubit of the 4x4 block
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
            dtype=np.complex128,
        )
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    raise ValueError(f"unknown gate kind {kind!r}")


@lru_cache(maxsize=None)
def _cx_permutation(n_states: int, control: int, target: int) -> np.ndarray:
    """Row permutation realizing CNOT: flip the target bit where control is set."""
    idx = np.arange(n_states)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=None)
def _cz_signs(n_states: int, a: int, b: int) -> np.ndarray:
    """Column of +-1 with -1 where both qubit bits are set."""
    idx = np.arange(n_states)
    signs = np.where(((idx >> a) & 1) & ((idx >> b) & 1), -1.0, 1.0).reshape(-1, 1)
    signs.setflags(write=False)
    return signs


class _Workspace:
    """Scratch buffer reused across gate applications of one run.

    All kernels write through ``out=`` into this buffer, so a full circuit
    execution allocates exactly one scratch array.  (Fresh temporaries per
    gate would be re-mmapped by the allocator above ~128 KB and dominate the
    runtime.)
    """

    def __init__(self, n_states: int, batch: int):
        self.full = np.empty((n_states, batch), dtype=np.complex128)

    def halves(self, blocks: int, step: int, batch: int):
        n_half = blocks * step
        s1 = self.full.reshape(-1)[: n_half * batch].reshape(blocks, step, batch)
        s2 = self.full.reshape(-1)[n_half * batch : 2 * n_half * batch].reshape(blocks, step, batch)
        return s1, s2


def _apply_single(amps: np.ndarray, qubit: int, u00, u01, u10, u11, ws: _Workspace) -> None:
    """In-place single-qubit update on amplitudes of shape (N, B).

    The u entries may be scalars or length-B arrays (per-column angles)."""
    n_states, batch = amps.shape
    step = 1 << qubit
    blocks = n_states // (2 * step)
    view = amps.reshape(blocks, 2, step, batch)
    a = view[:, 0]
    b = view[:, 1]
    s1, s2 = ws.halves(blocks, step, batch)
    np.multiply(u00, a, out=s1)
    np.multiply(u01, b, out=s2)
    np.add(s1, s2, out=s1)  # new a, old rows still intact
    np.multiply(u10, a, out=s2)
    np.multiply(u11, b, out=b)
    np.add(b, s2, out=b)  # new b
    np.copyto(a, s1)


def _apply_cx(amps: np.ndarray, control: int, target: int, ws: _Workspace) -> None:
    perm = _cx_permutation(amps.shape[0], control, target)
    np.take(amps, perm, axis=0, out=ws.full)
    np.copyto(amps, ws.full)


def _apply_cz(amps: np.ndarray, a: int, b: int) -> None:
    np.multiply(amps, _cz_signs(amps.shape[0], a, b), out=amps)


def apply_unitary_inplace(amps: np.ndarray, gate: "GateSpec", theta=None,
                          ws: Optional[_Workspace] = None) -> None:
    """Apply one gate to raw (N, B) amplitudes; theta resolved by the caller."""
    if ws is None:
        ws = _Workspace(*amps.shape)
    kind = gate.kind
    if kind in ROTATION_KINDS:
        u00, u01, u10, u11 = rotation_entries(kind, theta)
        _apply_single(amps, gate.qubits[0], u00, u01, u10, u11, ws)
    elif kind == "CX":
        _apply_cx(amps, gate.qubits[0], gate.qubits[1], ws)
    elif kind == "CZ":
        _apply_cz(amps, gate.qubits[0], gate.qubits[1])
    elif kind == "I":
        pass
    else:
        u = FIXED_1Q[kind]
        _apply_single(amps, gate.qubits[0], u[0, 0], u[0, 1], u[1, 0], u[1, 1], ws)


def _check_gate_bounds(gate: "GateSpec", n_qubits: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"gate {gate.kind} addresses qubit {q} outside 0..{n_qubits - 1}")


def apply_gate(state: QuantumState, gate: "GateSpec", angle: Optional[float] = None) -> QuantumState:
    """Apply a single gate and return the new state.

    For rotation gates an angle must be available, either passed explicitly or
    carried by the gate as a fixed angle; non-rotation gates accept none.
    """
    _check_gate_bounds(gate, state.n_qubits)
    if gate.kind in ROTATION_KINDS:
        theta = angle if angle is not None else gate.angle
        if theta is None:
            raise ValueError(f"rotation {gate.kind} requires an angle")
    else:
        if angle is not None:
            raise ValueError(f"{gate.kind} takes no angle")
        theta = None
    amps = state.amplitudes.reshape(-1, 1).copy()
    apply_unitary_inplace(amps, gate, theta)
    return QuantumState(state.n_qubits, amps[:, 0])


def _resolve_angles(
    gate: "GateSpec",
    params: np.ndarray,
    features: Optional[np.ndarray],
    shift: float,
):
    """Rotation angle(s) for one gate: scalar, or (B,) for embedding gates."""
    if gate.angle is not None:
        return gate.angle + shift
    if gate.param_slot is not None:
        if gate.param_slot >= params.shape[0]:
            raise ValueError(
                f"missing parameter slot {gate.param_slot} (got {params.shape[0]} params)"
            )
        return float(params[gate.param_slot]) + shift
    if gate.feature_index is not None:
        if features is None or gate.feature_index >= features.shape[1]:
            have = 0 if features is None else features.shape[1]
            raise ValueError(
                f"missing feature index {gate.feature_index} (got {have} features)"
            )
        return features[:, gate.feature_index] * EMBED_ANGLE_SCALE + shift
    raise ValueError(f"rotation {gate.kind} has no angle source")


def batch_statevectors(
    genome: "CircuitGenome",
    params: Sequence[float],
    features: Optional[np.ndarray] = None,
    gate_shifts: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Run a genome over a batch of feature rows.

    features is a (B, F) array (or None for feature-free circuits, B = 1);
    gate_shifts is an optional per-gate additive angle offset, used by the
    parameter-shift rule.  Returns amplitudes of shape (2**n, B).
    """
    params = np.asarray(params, dtype=np.float64)
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array of shape (batch, n_features)")
        if features.size and (features.min() < -1.0 - 1e-9 or features.max() > 1.0 + 1e-9):
            raise ValueError("features must lie in [-1, 1]")
    batch = 1 if features is None else features.shape[0]
    amps = np.zeros((1 << genome.n_qubits, batch), dtype=np.complex128)
    amps[0, :] = 1.0
    ws = _Workspace(amps.shape[0], batch)
    for gi, gate in enumerate(genome.gates):
        _check_gate_bounds(gate, genome.n_qubits)
        shift = 0.0 if gate_shifts is None else float(gate_shifts[gi])
        theta = None
        if gate.kind in ROTATION_KINDS:
            theta = _resolve_angles(gate, params, features, shift)
        apply_unitary_inplace(amps, gate, theta, ws)
    return amps


def run_circuit(
    genome: "CircuitGenome",
    params: Sequence[float] = (),
    features: Sequence[float] = (),
) -> QuantumState:
    """Execute a genome from |0...0> with the given parameters and features."""
    feats = np.asarray(features, dtype=np.float64)
    feat_matrix = feats.reshape(1, -1) if feats.size else None
    amps = batch_statevectors(genome, params, feat_matrix)
    return QuantumState(genome.n_qubits, amps[:, 0])


@lru_cache(maxsize=None)
def _z_weights(n_states: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Per-basis-state weight: mean of (-1)^bit over the measured qubits."""
    idx = np.arange(n_states)
    acc = np.zeros(n_states, dtype=np.float64)
    for q in qubits:
        acc += 1.0 - 2.0 * ((idx >> q) & 1)
    acc /= len(qubits)
    acc.setflags(write=False)
    return acc


def expectation_z_batch(amps: np.ndarray, qubits: Iterable[int]) -> np.ndarray:
    """Mean single-qubit <Z> over a qubit set, per batch column."""
    qubits = tuple(sorted(set(int(q) for q in qubits)))
    n_states = amps.shape[0]
    n_qubits = n_states.bit_length() - 1
    if not qubits:
        raise ValueError("qubit set must be nonempty")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} out of range")
    weights = _z_weights(n_states, qubits)
    re, im = amps.real, amps.imag
    return np.einsum("i,ij,ij->j", weights, re, re) + np.einsum("i,ij,ij->j", weights, im, im)


def expectation_z(state: QuantumState, qubits: Iterable[int]) -> float:
    """Mean of single-qubit Pauli-Z expectations over ``qubits``."""
    return float(expectation_z_batch(state.amplitudes[:, None], qubits)[0])


def state_fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2 for pure states; symmetric in its arguments."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(
            f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}"
        )
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
