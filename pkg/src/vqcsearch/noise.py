"""Clifford noise resilience scoring.

A genome is snapped to Clifford replicas (every rotation angle replaced by a
random multiple of pi/2), each replica is run both noiselessly and under the
device's depolarizing + readout-flip model, and the classical Bhattacharyya
fidelity between the two outcome distributions is averaged over replicas.

The noisy leg is an exact density-matrix simulation: after each one-qubit
gate the qubit is depolarized with probability p1, after each two-qubit gate
both qubits are depolarized with probability p2, and the final measurement
distribution is convolved with independent per-qubit readout bit flips.
Depolarizing here means "replace with the maximally mixed state", i.e.
rho -> (1-p) rho + p * (I/2^k tensor tr_k rho).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import CLIFFORD_ANGLES, CircuitGenome, DeviceModel, GateSpec
from .seeding import rng_from, spawn_seed
from .simulator import _Workspace, apply_unitary_inplace, batch_statevectors
from .tolerances import PROB_FLOOR, TRACE_ATOL

# Exact density evolution is quadratic in state size; past this width the
# matrices stop being "cheap" and a different backend would be needed.
MAX_DENSITY_QUBITS = 12


@dataclass(frozen=True)
class DensityState:
    """Mixed state as a dense Hermitian matrix with unit trace."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", mat)
        dim = 1 << self.n_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"density matrix shape {mat.shape}, expected {(dim, dim)}")
        if abs(float(np.trace(mat).real) - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {np.trace(mat)!r} is not 1")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-8:
            raise ValueError("density matrix is not Hermitian")

    def diagonal_probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))


def _require_fixed(genome: CircuitGenome) -> None:
    for i, gate in enumerate(genome.gates):
        if gate.param_slot is not None or gate.feature_index is not None:
            raise ValueError(
                f"gate {i} ({gate.kind}) has an unresolved "
                f"{'parameter' if gate.param_slot is not None else 'feature'} slot"
            )


def snap_to_clifford(genome: CircuitGenome, seed: int = 0) -> CircuitGenome:
    """Replace every rotation angle by a uniform draw from {0, pi/2, pi, 3pi/2}.

    Non-rotation gates pass through untouched; the result is parameter-free
    and efficiently noise-representative.  Deterministic given the seed.
    """
    rng = rng_from(seed)
    snapped = []
    for gate in genome.gates:
        if gate.is_rotation:
            angle = CLIFFORD_ANGLES[int(rng.integers(4))]
            snapped.append(GateSpec(gate.kind, gate.qubits, angle=angle))
        else:
            snapped.append(gate)
    return CircuitGenome(n_qubits=genome.n_qubits, gates=tuple(snapped))


def run_noiseless_dist(genome: CircuitGenome) -> np.ndarray:
    """Exact computational-basis probabilities of a fully fixed genome."""
    _require_fixed(genome)
    amps = batch_statevectors(genome, params=())
    return np.abs(amps[:, 0]) ** 2


def _conjugate(rho: np.ndarray, gate: GateSpec, theta=None, ws=None) -> np.ndarray:
    """U rho U^dagger via two row-side applications: (U (U rho)^H)^H."""
    work = rho.copy()
    apply_unitary_inplace(work, gate, theta, ws)
    work = np.ascontiguousarray(work.conj().T)
    apply_unitary_inplace(work, gate, theta, ws)
    return np.ascontiguousarray(work.conj().T)


def _conjugate_pauli(rho: np.ndarray, paulis: tuple[str, ...], qubits: tuple[int, ...], ws=None) -> np.ndarray:
    work = rho.copy()
    for p, q in zip(paulis, qubits):
        if p != "I":
            apply_unitary_inplace(work, GateSpec(p, (q,)), ws=ws)
    work = np.ascontiguousarray(work.conj().T)
    for p, q in zip(paulis, qubits):
        if p != "I":
            apply_unitary_inplace(work, GateSpec(p, (q,)), ws=ws)
    return np.ascontiguousarray(work.conj().T)


_PAULIS = ("I", "X", "Y", "Z")


def depolarize(rho: np.ndarray, qubits: tuple[int, ...], p: float, ws=None) -> np.ndarray:
    """Replace ``qubits`` with the maximally mixed state with probability p.

    Implemented as the full Pauli twirl on the targeted qubits:
    (1/4^k) sum_P P rho P^dagger equals I/2^k tensor tr_k(rho).
    """
    if p == 0.0:
        return rho
    k = len(qubits)
    acc = np.zeros_like(rho)
    if k == 1:
        for pauli in _PAULIS:
            acc += _conjugate_pauli(rho, (pauli,), qubits, ws)
        acc /= 4.0
    elif k == 2:
        for pa in _PAULIS:
            for pb in _PAULIS:
                acc += _conjugate_pauli(rho, (pa, pb), qubits, ws)
        acc /= 16.0
    else:
        raise ValueError("depolarize supports 1 or 2 qubits")
    return (1.0 - p) * rho + p * acc


def apply_readout_flips(probs: np.ndarray, n_qubits: int, flip: float) -> np.ndarray:
    """Convolve a basis distribution with independent per-qubit bit flips."""
    if flip == 0.0:
        return probs
    out = probs.astype(np.float64, copy=True)
    idx = np.arange(out.shape[0])
    for q in range(n_qubits):
        flipped = out[idx ^ (1 << q)]
        out = (1.0 - flip) * out + flip * flipped
    return out


def run_noisy_dist(genome: CircuitGenome, device: DeviceModel) -> np.ndarray:
    """Measurement distribution of a fixed genome under the device noise model."""
    _require_fixed(genome)
    if genome.n_qubits > MAX_DENSITY_QUBITS:
        raise ValueError(
            f"density simulation limited to {MAX_DENSITY_QUBITS} qubits, got {genome.n_qubits}"
        )
    dim = 1 << genome.n_qubits
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    ws = _Workspace(dim, dim)
    for gate in genome.gates:
        theta = gate.angle if gate.is_rotation else None
        rho = _conjugate(rho, gate, theta, ws)
        if gate.kind in ("CX", "CZ"):
            rho = depolarize(rho, gate.qubits, device.p2, ws)
        else:
            rho = depolarize(rho, (gate.qubits[0],), device.p1, ws)
    probs = np.real(np.diag(rho))
    return apply_readout_flips(probs, genome.n_qubits, device.readout_flip)


def dist_fidelity(p: np.ndarray, q: np.ndarray) -> float:
    """Classical (Bhattacharyya) fidelity (sum_i sqrt(p_i q_i))^2 in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"distribution length mismatch: {p.shape} vs {q.shape}")
    if p.min() < PROB_FLOOR or q.min() < PROB_FLOOR:
        raise ValueError("negative probabilities beyond roundoff tolerance")
    overlap = float(np.sum(np.sqrt(np.clip(p, 0.0, None) * np.clip(q, 0.0, None))))
    return overlap**2


def cnr(
    genome: CircuitGenome,
    device: DeviceModel,
    n_replicas: int = 32,
    seed: int = 0,
) -> float:
    """Clifford noise resilience: mean noiseless-vs-noisy distribution fidelity
    over Clifford replicas of the genome.

    Replica seeds derive deterministically from (seed, replica index), so the
    replica set does not depend on evaluation order.
    """
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    total = 0.0
    for r in range(n_replicas):
        replica = snap_to_clifford(genome, seed=spawn_seed(seed, "replica", r))
        ideal = run_noiseless_dist(replica)
        noisy = run_noisy_dist(replica, device)
        total += dist_fidelity(ideal, noisy)
    return total / n_replicas
