"""Variational training on the noiseless simulator.

The prediction head is the mean Pauli-Z expectation over a configurable
qubit set, trained against MSE loss with exact parameter-shift gradients and
Adam.  Training never sees the noise model; noise enters only through the
scoring stage.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .circuits import CircuitGenome
from .seeding import rng_from
from .simulator import (
    _resolve_angles,
    _Workspace,
    apply_unitary_inplace,
    batch_statevectors,
    expectation_z_batch,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 256
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    measurement_qubits: tuple[int, ...] = (0,)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not self.measurement_qubits:
            raise ValueError("measurement_qubits must be nonempty")
        object.__setattr__(self, "measurement_qubits", tuple(self.measurement_qubits))


@dataclass
class TrainReport:
    params: np.ndarray
    loss_trace: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0


def predict_batch(
    genome: CircuitGenome,
    params: Sequence[float],
    features: np.ndarray,
    measurement_qubits: Sequence[int] = (0,),
    gate_shifts: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Circuit outputs for a whole feature matrix, each in [-1, 1]."""
    amps = batch_statevectors(genome, params, np.asarray(features, dtype=np.float64), gate_shifts)
    return expectation_z_batch(amps, measurement_qubits)


def predict(
    genome: CircuitGenome,
    params: Sequence[float] = (),
    features: Sequence[float] = (),
    measurement_qubits: Sequence[int] = (0,),
) -> float:
    """Scalar prediction for one feature vector."""
    feats = np.asarray(features, dtype=np.float64)
    feat_matrix = feats.reshape(1, -1) if feats.size else None
    amps = batch_statevectors(genome, params, feat_matrix)
    return float(expectation_z_batch(amps, measurement_qubits)[0])


def mse_loss(preds: np.ndarray, targets: np.ndarray) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValueError("empty prediction vector")
    return float(np.mean((preds - targets) ** 2))


def _loss_and_grad(
    genome: CircuitGenome,
    params: np.ndarray,
    features: np.ndarray,
    targets: np.ndarray,
    measurement_qubits: Sequence[int],
) -> tuple[float, np.ndarray]:
    """Batch MSE and its exact parameter-shift gradient.

    The shift rule is applied per gate occurrence, so parameter slots shared
    by several gates still get correct gradients:
    dL/d(theta_k) = sum over gates g reading slot k of
    mean_b 2 (f_b - y_b) * (E_b(g: +pi/2) - E_b(g: -pi/2)) / 2.

    The +-pi/2 evaluations reuse the cached state just before each trainable
    gate and run both shifts in one double-width pass, which changes nothing
    about the values the rule produces, only how often the prefix is redone.
    """
    batch = features.shape[0]
    trainable_positions = genome.param_gate_indices()
    all_positions = sorted(gi for gis in trainable_positions.values() for gi in gis)
    for gi in all_positions:
        if not genome.gates[gi].is_rotation:
            raise ValueError(
                f"trainable gate {gi} ({genome.gates[gi].kind}) is not a rotation; "
                "the parameter-shift rule does not apply"
            )

    # forward pass, checkpointing the state just before each trainable gate
    n_states = 1 << genome.n_qubits
    amps = np.zeros((n_states, batch), dtype=np.complex128)
    amps[0, :] = 1.0
    ws = _Workspace(n_states, batch)
    checkpoints: dict[int, np.ndarray] = {}
    want = set(all_positions)
    for gi, gate in enumerate(genome.gates):
        if gi in want:
            checkpoints[gi] = amps.copy()
        theta = _resolve_angles(gate, params, features, 0.0) if gate.is_rotation else None
        apply_unitary_inplace(amps, gate, theta, ws)
    preds = expectation_z_batch(amps, measurement_qubits)
    residual = 2.0 * (preds - targets) / batch
    loss = float(np.mean((preds - targets) ** 2))
    grad = np.zeros(genome.n_params, dtype=np.float64)
    if genome.n_params == 0:
        return loss, grad

    # both +-pi/2 shifts ride one double-width suffix pass per occurrence
    stacked_features = np.concatenate([features, features], axis=0)
    ws2 = _Workspace(n_states, 2 * batch)
    work = np.empty((n_states, 2 * batch), dtype=np.complex128)
    half = np.pi / 2
    for slot, gate_positions in trainable_positions.items():
        for gi in gate_positions:
            gate = genome.gates[gi]
            base = float(params[gate.param_slot])
            np.copyto(work[:, :batch], checkpoints[gi])
            np.copyto(work[:, batch:], checkpoints[gi])
            theta = np.concatenate(
                [np.full(batch, base + half), np.full(batch, base - half)]
            )
            apply_unitary_inplace(work, gate, theta, ws2)
            for gj in range(gi + 1, len(genome.gates)):
                tail_gate = genome.gates[gj]
                tail_theta = (
                    _resolve_angles(tail_gate, params, stacked_features, 0.0)
                    if tail_gate.is_rotation
                    else None
                )
                apply_unitary_inplace(work, tail_gate, tail_theta, ws2)
            expect = expectation_z_batch(work, measurement_qubits)
            grad[slot] += float(residual @ ((expect[:batch] - expect[batch:]) / 2.0))
    return loss, grad


def param_shift_grad(
    genome: CircuitGenome,
    params: Sequence[float],
    features: np.ndarray,
    targets: np.ndarray,
    measurement_qubits: Sequence[int] = (0,),
) -> np.ndarray:
    """Gradient of the batch MSE with respect to every trainable parameter."""
    params = np.asarray(params, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _, grad = _loss_and_grad(genome, params, features, targets, measurement_qubits)
    return grad


def train(
    genome: CircuitGenome,
    features: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig = TrainConfig(),
) -> TrainReport:
    """Mini-batch Adam training; deterministic given the config seed.

    Parameters start uniform in [0, 2pi).  Each epoch reshuffles the training
    rows (seeded), partitions them into batches (the last one may be short)
    and applies one Adam step per batch with standard bias correction.  The
    loss trace records the per-epoch mean of pre-update batch losses.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = features.shape[0]
    if n == 0:
        raise ValueError("empty training split")
    if targets.shape[0] != n:
        raise ValueError("features/targets length mismatch")
    if targets.size and (targets.min() < -1.0 - 1e-9 or targets.max() > 1.0 + 1e-9):
        raise ValueError("training targets must lie in [-1, 1]")

    start = time.perf_counter()
    rng = rng_from(config.seed)
    params = rng.uniform(0.0, 2.0 * np.pi, genome.n_params)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    step = 0
    trace: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            rows = order[lo : lo + config.batch_size]
            loss, grad = _loss_and_grad(
                genome, params, features[rows], targets[rows], config.measurement_qubits
            )
            epoch_loss += loss * rows.shape[0]
            if genome.n_params:
                step += 1
                m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad
                v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * grad**2
                m_hat = m / (1.0 - config.adam_beta1**step)
                v_hat = v / (1.0 - config.adam_beta2**step)
                params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        trace.append(epoch_loss / n)
    return TrainReport(
        params=params,
        loss_trace=trace,
        wall_seconds=time.perf_counter() - start,
    )
