"""Variational quantum circuit search workbench.

Generates hardware-aware circuit candidates, scores them without training
via noise-resilience and representational-capacity proxies (with weighted
and regression variants), trains candidates on a noiseless simulator, and
reports rank correlation between proxy scores and test performance.
"""

from .circuits import (
    CircuitGenome,
    DeviceModel,
    GateSpec,
    GeneratorConfig,
    generate_candidates,
    line_device,
    load_device,
    load_genome,
    save_device,
    save_genome,
    validate_genome,
)
from .data import Dataset, load_dataset, make_synthetic, normalize_targets, save_dataset
from .metrics import MetricReport, classification_metrics, regression_metrics, spearman
from .noise import cnr, dist_fidelity, run_noiseless_dist, run_noisy_dist, snap_to_clifford
from .scoring import (
    ScoreCard,
    ScoringConfig,
    class_weight_matrix,
    final_score,
    median_sigma,
    reference_classification,
    reference_regression,
    repcap_classification,
    repcap_regression,
    score_circuit,
    similarity_matrix,
)
from .simulator import (
    QuantumState,
    apply_gate,
    expectation_z,
    run_circuit,
    state_fidelity,
    zero_state,
)
from .training import TrainConfig, TrainReport, mse_loss, param_shift_grad, predict, train

__version__ = "0.1.0"

__all__ = [
    "CircuitGenome",
    "Dataset",
    "DeviceModel",
    "GateSpec",
    "GeneratorConfig",
    "MetricReport",
    "QuantumState",
    "ScoreCard",
    "ScoringConfig",
    "TrainConfig",
    "TrainReport",
    "apply_gate",
    "class_weight_matrix",
    "classification_metrics",
    "cnr",
    "dist_fidelity",
    "expectation_z",
    "final_score",
    "generate_candidates",
    "line_device",
    "load_dataset",
    "load_device",
    "load_genome",
    "make_synthetic",
    "median_sigma",
    "mse_loss",
    "normalize_targets",
    "param_shift_grad",
    "predict",
    "reference_classification",
    "reference_regression",
    "regression_metrics",
    "repcap_classification",
    "repcap_regression",
    "run_circuit",
    "run_noiseless_dist",
    "run_noisy_dist",
    "save_dataset",
    "save_device",
    "save_genome",
    "score_circuit",
    "similarity_matrix",
    "snap_to_clifford",
    "spearman",
    "state_fidelity",
    "train",
    "validate_genome",
    "zero_state",
]
