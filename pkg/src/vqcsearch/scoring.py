"""Training-free circuit scoring.

The representational-capacity score compares a circuit's pairwise
state-similarity matrix against a reference matrix built from the labels:
binary same-class/different-class for classification (optionally reweighted
by inverse class frequency to keep minority classes visible under imbalance)
and a Gaussian similarity of target values for regression.  The combined
score multiplies in the Clifford noise resilience raised to a small exponent.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .circuits import CircuitGenome, DeviceModel
from .noise import cnr
from .seeding import rng_from, spawn_seed
from .simulator import batch_statevectors

VARIANTS = ("eq1", "eq2_weighted", "regression_plain", "regression_gaussian")
CLASSIFICATION_VARIANTS = ("eq1", "eq2_weighted")
REGRESSION_VARIANTS = ("regression_plain", "regression_gaussian")

DEFAULT_ALPHA = 0.25


class DegenerateSubsetWarning(UserWarning):
    """Scoring subset contains a single class; weighting degenerates to ones."""


def similarity_matrix(
    genome: CircuitGenome,
    features: np.ndarray,
    n_param_draws: int = 4,
    seed: int = 0,
) -> np.ndarray:
    """Pairwise state fidelities |<psi_i|psi_j>|^2 over a data subset,
    averaged over seeded uniform parameter draws in [0, 2pi).

    Averaging over several draws keeps the proxy from hinging on one lucky
    initialisation.  Rows/columns follow the order of ``features``.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("features must be a nonempty (d, F) array")
    if n_param_draws < 1:
        raise ValueError("n_param_draws must be >= 1")
    rng = rng_from(seed)
    d = features.shape[0]
    acc = np.zeros((d, d), dtype=np.float64)
    for _ in range(n_param_draws):
        params = rng.uniform(0.0, 2.0 * np.pi, genome.n_params)
        states = batch_statevectors(genome, params, features)  # (2^n, d)
        overlaps = states.conj().T @ states
        acc += np.abs(overlaps) ** 2
    return acc / n_param_draws


def _check_binary_labels(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    bad = labels[(labels != 1.0) & (labels != -1.0)]
    if bad.size:
        raise ValueError(f"labels must be in {{-1, +1}}, got {bad[0]!r}")
    return labels


def reference_classification(labels: np.ndarray) -> np.ndarray:
    """Ideal similarity: 1 where labels agree, 0 where they differ."""
    labels = _check_binary_labels(labels)
    return (labels[:, None] == labels[None, :]).astype(np.float64)


def class_weight_matrix(labels: np.ndarray) -> np.ndarray:
    """Pairwise weights from inverse class frequency.

    Per-class weight w_k = d / (n_classes * count_k); the (i, j) entry is the
    geometric mean sqrt(w_{y_i} * w_{y_j}).  Balanced labels give the all-ones
    matrix, so the weighted score reduces to the unweighted one.  A
    single-class subset degenerates to ones with a warning.
    """
    labels = _check_binary_labels(labels)
    d = labels.shape[0]
    n_pos = int(np.sum(labels == 1.0))
    n_neg = d - n_pos
    if n_pos == 0 or n_neg == 0:
        warnings.warn(
            "scoring subset contains a single class; weight matrix set to ones",
            DegenerateSubsetWarning,
            stacklevel=2,
        )
        return np.ones((d, d), dtype=np.float64)
    w = {1.0: d / (2.0 * n_pos), -1.0: d / (2.0 * n_neg)}
    per_sample = np.array([w[y] for y in labels])
    return np.sqrt(per_sample[:, None] * per_sample[None, :])


def reference_regression(targets: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian similarity of target values: exp(-(y_i - y_j)^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    targets = np.asarray(targets, dtype=np.float64)
    diff = targets[:, None] - targets[None, :]
    return np.exp(-(diff**2) / (2.0 * sigma**2))


def median_sigma(targets: np.ndarray) -> float:
    """Median pairwise |y_i - y_j| over the subset; the default bandwidth."""
    targets = np.asarray(targets, dtype=np.float64)
    d = targets.shape[0]
    if d < 2:
        raise ValueError("need at least 2 targets")
    iu = np.triu_indices(d, k=1)
    dists = np.abs(targets[:, None] - targets[None, :])[iu]
    med = float(np.median(dists))
    if med == 0.0:
        raise ValueError("median pairwise target distance is zero (targets all equal?)")
    return med


def _check_square(name: str, mat: np.ndarray, d: int) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape != (d, d):
        raise ValueError(f"{name} has shape {mat.shape}, expected {(d, d)}")
    return mat


def repcap_classification(
    r_c: np.ndarray,
    r_ref: np.ndarray,
    r_w: Optional[np.ndarray] = None,
    n_classes: int = 2,
    d_c: Optional[int] = None,
) -> float:
    """1 - ||R_c - R_w * R_ref||^2 / (2 * n_classes * d_c^2), elementwise product.

    With R_w = ones this is the unweighted score; the weighted form amplifies
    minority-pair deviations so imbalanced subsets cannot be gamed by majority
    cohesion alone.
    """
    r_c = np.asarray(r_c, dtype=np.float64)
    d = d_c if d_c is not None else r_c.shape[0]
    r_c = _check_square("R_c", r_c, d)
    r_ref = _check_square("R_ref", r_ref, d)
    if r_w is None:
        r_w = np.ones((d, d))
    r_w = _check_square("R_w", r_w, d)
    deviation = r_c - r_w * r_ref
    return 1.0 - float(np.sum(deviation**2)) / (2.0 * n_classes * d * d)


def repcap_regression(
    r_c: np.ndarray,
    r_ref: np.ndarray,
    mode: str = "gaussian_weighted",
    d_c: Optional[int] = None,
) -> float:
    """Regression representational capacity against a Gaussian reference.

    plain: 1 - ||R_c - R_ref||^2 / (2 d^2), the classification formula with a
    single pseudo-class.  gaussian_weighted (default): deviations are weighted
    by the reference similarity itself,
    1 - sum_ij R_ref (R_c - R_ref)^2 / (2 sum_ij R_ref),
    so pairs with close targets dominate the score.
    """
    r_c = np.asarray(r_c, dtype=np.float64)
    d = d_c if d_c is not None else r_c.shape[0]
    r_c = _check_square("R_c", r_c, d)
    r_ref = _check_square("R_ref", r_ref, d)
    deviation = r_c - r_ref
    if mode == "plain":
        return 1.0 - float(np.sum(deviation**2)) / (2.0 * d * d)
    if mode == "gaussian_weighted":
        weight_total = float(np.sum(r_ref))
        return 1.0 - float(np.sum(r_ref * deviation**2)) / (2.0 * weight_total)
    raise ValueError(f"unknown regression repcap mode {mode!r}")


def final_score(cnr_value: float, repcap: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Combined proxy: cnr^alpha * repcap (alpha defaults to 0.25)."""
    if not 0.0 <= cnr_value <= 1.0:
        raise ValueError(f"cnr must lie in [0, 1], got {cnr_value}")
    return float(cnr_value**alpha) * repcap


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs of one scoring pass; the digest stamps every emitted row."""

    variant: str = "eq1"
    subset_size: int = 32
    n_param_draws: int = 4
    alpha: float = DEFAULT_ALPHA
    n_replicas: int = 32
    sigma: Union[float, str] = "median"  # bandwidth or the median heuristic

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.subset_size < 2:
            raise ValueError("subset_size must be >= 2")
        if self.n_param_draws < 1 or self.n_replicas < 1:
            raise ValueError("n_param_draws and n_replicas must be >= 1")
        if isinstance(self.sigma, str):
            if self.sigma != "median":
                raise ValueError(f"sigma must be a number or 'median', got {self.sigma!r}")
        elif self.sigma <= 0:
            raise ValueError("sigma must be > 0")

    @property
    def task_kind(self) -> str:
        return "classification" if self.variant in CLASSIFICATION_VARIANTS else "regression"

    def digest(self, seed: int) -> str:
        payload = {
            "variant": self.variant,
            "subset_size": self.subset_size,
            "n_param_draws": self.n_param_draws,
            "alpha": self.alpha,
            "n_replicas": self.n_replicas,
            "sigma": self.sigma,
            "seed": int(seed),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class ScoreCard:
    """Per-circuit scoring result; one delimited row per card."""

    circuit_id: str
    cnr: float
    repcap: float
    final_score: float
    config_digest: str


def score_circuit(
    circuit_id: str,
    genome: CircuitGenome,
    device: DeviceModel,
    subset_features: np.ndarray,
    subset_labels: np.ndarray,
    config: ScoringConfig,
    seed: int,
    config_digest: Optional[str] = None,
) -> ScoreCard:
    """Score one circuit on a fixed data subset; deterministic given the seed.

    Sub-seeds for the Clifford replicas and the parameter draws derive from
    ``seed`` so circuits can be scored in parallel in any order.  The digest
    stamped on the card normally comes from the run-level config + global
    seed; it defaults to one derived from the per-circuit seed.
    """
    cnr_value = cnr(genome, device, n_replicas=config.n_replicas, seed=spawn_seed(seed, "cnr"))
    r_c = similarity_matrix(
        genome,
        subset_features,
        n_param_draws=config.n_param_draws,
        seed=spawn_seed(seed, "draws"),
    )
    d = subset_features.shape[0]
    if config.variant in CLASSIFICATION_VARIANTS:
        r_ref = reference_classification(subset_labels)
        r_w = class_weight_matrix(subset_labels) if config.variant == "eq2_weighted" else None
        repcap = repcap_classification(r_c, r_ref, r_w, n_classes=2, d_c=d)
    else:
        sigma = median_sigma(subset_labels) if config.sigma == "median" else float(config.sigma)
        r_ref = reference_regression(subset_labels, sigma)
        mode = "plain" if config.variant == "regression_plain" else "gaussian_weighted"
        repcap = repcap_regression(r_c, r_ref, mode=mode, d_c=d)
    return ScoreCard(
        circuit_id=circuit_id,
        cnr=cnr_value,
        repcap=repcap,
        final_score=final_score(cnr_value, repcap, config.alpha),
        config_digest=config_digest if config_digest is not None else config.digest(seed),
    )


def score_circuit_variants(
    circuit_id: str,
    genome: CircuitGenome,
    device: DeviceModel,
    subset_features: np.ndarray,
    subset_labels: np.ndarray,
    configs: dict[str, tuple[ScoringConfig, str]],
    seed: int,
) -> dict[str, ScoreCard]:
    """Score one circuit under several variants sharing CNR and R_c.

    All configs must agree on n_replicas and n_param_draws so the shared CNR
    and similarity matrix are exactly what each single-variant call would
    compute; results are bit-identical to calling ``score_circuit`` per
    variant, just without the duplicated simulation.
    """
    shapes = {(c.n_replicas, c.n_param_draws, c.alpha) for c, _ in configs.values()}
    if len(shapes) > 1:
        raise ValueError("variants disagree on replica/draw counts; score them separately")
    any_config = next(iter(configs.values()))[0]
    cnr_value = cnr(genome, device, n_replicas=any_config.n_replicas, seed=spawn_seed(seed, "cnr"))
    r_c = similarity_matrix(
        genome,
        subset_features,
        n_param_draws=any_config.n_param_draws,
        seed=spawn_seed(seed, "draws"),
    )
    d = subset_features.shape[0]
    cards: dict[str, ScoreCard] = {}
    for variant, (config, digest) in configs.items():
        if config.variant in CLASSIFICATION_VARIANTS:
            r_ref = reference_classification(subset_labels)
            r_w = class_weight_matrix(subset_labels) if config.variant == "eq2_weighted" else None
            repcap = repcap_classification(r_c, r_ref, r_w, n_classes=2, d_c=d)
        else:
            sigma = median_sigma(subset_labels) if config.sigma == "median" else float(config.sigma)
            r_ref = reference_regression(subset_labels, sigma)
            mode = "plain" if config.variant == "regression_plain" else "gaussian_weighted"
            repcap = repcap_regression(r_c, r_ref, mode=mode, d_c=d)
        cards[variant] = ScoreCard(
            circuit_id=circuit_id,
            cnr=cnr_value,
            repcap=repcap,
            final_score=final_score(cnr_value, repcap, config.alpha),
            config_digest=digest,
        )
    return cards
