"""Bayesian-bootstrap posterior check for the suitability of a joint fit.

For each listed edge, the single-network posterior of the scaled precision
element is approximated by refitting under flat-Dirichlet observation
weights; a joint estimate that exceeds the empirical upper percentile of
its own network's bootstrap distribution in absolute value suggests the
edge was forced in by the other networks. Networks that genuinely share
structure produce exceedance near the nominal tail mass; unrelated
networks dragged along by the pool produce far more.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Dataset, partial_correlations
from .ecm import EcmConfig, fit_single

logger = logging.getLogger("ghsnet")


@dataclass(frozen=True)
class EdgeCheck:
    i: int
    j: int
    joint_scaled: float
    percentile_value: float
    exceeds: bool


@dataclass(frozen=True)
class BootstrapReport:
    per_edge: tuple[EdgeCheck, ...]
    exceed_fraction: float
    samples: int
    failures: int
    percentile_level: float

    def to_json(self) -> str:
        payload = {
            "percentile_level": self.percentile_level,
            "samples": self.samples,
            "failures": self.failures,
            "exceed_fraction": self.exceed_fraction,
            "edges": [
                {
                    "i": e.i,
                    "j": e.j,
                    "joint_scaled": e.joint_scaled,
                    "percentile_value": e.percentile_value,
                    "exceeds": e.exceeds,
                }
                for e in self.per_edge
            ],
        }
        return json.dumps(payload, sort_keys=True)

    def to_table(self) -> str:
        """Human-readable summary; exceeding edges are starred."""
        lines = [
            f"bootstrap samples: {self.samples} (failed: {self.failures})",
            f"exceed fraction:   {self.exceed_fraction:.3f} at the {self.percentile_level:g}th percentile",
            f"{'edge':>10} {'estimate':>12} {'q' + format(self.percentile_level, 'g'):>12}",
        ]
        for e in self.per_edge:
            star = " *" if e.exceeds else ""
            lines.append(f"{f'({e.i},{e.j})':>10} {e.joint_scaled:>12.5f} {e.percentile_value:>12.5f}{star}")
        return "\n".join(lines)


def weighted_scatter(data: Dataset, weights: np.ndarray) -> np.ndarray:
    """Dirichlet-weighted scatter matrix.

    (n-1) [1 - sum w_i^2]^{-1} Xw^T Xw with Xw = X scaled rowwise by
    sqrt(w). Uniform weights reproduce the plain scatter exactly.
    """
    w = np.asarray(weights, dtype=float)
    n = data.n
    if w.shape != (n,):
        raise ValueError(f"need {n} weights, got shape {w.shape}")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    denom = 1.0 - float(w @ w)
    if denom <= 0.0:
        raise ValueError("degenerate weights: all mass on one observation")
    xw = data.observations * np.sqrt(w)[:, None]
    s = (n - 1.0) / denom * (xw.T @ xw)
    return (s + s.T) / 2.0


def _weighted_dataset(data: Dataset, weights: np.ndarray) -> Dataset:
    # Fold the scale factor into the observations so the weighted scatter
    # is exactly the scatter of the stored (already centered) matrix.
    w = np.asarray(weights, dtype=float)
    denom = 1.0 - float(w @ w)
    if denom <= 0.0:
        raise ValueError("degenerate weights: all mass on one observation")
    factor = np.sqrt((data.n - 1.0) / denom)
    xw = data.observations * (np.sqrt(w)[:, None] * factor)
    return Dataset.from_observations(xw, center=False, names=data.names)


def scaled_elements(theta: np.ndarray, edges: list[tuple[int, int]]) -> np.ndarray:
    """theta_ij / sqrt(theta_ii theta_jj) for the listed node pairs."""
    rho = -partial_correlations(theta)
    return np.array([rho[i, j] for i, j in edges])


def bootstrap_edge_check(
    data: Dataset,
    joint_fit_theta: np.ndarray,
    edges: list[tuple[int, int]],
    b_samples: int,
    config: EcmConfig,
    seed: int,
    *,
    percentile_level: float = 95.0,
    threads: int = 1,
) -> BootstrapReport:
    """Compare joint scaled estimates against single-network bootstrap tails.

    ``config`` must carry the network's selected fixed global scale; it is
    held constant across bootstrap samples. Samples whose refit does not
    converge are dropped; more than 20% failures aborts the check.
    """
    if b_samples < 50:
        raise ValueError(f"need at least 50 bootstrap samples, got {b_samples}")
    if not edges:
        raise ValueError("edge list is empty")
    if not 0.0 < percentile_level < 100.0:
        raise ValueError(f"percentile level must be in (0, 100), got {percentile_level}")

    rng = np.random.default_rng(seed)
    # flat Dirichlet via normalised unit-rate exponentials, drawn up front
    # so threading cannot change the stream
    raw = rng.exponential(1.0, size=(b_samples, data.n))
    weight_sets = raw / raw.sum(axis=1, keepdims=True)

    def one_sample(b: int) -> np.ndarray | None:
        ds = _weighted_dataset(data, weight_sets[b])
        fit = fit_single(ds, config)
        if not fit.converged:
            return None
        return scaled_elements(fit.theta, edges)

    if threads <= 1:
        results = [one_sample(b) for b in range(b_samples)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_sample, range(b_samples)))

    kept = [r for r in results if r is not None]
    failures = b_samples - len(kept)
    if failures > 0.2 * b_samples:
        raise RuntimeError(f"{failures} of {b_samples} bootstrap refits failed to converge")
    samples = np.abs(np.vstack(kept))

    joint_scaled = scaled_elements(joint_fit_theta, edges)
    checks = []
    n_exceed = 0
    for e_idx, (i, j) in enumerate(edges):
        q = float(np.percentile(samples[:, e_idx], percentile_level))
        exceeds = bool(abs(joint_scaled[e_idx]) > q)
        n_exceed += exceeds
        checks.append(EdgeCheck(i=i, j=j, joint_scaled=float(joint_scaled[e_idx]),
                                percentile_value=q, exceeds=exceeds))
    report = BootstrapReport(
        per_edge=tuple(checks),
        exceed_fraction=n_exceed / len(edges),
        samples=b_samples,
        failures=failures,
        percentile_level=percentile_level,
    )
    logger.debug("bootstrap check: %d edges, exceed_fraction=%.3f", len(edges), report.exceed_fraction)
    return report
