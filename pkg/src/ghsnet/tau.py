"""Data-driven selection of the global squared shrinkage scale.

The estimate is insensitive to the global scale once it is large enough:
the local scales absorb the slack. Selection therefore walks an increasing
grid, fits at every point (warm-starting from the previous fit), and stops
at the first point where the AIC has stabilised. Stricter criteria (BIC)
under-select badly in this model family and are deliberately not offered.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .model import DEFAULT_EDGE_THRESHOLD, Dataset, extract_graph, log_det
from .ecm import EcmConfig, EcmFit, fit_single

logger = logging.getLogger("ghsnet")


@dataclass(frozen=True)
class TauGrid:
    """Strictly increasing candidate values for the global squared scale."""

    values: tuple[float, ...]
    aic_epsilon: float = 0.1

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError("grid needs at least 2 values")
        if vals[0] <= 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid values must be positive and strictly increasing")
        if self.aic_epsilon <= 0:
            raise ValueError(f"aic_epsilon must be positive, got {self.aic_epsilon}")

    @classmethod
    def default(cls, aic_epsilon: float = 0.1) -> "TauGrid":
        """Geometric grid from 1e-4 to 10 with 18 points (ratio close to 2)."""
        return cls(values=tuple(np.geomspace(1e-4, 10.0, 18)), aic_epsilon=aic_epsilon)


@dataclass(frozen=True)
class TauSelection:
    """Outcome of one grid walk; ``fit`` is the fit at the chosen value."""

    chosen_tau_sq: float
    aic_trace: tuple[tuple[float, float], ...]
    stabilized: bool
    chosen_index: int
    fit: EcmFit


def aic_score(fit: EcmFit, data: Dataset, threshold: float = DEFAULT_EDGE_THRESHOLD) -> float:
    """AIC of a fitted precision matrix.

    n/(n-1) tr(S theta) - n log det(theta) + 2 |E|, with the edge count
    taken from thresholded partial correlations.
    """
    n = data.n
    trace_term = float(np.sum(data.scatter * fit.theta))
    graph = extract_graph(fit.theta, threshold)
    return n / (n - 1.0) * trace_term - n * log_det(fit.theta) + 2.0 * graph.edge_count


def select_tau(
    data: Dataset,
    grid: TauGrid,
    config: EcmConfig,
    *,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
    plateau_margin: float | None = None,
) -> TauSelection:
    """Fit at every grid value and stop where the AIC has stabilised.

    The chosen value is the earlier point of the first adjacent pair whose
    AIC scores differ by less than ``grid.aic_epsilon`` (the smallest value
    after which the score no longer moves), restricted to pairs sitting
    within ``plateau_margin`` of the lowest score on the whole trace. The
    restriction distinguishes the terminal plateau from flat stretches
    earlier in the trace: with a heavily shrunk fit the score can pause
    while nothing is selected yet, long before the real descent. If no
    pair qualifies, the last grid value is returned with
    ``stabilized=False``.

    ``plateau_margin`` defaults to max(20 * aic_epsilon, 2). Fits at the
    grid points are independent cold starts; warm-starting along the grid
    drags each point's selected edges into the next fit and biases the
    walk, so it is deliberately not done.
    """
    if plateau_margin is None:
        plateau_margin = max(20.0 * grid.aic_epsilon, 2.0)
    trace: list[tuple[float, float]] = []
    fits: list[EcmFit] = []

    for m, tau_sq in enumerate(grid.values):
        cfg = replace(config, tau_mode="fixed", tau_sq=float(tau_sq))
        try:
            fit = fit_single(data, cfg)
        except Exception as exc:
            raise RuntimeError(f"fit failed at grid point tau_sq={tau_sq:g}") from exc
        fits.append(fit)
        aic = aic_score(fit, data, edge_threshold)
        trace.append((float(tau_sq), float(aic)))
        logger.debug("tau grid point %d: tau_sq=%.4g aic=%.4f", m, tau_sq, aic)

    scores = np.array([a for _, a in trace])
    floor = float(scores.min())
    for m in range(1, len(scores)):
        flat = abs(scores[m] - scores[m - 1]) < grid.aic_epsilon
        on_plateau = scores[m - 1] <= floor + plateau_margin
        if flat and on_plateau:
            return TauSelection(
                chosen_tau_sq=trace[m - 1][0],
                aic_trace=tuple(trace),
                stabilized=True,
                chosen_index=m - 1,
                fit=fits[m - 1],
            )

    return TauSelection(
        chosen_tau_sq=trace[-1][0],
        aic_trace=tuple(trace),
        stabilized=False,
        chosen_index=len(trace) - 1,
        fit=fits[-1],
    )


def select_taus(
    datasets: list[Dataset],
    grid: TauGrid,
    config: EcmConfig,
    *,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
    threads: int = 1,
) -> list[TauSelection]:
    """Independent per-network selections, optionally in parallel."""
    if threads <= 1 or len(datasets) == 1:
        return [select_tau(ds, grid, config, edge_threshold=edge_threshold) for ds in datasets]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(select_tau, ds, grid, config, edge_threshold=edge_threshold)
            for ds in datasets
        ]
        return [f.result() for f in futures]


def fit_to_edge_count(
    data: Dataset,
    target_edges: int,
    config: EcmConfig,
    *,
    grid: TauGrid | None = None,
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> EcmFit:
    """Single fit whose edge count best matches a target.

    Walks the grid from small global scales upward (warm-started) and stops
    once the fitted graph reaches the target edge count, returning the fit
    whose count is closest to the target. Used to compare joint estimates
    against sparsity-matched single-network baselines.
    """
    if grid is None:
        grid = TauGrid.default()
    best: EcmFit | None = None
    best_gap: int | None = None
    for tau_sq in grid.values:
        cfg = replace(config, tau_mode="fixed", tau_sq=float(tau_sq))
        fit = fit_single(data, cfg)
        edges = extract_graph(fit.theta, edge_threshold).edge_count
        gap = abs(edges - target_edges)
        if best_gap is None or gap < best_gap:
            best, best_gap = fit, gap
        if edges >= target_edges:
            break
    assert best is not None
    return best
