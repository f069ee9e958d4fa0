"""Ground-truth generation: scale-free graphs, precision matrices with
prescribed partial correlations, controlled-similarity graph families, and
Gaussian samples.

All randomness flows from integer seeds through ``numpy.random.default_rng``;
replicate r of any protocol should use ``base_seed + r``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .model import Dataset, partial_correlations

_MIN_EIGENVALUE = 1e-6
_RANGE_TOL = 1e-4


@dataclass(frozen=True)
class TrueModel:
    """A ground-truth graph and its positive-definite precision matrix.

    Every true edge has a scaled off-diagonal (partial correlation) whose
    magnitude lies in ``partial_range``; non-edges are exactly zero.
    """

    adjacency: np.ndarray
    precision: np.ndarray
    partial_range: tuple[float, float]
    seed: int

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool, copy=True)
        adj.setflags(write=False)
        prec = np.array(self.precision, dtype=float, copy=True)
        prec.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "precision", prec)
        object.__setattr__(self, "partial_range", tuple(float(v) for v in self.partial_range))
        _validate_model(self)

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    @property
    def sparsity(self) -> float:
        p = self.p
        return 2.0 * self.edge_count / (p * p - p)

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(ii.tolist(), jj.tolist()))

    def to_json(self) -> str:
        payload = {
            "p": self.p,
            "edges": self.edges(),
            "precision": self.precision.ravel().tolist(),
            "partial_range": list(self.partial_range),
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrueModel":
        payload = json.loads(text)
        p = int(payload["p"])
        adjacency = np.zeros((p, p), dtype=bool)
        for i, j in payload["edges"]:
            adjacency[i, j] = adjacency[j, i] = True
        precision = np.asarray(payload["precision"], dtype=float).reshape(p, p)
        return cls(
            adjacency=adjacency,
            precision=precision,
            partial_range=tuple(payload["partial_range"]),
            seed=int(payload["seed"]),
        )


def _validate_model(model: TrueModel) -> None:
    adj, prec = model.adjacency, model.precision
    p = adj.shape[0]
    if adj.shape != prec.shape:
        raise ValueError("adjacency and precision shapes differ")
    if adj.diagonal().any():
        raise ValueError("adjacency has a true diagonal entry")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency is not symmetric")
    if np.linalg.eigvalsh(prec).min() < _MIN_EIGENVALUE * (1 - 1e-9):
        raise ValueError("precision matrix smallest eigenvalue below the floor")
    rho = partial_correlations(prec)
    off = ~np.eye(p, dtype=bool)
    low, high = model.partial_range
    mags = np.abs(rho[adj])
    if adj.any() and (mags.min() < low - _RANGE_TOL or mags.max() > high + _RANGE_TOL):
        raise ValueError("edge partial correlations fall outside the target range")
    if np.any(prec[off & ~adj] != 0.0):
        raise ValueError("non-edge precision entries are not exactly zero")


def generate_scale_free_graph(p: int, seed: int) -> np.ndarray:
    """Connected preferential-attachment graph with exactly p edges.

    A preferential-attachment tree contributes p-1 edges; one extra edge is
    then added between degree-proportionally chosen non-adjacent nodes, so
    the degree sequence stays heavy-tailed.
    """
    if p < 3:
        raise ValueError(f"need at least 3 nodes, got {p}")
    tree = nx.barabasi_albert_graph(p, 1, seed=int(seed))
    adjacency = np.zeros((p, p), dtype=bool)
    for i, j in tree.edges():
        adjacency[i, j] = adjacency[j, i] = True

    rng = np.random.default_rng(seed)
    degrees = adjacency.sum(axis=0).astype(float)
    while True:
        u = int(rng.choice(p, p=degrees / degrees.sum()))
        candidates = np.flatnonzero(~adjacency[u])
        candidates = candidates[candidates != u]
        if candidates.size == 0:
            continue
        weights = degrees[candidates]
        v = int(rng.choice(candidates, p=weights / weights.sum()))
        adjacency[u, v] = adjacency[v, u] = True
        return adjacency


def _assemble_precision(
    adjacency: np.ndarray,
    rho_targets: np.ndarray,
    low: float,
    high: float,
    max_passes: int = 50,
) -> np.ndarray:
    """Fixed-point construction of a PD precision matrix with edge partial
    correlations inside [low, high] and exact zeros elsewhere.

    Starts from unit diagonal with -rho off-diagonals; whenever the smallest
    eigenvalue falls below the floor the diagonal is inflated, which shrinks
    the realised partial correlations, and off-diagonals are then rescaled
    back into the admissible range.
    """
    p = adjacency.shape[0]
    d = 1.0
    rho = np.where(adjacency, rho_targets, 0.0)
    theta = d * np.eye(p) - rho * d
    for _ in range(max_passes):
        lam_min = float(np.linalg.eigvalsh(theta).min())
        if lam_min < _MIN_EIGENVALUE:
            bump = _MIN_EIGENVALUE - lam_min + 1e-9
            theta.flat[:: p + 1] += bump
            d += bump
        realized = np.where(adjacency, -theta / d, 0.0)
        signs = np.sign(rho_targets)
        clipped = signs * np.clip(np.abs(realized), low, high)
        theta = d * np.eye(p) - np.where(adjacency, clipped, 0.0) * d
        done_range = np.all(
            (np.abs(realized[adjacency]) >= low - _RANGE_TOL)
            & (np.abs(realized[adjacency]) <= high + _RANGE_TOL)
        ) if adjacency.any() else True
        if done_range and float(np.linalg.eigvalsh(theta).min()) >= _MIN_EIGENVALUE:
            return (theta + theta.T) / 2.0
    raise ValueError("could not realise the requested partial-correlation range on this graph")


def build_precision(
    adjacency: np.ndarray,
    partial_range: tuple[float, float] = (0.1, 0.2),
    seed: int = 0,
    *,
    mixed_signs: bool = False,
    shared_magnitude: bool = True,
) -> np.ndarray:
    """Precision matrix whose edge partial correlations lie in the range.

    By default one magnitude is drawn uniformly from ``partial_range`` and
    shared by every edge, mirroring the uniform-strength construction the
    desk-scale benchmarks assume (per-replicate variation then comes from
    the draw itself); ``shared_magnitude=False`` draws magnitudes per edge
    instead. Signs are all positive unless ``mixed_signs`` is set (random
    signs make no claim of matching any reference protocol).
    """
    adjacency = np.asarray(adjacency, dtype=bool)
    low, high = float(partial_range[0]), float(partial_range[1])
    if not (0.0 < low <= high):
        raise ValueError(f"invalid partial-correlation range ({low}, {high})")
    if high >= 1.0:
        raise ValueError("partial-correlation magnitudes must stay below 1")
    if not np.array_equal(adjacency, adjacency.T) or adjacency.diagonal().any():
        raise ValueError("adjacency must be symmetric with a false diagonal")

    rng = np.random.default_rng(seed)
    p = adjacency.shape[0]
    if shared_magnitude:
        mags = np.full((p, p), rng.uniform(low, high))
    else:
        mags = rng.uniform(low, high, size=(p, p))
        mags = np.triu(mags, 1)
        mags = mags + mags.T
    if mixed_signs:
        signs = np.where(rng.random((p, p)) < 0.5, 1.0, -1.0)
        signs = np.triu(signs, 1)
        signs = signs + signs.T
    else:
        signs = np.ones((p, p))
    return _assemble_precision(adjacency, mags * signs, low, high)


def make_true_model(
    p: int,
    seed: int,
    partial_range: tuple[float, float] = (0.1, 0.2),
    *,
    mixed_signs: bool = False,
    shared_magnitude: bool = True,
) -> TrueModel:
    """Scale-free ground truth with p edges and the stated signal range."""
    adjacency = generate_scale_free_graph(p, seed)
    precision = build_precision(
        adjacency, partial_range, seed, mixed_signs=mixed_signs, shared_magnitude=shared_magnitude
    )
    return TrueModel(adjacency=adjacency, precision=precision, partial_range=partial_range, seed=seed)


def perturb_graph(model: TrueModel, disagreement_fraction: float, seed: int) -> TrueModel:
    """Reallocate a fraction of the edges to build a related second truth.

    Exactly ``round(fraction * |E|)`` edges are removed and the same number
    are placed uniformly among node pairs that were non-edges of the
    original graph, so the two models share ``|E| - moved`` edges. Retained
    edges keep their partial-correlation values; new edges draw fresh ones.
    """
    if not 0.0 <= disagreement_fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {disagreement_fraction}")
    n_move = int(round(disagreement_fraction * model.edge_count))
    if n_move == 0:
        return TrueModel(
            adjacency=model.adjacency,
            precision=model.precision,
            partial_range=model.partial_range,
            seed=seed,
        )

    rng = np.random.default_rng(seed)
    edges = model.edges()
    p = model.p
    iu = np.triu_indices(p, 1)
    non_edges = [
        (int(i), int(j)) for i, j in zip(*iu) if not model.adjacency[i, j]
    ]
    if n_move > len(non_edges):
        raise ValueError("not enough non-edges to reallocate into")

    removed_idx = rng.choice(len(edges), size=n_move, replace=False)
    removed = {edges[i] for i in removed_idx}
    added_idx = rng.choice(len(non_edges), size=n_move, replace=False)
    added = [non_edges[i] for i in added_idx]

    adjacency = np.array(model.adjacency, copy=True)
    rho_old = partial_correlations(model.precision)
    low, high = model.partial_range
    rho_targets = np.where(model.adjacency, rho_old, 0.0)
    # relocated edges inherit the typical strength of the retained ones
    new_strength = float(np.median(np.abs(rho_old[model.adjacency])))
    new_strength = min(max(new_strength, low), high)
    for i, j in removed:
        adjacency[i, j] = adjacency[j, i] = False
        rho_targets[i, j] = rho_targets[j, i] = 0.0
    for i, j in added:
        adjacency[i, j] = adjacency[j, i] = True
        rho_targets[i, j] = rho_targets[j, i] = new_strength

    precision = _assemble_precision(adjacency, rho_targets, low, high)
    return TrueModel(
        adjacency=adjacency,
        precision=precision,
        partial_range=model.partial_range,
        seed=seed,
    )


def sample_gaussian(model: TrueModel, n: int, seed: int) -> Dataset:
    """n zero-mean Gaussian draws whose inverse covariance is the truth."""
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    covariance = np.linalg.inv(model.precision)
    covariance = (covariance + covariance.T) / 2.0
    chol = np.linalg.cholesky(covariance)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, model.p))
    return Dataset.from_observations(z @ chol.T)
