"""Shared domain objects for sparse precision-matrix estimation.

The estimand throughout is a symmetric positive-definite precision matrix
``theta`` whose scaled off-diagonals are partial correlations. This module
holds the data container, the partial-correlation transform, edge
extraction, and the ECM surrogate objective used by the monotonicity
checks. Everything here is a pure function of its inputs; arrays stored on
the dataclasses are frozen (non-writeable views).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# psi(1) = -gamma and psi(1/2) = -gamma - 2 ln 2 seed the half-integer
# digamma recurrence below; no general digamma routine is needed.
EULER_GAMMA = 0.5772156649015329

# The ECM drives null precision entries to machine-precision zero, so any
# small positive cut separates them from real signal (weakest simulated
# partial correlation is 0.1).
DEFAULT_EDGE_THRESHOLD = 1e-5


def digamma_half_integer(x: float) -> float:
    """Digamma function at positive integer or half-integer arguments.

    Supports exactly the arguments the latent-scale expectations need,
    via psi(x+1) = psi(x) + 1/x started from psi(1) and psi(1/2).
    """
    m = int(round(2.0 * x))
    if m < 1 or abs(2.0 * x - m) > 1e-9:
        raise ValueError(f"digamma argument must be a positive multiple of 1/2, got {x!r}")
    if m % 2 == 0:
        value = -EULER_GAMMA
        base = 1.0
        steps = (m - 2) // 2
    else:
        value = -EULER_GAMMA - 2.0 * math.log(2.0)
        base = 0.5
        steps = (m - 1) // 2
    for i in range(steps):
        value += 1.0 / (base + i)
    return value


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Centered observation matrix with its cached scatter matrix.

    ``observations`` is the n-by-p matrix after column centering,
    ``scatter`` equals observations.T @ observations, and ``column_means``
    records the means that were removed. ``names`` are optional variable
    names used in error messages and file output.
    """

    observations: np.ndarray
    scatter: np.ndarray
    column_means: np.ndarray
    names: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    @property
    def p(self) -> int:
        return self.observations.shape[1]

    def column_label(self, j: int) -> str:
        return self.names[j] if self.names is not None else str(j)

    @classmethod
    def from_observations(
        cls,
        x: np.ndarray,
        *,
        center: bool = True,
        scale: bool = False,
        names: tuple[str, ...] | None = None,
    ) -> "Dataset":
        """Ingest raw observations (rows are samples, columns variables).

        Columns are mean-centered by default; unit-variance scaling is off
        by default because partial correlations are scale invariant but
        global-shrinkage selection is not. Zero-variance columns are
        rejected with the offending column named.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"observations must be 2-dimensional, got shape {x.shape}")
        n, p = x.shape
        if n < 2 or p < 2:
            raise ValueError(f"need at least 2 samples and 2 variables, got n={n}, p={p}")
        if not np.all(np.isfinite(x)):
            raise ValueError("observations contain non-finite values")
        if names is not None and len(names) != p:
            raise ValueError(f"got {len(names)} names for {p} columns")

        if center:
            means = x.mean(axis=0)
            x = x - means
        else:
            means = np.zeros(p)
        sd = np.sqrt((x**2).sum(axis=0) / (n - 1))
        dead = np.flatnonzero(sd == 0.0)
        if dead.size:
            label = names[dead[0]] if names is not None else str(dead[0])
            raise ValueError(f"column {label!r} has zero variance")
        if scale:
            x = x / sd

        scatter = x.T @ x
        scatter = (scatter + scatter.T) / 2.0
        return cls(
            observations=_frozen(x),
            scatter=_frozen(scatter),
            column_means=_frozen(means),
            names=tuple(names) if names is not None else None,
        )


@dataclass(frozen=True)
class LatentSummary:
    """Per-edge conditional expectations of the latent coupling variables.

    ``inv_nu_expect`` holds E[1/nu_ij | .] and ``log_nu_expect`` holds
    E[log nu_ij | .]; both are symmetric p-by-p matrices (diagonal unused).
    """

    inv_nu_expect: np.ndarray
    log_nu_expect: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inv_nu_expect", _frozen(self.inv_nu_expect))
        object.__setattr__(self, "log_nu_expect", _frozen(self.log_nu_expect))


@dataclass(frozen=True)
class GraphEstimate:
    """Binary edge set read off a fitted precision matrix."""

    adjacency: np.ndarray
    partial_correlations: np.ndarray
    sparsity: float

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool, copy=True)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "partial_correlations", _frozen(self.partial_correlations))

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(ii.tolist(), jj.tolist()))


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose to cancel accumulation drift."""
    return (a + a.T) / 2.0


def is_positive_definite(theta: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        return False
    return True


def partial_correlations(theta: np.ndarray) -> np.ndarray:
    """Partial correlations -theta_ij / sqrt(theta_ii theta_jj).

    The diagonal of the result is set to 1. Raises ``ValueError`` when the
    diagonal of ``theta`` is not strictly positive (the matrix cannot then
    be positive definite).
    """
    theta = np.asarray(theta, dtype=float)
    d = np.diag(theta)
    if np.any(d <= 0.0):
        raise ValueError("precision matrix has a non-positive diagonal entry")
    inv_sd = 1.0 / np.sqrt(d)
    rho = -theta * np.outer(inv_sd, inv_sd)
    np.fill_diagonal(rho, 1.0)
    return symmetrize(rho)


def extract_graph(theta: np.ndarray, threshold: float = DEFAULT_EDGE_THRESHOLD) -> GraphEstimate:
    """Threshold scaled off-diagonals of ``theta`` into a graph estimate."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    rho = partial_correlations(theta)
    adjacency = np.abs(rho) > threshold
    np.fill_diagonal(adjacency, False)
    adjacency &= adjacency.T
    p = theta.shape[0]
    n_edges = np.triu(adjacency, 1).sum()
    sparsity = 2.0 * n_edges / (p * p - p)
    return GraphEstimate(adjacency=adjacency, partial_correlations=rho, sparsity=float(sparsity))


def log_det(theta: np.ndarray) -> float:
    """log determinant via Cholesky; raises ``ValueError`` if not PD."""
    try:
        chol = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError as exc:
        raise ValueError("precision matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def objective_value(
    theta: np.ndarray,
    lambda_sq: np.ndarray,
    latent: LatentSummary,
    tau_sq: float,
    data: Dataset,
) -> float:
    """ECM surrogate objective (up to its additive constant).

    Evaluates, for the supplied latent expectations,

        n/2 log det(theta) - tr(S theta)/2
        + sum_{i<j} [ -2 log(lambda_sq_ij) - theta_ij^2 / (2 tau_sq lambda_sq_ij)
                      - 2 E[log nu_ij] - (1/lambda_sq_ij + 1) E[1/nu_ij] ].

    The fit loop records this quantity once per iteration with the latent
    expectations of the previous iterate, which is the quantity the
    conditional-maximisation steps are guaranteed not to decrease.
    """
    theta = np.asarray(theta, dtype=float)
    lambda_sq = np.asarray(lambda_sq, dtype=float)
    if np.any(lambda_sq <= 0.0):
        raise ValueError("lambda_sq entries must be strictly positive")
    if tau_sq <= 0.0:
        raise ValueError(f"tau_sq must be strictly positive, got {tau_sq}")
    p = theta.shape[0]
    iu = np.triu_indices(p, k=1)

    ll = 0.5 * data.n * log_det(theta) - 0.5 * float(np.sum(data.scatter * theta))
    lam = lambda_sq[iu]
    th2 = theta[iu] ** 2
    inv_nu = latent.inv_nu_expect[iu]
    log_nu = latent.log_nu_expect[iu]
    prior = np.sum(
        -2.0 * np.log(lam)
        - th2 / (2.0 * tau_sq * lam)
        - 2.0 * log_nu
        - (1.0 / lam + 1.0) * inv_nu
    )
    return float(ll + prior)


def marginal_objective(
    theta: np.ndarray,
    lambda_sq: np.ndarray,
    tau_sq: float,
    data: Dataset,
) -> float:
    """Fit objective with the latent variables integrated out.

    n/2 log det(theta) - tr(S theta)/2
    + sum_{i<j} [ -theta_ij^2/(2 tau_sq lambda_sq_ij)
                  - log(lambda_sq_ij) - log(1 + lambda_sq_ij) ],
    up to an additive constant. Unlike the surrogate in
    ``objective_value``, which the maximisation steps only guarantee not to
    decrease within one iteration (for fixed latent expectations), this
    quantity is non-decreasing across iterations, so it is what the fit
    records as its objective trace.
    """
    theta = np.asarray(theta, dtype=float)
    lambda_sq = np.asarray(lambda_sq, dtype=float)
    if np.any(lambda_sq <= 0.0):
        raise ValueError("lambda_sq entries must be strictly positive")
    if tau_sq <= 0.0:
        raise ValueError(f"tau_sq must be strictly positive, got {tau_sq}")
    p = theta.shape[0]
    iu = np.triu_indices(p, k=1)
    lam = lambda_sq[iu]
    ll = 0.5 * data.n * log_det(theta) - 0.5 * float(np.sum(data.scatter * theta))
    prior = np.sum(
        -(theta[iu] ** 2) / (2.0 * tau_sq * lam) - np.log(lam) - np.log1p(lam)
    )
    return float(ll + prior)
