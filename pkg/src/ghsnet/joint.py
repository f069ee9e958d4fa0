"""Joint estimation of several precision matrices with shared edge evidence.

Each network keeps its own precision matrix, local scales, and global
scale; the networks are coupled only through common latent variables, one
per node pair, whose conditional distribution pools the local scales of
all networks. A shared E-step therefore synchronises the per-network
conditional-maximisation sweeps once per iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import Dataset, LatentSummary, digamma_half_integer, marginal_objective, symmetrize
from .ecm import EcmConfig, EcmFit, cm_theta_column, default_initial_lambda_sq, lambda_sweep

logger = logging.getLogger("ghsnet")

# The published pooled expectation of 1/nu is K/(2b); the mean of the
# inverse-gamma conditional with shape (K+1)/2 and rate b is (K+1)/(2b).
# Both are provided; only the latter reduces exactly to the single-network
# E-step at K=1.
MOMENT_PAPER = "paper"
MOMENT_INVGAMMA = "invgamma"


@dataclass(frozen=True)
class JointProblem:
    """K datasets over the same variables plus their global squared scales.

    Meant for two or more networks; a single dataset is accepted and then
    reduces exactly to the single-network fit under ``invgamma`` moments.
    """

    datasets: tuple[Dataset, ...]
    tau_sqs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "tau_sqs", tuple(float(t) for t in self.tau_sqs))
        if len(self.datasets) < 1:
            raise ValueError("joint problem needs at least one network")
        if len(self.tau_sqs) != len(self.datasets):
            raise ValueError("need one global scale per network")
        p = self.datasets[0].p
        for k, ds in enumerate(self.datasets):
            if ds.p != p:
                raise ValueError(f"network {k} has p={ds.p}, expected {p}")
        names0 = self.datasets[0].names
        for k, ds in enumerate(self.datasets):
            if ds.names is not None and names0 is not None and ds.names != names0:
                raise ValueError(f"network {k} has a different variable ordering")
        if any(t <= 0 for t in self.tau_sqs):
            raise ValueError("all global scales must be positive")

    @property
    def k(self) -> int:
        return len(self.datasets)

    @property
    def p(self) -> int:
        return self.datasets[0].p


@dataclass
class JointFit:
    """Per-network fits plus the final shared latent expectations."""

    fits: list[EcmFit]
    shared_inv_nu: np.ndarray
    iterations: int
    converged: bool


def e_step_joint(
    lambda_sqs: list[np.ndarray] | tuple[np.ndarray, ...],
    moment_mode: str = MOMENT_PAPER,
) -> LatentSummary:
    """Pooled conditional expectations of the shared latent variables.

    With b = 1 + sum_k 1/lambda_sq_k per edge:
    E[log nu] = log(b) - psi((K+1)/2), and E[1/nu] is K/(2b) in ``paper``
    mode and (K+1)/(2b) in ``invgamma`` mode.
    """
    if moment_mode not in (MOMENT_PAPER, MOMENT_INVGAMMA):
        raise ValueError(f"unknown moment_mode {moment_mode!r}")
    mats = [np.asarray(m, dtype=float) for m in lambda_sqs]
    if not mats:
        raise ValueError("need at least one local-scale matrix")
    shape = mats[0].shape
    for k, m in enumerate(mats):
        if m.shape != shape:
            raise ValueError(f"local-scale matrix {k} has shape {m.shape}, expected {shape}")
        if np.any(m <= 0.0):
            raise ValueError(f"local-scale matrix {k} has non-positive entries")
    n_nets = len(mats)

    b = np.ones(shape)
    for m in mats:  # fixed ascending accumulation order keeps runs bit-identical
        b = b + 1.0 / m
    if moment_mode == MOMENT_PAPER:
        inv_nu = n_nets / (2.0 * b)
    else:
        inv_nu = (n_nets + 1.0) / (2.0 * b)
    log_nu = np.log(b) - digamma_half_integer((n_nets + 1.0) / 2.0)
    return LatentSummary(inv_nu_expect=inv_nu, log_nu_expect=log_nu)


def cm_lambda_joint(theta_ijk: float, shared_inv_nu: float, tau_sq_k: float) -> float:
    """Closed-form local-scale maximiser for one edge of one network."""
    if shared_inv_nu <= 0.0:
        raise ValueError(f"shared_inv_nu must be positive, got {shared_inv_nu}")
    if tau_sq_k <= 0.0:
        raise ValueError(f"tau_sq_k must be positive, got {tau_sq_k}")
    return (shared_inv_nu + theta_ijk**2 / (2.0 * tau_sq_k)) / 2.0


def fit_joint(
    problem: JointProblem,
    config: EcmConfig,
    *,
    moment_mode: str = MOMENT_PAPER,
) -> JointFit:
    """Run the joint ECM until every network's precision matrix stabilises.

    Each iteration performs one shared E-step over all networks'
    local scales, then a local-scale sweep and a precision-column sweep per
    network (identical to the single-network sweeps, with the pooled
    expectation in place of the per-network one). Convergence requires all
    networks to pass the elementwise tolerance in the same iteration.
    Global scales are taken from the problem and never updated here.
    """
    if config.tau_mode != "fixed":
        raise ValueError("joint fits require fixed per-network global scales")
    k_nets = problem.k
    p = problem.p
    for k, ds in enumerate(problem.datasets):
        bad = np.flatnonzero(np.diag(ds.scatter) <= 0.0)
        if bad.size:
            raise ValueError(
                f"network {k}: column {ds.column_label(int(bad[0]))!r} has non-positive scatter diagonal"
            )

    thetas = [np.eye(p) for _ in range(k_nets)]
    sigmas = [np.eye(p) for _ in range(k_nets)]
    lambda_sqs = [
        default_initial_lambda_sq(p, problem.datasets[k].n, problem.tau_sqs[k], k_nets)
        for k in range(k_nets)
    ]
    traces: list[list[float]] = [[] for _ in range(k_nets)]
    converged = False
    iterations = 0

    def one_iteration() -> None:
        latent = e_step_joint(lambda_sqs, moment_mode)
        for k in range(k_nets):
            tau_sq = problem.tau_sqs[k]
            lam = lambda_sweep(thetas[k], latent.inv_nu_expect, tau_sq)
            lambda_sqs[k] = lam
            for col in range(p):
                cm_theta_column(thetas[k], sigmas[k], lam, tau_sq, problem.datasets[k], col)
            thetas[k] = symmetrize(thetas[k])
            sigmas[k] = symmetrize(np.linalg.inv(thetas[k]))
            traces[k].append(
                marginal_objective(thetas[k], lam, tau_sq, problem.datasets[k])
            )

    for it in range(config.max_iter):
        thetas_prev = [t.copy() for t in thetas]
        one_iteration()
        iterations = it + 1
        deltas = [float(np.max(np.abs(thetas[k] - thetas_prev[k]))) for k in range(k_nets)]
        if max(deltas) < config.tol:
            converged = True
            break

    if converged:
        for _ in range(config.settle_iterations):
            one_iteration()
            iterations += 1

    final_latent = e_step_joint(lambda_sqs, moment_mode)
    fits = [
        EcmFit(
            theta=thetas[k],
            lambda_sq=lambda_sqs[k],
            tau_sq=problem.tau_sqs[k],
            iterations=iterations,
            converged=converged,
            objective_trace=traces[k],
        )
        for k in range(k_nets)
    ]
    logger.debug(
        "joint fit: K=%d p=%d iterations=%d converged=%s", k_nets, p, iterations, converged
    )
    return JointFit(
        fits=fits,
        shared_inv_nu=final_latent.inv_nu_expect,
        iterations=iterations,
        converged=converged,
    )
