"""Covariance matrix adaptation evolution strategy (CMA-ES).

Derivative-free minimizer with an ask/tell interface. The implementation
follows the community-standard default parameterization: rank-mu plus
rank-one covariance updates with positive recombination weights and
cumulative step-size adaptation, as in Hansen's tutorial formulation.

Conventions:
  - LOWER fitness is better; callers maximizing a score negate it.
  - All randomness flows from ``CmaesConfig.seed`` through one PCG64
    stream, so identical configs give bit-identical runs.
  - ``ask``/``tell`` mutate the optimizer and must be externally
    serialized; evaluating the returned candidates may happen in any
    order as long as fitnesses are passed back in candidate order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import as_vector

__all__ = ["CmaesConfig", "CovarianceError", "Cmaes", "minimize"]


class CovarianceError(RuntimeError):
    """The sampling covariance lost positive definiteness."""


@dataclass(frozen=True)
class CmaesConfig:
    """Static optimizer parameters.

    Parameters
    ----------
    dim : search-space dimensionality.
    popsize : candidates per generation (lambda).
    sigma0 : initial global step size.
    mean0 : initial distribution mean; zeros when omitted.
    max_generations : generation budget for :func:`minimize`.
    seed : RNG seed; fully determines the run.
    """

    dim: int
    popsize: int = 22
    sigma0: float = 0.5
    mean0: np.ndarray | None = None
    max_generations: int = 1000
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.popsize < 2:
            raise ValueError(f"popsize must be >= 2, got {self.popsize}")
        if not (self.sigma0 > 0):
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if self.max_generations < 1:
            raise ValueError(
                f"max_generations must be >= 1, got {self.max_generations}"
            )
        if self.mean0 is not None and len(self.mean0) != self.dim:
            raise ValueError(
                f"mean0 has length {len(self.mean0)}, expected dim {self.dim}"
            )


class Cmaes:
    """Ask/tell CMA-ES state machine minimizing an arbitrary fitness."""

    def __init__(self, config: CmaesConfig):
        config.validate()
        self.config = config
        n = config.dim
        lam = config.popsize
        mu = lam // 2

        # Selection: log-linear weights over the best mu candidates.
        raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        self.weights = raw / raw.sum()
        self.mueff = float(1.0 / np.sum(self.weights**2))

        # Adaptation constants (functions of dim and mueff only).
        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1,
            2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff),
        )
        self.damps = (
            1 + 2 * max(0.0, np.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        )
        self.chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        self.mean = (
            np.zeros(n)
            if config.mean0 is None
            else as_vector(config.mean0, name="mean0")
        )
        self.sigma = float(config.sigma0)
        self.cov = np.eye(n)
        self.path_sigma = np.zeros(n)
        self.path_c = np.zeros(n)
        self.generation = 0
        self._rng = np.random.Generator(np.random.PCG64(config.seed))
        self._best_x: np.ndarray | None = None
        self._best_f = np.inf
        self._decompose()

    # -- state access -------------------------------------------------

    @property
    def best(self) -> tuple[np.ndarray, float]:
        """Best evaluated candidate so far and its fitness."""
        if self._best_x is None:
            raise RuntimeError("no candidates evaluated yet")
        return self._best_x.copy(), self._best_f

    @property
    def covariance(self) -> np.ndarray:
        return self.cov.copy()

    def axis_spread(self) -> float:
        """sigma times the longest distribution axis; ~0 means exhausted."""
        return self.sigma * float(np.sqrt(self._eigvals.max()))

    # -- core loop ----------------------------------------------------

    def ask(self) -> list[np.ndarray]:
        """Sample ``popsize`` candidates from N(mean, sigma^2 C)."""
        if self._eigvals.min() <= 0:
            raise CovarianceError("covariance not positive definite")
        z = self._rng.standard_normal((self.config.popsize, self.config.dim))
        y = (z * self._scales) @ self._eigbasis.T  # rows: B @ (D * z_k)
        return [self.mean + self.sigma * row for row in y]

    def tell(self, candidates: Sequence[np.ndarray], fitnesses: Sequence[float]) -> None:
        """Update mean, step size, covariance, and paths from one generation."""
        lam = self.config.popsize
        n = self.config.dim
        if len(candidates) != len(fitnesses):
            raise ValueError(
                f"got {len(candidates)} candidates but {len(fitnesses)} fitnesses"
            )
        if len(candidates) != lam:
            raise ValueError(f"expected {lam} candidates, got {len(candidates)}")
        fits = np.asarray(fitnesses, dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(fits))
        if bad.size:
            raise ValueError(f"non-finite fitness for candidate {bad[0]}")
        xs = np.asarray(candidates, dtype=np.float64)
        if xs.shape != (lam, n):
            raise ValueError(
                f"candidates have shape {xs.shape}, expected ({lam}, {n})"
            )

        order = np.argsort(fits, kind="stable")
        if fits[order[0]] < self._best_f:
            self._best_f = float(fits[order[0]])
            self._best_x = xs[order[0]].copy()

        mu = len(self.weights)
        selected = xs[order[:mu]]
        old_mean = self.mean
        self.mean = self.weights @ selected

        # Cumulation: step-size path in the isotropic frame, then hsig
        # gates the rank-one path while sigma is still growing fast.
        y = (self.mean - old_mean) / self.sigma
        self.path_sigma = (1 - self.cs) * self.path_sigma + np.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * (self._inv_sqrt_cov @ y)
        ps_norm = float(np.linalg.norm(self.path_sigma))
        decay = 1 - (1 - self.cs) ** (2 * (self.generation + 1))
        hsig = ps_norm / np.sqrt(decay) / self.chi_n < 1.4 + 2 / (n + 1)
        self.path_c = (1 - self.cc) * self.path_c + hsig * np.sqrt(
            self.cc * (2 - self.cc) * self.mueff
        ) * y

        # Covariance: rank-one (path) plus rank-mu (selected steps).
        steps = (selected - old_mean) / self.sigma
        self.cov = (
            (1 - self.c1 - self.cmu) * self.cov
            + self.c1
            * (
                np.outer(self.path_c, self.path_c)
                + (1 - hsig) * self.cc * (2 - self.cc) * self.cov
            )
            + self.cmu * (steps.T * self.weights) @ steps
        )

        self.sigma *= float(np.exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1)))
        self.generation += 1
        self._decompose()

    def _decompose(self) -> None:
        self.cov = (self.cov + self.cov.T) / 2  # drift control
        eigvals, eigbasis = np.linalg.eigh(self.cov)
        if eigvals.min() <= 0:
            raise CovarianceError("covariance not positive definite")
        self._eigvals = eigvals
        self._eigbasis = eigbasis
        self._scales = np.sqrt(eigvals)
        self._inv_sqrt_cov = (eigbasis / self._scales) @ eigbasis.T


def minimize(
    objective: Callable[[np.ndarray], float], config: CmaesConfig
) -> tuple[np.ndarray, float]:
    """Run the full generation budget and return (best_x, best_fitness).

    Stops early only on numerical exhaustion (axis spread below 1e-14);
    otherwise always spends ``max_generations`` generations.
    """
    es = Cmaes(config)
    for _ in range(config.max_generations):
        candidates = es.ask()
        es.tell(candidates, [float(objective(x)) for x in candidates])
        if es.axis_spread() < 1e-14:
            break
    return es.best
