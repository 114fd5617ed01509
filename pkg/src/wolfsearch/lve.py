"""Latent variable evolution: master-sample search over K systems.

One run holds a single generator and K (matcher, enrollment) systems.
Each iteration asks the optimizer for a population of latents, maps
them through the generator, and scores every candidate embedding
against every system as the mean similarity over that system's whole
template database. Candidate fitness is the weighted mean of those
per-system means; the optimizer sees its negation because it minimizes.

The iteration best is the candidate with the highest aggregate score
(lowest index on ties), and the run's answer is the best of those
iteration bests. The per-system traces record, for every iteration,
how that iteration's best candidate scored on each system separately,
plus (when thresholds are supplied) the fraction of that system's
templates it matched. Watching the per-system FMR traces is how you
notice one system's progress coming at another's expense.
"""

from __future__ import annotations

from contextlib import ExitStack
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .cmaes import Cmaes, CmaesConfig
from .enrollment import EnrollmentSet
from .generators import Generator, GeneratorSpec
from .matchers import Matcher, MatcherSpec

__all__ = [
    "SystemSpec",
    "LveConfig",
    "LveResult",
    "LveRunError",
    "BestFace",
    "ConflictReport",
    "aggregate",
    "get_best_face",
    "run_lve",
    "conflict_report",
]


class LveRunError(RuntimeError):
    """A generator or matcher failed mid-search; message says where."""


@dataclass(frozen=True)
class SystemSpec:
    """One target system: a matcher over an enrollment database."""

    matcher: MatcherSpec
    enrollment: EnrollmentSet
    weight: float = 1.0
    name: str = ""

    def validate(self) -> None:
        self.matcher.validate()
        if not (self.weight > 0):
            raise ValueError(f"system weight must be positive, got {self.weight}")
        if self.enrollment.embed_dim != self.matcher.embed_dim:
            raise ValueError(
                f"system {self.name!r}: enrollment dim {self.enrollment.embed_dim} "
                f"!= matcher dim {self.matcher.embed_dim}"
            )


@dataclass(frozen=True)
class LveConfig:
    """Everything a search run depends on, including its seed."""

    generator: GeneratorSpec
    systems: tuple[SystemSpec, ...]
    population: int = 22
    iterations: int = 1000
    sigma0: float = 0.5
    mean0: np.ndarray | None = None
    seed: int = 0
    fmr_thresholds: tuple[float, ...] | None = None

    def validate(self) -> None:
        self.generator.validate()
        if not self.systems:
            raise ValueError("need at least one system to attack")
        for s in self.systems:
            s.validate()
            if s.matcher.embed_dim != self.generator.embed_dim:
                raise ValueError(
                    f"system {s.name!r} embedding dim {s.matcher.embed_dim} "
                    f"!= generator embed_dim {self.generator.embed_dim}"
                )
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.fmr_thresholds is not None and len(self.fmr_thresholds) != len(
            self.systems
        ):
            raise ValueError(
                f"{len(self.fmr_thresholds)} fmr_thresholds for "
                f"{len(self.systems)} systems"
            )


class BestFace(NamedTuple):
    index: int
    latent: np.ndarray
    embedding: np.ndarray
    score: float


def aggregate(per_system_means: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    """Weighted mean over systems: (K, m) score means -> (m,) fitnesses."""
    means = np.asarray(per_system_means, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if means.ndim != 2:
        raise ValueError(f"expected (K, m) means, got shape {means.shape}")
    if w.shape != (means.shape[0],):
        raise ValueError(
            f"{w.size} weights for {means.shape[0]} systems"
        )
    if not np.all(w > 0):
        raise ValueError("weights must be positive")
    return (w @ means) / w.sum()


def get_best_face(latents, embeddings, scores) -> BestFace:
    """Highest-scoring candidate of one population; ties take the lowest index."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a nonempty 1-D array")
    if len(latents) != s.size or len(embeddings) != s.size:
        raise ValueError("latents, embeddings, and scores must align")
    i = int(np.argmax(s))
    return BestFace(
        index=i,
        latent=np.asarray(latents[i], dtype=np.float64).copy(),
        embedding=np.asarray(embeddings[i], dtype=np.float64).copy(),
        score=float(s[i]),
    )


@dataclass(frozen=True)
class LveResult:
    """Outcome of one search run.

    ``iteration_best_scores[t]`` is the aggregate score of iteration
    t's best candidate; the overall best is its max, with the earliest
    iteration winning ties. ``system_score_traces[k, t]`` is system k's
    mean score for iteration t's best candidate, and when thresholds
    were set ``system_fmr_traces[k, t]`` is the fraction of system k's
    templates that candidate matched.
    """

    best_latent: np.ndarray
    best_embedding: np.ndarray
    best_score: float
    best_iteration: int
    iteration_best_scores: np.ndarray  # (n,)
    iteration_best_latents: np.ndarray  # (n, latent_dim)
    system_score_traces: np.ndarray  # (K, n)
    system_fmr_traces: np.ndarray | None  # (K, n) or None
    system_names: tuple[str, ...]


def run_lve(config: LveConfig) -> LveResult:
    """Run the full search; deterministic in the config.

    Exactly ``iterations`` populations are evaluated (no early stop, so
    equal configs produce equal evaluation counts). Any generator or
    matcher failure aborts the run as :class:`LveRunError` naming the
    iteration and candidate where it happened.
    """
    config.validate()
    n_iter = config.iterations
    m = config.population
    k_sys = len(config.systems)
    weights = [s.weight for s in config.systems]
    es = Cmaes(
        CmaesConfig(
            dim=config.generator.latent_dim,
            popsize=m,
            sigma0=config.sigma0,
            mean0=config.mean0,
            max_generations=n_iter,
            seed=config.seed,
        )
    )
    iter_scores = np.empty(n_iter)
    iter_latents = np.empty((n_iter, config.generator.latent_dim))
    iter_embeddings = np.empty((n_iter, config.generator.embed_dim))
    score_traces = np.empty((k_sys, n_iter))
    fmr_traces = (
        np.empty((k_sys, n_iter)) if config.fmr_thresholds is not None else None
    )

    with ExitStack() as stack:
        gen = stack.enter_context(Generator(config.generator))
        matchers = [
            stack.enter_context(Matcher(s.matcher)) for s in config.systems
        ]
        for t in range(n_iter):
            latents = es.ask()
            embeddings = np.empty((m, config.generator.embed_dim))
            for i, z in enumerate(latents):
                try:
                    embeddings[i] = gen(z)
                except Exception as e:
                    raise LveRunError(
                        f"generator failed at iteration {t}, candidate {i}: {e}"
                    ) from e
            per_system = np.empty((k_sys, m))
            rows = []  # per-system full score matrices for the FMR traces
            for k, (matcher, system) in enumerate(zip(matchers, config.systems)):
                try:
                    mat = matcher.score_matrix(embeddings, system.enrollment.matrix)
                except Exception as e:
                    raise LveRunError(
                        f"matcher {system.name!r} failed at iteration {t}: {e}"
                    ) from e
                per_system[k] = mat.mean(axis=1)
                rows.append(mat)
            fitness = aggregate(per_system, weights)
            best = get_best_face(latents, embeddings, fitness)
            iter_scores[t] = best.score
            iter_latents[t] = best.latent
            iter_embeddings[t] = best.embedding
            score_traces[:, t] = per_system[:, best.index]
            if fmr_traces is not None:
                for k in range(k_sys):
                    fmr_traces[k, t] = np.mean(
                        rows[k][best.index] >= config.fmr_thresholds[k]
                    )
            es.tell(latents, -fitness)

    g = int(np.argmax(iter_scores))  # first max: earliest best iteration
    return LveResult(
        best_latent=iter_latents[g].copy(),
        best_embedding=iter_embeddings[g].copy(),
        best_score=float(iter_scores[g]),
        best_iteration=g,
        iteration_best_scores=iter_scores,
        iteration_best_latents=iter_latents,
        system_score_traces=score_traces,
        system_fmr_traces=fmr_traces,
        system_names=tuple(s.name for s in config.systems),
    )


@dataclass(frozen=True)
class ConflictReport:
    """Joint-run FMRs next to single-run FMRs, system by system.

    ``conflicted[k]`` flags systems whose final FMR in the joint run
    fell below what the same budget achieved attacking system k alone;
    several True entries mean the systems pull the search in different
    directions and a shared master sample costs real coverage.
    """

    systems: tuple[str, ...]
    combined_final_fmr: tuple[float, ...]
    single_final_fmr: tuple[float, ...]
    conflicted: tuple[bool, ...]


def conflict_report(
    combined: LveResult, singles: Sequence[LveResult]
) -> ConflictReport:
    """Compare a K-system run against K single-system runs."""
    k_sys = combined.system_score_traces.shape[0]
    if len(singles) != k_sys:
        raise ValueError(
            f"combined run has {k_sys} systems but {len(singles)} single runs given"
        )
    if combined.system_fmr_traces is None:
        raise ValueError("combined run has no FMR traces; set fmr_thresholds")
    for i, single in enumerate(singles):
        if single.system_fmr_traces is None:
            raise ValueError(
                f"single run {i} has no FMR traces; set fmr_thresholds"
            )
        if single.system_fmr_traces.shape[0] != 1:
            raise ValueError(f"single run {i} attacks more than one system")
    combined_fmr = tuple(float(v) for v in combined.system_fmr_traces[:, -1])
    single_fmr = tuple(
        float(s.system_fmr_traces[0, -1]) for s in singles
    )
    conflicted = tuple(c < s for c, s in zip(combined_fmr, single_fmr))
    return ConflictReport(
        systems=combined.system_names,
        combined_final_fmr=combined_fmr,
        single_final_fmr=single_fmr,
        conflicted=conflicted,
    )
