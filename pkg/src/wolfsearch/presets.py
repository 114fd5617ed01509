"""Canonical synthetic scenario used by the demos and regression suite.

The identity space is a curved manifold patch: four Gaussian clusters
whose centers sit on an arc of radius 6 inside a seeded random 2-plane,
with the heaviest cluster second from the arc's end. That layout gives
the properties a master-sample search needs to demonstrate anything:
identities crowd a shared dense core instead of splitting into
orthogonal islands, genuine and impostor score distributions overlap
enough for a nonzero equal error rate, and the density landscape has a
clear ridge the search can climb onto.

The generator is anchored the way real generative models behave: the
bias is the "average identity" (the arc's mean direction at the
expected enrolled norm), and the mixing matrix is orthogonal to the
bias so latent motion steers direction rather than scale. Without that
orthogonality the search radius performs a random walk (cosine scoring
is scale-blind) and found masters drift off the enrolled shell.

A single top-level seed fans out to sub-seeds with fixed offsets, so
"seed 3" names one complete reproducible world:

    seed + 0    search (optimizer stream)
    seed + 1    enrollment sampling
    seed + 2    dev/eval split
    seed + 101  arc plane orientation
    seed + 102  generator mixing matrix
    seed + 201  alternate arc plane (shifted-mixture second system)
"""

from __future__ import annotations

import numpy as np

from .enrollment import EnrollmentSet, split_dev_eval
from .generators import GeneratorSpec
from .lve import LveConfig, SystemSpec
from .matchers import MatcherSpec
from .synth import ClusterSpec, MixtureSpec, sample_enrollment

__all__ = [
    "EMBED_DIM",
    "LATENT_DIM",
    "standard_mixture_spec",
    "standard_generator_spec",
    "standard_system",
    "standard_lve_config",
    "standard_world",
    "shifted_mixture_spec",
    "standard_experiment_config",
]

EMBED_DIM = 32
LATENT_DIM = 32
CLUSTER_WEIGHTS = (0.2, 0.4, 0.3, 0.1)
ARC_RADIUS = 6.0
ARC_STEP = 0.25  # radians between neighboring cluster centers
CLUSTER_SIGMA = 0.35
WITHIN_SIGMA = 0.28
IDENTITIES = 100
ITEMS_PER_IDENTITY = 3
WARP_TAU = 0.3
MATRIX_SCALE = 2.0

# Expected norm of an enrolled item: arc radius plus isotropic spread.
ENROLLED_NORM = float(
    np.sqrt(ARC_RADIUS**2 + (CLUSTER_SIGMA**2 + WITHIN_SIGMA**2) * EMBED_DIM)
)


def _arc_centers(seed: int) -> np.ndarray:
    """Cluster centers along an arc in a seeded random 2-plane."""
    rng = np.random.Generator(np.random.PCG64(seed))
    basis, _ = np.linalg.qr(rng.standard_normal((EMBED_DIM, 2)))
    phis = ARC_STEP * np.arange(len(CLUSTER_WEIGHTS))
    return ARC_RADIUS * (
        np.outer(np.cos(phis), basis[:, 0]) + np.outer(np.sin(phis), basis[:, 1])
    )


def _mixture_from_centers(centers: np.ndarray, sample_seed: int) -> MixtureSpec:
    clusters = tuple(
        ClusterSpec(center=centers[i], sigma=CLUSTER_SIGMA, weight=w)
        for i, w in enumerate(CLUSTER_WEIGHTS)
    )
    return MixtureSpec(
        embed_dim=EMBED_DIM,
        clusters=clusters,
        identities=IDENTITIES,
        items_per_identity=ITEMS_PER_IDENTITY,
        within_identity_sigma=WITHIN_SIGMA,
        seed=sample_seed,
    )


def standard_mixture_spec(seed: int) -> MixtureSpec:
    return _mixture_from_centers(_arc_centers(seed + 101), seed + 1)


def shifted_mixture_spec(seed: int) -> MixtureSpec:
    """Same recipe, independent arc plane: the disagreeing second system."""
    return _mixture_from_centers(_arc_centers(seed + 201), seed + 3)


def standard_generator_spec(seed: int, mixture: MixtureSpec) -> GeneratorSpec:
    """Cluster-warp generator anchored at the mixture's average identity.

    latent 0 maps to the bias (the mean-direction point on the enrolled
    shell); the mixing matrix spans only directions orthogonal to the
    bias, scaled so a unit latent prior explores well past the arc's
    extent. The warp pulls outputs toward the cluster rays.
    """
    centers = mixture.centers_matrix()
    mean_dir = centers.mean(axis=0)
    bias = ENROLLED_NORM * mean_dir / np.linalg.norm(mean_dir)
    bhat = bias / np.linalg.norm(bias)
    rng = np.random.Generator(np.random.PCG64(seed + 102))
    raw = rng.standard_normal((EMBED_DIM, LATENT_DIM))
    matrix = MATRIX_SCALE * (raw - np.outer(bhat, bhat @ raw)) / np.sqrt(LATENT_DIM)
    return GeneratorSpec(
        kind="cluster_warp",
        latent_dim=LATENT_DIM,
        embed_dim=EMBED_DIM,
        matrix=matrix,
        bias=bias,
        centroids=centers,
        tau=WARP_TAU,
    )


def standard_system(enrollment: EnrollmentSet, name: str = "system_0") -> SystemSpec:
    return SystemSpec(
        matcher=MatcherSpec(kind="cosine", embed_dim=enrollment.embed_dim),
        enrollment=enrollment,
        weight=1.0,
        name=name,
    )


def standard_lve_config(
    seed: int,
    systems: tuple[SystemSpec, ...],
    generator: GeneratorSpec,
    iterations: int = 200,
    fmr_thresholds: tuple[float, ...] | None = None,
) -> LveConfig:
    return LveConfig(
        generator=generator,
        systems=systems,
        population=22,
        iterations=iterations,
        sigma0=0.5,
        mean0=None,
        seed=seed,
        fmr_thresholds=fmr_thresholds,
    )


def standard_world(
    seed: int, dev_fraction: float = 0.5
) -> tuple[MixtureSpec, EnrollmentSet, EnrollmentSet, EnrollmentSet, GeneratorSpec]:
    """One-call setup: mixture, full/dev/eval enrollments, generator."""
    mixture = standard_mixture_spec(seed)
    full = sample_enrollment(mixture, name=f"standard-{seed}")
    dev, ev = split_dev_eval(full, dev_fraction, seed + 2)
    generator = standard_generator_spec(seed, mixture)
    return mixture, full, dev, ev, generator


def standard_experiment_config(seed: int, iterations: int = 200) -> dict:
    """The standard scenario as a config document (json.dump-ready).

    All numeric payloads are written out explicitly, so the file is a
    complete record: rereading it reproduces this exact world even if
    the preset constants change later.
    """
    mixture = standard_mixture_spec(seed)
    generator = standard_generator_spec(seed, mixture)
    return {
        "seed": seed,
        "synth": {
            "embed_dim": EMBED_DIM,
            "clusters": [
                {
                    "center": [float(v) for v in c.center],
                    "sigma": float(c.sigma),
                    "weight": float(c.weight),
                }
                for c in mixture.clusters
            ],
            "identities": IDENTITIES,
            "items_per_identity": ITEMS_PER_IDENTITY,
            "within_identity_sigma": WITHIN_SIGMA,
            "dev_fraction": 0.5,
        },
        "generator": {
            "kind": generator.kind,
            "latent_dim": generator.latent_dim,
            "embed_dim": generator.embed_dim,
            "matrix": [[float(v) for v in row] for row in generator.matrix],
            "bias": [float(v) for v in generator.bias],
            "centroids": [[float(v) for v in row] for row in generator.centroids],
            "tau": generator.tau,
        },
        "systems": [
            {
                "name": "arc_a",
                "matcher": {"kind": "cosine"},
                "enrollment": "enrollment.csv",
                "weight": 1.0,
            }
        ],
        "lve": {
            "population": 22,
            "iterations": iterations,
            "sigma0": 0.5,
            "fmr_trace": "auto",
            "settings": {"single-a": ["arc_a"]},
        },
        "eval": {
            "dev": "dev.csv",
            "eval": "eval.csv",
            "matcher": {"kind": "cosine"},
        },
    }
