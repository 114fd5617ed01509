"""Synthetic identity spaces and embedding-density diagnostics.

The sampler builds an enrollment database from a Gaussian mixture:
cluster centers anchor broad demographic-like groups, each identity
gets a center drawn inside one cluster, and each enrolled item jitters
around its identity center. Keeping the within-identity spread well
below the cluster spread is what makes identities separable at all, so
that ordering is validated, not assumed.

Density diagnostics project embeddings to two dimensions with PCA and
estimate density there with a product-Gaussian kernel, using a Scott
factor bandwidth per axis (n**(-1/6) times that axis's standard
deviation). The headline number is a percentile: the fraction of
reference points whose own density is at or below the query point's.
A master sample that keeps landing in the top half of that ranking is
sitting in a crowded part of identity space, which is the whole trick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_vector
from .enrollment import EnrollmentSet, Template

__all__ = [
    "ClusterSpec",
    "MixtureSpec",
    "DensityReport",
    "sample_enrollment",
    "density_report",
    "density_percentile",
    "project_pca",
]


@dataclass(frozen=True)
class ClusterSpec:
    center: np.ndarray
    sigma: float
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        if not (self.sigma > 0):
            raise ValueError(f"cluster sigma must be positive, got {self.sigma}")
        if not (self.weight > 0):
            raise ValueError(f"cluster weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class MixtureSpec:
    """Recipe for one synthetic identity space."""

    embed_dim: int
    clusters: tuple[ClusterSpec, ...]
    identities: int
    items_per_identity: int
    within_identity_sigma: float
    seed: int = 0

    def validate(self) -> None:
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if not self.clusters:
            raise ValueError("mixture needs at least one cluster")
        for i, c in enumerate(self.clusters):
            if c.center.size != self.embed_dim:
                raise ValueError(
                    f"cluster {i} center has dim {c.center.size}, "
                    f"expected {self.embed_dim}"
                )
        total = sum(c.weight for c in self.clusters)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"cluster weights sum to {total}, expected 1")
        if self.identities < 1:
            raise ValueError(f"identities must be >= 1, got {self.identities}")
        if self.items_per_identity < 1:
            raise ValueError(
                f"items_per_identity must be >= 1, got {self.items_per_identity}"
            )
        if not (self.within_identity_sigma > 0):
            raise ValueError("within_identity_sigma must be positive")
        min_cluster = min(c.sigma for c in self.clusters)
        if self.within_identity_sigma >= min_cluster:
            raise ValueError(
                f"within_identity_sigma {self.within_identity_sigma} must be "
                f"smaller than the smallest cluster sigma {min_cluster}"
            )

    def centers_matrix(self) -> np.ndarray:
        return np.stack([c.center for c in self.clusters])


def sample_enrollment(spec: MixtureSpec, name: str = "synthetic") -> EnrollmentSet:
    """Draw a full enrollment database from the mixture, seeded.

    Identity labels are id_0000-style (wider if needed); item labels are
    item_00-style. Identity i's cluster, its center offset, and its item
    jitters all come from one PCG64 stream, so equal specs give equal
    databases.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    weights = np.array([c.weight for c in spec.clusters])
    weights = weights / weights.sum()  # exact renormalization for rng.choice
    assignments = rng.choice(len(spec.clusters), size=spec.identities, p=weights)
    id_width = max(4, len(str(spec.identities - 1)))
    item_width = max(2, len(str(spec.items_per_identity - 1)))
    templates = []
    for i in range(spec.identities):
        cluster = spec.clusters[int(assignments[i])]
        center = cluster.center + cluster.sigma * rng.standard_normal(spec.embed_dim)
        jitter = spec.within_identity_sigma * rng.standard_normal(
            (spec.items_per_identity, spec.embed_dim)
        )
        for j in range(spec.items_per_identity):
            templates.append(
                Template(
                    identity=f"id_{i:0{id_width}d}",
                    item_id=f"item_{j:0{item_width}d}",
                    embedding=center + jitter[j],
                )
            )
    return EnrollmentSet(name, spec.embed_dim, templates)


def project_pca(reference: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PCA projection of reference (and extra queries) onto 2 components.

    Returns (reference_xy, queries_xy, variance_explained). Raises when
    the reference cloud has rank below 2, since a 2-D density estimate
    is meaningless on a line; add embedding dimensions or jitter the
    points if that happens.
    """
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim != 2 or ref.shape[0] < 3:
        raise ValueError("reference must be a 2-D array with at least 3 rows")
    mean = ref.mean(axis=0)
    centered = ref - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    if len(svals) < 2 or svals[1] <= svals[0] * 1e-12 or svals[0] == 0.0:
        raise ValueError(
            "reference cloud has rank < 2; add dimensions or jitter the points"
        )
    components = vt[:2]
    total = float(np.sum(svals**2))
    explained = (svals[:2] ** 2) / total
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    return centered @ components.T, (q - mean) @ components.T, explained


def _kde_2d(points: np.ndarray, queries: np.ndarray, bandwidth: tuple[float, float]) -> np.ndarray:
    bx, by = bandwidth
    dx = (queries[:, 0, None] - points[None, :, 0]) / bx
    dy = (queries[:, 1, None] - points[None, :, 1]) / by
    kernel = np.exp(-0.5 * (dx * dx + dy * dy))
    return kernel.sum(axis=1) / (points.shape[0] * 2.0 * np.pi * bx * by)


@dataclass(frozen=True)
class DensityReport:
    """Where one embedding sits in the projected density landscape."""

    percentile: float
    density: float
    bandwidth: tuple[float, float]
    query_xy: tuple[float, float]
    reference_xy: np.ndarray  # (n, 2)
    variance_explained: tuple[float, float]


def density_report(point, reference, bandwidth: float | None = None) -> DensityReport:
    """Project, estimate density, and rank one point among the reference.

    ``bandwidth`` overrides the per-axis Scott factor with one shared
    value for both axes; leave it None for the default rule. Percentile
    is the fraction of reference points whose density is <= the query's,
    so 1.0 means the densest spot seen and 0.0 the most isolated.
    """
    query = as_vector(point, name="point")
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim != 2:
        raise ValueError(f"reference must be 2-D, got shape {ref.shape}")
    if ref.shape[0] < 10:
        raise ValueError(
            f"need at least 10 reference points, got {ref.shape[0]}"
        )
    if query.size != ref.shape[1]:
        raise ValueError(
            f"point has dim {query.size}, reference has dim {ref.shape[1]}"
        )
    if not np.all(np.isfinite(ref)):
        raise ValueError("reference contains non-finite values")
    ref_xy, query_xy, explained = project_pca(ref, query[None, :])
    n = ref_xy.shape[0]
    if bandwidth is None:
        factor = float(n) ** (-1.0 / 6.0)
        bw = (
            factor * float(np.std(ref_xy[:, 0])),
            factor * float(np.std(ref_xy[:, 1])),
        )
    else:
        if not (bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        bw = (float(bandwidth), float(bandwidth))
    if bw[0] <= 0 or bw[1] <= 0:
        raise ValueError("degenerate projection axis; cannot form a bandwidth")
    ref_density = _kde_2d(ref_xy, ref_xy, bw)
    query_density = float(_kde_2d(ref_xy, query_xy, bw)[0])
    percentile = float(np.mean(ref_density <= query_density))
    return DensityReport(
        percentile=percentile,
        density=query_density,
        bandwidth=bw,
        query_xy=(float(query_xy[0, 0]), float(query_xy[0, 1])),
        reference_xy=ref_xy,
        variance_explained=(float(explained[0]), float(explained[1])),
    )


def density_percentile(point, reference, bandwidth: float | None = None) -> float:
    """Just the percentile from :func:`density_report`."""
    return density_report(point, reference, bandwidth).percentile
