"""Latent-to-embedding generators.

A generator maps a latent vector into the identity (embedding) space a
matcher scores in. Synthetic kinds cover desk-scale experiments:

  - ``identity``: embedding equals the latent (dims must agree).
  - ``affine``: ``A @ z + b``.
  - ``cluster_warp``: affine output pulled toward its nearest centroid,
    producing the non-uniform, clustered embedding density that makes
    master samples possible in the first place. ``tau`` in [0, 1] sets
    the pull strength (0 = plain affine, 1 = snap to the centroid ray).

``external`` delegates to a separate process speaking the line protocol
in :mod:`wolfsearch.oracle`, which is how a real generative model plus
feature extractor attaches to the search without touching this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_vector
from .oracle import OracleEndpoint, OracleProcess

__all__ = ["GeneratorSpec", "Generator", "generate"]

KINDS = ("identity", "affine", "cluster_warp", "external")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    latent_dim: int
    embed_dim: int
    matrix: np.ndarray | None = None  # (embed_dim, latent_dim)
    bias: np.ndarray | None = None  # (embed_dim,), zeros when omitted
    centroids: np.ndarray | None = None  # (n_centroids, embed_dim)
    tau: float = 0.0
    external: OracleEndpoint | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.latent_dim < 1 or self.embed_dim < 1:
            raise ValueError("latent_dim and embed_dim must be >= 1")
        if self.kind == "identity" and self.latent_dim != self.embed_dim:
            raise ValueError(
                "identity generator needs latent_dim == embed_dim, "
                f"got {self.latent_dim} vs {self.embed_dim}"
            )
        if self.kind in ("affine", "cluster_warp"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} generator needs a matrix")
            if self.matrix.shape != (self.embed_dim, self.latent_dim):
                raise ValueError(
                    f"matrix shape {self.matrix.shape} does not match "
                    f"(embed_dim, latent_dim) = ({self.embed_dim}, {self.latent_dim})"
                )
            if self.bias is not None and self.bias.shape != (self.embed_dim,):
                raise ValueError(
                    f"bias shape {self.bias.shape}, expected ({self.embed_dim},)"
                )
        if self.kind == "cluster_warp":
            if not (0.0 <= self.tau <= 1.0):
                raise ValueError(f"tau must be in [0, 1], got {self.tau}")
            if self.centroids is None or len(self.centroids) == 0:
                raise ValueError("cluster_warp generator needs centroids")
            if self.centroids.shape[1] != self.embed_dim:
                raise ValueError(
                    f"centroids have dim {self.centroids.shape[1]}, "
                    f"expected embed_dim {self.embed_dim}"
                )
            norms = np.linalg.norm(self.centroids, axis=1)
            if np.any(norms == 0.0):
                raise ValueError("cluster_warp centroids must be nonzero")
        if self.kind == "external" and self.external is None:
            raise ValueError("external generator needs an oracle endpoint")


def generate(spec: GeneratorSpec, z) -> np.ndarray:
    """Map one latent vector to an embedding (synthetic kinds only).

    Pure and deterministic in (spec, z). External generators hold a
    process and must go through :class:`Generator`.
    """
    spec.validate()
    if spec.kind == "external":
        raise ValueError("external generators require a Generator instance")
    zv = as_vector(z, name="latent")
    if zv.size != spec.latent_dim:
        raise ValueError(
            f"latent has dim {zv.size}, generator expects {spec.latent_dim}"
        )
    if spec.kind == "identity":
        return zv
    bias = spec.bias if spec.bias is not None else 0.0
    r = spec.matrix @ zv + bias
    if spec.kind == "affine":
        return r
    # cluster_warp: convex pull toward the nearest centroid by cosine,
    # ties going to the lowest centroid index; zero output skips the warp.
    r_norm = np.linalg.norm(r)
    if r_norm == 0.0:
        return r
    unit_centroids = spec.centroids / np.linalg.norm(
        spec.centroids, axis=1, keepdims=True
    )
    k = int(np.argmax(unit_centroids @ (r / r_norm)))
    return (1.0 - spec.tau) * r + spec.tau * r_norm * unit_centroids[k]


class Generator:
    """Callable generator handle; owns the oracle process for ``external``."""

    def __init__(self, spec: GeneratorSpec):
        spec.validate()
        self.spec = spec
        self._proc: OracleProcess | None = None

    def __call__(self, z) -> np.ndarray:
        if self.spec.kind != "external":
            return generate(self.spec, z)
        zv = as_vector(z, name="latent")
        if zv.size != self.spec.latent_dim:
            raise ValueError(
                f"latent has dim {zv.size}, generator expects {self.spec.latent_dim}"
            )
        if self._proc is None:
            self._proc = OracleProcess(self.spec.external)
        out = self._proc.gen(zv)
        if out.size != self.spec.embed_dim:
            raise ValueError(
                f"oracle returned dim {out.size}, expected embed_dim {self.spec.embed_dim}"
            )
        return out

    def close(self) -> None:
        if self._proc is not None:
            self._proc.close()
            self._proc = None

    def __enter__(self) -> "Generator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
