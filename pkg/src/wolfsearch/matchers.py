"""Similarity scorers over embeddings.

All matchers share one convention: higher score means more similar, and
a verification decision at threshold t accepts when score >= t. Two
synthetic kinds are built in (cosine and negative euclidean distance);
``external`` scores through an oracle process, one pair per request.

The vectorized entry points (:meth:`Matcher.score_matrix` and friends)
are what the search loop uses; the scalar :func:`match` exists for
spot checks and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError
from .oracle import OracleEndpoint, OracleProcess

__all__ = ["MatcherSpec", "Matcher", "match", "mean_score"]

KINDS = ("cosine", "neg_euclidean", "external")


@dataclass(frozen=True)
class MatcherSpec:
    kind: str
    embed_dim: int
    external: OracleEndpoint | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown matcher kind {self.kind!r}")
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.kind == "external" and self.external is None:
            raise ValueError("external matcher needs an oracle endpoint")


def _as_matrix(arr, dim: int, name: str) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    if mat.ndim != 2:
        raise ValueError(f"{name} must be at most 2-D, got shape {mat.shape}")
    if mat.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one vector")
    if mat.shape[1] != dim:
        raise DimensionMismatchError(
            f"{name} have dim {mat.shape[1]}, matcher expects {dim}"
        )
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} contain non-finite values")
    return mat


def _unit_rows(mat: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cannot normalize zero vector ({name} {zero[0]})")
    return mat / norms[:, None]


class Matcher:
    """Matcher handle; owns the oracle process for ``external``."""

    def __init__(self, spec: MatcherSpec):
        spec.validate()
        self.spec = spec
        self._proc: OracleProcess | None = None

    # -- scoring ------------------------------------------------------

    def score_matrix(self, probes, templates) -> np.ndarray:
        """All pairwise scores, shape (n_probes, n_templates)."""
        p = _as_matrix(probes, self.spec.embed_dim, "probes")
        t = _as_matrix(templates, self.spec.embed_dim, "templates")
        if self.spec.kind == "cosine":
            return np.clip(_unit_rows(p, "probe") @ _unit_rows(t, "template").T, -1.0, 1.0)
        if self.spec.kind == "neg_euclidean":
            diff = p[:, None, :] - t[None, :, :]
            return -np.sqrt(np.sum(diff * diff, axis=2))
        out = np.empty((p.shape[0], t.shape[0]))
        for i in range(p.shape[0]):
            for j in range(t.shape[0]):
                out[i, j] = self._oracle().match(p[i], t[j])
        return out

    def match(self, probe, template) -> float:
        """Score one probe against one template."""
        return float(self.score_matrix([probe], [template])[0, 0])

    def mean_scores(self, probes, templates) -> np.ndarray:
        """Per-probe mean score over all templates, shape (n_probes,)."""
        return self.score_matrix(probes, templates).mean(axis=1)

    def mean_score(self, probe, templates) -> float:
        """Mean score of one probe over a template collection."""
        return float(self.mean_scores([probe], templates)[0])

    def match_pairs(self, a, b) -> np.ndarray:
        """Row-wise scores of two aligned collections, shape (n,)."""
        am = _as_matrix(a, self.spec.embed_dim, "left vectors")
        bm = _as_matrix(b, self.spec.embed_dim, "right vectors")
        if am.shape[0] != bm.shape[0]:
            raise ValueError(
                f"pair collections differ in length: {am.shape[0]} vs {bm.shape[0]}"
            )
        if self.spec.kind == "cosine":
            ua = _unit_rows(am, "left vector")
            ub = _unit_rows(bm, "right vector")
            return np.clip(np.sum(ua * ub, axis=1), -1.0, 1.0)
        if self.spec.kind == "neg_euclidean":
            diff = am - bm
            return -np.sqrt(np.sum(diff * diff, axis=1))
        return np.array(
            [self._oracle().match(am[i], bm[i]) for i in range(am.shape[0])]
        )

    # -- lifecycle ----------------------------------------------------

    def _oracle(self) -> OracleProcess:
        if self._proc is None:
            self._proc = OracleProcess(self.spec.external)
        return self._proc

    def close(self) -> None:
        if self._proc is not None:
            self._proc.close()
            self._proc = None

    def __enter__(self) -> "Matcher":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def match(spec: MatcherSpec, probe, template) -> float:
    """One-shot pair score for synthetic matcher kinds."""
    if spec.kind == "external":
        raise ValueError("external matchers require a Matcher instance")
    return Matcher(spec).match(probe, template)


def mean_score(spec: MatcherSpec, probe, templates) -> float:
    """One-shot mean score for synthetic matcher kinds."""
    if spec.kind == "external":
        raise ValueError("external matchers require a Matcher instance")
    return Matcher(spec).mean_score(probe, templates)
