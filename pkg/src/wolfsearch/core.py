"""Shared vector primitives: validation, dot products, normalization.

Every vector crossing a module boundary is a finite 1-D float64 array.
``as_vector`` is the single entry point that enforces this; the helpers
below assume validated input when called internally and re-validate at
public call sites.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

__all__ = ["DimensionMismatchError", "as_vector", "dot", "l2_normalize", "norm"]


class DimensionMismatchError(ValueError):
    """Two vectors (or a vector and an expected size) disagree in length."""


def as_vector(values: Sequence[float] | np.ndarray, *, name: str = "vector") -> np.ndarray:
    """Validate and convert to a finite 1-D float64 array (always a copy)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must have at least one element")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def dot(a, b) -> float:
    """Dot product of two equal-length vectors."""
    va = as_vector(a, name="a")
    vb = as_vector(b, name="b")
    check_same_dim(va, vb)
    return float(np.dot(va, vb))


def norm(v) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(as_vector(v)))


def l2_normalize(v) -> np.ndarray:
    """Scale a nonzero vector to unit Euclidean norm."""
    vec = as_vector(v)
    n = np.linalg.norm(vec)
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return vec / n
