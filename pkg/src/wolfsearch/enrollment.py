"""Enrollment databases: labelled template collections and their CSV form.

File format (one embedding per row):

    identity,item,x0,x1,...,x{e-1}
    id_0000,item_00,0.12,-1.5,...

Coordinates are written with ``repr`` so a write/read cycle is
bit-exact. Labels pass through ``csv`` quoting, so commas or quotes in
identity names survive too. Error messages carry the file line number
(header is line 1) because hand-edited CSVs are a fact of life.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_vector

__all__ = [
    "Template",
    "EnrollmentSet",
    "load_enrollment",
    "save_enrollment",
    "split_dev_eval",
    "genuine_impostor_pairs",
]


@dataclass(frozen=True)
class Template:
    """One enrolled embedding with its identity and item labels."""

    identity: str
    item_id: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.identity:
            raise ValueError("identity label must be nonempty")
        if not self.item_id:
            raise ValueError("item label must be nonempty")
        object.__setattr__(
            self, "embedding", as_vector(self.embedding, name="embedding")
        )


@dataclass
class EnrollmentSet:
    """Validated collection of templates sharing one embedding dim."""

    name: str
    embed_dim: int
    templates: list[Template]
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if not self.templates:
            raise ValueError(f"enrollment set {self.name!r} has no templates")
        seen: set[tuple[str, str]] = set()
        for i, t in enumerate(self.templates):
            if t.embedding.size != self.embed_dim:
                raise ValueError(
                    f"template {i} ({t.identity}/{t.item_id}) has dim "
                    f"{t.embedding.size}, set declares {self.embed_dim}"
                )
            key = (t.identity, t.item_id)
            if key in seen:
                raise ValueError(f"duplicate (identity, item) pair {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.templates)

    @property
    def matrix(self) -> np.ndarray:
        """All embeddings stacked row-wise, cached after first use."""
        if self._matrix is None:
            self._matrix = np.stack([t.embedding for t in self.templates])
        return self._matrix

    def identities(self) -> list[str]:
        """Sorted unique identity labels."""
        return sorted({t.identity for t in self.templates})

    def by_identity(self) -> dict[str, list[Template]]:
        out: dict[str, list[Template]] = {}
        for t in self.templates:
            out.setdefault(t.identity, []).append(t)
        return out

    def subset(self, identities, name: str | None = None) -> "EnrollmentSet":
        """Templates whose identity is in ``identities``, original order."""
        wanted = set(identities)
        kept = [t for t in self.templates if t.identity in wanted]
        return EnrollmentSet(name or self.name, self.embed_dim, kept)


def save_enrollment(enrollment: EnrollmentSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["identity", "item"] + [f"x{i}" for i in range(enrollment.embed_dim)]
        )
        for t in enrollment.templates:
            writer.writerow(
                [t.identity, t.item_id] + [repr(float(v)) for v in t.embedding]
            )


def load_enrollment(path, name: str | None = None) -> EnrollmentSet:
    """Read an embedding CSV; raises ValueError naming the bad line."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: file is empty")
    header = rows[0]
    if len(header) < 3 or header[:2] != ["identity", "item"]:
        raise ValueError(
            f"{path}: line 1: header must start with identity,item,x0,..."
        )
    dim = len(header) - 2
    expected = [f"x{i}" for i in range(dim)]
    if header[2:] != expected:
        raise ValueError(
            f"{path}: line 1: coordinate columns must be x0..x{dim - 1} in order"
        )
    templates = []
    seen: set[tuple[str, str]] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue  # tolerate a trailing blank line
        if len(row) != dim + 2:
            raise ValueError(
                f"{path}: line {lineno}: has {len(row)} cells, expected {dim + 2}"
            )
        identity, item_id = row[0], row[1]
        values = np.empty(dim)
        for j, cell in enumerate(row[2:]):
            try:
                values[j] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: could not parse {cell!r} in column x{j}"
                ) from None
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{path}: line {lineno}: non-finite coordinate")
        key = (identity, item_id)
        if key in seen:
            raise ValueError(
                f"{path}: line {lineno}: duplicate (identity, item) pair {key}"
            )
        seen.add(key)
        try:
            templates.append(Template(identity, item_id, values))
        except ValueError as e:
            raise ValueError(f"{path}: line {lineno}: {e}") from None
    if not templates:
        raise ValueError(f"{path}: no template rows")
    if name is None:
        name = str(path)
    return EnrollmentSet(name, dim, templates)


def split_dev_eval(
    enrollment: EnrollmentSet, dev_fraction: float, seed: int
) -> tuple[EnrollmentSet, EnrollmentSet]:
    """Disjoint identity-level split into (dev, eval) sets.

    The dev side gets ceil(dev_fraction * n_identities) identities,
    chosen by a seeded permutation of the sorted identity list so the
    split depends only on the labels and the seed, not on row order.
    """
    if not (0.0 < dev_fraction < 1.0):
        raise ValueError(f"dev_fraction must be in (0, 1), got {dev_fraction}")
    ids = enrollment.identities()
    if len(ids) < 2:
        raise ValueError("need at least 2 identities to split")
    # the 1e-9 guard keeps 0.1 * 30 from ceiling to 4 via float error
    n_dev = int(math.ceil(dev_fraction * len(ids) - 1e-9))
    if n_dev >= len(ids):
        raise ValueError(
            f"dev_fraction {dev_fraction} leaves no evaluation identities"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(ids))
    dev_ids = {ids[i] for i in order[:n_dev]}
    dev = enrollment.subset(dev_ids, name=f"{enrollment.name}-dev")
    ev = enrollment.subset(
        [i for i in ids if i not in dev_ids], name=f"{enrollment.name}-eval"
    )
    return dev, ev


def genuine_impostor_pairs(
    enrollment: EnrollmentSet,
    max_impostor: int = 1_000_000,
    seed: int = 0,
) -> tuple[list[tuple[Template, Template]], list[tuple[Template, Template]]]:
    """All genuine pairs plus (possibly subsampled) impostor pairs.

    Genuine pairs are every unordered same-identity pair; impostor pairs
    are every cross-identity pair unless their count would exceed
    ``max_impostor``, in which case a uniform sample without replacement
    of that size is drawn with the given seed.
    """
    ts = enrollment.templates
    n = len(ts)
    genuine: list[tuple[Template, Template]] = []
    impostor: list[tuple[Template, Template]] = []
    n_genuine = 0
    counts: dict[str, int] = {}
    for t in ts:
        counts[t.identity] = counts.get(t.identity, 0) + 1
    for c in counts.values():
        n_genuine += c * (c - 1) // 2
    total = n * (n - 1) // 2
    n_impostor = total - n_genuine

    for i in range(n):
        for j in range(i + 1, n):
            if ts[i].identity == ts[j].identity:
                genuine.append((ts[i], ts[j]))

    if n_impostor <= max_impostor:
        for i in range(n):
            for j in range(i + 1, n):
                if ts[i].identity != ts[j].identity:
                    impostor.append((ts[i], ts[j]))
        return genuine, impostor

    # Too many cross pairs to enumerate: rejection-sample distinct ones.
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < max_impostor:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j:
            continue
        if i > j:
            i, j = j, i
        if ts[i].identity == ts[j].identity or (i, j) in chosen:
            continue
        chosen.add((i, j))
    for i, j in sorted(chosen):
        impostor.append((ts[i], ts[j]))
    return genuine, impostor
