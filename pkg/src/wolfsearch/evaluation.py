"""Verification-system evaluation: thresholds, match rates, attack tests.

Decision rule everywhere: a comparison is a match when score >= t.

The equal error rate threshold is found by exhaustive scan over every
score value that can change a decision (the unique scores of both lists
plus -inf and +inf sentinels), so it is exact for the given samples
rather than an interpolation. Ties on |FMR - FNMR| resolve to the
smallest candidate threshold.

A master-sample test compares one probe against every enrolled template
and reports the fraction matched; the attack counts as a success when
that fraction strictly exceeds the system's normal false match rate at
the same threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_vector
from .enrollment import EnrollmentSet, genuine_impostor_pairs
from .matchers import Matcher

__all__ = [
    "ThresholdReport",
    "MasterFaceResult",
    "EvalReport",
    "eer_threshold",
    "fmr",
    "fnmr",
    "score_pairs",
    "master_face_test",
    "attack_success",
    "evaluate_master",
]


@dataclass(frozen=True)
class ThresholdReport:
    threshold: float
    eer: float
    fmr_at_threshold: float
    fnmr_at_threshold: float


def _scores_array(scores, name: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} scores must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} scores contain non-finite values")
    return arr


def fmr(impostor_scores, threshold: float) -> float:
    """Fraction of impostor comparisons accepted at the threshold."""
    arr = _scores_array(impostor_scores, "impostor")
    return float(np.mean(arr >= threshold))


def fnmr(genuine_scores, threshold: float) -> float:
    """Fraction of genuine comparisons rejected at the threshold."""
    arr = _scores_array(genuine_scores, "genuine")
    return float(np.mean(arr < threshold))


def eer_threshold(genuine_scores, impostor_scores) -> ThresholdReport:
    """Exact equal-error-rate threshold by candidate scan.

    Candidates are the sorted unique scores of both lists with -inf and
    +inf appended, which covers every achievable (FMR, FNMR) operating
    point. The first candidate minimizing |FMR - FNMR| wins, and the
    reported EER is the mean of the two rates there.
    """
    gen = np.sort(_scores_array(genuine_scores, "genuine"))
    imp = np.sort(_scores_array(impostor_scores, "impostor"))
    uniq = np.unique(np.concatenate([gen, imp]))
    candidates = np.concatenate([[-np.inf], uniq, [np.inf]])
    # score >= t accepts, so count impostors left of t and genuine left of t
    fmr_all = (imp.size - np.searchsorted(imp, candidates, side="left")) / imp.size
    fnmr_all = np.searchsorted(gen, candidates, side="left") / gen.size
    gap = np.abs(fmr_all - fnmr_all)
    i = int(np.argmin(gap))  # argmin takes the first, i.e. smallest threshold
    return ThresholdReport(
        threshold=float(candidates[i]),
        eer=float((fmr_all[i] + fnmr_all[i]) / 2.0),
        fmr_at_threshold=float(fmr_all[i]),
        fnmr_at_threshold=float(fnmr_all[i]),
    )


def score_pairs(matcher: Matcher, pairs) -> np.ndarray:
    """Scores for a list of (Template, Template) pairs, shape (n,)."""
    if len(pairs) == 0:
        raise ValueError("no pairs to score")
    left = np.stack([p[0].embedding for p in pairs])
    right = np.stack([p[1].embedding for p in pairs])
    return matcher.match_pairs(left, right)


@dataclass(frozen=True)
class MasterFaceResult:
    """One probe against a whole enrollment database at a threshold."""

    fmr: float
    matched: tuple[tuple[str, float], ...]  # (identity, best score), desc
    n_comparisons: int


def master_face_test(
    master, enrollment: EnrollmentSet, matcher: Matcher, threshold: float
) -> MasterFaceResult:
    """Compare a master embedding against every enrolled template.

    ``fmr`` is the fraction of all templates matched. ``matched`` lists
    each identity whose best template score reaches the threshold,
    ordered by that score descending (identity label breaks ties).
    """
    probe = as_vector(master, name="master")
    scores = matcher.score_matrix([probe], enrollment.matrix)[0]
    hit_fraction = float(np.mean(scores >= threshold))
    best: dict[str, float] = {}
    for t, s in zip(enrollment.templates, scores):
        if s >= threshold:
            if t.identity not in best or s > best[t.identity]:
                best[t.identity] = float(s)
    matched = tuple(sorted(best.items(), key=lambda kv: (-kv[1], kv[0])))
    return MasterFaceResult(
        fmr=hit_fraction, matched=matched, n_comparisons=len(enrollment)
    )


def attack_success(master_fmr: float, normal_fmr: float) -> bool:
    """Strictly higher false match rate than the normal test means success."""
    return master_fmr > normal_fmr


@dataclass(frozen=True)
class EvalReport:
    """Full master-sample evaluation against dev/eval splits."""

    threshold: float
    eer: float
    normal_fmr_dev: float
    normal_fmr_eval: float
    master_fmr_dev: float
    master_fmr_eval: float
    matched_identities: tuple[tuple[str, float], ...]
    n_matched: int
    success: bool


def evaluate_master(
    master,
    dev: EnrollmentSet,
    eval_set: EnrollmentSet,
    matcher: Matcher,
    pair_seed: int = 0,
) -> EvalReport:
    """Calibrate on dev, then judge the master sample on eval.

    The threshold is set at the dev split's equal error rate. Normal
    FMRs come from impostor pairs of each split; master FMRs from the
    master-sample test on each split. Success and the matched identity
    list are read off the eval side, which the threshold never saw.
    """
    dev_gen, dev_imp = genuine_impostor_pairs(dev, seed=pair_seed)
    if not dev_gen or not dev_imp:
        raise ValueError("dev split needs both genuine and impostor pairs")
    report = eer_threshold(
        score_pairs(matcher, dev_gen), score_pairs(matcher, dev_imp)
    )
    _, eval_imp = genuine_impostor_pairs(eval_set, seed=pair_seed)
    if not eval_imp:
        raise ValueError("eval split needs impostor pairs")
    normal_eval = fmr(score_pairs(matcher, eval_imp), report.threshold)
    master_dev = master_face_test(master, dev, matcher, report.threshold)
    master_eval = master_face_test(master, eval_set, matcher, report.threshold)
    return EvalReport(
        threshold=report.threshold,
        eer=report.eer,
        normal_fmr_dev=report.fmr_at_threshold,
        normal_fmr_eval=normal_eval,
        master_fmr_dev=master_dev.fmr,
        master_fmr_eval=master_eval.fmr,
        matched_identities=master_eval.matched,
        n_matched=len(master_eval.matched),
        success=attack_success(master_eval.fmr, normal_eval),
    )
