"""Experiment config parsing and report serialization.

One JSON config document describes a whole experiment: the synthetic
identity space (``synth``), the generator, the target ``systems``, the
search settings (``lve``), the evaluation inputs (``eval``), and output
file names (``output``). Unknown keys anywhere are hard errors, so a
typo fails loudly instead of silently running defaults.

All numeric payloads (matrices, centers, biases) are explicit JSON
arrays; the config is a complete, self-contained record of the
experiment. Relative paths inside the config resolve against the
output directory, which makes a synth -> lve -> eval -> density
pipeline self-contained in one directory.

Writers emit deterministic bytes: JSON with sorted keys and repr-exact
floats, CSV with repr-exact floats and plain "\n" line endings. No
timestamps anywhere.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .enrollment import EnrollmentSet, Template, save_enrollment
from .generators import GeneratorSpec
from .lve import LveResult
from .matchers import MatcherSpec
from .oracle import OracleEndpoint
from .synth import ClusterSpec, DensityReport, MixtureSpec

__all__ = [
    "ConfigError",
    "OutputNames",
    "SystemConfig",
    "EvalConfig",
    "LveSettings",
    "ExperimentConfig",
    "load_experiment_config",
    "resolve_path",
    "write_master_csv",
    "read_master_csv",
    "write_trace_csv",
    "write_result_json",
    "write_eval_report_json",
    "write_density_json",
    "write_projection_csv",
    "write_provenance_json",
    "write_json",
]


class ConfigError(ValueError):
    """The experiment config is malformed; message names section and key."""


def _check_keys(section: str, obj: dict, allowed: set[str], required: set[str]) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"section {section!r} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key {sorted(unknown)[0]!r} in section {section!r}"
        )
    missing = required - set(obj)
    if missing:
        raise ConfigError(
            f"missing key {sorted(missing)[0]!r} in section {section!r}"
        )


def _number(section: str, obj: dict, key: str, default=None):
    value = obj.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return value


def _integer(section: str, obj: dict, key: str, default=None):
    value = obj.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    return value


def _string(section: str, obj: dict, key: str, default=None):
    value = obj.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{section}.{key} must be a string, got {value!r}")
    return value


def _vector(section: str, obj, key: str) -> np.ndarray:
    value = obj[key] if isinstance(obj, dict) else obj
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key} must be an array of numbers") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{section}.{key} must be a nonempty finite 1-D array")
    return arr


def _matrix(section: str, obj: dict, key: str) -> np.ndarray:
    try:
        arr = np.array(obj[key], dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key} must be a 2-D array of numbers") from None
    if arr.ndim != 2 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{section}.{key} must be a nonempty finite 2-D array")
    return arr


def _endpoint(section: str, obj: dict, verbs: frozenset[str]) -> OracleEndpoint:
    command = obj.get("command")
    if (
        not isinstance(command, list)
        or not command
        or not all(isinstance(c, str) for c in command)
    ):
        raise ConfigError(f"{section}.command must be a nonempty list of strings")
    timeout = _integer(section, obj, "timeout_ms", 10000)
    return OracleEndpoint(command=tuple(command), verbs=verbs, timeout_ms=timeout)


# -- section parsers ---------------------------------------------------


def _parse_synth(obj: dict, manifest_seed: int) -> tuple[MixtureSpec, float]:
    section = "synth"
    _check_keys(
        section,
        obj,
        {
            "embed_dim",
            "clusters",
            "identities",
            "items_per_identity",
            "within_identity_sigma",
            "dev_fraction",
        },
        {"embed_dim", "clusters", "identities", "items_per_identity",
         "within_identity_sigma"},
    )
    embed_dim = _integer(section, obj, "embed_dim")
    raw_clusters = obj["clusters"]
    if not isinstance(raw_clusters, list) or not raw_clusters:
        raise ConfigError("synth.clusters must be a nonempty list")
    clusters = []
    for i, c in enumerate(raw_clusters):
        csec = f"synth.clusters[{i}]"
        _check_keys(csec, c, {"center", "sigma", "weight"}, {"center", "sigma", "weight"})
        clusters.append(
            ClusterSpec(
                center=_vector(csec, c, "center"),
                sigma=float(_number(csec, c, "sigma")),
                weight=float(_number(csec, c, "weight")),
            )
        )
    spec = MixtureSpec(
        embed_dim=embed_dim,
        clusters=tuple(clusters),
        identities=_integer(section, obj, "identities"),
        items_per_identity=_integer(section, obj, "items_per_identity"),
        within_identity_sigma=float(_number(section, obj, "within_identity_sigma")),
        seed=manifest_seed + 1,
    )
    try:
        spec.validate()
    except ValueError as e:
        raise ConfigError(f"synth: {e}") from None
    dev_fraction = float(_number(section, obj, "dev_fraction", 0.5))
    if not (0.0 < dev_fraction < 1.0):
        raise ConfigError(f"synth.dev_fraction must be in (0, 1), got {dev_fraction}")
    return spec, dev_fraction


def _parse_generator(obj: dict) -> GeneratorSpec:
    section = "generator"
    _check_keys(
        section,
        obj,
        {"kind", "latent_dim", "embed_dim", "matrix", "bias", "centroids",
         "tau", "command", "timeout_ms"},
        {"kind", "latent_dim", "embed_dim"},
    )
    kind = _string(section, obj, "kind")
    latent_dim = _integer(section, obj, "latent_dim")
    embed_dim = _integer(section, obj, "embed_dim")
    matrix = bias = centroids = None
    external = None
    tau = 0.0
    if kind == "external":
        external = _endpoint(section, obj, frozenset({"GEN"}))
        external = OracleEndpoint(
            command=external.command,
            verbs=external.verbs,
            latent_dim=latent_dim,
            embed_dim=embed_dim,
            timeout_ms=external.timeout_ms,
        )
    else:
        if "command" in obj or "timeout_ms" in obj:
            raise ConfigError(f"generator.command only applies to kind 'external'")
        if "matrix" in obj:
            matrix = _matrix(section, obj, "matrix")
        if "bias" in obj:
            bias = _vector(section, obj, "bias")
        if "centroids" in obj:
            centroids = _matrix(section, obj, "centroids")
        if "tau" in obj:
            tau = float(_number(section, obj, "tau"))
    spec = GeneratorSpec(
        kind=kind,
        latent_dim=latent_dim,
        embed_dim=embed_dim,
        matrix=matrix,
        bias=bias,
        centroids=centroids,
        tau=tau,
        external=external,
    )
    try:
        spec.validate()
    except ValueError as e:
        raise ConfigError(f"generator: {e}") from None
    return spec


@dataclass(frozen=True)
class SystemConfig:
    """One target system as configured (enrollment still a path)."""

    name: str
    matcher_kind: str
    enrollment: str
    weight: float
    matcher_endpoint: OracleEndpoint | None = None

    def matcher_spec(self, embed_dim: int) -> MatcherSpec:
        endpoint = self.matcher_endpoint
        if endpoint is not None:
            endpoint = OracleEndpoint(
                command=endpoint.command,
                verbs=endpoint.verbs,
                embed_dim=embed_dim,
                timeout_ms=endpoint.timeout_ms,
            )
        return MatcherSpec(
            kind=self.matcher_kind, embed_dim=embed_dim, external=endpoint
        )


def _parse_matcher(section: str, obj) -> tuple[str, OracleEndpoint | None]:
    _check_keys(section, obj, {"kind", "command", "timeout_ms"}, {"kind"})
    kind = _string(section, obj, "kind")
    endpoint = None
    if kind == "external":
        endpoint = _endpoint(section, obj, frozenset({"MATCH"}))
    elif "command" in obj or "timeout_ms" in obj:
        raise ConfigError(f"{section}.command only applies to kind 'external'")
    elif kind not in ("cosine", "neg_euclidean"):
        raise ConfigError(f"{section}.kind: unknown matcher kind {kind!r}")
    return kind, endpoint


def _parse_system(i: int, obj: dict) -> SystemConfig:
    section = f"systems[{i}]"
    _check_keys(
        section, obj, {"name", "matcher", "enrollment", "weight"},
        {"name", "matcher", "enrollment"},
    )
    name = _string(section, obj, "name")
    if not name:
        raise ConfigError(f"{section}.name must be nonempty")
    kind, endpoint = _parse_matcher(f"{section}.matcher", obj["matcher"])
    weight = float(_number(section, obj, "weight", 1.0))
    if not (weight > 0):
        raise ConfigError(f"{section}.weight must be positive, got {weight}")
    return SystemConfig(
        name=name,
        matcher_kind=kind,
        enrollment=_string(section, obj, "enrollment"),
        weight=weight,
        matcher_endpoint=endpoint,
    )


@dataclass(frozen=True)
class LveSettings:
    population: int = 22
    iterations: int = 1000
    sigma0: float = 0.5
    fmr_trace: str | tuple[float, ...] | None = "auto"
    settings: dict[str, tuple[str, ...]] = field(default_factory=dict)


def _parse_lve(obj: dict) -> LveSettings:
    section = "lve"
    _check_keys(
        section, obj,
        {"population", "iterations", "sigma0", "fmr_trace", "settings"},
        set(),
    )
    fmr_trace = obj.get("fmr_trace", "auto")
    if fmr_trace is not None and fmr_trace != "auto":
        if not isinstance(fmr_trace, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in fmr_trace
        ):
            raise ConfigError(
                'lve.fmr_trace must be "auto", null, or a list of thresholds'
            )
        fmr_trace = tuple(float(v) for v in fmr_trace)
    settings: dict[str, tuple[str, ...]] = {}
    raw = obj.get("settings", {})
    if not isinstance(raw, dict):
        raise ConfigError("lve.settings must be an object of name -> system list")
    for sname, syslist in raw.items():
        if (
            not isinstance(syslist, list)
            or not syslist
            or not all(isinstance(s, str) for s in syslist)
        ):
            raise ConfigError(
                f"lve.settings[{sname!r}] must be a nonempty list of system names"
            )
        settings[sname] = tuple(syslist)
    out = LveSettings(
        population=_integer(section, obj, "population", 22),
        iterations=_integer(section, obj, "iterations", 1000),
        sigma0=float(_number(section, obj, "sigma0", 0.5)),
        fmr_trace=fmr_trace,
        settings=settings,
    )
    if out.population < 2:
        raise ConfigError(f"lve.population must be >= 2, got {out.population}")
    if out.iterations < 1:
        raise ConfigError(f"lve.iterations must be >= 1, got {out.iterations}")
    if not (out.sigma0 > 0):
        raise ConfigError(f"lve.sigma0 must be positive, got {out.sigma0}")
    return out


@dataclass(frozen=True)
class EvalConfig:
    dev: str = "dev.csv"
    eval: str = "eval.csv"
    matcher_kind: str = "cosine"
    matcher_endpoint: OracleEndpoint | None = None
    density_reference: str | None = None
    bandwidth: float | None = None

    def matcher_spec(self, embed_dim: int) -> MatcherSpec:
        endpoint = self.matcher_endpoint
        if endpoint is not None:
            endpoint = OracleEndpoint(
                command=endpoint.command,
                verbs=endpoint.verbs,
                embed_dim=embed_dim,
                timeout_ms=endpoint.timeout_ms,
            )
        return MatcherSpec(
            kind=self.matcher_kind, embed_dim=embed_dim, external=endpoint
        )


def _parse_eval(obj: dict) -> EvalConfig:
    section = "eval"
    _check_keys(
        section, obj,
        {"dev", "eval", "matcher", "density_reference", "bandwidth"},
        set(),
    )
    kind, endpoint = ("cosine", None)
    if "matcher" in obj:
        kind, endpoint = _parse_matcher("eval.matcher", obj["matcher"])
    bandwidth = None
    if obj.get("bandwidth") is not None:
        bandwidth = float(_number(section, obj, "bandwidth"))
        if not (bandwidth > 0):
            raise ConfigError(f"eval.bandwidth must be positive, got {bandwidth}")
    density_reference = None
    if "density_reference" in obj:
        density_reference = _string(section, obj, "density_reference")
    return EvalConfig(
        dev=_string(section, obj, "dev", "dev.csv"),
        eval=_string(section, obj, "eval", "eval.csv"),
        matcher_kind=kind,
        matcher_endpoint=endpoint,
        density_reference=density_reference,
        bandwidth=bandwidth,
    )


@dataclass(frozen=True)
class OutputNames:
    enrollment: str = "enrollment.csv"
    dev: str = "dev.csv"
    eval: str = "eval.csv"
    provenance: str = "synth_provenance.json"
    result: str = "result.json"
    trace: str = "trace.csv"
    master: str = "master.csv"
    report: str = "eval_report.json"
    density: str = "density.json"
    projection: str = "projection.csv"


def _parse_output(obj: dict) -> OutputNames:
    fields = {
        "enrollment", "dev", "eval", "provenance", "result", "trace",
        "master", "report", "density", "projection",
    }
    _check_keys("output", obj, fields, set())
    kwargs = {k: _string("output", obj, k) for k in obj}
    return OutputNames(**kwargs)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description; paths not yet resolved or loaded."""

    seed: int
    synth: MixtureSpec | None
    dev_fraction: float
    generator: GeneratorSpec | None
    systems: tuple[SystemConfig, ...]
    lve: LveSettings
    eval: EvalConfig
    output: OutputNames

    def system_by_name(self, name: str) -> SystemConfig:
        for s in self.systems:
            if s.name == name:
                return s
        raise ConfigError(f"setting references unknown system {name!r}")

    def resolve_setting(self, name: str | None) -> tuple[SystemConfig, ...]:
        """Map a setting name to its systems; None means all systems."""
        if name is None:
            if not self.systems:
                raise ConfigError("config declares no systems")
            return self.systems
        if name not in self.lve.settings:
            known = ", ".join(sorted(self.lve.settings)) or "(none)"
            raise ConfigError(f"unknown setting {name!r}; config defines: {known}")
        return tuple(self.system_by_name(s) for s in self.lve.settings[name])


def load_experiment_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(
        "(root)", doc,
        {"seed", "synth", "generator", "systems", "lve", "eval", "output"},
        set(),
    )
    seed = _integer("(root)", doc, "seed", 0)
    if seed_override is not None:
        seed = seed_override
    synth = None
    dev_fraction = 0.5
    if "synth" in doc:
        synth, dev_fraction = _parse_synth(doc["synth"], seed)
    generator = _parse_generator(doc["generator"]) if "generator" in doc else None
    systems: list[SystemConfig] = []
    if "systems" in doc:
        if not isinstance(doc["systems"], list):
            raise ConfigError("systems must be a list")
        names = set()
        for i, s in enumerate(doc["systems"]):
            sc = _parse_system(i, s)
            if sc.name in names:
                raise ConfigError(f"duplicate system name {sc.name!r}")
            names.add(sc.name)
            systems.append(sc)
    lve = _parse_lve(doc["lve"]) if "lve" in doc else LveSettings()
    for sname, syslist in lve.settings.items():
        for ref in syslist:
            if not any(s.name == ref for s in systems):
                raise ConfigError(
                    f"lve.settings[{sname!r}] references unknown system {ref!r}"
                )
    ev = _parse_eval(doc["eval"]) if "eval" in doc else EvalConfig()
    output = _parse_output(doc["output"]) if "output" in doc else OutputNames()
    return ExperimentConfig(
        seed=seed,
        synth=synth,
        dev_fraction=dev_fraction,
        generator=generator,
        systems=tuple(systems),
        lve=lve,
        eval=ev,
        output=output,
    )


def resolve_path(path: str, out_dir: str) -> str:
    """Config-relative paths anchor at the output directory."""
    if os.path.isabs(path):
        return path
    return os.path.join(out_dir, path)


# -- writers -----------------------------------------------------------


def write_json(doc, path) -> None:
    """Deterministic JSON: sorted keys, 2-space indent, trailing newline."""
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_master_csv(embedding: np.ndarray, path) -> None:
    """A master sample is a one-row embedding CSV (identity 'master')."""
    one = EnrollmentSet(
        "master", int(embedding.size), [Template("master", "best", embedding)]
    )
    save_enrollment(one, path)


def read_master_csv(path) -> np.ndarray:
    from .enrollment import load_enrollment

    loaded = load_enrollment(path, name="master")
    if len(loaded) != 1:
        raise ValueError(
            f"{path}: expected exactly one master embedding row, got {len(loaded)}"
        )
    return loaded.templates[0].embedding


def write_trace_csv(result: LveResult, path) -> None:
    """Plot-ready per-iteration trace, one row per iteration.

    Columns: iteration, best_score, then system_<k>_mean for each
    system, then system_<k>_fmr for each system when thresholds were
    set during the run.
    """
    k_sys = result.system_score_traces.shape[0]
    header = ["iteration", "best_score"]
    header += [f"system_{k}_mean" for k in range(k_sys)]
    if result.system_fmr_traces is not None:
        header += [f"system_{k}_fmr" for k in range(k_sys)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(result.iteration_best_scores.size):
            row = [str(t), repr(float(result.iteration_best_scores[t]))]
            row += [
                repr(float(result.system_score_traces[k, t])) for k in range(k_sys)
            ]
            if result.system_fmr_traces is not None:
                row += [
                    repr(float(result.system_fmr_traces[k, t])) for k in range(k_sys)
                ]
            writer.writerow(row)


def write_result_json(
    result: LveResult,
    path,
    *,
    seed: int,
    population: int,
    setting: str | None = None,
    fmr_thresholds=None,
) -> None:
    doc = {
        "setting": setting,
        "seed": seed,
        "population": population,
        "iterations": int(result.iteration_best_scores.size),
        "systems": list(result.system_names),
        "fmr_thresholds": (
            None if fmr_thresholds is None else [float(v) for v in fmr_thresholds]
        ),
        "best_score": float(result.best_score),
        "best_iteration": int(result.best_iteration),
        "best_latent": [float(v) for v in result.best_latent],
        "best_embedding": [float(v) for v in result.best_embedding],
        "final_system_means": [
            float(v) for v in result.system_score_traces[:, -1]
        ],
        "final_system_fmrs": (
            None
            if result.system_fmr_traces is None
            else [float(v) for v in result.system_fmr_traces[:, -1]]
        ),
    }
    write_json(doc, path)


def write_eval_report_json(report, path, *, threshold_source: str) -> None:
    doc = {
        "threshold": float(report.threshold),
        "threshold_source": threshold_source,
        "eer": float(report.eer),
        "normal_fmr_dev": float(report.normal_fmr_dev),
        "normal_fmr_eval": float(report.normal_fmr_eval),
        "master_fmr_dev": float(report.master_fmr_dev),
        "master_fmr_eval": float(report.master_fmr_eval),
        "matched_identities": [
            {"identity": name, "score": float(score)}
            for name, score in report.matched_identities
        ],
        "n_matched": int(report.n_matched),
        "success": bool(report.success),
    }
    write_json(doc, path)


def write_density_json(report: DensityReport, path) -> None:
    doc = {
        "percentile": float(report.percentile),
        "density": float(report.density),
        "bandwidth": [float(report.bandwidth[0]), float(report.bandwidth[1])],
        "query_xy": [float(report.query_xy[0]), float(report.query_xy[1])],
        "variance_explained": [
            float(report.variance_explained[0]),
            float(report.variance_explained[1]),
        ],
        "n_reference": int(report.reference_xy.shape[0]),
    }
    write_json(doc, path)


def write_projection_csv(
    report: DensityReport, labels, path, query_label=("master", "best")
) -> None:
    """2-D projected coordinates: every reference point plus the query."""
    if len(labels) != report.reference_xy.shape[0]:
        raise ValueError(
            f"{len(labels)} labels for {report.reference_xy.shape[0]} points"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["identity", "item", "x", "y"])
        for (identity, item_id), (x, y) in zip(labels, report.reference_xy):
            writer.writerow([identity, item_id, repr(float(x)), repr(float(y))])
        writer.writerow(
            [
                query_label[0],
                query_label[1],
                repr(float(report.query_xy[0])),
                repr(float(report.query_xy[1])),
            ]
        )


def write_provenance_json(
    mixture: MixtureSpec, path, *, seed: int, dev_fraction: float
) -> None:
    doc = {
        "seed": seed,
        "sample_seed": mixture.seed,
        "split_seed": seed + 2,
        "dev_fraction": dev_fraction,
        "embed_dim": mixture.embed_dim,
        "identities": mixture.identities,
        "items_per_identity": mixture.items_per_identity,
        "within_identity_sigma": mixture.within_identity_sigma,
        "clusters": [
            {
                "center": [float(v) for v in c.center],
                "sigma": float(c.sigma),
                "weight": float(c.weight),
            }
            for c in mixture.clusters
        ],
    }
    write_json(doc, path)
