"""Experiment orchestration: seeded multi-run experiments, logs, aggregation.

Modes:

* ``per_feature_set`` - one plain LinUCB per candidate feature set, the
  design behind the per-gender fairness tables;
* ``nested`` - the two-level selector, the design behind the optimal-set
  convergence figures;
* ``calibrate`` - offline tool that evaluates every candidate set with
  long-horizon LinUCB runs, scores them with the combined criterion, and
  writes a new profile carrying the winning set index.

Determinism contract: every run's random streams derive from
``SeedSequence((master_seed, cell_index, run_index, stream))`` with stream
0 for the environment and 1 for the policies, so results are byte-identical
for any parallelism degree and adding runs never perturbs existing ones.
Timestamps honor ``SOURCE_DATE_EPOCH`` for fully reproducible manifests.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .environment import EnvProfile, Gender, profile_to_dict, save_profile
from .errors import (AggregationError, ConfigurationError, DegenerateDataError)
from .experiment import simulate_linucb_run, simulate_nested_run
from .metrics import (RunLog, cumulative_optimal_set_fraction,
                      interval_optimal_set_fraction, read_run_log,
                      summarize_run, write_run_log)
from .nested import (DEFAULT_FEATURE_SETS, FeatureSet, PerformanceCriterion,
                     nested_init)
from .profiles import load_profile
from .stats import Alternative, ci95, cohens_d, welch_test

MANIFEST_SCHEMA_VERSION = 1
CONFIG_SCHEMA_VERSION = 1

MODES = ("per_feature_set", "nested", "calibrate")

#: hypothesis labels keyed by expected direction, as stored in profiles
DIRECTION_TO_ALTERNATIVE = {
    "women_better": Alternative.WOMEN_BETTER,
    "women_worse": Alternative.WOMEN_WORSE,
    "neutral": Alternative.UNEQUAL,
}


@dataclass
class ExperimentConfig:
    mode: str = "per_feature_set"
    profile_path: str = "calibrated"
    feature_sets: tuple[FeatureSet, ...] = DEFAULT_FEATURE_SETS
    alpha: float = 0.3
    priors: tuple[tuple[float, float], ...] | None = None  # defaults Beta(1,2)
    criterion: PerformanceCriterion = field(default_factory=PerformanceCriterion)
    t_steps: int = 50_000
    runs: int = 100
    master_seed: int = 0
    output_dir: str = "out"
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.t_steps < 1:
            raise ConfigurationError("t_steps must be >= 1")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be >= 0")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be >= 1")
        self.feature_sets = tuple(self.feature_sets)
        if self.priors is None:
            self.priors = tuple((1.0, 2.0) for _ in self.feature_sets)
        self.priors = tuple((float(a), float(b)) for a, b in self.priors)
        if len(self.priors) != len(self.feature_sets):
            raise ConfigurationError("priors length must match feature_sets")

    # ---- JSON round trip -------------------------------------------------
    def to_dict(self, include_execution: bool = True) -> dict:
        doc = {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "mode": self.mode,
            "profile_path": str(self.profile_path),
            "feature_sets": [[int(m) for m in fs.members] for fs in self.feature_sets],
            "feature_set_ids": [fs.id for fs in self.feature_sets],
            "alpha": self.alpha,
            "priors": [list(p) for p in self.priors],
            "criterion": {"utility_weight": self.criterion.utility_weight,
                          "fairness_weight": self.criterion.fairness_weight},
            "t": self.t_steps,
            "runs": self.runs,
            "master_seed": self.master_seed,
        }
        if include_execution:
            doc["output_dir"] = str(self.output_dir)
            doc["parallelism"] = self.parallelism
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if doc.get("schema_version", CONFIG_SCHEMA_VERSION) != CONFIG_SCHEMA_VERSION:
            raise ConfigurationError("unsupported config schema_version")
        kwargs = {}
        if "feature_sets" in doc and doc["feature_sets"] is not None:
            ids = doc.get("feature_set_ids") or list(range(len(doc["feature_sets"])))
            kwargs["feature_sets"] = tuple(
                FeatureSet(id=i, members=tuple(members))
                for i, members in zip(ids, doc["feature_sets"]))
        if doc.get("priors") is not None:
            kwargs["priors"] = tuple(tuple(p) for p in doc["priors"])
        crit = doc.get("criterion") or {}
        kwargs["criterion"] = PerformanceCriterion(
            utility_weight=crit.get("utility_weight", 0.5),
            fairness_weight=crit.get("fairness_weight", 0.5))
        return cls(
            mode=doc.get("mode", "per_feature_set"),
            profile_path=doc.get("profile_path", "calibrated"),
            alpha=doc.get("alpha", 0.3),
            t_steps=doc.get("t", 50_000),
            runs=doc.get("runs", 100),
            master_seed=doc.get("master_seed", 0),
            output_dir=doc.get("output_dir", "out"),
            parallelism=doc.get("parallelism", 1),
            **kwargs,
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid config JSON in {path}: {exc}") from exc
        return cls.from_dict(doc)


def seed_keys(master_seed: int, cell_index: int, run_index: int):
    """Counter-based derivation of the (environment, policy) seed tuples."""
    return ((master_seed, cell_index, run_index, 0),
            (master_seed, cell_index, run_index, 1))


def make_rngs(master_seed: int, cell_index: int, run_index: int):
    env_key, policy_key = seed_keys(master_seed, cell_index, run_index)
    return (np.random.default_rng(np.random.SeedSequence(env_key)),
            np.random.default_rng(np.random.SeedSequence(policy_key)))


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _timestamp() -> int:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return int(epoch) if epoch is not None else int(time.time())


# ---------------------------------------------------------------------------
# workers
# ---------------------------------------------------------------------------

def _run_one(args) -> dict:
    (config_doc, profile_doc, cell_index, cell_name, fs_members, fs_id,
     run_index, out_dir) = args
    from .environment import profile_from_dict  # local import for spawn

    config = ExperimentConfig.from_dict(config_doc)
    profile = profile_from_dict(profile_doc)
    env_rng, policy_rng = make_rngs(config.master_seed, cell_index, run_index)
    if config.mode == "nested":
        state = nested_init(config.feature_sets, config.priors, config.alpha,
                            config.criterion)
        log = simulate_nested_run(profile, state, config.t_steps,
                                  env_rng, policy_rng)
    else:
        fs = FeatureSet(id=fs_id, members=tuple(fs_members))
        log, _ = simulate_linucb_run(profile, fs, config.alpha,
                                     config.t_steps, env_rng)
    path = Path(out_dir) / "runs" / cell_name / f"{run_index:03d}.csv"
    write_run_log(log, path)
    return {"cell": cell_name, "run_index": run_index,
            "path": str(path.relative_to(out_dir)),
            "sha256": _sha256_file(path), "records": len(log)}


def _execute_runs(config: ExperimentConfig, profile: EnvProfile,
                  cells: list[tuple[int, str, FeatureSet | None]],
                  out_dir: Path) -> list[dict]:
    config_doc = config.to_dict()
    profile_doc = profile_to_dict(profile)
    jobs = []
    for cell_index, cell_name, fs in cells:
        for run_index in range(config.runs):
            jobs.append((config_doc, profile_doc, cell_index, cell_name,
                         [int(m) for m in fs.members] if fs else [],
                         fs.id if fs else -1, run_index, str(out_dir)))
    if config.parallelism == 1:
        results = [_run_one(job) for job in jobs]
    else:
        ctx = get_context("spawn")
        with ctx.Pool(config.parallelism) as pool:
            results = pool.map(_run_one, jobs)
    results.sort(key=lambda r: (r["cell"], r["run_index"]))
    return results


def _write_manifest(config: ExperimentConfig, profile: EnvProfile,
                    out_dir: Path, run_entries: list[dict],
                    extra: dict | None = None) -> dict:
    # the hashed config excludes execution details (parallelism, paths),
    # which never influence the produced bytes
    config_text = json.dumps(config.to_dict(include_execution=False),
                             sort_keys=True)
    profile_text = json.dumps(profile_to_dict(profile), sort_keys=True)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "mode": config.mode,
        "config": config.to_dict(include_execution=False),
        "execution": {"output_dir": str(config.output_dir),
                      "parallelism": config.parallelism},
        "config_sha256": _sha256_text(config_text),
        "profile_sha256": _sha256_text(profile_text),
        "profile_metadata": profile.metadata,
        "optimal_feature_set_index": profile.optimal_feature_set_index,
        "seed_scheme": "SeedSequence((master_seed, cell_index, run_index, stream)); "
                       "stream 0 = environment, 1 = policies",
        "runs": run_entries,
        "software": {"package": "fairbandit", "version": _pkg_version,
                     "numpy": np.__version__},
        "created_unix": _timestamp(),
        "independent_sampling_note": (
            "interaction sequences are sampled independently per cell; "
            "runs are not paired across cells"),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# experiment entry points
# ---------------------------------------------------------------------------

def run_per_feature_set(config: ExperimentConfig) -> dict:
    """One fresh LinUCB per (feature set, run); logs under runs/fs<id>/."""
    if config.mode != "per_feature_set":
        raise ConfigurationError("config mode must be 'per_feature_set'")
    profile = load_profile(config.profile_path)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(i, f"fs{fs.id}", fs) for i, fs in enumerate(config.feature_sets)]
    entries = _execute_runs(config, profile, cells, out_dir)
    return _write_manifest(config, profile, out_dir, entries)


def run_nested(config: ExperimentConfig) -> dict:
    """Fresh NestedState per run; logs under runs/nested/."""
    if config.mode != "nested":
        raise ConfigurationError("config mode must be 'nested'")
    profile = load_profile(config.profile_path)
    warning = None
    if profile.optimal_feature_set_index is None:
        warning = ("profile lacks optimal_feature_set_index; "
                   "set-optimality is logged as unknown")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = _execute_runs(config, profile, [(0, "nested", None)], out_dir)
    extra = {"warning": warning} if warning else None
    return _write_manifest(config, profile, out_dir, entries, extra)


def calibrate(config: ExperimentConfig, out_profile_path: str | Path) -> EnvProfile:
    """Establish the optimal feature set and write the calibrated profile.

    Runs ``config.runs`` (>= 20 recommended) LinUCB runs per candidate set,
    scores each run with the combined criterion, and stores the argmax set
    index plus the per-set criterion table in the output profile's
    metadata. Overlapping 95% intervals between the top two sets are
    recorded as a warning rather than an error.
    """
    if config.mode != "calibrate":
        raise ConfigurationError("config mode must be 'calibrate'")
    profile = load_profile(config.profile_path)
    table = {}
    for cell_index, fs in enumerate(config.feature_sets):
        values = []
        for run_index in range(config.runs):
            env_rng, _ = make_rngs(config.master_seed, cell_index, run_index)
            log, _state = simulate_linucb_run(profile, fs, config.alpha,
                                              config.t_steps, env_rng)
            summary = summarize_run(log, config.criterion)
            if summary.criterion_value is None:
                raise DegenerateDataError(
                    f"run {run_index} of set {fs.id} lacks one gender; "
                    "increase t_steps")
            values.append(summary.criterion_value)
        lo, hi = ci95(values) if len(values) >= 2 else (values[0], values[0])
        table[fs.id] = {"criterion_mean": float(np.mean(values)),
                        "ci95": [lo, hi], "runs": len(values)}
    ranked = sorted(table, key=lambda sid: table[sid]["criterion_mean"],
                    reverse=True)
    best = ranked[0]
    warning = None
    if len(ranked) > 1:
        second = ranked[1]
        if table[best]["ci95"][0] <= table[second]["ci95"][1]:
            warning = (f"sets {best} and {second} are statistically "
                       "indistinguishable at the top (overlapping 95% CIs)")
    calibrated = EnvProfile(
        woman_proportion=profile.woman_proportion,
        cluster_distribution=profile.cluster_distribution,
        session_distribution=profile.session_distribution,
        feature_means=profile.feature_means,
        feature_stds=profile.feature_stds,
        reward_model=profile.reward_model,
        optimal_feature_set_index=int(best),
        metadata={**profile.metadata,
                  "calibration": {
                      "criterion_table": table,
                      "runs_per_set": config.runs,
                      "t": config.t_steps,
                      "master_seed": config.master_seed,
                      "utility_weight": config.criterion.utility_weight,
                      "fairness_weight": config.criterion.fairness_weight,
                      "warning": warning,
                  }},
    )
    save_profile(calibrated, out_profile_path)
    return calibrated


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _load_cell_logs(logs_dir: Path, cell: str, entries: list[dict]) -> list[RunLog]:
    logs = []
    for entry in entries:
        path = logs_dir / entry["path"]
        if not path.exists():
            raise AggregationError(f"cell {cell}: missing run log {path}")
        logs.append(read_run_log(path))
    if not logs:
        raise AggregationError(f"cell {cell}: no run logs found")
    return logs


def _fig_checkpoints(t_steps: int) -> list[int]:
    step = max(t_steps // 200, 1)
    points = list(range(step, t_steps + 1, step))
    if t_steps >= 10_000 and 10_000 not in points:
        points.append(10_000)
    if points[-1] != t_steps:
        points.append(t_steps)
    return sorted(set(points))


def aggregate(logs_dir: str | Path, out_dir: str | Path | None = None,
              render: bool = True) -> dict:
    """Build tables and figure series from a finished experiment directory.

    Per-feature-set runs produce ``tables/summary.csv`` (per metric, set and
    gender: mean, std, hypothesis label, p-value, Cohen's d) plus figure
    series 1-2; nested runs produce the cumulative and per-interval
    optimal-set fraction series 3-4 with min-to-max envelopes. Figures are
    rendered to PNG next to their JSON series unless ``render`` is False.
    """
    logs_dir = Path(logs_dir)
    out_dir = Path(out_dir) if out_dir is not None else logs_dir
    manifest_path = logs_dir / "manifest.json"
    if not manifest_path.exists():
        raise AggregationError(f"no manifest.json under {logs_dir}")
    manifest = json.loads(manifest_path.read_text())
    mode = manifest["mode"]
    criterion = PerformanceCriterion(
        utility_weight=manifest["config"]["criterion"]["utility_weight"],
        fairness_weight=manifest["config"]["criterion"]["fairness_weight"])

    by_cell: dict[str, list[dict]] = {}
    for entry in manifest["runs"]:
        by_cell.setdefault(entry["cell"], []).append(entry)
    for cell in by_cell:
        by_cell[cell].sort(key=lambda e: e["run_index"])

    (out_dir / "tables").mkdir(parents=True, exist_ok=True)
    (out_dir / "figures").mkdir(parents=True, exist_ok=True)
    outputs: dict = {"mode": mode}

    if mode in ("per_feature_set", "calibrate"):
        outputs.update(_aggregate_per_feature_set(
            logs_dir, out_dir, manifest, by_cell, criterion))
    elif mode == "nested":
        outputs.update(_aggregate_nested(logs_dir, out_dir, manifest, by_cell))
    else:
        raise AggregationError(f"cannot aggregate logs for mode {mode!r}")

    if render:
        from .figures import render_figures
        outputs["rendered"] = render_figures(out_dir / "figures")
    return outputs


def _direction_for_set(manifest: dict, set_id: int) -> str:
    hyp = (manifest.get("profile_metadata") or {}).get("hypothesis_config") or {}
    for direction, ids in hyp.items():
        if set_id in ids:
            return direction
    return "neutral"


def _aggregate_per_feature_set(logs_dir, out_dir, manifest, by_cell, criterion):
    metric_defs = (
        ("avg_reward", True),          # larger is better
        ("suboptimal_fraction", False),
    )
    rows = []
    fig_series = {m: {"man": {"mean": [], "ci95_lo": [], "ci95_hi": []},
                      "woman": {"mean": [], "ci95_lo": [], "ci95_hi": []}}
                  for m, _ in metric_defs}
    set_ids = []
    criterion_rows = []

    for cell in sorted(by_cell, key=lambda c: int(c[2:]) if c[2:].isdigit() else 0):
        set_id = int(cell[2:])
        set_ids.append(set_id)
        logs = _load_cell_logs(logs_dir, cell, by_cell[cell])
        per_run = {m: {g: [] for g in Gender} for m, _ in metric_defs}
        crit_values = []
        for log in logs:
            summary = summarize_run(log, criterion)
            for g in Gender:
                if g in summary.mean_reward:
                    per_run["avg_reward"][g].append(summary.mean_reward[g])
                if g in summary.suboptimal_fraction:
                    per_run["suboptimal_fraction"][g].append(
                        summary.suboptimal_fraction[g])
            if summary.criterion_value is not None:
                crit_values.append(summary.criterion_value)
        direction = _direction_for_set(manifest, set_id)
        alternative = DIRECTION_TO_ALTERNATIVE[direction]
        if crit_values:
            criterion_rows.append((set_id, float(np.mean(crit_values))))

        for metric, larger_better in metric_defs:
            women = np.asarray(per_run[metric][Gender.WOMAN])
            men = np.asarray(per_run[metric][Gender.MAN])
            stats_cols = {"hypothesis": direction, "p_value": "", "cohens_d": ""}
            if women.size >= 2 and men.size >= 2:
                try:
                    test = welch_test(women, men, alternative,
                                      larger_is_better=larger_better)
                    effect = cohens_d(float(women.mean()),
                                      float(women.std(ddof=1)), women.size,
                                      float(men.mean()),
                                      float(men.std(ddof=1)), men.size)
                    stats_cols["p_value"] = repr(test.p_value)
                    stats_cols["cohens_d"] = repr(effect.cohens_d)
                except DegenerateDataError:
                    pass
            for g, sample in ((Gender.MAN, men), (Gender.WOMAN, women)):
                if sample.size == 0:
                    raise AggregationError(
                        f"cell {cell}: no {g.name.lower()} records")
                rows.append({
                    "metric": metric,
                    "feature_set": set_id,
                    "gender": g.name.lower(),
                    "mean": repr(float(sample.mean())),
                    "std": repr(float(sample.std(ddof=1)) if sample.size > 1 else 0.0),
                    **stats_cols,
                })
                lo, hi = ci95(sample) if sample.size >= 2 else (sample[0], sample[0])
                series = fig_series[metric][g.name.lower()]
                series["mean"].append(float(sample.mean()))
                series["ci95_lo"].append(lo)
                series["ci95_hi"].append(hi)

    header = ["metric", "feature_set", "gender", "mean", "std",
              "hypothesis", "p_value", "cohens_d"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[k]) for k in header))
    (out_dir / "tables" / "summary.csv").write_text("\n".join(lines) + "\n")

    for index, (metric, _) in enumerate(metric_defs, start=1):
        doc = {
            "figure": index,
            "metric": metric,
            "feature_sets": set_ids,
            "series": fig_series[metric],
            "n_runs": len(manifest["runs"]) // max(len(by_cell), 1),
            "error_bars": "ci95",
            # identical data for both axis variants; the zoom is presentational
            "axis_variants": {"zero_based": 0.0,
                              "zoomed": 0.38 if metric == "avg_reward" else 0.10},
        }
        (out_dir / "figures" / f"fig{index}.json").write_text(
            json.dumps(doc, indent=1) + "\n")

    if criterion_rows:
        lines = ["feature_set,criterion_mean"]
        for sid, value in criterion_rows:
            lines.append(f"{sid},{value!r}")
        (out_dir / "tables" / "criterion.csv").write_text("\n".join(lines) + "\n")
    return {"summary_rows": len(rows), "sets": set_ids}


def _aggregate_nested(logs_dir, out_dir, manifest, by_cell):
    if "nested" not in by_cell:
        raise AggregationError("no 'nested' cell in the manifest")
    logs = _load_cell_logs(logs_dir, "nested", by_cell["nested"])
    t_steps = manifest["config"]["t"]
    checkpoints = _fig_checkpoints(t_steps)
    n_intervals = 10
    bounds = np.linspace(0, t_steps, n_intervals + 1, dtype=int)

    cumulative = np.zeros((len(logs), len(checkpoints)))
    intervals = np.zeros((len(logs), n_intervals))
    for i, log in enumerate(logs):
        for j, upto in enumerate(checkpoints):
            cumulative[i, j] = cumulative_optimal_set_fraction(log, upto)
        for k in range(n_intervals):
            intervals[i, k] = interval_optimal_set_fraction(
                log, int(bounds[k]) + 1, int(bounds[k + 1]))

    fig3 = {
        "figure": 3,
        "x": checkpoints,
        "mean": cumulative.mean(axis=0).tolist(),
        "min": cumulative.min(axis=0).tolist(),
        "max": cumulative.max(axis=0).tolist(),
        "n_runs": len(logs),
        "envelope": "min_to_max",
    }
    if t_steps >= 10_000:
        fig3["anchors"] = {"cumulative_at_10000": float(
            cumulative[:, checkpoints.index(10_000)].mean())}
    fig4 = {
        "figure": 4,
        "intervals": [[int(bounds[k]) + 1, int(bounds[k + 1])]
                      for k in range(n_intervals)],
        "mean": intervals.mean(axis=0).tolist(),
        "min": intervals.min(axis=0).tolist(),
        "max": intervals.max(axis=0).tolist(),
        "n_runs": len(logs),
        "envelope": "min_to_max",
    }
    (out_dir / "figures" / "fig3.json").write_text(json.dumps(fig3, indent=1) + "\n")
    (out_dir / "figures" / "fig4.json").write_text(json.dumps(fig4, indent=1) + "\n")

    lines = ["interval_lo,interval_hi,mean_fraction,min_fraction,max_fraction"]
    for k in range(n_intervals):
        lines.append(f"{bounds[k] + 1},{bounds[k + 1]},"
                     f"{intervals[:, k].mean()!r},{intervals[:, k].min()!r},"
                     f"{intervals[:, k].max()!r}")
    (out_dir / "tables" / "optimal_set_fractions.csv").write_text(
        "\n".join(lines) + "\n")
    return {"n_runs": len(logs),
            "final_interval_mean": float(intervals[:, -1].mean())}
