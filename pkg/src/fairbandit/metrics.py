"""Per-run metrics computed from step logs.

A run log is a sequence of step records; ``RunLog`` stores the columns as
arrays (the run engines produce tens of thousands of steps) while
``StepRecord`` is the single-step view returned by ``nested_step``. All
metrics are pure functions of the log, so recomputing them from a persisted
CSV reproduces the in-run values exactly: floats round-trip through
``repr`` and each metric reduces the same arrays the same way.

CSV column order (one record per line):
``t,setId,action,reward,gender,cluster,session,isOptimalAction,isOptimalSet``
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .environment import ActionId, Gender
from .errors import ContractViolationError, MetricError

LOG_COLUMNS = ("t", "setId", "action", "reward", "gender", "cluster",
               "session", "isOptimalAction", "isOptimalSet")


@dataclass
class StepRecord:
    """One step of a run; ``is_optimal_set`` is None when uncalibrated."""

    t: int
    set_id: int | None
    action: ActionId
    reward: float
    gender: Gender
    cluster: int
    session: int
    is_optimal_action: bool
    is_optimal_set: bool | None


@dataclass
class RunSummary:
    """Run-level aggregates mirroring the reported performance measures."""

    mean_reward: dict[Gender, float]
    reward_std: dict[Gender, float]
    suboptimal_fraction: dict[Gender, float]
    overall_mean_reward: float
    fairness_gap: float | None
    criterion_value: float | None


class RunLog:
    """Columnar step log. ``set_id`` -1 means absent, ``is_optimal_set`` -1 unknown."""

    def __init__(self, t, set_id, action, reward, gender, cluster, session,
                 is_optimal_action, is_optimal_set):
        self.t = np.asarray(t, dtype=np.int64)
        self.set_id = np.asarray(set_id, dtype=np.int64)
        self.action = np.asarray(action, dtype=np.int8)
        self.reward = np.asarray(reward, dtype=np.float64)
        self.gender = np.asarray(gender, dtype=np.int8)
        self.cluster = np.asarray(cluster, dtype=np.int8)
        self.session = np.asarray(session, dtype=np.int8)
        self.is_optimal_action = np.asarray(is_optimal_action, dtype=bool)
        self.is_optimal_set = np.asarray(is_optimal_set, dtype=np.int8)

    def __len__(self) -> int:
        return self.t.shape[0]

    def records(self) -> Iterator[StepRecord]:
        for i in range(len(self)):
            yield StepRecord(
                t=int(self.t[i]),
                set_id=None if self.set_id[i] < 0 else int(self.set_id[i]),
                action=ActionId(int(self.action[i])),
                reward=float(self.reward[i]),
                gender=Gender(int(self.gender[i])),
                cluster=int(self.cluster[i]),
                session=int(self.session[i]),
                is_optimal_action=bool(self.is_optimal_action[i]),
                is_optimal_set=(None if self.is_optimal_set[i] < 0
                                else bool(self.is_optimal_set[i])),
            )

    @classmethod
    def from_records(cls, records: Iterable[StepRecord]) -> "RunLog":
        rows = list(records)
        return cls(
            t=[r.t for r in rows],
            set_id=[-1 if r.set_id is None else r.set_id for r in rows],
            action=[int(r.action) for r in rows],
            reward=[r.reward for r in rows],
            gender=[int(r.gender) for r in rows],
            cluster=[r.cluster for r in rows],
            session=[r.session for r in rows],
            is_optimal_action=[r.is_optimal_action for r in rows],
            is_optimal_set=[-1 if r.is_optimal_set is None else int(r.is_optimal_set)
                            for r in rows],
        )


def coerce_log(log) -> RunLog:
    if isinstance(log, RunLog):
        return log
    return RunLog.from_records(log)


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

_BOOL_TEXT = {True: "true", False: "false"}


def write_run_log(log, path: str | Path) -> None:
    log = coerce_log(log)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(LOG_COLUMNS)]
    for i in range(len(log)):
        opt_set = log.is_optimal_set[i]
        lines.append(",".join((
            str(int(log.t[i])),
            str(int(log.set_id[i])) if log.set_id[i] >= 0 else "",
            ActionId(int(log.action[i])).name,
            repr(float(log.reward[i])),
            Gender(int(log.gender[i])).name.lower(),
            str(int(log.cluster[i])),
            str(int(log.session[i])),
            _BOOL_TEXT[bool(log.is_optimal_action[i])],
            "" if opt_set < 0 else _BOOL_TEXT[bool(opt_set)],
        )))
    path.write_text("\n".join(lines) + "\n")


def read_run_log(path: str | Path) -> RunLog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LOG_COLUMNS:
            raise ContractViolationError(f"unexpected log header in {path}: {header}")
        t, set_id, action, reward = [], [], [], []
        gender, cluster, session = [], [], []
        opt_action, opt_set = [], []
        for row in reader:
            t.append(int(row[0]))
            set_id.append(int(row[1]) if row[1] else -1)
            action.append(int(ActionId[row[2]]))
            reward.append(float(row[3]))
            gender.append(int(Gender[row[4].upper()]))
            cluster.append(int(row[5]))
            session.append(int(row[6]))
            opt_action.append(row[7] == "true")
            opt_set.append(-1 if row[8] == "" else int(row[8] == "true"))
    return RunLog(t, set_id, action, reward, gender, cluster, session,
                  opt_action, opt_set)


# ---------------------------------------------------------------------------
# metric operations
# ---------------------------------------------------------------------------

def per_gender_average_reward(log) -> dict[Gender, float]:
    """Arithmetic mean reward per gender; absent genders are omitted."""
    log = coerce_log(log)
    out: dict[Gender, float] = {}
    for g in Gender:
        mask = log.gender == int(g)
        n = int(mask.sum())
        if n:
            out[g] = float(np.sum(log.reward[mask]) / n)
    return out


def per_gender_reward_std(log, ddof: int = 1) -> dict[Gender, float]:
    """Sample standard deviation of rewards per gender (ddof=1)."""
    log = coerce_log(log)
    out: dict[Gender, float] = {}
    for g in Gender:
        r = log.reward[log.gender == int(g)]
        if r.shape[0] > ddof:
            out[g] = float(np.std(r, ddof=ddof))
        elif r.shape[0]:
            out[g] = 0.0
    return out


def suboptimal_fraction(log) -> dict[Gender, float]:
    """Fraction of records per gender whose action was not the oracle optimum."""
    log = coerce_log(log)
    out: dict[Gender, float] = {}
    for g in Gender:
        mask = log.gender == int(g)
        n = int(mask.sum())
        if n:
            out[g] = float(np.sum(~log.is_optimal_action[mask]) / n)
    return out


def cumulative_optimal_set_fraction(log, up_to: int) -> float:
    """Fraction of steps with t <= up_to that chose the optimal feature set."""
    log = coerce_log(log)
    mask = log.t <= up_to
    n = int(mask.sum())
    if n == 0:
        raise MetricError(f"no records with t <= {up_to}")
    flags = log.is_optimal_set[mask]
    if np.any(flags < 0):
        raise MetricError(
            "optimal-set flags are unknown; profile lacks optimal_feature_set_index")
    return float(np.sum(flags == 1) / n)


def interval_optimal_set_fraction(log, lo: int, hi: int) -> float:
    """Optimal-set fraction over records with lo <= t <= hi (inclusive)."""
    if lo > hi:
        raise ContractViolationError(f"interval bounds out of order: {lo} > {hi}")
    log = coerce_log(log)
    mask = (log.t >= lo) & (log.t <= hi)
    n = int(mask.sum())
    if n == 0:
        raise MetricError(f"no records in interval [{lo}, {hi}]")
    flags = log.is_optimal_set[mask]
    if np.any(flags < 0):
        raise MetricError(
            "optimal-set flags are unknown; profile lacks optimal_feature_set_index")
    return float(np.sum(flags == 1) / n)


def fairness_gap(log) -> float | None:
    """|mean reward (men) - mean reward (women)|, None unless both present."""
    means = per_gender_average_reward(log)
    if Gender.MAN in means and Gender.WOMAN in means:
        return abs(means[Gender.MAN] - means[Gender.WOMAN])
    return None


def criterion_value(summary: RunSummary, criterion) -> float:
    """Weighted utility-plus-fairness score of a run summary.

    utility_weight * overall mean reward + fairness_weight * (1 - gender gap).
    """
    gap = summary.fairness_gap
    if gap is None:
        raise MetricError("criterion undefined: a gender is absent from the run")
    return (criterion.utility_weight * summary.overall_mean_reward
            + criterion.fairness_weight * (1.0 - gap))


def summarize_run(log, criterion=None) -> RunSummary:
    """Per-gender and overall aggregates for one run."""
    log = coerce_log(log)
    if len(log) == 0:
        raise MetricError("cannot summarize an empty log")
    means = per_gender_average_reward(log)
    stds = per_gender_reward_std(log)
    subopt = suboptimal_fraction(log)
    overall = float(np.sum(log.reward) / len(log))
    gap = (abs(means[Gender.MAN] - means[Gender.WOMAN])
           if Gender.MAN in means and Gender.WOMAN in means else None)
    summary = RunSummary(mean_reward=means, reward_std=stds,
                         suboptimal_fraction=subopt, overall_mean_reward=overall,
                         fairness_gap=gap, criterion_value=None)
    if criterion is not None and gap is not None:
        summary.criterion_value = criterion_value(summary, criterion)
    return summary
