"""Multivariate binary longitudinal datasets: file I/O and seeded simulation.

File layout: one row per (subject, time point). The first ``K`` columns are
0/1 responses, then the episode duration in minutes, then the standardized
time. Rows of one subject are contiguous; a new subject starts wherever the
duration changes or the time decreases. Files may be comma or whitespace
delimited, with or without a header line.

Simulation randomness: ``SeedSequence(seed).spawn(N)`` gives one child stream
per subject (PCG64), so subject ``i`` draws the same outcomes whether subjects
are generated sequentially or in parallel.
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import BetaCurveModel, ParamVector, SharedCurvatureModel


class DatasetParseError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass
class MblDataset:
    """Observation cells in subject order.

    ``subject[n]`` is the 0-based subject index of cell ``n``; ``duration``
    and ``time`` are per cell; ``y`` has shape ``(n_cells, K)``.
    """

    subject: np.ndarray
    duration: np.ndarray
    time: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.subject = np.asarray(self.subject, dtype=np.int64)
        self.duration = np.asarray(self.duration, dtype=float)
        self.time = np.asarray(self.time, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 2:
            raise DatasetParseError("outcomes must be a 2-D array")
        n = len(self.y)
        if not (len(self.subject) == len(self.duration) == len(self.time) == n):
            raise DatasetParseError("cell arrays have mismatched lengths")
        if n == 0:
            raise DatasetParseError("dataset has no observations")
        if not np.isin(self.y, (0.0, 1.0)).all():
            raise DatasetParseError("outcomes must be 0 or 1")
        if ((self.time < 0) | (self.time > 1) | ~np.isfinite(self.time)).any():
            raise DatasetParseError("times must lie in [0, 1]")
        if (~(self.duration > 0)).any():
            raise DatasetParseError("durations must be positive")
        if (np.diff(self.subject) < 0).any():
            raise DatasetParseError("cells must be grouped by subject")

    @property
    def n_cells(self) -> int:
        return len(self.y)

    @property
    def n_responses(self) -> int:
        return self.y.shape[1]

    @property
    def n_subjects(self) -> int:
        return len(np.unique(self.subject))

    def subjects(self) -> list["MblDataset"]:
        bounds = np.flatnonzero(np.diff(self.subject)) + 1
        return [self.take(idx) for idx in np.split(np.arange(self.n_cells), bounds)]

    def take(self, idx) -> "MblDataset":
        return MblDataset(self.subject[idx], self.duration[idx], self.time[idx], self.y[idx])

    def permute_subjects(self, order) -> "MblDataset":
        """Reorder whole subjects; ``order`` lists old subject positions."""
        parts = self.subjects()
        cells = [parts[i] for i in order]
        sizes = [p.n_cells for p in cells]
        return MblDataset(np.repeat(np.arange(len(cells)), sizes),
                          np.concatenate([p.duration for p in cells]),
                          np.concatenate([p.time for p in cells]),
                          np.concatenate([p.y for p in cells]))

    def equals(self, other: "MblDataset") -> bool:
        return (np.array_equal(self.subject, other.subject)
                and np.array_equal(self.duration, other.duration)
                and np.array_equal(self.time, other.time)
                and np.array_equal(self.y, other.y))


def _subject_ids(duration: np.ndarray, time: np.ndarray) -> np.ndarray:
    starts = np.zeros(len(time), dtype=bool)
    starts[1:] = (np.diff(duration) != 0) | (np.diff(time) < 0)
    return np.cumsum(starts)


_NUMBER = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def load_dataset(path) -> MblDataset:
    """Read a response/duration/time file (K = number of columns - 2)."""
    text = Path(path).read_text()
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [tok for tok in re.split(r"[,\s]+", stripped) if tok]
        if not rows and not all(_NUMBER.match(tok) for tok in tokens):
            continue  # header
        if width is None:
            width = len(tokens)
            if width < 3:
                raise DatasetParseError(f"row {lineno}: need at least 3 columns")
        if len(tokens) != width:
            raise DatasetParseError(f"row {lineno}: expected {width} columns, got {len(tokens)}")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise DatasetParseError(f"row {lineno}: non-numeric entry") from exc
        y, dur, t = values[:-2], values[-2], values[-1]
        if any(v not in (0.0, 1.0) for v in y):
            raise DatasetParseError(f"row {lineno}: responses must be 0 or 1")
        if not dur > 0:
            raise DatasetParseError(f"row {lineno}: duration must be positive")
        if not 0.0 <= t <= 1.0:
            raise DatasetParseError(f"row {lineno}: time {t} outside [0, 1]")
        rows.append(values)
    if not rows:
        raise DatasetParseError("no data rows")
    arr = np.array(rows, dtype=float)
    duration, time = arr[:, -2], arr[:, -1]
    return MblDataset(_subject_ids(duration, time), duration, time, arr[:, :-2])


def dumps_dataset(data: MblDataset) -> str:
    """Serialize to comma-delimited text with a header.

    Raises ``ValueError`` if two adjacent subjects could not be told apart on
    reading (same duration and no time reset between them).
    """
    sid = _subject_ids(data.duration, data.time)
    if not np.array_equal(np.unique(data.subject, return_inverse=True)[1], sid):
        raise ValueError("subject boundaries are not recoverable from duration/time")
    buf = io.StringIO()
    K = data.n_responses
    buf.write(",".join([f"y{k + 1}" for k in range(K)] + ["duration", "time"]) + "\n")
    for yrow, dur, t in zip(data.y, data.duration, data.time):
        buf.write(",".join([str(int(v)) for v in yrow] + [repr(float(dur)), repr(float(t))]) + "\n")
    return buf.getvalue()


def save_dataset(data: MblDataset, path) -> None:
    Path(path).write_text(dumps_dataset(data))


def time_grid(n: int, rule: str = "right") -> np.ndarray:
    """``n`` equally spaced times: ``j/n`` (``right``) or ``j/(n+1)`` (``interior``)."""
    j = np.arange(1, n + 1)
    if rule == "right":
        return j / n
    if rule == "interior":
        return j / (n + 1)
    raise ConfigurationError(f"unknown grid rule {rule!r}")


@dataclass
class SharedBetaModel:
    """Generating coefficients for ``logit(pi_k) = c_0k + c_1k * (t + beta * t**2)``."""

    intercepts: list[float]
    slopes: list[float]
    beta: float

    def theta(self) -> np.ndarray:
        c = np.column_stack([self.intercepts, self.slopes]).ravel()
        return np.append(c, self.beta)

    def model(self) -> SharedCurvatureModel:
        return SharedCurvatureModel(len(self.intercepts))


BENCHMARK_TRUTH = SharedBetaModel([0.5, 0.5, 0.0], [1.0, 1.0, 1.0], -1.0)


@dataclass
class SimDesign:
    """Simulation design.

    ``groups`` is a list of ``(n_subjects, n_times, duration)`` triples. The
    generating model is either a :class:`ParamVector` (Beta-curve model) or a
    :class:`SharedBetaModel`.
    """

    groups: list[tuple[int, int, float]]
    generator: ParamVector | SharedBetaModel
    seed: int = 0
    grid: str = "right"
    n_responses: int = field(init=False)

    def __post_init__(self):
        self.groups = [(int(n), int(m), float(d)) for n, m, d in self.groups]
        if not self.groups:
            raise ConfigurationError("design has no groups")
        for n, m, d in self.groups:
            if n < 1 or m < 1 or not d > 0:
                raise ConfigurationError(f"invalid group {(n, m, d)}")
        if self.grid not in ("right", "interior"):
            raise ConfigurationError(f"unknown grid rule {self.grid!r}")
        if isinstance(self.generator, ParamVector):
            self.n_responses = self.generator.spec.n_responses
        elif isinstance(self.generator, SharedBetaModel):
            if len(self.generator.intercepts) != len(self.generator.slopes):
                raise ConfigurationError("intercepts and slopes differ in length")
            self.n_responses = len(self.generator.intercepts)
        else:
            raise ConfigurationError("unsupported generating model")

    @property
    def n_subjects(self) -> int:
        return sum(n for n, _, _ in self.groups)

    def mean_model(self):
        if isinstance(self.generator, ParamVector):
            return BetaCurveModel(self.generator.spec), self.generator.flat
        return self.generator.model(), self.generator.theta()

    def to_dict(self) -> dict:
        if isinstance(self.generator, ParamVector):
            gen = {"kind": "beta", **self.generator.to_dict()}
        else:
            gen = {"kind": "shared_beta", "intercepts": list(self.generator.intercepts),
                   "slopes": list(self.generator.slopes), "beta": self.generator.beta}
        return {"groups": [list(g) for g in self.groups], "generator": gen,
                "seed": self.seed, "grid": self.grid}

    @classmethod
    def from_dict(cls, d: dict) -> "SimDesign":
        try:
            gen = d["generator"]
            if gen["kind"] == "beta":
                generator = ParamVector.from_dict(gen)
            elif gen["kind"] == "shared_beta":
                generator = SharedBetaModel(list(gen["intercepts"]), list(gen["slopes"]),
                                            float(gen["beta"]))
            else:
                raise ConfigurationError(f"unknown generator kind {gen['kind']!r}")
            return cls([tuple(g) for g in d["groups"]], generator,
                       int(d.get("seed", 0)), d.get("grid", "right"))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed design: {exc}") from exc

    @classmethod
    def load(cls, path) -> "SimDesign":
        return cls.from_dict(json.loads(Path(path).read_text()))


def simulate_general(design: SimDesign) -> MblDataset:
    """Independent Bernoulli outcomes given the generating model's probabilities."""
    model, theta = design.mean_model()
    streams = np.random.SeedSequence(design.seed).spawn(design.n_subjects)
    sid, dur, tim, ys = [], [], [], []
    i = 0
    for n_sub, n_times, d in design.groups:
        t = time_grid(n_times, design.grid)
        pi = model.mean(t, np.full(n_times, d), theta)
        for _ in range(n_sub):
            rng = np.random.Generator(np.random.PCG64(streams[i]))
            ys.append((rng.random(pi.shape) < pi).astype(float))
            sid.append(np.full(n_times, i))
            dur.append(np.full(n_times, d))
            tim.append(t)
            i += 1
    return MblDataset(np.concatenate(sid), np.concatenate(dur), np.concatenate(tim),
                      np.concatenate(ys))


def benchmark_design(seed: int = 0, grid: str = "right") -> SimDesign:
    """200 subjects in four groups of 50 with 5, 6, 7, 8 time points, duration 1."""
    return SimDesign([(50, 5, 1.0), (50, 6, 1.0), (50, 7, 1.0), (50, 8, 1.0)],
                     BENCHMARK_TRUTH, seed=seed, grid=grid)


def simulate_benchmark(seed: int, grid: str = "right") -> MblDataset:
    return simulate_general(benchmark_design(seed, grid))
