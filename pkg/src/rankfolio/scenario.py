"""Algorithm-selection data model: portfolios, instances, censored runtimes.

A scenario couples a portfolio of algorithms with a set of problem
instances, each carrying a feature vector, and a total performance matrix
of censored runtimes. Runtimes at or above the timeout, and runs that
timed out or ran out of memory, are stored as the timeout value.

Directory format (UTF-8 CSV with header rows):

* ``meta.json``    -- ``{"name", "timeout", "algorithms"}``
* ``features.csv`` -- ``instance,<feature names...>``; missing values are
  empty fields or ``?``
* ``runtimes.csv`` -- ``instance,algorithm,runtime,status`` with status in
  ``{ok,timeout,memout}``; runtime may be empty when status is not ``ok``
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    FeatureArityMismatch,
    InvalidRankMultiset,
    InvalidSpec,
    MalformedFile,
    MissingPerformance,
    NegativeRuntime,
)

STATUSES = ("ok", "timeout", "memout")


def fractional_ranks(values) -> tuple[float, ...]:
    """Average (fractional) 1-based ranks of ``values``, lowest value first.

    Exactly equal values share the arithmetic mean of the rank positions
    they occupy, so the ranks always sum to n(n+1)/2.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    order = sorted(range(n), key=lambda i: (vals[i], i))
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # mean of 1-based positions i+1 .. j+1
        for p in range(i, j + 1):
            ranks[order[p]] = avg
        i = j + 1
    return tuple(ranks)


@dataclass(frozen=True)
class Ranking:
    """A weak order over the portfolio as fractional ranks, rank 1 = best."""

    ranks: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(float(r) for r in self.ranks))
        _check_rank_multiset(self.ranks)

    @classmethod
    def from_values(cls, values) -> "Ranking":
        """Rank by ascending value (smaller value = better rank)."""
        return cls(fractional_ranks(values))

    def __len__(self):
        return len(self.ranks)

    def order(self) -> tuple[int, ...]:
        """Algorithm indices from best to worst, ties by portfolio index."""
        return tuple(sorted(range(len(self.ranks)), key=lambda i: (self.ranks[i], i)))


def _check_rank_multiset(ranks):
    n = len(ranks)
    if n == 0:
        raise InvalidRankMultiset("empty ranking")
    srt = sorted(ranks)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and srt[j + 1] == srt[i]:
            j += 1
        expected = (i + j + 2) / 2
        if srt[i] != expected:
            raise InvalidRankMultiset(
                f"ranks {list(ranks)} are not a valid average-rank assignment "
                f"(value {srt[i]} at sorted positions {i + 1}..{j + 1}, expected {expected})"
            )
        i = j + 1


class PredictionLevel:
    """Expressiveness of a ranker's output: ranking only, or with scores."""

    R1 = "R1"
    R2 = "R2"


@dataclass(frozen=True)
class Instance:
    id: str
    features: tuple[float, ...]  # NaN encodes a missing value


@dataclass(frozen=True)
class PerformanceRecord:
    runtime: float
    status: str

    def __post_init__(self):
        if self.status not in STATUSES:
            raise MalformedFile(f"unknown status {self.status!r}")


@dataclass(frozen=True)
class PerformanceMatrix:
    """Total lookup (instance id, algorithm id) -> PerformanceRecord."""

    algorithms: tuple[str, ...]
    records: dict = field(hash=False)

    def record(self, instance_id: str, algorithm_id: str) -> PerformanceRecord:
        return self.records[(instance_id, algorithm_id)]

    def runtimes(self, instance_id: str) -> np.ndarray:
        """Censored runtimes for one instance, in portfolio order."""
        return np.array(
            [self.records[(instance_id, a)].runtime for a in self.algorithms]
        )


@dataclass(frozen=True)
class Scenario:
    name: str
    algorithms: tuple[str, ...]
    timeout: float
    instances: tuple[Instance, ...]
    performance: PerformanceMatrix

    def __post_init__(self):
        if len(self.algorithms) < 2:
            raise InvalidSpec("a portfolio needs at least 2 algorithms")
        if not self.timeout > 0:
            raise InvalidSpec("timeout must be positive")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise DuplicateId("duplicate algorithm identifiers")
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise DuplicateId("duplicate instance identifiers")
        arities = {len(inst.features) for inst in self.instances}
        if len(arities) > 1:
            raise FeatureArityMismatch(
                f"feature vector lengths differ across instances: {sorted(arities)}"
            )
        for inst in self.instances:
            for a in self.algorithms:
                if (inst.id, a) not in self.performance.records:
                    raise MissingPerformance(f"no record for ({inst.id}, {a})")

    @property
    def n_algorithms(self) -> int:
        return len(self.algorithms)

    @property
    def n_features(self) -> int:
        return len(self.instances[0].features) if self.instances else 0

    def instance_by_id(self, instance_id: str) -> Instance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise KeyError(instance_id)

    def feature_matrix(self, instances=None) -> np.ndarray:
        """Feature rows (NaN for missing) for the given instances."""
        insts = self.instances if instances is None else instances
        return np.array([inst.features for inst in insts], dtype=np.float64)


def censored_runtime(raw, status: str, timeout: float) -> float:
    """Runtime as recorded in a scenario: clamped at, or replaced by, the timeout."""
    if not timeout > 0:
        raise InvalidSpec("timeout must be positive")
    if status not in STATUSES:
        raise MalformedFile(f"unknown status {status!r}")
    if raw is None or status in ("timeout", "memout"):
        return float(timeout)
    raw = float(raw)
    if raw < 0:
        raise NegativeRuntime(f"negative runtime {raw}")
    return min(raw, float(timeout))


def true_ranking(instance, matrix: PerformanceMatrix) -> Ranking:
    """Ground-truth ranking of the portfolio on one instance (ascending runtime)."""
    instance_id = instance.id if isinstance(instance, Instance) else instance
    return Ranking.from_values(matrix.runtimes(instance_id))


def best_algorithm(instance, matrix: PerformanceMatrix) -> str:
    """Fastest algorithm on the instance; runtime ties go to the smallest portfolio index."""
    instance_id = instance.id if isinstance(instance, Instance) else instance
    runtimes = matrix.runtimes(instance_id)
    return matrix.algorithms[int(np.argmin(runtimes))]


# -- file format -----------------------------------------------------------


def _fmt(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))


def load_scenario(root) -> Scenario:
    root = Path(root)
    meta_path = root / "meta.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{meta_path}: {exc}") from exc
    for key in ("name", "timeout", "algorithms"):
        if key not in meta:
            raise MalformedFile(f"{meta_path}: missing key {key!r}")
    name = str(meta["name"])
    timeout = float(meta["timeout"])
    algorithms = tuple(str(a) for a in meta["algorithms"])

    instances = []
    seen = set()
    feat_path = root / "features.csv"
    with open(feat_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "instance":
            raise MalformedFile(f"{feat_path}: expected header starting with 'instance'")
        arity = len(header) - 1
        for row in reader:
            if not row:
                continue
            if len(row) != arity + 1:
                raise FeatureArityMismatch(
                    f"{feat_path}: instance {row[0]!r} has {len(row) - 1} values, expected {arity}"
                )
            iid = row[0]
            if iid in seen:
                raise DuplicateId(f"{feat_path}: duplicate instance {iid!r}")
            seen.add(iid)
            features = tuple(_parse_feature(v, feat_path, iid) for v in row[1:])
            instances.append(Instance(iid, features))

    records = {}
    rt_path = root / "runtimes.csv"
    with open(rt_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["instance", "algorithm", "runtime", "status"]:
            raise MalformedFile(f"{rt_path}: bad header {header}")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise MalformedFile(f"{rt_path}: bad row {row}")
            iid, alg, raw, status = row
            if iid not in seen:
                raise MalformedFile(f"{rt_path}: unknown instance {iid!r}")
            if alg not in algorithms:
                raise MalformedFile(f"{rt_path}: unknown algorithm {alg!r}")
            if (iid, alg) in records:
                raise MalformedFile(f"{rt_path}: duplicate record for ({iid}, {alg})")
            if status not in STATUSES:
                raise MalformedFile(f"{rt_path}: unknown status {status!r}")
            raw_val = None if raw.strip() == "" else _parse_float(raw, rt_path)
            records[(iid, alg)] = PerformanceRecord(
                censored_runtime(raw_val, status, timeout), status
            )

    matrix = PerformanceMatrix(algorithms, records)
    return Scenario(name, algorithms, timeout, tuple(instances), matrix)


def _parse_feature(text, path, iid):
    text = text.strip()
    if text == "" or text == "?":
        return float("nan")
    try:
        return float(text)
    except ValueError as exc:
        raise MalformedFile(f"{path}: bad feature value {text!r} for {iid!r}") from exc


def _parse_float(text, path):
    try:
        return float(text)
    except ValueError as exc:
        raise MalformedFile(f"{path}: bad number {text!r}") from exc


def save_scenario(scenario: Scenario, root) -> Path:
    """Write the scenario directory format; load_scenario inverts it exactly."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": scenario.name,
        "timeout": scenario.timeout,
        "algorithms": list(scenario.algorithms),
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    n_feat = scenario.n_features
    with open(root / "features.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance"] + [f"f{j + 1}" for j in range(n_feat)])
        for inst in scenario.instances:
            writer.writerow(
                [inst.id] + ["" if math.isnan(v) else _fmt(v) for v in inst.features]
            )

    with open(root / "runtimes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance", "algorithm", "runtime", "status"])
        for inst in scenario.instances:
            for alg in scenario.algorithms:
                rec = scenario.performance.record(inst.id, alg)
                rt = "" if rec.status != "ok" else _fmt(rec.runtime)
                writer.writerow([inst.id, alg, rt, rec.status])
    return root


# -- synthetic scenarios ---------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the synthetic scenario generator.

    The driver feature (column 0) places each instance in one of
    ``algorithms`` equal-width regions; the region's algorithm is the
    planted winner and runtimes grow by a factor of ``growth`` per step of
    distance from it, under log-normal multiplicative noise of scale
    ``noise``. Half of the remaining feature columns echo the driver with
    extra noise, the rest are pure noise. The timeout is set so that about
    ``censored_fraction`` of all records are censored.
    """

    instances: int
    algorithms: int
    features: int
    noise: float = 0.1
    censored_fraction: float = 0.1
    growth: float = 3.0
    base_runtime: float = 10.0
    name: str = "synthetic"

    def __post_init__(self):
        if self.instances < 1:
            raise InvalidSpec("instances must be >= 1")
        if self.algorithms < 2:
            raise InvalidSpec("algorithms must be >= 2 (portfolio size n >= 2)")
        if self.features < 1:
            raise InvalidSpec("features must be >= 1")
        if self.noise < 0:
            raise InvalidSpec("noise must be >= 0")
        if not 0 <= self.censored_fraction < 1:
            raise InvalidSpec("censored_fraction must be in [0, 1)")
        if self.growth <= 1:
            raise InvalidSpec("growth must be > 1")
        if self.base_runtime <= 0:
            raise InvalidSpec("base_runtime must be > 0")


def generate_synthetic(spec: GeneratorSpec, seed: int) -> Scenario:
    """Deterministically generate a scenario from (spec, seed)."""
    rng = np.random.default_rng(seed)
    n, n_alg, n_feat = spec.instances, spec.algorithms, spec.features

    driver = rng.random(n)
    columns = [driver]
    n_echo = (n_feat - 1) // 2
    for j in range(1, n_feat):
        if j <= n_echo:
            columns.append(driver + rng.normal(0.0, 0.3, n))
        else:
            columns.append(rng.normal(0.0, 1.0, n))
    features = np.column_stack(columns)

    regions = np.minimum((driver * n_alg).astype(int), n_alg - 1)
    distance = np.abs(np.arange(n_alg)[None, :] - regions[:, None])
    noise = rng.normal(0.0, 1.0, (n, n_alg))
    raw = spec.base_runtime * spec.growth**distance * np.exp(spec.noise * noise)

    if spec.censored_fraction > 0:
        timeout = float(np.quantile(raw, 1.0 - spec.censored_fraction))
        memout_draw = rng.random((n, n_alg))
    else:
        timeout = float(np.ceil(raw.max() * 2.0))
        memout_draw = None

    width = max(4, len(str(n)))
    instance_ids = [f"i{k + 1:0{width}d}" for k in range(n)]
    algorithms = tuple(f"alg{a + 1}" for a in range(n_alg))

    instances = tuple(
        Instance(instance_ids[k], tuple(float(v) for v in features[k]))
        for k in range(n)
    )
    records = {}
    for k in range(n):
        for a in range(n_alg):
            if raw[k, a] >= timeout:
                # a fifth of censored records are attributed to memory
                status = "memout" if memout_draw is not None and memout_draw[k, a] < 0.2 else "timeout"
                records[(instance_ids[k], algorithms[a])] = PerformanceRecord(
                    timeout, status
                )
            else:
                records[(instance_ids[k], algorithms[a])] = PerformanceRecord(
                    censored_runtime(float(raw[k, a]), "ok", timeout), "ok"
                )
    matrix = PerformanceMatrix(algorithms, records)
    return Scenario(spec.name, algorithms, timeout, instances, matrix)
