import math

import numpy as np
import pytest

from rankfolio.scenario import (
    GeneratorSpec,
    Instance,
    PerformanceMatrix,
    PerformanceRecord,
    Scenario,
    generate_synthetic,
)


def build_scenario(runtimes, features=None, timeout=3600.0, name="fixture",
                   algorithms=None):
    """Hand-build a scenario from a {instance_id: [runtime per algorithm]} map.

    Runtimes equal to the timeout are stored with status 'timeout'.
    """
    ids = list(runtimes)
    n_alg = len(next(iter(runtimes.values())))
    algorithms = tuple(algorithms or (f"a{k + 1}" for k in range(n_alg)))
    if features is None:
        features = {iid: (float(i), float(i) % 3) for i, iid in enumerate(ids)}
    instances = tuple(Instance(iid, tuple(features[iid])) for iid in ids)
    records = {}
    for iid in ids:
        for a, alg in enumerate(algorithms):
            rt = float(runtimes[iid][a])
            status = "timeout" if rt >= timeout else "ok"
            records[(iid, alg)] = PerformanceRecord(min(rt, timeout), status)
    return Scenario(name, algorithms, timeout, instances,
                    PerformanceMatrix(algorithms, records))


def scenarios_equal(a: Scenario, b: Scenario) -> bool:
    """Scenario equality treating NaN features as equal to NaN."""
    if (a.name, a.algorithms, a.timeout) != (b.name, b.algorithms, b.timeout):
        return False
    if len(a.instances) != len(b.instances):
        return False
    for ia, ib in zip(a.instances, b.instances):
        if ia.id != ib.id or len(ia.features) != len(ib.features):
            return False
        for va, vb in zip(ia.features, ib.features):
            if math.isnan(va) != math.isnan(vb):
                return False
            if not math.isnan(va) and va != vb:
                return False
    return a.performance == b.performance


def random_ranking_values(rng, n, tie_prone=True):
    """Score vector for a random weak order; small integer draws force ties."""
    if tie_prone and rng.random() < 0.5:
        return rng.integers(0, max(2, n - 1), n).astype(float)
    return rng.normal(size=n)


@pytest.fixture(scope="session")
def standard_scenario():
    """The 200-instance, 5-algorithm, 10-feature reference scenario."""
    return generate_synthetic(GeneratorSpec(200, 5, 10, noise=0.1), 42)


@pytest.fixture(scope="session")
def tie_free_scenario():
    """100 instances, 5 algorithms, no censoring: all true rankings strict."""
    return generate_synthetic(
        GeneratorSpec(100, 5, 8, noise=0.1, censored_fraction=0.0), 7
    )


@pytest.fixture(scope="session")
def two_algorithm_scenario():
    return generate_synthetic(
        GeneratorSpec(120, 2, 6, noise=0.1, censored_fraction=0.0), 11
    )


class CountingFactory:
    """Learner factory double: counts calls and records each Dataset.

    Per-algorithm and per-pair models are fitted in portfolio (pair)
    order, so call index k corresponds to algorithm/pair k.
    """

    def __init__(self, make_model):
        self.make_model = make_model
        self.datasets = []

    def __call__(self, dataset):
        index = len(self.datasets)
        self.datasets.append(dataset)
        return self.make_model(index, dataset)


class ConstantModel:
    def __init__(self, value):
        self.value = value

    def predict(self, features):
        return self.value


class LookupModel:
    """Oracle double: maps feature vectors to precomputed targets."""

    def __init__(self, table, transform=None):
        self.table = table
        self.transform = transform

    def predict(self, features):
        value = self.table[tuple(np.asarray(features, dtype=float).tolist())]
        return self.transform(value) if self.transform else value


def oracle_runtime_factory(scenario, transform=None):
    """Factory whose k-th model returns algorithm k's true (transformed) runtime."""

    def make_model(index, dataset):
        alg = scenario.algorithms[index % scenario.n_algorithms]
        table = {
            tuple(inst.features): scenario.performance.record(inst.id, alg).runtime
            for inst in scenario.instances
        }
        return LookupModel(table, transform)

    return CountingFactory(make_model)
