"""Monte Carlo comparison of location estimators on the registered test-beds.

Replication ``i`` of configuration ``(testbed, n)`` draws its sample from a
seed derived from ``(master_seed, crc32(testbed), n, i)``, so results do not
depend on execution order, worker count or the position of a test-bed in
the configuration.  Every estimator sees the same sample.
"""

import csv
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import testbeds as _testbeds
from .errors import ConfigurationError, ModeCenterError, NumericError
from .estimators import EstimatorSpec, apply_estimator, parse_estimator
from .stats import PairedComparison, compare, mse

__all__ = [
    "SimConfig",
    "SimRow",
    "SimTable",
    "SimulationError",
    "DEFAULT_ESTIMATORS",
    "run",
    "emit",
    "write_csv",
    "read_json",
    "replication_seed",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

DEFAULT_ESTIMATORS = (
    "kme", "mean", "median", "trimmed-adaptive", "winsorized-adaptive", "tukey", "andrews",
)
CSV_COLUMNS = ("testbed", "n", "pair", "mse_ratio", "win_prop", "p_value", "mean_beta", "mean_h")
MAX_FAILURE_RATE = 0.01
_CHUNK = 25


class SimulationError(NumericError):
    """Too many replications failed."""


@dataclass(frozen=True)
class SimConfig:
    testbeds: tuple = ("student_t_1", "student_t_3", "outlier", "normal", "laplace")
    sample_sizes: tuple = (100, 1000)
    replications: int = 200
    estimators: tuple = DEFAULT_ESTIMATORS
    master_seed: int = 0
    parallelism: int | None = None
    bootstrap_b: int = 200

    def __post_init__(self):
        object.__setattr__(self, "testbeds", tuple(self.testbeds))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.replications < 2:
            raise ConfigurationError("need at least 2 replications")
        if any(n < 10 for n in self.sample_sizes):
            raise ConfigurationError("sample sizes must be at least 10")
        unknown = [tb for tb in self.testbeds if tb not in _testbeds.TESTBED_IDS]
        if unknown:
            raise ConfigurationError(
                f"unknown test-bed {unknown[0]!r}; valid ids: {', '.join(_testbeds.TESTBED_IDS)}"
            )
        labels = [self.spec(e).label for e in self.estimators]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("duplicate estimators")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")

    @staticmethod
    def spec(e):
        return e if isinstance(e, EstimatorSpec) else parse_estimator(e)

    @property
    def labels(self):
        return [self.spec(e).label for e in self.estimators]

    def pairs(self):
        """``(self, other)`` label pairs: the KME (or first estimator) against each other one."""
        labels = self.labels
        if not labels:
            return []
        ref = "kme" if "kme" in labels else labels[0]
        return [(ref, other) for other in labels if other != ref]

    def as_dict(self):
        return {
            "testbeds": list(self.testbeds),
            "sample_sizes": list(self.sample_sizes),
            "replications": self.replications,
            "estimators": self.labels,
            "master_seed": self.master_seed,
            "bootstrap_b": self.bootstrap_b,
        }


@dataclass
class SimRow:
    testbed: str
    n: int
    pair: tuple
    comparison: PairedComparison
    mse_self: float
    mse_other: float
    mean_beta: float | None
    mean_h: float | None
    excluded: int

    @property
    def pair_label(self):
        return f"{self.pair[0]}_vs_{self.pair[1]}"

    def as_dict(self):
        return {
            "testbed": self.testbed,
            "n": self.n,
            "pair": list(self.pair),
            **self.comparison.as_dict(),
            "mse_self": self.mse_self,
            "mse_other": self.mse_other,
            "mean_beta": self.mean_beta,
            "mean_h": self.mean_h,
            "excluded": self.excluded,
        }

    @classmethod
    def from_dict(cls, d):
        comp = PairedComparison(d["mse_ratio"], d["win_proportion"], d["p_value"], d["m"])
        return cls(d["testbed"], d["n"], tuple(d["pair"]), comp, d["mse_self"], d["mse_other"],
                   d["mean_beta"], d["mean_h"], d["excluded"])


@dataclass
class SimTable:
    """Comparison rows plus the raw per-replication estimates.

    ``estimates[(testbed, n)][label]`` is an array of length ``m`` with NaN
    for failed replications; ``checksums[(testbed, n)]`` holds the CRC-32 of
    each replication's sample bytes.
    """

    config: dict
    rows: list
    estimates: dict = field(default_factory=dict)
    checksums: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def row(self, testbed, n, other, ref="kme"):
        for r in self.rows:
            if r.testbed == testbed and r.n == n and r.pair == (ref, other):
                return r
        raise KeyError((testbed, n, ref, other))

    def as_dict(self):
        def keyed(d):
            return {f"{tb}|{n}": v for (tb, n), v in d.items()}

        return {
            "config": self.config,
            "rows": [r.as_dict() for r in self.rows],
            "estimates": {k: {lab: [None if math.isnan(v) else float(v) for v in arr]
                              for lab, arr in v.items()} for k, v in keyed(self.estimates).items()},
            "checksums": {k: [int(c) for c in v] for k, v in keyed(self.checksums).items()},
            "failures": keyed(self.failures),
        }

    @classmethod
    def from_dict(cls, d):
        def unkey(mapping):
            out = {}
            for k, v in mapping.items():
                tb, n = k.rsplit("|", 1)
                out[(tb, int(n))] = v
            return out

        est = {k: {lab: np.array([np.nan if v is None else v for v in arr], dtype=float)
                   for lab, arr in v.items()} for k, v in unkey(d["estimates"]).items()}
        chk = {k: np.array(v, dtype=np.uint32) for k, v in unkey(d["checksums"]).items()}
        return cls(d["config"], [SimRow.from_dict(r) for r in d["rows"]], est, chk,
                   unkey(d["failures"]))


def replication_seed(master_seed, testbed, n, i):
    """Seed sequence for one replication, keyed by identity rather than position."""
    key = (zlib.crc32(testbed.encode()), int(n), int(i))
    return np.random.SeedSequence(master_seed, spawn_key=key)


def _worker_count(requested):
    cap = os.environ.get("MODECENTER_THREADS")
    workers = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigurationError(f"MODECENTER_THREADS must be an integer, got {cap!r}") from None
    return max(1, workers)


def _run_chunk(task):
    testbed, n, start, stop, specs, master_seed, bootstrap_b = task
    tb = _testbeds.get(testbed)
    k = len(specs)
    est = np.full((stop - start, k), np.nan)
    betas = np.full(stop - start, np.nan)
    hs = np.full(stop - start, np.nan)
    sums = np.zeros(stop - start, dtype=np.uint32)
    for row, i in enumerate(range(start, stop)):
        ss = replication_seed(master_seed, testbed, n, i)
        sample_ss, boot_ss = ss.spawn(2)
        x = tb.sample(n, np.random.default_rng(sample_ss))
        sums[row] = zlib.crc32(x.tobytes())
        boot_seed = int(boot_ss.generate_state(1)[0])
        for j, spec in enumerate(specs):
            try:
                val, extras = apply_estimator(spec, x, seed=boot_seed, B=bootstrap_b)
            except (ModeCenterError, FloatingPointError) as exc:
                log.debug("replication %d of %s n=%d failed for %s: %s", i, testbed, n, spec.label, exc)
                continue
            est[row, j] = val
            if spec.name == "kme":
                betas[row], hs[row] = extras["beta"], extras["h"]
        # matched pairs: every estimator must have seen the same bytes
        if zlib.crc32(x.tobytes()) != sums[row]:
            raise RuntimeError("sample was modified by an estimator")
    return est, betas, hs, sums


def run(config):
    """Run the simulation described by ``config``.

    Raises
    ------
    SimulationError
        If more than 1% of the replications of any estimator fail.
    """
    specs = [config.spec(e) for e in config.estimators]
    labels = [s.label for s in specs]
    m = config.replications
    tasks = []
    for tb in config.testbeds:
        for n in config.sample_sizes:
            for start in range(0, m, _CHUNK):
                tasks.append((tb, n, start, min(m, start + _CHUNK), specs,
                              config.master_seed, config.bootstrap_b))

    workers = _worker_count(config.parallelism)
    if workers == 1 or len(tasks) == 1 or not specs:
        results = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))

    grouped = {}
    for task, res in zip(tasks, results):
        grouped.setdefault((task[0], task[1]), []).append(res)

    rows, estimates, checksums, failures = [], {}, {}, {}
    for tb in config.testbeds:
        theta = _testbeds.get(tb).theta
        for n in config.sample_sizes:
            parts = grouped[(tb, n)]
            est = np.vstack([p[0] for p in parts])
            betas = np.concatenate([p[1] for p in parts])
            hs = np.concatenate([p[2] for p in parts])
            estimates[(tb, n)] = {lab: est[:, j] for j, lab in enumerate(labels)}
            checksums[(tb, n)] = np.concatenate([p[3] for p in parts])
            fails = {lab: int(np.isnan(est[:, j]).sum()) for j, lab in enumerate(labels)}
            failures[(tb, n)] = fails
            for lab, count in fails.items():
                if count > MAX_FAILURE_RATE * m:
                    raise SimulationError(
                        f"{count} of {m} replications failed for {lab} on {tb}, n={n}"
                    )
            has_kme = "kme" in labels
            mean_beta = float(np.nanmean(betas)) if has_kme and np.any(np.isfinite(betas)) else None
            mean_h = float(np.nanmean(hs)) if has_kme and np.any(np.isfinite(hs)) else None
            for ref, other in config.pairs():
                a = estimates[(tb, n)][ref]
                b = estimates[(tb, n)][other]
                ok = np.isfinite(a) & np.isfinite(b)
                comp = compare(a[ok], b[ok], theta)
                rows.append(SimRow(tb, n, (ref, other), comp, mse(a[ok], theta), mse(b[ok], theta),
                                   mean_beta, mean_h, int(m - ok.sum())))
    return SimTable(config.as_dict(), rows, estimates, checksums, failures)


def _fmt(v):
    return "" if v is None else repr(float(v))


def write_csv(table, fh):
    """Write the comparison rows as CSV to an open text stream."""
    writer = csv.writer(fh)
    writer.writerow(CSV_COLUMNS)
    for r in table.rows:
        c = r.comparison
        writer.writerow([r.testbed, r.n, r.pair_label, _fmt(c.mse_ratio), _fmt(c.win_proportion),
                         _fmt(c.p_value), _fmt(r.mean_beta), _fmt(r.mean_h)])


def emit(table, fmt, path):
    """Write ``table`` as CSV or JSON to ``path``.

    Raises
    ------
    OSError
        With the offending path in the message.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be 'csv' or 'json', got {fmt!r}")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if fmt == "json":
                json.dump(table.as_dict(), fh, indent=1)
                return
            write_csv(table, fh)
    except OSError as exc:
        raise OSError(f"cannot write simulation output to {path}: {exc}") from exc


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return SimTable.from_dict(json.load(fh))
