"""Seeded Monte Carlo censuses with shard-independent aggregation.

Samples are processed in blocks of ``BLOCK`` consecutive indices aligned to
the global sample index.  Each block yields float partial sums; blocks are
combined exactly as fractions.  A report therefore depends only on
(seed, n, mode, sample range), never on the worker count.  Shards that start
on block boundaries merge bit-identically; other splits keep identical
counts and agree in real-valued sums up to rounding.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from numba import njit

from . import _kernels as _k
from .events import EDGE_FIELDS, N_EDGE, N_ONE_ROW, ONE_ROW_FIELDS, edge_stats_from_stream, one_row_from_stream
from .rng import GENERATOR
from .solver import MAX_ENUMERATE_N, _enumerate
from .validation import check_int, check_uint64

log = logging.getLogger(__name__)

BLOCK = 1024
MODES = ("exact", "edges", "one_row", "heuristic")
HIST_CAP = 15

EXACT_FIELDS = ("kappa_gt1", "kappa_eq2", "heuristic_success", "row_avg_ok") + EDGE_FIELDS
HEURISTIC_FIELDS = ("heuristic_success", "kappa_gt1")
FIELDS = {"exact": EXACT_FIELDS, "edges": EDGE_FIELDS, "one_row": ONE_ROW_FIELDS,
          "heuristic": HEURISTIC_FIELDS}
# 0/1 statistics; everything else is a real-valued per-sample quantity
INDICATORS = frozenset({"any_edge", "i_s", "i_a", "i_b", "kappa_gt1", "kappa_eq2",
                        "heuristic_success", "row_avg_ok", "any_e", "any_f"})
RAO_BLACKWELL = ("cond_s", "cond_a", "cond_b", "sum_p2", "sum_p3")


def _version():
    from . import __version__
    return __version__


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    samples: int
    seed: int
    mode: str = "edges"
    k: int = None
    workers: int = 1
    start: int = 0
    k_max: int = None

    def __post_init__(self):
        mode = str(self.mode).replace("-", "_")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        check_int(self.n, "n", minimum=2)
        check_int(self.samples, "samples", minimum=1)
        check_uint64(self.seed, "seed")
        check_int(self.workers, "workers", minimum=1)
        check_uint64(self.start, "start")
        check_uint64(self.start + self.samples - 1, "last sample index")
        if mode in ("exact", "heuristic"):
            if self.n > MAX_ENUMERATE_N:
                raise ValueError(f"mode {mode!r} needs exact solves, limited to n <= {MAX_ENUMERATE_N}")
            if self.k_max is None:
                object.__setattr__(self, "k_max", min(self.n, HIST_CAP))
            check_int(self.k_max, "k_max", minimum=1, maximum=self.n)
        elif self.k_max is not None:
            raise ValueError("k_max only applies to the exact and heuristic modes")
        if mode == "one_row":
            if self.k is None:
                raise ValueError("one_row mode needs k")
            check_int(self.k, "k", minimum=1, maximum=self.n - 1)
        elif self.k is not None:
            raise ValueError("k only applies to one_row mode")

    @property
    def fields(self):
        return FIELDS[self.mode]

    def key(self):
        """What two shards must share to be mergeable."""
        return (self.n, self.seed, self.mode, self.k, self.k_max)


# per-block kernels ------------------------------------------------------------

@njit(cache=True)
def _accumulate(row, sums, sq):
    for f in range(row.shape[0]):
        sums[f] += row[f]
        sq[f] += row[f] * row[f]


@njit(cache=True)
def _edges_block(seed, lo, hi, n, sums, sq):
    diag = np.empty(n)
    perm = np.empty(n, dtype=np.int64)
    z = np.empty(n)
    row = np.empty(N_EDGE)
    for i in range(lo, hi):
        edge_stats_from_stream(seed, np.uint64(i), n, diag, perm, z, row)
        _accumulate(row, sums, sq)


@njit(cache=True)
def _one_row_block(seed, lo, hi, n, k, sums, sq):
    diag = np.empty(n)
    perm = np.empty(n, dtype=np.int64)
    z = np.empty(n)
    row = np.empty(N_ONE_ROW)
    for i in range(lo, hi):
        one_row_from_stream(seed, np.uint64(i), n, k, diag, perm, z, row)
        _accumulate(row, sums, sq)


@njit(cache=True)
def _row_average_ok(q, support):
    m = support.shape[0]
    dmin = np.inf
    for i in range(q.shape[0]):
        dmin = min(dmin, q[i, i])
    for a in range(m):
        acc = 0.0
        for b in range(m):
            acc += q[support[a], support[b]]
        if acc / m < dmin:
            return True
    return False


@njit(cache=True)
def _solve_stats(q, k_max, row):
    """Fill kappa_gt1, kappa_eq2, heuristic_success, row_avg_ok; return kappa."""
    _, support, _, _, _ = _enumerate(q, k_max)
    kappa = support.shape[0]
    best = 0
    for i in range(1, q.shape[0]):
        if q[i, i] < q[best, best]:
            best = i
    row[0] = 1.0 if kappa > 1 else 0.0
    row[1] = 1.0 if kappa == 2 else 0.0
    row[2] = 1.0 if (kappa == 1 and support[0] == best) else 0.0
    row[3] = 1.0 if (kappa > 1 and _row_average_ok(q, support)) else 0.0
    return kappa


@njit(cache=True)
def _exact_block(seed, lo, hi, n, k_max, sums, sq, hist):
    q = np.empty((n, n))
    diag = np.empty(n)
    perm = np.empty(n, dtype=np.int64)
    z = np.empty(n)
    row = np.zeros(sums.shape[0])
    edge = np.empty(N_EDGE)
    cap = hist.shape[0] - 1
    for i in range(lo, hi):
        idx = np.uint64(i)
        _k.sample_goe_into(seed, idx, n, q)
        kappa = _solve_stats(q, k_max, row)
        hist[min(kappa, cap)] += 1
        edge_stats_from_stream(seed, idx, n, diag, perm, z, edge)
        row[4:] = edge
        _accumulate(row, sums, sq)


@njit(cache=True)
def _heuristic_block(seed, lo, hi, n, k_max, sums, sq, hist):
    q = np.empty((n, n))
    row = np.zeros(4)
    pick = np.empty(2)
    cap = hist.shape[0] - 1
    for i in range(lo, hi):
        _k.sample_goe_into(seed, np.uint64(i), n, q)
        kappa = _solve_stats(q, k_max, row)
        hist[min(kappa, cap)] += 1
        pick[0] = row[2]
        pick[1] = row[0]
        _accumulate(pick, sums, sq)


def _hist_size(config):
    # index 0 unused, 1..HIST_CAP exact, last slot is the overflow bucket
    return HIST_CAP + 2 if config.mode in ("exact", "heuristic") else 0


def _run_block(config, lo, hi):
    nf = len(config.fields)
    sums = np.zeros(nf)
    sq = np.zeros(nf)
    hist = np.zeros(_hist_size(config), dtype=np.int64)
    seed = np.uint64(config.seed)
    if config.mode == "edges":
        _edges_block(seed, lo, hi, config.n, sums, sq)
    elif config.mode == "one_row":
        _one_row_block(seed, lo, hi, config.n, config.k, sums, sq)
    elif config.mode == "exact":
        _exact_block(seed, lo, hi, config.n, config.k_max, sums, sq, hist)
    else:
        _heuristic_block(seed, lo, hi, config.n, config.k_max, sums, sq, hist)
    return sums, sq, hist


def _blocks(start, samples):
    """Global-index-aligned block boundaries covering [start, start + samples)."""
    end = start + samples
    edges = [start]
    b = (start // BLOCK + 1) * BLOCK
    while b < end:
        edges.append(b)
        b += BLOCK
    edges.append(end)
    return list(zip(edges[:-1], edges[1:]))


def _run_blocks(config, blocks):
    return [_run_block(config, lo, hi) for lo, hi in blocks]


# reports --------------------------------------------------------------------

def _z(level):
    table = {0.95: 1.959963984540054, 0.99: 2.5758293035489004}
    if level not in table:
        raise ValueError("level must be 0.95 or 0.99")
    return table[level]


def confidence_interval(mean, se, level=0.95, samples=None):
    """Normal-approximation interval, clipped to [0, 1] when ``samples`` marks a proportion.

    A proportion with zero successes gets the rule-of-three interval (0, 3/N).
    """
    mean = float(mean)
    se = float(se)
    if se < 0 or not math.isfinite(se):
        raise ValueError("se must be a finite nonnegative number")
    z = _z(level)
    if samples is not None:
        samples = check_int(samples, "samples", minimum=1)
        if mean == 0.0:
            return 0.0, 3.0 / samples
        return max(0.0, mean - z * se), min(1.0, mean + z * se)
    return mean - z * se, mean + z * se


def _frac(text):
    return Fraction(text)


@dataclass(frozen=True, eq=False)
class EstimateReport:
    config: ExperimentConfig
    sums: dict
    sumsq: dict
    kappa_hist: dict = field(default_factory=dict)
    ranges: tuple = ()
    runtime_seconds: float = 0.0

    @property
    def samples(self):
        return sum(hi - lo for lo, hi in self.ranges)

    @property
    def fields(self):
        return self.config.fields

    def count(self, name):
        if name not in INDICATORS:
            raise KeyError(f"{name} is not an indicator")
        return int(self.sums[name])

    def total(self, name):
        return float(self.sums[name])

    def mean(self, name):
        return float(self.sums[name] / self.samples)

    def std_error(self, name):
        n = self.samples
        mean = self.sums[name] / n
        if name in INDICATORS:
            var = mean * (1 - mean)
            return math.sqrt(float(var) / n)
        if n < 2:
            return math.inf
        var = (self.sumsq[name] - n * mean * mean) / (n - 1)
        return math.sqrt(max(float(var), 0.0) / n)

    def interval(self, name, level=0.95):
        samples = self.samples if name in INDICATORS else None
        return confidence_interval(self.mean(name), self.std_error(name), level, samples)

    @property
    def rao_blackwell(self):
        return {name: {"mean": self.mean(name), "std_error": self.std_error(name)}
                for name in RAO_BLACKWELL if name in self.sums}

    def metadata(self):
        cfg = self.config
        return {
            "n": cfg.n, "samples": self.samples, "seed": cfg.seed, "mode": cfg.mode,
            "k": cfg.k, "k_max": cfg.k_max, "workers": cfg.workers,
            "runtime_seconds": self.runtime_seconds, "version": _version(),
            "generator": GENERATOR, "block": BLOCK,
            "ranges": [list(r) for r in self.ranges],
        }

    def statistics(self):
        out = {}
        for name in self.fields:
            entry = {"mean": self.mean(name), "std_error": self.std_error(name)}
            if name in INDICATORS:
                entry = {"count": self.count(name), **entry}
            else:
                entry = {"sum": self.total(name), **entry}
            out[name] = entry
        return out

    def to_dict(self):
        d = {"metadata": self.metadata(), "statistics": self.statistics()}
        if self.kappa_hist:
            d["kappa_hist"] = {str(k): v for k, v in self.kappa_hist.items()}
        if self.rao_blackwell:
            d["rao_blackwell"] = self.rao_blackwell
        # exact partial sums make saved shards mergeable without rounding drift
        d["exact"] = {"sums": {k: str(v) for k, v in self.sums.items()},
                      "sumsq": {k: str(v) for k, v in self.sumsq.items()}}
        return d

    def to_json(self, **kwargs):
        import json
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        meta = d["metadata"]
        ranges = tuple(tuple(int(x) for x in r) for r in meta["ranges"])
        config = ExperimentConfig(n=meta["n"], samples=sum(hi - lo for lo, hi in ranges),
                                  seed=meta["seed"], mode=meta["mode"], k=meta["k"],
                                  workers=meta["workers"], start=min(lo for lo, _ in ranges),
                                  k_max=meta["k_max"])
        hist = {}
        for key, v in d.get("kappa_hist", {}).items():
            hist[key if key == "overflow" else int(key)] = int(v)
        return cls(config=config,
                   sums={k: _frac(v) for k, v in d["exact"]["sums"].items()},
                   sumsq={k: _frac(v) for k, v in d["exact"]["sumsq"].items()},
                   kappa_hist=hist, ranges=ranges,
                   runtime_seconds=float(meta.get("runtime_seconds", 0.0)))

    def csv_header(self):
        cols = ["n", "mode", "samples", "seed"]
        for name in self.fields:
            cols += [f"{name}_mean", f"{name}_se"]
        return ",".join(cols)

    def csv_row(self):
        cols = [str(self.config.n), self.config.mode, str(self.samples), str(self.config.seed)]
        for name in self.fields:
            cols += [f"{self.mean(name):.12g}", f"{self.std_error(name):.12g}"]
        return ",".join(cols)


def _hist_dict(hist):
    out = {k: int(hist[k]) for k in range(1, HIST_CAP + 1) if hist[k]}
    if hist[HIST_CAP + 1]:
        out["overflow"] = int(hist[HIST_CAP + 1])
    return out


def run_census(config):
    """Run every sample of ``config`` and aggregate into an EstimateReport."""
    if not isinstance(config, ExperimentConfig):
        raise TypeError("run_census expects an ExperimentConfig")
    t0 = time.perf_counter()
    blocks = _blocks(config.start, config.samples)
    workers = min(config.workers, len(blocks))
    if workers == 1:
        results = _run_blocks(config, blocks)
    else:
        # contiguous shards of whole blocks, one per worker
        bounds = np.linspace(0, len(blocks), workers + 1).round().astype(int)
        shards = [blocks[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_blocks, [config] * workers, shards)
            results = [r for part in parts for r in part]
    names = config.fields
    sums = {name: Fraction(0) for name in names}
    sumsq = {name: Fraction(0) for name in names}
    hist = np.zeros(_hist_size(config), dtype=np.int64)
    for bsum, bsq, bhist in results:
        for j, name in enumerate(names):
            sums[name] += Fraction(float(bsum[j]))
            sumsq[name] += Fraction(float(bsq[j]))
        if hist.size:
            hist += bhist
    elapsed = time.perf_counter() - t0
    log.info("census %s n=%d samples=%d in %.1fs", config.mode, config.n, config.samples, elapsed)
    return EstimateReport(config=config, sums=sums, sumsq=sumsq,
                          kappa_hist=_hist_dict(hist) if hist.size else {},
                          ranges=((config.start, config.start + config.samples),),
                          runtime_seconds=elapsed)


def merge(reports):
    """Pool shard reports over disjoint sample ranges of the same experiment."""
    reports = list(reports)
    if not reports:
        raise ValueError("merge needs at least one report")
    first = reports[0]
    if len(reports) == 1:
        return first
    for r in reports[1:]:
        if r.config.key() != first.config.key():
            raise ValueError("cannot merge reports from different experiments "
                             f"({r.config.key()} vs {first.config.key()})")
    ranges = sorted(rg for r in reports for rg in r.ranges)
    for (lo1, hi1), (lo2, hi2) in zip(ranges, ranges[1:]):
        if lo2 < hi1:
            raise ValueError(f"overlapping sample ranges [{lo1}, {hi1}) and [{lo2}, {hi2})")
    # adjacent ranges coalesce so a merge of halves reports like the full run
    merged = [list(ranges[0])]
    for lo, hi in ranges[1:]:
        if lo == merged[-1][1]:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    sums = {k: sum((r.sums[k] for r in reports), Fraction(0)) for k in first.sums}
    sumsq = {k: sum((r.sumsq[k] for r in reports), Fraction(0)) for k in first.sumsq}
    hist = {}
    for r in reports:
        for k, v in r.kappa_hist.items():
            hist[k] = hist.get(k, 0) + v
    total = sum(hi - lo for lo, hi in ranges)
    config = replace(first.config, samples=total, start=ranges[0][0])
    return EstimateReport(config=config, sums=sums, sumsq=sumsq,
                          kappa_hist=dict(sorted(hist.items(), key=lambda kv: (isinstance(kv[0], str), kv[0]))),
                          ranges=tuple(tuple(r) for r in merged),
                          runtime_seconds=sum(r.runtime_seconds for r in reports))
