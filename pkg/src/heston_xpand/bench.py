"""Error sweeps over strike x maturity grids and pricing-throughput timings.

Figure presets share ``s0 = 100, r = 0.001, v0 = 0.25, kappa = 1.5, theta = 0.2`` and
differ in ``(rho, nu)``. The strike grid is ``70, 72.5, ..., 130``.

Timing tasks price a fixed batch of 100 calls (10 strikes from 80% to 120% of
spot at each of 10 maturities from one month to five years) for 100, 1000 or
10000 parameter sets drawn uniformly from the box

    kappa in [0.5, 3], theta in [0.05, 0.5], nu in [0.05, 0.95 sqrt(2 kappa theta)],
    rho in [-0.9, 0], v0 in [0.05, 0.5], r in [0, 0.05], s0 = 100.

Each method's wall-clock time is the median of five repetitions.
"""

from __future__ import annotations

import csv
import gc
import hashlib
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .approximators import ApproxOrder, price_batch
from .model import DomainError, HestonParams
from .reference import DEFAULT_QUADRATURE, QuadratureConfig, reference_prices

EPS = np.finfo(float).eps
SWEEP_FIELDS = ("strike", "maturity", "method", "price", "ref_price", "log10_rel_err")
TIMING_FIELDS = ("task", "method", "seconds", "speedup")
METHOD_NAMES = ("ref", "o2", "o3", "o4", "zc")

FIGURE_STRIKES = tuple(70.0 + 2.5 * i for i in range(25))
FIGURE_MATURITIES = (0.25, 0.5, 1.0, 3.0)
_FIGURE_BASE = dict(kappa=1.5, theta=0.2, v0=0.25, r=0.001, s0=100.0)
FIGURE_PRESETS = {
    1: (-0.2, 0.05, ("o2", "o3", "o4")),
    2: (-0.8, 0.05, ("o2", "o3", "o4")),
    3: (-0.2, 0.5, ("o2", "o3", "o4")),
    4: (-0.8, 0.5, ("o2", "o3", "o4")),
    5: (0.0, 0.05, ("o2", "zc")),
    6: (0.0, 0.5, ("o2", "zc")),
}


def figure_params(figure: int) -> HestonParams:
    if figure not in FIGURE_PRESETS:
        raise DomainError("figure", f"must be one of {sorted(FIGURE_PRESETS)}, got {figure}")
    rho, nu, _ = FIGURE_PRESETS[figure]
    return HestonParams(rho=rho, nu=nu, **_FIGURE_BASE)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class SweepSpec:
    strikes: tuple[float, ...]
    maturities: tuple[float, ...]
    params: HestonParams
    methods: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "strikes", tuple(float(k) for k in self.strikes))
        object.__setattr__(self, "maturities", tuple(float(t) for t in self.maturities))
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        if not self.strikes:
            raise DomainError("strikes", "must be non-empty")
        if not self.maturities:
            raise DomainError("maturities", "must be non-empty")
        if not self.methods:
            raise DomainError("methods", "must be non-empty")
        if any(b <= a for a, b in zip(self.strikes, self.strikes[1:])):
            raise DomainError("strikes", "must be strictly ascending")
        if any(k <= 0.0 for k in self.strikes):
            raise DomainError("strikes", "must be > 0")
        if any(t <= 0.0 for t in self.maturities):
            raise DomainError("maturities", "must be > 0")
        unknown = set(self.methods) - set(METHOD_NAMES)
        if unknown:
            raise DomainError("methods", f"unknown methods {sorted(unknown)}")

    @classmethod
    def figure(cls, n: int) -> "SweepSpec":
        return cls(FIGURE_STRIKES, FIGURE_MATURITIES, figure_params(n), FIGURE_PRESETS[n][2])


@dataclass(frozen=True)
class SweepCell:
    strike: float
    maturity: float
    method: str
    price: float
    ref_price: float
    log10_rel_err: float
    failure: str | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def csv_row(self) -> list[str]:
        return [_fmt(self.strike), _fmt(self.maturity), self.method,
                _fmt(self.price), _fmt(self.ref_price), _fmt(self.log10_rel_err)]


@dataclass
class SweepReport:
    spec: SweepSpec
    cells: list[SweepCell] = field(default_factory=list)

    def error_grid(self, method: str) -> np.ndarray:
        """``log10`` relative errors shaped ``(maturities, strikes)``."""
        grid = np.full((len(self.spec.maturities), len(self.spec.strikes)), np.nan)
        t_index = {t: i for i, t in enumerate(self.spec.maturities)}
        k_index = {k: j for j, k in enumerate(self.spec.strikes)}
        for c in self.cells:
            if c.method == method:
                grid[t_index[c.maturity], k_index[c.strike]] = c.log10_rel_err
        return grid

    @property
    def failures(self) -> list[SweepCell]:
        return [c for c in self.cells if c.failed]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_FIELDS)
            for c in self.cells:
                w.writerow(c.csv_row())
        return path


def read_sweep_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_FIELDS:
            raise ValueError(f"unexpected sweep header {reader.fieldnames}")
        return [{k: (v if k == "method" else float(v)) for k, v in row.items()} for row in reader]


def log10_rel_err(price, ref):
    """``log10(|price - ref| / |ref|)``, floored at machine epsilon."""
    rel = np.abs(np.asarray(price) - np.asarray(ref)) / np.abs(np.asarray(ref))
    return np.log10(np.maximum(rel, EPS))


def _method_prices(method: str, p: HestonParams, strikes, taus, ref, backend):
    if method == "ref":
        return ref
    return price_batch(ApproxOrder(method), p, strikes, taus, backend=backend)


def run_sweep(s: SweepSpec, quadrature: QuadratureConfig = DEFAULT_QUADRATURE, threads: int = 1,
              backend: str | None = None) -> SweepReport:
    """Price every (maturity, strike, method) cell; a failing method marks its cells instead of raising."""
    taus = np.repeat(np.asarray(s.maturities), len(s.strikes))
    strikes = np.tile(np.asarray(s.strikes), len(s.maturities))
    p = s.params

    def ref_block(idx):
        return reference_prices(p, strikes[idx], taus[idx], quadrature, backend=backend)

    # one reference price per (K, tau), shared by every method
    blocks = np.array_split(np.arange(strikes.size), max(1, min(threads, len(s.maturities))))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ref = np.concatenate(list(pool.map(ref_block, blocks)))
    else:
        ref = ref_block(np.arange(strikes.size))

    results = {}
    for method in s.methods:
        try:
            prices = np.asarray(_method_prices(method, p, strikes, taus, ref, backend), dtype=float)
            results[method] = (prices, log10_rel_err(prices, ref), None)
        except Exception as exc:  # recorded per cell, the sweep carries on
            nan = np.full(strikes.size, np.nan)
            results[method] = (nan, nan, f"{type(exc).__name__}: {exc}")

    report = SweepReport(s)
    for i in range(strikes.size):
        for method in s.methods:
            prices, errs, failure = results[method]
            report.cells.append(SweepCell(float(strikes[i]), float(taus[i]), method, float(prices[i]),
                                          float(ref[i]), float(errs[i]), failure))
    return report


# Timing -------------------------------------------------------------------------------------

TASK_SIZES = {"t1_100": 100, "t2_1000": 1000, "t3_10000": 10_000}
TASK_IDS = {1: "t1_100", 2: "t2_1000", 3: "t3_10000"}
TIMING_MATURITIES = (1 / 12, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0)
TIMING_MONEYNESS = tuple(np.linspace(0.8, 1.2, 10))


@dataclass(frozen=True)
class TimingTask:
    task_id: str
    sampler_seed: int = 0
    batch_size: int = 100

    def __post_init__(self):
        if self.task_id not in TASK_SIZES:
            raise DomainError("task_id", f"must be one of {sorted(TASK_SIZES)}, got {self.task_id!r}")
        if self.batch_size != len(TIMING_MATURITIES) * len(TIMING_MONEYNESS):
            raise DomainError("batch_size", "the option batch is fixed at 100 contracts")

    @classmethod
    def from_number(cls, n: int, seed: int = 0) -> "TimingTask":
        if n not in TASK_IDS:
            raise DomainError("task", f"must be 1, 2 or 3, got {n}")
        return cls(TASK_IDS[n], seed)

    @property
    def n_param_sets(self) -> int:
        return TASK_SIZES[self.task_id]


def timing_batch(s0: float = 100.0) -> tuple[np.ndarray, np.ndarray]:
    """Strikes and maturities of the 100-option batch, grouped by maturity."""
    taus = np.repeat(np.asarray(TIMING_MATURITIES), len(TIMING_MONEYNESS))
    strikes = np.tile(s0 * np.asarray(TIMING_MONEYNESS), len(TIMING_MATURITIES))
    return strikes, taus


def sample_params(n: int, seed: int) -> list[HestonParams]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        kappa = rng.uniform(0.5, 3.0)
        theta = rng.uniform(0.05, 0.5)
        nu = rng.uniform(0.05, 0.95 * math.sqrt(2.0 * kappa * theta))
        rho = rng.uniform(-0.9, 0.0)
        v0 = rng.uniform(0.05, 0.5)
        r = rng.uniform(0.0, 0.05)
        out.append(HestonParams(kappa, theta, nu, rho, v0, r, 100.0))
    return out


def params_hash(params: Sequence[HestonParams]) -> str:
    h = hashlib.sha256()
    for p in params:
        h.update(",".join(_fmt(v) for v in p.as_tuple()).encode())
        h.update(b";")
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class TimingRow:
    task: str
    method: str
    seconds: float
    speedup: float


@dataclass
class TimingTable:
    rows: list[TimingRow]
    params_hash: str
    samples: dict[str, list[float]] = field(default_factory=dict)

    def seconds(self, method: str) -> float:
        return next(r.seconds for r in self.rows if r.method == method)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TIMING_FIELDS)
            for r in self.rows:
                w.writerow([r.task, r.method, _fmt(r.seconds), _fmt(r.speedup)])
        return path


def read_timing_csv(path: str | Path) -> list[TimingRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TIMING_FIELDS:
            raise ValueError(f"unexpected timing header {reader.fieldnames}")
        return [TimingRow(r["task"], r["method"], float(r["seconds"]), float(r["speedup"])) for r in reader]


def _pricer(method: str, strikes, taus, quadrature: QuadratureConfig, backend):
    if method == "ref":
        return lambda p: reference_prices(p, strikes, taus, quadrature, backend=backend)
    order = ApproxOrder(method)
    return lambda p: price_batch(order, p, strikes, taus, backend=backend)


def run_timing(task: TimingTask, methods: Sequence[str] = ("ref", "o2", "o3", "o4"), repeats: int = 5,
               threads: int = 1, quadrature: QuadratureConfig = DEFAULT_QUADRATURE,
               backend: str | None = None) -> TimingTable:
    """Median wall-clock seconds to price the batch for every parameter set, per method."""
    if threads < 1:
        raise DomainError("threads", f"must be >= 1, got {threads}")
    params = sample_params(task.n_param_sets, task.sampler_seed)
    strikes, taus = timing_batch()
    pricers = {m: _pricer(m, strikes, taus, quadrature, backend) for m in methods}
    samples: dict[str, list[float]] = {m: [] for m in methods}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    gc_was_enabled = gc.isenabled()
    try:
        for price in pricers.values():
            price(params[0])  # warm caches and lazy imports outside the timed region
        gc.disable()
        # repetitions are interleaved across methods so slow drifts hit every method alike
        for _ in range(repeats):
            for method, price in pricers.items():
                start = time.perf_counter()
                if pool is None:
                    for p in params:
                        price(p)
                else:
                    list(pool.map(price, params))
                samples[method].append(time.perf_counter() - start)
    finally:
        if gc_was_enabled:
            gc.enable()
        if pool is not None:
            pool.shutdown()
    medians = {m: statistics.median(v) for m, v in samples.items()}
    base = medians.get("ref")
    rows = [TimingRow(task.task_id, m, s, (base / s) if base is not None else float("nan"))
            for m, s in medians.items()]
    return TimingTable(rows, params_hash(params), samples)
