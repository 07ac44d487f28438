"""Monte Carlo oracles for the Heston call.

Paths follow full-truncation Euler: the variance is floored at zero wherever it
enters a drift or diffusion coefficient, and the log-price uses the same floored
value. Increments are ``dW`` for the variance and ``rho dW + sqrt(1 - rho^2) dW'``
for the price.

Paths are split into fixed-size chunks. Chunk ``i`` draws from its own Philox
stream seeded by ``SeedSequence(seed).spawn(n_chunks)[i]``, so the stream-to-path
assignment does not depend on how many threads run the chunks. Chunk sums are
combined in chunk order with ``math.fsum``, which gives bit-identical results for
a given seed at any thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _backend
from .blackscholes import bs_call
from .model import DomainError, HestonParams, OptionSpec, RhoNotZero


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 100_000
    steps_per_year: int = 200
    seed: int = 20240101
    scheme: Literal["euler_full_truncation"] = "euler_full_truncation"
    threads: int = 1
    chunk_size: int = 1 << 17

    def __post_init__(self):
        if self.n_paths < 10_000:
            raise DomainError("n_paths", f"must be >= 10000, got {self.n_paths}")
        if self.steps_per_year < 50:
            raise DomainError("steps_per_year", f"must be >= 50, got {self.steps_per_year}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed", "must be a 64-bit unsigned integer")
        if self.scheme != "euler_full_truncation":
            raise DomainError("scheme", f"unknown scheme {self.scheme!r}")
        if self.threads < 1:
            raise DomainError("threads", f"must be >= 1, got {self.threads}")
        if self.chunk_size < 1:
            raise DomainError("chunk_size", f"must be >= 1, got {self.chunk_size}")

    def n_steps(self, tau: float) -> int:
        return max(1, math.ceil(self.steps_per_year * tau - 1e-9))


@dataclass(frozen=True)
class McEstimate:
    price: float
    std_error: float
    martingale_mean: float
    martingale_se: float
    truncated_fraction: float
    n_paths: int
    elapsed: float = 0.0

    def __iter__(self):
        # unpacks as (price, std_error)
        return iter((self.price, self.std_error))


def _chunks(c: McConfig) -> list[tuple[int, np.random.SeedSequence]]:
    n_chunks = -(-c.n_paths // c.chunk_size)
    seeds = np.random.SeedSequence(c.seed).spawn(n_chunks)
    sizes = [c.chunk_size] * (n_chunks - 1) + [c.n_paths - c.chunk_size * (n_chunks - 1)]
    return list(zip(sizes, seeds))


def _run(worker, c: McConfig) -> list[tuple[float, ...]]:
    jobs = _chunks(c)
    if c.threads == 1:
        return [worker(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=c.threads) as pool:
        return list(pool.map(lambda job: worker(*job), jobs))


def _mean_se(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def mc_price(p: HestonParams, spec: OptionSpec, c: McConfig = McConfig(), backend: str | None = None) -> McEstimate:
    """Discounted call payoff mean over simulated paths, with a martingale check on the same paths."""
    start = time.perf_counter()
    kern = _backend.get(backend)
    tau = spec.tau
    n_steps = c.n_steps(tau)
    dt = tau / n_steps
    disc = math.exp(-p.r * tau)
    x0 = math.log(p.s0)

    def worker(size: int, seed: np.random.SeedSequence):
        rng = np.random.Generator(np.random.Philox(seed))
        x = np.full(size, x0)
        v = np.full(size, p.v0)
        z1 = np.empty(size)
        z2 = np.empty(size)
        truncated = 0
        for _ in range(n_steps):
            rng.standard_normal(out=z1)
            rng.standard_normal(out=z2)
            truncated += kern.mc_step(x, v, z1, z2, p.kappa, p.theta, p.nu, p.rho, p.r, dt)
        spot = disc * np.exp(x)
        payoff = np.maximum(spot - disc * spec.strike, 0.0)
        return (float(payoff.sum()), float(payoff @ payoff), float(spot.sum()), float(spot @ spot), truncated)

    stats = _run(worker, c)
    price, se = _mean_se(math.fsum(s[0] for s in stats), math.fsum(s[1] for s in stats), c.n_paths)
    mart, mart_se = _mean_se(math.fsum(s[2] for s in stats), math.fsum(s[3] for s in stats), c.n_paths)
    truncated = sum(s[4] for s in stats) / (c.n_paths * n_steps)
    return McEstimate(price, se, mart, mart_se, truncated, c.n_paths, time.perf_counter() - start)


def hull_white_mc(p: HestonParams, spec: OptionSpec, c: McConfig = McConfig(), backend: str | None = None) -> McEstimate:
    """Conditional estimator for uncorrelated models: average of BS at the realised mean variance.

    Only the variance is simulated; its time average uses the trapezoid rule on
    the floored path. Here ``martingale_mean`` holds the mean floored terminal
    variance, a sanity value rather than a price martingale.
    """
    if p.rho != 0.0:
        raise RhoNotZero(f"conditional estimator needs rho = 0, got {p.rho}")
    start = time.perf_counter()
    kern = _backend.get(backend)
    tau = spec.tau
    n_steps = c.n_steps(tau)
    dt = tau / n_steps
    x0 = math.log(p.s0)

    def worker(size: int, seed: np.random.SeedSequence):
        rng = np.random.Generator(np.random.Philox(seed))
        v = np.full(size, p.v0)
        iv = np.zeros(size)
        z1 = np.empty(size)
        truncated = 0
        for _ in range(n_steps):
            rng.standard_normal(out=z1)
            truncated += kern.hw_step(v, iv, z1, p.kappa, p.theta, p.nu, dt)
        vol = np.sqrt(np.maximum(iv / tau, 1e-300))
        prices = bs_call(x0, spec.strike, p.r, vol, tau)
        vp = np.maximum(v, 0.0)
        return (float(prices.sum()), float(prices @ prices), float(vp.sum()), float(vp @ vp), truncated)

    stats = _run(worker, c)
    price, se = _mean_se(math.fsum(s[0] for s in stats), math.fsum(s[1] for s in stats), c.n_paths)
    mean_v, mean_v_se = _mean_se(math.fsum(s[2] for s in stats), math.fsum(s[3] for s in stats), c.n_paths)
    truncated = sum(s[4] for s in stats) / (c.n_paths * n_steps)
    return McEstimate(price, se, mean_v, mean_v_se, truncated, c.n_paths, time.perf_counter() - start)
