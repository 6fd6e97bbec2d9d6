"""Exact event-driven simulation of the tagged-mass jump process.

A tagged mass quantum sits at log-size xi; it waits an exponential time
with rate lambda(xi) (constant between jumps, so holding times are exact)
and then moves to xi - u with u drawn from the log-jump law.  There is no
time-discretization parameter anywhere in this module: ensemble means can
only differ from the master-equation solution by statistical error.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EventCapError
from .kernels import HomogeneousKernel
from .mc import CorrelationEstimate, chunk_ranges, correlation_from_counts, replica_rng
from .solvers import ABSORB_LEFT, GridField, UniformGrid

DEFAULT_EVENT_CAP = 1_000_000


@dataclass
class TaggedTrajectory:
    """Event list of one tagged quantum: jump times and positions."""

    times: np.ndarray
    positions: np.ndarray

    @property
    def final_position(self) -> float:
        return float(self.positions[-1])

    @property
    def n_events(self) -> int:
        return len(self.times) - 1


@dataclass
class TaggedEnsemble:
    """Final positions of independent tagged quanta at a common time."""

    positions: np.ndarray
    t: float
    seed: int

    @property
    def n_replicas(self) -> int:
        return len(self.positions)


@dataclass
class DensityEstimate:
    """Histogram density on the solver grid with per-bin standard errors."""

    field: GridField
    stderr: np.ndarray
    replicas: int


class DeltaSampler:
    """Initial-condition sampler: all tags start at one log-size."""

    def __init__(self, xi0: float):
        self.xi0 = float(xi0)

    def __call__(self, rng) -> float:
        return self.xi0


class GaussianSampler:
    """Initial-condition sampler: Gaussian start positions."""

    def __init__(self, mu: float, sigma: float):
        self.mu = float(mu)
        self.sigma = float(sigma)

    def __call__(self, rng) -> float:
        return self.mu + self.sigma * rng.standard_normal()


def simulate_tagged(kernel: HomogeneousKernel, xi0: float, t: float, rng,
                    max_events: int = DEFAULT_EVENT_CAP) -> TaggedTrajectory:
    """Simulate one trajectory exactly, returning the full event list."""
    if t < 0:
        raise ValueError("duration must be non-negative")
    law = kernel.jump_law()
    times = [0.0]
    positions = [float(xi0)]
    now = 0.0
    xi = float(xi0)
    while True:
        rate = kernel.breakage_rate(xi)
        now += rng.exponential(1.0 / rate)
        if now > t:
            break
        xi -= float(law.sample(rng))
        times.append(now)
        positions.append(xi)
        if len(times) - 1 >= max_events:
            raise EventCapError(
                f"trajectory exceeded {max_events} events before t={t}"
            )
    return TaggedTrajectory(np.asarray(times), np.asarray(positions))


def _final_position(kernel, law, xi0, t, rng, max_events):
    now = 0.0
    xi = float(xi0)
    events = 0
    while True:
        now += rng.exponential(1.0 / kernel.breakage_rate(xi))
        if now > t:
            return xi
        xi -= float(law.sample(rng))
        events += 1
        if events >= max_events:
            raise EventCapError(f"replica exceeded {max_events} events")


def _ensemble_chunk(args):
    kernel, sampler, t, seed, lo, hi, max_events = args
    law = kernel.jump_law()
    out = np.empty(hi - lo)
    for r in range(lo, hi):
        rng = replica_rng(seed, r)
        out[r - lo] = _final_position(kernel, law, sampler(rng), t, rng, max_events)
    return out


def simulate_ensemble(kernel: HomogeneousKernel, p0_sampler, t: float,
                      replicas: int, seed: int, workers: int = 1,
                      max_events: int = DEFAULT_EVENT_CAP) -> TaggedEnsemble:
    """Final positions of independent replicas (deterministic in the seed,
    regardless of worker count)."""
    jobs = [(kernel, p0_sampler, t, seed, lo, hi, max_events)
            for lo, hi in chunk_ranges(replicas, workers)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_chunk, jobs))
    else:
        parts = [_ensemble_chunk(j) for j in jobs]
    return TaggedEnsemble(np.concatenate(parts), t=t, seed=seed)


def ensemble_density(kernel: HomogeneousKernel, p0_sampler, t: float,
                     replicas: int, seed: int, grid: UniformGrid,
                     workers: int = 1,
                     max_events: int = DEFAULT_EVENT_CAP) -> DensityEstimate:
    """Histogram of final positions on the solver grid, unit-normalized.

    Bins are centered on grid nodes so the estimate is directly comparable
    to master-equation values; per-bin errors are binomial.  Replicas whose
    tag left the grid to the left count into ``leaked_mass``.
    """
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    ens = simulate_ensemble(kernel, p0_sampler, t, replicas, seed,
                            workers=workers, max_events=max_events)
    edges = np.concatenate((grid.xi - 0.5 * grid.dxi, [grid.xi[-1] + 0.5 * grid.dxi]))
    counts, _ = np.histogram(ens.positions, bins=edges)
    below = int(np.sum(ens.positions < edges[0]))
    phat = counts / replicas
    values = phat / grid.dxi
    stderr = np.sqrt(phat * (1.0 - phat) / replicas) / grid.dxi
    fieldv = GridField(grid, values, bc=ABSORB_LEFT, leaked_mass=below / replicas)
    return DensityEstimate(field=fieldv, stderr=stderr, replicas=replicas)


def _correlator_chunk(args):
    kernel, sampler, t, n_tags, seed, lo, hi, edges, max_events = args
    law = kernel.jump_law()
    counts = np.zeros((hi - lo, len(edges) - 1), dtype=np.int64)
    for r in range(lo, hi):
        rng = replica_rng(seed, r)
        finals = np.empty(n_tags)
        for m in range(n_tags):
            finals[m] = _final_position(kernel, law, sampler(rng), t, rng, max_events)
        counts[r - lo], _ = np.histogram(finals, bins=edges)
    return counts


def tagged_correlator(kernel: HomogeneousKernel, p0_sampler, t: float,
                      n_tags: int, runs: int, seed: int, bin_edges: np.ndarray,
                      workers: int = 1,
                      max_events: int = DEFAULT_EVENT_CAP) -> CorrelationEstimate:
    """Connected count covariance over runs of n_tags independent tags.

    Independent tags give multinomial counting statistics: the raw counting
    covariance is estimated without any normal-ordering correction at
    coincident bins (the diagonal keeps the full count variance).
    """
    if runs < 100:
        raise ValueError("need at least 100 runs")
    edges = np.asarray(bin_edges, dtype=float)
    jobs = [(kernel, p0_sampler, t, n_tags, seed, lo, hi, edges, max_events)
            for lo, hi in chunk_ranges(runs, workers)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_correlator_chunk, jobs))
    else:
        parts = [_correlator_chunk(j) for j in jobs]
    counts = np.vstack(parts)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return correlation_from_counts(counts, centers)
