"""Event-driven binary-fragmentation cascade.

Each event replaces one particle of size x by daughters z*x and x - z*x
(the complement keeps per-realization mass conservation at rounding
level), chosen with probability proportional to the selection rate S(x).
Particle selection uses a Fenwick tree so an event costs O(log N).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemeFailureError
from .fenwick import FenwickTree
from .kernels import HomogeneousKernel
from .mc import CorrelationEstimate, chunk_ranges, correlation_from_counts, replica_rng
from .solvers import SizeField

DEFAULT_PARTICLE_CAP = 10_000_000
RATE_REFRESH_EVENTS = 1 << 20


@dataclass
class ParticlePopulation:
    """Stochastic state of one cascade realization."""

    sizes: np.ndarray
    t: float = 0.0
    removed_mass: float = 0.0
    capped: bool = False

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=float)
        if self.sizes.ndim != 1:
            raise ValueError("sizes must be a 1-d array")
        if self.sizes.size and np.any(self.sizes <= 0):
            raise ValueError("all particle sizes must be positive")

    @property
    def n(self) -> int:
        return int(self.sizes.size)

    @property
    def total_mass(self) -> float:
        return float(self.sizes.sum())


class MonodisperseStart:
    """Run factory: n0 particles of size x each."""

    def __init__(self, x: float, n0: int = 1):
        self.x = float(x)
        self.n0 = int(n0)

    def __call__(self) -> ParticlePopulation:
        return ParticlePopulation(np.full(self.n0, self.x))


def simulate_branching(kernel: HomogeneousKernel, initial: ParticlePopulation,
                       t: float, rng,
                       max_particles: int = DEFAULT_PARTICLE_CAP,
                       xi_min_cutoff: float | None = None,
                       max_events: int | None = None) -> ParticlePopulation:
    """Exact cascade simulation up to time t.

    Waiting times are exponential at the total rate sum_i S(x_i); the
    breaking particle is picked proportionally to S(x_i); the split
    fraction is drawn from the daughter law.  Daughters below the size
    cutoff (given in log-size units relative to x0) are removed with
    their mass tallied.  If the population would exceed ``max_particles``
    the partial state is returned with ``capped=True``.
    """
    if t < 0:
        raise ValueError("duration must be non-negative")
    if initial.n == 0:
        raise ValueError("initial population must be non-empty")

    x_cut = kernel.x0 * math.exp(xi_min_cutoff) if xi_min_cutoff is not None else 0.0
    sizes = [float(x) for x in initial.sizes]
    mass0 = initial.total_mass + initial.removed_mass
    removed = initial.removed_mass

    tree = FenwickTree(capacity=max(len(sizes) * 2, 16))
    for x in sizes:
        tree.append(kernel.selection(x))

    now = initial.t
    t_end = initial.t + t
    events = 0
    capped = False

    def kill(j: int):
        # swap-remove so the weight tree never holds dead slots
        last = len(sizes) - 1
        if j != last:
            sizes[j] = sizes[last]
            tree.set(j, tree.get(last))
        tree.pop_last()
        sizes.pop()

    while sizes:
        total_rate = tree.total()
        if total_rate <= 0.0:
            break
        wait = rng.exponential(1.0 / total_rate)
        if now + wait > t_end:
            now = t_end
            break
        now += wait
        j = tree.find(rng.random() * total_rate)
        z = float(kernel.daughter.sample_split(rng))
        x = sizes[j]
        d1 = z * x
        d2 = x - d1
        alive1 = d1 >= x_cut and d1 > 0.0
        alive2 = d2 >= x_cut and d2 > 0.0
        if alive1 and alive2:
            sizes[j] = d1
            tree.set(j, kernel.selection(d1))
            sizes.append(d2)
            tree.append(kernel.selection(d2))
        elif alive1 or alive2:
            keep = d1 if alive1 else d2
            removed += d2 if alive1 else d1
            sizes[j] = keep
            tree.set(j, kernel.selection(keep))
        else:
            removed += x
            kill(j)

        events += 1
        if len(sizes) > max_particles:
            capped = True
            break
        if max_events is not None and events >= max_events:
            break
        if events % RATE_REFRESH_EVENTS == 0:
            tree.refresh(np.asarray(kernel.selection(np.asarray(sizes))))

    out = ParticlePopulation(np.asarray(sizes), t=now, removed_mass=removed,
                             capped=capped)
    drift = abs(out.total_mass + out.removed_mass - mass0)
    if drift > 1e-12 * max(mass0, 1.0):
        raise SchemeFailureError(f"per-realization mass drift {drift:.3e}")
    return out


@dataclass
class BranchingDensityEstimate:
    """Mean number density over runs, on geometric size bins."""

    field: SizeField
    stderr: np.ndarray
    mean_total: float
    runs: int
    edges: np.ndarray = field(repr=False, default=None)


def _branching_counts_chunk(args):
    kernel, factory, t, seed, lo, hi, edges, controls = args
    counts = np.zeros((hi - lo, len(edges) - 1), dtype=np.int64)
    totals = np.zeros(hi - lo, dtype=np.int64)
    for r in range(lo, hi):
        rng = replica_rng(seed, r)
        pop = simulate_branching(kernel, factory(), t, rng, **controls)
        counts[r - lo], _ = np.histogram(pop.sizes, bins=edges)
        totals[r - lo] = pop.n
    return counts, totals


def _run_count_matrix(kernel, factory, t, runs, seed, edges, workers, controls):
    jobs = [(kernel, factory, t, seed, lo, hi, edges, controls)
            for lo, hi in chunk_ranges(runs, workers)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_branching_counts_chunk, jobs))
    else:
        parts = [_branching_counts_chunk(j) for j in jobs]
    counts = np.vstack([p[0] for p in parts])
    totals = np.concatenate([p[1] for p in parts])
    return counts, totals


def number_density_estimate(kernel: HomogeneousKernel, initial_factory,
                            t: float, runs: int, seed: int,
                            bin_edges: np.ndarray, workers: int = 1,
                            **controls) -> BranchingDensityEstimate:
    """Per-bin mean particle counts over runs, as a number density."""
    if runs < 100:
        raise ValueError("need at least 100 runs")
    edges = np.asarray(bin_edges, dtype=float)
    counts, totals = _run_count_matrix(kernel, initial_factory, t, runs, seed,
                                       edges, workers, controls)
    widths = np.diff(edges)
    centers = np.sqrt(edges[1:] * edges[:-1])
    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(runs)
    fieldv = SizeField(centers, mean / widths)
    return BranchingDensityEstimate(field=fieldv, stderr=se / widths,
                                    mean_total=float(totals.mean()), runs=runs,
                                    edges=edges)


def branching_correlator(kernel: HomogeneousKernel, initial_factory, t: float,
                         runs: int, seed: int, bin_edges: np.ndarray,
                         workers: int = 1, **controls) -> CorrelationEstimate:
    """Connected count covariance across cascade realizations."""
    if runs < 1000:
        raise ValueError("need at least 1000 runs")
    edges = np.asarray(bin_edges, dtype=float)
    counts, _ = _run_count_matrix(kernel, initial_factory, t, runs, seed,
                                  edges, workers, controls)
    centers = np.sqrt(edges[1:] * edges[:-1])
    return correlation_from_counts(counts, centers)
