"""Shared Monte Carlo plumbing: counter-based replica streams and
connected-correlator estimation from per-run bin counts.

Every replica r of a run with master seed s draws from an independent
Philox stream keyed by (s, r).  Results are therefore identical for any
execution order, chunking, or worker count: aggregation only ever sums
integer bin counts or concatenates per-replica outputs in replica order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def replica_rng(master_seed: int, replica_index: int) -> np.random.Generator:
    """Independent stream for one replica, keyed by (seed, index)."""
    key = np.array([master_seed & _MASK64, replica_index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class CorrelationEstimate:
    """Connected count covariance over bin pairs, with standard errors.

    Also reused for analytic mode-sum correlators, which carry zero
    standard errors and no run statistics.
    """

    bins: np.ndarray                      # bin centers
    gc: np.ndarray                        # connected covariance matrix
    stderr: np.ndarray                    # standard error of each gc entry
    mean_counts: np.ndarray | None = None  # per-bin mean count (MC only)
    n_runs: int = 0


def correlation_from_counts(counts: np.ndarray, bin_centers: np.ndarray) -> CorrelationEstimate:
    """Estimate G_c(i, j) = <n_i n_j> - <n_i><n_j> across runs.

    The standard error of each entry is the empirical standard deviation of
    the per-run centered products divided by sqrt(runs).
    """
    counts = np.asarray(counts, dtype=float)
    runs = counts.shape[0]
    if runs < 2:
        raise ValueError("need at least two runs to estimate a covariance")
    mean = counts.mean(axis=0)
    centered = counts - mean
    gc = centered.T @ centered / (runs - 1)
    # second moment of the centered products, for the standard error
    sq = centered * centered
    second = sq.T @ sq / runs
    ybar = centered.T @ centered / runs
    var_products = np.maximum(second - ybar * ybar, 0.0)
    stderr = np.sqrt(var_products / runs)
    return CorrelationEstimate(
        bins=np.asarray(bin_centers, dtype=float),
        gc=gc,
        stderr=stderr,
        mean_counts=mean,
        n_runs=runs,
    )


def multinomial_covariance(n_total: float, probs: np.ndarray) -> np.ndarray:
    """Count covariance of n_total independent placements: the baseline
    against which cascade correlations are judged."""
    p = np.asarray(probs, dtype=float)
    return n_total * (np.diag(p) - np.outer(p, p))


def chunk_ranges(total: int, chunks: int):
    """Split range(total) into contiguous chunks (deterministic bounds)."""
    chunks = max(1, min(chunks, total))
    bounds = np.linspace(0, total, chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
