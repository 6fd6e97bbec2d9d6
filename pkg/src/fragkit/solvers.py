"""Deterministic solvers: size-space population balance, exact log-size
master equation, and its drift-diffusion truncation.

All log-size densities live on uniform grids with a histogram (Riemann)
integration convention, so Monte Carlo bin counts and solver values are
directly comparable.  Probability is explicitly book-kept: whatever a
scheme loses through the left boundary is accumulated in ``leaked_mass``
instead of silently vanishing.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DomainError,
    EmptyPopulationError,
    GridMismatchError,
    SchemeFailureError,
    StepSizeWarning,
)
from .kernels import HomogeneousKernel, LogJumpLaw

ABSORB_LEFT = "absorb-left"
REFLECT_LEFT = "reflect-left"

_NEGATIVE_UNDERSHOOT = -1e-12


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformGrid:
    """Uniform log-size grid with n nodes on [xi_min, xi_max]."""

    xi_min: float
    xi_max: float
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("grid needs at least 4 nodes")
        if not self.xi_max > self.xi_min:
            raise ValueError("xi_max must exceed xi_min")

    @property
    def dxi(self) -> float:
        return (self.xi_max - self.xi_min) / (self.n - 1)

    @property
    def xi(self) -> np.ndarray:
        return self.xi_min + self.dxi * np.arange(self.n)

    def snap(self, xi0: float) -> float:
        """Nearest node position."""
        j = int(round((xi0 - self.xi_min) / self.dxi))
        j = min(max(j, 0), self.n - 1)
        return self.xi_min + j * self.dxi

    def index_of(self, xi0: float) -> int:
        j = int(round((xi0 - self.xi_min) / self.dxi))
        if j < 0 or j >= self.n:
            raise DomainError(f"position {xi0} outside the grid")
        return j


@dataclass
class GridField:
    """Density sampled on a uniform log-size grid.

    ``values[i]`` is a density per unit log-size at node ``grid.xi[i]``;
    the integral convention is ``dxi * values.sum()``.  ``leaked_mass``
    accumulates probability that exited through the left boundary under
    the absorb-left condition.
    """

    grid: UniformGrid
    values: np.ndarray
    bc: str = ABSORB_LEFT
    leaked_mass: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise GridMismatchError("values shape does not match the grid")
        if self.bc not in (ABSORB_LEFT, REFLECT_LEFT):
            raise ValueError(f"unknown boundary tag {self.bc!r}")

    # convenience accessors mirroring the grid
    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi

    @property
    def dxi(self) -> float:
        return self.grid.dxi

    def total(self) -> float:
        return float(self.values.sum() * self.dxi)

    def mean(self) -> float:
        t = self.total()
        if t <= 0:
            raise EmptyPopulationError("field carries no mass")
        return float((self.xi * self.values).sum() * self.dxi / t)

    def variance(self) -> float:
        mu = self.mean()
        return float(((self.xi - mu) ** 2 * self.values).sum() * self.dxi / self.total())

    def copy(self) -> "GridField":
        return replace(self, values=self.values.copy())

    @classmethod
    def delta(cls, grid: UniformGrid, xi0: float, bc: str = ABSORB_LEFT) -> "GridField":
        """Unit mass concentrated at the node nearest xi0."""
        vals = np.zeros(grid.n)
        vals[grid.index_of(grid.snap(xi0))] = 1.0 / grid.dxi
        return cls(grid, vals, bc=bc)

    @classmethod
    def gaussian(cls, grid: UniformGrid, mu: float, sigma: float,
                 bc: str = ABSORB_LEFT) -> "GridField":
        """Unit-mass Gaussian profile (renormalized on the grid)."""
        vals = np.exp(-0.5 * ((grid.xi - mu) / sigma) ** 2)
        vals /= vals.sum() * grid.dxi
        return cls(grid, vals, bc=bc)


@dataclass
class SizeField:
    """Number density on a geometric size grid (pivot representation)."""

    x: np.ndarray            # pivot sizes, geometric spacing
    values: np.ndarray       # number density f(x_i)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.values.shape:
            raise GridMismatchError("pivots and values must be matching 1-d arrays")
        if np.any(self.x <= 0) or np.any(np.diff(self.x) <= 0):
            raise ValueError("pivots must be positive and increasing")

    @property
    def widths(self) -> np.ndarray:
        edges = section_edges(self.x)
        return np.diff(edges)

    @property
    def counts(self) -> np.ndarray:
        return self.values * self.widths

    def total_number(self) -> float:
        return float(self.counts.sum())

    def total_mass(self) -> float:
        return float((self.x * self.counts).sum())

    def copy(self) -> "SizeField":
        return SizeField(self.x.copy(), self.values.copy())

    @classmethod
    def monodisperse(cls, pivots: np.ndarray, x_star: float, n0: float = 1.0) -> "SizeField":
        """n0 particles at the pivot nearest x_star."""
        pivots = np.asarray(pivots, dtype=float)
        j = int(np.argmin(np.abs(np.log(pivots / x_star))))
        f = cls(pivots, np.zeros_like(pivots))
        vals = np.zeros_like(pivots)
        vals[j] = n0 / f.widths[j]
        return cls(pivots, vals)

    @classmethod
    def from_counts(cls, pivots: np.ndarray, counts: np.ndarray) -> "SizeField":
        f = cls(np.asarray(pivots, float), np.zeros_like(np.asarray(pivots, float)))
        return cls(f.x, np.asarray(counts, float) / f.widths)


def geometric_size_grid(x_min: float, x_max: float, q: int = 8) -> np.ndarray:
    """Pivots with ratio 2**(1/q) spanning [x_min, x_max]."""
    if x_min <= 0 or x_max <= x_min:
        raise ValueError("need 0 < x_min < x_max")
    ratio = 2.0 ** (1.0 / q)
    n = int(math.ceil(math.log(x_max / x_min) / math.log(ratio))) + 1
    return x_min * ratio ** np.arange(n)


def section_edges(pivots: np.ndarray) -> np.ndarray:
    """Geometric section edges around pivots (half-ratio on the outside)."""
    inner = np.sqrt(pivots[1:] * pivots[:-1])
    r = math.sqrt(pivots[1] / pivots[0])
    return np.concatenate(([pivots[0] / r], inner, [pivots[-1] * r]))


@dataclass
class FPCoefficients:
    """Drift v(xi) and diffusion D(xi) sampled on a grid."""

    grid: UniformGrid
    v: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        if self.v.shape != (self.grid.n,) or self.D.shape != (self.grid.n,):
            raise GridMismatchError("coefficient arrays must match the grid")
        if np.any(self.D <= 0):
            raise ValueError("diffusion must be positive everywhere")


# ---------------------------------------------------------------------------
# shared discretization pieces
# ---------------------------------------------------------------------------

def jump_weight_profile(law: LogJumpLaw, dxi: float):
    """Discrete jump distribution on grid offsets j*dxi, j = 0..J.

    Trapezoid weights over [0, u_max], renormalized to unit mass so the
    discrete scheme conserves probability exactly; the raw quadrature mass
    is returned alongside as the recorded normalization check.
    """
    J = max(int(math.ceil(law.u_max / dxi)), 1)
    u = dxi * np.arange(J + 1)
    w = np.full(J + 1, dxi)
    w[0] = w[-1] = 0.5 * dxi
    c = w * np.asarray(law.density(u))
    raw_mass = float(c.sum())
    if raw_mass <= 0:
        raise SchemeFailureError("jump weights have no mass on the grid spacing")
    return c / raw_mass, raw_mass


def _rk4_step(rhs, y, dt):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _enforce_positive(values: np.ndarray) -> np.ndarray:
    low = values.min()
    if low < _NEGATIVE_UNDERSHOOT:
        raise SchemeFailureError(
            f"density undershoot {low:.3e} beyond the -1e-12 budget"
        )
    return np.maximum(values, 0.0)


# ---------------------------------------------------------------------------
# exact log-size master equation
# ---------------------------------------------------------------------------

def integrate_log_master(kernel: HomogeneousKernel, p0: GridField, t: float,
                         law: LogJumpLaw | None = None) -> GridField:
    """Integrate d/dt p = -lambda p + int lambda(xi+u) K(u) p(xi+u) du.

    The gain integral uses trapezoid weights on grid-aligned offsets;
    explicit RK4 in time with step bounded by 0.1/max(lambda).  Probability
    that jumps below the left edge is tallied into ``leaked_mass`` under
    absorb-left, or re-deposited on the edge node under reflect-left.
    """
    if t < 0:
        raise ValueError("duration must be non-negative")
    initial_budget = p0.total() + p0.leaked_mass
    if abs(initial_budget - 1.0) > 1e-4:
        raise DomainError("initial density must carry unit probability")
    if t == 0:
        return p0.copy()

    law = law or kernel.jump_law()
    grid = p0.grid
    dxi = grid.dxi
    lam = np.asarray(kernel.breakage_rate(grid.xi))
    c, _raw = jump_weight_profile(law, dxi)
    J = len(c) - 1
    c_rev = c[::-1]
    # fraction of jumps from node m that land left of the grid
    tail = np.concatenate((np.cumsum(c[::-1])[::-1], [0.0]))  # tail[j] = sum_{l>=j} c_l
    below_tail = np.zeros(grid.n)
    reach = min(J, grid.n)
    below_tail[:reach] = tail[1 : reach + 1]
    reflect = p0.bc == REFLECT_LEFT

    def rhs(p):
        q = lam * p
        qp = np.concatenate((q, np.zeros(J)))
        gain = np.convolve(qp, c_rev, mode="valid")[: grid.n]
        out = gain - q
        if reflect:
            # pile sub-grid landings onto the edge node (density units)
            out[0] += float((q * below_tail).sum())
        return out

    dt_max = 0.1 / float(lam.max())
    steps = max(int(math.ceil(t / dt_max)), 1)
    dt = t / steps

    p = p0.values.copy()
    leaked = p0.leaked_mass
    for _ in range(steps):
        before = p.sum() * dxi
        p = _enforce_positive(_rk4_step(rhs, p, dt))
        leaked += before - p.sum() * dxi
        if p[-1] > 1e-8:
            raise DomainError("support reached the right grid edge; enlarge the grid")

    out = GridField(grid, p, bc=p0.bc, leaked_mass=leaked)
    if abs(out.total() + out.leaked_mass - initial_budget) > 1e-6:
        raise SchemeFailureError("probability accounting drifted beyond 1e-6")
    return out


# ---------------------------------------------------------------------------
# sectional population balance in size space
# ---------------------------------------------------------------------------

def _breakage_matrix(kernel: HomogeneousKernel, pivots: np.ndarray,
                     gl_order: int = 16) -> np.ndarray:
    """Fixed-pivot daughter redistribution matrix.

    Entry (i, j) is the mean number of daughters assigned to pivot i per
    break of a parent at pivot j.  Each daughter is split between the two
    adjacent pivots so number and mass are both preserved; daughter mass
    below the smallest pivot is deposited there mass-conservingly.  Columns
    are rescaled so the first moment is conserved exactly.
    """
    n = len(pivots)
    nodes, wts = np.polynomial.legendre.leggauss(gl_order)
    N = np.zeros((n, n))
    for j in range(n):
        xj = pivots[j]
        # cells between consecutive pivots, capped at the parent size
        for c in range(j):
            lo, hi = pivots[c], min(pivots[c + 1], xj)
            if hi <= lo:
                continue
            y = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * wts
            dens = np.asarray(kernel.daughter.B(y / xj)) / xj
            frac_hi = (y - lo) / (pivots[c + 1] - pivots[c])
            N[c, j] += float((w * dens * (1.0 - frac_hi)).sum())
            N[c + 1, j] += float((w * dens * frac_hi).sum())
        # below-grid daughters: deposit their mass on the smallest pivot
        lo, hi = 0.0, min(pivots[0], xj)
        if hi > lo:
            y = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * wts
            dens = np.asarray(kernel.daughter.B(y / xj)) / xj
            N[0, j] += float((w * dens * y).sum()) / pivots[0]
        mass = float((pivots * N[:, j]).sum())
        if mass > 0:
            N[:, j] *= xj / mass
    return N


def solve_pbe_number(kernel: HomogeneousKernel, f0: SizeField, t: float) -> SizeField:
    """Sectional fixed-pivot integration of the pure-breakage equation."""
    if t < 0:
        raise ValueError("duration must be non-negative")
    if np.any(f0.values < 0) or not np.isfinite(f0.total_mass()):
        raise ValueError("initial density must be non-negative with finite mass")
    if t == 0:
        return f0.copy()

    pivots = f0.x
    S = np.asarray(kernel.selection(pivots))
    B = _breakage_matrix(kernel, pivots)
    gain = B * S[np.newaxis, :]

    def rhs(counts):
        return gain @ counts - S * counts

    dt_max = 0.1 / float(S.max())
    steps = max(int(math.ceil(t / dt_max)), 1)
    dt = t / steps

    counts = f0.counts.copy()
    mass0 = float((pivots * counts).sum())
    for _ in range(steps):
        counts = _enforce_positive(_rk4_step(rhs, counts, dt))

    mass = float((pivots * counts).sum())
    if abs(mass - mass0) > 1e-6 * mass0 * max(t, 1.0):
        raise SchemeFailureError(
            f"sectional scheme mass drift {abs(mass - mass0) / mass0:.3e}"
        )
    return SizeField.from_counts(pivots, counts)


def mass_weighted_transform(f: SizeField, x0: float) -> GridField:
    """Map a size-space number density to the mass-weighted log-size density.

    p(xi) = x^2 f(x) / M at x = x0 exp(xi), sampled on the (uniform in xi)
    geometric pivot positions.  The output is renormalized to unit mass;
    a raw resampling defect above 1e-4 is an error.
    """
    M = f.total_mass()
    if M <= 0:
        raise EmptyPopulationError("total mass must be positive")
    xi = np.log(f.x / x0)
    dxi = float(np.mean(np.diff(xi)))
    if np.max(np.abs(np.diff(xi) - dxi)) > 1e-9 * dxi:
        raise GridMismatchError("pivots are not geometric; cannot map to a uniform grid")
    p = f.x**2 * f.values / M
    raw = float(p.sum() * dxi)
    if abs(raw - 1.0) > 1e-4:
        raise SchemeFailureError(f"resampling defect {abs(raw - 1.0):.3e} exceeds 1e-4")
    grid = UniformGrid(float(xi[0]), float(xi[-1]), len(xi))
    return GridField(grid, p / raw, bc=ABSORB_LEFT)


def resample(fieldv: GridField, grid: UniformGrid) -> GridField:
    """Linear-interpolation resampling onto another uniform grid."""
    vals = np.interp(grid.xi, fieldv.xi, fieldv.values, left=0.0, right=0.0)
    return GridField(grid, vals, bc=fieldv.bc, leaked_mass=fieldv.leaked_mass)


# ---------------------------------------------------------------------------
# drift-diffusion reduction
# ---------------------------------------------------------------------------

def km_reduce(kernel: HomogeneousKernel, grid: UniformGrid,
              law: LogJumpLaw | None = None) -> FPCoefficients:
    """Second-order moment truncation: v = -m1 lambda, D = (m2/2) lambda."""
    law = law or kernel.jump_law()
    lam = np.asarray(kernel.breakage_rate(grid.xi))
    return FPCoefficients(grid, v=-law.m1 * lam, D=0.5 * law.m2 * lam)


def _fp_rhs(coeffs: FPCoefficients, bc: str):
    """Central-difference right-hand side of -(v p)' + (D p)''."""
    dxi = coeffs.grid.dxi
    v, D = coeffs.v, coeffs.D
    reflect = bc == REFLECT_LEFT

    def rhs(p):
        a = v * p
        b = D * p
        if reflect:
            a_l, a_r = -a[1], 0.0
            b_l, b_r = b[1], 0.0
        else:
            a_l = a_r = b_l = b_r = 0.0
        a_pad = np.concatenate(([a_l], a, [a_r]))
        b_pad = np.concatenate(([b_l], b, [b_r]))
        dadx = (a_pad[2:] - a_pad[:-2]) / (2.0 * dxi)
        d2b = (b_pad[2:] - 2.0 * b_pad[1:-1] + b_pad[:-2]) / (dxi * dxi)
        return -dadx + d2b

    return rhs


def fp_stability_bound(coeffs: FPCoefficients) -> float:
    """Explicit-step bound for the central drift-diffusion stencil."""
    dxi = coeffs.grid.dxi
    bound = 0.4 * dxi * dxi / float(np.max(coeffs.D))
    vmax = float(np.max(np.abs(coeffs.v)))
    if vmax > 0:
        bound = min(bound, 0.5 * dxi / vmax)
    return bound


def integrate_fokker_planck(coeffs: FPCoefficients, p0: GridField, t: float,
                            dt: float | None = None) -> GridField:
    """Central-difference RK4 integration of d/dt p = -(v p)' + (D p)''."""
    if t < 0:
        raise ValueError("duration must be non-negative")
    if p0.grid != coeffs.grid:
        raise GridMismatchError("density and coefficients live on different grids")
    if t == 0:
        return p0.copy()

    grid = p0.grid
    dxi = grid.dxi
    bound = fp_stability_bound(coeffs)
    if dt is not None and dt > bound:
        warnings.warn(
            f"requested step {dt:g} violates the stability bound {bound:g}; reduced",
            StepSizeWarning,
            stacklevel=2,
        )
    dt_eff = bound if dt is None else min(dt, bound)
    steps = max(int(math.ceil(t / dt_eff)), 1)
    dt_eff = t / steps
    rhs = _fp_rhs(coeffs, p0.bc)

    p = p0.values.copy()
    leaked = p0.leaked_mass
    for _ in range(steps):
        before = p.sum() * dxi
        p = _enforce_positive(_rk4_step(rhs, p, dt_eff))
        leaked += before - p.sum() * dxi

    return GridField(grid, p, bc=p0.bc, leaked_mass=leaked)


# ---------------------------------------------------------------------------
# density comparison metrics
# ---------------------------------------------------------------------------

def compare_densities(a: GridField, b: GridField) -> dict:
    """L1 and sup distances plus differences of means and variances."""
    if a.grid != b.grid:
        raise GridMismatchError("densities live on different grids")
    diff = a.values - b.values
    return {
        "l1": float(np.abs(diff).sum() * a.dxi),
        "sup": float(np.max(np.abs(diff))),
        "mean_gap": float(a.mean() - b.mean()),
        "var_gap": float(a.variance() - b.variance()),
    }
