"""Homogeneous breakage kernels and the induced log-size jump law.

A kernel is the pair (selection rate, daughter law): the selection rate is
``S(x) = k * x**alpha`` and the daughter law describes how a parent splits.
For a binary split with fraction density ``pi(z)`` the daughter number
density is ``B(z) = pi(z) + pi(1-z)``, mass-normalized so that
``int_0^1 z*B(z) dz = 1``.

Mass-weighted (tagged-mass) dynamics in log-size jump left by decrements
``u >= 0`` drawn from the normalized density ``K(u) = exp(-2u) * B(exp(-u))``,
at the position-dependent rate ``lambda(xi) = k * x0**alpha * exp(alpha*xi)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import KernelError, MomentDivergenceError, RangeError

QUAD_ABS_TOL = 1e-10
TAIL_MASS = 1e-10
TABLE_SIZE = 4096
_EXP_LIMIT = 700.0  # exp overflow guard


def _quad(f, a, b):
    val, _ = quad(f, a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=400)
    return val


# ---------------------------------------------------------------------------
# daughter laws
# ---------------------------------------------------------------------------

class DaughterLaw:
    """Binary split law: fraction density pi(z) on (0,1) and B(z)=pi(z)+pi(1-z)."""

    label = "custom"

    def pi(self, z):
        raise NotImplementedError

    def B(self, z):
        return self.pi(z) + self.pi(1.0 - np.asarray(z))

    def sample_split(self, rng, size=None):
        """Draw split fractions z ~ pi."""
        raise NotImplementedError


class UniformBinary(DaughterLaw):
    """Uniform split fraction: pi(z) = 1, B(z) = 2."""

    label = "uniform-binary"

    def pi(self, z):
        return np.ones_like(np.asarray(z, dtype=float))

    def B(self, z):
        return 2.0 * np.ones_like(np.asarray(z, dtype=float))

    def sample_split(self, rng, size=None):
        return rng.random(size)


class SymmetricBeta(DaughterLaw):
    """Beta(a, a) split fraction; B(z) = 2 pi(z) by symmetry."""

    def __init__(self, a):
        if a <= 0:
            raise KernelError("beta shape parameter must be positive")
        self.a = float(a)
        self._lognorm = math.lgamma(2 * self.a) - 2 * math.lgamma(self.a)
        self.label = f"symmetric-beta({a:g})"

    def pi(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = self._lognorm + (self.a - 1) * (np.log(z) + np.log1p(-z))
        out = np.where((z > 0) & (z < 1), np.exp(logp), 0.0)
        return out

    def B(self, z):
        return 2.0 * self.pi(z)

    def sample_split(self, rng, size=None):
        return rng.beta(self.a, self.a, size)


class TabulatedDaughterLaw(DaughterLaw):
    """Piecewise-linear pi(z) on a user grid, renormalized on load.

    A renormalization adjustment larger than 1e-6 triggers a warning: the
    table is accepted but was not a probability density as given.
    """

    label = "tabulated"

    def __init__(self, z_grid, pi_values):
        z = np.asarray(z_grid, dtype=float)
        p = np.asarray(pi_values, dtype=float)
        if z.ndim != 1 or z.shape != p.shape or z.size < 2:
            raise KernelError("tabulated law needs matching 1-d z and pi arrays")
        if np.any(np.diff(z) <= 0):
            raise KernelError("tabulated z grid must be strictly increasing")
        if z[0] < 0.0 or z[-1] > 1.0:
            raise KernelError("tabulated z grid must lie inside [0, 1]")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise KernelError("tabulated pi values must be finite and non-negative")
        total = np.trapz(p, z)
        if total <= 0:
            raise KernelError("tabulated pi has zero mass")
        if abs(total - 1.0) > 1e-6:
            warnings.warn(
                f"tabulated pi renormalized by factor {1.0 / total:.8g}",
                stacklevel=2,
            )
        self.z_grid = z
        self.pi_values = p / total
        # inverse-CDF table for split sampling
        cdf = np.concatenate(
            ([0.0], np.cumsum(np.diff(z) * 0.5 * (self.pi_values[1:] + self.pi_values[:-1])))
        )
        cdf /= cdf[-1]
        keep = np.concatenate(([True], np.diff(cdf) > 1e-15))
        self._split_inv = PchipInterpolator(cdf[keep], z[keep])

    def pi(self, z):
        return np.interp(np.asarray(z, dtype=float), self.z_grid, self.pi_values,
                         left=0.0, right=0.0)

    def sample_split(self, rng, size=None):
        return self._split_inv(rng.random(size))


@dataclass
class ValidationReport:
    """Quadrature checks of a daughter law against its normalizations."""

    pi_integral: float | None
    zb_integral: float
    pi_ok: bool
    zb_ok: bool
    passed: bool
    tol: float

    def as_dict(self):
        return {
            "pi_integral": self.pi_integral,
            "zB_integral": self.zb_integral,
            "pi_ok": self.pi_ok,
            "zB_ok": self.zb_ok,
            "passed": self.passed,
            "tol": self.tol,
        }


def validate_daughter_law(daughter, tol=1e-8) -> ValidationReport:
    """Check int pi = 1 and int z*B(z) dz = 1 by adaptive quadrature.

    Works with any object exposing ``B`` (and optionally ``pi``); laws
    without a split density report ``pi_integral=None`` and are judged on
    the mass normalization alone.
    """
    probe = np.linspace(1e-6, 1 - 1e-6, 17)
    bvals = np.asarray(daughter.B(probe), dtype=float)
    if not np.all(np.isfinite(bvals)) or np.any(bvals < 0):
        raise KernelError("daughter density is non-finite or negative on (0,1)")

    try:
        pi_integral = _quad(lambda z: float(daughter.pi(z)), 0.0, 1.0)
        pi_ok = abs(pi_integral - 1.0) <= tol
    except NotImplementedError:
        pi_integral = None
        pi_ok = True

    zb_integral = _quad(lambda z: z * float(daughter.B(z)), 0.0, 1.0)
    zb_ok = abs(zb_integral - 1.0) <= tol
    return ValidationReport(
        pi_integral=pi_integral,
        zb_integral=zb_integral,
        pi_ok=pi_ok,
        zb_ok=zb_ok,
        passed=pi_ok and zb_ok,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# log-jump law
# ---------------------------------------------------------------------------

class LogJumpLaw:
    """Normalized density of the log-size decrement per tagged-mass jump.

    ``K(u) = exp(-2u) * B(exp(-u))`` for ``u >= 0``; an optional ``scale``
    contracts the law to ``K(u/scale)/scale`` for controlled small-jump
    families.  Moments m1..m3 are cached; sampling uses the exact inverse
    CDF for the uniform-binary law and a monotone-cubic inverse-CDF table
    otherwise.
    """

    def __init__(self, daughter: DaughterLaw, scale: float = 1.0):
        if scale <= 0:
            raise KernelError("jump-law scale must be positive")
        self.daughter = daughter
        self.scale = float(scale)
        self._exact_exponential = isinstance(daughter, UniformBinary)

        total = _quad(self.density, 0.0, np.inf)
        if not np.isfinite(total) or abs(total - 1.0) > 1e-6:
            raise KernelError(
                f"induced log-jump density is not normalizable (integral {total!r})"
            )
        self.normalization = total
        self.u_max = self._find_umax()
        self.m1 = self._moment(1)
        self.m2 = self._moment(2)
        self.m3 = self._moment(3)
        self._inverse_table = None if self._exact_exponential else self._build_table()

    # -- density ------------------------------------------------------------

    def density(self, u):
        u = np.asarray(u, dtype=float)
        w = u / self.scale
        vals = np.where(
            w >= 0,
            np.exp(-2.0 * w) * self.daughter.B(np.exp(-w)) / self.scale,
            0.0,
        )
        if not np.all(np.isfinite(vals)):
            raise KernelError("log-jump density evaluated to a non-finite value")
        return vals if vals.ndim else float(vals)

    def _find_umax(self):
        # bisection on the numeric tail integral, tail(u_max) < TAIL_MASS
        def tail(u):
            return _quad(self.density, u, np.inf)

        hi = 8.0 * self.scale
        while tail(hi) >= TAIL_MASS:
            hi *= 2.0
            if hi > 1e4 * self.scale:
                raise KernelError("log-jump tail does not decay; cannot truncate")
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if tail(mid) < TAIL_MASS:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-6 * self.scale:
                break
        return hi

    def _moment(self, n):
        val, err = quad(
            lambda u: u**n * self.density(u), 0.0, np.inf,
            epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=400,
        )
        if not np.isfinite(val) or err > max(1e-6, 1e-6 * abs(val)):
            raise MomentDivergenceError(f"moment m{n} of the jump law diverges")
        return val

    def _build_table(self):
        u = np.linspace(0.0, self.u_max, TABLE_SIZE)
        k = np.asarray(self.density(u))
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * np.diff(u))))
        cdf /= cdf[-1]
        keep = np.concatenate(([True], np.diff(cdf) > 1e-15))
        return PchipInterpolator(cdf[keep], u[keep])

    # -- public operations ----------------------------------------------------

    def moment(self, n: int) -> float:
        if n not in (1, 2, 3):
            raise ValueError("moments are cached for n in {1, 2, 3}")
        return (self.m1, self.m2, self.m3)[n - 1]

    def cdf(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.array([_quad(self.density, 0.0, v) for v in u])
        return out if out.size > 1 else float(out[0])

    def sample(self, rng, size=None):
        """Draw jump decrements u >= 0 with density K."""
        unif = rng.random(size)
        if self._exact_exponential:
            # exact inverse CDF of 2*exp(-2u), contracted by the scale
            return -0.5 * self.scale * np.log1p(-unif)
        return self._inverse_table(unif)


def log_jump_density(kernel: "HomogeneousKernel") -> LogJumpLaw:
    """Build the normalized log-jump law induced by a kernel's daughter law."""
    return LogJumpLaw(kernel.daughter)


def scale_jump_law(law: LogJumpLaw, eps: float) -> LogJumpLaw:
    """Contracted family K_eps(u) = K(u/eps)/eps sharing the daughter law."""
    return LogJumpLaw(law.daughter, scale=eps * law.scale)


def jump_moments(law: LogJumpLaw, n: int) -> float:
    """n-th moment of the jump law, n in {1, 2, 3}."""
    return law.moment(n)


def sample_jump(law: LogJumpLaw, rng, size=None):
    """Draw log-size decrements from the jump law."""
    return law.sample(rng, size)


def validity_parameters(law: LogJumpLaw, ell: float):
    """Coarse-graining control parameters at an observation scale ell.

    Returns (eps1, eps2) with eps1 = sqrt(Var u)/ell and
    eps2 = <u^3>^(1/3)/ell.  Both must be small for a local
    drift-diffusion truncation to be controlled.
    """
    if ell <= 0:
        raise ValueError("observation scale must be positive")
    var = law.m2 - law.m1**2
    return math.sqrt(var) / ell, law.m3 ** (1.0 / 3.0) / ell


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

@dataclass
class HomogeneousKernel:
    """Selection rate S(x) = k x**alpha plus a binary daughter law.

    Immutable in use: nothing mutates after construction, so instances are
    safe to share across parallel workers.  Samplers always take an explicit
    random generator.
    """

    alpha: float
    k: float
    x0: float
    daughter: DaughterLaw
    _jump_law: LogJumpLaw | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.k <= 0:
            raise KernelError("rate constant k must be positive")
        if self.x0 <= 0:
            raise KernelError("reference size x0 must be positive")

    def selection(self, x):
        """Per-particle breakage rate S(x) = k x**alpha."""
        return self.k * np.asarray(x, dtype=float) ** self.alpha

    def breakage_rate(self, xi):
        """Log-size breakage rate lambda(xi) = k x0**alpha exp(alpha xi)."""
        xi = np.asarray(xi, dtype=float)
        exponent = self.alpha * xi + self.alpha * math.log(self.x0) + math.log(self.k)
        if np.any(np.abs(exponent) > _EXP_LIMIT):
            raise RangeError("breakage rate overflows at the requested log-size")
        out = np.exp(exponent)
        return out if out.ndim else float(out)

    def jump_law(self) -> LogJumpLaw:
        if self._jump_law is None:
            self._jump_law = log_jump_density(self)
        return self._jump_law


def breakage_rate(kernel: HomogeneousKernel, xi):
    """Module-level alias for :meth:`HomogeneousKernel.breakage_rate`."""
    return kernel.breakage_rate(xi)
