"""Coarse-grained Airy spectral sector.

The drift-diffusion reduction is conjugated to amplitude form by a gauge
factor exp(Phi); around a reference log-size the amplitude operator is
approximated by the quadratic form

    L_A = D* d^2/dxi^2 - F* (xi - xi*) - Gamma*

whose biorthogonal eigenmodes organize profile shapes and, through the
mode-sum formula, equal-time connected two-point correlations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .airyfun import airy_ai
from .errors import (
    CalibrationWarning,
    DegenerateModeError,
    OracleSizeError,
    SchemeFailureError,
    TransformError,
)
from .kernels import HomogeneousKernel, LogJumpLaw
from .mc import CorrelationEstimate
from .solvers import (
    ABSORB_LEFT,
    FPCoefficients,
    GridField,
    UniformGrid,
    _rk4_step,
    integrate_fokker_planck,
)

RESIDUAL_TOL = 1e-6
BIORTH_TOL = 1e-8
DEGENERACY_GAP = 1e-10


# ---------------------------------------------------------------------------
# similarity transform
# ---------------------------------------------------------------------------

@dataclass
class TransformPair:
    """Gauge Phi and potential U of the amplitude representation."""

    grid: UniformGrid
    phi: np.ndarray
    potential: np.ndarray
    xi_star: float


def _central_diff(y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    out[0] = (y[1] - y[0]) / h
    out[-1] = (y[-1] - y[-2]) / h
    return out


def _second_diff(y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    out[0] = out[1]
    out[-1] = out[-2]
    return out


def similarity_transform(coeffs: FPCoefficients,
                         xi_star: float | None = None) -> TransformPair:
    """Gauge and potential of the amplitude form.

    Phi' = (v - D')/(2D), integrated by trapezoid and anchored at
    Phi(xi*) = 0; U = v^2/(4D) - v'/2 + D''/2 - (D')^2/(4D) with central
    differences for the coefficient derivatives.
    """
    grid = coeffs.grid
    if np.any(coeffs.D <= 0):
        raise TransformError("diffusion must be positive for the transform")
    h = grid.dxi
    v, D = coeffs.v, coeffs.D
    dv = _central_diff(v, h)
    dD = _central_diff(D, h)
    d2D = _second_diff(D, h)

    dphi = (v - dD) / (2.0 * D)
    phi = np.concatenate(([0.0], np.cumsum(0.5 * (dphi[1:] + dphi[:-1]) * h)))
    if xi_star is None:
        xi_star = grid.snap(0.5 * (grid.xi_min + grid.xi_max))
    anchor = grid.index_of(grid.snap(xi_star))
    phi -= phi[anchor]

    potential = v * v / (4.0 * D) - 0.5 * dv + 0.5 * d2D - dD * dD / (4.0 * D)
    return TransformPair(grid=grid, phi=phi, potential=potential,
                         xi_star=float(grid.xi[anchor]))


def gauge_to_amplitude(p: np.ndarray, pair: TransformPair) -> np.ndarray:
    """psi = exp(Phi) p."""
    return np.exp(pair.phi) * p


def gauge_to_density(psi: np.ndarray, pair: TransformPair) -> np.ndarray:
    """p = exp(-Phi) psi."""
    return np.exp(-pair.phi) * psi


def evolve_transformed(coeffs: FPCoefficients, pair: TransformPair,
                       psi0: np.ndarray, t: float) -> np.ndarray:
    """Evolve an amplitude under the gauge-conjugated drift-diffusion
    generator (exactly similar to the density evolution, so mapping back
    with exp(-Phi) reproduces it)."""
    from .solvers import _fp_rhs, fp_stability_bound  # shared discretization

    rhs_p = _fp_rhs(coeffs, ABSORB_LEFT)
    w = np.exp(pair.phi)

    def rhs(psi):
        return w * rhs_p(psi / w)

    bound = fp_stability_bound(coeffs)
    steps = max(int(math.ceil(t / bound)), 1)
    dt = t / steps
    psi = psi0.astype(float).copy()
    for _ in range(steps):
        psi = _rk4_step(rhs, psi, dt)
    return psi


# ---------------------------------------------------------------------------
# calibration and operator assembly
# ---------------------------------------------------------------------------

@dataclass
class AiryCalibration:
    """Effective quadratic-sector parameters at a reference log-size."""

    D_star: float
    F_star: float
    lambda_star: float
    xi_star: float

    @property
    def ell_A(self) -> float:
        return airy_length(self.D_star, self.F_star)


def calibrate_airy_params(kernel: HomogeneousKernel, xi_star: float,
                          law: LogJumpLaw | None = None) -> AiryCalibration:
    """Fix (D*, F*) in the linearized-rate gauge.

    D* = (m2/2) lambda(xi*).  F* is the slope of the transformed potential
    at xi* computed from the linearized coefficients v = -m1 lambda* (1 +
    alpha (xi - xi*)) and D = D* held constant, which closes to
    F* = alpha m1^2 lambda* / m2.  The parameters are effective: other
    retention choices shift them at order one.
    """
    law = law or kernel.jump_law()
    lam_star = float(kernel.breakage_rate(xi_star))
    d_star = 0.5 * law.m2 * lam_star
    f_star = kernel.alpha * law.m1**2 * lam_star / law.m2
    if f_star <= 0:
        warnings.warn(
            "non-positive potential slope: profile is not Airy-confined",
            CalibrationWarning,
            stacklevel=2,
        )
    return AiryCalibration(D_star=d_star, F_star=f_star,
                           lambda_star=lam_star, xi_star=float(xi_star))


def airy_length(d_star: float, f_star: float) -> float:
    """ell_A = (D*/F*)**(1/3)."""
    if d_star <= 0 or f_star <= 0:
        raise ValueError("airy length needs positive scale parameters")
    return (d_star / f_star) ** (1.0 / 3.0)


@dataclass
class AiryOperator:
    """Dense discretization of L_A between two Dirichlet walls."""

    matrix: np.ndarray
    xi: np.ndarray           # interior nodes (walls excluded, value pinned to 0)
    dxi: float
    D_star: float
    F_star: float
    Gamma_star: float
    xi_star: float
    walls: tuple


def build_airy_operator(d_star: float, f_star: float, gamma_star: float,
                        xi_star: float, grid: UniformGrid,
                        walls: tuple | None = None) -> AiryOperator:
    """Assemble L_A = D* d2 - F*(xi - xi*) - Gamma* with Dirichlet walls.

    The matrix acts on interior nodes; wall values are identically zero,
    which is the second-order 'Dirichlet rows' prescription.
    """
    if grid.n < 64:
        raise ValueError("need at least 64 grid nodes")
    if walls is None:
        walls = (xi_star, grid.xi_max)
    wl, wr = grid.snap(walls[0]), grid.snap(walls[1])
    il, ir = grid.index_of(wl), grid.index_of(wr)
    if ir - il < 8:
        raise ValueError("walls too close together")
    xi_int = grid.xi[il + 1: ir]
    h = grid.dxi
    n = len(xi_int)
    main = -2.0 * d_star / h**2 - f_star * (xi_int - xi_star) - gamma_star
    off = d_star / h**2 * np.ones(n - 1)
    matrix = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    return AiryOperator(matrix=matrix, xi=xi_int, dxi=h, D_star=d_star,
                        F_star=f_star, Gamma_star=gamma_star,
                        xi_star=xi_star, walls=(wl, wr))


# ---------------------------------------------------------------------------
# biorthogonal eigendecomposition
# ---------------------------------------------------------------------------

@dataclass
class SpectralSector:
    """Retained eigenpairs of the quadratic sector, biorthonormalized so
    that dxi * v_m . u_n = delta_mn."""

    D_star: float
    F_star: float
    Gamma_star: float
    xi_star: float
    walls: tuple
    xi: np.ndarray
    dxi: float
    eigenvalues: np.ndarray
    right_modes: np.ndarray   # columns u_n
    left_modes: np.ndarray    # columns v_n
    residuals: np.ndarray


def _check_degeneracy(values: np.ndarray):
    order = np.argsort(values.real)
    sorted_vals = values[order]
    gaps = np.abs(np.diff(sorted_vals))
    bad = np.where(gaps < DEGENERACY_GAP)[0]
    if bad.size:
        cluster = sorted_vals[np.unique(np.concatenate((bad, bad + 1)))]
        raise DegenerateModeError(
            f"eigenvalue cluster too close to pair reliably: {cluster}",
            cluster=cluster,
        )


def biorthogonal_eigs(op: AiryOperator, n_modes: int) -> SpectralSector:
    """Right/left eigenpairs sorted by descending real part.

    Symmetric matrices take the self-adjoint fast path (left = right);
    otherwise the dense non-symmetric solver provides both families and
    they are paired by eigenvalue index and bilinearly normalized.
    """
    A = op.matrix
    if not np.all(np.isfinite(A)):
        raise ValueError("operator matrix must be finite")
    n = A.shape[0]
    n_modes = min(n_modes, n)
    dxi = op.dxi

    scale = np.max(np.abs(A))
    if np.max(np.abs(A - A.T)) <= 1e-12 * scale:
        vals, vecs = sla.eigh(A)
        order = np.argsort(-vals)[:n_modes]
        lam = vals[order].astype(float)
        _check_degeneracy(vals.astype(complex))
        U = vecs[:, order] / math.sqrt(dxi)
        V = U.copy()
    else:
        vals, vl, vr = sla.eig(A, left=True, right=True)
        _check_degeneracy(vals)
        order = np.argsort(-vals.real)[:n_modes]
        lam = vals[order]
        U = vr[:, order]
        # bilinear left family: y solves y^T A = lambda y^T
        Y = np.conj(vl[:, order])
        pair = np.einsum("im,im->m", Y, U) * dxi
        if np.any(np.abs(pair) < 1e-12):
            raise DegenerateModeError("defective pairing: left/right overlap ~ 0")
        V = Y / pair
        if np.max(np.abs(lam.imag)) < 1e-12 * max(np.max(np.abs(lam.real)), 1.0):
            lam = lam.real
            U = U.real
            V = V.real

    overlap = (V.T @ U) * dxi
    if np.max(np.abs(overlap - np.eye(n_modes))) > BIORTH_TOL:
        raise SchemeFailureError("biorthonormalization failed")

    resid = np.linalg.norm(A @ U - U * lam, axis=0) / np.linalg.norm(U, axis=0)
    if np.max(resid) > RESIDUAL_TOL:
        raise SchemeFailureError(f"eigen residual {np.max(resid):.2e} above budget")

    return SpectralSector(
        D_star=op.D_star, F_star=op.F_star, Gamma_star=op.Gamma_star,
        xi_star=op.xi_star, walls=op.walls, xi=op.xi, dxi=dxi,
        eigenvalues=lam, right_modes=U, left_modes=V, residuals=resid,
    )


# ---------------------------------------------------------------------------
# profiles and correlators
# ---------------------------------------------------------------------------

def airy_profile(xi0: float, ell_a: float, grid: UniformGrid) -> GridField:
    """Snapshot ansatz psi(xi) = N Ai((xi - xi0)/ell_A), normalized so the
    squared profile carries unit weight."""
    if ell_a <= 0:
        raise ValueError("airy length must be positive")
    psi = airy_ai((grid.xi - xi0) / ell_a)
    norm = math.sqrt(float((psi * psi).sum() * grid.dxi))
    return GridField(grid, psi / norm, bc=ABSORB_LEFT)


@dataclass
class ModeCovariance:
    """Initial covariance of mode amplitudes."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("mode covariance must be square")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("mode covariance must be finite")
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm > 1e-8 * max(np.max(np.abs(self.matrix)), 1.0):
            raise ValueError("mode covariance must be Hermitian-symmetric")

    @property
    def is_diagonal(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return not np.any(off)


def mode_sum_correlator(sector: SpectralSector, cov: ModeCovariance, t: float,
                        points: np.ndarray | None = None,
                        method: str = "auto") -> CorrelationEstimate:
    """Equal-time connected two-point function from the mode sum.

    G_c(x1, x2; t) = sum_mn u_m(x1) u_n(x2) exp((lam_m + lam_n) t) C_mn,
    with the diagonal-covariance fast path sum_n C_n u_n(x1) u_n(x2)
    exp(2 Re lam_n t) taken automatically when C is diagonal.
    """
    m = len(sector.eigenvalues)
    if cov.matrix.shape[0] != m:
        raise ValueError("covariance dimension does not match retained modes")
    if points is None:
        pts = sector.xi
        U = sector.right_modes
    else:
        pts = np.asarray(points, dtype=float)
        U = np.column_stack([
            np.interp(pts, sector.xi, sector.right_modes[:, j_col].real)
            for j_col in range(m)
        ])
        if np.iscomplexobj(sector.right_modes):
            U = U + 1j * np.column_stack([
                np.interp(pts, sector.xi, sector.right_modes[:, j_col].imag)
                for j_col in range(m)
            ])

    if method == "auto":
        method = "diagonal" if cov.is_diagonal else "general"
    lam = sector.eigenvalues
    if method == "diagonal":
        weights = np.diag(cov.matrix) * np.exp(2.0 * lam.real * t)
        G = (U * weights) @ U.T
    elif method == "general":
        E = np.exp(lam * t)
        UE = U * E
        G = UE @ cov.matrix @ UE.T
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.iscomplexobj(G) and np.max(np.abs(G.imag)) < 1e-12 * max(np.max(np.abs(G.real)), 1.0):
        G = G.real
    return CorrelationEstimate(bins=pts, gc=G, stderr=np.zeros_like(np.real(G)),
                               mean_counts=None, n_runs=0)


def propagate_covariance_oracle(matrix: np.ndarray, cov0: np.ndarray,
                                t: float) -> np.ndarray:
    """Grid-covariance propagation exp(Lt) C0 exp(L^T t) by dense
    scaling-and-squaring matrix exponentials."""
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if n > 512:
        raise OracleSizeError("dense exponential oracle limited to n <= 512")
    E = sla.expm(matrix * t)
    return E @ np.asarray(cov0) @ E.T


def project_grid_covariance(sector: SpectralSector,
                            grid_cov: np.ndarray) -> ModeCovariance:
    """Project an empirical grid covariance onto retained modes:
    C_mn = dxi^2 v_m^T G v_n."""
    V = sector.left_modes
    C = sector.dxi**2 * (V.T @ np.asarray(grid_cov) @ V)
    C = 0.5 * (C + C.conj().T)
    return ModeCovariance(C)


def median_log_size(fieldv: GridField) -> float:
    """Interpolated median of a grid density (the default xi* policy)."""
    w = fieldv.values * fieldv.dxi
    total = w.sum()
    if total <= 0:
        raise ValueError("cannot take the median of an empty density")
    cum = np.cumsum(w) / total
    j = int(np.searchsorted(cum, 0.5))
    if j == 0:
        return float(fieldv.xi[0])
    c0, c1 = cum[j - 1], cum[j]
    frac = (0.5 - c0) / max(c1 - c0, 1e-300)
    return float(fieldv.xi[j - 1] + frac * fieldv.dxi)
