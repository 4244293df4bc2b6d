"""Homogeneous Taylor-Goldstein solutions, Green's functions, and the
regularized resolvent construction (F, phi, psi, rho).

The homogeneous operator is TG = d^2/dy^2 - m^2 + beta^2/(y - y0 +- i eps)^2
on (0, 1) with Dirichlet ends. Its Green's function is assembled from the
regime pair of Whittaker solutions; applying it is organized through
cumulative integrals so that one panelized quadrature pass serves every
output node at once.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NearSingularWarning, QuadratureError
from .specfun import Branch, ComplexEval, PhysicalParams, Regime, scaled_pair_arrays

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_REFINE_STOP = 1e-12   # innermost panel must contribute below this fraction


class GridKind(enum.Enum):
    UNIFORM = "Uniform"
    GAUSS_PANELS = "GaussPanels"


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter y0 with regularization eps and half-plane branch."""

    y0: float
    eps: float
    branch: Branch

    def __post_init__(self):
        if self.eps < 0:
            raise DomainError("eps must be nonnegative")

    def offset(self, y):
        """y - y0 +- i eps as a complex array."""
        return np.asarray(y, dtype=float) - self.y0 + 1j * self.branch.value * self.eps

    @property
    def conjugate(self) -> "SpectralPoint":
        other = Branch.MINUS if self.branch is Branch.PLUS else Branch.PLUS
        return SpectralPoint(self.y0, self.eps, other)


@dataclass
class GridFunction:
    """Complex samples on an ordered grid over [0, 1], endpoints included."""

    nodes: np.ndarray
    values: np.ndarray
    kind: GridKind = GridKind.UNIFORM

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise DomainError("nodes/values shape mismatch")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        if abs(self.nodes[0]) > 1e-15 or abs(self.nodes[-1] - 1.0) > 1e-15:
            raise DomainError("grid must span [0, 1] inclusive")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite")

    def norm(self) -> float:
        """Trapezoidal L^2 norm."""
        return float(np.sqrt(np.trapz(np.abs(self.values) ** 2, self.nodes)))

    def spline(self):
        return CubicSpline(self.nodes, self.values)


def uniform_grid(n: int) -> np.ndarray:
    """n intervals, n+1 nodes on [0, 1]."""
    if n < 8:
        raise DomainError("grid too coarse")
    return np.linspace(0.0, 1.0, n + 1)


def _fd_derivative(vals: np.ndarray, h: float) -> np.ndarray:
    """Centered first derivative, one-sided second order at the ends."""
    out = np.empty_like(vals)
    out[1:-1] = (vals[2:] - vals[:-2]) / (2 * h)
    out[0] = (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h)
    out[-1] = (3 * vals[-1] - 4 * vals[-2] + vals[-3]) / (2 * h)
    return out


@dataclass
class Profile:
    """A data profile with its first three derivatives on a uniform grid."""

    nodes: np.ndarray
    vals: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    _splines: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_callable(cls, f, nodes, d1=None, d2=None, d3=None) -> "Profile":
        nodes = np.asarray(nodes, dtype=float)
        h = nodes[1] - nodes[0]
        vals = np.asarray(f(nodes), dtype=complex) + np.zeros(len(nodes), complex)
        a1 = np.asarray(d1(nodes), dtype=complex) if d1 is not None else _fd_derivative(vals, h)
        a2 = np.asarray(d2(nodes), dtype=complex) if d2 is not None else _fd_derivative(a1, h)
        a3 = np.asarray(d3(nodes), dtype=complex) if d3 is not None else _fd_derivative(a2, h)
        return cls(nodes, vals, a1, a2, a3)

    @classmethod
    def from_samples(cls, vals, nodes) -> "Profile":
        nodes = np.asarray(nodes, dtype=float)
        vals = np.asarray(vals, dtype=complex)
        h = nodes[1] - nodes[0]
        a1 = _fd_derivative(vals, h)
        a2 = _fd_derivative(a1, h)
        a3 = _fd_derivative(a2, h)
        return cls(nodes, vals, a1, a2, a3)

    def at(self, z, order: int = 0):
        arr = (self.vals, self.d1, self.d2, self.d3)[order]
        key = order
        sp = self._splines.get(key)
        if sp is None:
            sp = CubicSpline(self.nodes, arr)
            self._splines[key] = sp
        return sp(z)

    def replace_values(self, vals) -> "Profile":
        return Profile.from_samples(vals, self.nodes)


@dataclass
class InitialDataMode:
    """Per-mode initial vorticity/density profiles plus diagnostics."""

    omega0: GridFunction
    rho0: GridFunction
    diagnostics: dict
    omega_profile: Profile
    rho_profile: Profile

    @property
    def nodes(self) -> np.ndarray:
        return self.omega0.nodes

    def scale(self) -> float:
        return max(self.omega0.norm() + self.rho0.norm(), 1e-300)

    def is_real(self) -> bool:
        return (np.all(self.omega0.values.imag == 0)
                and np.all(self.rho0.values.imag == 0))


def make_data(omega, rho, n: int = 512, omega_derivs=(), rho_derivs=()) -> InitialDataMode:
    """Build an InitialDataMode from callables or sample arrays.

    Derivative callables may be supplied as (d1, d2, d3); otherwise finite
    differences on the grid are used. No boundary or spectral enforcement
    happens here; see spectrum.prepare_data.
    """
    nodes = uniform_grid(n)
    if callable(omega):
        po = Profile.from_callable(omega, nodes, *omega_derivs)
    else:
        po = Profile.from_samples(np.asarray(omega), nodes)
    if callable(rho):
        pr = Profile.from_callable(rho, nodes, *rho_derivs)
    else:
        pr = Profile.from_samples(np.asarray(rho), nodes)
    return InitialDataMode(
        omega0=GridFunction(nodes, po.vals),
        rho0=GridFunction(nodes, pr.vals),
        diagnostics={},
        omega_profile=po,
        rho_profile=pr,
    )


@dataclass(frozen=True)
class GreensEval:
    g: complex
    dg_dy: complex
    dg_dz: complex


class HomogeneousBasis:
    """phi_u, phi_l and the Wronskian for one (params, spectral point).

    phi_u vanishes at y = 1 and phi_l at y = 0; both are built from the
    regime pair evaluated at the shifted argument y - y0 +- i eps.
    """

    def __init__(self, params: PhysicalParams, sp: SpectralPoint):
        self.params = params
        self.sp = sp
        # coefficients frozen at the channel endpoints
        u1, _, u2, _ = scaled_pair_arrays(params, sp.offset(1.0), sp.branch)
        l1, _, l2, _ = scaled_pair_arrays(params, sp.offset(0.0), sp.branch)
        sgn = -1.0 if params.regime is Regime.QUARTER else 1.0
        # phi_u = sgn * (first(1-c) second(z) - second(1-c) first(z)), same
        # shape for phi_l with the coefficients taken at -c.
        self._cu = (sgn * complex(u1[0]), -sgn * complex(u2[0]))
        self._cl = (sgn * complex(l1[0]), -sgn * complex(l2[0]))
        self._wr = None

    def pair(self, y):
        """(phi_u, dphi_u, phi_l, dphi_l) on an array of y values."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        f1, df1, f2, df2 = scaled_pair_arrays(self.params, self.sp.offset(y),
                                              self.sp.branch)
        au, bu = self._cu
        al, bl = self._cl
        phi_u = au * f2 + bu * f1
        dphi_u = au * df2 + bu * df1
        phi_l = al * f2 + bl * f1
        dphi_l = al * df2 + bl * df1
        return phi_u, dphi_u, phi_l, dphi_l

    def wronskian(self, y_ref: float = 0.5) -> complex:
        if self._wr is None:
            pu, du, pl, dl = self.pair(np.array([y_ref]))
            w = complex(pu[0] * dl[0] - du[0] * pl[0])
            scale = abs(pu[0] * dl[0]) + abs(du[0] * pl[0])
            if abs(w) < 1e-10 * scale:
                warnings.warn(
                    f"Wronskian nearly vanishes at y0={self.sp.y0:.6g} "
                    f"(|W|={abs(w):.3e}, scale={scale:.3e}); spectral "
                    "parameter is close to an eigenvalue",
                    NearSingularWarning, stacklevel=2)
            self._wr = w
        return self._wr


def homogeneous_pair(params: PhysicalParams, sp: SpectralPoint, y: float) -> dict:
    """Upper/lower homogeneous TG solutions at one point, with derivatives."""
    basis = HomogeneousBasis(params, sp)
    pu, du, pl, dl = basis.pair(np.array([float(y)]))
    return {
        "phi_u": ComplexEval(complex(pu[0]), complex(du[0])),
        "phi_l": ComplexEval(complex(pl[0]), complex(dl[0])),
    }


def wronskian(params: PhysicalParams, sp: SpectralPoint) -> complex:
    """Wronskian phi_u phi_l' - phi_u' phi_l, computed numerically."""
    return HomogeneousBasis(params, sp).wronskian()


def greens(params: PhysicalParams, sp: SpectralPoint, y: float, z: float) -> GreensEval:
    """Green's function of the TG operator and its first derivatives.

    At y = z the one-sided derivative from the z <= y branch is reported.
    """
    basis = HomogeneousBasis(params, sp)
    w = basis.wronskian()
    puy, duy, ply, dly = basis.pair(np.array([float(y)]))
    puz, duz, plz, dlz = basis.pair(np.array([float(z)]))
    if z <= y:
        g = puy[0] * plz[0] / w
        dg_dy = duy[0] * plz[0] / w
        dg_dz = puy[0] * dlz[0] / w
    else:
        g = puz[0] * ply[0] / w
        dg_dy = puz[0] * dly[0] / w
        dg_dz = duz[0] * ply[0] / w
    return GreensEval(complex(g), complex(dg_dy), complex(dg_dz))


def source_f_arrays(params: PhysicalParams, data: InitialDataMode,
                    sp: SpectralPoint, z) -> np.ndarray:
    """F = Delta_m rho0 - (1/beta^2) Delta_m((z - y0 +- i eps) omega0)."""
    z = np.asarray(z, dtype=float)
    b2 = params.beta ** 2
    m2 = params.m ** 2
    off = sp.offset(z)
    lap_rho = data.rho_profile.at(z, 2) - m2 * data.rho_profile.at(z, 0)
    lap_om = data.omega_profile.at(z, 2) - m2 * data.omega_profile.at(z, 0)
    dom = data.omega_profile.at(z, 1)
    return lap_rho - (off * lap_om + 2.0 * dom) / b2


def source_f_shift_arrays(params: PhysicalParams, data: InitialDataMode,
                          sp: SpectralPoint, z) -> np.ndarray:
    """(d/dz + d/dy0) F, the shift-invariant derivative of the source."""
    z = np.asarray(z, dtype=float)
    b2 = params.beta ** 2
    m2 = params.m ** 2
    off = sp.offset(z)
    dlap_rho = data.rho_profile.at(z, 3) - m2 * data.rho_profile.at(z, 1)
    dlap_om = data.omega_profile.at(z, 3) - m2 * data.omega_profile.at(z, 1)
    d2om = data.omega_profile.at(z, 2)
    return dlap_rho - (off * dlap_om + 2.0 * d2om) / b2


def source_F(params: PhysicalParams, data: InitialDataMode,
             sp: SpectralPoint, z: float) -> complex:
    return complex(source_f_arrays(params, data, sp, np.array([float(z)]))[0])


def _quad_breaks(grid_nodes: np.ndarray, sp: SpectralPoint) -> np.ndarray:
    """Panel edges: the output grid plus geometric refinement toward y0."""
    breaks = set(float(b) for b in grid_nodes)
    y0 = sp.y0
    target = None
    if 0.0 < y0 < 1.0:
        target = y0
    elif y0 <= 0.0:
        target = 0.0
    else:
        target = 1.0
    floor = max(sp.eps / 8.0, abs(y0 - target) / 8.0, 1e-13)
    base = grid_nodes[1] - grid_nodes[0] if len(grid_nodes) > 1 else 0.5
    d = base
    while d > floor:
        d *= 0.5
        for s in (-1.0, 1.0):
            pt = target + s * d
            if 0.0 < pt < 1.0:
                breaks.add(pt)
    if 0.0 < y0 < 1.0:
        breaks.add(y0)
    return np.array(sorted(breaks))


class GreensApplicator:
    """Applies the Green's kernel to several sources in one quadrature pass.

    The solution is assembled from the cumulative integrals
    Phi(y) = [phi_u(y) int_0^y phi_l f + phi_l(y) int_y^1 phi_u f] / W,
    so every output grid node is a panel boundary of the composite
    16-point Gauss-Legendre rule, refined geometrically toward y0.
    """

    def __init__(self, params: PhysicalParams, sp: SpectralPoint,
                 grid_nodes: np.ndarray):
        if sp.eps == 0.0 and 0.0 <= sp.y0 <= 1.0:
            raise DomainError(
                "eps = 0 inside the essential spectrum; use an eps-limit")
        self.params = params
        self.sp = sp
        self.grid = np.asarray(grid_nodes, dtype=float)
        self.basis = HomogeneousBasis(params, sp)
        self.w = self.basis.wronskian()

        breaks = _quad_breaks(self.grid, sp)
        widths = np.diff(breaks)
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        # quadrature nodes per panel, flattened
        self.zq = (mid[:, None] + 0.5 * widths[:, None] * _GL_NODES[None, :]).ravel()
        self.wq = (0.5 * widths[:, None] * _GL_WEIGHTS[None, :]).ravel()
        self.n_panels = len(widths)
        self.breaks = breaks
        pu, du, pl, dl = self.basis.pair(self.zq)
        self._pu_q, self._pl_q = pu, pl
        gu, gdu, gl, gdl = self.basis.pair(self.grid)
        self._pu_g, self._dpu_g = gu, gdu
        self._pl_g, self._dpl_g = gl, gdl
        # map each grid node to its break index
        self._grid_pos = np.searchsorted(breaks, self.grid)
        # panel adjacent to y0 for the refinement convergence check
        self._near = int(np.argmin(np.abs(mid - np.clip(sp.y0, 0.0, 1.0))))

    def apply(self, f_values_at_zq: np.ndarray):
        """Return (Phi, dPhi, int_phi_u_f, int_phi_l_f) on the grid."""
        contrib_l = (self.wq * self._pl_q * f_values_at_zq).reshape(self.n_panels, 16).sum(axis=1)
        contrib_u = (self.wq * self._pu_q * f_values_at_zq).reshape(self.n_panels, 16).sum(axis=1)
        cum_l = np.concatenate([[0.0], np.cumsum(contrib_l)])
        cum_u = np.concatenate([[0.0], np.cumsum(contrib_u)])
        total_u = cum_u[-1]
        total_l = cum_l[-1]
        near_share = (abs(contrib_l[self._near]) + abs(contrib_u[self._near]))
        scale = abs(total_l) + abs(total_u)
        if scale > 0 and near_share > max(_REFINE_STOP * scale, 1e3 * scale):
            raise QuadratureError(
                "panel refinement toward the critical layer did not converge")
        il = cum_l[self._grid_pos]
        iu = total_u - cum_u[self._grid_pos]
        phi = (self._pu_g * il + self._pl_g * iu) / self.w
        dphi = (self._dpu_g * il + self._dpl_g * iu) / self.w
        return phi, dphi, total_u, total_l

    def sample_source(self, f) -> np.ndarray:
        if callable(f):
            return np.asarray(f(self.zq), dtype=complex)
        if isinstance(f, GridFunction):
            return np.asarray(f.spline()(self.zq), dtype=complex)
        raise DomainError("source must be callable or a GridFunction")

    def boundary_dz_phi(self, total_u, total_l):
        """d/dz of the quadrature-built phi at z = 0 and z = 1."""
        pu0, du0, pl0, dl0 = (a[0] for a in self.basis.pair(np.array([0.0])))
        pu1, du1, pl1, dl1 = (a[0] for a in self.basis.pair(np.array([1.0])))
        dphi0 = dl0 * total_u / self.w
        dphi1 = du1 * total_l / self.w
        return dphi0, dphi1, (du1, dl0, pu0, pl0)


def solve_inhomogeneous(params: PhysicalParams, sp: SpectralPoint, f,
                        grid_nodes: np.ndarray | None = None) -> GridFunction:
    """Solve TG Phi = f with Dirichlet ends by Green's-kernel quadrature."""
    if grid_nodes is None:
        grid_nodes = f.nodes if isinstance(f, GridFunction) else uniform_grid(512)
    app = GreensApplicator(params, sp, grid_nodes)
    fq = app.sample_source(f)
    phi, _, _, _ = app.apply(fq)
    return GridFunction(grid_nodes, phi)


def generalized_stream(params: PhysicalParams, data: InitialDataMode,
                       sp: SpectralPoint) -> dict:
    """Resolvent pair (psi, rho) at one spectral point.

    psi = (1/beta^2)(y - y0 +- i eps) omega0 - rho0 + phi  and
    rho = (1/beta^2) omega0 + phi / (y - y0 +- i eps), with
    phi the Green's-kernel solution for the regularized source F.
    """
    app = GreensApplicator(params, sp, data.nodes)
    fq = source_f_arrays(params, data, sp, app.zq)
    phi, _, _, _ = app.apply(fq)
    off = sp.offset(data.nodes)
    b2 = params.beta ** 2
    psi = off * data.omega0.values / b2 - data.rho0.values + phi
    rho = data.omega0.values / b2 + phi / off
    return {
        "psi": GridFunction(data.nodes, psi),
        "rho": GridFunction(data.nodes, rho),
    }


def d_y0_stream(params: PhysicalParams, data: InitialDataMode,
                sp: SpectralPoint) -> dict:
    """Closed-formula derivatives of the generalized stream pair.

    Implements the commutator identities: the y0 derivative of psi trades
    into kernel derivatives plus the boundary terms
    B(y, y0, z)]_0^1 = d_z G(y, y0, z) d_z phi(z, y0) at z = 0, 1.
    """
    app = GreensApplicator(params, sp, data.nodes)
    f_q = source_f_arrays(params, data, sp, app.zq)
    df_q = source_f_shift_arrays(params, data, sp, app.zq)
    phi, dphi, tot_u, tot_l = app.apply(f_q)
    phi_s, _, _, _ = app.apply(df_q)

    dz_phi0, dz_phi1, (du1, dl0, _, _) = app.boundary_dz_phi(tot_u, tot_l)
    grid = data.nodes
    pu_g, pl_g = app._pu_g, app._pl_g
    w = app.w
    # d_z G(y, y0, 1) = phi_u'(1) phi_l(y)/W ; d_z G(y, y0, 0) = phi_u(y) phi_l'(0)/W
    bterm = (du1 * pl_g / w) * dz_phi1 - (pu_g * dl0 / w) * dz_phi0

    b2 = params.beta ** 2
    off = sp.offset(grid)
    om = data.omega0.values
    dom = data.omega_profile.d1
    drho0 = data.rho_profile.d1

    dpsi_dy0 = -om / b2 + bterm - dphi + phi_s
    dpsi_dy = (om + off * dom) / b2 - drho0 + dphi
    drho_dy0 = phi / off ** 2 + (bterm + phi_s - dphi) / off
    return {
        "dpsi_dy0": GridFunction(grid, dpsi_dy0),
        "dpsi_dy": GridFunction(grid, dpsi_dy),
        "drho_dy0": GridFunction(grid, drho_dy0),
    }


def endpoint_eigenfunctions(params: PhysicalParams, n: int = 512) -> dict:
    """Generalized eigenfunctions at the spectral endpoints y0 = 0 and 1.

    phi_u solves the eps = 0, y0 = 0 homogeneous problem with phi_u(1) = 0;
    phi_l is its channel reflection, phi_l(y) = phi_u(1 - y).
    """
    nodes = uniform_grid(n)
    f1, _, f2, _ = scaled_pair_arrays(params, nodes[1:].astype(complex))
    e1, _, e2, _ = scaled_pair_arrays(params, np.array([1.0 + 0j]))
    sgn = -1.0 if params.regime is Regime.QUARTER else 1.0
    vals = np.empty(len(nodes), dtype=complex)
    vals[0] = 0.0  # the regime pair's first member vanishes at 0 like z^{1/2+mu}
    vals[1:] = sgn * (e1[0] * f2 - e2[0] * f1)
    phi_u = vals
    phi_l = phi_u[::-1].copy()
    return {
        "phi_u": GridFunction(nodes, phi_u),
        "phi_l": GridFunction(nodes, phi_l),
    }
