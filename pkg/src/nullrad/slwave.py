"""Nonlinear evolution engines and per-slice diagnostics.

Two independent discretizations of the radial equation for w = r*u:

* ``solve_tr``: leapfrog on the characteristic-aligned (t, r) grid with
  dt = dr exactly, so the linear part propagates exactly along grid
  characteristics and all truncation error comes from the nonlinear term.
* ``solve_goursat``: a two-level characteristic integrator for the
  compactified double-null form on the triangle 0 <= nu <= mu <= T_c
  (the t >= 0 half), with data on the diagonal t = 0 and future null
  infinity at the nu = 0 edge.

Marching is sequential; distinct solves share no state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ._kernels import goursat_march, leapfrog_march
from .core import CauchyData, EnergyReport, RadialProfile, centered_derivative, simpson_uniform
from .errors import (
    BlowupError,
    ConfigurationError,
    DomainTooSmallError,
    ResolutionError,
    StiffnessError,
)
from .nonlin import Nonlinearity


@dataclass(frozen=True)
class SolutionField:
    """w(t, r) = r*u(t, r) on the aligned grid t_n = n*dr, r_j = j*dr."""

    dr: float
    w: np.ndarray
    data: CauchyData
    nl: Nonlinearity
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        wv = np.asarray(self.w, dtype=float)
        wv.setflags(write=False)
        object.__setattr__(self, "w", wv)

    @property
    def nt(self) -> int:
        return self.w.shape[0]

    @property
    def nr(self) -> int:
        return self.w.shape[1]

    @property
    def T(self) -> float:
        return (self.nt - 1) * self.dr

    @property
    def r_max(self) -> float:
        return (self.nr - 1) * self.dr

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt) * self.dr

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.nr) * self.dr

    @cached_property
    def wt(self) -> np.ndarray:
        """d_t w by centered differences (3-point one-sided at both ends)."""
        h = self.dr
        out = np.empty_like(self.w)
        out[1:-1] = (self.w[2:] - self.w[:-2]) / (2.0 * h)
        out[0] = (-3.0 * self.w[0] + 4.0 * self.w[1] - self.w[2]) / (2.0 * h)
        out[-1] = (3.0 * self.w[-1] - 4.0 * self.w[-2] + self.w[-3]) / (2.0 * h)
        out.setflags(write=False)
        return out

    def u_slice(self, n: int) -> np.ndarray:
        """u(t_n, r) = w/r with the removable singularity filled at r = 0."""
        return _over_r(self.w[n], self.dr)

    def wt_slice(self, n: int) -> np.ndarray:
        """One row of d_t w without materializing the full array."""
        h = self.dr
        if 1 <= n <= self.nt - 2:
            return (self.w[n + 1] - self.w[n - 1]) / (2.0 * h)
        if n == 0:
            return (-3.0 * self.w[0] + 4.0 * self.w[1] - self.w[2]) / (2.0 * h)
        return (3.0 * self.w[-1] - 4.0 * self.w[-2] + self.w[-3]) / (2.0 * h)

    def ut_slice(self, n: int) -> np.ndarray:
        return _over_r(self.wt_slice(n), self.dr)


def _over_r(row: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(row)
    out[1:] = row[1:] / (np.arange(1, row.size) * h)
    # limit of w/r at r = 0 equals d_r w(0) since w is odd
    out[0] = (4.0 * row[1] - row[2]) / (2.0 * h)
    return out


def _data_on_grid(data: CauchyData, nr: int) -> tuple[np.ndarray, np.ndarray]:
    """phi, psi samples on the first nr nodes of the solve grid (zero-padded)."""
    nsrc = min(nr, data.phi.n)
    phi = np.zeros(nr)
    psi = np.zeros(nr)
    phi[:nsrc] = data.phi.values[:nsrc]
    psi[:nsrc] = data.psi.values[:nsrc]
    return phi, psi


def solve_tr(
    data: CauchyData,
    nl: Nonlinearity,
    T: float,
    r_max: float | None = None,
    dt: float | None = None,
) -> SolutionField:
    """Leapfrog solution of w_tt - w_rr + r f(w/r) = 0 up to time T.

    The first step matches the d'Alembert/trapezoid form used by the
    linear oracle, so at c = 0 the two engines agree to round-off.
    """
    h = data.dr
    if dt is not None and dt != h:
        raise ConfigurationError("characteristic alignment requires dt = dr exactly")
    nt = int(round(T / h)) + 1
    if nt < 3:
        raise ConfigurationError("need at least two time steps")
    T = (nt - 1) * h
    needed = data.support_radius + T + 2.0 * h
    if r_max is None:
        r_max = data.support_radius + T + 8.0 * h
    if r_max < needed - 1e-12:
        raise DomainTooSmallError(f"r_max={r_max} < support + T + 2dr = {needed}")
    nr = int(round(r_max / h)) + 1

    phi, psi = _data_on_grid(data, nr)
    r = np.arange(nr) * h
    w = np.zeros((nt, nr))
    w[0] = r * phi
    w[1] = _first_step(w[0], r * psi, h, r, nl)
    code = leapfrog_march(w, h, nl, r)
    if code >= 0:
        raise BlowupError(f"|w| exceeded blowup limit at step {code}")
    return SolutionField(dr=h, w=w, data=data, nl=nl)


def _first_step(w0: np.ndarray, h_tilde: np.ndarray, h: float, r: np.ndarray, nl) -> np.ndarray:
    """Second-order first step sharing the trapezoid psi-primitive of the
    d'Alembert oracle: w^1 = (w0_{j+1}+w0_{j-1})/2 + trap - (h^2/2) r f(w0/r)."""
    out = np.zeros_like(w0)
    out[1:-1] = 0.5 * (w0[2:] + w0[:-2]) + 0.25 * h * (
        h_tilde[:-2] + 2.0 * h_tilde[1:-1] + h_tilde[2:]
    )
    src = np.zeros_like(w0)
    src[1:] = r[1:] * nl.f(w0[1:] / r[1:])
    out[1:-1] -= 0.5 * h * h * src[1:-1]
    out[0] = 0.0
    return out


@dataclass(frozen=True)
class CharGrid:
    """v(mu, nu) on the triangle 0 <= nu <= mu <= T_c (entries above the
    diagonal are unused and stored as zero).  mu = -1/(t-r), nu = 1/(t+r)."""

    dmu: float
    v: np.ndarray
    support_radius: float
    data: CauchyData
    nl: Nonlinearity
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        vv = np.asarray(self.v, dtype=float)
        vv.setflags(write=False)
        object.__setattr__(self, "v", vv)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def T_c(self) -> float:
        return (self.n - 1) * self.dmu

    @property
    def mu(self) -> np.ndarray:
        return np.arange(self.n) * self.dmu


def _interp_profile(vals: np.ndarray, dr: float, r_query: np.ndarray) -> np.ndarray:
    """Linear interpolation with zero extension beyond the sampled range."""
    n = vals.size
    return np.interp(r_query, np.arange(n) * dr, vals, left=vals[0], right=0.0)


def solve_goursat(data: CauchyData, nl: Nonlinearity, T_c: float, dmu: float | None = None) -> CharGrid:
    """Integrate (mu+nu)^2 v_munu = (2 mu nu/(mu+nu))^2 f~(2 mu nu/(mu+nu), v)
    on the triangle, marching from the t = 0 diagonal toward nu = 0.

    Diagonal data follow from v = r*u and the chain rule:
        v(mu, mu)       = phi(1/mu) / mu
        (d_mu v)(mu,mu) = (psi(1/mu) - phi'(1/mu)) / (2 mu^3) - phi(1/mu) / (2 mu^2)
    Both vanish identically for mu <= 1/R, which makes the strip (and hence
    the null-infinity trace for s <= -R) an exact zero region of the scheme.
    """
    R = data.support_radius
    if not T_c > 1.0 / R:
        raise ResolutionError(f"T_c={T_c} must exceed 1/R={1.0 / R}")
    if dmu is None:
        dmu = T_c / 1024.0
    # snap dmu so that mu = 1/R lies on the grid: the zero strip mu <= 1/R
    # then ends on a node and the trace is an exact zero for s <= -R
    m = int(round((1.0 / R) / dmu))
    if m < 4:
        raise ResolutionError(f"dmu={dmu} too coarse to resolve the corner 1/R={1.0 / R}")
    dmu = (1.0 / R) / m
    N = int(np.ceil(T_c / dmu - 1e-9))
    if N < 8:
        raise ResolutionError("grid too small")

    mu = np.arange(N + 1) * dmu
    inside = mu * R > 1.0 + 1e-12  # only there does the diagonal see data
    r_q = np.zeros(N + 1)
    r_q[inside] = 1.0 / mu[inside]
    phi_d = np.where(inside, _interp_profile(data.phi.values, data.dr, r_q), 0.0)
    psi_d = np.where(inside, _interp_profile(data.psi.values, data.dr, r_q), 0.0)
    dphi = centered_derivative(data.phi.values, data.dr)
    dphi_d = np.where(inside, _interp_profile(dphi, data.dr, r_q), 0.0)

    d0 = np.zeros(N + 1)
    d1 = np.zeros(N + 1)
    pos = inside
    d0[pos] = phi_d[pos] / mu[pos]
    d1[pos] = 0.5 * (psi_d[pos] - dphi_d[pos]) / mu[pos] ** 3 - 0.5 * phi_d[pos] / mu[pos] ** 2

    v = np.zeros((N + 1, N + 1))
    v[np.arange(N + 1), np.arange(N + 1)] = d0
    code = goursat_march(v, d1, dmu, nl)
    if code >= 0:
        i, j = divmod(code, N + 1)
        raise StiffnessError(f"corner update stalled at cell ({i}, {j})")
    return CharGrid(dmu=dmu, v=v, support_radius=R, data=data, nl=nl)


def slice_data(sol: SolutionField, time: float) -> CauchyData:
    """Re-read (u, d_t u) at a grid time as new Cauchy data."""
    n = int(round(time / sol.dr))
    if not 0 <= n < sol.nt:
        raise ConfigurationError(f"time {time} outside the computed range")
    phi = RadialProfile(sol.dr, sol.u_slice(n), parity="even")
    psi = RadialProfile(sol.dr, sol.ut_slice(n), parity="even")
    radius = min(sol.data.support_radius + n * sol.dr + 2 * sol.dr, sol.r_max + sol.dr)
    return CauchyData(phi=phi, psi=psi, support_radius=radius)


def diagnostics(sol: SolutionField, nl: Nonlinearity) -> list[EnergyReport]:
    """Per-slice energy split plus the decay-flavored diagnostics: L^6 norm,
    the running discrete L^5 L^10 partial norm, and the empirical constant
    sup (t^2 - r^2)|u| accumulated over the grid so far."""
    h = sol.dr
    r = sol.r
    r2 = r * r
    reports = []
    l10_pow5 = np.zeros(sol.nt)
    running_sup = 0.0
    for n in range(sol.nt):
        u = sol.u_slice(n)
        ut = sol.ut_slice(n)
        dw = np.gradient(sol.w[n], h)
        # d_r u = (w_r - u)/r; exactly zero at r = 0 since u is even
        ur = np.empty_like(u)
        ur[1:] = (dw[1:] - u[1:]) / r[1:]
        ur[0] = 0.0
        kinetic = 0.5 * 4.0 * np.pi * simpson_uniform(ut**2 * r2, h)
        gradient = 0.5 * 4.0 * np.pi * simpson_uniform(ur**2 * r2, h)
        potential = 4.0 * np.pi * simpson_uniform(nl.P(u) * r2, h)
        l6 = (4.0 * np.pi * simpson_uniform(u**6 * r2, h)) ** (1.0 / 6.0)
        l10_pow5[n] = (4.0 * np.pi * simpson_uniform(np.abs(u) ** 10 * r2, h)) ** 0.5
        t_n = n * h
        running_sup = max(running_sup, float(np.max((t_n**2 - r2) * np.abs(u))))
        partial = simpson_uniform(l10_pow5[: n + 1], h) ** 0.2 if n >= 2 else 0.0
        reports.append(
            EnergyReport(
                kinetic=float(kinetic),
                gradient=float(gradient),
                potential=float(potential),
                total=float(kinetic + gradient + potential),
                l6_norm=float(l6),
                l5l10_partial=float(partial),
                decay_constant=running_sup,
            )
        )
    return reports


def _triangle_derivatives(v: np.ndarray, h: float, a: int, b: int):
    """v_mu and v_nu where the flux check needs them, never reaching above
    the diagonal: one-sided 3-point stencils replace centered ones there."""
    N = v.shape[0] - 1
    idx = np.arange(a, b + 1)

    # v_mu on the diagonal (forward, increasing mu) and on the nu=a edge
    vmu_diag = (-3.0 * v[idx, idx] + 4.0 * v[idx + 1, idx] - v[idx + 2, idx]) / (2 * h)
    vmu_edge = np.empty(idx.size)
    vmu_edge[1:] = (v[idx[1:] + 1, a] - v[idx[1:] - 1, a]) / (2 * h)
    vmu_edge[0] = vmu_diag[0]  # corner (a, a) sits on the diagonal

    # v_nu on the diagonal (backward stays inside) and on the mu=b edge
    vnu_diag = (3.0 * v[idx, idx] - 4.0 * v[idx, idx - 1] + v[idx, idx - 2]) / (2 * h)
    vnu_edge = np.empty(idx.size)
    vnu_edge[:-1] = (v[b, idx[:-1] + 1] - v[b, idx[:-1] - 1]) / (2 * h)
    vnu_edge[-1] = vnu_diag[-1]  # corner (b, b)
    return vmu_diag, vnu_diag, vmu_edge, vnu_edge


def char_energy_flux_check(
    grid: CharGrid, nl: Nonlinearity, region: tuple[float, float] | None = None
) -> float:
    """Relative residual of the integrated characteristic flux identity on
    the triangle {a <= nu <= mu <= b}.

    Pointwise identity (real fields, Pi = 4 mu^2 nu^2 (mu+nu)^-4):

      1/2 d_nu[(v_mu)^2 + 2 Pi P~] - 1/2 d_mu[(v_nu)^2 + 2 Pi P~]
        + 8 mu nu (nu - mu) (mu+nu)^-4 [P~ + mu nu/(mu+nu) dP~/dx] = 0,

    which integrates to
      (diagonal data term) - (nu=a edge flux) - (mu=b edge flux)
        + (interior sign-definite term) = 0.
    Derivatives are second order, quadrature Simpson/trapezoid (the
    residual is dominated by the scheme's own O(h^2) error).
    """
    h = grid.dmu
    N = grid.n - 1
    if region is None:
        a = max(4, int(round(0.25 * N)))
        b = min(N - 4, int(round(0.85 * N)))
    else:
        a = int(round(region[0] / h))
        b = int(round(region[1] / h))
    if b - a < 8 or a < 2 or b > N - 2:
        raise ResolutionError("flux region too small or touching the boundary")

    v = grid.v
    idx = np.arange(a, b + 1)
    seg = idx * h
    vmu_diag, vnu_diag, vmu_edge, vnu_edge = _triangle_derivatives(v, h, a, b)

    def Pi_of(mu_, nu_):
        p = mu_ + nu_
        q = mu_ * nu_
        out = np.zeros_like(p)
        m = p > 0
        out[m] = 4.0 * q[m] ** 2 / p[m] ** 4
        return out

    def x_of(mu_, nu_):
        p = np.maximum(mu_ + nu_, 1e-300)
        return 2.0 * mu_ * nu_ / p

    Pt_diag = nl.P_tilde(x_of(seg, seg), v[idx, idx])
    diag_term = 0.5 * simpson_uniform(
        vmu_diag**2 + vnu_diag**2 + 4.0 * Pi_of(seg, seg) * Pt_diag, h
    )

    nu_a = np.full(idx.shape, a * h)
    Pt = nl.P_tilde(x_of(seg, nu_a), v[idx, a])
    edge_nu = 0.5 * simpson_uniform(vmu_edge**2 + 2.0 * Pi_of(seg, nu_a) * Pt, h)

    mu_b = np.full(idx.shape, b * h)
    Pt = nl.P_tilde(x_of(mu_b, seg), v[b, idx])
    edge_mu = 0.5 * simpson_uniform(vnu_edge**2 + 2.0 * Pi_of(mu_b, seg) * Pt, h)

    # interior term over {a <= nu <= mu <= b}: trapezoid in both directions
    def _trap(y, dx):
        return dx * (float(np.sum(y)) - 0.5 * (y[0] + y[-1]))

    row_vals = np.zeros(idx.size)
    for k, j in enumerate(idx):
        ii = np.arange(j, b + 1)
        if ii.size < 2:
            row_vals[k] = 0.0
            continue
        mui = ii * h
        nuj = float(j * h)
        p = mui + nuj
        x = x_of(mui, np.full(ii.shape, nuj))
        Pt_row = nl.P_tilde(x, v[ii, j])
        dPdx = _P_tilde_x(nl, x, v[ii, j])
        wrow = 8.0 * mui * nuj * (nuj - mui) / p**4 * (Pt_row + (mui * nuj / p) * dPdx)
        row_vals[k] = _trap(wrow, h)
    interior = _trap(row_vals, h)

    total = diag_term - edge_nu - edge_mu + interior
    scale = max(abs(diag_term), abs(edge_nu), abs(edge_mu), abs(interior), 1e-300)
    return float(abs(total) / scale)


def _P_tilde_x(nl: Nonlinearity, x, v):
    """dP~/dx = x^-7 [ (xv) f(xv) - 6 P(xv) ]; identically zero for the
    pure quintic (P~ is x-independent there)."""
    if nl.kind == "quintic":
        return np.zeros_like(np.asarray(v, dtype=float))
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    safe = np.maximum(np.abs(x), 1e-30)
    xv = x * v
    val = (xv * nl.f(xv) - 6.0 * nl.P(xv)) / safe**7
    return np.where(np.abs(x) > 1e-30, val, 0.0)
