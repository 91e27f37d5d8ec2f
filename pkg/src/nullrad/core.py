"""Domain types, uniform-grid quadrature, norms, and energy functionals.

Radial fields are sampled on uniform grids r_j = j*dr.  All L^2-type
quantities over R^3 reduce to one-dimensional integrals with the 4*pi*r^2
weight; quantities on the cylinder R x S^2 carry a plain 4*pi weight since
every profile here is independent of the angular variable.

Types are frozen dataclasses holding read-only arrays: every operation in
the package is a pure function, so values can be shared freely across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GridMismatchError, InvalidGridError

#: Relative magnitude below which a sample is treated as an exact zero when
#: checking declared support (round-off floor).
ZERO_TOL = 1e-12

_GRID_RTOL = 1e-9


def simpson_weights(n: int) -> np.ndarray:
    """Composite Simpson quadrature weights for n uniform samples.

    Fewer than 3 samples is an error (trapezoid would silently change the
    order accounting).  An odd panel count is closed with a Simpson 3/8
    tail so fourth order is kept for any length >= 3.
    """
    if n < 3:
        raise InvalidGridError("composite Simpson needs at least 3 samples")
    panels = n - 1
    if panels % 2 == 0:
        return _plain_simpson(n)
    if n == 4:
        return np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    w = np.zeros(n)
    w[: n - 3] += _plain_simpson(n - 3)
    w[n - 4 :] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


def _plain_simpson(n: int) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def simpson_uniform(y, dx: float) -> float:
    """Composite Simpson integral of uniformly sampled values."""
    y = np.asarray(y, dtype=float)
    return float(np.dot(y, simpson_weights(y.shape[-1])) * dx)


def cumulative_trapezoid(y, dx: float, initial: float = 0.0) -> np.ndarray:
    """Running trapezoid primitive with the same length as ``y``."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[0] = initial
    np.cumsum(0.5 * dx * (y[1:] + y[:-1]), out=out[1:])
    out[1:] += initial
    return out


def centered_derivative(y, dx: float) -> np.ndarray:
    """Second-order derivative: centered inside, 3-point one-sided at ends."""
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        raise InvalidGridError("derivative needs at least 3 samples")
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - y[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dx)
    d[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dx)
    return d


def _freeze(a) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RadialProfile:
    """A radial function g(r) sampled at r_j = j*dr.

    ``parity`` records the extension convention across r = 0: ``even`` for
    displacement/velocity profiles, ``odd`` for fields like w = r*u.
    """

    dr: float
    values: np.ndarray
    parity: str = "even"

    def __post_init__(self):
        if not self.dr > 0.0:
            raise InvalidGridError("dr must be positive")
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.ndim != 1 or self.values.size == 0:
            raise InvalidGridError("values must be a non-empty 1-d array")
        if self.parity not in ("even", "odd"):
            raise InvalidGridError(f"unknown parity {self.parity!r}")
        if self.parity == "odd" and self.values[0] != 0.0:
            raise InvalidGridError("odd profile must vanish exactly at r = 0")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def r_max(self) -> float:
        return (self.n - 1) * self.dr

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n) * self.dr

    def same_grid(self, other: "RadialProfile") -> bool:
        return self.n == other.n and abs(self.dr - other.dr) <= _GRID_RTOL * self.dr

    @classmethod
    def from_callable(cls, fn, r_max: float, dr: float, parity: str = "even") -> "RadialProfile":
        n = int(round(r_max / dr)) + 1
        vals = np.asarray(fn(np.arange(n) * dr), dtype=float)
        return cls(dr=dr, values=vals, parity=parity)


@dataclass(frozen=True)
class CauchyData:
    """Initial displacement and velocity (phi, psi), both even and radial,
    together with the declared support radius R (phi = psi = 0 for r >= R).

    ``meta`` carries per-run annotations (inversion residuals and the
    like) and never participates in equality."""

    phi: RadialProfile
    psi: RadialProfile
    support_radius: float
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.phi.same_grid(self.psi):
            raise GridMismatchError("phi and psi must share one grid")
        if self.phi.parity != "even" or self.psi.parity != "even":
            raise InvalidGridError("Cauchy data must be even profiles")
        if not self.support_radius > 0.0:
            raise InvalidGridError("support radius must be positive")
        r = self.phi.r
        outside = r >= self.support_radius - _GRID_RTOL
        for name, p in (("phi", self.phi), ("psi", self.psi)):
            scale = float(np.max(np.abs(p.values)))
            if scale > 0.0 and float(np.max(np.abs(p.values[outside]), initial=0.0)) > ZERO_TOL * scale:
                raise InvalidGridError(f"{name} not zero beyond declared support radius")

    @property
    def dr(self) -> float:
        return self.phi.dr

    @property
    def r_max(self) -> float:
        return self.phi.r_max


@dataclass(frozen=True)
class RadiationProfile:
    """A radiation field F(s) on the uniform grid s_k = s_min + k*ds.

    ``meta`` carries per-run annotations (extraction flags, residuals,
    truncation warnings); it never participates in equality.
    """

    s_min: float
    ds: float
    values: np.ndarray
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.ds > 0.0:
            raise InvalidGridError("ds must be positive")
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.ndim != 1 or self.values.size == 0:
            raise InvalidGridError("values must be a non-empty 1-d array")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def s_max(self) -> float:
        return self.s_min + (self.n - 1) * self.ds

    @property
    def s(self) -> np.ndarray:
        return self.s_min + np.arange(self.n) * self.ds

    def with_meta(self, **kv) -> "RadiationProfile":
        meta = dict(self.meta or {})
        meta.update(kv)
        return RadiationProfile(self.s_min, self.ds, self.values, meta=meta)


@dataclass(frozen=True)
class EnergyReport:
    """Energy decomposition of one time slice plus the decay diagnostics
    filled by the evolution engines (zero in a plain t = 0 context)."""

    kinetic: float
    gradient: float
    potential: float
    total: float
    l6_norm: float = 0.0
    l5l10_partial: float = 0.0
    decay_constant: float = 0.0


def l2_norm_r3(g: RadialProfile) -> float:
    """sqrt(4*pi * int g(r)^2 r^2 dr): the L^2(R^3) norm of a radial function."""
    r = g.r
    return float(np.sqrt(4.0 * np.pi * simpson_uniform(g.values**2 * r**2, g.dr)))


def l2_norm_cylinder(F: RadiationProfile) -> float:
    """sqrt(4*pi * int F(s)^2 ds): L^2 on the cylinder for angle-independent F."""
    return float(np.sqrt(4.0 * np.pi * simpson_uniform(F.values**2, F.ds)))


def linear_energy(data: CauchyData) -> float:
    """Unnormalized linear energy norm E = sqrt(4*pi*int(phi'^2+psi^2) r^2 dr).

    The conserved functional with the 1/2 weighting is ``energy(...).total``;
    both accessors exist because the two conventions differ by that factor.
    """
    r = data.phi.r
    dphi = centered_derivative(data.phi.values, data.dr)
    return float(
        np.sqrt(4.0 * np.pi * simpson_uniform((dphi**2 + data.psi.values**2) * r**2, data.dr))
    )


def energy(data: CauchyData, nl) -> EnergyReport:
    """Conserved energy of (phi, psi): kinetic + gradient halves plus the
    potential term int P(phi)."""
    if not data.phi.same_grid(data.psi):
        raise GridMismatchError("phi and psi must share one grid")
    r = data.phi.r
    dr = data.dr
    dphi = centered_derivative(data.phi.values, dr)
    kinetic = 0.5 * 4.0 * np.pi * simpson_uniform(data.psi.values**2 * r**2, dr)
    gradient = 0.5 * 4.0 * np.pi * simpson_uniform(dphi**2 * r**2, dr)
    potential = 4.0 * np.pi * simpson_uniform(nl.P(data.phi.values) * r**2, dr)
    return EnergyReport(
        kinetic=float(kinetic),
        gradient=float(gradient),
        potential=float(potential),
        total=float(kinetic + gradient + potential),
    )
