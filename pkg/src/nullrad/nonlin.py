"""The admissible nonlinearity family f(u) = u * f0(|u|^2).

The reference member is the defocusing quintic f(u) = c*u^5 (f0(s) = c*s^2),
for which every structural hypothesis holds exactly and c = 0 degenerates to
the linear wave equation, giving closed-form oracles.  Custom members supply
f0 and its derivative; no automatic differentiation is attempted.  Fields
are real throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Nonlinearity:
    """f(u) = u * f0(u^2) with derivative, potential P, and the compactified
    rescalings f~(x, v) = x^-5 f(x v), P~(x, v) = x^-6 P(x v)."""

    kind: str = "quintic"
    c: float = 1.0
    f0_fn: Optional[Callable] = field(default=None, compare=False)
    f0_prime_fn: Optional[Callable] = field(default=None, compare=False)
    P_fn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "quintic":
            if self.c < 0.0:
                raise ConfigurationError("quintic coupling must be >= 0 (defocusing)")
        elif self.kind == "custom":
            if self.f0_fn is None or self.f0_prime_fn is None:
                raise ConfigurationError("custom nonlinearity needs f0 and its derivative")
        else:
            raise ConfigurationError(f"unknown nonlinearity kind {self.kind!r}")

    @property
    def is_linear(self) -> bool:
        return self.kind == "quintic" and self.c == 0.0

    def f0(self, s):
        if self.kind == "quintic":
            return self.c * np.asarray(s, dtype=float) ** 2
        return self.f0_fn(s)

    def f(self, u):
        """f(u); odd in u by construction."""
        u = np.asarray(u, dtype=float)
        if self.kind == "quintic":
            return self.c * u**5
        return u * self.f0_fn(u * u)

    def fprime(self, u):
        """f'(u) = f0(u^2) + 2 u^2 f0'(u^2)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "quintic":
            return 5.0 * self.c * u**4
        s = u * u
        return self.f0_fn(s) + 2.0 * s * self.f0_prime_fn(s)

    def P(self, u):
        """Antiderivative of f with P(0) = 0.

        Custom members without an explicit P use a fixed 64-panel Simpson
        rule on P(u) = int_0^1 u f(t u) dt, vectorized over u.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == "quintic":
            return self.c * u**6 / 6.0
        if self.P_fn is not None:
            return self.P_fn(u)
        t = np.linspace(0.0, 1.0, 65)
        samples = u[..., None] * self.f(t * u[..., None])
        w = np.ones(65)
        w[1:-1:2], w[2:-1:2] = 4.0, 2.0
        return samples @ w * ((t[1] - t[0]) / 3.0)

    def f_tilde(self, x, v):
        """x^-5 f(x v), smooth through x = 0; for the pure quintic this is
        c*v^5 for every x."""
        v = np.asarray(v, dtype=float)
        if self.kind == "quintic":
            return self.c * v**5
        x = np.asarray(x, dtype=float)
        v5 = v**5
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (x * v) ** 2
            ratio = np.where(s > 0.0, self.f0(np.maximum(s, 1e-300)) / np.maximum(s, 1e-300) ** 2, 0.0)
        # x*v -> 0 limit of f0(s)/s^2, estimated just above round-off
        lim = self.f0(1e-10) / 1e-20
        return v5 * np.where(s > 1e-60, ratio, lim)

    def P_tilde(self, x, v):
        """x^-6 P(x v); equals P(v) for the pure quintic."""
        v = np.asarray(v, dtype=float)
        if self.kind == "quintic":
            return self.c * v**6 / 6.0
        x = np.asarray(x, dtype=float)
        safe = np.maximum(np.abs(x), 1e-30)
        return np.where(np.abs(x) > 1e-30, self.P(x * v) / safe**6, 0.0)


def f_eval(nl: Nonlinearity, u):
    return nl.f(u)


def fprime_eval(nl: Nonlinearity, u):
    return nl.fprime(u)


def P_eval(nl: Nonlinearity, u):
    return nl.P(u)


def f_tilde(nl: Nonlinearity, x, v):
    return nl.f_tilde(x, v)


@dataclass(frozen=True)
class AssumptionReport:
    """Numerical check of the structural hypotheses on a sample set.

    The comparability hypothesis u f'(u) ~ f(u) has unspecified constants,
    so only the observed ratio range is reported for it.
    """

    a2_pass: bool
    a4_pass: bool
    a5_pass: bool
    c1: float
    c2: float
    a3_ratio_range: tuple
    linear_mode: bool
    witnesses: dict

    @property
    def all_pass(self) -> bool:
        return self.a2_pass and self.a4_pass and self.a5_pass


def validate_assumptions(nl: Nonlinearity, u_samples) -> AssumptionReport:
    """Check f0 >= 0, the quintic two-sided power bound (reporting the best
    constants), and convexity of P by second differences."""
    u = np.asarray(u_samples, dtype=float)
    if u.size == 0:
        raise ConfigurationError("need a non-empty sample set")
    witnesses: dict = {}

    s = np.linspace(0.0, float(np.max(np.abs(u)) ** 2 + 1.0), 101)
    f0_vals = np.asarray(nl.f0(s), dtype=float)
    a2 = bool(np.all(f0_vals >= -1e-14))
    if not a2:
        k = int(np.argmin(f0_vals))
        witnesses["a2"] = {"s": float(s[k]), "f0": float(f0_vals[k])}

    nz = u[np.abs(u) > 0.0]
    if nz.size:
        ratios = np.abs(nl.f(nz)) / np.abs(nz) ** 5
        c1, c2 = float(np.min(ratios)), float(np.max(ratios))
    else:
        c1 = c2 = 0.0
    linear_mode = c2 == 0.0
    a4 = c1 > 0.0
    if not a4:
        witnesses["a4"] = {"c1": c1, "note": "linear mode" if linear_mode else "lower bound degenerate"}

    du = 1e-3 * max(1.0, float(np.max(np.abs(u), initial=1.0)))
    grid = np.linspace(-float(np.max(np.abs(u), initial=1.0)), float(np.max(np.abs(u), initial=1.0)), 201)
    second = nl.P(grid + du) - 2.0 * nl.P(grid) + nl.P(grid - du)
    a5 = bool(np.all(second >= -1e-10 * max(1.0, float(np.max(np.abs(second))))))
    if not a5:
        k = int(np.argmin(second))
        witnesses["a5"] = {"u": float(grid[k]), "second_difference": float(second[k])}

    if nz.size and not linear_mode:
        r = np.abs(nz * nl.fprime(nz)) / np.maximum(np.abs(nl.f(nz)), 1e-300)
        a3_range = (float(np.min(r)), float(np.max(r)))
    else:
        a3_range = (0.0, 0.0)

    return AssumptionReport(
        a2_pass=a2,
        a4_pass=a4,
        a5_pass=a5,
        c1=c1,
        c2=c2,
        a3_ratio_range=a3_range,
        linear_mode=linear_mode,
        witnesses=witnesses,
    )


def quintic(c: float = 1.0) -> Nonlinearity:
    return Nonlinearity(kind="quintic", c=c)


def linear() -> Nonlinearity:
    return Nonlinearity(kind="quintic", c=0.0)
