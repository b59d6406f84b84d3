"""Symbolic forcing terms f: constant, power |x|^{-theta}, indicator, tabulated."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DomainSpec, GridFunction, lp_norm, sphere_area


@dataclass(frozen=True)
class SourceSpec:
    """Nonnegative forcing term evaluable on any grid of the right kind.

    kind: "constant" (value), "power" (|x|^{-theta}, theta < N),
    "indicator" (1 on |x| <= radius resp. [lo, hi]), "tabulated" (values
    bound to a fixed domain).
    """

    kind: str
    value: float = 1.0
    theta: float = 0.0
    radius: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    table: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("constant", "power", "indicator", "tabulated"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "constant" and self.value < 0:
            raise ValueError("constant source must be nonnegative")
        if self.kind == "power" and self.theta < 0:
            raise ValueError("power source uses |x|^-theta with theta >= 0")
        if self.kind == "tabulated" and any(v < 0 for v in self.table):
            raise ValueError("tabulated source must be nonnegative")

    def on_grid(self, domain: DomainSpec) -> GridFunction:
        x = domain.nodes
        if self.kind == "constant":
            return GridFunction(domain, np.full(domain.grid_n, self.value))
        if self.kind == "power":
            N = domain.dim
            if self.theta >= N:
                raise ValueError("power source needs theta < N for integrability")
            vals = np.empty(domain.grid_n)
            r = np.abs(x)
            nz = r > 0
            vals[nz] = r[nz] ** (-self.theta) * self.value
            if (~nz).any():
                # origin node: average of |x|^-theta over the origin cell
                h = domain.h
                if domain.kind == "interval":
                    avg = (h / 2.0) ** (-self.theta) / (1.0 - self.theta)
                else:
                    vol = sphere_area(N) * (h / 2.0) ** N / N
                    mass = sphere_area(N) * (h / 2.0) ** (N - self.theta) / (N - self.theta)
                    avg = mass / vol
                vals[~nz] = avg * self.value
            return GridFunction(domain, vals)
        if self.kind == "indicator":
            if domain.kind == "ball":
                vals = (x <= self.radius).astype(float)
            else:
                vals = ((x >= self.lo) & (x <= self.hi)).astype(float)
            return GridFunction(domain, vals * self.value)
        vals = np.asarray(self.table, dtype=float)
        if vals.shape != (domain.grid_n,):
            raise ValueError("tabulated source does not match this grid")
        return GridFunction(domain, vals.copy())

    def lm_norm(self, domain: DomainSpec, m: float) -> float:
        return lp_norm(self.on_grid(domain), m)


def constant_source(value: float = 1.0) -> SourceSpec:
    return SourceSpec(kind="constant", value=value)


def power_source(theta: float, value: float = 1.0) -> SourceSpec:
    return SourceSpec(kind="power", theta=theta, value=value)


def indicator_source(radius: float = 0.0, lo: float = 0.0, hi: float = 0.0,
                     value: float = 1.0) -> SourceSpec:
    return SourceSpec(kind="indicator", radius=radius, lo=lo, hi=hi, value=value)


def tabulated_source(values) -> SourceSpec:
    return SourceSpec(kind="tabulated", table=tuple(float(v) for v in values))
