"""Filled-Julia membership, connectivity, and the quadratic Newton oracle.

Membership in the filled Julia set is only semidecidable, so verdicts are
three-valued: escape time can prove escape but never boundedness. ``INSIDE``
is reserved for orbits that enter a certified trap disk.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import (
    Kind,
    PolynomialMap,
    critical_points,
    group_cycles,
    iterate_map,
    periodic_points,
)
from .errors import Degenerate, DynamicsError, ResourceLimit


class State(enum.Enum):
    INSIDE = "inside"
    ESCAPED = "escaped"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Verdict:
    state: State
    iterations_used: int
    escape_index: Optional[int] = None

    @property
    def escaped(self) -> bool:
        return self.state is State.ESCAPED

    def to_dict(self):
        d = {"state": self.state.value, "iterations_used": self.iterations_used}
        if self.escape_index is not None:
            d["escape_index"] = self.escape_index
        return d


def escape_radius(p: PolynomialMap) -> float:
    """Radius R with |p(z)| >= 2|z| whenever |z| >= R."""
    if p.degree < 2:
        raise ValueError("escape radius needs degree >= 2")
    lower = sum(abs(c) for c in p.coeffs[:-1])
    return max(1.0, (2.0 + lower) / abs(p.coeffs[-1]))


def membership(p: PolynomialMap, z: complex, n_max: int) -> Verdict:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    R = escape_radius(p)
    z = complex(z)
    for n in range(n_max + 1):
        if abs(z) > R:
            return Verdict(State.ESCAPED, n, n)
        if n < n_max:
            z = p(z)
    return Verdict(State.UNDETERMINED, n_max)


def escape_times(p: PolynomialMap, zs: np.ndarray, n_max: int) -> np.ndarray:
    """Vectorised membership: escape index per point, -1 when bounded so far."""
    R = escape_radius(p)
    z = np.array(zs, dtype=complex).ravel()
    out = np.full(z.shape, -1, dtype=np.int64)
    idx = np.arange(z.size)
    for n in range(n_max + 1):
        esc = ~(np.abs(z) <= R)
        if esc.any():
            out[idx[esc]] = n
            keep = ~esc
            z, idx = z[keep], idx[keep]
        if n == n_max or z.size == 0:
            break
        z = p(z)
    return out.reshape(np.shape(zs))


@dataclass(frozen=True)
class Trap:
    """Disk mapped into itself by ``p`` iterated ``period`` times."""

    center: complex
    radius: float
    period: int
    source: str  # "attracting" or "parabolic"

    def contains(self, z) -> bool:
        return abs(z - self.center) < self.radius


def _ratio_ok(q, alpha: complex, rho: float, samples: int = 64) -> bool:
    theta = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    zs = alpha + rho * np.exp(1j * theta)
    with np.errstate(all="ignore"):
        ratio = np.abs(q(zs) - alpha) / rho
    return bool(np.all(ratio < 1.0))


def attracting_trap(q, alpha: complex, upper: float, steps: int = 40) -> Optional[float]:
    """Largest radius (by bisection) on which |q(z)-alpha| < |z-alpha| holds on samples."""
    lo, hi = 0.0, upper
    if _ratio_ok(q, alpha, hi):
        return hi
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if _ratio_ok(q, alpha, mid):
            lo = mid
        else:
            hi = mid
    return lo if lo > 0 else None


def find_traps(p: PolynomialMap, max_period: int = 4, cap: int = 64) -> list[Trap]:
    """Certified trap disks for attracting cycles and parabolic fixed points."""
    from .fatou import normalize_parabolic

    traps = []
    upper = escape_radius(p)
    for period in range(1, max_period + 1):
        if p.degree**period > cap:
            break
        try:
            recs = periodic_points(p, period, cap=cap)
        except (ResourceLimit, DynamicsError):
            continue
        q = iterate_map(p, period, cap)
        for cycle in group_cycles(recs, p):
            kind = cycle[0].classification.kind
            if kind in (Kind.ATTRACTING, Kind.SUPERATTRACTING):
                for rec in cycle:
                    rho = attracting_trap(q, rec.location, upper)
                    if rho:
                        traps.append(Trap(rec.location, rho, period, "attracting"))
            elif kind is Kind.PARABOLIC and cycle[0].classification.q == 1:
                for rec in cycle:
                    try:
                        m = normalize_parabolic(q, rec.location)
                    except (Degenerate, DynamicsError):
                        continue
                    # model coordinate w = c (z - alpha); trap is D(-r, r)
                    c = m.scale
                    traps.append(
                        Trap(rec.location - m.r / c, m.r / abs(c), period, "parabolic")
                    )
    return traps


class Connectivity(enum.Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ConnectivityReport:
    status: Connectivity
    critical_points: tuple
    witnesses: tuple
    traps: tuple = field(default=())

    def to_dict(self):
        return {
            "status": self.status.value,
            "critical_points": [[c.real, c.imag] for c in self.critical_points],
            "witnesses": [w.to_dict() for w in self.witnesses],
            "traps": [
                {
                    "center": [t.center.real, t.center.imag],
                    "radius": t.radius,
                    "period": t.period,
                    "source": t.source,
                }
                for t in self.traps
            ],
        }


def connectivity(p: PolynomialMap, n_max: int = 1000, max_period: int = 4) -> ConnectivityReport:
    """Julia set connectivity from the fate of every critical orbit."""
    if p.degree < 2:
        raise ValueError("connectivity needs degree >= 2")
    crit = critical_points(p)
    traps = find_traps(p, max_period)
    R = escape_radius(p)
    witnesses = []
    for c in crit:
        z = complex(c)
        verdict = Verdict(State.UNDETERMINED, n_max)
        for n in range(n_max + 1):
            if abs(z) > R:
                verdict = Verdict(State.ESCAPED, n, n)
                break
            if any(t.contains(z) for t in traps):
                verdict = Verdict(State.INSIDE, n)
                break
            if n < n_max:
                z = p(z)
        witnesses.append(verdict)
    if any(w.state is State.ESCAPED for w in witnesses):
        status = Connectivity.DISCONNECTED
    elif all(w.state is State.INSIDE for w in witnesses):
        status = Connectivity.CONNECTED
    else:
        status = Connectivity.UNDETERMINED
    return ConnectivityReport(status, tuple(crit), tuple(witnesses), tuple(traps))


class NewtonBasin(enum.Enum):
    ROOT_A = "root_a"
    ROOT_B = "root_b"
    ON_JULIA = "on_julia"


def newton_quadratic_basin(a: complex, b: complex, z: complex) -> NewtonBasin:
    """Closed-form basin of Newton's method for (z-a)(z-b).

    w = (z-a)/(z-b) conjugates the Newton map to w -> w^2, so the basins are
    the two half-planes cut out by the perpendicular bisector of [a, b].
    """
    if a == b:
        raise Degenerate("Newton oracle needs distinct roots", a=complex(a))
    da, db = abs(z - a), abs(z - b)
    if abs(da - db) <= 1e-12 * abs(a - b):
        return NewtonBasin.ON_JULIA
    return NewtonBasin.ROOT_A if da < db else NewtonBasin.ROOT_B


def newton_step(a: complex, b: complex, z):
    """Newton map of (z-a)(z-b): z -> (z^2 - ab) / (2z - a - b)."""
    return (z * z - a * b) / (2 * z - a - b)


def newton_map_conjugacy(a: complex, b: complex, z):
    return (z - a) / (z - b)


def escape_certified(p: PolynomialMap, z: complex, extra: int = 5) -> bool:
    """Re-check an escape verdict: doubling holds for ``extra`` further steps."""
    R = escape_radius(p)
    if not abs(z) > R:
        return False
    for _ in range(extra):
        w = p(z)
        if not (abs(w) > 2 * abs(z) or math.isinf(abs(w))):
            return False
        z = w
    return True
