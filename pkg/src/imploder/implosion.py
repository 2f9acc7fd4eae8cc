"""Perturbation experiments: Lavaurs limits, skew products, wandering domains.

Includes the closed-form Moebius oracle for g(z) = z/(1-z), whose Lavaurs
map is the identity, and the skew product

    F(z, w) = (f(z) + coupling * w, g(w)),   coupling = pi^2 / 4,

whose first coordinate shadows the Lavaurs map along the times n^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fatou
from .dynamics import PolynomialMap
from .errors import Degenerate, NoFixedPoint, NoN0, OrbitOverflow, Pole
from .fatou import MobiusMap, ParabolicModel
from .lavaurs import LavaursFixedPoint, lavaurs_array, real_horn_fixed_points

COUPLING = math.pi**2 / 4
OVERFLOW = 1e12


def _iterate_perturbed(f, eps2, N: int, z: np.ndarray):
    z = np.array(z, dtype=complex)
    blown = np.zeros(z.shape, dtype=bool)
    first = np.full(z.shape, -1, dtype=np.int64)
    with np.errstate(all="ignore"):
        for k in range(N):
            z = np.where(blown, z, f(z) + eps2)
            new = ~blown & ~(np.abs(z) <= OVERFLOW)
            first[new] = k + 1
            blown |= new
    return z, first


def perturbed_orbit(p, eps: complex, N: int, z: complex) -> complex:
    """N-th iterate of z -> p(z) + eps^2."""
    if N < 0:
        raise ValueError("N must be >= 0")
    out, first = _iterate_perturbed(p, eps * eps, N, np.array([z]))
    if first[0] >= 0:
        raise OrbitOverflow("perturbed orbit escaped", step=int(first[0]), z=complex(z))
    return complex(out[0])


def perturbed_orbit_array(p, eps: complex, N: int, zs):
    """Array form; escaped entries come back as complex infinity."""
    out, first = _iterate_perturbed(p, eps * eps, N, zs)
    return np.where(first >= 0, np.inf + 0j, out)


def mobius_fixed_points(eps: float):
    """Roots of z^2 - eps^2 z + eps^2, the fixed points of g + eps^2."""
    e2 = eps * eps
    disc = np.sqrt(complex(e2 * e2 - 4 * e2))
    ap, am = (e2 + disc) / 2, (e2 - disc) / 2
    if ap.imag < am.imag:
        ap, am = am, ap
    return complex(ap), complex(am)


def mobius_exact(eps: float, N: int, z):
    """Closed form of (g + eps^2)^N for g(z) = z/(1-z)."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    ap, am = mobius_fixed_points(eps)
    lam = 1 / (1 - ap) ** 2
    mu = lam**N
    k = (mu - 1) / (ap - am)
    zz = np.asarray(z, dtype=complex)
    den = 1 - k * (zz - ap)
    if np.any(np.abs(den) < 1e-14):
        raise Pole("closed form hits its pole", eps=eps, N=N)
    out = ap + mu * (zz - ap) / den
    return complex(out) if np.ndim(out) == 0 else out


def mobius_direct(eps: float, N: int, z):
    """Direct iteration of z -> z/(1-z) + eps^2, the oracle for mobius_exact."""
    g = MobiusMap()
    zz = np.array(z, dtype=complex)
    e2 = eps * eps
    for _ in range(N):
        zz = g(zz) + e2
    return complex(zz) if np.ndim(zz) == 0 else zz


def implosion_error(m: ParabolicModel, samples: Sequence[complex], N: int) -> float:
    """max |(f + (pi/N)^2)^N (z) - L_f(z)| over the samples."""
    if N < 8:
        raise ValueError("N must be >= 8")
    zs = np.asarray(samples, dtype=complex)
    eps = math.pi / N
    approx = perturbed_orbit_array(m.f, eps, N, zs)
    exact, st = lavaurs_array(m, zs)
    if not np.all(st == fatou.OK):
        raise fatou.NotInBasin("implosion samples must lie in the basin")
    return float(np.max(np.abs(approx - exact)))


# ---------------------------------------------------------------------------
# skew products


@dataclass(frozen=True)
class SkewMap:
    f: object
    g: PolynomialMap
    coupling: complex = COUPLING

    def __post_init__(self):
        gt = self.g.taylor(3)
        if abs(gt[0]) > 1e-12 or abs(gt[1] - 1) > 1e-12 or abs(gt[2] + 1) > 1e-12:
            raise Degenerate("g must have the form w - w^2 + O(w^3)")
        ft = self.f.taylor(3)
        if abs(ft[0]) > 1e-12 or abs(ft[1] - 1) > 1e-12 or abs(ft[2] - 1) > 1e-12:
            raise Degenerate("f must have the form z + z^2 + O(z^3)")

    def __call__(self, z, w):
        return self.f(z) + self.coupling * w, self.g(w)


def standard_skew(a: complex = 0.95) -> SkewMap:
    f = PolynomialMap((0, 1, 1, a)) if a != 0 else PolynomialMap((0, 1, 1))
    return SkewMap(f, PolynomialMap((0, 1, -1)))


def _skew_iterate(F: SkewMap, z, w, n: int):
    with np.errstate(all="ignore"):
        for _ in range(n):
            z, w = F(z, w)
    return z, w


def skew_orbit(F: SkewMap, z: complex, w: complex, n: int) -> list[tuple[complex, complex]]:
    if n < 0:
        raise ValueError("n must be >= 0")
    z, w = complex(z), complex(w)
    out = [(z, w)]
    for k in range(n):
        z, w = F(z, w)
        if not (abs(z) <= OVERFLOW and abs(w) <= OVERFLOW):
            raise OrbitOverflow("skew orbit escaped", step=k + 1)
        out.append((z, w))
    return out


def g_model(F: SkewMap) -> ParabolicModel:
    """Model for the conjugate -g(-w) = w + w^2 + ..., whose trap is D(-r, r)."""
    flipped = PolynomialMap(tuple(c * (-1) ** (k + 1) for k, c in enumerate(F.g.coeffs)))
    return fatou.normalize_parabolic(flipped)


def in_basin_g(F: SkewMap, w: complex, n_max: int = 10_000) -> bool:
    """w is in the parabolic basin of g: -w is in the basin of -g(-w)."""
    return fatou.in_basin(g_model(F), -complex(w), n_max).state is fatou.State.INSIDE


def key_limit_error(F: SkewMap, m: ParabolicModel, z: complex, w: complex, n: int) -> float:
    """|pi_1 F^{2n+1}(z, g^{n^2}(w)) - L_f(z)| + |pi_2 ...|."""
    wn = complex(w)
    with np.errstate(all="ignore"):
        for _ in range(n * n):
            wn = F.g(wn)
    zz, ww = _skew_iterate(F, complex(z), wn, 2 * n + 1)
    target, st = lavaurs_array(m, np.array([z]))
    if st[0] != fatou.OK:
        raise fatou.NotInBasin("z is not in the basin", z=complex(z))
    return float(abs(zz - target[0]) + abs(ww))


def mobius_key_limit_error(z: complex, w: complex, n: int) -> float:
    """Key-limit error with the Moebius map in the fibre (Lavaurs map = Id)."""
    g = PolynomialMap((0, 1, -1))
    wn = complex(w)
    for _ in range(n * n):
        wn = g(wn)
    mob = MobiusMap()
    zz = complex(z)
    for _ in range(2 * n + 1):
        zz, wn = mob(zz) + COUPLING * wn, g(wn)
    return abs(zz - z) + abs(wn)


# ---------------------------------------------------------------------------
# wandering domain witness


@dataclass(frozen=True)
class WitnessReport:
    xi: complex
    V_center: complex
    V_radius: float
    W_center: complex
    W_radius: float
    n0: int
    n_cap: int
    contained: dict
    distances: tuple
    samples_checked: int
    shift_errors: tuple = field(default=())
    orbit_separation: float = 0.0

    @property
    def success(self) -> bool:
        if not all(self.contained.values()):
            return False
        tail = self.distances[-5:]
        return all(b <= a for a, b in zip(tail, tail[1:]))

    def to_dict(self):
        return {
            "xi": [self.xi.real, self.xi.imag],
            "V": {"center": [self.V_center.real, self.V_center.imag], "radius": self.V_radius},
            "W": {"center": [self.W_center.real, self.W_center.imag], "radius": self.W_radius},
            "n0": self.n0,
            "n_cap": self.n_cap,
            "contained": {str(k): v for k, v in self.contained.items()},
            "distances": list(self.distances),
            "samples_checked": self.samples_checked,
            "shift_errors": list(self.shift_errors),
            "orbit_separation": self.orbit_separation,
            "success": self.success,
        }


def _disk_samples(center: complex, radius: float, count: int) -> np.ndarray:
    """Deterministic points of a closed disk: a quarter on the boundary, the rest spread inside."""
    nb = max(1, count // 4)
    theta = 2 * np.pi * (np.arange(nb) + 0.5) / nb
    boundary = center + radius * np.exp(1j * theta)
    ni = count - nb
    k = np.arange(ni) + 0.5
    golden = math.pi * (3 - math.sqrt(5))
    interior = center + radius * np.sqrt(k / ni) * np.exp(1j * golden * k)
    return np.concatenate([boundary, interior])


def _contracts(m: ParabolicModel, center: complex, radius: float) -> bool:
    theta = 2 * np.pi * (np.arange(64) + 0.5) / 64
    img, st = lavaurs_array(m, center + radius * np.exp(1j * theta))
    return bool(np.all(st == fatou.OK) and np.all(np.abs(img - center) < radius))


def lavaurs_trap_radius(m: ParabolicModel, xi: complex, start: float = 2.0**-12, cap: float = 4.0) -> float:
    """Grow a disk about xi until L_f(V) inside V fails, then halve once."""
    rad = start
    if not _contracts(m, xi, rad):
        raise NoFixedPoint("no contracting disk about the fixed point", xi=complex(xi))
    while rad < cap and _contracts(m, xi, 2 * rad):
        rad *= 2
    # rad is the last passing radius, i.e. the failing radius halved
    return rad


def wandering_witness(
    F: SkewMap,
    m: ParabolicModel,
    fp: LavaursFixedPoint,
    n_cap: int = 25,
    samples: int = 100,
    W_center: complex = 0.25,
    W_radius: float = 0.1,
) -> WitnessReport:
    """Numerical witness for the n^2 return mechanism of a wandering domain."""
    if not abs(fp.rho) < 1:
        raise NoFixedPoint("fixed point is not attracting", rho=complex(fp.rho))
    xi = complex(fp.xi)
    rad = lavaurs_trap_radius(m, xi)
    zs = _disk_samples(xi, rad, samples)
    closed = rad * (1 + 1e-12)  # boundary samples sit exactly on |z - xi| = rad
    ws = _disk_samples(complex(W_center), W_radius, samples)
    # The samples live in V x W; iterate W forward to the return times.
    with np.errstate(all="ignore"):
        n0 = None
        for n in range(2, 13):
            wn = ws.copy()
            for _ in range(n * n):
                wn = F.g(wn)
            zz, _ = _skew_iterate(F, zs, wn, 2 * n + 1)
            if np.all(np.abs(zz - xi) <= closed):
                n0 = n
                break
        if n0 is None:
            raise NoN0("containment never achieved for n <= 12", V_radius=rad)
        z = zs.copy()
        w = ws.copy()
        for _ in range(n0 * n0):
            w = F.g(w)
        contained = {n0: bool(np.all(np.abs(z - xi) <= closed))}
        distances = [float(np.max(np.abs(z - xi)))]
        for n in range(n0, n_cap):
            z, w = _skew_iterate(F, z, w, 2 * n + 1)
            dist = np.abs(z - xi)
            contained[n + 1] = bool(np.all(dist <= closed))
            distances.append(float(np.max(dist)))
        # shifted subsequence: F^{n^2 + j} -> (f^j(xi), 0)
        shift_errors = []
        zj, wj = z.copy(), w.copy()
        target = xi
        for j in range(6):
            shift_errors.append(float(np.max(np.abs(zj - target) + np.abs(wj))))
            zj, wj = F(zj, wj)
            target = F.f(target)
    pts = [xi]
    for _ in range(5):
        pts.append(F.f(pts[-1]))
    sep = min(abs(pts[i] - pts[j]) for i in range(6) for j in range(i + 1, 6))
    return WitnessReport(
        xi, xi, rad, complex(W_center), W_radius, n0, n_cap, contained, tuple(distances),
        int(zs.size), tuple(shift_errors), float(sep),
    )


# ---------------------------------------------------------------------------
# real quartic family z + z^2 + b z^4


def real_quartic_scan(b_lo: float = -8 / 27, b_hi: float = 0.0, steps: int = 50):
    """Attracting real fixed points of the Lavaurs map of z + z^2 + b z^4."""
    if not (-8 / 27 <= b_lo < b_hi <= 0):
        raise ValueError("need -8/27 <= b_lo < b_hi <= 0")
    hits = []
    for k in range(1, steps + 1):
        b = b_lo + (b_hi - b_lo) * k / (steps + 1)
        m = fatou.normalize_parabolic(PolynomialMap((0, 1, 1, 0, b)))
        for fp in real_horn_fixed_points(m):
            if abs(fp.rho) < 1 and abs(fp.xi.imag) < 1e-6:
                hits.append((b, fp))
    return hits
