"""Lavaurs map, horn map, and the filled set of the Lavaurs map.

The Lavaurs map is psi o phi on the parabolic basin and the horn map is
phi o psi on the part of the plane that psi sends into the basin. Both are
evaluated through the vectorised kernels of :mod:`imploder.fatou`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import fatou
from .errors import NotInBasin, OutOfDomain
from .fatou import OK, ParabolicModel

LAVAURS_NMAX = 20_000
FD_STEP = 1e-6
ATTRACT_MARGIN = 1e-6  # |rho| must beat 1 by more than finite-difference noise


def lavaurs_array(m: ParabolicModel, zs, tol: float = fatou.DEFAULT_TOL, n_max: int = LAVAURS_NMAX):
    """Returns (values, phi_status); values are NaN off the basin."""
    v, _, _, st = fatou.phi_array(m, zs, tol, n_max)
    out = np.full(np.shape(v), np.nan + 0j)
    ok = st == OK
    if ok.any():
        w, _, _, _ = fatou.psi_array(m, v[ok], tol)
        out[ok] = w
    return out, st


def lavaurs(m: ParabolicModel, z: complex, tol: float = fatou.DEFAULT_TOL, n_max: int = LAVAURS_NMAX) -> complex:
    Z = fatou.phi(m, z, tol, n_max).value
    return fatou.psi(m, Z, tol).value


def horn_array(m: ParabolicModel, Zs, tol: float = fatou.DEFAULT_TOL, n_max: int = LAVAURS_NMAX):
    """Horn map values; NaN where psi(Z) is not in the basin."""
    w, _, _, _ = fatou.psi_array(m, Zs, tol)
    fin = np.isfinite(w)
    out = np.full(np.shape(w), np.nan + 0j)
    if fin.any():
        v, _, _, st = fatou.phi_array(m, w[fin], tol, n_max)
        out[fin] = np.where(st == OK, v, np.nan)
    return out


def horn(m: ParabolicModel, Z: complex, tol: float = fatou.DEFAULT_TOL, n_max: int = LAVAURS_NMAX) -> complex:
    val = complex(horn_array(m, np.array([Z]), tol, n_max)[0])
    if not np.isfinite(val):
        raise OutOfDomain("psi(Z) is not in the parabolic basin", Z=complex(Z))
    return val


@dataclass(frozen=True)
class LavaursFixedPoint:
    Z_f: complex
    xi: complex
    rho: complex
    basin_label: int
    attraction_radius: float = 0.0  # radius in the horn coordinate

    def to_dict(self):
        return {
            "Z_f": [self.Z_f.real, self.Z_f.imag],
            "xi": [self.xi.real, self.xi.imag],
            "rho": [self.rho.real, self.rho.imag],
            "rho_modulus": abs(self.rho),
            "basin_label": self.basin_label,
            "attraction_radius": self.attraction_radius,
        }


def _wrap(Z):
    return Z - np.floor(Z.real)


def horn_derivative(m: ParabolicModel, Z, h: float = FD_STEP, tol: float = fatou.DEFAULT_TOL):
    Z = np.asarray(Z, dtype=complex)
    both = horn_array(m, np.concatenate([Z + h, Z - h]), tol)
    return (both[: Z.size] - both[Z.size :]) / (2 * h)


def _newton_horn(m: ParabolicModel, seeds: np.ndarray, tol: float, steps: int = 60):
    Z = seeds.copy()
    lo = np.abs(seeds.imag).min() * 0 + 0.05
    hi = np.abs(seeds.imag).max() + 2.0
    done = np.zeros(Z.size, dtype=bool)
    alive = np.ones(Z.size, dtype=bool)
    h = FD_STEP
    for _ in range(steps):
        act = alive & ~done
        if not act.any():
            break
        Za = Z[act]
        vals = horn_array(m, np.concatenate([Za, Za + h, Za - h]), tol)
        n = Za.size
        G = vals[:n] - Za
        dG = (vals[n : 2 * n] - vals[2 * n :]) / (2 * h) - 1
        with np.errstate(all="ignore"):
            step = G / dG
        Znew = _wrap(Za - step)
        bad = ~np.isfinite(Znew) | (np.abs(Znew.imag) < lo) | (np.abs(Znew.imag) > hi)
        ai = np.flatnonzero(act)
        alive[ai[bad]] = False
        good = ~bad
        Z[ai[good]] = Znew[good]
        conv = good & (np.abs(step) < 1e-11)
        done[ai[conv]] = True
    return Z[done & alive]


def attraction_radius(m: ParabolicModel, Z_f: complex, tol: float = fatou.DEFAULT_TOL, kmax: int = 20) -> float:
    """Largest 2^-k such that E maps boundary samples of D(Z_f, 2^-k) inside it."""
    theta = 2 * np.pi * (np.arange(64) + 0.5) / 64
    for k in range(1, kmax + 1):
        rad = 2.0**-k
        img = horn_array(m, Z_f + rad * np.exp(1j * theta), tol)
        if np.all(np.isfinite(img)) and np.all(np.abs(img - Z_f) < rad):
            return rad
    return 0.0


def default_im_max(m: ParabolicModel) -> float:
    one_minus_a = abs(1 - complex(m.a))
    if one_minus_a == 0:
        return 3.0
    return math.log(1 / one_minus_a) / (2 * math.pi) + 3.0


def find_attracting_fixed_points(
    m: ParabolicModel,
    im_min: float = 0.4,
    im_max: Optional[float] = None,
    grid: int = 24,
    tol: float = fatou.DEFAULT_TOL,
    include_repelling: bool = False,
) -> list[LavaursFixedPoint]:
    """Attracting fixed points of the horn map, one per family modulo 1.

    Newton's method on E(Z) - Z runs from a seed grid over both the upper
    band im_min <= Im Z <= im_max and its mirror image.
    """
    if im_min < 0.2:
        raise ValueError("im_min must be >= 0.2")
    if im_max is None:
        im_max = default_im_max(m)
    xs = np.arange(grid) / grid
    ys = im_min + np.arange(int(math.floor((im_max - im_min) * grid)) + 1) / grid
    X, Y = np.meshgrid(xs, ys)
    upper = (X + 1j * Y).ravel()
    seeds = np.concatenate([upper, upper.conj()])
    roots = _newton_horn(m, seeds, tol)
    uniq: list[complex] = []
    for z in sorted(roots, key=lambda c: (round(c.imag, 9), round(c.real, 9))):
        if not any(abs(z - u - k) < 1e-6 for u in uniq for k in (-1, 0, 1)):
            uniq.append(complex(z))
    if not uniq:
        return []
    Zs = np.array(uniq)
    rho = horn_derivative(m, Zs, tol=tol)
    G = horn_array(m, Zs, tol) - Zs
    keep = np.isfinite(rho) & (np.abs(G) < 1e-8)
    if not include_repelling:
        keep &= np.abs(rho) < 1 - ATTRACT_MARGIN
    Zs, rho = Zs[keep], rho[keep]
    order = sorted(range(Zs.size), key=lambda i: (-Zs[i].imag, Zs[i].real))
    xi, _, _, _ = fatou.psi_array(m, Zs, tol)
    out = []
    for label, i in enumerate(order):
        rad = attraction_radius(m, complex(Zs[i]), tol) if abs(rho[i]) < 1 else 0.0
        out.append(LavaursFixedPoint(complex(Zs[i]), complex(xi[i]), complex(rho[i]), label, rad))
    return out


def real_horn_fixed_points(
    m: ParabolicModel,
    samples: int = 2000,
    tol: float = fatou.DEFAULT_TOL,
    attracting_only: bool = True,
) -> list[LavaursFixedPoint]:
    """Fixed points of the horn map on the real axis (real maps only).

    Sign changes of E(x) - x on a grid of [0, 1) are refined by vectorised
    bisection; brackets that straddle a gap of the domain fail the final
    residual check.
    """
    xs = np.arange(samples + 1) / samples
    g = (horn_array(m, xs + 0j, tol) - xs).real
    g0, g1 = g[:-1], g[1:]
    ok = np.isfinite(g0) & np.isfinite(g1) & (g0 * g1 <= 0)
    if attracting_only:
        # secant slope of E; a root with |E'| far above 1 cannot attract
        slope = 1.0 + (g1 - g0) * samples
        ok &= np.abs(slope) < 4.0
    lo, hi, glo = xs[:-1][ok], xs[1:][ok], g0[ok]
    alive = np.ones(lo.size, dtype=bool)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        gm = (horn_array(m, mid + 0j, tol) - mid).real
        alive &= np.isfinite(gm)
        left = (gm > 0) == (glo > 0)
        lo = np.where(left, mid, lo)
        glo = np.where(left, gm, glo)
        hi = np.where(left, hi, mid)
    Zf = (0.5 * (lo + hi))[alive] % 1.0
    if Zf.size == 0:
        return []
    Zf = np.unique(np.round(Zf, 12))
    val = horn_array(m, Zf + 0j, tol)
    rho = horn_derivative(m, Zf + 0j, tol=tol)
    out = []
    for z, v, r in zip(Zf, val, rho):
        if not np.isfinite(v) or abs(v - z) > 1e-8:
            continue
        if attracting_only and not abs(r) < 1 - ATTRACT_MARGIN:
            continue
        xi = fatou.psi(m, complex(z), tol).value
        out.append(LavaursFixedPoint(complex(z), xi, complex(r), len(out)))
    return out


class KLState(enum.Enum):
    NOT_IN_KF = "not_in_kf"
    IN_KF_OUTSIDE_BASIN = "in_kf_outside_basin"
    LAVAURS_ESCAPES = "lavaurs_escapes"
    RETAINED = "retained"


@dataclass(frozen=True)
class KLVerdict:
    state: KLState
    k: int = 0  # escape step for LAVAURS_ESCAPES, depth reached for RETAINED
    attractor: Optional[int] = None

    def to_dict(self):
        return {"state": self.state.value, "k": self.k, "attractor": self.attractor}


# integer codes used by the array kernel and by rasters
KL_NOT_IN_KF, KL_OUTSIDE_BASIN, KL_ESCAPES, KL_RETAINED = 0, 1, 2, 3


def _attractor_hit(Z: np.ndarray, fps: Sequence[LavaursFixedPoint]) -> np.ndarray:
    label = np.full(Z.shape, -1, dtype=np.int64)
    if not fps:
        return label
    Zw = _wrap(Z)
    for fp in fps:
        if fp.attraction_radius <= 0:
            continue
        dist = np.min(np.abs(Zw[:, None] - (fp.Z_f + np.array([-1, 0, 1]))[None, :]), axis=1)
        hit = (dist < fp.attraction_radius) & (label < 0)
        label[hit] = fp.basin_label
    return label


def k_lavaurs_array(
    m: ParabolicModel,
    zs,
    depth: int,
    n_max: int,
    fps: Sequence[LavaursFixedPoint] = (),
    tol: float = fatou.DEFAULT_TOL,
):
    """Vectorised verdicts: returns (state codes, k, attractor label or -1)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    z = np.array(zs, dtype=complex).ravel()
    state = np.full(z.size, KL_RETAINED, dtype=np.int8)
    kk = np.full(z.size, depth, dtype=np.int64)
    label = np.full(z.size, -1, dtype=np.int64)
    idx = np.arange(z.size)
    cur = z
    for level in range(depth + 1):
        if idx.size == 0:
            break
        v, _, _, st = fatou.phi_array(m, cur, tol, n_max)
        esc = st == fatou.ESCAPED
        undecided = (st == fatou.NO_TRAP) | (st == fatou.NOT_CONVERGED)
        if level == 0:
            state[idx[esc]] = KL_NOT_IN_KF
            state[idx[undecided]] = KL_OUTSIDE_BASIN
            kk[idx[esc | undecided]] = 0
        else:
            state[idx[esc]] = KL_ESCAPES
            kk[idx[esc]] = level
            state[idx[undecided]] = KL_RETAINED
            kk[idx[undecided]] = level
        ok = st == OK
        hit = _attractor_hit(np.where(ok, v, 0), fps)
        hit = np.where(ok, hit, -1)
        caught = hit >= 0
        label[idx[caught]] = hit[caught]
        kk[idx[caught]] = depth
        cont = ok & ~caught
        if level == depth:
            break
        nxt, _, _, _ = fatou.psi_array(m, v[cont], tol)
        blown = ~np.isfinite(nxt)
        ci = idx[cont]
        state[ci[blown]] = KL_ESCAPES
        kk[ci[blown]] = level + 1
        idx, cur = ci[~blown], nxt[~blown]
    shape = np.shape(zs)
    return state.reshape(shape), kk.reshape(shape), label.reshape(shape)


_STATE_OF_CODE = {
    KL_NOT_IN_KF: KLState.NOT_IN_KF,
    KL_OUTSIDE_BASIN: KLState.IN_KF_OUTSIDE_BASIN,
    KL_ESCAPES: KLState.LAVAURS_ESCAPES,
    KL_RETAINED: KLState.RETAINED,
}


def k_lavaurs_verdict(
    m: ParabolicModel,
    z: complex,
    depth: int,
    n_max: int,
    fps: Sequence[LavaursFixedPoint] = (),
    tol: float = fatou.DEFAULT_TOL,
) -> KLVerdict:
    st, k, lab = k_lavaurs_array(m, np.array([z]), depth, n_max, fps, tol)
    lab0 = int(lab[0])
    return KLVerdict(_STATE_OF_CODE[int(st[0])], int(k[0]), lab0 if lab0 >= 0 else None)


def lavaurs_derivative(m: ParabolicModel, z: complex, h: float = FD_STEP, tol: float = fatou.DEFAULT_TOL) -> complex:
    vals, st = lavaurs_array(m, np.array([z + h, z - h]), tol)
    if not np.all(st == OK):
        raise NotInBasin("finite-difference stencil leaves the basin", z=complex(z))
    return complex((vals[0] - vals[1]) / (2 * h))
