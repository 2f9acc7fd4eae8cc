"""Parabolic normal form and attracting/repelling Fatou coordinates.

A parabolic model is a map f(z) = z + z^2 + a z^3 + O(z^4) with b = 1 - a.
In the chart Z = -1/z the map is close to translation by one, and the
Fatou coordinates are limits of the chart value corrected by the iteration
count and a logarithmic drift term.

Plain truncation ``Z_n - n - b log Z_n`` converges like 1/n. To reach the
tolerances used downstream the drift correction is extended by the formal
asymptotic series sum_k d_k Z^-k, solved order by order from the Abel
equation; ``order=0`` recovers the plain scheme exactly.

All kernels are vectorised over numpy arrays with per-element stopping, so a
point's result never depends on which other points share its batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import PolynomialMap, compose
from .errors import Degenerate, NoConvergence, NotInBasin, NotParabolic
from .julia import State, Verdict, escape_radius

DEFAULT_TOL = 1e-10
DEFAULT_NMAX = 100_000
DEFAULT_ORDER = 10
CHART_FLOOR = 16.0  # min Re(-1/z) before the asymptotic series is trusted
PSI_DEPTH = 50.0
TRAP_SAMPLES = 256

# status codes returned by the array kernels
OK, ESCAPED, NO_TRAP, NOT_CONVERGED = 0, 1, 2, 3


class MobiusMap:
    """g(z) = z / (1 - z), conjugate to Z -> Z + 1 in the chart Z = -1/z."""

    degree = None

    def __call__(self, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return z / (1 - z)

    def taylor(self, n: int) -> np.ndarray:
        out = np.ones(n, dtype=complex)
        out[0] = 0
        return out

    def __eq__(self, other):
        return isinstance(other, MobiusMap)

    def __hash__(self):
        return hash("mobius")

    def __repr__(self):
        return "MobiusMap()"


def _series_inverse(s: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / s[0]
    for k in range(1, n):
        acc = 0j
        for j in range(1, min(k, len(s) - 1) + 1):
            acc += s[j] * out[k - j]
        out[k] = -acc / s[0]
    return out


def _series_mul(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    return np.convolve(x, y)[:n]


def _series_log(s: np.ndarray, n: int) -> np.ndarray:
    """log of a power series with constant term 1."""
    ds = np.zeros(n, dtype=complex)
    ds[: n - 1] = np.arange(1, n) * s[1:n]
    q = _series_mul(ds, _series_inverse(s, n), n)
    out = np.zeros(n, dtype=complex)
    out[1:] = q[: n - 1] / np.arange(1, n)
    return out


def fatou_series(taylor: np.ndarray, order: int) -> np.ndarray:
    """Coefficients d_1..d_order of the formal Fatou coordinate.

    With u = 1/Z the chart map is Z * S(u), S = 1/P and P(u) = f(-u)/(-u).
    The coefficients solve (S - 1)/u - b log S + sum_k d_k u^k (P^k - 1) = 1
    order by order in u. Returns an array whose index k holds d_k (d_0 = 0).
    """
    n = order + 3
    t = np.zeros(n + 2, dtype=complex)
    m = min(len(taylor), n + 2)
    t[:m] = taylor[:m]
    a = t[3]
    b = 1 - a
    pu = np.array([t[j + 1] * (-1) ** j for j in range(n)], dtype=complex)
    s = _series_inverse(pu, n)
    total = np.zeros(n, dtype=complex)
    total[: n - 1] = s[1:n]
    total -= b * _series_log(s, n)
    d = np.zeros(order + 1, dtype=complex)
    power = np.zeros(n, dtype=complex)
    power[0] = 1
    for k in range(1, order + 1):
        power = _series_mul(power, pu, n)
        # d_k u^k (P^k - 1) starts at u^{k+1} with coefficient -k d_k
        d[k] = -total[k + 1] / power[1]
        contrib = np.zeros(n, dtype=complex)
        shifted = power.copy()
        shifted[0] -= 1
        contrib[k:] = shifted[: n - k]
        total += d[k] * contrib
    return d


@dataclass(frozen=True)
class ParabolicModel:
    """Normalised parabolic map with its trap disk D(-r, r).

    ``scale`` and ``shift`` record the conjugacy w = scale * (z - shift) from
    the caller's coordinates to the model coordinate.
    """

    f: object
    a: complex
    b: complex
    r: float
    M: float
    scale: complex = 1.0
    shift: complex = 0.0
    series: tuple = ()
    escape: float = math.inf

    @property
    def affine(self):
        return (self.scale, self.shift)

    def to_model(self, z):
        return self.scale * (z - self.shift)

    def from_model(self, w):
        return self.shift + w / self.scale

    @classmethod
    def mobius(cls, order: int = DEFAULT_ORDER) -> "ParabolicModel":
        g = MobiusMap()
        r = trap_radius(g)
        d = fatou_series(g.taylor(order + 6), order)
        return cls(g, 1.0, 0.0, r, 1 / (2 * r), series=tuple(d), escape=math.inf)

    def to_dict(self):
        out = {
            "a": [self.a.real, self.a.imag] if isinstance(self.a, complex) else self.a,
            "b": [complex(self.b).real, complex(self.b).imag],
            "r": self.r,
            "M": self.M,
            "scale": [complex(self.scale).real, complex(self.scale).imag],
            "shift": [complex(self.shift).real, complex(self.shift).imag],
        }
        if isinstance(self.f, PolynomialMap):
            out["coeffs"] = [[c.real, c.imag] for c in self.f.coeffs]
        else:
            out["map"] = "mobius z/(1-z)"
        return out


def trap_invariant(f, r: float, samples: int = TRAP_SAMPLES) -> bool:
    """Boundary samples of D(-r, r) land strictly inside D(-r, r)."""
    theta = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    zs = -r + r * np.exp(1j * theta)
    with np.errstate(all="ignore"):
        img = f(zs)
    return bool(np.all(np.abs(img + r) < r))


def trap_radius(f, r_start: float = 0.5, r_min: float = 1e-4) -> float:
    r = r_start
    while r >= r_min:
        if trap_invariant(f, r):
            return r
        r /= 2
    raise NotParabolic("no invariant trap disk D(-r, r) found", r_min=r_min)


def normalize_parabolic(
    p: PolynomialMap, alpha: complex = 0.0, order: int = DEFAULT_ORDER, tol: float = 1e-9
) -> ParabolicModel:
    """Conjugate p by z -> c (z - alpha) to the form z + z^2 + a z^3 + ..."""
    alpha = complex(alpha)
    q = compose(p, PolynomialMap((alpha, 1)), cap=max(64, p.degree))
    qc = list(q.coeffs)
    qc[0] -= alpha
    if abs(qc[0]) > 1e-8 * (1 + abs(alpha)) or abs(qc[1] - 1) > tol:
        raise NotParabolic(
            "alpha is not a fixed point with multiplier 1",
            multiplier=complex(qc[1]),
            residual=abs(qc[0]),
        )
    if len(qc) < 3 or abs(qc[2]) <= 1e-12:
        raise Degenerate("quadratic coefficient vanishes (multiple petals)")
    c = qc[2]
    h = [qc[k] * c ** (1 - k) for k in range(len(qc))]
    h[0], h[1], h[2] = 0j, 1 + 0j, 1 + 0j
    f = PolynomialMap(tuple(h))
    a = h[3] if len(h) > 3 else 0j
    r = trap_radius(f)
    d = fatou_series(f.taylor(order + 6), order)
    return ParabolicModel(
        f, a, 1 - a, r, 1 / (2 * r), scale=c, shift=alpha, series=tuple(d),
        escape=escape_radius(f),
    )


def model_from_cubic(a: complex, order: int = DEFAULT_ORDER) -> ParabolicModel:
    """Model for z + z^2 + a z^3 (already normalised)."""
    coeffs = (0, 1, 1, a) if a != 0 else (0, 1, 1)
    return normalize_parabolic(PolynomialMap(coeffs), 0.0, order)


# ---------------------------------------------------------------------------
# asymptotic chart functions


def _tail(series, Z):
    """sum_k d_k Z^-k by Horner in 1/Z."""
    if len(series) <= 1:
        return 0
    u = 1 / Z
    acc = np.zeros_like(Z) if isinstance(Z, np.ndarray) else 0j
    for dk in reversed(series[1:]):
        acc = (acc + dk) * u
    return acc


def _tail_deriv(series, Z):
    if len(series) <= 1:
        return 0
    u = 1 / Z
    acc = np.zeros_like(Z) if isinstance(Z, np.ndarray) else 0j
    for k in range(len(series) - 1, 0, -1):
        acc = acc * u - k * series[k]
    # acc = -sum k d_k u^{k-1}; derivative of d_k Z^-k is -k d_k Z^{-k-1}
    return acc * u * u


def attracting_chart(m: ParabolicModel, Z, order: int = DEFAULT_ORDER):
    """Z - b Log Z + sum_{k<=order} d_k Z^-k (principal branch, Re Z > 0)."""
    return Z - m.b * np.log(Z) + _tail(m.series[: order + 1], Z)


def repelling_chart(m: ParabolicModel, W, order: int = DEFAULT_ORDER):
    """W - b Log(-W) + sum_{k<=order} d_k W^-k (principal branch, Re W < 0)."""
    return W - m.b * np.log(-W) + _tail(m.series[: order + 1], W)


def _repelling_chart_deriv(m: ParabolicModel, W, order: int):
    return 1 - m.b / W + _tail_deriv(m.series[: order + 1], W)


# ---------------------------------------------------------------------------
# basin test


def basin_entry(m: ParabolicModel, zs, n_max: int):
    """Vectorised basin test.

    Returns (state, steps): state is OK when the orbit enters D(-r, r),
    ESCAPED when it leaves the escape radius, NO_TRAP otherwise.
    """
    z = np.array(zs, dtype=complex).ravel()
    state = np.full(z.shape, NO_TRAP, dtype=np.int8)
    steps = np.full(z.shape, n_max, dtype=np.int64)
    idx = np.arange(z.size)
    r, R = m.r, m.escape
    with np.errstate(all="ignore"):
        for n in range(n_max + 1):
            absz = np.abs(z)
            esc = ~(absz <= R)
            inside = np.abs(z + r) < r
            done = esc | inside
            if done.any():
                state[idx[esc]] = ESCAPED
                state[idx[inside & ~esc]] = OK
                steps[idx[done]] = n
                keep = ~done
                z, idx = z[keep], idx[keep]
            if n == n_max or z.size == 0:
                break
            z = m.f(z)
    shape = np.shape(zs)
    return state.reshape(shape), steps.reshape(shape)


def in_basin(m: ParabolicModel, z: complex, n_max: int = 10_000) -> Verdict:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    state, steps = basin_entry(m, np.array([z]), n_max)
    s, n = int(state[0]), int(steps[0])
    if s == OK:
        return Verdict(State.INSIDE, n)
    if s == ESCAPED:
        return Verdict(State.ESCAPED, n, n)
    return Verdict(State.UNDETERMINED, n_max)


# ---------------------------------------------------------------------------
# attracting coordinate


@dataclass(frozen=True)
class CoordinateResult:
    value: complex
    depth_used: int
    residual: float
    capped: bool = False


def phi_array(
    m: ParabolicModel,
    zs,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_NMAX,
    order: int = DEFAULT_ORDER,
):
    """Attracting Fatou coordinate for an array of points.

    Returns (values, depth, residual, status). Values are NaN unless status
    is OK; depth is the total number of forward iterations used.
    """
    z = np.array(zs, dtype=complex).ravel()
    size = z.size
    values = np.full(size, np.nan + 0j)
    depth = np.full(size, n_max, dtype=np.int64)
    resid = np.full(size, np.inf)
    status = np.full(size, NO_TRAP, dtype=np.int8)
    floor = m.M if order == 0 else max(m.M, CHART_FLOOR)
    idx = np.arange(size)
    prev = np.full(size, np.nan + 0j)
    trapped = np.zeros(size, dtype=bool)
    R, r = m.escape, m.r
    with np.errstate(all="ignore"):
        for n in range(n_max + 1):
            esc = ~(np.abs(z) <= R)
            trapped |= np.abs(z + r) < r
            Z = -1 / z
            usable = trapped & (Z.real >= floor) & ~esc
            est = np.where(usable, attracting_chart(m, Z, order) - n, np.nan)
            inc = np.abs(est - prev)
            conv = usable & (inc < tol)
            last_inc = np.where(usable & np.isfinite(inc), inc, np.inf)
            resid_local = last_inc
            done = esc | conv
            if done.any():
                gi = idx[done]
                status[idx[esc]] = ESCAPED
                cv = conv & ~esc
                values[idx[cv]] = est[cv]
                status[idx[cv]] = OK
                resid[gi] = resid_local[done]
                depth[gi] = n
            if n == n_max:
                live = ~done
                gi = idx[live]
                status[gi] = np.where(trapped[live], NOT_CONVERGED, NO_TRAP)
                resid[gi] = resid_local[live]
                values[gi] = np.where(trapped[live], est[live], np.nan)
                break
            keep = ~done
            if not keep.all():
                z, idx, prev, trapped, est = z[keep], idx[keep], prev[keep], trapped[keep], est[keep]
            if z.size == 0:
                break
            prev = est
            z = m.f(z)
    shape = np.shape(zs)
    return values.reshape(shape), depth.reshape(shape), resid.reshape(shape), status.reshape(shape)


def phi(
    m: ParabolicModel,
    z: complex,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_NMAX,
    order: int = DEFAULT_ORDER,
) -> CoordinateResult:
    v, d, res, st = phi_array(m, np.array([z]), tol, n_max, order)
    s = int(st[0])
    if s in (ESCAPED, NO_TRAP):
        raise NotInBasin("point is not in the parabolic basin", z=complex(z), depth=int(d[0]))
    if s == NOT_CONVERGED:
        raise NoConvergence(
            "Fatou coordinate did not converge", z=complex(z), residual=float(res[0]), depth=int(d[0])
        )
    return CoordinateResult(complex(v[0]), int(d[0]), float(res[0]))


def phi_increments(m: ParabolicModel, z: complex, steps: int, order: int = 0) -> np.ndarray:
    """Successive increments |Phi_{n+1} - Phi_n| after trap entry."""
    z = complex(z)
    k = 0
    while not abs(z + m.r) < m.r:
        z = m.f(z)
        k += 1
        if k > DEFAULT_NMAX or not abs(z) <= m.escape:
            raise NotInBasin("point is not in the parabolic basin", z=z)
    out = np.empty(steps)
    prev = complex(attracting_chart(m, -1 / z, order)) - k
    for j in range(steps):
        z = m.f(z)
        k += 1
        est = complex(attracting_chart(m, -1 / z, order)) - k
        out[j] = abs(est - prev)
        prev = est
    return out


def phi_plain(m: ParabolicModel, z: complex, N: int) -> complex:
    """Brute-force Z_N - N - b Log Z_N after exactly N forward steps."""
    w = complex(z)
    for _ in range(N):
        w = m.f(w)
    Z = -1 / w
    return complex(Z - N - m.b * np.log(Z))


# ---------------------------------------------------------------------------
# repelling parametrisation


def _psi_once(m: ParabolicModel, Z: np.ndarray, depth: float, order: int) -> np.ndarray:
    shift = np.maximum(0, np.ceil(Z.real + depth)).astype(np.int64)
    Y = Z - shift
    with np.errstate(all="ignore"):
        W = Y + m.b * np.log(-Y)
        for _ in range(12):
            W = W - (repelling_chart(m, W, order) - Y) / _repelling_chart_deriv(m, W, order)
        w = -1 / W
        top = int(shift.max()) if shift.size else 0
        for s in range(top):
            act = shift > s
            if not act.any():
                break
            nxt = m.f(w[act])
            nxt = np.where(np.abs(nxt) < 1e150, nxt, np.inf + 0j)
            w[act] = nxt
    return w


def psi_array(
    m: ParabolicModel,
    Zs,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_NMAX,
    order: int = DEFAULT_ORDER,
    depth: Optional[float] = None,
):
    """Repelling Fatou parametrisation for an array of points.

    The asymptotic seed is placed at Re <= -depth and pushed forward by f.
    Each point is recomputed from a deeper seed until the two answers agree
    to ``tol`` (relative once |value| > 1, since the map is entire and grows
    without bound). Returns (values, shift_used, residual, status); values that
    overflow the double range are returned as complex infinity with status OK.
    """
    Z = np.array(Zs, dtype=complex).ravel()
    base = max(m.M, PSI_DEPTH) if depth is None else depth
    values = np.full(Z.size, np.nan + 0j)
    resid = np.full(Z.size, np.inf)
    used = np.zeros(Z.size, dtype=np.int64)
    status = np.full(Z.size, NOT_CONVERGED, dtype=np.int8)
    idx = np.arange(Z.size)
    cur = _psi_once(m, Z, base, order)
    d = base
    while idx.size:
        d_next = d + 16 if d < 4 * base else 2 * d
        live = Z[idx]
        nxt = _psi_once(m, live, d_next, order)
        with np.errstate(all="ignore"):
            both_inf = ~np.isfinite(cur) & ~np.isfinite(nxt)
            diff = np.where(both_inf, 0.0, np.abs(nxt - cur))
            scale = np.maximum(1.0, np.abs(nxt))
        ok = diff < tol * scale
        gi = idx[ok]
        values[gi] = np.where(both_inf[ok], np.inf + 0j, nxt[ok])
        resid[gi] = diff[ok]
        used[gi] = np.maximum(0, np.ceil(live[ok].real + d_next)).astype(np.int64)
        status[gi] = OK
        idx, cur, diff, live = idx[~ok], nxt[~ok], diff[~ok], live[~ok]
        d = d_next
        if idx.size and np.ceil(live.real + 2 * d).max() > n_max:
            values[idx] = cur
            resid[idx] = diff
            used[idx] = np.maximum(0, np.ceil(live.real + d)).astype(np.int64)
            break
    shape = np.shape(Zs)
    return values.reshape(shape), used.reshape(shape), resid.reshape(shape), status.reshape(shape)


def psi(
    m: ParabolicModel,
    Z: complex,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_NMAX,
    order: int = DEFAULT_ORDER,
) -> CoordinateResult:
    v, used, res, st = psi_array(m, np.array([Z]), tol, n_max, order)
    if int(st[0]) != OK:
        raise NoConvergence(
            "repelling parametrisation did not stabilise", Z=complex(Z), residual=float(res[0])
        )
    return CoordinateResult(complex(v[0]), int(used[0]), float(res[0]))


def psi_seed(m: ParabolicModel, Z: complex) -> complex:
    """Leading-order normalisation -1/(Z + b Log(-Z))."""
    return complex(-1 / (Z + m.b * np.log(-Z)))
