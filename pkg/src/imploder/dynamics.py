"""Polynomial maps of one complex variable and their periodic points.

Everything here is a pure function of immutable inputs. ``PolynomialMap``
instances evaluate on Python scalars and on numpy arrays alike, which is what
the raster and Fatou-coordinate kernels rely on.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import Ambiguous, Degenerate, NoConvergence, ResourceLimit

DEGREE_CAP = 64
CLASSIFY_TOL = 1e-9
Q_MAX = 24
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class PolynomialMap:
    """Polynomial with complex coefficients in ascending degree order."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coeffs)
        if len(cs) < 2:
            raise ValueError("a polynomial map needs degree >= 1")
        if cs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex]) -> "PolynomialMap":
        """Build from coefficients, dropping trailing (leading-degree) zeros."""
        cs = [complex(c) for c in coeffs]
        while len(cs) > 2 and cs[-1] == 0:
            cs.pop()
        return cls(tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        if isinstance(z, np.ndarray):
            return np.asarray(acc, dtype=complex) + np.zeros_like(z, dtype=complex)
        return acc

    def taylor(self, n: int) -> np.ndarray:
        """First ``n`` Taylor coefficients at 0 (zero padded)."""
        out = np.zeros(n, dtype=complex)
        m = min(n, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return out

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            cs = format_complex(c)
            terms.append(cs if i == 0 else f"({cs})z^{i}")
        return " + ".join(terms) or "0"


def format_complex(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    sign = "+" if c.imag >= 0 else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


def evaluate(p: PolynomialMap, z):
    """Horner evaluation; overflow to infinity is a legal result."""
    return p(z)


def deriv(p: PolynomialMap) -> PolynomialMap:
    cs = [i * c for i, c in enumerate(p.coeffs)][1:]
    if len(cs) == 1:
        # Constant derivatives are kept as a degree-0 object via a zero pad.
        return _Constant(cs[0])
    return PolynomialMap(tuple(cs))


class _Constant(PolynomialMap):
    """Degree-0 result of differentiating a linear map."""

    def __init__(self, value):
        object.__setattr__(self, "coeffs", (complex(value),))

    def __post_init__(self):
        pass


def compose(p: PolynomialMap, q: PolynomialMap, cap: int = DEGREE_CAP) -> PolynomialMap:
    """Return p o q."""
    d = p.degree * q.degree
    if d > cap:
        raise ResourceLimit(f"composition degree {d} exceeds cap {cap}", degree=d, cap=cap)
    qc = np.array(q.coeffs, dtype=complex)
    acc = np.array([p.coeffs[-1]], dtype=complex)
    for c in reversed(p.coeffs[:-1]):
        acc = np.convolve(acc, qc)
        acc[0] += c
    return PolynomialMap(tuple(acc))


def iterate_map(p: PolynomialMap, n: int, cap: int = DEGREE_CAP) -> PolynomialMap:
    """The n-fold composite p o ... o p as a polynomial (n >= 1)."""
    if n < 1:
        raise ValueError("iterate count must be >= 1")
    if p.degree**n > cap:
        raise ResourceLimit(
            f"degree {p.degree}^{n} exceeds cap {cap}", degree=p.degree**n, cap=cap
        )
    out = p
    for _ in range(n - 1):
        out = compose(p, out, cap)
    return out


def _horner_with_derivative(c: np.ndarray, z: np.ndarray):
    val = np.full_like(z, c[-1])
    der = np.zeros_like(z)
    for coef in c[-2::-1]:
        der = der * z + val
        val = val * z + coef
    return val, der


def _aberth(c: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, int]:
    d = len(c) - 1
    monic = c / c[-1]
    # Fujiwara bound: tight for sparse polynomials such as a z^27 - z
    kk = np.arange(d, 0, -1)
    bound = np.abs(monic[:-1]) ** (1.0 / kk)
    bound[0] = (np.abs(monic[0]) / 2) ** (1.0 / d)
    radius = max(2.0 * np.max(bound), 1e-3)
    k = np.arange(d)
    # Deterministic perturbation breaks symmetry for polynomials like z^d - 1.
    z = radius * np.exp(1j * (2 * np.pi * k / d + 0.4)) * (1 + 0.01 * np.sin(3.7 * k + 1))
    eye = np.eye(d, dtype=bool)
    for sweep in range(1, max_sweeps + 1):
        # early sweeps may overflow far from the roots; such steps are dropped below
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val, der = _horner_with_derivative(monic, z)
            ratio = val / der
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            inv = 1.0 / diff
            inv[eye] = 0.0
            offsets = inv.sum(axis=1)
            step = ratio / (1.0 - ratio * offsets)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))):
            return z, sweep
    return z, max_sweeps


def _cluster(z: np.ndarray, tol: float) -> np.ndarray:
    """Replace every cluster of nearby roots (single linkage) by its mean."""
    n = len(z)
    label = np.arange(n)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= tol * (1.0 + abs(z[i])):
                old, new = label[j], label[i]
                if old != new:
                    label[label == old] = new
    out = z.copy()
    for lab in np.unique(label):
        members = label == lab
        if members.sum() > 1:
            out[members] = z[members].mean()
    return out


def roots(
    p: PolynomialMap,
    tol: float = 1e-12,
    max_sweeps: int = 200,
    cluster_tol: float = CLUSTER_TOL,
) -> list[complex]:
    """All deg(p) roots with multiplicity by Aberth-Ehrlich iteration.

    Roots closer than ``cluster_tol`` (relative) are treated as one multiple
    root and replaced by their mean, which is far more accurate than the
    individual Aberth iterates near a multiple root.
    """
    c = np.array(p.coeffs, dtype=complex)
    d = len(c) - 1
    if d == 1:
        return [complex(-c[0] / c[1])]
    z, _ = _aberth(c, max_sweeps)
    z = _cluster(z, cluster_tol)
    norm = np.sum(np.abs(c))
    with np.errstate(over="ignore", invalid="ignore"):
        resid = np.abs(_horner_with_derivative(c, z)[0])
        bound = tol * (1.0 + np.abs(z)) ** d * norm
    if not np.all(resid <= bound):
        worst = int(np.argmax(resid / bound))
        raise NoConvergence(
            "Aberth iteration did not meet the residual criterion",
            residual=float(resid[worst]),
            bound=float(bound[worst]),
            sweeps=max_sweeps,
        )
    order = np.lexsort((np.round(z.imag, 12), np.round(z.real, 12)))
    return [complex(v) for v in z[order]]


def critical_points(p: PolynomialMap, tol: float = 1e-12) -> list[complex]:
    if p.degree < 2:
        raise ValueError("critical points need degree >= 2")
    return roots(deriv(p), tol)


class Kind(enum.Enum):
    SUPERATTRACTING = "superattracting"
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    q: Optional[int] = None  # rotation denominator, parabolic only

    def __str__(self):
        if self.kind is Kind.PARABOLIC:
            return f"parabolic({self.q})"
        return self.kind.value


def classify_multiplier(
    lam: complex, tol: float = CLASSIFY_TOL, q_max: int = Q_MAX, strict: bool = False
) -> Classification:
    if not 0 < tol < 0.1:
        raise ValueError("tol must lie in (0, 0.1)")
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    mod = abs(lam)
    if mod <= tol:
        return Classification(Kind.SUPERATTRACTING)
    if mod < 1 - tol:
        return Classification(Kind.ATTRACTING)
    if mod > 1 + tol:
        return Classification(Kind.REPELLING)
    if strict:
        raise Ambiguous("multiplier lies within tol of the unit circle", multiplier=complex(lam))
    for q in range(1, q_max + 1):
        if abs(lam**q - 1) <= tol:
            return Classification(Kind.PARABOLIC, q)
    return Classification(Kind.ELLIPTIC)


@dataclass(frozen=True)
class FixedPointRecord:
    location: complex
    multiplier: complex
    classification: Classification
    period: int = 1

    def to_dict(self):
        return {
            "location": [self.location.real, self.location.imag],
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "modulus": abs(self.multiplier),
            "class": str(self.classification),
            "period": self.period,
        }


def fixed_points(
    p: PolynomialMap, tol: float = 1e-12, classify_tol: float = CLASSIFY_TOL, q_max: int = Q_MAX
) -> list[FixedPointRecord]:
    """Finite fixed points; infinity (always superattracting) is left out."""
    return periodic_points(p, 1, tol, classify_tol=classify_tol, q_max=q_max)


def _minus_identity(q: PolynomialMap) -> PolynomialMap:
    cs = list(q.coeffs)
    cs[1] -= 1
    if q.degree < 2:
        raise Degenerate("p(z) - z has degree < 1")
    return PolynomialMap(tuple(cs))


def cycle_multiplier(p: PolynomialMap, z: complex, period: int) -> complex:
    """Product of p' along the orbit z, p(z), ..., p^{period-1}(z)."""
    dp = deriv(p)
    lam = 1.0 + 0j
    for _ in range(period):
        lam *= dp(z)
        z = p(z)
    return lam


def periodic_points(
    p: PolynomialMap,
    period: int,
    tol: float = 1e-12,
    cap: int = DEGREE_CAP,
    classify_tol: float = CLASSIFY_TOL,
    q_max: int = Q_MAX,
    cluster_tol: float = CLUSTER_TOL,
) -> list[FixedPointRecord]:
    """Points of exact period ``period`` with their cycle multipliers."""
    if period < 1:
        raise ValueError("period must be >= 1")
    if p.degree < 2:
        raise ValueError("periodic points need degree >= 2")
    q = iterate_map(p, period, cap)
    candidates = roots(_minus_identity(q), tol)
    lower: list[complex] = []
    for k in range(1, period):
        if period % k == 0:
            lower.extend(roots(_minus_identity(iterate_map(p, k, cap)), tol))
    out = []
    for z in candidates:
        if any(abs(z - w) <= cluster_tol * (1 + abs(w)) for w in lower):
            continue
        lam = cycle_multiplier(p, z, period)
        out.append(
            FixedPointRecord(z, lam, classify_multiplier(lam, classify_tol, q_max), period)
        )
    return out


def group_cycles(records: Sequence[FixedPointRecord], p: PolynomialMap, tol: float = 1e-6):
    """Partition period-k records into cycles (lists of records in orbit order)."""
    remaining = list(records)
    cycles = []
    while remaining:
        start = remaining.pop(0)
        cycle = [start]
        z = start.location
        for _ in range(start.period - 1):
            z = p(z)
            if not remaining:
                break
            j = min(range(len(remaining)), key=lambda i: abs(remaining[i].location - z))
            if abs(remaining[j].location - z) <= tol * (1 + abs(z)):
                cycle.append(remaining.pop(j))
        cycles.append(cycle)
    return cycles


@dataclass(frozen=True)
class OrbitTrace:
    points: tuple
    escaped: bool
    escape_index: Optional[int] = None


def orbit(p, z0: complex, n_max: int, R: float) -> OrbitTrace:
    """Forward orbit until |z| > R or n_max iterations."""
    if n_max < 0 or R <= 0:
        raise ValueError("need n_max >= 0 and R > 0")
    z = complex(z0)
    pts = [z]
    for k in range(n_max + 1):
        if not (abs(z) <= R):
            return OrbitTrace(tuple(pts), True, k)
        if k == n_max:
            break
        z = p(z)
        pts.append(z)
    return OrbitTrace(tuple(pts), False, None)


def parse_complex(text: str) -> complex:
    """Parse literals such as ``1``, ``-0.5i``, ``0.3+2i``, ``1e-3-4e-2i``."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("j", "i")
    if not s:
        raise ValueError("empty complex literal")
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        pass
    if s.endswith("i"):
        body = s[:-1]
        # split at the last sign that is not part of an exponent
        for idx in range(len(body) - 1, 0, -1):
            if body[idx] in "+-" and body[idx - 1] not in "eE":
                re_part, im_part = body[:idx], body[idx:]
                im_part = im_part + "1" if im_part in "+-" else im_part
                return complex(float(re_part), float(im_part))
        im_part = body if body not in ("", "+", "-") else body + "1"
        return complex(0.0, float(im_part))
    raise ValueError(f"cannot parse complex literal {text!r}")


def parse_poly(text: str) -> PolynomialMap:
    """Comma-separated ascending coefficients, e.g. ``"0,1,1,0.95"``."""
    parts = [parse_complex(t) for t in text.split(",") if t.strip()]
    return PolynomialMap.from_coeffs(parts)


def unit_root(k: int, n: int) -> complex:
    return cmath.exp(2j * math.pi * k / n)
