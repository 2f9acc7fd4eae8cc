"""Raster engine: pixel grids, per-job label codes, palettes and PPM output.

Every job is a pure per-pixel kernel. The grid is cut into fixed blocks of
rows that do not depend on the worker count, and blocks are reassembled in
index order, so a render is byte-identical for any number of threads.

Label codes
-----------
julia       0 bounded (undetermined), k >= 1 is 1 + min(escape index, 254)
stripes     0 not in the basin, 1 dark (Im Phi < Im v-), 2 light, 3 medium (Im Phi > Im v+)
lavaurs     0 not in the basin, 1 grey (L(z) in the basin), 2 white (L(z) outside)
k-lavaurs   0 not in K_f, 1 in K_f outside the basin, 2 L-orbit escapes,
            3 + k retained and captured by attractor k, 255 retained but not yet captured
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import fatou
from .dynamics import PolynomialMap, critical_points
from .errors import DynamicsError, NotInBasin
from .julia import escape_times
from .lavaurs import (
    KL_ESCAPES,
    KL_NOT_IN_KF,
    KL_OUTSIDE_BASIN,
    KL_RETAINED,
    LavaursFixedPoint,
    k_lavaurs_array,
    lavaurs_array,
)

BLOCK_ROWS = 8
UNLABELED = 255
FATOU_NMAX = 2000

JOB_KINDS = ("julia", "stripes", "lavaurs", "k-lavaurs")
PALETTES = ("paper-grey", "mono")

DARK, MEDIUM, LIGHT = (64, 64, 64), (140, 140, 140), (200, 200, 200)
WHITE, BLACK = (255, 255, 255), (0, 0, 0)


@dataclass(frozen=True)
class RasterSpec:
    """Window and resolution; pixel (i, j) is column i, row j from the top left."""

    center: complex = 0j
    half_width: float = 1.5
    px_w: int = 256
    px_h: int = 256
    n_max: int = 200
    depth: int = 20
    palette: str = "paper-grey"

    def __post_init__(self):
        if self.px_w < 1 or self.px_h < 1:
            raise ValueError("raster dimensions must be positive")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.palette not in PALETTES:
            raise ValueError(f"unknown palette {self.palette!r}; choose from {PALETTES}")

    def pixel_to_plane(self, i, j):
        w, h, hw = self.px_w, self.px_h, self.half_width
        i = np.asarray(i, dtype=float)
        j = np.asarray(j, dtype=float)
        re = hw * ((2 * i + 1 - w) / w)
        im = hw * (h / w) * ((h - 2 * j - 1) / h)
        return complex(self.center) + re + 1j * im

    def plane_to_pixel(self, z):
        w, h, hw = self.px_w, self.px_h, self.half_width
        d = np.asarray(z, dtype=complex) - complex(self.center)
        i = np.rint((d.real * w / hw + w - 1) / 2).astype(np.int64)
        j = np.rint((h - 1 - d.imag * w / hw) / 2).astype(np.int64)
        return i, j

    def rows(self, j0: int, j1: int) -> np.ndarray:
        """Plane points of rows j0..j1-1 as a (rows, px_w) array."""
        jj, ii = np.meshgrid(np.arange(j0, j1), np.arange(self.px_w), indexing="ij")
        return self.pixel_to_plane(ii, jj)

    def to_dict(self):
        c = complex(self.center)
        return {
            "center": [c.real, c.imag],
            "half_width": self.half_width,
            "px_w": self.px_w,
            "px_h": self.px_h,
            "n_max": self.n_max,
            "depth": self.depth,
            "palette": self.palette,
        }


@dataclass(frozen=True)
class Raster:
    spec: RasterSpec
    labels: np.ndarray  # uint8, shape (px_h, px_w), row-major from the top left
    kind: str
    meta: dict = field(default_factory=dict)

    def counts(self) -> dict:
        vals, cnt = np.unique(self.labels, return_counts=True)
        return {str(int(v)): int(c) for v, c in zip(vals, cnt)}


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("IMPLODER_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def _run(spec: RasterSpec, kernel: Callable[[np.ndarray], np.ndarray], threads: Optional[int]) -> np.ndarray:
    blocks = [(j, min(j + BLOCK_ROWS, spec.px_h)) for j in range(0, spec.px_h, BLOCK_ROWS)]

    def work(b):
        z = spec.rows(*b)
        return np.asarray(kernel(z.ravel()), dtype=np.uint8).reshape(z.shape)

    n = resolve_threads(threads)
    if n == 1:
        parts = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(work, blocks))
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# jobs


def render_filled_julia(p: PolynomialMap, spec: RasterSpec, threads: Optional[int] = None) -> Raster:
    def kernel(z):
        n = escape_times(p, z, spec.n_max)
        return np.where(n < 0, 0, 1 + np.minimum(n, 254))

    return Raster(spec, _run(spec, kernel, threads), "julia")


def critical_values(m: fatou.ParabolicModel, n_max: int = FATOU_NMAX):
    """Phi at the critical points of the model lying in the basin, sorted by Im."""
    if not isinstance(m.f, PolynomialMap):
        raise DynamicsError("critical values need a polynomial model")
    crit = np.array(critical_points(m.f), dtype=complex)
    v, _, _, st = fatou.phi_array(m, crit, n_max=n_max)
    vals = sorted((complex(x) for x, s in zip(v, st) if s == fatou.OK), key=lambda c: c.imag)
    if not vals:
        raise NotInBasin("no critical point found in the basin")
    return vals


def render_fatou_stripes(
    m: fatou.ParabolicModel, spec: RasterSpec, threads: Optional[int] = None
) -> Raster:
    vals = critical_values(m, max(spec.n_max, FATOU_NMAX))
    lo, hi = vals[0].imag, vals[-1].imag

    def kernel(z):
        v, _, _, st = fatou.phi_array(m, m.to_model(z), n_max=spec.n_max)
        y = v.imag
        code = np.where(y < lo, 1, np.where(y > hi, 3, 2))
        return np.where(st == fatou.OK, code, 0)

    meta = {"v_minus": [vals[0].real, vals[0].imag], "v_plus": [vals[-1].real, vals[-1].imag]}
    return Raster(spec, _run(spec, kernel, threads), "stripes", meta)


def render_lavaurs(m: fatou.ParabolicModel, spec: RasterSpec, threads: Optional[int] = None) -> Raster:
    def kernel(z):
        w, st = lavaurs_array(m, m.to_model(z), n_max=spec.n_max)
        inside = st == fatou.OK
        code = np.zeros(z.shape, dtype=np.uint8)
        if inside.any():
            img = w[inside]
            fin = np.isfinite(img)
            st2 = np.full(img.shape, fatou.ESCAPED, dtype=np.int8)
            if fin.any():
                _, _, _, st2[fin] = fatou.phi_array(m, img[fin], n_max=spec.n_max)
            code[inside] = np.where(st2 == fatou.OK, 1, 2)
        return code

    return Raster(spec, _run(spec, kernel, threads), "lavaurs")


def render_k_lavaurs(
    m: fatou.ParabolicModel,
    fps: Sequence[LavaursFixedPoint],
    spec: RasterSpec,
    threads: Optional[int] = None,
) -> Raster:
    if len(fps) > UNLABELED - 3:
        raise ValueError("too many attractor labels for 8-bit codes")

    def kernel(z):
        st, _, lab = k_lavaurs_array(m, m.to_model(z), spec.depth, spec.n_max, fps)
        code = st.astype(np.int64)
        ret = st == KL_RETAINED
        code[ret] = np.where(lab[ret] >= 0, 3 + lab[ret], UNLABELED)
        return code

    return Raster(spec, _run(spec, kernel, threads), "k-lavaurs")


# ---------------------------------------------------------------------------
# palettes and PPM


def palette_table(kind: str, name: str = "paper-grey") -> np.ndarray:
    """256 x 3 lookup table from label code to RGB."""
    if kind not in JOB_KINDS:
        raise ValueError(f"unknown raster kind {kind!r}")
    if name not in PALETTES:
        raise ValueError(f"unknown palette {name!r}")
    t = np.zeros((256, 3), dtype=np.uint8)
    if name == "mono":
        # non-zero codes of julia are escapes; elsewhere 0 is the outside
        t[:] = WHITE
        if kind == "julia":
            t[0] = BLACK
        else:
            t[1:] = BLACK
        return t
    if kind == "julia":
        k = np.arange(256)
        level = np.clip(64 + 12 * (k - 1), 64, 255).astype(np.uint8)
        t[:] = level[:, None]
        t[0] = BLACK
    elif kind == "stripes":
        t[:] = WHITE
        t[1], t[2], t[3] = DARK, LIGHT, MEDIUM
    elif kind == "lavaurs":
        t[:] = BLACK
        t[1], t[2] = MEDIUM, WHITE
    else:
        t[:] = LIGHT
        t[KL_NOT_IN_KF] = WHITE
        t[KL_OUTSIDE_BASIN] = BLACK
        t[KL_ESCAPES] = MEDIUM
        t[3] = DARK
        t[UNLABELED] = (100, 100, 100)
    return t


def ppm_bytes(r: Raster) -> bytes:
    h, w = r.labels.shape
    rgb = palette_table(r.kind, r.spec.palette)[r.labels]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def write_ppm(r: Raster, path: str) -> None:
    data = ppm_bytes(r)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(f"cannot write PPM to {path!r}: {exc.strerror or exc}") from exc
