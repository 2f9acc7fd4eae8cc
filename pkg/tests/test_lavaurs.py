import math

import numpy as np
import pytest

from imploder import fatou
from imploder.dynamics import PolynomialMap
from imploder.errors import NotInBasin, OutOfDomain
from imploder.fatou import ParabolicModel, normalize_parabolic
from imploder.implosion import perturbed_orbit
from imploder.lavaurs import (
    KLState,
    find_attracting_fixed_points,
    horn,
    horn_array,
    k_lavaurs_verdict,
    lavaurs,
    lavaurs_array,
    lavaurs_derivative,
    real_horn_fixed_points,
)


def test_mobius_lavaurs_is_identity():
    m = ParabolicModel.mobius()
    assert abs(lavaurs(m, -0.3) - (-0.3)) < 1e-12
    Z = np.array([0.2 + 1j, -0.7 + 2.5j])
    assert np.max(np.abs(horn_array(m, Z) - Z)) < 1e-10
    assert find_attracting_fixed_points(m) == []


def test_lavaurs_commutes_with_f(m95, basin_samples):
    a, s1 = lavaurs_array(m95, m95.f(basin_samples))
    b, s2 = lavaurs_array(m95, basin_samples)
    ok = (s1 == fatou.OK) & (s2 == fatou.OK)
    assert ok.all()
    fb = m95.f(b)
    assert np.all(np.isfinite(a)) and np.all(np.isfinite(fb))
    assert np.max(np.abs(a - fb) / np.maximum(1, np.abs(fb))) < 1e-6


def test_lavaurs_against_perturbed_iteration(m95):
    # off the real axis: real basin points are sent to the escaping real half-line
    z = -0.2 + 0.3j
    N = 4096
    approx = perturbed_orbit(m95.f, math.pi / N, N, z)
    assert abs(approx - lavaurs(m95, z)) < 1e-2


def test_real_basin_points_escape_under_lavaurs(m95):
    v, st = lavaurs_array(m95, np.array([-0.2 + 0j]))
    assert st[0] == fatou.OK
    assert abs(v[0].imag) < 1e-9 * abs(v[0]) and v[0].real > m95.escape


def test_lavaurs_not_in_basin(m95):
    with pytest.raises(NotInBasin):
        lavaurs(m95, 10)


def test_horn_periodicity(m95):
    rng = np.random.default_rng(5)
    Z = rng.uniform(0, 1, 100) + 1j * rng.uniform(1, 3, 100)
    a, b = horn_array(m95, Z + 1), horn_array(m95, Z)
    # the domain is 1-periodic too
    assert np.array_equal(np.isnan(a), np.isnan(b))
    ok = ~np.isnan(b)
    assert ok.sum() > 50
    assert np.max(np.abs(a[ok] - b[ok] - 1)) < 1e-6


def test_horn_asymptote(m95, m99):
    for m in (m95, m99):
        c0 = -math.pi * 1j * m.b
        errs = [abs(horn(m, 0.3 + 1j * y) - (0.3 + 1j * y) - c0) for y in (1.5, 2.0, 2.5, 3.0)]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 0.02


def test_horn_out_of_domain(m95):
    # Psi of a point far down the real axis lands on the escaping real half-line
    with pytest.raises(OutOfDomain):
        horn(m95, 2.5 + 0j)


def test_conjugate_attractors(m95, fps95):
    assert len(fps95) >= 2
    top, bottom = fps95[0], fps95[1]
    assert abs(top.Z_f - bottom.Z_f.conjugate()) < 1e-8
    assert abs(top.rho - bottom.rho.conjugate()) < 1e-8
    assert abs(top.xi - bottom.xi.conjugate()) < 1e-8
    for fp in fps95:
        assert abs(fp.rho) < 1
        assert abs(horn(m95, fp.Z_f) - fp.Z_f) < 1e-8
        assert abs(lavaurs(m95, fp.xi) - fp.xi) < 1e-6
        d = lavaurs_derivative(m95, fp.xi)
        assert abs(d - fp.rho) < 1e-3 * abs(fp.rho)


def test_multiplier_asymptote(m99):
    fps = find_attracting_fixed_points(m99)
    target = 1 - 2 * math.pi**2 * 0.01
    best = min(abs(fp.rho - target) for fp in fps)
    assert best / (2 * math.pi**2 * 0.01) < 0.25


def test_im_min_floor(m95):
    with pytest.raises(ValueError):
        find_attracting_fixed_points(m95, im_min=0.1)


def test_k_lavaurs_examples(m95, fps95):
    v = k_lavaurs_verdict(m95, -0.05 + 0.01j, 20, 2000, fps95)
    assert v.state is KLState.RETAINED and v.attractor is not None
    assert k_lavaurs_verdict(m95, 10, 20, 2000, fps95).state is KLState.NOT_IN_KF
    v = k_lavaurs_verdict(m95, -0.05, 20, 2000, fps95)
    assert v.state is KLState.LAVAURS_ESCAPES and v.k == 1


def test_k_lavaurs_escape_is_certified(m95, fps95):
    rng = np.random.default_rng(6)
    zs = -0.2 + 0.6 * rng.uniform(-1, 1, 60) + 0.6j * rng.uniform(-1, 1, 60)
    for z in zs:
        v = k_lavaurs_verdict(m95, z, 3, 2000, fps95)
        if v.state is KLState.LAVAURS_ESCAPES:
            w = z
            for _ in range(v.k):
                w = lavaurs(m95, w)
            assert not fatou.in_basin(m95, w).state is fatou.State.INSIDE


def test_real_quartic_window():
    # an attracting real fixed point found by a fine scan near b = -0.288
    m = normalize_parabolic(PolynomialMap((0, 1, 1, 0, -0.28814)))
    fps = real_horn_fixed_points(m)
    assert fps
    for fp in fps:
        assert abs(fp.rho) < 1 and abs(fp.xi.imag) < 1e-6
        assert abs(lavaurs(m, fp.xi) - fp.xi) < 1e-6
