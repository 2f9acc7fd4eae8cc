import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imploder import fatou
from imploder.dynamics import PolynomialMap, iterate_map
from imploder.errors import Degenerate, NoFixedPoint, OrbitOverflow
from imploder.fatou import MobiusMap
from imploder.implosion import (
    SkewMap,
    g_model,
    implosion_error,
    in_basin_g,
    key_limit_error,
    mobius_direct,
    mobius_exact,
    mobius_fixed_points,
    mobius_key_limit_error,
    perturbed_orbit,
    perturbed_orbit_array,
    real_quartic_scan,
    skew_orbit,
    standard_skew,
    wandering_witness,
)
from imploder.lavaurs import LavaursFixedPoint, lavaurs

SAMPLES = np.linspace(-0.3, -0.1, 10) + 0.3j


def test_unperturbed_orbit_is_iterate(m95):
    q = iterate_map(m95.f, 3)
    for z in (-0.2, 0.1 + 0.2j):
        assert abs(perturbed_orbit(m95.f, 0, 3, z) - q(z)) < 1e-14


def test_overflow_signals_escape(m95):
    with pytest.raises(OrbitOverflow):
        perturbed_orbit(m95.f, 0.5, 100, 1.0)
    out = perturbed_orbit_array(m95.f, 0.5, 100, np.array([1.0 + 0j, -0.01 + 0j]))
    assert np.isinf(out[0])


def test_mobius_direct_matches_closed_form():
    N = 100
    eps = math.pi / N
    assert abs(mobius_direct(eps, N, -0.5) - mobius_exact(eps, N, -0.5)) < 1e-9
    g = MobiusMap()
    z = -0.5
    for _ in range(N):
        z = g(z) + eps * eps
    assert abs(z - mobius_exact(eps, N, -0.5)) < 1e-9


def test_mobius_fixed_points():
    ap, am = mobius_fixed_points(0.1)
    assert abs(ap - (0.005 + 1j * math.sqrt(0.01 - 0.000025))) < 1e-15
    assert abs(am - ap.conjugate()) < 1e-15
    for N in (1, 7, 300):
        assert abs(mobius_exact(0.1, N, ap) - ap) < 1e-12


def test_mobius_oracle_50_points():
    rng = np.random.default_rng(9)
    z = -0.8 + 0.6 * rng.uniform(-1, 1, 50) + 0.6j * rng.uniform(-1, 1, 50)
    for N in (10, 100, 1000):
        eps = math.pi / N
        assert np.max(np.abs(mobius_exact(eps, N, z) - mobius_direct(eps, N, z))) < 1e-8


def test_mobius_identity_limit():
    rng = np.random.default_rng(10)
    z = -0.6 + 0.3 * rng.uniform(-1, 1, 20) + 0.3j * rng.uniform(-1, 1, 20)
    sup = [np.max(np.abs(mobius_exact(math.pi / N, N, z) - z)) for N in (64, 128, 256, 512)]
    assert all(b < a for a, b in zip(sup, sup[1:]))


def test_implosion_halving(m95):
    errs = [implosion_error(m95, SAMPLES, N) for N in (64, 128, 256, 512)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert implosion_error(m95, SAMPLES, 4096) < 1e-2


def test_implosion_triangle(m95):
    z = SAMPLES[3]
    for N in (64, 256):
        lhs = abs(perturbed_orbit(m95.f, math.pi / N, N, z) - lavaurs(m95, z))
        assert lhs <= implosion_error(m95, [z], N) + 1e-15


def test_skew_normal_forms():
    F = standard_skew(0.95)
    assert F.g.coeffs[:3] == (0, 1, -1)
    with pytest.raises(Degenerate):
        SkewMap(PolynomialMap((0, 1, 1)), PolynomialMap((0, 1, 1)))
    with pytest.raises(Degenerate):
        SkewMap(PolynomialMap((0, 1, 2)), PolynomialMap((0, 1, -1)))


def test_skew_orbit_examples():
    F = standard_skew(0.95)
    assert set(skew_orbit(F, 0, 0, 20)) == {(0, 0)}
    a = skew_orbit(F, -0.2 + 0.1j, 0.01, 30)
    b = skew_orbit(F, -0.6 - 0.3j, 0.01, 30)
    assert [w for _, w in a] == [w for _, w in b]


def test_parabolic_decay_of_g():
    F = standard_skew()
    w = 0.3
    for _ in range(1000):
        w = F.g(w)
    assert 0.5 <= 1000 * w.real <= 2


def test_g_basin():
    F = standard_skew()
    gm = g_model(F)
    assert gm.f.coeffs[:3] == (0, 1, 1)
    assert in_basin_g(F, 0.25)
    assert not in_basin_g(F, -0.5)


def test_key_limit(m95):
    F = standard_skew(0.95)
    z, w = -0.2 + 0.3j, 0.3
    errs = [key_limit_error(F, m95, z, w, n) for n in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05
    mob = [mobius_key_limit_error(-0.3 + 0.1j, 0.3, n) for n in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(mob, mob[1:]))


def test_g_returns_shrink():
    g = standard_skew().g
    w, prev = 0.3, 0.3
    for n in range(1, 30):
        for _ in range(2 * n - 1):
            w = g(w)
        assert abs(w) < abs(prev)
        prev = w


def test_witness_structure_and_determinism(m95, fps95):
    F = standard_skew(0.95)
    r1 = wandering_witness(F, m95, fps95[0], n_cap=16, samples=40)
    r2 = wandering_witness(F, m95, fps95[0], n_cap=16, samples=40)
    assert r1 == r2
    assert 2 <= r1.n0 <= 12
    assert r1.samples_checked == 40
    assert sorted(r1.contained) == list(range(r1.n0, 17))
    assert len(r1.distances) == 17 - r1.n0
    assert r1.orbit_separation > 1e-6


def test_witness_small_w_disk(m95, fps95):
    # a narrow W keeps the Lavaurs phase nearly uniform over the samples
    F = standard_skew(0.95)
    r = wandering_witness(F, m95, fps95[0], n_cap=25, samples=100, W_radius=0.02)
    assert all(r.contained.values())


def test_witness_rejects_repelling(m95):
    F = standard_skew(0.95)
    fp = LavaursFixedPoint(0.1 + 2j, 0.1 + 0.5j, 1.5 + 0j, 0)
    with pytest.raises(NoFixedPoint):
        wandering_witness(F, m95, fp)


def test_quartic_scan_contract():
    with pytest.raises(ValueError):
        real_quartic_scan(-0.5, 0.0, 5)
    for b, fp in real_quartic_scan(-0.2905, -0.2855, 6):
        assert -0.2905 < b < -0.2855
        m = fatou.normalize_parabolic(PolynomialMap((0, 1, 1, 0, b)))
        assert abs(lavaurs(m, fp.xi) - fp.xi) < 1e-6 and abs(fp.rho) < 1


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.3), st.integers(1, 400))
def test_mobius_fixed_point_property(eps, N):
    ap, _ = mobius_fixed_points(eps)
    assert abs(ap * ap - eps * eps * ap + eps * eps) < 1e-14
    assert abs(mobius_exact(eps, N, ap) - ap) < 1e-10
