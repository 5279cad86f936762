import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmecontract.admissible import (DiffusionParams, ExponentPair, ParameterError, RegionClass,
                                    boundary_gamma_identity, classify, derived_exponents,
                                    gamma_roots, interior_samples, p_bounds, sample_region)

# P_pm(0.8) for n = 0.5, evaluated with 40-digit decimal arithmetic on the
# unreduced formula 1 + (2/n^2)(1 - a)(a -+ sqrt(a^2 - n^2))
P_MINUS_08 = 1.2808003202562562871
P_PLUS_08 = 3.2791996797437437129


def test_p_bounds_examples():
    assert p_bounds(0.5, 1.0) == (1.0, 1.0)
    pm, pp = p_bounds(0.5, 0.5)
    assert pm == pytest.approx(3.0, abs=1e-14) and pp == pytest.approx(3.0, abs=1e-14)
    pm, pp = p_bounds(0.5, 0.8)
    assert pm == pytest.approx(P_MINUS_08, abs=1e-14)
    assert pp == pytest.approx(P_PLUS_08, abs=1e-14)


def test_p_bounds_sign_of_n_irrelevant():
    assert p_bounds(-0.3, 0.7) == pytest.approx(p_bounds(0.3, 0.7), abs=0)


def test_p_bounds_rejects_bad_input():
    with pytest.raises(ParameterError):
        p_bounds(0.0, 0.5)
    with pytest.raises(ParameterError):
        p_bounds(0.5, 0.4)
    with pytest.raises(ParameterError):
        p_bounds(1.0, 1.0)


def test_small_n_limit_monotone():
    alpha = 0.6
    gaps = [abs(p_bounds(10.0 ** -k, alpha)[0] - 1.0 / alpha) for k in range(2, 7)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-10


def test_classify_examples():
    assert classify(-0.5, (0.75, 2.0)) is RegionClass.INTERIOR
    assert classify(0.0, (0.5, 2.0)) is RegionClass.BOUNDARY
    assert classify(0.9, (0.5, 2.0)) is RegionClass.OUTSIDE


def test_classify_edges():
    # the corner (1, 1) belongs to every K_|n|
    for n in (-0.7, -0.2, 0.0, 0.3, 0.9):
        assert classify(n, (1.0, 1.0)) is not RegionClass.OUTSIDE
    assert classify(0.5, (0.5, 3.0)) is RegionClass.BOUNDARY
    assert classify(0.5, (0.8, P_MINUS_08)) is RegionClass.BOUNDARY
    assert classify(0.5, (0.8, P_PLUS_08 + 1e-6)) is RegionClass.OUTSIDE
    assert classify(0.5, (0.8, 2.0)) is RegionClass.INTERIOR
    assert classify(0.0, (1.0, 3.0)) is RegionClass.BOUNDARY
    assert classify(0.2, (0.0, 3.0)) is RegionClass.OUTSIDE
    assert classify(0.2, (0.5, 0.9)) is RegionClass.OUTSIDE


def test_classify_rejects_bad_n_and_tol():
    with pytest.raises(ParameterError):
        classify(1.2, (0.5, 2.0))
    with pytest.raises(ParameterError):
        classify(0.2, (0.5, 2.0), tol=0.0)


def test_derived_exponent_examples():
    d = derived_exponents(0.0, (1.0, 2.0))
    assert (d.gamma, d.gamma_bar, d.Gamma) == (0.0, 0.0, 0.0)
    d = derived_exponents(-0.5, (0.75, 2.0))
    assert d.gamma == pytest.approx(-2 / 3, abs=1e-15)
    assert d.gamma_bar == pytest.approx(-1 / 3, abs=1e-15)
    assert d.Gamma == pytest.approx(1 / 3, abs=1e-15)
    d = derived_exponents(0.5, ExponentPair(0.5, 3.0))
    assert (d.gamma, d.gamma_bar, d.Gamma) == (1.0, 2.0, 0.5)
    assert derived_exponents(0.3, (1.0, 1.0)).Gamma is None


def test_gamma_roots():
    assert gamma_roots(0.0) == (0.0, 1.0)
    assert gamma_roots(1.0) == (0.5, 0.5)
    lo, hi = gamma_roots(0.6)
    # roots of G^2 - G + gamma^2/4
    for r in (lo, hi):
        assert r * r - r + 0.09 == pytest.approx(0.0, abs=1e-15)


def test_boundary_identity_examples():
    assert max(map(abs, boundary_gamma_identity(0.5, 0.8))) < 1e-12
    assert max(map(abs, boundary_gamma_identity(0.5, 0.5))) < 1e-12
    r_minus, _ = boundary_gamma_identity(1e-4, 0.5)
    assert abs(r_minus) < 1e-12
    assert p_bounds(1e-4, 0.5)[0] == pytest.approx(2.0, abs=1e-7)


@settings(max_examples=300, deadline=None)
@given(n=st.floats(-0.99, 0.99).filter(lambda x: abs(x) > 1e-6), t=st.floats(0.0, 0.999))
def test_boundary_identity_property(n, t):
    alpha = abs(n) + t * (1.0 - abs(n))
    if alpha >= 1.0:
        return
    assert max(map(abs, boundary_gamma_identity(n, alpha))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(n=st.floats(-0.95, 0.95).filter(lambda x: abs(x) > 1e-3), t=st.floats(0.0, 1.0))
def test_p_bounds_ordered(n, t):
    alpha = abs(n) + t * (1.0 - abs(n))
    pm, pp = p_bounds(n, alpha)
    assert 1.0 <= pm <= pp + 1e-12


def test_sample_region_n_half():
    reg = sample_region(0.5, 20, 12.0, 45)
    rows = list(reg.rows())
    assert len(rows) == 20 * 45
    assert all(c is RegionClass.OUTSIDE for a, _, c in rows if a < 0.5)
    assert classify(0.5, (1.0, 1.0)) is not RegionClass.OUTSIDE
    corner = [c for a, p, c in rows if a == 1.0 and p == 1.0]
    assert corner and corner[0] is not RegionClass.OUTSIDE
    # row order: alpha outer ascending, p inner ascending
    assert [r[:2] for r in rows] == sorted(r[:2] for r in rows)


def test_sample_region_n_zero_interior_rule():
    tol = 1e-9
    reg = sample_region(0.0, 10, 6.0, 26, tol)
    for a, p, c in reg.rows():
        if a < 1.0:
            assert (c is RegionClass.INTERIOR) == (a * p > 1 + tol)


def test_region_csv(tmp_path):
    reg = sample_region(0.5, 4, 5.0, 3)
    path = tmp_path / "r.csv"
    with open(path, "w", newline="") as fh:
        reg.write_csv(fh)
    lines = path.read_text().splitlines()
    assert lines[0] == "alpha,p,class"
    assert len(lines) == 13
    assert {ln.split(",")[2] for ln in lines[1:]} <= {"interior", "boundary", "outside"}


def test_interior_samples_are_interior(rng):
    for n in (-0.9, 0.0, 0.4):
        pts = interior_samples(n, 50, rng)
        assert len(pts) == 50
        assert all(classify(n, pt) is RegionClass.INTERIOR for pt in pts)


def test_params_validation():
    assert DiffusionParams(1.5).n == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        DiffusionParams(-1.0)
    with pytest.raises(ParameterError):
        DiffusionParams(1.5, 0)
    with pytest.raises(ParameterError):
        ExponentPair(1.5, 2.0)
    assert DiffusionParams(1.5, 2).m_c == 0.0
    assert math.isclose(DiffusionParams(0.5, 3).m_c, 1 / 3)
    with pytest.raises(ParameterError):
        DiffusionParams(2.5).require_contraction_range()
