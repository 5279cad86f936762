import io

import numpy as np
import pytest

from pmecontract.admissible import DiffusionParams, ParameterError, interior_samples
from pmecontract.functionals import (DIAGNOSTICS_COLUMNS, DirectionVector,
                                     contraction_balance, contraction_functional,
                                     cumulative_trapezoid, default_u_floor,
                                     directional_quotient, dissipation_integral, energy_E,
                                     energy_second_differences, energy_variation,
                                     gradient_balance, gradient_dissipation,
                                     gradient_flow_alpha, gradient_flow_residual,
                                     gradient_functional, max_positive_jump, positive_power,
                                     psi_delta, psi_delta_prime, relative_residual,
                                     richardson, write_diagnostics_csv)
from pmecontract.grid import TorusGrid
from pmecontract.solver import SolverConfig, evolve, make_initial


def _pair(g):
    x = g.coords()[0]
    U0 = 1 + 0.3 * np.cos(x)
    V0 = U0 + 0.02 + 0.6 * ((1 + np.cos(x - 1)) / 2) ** 4
    return g.field(U0), g.field(V0)


# ---------------------------------------------------------------- Psi

def test_psi_matching_and_limits():
    p, d = 2.5, 0.3
    assert psi_delta(d, p, d) == 0.0
    h = 1e-7
    assert (psi_delta(d, p, d + h) - psi_delta(d, p, d)) / h == pytest.approx(0.0, abs=1e-6)
    w = np.linspace(0.1, 3, 7)
    np.testing.assert_allclose(psi_delta(0.0, p, w), w ** p / p, rtol=1e-14)
    assert psi_delta(0.0, p, -1.0) == 0.0
    np.testing.assert_allclose(positive_power(np.array([-1.0, 2.0]), 2.0), [0.0, 4.0])
    with pytest.raises(ParameterError):
        psi_delta(-0.1, p, 1.0)


def test_psi_derivative_against_fd():
    p, d = 1.7, 0.2
    w = np.linspace(0.25, 3.0, 20)
    h = 1e-6
    fd = (psi_delta(d, p, w + h) - psi_delta(d, p, w - h)) / (2 * h)
    np.testing.assert_allclose(psi_delta_prime(d, p, w), fd, rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(psi_delta_prime(d, p, w), w ** (p - 1) - d ** (p - 1))


def test_psi_uniform_gap():
    W = 4.0
    w = np.linspace(0, W, 4001)
    for p in (1.5, 2.0, 3.0):
        for d in (0.1, 0.01, 0.001):
            gap = np.abs(psi_delta(d, p, w) - psi_delta(0.0, p, w)).max()
            assert gap <= d ** (p - 1) * W + d ** p * (1 - 1 / p) + 1e-14


# ---------------------------------------------------------------- contraction

def test_contraction_functional_examples(rng):
    g = TorusGrid(2, 16, 3.0)
    u = g.field(rng.uniform(1, 2, g.shape))
    assert contraction_functional(u, u, 2.0) == 0.0
    v = u.with_values(u.values + 0.5)
    assert contraction_functional(v, u, 3.0) == pytest.approx(0.125 * 9.0, rel=1e-13)
    g1 = TorusGrid(1, 32, 4.0)
    a = g1.field(np.where(np.arange(32) < 16, 2.0, 0.5))
    b = g1.field(np.ones(32))
    direct = sum(max(x - y, 0.0) ** 1.5 for x, y in zip(a.values, b.values)) * g1.h
    assert contraction_functional(a, b, 1.5) == pytest.approx(direct, rel=1e-14)
    # symmetric distance = sum of both orders
    both = contraction_functional(a, b, 2.0) + contraction_functional(b, a, 2.0)
    assert both == pytest.approx(g1.h * np.sum((a.values - b.values) ** 2), rel=1e-14)
    with pytest.raises(ParameterError):
        contraction_functional(a, u, 2.0)


def test_dissipation_integral_zero_and_second_order():
    g = TorusGrid(1, 32)
    u = g.field(1 + 0.3 * np.cos(g.axis()))
    assert dissipation_integral(u, u, 0.5, 0.75, 2.0) == 0.0
    vals = []
    for N in (64, 128, 256):
        g = TorusGrid(1, N)
        u, v = _pair(g)
        vals.append(dissipation_integral(v, u, 0.5, 0.75, 2.0))
    assert vals[0] > 0
    d1, d2 = vals[0] - vals[1], vals[1] - vals[2]
    assert 3.0 < d1 / d2 < 5.0


def test_dissipation_integral_swap_symmetry(rng):
    g = TorusGrid(1, 64)
    x = g.axis()
    u = g.field(1 + 0.3 * np.cos(x))
    v = g.field(1 + 0.3 * np.sin(2 * x))
    s1 = dissipation_integral(v, u, 0.2, 0.6, 2.5) + dissipation_integral(u, v, 0.2, 0.6, 2.5)
    s2 = dissipation_integral(u, v, 0.2, 0.6, 2.5) + dissipation_integral(v, u, 0.2, 0.6, 2.5)
    assert s1 == s2 and s1 > 0


def test_balance_identical_runs():
    g = TorusGrid(1, 32)
    u, _ = _pair(g)
    traj = evolve(u, SolverConfig(DiffusionParams(1.5), 0.1, 0.02, alpha=0.75))
    rows = contraction_balance(traj, traj, 0.5, 0.75, 2.0)
    assert all(r.lyapunov == 0 and r.balance_residual == 0 for r in rows)
    assert relative_residual(rows) == 0.0


def test_balance_heat_single_mode():
    a, c = 0.2, 0.5
    g = TorusGrid(1, 256)
    x = g.axis()
    U0 = g.field(1 + 0.3 * np.cos(2 * x))
    V0 = g.field(U0.values + c + a * np.cos(x))
    cfg = SolverConfig(DiffusionParams(1.0), 0.5, 0.01, epsilon_floor=0.0, alpha=1.0)
    rows = contraction_balance(evolve(U0, cfg), evolve(V0, cfg), 0.0, 1.0, 2.0)
    for r in rows:
        exact_diss = np.pi * a * a * np.exp(-2 * r.t)
        exact_lyap = 2 * np.pi * c * c + np.pi * a * a * np.exp(-2 * r.t)
        # centered differences carry a relative O(h^2) error of h^2/3 on a single mode
        assert r.dissipation == pytest.approx(exact_diss, rel=g.h ** 2)
        assert r.lyapunov == pytest.approx(exact_lyap, rel=1e-5)
    assert relative_residual(rows) < 1e-4


def test_balance_rejects_unsynchronized():
    g = TorusGrid(1, 32)
    u, v = _pair(g)
    P = DiffusionParams(1.5)
    a = evolve(u, SolverConfig(P, 0.1, 0.02, alpha=0.75))
    b = evolve(v, SolverConfig(P, 0.1, 0.05, alpha=0.75))
    with pytest.raises(ParameterError):
        contraction_balance(a, b, 0.5, 0.75, 2.0)
    with pytest.raises(ParameterError):
        contraction_balance(a.to_U(), a.to_U(), 0.5, 0.75, 2.0)


def test_contraction_monotone_in_k(rng):
    g = TorusGrid(1, 64)
    u0, v0 = _pair(g)
    for n in (-0.5, 0.0, 0.5):
        P = DiffusionParams(1 + n)
        for a, p in interior_samples(n, 3, rng, p_cap=6.0):
            cfg = SolverConfig(P, 0.3, 0.01, alpha=a)
            rows = contraction_balance(evolve(u0, cfg), evolve(v0, cfg), n, a, p)
            lyap = [r.lyapunov for r in rows]
            assert max_positive_jump(lyap) <= 1e-8 * lyap[0]
            assert min(r.dissipation for r in rows) >= -1e-10


def test_default_u_floor():
    g = TorusGrid(1, 32)
    u, _ = _pair(g)
    traj = evolve(u, SolverConfig(DiffusionParams(1.5), 0.01, 0.01, epsilon_floor=0.01,
                                  alpha=0.5))
    assert default_u_floor(traj) == pytest.approx(0.1 ** 0.5)


# ---------------------------------------------------------------- gradient

def test_gradient_constant():
    g = TorusGrid(2, 16)
    u = g.field(np.full(g.shape, 2.0))
    assert gradient_functional(u, 3.0) == 0.0
    assert gradient_dissipation(u, 0.3, 0.6, 3.0) == 0.0


def test_gradient_balance_heat_mode():
    a = 0.2
    g = TorusGrid(1, 256)
    U0 = g.field(1 + a * np.cos(g.axis()))
    cfg = SolverConfig(DiffusionParams(1.0), 0.5, 0.01, epsilon_floor=0.0, alpha=1.0)
    rows = gradient_balance(evolve(U0, cfg), 0.0, 1.0, 2.0)
    for r in rows:
        assert r.lyapunov == pytest.approx(np.pi * a * a * np.exp(-2 * r.t), rel=g.h ** 2)
        assert r.dissipation == pytest.approx(np.pi * a * a * np.exp(-2 * r.t), rel=g.h ** 2)
    assert relative_residual(rows) < 1e-4


def test_gradient_monotone_2d():
    g = TorusGrid(2, 24)
    x, y = g.coords()
    U0 = g.field(1 + 0.3 * np.cos(x) + 0.2 * np.sin(y))
    cfg = SolverConfig(DiffusionParams(1.5, 2), 0.2, 0.01, alpha=0.75)
    rows = gradient_balance(evolve(U0, cfg), 0.5, 0.75, 2.5)
    lyap = [r.lyapunov for r in rows]
    assert max_positive_jump(lyap) <= 1e-8 * lyap[0]
    assert min(r.dissipation for r in rows) > 0


# ---------------------------------------------------------------- directional

def test_direction_vector_validation():
    with pytest.raises(ParameterError):
        DirectionVector(0, (0,))
    with pytest.raises(ParameterError):
        DirectionVector(0.5, (1,))
    with pytest.raises(ParameterError):
        DirectionVector(0, (1.5,))
    xi = DirectionVector(2, (1,))
    t, x = xi.physical(0.1, 0.01)
    assert t == pytest.approx(0.2) and x == (1.0,)


def test_richardson_exact_on_quadratics():
    f = [3.0 + 2.0 * e - 5.0 * e * e for e in (0.4, 0.2, 0.1, 0.05)]
    assert richardson(f, 2) == pytest.approx(3.0, abs=1e-12)


def test_directional_constant_and_forward_difference():
    g = TorusGrid(1, 64)
    const = evolve(g.field(np.full(64, 2.0)),
                   SolverConfig(DiffusionParams(1.5), 0.05, 0.01, alpha=0.75))
    rep = directional_quotient(const, DirectionVector(0, (1,)), 3, 2.0)
    assert np.all(rep.quotients == 0)
    g = TorusGrid(1, 256)
    u0 = g.field(1 + 0.3 * np.cos(g.axis()))
    traj = evolve(u0, SolverConfig(DiffusionParams(1.0), 0.05, 0.01, epsilon_floor=0.0,
                                   alpha=1.0))
    rep = directional_quotient(traj, DirectionVector(0, (1,)), 3, 2.0)
    # eta = h column at t = 0 against the exact integral of u_x^2 = 0.09 pi
    assert rep.quotients[0, -1] == pytest.approx(0.09 * np.pi, rel=1e-3)
    assert rep.c_xi == pytest.approx(0.09 * np.pi, rel=1e-6)


def test_directional_decay_heat():
    g = TorusGrid(1, 128)
    u0 = g.field(1 + 0.3 * np.cos(g.axis()) + 0.1 * np.sin(3 * g.axis()))
    traj = evolve(u0, SolverConfig(DiffusionParams(1.0), 0.2, 0.005, alpha=1.0))
    for xi in (DirectionVector(0, (1,)), DirectionVector(1, (1,))):
        rep = directional_quotient(traj, xi, 3, 2.0)
        assert rep.max_excess <= 1e-6
        assert np.all(rep.per_eta_jump <= 1e-8 * rep.quotients[0].max())


def test_directional_rejects_long_time_shift():
    g = TorusGrid(1, 32)
    traj = evolve(g.field(1 + 0.3 * np.cos(g.axis())),
                  SolverConfig(DiffusionParams(1.0), 0.02, 0.01, alpha=1.0))
    with pytest.raises(ParameterError):
        directional_quotient(traj, DirectionVector(1, (0,)), 4, 2.0)


# ---------------------------------------------------------------- gradient flow

def test_energy_examples(rng):
    g = TorusGrid(1, 32)
    assert energy_E(g.field(np.full(32, 3.0)), -0.5) == 0.0
    u = g.field(1 + 0.3 * rng.uniform(size=32))
    np.testing.assert_allclose(energy_variation(u, 0.0), -u.laplacian().values, rtol=1e-14)


def test_energy_variation_matches_finite_differences():
    for gamma in (-0.8, -0.3, 0.0):
        gaps = []
        for N in (64, 128, 256):
            g = TorusGrid(1, N)
            x = g.axis()
            u = g.field(1 + 0.4 * np.cos(x) + 0.1 * np.sin(2 * x))
            d = np.cos(x + 0.3) + 0.5 * np.sin(2 * x)
            s = 1e-5
            fd = (energy_E(g.field(u.values + s * d), gamma)
                  - energy_E(g.field(u.values - s * d), gamma)) / (2 * s)
            var = g.h * np.sum(energy_variation(u, gamma) * d)
            gaps.append(abs(fd - var) / abs(var))
        # the exact discrete gradient of E and the assembled formula differ at O(h^2)
        assert gaps[-1] < 5e-3
        assert gaps[0] / gaps[1] > 3.5 and gaps[1] / gaps[2] > 3.5


def test_energy_convex_for_gamma_in_range(rng):
    g = TorusGrid(1, 32)
    for gamma in (-1.0, -0.5, 0.0):
        assert energy_second_differences(g, gamma, 30, rng).min() >= -1e-10


def test_gradient_flow_residual():
    n = -1 / 3
    a = gradient_flow_alpha(n)
    g = TorusGrid(1, 128)
    u0 = g.field(1 + 0.3 * np.cos(g.axis()))
    traj = evolve(u0, SolverConfig(DiffusionParams(1 + n), 0.1, 0.002, alpha=a))
    assert gradient_flow_residual(traj, n) < 5e-2
    E = [energy_E(f, n / a) for f in traj.fields()]
    assert max_positive_jump(E) <= 1e-8 * E[0]
    bad = evolve(u0, SolverConfig(DiffusionParams(1 + n), 0.02, 0.01, alpha=0.9))
    with pytest.raises(ParameterError):
        gradient_flow_residual(bad, n)


# ---------------------------------------------------------------- helpers

def test_helpers_and_csv():
    np.testing.assert_allclose(cumulative_trapezoid([0, 1, 3], [1, 1, 2]), [0, 1, 4])
    assert max_positive_jump([3, 2, 2.5, 1]) == 0.5
    assert max_positive_jump([1]) == 0.0
    g = TorusGrid(1, 32)
    u, v = _pair(g)
    cfg = SolverConfig(DiffusionParams(1.5), 0.05, 0.01, alpha=0.75)
    rows = contraction_balance(evolve(u, cfg), evolve(v, cfg), 0.5, 0.75, 2.0)
    fh = io.StringIO()
    write_diagnostics_csv(fh, rows)
    lines = fh.getvalue().splitlines()
    assert lines[0] == ",".join(DIAGNOSTICS_COLUMNS)
    assert lines[0] == "t,lyapunov,dissipation,cumulative_dissipation,balance_residual"
    assert len(lines) == len(rows) + 1
