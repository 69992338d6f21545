import numpy as np
import pytest

from hyperac.grid import build_graded_grid, build_uniform_grid
from hyperac.model import ModelParams, reaction_f
from hyperac.schemes import SchemeConfig, State, rhs_kinetic_first_order
from hyperac.timestepping import (
    BlowUpError,
    ImexWorkspace,
    assemble_imex_matrix,
    explicit_step,
    gershgorin_margins,
    imex_step,
    imex_step_reduced_uniform,
    run,
    suggest_dt,
    suggest_dt_imex,
)

EPS = np.finfo(float).eps


def _dense_imex_oracle(r, s, grid, p, dt, boundary="zero_gradient"):
    """Independent dense assembly and solve of the implicit update."""
    n = grid.n_cells
    alpha = p.rho * dt / grid.cell_lengths
    beta = dt / (2.0 * p.tau)
    A = np.zeros((2 * n, 2 * n))
    for i in range(n):
        ri, si = 2 * i, 2 * i + 1
        A[ri, si] -= beta
        A[si, ri] -= beta
        A[ri, ri] += 1.0 + beta
        A[si, si] += 1.0 + beta
        # -alpha (r_{i+1} - r_i)
        if i + 1 < n:
            A[ri, ri] += alpha[i]
            A[ri, 2 * (i + 1)] -= alpha[i]
        elif boundary == "periodic":
            A[ri, ri] += alpha[i]
            A[ri, 0] -= alpha[i]
        # +alpha (s_i - s_{i-1})
        if i > 0:
            A[si, si] += alpha[i]
            A[si, 2 * (i - 1) + 1] -= alpha[i]
        elif boundary == "periodic":
            A[si, si] += alpha[i]
            A[si, 2 * (n - 1) + 1] -= alpha[i]
    fn = reaction_f(r + s, p)
    rhs = np.empty(2 * n)
    rhs[0::2] = r + 0.5 * dt * fn
    rhs[1::2] = s + 0.5 * dt * fn
    x = np.linalg.solve(A, rhs)
    return x[0::2], x[1::2]


def _random_diagonal(grid, p, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    return State.diagonal(
        rng.uniform(-0.5, 1.0, grid.n_cells),
        rng.uniform(-0.5, 1.0, grid.n_cells),
        grid,
        p,
    )


# ----------------------------------------------------------------- assembly --


def test_assembled_matrix_two_cells_by_hand():
    grid = build_uniform_grid(0.0, 2.0, 3)
    # a 3-cell grid is the minimum; check the 2-cell block structure on the
    # first two rows plus the hand-written 4x4 of an N=2 system directly
    p = ModelParams(tau=1.0, mu=1.0)
    dt = 0.1
    alpha = p.rho * dt / grid.cell_lengths[0]
    beta = dt / (2.0 * p.tau)
    matrix = assemble_imex_matrix(grid, dt, p).toarray()
    n = 3
    expected = np.zeros((6, 6))
    for i in range(n):
        ri, si = 2 * i, 2 * i + 1
        expected[ri, si] = -beta
        expected[si, ri] = -beta
        expected[ri, ri] = 1 + beta + (alpha if i + 1 < n else 0.0)
        expected[si, si] = 1 + beta + (alpha if i > 0 else 0.0)
        if i + 1 < n:
            expected[ri, 2 * (i + 1)] = -alpha
        if i > 0:
            expected[si, 2 * (i - 1) + 1] = -alpha
    assert np.allclose(matrix, expected, atol=1e-15)
    # interleaving keeps the bandwidth at 2
    nz = np.nonzero(matrix)
    assert np.max(np.abs(nz[0] - nz[1])) <= 2


def test_relaxation_decoupling_limit():
    # mu = tau huge keeps alpha order one while beta vanishes: the r and s
    # blocks decouple into bidiagonal transport solves
    scale = 1e300
    grid = build_uniform_grid(0.0, 1.0, 4)
    p = ModelParams(tau=scale, mu=scale)
    matrix = assemble_imex_matrix(grid, 0.1, p).toarray()
    coupling = matrix[0::2, 1::2].copy()
    np.fill_diagonal(coupling, 0.0)  # keep only r<-s entries
    rs_coupling = np.abs(matrix[0::2, 1::2]).max()
    sr_coupling = np.abs(matrix[1::2, 0::2]).max()
    assert rs_coupling <= 1e-290 and sr_coupling <= 1e-290
    r_block = matrix[0::2, 0::2]
    assert np.count_nonzero(np.tril(r_block, -1)) == 0  # upper bidiagonal
    s_block = matrix[1::2, 1::2]
    assert np.count_nonzero(np.triu(s_block, 1)) == 0  # lower bidiagonal


@pytest.mark.parametrize("boundary", ["zero_gradient", "periodic"])
def test_gershgorin_row_bound(boundary):
    for grid in (
        build_uniform_grid(0.0, 1.0, 8),
        build_graded_grid(0.0, 5.0, 11, 1.4),
    ):
        for dt in (1e-3, 0.1, 2.0):
            p = ModelParams(tau=0.7, mu=2.0, kappa=1.0, alpha=0.3)
            matrix = assemble_imex_matrix(grid, dt, p, boundary)
            assert gershgorin_margins(matrix).min() >= 1.0 - 1e-12


# ---------------------------------------------------------------- imex step --


def test_imex_fixed_points():
    grid = build_uniform_grid(0.0, 5.0, 10)
    p = ModelParams(tau=2.0, alpha=0.4)
    ws = ImexWorkspace.build(grid, 0.05, p)
    for u_star in (0.0, p.alpha, 1.0):
        st = State.diagonal(np.full(10, u_star / 2), np.full(10, u_star / 2), grid, p)
        new = imex_step(st, 0.05, ws)
        assert np.max(np.abs(new.a - st.a)) <= 1e-12
        assert np.max(np.abs(new.b - st.b)) <= 1e-12


@pytest.mark.parametrize("boundary", ["zero_gradient", "periodic"])
def test_imex_matches_dense_oracle(boundary):
    grid = build_uniform_grid(0.0, 1.0, 4)
    p = ModelParams(tau=1.0, mu=1.0, kappa=1.0, alpha=0.5)
    dt = 0.1  # alpha = 0.4, beta = 0.05
    ws = ImexWorkspace.build(grid, dt, p, boundary)
    for seed in range(10):
        st = _random_diagonal(grid, p, seed)
        new = imex_step(st, dt, ws)
        r_o, s_o = _dense_imex_oracle(st.a, st.b, grid, p, dt, boundary)
        assert np.allclose(new.a, r_o, atol=1e-13)
        assert np.allclose(new.b, s_o, atol=1e-13)


def test_imex_specified_coefficients_case():
    # alpha = 0.8, beta = 0.005 on four cells against the dense oracle
    dt = 0.1
    p = ModelParams(tau=10.0, mu=640.0)  # rho = 8, beta = 0.005
    grid = build_uniform_grid(0.0, 4.0, 4)
    assert p.rho * dt / grid.cell_lengths[0] == pytest.approx(0.8)
    st = _random_diagonal(grid, p, 77)
    new = imex_step(st, dt)
    r_o, s_o = _dense_imex_oracle(st.a, st.b, grid, p, dt)
    assert np.allclose(new.a, r_o, atol=1e-12)
    assert np.allclose(new.b, s_o, atol=1e-12)


def test_imex_requires_diagonal_and_matching_workspace():
    grid = build_uniform_grid(0.0, 1.0, 4)
    p = ModelParams(tau=1.0)
    phys = State.physical(np.zeros(4), np.zeros(4), grid, p)
    with pytest.raises(ValueError):
        imex_step(phys, 0.1)
    ws = ImexWorkspace.build(grid, 0.1, p)
    diag = State.diagonal(np.zeros(4), np.zeros(4), grid, p)
    with pytest.raises(ValueError):
        imex_step(diag, 0.05, ws)


@pytest.mark.parametrize("boundary", ["zero_gradient", "periodic"])
def test_reduced_uniform_path_agrees(boundary):
    grid = build_uniform_grid(0.0, 2.0, 16)
    p = ModelParams(tau=1.3, mu=0.9, kappa=1.1, alpha=0.45)
    dt = 0.07
    ws = ImexWorkspace.build(grid, dt, p, boundary)
    for seed in range(100):
        st = _random_diagonal(grid, p, seed)
        banded = imex_step(st, dt, ws)
        reduced = imex_step_reduced_uniform(st, dt, ws)
        assert np.max(np.abs(banded.a - reduced.a)) <= 1e-10
        assert np.max(np.abs(banded.b - reduced.b)) <= 1e-10


def test_reduced_uniform_fixed_point():
    grid = build_uniform_grid(0.0, 1.0, 6)
    p = ModelParams(tau=1.0, alpha=0.5)
    st = State.diagonal(np.full(6, 0.5), np.full(6, 0.5), grid, p)
    new = imex_step_reduced_uniform(st, 0.1)
    assert np.max(np.abs(new.a - 0.5)) <= 1e-12


def test_reduced_uniform_rejects_nonuniform_grid():
    grid = build_graded_grid(0.0, 1.0, 6, 1.3)
    p = ModelParams(tau=1.0)
    st = State.diagonal(np.zeros(6), np.zeros(6), grid, p)
    with pytest.raises(ValueError):
        imex_step_reduced_uniform(st, 0.1)


def test_linear_solve_residual_is_tiny():
    grid = build_uniform_grid(0.0, 50.0, 400)
    p = ModelParams(tau=1.0, alpha=0.9)
    dt = 0.01
    ws = ImexWorkspace.build(grid, dt, p)
    st = _random_diagonal(grid, p, 5)
    fn = reaction_f(st.a + st.b, p)
    rhs = np.empty(800)
    rhs[0::2] = st.a + 0.5 * dt * fn
    rhs[1::2] = st.b + 0.5 * dt * fn
    x = ws.solve(rhs)
    assert ws.residual(x, rhs) <= 1e-12


# -------------------------------------------------------------- explicit step --


def test_explicit_step_identity_for_zero_rhs():
    grid = build_uniform_grid(0.0, 1.0, 4)
    p = ModelParams(tau=1.0)
    st = State.physical(np.linspace(0, 1, 4), np.zeros(4), grid, p)
    zero = lambda s: (np.zeros(4), np.zeros(4))
    for method in ("euler", "heun"):
        new = explicit_step(st, 0.3, zero, method)
        assert np.array_equal(new.a, st.a)
        assert np.array_equal(new.b, st.b)


def test_heun_linear_growth_factor():
    grid = build_uniform_grid(0.0, 1.0, 3)
    p = ModelParams(tau=1.0)
    lam = -0.7
    st = State.physical(np.ones(3), np.ones(3), grid, p)
    linear = lambda s: (lam * s.a, lam * s.b)
    dt = 0.2
    heun = explicit_step(st, dt, linear, "heun")
    expected = 1.0 + lam * dt + 0.5 * (lam * dt) ** 2
    assert np.allclose(heun.a, expected, rtol=1e-14)
    euler = explicit_step(st, dt, linear, "euler")
    assert np.allclose(euler.a, 1.0 + lam * dt, rtol=1e-14)


def test_euler_step_on_three_cell_example():
    # one Euler step of the frozen first-order stencil example
    grid = build_uniform_grid(0.0, 3.0, 3)
    p = ModelParams(tau=1.0, mu=1.0, kappa=1.0, alpha=0.5)
    st = State.diagonal(np.array([0.0, 0.0, 0.5]), np.array([0.0, 0.5, 0.5]), grid, p)
    cfg = SchemeConfig("kinetic_first_order")
    dt = 0.1
    new = explicit_step(st, dt, lambda s: rhs_kinetic_first_order(s, cfg), "euler")
    assert np.allclose(new.a, [0.0, 0.075, 0.5], atol=1e-15)
    assert np.allclose(new.b, [0.0, 0.425, 0.5], atol=1e-15)


def test_explicit_step_blow_up_detection():
    grid = build_uniform_grid(0.0, 1.0, 3)
    p = ModelParams(tau=1.0)
    st = State.physical(np.ones(3), np.zeros(3), grid, p)
    exploding = lambda s: (np.full(3, 1e12), np.zeros(3))
    with pytest.raises(BlowUpError):
        explicit_step(st, 1.0, exploding, "euler")


# ----------------------------------------------------------------- step size --


def test_suggest_dt_transport_bound():
    # rho = 1, min dx = 0.125, small kappa keeps other caps inactive
    grid = build_uniform_grid(0.0, 25.0, 200)
    p = ModelParams(tau=1.0, mu=1.0, kappa=0.1, alpha=0.5)
    dt = suggest_dt(grid, p, SchemeConfig("kinetic_first_order"), safety=0.9)
    assert dt == pytest.approx(0.1125, rel=1e-12)


def test_suggest_dt_respects_fast_characteristics():
    grid = build_uniform_grid(0.0, 8.0, 8)
    p = ModelParams(tau=1.0, mu=4.0, kappa=0.01, alpha=0.5)  # rho = 2
    dt = suggest_dt(grid, p, SchemeConfig("kinetic_first_order"), safety=1.0)
    assert dt <= 0.5 + 1e-12


def test_suggest_dt_parabolic_diffusive_bound():
    grid = build_uniform_grid(0.0, 1.0, 10)  # dx = 0.1
    p = ModelParams(tau=1.0, mu=1.0, kappa=0.1, alpha=0.5)
    for safety in (0.5, 0.9):
        dt = suggest_dt(grid, p, SchemeConfig("parabolic_reference"), safety=safety)
        assert dt <= 0.005 * safety + 1e-15
        assert dt == pytest.approx(0.005 * safety, rel=1e-12)


def test_suggest_dt_imex_reaction_only():
    p = ModelParams(tau=1.0, mu=1.0, kappa=1.0, alpha=0.9)
    dt = suggest_dt_imex(p, safety=1.0)
    # max |f'| over [-0.1, 1.1] sits at u = -0.1 for alpha = 0.9
    fp = abs(p.kappa * (-3 * 0.01 + 2 * 1.9 * -0.1 - 0.9))
    assert dt == pytest.approx(1.0 / fp, rel=1e-12)


# ----------------------------------------------------------------- run driver --


def test_run_single_step_when_T_equals_dt():
    grid = build_uniform_grid(0.0, 1.0, 8)
    p = ModelParams(tau=1.0, alpha=0.5)
    st = State.physical(np.full(8, 0.5), np.zeros(8), grid, p)
    out = run(st, SchemeConfig("kinetic_first_order"), "imex", T=0.25, dt=0.25)
    assert out.diagnostics.times.shape == (1,)
    assert out.diagnostics.times[0] == pytest.approx(0.25)


def test_run_equilibrium_stays_fixed():
    grid = build_uniform_grid(0.0, 2.0, 12)
    p = ModelParams(tau=1.5, alpha=0.35)
    u0 = np.ones(12)
    st = State.physical(u0, np.zeros(12), grid, p)
    for integrator, scheme in (
        ("imex", SchemeConfig("kinetic_first_order")),
        ("heun", SchemeConfig("kinetic_first_order")),
        ("euler", SchemeConfig("kinetic_second_order")),
        ("heun", SchemeConfig("gk_pseudo_kinetic")),
        ("heun", SchemeConfig("onefield_direct")),
        ("heun", SchemeConfig("onefield_alternative")),
        ("heun", SchemeConfig("parabolic_reference")),
    ):
        out = run(st, scheme, integrator, T=0.5, dt=0.01)
        final = out.final_state
        assert np.max(np.abs(final.u - 1.0)) <= 1e-12, (integrator, scheme.kind)
        assert np.max(np.abs(out.diagnostics.speeds)) <= 1e-12


def test_run_snapshot_schedule():
    grid = build_uniform_grid(0.0, 1.0, 8)
    p = ModelParams(tau=1.0)
    st = State.physical(np.full(8, 0.3), np.zeros(8), grid, p)
    out = run(st, SchemeConfig("kinetic_first_order"), "imex", T=1.0, dt=0.1,
              sample_every=3)
    times = [t for t, _ in out.snapshots]
    assert times[0] == 0.0
    assert all(b > a for a, b in zip(times, times[1:]))
    assert all(t <= 1.0 + 1e-12 for t in times)


def test_run_shortened_last_step():
    grid = build_uniform_grid(0.0, 1.0, 8)
    p = ModelParams(tau=1.0)
    st = State.physical(np.full(8, 1.0), np.zeros(8), grid, p)
    out = run(st, SchemeConfig("kinetic_first_order"), "imex", T=0.25, dt=0.1)
    assert out.diagnostics.times[-1] == pytest.approx(0.25, abs=1e-14)
    assert out.diagnostics.times.shape == (3,)


def test_run_blow_up_carries_step_index():
    grid = build_uniform_grid(0.0, 1.0, 8)
    # enormous reaction with a huge step makes Euler diverge immediately
    p = ModelParams(tau=1.0, kappa=500.0, alpha=0.5)
    st = State.physical(np.full(8, 2.0), np.zeros(8), grid, p)
    with pytest.raises(BlowUpError) as excinfo:
        run(st, SchemeConfig("parabolic_reference"), "euler", T=10.0, dt=1.0)
    assert excinfo.value.step is not None


def test_run_rejects_imex_for_second_order():
    grid = build_uniform_grid(0.0, 1.0, 8)
    p = ModelParams(tau=1.0)
    st = State.physical(np.zeros(8), np.zeros(8), grid, p)
    with pytest.raises(ValueError):
        run(st, SchemeConfig("kinetic_second_order"), "imex", T=1.0, dt=0.1)
    with pytest.raises(ValueError):
        run(st, SchemeConfig("kinetic_first_order"), "rk4", T=1.0, dt=0.1)


def test_imex_and_heun_consistent_as_dt_shrinks():
    """One IMEX step and one Heun step approximate the same semi-discrete
    flow; their difference shrinks at least linearly in dt."""
    grid = build_uniform_grid(0.0, 2.0, 20)
    p = ModelParams(tau=1.0, mu=1.0, kappa=1.0, alpha=0.4)
    cfg = SchemeConfig("kinetic_first_order")
    st = _random_diagonal(grid, p, 3)
    gaps, dts = [], []
    dt = 0.04
    for _ in range(4):
        a = imex_step(st, dt)
        b = explicit_step(st, dt, lambda s: rhs_kinetic_first_order(s, cfg), "heun")
        gaps.append(max(np.max(np.abs(a.a - b.a)), np.max(np.abs(a.b - b.b))))
        dts.append(dt)
        dt /= 2.0
    slope = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
    assert slope >= 1.0
