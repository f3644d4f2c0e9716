"""Tests for the FISTA solver family and its proximal building blocks."""

import numpy as np
import pytest

import forestcs as fc
from forestcs import (
    DenseOperator,
    DivergenceError,
    IdentityBasis,
    SolverConfig,
    WaveletBasis,
    build_duplication_map,
    build_group_layout,
    evaluate_objective,
    expand,
    fcsa_structured,
    fista,
    fista_structured,
    prox_l1,
    prox_l21_joint,
    prox_tv,
    smooth_gradient,
    tv_norm,
)
from forestcs.solvers import _analysis, _div2d, _grad2d, _momentum


def test_prox_l1_hand_values():
    assert np.allclose(prox_l1([2.0, 0.5, -3.0], 1.0), [1.0, 0.0, -2.0])


def test_prox_l1_tau_zero_identity():
    v = np.array([1.0, -0.3, 0.0])
    assert np.array_equal(prox_l1(v, 0.0), v)


def test_prox_l1_matches_scalar_grid_oracle():
    # prox is separable; each output must minimize tau*|z| + 0.5*(z - v)^2
    grid = np.linspace(-12.0, 12.0, 480001)
    rng = np.random.default_rng(0)
    for _ in range(10):
        v = 3.0 * rng.standard_normal(2)
        tau = float(rng.uniform(0.1, 2.0))
        got = prox_l1(v, tau)
        for i in range(2):
            objs = tau * np.abs(grid) + 0.5 * (grid - v[i]) ** 2
            assert abs(got[i] - grid[np.argmin(objs)]) <= 1e-4


def test_prox_l1_in_signal_domain_via_basis():
    # soft threshold applied to coefficients, mapped back by the inverse
    basis = WaveletBasis(2, levels=1)
    v = np.array([1.0, 3.0])
    tau = 0.5
    direct = basis.idwt(prox_l1(basis.dwt(v), tau))
    # oracle: minimize tau*||Phi x||_1 + 0.5*||x - v||^2 over a 2D grid
    grid = np.linspace(-4.0, 4.0, 801)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    thetas = pts @ np.stack([basis.dwt(np.eye(2)[0]),
                             basis.dwt(np.eye(2)[1])])
    objs = tau * np.abs(thetas).sum(axis=1) + 0.5 * ((pts - v) ** 2).sum(axis=1)
    oracle = pts[np.argmin(objs)]
    assert np.max(np.abs(direct - oracle)) <= 2e-2


def test_prox_l21_joint_hand_value():
    theta = np.array([3.0, 4.0])  # T=2, one position
    assert np.allclose(prox_l21_joint(theta, 2.5, 2), [1.5, 2.0])


def test_prox_l21_joint_t1_is_prox_l1():
    v = np.array([2.0, -0.5, 0.1])
    assert np.allclose(prox_l21_joint(v, 0.4, 1), prox_l1(v, 0.4))


def test_prox_l21_joint_zeros_whole_position():
    theta = np.array([0.3, 1.0, 0.4, -2.0])  # T=2, N=2 stacked by channel
    out = prox_l21_joint(theta, 1.0, 2).reshape(2, 2)
    assert out[0, 0] == 0.0 and out[1, 0] == 0.0  # position 0 norm 0.5 < 1
    assert out[0, 1] != 0.0 and out[1, 1] != 0.0


def test_smooth_gradient_zero_at_solution():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1, 8))
    op = DenseOperator(np.eye(8))
    g = smooth_gradient(op, x.ravel(), x)
    assert np.max(np.abs(g)) <= 1e-12


def test_smooth_gradient_coupling_cancels_at_z():
    basis = WaveletBasis(16, levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 2, "forest")
    dmap = build_duplication_map(layout)
    rng = np.random.default_rng(2)
    op = fc.make_dense_subgaussian(10, 32, seed=0)
    b = rng.standard_normal(10)
    x = rng.standard_normal((2, 16))
    z = expand(dmap, _analysis(basis, x))
    with_coupling = smooth_gradient(op, b, x, basis=basis, gamma=2.0, z=z,
                                    dmap=dmap)
    without = smooth_gradient(op, b, x)
    assert np.max(np.abs(with_coupling - without)) <= 1e-12


def test_smooth_gradient_finite_differences():
    basis = WaveletBasis(16, levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 2, "forest")
    dmap = build_duplication_map(layout)
    rng = np.random.default_rng(3)
    h = 1e-6
    for case in range(20):
        gamma = 0.0 if case % 2 == 0 else float(rng.uniform(0.1, 3.0))
        op = fc.make_dense_subgaussian(12, 32, seed=100 + case)
        b = rng.standard_normal(12)
        x = rng.standard_normal((2, 16))
        z = rng.standard_normal(dmap.n_rows) if gamma > 0 else None

        def f(xf):
            xa = xf.reshape(2, 16)
            resid = op.forward(xf) - b
            val = 0.5 * float(resid @ resid)
            if gamma > 0:
                diff = z - expand(dmap, _analysis(basis, xa))
                val += 0.5 * gamma * float(diff @ diff)
            return val

        grad = smooth_gradient(op, b, x, basis=basis, gamma=gamma, z=z,
                               dmap=dmap).ravel()
        fd = np.empty(32)
        flat = x.ravel()
        for i in range(32):
            e = np.zeros(32)
            e[i] = h
            fd[i] = (f(flat + e) - f(flat - e)) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        assert rel <= 1e-5


def test_momentum_formula():
    assert abs(_momentum(1.0) - (1.0 + np.sqrt(5.0)) / 2.0) <= 1e-15
    t = 1.0
    for _ in range(50):
        t_next = _momentum(t)
        assert t_next > t >= 1.0
        t = t_next


def test_fista_soft_threshold_fixed_point():
    op = DenseOperator(np.eye(2))
    basis = IdentityBasis(2)
    config = SolverConfig(lam=1.0, max_iters=2000, tol=1e-12)
    res = fista(op, [2.0, 0.5], config, basis)
    assert np.max(np.abs(res.x_hat.ravel() - [1.0, 0.0])) <= 1e-8


def test_fista_lam_zero_reaches_least_squares():
    rng = np.random.default_rng(4)
    mat = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
    op = DenseOperator(mat)
    b = rng.standard_normal(6)
    config = SolverConfig(lam=0.0, max_iters=5000, tol=1e-14)
    res = fista(op, b, config, IdentityBasis(6))
    truth = np.linalg.solve(mat, b)
    assert np.max(np.abs(res.x_hat.ravel() - truth)) <= 1e-6


def test_fista_unknown_model_rejected():
    with pytest.raises(ValueError):
        fista(DenseOperator(np.eye(2)), [0.0, 0.0], SolverConfig(),
              IdentityBasis(2), model="forest")


def test_prox_tv_constant_unchanged():
    v = np.full((6, 6), 2.5)
    assert np.allclose(prox_tv(v, 1.0, inner_iters=50), v, atol=1e-12)


def test_prox_tv_large_tau_flattens():
    rng = np.random.default_rng(5)
    v = rng.standard_normal((8, 8))
    out = prox_tv(v, 100.0, inner_iters=500)
    assert tv_norm(out) <= tv_norm(v)
    assert np.max(np.abs(out - v.mean())) <= 0.05 * (v.max() - v.min())


def _tv_prox_subgradient_oracle(v, tau, steps=100000):
    # projected-free subgradient descent on tau*TV(z) + 0.5*||z - v||^2,
    # step 2/(i+2) for the 1-strongly-convex objective
    z = v.copy()
    for i in range(steps):
        d1, d2 = _grad2d(z)
        mag = np.sqrt(d1 * d1 + d2 * d2)
        safe = np.where(mag > 1e-12, mag, 1.0)
        p1 = np.where(mag > 1e-12, d1 / safe, 0.0)
        p2 = np.where(mag > 1e-12, d2 / safe, 0.0)
        g = (z - v) - tau * _div2d(p1, p2)
        z = z - (2.0 / (i + 2.0)) * g
    return z


def test_prox_tv_matches_subgradient_oracle():
    v = np.zeros((4, 4))
    v[2:, :] = 1.0  # two-level step image
    tau = 0.5
    oracle = _tv_prox_subgradient_oracle(v, tau)
    out = prox_tv(v, tau, inner_iters=2000)
    assert np.max(np.abs(out - oracle)) <= 1e-3


def test_structured_degenerates_to_soft_threshold():
    # a single-root tree has only singleton groups, so the structured
    # solver must match the plain l1 path
    basis = WaveletBasis(2, levels=1)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "forest")
    op = DenseOperator(np.array([[1.0, 0.2], [0.1, 0.9]]))
    b = np.array([1.5, -0.7])
    config = SolverConfig(lam=0.1, max_iters=3000, tol=1e-13)
    res_struct = fista_structured(op, b, config, layout, basis)
    res_l1 = fista(op, b, config, basis, model="standard")
    assert np.max(np.abs(res_struct.x_hat - res_l1.x_hat)) <= 1e-8


def test_structured_t1_singleton_joint_layout_matches_l1():
    basis = WaveletBasis(8, levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "joint")
    op = fc.make_dense_subgaussian(6, 8, seed=7)
    b = np.random.default_rng(8).standard_normal(6)
    config = SolverConfig(lam=0.05, max_iters=3000, tol=1e-13)
    res_struct = fista_structured(op, b, config, layout, basis)
    res_l1 = fista(op, b, config, basis, model="standard")
    assert np.max(np.abs(res_struct.x_hat - res_l1.x_hat)) <= 1e-8


def _forest_instance(seed, n=256, n_channels=3, k=16, m=96):
    basis = WaveletBasis(n, levels=5)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, n_channels, "forest")
    spec = fc.SynthesisSpec(n_channels=n_channels, k=k, model="forest",
                            amplitude_law="uniform-magnitude",
                            noise_sigma=0.0, seed=seed)
    x, theta, supports = fc.generate_instance(spec, tree, basis)
    op = fc.BlockDiagonalOperator(
        [fc.make_dense_subgaussian(m, n, seed=(seed, t))
         for t in range(n_channels)]
    )
    b = fc.measure(x, op, 0.0)
    return basis, tree, layout, x, theta, supports, op, b


def test_structured_support_recovery_monte_carlo():
    # exact support recovery from noiseless structured measurements,
    # entries above 1e-3 * peak counted as support; target 18/20 seeds
    hits = 0
    config = SolverConfig(lam=0.005, gamma=20.0, max_iters=1500, tol=1e-9)
    for seed in range(20):
        basis, tree, layout, x, theta, supports, op, b = _forest_instance(seed)
        res = fista_structured(op, b, config, layout, basis)
        theta_hat = np.stack([basis.dwt(ch) for ch in res.x_hat])
        thr = 1e-3 * np.abs(theta_hat).max()
        est = set(map(tuple, np.argwhere(np.abs(theta_hat) > thr)))
        true = set((t, int(i)) for t in range(3)
                   for i in supports[t].indices)
        hits += est == true
    assert hits >= 18


def test_structured_objective_descends():
    basis, tree, layout, x, theta, supports, op, b = _forest_instance(1)
    config = SolverConfig(lam=0.01, gamma=1.0, max_iters=400, tol=0.0)
    res = fista_structured(op, b, config, layout, basis)
    trace = res.objective_trace
    assert trace[-1] < trace[0]
    slack = 1e-12 * np.maximum(1.0, np.abs(trace[:-1]))
    assert np.all(np.diff(trace) <= slack)


def test_fcsa_mu_zero_identical_to_fista_structured():
    basis, tree, layout, x, theta, supports, op, b = _forest_instance(2)
    config = SolverConfig(lam=0.01, gamma=1.0, mu=0.0, max_iters=50)
    a = fista_structured(op, b, config, layout, basis)
    c = fcsa_structured(op, b, config, layout, basis)
    assert np.array_equal(a.x_hat, c.x_hat)
    assert np.array_equal(a.objective_trace, c.objective_trace)


def _piecewise_constant_image(seed, shape=(16, 16)):
    rng = np.random.default_rng(seed)
    img = np.zeros(shape)
    for _ in range(3):
        r0, c0 = rng.integers(0, shape[0] - 4, size=2)
        h, w = rng.integers(3, 8, size=2)
        img[r0 : r0 + h, c0 : c0 + w] += rng.uniform(0.3, 1.0)
    return img


def test_fcsa_beats_fista_on_piecewise_constant():
    wins = 0
    basis = WaveletBasis((16, 16), levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "forest")
    for seed in range(20):
        img = _piecewise_constant_image(seed)[None]
        mask = fc.make_variable_density_mask((16, 16), 0.25, seed=seed,
                                             center="corner")
        op = fc.PartialFrequencyOperator(mask)
        b = fc.measure(img, op, 0.01, seed=seed)
        cfg_plain = SolverConfig(lam=0.01, gamma=1.0, mu=0.0, max_iters=200)
        cfg_tv = SolverConfig(lam=0.01, gamma=1.0, mu=0.001, max_iters=200)
        res_plain = fista_structured(op, b, cfg_plain, layout, basis)
        res_tv = fcsa_structured(op, b, cfg_tv, layout, basis)
        wins += fc.snr(img, res_tv.x_hat) >= fc.snr(img, res_plain.x_hat)
    assert wins >= 15


def test_fcsa_objective_final_below_initial():
    basis = WaveletBasis((16, 16), levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "forest")
    img = _piecewise_constant_image(3)[None]
    mask = fc.make_variable_density_mask((16, 16), 0.3, seed=3,
                                         center="corner")
    op = fc.PartialFrequencyOperator(mask)
    b = fc.measure(img, op, 0.01, seed=3)
    config = SolverConfig(lam=0.01, gamma=1.0, mu=0.001, max_iters=100)
    res = fcsa_structured(op, b, config, layout, basis)
    assert res.objective_trace[-1] < res.objective_trace[0]


def test_evaluate_objective_zero_case():
    op = DenseOperator(np.eye(4))
    basis = WaveletBasis(4, levels=1)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "forest")
    dmap = build_duplication_map(layout)
    config = SolverConfig(lam=0.7, gamma=1.0)
    x = np.zeros((1, 4))
    val = evaluate_objective(op, np.zeros(4), x, config, basis=basis,
                             dmap=dmap, z=np.zeros(dmap.n_rows),
                             model="forest")
    assert val == 0.0


def test_evaluate_objective_residual_free_case():
    basis = WaveletBasis(8, levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 1, "forest")
    dmap = build_duplication_map(layout)
    rng = np.random.default_rng(9)
    x = rng.standard_normal((1, 8))
    op = DenseOperator(np.eye(8))
    config = SolverConfig(lam=0.3, gamma=2.0)
    z = expand(dmap, _analysis(basis, x))
    val = evaluate_objective(op, x.ravel(), x, config, basis=basis, dmap=dmap,
                             z=z, model="forest")
    expected = config.lam * fc.group_l21_norm(z, dmap.offsets)
    assert abs(val - expected) <= 1e-12


def test_evaluate_objective_matches_independent_terms():
    basis = WaveletBasis(16, levels=2)
    tree = basis.build_tree_layout()
    layout = build_group_layout(tree, 2, "forest")
    dmap = build_duplication_map(layout)
    rng = np.random.default_rng(10)
    op = fc.make_dense_subgaussian(10, 32, seed=11)
    b = rng.standard_normal(10)
    x = rng.standard_normal((2, 16))
    z = rng.standard_normal(dmap.n_rows)
    config = SolverConfig(lam=0.2, gamma=0.8)
    val = evaluate_objective(op, b, x, config, basis=basis, dmap=dmap, z=z,
                             model="forest")
    resid = op.forward(x.ravel()) - b
    diff = z - expand(dmap, _analysis(basis, x))
    expected = (0.5 * resid @ resid
                + config.lam * fc.group_l21_norm(z, dmap.offsets)
                + 0.5 * config.gamma * diff @ diff)
    assert abs(val - expected) <= 1e-12 * max(1.0, abs(expected))


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_divergence_error_on_huge_step():
    basis, tree, layout, x, theta, supports, op, b = _forest_instance(4)
    config = SolverConfig(lam=0.01, gamma=1.0, rho=1e8, max_iters=200)
    with pytest.raises(DivergenceError):
        fista_structured(op, b, config, layout, basis)


def test_solver_determinism():
    config = SolverConfig(lam=0.01, gamma=1.0, max_iters=60)
    results = []
    for _ in range(2):
        basis, tree, layout, x, theta, supports, op, b = _forest_instance(5)
        results.append(fista_structured(op, b, config, layout, basis))
    assert np.array_equal(results[0].x_hat, results[1].x_hat)
    assert np.array_equal(results[0].objective_trace,
                          results[1].objective_trace)


def test_stopping_rule_halts_early():
    op = DenseOperator(np.eye(3))
    config = SolverConfig(lam=0.1, max_iters=5000, tol=1e-10)
    res = fista(op, [1.0, 2.0, 3.0], config, IdentityBasis(3))
    assert res.iters_run < 5000


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(lam=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(mu=-0.1)
    with pytest.raises(ValueError):
        SolverConfig(rho=0.0)
    assert SolverConfig(lam=0.2).gamma == 0.1
