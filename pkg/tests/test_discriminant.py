"""Objective/optimizer tests.

Oracles: closed-form theta expressions, an exhaustive subset search for the
trace ratio on commuting (diagonal) scatters, characteristic-polynomial roots
for the whitened problem, and brute-force Stiefel probes for the Ky Fan bound.
"""

from itertools import combinations

import numpy as np
import pytest

from mlda import (
    InvalidGap,
    InvalidInput,
    LabelScheme,
    NotConverged,
    Seed,
    SingularTotalScatter,
    build_dataset,
    build_scatter,
    commutativity_defect,
    davis_kahan_check,
    eval_objectives,
    gen_labels,
    opt_stml,
    opt_td,
    ordering_consistent,
    regularization_report,
    theta_form,
    top_eigenspace,
    trace_ratio_stiefel,
)
from mlda.spectral import principal_angle_sin
from tests.conftest import random_stiefel


def _random_scatter_pair(rng, n=60, d=6, L=4):
    labels = gen_labels(LabelScheme.variable(((1, 0.6), (2, 0.4))), n, L, rng)
    X = rng.standard_normal((n, d)) @ np.diag(np.linspace(3.0, 0.5, d))
    ds = build_dataset(X, labels)
    return build_scatter(ds)


# ---------------------------------------------------------------------------
# closed forms in theta
# ---------------------------------------------------------------------------


def test_theta_form_frozen():
    out = theta_form(np.array([0.5, 0.25]))
    assert out["j_tr"] == pytest.approx(0.6, abs=1e-15)
    assert out["j_rt"] == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert out["j_dr"] == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert out["j_td"] == pytest.approx(-0.5, abs=1e-15)


def test_theta_form_validation():
    with pytest.raises(InvalidInput):
        theta_form(np.array([0.5, 1.0]))
    with pytest.raises(InvalidInput):
        theta_form(np.array([-0.1]))
    with pytest.raises(InvalidInput):
        theta_form(np.array([]))


def test_equal_scatters_give_reference_values(rng):
    d, r = 5, 2
    G = rng.standard_normal((d, d + 1))
    S = G @ G.T
    W = random_stiefel(rng, d, r)
    vals = eval_objectives(W, S, S)
    assert vals.j_tr == pytest.approx(1.0, rel=1e-12)
    assert vals.j_rt == pytest.approx(float(r), rel=1e-12)
    assert vals.j_dr == pytest.approx(1.0, rel=1e-12)
    assert vals.j_td == pytest.approx(0.0, abs=1e-10)
    assert not vals.within_singular


def test_singular_within_flagged(rng):
    W = random_stiefel(rng, 4, 2)
    vals = eval_objectives(W, np.eye(4), np.zeros((4, 4)))
    assert vals.within_singular
    assert np.isinf(vals.j_rt)


# ---------------------------------------------------------------------------
# one maximizer for all four objectives
# ---------------------------------------------------------------------------


def test_common_maximizer_matches_theta_form(rng):
    for _ in range(10):
        ss = _random_scatter_pair(rng)
        r = 2
        opt = opt_stml(ss.Sb, ss.St_ml, r)
        vals = eval_objectives(opt.columns, ss.Sb, ss.Sw)
        closed = theta_form(opt.theta)
        assert vals.j_tr == pytest.approx(closed["j_tr"], rel=1e-8)
        assert vals.j_rt == pytest.approx(closed["j_rt"], rel=1e-8)
        assert vals.j_dr == pytest.approx(closed["j_dr"], rel=1e-8)
        assert vals.j_td == pytest.approx(closed["j_td"], rel=1e-8, abs=1e-10)


def test_common_maximizer_dominates_probes(rng):
    ss = _random_scatter_pair(rng)
    d, r = ss.Sb.shape[0], 2
    opt = opt_stml(ss.Sb, ss.St_ml, r)
    best = eval_objectives(opt.columns, ss.Sb, ss.Sw)
    from mlda.population import whiten_inverse_sqrt

    T = whiten_inverse_sqrt(ss.St_ml)
    for _ in range(100):
        probe = T @ random_stiefel(rng, d, r)
        # constraint check: probe^T St_ml probe == I
        assert np.abs(probe.T @ ss.St_ml @ probe - np.eye(r)).max() < 1e-8
        cand = eval_objectives(probe, ss.Sb, ss.Sw)
        slack = 1e-10
        assert cand.j_tr <= best.j_tr * (1 + slack) + slack
        assert cand.j_rt <= best.j_rt * (1 + slack) + slack
        assert cand.j_dr <= best.j_dr * (1 + slack) + slack
        assert cand.j_td <= best.j_td + slack * max(1.0, abs(best.j_td))


def test_td_stiefel_optimizer_is_ky_fan(rng):
    ss = _random_scatter_pair(rng)
    d, r = ss.Sb.shape[0], 2
    C = 2 * ss.Sb - ss.St_ml
    res = opt_td(ss, r)
    best = float(np.trace(res.frame.columns.T @ C @ res.frame.columns))
    assert best == pytest.approx(res.values[:r].sum(), rel=1e-10)
    for _ in range(200):
        W = random_stiefel(rng, d, r)
        assert np.trace(W.T @ C @ W) <= best + 1e-10 * max(1.0, abs(best))


# ---------------------------------------------------------------------------
# trace-ratio iteration
# ---------------------------------------------------------------------------


def test_trace_ratio_proportional_scatters(rng):
    G = rng.standard_normal((5, 7))
    Sw = G @ G.T
    res = trace_ratio_stiefel(3.0 * Sw, Sw, 2)
    assert res.lambda_star == pytest.approx(3.0, rel=1e-10)
    assert res.residual <= 1e-9


def test_trace_ratio_matches_exhaustive_diagonal_oracle(rng):
    for _ in range(20):
        d = 7
        b = rng.uniform(0.0, 5.0, size=d)
        w = rng.uniform(0.5, 4.0, size=d)
        r = int(rng.integers(1, 4))
        oracle = max(
            sum(b[list(S)]) / sum(w[list(S)]) for S in combinations(range(d), r)
        )
        res = trace_ratio_stiefel(np.diag(b), np.diag(w), r)
        assert res.lambda_star == pytest.approx(oracle, rel=1e-10)


def test_trace_ratio_fixed_point_property(rng):
    ss = _random_scatter_pair(rng)
    res = trace_ratio_stiefel(ss.Sb, ss.Sw, 2)
    # at the fixed point the top-r eigenvalues of Sb - lambda* Sw sum to zero
    scale = max(np.linalg.norm(ss.Sb), np.linalg.norm(ss.Sw))
    vals = np.linalg.eigvalsh(ss.Sb - res.lambda_star * ss.Sw)[::-1]
    assert abs(vals[:2].sum()) <= 1e-8 * scale


def test_trace_ratio_not_converged_carries_iterate(rng):
    ss = _random_scatter_pair(rng)
    with pytest.raises(NotConverged) as info:
        trace_ratio_stiefel(ss.Sb, ss.Sw, 2, max_iter=1)
    assert info.value.result is not None
    assert np.isfinite(info.value.result.lambda_star)


def test_trace_ratio_validation(rng):
    with pytest.raises(InvalidInput):
        trace_ratio_stiefel(np.eye(3), np.eye(2), 1)
    with pytest.raises(InvalidInput):
        trace_ratio_stiefel(np.eye(3), np.eye(3), 0)
    with pytest.raises(InvalidInput):
        trace_ratio_stiefel(np.zeros((2, 2)), np.zeros((2, 2)), 1)


# ---------------------------------------------------------------------------
# commutativity and ordering
# ---------------------------------------------------------------------------


def test_commutativity_defect_frozen():
    Sb = np.array([[1.0, 1.0], [1.0, 1.0]])
    St = np.array([[2.0, 0.0], [0.0, 1.0]])
    assert commutativity_defect(Sb, St) == pytest.approx(
        np.sqrt(2.0) / (2.0 * np.sqrt(5.0)), rel=1e-12
    )
    assert commutativity_defect(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])) == 0.0


def test_ordering_consistent_cases():
    assert ordering_consistent(np.diag([3.0, 2.0, 1.0]), np.diag([6.0, 5.0, 4.0])) is True
    assert ordering_consistent(np.diag([1.0, 2.0, 3.0]), np.diag([6.0, 5.0, 4.0])) is False
    Sb = np.array([[1.0, 1.0], [1.0, 1.0]])
    St = np.array([[2.0, 0.0], [0.0, 1.0]])
    assert ordering_consistent(Sb, St) is None


# ---------------------------------------------------------------------------
# whitened optimizer against the characteristic polynomial
# ---------------------------------------------------------------------------


def charpoly_roots_3x3(Sb, T):
    nodes = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
    vals = [np.linalg.det(Sb - t * T) for t in nodes]
    roots = np.roots(np.polyfit(nodes, vals, 3))
    assert np.abs(roots.imag).max() < 1e-8
    return np.sort(roots.real)[::-1]


def test_opt_stml_matches_charpoly(rng):
    for _ in range(10):
        ss = _random_scatter_pair(rng, n=40, d=3, L=3)
        opt = opt_stml(ss.Sb, ss.St_ml, 2)
        oracle = charpoly_roots_3x3(ss.Sb, ss.St_ml)
        assert np.allclose(opt.gen_values, oracle, rtol=1e-8, atol=1e-10)
        assert np.allclose(opt.theta, oracle[:2], rtol=1e-8, atol=1e-10)
        # constraint: W^T St_ml W == I_r
        G = opt.columns.T @ ss.St_ml @ opt.columns
        assert np.abs(G - np.eye(2)).max() < 1e-8
        assert (opt.theta >= 0).all() and (opt.theta < 1).all()


def test_opt_stml_ridge(rng):
    ss = _random_scatter_pair(rng, n=40, d=3, L=3)
    g = 0.7
    opt = opt_stml(ss.Sb, ss.St_ml, 2, gamma=g)
    oracle = charpoly_roots_3x3(ss.Sb, ss.St_ml + g * np.eye(3))
    assert np.allclose(opt.gen_values, oracle, rtol=1e-8, atol=1e-10)
    G = opt.columns.T @ (ss.St_ml + g * np.eye(3)) @ opt.columns
    assert np.abs(G - np.eye(2)).max() < 1e-8


def test_opt_stml_singular_total():
    Sb = np.diag([1.0, 0.0])
    with pytest.raises(SingularTotalScatter):
        opt_stml(Sb, np.diag([1.0, 0.0]), 1)


# ---------------------------------------------------------------------------
# eigenspace utilities
# ---------------------------------------------------------------------------


def test_top_eigenspace_basic():
    res = top_eigenspace(np.diag([5.0, 3.0, 1.0]), 2)
    assert np.allclose(res.values, [5.0, 3.0, 1.0])
    assert res.frame.rank == 2
    assert res.gap == pytest.approx(2.0)
    assert not res.degenerate_gap
    full = top_eigenspace(np.diag([5.0, 3.0, 1.0]), 3)
    assert np.isinf(full.gap)
    tied = top_eigenspace(np.eye(3), 1)
    assert tied.degenerate_gap


def test_davis_kahan_cases(rng):
    U = random_stiefel(rng, 5, 2)
    same = davis_kahan_check(U, U, pert_norm=0.3, gap=1.0)
    assert same.angle <= 1e-12 and same.holds
    # orthogonal-complement frames: angle 1, bound above one is vacuous
    V = np.linalg.qr(np.eye(5)[:, 2:4] - U @ (U.T @ np.eye(5)[:, 2:4]))[0]
    far = davis_kahan_check(U, V, pert_norm=3.0, gap=2.0)
    assert far.holds  # bound 1.5 >= 1: vacuous
    with pytest.raises(InvalidGap):
        davis_kahan_check(U, U, pert_norm=0.1, gap=0.0)
    with pytest.raises(InvalidInput):
        davis_kahan_check(U, U, pert_norm=-0.1, gap=1.0)


# ---------------------------------------------------------------------------
# ridge sweep
# ---------------------------------------------------------------------------


def _rank_deficient_scatter(rng):
    # fewer samples than dimensions makes Sw singular
    labels = gen_labels(LabelScheme.single(), 8, 3, rng)
    X = rng.standard_normal((8, 12))
    return build_scatter(build_dataset(X, labels, max_cols=None))


def test_regularization_report_invariants(rng):
    ss = _rank_deficient_scatter(rng)
    rows = regularization_report(ss, [0.0, 1e-3, 1e-2, 1e-1], r=1)
    assert rows[0].kappa_infinite
    assert np.isinf(rows[0].kappa_sw_gamma)
    finite = [row.kappa_sw_gamma for row in rows[1:]]
    assert all(np.isfinite(finite))
    assert all(a > b for a, b in zip(finite, finite[1:]))
    # the ridge shifts the TD matrix by a multiple of the identity: the gap
    # between consecutive eigenvalues is untouched
    gaps = [row.gap_td for row in rows]
    assert max(gaps) - min(gaps) <= 1e-10 * max(1.0, abs(gaps[0]))
    assert len({row.rank_sb for row in rows}) == 1


def test_regularization_report_validation(rng):
    ss = _rank_deficient_scatter(rng)
    with pytest.raises(InvalidInput):
        regularization_report(ss, [1e-2, 1e-3], r=1)
    with pytest.raises(InvalidInput):
        regularization_report(ss, [-1.0, 0.0], r=1)
    with pytest.raises(InvalidInput):
        regularization_report(ss, [], r=1)


# ---------------------------------------------------------------------------
# the multilabel-aware and classic optimizers genuinely differ
# ---------------------------------------------------------------------------


def test_td_and_trace_ratio_solve_different_problems():
    rng = Seed(1).stream("probe", 0, "x")
    labels = gen_labels(LabelScheme.single(), 60, 4, rng)
    X = rng.standard_normal((60, 6)) @ np.diag([3.0, 2.5, 1.0, 0.8, 0.5, 0.3])
    ss = build_scatter(build_dataset(X, labels))
    td = opt_td(ss, 2).frame
    tr = trace_ratio_stiefel(ss.Sb, ss.Sw, 2).frame
    assert principal_angle_sin(td, tr) > 0.25
