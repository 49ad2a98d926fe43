"""Generator tests: determinism, scheme statistics, exact noiseless output,
and the frozen pair-product encoding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlda import (
    InvalidInput,
    InvalidScheme,
    LabelScheme,
    ModelParams,
    Seed,
    gen_data,
    gen_labels,
    isotropic_params,
    pair_products,
    pair_products_matrix,
    scheme_distribution,
)

VAR = LabelScheme.variable(((1, 0.6), (2, 0.3), (3, 0.1)))


# ---------------------------------------------------------------------------
# determinism of the seeded streams
# ---------------------------------------------------------------------------


def test_streams_reproducible_and_independent():
    seed = Seed(42)
    a1 = seed.stream("alpha", 3, "labels").standard_normal(8)
    a2 = Seed(42).stream("alpha", 3, "labels").standard_normal(8)
    assert np.array_equal(a1, a2)  # bitwise
    b = seed.stream("alpha", 3, "noise").standard_normal(8)
    c = seed.stream("alpha", 4, "labels").standard_normal(8)
    d = seed.stream("beta", 3, "labels").standard_normal(8)
    for other in (b, c, d):
        assert not np.array_equal(a1, other)


def test_stream_order_does_not_matter():
    s = Seed(7)
    first = s.stream("x", 0, "a").integers(0, 1 << 30, 4)
    second = s.stream("x", 1, "a").integers(0, 1 << 30, 4)
    t = Seed(7)
    second_again = t.stream("x", 1, "a").integers(0, 1 << 30, 4)
    first_again = t.stream("x", 0, "a").integers(0, 1 << 30, 4)
    assert np.array_equal(first, first_again)
    assert np.array_equal(second, second_again)


def test_seed_validation():
    with pytest.raises(InvalidInput):
        Seed(-1)
    with pytest.raises(InvalidInput):
        Seed(1 << 64)
    with pytest.raises(InvalidInput):
        Seed(9).stream("x", -2, "a")


def test_gen_labels_deterministic():
    y1 = gen_labels(VAR, 50, 4, Seed(1).stream("e", 0, "labels"))
    y2 = gen_labels(VAR, 50, 4, Seed(1).stream("e", 0, "labels"))
    assert np.array_equal(y1.bits, y2.bits)


# ---------------------------------------------------------------------------
# label scheme statistics
# ---------------------------------------------------------------------------


def test_scheme_validation():
    with pytest.raises(InvalidScheme):
        LabelScheme.variable(((1, 0.5), (2, 0.4)))  # fractions sum to 0.9
    with pytest.raises(InvalidScheme):
        LabelScheme.variable(((0, 1.0),))
    with pytest.raises(InvalidScheme):
        LabelScheme.uniform(0)
    assert LabelScheme.single().max_cardinality() == 1
    assert VAR.max_cardinality() == 3


def test_cardinality_fractions_converge():
    rng = Seed(3).stream("mix", 0, "labels")
    labels = gen_labels(VAR, 100_000, 8, rng)
    k = labels.k
    for card, frac in ((1, 0.6), (2, 0.3), (3, 0.1)):
        assert abs((k == card).mean() - frac) < 0.01
    assert set(np.unique(k)) <= {1, 2, 3}


def test_every_label_present_even_at_minimum_size():
    for trial in range(50):
        rng = Seed(trial).stream("small", 0, "labels")
        labels = gen_labels(VAR, 6, 6, rng)
        assert (labels.n_ell > 0).all()
        assert (labels.k >= 1).all() and (labels.k <= 3).all()
    with pytest.raises(InvalidInput):
        gen_labels(VAR, 5, 6, Seed(0).stream("small", 0, "labels"))


def test_uniform_scheme_respects_cardinality():
    labels = gen_labels(LabelScheme.uniform(2), 200, 5, Seed(4).stream("u", 0, "l"))
    assert (labels.k == 2).all()
    assert (labels.n_ell > 0).all()


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=6, max_value=60),
    L=st.integers(min_value=2, max_value=6),
    base=st.integers(min_value=0, max_value=2**32),
)
def test_gen_labels_always_valid(n, L, base):
    scheme = LabelScheme.variable(((1, 0.5), (2, 0.5)))
    labels = gen_labels(scheme, max(n, L), L, Seed(base).stream("h", 0, "l"))
    assert labels.bits.shape == (max(n, L), L)
    assert (labels.k >= 1).all() and (labels.k <= 2).all()
    assert (labels.n_ell > 0).all()


# ---------------------------------------------------------------------------
# exact feature generation
# ---------------------------------------------------------------------------


def test_noiseless_output_is_exact():
    labels = gen_labels(VAR, 30, 4, Seed(6).stream("g", 0, "l"))
    A = np.arange(20.0).reshape(5, 4)
    mu = np.array([1.0, -2.0, 3.0, 0.0, 0.5])
    params = ModelParams(mu, A, Sigma_w=np.zeros((5, 5)))
    ds = gen_data(labels, params, Seed(6).stream("g", 0, "noise"))
    expected = mu + labels.bits @ A.T
    assert np.array_equal(ds.X, expected)


def test_linear_model_mean_converges():
    labels = gen_labels(VAR, 40_000, 3, Seed(8).stream("m", 0, "l"))
    A = np.array([[2.0, -1.0, 0.5], [0.0, 1.0, 1.0]])
    params = isotropic_params(np.array([1.0, -1.0]), A, 1.0)
    ds = gen_data(labels, params, Seed(8).stream("m", 0, "noise"))
    target = params.mu + labels.bits.mean(axis=0) @ A.T
    se = 1.0 / np.sqrt(labels.n)
    assert np.abs(ds.X.mean(axis=0) - target).max() < 5 * se


def test_alpha_zero_bit_identical_to_plain_model():
    labels = gen_labels(VAR, 25, 4, Seed(10).stream("a", 0, "l"))
    A = np.ones((3, 4))
    B = np.full((3, 6), 2.0)
    with_b = ModelParams(np.zeros(3), A, Sigma_w=0.25 * np.eye(3), B_inter=B)
    without = ModelParams(np.zeros(3), A, Sigma_w=0.25 * np.eye(3))
    x1 = gen_data(labels, with_b, Seed(10).stream("a", 0, "n"), alpha=0.0)
    x2 = gen_data(labels, without, Seed(10).stream("a", 0, "n"), alpha=0.0)
    assert np.array_equal(x1.X, x2.X)
    with pytest.raises(InvalidInput):
        gen_data(labels, without, Seed(10).stream("a", 0, "n"), alpha=0.5)


def test_interaction_term_enters_linearly():
    labels = gen_labels(LabelScheme.uniform(2), 20, 4, Seed(11).stream("i", 0, "l"))
    A = np.zeros((3, 4))
    B = np.arange(18.0).reshape(3, 6)
    params = ModelParams(np.zeros(3), A, Sigma_w=np.zeros((3, 3)), B_inter=B)
    ds = gen_data(labels, params, Seed(11).stream("i", 0, "n"), alpha=2.0)
    Z = pair_products_matrix(labels.bits)
    assert np.allclose(ds.X, 2.0 * Z @ B.T, atol=1e-14)


def test_rademacher_noise_is_bounded():
    labels = gen_labels(LabelScheme.single(), 500, 3, Seed(12).stream("r", 0, "l"))
    params = isotropic_params(np.zeros(2), np.zeros((2, 3)), 0.7, B_inter=None)
    ds = gen_data(labels, params, Seed(12).stream("r", 0, "n"), noise="rademacher")
    assert np.allclose(np.abs(ds.X), 0.7, atol=1e-12)
    mean = np.abs(ds.X.mean(axis=0)).max()
    assert mean < 5 * 0.7 / np.sqrt(500)
    with pytest.raises(InvalidInput):
        gen_data(labels, params, Seed(12).stream("r", 0, "n"), noise="uniform")


# ---------------------------------------------------------------------------
# pair products
# ---------------------------------------------------------------------------


def test_pair_products_frozen():
    assert np.array_equal(pair_products(np.array([1, 0, 1])), [0, 1, 0])
    assert np.array_equal(pair_products(np.array([1, 1, 1])), [1, 1, 1])
    assert np.array_equal(pair_products(np.array([0, 1, 0, 1])), [0, 0, 0, 0, 1, 0])
    Y = np.array([[1, 1, 0], [0, 1, 1]])
    assert np.array_equal(pair_products_matrix(Y), [[1, 0, 0], [0, 0, 1]])


def test_pair_difference_norm_bound():
    rng = np.random.default_rng(13)
    L = 5
    cap = min(3, L) - 1  # max cardinality 3 in this draw
    for _ in range(2000):
        yi = np.zeros(L, dtype=int)
        yj = np.zeros(L, dtype=int)
        yi[rng.choice(L, size=rng.integers(1, 4), replace=False)] = 1
        yj[rng.choice(L, size=rng.integers(1, 4), replace=False)] = 1
        dz = pair_products(yi) - pair_products(yj)
        d_h = int(np.abs(yi - yj).sum())
        bound = np.sqrt(d_h * min(cap, L - 1))
        assert np.linalg.norm(dz) <= bound + 1e-12


# ---------------------------------------------------------------------------
# exact scheme distribution
# ---------------------------------------------------------------------------


def test_scheme_distribution_exact():
    dist = scheme_distribution(LabelScheme.variable(((1, 0.6), (2, 0.4))), 3)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-15)
    # three singletons at 0.2 each, three pairs at 0.4/3 each
    cards = dist.patterns.sum(axis=1)
    assert np.allclose(dist.probs[cards == 1], 0.2, atol=1e-15)
    assert np.allclose(dist.probs[cards == 2], 0.4 / 3.0, atol=1e-15)
    assert np.allclose(dist.pi, 7.0 / 15.0, atol=1e-14)


def test_scheme_distribution_single():
    dist = scheme_distribution(LabelScheme.single(), 4)
    assert dist.is_single_label()
    assert np.allclose(dist.pi, 0.25, atol=1e-15)


def test_scheme_distribution_card_exceeds_labels():
    with pytest.raises(InvalidScheme):
        scheme_distribution(LabelScheme.uniform(4), 3)


def test_generated_frequencies_match_distribution():
    scheme = LabelScheme.variable(((1, 0.5), (2, 0.5)))
    dist = scheme_distribution(scheme, 3)
    labels = gen_labels(scheme, 60_000, 3, Seed(14).stream("f", 0, "l"))
    keys = {tuple(p): q for p, q in zip(dist.patterns, dist.probs)}
    rows, counts = np.unique(labels.bits, axis=0, return_counts=True)
    for row, cnt in zip(rows, counts):
        assert abs(cnt / labels.n - keys[tuple(row)]) < 0.01
