"""Probability containers, information functionals and induced joints."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dib.info_core import (
    ConditionalPmf,
    DimensionMismatchError,
    DiscreteSource,
    EncoderSet,
    JointSizeError,
    Pmf,
    conditional_entropy,
    entropy,
    induce_joint,
    kl_divergence,
    mutual_information,
)
from dib.oracles import enumerate_full_joint

from conftest import random_discrete_source, random_encoders

LN2 = math.log(2.0)

# frozen reference values (direct high-precision summation)
H_QUARTER = 0.56233514461880835          # H([0.25, 0.75]) in nats
MI_BSC_01 = 0.36806420716849707          # ln2 - H2(0.1)


def pmf_vectors(max_size=6):
    return st.lists(
        st.floats(min_value=1e-4, max_value=1.0), min_size=2, max_size=max_size
    ).map(lambda v: np.asarray(v) / np.sum(v))


class TestPmf:
    def test_normalizes_small_drift(self):
        p = Pmf(np.array([0.5, 0.5 + 5e-7]))
        assert p.probs.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_large_drift(self):
        with pytest.raises(ValueError):
            Pmf(np.array([0.5, 0.6]))

    def test_rejects_negative_and_nan(self):
        with pytest.raises(ValueError):
            Pmf(np.array([-0.1, 1.1]))
        with pytest.raises(ValueError):
            Pmf(np.array([np.nan, 1.0]))

    def test_immutable(self):
        p = Pmf(np.array([0.25, 0.75]))
        with pytest.raises(ValueError):
            p.probs[0] = 0.5

    @given(pmf_vectors())
    @settings(max_examples=50, deadline=None)
    def test_accepts_any_normalized_vector(self, v):
        assert len(Pmf(v)) == v.size


class TestConditionalPmf:
    def test_shape_properties(self):
        c = ConditionalPmf(np.array([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]]))
        assert (c.n_inputs, c.n_outputs) == (3, 2)

    def test_rejects_unnormalized_row(self):
        with pytest.raises(ValueError):
            ConditionalPmf(np.array([[0.9, 0.2], [0.5, 0.5]]))

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            ConditionalPmf(np.array([0.5, 0.5]))


class TestEntropy:
    def test_deterministic_is_zero(self):
        assert entropy(Pmf(np.array([1.0, 0.0, 0.0]))) == 0.0

    def test_uniform_binary_is_ln2(self):
        assert entropy(np.array([0.5, 0.5])) == pytest.approx(LN2, abs=1e-15)

    def test_frozen_quarter_three_quarter(self):
        assert entropy(np.array([0.25, 0.75])) == pytest.approx(
            H_QUARTER, abs=1e-14
        )

    @given(pmf_vectors())
    @settings(max_examples=50, deadline=None)
    def test_bounded_by_log_alphabet(self, v):
        h = entropy(v)
        assert -1e-12 <= h <= math.log(v.size) + 1e-12


class TestKlDivergence:
    def test_identical_is_zero(self):
        p = np.array([0.3, 0.7])
        assert kl_divergence(p, p) == 0.0

    def test_point_mass_vs_uniform(self):
        assert kl_divergence(np.array([1.0, 0.0]),
                             np.array([0.5, 0.5])) == pytest.approx(LN2)

    def test_support_violation_is_inf(self):
        assert kl_divergence(np.array([0.5, 0.5]),
                             np.array([1.0, 0.0])) == math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kl_divergence(np.array([1.0]), np.array([0.5, 0.5]))

    @given(pmf_vectors(4), pmf_vectors(4))
    @settings(max_examples=50, deadline=None)
    def test_nonnegative(self, p, q):
        if p.size == q.size:
            assert kl_divergence(p, q) >= -1e-12


class TestMutualInformation:
    def test_product_joint_is_zero(self):
        j = np.outer([0.3, 0.7], [0.6, 0.4])
        assert mutual_information(j) == pytest.approx(0.0, abs=1e-15)

    def test_copy_channel_is_ln2(self):
        assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(LN2)

    def test_bsc_frozen_value(self):
        bsc = np.array([[0.9, 0.1], [0.1, 0.9]])
        joint = 0.5 * bsc
        assert mutual_information(joint) == pytest.approx(MI_BSC_01, abs=1e-14)

    def test_conditional_entropy_complement(self):
        # H(A|B) + I(A;B) = H(A)
        rng = np.random.default_rng(7)
        j = rng.dirichlet(np.ones(12)).reshape(3, 4)
        h_a = entropy(j.sum(axis=1))
        assert conditional_entropy(j) + mutual_information(j) == \
            pytest.approx(h_a, abs=1e-12)


class TestInducedJoint:
    def test_encoder_count_mismatch(self, rng):
        source = random_discrete_source(rng, k=2)
        enc = random_encoders(rng, source)
        with pytest.raises(DimensionMismatchError):
            induce_joint(source, EncoderSet(enc.encoders[:1]))

    def test_cell_cap(self, rng):
        source = random_discrete_source(rng, k=2, x_size=3, y_sizes=[3, 3])
        enc = random_encoders(rng, source)
        with pytest.raises(JointSizeError):
            induce_joint(source, enc, cell_cap=10)

    def test_identity_encoder_matches_observation(self, rng):
        # with U = Y the description carries exactly the observation
        source = random_discrete_source(rng, k=1, x_size=3, y_sizes=[4])
        enc = EncoderSet((ConditionalPmf(np.eye(4)),))
        j = induce_joint(source, enc)
        np.testing.assert_allclose(j.p_xu[0], j.p_xy[0], atol=1e-15)
        assert j.mi_x_u(0) == pytest.approx(j.mi_x_y(0), abs=1e-13)

    def test_uniform_encoders_are_uninformative(self, rng):
        source = random_discrete_source(rng, k=2)
        enc = EncoderSet(tuple(
            ConditionalPmf(np.full((m, 3), 1.0 / 3.0))
            for m in source.y_sizes
        ))
        j = induce_joint(source, enc)
        assert j.mi_x_u_all() == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(j.p_u_all, np.full((3, 3), 1.0 / 9.0),
                                   atol=1e-12)

    def test_marginals_match_enumeration(self, rng):
        for seed in range(5):
            r = np.random.default_rng(seed)
            source = random_discrete_source(r, k=2)
            enc = random_encoders(r, source)
            j = induce_joint(source, enc)
            full = enumerate_full_joint(
                source.px.probs,
                [c.rows for c in source.channels],
                [e.rows for e in enc.encoders],
            )
            np.testing.assert_allclose(
                j.p_xu_all, full.sum(axis=(1, 2)), atol=1e-13
            )
            for k in range(2):
                keep = (0, 1 + k)
                axes = tuple(i for i in range(full.ndim) if i not in keep)
                np.testing.assert_allclose(j.p_xy[k], full.sum(axis=axes),
                                           atol=1e-13)

    def test_zero_mass_symbol_gets_prior_posterior(self):
        px = Pmf(np.array([0.4, 0.6]))
        # second observation symbol never occurs
        chan = ConditionalPmf(np.array([[1.0, 0.0], [1.0, 0.0]]))
        source = DiscreteSource(px, (chan,))
        enc = EncoderSet((ConditionalPmf(np.eye(2)),))
        j = induce_joint(source, enc)
        np.testing.assert_allclose(j.p_x_given_y[0][1], px.probs, atol=1e-15)

    def test_chain_rule_of_relevance(self, rng):
        # I(X;U1,U2) = I(X;U1) + I(X;U2|U1) >= each single term
        for seed in range(5):
            r = np.random.default_rng(100 + seed)
            source = random_discrete_source(r, k=2)
            j = induce_joint(source, random_encoders(r, source))
            total = j.mi_x_u_all()
            assert total >= j.mi_x_u(0) - 1e-12
            assert total >= j.mi_x_u(1) - 1e-12

    def test_data_processing(self, rng):
        # U_k is a degraded view of Y_k
        for seed in range(8):
            r = np.random.default_rng(200 + seed)
            source = random_discrete_source(r, k=2)
            j = induce_joint(source, random_encoders(r, source))
            for k in range(2):
                assert j.mi_x_u(k) <= j.mi_x_y(k) + 1e-12

    def test_markov_identity(self, rng):
        # U_k - Y_k - X gives I(Y;U|X) = I(Y;U) - I(X;U)
        for seed in range(5):
            r = np.random.default_rng(300 + seed)
            source = random_discrete_source(r, k=2)
            j = induce_joint(source, random_encoders(r, source))
            for k in range(2):
                assert j.mi_y_u_given_x(k) == pytest.approx(
                    j.mi_y_u(k) - j.mi_x_u(k), abs=1e-10
                )
