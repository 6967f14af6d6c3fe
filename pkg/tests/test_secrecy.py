import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crquery.errors import ValidationError
from crquery.pmf import kl_divergence
from crquery.secrecy import KeyTranscriptPmf, s_in, s_var, strong_converse_gap


def kf(table):
    return KeyTranscriptPmf(np.asarray(table, dtype=float))


@st.composite
def key_transcripts(draw, max_keys=64, max_f=8):
    nk = draw(st.integers(1, max_keys))
    nf = draw(st.integers(1, max_f))
    seed = draw(st.integers(0, 2**31))
    conc = draw(st.sampled_from([0.1, 1.0, 10.0]))
    return kf(np.random.default_rng(seed).dirichlet(np.full(nk * nf, conc)).reshape(nk, nf))


class TestIndices:
    def test_uniform_independent(self):
        t = kf(np.full((4, 3), 1 / 12))
        assert s_in(t) == pytest.approx(0.0, abs=1e-12)
        assert s_var(t) == pytest.approx(0.0, abs=1e-12)
        assert strong_converse_gap(t) == (0.0, 0.0)

    def test_leaked_two(self):
        t = kf(np.eye(2) / 2)
        assert s_in(t) == pytest.approx(1.0)
        assert s_var(t) == pytest.approx(1.0)
        assert strong_converse_gap(t) == pytest.approx((1.0, 2.0))

    def test_leaked_four(self):
        assert s_in(kf(np.eye(4) / 4)) == pytest.approx(2.0)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            kf([[0.5, 0.4]])

    def test_zero_column_dropped(self):
        t = kf([[0.5, 0.0], [0.5, 0.0]])
        assert s_var(t) == 0.0

    @given(key_transcripts())
    def test_divergence_identity(self, t):
        ref = np.outer(np.full(t.n_keys, 1 / t.n_keys), t.p_f)
        assert s_in(t) == pytest.approx(kl_divergence(t.probs, ref), abs=1e-10)

    @given(key_transcripts())
    def test_ranges_and_pinsker(self, t):
        si, sv = s_in(t), s_var(t)
        assert si >= 0 and 0 <= sv <= 2 + 1e-12
        assert sv**2 / (2 * math.log(2)) <= si + 1e-12

    @settings(max_examples=200)
    @given(key_transcripts())
    def test_strong_converse_inequality(self, t):
        lhs, rhs = strong_converse_gap(t)
        assert lhs <= rhs + 1e-12
