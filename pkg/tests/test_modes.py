import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdd2d import (
    build_zipf,
    compute_mode_probabilities,
    transmit_probability,
    transmitter_count_pmf,
)

IDENTITY_TOL = 1e-12


def test_two_user_uniform_hand_table():
    # rho = (1/2, 1/2), hitting probability 1: evaluating each closed form by
    # hand gives 1/4 for SR, SR-HDTX, FDTR (all of it bi-directional), HDRX.
    mp = compute_mode_probabilities(build_zipf(2, 0.0), 2)
    assert mp.p_sr == pytest.approx(0.25, abs=IDENTITY_TOL)
    assert mp.p_sr_hdtx == pytest.approx(0.25, abs=IDENTITY_TOL)
    assert mp.p_fdtr == pytest.approx(0.25, abs=IDENTITY_TOL)
    assert mp.p_bfd == pytest.approx(0.25, abs=IDENTITY_TOL)
    assert mp.p_tnfd == pytest.approx(0.0, abs=IDENTITY_TOL)
    assert mp.p_hdrx == pytest.approx(0.25, abs=IDENTITY_TOL)
    assert mp.p_hdtx == pytest.approx(0.0, abs=IDENTITY_TOL)
    assert mp.p_ho == pytest.approx(0.0, abs=IDENTITY_TOL)


def test_single_user_degenerates():
    for gamma in (0.0, 1.2):
        mp = compute_mode_probabilities(build_zipf(100, gamma), 1)
        assert mp.p_fdtr == mp.p_bfd == mp.p_tnfd == 0.0
        assert mp.p_hdrx == mp.p_hdtx == 0.0
        assert mp.p_sr + mp.p_ho == pytest.approx(1.0, abs=IDENTITY_TOL)
        assert mp.p_tx == 0.0


def test_rejects_more_users_than_contents():
    profile = build_zipf(5, 1.0)
    with pytest.raises(ValueError):
        compute_mode_probabilities(profile, 6)
    with pytest.raises(ValueError):
        transmit_probability(profile, 6)


def _check_identities(mp, p_hit):
    top_level = mp.p_sr + mp.p_sr_hdtx + mp.p_fdtr + mp.p_hdtx + mp.p_hdrx + mp.p_ho
    assert top_level == pytest.approx(1.0, abs=IDENTITY_TOL)
    assert mp.p_fdtr == pytest.approx(mp.p_bfd + mp.p_tnfd, abs=IDENTITY_TOL)
    assert mp.p_tx == pytest.approx(mp.p_sr_hdtx + mp.p_hdtx + mp.p_fdtr, abs=IDENTITY_TOL)
    assert mp.p_sr + mp.p_sr_hdtx == pytest.approx(p_hit / mp.n_users, abs=IDENTITY_TOL)
    for name in ("p_sr", "p_sr_hdtx", "p_fdtr", "p_bfd", "p_tnfd", "p_hdrx", "p_hdtx", "p_ho", "p_tx"):
        value = getattr(mp, name)
        assert 0.0 <= value <= 1.0, f"{name}={value}"


@given(
    m=st.integers(1, 4000),
    gamma_r=st.floats(0.0, 3.0, allow_nan=False),
    n_frac=st.floats(0.0, 1.0),
)
@settings(max_examples=80, deadline=None)
def test_identities_property(m, gamma_r, n_frac):
    profile = build_zipf(m, gamma_r)
    n_users = 1 + int(n_frac * (m - 1))
    mp = compute_mode_probabilities(profile, n_users)
    _check_identities(mp, profile.p_hit_prefix[n_users - 1])


def test_transmit_probability_hand_values():
    assert transmit_probability(build_zipf(7, 2.0), 1) == 0.0
    assert transmit_probability(build_zipf(2, 0.0), 2) == pytest.approx(0.5, abs=IDENTITY_TOL)


def test_transmit_probability_consistency():
    profile = build_zipf(1000, 1.2)
    mp = compute_mode_probabilities(profile, 20)
    p_tx = transmit_probability(profile, 20)
    assert p_tx == pytest.approx(mp.p_sr_hdtx + mp.p_hdtx + mp.p_fdtr, abs=IDENTITY_TOL)
    assert p_tx == pytest.approx(mp.p_tx, abs=IDENTITY_TOL)


def test_pmf_degenerate_endpoints():
    np.testing.assert_array_equal(transmitter_count_pmf(0.0, 5).pmf, [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(transmitter_count_pmf(1.0, 3).pmf, [0, 0, 0, 1])


def test_pmf_hand_binomial():
    np.testing.assert_allclose(transmitter_count_pmf(0.5, 2).pmf, [0.25, 0.5, 0.25], atol=1e-15)


def test_pmf_against_direct_combinatorics():
    p = 0.37
    n = 12
    pmf = transmitter_count_pmf(p, n).pmf
    for k in range(n + 1):
        direct = math.comb(n, k) * p**k * (1 - p) ** (n - k)
        assert pmf[k] == pytest.approx(direct, rel=1e-12)


def test_pmf_stable_for_large_n():
    pmf = transmitter_count_pmf(0.3456, 10_000).pmf
    assert np.all(pmf >= 0)
    assert abs(pmf.sum() - 1.0) < 1e-10


def test_pmf_rejects_bad_probability():
    with pytest.raises(ValueError):
        transmitter_count_pmf(-0.1, 5)
    with pytest.raises(ValueError):
        transmitter_count_pmf(1.1, 5)
