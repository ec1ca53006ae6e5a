import numpy as np
import pytest
from scipy import stats

from fdd2d import (
    ChannelConfig,
    DiskConfig,
    Mode,
    ModelConfig,
    SimConfig,
    build_zipf,
    classify_modes,
    compute_mode_probabilities,
    link_sir,
    run_experiment,
    run_trial,
    sample_realization,
    transmit_probability,
    trial_success,
)
from fdd2d.simulator import RECEIVING_MODES

CFG = ModelConfig(
    n_users=10,
    disk=DiskConfig(30.0),
    profile=build_zipf(1000, 1.2),
    channel=ChannelConfig(alpha=4.0, beta=1e-5),
)


def expected_mode_vector(profile, n_users):
    mp = compute_mode_probabilities(profile, n_users)
    return np.array([mp.p_sr, mp.p_sr_hdtx, mp.p_bfd, mp.p_tnfd, mp.p_hdrx, mp.p_hdtx, mp.p_ho])


def test_classify_mutual_exchange():
    modes, tx = classify_modes([2, 1], 2)
    assert list(modes) == [Mode.BFD, Mode.BFD]
    assert tx.all()


def test_classify_three_user_chain():
    # user 1 fetches from user 2 (undemanded itself -> HDRX); user 2 serves
    # user 1 while fetching from user 3 (not a mutual pair -> TNFD); user 3
    # wants its own cache and serves user 2 -> SR-HDTX
    modes, tx = classify_modes([2, 3, 3], 3)
    assert list(modes) == [Mode.HDRX, Mode.TNFD, Mode.SR_HDTX]
    assert list(tx) == [False, True, True]


def test_classify_out_of_library_requests():
    # request 4 is cached by nobody (N = 3)
    modes, tx = classify_modes([2, 4, 4], 3)
    assert list(modes) == [Mode.HDRX, Mode.HDTX, Mode.HO]
    assert list(tx) == [False, True, False]


def test_classify_rejects_zero_based():
    with pytest.raises(ValueError):
        classify_modes([0, 1], 2)


def test_classify_frequencies_match_closed_forms():
    rng = np.random.default_rng(10)
    n_trials, n = 200_000, 20
    profile = build_zipf(1000, 1.2)
    requests = rng.random((n_trials, n))
    requests = np.searchsorted(profile.p_hit_prefix, requests) + 1
    modes, tx = classify_modes(requests, n)
    picked = modes[np.arange(n_trials), rng.integers(0, n, n_trials)]
    freq = np.bincount(picked, minlength=7) / n_trials
    expected = expected_mode_vector(profile, n)
    for k in range(7):
        sigma = np.sqrt(expected[k] * (1 - expected[k]) / n_trials)
        assert abs(freq[k] - expected[k]) < 3.5 * sigma, Mode(k).name


def test_classify_invariant_under_cache_permutation():
    # permuting which user caches which content relabels requests but leaves
    # the averaged mode frequencies at the same closed-form values
    rng = np.random.default_rng(11)
    n_trials, n = 150_000, 12
    profile = build_zipf(200, 1.0)
    perm = rng.permutation(n) + 1  # user k caches content perm[k]
    inverse = np.empty(n + 1, dtype=np.int64)
    inverse[perm] = np.arange(1, n + 1)
    requests = np.searchsorted(profile.p_hit_prefix, rng.random((n_trials, n))) + 1
    relabeled = np.where(requests <= n, inverse[np.minimum(requests, n)], requests)
    modes, _ = classify_modes(relabeled, n)
    picked = modes[np.arange(n_trials), rng.integers(0, n, n_trials)]
    freq = np.bincount(picked, minlength=7) / n_trials
    expected = expected_mode_vector(profile, n)
    for k in range(7):
        sigma = np.sqrt(max(expected[k] * (1 - expected[k]), 1e-12) / n_trials)
        assert abs(freq[k] - expected[k]) < 4 * sigma, Mode(k).name


def test_realization_structure():
    rng = np.random.default_rng(12)
    real = sample_realization(CFG, rng)
    n = CFG.n_users
    assert real.positions.shape == (n, 2)
    assert np.all(np.hypot(*real.positions.T) <= CFG.disk.radius)
    # a transmitter's chosen receiver really requests its content
    for mu in np.flatnonzero(real.transmitters):
        target = real.serve_target[mu]
        assert target != mu
        assert real.requests[target] == mu + 1
    # transmitter set equals the demanded set
    demanded = np.array([np.any(np.delete(real.requests, k) == k + 1) for k in range(n)])
    np.testing.assert_array_equal(real.transmitters, demanded)


def test_tiny_threshold_lets_every_receiver_succeed():
    rng = np.random.default_rng(13)
    for _ in range(50):
        real = sample_realization(CFG, rng)
        ok = trial_success(real, CFG.channel, 1e-12)[0]
        receiving = np.isin(real.modes, RECEIVING_MODES)
        assert np.all(ok[receiving])


def test_single_transmitter_receiver_is_interference_free():
    # N=3, m>3: user 1 fetches from user 2; user 2's own request misses the
    # caches, so user 2 is the only transmitter and user 1 sees no
    # interference: with noise ignored the SIR is infinite at any threshold
    rng = np.random.default_rng(14)
    cfg = ModelConfig(3, DiskConfig(30.0), build_zipf(10, 1.0), ChannelConfig(4.0, 1e-5))
    real = sample_realization(cfg, rng)
    real.requests = np.array([2, 5, 6])
    real.modes, real.transmitters = classify_modes(real.requests, 3)
    real.server_of = np.array([1, -1, -1])
    real.serve_target = np.array([-1, 0, -1])
    sir = link_sir(real, cfg.channel)
    assert np.isinf(sir[0])
    assert trial_success(real, cfg.channel, 1e9)[0][0]


def test_zero_si_makes_duplex_irrelevant():
    channel = ChannelConfig(alpha=4.0, beta=0.0)
    rng = np.random.default_rng(15)
    for _ in range(20):
        real = sample_realization(CFG, rng)
        base = link_sir(real, channel)
        relabeled = sample_realization(CFG, np.random.default_rng(0))  # fresh object
        for field in ("positions", "requests", "transmitters", "serve_target", "server_of", "fading"):
            setattr(relabeled, field, getattr(real, field))
        relabeled.modes = np.where(np.isin(real.modes, (Mode.BFD, Mode.TNFD)), Mode.HDRX, real.modes).astype(np.int8)
        swapped = link_sir(relabeled, channel)
        receiving = np.isin(real.modes, RECEIVING_MODES)
        np.testing.assert_allclose(swapped[receiving], base[receiving], rtol=1e-12)


def test_scaling_positions_and_radius_preserves_sir():
    # channel inversion cancels the path-loss scale in every interference
    # term, so half-duplex SIRs are scale-free; the residual
    # self-interference beta*Z0**alpha carries the scale (that is how the
    # disk radius enters the model at all), so full-duplex SIRs are only
    # scale-free when beta = 0
    rng = np.random.default_rng(16)
    for channel, check_fd in ((CFG.channel, False), (ChannelConfig(4.0, 0.0), True)):
        real = sample_realization(CFG, rng)
        scaled = sample_realization(CFG, np.random.default_rng(0))
        for field in ("requests", "modes", "transmitters", "serve_target", "server_of", "fading"):
            setattr(scaled, field, getattr(real, field))
        scaled.positions = real.positions * 7.3
        a = link_sir(real, channel)
        b = link_sir(scaled, channel)
        mask = ~np.isnan(a) if check_fd else (real.modes == Mode.HDRX)
        np.testing.assert_allclose(b[mask], a[mask], rtol=1e-9)


def test_success_monotone_in_threshold():
    rng = np.random.default_rng(17)
    thetas = 10.0 ** (np.arange(-10, 31, 2) / 10.0)
    for _ in range(20):
        real = sample_realization(CFG, rng)
        ok = trial_success(real, CFG.channel, thetas)
        assert np.all(ok[:-1] >= ok[1:])  # per-user indicator can only switch off


def test_run_trial_single_user():
    cfg = ModelConfig(1, DiskConfig(10.0), build_zipf(5, 1.0), ChannelConfig())
    sim = SimConfig(trials=1)
    rng = np.random.default_rng(18)
    result = run_trial(cfg, sim, 1.0, rng)
    assert result.success.shape == (1,)
    assert result.success[0] == (result.realization.modes[0] == Mode.SR)


def test_run_experiment_single_trial_single_user():
    cfg = ModelConfig(1, DiskConfig(10.0), build_zipf(5, 1.0), ChannelConfig())
    for seed in range(8):
        curve, report = run_experiment(cfg, SimConfig(trials=1, master_seed=seed), [1.0], workers=1)
        assert curve.p_total[0] in (0.0, 1.0)
        assert curve.p_total[0] == report.mode_counts[Mode.SR]


def test_run_experiment_deterministic_across_workers():
    sim = SimConfig(trials=600, master_seed=42)
    thetas = [0.5, 2.0]
    c1, r1 = run_experiment(CFG, sim, thetas, workers=1)
    c2, r2 = run_experiment(CFG, sim, thetas, workers=2)
    np.testing.assert_array_equal(c1.p_total, c2.p_total)
    np.testing.assert_array_equal(c1.ci_halfwidth, c2.ci_halfwidth)
    np.testing.assert_array_equal(r1.mode_counts, r2.mode_counts)
    np.testing.assert_array_equal(r1.tx_count_hist, r2.tx_count_hist)


def test_run_experiment_repeatable():
    sim = SimConfig(trials=300, master_seed=7)
    a, _ = run_experiment(CFG, sim, [1.0], workers=1)
    b, _ = run_experiment(CFG, sim, [1.0], workers=1)
    np.testing.assert_array_equal(a.p_total, b.p_total)


def test_mode_report_matches_theorem():
    sim = SimConfig(trials=60_000, master_seed=5)
    _, report = run_experiment(CFG, sim, [1.0], workers=2)
    expected = expected_mode_vector(CFG.profile, CFG.n_users)
    n_samples = sim.trials * CFG.n_users
    freq = report.mode_frequencies
    for k in range(7):
        sigma = np.sqrt(expected[k] * (1 - expected[k]) / n_samples)
        # user labels within one trial are correlated, allow slack over the
        # i.i.d. binomial band
        assert abs(freq[k] - expected[k]) < 6 * sigma, Mode(k).name


def test_transmitter_count_mean_and_marginals():
    # the per-user transmit probability and hence the mean count are exact;
    # the joint count is NOT binomial (requests couple the transmit events:
    # empirically P(N_t=0) sits far below (1-p_tx)**N), so only the moments
    # backed by linearity are asserted here
    sim = SimConfig(trials=60_000, master_seed=6)
    _, report = run_experiment(CFG, sim, [1.0], workers=2)
    p_tx = transmit_probability(CFG.profile, CFG.n_users)
    counts = np.arange(CFG.n_users + 1)
    freq = report.tx_count_frequencies
    mean = float(np.dot(counts, freq))
    var = float(np.dot(counts**2, freq) - mean**2)
    assert abs(mean - CFG.n_users * p_tx) < 3 * np.sqrt(var / sim.trials)

    rng = np.random.default_rng(60)
    n_trials = 200_000
    reqs = np.searchsorted(CFG.profile.p_hit_prefix, rng.random((n_trials, CFG.n_users))) + 1
    _, tx = classify_modes(reqs, CFG.n_users)
    marginal = 1.0 - (1.0 - CFG.profile.rho[: CFG.n_users]) ** (CFG.n_users - 1)
    emp = tx.mean(axis=0)
    sigma = np.sqrt(marginal * (1 - marginal) / n_trials)
    assert np.all(np.abs(emp - marginal) < 4 * sigma)


def test_mode_chi_square_not_rejected():
    # one uniformly chosen user per trial keeps the draws i.i.d. categorical
    rng = np.random.default_rng(19)
    n_trials, n = 1_000_000, 20
    profile = build_zipf(1000, 1.2)
    counts = np.zeros(7, dtype=np.int64)
    for start in range(0, n_trials, 200_000):
        b = min(200_000, n_trials - start)
        reqs = np.searchsorted(profile.p_hit_prefix, rng.random((b, n))) + 1
        modes, _ = classify_modes(reqs, n)
        picked = modes[np.arange(b), rng.integers(0, n, b)]
        counts += np.bincount(picked, minlength=7)
    expected = expected_mode_vector(profile, n) * n_trials
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    p_value = stats.chi2.sf(chi2, df=6)
    assert p_value > 0.01


def test_one_random_user_agrees_with_all_users():
    sim_all = SimConfig(trials=40_000, master_seed=8)
    sim_one = SimConfig(trials=40_000, master_seed=8, evaluate="one-random-user")
    c_all, _ = run_experiment(CFG, sim_all, [1.0], workers=2)
    c_one, _ = run_experiment(CFG, sim_one, [1.0], workers=2)
    band = 3 * (c_all.ci_halfwidth[0] + c_one.ci_halfwidth[0])
    assert abs(c_all.p_total[0] - c_one.p_total[0]) < band


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(trials=0)
    with pytest.raises(ValueError):
        SimConfig(si_model="nope")
    with pytest.raises(ValueError):
        SimConfig(evaluate="someone")
    with pytest.raises(ValueError):
        SimConfig(master_seed=-1)
