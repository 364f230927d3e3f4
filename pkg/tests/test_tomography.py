import math
from types import SimpleNamespace

import numpy as np
import pytest

from flexent import metrics, qcore, source
from flexent import tomography as tomo
from flexent.errors import UsageError, ValidationError
from flexent.source import CountRecord, SourceModel

FAST = tomo.McmcConfig(n_samples=8000, burn_in=3000, seed=1)


def records_from_means(mu, settings=source.SETTINGS, k=1):
    return [CountRecord(k, s, int(round(m)), 1.0) for s, m in zip(settings, mu)]


class TestProjector:
    def test_hh(self):
        np.testing.assert_allclose(tomo.projector(("H", "H")), np.diag([1, 0, 0, 0]))

    def test_bell_overlaps(self, phi_plus):
        assert np.trace(tomo.projector(("D", "D")) @ phi_plus.matrix).real == pytest.approx(0.5)
        assert np.trace(tomo.projector(("R", "R")) @ phi_plus.matrix).real == pytest.approx(0, abs=1e-15)
        assert np.trace(tomo.projector(("R", "L")) @ phi_plus.matrix).real == pytest.approx(0.5)

    @pytest.mark.parametrize("s", tomo.all_settings())
    def test_rank_one_idempotent(self, s):
        p = tomo.projector(s)
        assert np.max(np.abs(p @ p - p)) < 1e-12
        assert np.allclose(p, p.conj().T)
        assert np.linalg.matrix_rank(p) == 1

    def test_36_settings_sum_to_nine_identity(self):
        total = sum(tomo.projector(s) for s in tomo.all_settings())
        np.testing.assert_allclose(total, 9 * np.eye(4), atol=1e-12)

    def test_unknown_label(self):
        with pytest.raises(UsageError):
            tomo.projector(("H", "Q"))
        with pytest.raises(UsageError):
            tomo.MeasurementSetting("X", "H")

    def test_row_form_matches_trace(self, rng):
        rho = qcore.sample_bures(rng).matrix
        rows = tomo.projector_rows(source.SETTINGS)
        direct = [np.trace(tomo.projector(s) @ rho).real for s in source.SETTINGS]
        np.testing.assert_allclose(np.real(rows @ rho.ravel()), direct, atol=1e-14)


class TestLogLikelihood:
    def test_all_zero_counts(self, rng):
        rho = qcore.sample_bures(rng)
        recs = records_from_means(np.zeros(36))
        n0 = 50.0
        mu = n0 * np.array([np.trace(tomo.projector(s) @ rho.matrix).real for s in source.SETTINGS])
        assert tomo.log_likelihood(recs, rho, n0) == pytest.approx(-(mu + 1e-12 * n0).sum(), rel=1e-12)

    def test_generating_state_maximizes(self, rng):
        truth = qcore.sample_bures(rng)
        n0 = 1000.0
        p = np.array([np.trace(tomo.projector(s) @ truth.matrix).real for s in source.SETTINGS])
        # continuous relaxation n_j = mu_j, evaluated directly
        n = n0 * p
        best = tomo._log_likelihood(n, p, n0)
        for _ in range(50):
            other = qcore.sample_bures(rng).matrix
            q = np.array([np.trace(tomo.projector(s) @ other).real for s in source.SETTINGS])
            assert tomo._log_likelihood(n, q, n0) < best

    def test_phi_plus_beats_maximally_mixed(self, phi_plus):
        mu = source.expected_counts(SourceModel(pair_rate=4e4), 1, source.SETTINGS, 1.0)
        recs = records_from_means(mu)
        assert tomo.log_likelihood(recs, phi_plus) > tomo.log_likelihood(recs, qcore.DensityMatrix.maximally_mixed())

    def test_finite_with_zero_probability(self, phi_plus):
        recs = [CountRecord(1, ("H", "V"), 5, 1.0)]
        assert math.isfinite(tomo.log_likelihood(recs, phi_plus, 10.0))

    def test_profile_scale(self, rng):
        rho = qcore.sample_bures(rng)
        recs = records_from_means(np.arange(36) + 3.0)
        prof = tomo.log_likelihood(recs, rho)
        p = np.array([np.trace(tomo.projector(s) @ rho.matrix).real for s in source.SETTINGS])
        n0 = sum(r.counts for r in recs) / p.sum()
        assert prof == pytest.approx(tomo.log_likelihood(recs, rho, n0))
        assert prof >= tomo.log_likelihood(recs, rho, 1.3 * n0)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            bad = SimpleNamespace(channel=1, setting=("H", "H"), counts=-1, integration_s=1.0)
            tomo.log_likelihood([bad], qcore.DensityMatrix.maximally_mixed())


class TestParams:
    def test_trace_and_determinism(self, rng):
        for _ in range(100):
            x = rng.standard_normal(64)
            a, b = tomo.params_to_state(x), tomo.params_to_state(x.copy())
            assert abs(np.trace(a.matrix) - 1) < 1e-12
            assert np.array_equal(a.matrix, b.matrix)

    def test_bad_input(self):
        with pytest.raises(ValidationError):
            tomo.params_to_state(np.full(64, np.nan))
        with pytest.raises(ValidationError):
            tomo.params_to_state(np.zeros(10))

    def test_matches_bures_construction(self, rng):
        x = rng.standard_normal(64)
        g = (x[:16] + 1j * x[16:32]).reshape(4, 4)
        u = qcore.haar_from_ginibre((x[32:48] + 1j * x[48:64]).reshape(4, 4))
        np.testing.assert_allclose(tomo.params_to_state(x).matrix, qcore.bures_from_factors(g, u), atol=1e-15)

    def test_state_to_params_start_point(self, rng):
        rho = qcore.sample_bures(rng)
        back = tomo.params_to_state(tomo.state_to_params(rho, floor=0.0))
        assert qcore.trace_distance(back, rho) < 1e-9

    @pytest.mark.slow
    def test_ensemble_mean_maximally_mixed(self):
        rng = np.random.default_rng(5)
        acc = np.zeros((4, 4), complex)
        n = 100_000
        for _ in range(n):
            acc += tomo._params_to_array(rng.standard_normal(64))
        assert qcore.trace_distance(acc / n, np.eye(4) / 4) < 0.01


class TestSampler:
    def test_prior_only_chain(self):
        mean = np.zeros((4, 4), complex)
        cfg = tomo.McmcConfig(n_samples=100_000, burn_in=1000, seed=3)

        def on_sample(r):
            nonlocal mean
            mean += r

        stats = tomo.run_pcn(lambda x: (0.0, tomo._params_to_array(x)), np.zeros(64) + 0.1, cfg, on_sample)
        assert stats.beta == 1.0 and stats.acceptance_rate == 1.0
        assert qcore.trace_distance(mean / stats.n_retained, np.eye(4) / 4) < 0.02

    def test_gaussian_target(self):
        # likelihood N(x0 | 2, 0.5^2) on a single coordinate with N(0,1) prior:
        # posterior mean 2*1/(1+0.25)=1.6, variance 0.25/1.25=0.2
        xs = []
        cfg = tomo.McmcConfig(n_samples=60_000, burn_in=3000, seed=9)
        stats = tomo.run_pcn(lambda x: (-0.5 * ((x[0] - 2) / 0.5) ** 2, x[0]), np.zeros(3), cfg, xs.append)
        assert 0.2 < stats.acceptance_rate < 0.5
        assert np.mean(xs) == pytest.approx(1.6, abs=0.05)
        assert np.var(xs) == pytest.approx(0.2, abs=0.03)

    def test_thinning(self):
        xs = []
        cfg = tomo.McmcConfig(n_samples=100, burn_in=10, thinning=7, seed=1)
        stats = tomo.run_pcn(lambda x: (0.0, 1), np.zeros(2), cfg, xs.append)
        assert stats.n_retained == 100 == len(xs)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            tomo.McmcConfig(n_samples=0)
        with pytest.raises(ValidationError):
            tomo.McmcConfig(beta=1.5)

    def test_ess_of_independent_draws(self):
        x = np.random.default_rng(0).standard_normal(4000)
        assert 3000 < tomo.effective_sample_size(x) <= 4000 * 1.3


class TestInferPosterior:
    def test_phi_plus_recovery(self):
        recs = source.simulate_counts(SourceModel(pair_rate=4e4), 1, integration_s=1.0, rng=np.random.default_rng(2))
        post = tomo.infer_posterior(recs, FAST)
        assert post.fidelity_mean >= 0.99
        assert 0 < post.acceptance_rate < 1 and not post.warnings

    def test_maximally_mixed_recovery(self):
        recs = records_from_means(np.full(36, 2500.0))
        post = tomo.infer_posterior(recs, FAST)
        assert post.fidelity_mean == pytest.approx(0.25, abs=0.02)
        assert qcore.trace_distance(post.mean_state, np.eye(4) / 4) < 0.02

    def test_default_calibrated_channel(self):
        from flexent import config, pipeline

        cfg = config.load_config()
        recs = pipeline.simulate_tomography(cfg, [17])
        post = tomo.infer_posterior(recs, tomo.McmcConfig(seed=4))
        assert metrics.fef_magic_basis(post.mean_state) == pytest.approx(0.98, abs=0.02)

    def test_target_state(self):
        m = SourceModel(pair_rate=4e4, visibility=0.95, rotation_seed=8)
        recs = source.simulate_counts(m, 1, integration_s=1.0, rng=np.random.default_rng(1))
        ua, ub = source.channel_unitaries(m, 1)
        tgt = np.kron(ua, ub) @ qcore.PHI_PLUS
        post = tomo.infer_posterior(recs, FAST, target=tgt)
        assert post.fidelity_mean == pytest.approx((1 + 3 * 0.95) / 4, abs=0.01)

    def test_chain_seeds_agree(self):
        recs = source.simulate_counts(SourceModel(pair_rate=2000, visibility=0.9), 1, rng=np.random.default_rng(3))
        a = tomo.infer_posterior(recs, tomo.McmcConfig(seed=1))
        b = tomo.infer_posterior(recs, tomo.McmcConfig(seed=2))
        assert abs(a.fidelity_mean - b.fidelity_mean) <= 3 * math.hypot(a.fidelity_std, b.fidelity_std)

    def test_missing_settings(self):
        recs = source.simulate_counts(SourceModel(), 1, rng=np.random.default_rng(0))[:-1]
        with pytest.raises(ValidationError, match="missing"):
            tomo.infer_posterior(recs, FAST)

    def test_mixed_channels_rejected(self):
        recs = source.simulate_counts(SourceModel(), 1, rng=np.random.default_rng(0))
        recs[0] = CountRecord(2, recs[0].setting, recs[0].counts, recs[0].integration_s)
        with pytest.raises(ValidationError):
            tomo.infer_posterior(recs, FAST)

    def test_deterministic_and_json(self):
        recs = source.simulate_counts(SourceModel(pair_rate=500), 1, rng=np.random.default_rng(0))
        cfg = tomo.McmcConfig(n_samples=500, burn_in=200, seed=5)
        a, b = tomo.infer_posterior(recs, cfg), tomo.infer_posterior(recs, cfg)
        assert np.array_equal(a.mean_state.matrix, b.mean_state.matrix)
        back = tomo.PosteriorSummary.from_json(a.to_json())
        assert np.array_equal(back.mean_state.matrix, a.mean_state.matrix)
        assert back.fidelity_std == a.fidelity_std
