import numpy as np
import pytest

from gamc.errors import ConfigError
from gamc.frames import (
    IqFrame,
    ModulationScheme,
    constellation,
    normalize_frame,
    synthesize_frame,
)
from gamc.statfeat import (
    StatConfig,
    amplitude_features,
    bispectrum_features,
    cumulant_features,
    cyclo_features,
    extract_stat_features,
    frequency_features,
    phase_features,
    stat_family_slices,
    stat_feature_names,
)

import oracles

CFG = StatConfig()


def unit_frame(x):
    return normalize_frame(IqFrame(np.asarray(x, dtype=np.complex128)))


def symbol_frame(scheme_name, n, seed=0):
    pts = constellation(ModulationScheme.from_name(scheme_name))
    rng = np.random.default_rng(seed)
    return IqFrame(pts[rng.integers(0, pts.size, size=n)])


class TestAmplitude:
    def test_constant_amplitude_single_bin(self):
        # samples on the unit circle whose float amplitude is exactly 1.0
        f = IqFrame(np.tile([1.0 + 0j, 1j, -1.0 + 0j, -1j], 16))
        v = amplitude_features(f)
        hist = v[: CFG.amp_bins]
        assert hist.max() == pytest.approx(1.0)
        assert np.count_nonzero(hist) == 1
        tails = v[CFG.amp_bins + len(CFG.cdf_quantiles):
                  CFG.amp_bins + len(CFG.cdf_quantiles) + 3]
        assert np.all(tails == 0.0)

    def test_tail_rate_direct_count(self):
        x = np.concatenate([0.5 * np.ones(32), 2.5 * np.ones(32)]).astype(complex)
        v = amplitude_features(IqFrame(x))
        q = len(CFG.cdf_quantiles)
        tails = v[CFG.amp_bins + q: CFG.amp_bins + q + 3]
        # thresholds 1.5, 2.0, 2.5 with strict comparison
        assert tails[0] == pytest.approx(0.5)
        assert tails[1] == pytest.approx(0.5)
        assert tails[2] == pytest.approx(0.0)

    def test_qam16_three_radii(self):
        uniq, counts = oracles.qam16_radius_counts()
        assert uniq.size == 3
        assert tuple(counts) == (4, 8, 4)
        f = symbol_frame("QAM16", 100_000, seed=7)
        a = np.abs(f.samples)
        observed = np.array([np.mean(np.isclose(a, r, atol=1e-9)) for r in uniq])
        assert np.allclose(observed, counts / 16, atol=0.02 * 1.0)

    def test_histograms_sum_to_one(self, noise_frame):
        v = amplitude_features(noise_frame)
        assert v[: CFG.amp_bins].sum() == pytest.approx(1.0, abs=1e-9)
        iq2d = v[CFG.amp_bins + len(CFG.cdf_quantiles) + 3:]
        assert iq2d.sum() == pytest.approx(1.0, abs=1e-9)

    def test_out_of_range_clipped_not_dropped(self):
        x = np.array([10.0 + 0j, 10.0j, -10.0 + 0j, 0.1 + 0j])
        v = amplitude_features(IqFrame(x))
        assert v[: CFG.amp_bins].sum() == pytest.approx(1.0, abs=1e-9)


class TestPhase:
    def test_qpsk_alphabet_moments(self):
        pts = constellation(ModulationScheme.QPSK)
        f = IqFrame(np.tile(pts, 32))
        v = phase_features(f)
        r, m2, m4, m8 = v[0], v[1], v[2], v[3]
        assert r == pytest.approx(0.0, abs=1e-12)
        assert m2 == pytest.approx(0.0, abs=1e-12)
        assert m4 == pytest.approx(1.0, abs=1e-12)

    def test_8psk_alphabet_moments(self):
        pts = constellation(ModulationScheme.PSK8)
        f = IqFrame(np.tile(pts, 16))
        v = phase_features(f)
        m4, m8 = v[2], v[3]
        assert m4 == pytest.approx(0.0, abs=1e-12)
        assert m8 == pytest.approx(1.0, abs=1e-12)

    def test_constant_phase(self):
        f = IqFrame(np.full(64, 0.6 + 0.8j))
        v = phase_features(f)
        assert v[0] == pytest.approx(1.0, abs=1e-12)  # R
        # all phase differences are zero: circular variance 0
        dvar = v[1 + 3 + CFG.phase_diff_bins + 1]
        assert dvar == pytest.approx(0.0, abs=1e-12)

    def test_dhist_sums_to_one(self, noise_frame):
        v = phase_features(noise_frame)
        start = 1 + len(CFG.rotational_orders)
        dhist = v[start: start + CFG.phase_diff_bins]
        assert dhist.sum() == pytest.approx(1.0, abs=1e-9)

    def test_rotation_leaves_moment_magnitudes(self, rng):
        x = rng.normal(size=128) + 1j * rng.normal(size=128)
        a = phase_features(unit_frame(x))
        b = phase_features(unit_frame(x * np.exp(0.777j)))
        assert abs(a[1] - b[1]) <= 1e-9
        assert abs(a[2] - b[2]) <= 1e-9
        assert abs(a[3] - b[3]) <= 1e-9


class TestFrequency:
    def test_on_bin_tone(self):
        n = 128
        f = IqFrame(np.exp(2j * np.pi * 5 * np.arange(n) / n))
        v = frequency_features(f)
        papr, entropy = v[-2], v[-1]
        assert papr == pytest.approx(n, rel=1e-9)
        assert entropy == pytest.approx(0.0, abs=1e-9)

    def test_two_equal_tones(self):
        n = 128
        t = np.arange(n)
        x = np.exp(2j * np.pi * 5 * t / n) + np.exp(2j * np.pi * 21 * t / n)
        v = frequency_features(IqFrame(x))
        assert v[-1] == pytest.approx(np.log(2), abs=1e-6)

    def test_awgn_entropy_near_log_n(self):
        n = 128
        ents = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
            ents.append(frequency_features(IqFrame(x))[-1])
        assert abs(np.mean(ents) - np.log(n)) <= 0.15 * np.log(n)

    def test_histogram_sums_to_one(self, noise_frame):
        v = frequency_features(noise_frame)
        assert v[: CFG.logmag_bins].sum() == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_logmag_range(self):
        # constant-magnitude spectrum: all log values identical
        f = IqFrame(np.array([1.0 + 0j, 0, 0, 0]))
        v = frequency_features(f)
        assert np.all(np.isfinite(v))
        assert v[: CFG.logmag_bins].sum() == pytest.approx(1.0, abs=1e-9)


class TestCumulants:
    def test_bpsk_c40(self):
        f = symbol_frame("BPSK", 100_000, seed=11)
        v = cumulant_features(f)
        c40_re, c40_im = v[8], v[9]
        assert abs(c40_re - (-2.0)) <= 0.02
        assert abs(c40_im) <= 0.02

    def test_qpsk_c40(self):
        f = symbol_frame("QPSK", 100_000, seed=12)
        v = cumulant_features(f)
        assert abs(v[8] - (-1.0)) <= 0.02

    def test_gaussian_c40_vanishes(self):
        rng = np.random.default_rng(13)
        x = (rng.normal(size=1_000_000) + 1j * rng.normal(size=1_000_000)) / np.sqrt(2)
        v = cumulant_features(IqFrame(x))
        assert v[2] <= 0.02  # |C40|

    def test_matches_reference_loop(self, rng):
        x = rng.normal(size=64) + 1j * rng.normal(size=64)
        f = unit_frame(x)
        ref = oracles.cumulants_reference(f.samples)
        v = cumulant_features(f)
        assert v[0] == pytest.approx(abs(ref["c20"]), rel=1e-10)
        assert v[1] == pytest.approx(abs(ref["c21"]), rel=1e-10)
        assert v[2] == pytest.approx(abs(ref["c40"]), rel=1e-10)
        assert v[3] == pytest.approx(abs(ref["c41"]), rel=1e-10)
        assert v[4] == pytest.approx(abs(ref["c42"]), rel=1e-10)
        assert v[5] == pytest.approx(abs(ref["c63"]), rel=1e-10)
        assert v[6] == pytest.approx(ref["c20"].real, abs=1e-12)
        assert v[7] == pytest.approx(ref["c20"].imag, abs=1e-12)

    def test_c63_anchor_values(self):
        bpsk = oracles.cumulants_reference(constellation(ModulationScheme.BPSK))
        assert bpsk["c63"] == pytest.approx(16.0, abs=1e-12)
        qpsk = oracles.cumulants_reference(constellation(ModulationScheme.QPSK))
        assert qpsk["c63"] == pytest.approx(4.0, abs=1e-12)
        rng = np.random.default_rng(3)
        g = (rng.normal(size=2_000_000) + 1j * rng.normal(size=2_000_000)) / np.sqrt(2)
        gauss = oracles.cumulants_reference(g[:200_000])
        assert abs(gauss["c63"]) <= 0.2


class TestBispectrum:
    def test_single_tone_unoccupied_double(self):
        n = 128
        f = IqFrame(np.exp(2j * np.pi * 5 * np.arange(n) / n))
        v = bispectrum_features(f)
        assert np.all(v <= 1e-9)

    def test_locked_tone_pair_argmax(self):
        n = 128
        t = np.arange(n)
        f0 = 5
        x = np.exp(2j * np.pi * f0 * t / n) + np.exp(2j * np.pi * 2 * f0 * t / n)
        v = bispectrum_features(IqFrame(x))
        per_bin = n / CFG.bispec_bins
        assert np.argmax(v) == int(f0 // per_bin)

    def test_gaussian_finite(self, noise_frame):
        v = bispectrum_features(noise_frame)
        assert np.all(np.isfinite(v))
        assert np.all(v >= 0.0)


class TestCyclo:
    def test_pure_tone_bound(self):
        n = 128
        t = np.arange(n)
        f = IqFrame(np.exp(2j * np.pi * 0.071 * t))
        v = cyclo_features(f)
        pos = 0
        for alpha in CFG.cyclic_alphas:
            for lag in CFG.cyclic_lags:
                bound = oracles.tone_cyclic_bound(n, alpha, lag)
                assert v[pos] <= bound + 1e-9, (alpha, lag)
                pos += 1

    def test_matches_reference_sum(self, rng):
        x = rng.normal(size=64) + 1j * rng.normal(size=64)
        f = unit_frame(x)
        v = cyclo_features(f)
        pos = 0
        for alpha in CFG.cyclic_alphas:
            for lag in CFG.cyclic_lags:
                ref = oracles.cyclic_autocorr_reference(f.samples, alpha, lag)
                assert v[pos] == pytest.approx(ref, rel=1e-9)
                pos += 1

    def test_bpsk_symbol_rate_line(self):
        # BPSK at 8 samples/symbol puts a strong line at alpha = 1/8, tau = 1;
        # a pure tone of the same frame length cannot come close.
        n = 128
        bound = oracles.tone_cyclic_bound(n, 0.125, 1)
        vals = []
        for seed in range(100):
            fr = synthesize_frame(ModulationScheme.BPSK, 30, n, seed=seed)
            fr = normalize_frame(fr)
            v = cyclo_features(fr)
            vals.append(v[0])  # alpha=1/8 is first, lag=1 first
        assert np.mean(vals) >= 10.0 * bound

    def test_lag_too_large(self):
        f = IqFrame(np.ones(8, dtype=complex))
        with pytest.raises(ConfigError):
            cyclo_features(f, StatConfig(cyclic_lags=(9,)))


class TestAssembly:
    def test_default_dimension(self, noise_frame):
        v = extract_stat_features(noise_frame)
        assert v.shape == (219,)
        assert np.all(np.isfinite(v))

    def test_dimension_formula(self):
        cfg = CFG
        expect = (cfg.amp_bins + len(cfg.cdf_quantiles) + len(cfg.tail_thresholds)
                  + cfg.iq2d_bins**2
                  + 1 + len(cfg.rotational_orders) + cfg.phase_diff_bins + 2
                  + cfg.phase_spec_bands
                  + cfg.logmag_bins + 2
                  + 10
                  + cfg.bispec_bins
                  + len(cfg.cyclic_alphas) * len(cfg.cyclic_lags))
        assert expect == 219
        assert len(stat_feature_names()) == 219

    def test_names_align_with_slices(self):
        names = stat_feature_names()
        slices = stat_family_slices()
        for family, sl in slices.items():
            for nm in names[sl]:
                assert nm.startswith(f"s.{family}."), (family, nm)

    def test_deterministic(self, noise_frame):
        v1 = extract_stat_features(noise_frame)
        v2 = extract_stat_features(noise_frame)
        assert np.array_equal(v1, v2)

    def test_rotation_invariance_of_amp_family(self, rng):
        x = rng.normal(size=128) + 1j * rng.normal(size=128)
        a = extract_stat_features(unit_frame(x))
        b = extract_stat_features(unit_frame(x * np.exp(1j * 0.9)))
        amp = stat_family_slices()["amp"]
        assert np.max(np.abs(a[amp] - b[amp])) <= 1e-9

    def test_no_nan_on_synthetic(self):
        for name in ("AM-SSB", "CPFSK", "PAM4"):
            fr = synthesize_frame(ModulationScheme.from_name(name), -20, 128, seed=4)
            v = extract_stat_features(normalize_frame(fr))
            assert np.all(np.isfinite(v))
