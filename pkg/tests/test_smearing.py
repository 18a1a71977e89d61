import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hearaug import (
    AudioBuffer,
    SmearingParams,
    StftConfig,
    apply_spectral_smearing,
    build_auditory_matrix,
    build_smearing_matrix,
    filter_sharpness,
    istft,
    roex_weight,
    smearing_matrix_for,
    stft,
)
from conftest import RATE, synth_speech


def snr_db(reference, test):
    noise = test - reference
    return 10 * np.log10(np.sum(reference**2) / max(np.sum(noise**2), 1e-300))


# --- roex weight -----------------------------------------------------------


def test_roex_weight_at_zero_is_one():
    for p in (1.0, 10.0, 30.0, 200.0):
        assert roex_weight(0.0, p) == 1.0


def test_roex_weight_hand_value():
    # (1 + 3) * exp(-3)
    assert roex_weight(0.1, 30.0) == pytest.approx(4.0 * np.exp(-3.0), rel=1e-12)
    assert roex_weight(0.1, 30.0) == pytest.approx(0.19915, abs=5e-6)


def test_roex_weight_monotone_decreasing():
    assert roex_weight(0.2, 30.0) < roex_weight(0.1, 30.0)


@given(
    g1=st.floats(min_value=0.0, max_value=5.0),
    dg=st.floats(min_value=1e-6, max_value=5.0),
    p=st.floats(min_value=0.1, max_value=500.0),
)
@settings(max_examples=200, deadline=None)
def test_roex_weight_strictly_decreasing_property(g1, dg, p):
    # restrict to where exp(-p*g) stays above the underflow plateau
    assume(p * (g1 + dg) < 600.0)
    assert roex_weight(g1 + dg, p) < roex_weight(g1, p)


def test_roex_weight_domain():
    with pytest.raises(ValueError):
        roex_weight(-0.1, 10.0)
    with pytest.raises(ValueError):
        roex_weight(0.1, 0.0)


# --- filter sharpness ------------------------------------------------------


def test_filter_sharpness_hand_values():
    assert filter_sharpness(1000.0, 1.0) == pytest.approx(30.1570, abs=1e-3)
    assert filter_sharpness(1000.0, 2.0) == pytest.approx(15.0785, abs=1e-3)


def test_filter_sharpness_flattens_with_r():
    assert filter_sharpness(1000.0, 1e9) < 1e-6


@given(
    f_c=st.floats(min_value=20.0, max_value=20000.0),
    r=st.floats(min_value=1.0, max_value=50.0),
)
@settings(max_examples=200, deadline=None)
def test_filter_sharpness_scales_inverse_r(f_c, r):
    assert filter_sharpness(f_c, r) * r == pytest.approx(filter_sharpness(f_c, 1.0), rel=1e-12)


def test_filter_sharpness_domain():
    with pytest.raises(ValueError):
        filter_sharpness(0.0, 1.0)
    with pytest.raises(ValueError):
        filter_sharpness(-100.0, 1.0)


# --- STFT / ISTFT ----------------------------------------------------------


def test_stft_shape_and_bins():
    cfg = StftConfig()
    buf = AudioBuffer(np.random.default_rng(0).standard_normal(5000) * 0.1, RATE)
    spec = stft(buf, cfg)
    assert spec.shape[1] == cfg.frame_len // 2 + 1


def test_stft_impulse_at_frame_centre_is_flat():
    cfg = StftConfig()
    x = np.zeros(2048)
    # with centre padding, frame 1 is centred on sample hop (=256)
    x[cfg.hop] = 1.0
    spec = stft(AudioBuffer(x, RATE), cfg)
    mags = np.abs(spec[1])
    assert mags.max() == pytest.approx(mags.min(), rel=1e-9)
    assert mags.max() == pytest.approx(cfg.window_array()[cfg.frame_len // 2], rel=1e-9)


def test_stft_sine_concentrates_at_bin():
    cfg = StftConfig()
    f_bin = 32  # 32 * 31.25 = 1000 Hz exactly
    t = np.arange(RATE) / RATE
    spec = stft(AudioBuffer(0.5 * np.sin(2 * np.pi * 1000.0 * t), RATE), cfg)
    interior = np.abs(spec[5:-5])
    assert np.all(interior.argmax(axis=1) == f_bin)


def test_stft_short_buffer_padded_not_rejected():
    cfg = StftConfig()
    spec = stft(AudioBuffer(np.ones(10) * 0.1, RATE), cfg)
    assert spec.shape[0] >= 1


def test_stft_linear_in_input():
    cfg = StftConfig()
    rng = np.random.default_rng(1)
    a = rng.standard_normal(3000)
    b = rng.standard_normal(3000)
    sa = stft(AudioBuffer(a, RATE), cfg)
    sb = stft(AudioBuffer(b, RATE), cfg)
    sab = stft(AudioBuffer(0.25 * a + 2.0 * b, RATE), cfg)
    assert np.allclose(sab, 0.25 * sa + 2.0 * sb, atol=1e-9)


@pytest.mark.parametrize("n", [100, 511, 512, 513, 5000, 16000])
def test_istft_round_trip(n):
    cfg = StftConfig()
    x = np.random.default_rng(n).standard_normal(n) * 0.3
    buf = AudioBuffer(x, RATE)
    back = istft(stft(buf, cfg), cfg, n, RATE)
    assert len(back) == n
    assert snr_db(x, back.samples) >= 60.0


def test_istft_zero_spectrogram_gives_silence():
    cfg = StftConfig()
    out = istft(np.zeros((7, cfg.n_bins), dtype=complex), cfg, 1000, RATE)
    assert np.array_equal(out.samples, np.zeros(1000))


def test_istft_single_frame():
    cfg = StftConfig()
    x = np.random.default_rng(5).standard_normal(cfg.hop) * 0.1
    spec = stft(AudioBuffer(x, RATE), cfg)
    back = istft(spec, cfg, len(x), RATE)
    assert snr_db(x, back.samples) >= 60.0


def test_istft_rejects_bad_dims():
    cfg = StftConfig()
    with pytest.raises(ValueError, match="inconsistent"):
        istft(np.zeros((4, 100), dtype=complex), cfg, 500, RATE)


def test_stft_config_validation():
    with pytest.raises(ValueError, match="divide"):
        StftConfig(frame_len=512, hop=300)
    with pytest.raises(ValueError):
        StftConfig(frame_len=0, hop=1)
    # boxcar at 50% overlap tiles to a constant, so it passes COLA
    StftConfig(frame_len=512, hop=256, window="boxcar")
    # blackman at 50% overlap leaves a cosine ripple, so it must be rejected
    with pytest.raises(ValueError, match="COLA"):
        StftConfig(frame_len=512, hop=256, window="blackman")


def test_istft_pads_when_out_len_exceeds_frames():
    cfg = StftConfig()
    spec = stft(AudioBuffer(np.ones(600) * 0.1, RATE), cfg)
    out = istft(spec, cfg, 5000, RATE)
    assert len(out) == 5000
    assert np.array_equal(out.samples[-1000:], np.zeros(1000))


# --- auditory and smearing matrices ----------------------------------------


def bin_freqs_for(n_bins, rate=RATE, frame_len=512):
    return np.arange(n_bins) * (rate / frame_len)


def test_auditory_matrix_diagonal_before_calibration():
    freqs = np.array([500.0, 1000.0, 2000.0])
    mat = build_auditory_matrix(freqs, 1.0, 1.0)
    for i, f_c in enumerate(freqs):
        divisor = (0.00437 * f_c + 1.0) * 1.0
        assert mat.weights[i, i] * divisor == pytest.approx(1.0, rel=1e-12)


def test_auditory_matrix_calibration_divisor_value():
    # at 1 kHz with r_l = r_u = 1 the divisor is 5.37
    assert (0.00437 * 1000.0 + 1.0) * (1.0 + 1.0) / 2.0 == pytest.approx(5.37)
    mat = build_auditory_matrix(np.array([500.0, 1000.0, 2000.0]), 1.0, 1.0)
    assert mat.weights[1, 1] == pytest.approx(1.0 / 5.37, rel=1e-12)


def test_auditory_matrix_identity_rows_below_50hz():
    freqs = bin_freqs_for(257)
    mat = build_auditory_matrix(freqs, 1.6, 2.4)
    assert np.array_equal(mat.weights[0], np.eye(257)[0])  # DC
    assert np.array_equal(mat.weights[1], np.eye(257)[1])  # 31.25 Hz
    assert not np.array_equal(mat.weights[2], np.eye(257)[2])  # 62.5 Hz


def test_auditory_matrix_deterministic():
    freqs = bin_freqs_for(129)
    a = build_auditory_matrix(freqs, 1.0, 1.0)
    b = build_auditory_matrix(freqs, 1.0, 1.0)
    assert np.array_equal(a.weights, b.weights)


def test_auditory_matrix_entries_nonnegative():
    mat = build_auditory_matrix(bin_freqs_for(257), 2.0, 4.0)
    assert np.all(mat.weights >= 0)


def test_auditory_matrix_rejects_bad_factors():
    with pytest.raises(ValueError):
        build_auditory_matrix(bin_freqs_for(16), 2.0, 1.5)


def test_smearing_matrix_identity_case():
    freqs = bin_freqs_for(257)
    a_n = build_auditory_matrix(freqs, 1.0, 1.0)
    a_s = build_smearing_matrix(a_n, a_n)
    assert np.abs(a_s.weights - np.eye(257)).max() <= 1e-4


def test_smearing_matrix_small_oracle_matches_dense_inverse():
    freqs = np.array([500.0, 1000.0, 2000.0, 4000.0])
    a_n = build_auditory_matrix(freqs, 1.0, 1.0)
    a_w = build_auditory_matrix(freqs, 1.6, 2.4)
    a_s = build_smearing_matrix(a_n, a_w)
    oracle = np.linalg.inv(a_n.weights) @ a_w.weights
    assert np.abs(a_s.weights - oracle).max() <= 1e-6


def test_smearing_matrix_dimension_mismatch():
    a = build_auditory_matrix(np.array([500.0, 1000.0]), 1.0, 1.0)
    b = build_auditory_matrix(np.array([500.0, 1000.0, 2000.0]), 1.0, 1.0)
    with pytest.raises(ValueError, match="mismatch"):
        build_smearing_matrix(a, b)


def row_entropy(weights):
    mags = np.abs(weights)
    probs = mags / mags.sum(axis=1, keepdims=True)
    return -(probs * np.log(probs + 1e-30)).sum(axis=1)


def test_severe_smearing_spreads_more_than_mild():
    # brute-force comparison on a small hand-built grid
    freqs = np.linspace(200.0, 6000.0, 16)
    a_n = build_auditory_matrix(freqs, 1.0, 1.0)
    mild = build_smearing_matrix(a_n, build_auditory_matrix(freqs, 1.1, 1.6))
    severe = build_smearing_matrix(a_n, build_auditory_matrix(freqs, 2.0, 4.0))
    assert row_entropy(severe.weights).mean() > row_entropy(mild.weights).mean()


def test_smearing_matrix_cache_returns_same_object():
    p = SmearingParams(1.23, 1.77)
    first = smearing_matrix_for(p, 257, RATE)
    second = smearing_matrix_for(p, 257, RATE)
    assert first is second


def test_smearing_matrix_cache_concurrent_access():
    from concurrent.futures import ThreadPoolExecutor

    p = SmearingParams(1.31, 2.11)
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda _: smearing_matrix_for(p, 129, RATE), range(32)))
    assert all(np.array_equal(r.weights, results[0].weights) for r in results)


# --- full pipeline ---------------------------------------------------------


def test_identity_smearing_is_transparent(speech_5s):
    buf, _ = speech_5s
    out = apply_spectral_smearing(buf, SmearingParams(1.0, 1.0))
    assert len(out) == len(buf)
    assert snr_db(buf.samples, out.samples) >= 40.0


def test_smearing_silence_to_silence():
    out = apply_spectral_smearing(AudioBuffer(np.zeros(4000), RATE), SmearingParams(2.0, 4.0))
    assert np.array_equal(out.samples, np.zeros(4000))


@pytest.mark.parametrize("n", [100, 1000, 7777])
def test_smearing_preserves_length(n):
    x, _ = synth_speech(1.0, RATE, seed=n)
    out = apply_spectral_smearing(AudioBuffer(x[:n], RATE), SmearingParams(1.5, 2.0))
    assert len(out) == n


def test_smearing_energy_within_6db(speech_5s):
    buf, _ = speech_5s
    for params in (SmearingParams(1.1, 1.6), SmearingParams(1.6, 2.4), SmearingParams(2.0, 4.0)):
        out = apply_spectral_smearing(buf, params)
        ratio = 10 * np.log10(np.sum(out.samples**2) / np.sum(buf.samples**2))
        assert abs(ratio) <= 6.0


def test_smearing_deterministic(speech_5s):
    buf, _ = speech_5s
    a = apply_spectral_smearing(buf, SmearingParams(1.7, 2.9))
    b = apply_spectral_smearing(buf, SmearingParams(1.7, 2.9))
    assert np.array_equal(a.samples, b.samples)


def test_smearing_params_validation():
    with pytest.raises(ValueError):
        SmearingParams(0.9, 1.5)
    with pytest.raises(ValueError):
        SmearingParams(1.5, 1.2)


def test_smearing_empty_buffer_passthrough():
    out = apply_spectral_smearing(AudioBuffer(np.zeros(0), RATE), SmearingParams(1.5, 2.0))
    assert len(out) == 0


def test_matrix_csv_dump(tmp_path):
    from hearaug.smearing import matrix_to_csv

    mat = build_auditory_matrix(np.array([500.0, 1000.0]), 1.0, 1.0)
    matrix_to_csv(mat, tmp_path / "m.csv")
    loaded = np.loadtxt(tmp_path / "m.csv", delimiter=",")
    assert np.allclose(loaded, mat.weights)
