import numpy as np
import pytest

from helpers import make_record, sinusoid

from semgrasp.dataset import LABELS
from semgrasp.errors import DataError, DegenerateSignalError
from semgrasp.features import (
    FeatureConfig,
    FeatureVector,
    Normalizer,
    apply_normalizer,
    extract_features,
    fit_normalizer,
    load_features_csv,
    load_normalizer_csv,
    save_features_csv,
    save_normalizer_csv,
)


def _fv(v1, v2, label="C"):
    return FeatureVector(np.asarray(v1, float), np.asarray(v2, float), label)


# ---------------------------------------------------------------- extraction


def test_extract_shape_and_finiteness(synth_dataset):
    fv = extract_features(synth_dataset.records[0], FeatureConfig())
    assert len(fv.channel1_features) == 128
    assert len(fv.channel2_features) == 128
    assert np.isfinite(fv.channel1_features).all()
    assert np.isfinite(fv.channel2_features).all()
    assert fv.label == synth_dataset.records[0].label


def test_extract_identical_channels_identical_features(rng):
    x = rng.standard_normal(256)
    fv = extract_features(make_record(x, x), FeatureConfig(nbins=32))
    np.testing.assert_array_equal(fv.channel1_features, fv.channel2_features)


def test_extract_is_bit_reproducible(synth_dataset):
    cfg = FeatureConfig(nbins=64)
    a = extract_features(synth_dataset.records[3], cfg)
    b = extract_features(synth_dataset.records[3], cfg)
    np.testing.assert_array_equal(a.channel1_features, b.channel1_features)
    np.testing.assert_array_equal(a.channel2_features, b.channel2_features)


def test_extract_dominant_100hz_peaks_at_nearest_bin(rng):
    ch1 = sinusoid(100.0, 1024, noise=0.05, seed=0)
    ch2 = rng.standard_normal(1024)
    fv = extract_features(make_record(ch1, ch2), FeatureConfig())
    freqs = np.linspace(0.0, 250.0, 128)
    assert int(np.argmax(fv.channel1_features)) == int(np.abs(freqs - 100.0).argmin())


def test_extract_rejects_short_and_degenerate_records():
    with pytest.raises(DataError, match="samples"):
        extract_features(make_record(np.arange(8.0), np.arange(8.0)), FeatureConfig())
    rec = make_record(np.full(128, 2.0), np.arange(128.0), label="T", subject="s9")
    with pytest.raises(DegenerateSignalError, match="channel1.*subject=s9"):
        extract_features(rec, FeatureConfig(nbins=16))


def test_feature_config_validation():
    with pytest.raises(ValueError):
        FeatureConfig(ar_order=0)
    with pytest.raises(ValueError):
        FeatureConfig(nbins=4)
    with pytest.raises(ValueError):
        FeatureConfig(log_floor=0.0)
    with pytest.raises(ValueError):
        FeatureConfig(normalization="minmax")


# --------------------------------------------------------------- normalizer


def test_fit_single_vector_floors_std(rng):
    v = _fv(rng.standard_normal(8), rng.standard_normal(8))
    norm = fit_normalizer([v])
    np.testing.assert_array_equal(norm.mean1, v.channel1_features)
    np.testing.assert_array_equal(norm.mean2, v.channel2_features)
    assert np.all(norm.std1 == 1e-8)
    assert np.all(norm.std2 == 1e-8)


def test_fit_symmetric_pair_means_zero(rng):
    v = rng.standard_normal(8)
    w = rng.standard_normal(8)
    norm = fit_normalizer([_fv(v, w), _fv(-v, -w)])
    np.testing.assert_allclose(norm.mean1, 0.0, atol=1e-15)
    np.testing.assert_allclose(norm.mean2, 0.0, atol=1e-15)


def test_fit_and_reapply_standardizes(rng):
    feats = [_fv(rng.standard_normal(16), rng.standard_normal(16)) for _ in range(100)]
    norm = fit_normalizer(feats)
    normalized = [apply_normalizer(norm, f) for f in feats]
    m1 = np.stack([f.channel1_features for f in normalized])
    m2 = np.stack([f.channel2_features for f in normalized])
    for m in (m1, m2):
        assert np.abs(m.mean(axis=0)).max() < 1e-9
        assert np.abs(m.std(axis=0) - 1.0).max() < 1e-6


def test_fit_requires_nonempty_list():
    with pytest.raises(DataError):
        fit_normalizer([])


def test_fit_is_bit_reproducible(synth_features):
    a = fit_normalizer(synth_features[:40])
    b = fit_normalizer(synth_features[:40])
    np.testing.assert_array_equal(a.mean1, b.mean1)
    np.testing.assert_array_equal(a.std1, b.std1)
    np.testing.assert_array_equal(a.mean2, b.mean2)
    np.testing.assert_array_equal(a.std2, b.std2)


def test_apply_centering_and_identity(rng):
    v = rng.standard_normal(8)
    w = rng.standard_normal(8)
    norm = Normalizer(mean1=v, std1=np.ones(8), mean2=w, std2=np.ones(8))
    out = apply_normalizer(norm, _fv(v, w))
    np.testing.assert_array_equal(out.channel1_features, np.zeros(8))
    np.testing.assert_array_equal(out.channel2_features, np.zeros(8))
    ident = Normalizer(mean1=np.zeros(8), std1=np.ones(8), mean2=np.zeros(8), std2=np.ones(8))
    same = apply_normalizer(ident, _fv(v, w))
    np.testing.assert_array_equal(same.channel1_features, v)
    np.testing.assert_array_equal(same.channel2_features, w)
    assert same.label == "C"


def test_apply_round_trip_inverse(rng):
    feats = [_fv(rng.standard_normal(8) * 3 + 1, rng.standard_normal(8) - 2) for _ in range(20)]
    norm = fit_normalizer(feats)
    f = feats[7]
    z = apply_normalizer(norm, f)
    back1 = z.channel1_features * norm.std1 + norm.mean1
    back2 = z.channel2_features * norm.std2 + norm.mean2
    np.testing.assert_allclose(back1, f.channel1_features, rtol=1e-12)
    np.testing.assert_allclose(back2, f.channel2_features, rtol=1e-12)


def test_apply_dimension_mismatch(rng):
    norm = fit_normalizer([_fv(rng.standard_normal(8), rng.standard_normal(8))])
    with pytest.raises(DataError, match="dimension mismatch"):
        apply_normalizer(norm, _fv(np.zeros(9), np.zeros(9)))


def test_class_separation_in_normalized_space(synth_features):
    norm = fit_normalizer(synth_features)
    normalized = [apply_normalizer(norm, f) for f in synth_features]

    def stack(f):
        return np.concatenate([f.channel1_features, f.channel2_features])

    centroids = {
        lab: np.mean([stack(f) for f in normalized if f.label == lab], axis=0)
        for lab in LABELS
    }
    intra = np.mean([np.linalg.norm(stack(f) - centroids[f.label]) for f in normalized])
    inter = np.mean(
        [np.linalg.norm(centroids[a] - centroids[b]) for a in LABELS for b in LABELS if a < b]
    )
    assert inter / intra > 1.5


# ----------------------------------------------------------------- CSV dumps


def test_features_csv_round_trip(tmp_path, synth_features):
    path = tmp_path / "features.csv"
    save_features_csv(path, synth_features[:10])
    loaded = load_features_csv(path)
    assert len(loaded) == 10
    for orig, back in zip(synth_features[:10], loaded):
        assert orig.label == back.label
        np.testing.assert_array_equal(orig.channel1_features, back.channel1_features)
        np.testing.assert_array_equal(orig.channel2_features, back.channel2_features)


def test_features_csv_schema_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("label,ch1_f0,ch2_f1\nC,1.0,2.0\n")
    with pytest.raises(DataError, match="schema"):
        load_features_csv(p)
    p.write_text("label,ch1_f0,ch2_f0\nQ,1.0,2.0\n")
    with pytest.raises(DataError, match="unknown label"):
        load_features_csv(p)
    p.write_text("label,ch1_f0,ch2_f0\nC,1.0\n")
    with pytest.raises(DataError, match="columns"):
        load_features_csv(p)
    with pytest.raises(DataError, match="not found"):
        load_features_csv(tmp_path / "missing.csv")


def test_normalizer_csv_round_trip(tmp_path, synth_features):
    norm = fit_normalizer(synth_features[:25], fitted_on="unit")
    path = tmp_path / "norm.csv"
    save_normalizer_csv(path, norm)
    back = load_normalizer_csv(path, fitted_on="unit")
    np.testing.assert_array_equal(back.mean1, norm.mean1)
    np.testing.assert_array_equal(back.std1, norm.std1)
    np.testing.assert_array_equal(back.mean2, norm.mean2)
    np.testing.assert_array_equal(back.std2, norm.std2)
