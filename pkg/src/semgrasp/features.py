"""Record -> normalized log-power feature vectors, plus the CSV dump format.

Each channel of a record is fitted with an AR model, its spectral density is
sampled on a fixed frequency grid, and the values are log10-compressed (PSD
magnitudes span several decades, and a linear scale would let low-frequency
power drown everything else). Z-score statistics are fitted on training
records only and applied everywhere else.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .burg import burg_fit, psd_from_model
from .dataset import LABEL_TO_INDEX, EmgRecord
from .errors import DataError, DegenerateSignalError

STD_FLOOR = 1e-8


@dataclass
class FeatureConfig:
    ar_order: int = 10
    nbins: int = 128
    log_floor: float = 1e-12
    normalization: str = "zscore"  # zscore | none

    def __post_init__(self):
        if self.ar_order < 1:
            raise ValueError(f"ar_order must be >= 1, got {self.ar_order}")
        if self.nbins < 8:
            raise ValueError(f"nbins must be >= 8, got {self.nbins}")
        if not self.log_floor > 0:
            raise ValueError(f"log_floor must be positive, got {self.log_floor}")
        if self.normalization not in ("zscore", "none"):
            raise ValueError(f"normalization must be 'zscore' or 'none', got {self.normalization!r}")


@dataclass
class FeatureVector:
    channel1_features: np.ndarray
    channel2_features: np.ndarray
    label: str


@dataclass
class Normalizer:
    """Per-feature z-score statistics for both channels; stds are floored."""

    mean1: np.ndarray
    std1: np.ndarray
    mean2: np.ndarray
    std2: np.ndarray
    fitted_on: str = ""


def extract_features(record: EmgRecord, cfg: FeatureConfig) -> FeatureVector:
    """Per channel: AR fit -> spectral density -> log10 with a positive floor."""
    if record.n_samples <= cfg.ar_order + 1:
        raise DataError(
            f"record has {record.n_samples} samples; need > ar_order + 1 = {cfg.ar_order + 1}"
        )
    feats = []
    for name, channel in (("channel1", record.channel1), ("channel2", record.channel2)):
        try:
            model = burg_fit(channel, cfg.ar_order, record.sample_rate)
        except DegenerateSignalError as e:
            raise DegenerateSignalError(
                f"{name} of record (label={record.label}, subject={record.subject_id}, "
                f"session={record.session_id}): {e}"
            ) from e
        psd = psd_from_model(model, cfg.nbins)
        feats.append(np.log10(np.maximum(psd.power, cfg.log_floor)))
    return FeatureVector(channel1_features=feats[0], channel2_features=feats[1], label=record.label)


def fit_normalizer(features: list[FeatureVector], fitted_on: str = "") -> Normalizer:
    """Per-feature mean and population std over the list, std floored at 1e-8."""
    if not features:
        raise DataError("cannot fit a normalizer on an empty feature list")
    m1 = np.stack([f.channel1_features for f in features])
    m2 = np.stack([f.channel2_features for f in features])
    return Normalizer(
        mean1=m1.mean(axis=0),
        std1=np.maximum(m1.std(axis=0), STD_FLOOR),
        mean2=m2.mean(axis=0),
        std2=np.maximum(m2.std(axis=0), STD_FLOOR),
        fitted_on=fitted_on,
    )


def apply_normalizer(norm: Normalizer, fv: FeatureVector) -> FeatureVector:
    if len(fv.channel1_features) != len(norm.mean1) or len(fv.channel2_features) != len(
        norm.mean2
    ):
        raise DataError(
            f"feature dimension mismatch: normalizer expects "
            f"{len(norm.mean1)}/{len(norm.mean2)}, got "
            f"{len(fv.channel1_features)}/{len(fv.channel2_features)}"
        )
    return FeatureVector(
        channel1_features=(fv.channel1_features - norm.mean1) / norm.std1,
        channel2_features=(fv.channel2_features - norm.mean2) / norm.std2,
        label=fv.label,
    )


def extract_all(records: list[EmgRecord], cfg: FeatureConfig) -> list[FeatureVector]:
    return [extract_features(r, cfg) for r in records]


def _fmt(x: float) -> str:
    return repr(float(x))


def save_features_csv(path: str | Path, features: list[FeatureVector]) -> None:
    """Write features as CSV: label,ch1_f0..ch1_f{n-1},ch2_f0..ch2_f{n-1}."""
    if not features:
        raise DataError("no features to write")
    nbins = len(features[0].channel1_features)
    header = (
        ["label"]
        + [f"ch1_f{i}" for i in range(nbins)]
        + [f"ch2_f{i}" for i in range(nbins)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for fv in features:
            writer.writerow(
                [fv.label]
                + [_fmt(v) for v in fv.channel1_features]
                + [_fmt(v) for v in fv.channel2_features]
            )


def load_features_csv(path: str | Path) -> list[FeatureVector]:
    """Load a feature dump written by save_features_csv."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}:1: empty feature file") from None
        if not header or header[0] != "label" or (len(header) - 1) % 2 != 0:
            raise DataError(f"{path}:1: malformed feature header")
        nbins = (len(header) - 1) // 2
        expected = (
            ["label"]
            + [f"ch1_f{i}" for i in range(nbins)]
            + [f"ch2_f{i}" for i in range(nbins)]
        )
        if header != expected:
            raise DataError(f"{path}:1: feature header does not match the dump schema")
        out: list[FeatureVector] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DataError(f"{path}:{lineno}: expected {len(expected)} columns, got {len(row)}")
            label = row[0]
            if label not in LABEL_TO_INDEX:
                raise DataError(f"{path}:{lineno}: unknown label {label!r}")
            try:
                vals = np.array([float(v) for v in row[1:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed feature value") from None
            if not np.isfinite(vals).all():
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            out.append(
                FeatureVector(
                    channel1_features=vals[:nbins],
                    channel2_features=vals[nbins:],
                    label=label,
                )
            )
    if not out:
        raise DataError(f"{path}: no feature rows found")
    return out


def save_normalizer_csv(path: str | Path, norm: Normalizer) -> None:
    """Write normalizer statistics as CSV: channel,index,mean,std."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "index", "mean", "std"])
        for ch, (mean, std) in enumerate(((norm.mean1, norm.std1), (norm.mean2, norm.std2)), 1):
            for i, (m, s) in enumerate(zip(mean, std)):
                writer.writerow([ch, i, _fmt(m), _fmt(s)])


def load_normalizer_csv(path: str | Path, fitted_on: str = "") -> Normalizer:
    path = Path(path)
    cols: dict[int, dict[int, tuple[float, float]]] = {1: {}, 2: {}}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["channel", "index", "mean", "std"]:
            raise DataError(f"{path}:1: malformed normalizer header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ch, i, m, s = int(row[0]), int(row[1]), float(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed normalizer row") from None
            if ch not in (1, 2) or not (math.isfinite(m) and math.isfinite(s)):
                raise DataError(f"{path}:{lineno}: bad normalizer entry")
            cols[ch][i] = (m, s)
    if not cols[1] or sorted(cols[1]) != list(range(len(cols[1]))) or sorted(cols[2]) != list(
        range(len(cols[2]))
    ):
        raise DataError(f"{path}: incomplete normalizer table")
    mean1 = np.array([cols[1][i][0] for i in range(len(cols[1]))])
    std1 = np.array([cols[1][i][1] for i in range(len(cols[1]))])
    mean2 = np.array([cols[2][i][0] for i in range(len(cols[2]))])
    std2 = np.array([cols[2][i][1] for i in range(len(cols[2]))])
    return Normalizer(mean1=mean1, std1=std1, mean2=mean2, std2=std2, fitted_on=fitted_on)
