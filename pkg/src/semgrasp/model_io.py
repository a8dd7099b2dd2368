"""Versioned model bundles: one binary file reproduces inference end to end.

The bundle is a zip of numpy arrays (written through an open handle so the
file name is kept verbatim) plus one JSON metadata entry holding the format
version, network hyperparameters, feature configuration, sample rate and
normalizer bookkeeping. Arrays are stored as float64, so a reloaded model
reproduces predictions bit-exactly on the same machine.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import FeatureConfig, Normalizer
from .network import Conv1dLayer, ConvSpec, DenseLayer, NetworkSpec, NetworkState

FORMAT_VERSION = 1
_META_KEY = "__meta__"


@dataclass
class ModelBundle:
    state: NetworkState
    feature_config: FeatureConfig
    normalizer: Normalizer | None
    sample_rate: float | None
    dataset_name: str = ""


def save_model(path: str | Path, bundle: ModelBundle) -> None:
    spec = bundle.state.spec
    meta = {
        "format_version": FORMAT_VERSION,
        "network": {
            "input_bins": spec.input_bins,
            "conv_layers": [[c.filters, c.kernel, c.stride] for c in spec.conv_layers],
            "dense_units": spec.dense_units,
            "n_classes": spec.n_classes,
            "activation": spec.activation,
        },
        "feature_config": {
            "ar_order": bundle.feature_config.ar_order,
            "nbins": bundle.feature_config.nbins,
            "log_floor": bundle.feature_config.log_floor,
            "normalization": bundle.feature_config.normalization,
        },
        "sample_rate": bundle.sample_rate,
        "dataset_name": bundle.dataset_name,
        "has_normalizer": bundle.normalizer is not None,
        "normalizer_fitted_on": bundle.normalizer.fitted_on if bundle.normalizer else "",
    }
    arrays = {name: arr for name, arr in bundle.state.parameters()}
    if bundle.normalizer is not None:
        arrays["norm.mean1"] = bundle.normalizer.mean1
        arrays["norm.std1"] = bundle.normalizer.std1
        arrays["norm.mean2"] = bundle.normalizer.mean2
        arrays["norm.std2"] = bundle.normalizer.std2
    with open(path, "wb") as fh:
        np.savez(fh, **{_META_KEY: np.array(json.dumps(meta)), **arrays})


def load_model(path: str | Path) -> ModelBundle:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            if _META_KEY not in data:
                raise DataError(f"{path}: not a model bundle (missing metadata entry)")
            meta = json.loads(str(data[_META_KEY]))
            arrays = {k: data[k] for k in data.files if k != _META_KEY}
    except (zipfile.BadZipFile, ValueError, json.JSONDecodeError, io.UnsupportedOperation) as e:
        raise DataError(f"{path}: cannot read model bundle: {e}") from None

    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format version {version!r}")

    net = meta["network"]
    spec = NetworkSpec(
        input_bins=int(net["input_bins"]),
        conv_layers=[ConvSpec(int(f), int(k), int(z)) for f, k, z in net["conv_layers"]],
        dense_units=int(net["dense_units"]),
        n_classes=int(net["n_classes"]),
        activation=str(net["activation"]),
    )
    state = _state_from_arrays(spec, arrays, path)

    fc = meta["feature_config"]
    feature_config = FeatureConfig(
        ar_order=int(fc["ar_order"]),
        nbins=int(fc["nbins"]),
        log_floor=float(fc["log_floor"]),
        normalization=str(fc["normalization"]),
    )
    normalizer = None
    if meta.get("has_normalizer"):
        try:
            normalizer = Normalizer(
                mean1=arrays["norm.mean1"],
                std1=arrays["norm.std1"],
                mean2=arrays["norm.mean2"],
                std2=arrays["norm.std2"],
                fitted_on=meta.get("normalizer_fitted_on", ""),
            )
        except KeyError as e:
            raise DataError(f"{path}: bundle is missing normalizer array {e}") from None
    rate = meta.get("sample_rate")
    return ModelBundle(
        state=state,
        feature_config=feature_config,
        normalizer=normalizer,
        sample_rate=float(rate) if rate is not None else None,
        dataset_name=meta.get("dataset_name", ""),
    )


def _state_from_arrays(spec: NetworkSpec, arrays: dict, path: Path) -> NetworkState:
    def get(name):
        try:
            return np.asarray(arrays[name], dtype=np.float64)
        except KeyError:
            raise DataError(f"{path}: bundle is missing weight array {name!r}") from None

    stacks = []
    denses = []
    for ch in (1, 2):
        convs = []
        for i, cs in enumerate(spec.conv_layers):
            convs.append(
                Conv1dLayer(
                    weights=get(f"ch{ch}.conv{i}.weights"),
                    bias=get(f"ch{ch}.conv{i}.bias"),
                    stride=cs.stride,
                    activation=spec.activation,
                )
            )
        stacks.append(convs)
        denses.append(
            DenseLayer(
                weights=get(f"ch{ch}.dense.weights"),
                bias=get(f"ch{ch}.dense.bias"),
                activation=spec.activation,
            )
        )
    head = DenseLayer(weights=get("head.weights"), bias=get("head.bias"), activation="identity")
    return NetworkState(
        spec=spec, conv_stacks=(stacks[0], stacks[1]), dense_layers=(denses[0], denses[1]), head=head
    )
