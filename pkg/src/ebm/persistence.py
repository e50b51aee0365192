"""Versioned binary save/load for every model kind.

Container layout, fixed little-endian:

    bytes 0..4   magic "EBML" plus one ASCII version digit ("EBML1")
    bytes 5..8   header length, unsigned 32-bit
    header       canonical JSON (sorted keys, no whitespace), UTF-8
    payload      tensors as 64-bit little-endian floats, row-major,
                 concatenated at the offsets given by the header manifest

The header carries the model kind, hyperparameters, rng states, training
history and the tensor manifest (name, shape, byte offset, byte count).
Momentum buffers are stored alongside the weights so a loaded model is
state-identical to the saved one. Per-epoch wall times are deliberately
not persisted: they are ephemeral measurements, and omitting them keeps
model files for identical seeded runs byte-identical. Files are written to
a temporary sibling and renamed into place, so a crash never leaves a
partial file at the target path.
"""

import json
import os
import tempfile

import numpy as np

from .dbn import Dbn, SoftmaxHead
from .errors import FormatError, UnsupportedVersionError
from .math import Rng
from .metrics import TrainingHistory
from .rbm import Rbm, RbmConfig
from .variants import DropoutRbm, GaussianRbm, SigmoidRbm

MAGIC = b"EBML"
VERSION = b"1"

_RBM_CLASSES = {
    "rbm": Rbm,
    "dropout-rbm": DropoutRbm,
    "gaussian-rbm": GaussianRbm,
    "sigmoid-rbm": SigmoidRbm,
}

_RBM_TENSORS = ("W", "a", "b", "velocity_W", "velocity_a", "velocity_b")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes to a temporary sibling, fsync, then rename over path."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=os.path.basename(path) + ".", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_dict(config: RbmConfig) -> dict:
    return {
        "n_visible": config.n_visible,
        "n_hidden": config.n_hidden,
        "steps": config.steps,
        "learning_rate": config.learning_rate,
        "momentum": config.momentum,
        "decay": config.decay,
        "temperature": config.temperature,
        "seed": config.seed,
    }


def _history_dict(history: TrainingHistory) -> dict:
    return {
        "epochs": [[r.epoch_index, r.mse, r.pl] for r in history.epochs],
        "fine_tune": [[r.epoch_index, r.cross_entropy, r.accuracy]
                      for r in history.fine_tune_epochs],
    }


def _history_from_dict(d: dict) -> TrainingHistory:
    history = TrainingHistory()
    for index, mse_value, pl_value in d.get("epochs", ()):
        record = history.append_epoch(mse_value, pl_value, 0)
        if record.epoch_index != index:
            raise FormatError("history epoch indices are not contiguous")
    for index, ce, acc in d.get("fine_tune", ()):
        record = history.append_fine_tune(ce, acc)
        if record.epoch_index != index:
            raise FormatError("fine-tune epoch indices are not contiguous")
    return history


class _PayloadBuilder:
    def __init__(self):
        self.manifest = []
        self.chunks = []
        self.offset = 0

    def add(self, name: str, array: np.ndarray) -> None:
        data = np.ascontiguousarray(array, dtype="<f8").tobytes()
        self.manifest.append({
            "name": name,
            "shape": list(array.shape),
            "offset": self.offset,
            "nbytes": len(data),
        })
        self.chunks.append(data)
        self.offset += len(data)


def _rbm_header_and_payload(model: Rbm):
    builder = _PayloadBuilder()
    for name in _RBM_TENSORS:
        builder.add(name, getattr(model, name))
    header = {
        "kind": model.kind,
        "config": _config_dict(model.config),
        "rng_state": model.rng.state,
        "history": _history_dict(model.history),
    }
    if isinstance(model, DropoutRbm):
        header["drop_rate"] = model.drop_rate
        header["inference_scaled"] = model.inference_scaled
        header["mask_rng_state"] = model.mask_rng.state
    if isinstance(model, GaussianRbm):
        builder.add("feature_mean", model.feature_mean)
        builder.add("feature_std", model.feature_std)
    return header, builder


def _dbn_header_and_payload(model: Dbn):
    builder = _PayloadBuilder()
    layers = []
    for i, layer in enumerate(model.layers):
        for name in _RBM_TENSORS:
            builder.add(f"layer{i}/{name}", getattr(layer, name))
        layers.append({
            "config": _config_dict(layer.config),
            "rng_state": layer.rng.state,
            "history": _history_dict(layer.history),
        })
    header = {
        "kind": model.kind,
        "seed": model.seed,
        "pretrained": model.pretrained,
        "layers": layers,
        "history": _history_dict(model.history),
        "head": None,
    }
    if model.head is not None:
        builder.add("head/U", model.head.U)
        builder.add("head/c", model.head.c)
        header["head"] = {
            "num_classes": model.head.num_classes,
            "learning_rate": model.head.learning_rate,
            "rng_state": model.head.rng.state,
        }
    return header, builder


def save(model, path) -> None:
    """Serialize any supported model (with history and rng state) to path."""
    if isinstance(model, Dbn):
        header, builder = _dbn_header_and_payload(model)
    elif isinstance(model, Rbm):
        header, builder = _rbm_header_and_payload(model)
    else:
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    header["tensors"] = builder.manifest
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    blob = b"".join([
        MAGIC, VERSION,
        len(header_bytes).to_bytes(4, "little"),
        header_bytes,
        b"".join(builder.chunks),
    ])
    atomic_write_bytes(path, blob)


class _TensorReader:
    def __init__(self, manifest, payload: bytes):
        self.payload = payload
        self.by_name = {}
        end = 0
        for entry in sorted(manifest, key=lambda e: e["offset"]):
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["offset"])
            nbytes = int(entry["nbytes"])
            count = int(np.prod(shape)) if shape else 1
            if nbytes != count * 8:
                raise FormatError(
                    f"tensor {entry['name']}: {nbytes} bytes for shape {shape}"
                )
            if offset < end:
                raise FormatError(f"tensor {entry['name']}: overlapping offset")
            if offset + nbytes > len(payload):
                raise FormatError(f"tensor {entry['name']}: exceeds payload")
            end = offset + nbytes
            self.by_name[entry["name"]] = (shape, offset, count)
        if end != len(payload):
            raise FormatError(
                f"payload is {len(payload)} bytes, manifest covers {end}"
            )

    def read(self, name: str, expected_shape) -> np.ndarray:
        if name not in self.by_name:
            raise FormatError(f"missing tensor {name!r}")
        shape, offset, count = self.by_name[name]
        if tuple(expected_shape) != shape:
            raise FormatError(
                f"tensor {name!r} has shape {shape}, expected {tuple(expected_shape)}"
            )
        arr = np.frombuffer(self.payload, dtype="<f8", count=count, offset=offset)
        return arr.astype(np.float64).reshape(shape)


def _restore_rbm_tensors(model: Rbm, reader: _TensorReader, prefix: str = "") -> None:
    m, n = model.config.n_visible, model.config.n_hidden
    shapes = {
        "W": (m, n), "velocity_W": (m, n),
        "a": (m,), "velocity_a": (m,),
        "b": (n,), "velocity_b": (n,),
    }
    for name in _RBM_TENSORS:
        setattr(model, name, reader.read(prefix + name, shapes[name]))


def _load_rbm(kind: str, header: dict, reader: _TensorReader):
    try:
        config = RbmConfig(**header["config"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad config: {exc}") from exc
    if kind == "dropout-rbm":
        model = DropoutRbm(config, float(header["drop_rate"]))
        model.inference_scaled = bool(header["inference_scaled"])
        model.mask_rng.state = int(header["mask_rng_state"])
    else:
        model = _RBM_CLASSES[kind](config)
    _restore_rbm_tensors(model, reader)
    if kind == "gaussian-rbm":
        m = config.n_visible
        model.feature_mean = reader.read("feature_mean", (m,))
        model.feature_std = reader.read("feature_std", (m,))
    model.rng.state = int(header["rng_state"])
    model.history = _history_from_dict(header["history"])
    return model


def _load_dbn(header: dict, reader: _TensorReader) -> Dbn:
    layer_entries = header["layers"]
    if not layer_entries:
        raise FormatError("DBN container has no layers")
    configs = []
    for entry in layer_entries:
        try:
            configs.append(RbmConfig(**entry["config"]))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad layer config: {exc}") from exc
    sizes = [configs[0].n_visible] + [c.n_hidden for c in configs]
    for i in range(1, len(configs)):
        if configs[i].n_visible != configs[i - 1].n_hidden:
            raise FormatError("layer dimensions do not chain")
    first = configs[0]
    model = Dbn(sizes, steps=first.steps, learning_rate=first.learning_rate,
                momentum=first.momentum, decay=first.decay,
                temperature=first.temperature, seed=int(header["seed"]))
    model.pretrained = bool(header["pretrained"])
    model.history = _history_from_dict(header["history"])
    for i, (layer, entry, config) in enumerate(
            zip(model.layers, layer_entries, configs)):
        layer.config = config
        _restore_rbm_tensors(layer, reader, prefix=f"layer{i}/")
        layer.rng.state = int(entry["rng_state"])
        layer.history = _history_from_dict(entry["history"])
    head_entry = header.get("head")
    if head_entry is not None:
        head = SoftmaxHead(model.top_hidden, int(head_entry["num_classes"]),
                           float(head_entry["learning_rate"]),
                           Rng(int(head_entry["rng_state"])))
        head.rng.state = int(head_entry["rng_state"])
        head.U = reader.read("head/U", (model.top_hidden, head.num_classes))
        head.c = reader.read("head/c", (head.num_classes,))
        model.head = head
    return model


def load(path):
    """Load a model container; returns the model kind stored in the header."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 9 or buf[:4] != MAGIC:
        raise FormatError(f"{path}: not a model container")
    if buf[4:5] != VERSION:
        raise UnsupportedVersionError(
            f"{path}: container version {buf[4:5]!r} is not supported"
        )
    header_len = int.from_bytes(buf[5:9], "little")
    if 9 + header_len > len(buf):
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(buf[9:9 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    payload = buf[9 + header_len:]
    try:
        reader = _TensorReader(header["tensors"], payload)
        kind = header["kind"]
        if kind == "dbn":
            return _load_dbn(header, reader)
        if kind in _RBM_CLASSES:
            return _load_rbm(kind, header, reader)
    except KeyError as exc:
        raise FormatError(f"{path}: header is missing {exc}") from exc
    raise UnsupportedVersionError(f"{path}: unknown model kind {kind!r}")
