"""On-disk formats. Everything the package persists goes through here.

Tensor container (``.pfds``), all integers little-endian::

    magic   4 bytes  b"PFDS"
    version u32      1
    dtype   u32      1 = float32
    rank    u32
    dims    rank x u64
    payload prod(dims) float32 values, row-major

Models are directories holding ``header.txt`` (key=value lines) and one
container per tensor. Writes go to a temporary name first and are renamed
into place.
"""
from __future__ import annotations

import os
import shutil
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ContainerFormatError
from .reduce.autoencoder import AEModel
from .reduce.pca import PCAModel
from .reduce.pipeline import PCAStage
from .reduce.scaling import ScalerModel
from .sequence import SeqModel

MAGIC = b"PFDS"
VERSION = 1
DTYPE_F32 = 1
MANIFEST_SCHEMA = "pflatent-manifest 1"
MANIFEST_COLUMNS = ("sample_id", "x0", "mobility", "kappa", "seed", "status")


# -- atomic writes ---------------------------------------------------------

def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- tensor container ------------------------------------------------------

def encode_container(array) -> bytes:
    a = np.array(array, dtype="<f4", order="C")  # ascontiguousarray promotes 0-d to 1-d
    head = struct.pack("<4sIII", MAGIC, VERSION, DTYPE_F32, a.ndim)
    dims = struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + dims + a.tobytes()


def decode_container(data: bytes) -> np.ndarray:
    if len(data) < 16:
        raise ContainerFormatError("truncated header")
    magic, version, dtype, rank = struct.unpack_from("<4sIII", data, 0)
    if magic != MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerFormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise ContainerFormatError(f"unsupported dtype code {dtype}")
    off = 16 + 8 * rank
    if len(data) < off:
        raise ContainerFormatError("truncated dims")
    dims = struct.unpack_from(f"<{rank}Q", data, 16)
    count = int(np.prod(dims, dtype=np.uint64)) if rank else 1
    if len(data) - off != 4 * count:
        raise ContainerFormatError(
            f"payload is {len(data) - off} bytes, dims {dims} need {4 * count}")
    return np.frombuffer(data, dtype="<f4", offset=off).reshape(dims).astype(np.float32)


def write_container(path, array) -> None:
    atomic_write_bytes(path, encode_container(array))


def read_container(path) -> np.ndarray:
    return decode_container(Path(path).read_bytes())


def container_dims(path) -> tuple:
    """Dims from the header only, without loading the payload."""
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16:
            raise ContainerFormatError("truncated header")
        magic, version, dtype, rank = struct.unpack("<4sIII", head)
        if magic != MAGIC or version != VERSION or dtype != DTYPE_F32:
            raise ContainerFormatError("not a version-1 float32 PFDS container")
        return struct.unpack(f"<{rank}Q", fh.read(8 * rank))


# -- key=value text --------------------------------------------------------

def format_kv(d: dict) -> str:
    return "".join(f"{k}={_kv_str(v)}\n" for k, v in d.items())


def _kv_str(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_kv_str(x) for x in v)
    return str(v)


def parse_kv(text: str, source: str = "<text>") -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{n}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        k = k.strip()
        if k in out:
            raise ValueError(f"{source}:{n}: duplicate key {k!r}")
        out[k] = v.strip()
    return out


# -- manifest --------------------------------------------------------------

def format_manifest(records, settings: dict) -> str:
    head = MANIFEST_SCHEMA + "".join(f" {k}={_kv_str(v)}" for k, v in settings.items())
    lines = [head, " ".join(MANIFEST_COLUMNS)]
    for r in records:
        p = r.params
        lines.append(f"{r.sample_id} {p.x0!r} {p.mobility!r} {p.kappa!r} {p.seed} {r.status}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str):
    """Returns (settings dict, list of row dicts)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MANIFEST_SCHEMA):
        raise ContainerFormatError("not a pflatent manifest (schema line missing)")
    settings = {}
    for tok in lines[0][len(MANIFEST_SCHEMA):].split():
        k, v = tok.split("=", 1)
        settings[k] = v
    if tuple(lines[1].split()) != MANIFEST_COLUMNS:
        raise ContainerFormatError("unexpected manifest columns")
    rows = []
    for line in lines[2:]:
        if not line.strip():
            continue
        sid, x0, m, k, seed, status = line.split()
        rows.append({"sample_id": int(sid), "x0": float(x0), "mobility": float(m),
                     "kappa": float(k), "seed": int(seed), "status": status})
    ids = [r["sample_id"] for r in rows]
    if ids != list(range(len(ids))):
        raise ContainerFormatError("manifest sample ids must be dense from 0")
    return settings, rows


def write_manifest(path, records, settings: dict) -> None:
    atomic_write_text(path, format_manifest(records, settings))


def read_manifest(path):
    return parse_manifest(Path(path).read_text())


# -- PGM / PPM -------------------------------------------------------------

def quantize(frame) -> np.ndarray:
    """Clamp to [0, 1] and map to 0..255 with round-half-up."""
    x = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    return np.floor(255.0 * x + 0.5).astype(np.uint8)


def encode_pnm(frame, channels: int = 1) -> bytes:
    q = quantize(frame)
    if q.ndim != 2:
        raise ValueError("frame must be 2-D")
    ny, nx = q.shape
    if channels == 1:
        return f"P5\n{nx} {ny}\n255\n".encode("ascii") + q.tobytes()
    if channels == 3:
        return f"P6\n{nx} {ny}\n255\n".encode("ascii") + np.repeat(q, 3, axis=1).tobytes()
    raise ValueError("channels must be 1 or 3")


def decode_pnm(data: bytes) -> np.ndarray:
    """Binary PGM/PPM with maxval 255 -> uint8 [ny, nx] or [ny, nx, 3]."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    magic, nx, ny, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255 or magic not in (b"P5", b"P6"):
        raise ContainerFormatError("only binary P5/P6 with maxval 255 are supported")
    ch = 1 if magic == b"P5" else 3
    payload = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if payload.size != nx * ny * ch:
        raise ContainerFormatError("PNM payload size mismatch")
    return payload.reshape((ny, nx) if ch == 1 else (ny, nx, 3))


def write_pnm(path, frame, channels: int = 1) -> None:
    atomic_write_bytes(path, encode_pnm(frame, channels))


# -- model directories -----------------------------------------------------

def _write_model_dir(path, header: dict, tensors: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    try:
        (tmp / "header.txt").write_text(format_kv(header))
        for name, arr in tensors.items():
            (tmp / f"{name}.pfds").write_bytes(encode_container(arr))
        if path.exists():
            old = path.with_name(f".{path.name}.old")
            shutil.rmtree(old, ignore_errors=True)
            os.replace(path, old)
            os.replace(tmp, path)
            shutil.rmtree(old)
        else:
            os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def read_model_header(path) -> dict:
    p = Path(path) / "header.txt"
    if not p.exists():
        raise FileNotFoundError(f"no model at {path}")
    return parse_kv(p.read_text(), str(p))


def _tensor(path, name) -> np.ndarray:
    return read_container(Path(path) / f"{name}.pfds").astype(np.float64)


def _ints(s: str) -> list:
    return [int(v) for v in s.split(",")]


def save_ae(path, model: AEModel, extra: dict | None = None) -> None:
    header = {"kind": "ae", "layer_dims": model.layer_dims,
              "activations": model.activations, "code_index": model.code_index}
    header.update(extra or {})
    tensors = {}
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        tensors[f"W{l}"] = w
        tensors[f"b{l}"] = b
    _write_model_dir(path, header, tensors)


def load_ae(path) -> AEModel:
    h = read_model_header(path)
    if h.get("kind") != "ae":
        raise ContainerFormatError(f"{path} is not an autoencoder model")
    n = len(_ints(h["layer_dims"])) - 1
    return AEModel([_tensor(path, f"W{l}") for l in range(n)],
                   [_tensor(path, f"b{l}") for l in range(n)],
                   h["activations"].split(","), int(h["code_index"]))


def _scaler_header(prefix, s: ScalerModel) -> tuple:
    header = {f"{prefix}kind": s.kind}
    tensors = {f"{prefix}offset": s.offset, f"{prefix}scale": s.scale,
               f"{prefix}zero_spread": s.zero_spread.astype(np.float32)}
    return header, tensors


def _load_scaler(path, h, prefix) -> ScalerModel:
    return ScalerModel(h[f"{prefix}kind"], _tensor(path, f"{prefix}offset"),
                       _tensor(path, f"{prefix}scale"),
                       _tensor(path, f"{prefix}zero_spread") > 0.5)


def save_pca_stage(path, stage: PCAStage) -> None:
    p = stage.pca
    header = {"kind": "pca", "n_components": p.n_components, "n_features": p.n_features,
              "total_variance": float(p.total_variance), "n_samples": p.n_samples}
    sh, st = _scaler_header("scaler_", stage.scaler)
    header.update(sh)
    tensors = {"mean": p.mean, "components": p.components, "eigenvalues": p.eigenvalues}
    tensors.update(st)
    _write_model_dir(path, header, tensors)


def load_pca_stage(path) -> PCAStage:
    h = read_model_header(path)
    if h.get("kind") != "pca":
        raise ContainerFormatError(f"{path} is not a PCA model")
    pca = PCAModel(_tensor(path, "mean"), _tensor(path, "components"),
                   _tensor(path, "eigenvalues"), float(h["total_variance"]),
                   int(h.get("n_samples", 0)))
    return PCAStage(_load_scaler(path, h, "scaler_"), pca)


def load_stage2(path):
    kind = read_model_header(path).get("kind")
    if kind == "ae":
        return load_ae(path)
    if kind == "pca":
        return load_pca_stage(path)
    raise ContainerFormatError(f"{path} is neither an AE nor a PCA model")


def save_seq(path, model: SeqModel, latent_scaler: ScalerModel | None = None,
             extra: dict | None = None) -> None:
    header = {"kind": "seq", "cell_kind": model.cell_kind, "n_layers": model.n_layers,
              "hidden_size": model.hidden_size, "latent_dim": model.latent_dim,
              "residual": int(model.residual)}
    header.update(extra or {})
    tensors = {}
    for l, (w, u, b) in enumerate(model.layers):
        tensors.update({f"layer{l}_W": w, f"layer{l}_U": u, f"layer{l}_b": b})
    tensors.update({"head_W": model.head_w, "head_b": model.head_b})
    if latent_scaler is not None:
        sh, st = _scaler_header("latent_", latent_scaler)
        header.update(sh)
        tensors.update(st)
    _write_model_dir(path, header, tensors)


def load_seq(path):
    """Returns (SeqModel, latent scaler or None, header)."""
    h = read_model_header(path)
    if h.get("kind") != "seq":
        raise ContainerFormatError(f"{path} is not a sequence model")
    layers = [[_tensor(path, f"layer{l}_{n}") for n in ("W", "U", "b")]
              for l in range(int(h["n_layers"]))]
    model = SeqModel(h["cell_kind"], layers, _tensor(path, "head_W"), _tensor(path, "head_b"),
                     h.get("residual", "0") == "1")
    scaler = _load_scaler(path, h, "latent_") if "latent_kind" in h else None
    return model, scaler, h
