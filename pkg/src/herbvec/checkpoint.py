"""Versioned binary checkpoints shared by every model type.

Layout: 8-byte magic, u32 format version, u64 header length, UTF-8 JSON
header (model type tag, config, seed, vocabulary, metadata, array
manifest), raw array bytes, and a trailing SHA-256 over everything before
it. Integer count tables round-trip bit-exactly; floats keep full binary
precision.
"""

from __future__ import annotations

import hashlib
import json
import struct
from collections import Counter
from pathlib import Path

import numpy as np

from .cbow import CbowModel
from .corpus import Vocabulary
from .embeddings import EmbeddingMatrix
from .errors import CheckpointError
from .lsa import LsaModel
from .neural import GruCell, NeuralLM, _CELL_FIELDS
from .ngram import NgramModel

MAGIC = b"HVCKPT\x00\n"
VERSION = 1


def _model_state(model):
    """(type_tag, config, arrays, metadata_defaults) for a model object."""
    if isinstance(model, NgramModel):
        arrays = {}
        for name, width, table in (
            ("unigrams", 1, model.unigrams),
            ("bigrams", 2, model.bigrams),
            ("trigrams", 3, model.trigrams),
        ):
            items = sorted(table.items())
            keys = np.array(
                [k if isinstance(k, tuple) else (k,) for k, _ in items], dtype=np.int64
            ).reshape(len(items), width)
            arrays[f"{name}.keys"] = keys
            arrays[f"{name}.values"] = np.array(
                [v for _, v in items], dtype=np.int64
            )
        config = {"smoothing": model.smoothing, "total_tokens": model.total_tokens}
        return "ngram", config, arrays, {}
    if isinstance(model, LsaModel):
        config = {"rank": model.rank, "seed": model.seed}
        arrays = {
            "vectors": model.embeddings.vectors,
            "singular_values": model.singular_values,
        }
        return "lsa", config, arrays, {}
    if isinstance(model, CbowModel):
        config = {
            "dim": model.dim,
            "window": model.window,
            "negatives": model.negatives,
            "noise_power": model.noise_power,
            "seed": model.seed,
        }
        return "cbow", config, {"w_in": model.w_in, "w_out": model.w_out}, {}
    if isinstance(model, NeuralLM):
        config = {
            "dim": model.dim,
            "hidden": model.hidden,
            "seed": model.seed,
            "grad_clip_norm": model.grad_clip_norm,
        }
        arrays = {"emb": model.emb, "w_out": model.w_out, "b_out": model.b_out}
        for prefix, cell in (("fwd", model.fwd), ("bwd", model.bwd)):
            for name, arr in cell.fields().items():
                arrays[f"{prefix}.{name}"] = arr
        return model.mode, config, arrays, {}
    raise CheckpointError(f"cannot checkpoint object of type {type(model).__name__}")


def save_checkpoint(model, path, metadata: dict | None = None) -> None:
    tag, config, arrays, meta = _model_state(model)
    meta = {**meta, **(metadata or {})}
    manifest = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        raw = arr.tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": str(arr.dtype),
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = {
        "type": tag,
        "config": config,
        "seed": config.get("seed", 0),
        "vocab": {
            "tokens": model.vocab.tokens,
            "counts": model.vocab.counts,
            "unk_id": model.vocab.unk_id,
        },
        "metadata": meta,
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", VERSION, len(header_bytes)) + header_bytes
    body += b"".join(blobs)
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)


def _read_arrays(header: dict, blob: bytes) -> dict[str, np.ndarray]:
    arrays = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(blob):
            raise CheckpointError("array data extends past the end of the file")
        arr = np.frombuffer(blob[start : start + nbytes], dtype=entry["dtype"])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return arrays


def _counter_from(arrays: dict, name: str) -> Counter:
    keys = arrays[f"{name}.keys"]
    values = arrays[f"{name}.values"]
    table: Counter = Counter()
    width = keys.shape[1] if keys.ndim == 2 else 1
    for row, val in zip(keys, values):
        key = int(row[0]) if width == 1 else tuple(int(x) for x in row)
        table[key] = int(val)
    return table


def _build_ngram(config, arrays, vocab) -> NgramModel:
    model = NgramModel(vocab=vocab, smoothing=config["smoothing"])
    model.unigrams = _counter_from(arrays, "unigrams")
    model.bigrams = _counter_from(arrays, "bigrams")
    model.trigrams = _counter_from(arrays, "trigrams")
    model.total_tokens = config["total_tokens"]
    model._rebuild_context_sums()
    return model


def _build_lsa(config, arrays, vocab) -> LsaModel:
    return LsaModel(
        embeddings=EmbeddingMatrix(vectors=arrays["vectors"], vocab=vocab),
        singular_values=arrays["singular_values"],
        rank=config["rank"],
        seed=config.get("seed", 0),
    )


def _build_cbow(config, arrays, vocab) -> CbowModel:
    return CbowModel(
        w_in=arrays["w_in"],
        w_out=arrays["w_out"],
        window=config["window"],
        negatives=config["negatives"],
        noise_power=config["noise_power"],
        vocab=vocab,
        seed=config.get("seed", 0),
    )


def _build_neural(mode):
    def build(config, arrays, vocab) -> NeuralLM:
        cells = {}
        for prefix in ("fwd", "bwd"):
            cells[prefix] = GruCell(
                **{name: arrays[f"{prefix}.{name}"] for name in _CELL_FIELDS}
            )
        return NeuralLM(
            mode=mode,
            emb=arrays["emb"],
            fwd=cells["fwd"],
            bwd=cells["bwd"],
            w_out=arrays["w_out"],
            b_out=arrays["b_out"],
            vocab=vocab,
            seed=config.get("seed", 0),
            grad_clip_norm=config.get("grad_clip_norm"),
        )

    return build


_BUILDERS = {
    "ngram": _build_ngram,
    "lsa": _build_lsa,
    "cbow": _build_cbow,
    "rnnlm": _build_neural("rnnlm"),
    "pllm": _build_neural("pllm"),
}


def read_header(path) -> dict:
    """Checkpoint header only (type, config, metadata), integrity-checked."""
    header, _ = _read_checked(path)
    return header


def _read_checked(path):
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 12 + 32:
        raise CheckpointError("truncated checkpoint file")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a herbvec checkpoint (bad magic)")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch: checkpoint is corrupted")
    version, header_len = struct.unpack_from("<IQ", data, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header_start = len(MAGIC) + 12
    if header_start + header_len > len(body):
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(data[header_start : header_start + header_len])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from None
    blob = body[header_start + header_len :]
    return header, blob


def load_checkpoint(path, expected_type: str | None = None):
    """Rebuild the model stored at ``path``.

    Raises CheckpointError when the file is corrupted, has an unknown
    version, or holds a different model type than ``expected_type``.
    """
    header, blob = _read_checked(path)
    tag = header.get("type")
    if expected_type is not None and tag != expected_type:
        raise CheckpointError(
            f"checkpoint holds a {tag!r} model, expected {expected_type!r}"
        )
    builder = _BUILDERS.get(tag)
    if builder is None:
        raise CheckpointError(f"unknown model type tag {tag!r}")
    vocab = Vocabulary(
        tokens=list(header["vocab"]["tokens"]),
        counts=list(header["vocab"]["counts"]),
        unk_id=header["vocab"]["unk_id"],
    )
    arrays = _read_arrays(header, blob)
    model = builder(header["config"], arrays, vocab)
    return model
