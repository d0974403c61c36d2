# app/storage/artifacts.py
"""Versioned little-endian binary artifacts for graphs, embeddings and models.

Layout::

    magic (4 bytes) | version (u8) | kind (u8) | meta length (u32 LE)
    | meta (UTF-8 JSON) | array payloads (raw little-endian bytes)

The JSON meta lists every array as ``[name, dtype, length]`` in payload order.
"""

import json
import logging
import pickle
import struct
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp

from app import constants
from app.errors import ArtifactError, FormatVersionError
from app.models.graph import EmbeddingMatrix, GraphMode, SparseGraph
from app.models.interaction import UserRegistry

log = logging.getLogger("storage.artifacts")

_HEADER = struct.Struct("<4sBBI")

KIND_GRAPH = 1
KIND_EMBEDDING = 2
KIND_MODEL = 3
_KIND_NAMES = {KIND_GRAPH: "graph", KIND_EMBEDDING: "embedding", KIND_MODEL: "model"}


def _write(path: Path, kind: int, meta: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    meta = {**meta, "arrays": []}
    payload = []
    for name, arr in arrays:
        dtype = np.dtype(arr.dtype).newbyteorder("<")
        data = np.ascontiguousarray(arr, dtype=dtype)
        meta["arrays"].append([name, dtype.str, int(data.size)])
        payload.append(data.tobytes(order="C"))
    meta_bytes = json.dumps(meta, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(
            _HEADER.pack(
                constants.ARTIFACT_MAGIC, constants.ARTIFACT_VERSION, kind, len(meta_bytes)
            )
        )
        fh.write(meta_bytes)
        for chunk in payload:
            fh.write(chunk)
    log.debug("Wrote %s artifact to %s", _KIND_NAMES[kind], path)


def _read(path: Path, expected_kind: int) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"artifact not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ArtifactError(f"{path} is too short to be an artifact")
    magic, version, kind, meta_len = _HEADER.unpack_from(raw, 0)
    if magic != constants.ARTIFACT_MAGIC:
        raise ArtifactError(f"{path} is not a toolkit artifact (bad magic {magic!r})")
    if version != constants.ARTIFACT_VERSION:
        raise FormatVersionError(version, constants.ARTIFACT_VERSION, str(path))
    if kind != expected_kind:
        raise ArtifactError(
            f"{path} holds a {_KIND_NAMES.get(kind, kind)} artifact, "
            f"expected {_KIND_NAMES[expected_kind]}"
        )
    offset = _HEADER.size
    meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    arrays = {}
    for name, dtype_str, size in meta["arrays"]:
        dtype = np.dtype(dtype_str)
        nbytes = dtype.itemsize * size
        if offset + nbytes > len(raw):
            raise ArtifactError(f"{path} is truncated while reading array {name!r}")
        arrays[name] = np.frombuffer(raw, dtype=dtype, count=size, offset=offset).copy()
        offset += nbytes
    return meta, arrays


def save_graph(graph: SparseGraph, path: str | Path) -> None:
    m = graph.matrix
    meta = {
        "signal": graph.signal,
        "directed": graph.directed,
        "mode": graph.mode.value,
        "shape": list(m.shape),
        "users": list(graph.users.ids),
        "targets": list(graph.targets.ids) if graph.targets is not None else None,
    }
    _write(
        Path(path),
        KIND_GRAPH,
        meta,
        [
            ("indptr", m.indptr.astype(np.int64)),
            ("indices", m.indices.astype(np.int64)),
            ("data", m.data.astype(np.float64)),
        ],
    )


def load_graph(path: str | Path) -> SparseGraph:
    meta, arrays = _read(Path(path), KIND_GRAPH)
    shape = tuple(meta["shape"])
    matrix = sp.csr_matrix((arrays["data"], arrays["indices"], arrays["indptr"]), shape=shape)
    targets = meta.get("targets")
    return SparseGraph(
        matrix=matrix,
        users=UserRegistry(meta["users"]),
        signal=meta["signal"],
        directed=meta["directed"],
        mode=GraphMode(meta["mode"]),
        targets=UserRegistry(targets) if targets is not None else None,
    )


def save_embedding(embedding: EmbeddingMatrix, path: str | Path) -> None:
    meta = {
        "signal": embedding.signal,
        "config_hash": embedding.config_hash,
        "users": list(embedding.users.ids),
        "dim": embedding.dim,
    }
    _write(Path(path), KIND_EMBEDDING, meta, [("vectors", embedding.vectors.astype(np.float64))])


def load_embedding(path: str | Path) -> EmbeddingMatrix:
    meta, arrays = _read(Path(path), KIND_EMBEDDING)
    vectors = arrays["vectors"].reshape(len(meta["users"]), meta["dim"])
    return EmbeddingMatrix(
        users=UserRegistry(meta["users"]),
        vectors=vectors,
        signal=meta["signal"],
        config_hash=meta["config_hash"],
    )


def save_model(model: Any, path: str | Path, meta: dict | None = None) -> None:
    blob = np.frombuffer(pickle.dumps(model, protocol=pickle.HIGHEST_PROTOCOL), dtype=np.uint8)
    meta = {"model": type(model).__name__, **(meta or {})}
    _write(Path(path), KIND_MODEL, meta, [("pickle", blob)])


def load_model(path: str | Path) -> Any:
    _, arrays = _read(Path(path), KIND_MODEL)
    return pickle.loads(arrays["pickle"].tobytes())
