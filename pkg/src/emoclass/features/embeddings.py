"""Pretrained token-embedding tables and fixed-length embedding sequences.

Two input sources produce the same EmbeddingSequence shape: lookup in a
word2vec-style text table, or per-example precomputed tensors read from the
binary record file written by write_embedding_records.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

RECORD_MAGIC = b"EMOT"
RECORD_VERSION = 1


@dataclass(frozen=True)
class EmbeddingTable:
    """Immutable token → dense vector table.

    Lookup tries the token verbatim, then lowercased. Out-of-vocabulary
    tokens receive the zero vector (``oov_policy='zero'``).
    """

    tokens: tuple[str, ...]
    vectors: np.ndarray
    oov_policy: str = "zero"
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be one row per token")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("embedding tokens must be unique")
        if self.oov_policy != "zero":
            raise ValueError(f"unsupported OOV policy {self.oov_policy!r}")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> np.ndarray | None:
        row = self.index.get(token)
        if row is None:
            row = self.index.get(token.lower())
        return None if row is None else self.vectors[row]

    def vector_of(self, token: str) -> np.ndarray:
        vec = self.lookup(token)
        return np.zeros(self.dim) if vec is None else vec


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Parse word2vec text format: header 'count dim', then 'token v1 ... vd'."""
    tokens: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected header 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ValueError(f"{path}:1: expected header 'count dim'") from None
        if count < 0 or dim < 1:
            raise ValueError(f"{path}:1: invalid header values {count} {dim}")
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path}:{lineno}: expected 1 token + {dim} values, "
                    f"got {len(parts)} fields"
                )
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vector value") from None
            tokens.append(parts[0])
            rows.append(values)
    if len(tokens) != count:
        raise ValueError(f"{path}: header declares {count} entries, found {len(tokens)}")
    vectors = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dim))
    return EmbeddingTable(tuple(tokens), vectors)


def save_embedding_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write word2vec text format; float repr round-trips bit-exactly."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for i, token in enumerate(table.tokens):
            values = " ".join(repr(v) for v in table.vectors[i].tolist())
            f.write(f"{token} {values}\n")


@dataclass(frozen=True)
class EmbeddingSequence:
    """T×d matrix with a validity mask marking real (non-padding) rows."""

    vectors: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be 2-d (T, d)")
        if self.mask.shape != (self.vectors.shape[0],):
            raise ValueError("mask length must equal sequence length")
        if self.vectors.shape[0] < 1:
            raise ValueError("sequence must have at least one row")

    @property
    def length(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_real(self) -> int:
        return int(self.mask.sum())


def _fixed_length(rows: np.ndarray, max_length: int, dim: int) -> EmbeddingSequence:
    T = rows.shape[0]
    if T == 0:
        return EmbeddingSequence(np.zeros((1, dim)), np.zeros(1, dtype=bool))
    if T > max_length:
        rows = rows[:max_length]
        T = max_length
    vectors = np.zeros((max_length, dim))
    vectors[:T] = rows
    mask = np.zeros(max_length, dtype=bool)
    mask[:T] = True
    return EmbeddingSequence(vectors, mask)


def embed_sequence(
    tokens: Sequence[str], table: EmbeddingTable, max_length: int
) -> EmbeddingSequence:
    """Embed the first max_length tokens, zero-padding shorter sequences.

    Empty input yields a single all-masked zero row.
    """
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    rows = np.array([table.vector_of(t) for t in tokens[:max_length]])
    if rows.size == 0:
        rows = rows.reshape(0, table.dim)
    return _fixed_length(rows, max_length, table.dim)


def sequence_from_array(array: np.ndarray, max_length: int) -> EmbeddingSequence:
    """Apply the fixed-length rule to a precomputed T×d embedding array."""
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    array = np.asarray(array, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError("precomputed embeddings must be 2-d (T, d)")
    return _fixed_length(array, max_length, array.shape[1])


def stack_sequences(
    sequences: Sequence[EmbeddingSequence],
) -> tuple[np.ndarray, np.ndarray]:
    """Pad a batch to its longest sequence: (B, Tmax, d) plus (B, Tmax) mask."""
    if not sequences:
        raise ValueError("cannot stack an empty batch")
    dims = {s.dim for s in sequences}
    if len(dims) != 1:
        raise ValueError(f"mixed embedding dimensions in batch: {sorted(dims)}")
    t_max = max(s.length for s in sequences)
    d = dims.pop()
    batch = np.zeros((len(sequences), t_max, d))
    mask = np.zeros((len(sequences), t_max), dtype=bool)
    for i, s in enumerate(sequences):
        batch[i, : s.length] = s.vectors
        mask[i, : s.length] = s.mask
    return batch, mask


def write_embedding_records(
    path: str | Path, items: Iterable[tuple[str, np.ndarray]], dim: int
) -> int:
    """Write per-example embedding tensors; returns the record count.

    Layout: magic, version u32, dim u32, then per record id length u32,
    id bytes (UTF-8), T u32, T·dim little-endian float32 values.
    """
    n = 0
    with open(path, "wb") as f:
        f.write(RECORD_MAGIC)
        f.write(struct.pack("<II", RECORD_VERSION, dim))
        for example_id, array in items:
            array = np.asarray(array, dtype=np.float32)
            if array.ndim != 2 or array.shape[1] != dim:
                raise ValueError(
                    f"record {example_id!r}: expected shape (T, {dim}), "
                    f"got {array.shape}"
                )
            encoded = example_id.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", array.shape[0]))
            f.write(array.astype("<f4").tobytes())
            n += 1
    return n


def read_embedding_records(path: str | Path) -> Iterator[tuple[str, np.ndarray]]:
    """Stream (id, T×d float32 array) records written by write_embedding_records."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != RECORD_MAGIC:
            raise ValueError(f"{path}: not an embedding record file")
        header = f.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated header")
        version, dim = struct.unpack("<II", header)
        if version != RECORD_VERSION:
            raise ValueError(
                f"{path}: record format version {version}, expected {RECORD_VERSION}"
            )
        while True:
            raw = f.read(4)
            if not raw:
                return
            if len(raw) != 4:
                raise ValueError(f"{path}: truncated record header")
            (id_len,) = struct.unpack("<I", raw)
            encoded = f.read(id_len)
            if len(encoded) != id_len:
                raise ValueError(f"{path}: truncated record id")
            raw = f.read(4)
            if len(raw) != 4:
                raise ValueError(f"{path}: truncated record length")
            (t,) = struct.unpack("<I", raw)
            payload = f.read(4 * t * dim)
            if len(payload) != 4 * t * dim:
                raise ValueError(f"{path}: truncated record payload")
            array = np.frombuffer(payload, dtype="<f4").reshape(t, dim)
            yield encoded.decode("utf-8"), array
