"""Edge-list loading and degree statistics for the propagation substrate.

Graphs are stored in CSR form (``indptr``/``indices``) with node ids remapped
to ``0..node_count-1``; the original ids are kept in ``original_ids``.
"""
from __future__ import annotations

import gzip
import io
import logging
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Union

import numpy as np

logger = logging.getLogger(__name__)

PathOrStream = Union[str, os.PathLike, BinaryIO]


class EdgeListError(ValueError):
    """Raised for malformed or empty edge-list input."""


@dataclass(frozen=True, eq=False)
class Graph:
    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    directed: bool = False
    original_ids: np.ndarray = field(default=None, repr=False)
    dropped_self_loops: int = 0
    dropped_duplicates: int = 0

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.original_ids is None:
            object.__setattr__(self, "original_ids", np.arange(self.node_count, dtype=np.int64))

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        """Number of edges (undirected) or arcs (directed)."""
        nnz = int(self.indices.size)
        return nnz if self.directed else nnz // 2

    def adjacency(self) -> dict[int, list[int]]:
        return {u: self.neighbors(u).tolist() for u in range(self.node_count)}

    def edges(self) -> np.ndarray:
        """(k, 2) array of internal-id edges; undirected edges listed once with u < v."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees())
        dst = self.indices.astype(np.int64)
        if not self.directed:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        return np.column_stack([src, dst])


@dataclass(frozen=True)
class DegreeStats:
    mean_degree: float
    max_degree: int
    degree_histogram: dict[int, int]


def _open_text(source: PathOrStream) -> tuple[io.TextIOBase, bool]:
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        raw = gzip.open(path, "rb") if path.endswith(".gz") else open(path, "rb")
        return io.TextIOWrapper(raw, encoding="utf-8"), True
    return io.TextIOWrapper(source, encoding="utf-8"), False


def _parse_pairs(text: io.TextIOBase) -> np.ndarray:
    pairs = []
    for lineno, line in enumerate(text, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tok = s.split()
        if len(tok) < 2:
            raise EdgeListError(f"line {lineno}: expected two node ids, got {s!r}")
        try:
            pairs.append((int(tok[0]), int(tok[1])))
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer node id in {s!r}") from None
    if not pairs:
        raise EdgeListError("edge list is empty")
    return np.asarray(pairs, dtype=np.int64)


def from_edges(pairs: np.ndarray, directed: bool = False) -> Graph:
    """Build a Graph from an (k, 2) integer array of (possibly raw) node ids."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    loops = pairs[:, 0] == pairs[:, 1]
    n_loops = int(loops.sum())
    pairs = pairs[~loops]
    if pairs.size == 0:
        raise EdgeListError("no edges left after dropping self-loops")

    original_ids, flat = np.unique(pairs, return_inverse=True)
    flat = flat.reshape(-1, 2)
    n = int(original_ids.size)

    if directed:
        src, dst = flat[:, 0], flat[:, 1]
        n_input = src.size
    else:
        lo = np.minimum(flat[:, 0], flat[:, 1])
        hi = np.maximum(flat[:, 0], flat[:, 1])
        # dedup on unordered pairs first so duplicates are counted per edge
        key = np.unique(lo * n + hi)
        n_input = lo.size
        lo, hi = key // n, key % n
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])

    key = np.unique(src * n + dst)
    src, dst = key // n, key % n
    n_dups = n_input - (key.size if directed else key.size // 2)

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    # np.unique sorted keys by (src, dst), so rows are already sorted
    indices = dst.astype(np.int32 if n < 2**31 else np.int64)

    if n_loops or n_dups:
        logger.info("edge list: dropped %d self-loops and %d duplicate edges", n_loops, n_dups)
    return Graph(
        node_count=n,
        indptr=indptr,
        indices=indices,
        directed=directed,
        original_ids=original_ids,
        dropped_self_loops=n_loops,
        dropped_duplicates=int(n_dups),
    )


def load_edge_list(source: PathOrStream, directed: bool = False) -> Graph:
    """Load a SNAP-style edge list.

    ``source`` is a path (``.gz`` is decompressed transparently) or a binary
    stream. Lines starting with ``#`` and blank lines are skipped. Node ids
    are remapped to contiguous integers in increasing order of original id;
    self-loops and duplicate edges are dropped and counted on the result.
    """
    text, owned = _open_text(source)
    try:
        pairs = _parse_pairs(text)
    finally:
        if owned:
            text.close()
        else:
            text.detach()
    return from_edges(pairs, directed=directed)


def write_edge_list(g: Graph, dest: BinaryIO) -> None:
    """Emit ``g`` as an edge list using the original node ids."""
    e = g.original_ids[g.edges()]
    buf = "".join(f"{u} {v}\n" for u, v in e.tolist())
    dest.write(buf.encode())


def degree_stats(g: Graph) -> DegreeStats:
    deg = g.degrees()
    values, counts = np.unique(deg, return_counts=True)
    return DegreeStats(
        mean_degree=float(deg.sum()) / g.node_count,
        max_degree=int(deg.max()),
        degree_histogram={int(d): int(c) for d, c in zip(values, counts)},
    )


def scale_free_graph(n: int, m: int, seed: int = 0) -> Graph:
    """Barabasi-Albert graph with ``n`` nodes and mean degree close to ``2 m``.

    Stand-in substrate when no real edge list is available.
    """
    import networkx as nx

    nxg = nx.barabasi_albert_graph(n, m, seed=seed)
    return from_edges(np.asarray(nxg.edges(), dtype=np.int64).reshape(-1, 2), directed=False)
