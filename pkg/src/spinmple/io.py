"""Text formats: edge lists, coupling files and spin sample dumps.

All formats accept ``#`` comment lines, which is where provenance headers go.
"""

import io
import json

import numpy as np

from .coupling import CouplingMatrix
from .exceptions import DuplicateEdge, ParseError, SelfLoop
from .graph import InteractionGraph

__all__ = [
    "load_edge_list",
    "dump_edge_list",
    "load_coupling",
    "dump_coupling",
    "load_samples",
    "dump_samples",
    "provenance_lines",
]


def _open_text(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _data_lines(stream):
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def provenance_lines(meta):
    return [f"# {json.dumps(meta, sort_keys=True)}"]


def load_edge_list(source, n=None):
    """Parse ``i j`` lines into a graph; ``n`` defaults to 1 + max index.

    ``source`` is a text stream or a string holding the file contents.
    """
    seen = set()
    edges = []
    for lineno, line in _data_lines(_open_text(source)):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer vertex in {line!r}") from None
        if i < 0 or j < 0:
            raise ParseError(f"line {lineno}: negative vertex index")
        if i == j:
            raise SelfLoop(f"line {lineno}: self-loop at vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if not edges:
        raise ParseError("edge list contains no edges")
    n_min = 1 + max(max(e) for e in edges)
    if n is None:
        n = n_min
    elif n < n_min:
        raise ParseError(f"declared n={n} smaller than max index + 1 = {n_min}")
    return InteractionGraph(n, np.array(edges, dtype=np.int64))


def dump_edge_list(g, stream, meta=None):
    if meta is not None:
        stream.write("\n".join(provenance_lines(meta)) + "\n")
    for i, j in g.edges:
        stream.write(f"{i} {j}\n")


def _parse_float(tok):
    if "x" in tok.lower():
        return float.fromhex(tok)
    return float(tok)


def dump_coupling(j, stream, hexfloat=False, meta=None):
    """Header ``n d_avg`` then ``i j w`` per stored entry (``i < j``).

    Decimal output uses ``repr`` (shortest round-tripping form); ``hexfloat``
    writes ``float.hex`` strings.  Both reload bit-exactly.
    """
    fmt = float.hex if hexfloat else repr
    if meta is not None:
        stream.write("\n".join(provenance_lines(meta)) + "\n")
    stream.write(f"{j.n} {fmt(float(j.d_avg))}\n")
    for i, k, w in zip(j.rows.tolist(), j.cols.tolist(), j.weights.tolist()):
        stream.write(f"{i} {k} {fmt(w)}\n")


def load_coupling(source):
    lines = _data_lines(_open_text(source))
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("coupling file is empty") from None
    parts = header.split()
    try:
        n, d_avg = int(parts[0]), _parse_float(parts[1])
    except (IndexError, ValueError):
        raise ParseError(f"line {lineno}: expected header 'n d_avg', got {header!r}") from None
    rows, cols, ws = [], [], []
    for lineno, line in lines:
        parts = line.split()
        try:
            i, k, w = int(parts[0]), int(parts[1]), _parse_float(parts[2])
        except (IndexError, ValueError):
            raise ParseError(f"line {lineno}: expected 'i j w', got {line!r}") from None
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'i j w', got {line!r}")
        if i == k:
            raise SelfLoop(f"line {lineno}: diagonal entry at {i}")
        if not (0 <= i < k < n):
            raise ParseError(f"line {lineno}: entries must satisfy 0 <= i < j < n")
        rows.append(i)
        cols.append(k)
        ws.append(w)
    rows, cols = np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)
    order = np.lexsort((cols, rows))
    rows, cols, ws = rows[order], cols[order], np.array(ws, dtype=np.float64)[order]
    if len(rows) > 1 and np.any((rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])):
        raise DuplicateEdge("coupling file repeats an entry")
    return CouplingMatrix(n, rows, cols, ws, d_avg)


def dump_samples(samples, stream, meta=None):
    """One line of space-separated ``+1``/``-1`` per configuration."""
    samples = np.atleast_2d(samples)
    if meta is not None:
        stream.write("\n".join(provenance_lines(meta)) + "\n")
    for row in samples:
        stream.write(" ".join("1" if s > 0 else "-1" for s in row) + "\n")


def load_samples(source):
    out = []
    for lineno, line in _data_lines(_open_text(source)):
        try:
            row = [int(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer spin") from None
        if any(v not in (-1, 1) for v in row):
            raise ParseError(f"line {lineno}: spins must be +1 or -1")
        out.append(row)
    if not out:
        raise ParseError("sample file has no configurations")
    if len({len(r) for r in out}) != 1:
        raise ParseError("configurations have differing lengths")
    return np.array(out, dtype=np.float64)
