"""On-disk formats: METIS-style graph files and one-id-per-line mappings.

A graph file starts with a header line ``n m [fmt]`` where fmt is 0 (plain),
1 (edge weights), 10 (node weights) or 11 (both); the following n lines are
1-indexed adjacency lists, with the node weight first when present and
neighbor/weight pairs when edge weights are present.  Lines starting with
'%' are comments.  The adjacency must be symmetric with matching weights and
free of self-loops, and the header edge count must match the lists.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .graph import Graph, GraphFormatError


class MetisParseError(ValueError):
    """A graph file violates the format; the message carries the line."""


class MappingFileError(ValueError):
    """A mapping file has the wrong shape or out-of-range ids."""


def parse_metis(path) -> Graph:
    """Read a METIS-format graph file into a validated Graph."""
    lines = Path(path).read_text().splitlines()
    content: list[tuple[int, str]] = [
        (i + 1, line)
        for i, line in enumerate(lines)
        if not line.lstrip().startswith("%")
    ]
    while content and not content[0][1].strip():
        content.pop(0)  # blank lines before the header
    while content and not content[-1][1].strip():
        content.pop()  # trailing blank lines
    if not content:
        raise MetisParseError(f"{path}: no header line found")

    header_no, header = content[0]
    fields = header.split()
    if len(fields) not in (2, 3):
        raise MetisParseError(
            f"{path}:{header_no}: header must be 'n m [fmt]', got {header!r}"
        )
    try:
        n, m = int(fields[0]), int(fields[1])
    except ValueError:
        raise MetisParseError(f"{path}:{header_no}: non-integer header {header!r}") from None
    fmt = fields[2] if len(fields) == 3 else "0"
    if fmt not in ("0", "00", "000", "1", "01", "001", "10", "010", "11", "011"):
        raise MetisParseError(f"{path}:{header_no}: unsupported format code {fmt!r}")
    has_node_weights = fmt in ("10", "010", "11", "011")
    has_edge_weights = fmt in ("1", "01", "001", "11", "011")

    body = content[1:]
    if len(body) != n:
        raise MetisParseError(
            f"{path}: expected {n} adjacency lines, found {len(body)}"
        )

    node_weights = [1] * n
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    arc_count = 0
    for v, (line_no, line) in enumerate(body):
        try:
            tokens = [int(t) for t in line.split()]
        except ValueError:
            raise MetisParseError(f"{path}:{line_no}: non-integer token in {line!r}") from None
        pos = 0
        if has_node_weights:
            if not tokens:
                raise MetisParseError(f"{path}:{line_no}: missing node weight")
            if tokens[0] < 0:
                raise MetisParseError(f"{path}:{line_no}: negative node weight {tokens[0]}")
            node_weights[v] = tokens[0]
            pos = 1
        rest = tokens[pos:]
        if has_edge_weights:
            if len(rest) % 2 != 0:
                raise MetisParseError(
                    f"{path}:{line_no}: odd token count for neighbor/weight pairs"
                )
            entries = [(rest[i], rest[i + 1]) for i in range(0, len(rest), 2)]
        else:
            entries = [(u, 1) for u in rest]
        for u_1based, w in entries:
            if not 1 <= u_1based <= n:
                raise MetisParseError(
                    f"{path}:{line_no}: neighbor {u_1based} out of range [1, {n}]"
                )
            u = u_1based - 1
            if u == v:
                raise MetisParseError(f"{path}:{line_no}: self-loop at node {v + 1}")
            if w <= 0:
                raise MetisParseError(
                    f"{path}:{line_no}: non-positive edge weight {w}"
                )
            adjacency[v].append((u, w))
            arc_count += 1

    if arc_count != 2 * m:
        raise MetisParseError(
            f"{path}: header declares m={m} edges but the adjacency lists "
            f"hold {arc_count} directed entries (expected {2 * m})"
        )
    try:
        return Graph(n, adjacency, node_weights)
    except GraphFormatError as exc:
        raise MetisParseError(f"{path}: {exc}") from None


def write_metis(graph: Graph, path) -> None:
    """Write a graph in METIS format, using the smallest sufficient fmt."""
    has_node_weights = any(c != 1 for c in graph.node_weights)
    has_edge_weights = any(w != 1 for _, nbrs in enumerate(graph.adjacency) for _, w in nbrs)
    if has_node_weights and has_edge_weights:
        fmt = "11"
    elif has_node_weights:
        fmt = "10"
    elif has_edge_weights:
        fmt = "1"
    else:
        fmt = None
    lines = [f"{graph.n} {graph.m}" + (f" {fmt}" if fmt else "")]
    for v in range(graph.n):
        tokens: list[str] = []
        if has_node_weights:
            tokens.append(str(graph.node_weights[v]))
        for u, w in graph.adjacency[v]:
            tokens.append(str(u + 1))
            if has_edge_weights:
                tokens.append(str(w))
        lines.append(" ".join(tokens))
    Path(path).write_text("\n".join(lines) + "\n")


def write_mapping(assignment: Sequence[int], path) -> None:
    """One PE id per line; line i holds the block of node i."""
    Path(path).write_text("".join(f"{b}\n" for b in assignment))


def read_mapping(path, n: int, k: int) -> list[int]:
    """Read and validate a mapping file for n nodes and k PEs."""
    lines = Path(path).read_text().splitlines()
    values = [line.strip() for line in lines if line.strip()]
    if len(values) != n:
        raise MappingFileError(
            f"{path}: {len(values)} entries for a graph with {n} nodes"
        )
    assignment = []
    for i, text in enumerate(values):
        try:
            b = int(text)
        except ValueError:
            raise MappingFileError(f"{path}: line {i + 1} is not an integer") from None
        if not 0 <= b < k:
            raise MappingFileError(
                f"{path}: line {i + 1} assigns PE {b}, valid range is [0, {k})"
            )
        assignment.append(b)
    return assignment
