"""Graph files: canonical JSON and the ``x y w`` edge-list text format."""

from __future__ import annotations

import json
import re

import numpy as np

from .errors import DomainError, ParseError
from .graph import VertexMeasure, WeightedGraph


def graph_to_dict(G, mu=None):
    r, c, w = G.edges()
    d = {
        "n": G.n,
        "edges": [[int(a), int(b), float(x)] for a, b, x in zip(r, c, w)],
        "symmetric": G.symmetric,
    }
    if G.labels is not None:
        d["labels"] = list(G.labels)
    if mu is not None:
        if mu.kind in ("unit", "degree"):
            d["measure"] = {"kind": mu.kind}
        else:
            d["measure"] = {"kind": "explicit", "values": [float(v) for v in mu.values]}
    return d


def save_graph(path, G, mu=None):
    # repr-based floats round-trip bit-identically through json
    with open(path, "w") as fh:
        json.dump(graph_to_dict(G, mu), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _line_of(text, needle_pos):
    return text.count("\n", 0, needle_pos) + 1


def graph_from_dict(d, text=None):
    def fail(msg, key=None):
        line = None
        if text is not None and key is not None:
            m = re.search(re.escape(json.dumps(key)), text)
            line = _line_of(text, m.start()) if m else None
        raise ParseError(msg, line)

    if not isinstance(d, dict):
        fail("top level must be an object")
    for key in ("n", "edges"):
        if key not in d:
            fail(f"missing key {key!r}")
    n = d["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        fail("'n' must be a nonnegative integer", "n")
    edges = d["edges"]
    if not isinstance(edges, list):
        fail("'edges' must be a list", "edges")
    clean = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 3):
            fail(f"edge {k} must be [x, y, w]", "edges")
        x, y, w = e
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (x, y)):
            fail(f"edge {k}: endpoints must be integers", "edges")
        if not 0 <= x < n or not 0 <= y < n:
            fail(f"edge {k}: dangling vertex index", "edges")
        if not isinstance(w, (int, float)) or isinstance(w, bool) or not np.isfinite(w) or w <= 0:
            fail(f"edge {k}: weight must be a positive finite number", "edges")
        clean.append((x, y, float(w)))
    try:
        G = WeightedGraph.from_edges(n, clean, labels=d.get("labels"))
    except DomainError as exc:
        fail(str(exc), "edges")
    if "symmetric" in d and bool(d["symmetric"]) != G.symmetric:
        fail("'symmetric' flag does not match the weights", "symmetric")
    m = d.get("measure", {"kind": "unit"})
    if not isinstance(m, dict) or m.get("kind") not in ("unit", "degree", "explicit"):
        fail("measure.kind must be unit, degree or explicit", "measure")
    try:
        mu = VertexMeasure.of_kind(G, m["kind"], m.get("values"))
    except DomainError as exc:
        fail(str(exc), "measure")
    return G, mu


def load_graph(path):
    """Load JSON or edge-list (detected by the leading '#' header)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("#"):
        return load_edgelist_text(text)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return graph_from_dict(d, text)


_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)\s+symmetric\s*=\s*(true|false)\s*$", re.I)


def load_edgelist_text(text, measure_kind="unit"):
    lines = text.splitlines()
    m = _HEADER.match(lines[0].strip()) if lines else None
    if not m:
        raise ParseError("expected header '# n=<N> symmetric=<bool>'", 1)
    n = int(m.group(1))
    symmetric = m.group(2).lower() == "true"
    edges = []
    for ln, raw in enumerate(lines[1:], start=2):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) != 3:
            raise ParseError("expected 'x y w'", ln)
        try:
            x, y, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError("could not parse 'x y w'", ln) from None
        if not 0 <= x < n or not 0 <= y < n:
            raise ParseError("dangling vertex index", ln)
        if not np.isfinite(w) or w <= 0:
            raise ParseError("weight must be positive", ln)
        edges.append((x, y, w))
    # symmetric edge lists may list each undirected edge once
    if symmetric:
        seen = {(x, y) for x, y, _ in edges}
        edges = edges + [(y, x, w) for x, y, w in edges if (y, x) not in seen]
    try:
        G = WeightedGraph.from_edges(n, edges)
    except DomainError as exc:
        raise ParseError(str(exc)) from None
    if G.symmetric != symmetric:
        raise ParseError("header symmetric flag does not match the weights", 1)
    return G, VertexMeasure.of_kind(G, measure_kind)


def save_edgelist(path, G):
    r, c, w = G.edges()
    with open(path, "w") as fh:
        fh.write(f"# n={G.n} symmetric={'true' if G.symmetric else 'false'}\n")
        for a, b, x in zip(r, c, w):
            fh.write(f"{a} {b} {float(x)!r}\n")


def _floats(a):
    """Inverse of the NaN/Inf-as-string JSON encoding."""
    return np.array([[float(v) for v in row] for row in a]) if a and isinstance(a[0], list) else \
        np.array([float(v) for v in a])


def solution_to_dict(sol):
    from .reports import jsonable

    q = sol.potential
    return jsonable({
        "graph": graph_to_dict(sol.graph, sol.mu),
        "times": sol.times,
        "values": sol.values,
        "provenance": sol.provenance,
        "domain": None if sol.domain is None else np.flatnonzero(sol.domain),
        "potential": None if q is None else {"values": q.values, "times": q.times, "theta": q.theta,
                                             "eta": q.eta},
        "diagnostics": sol.diagnostics,
    })


def save_solution(path, sol):
    with open(path, "w") as fh:
        json.dump(solution_to_dict(sol), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_solution(path):
    from .heat import HeatSolution, Potential

    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    for key in ("graph", "times", "values", "provenance"):
        if key not in d:
            raise ParseError(f"solution file missing {key!r}")
    G, mu = graph_from_dict(d["graph"])
    times = _floats(d["times"])
    values = _floats(d["values"])
    if values.shape != (len(times), G.n):
        raise ParseError("solution values do not match the grid and graph")
    domain = None
    if d.get("domain") is not None:
        domain = np.zeros(G.n, bool)
        domain[np.asarray(d["domain"], dtype=np.int64)] = True
    q = None
    if d.get("potential") is not None:
        p = d["potential"]
        qv = _floats(p["values"])
        qt = _floats(p["times"])
        if qv.shape[0] == 1:
            q = Potential(G, mu, qv[0], theta=p.get("theta"), eta=p.get("eta"))
        else:
            q = Potential(G, mu, qv, qt, theta=p.get("theta"), eta=p.get("eta"))
    return HeatSolution(G, mu, times, values, d["provenance"], domain, q, d.get("diagnostics", {}))
