"""Exact lattice calculus on negative-definite plumbing trees.

A plumbing graph is a connected tree whose vertices carry integer Euler
(self-intersection) numbers.  It determines the intersection lattice L
generated by the base classes E_v, with pairing matrix e_v on the diagonal
and 1 for every edge.  This module provides the graph type, exact cycle
arithmetic over L and its rational extension, the dual basis E*_v with
(E*_u, E_w) = -delta_uw, the canonical cycle solving the adjunction
equations (-Z_K + E_v, E_v) + 2 = 0, the Riemann-Roch quantity
chi(x) = -(x, x - Z_K)/2, Lipman-cone membership tests, Laufer's descent
to the minimal cycle, induced subgraphs, and blow-ups with their pullbacks.

All arithmetic is exact: integers stay Python ints and rational data uses
``fractions.Fraction``.  Floats are rejected.

Graph files use one statement per line (or several separated by ``;``):

    v1: -2          # declare vertex v1 with Euler number -2
    edge v1 v2      # declare an edge

A JSON document ``{"vertices": [{"id": ..., "euler": ...}], "edges":
[[a, b], ...]}`` is accepted interchangeably.  Cycles are written as
space-separated ``id:value`` pairs with integer or ``p/q`` values; the
zero cycle may be written ``0`` or left empty.
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from functools import cached_property

from .errors import (
    DuplicateVertex,
    GraphMismatch,
    GraphSyntaxError,
    NotATree,
    NotInLprime,
    NotNegativeDefinite,
    UnknownVertex,
)

_ID_RE = re.compile(r"[A-Za-z0-9_.@+~'-]+\Z")


def as_exact(value):
    """Return ``value`` as an int or a reduced Fraction; reject floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not cycle coefficients")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else value
    raise TypeError(
        "exact integer or Fraction required, got %s" % type(value).__name__
    )


def parse_coeff_map(text):
    """Parse ``"v:2 w:-1/3"`` into an id -> coefficient dict.

    ``"0"``, ``""`` and whitespace denote the zero map.
    """
    out = {}
    stripped = text.strip()
    if stripped in ("", "0"):
        return out
    for token in stripped.split():
        if ":" not in token:
            raise GraphSyntaxError("bad coefficient token %r" % token)
        vid, _, raw = token.partition(":")
        if not vid or not raw:
            raise GraphSyntaxError("bad coefficient token %r" % token)
        if vid in out:
            raise GraphSyntaxError("vertex %r repeated in cycle" % vid)
        try:
            out[vid] = as_exact(Fraction(raw))
        except (ValueError, ZeroDivisionError):
            raise GraphSyntaxError("bad coefficient %r" % raw) from None
    return out


def format_coeff_map(mapping):
    """Inverse of :func:`parse_coeff_map`; sorted by id, zeros dropped."""
    parts = [
        "%s:%s" % (vid, mapping[vid])
        for vid in sorted(mapping)
        if mapping[vid] != 0
    ]
    return " ".join(parts) if parts else "0"


def _leading_minors(matrix):
    """All leading principal minors of an integer matrix, by fraction-free
    (Bareiss) elimination.  Stops early after a zero minor."""
    n = len(matrix)
    m = [list(row) for row in matrix]
    minors = []
    prev = 1
    for k in range(n):
        piv = m[k][k]
        minors.append(piv)
        if piv == 0:
            return minors
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * piv - m[i][k] * m[k][j]) // prev
        prev = piv
    return minors


def _invert_exact(matrix):
    """Exact inverse of a nonsingular matrix, as Fractions."""
    n = len(matrix)
    aug = [
        [Fraction(matrix[i][j]) for j in range(n)]
        + [Fraction(int(i == j)) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


class PlumbingGraph:
    """Connected negative-definite plumbing tree with exact derived data.

    Vertices are user-chosen id strings, kept internally in lexicographic
    order for deterministic output.  Instances are immutable after
    construction and safe to share between threads.
    """

    def __init__(self, vertices, edges=(), *, validate=True):
        ids = []
        euler = []
        seen = set()
        for vid, e in vertices:
            if not isinstance(vid, str) or not _ID_RE.match(vid) or vid == "edge":
                raise GraphSyntaxError("invalid vertex id %r" % (vid,))
            if vid in seen:
                raise DuplicateVertex(vid)
            if not isinstance(e, int) or isinstance(e, bool):
                raise GraphSyntaxError("Euler number of %s must be an integer" % vid)
            seen.add(vid)
            ids.append(vid)
            euler.append(e)
        order = sorted(range(len(ids)), key=lambda i: ids[i])
        self.ids = tuple(ids[i] for i in order)
        self.euler = tuple(euler[i] for i in order)
        self.index = {vid: i for i, vid in enumerate(self.ids)}
        pairs = set()
        for a, b in edges:
            for vid in (a, b):
                if vid not in self.index:
                    raise UnknownVertex(vid)
            i, j = sorted((self.index[a], self.index[b]))
            if i == j:
                raise NotATree("self loop at %s" % a)
            if (i, j) in pairs:
                raise NotATree("duplicate edge %s %s" % (a, b))
            pairs.add((i, j))
        self.edge_pairs = tuple(sorted(pairs))
        adj = [[] for _ in self.ids]
        for i, j in self.edge_pairs:
            adj[i].append(j)
            adj[j].append(i)
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)
        # (Z_K, E_v) = e_v + 2 by adjunction; chi never needs Z_K itself.
        self.kvec = tuple(e + 2 for e in self.euler)
        self._key = (self.ids, self.euler, self.edge_pairs)
        if validate:
            self.validate()

    # -- construction helpers ------------------------------------------------

    @property
    def n(self):
        return len(self.ids)

    def validate(self):
        n = self.n
        if n == 0:
            raise NotATree("empty graph")
        if len(self.edge_pairs) != n - 1:
            raise NotATree(
                "tree needs %d edges, found %d" % (n - 1, len(self.edge_pairs))
            )
        seen = {0}
        stack = [0]
        while stack:
            for w in self.adjacency[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n:
            raise NotATree("graph is disconnected")
        for k, minor in enumerate(self.leading_minors, start=1):
            if (minor > 0) != (k % 2 == 0) or minor == 0:
                raise NotNegativeDefinite(
                    "leading minor %d is %d" % (k, minor)
                )
        return self

    def matrix(self):
        """Intersection form as a list of integer rows."""
        m = [[0] * self.n for _ in range(self.n)]
        for i, e in enumerate(self.euler):
            m[i][i] = e
        for i, j in self.edge_pairs:
            m[i][j] = 1
            m[j][i] = 1
        return m

    @cached_property
    def leading_minors(self):
        return tuple(_leading_minors(self.matrix()))

    @cached_property
    def determinant(self):
        minors = self.leading_minors
        if len(minors) < self.n or minors[-1] == 0:
            raise NotNegativeDefinite("intersection form is singular")
        return minors[-1]

    @property
    def class_group_order(self):
        return abs(self.determinant)

    @cached_property
    def _inverse(self):
        return _invert_exact(self.matrix())

    @cached_property
    def _dual_columns(self):
        # E*_u solves I x = -e_u, so its coordinates are column u of -I^{-1}.
        inv = self._inverse
        return tuple(
            tuple(as_exact(-inv[i][u]) for i in range(self.n))
            for u in range(self.n)
        )

    @cached_property
    def _zk_coeffs(self):
        inv = self._inverse
        return tuple(
            as_exact(sum(inv[i][j] * self.kvec[j] for j in range(self.n)))
            for i in range(self.n)
        )

    # -- cycle factories -----------------------------------------------------

    def zero_cycle(self):
        return Cycle(self, (0,) * self.n)

    def unit_cycle(self, vid):
        i = self._vertex(vid)
        return Cycle(self, tuple(int(j == i) for j in range(self.n)))

    def reduced_cycle(self, support=None):
        """E_I = sum of E_v over ``support`` (default: all vertices)."""
        if support is None:
            return Cycle(self, (1,) * self.n)
        idxs = {self._vertex(v) for v in support}
        return Cycle(self, tuple(int(i in idxs) for i in range(self.n)))

    def cycle(self, mapping):
        coeffs = [0] * self.n
        for vid, val in mapping.items():
            coeffs[self._vertex(vid)] = as_exact(val)
        return Cycle(self, tuple(coeffs))

    def cycle_from_estar(self, coeffs):
        """The rational cycle sum(a_v * E*_v) for a mapping of a_v values."""
        total = [0] * self.n
        for vid, a in coeffs.items():
            col = self._dual_columns[self._vertex(vid)]
            a = as_exact(a)
            for i in range(self.n):
                total[i] += a * col[i]
        return Cycle(self, tuple(as_exact(t) for t in total))

    def parse_cycle(self, text):
        return self.cycle(self._check_known(parse_coeff_map(text)))

    def _check_known(self, mapping):
        for vid in mapping:
            if vid not in self.index:
                raise UnknownVertex(vid)
        return mapping

    def _vertex(self, vid):
        try:
            return self.index[vid]
        except KeyError:
            raise UnknownVertex(vid) from None

    # -- pairing and chi -----------------------------------------------------

    def pair_tuples(self, x, y):
        total = 0
        for i, e in enumerate(self.euler):
            if x[i] and y[i]:
                total += e * x[i] * y[i]
        for i, j in self.edge_pairs:
            total += x[i] * y[j] + x[j] * y[i]
        return as_exact(total) if not isinstance(total, int) else total

    def pair(self, x, y):
        """Intersection pairing (x, y), exact."""
        self._same_graph(x)
        self._same_graph(y)
        return self.pair_tuples(x.coeffs, y.coeffs)

    def chi_tuple(self, coeffs):
        """chi on a coefficient tuple: -((x, x) - sum x_v (e_v + 2)) / 2."""
        selfpair = self.pair_tuples(coeffs, coeffs)
        kterm = sum(c * k for c, k in zip(coeffs, self.kvec))
        val = -(selfpair - kterm)
        if isinstance(val, int):
            if val % 2 == 0:
                return val // 2
            return Fraction(val, 2)
        return as_exact(val / 2)

    def chi(self, x):
        """Riemann-Roch quantity chi(x) = -(x, x - Z_K)/2, exact."""
        self._same_graph(x)
        return self.chi_tuple(x.coeffs)

    def canonical_cycle(self):
        """The (anti)canonical cycle Z_K, a rational cycle in L'."""
        return Cycle(self, self._zk_coeffs)

    def dual_cycle(self, vid):
        """E*_v, the dual basis cycle with (E*_v, E_w) = -delta_vw."""
        return Cycle(self, self._dual_columns[self._vertex(vid)])

    def estar_coords(self, x):
        """Coordinates a with x = sum a_v E*_v, via a_v = -(x, E_v)."""
        self._same_graph(x)
        return {
            vid: as_exact(-self._pair_with_base(x.coeffs, i))
            for i, vid in enumerate(self.ids)
        }

    def _pair_with_base(self, coeffs, i):
        total = self.euler[i] * coeffs[i]
        for j in self.adjacency[i]:
            total += coeffs[j]
        return total

    def base_pairings(self, x):
        """The vector ((x, E_v))_v as a tuple, exact."""
        self._same_graph(x)
        return tuple(
            as_exact(self._pair_with_base(x.coeffs, i)) for i in range(self.n)
        )

    def in_dual_lattice(self, x):
        """Whether x lies in L', i.e. pairs integrally with every E_v."""
        return all(isinstance(p, int) for p in self.base_pairings(x))

    def in_neg_lipman(self, x):
        """Whether x is in -S', i.e. (x, E_v) >= 0 for every v."""
        pairings = self.base_pairings(x)
        if not all(isinstance(p, int) for p in pairings):
            raise NotInLprime(
                "cycle pairs non-integrally with the base: %s" % (x.pretty(),)
            )
        return all(p >= 0 for p in pairings)

    def minimal_cycle(self, *, rng=None):
        """Laufer descent from E to the minimal cycle of S' cap L.

        ``rng`` randomizes which violating vertex is raised next; the
        result is independent of that order.
        """
        coeffs = [1] * self.n
        pairings = [self._pair_with_base(coeffs, i) for i in range(self.n)]
        while True:
            bad = [i for i in range(self.n) if pairings[i] > 0]
            if not bad:
                return Cycle(self, tuple(coeffs))
            i = bad[0] if rng is None else rng.choice(bad)
            coeffs[i] += 1
            pairings[i] += self.euler[i]
            for j in self.adjacency[i]:
                pairings[j] += 1

    def cube_representative(self, x):
        """The unique y in L' with y - x integral and coefficients in [0, 1)."""
        pairings = self.base_pairings(x)
        if not all(isinstance(p, int) for p in pairings):
            raise NotInLprime("cycle is not in L': %s" % (x.pretty(),))
        return Cycle(
            self,
            tuple(as_exact(Fraction(c) - math.floor(c)) for c in x.coeffs),
        )

    def _same_graph(self, cycle):
        if cycle.graph._key != self._key:
            raise GraphMismatch("cycle lives on a different graph")

    # -- dunder --------------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, PlumbingGraph) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "PlumbingGraph(%d vertices, det=%s)" % (
            self.n,
            self.leading_minors[-1] if self.n else "?",
        )

    def describe(self):
        lines = ["%s: %d" % (vid, e) for vid, e in zip(self.ids, self.euler)]
        lines += [
            "edge %s %s" % (self.ids[i], self.ids[j]) for i, j in self.edge_pairs
        ]
        return "\n".join(lines)


class Cycle:
    """An exact (rational) cycle on a fixed plumbing graph.

    Integral cycles are elements of L; rational ones of L tensor Q.
    Coefficients are stored in the graph's canonical vertex order.
    """

    __slots__ = ("graph", "coeffs")

    def __init__(self, graph, coeffs):
        self.graph = graph
        coeffs = tuple(as_exact(c) for c in coeffs)
        if len(coeffs) != graph.n:
            raise GraphMismatch("coefficient count != vertex count")
        self.coeffs = coeffs

    # -- inspection ----------------------------------------------------------

    def __getitem__(self, vid):
        return self.coeffs[self.graph._vertex(vid)]

    def as_dict(self):
        return {
            vid: c for vid, c in zip(self.graph.ids, self.coeffs) if c != 0
        }

    def support(self):
        return frozenset(
            vid for vid, c in zip(self.graph.ids, self.coeffs) if c != 0
        )

    @property
    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    @property
    def is_integral(self):
        return all(isinstance(c, int) for c in self.coeffs)

    @property
    def is_effective(self):
        return all(c >= 0 for c in self.coeffs)

    def pretty(self):
        return format_coeff_map(self.as_dict())

    # -- arithmetic ----------------------------------------------------------

    def _binary(self, other, op):
        self.graph._same_graph(other)
        return Cycle(
            self.graph,
            tuple(op(a, b) for a, b in zip(self.coeffs, other.coeffs)),
        )

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self):
        return Cycle(self.graph, tuple(-c for c in self.coeffs))

    def __mul__(self, scalar):
        scalar = as_exact(scalar)
        return Cycle(self.graph, tuple(scalar * c for c in self.coeffs))

    __rmul__ = __mul__

    def meet(self, other):
        return self._binary(other, min)

    def join(self, other):
        return self._binary(other, max)

    def leq(self, other):
        """Coefficientwise partial order."""
        self.graph._same_graph(other)
        return all(a <= b for a, b in zip(self.coeffs, other.coeffs))

    def restrict(self, vertex_set):
        """Zero out all coefficients outside ``vertex_set`` (same graph)."""
        keep = {self.graph._vertex(v) for v in vertex_set}
        return Cycle(
            self.graph,
            tuple(c if i in keep else 0 for i, c in enumerate(self.coeffs)),
        )

    def on_graph(self, graph):
        """Re-key this cycle onto another graph carrying its support."""
        mapping = self.as_dict()
        for vid in mapping:
            if vid not in graph.index:
                raise UnknownVertex(vid)
        return graph.cycle(mapping)

    # -- dunder --------------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, Cycle)
            and self.graph._key == other.graph._key
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.graph._key, self.coeffs))

    def __repr__(self):
        return "Cycle(%s)" % self.pretty()


class SubgraphEmbedding:
    """An induced (possibly disconnected) subgraph with index maps.

    The induced graph is kept as a tuple of connected component
    :class:`PlumbingGraph` objects; vertex ids are shared with the parent.
    """

    def __init__(self, parent, vertex_set):
        vertex_set = frozenset(vertex_set)
        for vid in vertex_set:
            parent._vertex(vid)
        self.parent = parent
        self.vertex_set = vertex_set
        comps = []
        remaining = set(vertex_set)
        while remaining:
            seed = min(remaining)
            block = {seed}
            stack = [seed]
            while stack:
                for j in parent.adjacency[parent.index[stack.pop()]]:
                    w = parent.ids[j]
                    if w in remaining and w not in block:
                        block.add(w)
                        stack.append(w)
            remaining -= block
            ordered = sorted(block)
            comps.append(
                PlumbingGraph(
                    [(v, parent.euler[parent.index[v]]) for v in ordered],
                    [
                        (parent.ids[i], parent.ids[j])
                        for i, j in parent.edge_pairs
                        if parent.ids[i] in block and parent.ids[j] in block
                    ],
                )
            )
        self.components = tuple(sorted(comps, key=lambda g: g.ids))
        self.component_of = {}
        for k, comp in enumerate(self.components):
            for vid in comp.ids:
                self.component_of[vid] = k

    @property
    def ids(self):
        return self.vertex_set

    def restrict_cycle(self, x):
        """Coefficient restriction of a parent cycle, per component."""
        self.parent._same_graph(x)
        mapping = x.as_dict()
        return tuple(
            comp.cycle({v: mapping[v] for v in comp.ids if v in mapping})
            for comp in self.components
        )

    def __repr__(self):
        return "SubgraphEmbedding(%d vertices, %d components)" % (
            len(self.vertex_set),
            len(self.components),
        )


class BlowupMap:
    """One blow-up: a new (-1)-vertex attached at the center vertex."""

    def __init__(self, source, center, new_id=None):
        i = source._vertex(center)
        if new_id is None:
            k = 0
            new_id = "%s+%d" % (center, k)
            while new_id in source.index:
                k += 1
                new_id = "%s+%d" % (center, k)
        if new_id in source.index:
            raise DuplicateVertex(new_id)
        vertices = [
            (vid, e - 1 if vid == center else e)
            for vid, e in zip(source.ids, source.euler)
        ]
        vertices.append((new_id, -1))
        edges = [
            (source.ids[a], source.ids[b]) for a, b in source.edge_pairs
        ]
        edges.append((center, new_id))
        self.source = source
        self.center = center
        self.new_vertex = new_id
        self.target = PlumbingGraph(vertices, edges, validate=False)

    def pullback(self, x):
        """Pullback preserving all pairings; (pullback x, E_new) = 0."""
        self.source._same_graph(x)
        mapping = x.as_dict()
        c = mapping.get(self.center, 0)
        if c != 0:
            mapping[self.new_vertex] = c
        return self.target.cycle(mapping)


def parse_graph(text):
    """Parse graph text (line grammar or the JSON alternative)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphSyntaxError("bad JSON graph: %s" % exc) from None
        try:
            vertices = [(str(v["id"]), v["euler"]) for v in doc["vertices"]]
            edges = [(str(a), str(b)) for a, b in doc.get("edges", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphSyntaxError("bad JSON graph structure: %s" % exc) from None
        return PlumbingGraph(vertices, edges)
    vertices = []
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            if stmt.startswith("edge ") or stmt == "edge":
                parts = stmt.split()
                if len(parts) != 3:
                    raise GraphSyntaxError(
                        "line %d: edge needs two vertex ids" % lineno
                    )
                edges.append((parts[1], parts[2]))
            elif ":" in stmt:
                vid, _, raw = stmt.partition(":")
                vid = vid.strip()
                raw = raw.strip()
                try:
                    e = int(raw)
                except ValueError:
                    raise GraphSyntaxError(
                        "line %d: bad Euler number %r" % (lineno, raw)
                    ) from None
                vertices.append((vid, e))
            else:
                raise GraphSyntaxError("line %d: cannot parse %r" % (lineno, stmt))
    return PlumbingGraph(vertices, edges)


def parse_cycle(graph, text):
    return graph.parse_cycle(text)


def induce_subgraph(graph, vertex_set):
    return SubgraphEmbedding(graph, vertex_set)


def blow_up(graph, center, new_id=None):
    return BlowupMap(graph, center, new_id)
