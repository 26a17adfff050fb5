"""
Finite ultrametric measure spaces represented as rooted ball trees.

A space is a hierarchy of closed balls: internal nodes carry radius labels
that strictly decrease from the root, leaves carry the points and their
masses.  The distance of two points is the radius label of their lowest
common ancestor, so the strong triangle inequality

    d(x, y) <= max(d(x, z), d(z, y))

holds by construction and two balls are always nested or disjoint.

Leaves are stored in depth-first order (the canonical point order), which
makes every ball a contiguous slice of the point array and keeps all
derived matrices reproducible bit for bit across runs.

Balls are closed sets {y : d(x, y) <= r}; tail events elsewhere in the
package use the strict inequality d > r.
"""

import csv
import io
import json

import numpy as np

from .errors import (
    EmptySpace,
    NonDecreasingRadii,
    NonPositiveMass,
    NotUltrametric,
    UnknownPoint,
)
from .reporting import CheckReport, record

# Nested radius labels must drop by at least this much to stay unambiguous.
RADIUS_GAP = 1e-12


class _Node:
    """Ball-tree node; leaves have no children and radius 0."""

    __slots__ = ("radius", "children", "parent", "start", "stop", "volume", "height")

    def __init__(self, radius: float, children=()):
        self.radius = float(radius)
        self.children = list(children)
        self.parent = None
        self.start = 0
        self.stop = 0
        self.volume = 0.0
        self.height = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self):
        return f"_Node(r={self.radius}, [{self.start}:{self.stop}])"


class Ball:
    """A closed ball of the space: a tree node viewed as a point set.

    Equality and hashing are by member set (leaf slice), so two nodes of a
    single-child chain describing the same set compare equal.
    """

    __slots__ = ("space", "node")

    def __init__(self, space: "UltrametricSpace", node: _Node):
        self.space = space
        self.node = node

    @property
    def radius(self) -> float:
        return self.node.radius

    @property
    def start(self) -> int:
        return self.node.start

    @property
    def stop(self) -> int:
        return self.node.stop

    @property
    def volume(self) -> float:
        return self.node.volume

    @property
    def members(self) -> tuple:
        return self.space.ids[self.node.start:self.node.stop]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.node.start, self.node.stop)

    def indicator(self) -> np.ndarray:
        out = np.zeros(len(self.space))
        out[self.node.start:self.node.stop] = 1.0
        return out

    def contains_index(self, i: int) -> bool:
        return self.node.start <= i < self.node.stop

    def __contains__(self, point_id) -> bool:
        return self.contains_index(self.space.index(point_id))

    def __len__(self) -> int:
        return self.node.stop - self.node.start

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Ball)
            and self.space is other.space
            and self.node.start == other.node.start
            and self.node.stop == other.node.stop
        )

    def __hash__(self) -> int:
        return hash((id(self.space), self.node.start, self.node.stop))

    def __repr__(self):
        return f"Ball(r={self.radius}, members={list(self.members)})"


class UltrametricSpace:
    """Finite ultrametric measure space backed by a rooted ball tree.

    Immutable after construction; safe for concurrent reads.

    Attributes
    ----------
    ids : tuple
        Point identifiers in canonical depth-first leaf order.
    masses : ndarray
        Point masses mu(x) > 0, aligned with `ids`.
    diam : float
        Radius label of the root (0 for a singleton).
    """

    def __init__(self, root: _Node, ids, masses):
        if len(ids) == 0:
            raise EmptySpace("space has no points")
        self.root = root
        self.ids = tuple(str(i) for i in ids)
        self.masses = np.asarray(masses, dtype=float)
        if np.any(self.masses <= 0.0) or not np.all(np.isfinite(self.masses)):
            bad = int(np.argmin(self.masses))
            raise NonPositiveMass(
                f"point {self.ids[bad]!r} has mass {self.masses[bad]}; masses must be > 0"
            )
        if len(set(self.ids)) != len(self.ids):
            seen, dupes = set(), set()
            for p in self.ids:
                (dupes if p in seen else seen).add(p)
            raise EmptySpace(f"duplicate point ids: {sorted(dupes)}")
        self.masses.setflags(write=False)
        self._index = {p: i for i, p in enumerate(self.ids)}

        self._nodes: list[_Node] = []
        self._leaf_nodes: list[_Node] = [None] * len(self.ids)
        self._finalize(root)
        self._validate_radii(root)
        self._dmat = None

    # -- construction helpers ---------------------------------------------

    def _finalize(self, node: _Node, parent=None) -> None:
        node.parent = parent
        self._nodes.append(node)
        if node.is_leaf:
            # start/stop assigned by the builder
            node.volume = float(self.masses[node.start])
            node.height = 0
            self._leaf_nodes[node.start] = node
            return
        for child in node.children:
            self._finalize(child, node)
        node.start = node.children[0].start
        node.stop = node.children[-1].stop
        node.volume = float(sum(c.volume for c in node.children))
        node.height = 1 + max(c.height for c in node.children)

    def _validate_radii(self, node: _Node) -> None:
        for child in node.children:
            if node.radius - child.radius < RADIUS_GAP:
                raise NonDecreasingRadii(
                    f"child radius {child.radius} under parent radius {node.radius}: "
                    f"labels must strictly decrease (gap >= {RADIUS_GAP})"
                )
            self._validate_radii(child)

    # -- basic queries -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def diam(self) -> float:
        return self.root.radius

    @property
    def total_mass(self) -> float:
        return float(self.root.volume)

    def index(self, point_id) -> int:
        key = str(point_id)
        if key not in self._index:
            raise UnknownPoint(f"unknown point id {point_id!r}")
        return self._index[key]

    def distance(self, x, y) -> float:
        """Radius of the lowest common ancestor ball; 0 iff x == y."""
        i, j = self.index(x), self.index(y)
        if i == j:
            return 0.0
        a, b = self._leaf_nodes[i], self._leaf_nodes[j]
        while a is not b:
            if a.height < b.height:
                a = a.parent
            elif b.height < a.height:
                b = b.parent
            else:
                a = a.parent
                b = b.parent
        return a.radius

    def distance_matrix(self) -> np.ndarray:
        """Full pairwise distance matrix in canonical point order (cached)."""
        if self._dmat is None:
            n = len(self.ids)
            D = np.zeros((n, n))
            for node in self._nodes:
                if len(node.children) < 2:
                    continue
                for i, ci in enumerate(node.children):
                    for cj in node.children[i + 1:]:
                        D[ci.start:ci.stop, cj.start:cj.stop] = node.radius
                        D[cj.start:cj.stop, ci.start:ci.stop] = node.radius
            D.setflags(write=False)
            self._dmat = D
        return self._dmat

    @property
    def distance_levels(self) -> tuple:
        """Sorted distinct positive distance values realised by point pairs."""
        vals = {n.radius for n in self._nodes if len(n.children) >= 2}
        return tuple(sorted(vals))

    @property
    def radii(self) -> tuple:
        """Sorted distinct radius labels of all internal nodes."""
        vals = {n.radius for n in self._nodes if not n.is_leaf}
        return tuple(sorted(vals))

    # -- balls ----------------------------------------------------------------

    def ball(self, x, r: float) -> Ball:
        """The closed ball {y : d(x, y) <= r} as a tree node or singleton."""
        if r < 0:
            raise ValueError(f"ball radius must be >= 0, got {r}")
        node = self._leaf_nodes[self.index(x)]
        while node.parent is not None and node.parent.radius <= r:
            node = node.parent
        return Ball(self, node)

    def partition(self, r: float) -> list:
        """The pairwise-disjoint balls of radius r covering the space."""
        if r < 0:
            raise ValueError(f"partition radius must be >= 0, got {r}")
        cells = []

        def select(node):
            if node.radius <= r:
                cells.append(Ball(self, node))
            else:
                for child in node.children:
                    select(child)

        select(self.root)
        return cells

    def volume(self, x, r: float) -> float:
        return self.ball(x, r).volume

    def balls(self, include_points: bool = False) -> list:
        """All tree-node balls in depth-first order.

        With `include_points`, singleton leaf balls are appended as well.
        """
        out = [Ball(self, n) for n in self._nodes if not n.is_leaf]
        if include_points:
            out.extend(Ball(self, n) for n in self._nodes if n.is_leaf)
        return out

    def whole(self) -> Ball:
        return Ball(self, self.root)

    def nearest_distance(self, x) -> float:
        """Distance from x to its nearest distinct point (0 for singleton space)."""
        node = self._leaf_nodes[self.index(x)]
        while node.parent is not None:
            node = node.parent
            if len(node.children) >= 2 or node.stop - node.start > 1:
                return node.radius
        return 0.0

    # -- serialisation ----------------------------------------------------------

    def to_spec(self) -> dict:
        """Nested dict describing the tree; inverse of `build_tree`."""

        def emit(node):
            if node.is_leaf:
                return {"id": self.ids[node.start], "mass": float(self.masses[node.start])}
            return {"radius": node.radius, "children": [emit(c) for c in node.children]}

        return emit(self.root)

    def __repr__(self):
        return f"UltrametricSpace(n={len(self.ids)}, diam={self.diam})"


# -- builders -------------------------------------------------------------------


def build_tree(spec: dict) -> UltrametricSpace:
    """Build a space from a nested ball description.

    `spec` is a dict {"radius": R, "children": [...]} whose children are
    either further ball dicts or leaf dicts {"id": s, "mass": m}; the key
    "leaves" is accepted as a synonym for an all-leaf children list.  A bare
    leaf dict describes a singleton space.
    """
    ids: list = []
    masses: list = []

    def parse(obj):
        if "id" in obj:
            node = _Node(0.0)
            node.start = len(ids)
            node.stop = node.start + 1
            ids.append(obj["id"])
            masses.append(float(obj.get("mass", 1.0)))
            return node
        if "radius" not in obj:
            raise EmptySpace(f"node needs 'radius' or 'id': {obj!r}")
        radius = float(obj["radius"])
        if radius <= 0:
            raise NonDecreasingRadii(f"ball radius must be > 0, got {radius}")
        entries = obj.get("children", obj.get("leaves"))
        if not entries:
            raise EmptySpace("ball with no children")
        return _Node(radius, [parse(e) for e in entries])

    root = parse(spec)
    return UltrametricSpace(root, ids, masses)


def from_distance_matrix(matrix, masses=None, ids=None) -> UltrametricSpace:
    """Build the ball tree of an ultrametric distance matrix.

    Merges points at increasing distance thresholds; the round trip
    `space.distance_matrix()` reproduces the input exactly.  Raises
    NotUltrametric with a violating triple when the input is not an
    ultrametric.
    """
    D = np.asarray(matrix, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    n = D.shape[0]
    if ids is None:
        ids = [str(i) for i in range(n)]
    ids = [str(i) for i in ids]
    if masses is None:
        masses = np.ones(n)
    masses = np.asarray(masses, dtype=float)
    if not np.array_equal(D, D.T):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diagonal(D) != 0.0):
        raise ValueError("distance matrix must have zero diagonal")
    off = ~np.eye(n, dtype=bool)
    if n > 1 and (np.any(D[off] <= 0.0) or not np.all(np.isfinite(D[off]))):
        raise ValueError("off-diagonal distances must be positive and finite")

    # exhaustive strong-triangle scan, one midpoint at a time
    for z in range(n):
        cap = np.maximum.outer(D[:, z], D[z, :])
        bad = D > cap
        bad[z, :] = False
        bad[:, z] = False
        np.fill_diagonal(bad, False)
        if bad.any():
            x, y = map(int, np.argwhere(bad)[0])
            raise NotUltrametric(
                f"d({ids[x]},{ids[y]})={D[x, y]} > "
                f"max(d({ids[x]},{ids[z]}), d({ids[z]},{ids[y]}))={cap[x, y]}",
                witness=(ids[x], ids[z], ids[y]),
            )

    # leaves, then single-linkage merges at each threshold in turn
    leaves = []
    for i in range(n):
        node = _Node(0.0)
        node.start = node.stop = i  # original index; reassigned below
        leaves.append(node)
    clusters = [(i, leaves[i], i) for i in range(n)]  # (min original idx, node, rep)

    for theta in np.unique(D[off]) if n > 1 else []:
        parent = list(range(len(clusters)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                if D[clusters[a][2], clusters[b][2]] <= theta:
                    parent[find(b)] = find(a)
        groups: dict[int, list] = {}
        for a in range(len(clusters)):
            groups.setdefault(find(a), []).append(clusters[a])
        merged = []
        for members in groups.values():
            if len(members) == 1:
                merged.append(members[0])
                continue
            members.sort(key=lambda c: c[0])
            node = _Node(float(theta), [c[1] for c in members])
            merged.append((members[0][0], node, members[0][2]))
        merged.sort(key=lambda c: c[0])
        clusters = merged

    root = clusters[0][1]

    # canonical depth-first leaf order
    order: list[int] = []

    def renumber(node):
        if node.is_leaf:
            order.append(node.start)
            node.start = len(order) - 1
            node.stop = node.start + 1
            return
        for child in node.children:
            renumber(child)

    renumber(root)
    space = UltrametricSpace(root, [ids[i] for i in order], masses[order])

    got = space.distance_matrix()
    want = D[np.ix_(order, order)]
    if not np.array_equal(got, want):
        i, j = map(int, np.argwhere(got != want)[0])
        raise NotUltrametric(
            f"round trip failed at ({space.ids[i]},{space.ids[j]})",
            witness=(space.ids[i], space.ids[i], space.ids[j]),
        )
    return space


def from_distance_csv(text_or_path, masses=None) -> UltrametricSpace:
    """Read a distance matrix CSV (header row of ids) into a space."""
    if isinstance(text_or_path, str) and "\n" not in text_or_path:
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = text_or_path
    rows = list(csv.reader(io.StringIO(text)))
    ids = [c.strip() for c in rows[0]]
    D = np.array([[float(v) for v in row] for row in rows[1:len(ids) + 1]])
    if masses is not None and isinstance(masses, dict):
        masses = [masses[i] for i in ids]
    return from_distance_matrix(D, masses=masses, ids=ids)


def load_space(path) -> UltrametricSpace:
    """Load a space from a JSON tree file."""
    with open(path, "r", encoding="utf-8") as fh:
        return build_tree(json.load(fh))


def save_space(space: UltrametricSpace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.to_spec(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- validation ------------------------------------------------------------------


def validate_ultrametric(space: UltrametricSpace, distance_matrix=None) -> CheckReport:
    """Exhaustively check the strong triangle inequality and ball dichotomy.

    An explicit `distance_matrix` may be supplied to audit external data
    against this space's structure (used by negative-control tests).
    """
    report = CheckReport()
    D = space.distance_matrix() if distance_matrix is None else np.asarray(distance_matrix)
    n = len(space)

    witness = None
    worst = 0.0
    for z in range(n):
        cap = np.maximum.outer(D[:, z], D[z, :])
        excess = D - cap
        excess[z, :] = -np.inf
        excess[:, z] = -np.inf
        np.fill_diagonal(excess, -np.inf)
        m = float(excess.max()) if n > 1 else 0.0
        if m > worst:
            worst = m
            x, y = map(int, np.unravel_index(np.argmax(excess), excess.shape))
            witness = {"triple": (space.ids[x], space.ids[z], space.ids[y]), "excess": m}
    report.add(record(
        "ultrametric.strong_triangle",
        {"n": n},
        measured=worst,
        bound=0.0,
        margin=0.0,
        ok=worst <= 0.0,
        witness=witness,
    ))

    # dichotomy: every pair of node balls is nested or disjoint
    spans = [(nd.start, nd.stop) for nd in space._nodes]
    bad_pair = None
    for i, (a0, a1) in enumerate(spans):
        for b0, b1 in spans[i + 1:]:
            disjoint = a1 <= b0 or b1 <= a0
            nested = (a0 <= b0 and b1 <= a1) or (b0 <= a0 and a1 <= b1)
            if not (disjoint or nested):
                bad_pair = {"spans": [(a0, a1), (b0, b1)]}
                break
        if bad_pair:
            break
    report.add(record(
        "ultrametric.ball_dichotomy",
        {"nodes": len(spans)},
        measured=0.0 if bad_pair is None else 1.0,
        bound=0.0,
        margin=0.0,
        ok=bad_pair is None,
        witness=bad_pair,
    ))
    return report
