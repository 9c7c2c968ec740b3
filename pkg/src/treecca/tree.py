"""Finite tree truncations in breadth-first layout, and initial colorings.

Two truncation kinds are supported:

* ``dary-ball``: the rooted d-ary tree cut at a given depth (root has d
  children, every other internal node has d children).
* ``regular-ball``: the ball of a given radius in the (d+1)-regular tree
  (root has d+1 children, every other internal node has d children).

Nodes are laid out breadth-first so that depth bands are contiguous and the
children of each node form one contiguous index range; level-wise dynamics
passes and the marking DP then scan memory linearly.

Colorings are sampled from the uniform product measure with a counter-based
scheme: the color of node i in trial j under master seed s is a pure
function of (s, j, i), independent of evaluation order, thread scheduling,
and tree size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError, TopologyMismatchError

MAX_NODE_COUNT = 2**31 - 1
MAX_KAPPA = 255

DARY_BALL = "dary-ball"
REGULAR_BALL = "regular-ball"
SUBTREE = "subtree"  # arbitrary finite rooted tree (witness replays etc.)


@dataclass(frozen=True, eq=False)
class TreeTopology:
    """A finite rooted tree in breadth-first arrays.

    parent[v] is v's parent (-1 at the root); the children of v are nodes
    child_ptr[v]:child_ptr[v+1]; level_ptr[s]:level_ptr[s+1] is the band of
    nodes at depth s.  deg_inf[v] is v's degree in the corresponding
    infinite tree (meaningful for the ball kinds only).
    """

    kind: str
    d: int
    depth: int
    node_count: int
    parent: np.ndarray      # int32, sentinel -1 at root
    child_ptr: np.ndarray   # int64, length node_count + 1
    node_depth: np.ndarray  # int32
    level_ptr: np.ndarray   # int64, length depth + 2
    root: int = 0

    def children(self, v: int) -> np.ndarray:
        return np.arange(self.child_ptr[v], self.child_ptr[v + 1], dtype=np.int64)

    def deg_inf(self, v: int) -> int:
        """Degree of v in the infinite tree this ball truncates."""
        if self.kind == DARY_BALL:
            return self.d if v == self.root else self.d + 1
        if self.kind == REGULAR_BALL:
            return self.d + 1
        raise ParameterError(f"deg_inf is undefined for kind={self.kind!r}")

    def level_counts(self) -> np.ndarray:
        return np.diff(self.level_ptr)

    def __eq__(self, other):
        if not isinstance(other, TreeTopology):
            return NotImplemented
        return (self.kind, self.d, self.depth, self.node_count) == (
            other.kind, other.d, other.depth, other.node_count)


def _build_from_level_counts(kind, d, depth, counts):
    """Assemble BFS parent/child tables from per-level node counts."""
    n = int(np.sum(counts))
    level_ptr = np.zeros(depth + 2, dtype=np.int64)
    np.cumsum(counts, out=level_ptr[1:])
    node_depth = np.repeat(np.arange(depth + 1, dtype=np.int32), counts)
    n_children = np.zeros(n, dtype=np.int64)
    for s in range(depth):
        lo, hi = level_ptr[s], level_ptr[s + 1]
        per = (level_ptr[s + 2] - level_ptr[s + 1]) // (hi - lo)
        n_children[lo:hi] = per
    # children of node v are exactly the nodes 1..n-1 in BFS order, so
    # child_ptr is the shifted running sum of per-node child counts
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(n_children, out=child_ptr[1:])
    child_ptr += 1
    parent = np.full(n, -1, dtype=np.int32)
    if n > 1:
        parent[1:] = np.repeat(np.arange(n, dtype=np.int32), n_children)
    return TreeTopology(kind=kind, d=d, depth=depth, node_count=n,
                        parent=parent, child_ptr=child_ptr,
                        node_depth=node_depth, level_ptr=level_ptr)


def _check_capacity(n: int):
    if n > MAX_NODE_COUNT:
        raise CapacityError(
            f"tree would have {n} nodes, above the {MAX_NODE_COUNT} limit")


def build_dary_ball(d: int, depth: int) -> TreeTopology:
    """Rooted d-ary tree truncated at the given depth.

    node_count = (d^(depth+1) - 1) / (d - 1).
    """
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    n = (d ** (depth + 1) - 1) // (d - 1)
    _check_capacity(n)
    counts = np.array([d ** s for s in range(depth + 1)], dtype=np.int64)
    return _build_from_level_counts(DARY_BALL, d, depth, counts)


def build_regular_ball(d: int, radius: int) -> TreeTopology:
    """Radius-r ball of the (d+1)-regular tree.

    node_count = 1 + (d+1) (d^radius - 1) / (d - 1).
    """
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    if radius < 0:
        raise ParameterError(f"radius must be >= 0, got {radius}")
    n = 1 + (d + 1) * (d ** radius - 1) // (d - 1)
    _check_capacity(n)
    counts = [1] + [(d + 1) * d ** (s - 1) for s in range(1, radius + 1)]
    return _build_from_level_counts(REGULAR_BALL, d, radius,
                                    np.array(counts, dtype=np.int64))


def build_subtree(parent_of: np.ndarray) -> TreeTopology:
    """Arbitrary finite rooted tree from a parent array already in BFS order.

    Requires parent_of[0] == -1 and parent_of[v] < v for v >= 1, with the
    children of each node contiguous (as produced by a BFS relabeling).
    """
    parent = np.asarray(parent_of, dtype=np.int32)
    n = parent.shape[0]
    if n == 0 or parent[0] != -1:
        raise ParameterError("parent array must start with -1 at the root")
    if n > 1 and not np.all(parent[1:] >= 0):
        raise ParameterError("only node 0 may be the root")
    if n > 1 and (np.any(parent[1:] >= np.arange(1, n)) or
                  np.any(np.diff(parent[1:]) < 0)):
        raise ParameterError("parent array is not in BFS order")
    _check_capacity(n)
    n_children = np.bincount(parent[1:], minlength=n).astype(np.int64) if n > 1 \
        else np.zeros(1, dtype=np.int64)
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(n_children, out=child_ptr[1:])
    child_ptr += 1
    node_depth = np.zeros(n, dtype=np.int32)
    for v in range(1, n):  # BFS order: the parent's depth is already final
        node_depth[v] = node_depth[parent[v]] + 1
    depth = int(node_depth.max())
    level_ptr = np.zeros(depth + 2, dtype=np.int64)
    np.cumsum(np.bincount(node_depth, minlength=depth + 1), out=level_ptr[1:])
    return TreeTopology(kind=SUBTREE, d=0, depth=depth, node_count=n,
                        parent=parent, child_ptr=child_ptr,
                        node_depth=node_depth, level_ptr=level_ptr)


@dataclass
class Coloring:
    """One synchronous-time color snapshot over a topology."""

    kappa: int
    colors: np.ndarray  # uint8, one entry per node
    topology: TreeTopology = field(repr=False)

    def __post_init__(self):
        if not (3 <= self.kappa <= MAX_KAPPA):
            raise ParameterError(
                f"kappa must be in [3, {MAX_KAPPA}], got {self.kappa}")
        if self.colors.shape[0] != self.topology.node_count:
            raise ParameterError("colors length does not match topology")

    def copy(self) -> "Coloring":
        return Coloring(self.kappa, self.colors.copy(), self.topology)


def _philox_raw(master_seed: int, trial_index: int, round_index: int, n: int):
    key = np.array([master_seed, trial_index], dtype=np.uint64)
    counter = np.array([0, 0, round_index, 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter).random_raw(n)


def sample_uniform_coloring(topology: TreeTopology, kappa: int,
                            master_seed: int, trial_index: int) -> Coloring:
    """Draw a uniform product coloring, bit-reproducible per (seed, trial).

    Node i's color is the i-th draw of a Philox stream keyed by
    (master_seed, trial_index); rejection against the largest multiple of
    kappa below 2^64 keeps the distribution exactly uniform (a rejection is
    a ~1e-17 event per node, resolved from a disjoint counter block).
    """
    if not (3 <= kappa <= MAX_KAPPA):
        raise ParameterError(f"kappa must be in [3, {MAX_KAPPA}], got {kappa}")
    if not (0 <= master_seed < 2**64):
        raise ParameterError("master_seed must fit in 64 bits")
    if not (0 <= trial_index < 2**64):
        raise ParameterError("trial_index must be a nonnegative 64-bit integer")
    n = topology.node_count
    raw = _philox_raw(master_seed, trial_index, 0, n)
    rem = (1 << 64) % kappa
    if rem:
        limit = np.uint64((1 << 64) - rem)
        bad = raw >= limit
        round_index = 1
        while bad.any():  # pragma: no cover - astronomically rare
            fresh = _philox_raw(master_seed, trial_index, round_index, n)
            raw = np.where(bad, fresh, raw)
            bad = raw >= limit
            round_index += 1
    colors = (raw % np.uint64(kappa)).astype(np.uint8)
    return Coloring(kappa=kappa, colors=colors, topology=topology)


def agree_on_ball(c1: Coloring, c2: Coloring, radius: int) -> bool:
    """True iff the colorings agree at every node of depth <= radius."""
    if c1.topology != c2.topology:
        raise TopologyMismatchError("colorings live on different topologies")
    topo = c1.topology
    if radius > topo.depth:
        raise ParameterError(
            f"radius {radius} exceeds truncation depth {topo.depth}")
    hi = topo.level_ptr[radius + 1]
    return bool(np.array_equal(c1.colors[:hi], c2.colors[:hi]))
