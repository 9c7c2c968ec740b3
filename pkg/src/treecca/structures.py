"""Root-anchored structure detection by bottom-up dynamic programming.

Three structure variants over an initial coloring:

* rigid fort (slack theta-2): along every parent->child edge the child's
  color is not parent+1 mod kappa; each member needs at most theta-2
  neighbors outside the structure.
* strongly rigid fort (slack theta-1): neighboring colors differ by
  neither +1 nor -1 mod kappa; at most theta-1 outside neighbors.
* rainbow subtree: each child is exactly parent+1 mod kappa and every
  non-leaf member has theta such children.

The DP marks truncation leaves (depth R) as satisfying the structure, which
makes the probability that the root is unmarked on a depth-R ball exactly
the R-th iterate of the matching failure map in numerics (y_0 = 0).  An
internal node is marked iff enough of its children are marked along
qualifying edges: for the fort variants the requirement at v is
deg_inf(v) - slack - (1 if v is not the root), clamped at 0; for rainbow it
is theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidQueryError, NoWitnessError, ParameterError
from .tree import Coloring, TreeTopology, build_subtree

RIGID_FORT = "rigid-fort"
STRONGLY_RIGID_FORT = "strongly-rigid-fort"
RAINBOW = "rainbow"

_PRED_CODE = {
    RIGID_FORT: _kernels.PRED_RIGID,
    STRONGLY_RIGID_FORT: _kernels.PRED_STRONGLY_RIGID,
    RAINBOW: _kernels.PRED_RAINBOW,
}


@dataclass(frozen=True)
class StructureQuery:
    """A structure variant with its threshold parameters."""

    variant: str
    theta: int
    kappa: int

    def __post_init__(self):
        if self.variant not in _PRED_CODE:
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.theta < 1:
            raise ParameterError(f"theta must be >= 1, got {self.theta}")
        if self.kappa < 3:
            raise ParameterError(f"kappa must be >= 3, got {self.kappa}")

    @property
    def slack(self) -> int:
        """Allowed outside-neighbor count for the fort variants."""
        if self.variant == RIGID_FORT:
            return self.theta - 2
        if self.variant == STRONGLY_RIGID_FORT:
            return self.theta - 1
        raise ParameterError("rainbow queries have no slack")

    def requirement(self, topology: TreeTopology, v: int) -> int:
        """Marked qualifying children needed at v (leaves excepted)."""
        if self.variant == RAINBOW:
            return self.theta
        non_root = 1 if v != topology.root else 0
        return max(0, topology.deg_inf(v) - self.slack - non_root)

    def edge_ok(self, parent_color: int, child_color: int) -> bool:
        diff = (int(child_color) - int(parent_color)) % self.kappa
        if self.variant == RIGID_FORT:
            return diff != 1
        if self.variant == STRONGLY_RIGID_FORT:
            return diff not in (1, self.kappa - 1)
        return diff == 1


@dataclass
class MarkResult:
    """Per-node structure membership flags from one DP pass."""

    query: StructureQuery
    in_structure: np.ndarray  # uint8 per node
    root_marked: bool


def mark(topology: TreeTopology, coloring: Coloring, query: StructureQuery,
         leaf_base: np.ndarray | None = None) -> MarkResult:
    """Bottom-up marking pass for the query's structure.

    leaf_base overrides the depth-R base case (default: all marked); it
    exists so the DP's monotonicity in the leaf flags can be tested.
    """
    if coloring.kappa != query.kappa:
        raise ParameterError("coloring kappa does not match query")
    if topology.kind == "subtree":
        raise InvalidQueryError("structure marking needs a ball topology")
    if query.variant == RAINBOW and query.theta > topology.d:
        raise InvalidQueryError(
            f"rainbow query needs theta <= d, got theta={query.theta}, d={topology.d}")
    req_root = query.requirement(topology, topology.root)
    req_other = query.requirement(topology, topology.node_count - 1) \
        if topology.node_count > 1 else req_root
    marks = _kernels.mark_kernel(coloring.colors, topology.parent,
                                 topology.child_ptr, topology.level_ptr,
                                 query.kappa, _PRED_CODE[query.variant],
                                 req_root, req_other, leaf_base)
    return MarkResult(query=query, in_structure=marks,
                      root_marked=bool(marks[topology.root]))


@dataclass
class WitnessSubtree:
    """A concrete root-anchored subtree certifying a marked root.

    nodes is ascending; selected[v] lists the children kept at v (empty at
    witness leaves).  parent links and depths refer to the source topology.
    """

    variant: str
    nodes: np.ndarray
    selected: dict[int, list[int]] = field(repr=False)
    topology: TreeTopology = field(repr=False)

    @property
    def depth(self) -> int:
        return int(self.topology.node_depth[self.nodes].max())

    def node_depths(self) -> np.ndarray:
        return self.topology.node_depth[self.nodes]

    def to_tree(self) -> tuple[TreeTopology, np.ndarray]:
        """Relabel the witness as a standalone topology.

        Returns (tree, original_ids) with original_ids[i] the source node
        of standalone node i.  Witness nodes are already in BFS order of
        the source, which is a valid BFS order of the subtree.
        """
        ids = self.nodes
        index_of = {int(v): i for i, v in enumerate(ids)}
        par = np.full(len(ids), -1, dtype=np.int64)
        for i, v in enumerate(ids):
            p = int(self.topology.parent[v])
            if p >= 0 and p in index_of:
                par[i] = index_of[p]
        return build_subtree(par), ids


def extract_witness(topology: TreeTopology, coloring: Coloring,
                    marks: MarkResult) -> WitnessSubtree:
    """Greedy top-down witness from a marked root.

    At each non-leaf node, qualifying marked children are taken in
    ascending node-index order, exactly as many as the requirement (for
    rainbow exactly theta); ties are impossible by construction, which
    makes the output reproducible.
    """
    if not marks.root_marked:
        raise NoWitnessError("root is not marked for this query")
    query = marks.query
    colors = coloring.colors
    flags = marks.in_structure
    nodes: list[int] = []
    selected: dict[int, list[int]] = {}
    frontier = [topology.root]
    while frontier:
        v = frontier.pop()
        nodes.append(v)
        lo, hi = int(topology.child_ptr[v]), int(topology.child_ptr[v + 1])
        if lo == hi:
            selected[v] = []
            continue
        need = query.requirement(topology, v)
        chosen: list[int] = []
        cv = colors[v]
        for w in range(lo, hi):
            if len(chosen) == need:
                break
            if flags[w] and query.edge_ok(cv, colors[w]):
                chosen.append(w)
        if len(chosen) < need:
            raise NoWitnessError(
                f"node {v} is marked but lacks {need} qualifying children")
        selected[v] = chosen
        frontier.extend(chosen)
    nodes.sort()
    return WitnessSubtree(variant=query.variant,
                          nodes=np.array(nodes, dtype=np.int64),
                          selected=selected, topology=topology)


def verify_witness(topology: TreeTopology, coloring: Coloring,
                   witness: WitnessSubtree, query: StructureQuery) -> None:
    """Re-check the witness invariants; raises NoWitnessError on failure."""
    node_set = set(int(v) for v in witness.nodes)
    if topology.root not in node_set:
        raise NoWitnessError("witness does not contain the root")
    depth_r = topology.depth
    for v in witness.nodes:
        v = int(v)
        kids = witness.selected.get(v, [])
        for w in kids:
            if int(topology.parent[w]) != v:
                raise NoWitnessError(f"{w} is not a child of {v}")
            if not query.edge_ok(coloring.colors[v], coloring.colors[w]):
                raise NoWitnessError(f"edge {v}->{w} violates the predicate")
            if w not in node_set:
                raise NoWitnessError(f"selected child {w} missing from node list")
        if topology.node_depth[v] < depth_r and kids:
            need = query.requirement(topology, v)
            if query.variant == RAINBOW:
                if len(kids) != query.theta:
                    raise NoWitnessError(
                        f"rainbow node {v} selected {len(kids)} != theta children")
            elif len(kids) < need:
                raise NoWitnessError(f"node {v} selected fewer than {need} children")


def excitation_witness(topology: TreeTopology, gamma0: Coloring, t: int,
                       theta: int) -> WitnessSubtree:
    """Theta-ary depth-t subtree explaining a root excitation at time t.

    Replays the GHM run; level s of the witness holds nodes excited at time
    t-s, and each non-leaf selects its theta lowest-index children excited
    one step earlier.  In the initial coloring the witness satisfies: level
    t all excited, level t-1 all resting, and level t-1-m (m=1..kappa-2)
    in {0, kappa-1, ..., kappa-m}.
    """
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    if t > topology.depth:
        raise ParameterError(
            f"t={t} exceeds the light-cone validity bound {topology.depth}")
    kappa = gamma0.kappa
    snaps = [gamma0.colors.copy()]
    cur = gamma0.colors.copy()
    buf = np.empty_like(cur)
    for _ in range(t):
        _kernels.ghm_step_kernel(cur, buf, topology.parent, topology.child_ptr,
                                 kappa, theta)
        cur, buf = buf, cur
        snaps.append(cur.copy())
    if snaps[t][topology.root] != 1:
        raise NoWitnessError(f"root is not excited at time {t}")
    nodes: list[int] = []
    selected: dict[int, list[int]] = {}
    level = [topology.root]
    for s in range(t):
        want = snaps[t - s - 1]
        next_level: list[int] = []
        for v in level:
            nodes.append(v)
            lo, hi = int(topology.child_ptr[v]), int(topology.child_ptr[v + 1])
            chosen = [w for w in range(lo, hi) if want[w] == 1][:theta]
            if len(chosen) < theta:
                raise NoWitnessError(
                    f"node {v} lacks theta excited children at time {t - s - 1}")
            selected[v] = chosen
            next_level.extend(chosen)
        level = next_level
    for v in level:
        nodes.append(v)
        selected[v] = []
    nodes.sort()
    return WitnessSubtree(variant="excitation",
                          nodes=np.array(nodes, dtype=np.int64),
                          selected=selected, topology=topology)


def verify_excitation_witness(topology: TreeTopology, gamma0: Coloring,
                              witness: WitnessSubtree, t: int,
                              theta: int) -> None:
    """Check the initial-coloring level conditions of an excitation witness."""
    kappa = gamma0.kappa
    depths = topology.node_depth[witness.nodes]
    if int(depths.max()) != t:
        raise NoWitnessError(f"witness depth {int(depths.max())} != t={t}")
    for v, s in zip(witness.nodes, depths):
        c = int(gamma0.colors[v])
        if s == t:
            if c != 1:
                raise NoWitnessError(f"distance-{t} node {v} has color {c} != 1")
        elif s == t - 1:
            if c != 0:
                raise NoWitnessError(f"distance-{t-1} node {v} has color {c} != 0")
        else:
            m = t - 1 - int(s)
            if m <= kappa - 2:
                allowed = {0} | {kappa - j for j in range(1, m + 1)}
                if c not in allowed:
                    raise NoWitnessError(
                        f"distance-{t-1-m} node {v} color {c} not in {sorted(allowed)}")
        kids = witness.selected.get(int(v), [])
        if s < t and len(kids) != theta:
            raise NoWitnessError(f"internal node {v} has {len(kids)} != theta children")


def root_component_outside(topology: TreeTopology,
                           marks: MarkResult) -> tuple[np.ndarray, int]:
    """Connected component of the root among unmarked nodes, with its depth.

    Returns (sorted node array, max depth within the component); the empty
    component (root marked) reports depth -1.
    """
    flags = marks.in_structure
    if flags[topology.root]:
        return np.empty(0, dtype=np.int64), -1
    component: list[np.ndarray] = []
    frontier = np.array([topology.root], dtype=np.int64)
    while frontier.size:
        component.append(frontier)
        starts = topology.child_ptr[frontier]
        stops = topology.child_ptr[frontier + 1]
        counts = stops - starts
        if counts.sum() == 0:
            break
        # gather all children of the frontier via one repeat/cumsum expansion
        offsets = np.repeat(stops - counts.cumsum(), counts)
        kids = offsets + np.arange(int(counts.sum()), dtype=np.int64)
        frontier = kids[flags[kids] == 0]
    nodes = np.concatenate(component)
    nodes.sort()
    depth = int(topology.node_depth[nodes].max()) - int(topology.node_depth[topology.root])
    return nodes, depth


