"""
Marks, profiles and the bottom-up dynamic program for Annotated Dominated
Cluster Deletion over an unbreakable tree decomposition.

A mark of an adhesion A describes how a solution restricted to a cone meets
A: deleted vertices s_a, dominators d_a, red vertices u_a left to be dominated
from outside, an upper bound k_a on deletions outside A, and a partition of
the surviving adhesion vertices with an upper bound on dominators per part.
Components of the cone minus the solution that share a part share its
budget. A component meeting several parts draws on their summed budgets
less d for every part beyond the first, which is exactly what one
(d - p)-gadget per part charges in the bag graph.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple
import logging

from app.cache import config_cache
from app.services.baggraph import GadgetSpec, assemble_bag_graph, solve_adcd_on_bag_graph
from app.services.decomposition import (
    DecompositionError,
    TreeDecomposition,
    build_decomposition,
    decomposition_q,
    make_regular,
    validate_decomposition,
)
from app.services.domination import red_blue_domination_number, red_blue_dominating_set
from app.services.graph import (
    AnnotatedInstance,
    Graph,
    InvariantViolation,
    VertexSet,
    closed_neighborhood,
    connected_components,
    iter_members,
    members,
    popcount,
    subsets_up_to,
)

logger = logging.getLogger("dcd_solver")


# ============================================================================
# Marks
# ============================================================================

@dataclass(frozen=True)
class Mark:
    s_a: VertexSet
    d_a: VertexSet
    u_a: VertexSet
    k_a: int
    partition: Tuple[VertexSet, ...] = ()
    part_budgets: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.s_a & self.d_a or self.s_a & self.u_a or self.d_a & self.u_a:
            raise ValueError("mark sets s_a, d_a and u_a must be disjoint")
        if len(self.partition) != len(self.part_budgets):
            raise ValueError("one budget per part is required")
        seen = 0
        for part in self.partition:
            if not part or part & seen or part & self.s_a:
                raise ValueError("partition parts must be non-empty, disjoint and avoid s_a")
            seen |= part
        if self.k_a < 0 or any(p < 0 for p in self.part_budgets):
            raise ValueError("mark budgets must be non-negative")

    @property
    def covered(self) -> VertexSet:
        mask = 0
        for part in self.partition:
            mask |= part
        return mask

    def sort_key(self):
        return (members(self.s_a), members(self.d_a), members(self.u_a), self.k_a,
                [members(p) for p in self.partition], self.part_budgets)

    def with_u(self, u_a: VertexSet) -> "Mark":
        return Mark(self.s_a, self.d_a, u_a, self.k_a, self.partition, self.part_budgets)

    def with_k(self, k_a: int) -> "Mark":
        return Mark(self.s_a, self.d_a, self.u_a, k_a, self.partition, self.part_budgets)


def set_partitions(mask: VertexSet) -> Iterator[Tuple[VertexSet, ...]]:
    """Set partitions of mask, parts ordered by their smallest member."""
    items = members(mask)
    if not items:
        yield ()
        return

    def grow(i: int, parts: List[VertexSet]) -> Iterator[Tuple[VertexSet, ...]]:
        if i == len(items):
            yield tuple(parts)
            return
        bit = 1 << items[i]
        for j in range(len(parts)):
            parts[j] |= bit
            yield from grow(i + 1, parts)
            parts[j] &= ~bit
        parts.append(bit)
        yield from grow(i + 1, parts)
        parts.pop()

    yield from grow(0, [])


def enumerate_marks(a: VertexSet, k: int, d: int) -> List[Mark]:
    """
    Every syntactically valid mark of a for budgets k and d.

    Each adhesion vertex is deleted, a dominator, exempt or plain; k_a ranges
    over 0..k; the survivors are split by every set partition and each part
    gets a budget in 0..d.

    Returns:
        Marks in canonical order
    """
    ids = members(a)
    result = []
    for roles in product(range(4), repeat=len(ids)):
        s_a = d_a = u_a = 0
        for v, role in zip(ids, roles):
            if role == 1:
                s_a |= 1 << v
            elif role == 2:
                d_a |= 1 << v
            elif role == 3:
                u_a |= 1 << v
        for parts in set_partitions(a & ~s_a):
            for budgets in product(range(d + 1), repeat=len(parts)):
                for k_a in range(k + 1):
                    result.append(Mark(s_a, d_a, u_a, k_a, parts, budgets))
    result.sort(key=Mark.sort_key)
    return result


def domination_gate(q: int, d: int) -> int:
    """Largest |D| + c a branch may carry: fewer than 2q+1 solution components meet an unbreakable bag."""
    return (2 * q + 1) * d


def zero_cost_mark(a: VertexSet, deleted: VertexSet, red: VertexSet) -> Mark:
    """No deletions below a, no dominators, every surviving red adhesion vertex exempt, one part of budget 0."""
    rest = a & ~deleted
    return Mark(deleted & a, 0, red & rest, 0, (rest,) if rest else (), (0,) if rest else ())


def mark_dominates(better: Mark, worse: Mark) -> bool:
    """better is at least as easy to use as worse: same deletions and dominators, tighter everything else."""
    if better.s_a != worse.s_a or better.d_a != worse.d_a:
        return False
    if better.k_a > worse.k_a or better.u_a & ~worse.u_a:
        return False
    for part, budget in zip(worse.partition, worse.part_budgets):
        spent = 0
        for inner, inner_budget in zip(better.partition, better.part_budgets):
            if inner & part:
                if inner & ~part:
                    return False
                spent += inner_budget
        if spent > budget:
            return False
    return True


def mark_realized_brute(g: Graph, inst: AnnotatedInstance, a: VertexSet, m: Mark,
                        universe: Optional[VertexSet] = None) -> bool:
    """
    Exhaustive realization test for m on g[universe] (default: all of g).

    Searches every deletion set S with S ∩ a = s_a and at most k_a deletions
    outside a. Components meeting a are grouped through the parts they touch;
    a group spanning parts P gets sum(p) - (|P|-1)·d dominators, the part's
    adhesion dominators d_a among them.
    """
    universe = g.all_vertices if universe is None else universe
    if m.covered != a & ~m.s_a or m.s_a & inst.forbidden or m.d_a & ~inst.blue:
        return False
    if popcount(m.s_a) > inst.k:
        return False
    pool = universe & ~a & ~inst.forbidden
    outside = ~universe & g.all_vertices
    for extra in subsets_up_to(pool, min(m.k_a, inst.k - popcount(m.s_a))):
        removed = outside | m.s_a | extra
        owner = list(range(len(m.partition)))
        groups = [0] * len(m.partition)

        def find(i: int) -> int:
            while owner[i] != i:
                i = owner[i]
            return i

        ok = True
        for comp in connected_components(g, removed):
            hit = [i for i, part in enumerate(m.partition) if comp & part]
            if not hit:
                if red_blue_domination_number(g, inst.red & comp, inst.blue & comp, inst.d) is None:
                    ok = False
                    break
                continue
            root = find(hit[0])
            for i in hit[1:]:
                other = find(i)
                if other != root:
                    owner[other] = root
                    groups[root] |= groups[other]
            groups[root] |= comp
        if not ok:
            continue
        for i in range(len(m.partition)):
            if find(i) != i:
                continue
            joined = [j for j in range(len(m.partition)) if find(j) == i]
            fixed = 0
            for j in joined:
                fixed |= m.d_a & m.partition[j]
            spare = sum(m.part_budgets[j] for j in joined) - (len(joined) - 1) * inst.d - popcount(fixed)
            group = groups[i]
            targets = inst.red & group & ~m.u_a & ~closed_neighborhood(g, fixed)
            if spare < 0 or red_blue_domination_number(g, targets, inst.blue & group & ~a, spare) is None:
                ok = False
                break
        if ok:
            return True
    return False


# ============================================================================
# Profiles and traces
# ============================================================================

@dataclass(frozen=True)
class Witness:
    """Child mark choices (None for a skipped neutral child) and the free bag deletions."""
    choices: Tuple[Tuple[int, Optional[Mark]], ...]
    bag_deletions: VertexSet


@dataclass
class Profile:
    node: int
    adhesion: VertexSet
    red: VertexSet
    marks: FrozenSet[Mark]
    witnesses: Dict[Mark, Witness] = field(repr=False, default_factory=dict)
    _minimal: Optional[List[Mark]] = field(repr=False, default=None)

    def __contains__(self, m: Mark) -> bool:
        return m.with_u(m.u_a & self.red) in self.marks

    def __len__(self) -> int:
        return len(self.marks)

    def minimal(self) -> List[Mark]:
        """Realized marks not dominated by another realized mark, canonically ordered."""
        if self._minimal is None:
            buckets: Dict[Tuple[VertexSet, VertexSet], List[Mark]] = {}
            for m in sorted(self.marks, key=Mark.sort_key):
                buckets.setdefault((m.s_a, m.d_a), []).append(m)
            keep = []
            for bucket in buckets.values():
                for m in bucket:
                    if not any(o != m and mark_dominates(o, m) for o in bucket):
                        keep.append(m)
            self._minimal = sorted(keep, key=Mark.sort_key)
        return self._minimal


@dataclass(frozen=True)
class PartialSolution:
    """Branch state: fixed deletions s, child deletion count, fixed dominators dom, child part budgets."""
    s: VertexSet
    s_count: int
    dom: VertexSet
    c_count: int
    kept: VertexSet = 0
    non_dom: VertexSet = 0
    choices: Tuple[Tuple[int, Optional[Mark]], ...] = ()


@dataclass
class TraceNode:
    color: str
    children: List["TraceNode"] = field(default_factory=list)


@dataclass
class DpTrace:
    k: int
    q: int
    d: int
    searches: List[TraceNode] = field(default_factory=list)


@dataclass(frozen=True)
class BlackWhiteReport:
    valid: bool
    searches: int
    leaves: int
    size: int
    depth: int
    alpha: int
    beta_observed: int
    beta_nominal: int
    exceeds_nominal: bool


@dataclass
class DpStats:
    q: int = 0
    nodes: int = 0
    marks_tested: int = 0
    realized: int = 0
    branches: int = 0
    leaves: int = 0


def _tree_measures(node: TraceNode) -> Tuple[int, int, int, int, int, bool]:
    """(leaves, size, depth, max black on a path, max fan-out, well-formed)."""
    if not node.children:
        return 1, 1, 0, 1 if node.color == "black" else 0, 0, True
    colors = {c.color for c in node.children}
    well_formed = (len(node.children) == 1 and colors == {"white"}) or colors == {"black"}
    leaves = size = depth = black = 0
    fan = len(node.children)
    for child in node.children:
        l, s, dp, b, f, ok = _tree_measures(child)
        leaves += l
        size += s
        depth = max(depth, dp + 1)
        black = max(black, b)
        fan = max(fan, f)
        well_formed = well_formed and ok
    own = 1 if node.color == "black" else 0
    return leaves, size + 1, depth, black + own, fan, well_formed


def branch_accounting(trace: DpTrace) -> BlackWhiteReport:
    """
    Check every search tree of a trace: each node has exactly one White child
    or only Black children, leaves <= alpha^beta and size <= alpha^beta * (depth+1),
    where alpha is the widest branching and beta the most Black nodes on a path.

    Raises:
        InvariantViolation: if a search tree breaks the discipline or the bound
    """
    total_leaves = total_size = max_depth = alpha = beta = 0
    for root in trace.searches:
        leaves, size, depth, black, fan, ok = _tree_measures(root)
        a = max(fan, 1)
        if not ok:
            raise InvariantViolation("trace node mixes White and Black children")
        if leaves > a ** black or size > a ** black * (depth + 1):
            raise InvariantViolation(f"branching bound exceeded: leaves={leaves} size={size} alpha={a} beta={black}")
        total_leaves += leaves
        total_size += size
        max_depth = max(max_depth, depth)
        alpha = max(alpha, fan)
        beta = max(beta, black)
    nominal = trace.k + domination_gate(trace.q, trace.d)
    return BlackWhiteReport(
        valid=True,
        searches=len(trace.searches),
        leaves=total_leaves,
        size=total_size,
        depth=max_depth,
        alpha=alpha,
        beta_observed=beta,
        beta_nominal=nominal,
        exceeds_nominal=beta > nominal,
    )


# ============================================================================
# Profile computation
# ============================================================================

class _NodeSearch:
    """Branching over child marks for one node, ending in a bag-graph decision."""

    def __init__(self, g: Graph, inst: AnnotatedInstance, td: TreeDecomposition, x: int,
                 child_profiles: Mapping[int, Profile], q: int, neutral_shortcut: bool,
                 trace: Optional[DpTrace], mutation: bool, stats: DpStats):
        self.g = g
        self.inst = inst
        self.td = td
        self.x = x
        self.bag = td.bags[x]
        self.a = td.adhesion(x)
        self.children = td.children(x)
        self.child_profiles = child_profiles
        self.q = q
        self.neutral_shortcut = neutral_shortcut
        self.trace = trace
        self.mutation = mutation
        self.stats = stats

    def realize(self, m: Mark) -> Optional[Witness]:
        inst = self.inst
        if m.covered != self.a & ~m.s_a or m.s_a & inst.forbidden or m.d_a & ~inst.blue:
            return None
        if popcount(m.s_a) > inst.k:
            return None
        for part, budget in zip(m.partition, m.part_budgets):
            if popcount(m.d_a & part) > budget:
                return None
        state = PartialSolution(m.s_a, 0, m.d_a, 0, self.a & ~m.s_a, self.a & ~m.d_a, ())
        root = TraceNode("root")
        if self.trace is not None:
            self.trace.searches.append(root)
        return self._search(m, 0, state, root)

    def _neutral(self, y: int, state: PartialSolution) -> bool:
        ay = self.td.adhesion(y)
        rest = ay & ~state.s
        if popcount(rest) > 1 or rest & self.inst.red:
            return False
        return zero_cost_mark(ay, state.s & ay, self.inst.red) in self.child_profiles[y]

    def _extend(self, m: Mark, state: PartialSolution, y: int, mm: Mark) -> Optional[PartialSolution]:
        ay = self.td.adhesion(y)
        if mm.s_a & state.kept:
            return None
        if state.s & ay & ~mm.s_a or mm.d_a & state.non_dom or state.dom & ay & ~mm.d_a:
            return None
        if mm.d_a & state.s or state.dom & mm.s_a:
            return None
        s = state.s | mm.s_a
        s_count = state.s_count + mm.k_a
        dom = state.dom | mm.d_a
        c_count = state.c_count + sum(p - popcount(mm.d_a & part)
                                      for part, p in zip(mm.partition, mm.part_budgets))
        if popcount(s) + s_count > self.inst.k:
            return None
        if popcount(s & ~m.s_a) + s_count > m.k_a:
            return None
        if popcount(dom) + c_count > domination_gate(self.q, self.inst.d):
            return None
        return PartialSolution(s, s_count, dom, c_count, state.kept | (ay & ~mm.s_a),
                               state.non_dom | (ay & ~mm.d_a), state.choices + ((y, mm),))

    def _search(self, m: Mark, i: int, state: PartialSolution, node: TraceNode) -> Optional[Witness]:
        if i == len(self.children):
            self.stats.leaves += 1
            deletions = self._decide_bag(m, state)
            return None if deletions is None else Witness(state.choices, deletions)
        y = self.children[i]
        if self.neutral_shortcut and self._neutral(y, state):
            child = TraceNode("white")
            node.children.append(child)
            skipped = PartialSolution(state.s, state.s_count, state.dom, state.c_count,
                                      state.kept, state.non_dom, state.choices + ((y, None),))
            return self._search(m, i + 1, skipped, child)
        options = []
        for mm in self.child_profiles[y].minimal():
            extended = self._extend(m, state, y, mm)
            if extended is not None:
                options.append(extended)
        color = "white" if len(options) == 1 else "black"
        self.stats.branches += len(options)
        for extended in options:
            child = TraceNode(color)
            node.children.append(child)
            found = self._search(m, i + 1, extended, child)
            if found is not None:
                return found
        return None

    def _decide_bag(self, m: Mark, state: PartialSolution) -> Optional[VertexSet]:
        """Free bag deletions completing the branch, or None."""
        g, inst, bag = self.g, self.inst, self.bag
        budget = min(m.k_a - popcount(state.s & ~m.s_a) - state.s_count,
                     inst.k - popcount(state.s) - state.s_count)
        if self.mutation:
            budget += 1
        if budget < 0:
            return None
        alive = bag & ~state.s
        guaranteed = 0
        gadgets: List[GadgetSpec] = []
        for y, mm in state.choices:
            if mm is None:
                continue
            ay = self.td.adhesion(y)
            guaranteed |= ay & ~mm.u_a
            for part, p in zip(mm.partition, mm.part_budgets):
                gadgets.append(GadgetSpec(part, p - popcount(mm.d_a & part), "child", y))
        for v in iter_members(state.dom):
            gadgets.append(GadgetSpec(1 << v, 1, "dominator", self.x))
        # two parts of adhesion(x) sharing a component cost d more than their budgets
        for part, p in zip(m.partition, m.part_budgets):
            gadgets.append(GadgetSpec(part, inst.d - p, "adhesion", self.x))
        red = inst.red & alive & ~m.u_a & ~guaranteed & ~closed_neighborhood(g, state.dom)
        blue = inst.blue & alive & ~(state.dom | state.non_dom)
        blocked = (inst.forbidden | state.kept) & alive

        bg = assemble_bag_graph(g, alive, gadgets, self.q, self.x)
        ext_forbidden, ext_red, ext_blue = bg.gadget_colors()
        solution = solve_adcd_on_bag_graph(
            bg,
            bg.to_compact(blocked) | ext_forbidden,
            bg.to_compact(red) | ext_red,
            bg.to_compact(blue) | ext_blue,
            budget,
            inst.d,
        )
        return None if solution is None else bg.to_original(solution.deleted)


def compute_profile(g: Graph, inst: AnnotatedInstance, td: TreeDecomposition, x: int,
                    child_profiles: Mapping[int, Profile], q: int, *,
                    neutral_shortcut: Optional[bool] = None, trace: Optional[DpTrace] = None,
                    mutation: bool = False, stats: Optional[DpStats] = None) -> Profile:
    """
    Realized marks of adhesion(x) in cone(x), given the children's profiles.

    Marks differing only in k_a are tested in ascending k_a; once one is
    realized, the larger ones are realized by the same witness.

    Args:
        g: Graph
        inst: Annotated instance (colors and budgets)
        td: Regular decomposition
        x: Node id
        child_profiles: Profile of every child of x
        q: Certified unbreakability parameter of td
        neutral_shortcut: Skip neutral children (config default)
        trace: Collects Black/White search trees when given
        mutation: Corrupt one consistency check (corpus mutation test only)
        stats: Counters updated in place

    Returns:
        Profile with one witness per realized mark
    """
    if neutral_shortcut is None:
        neutral_shortcut = bool(config_cache.get_section("dp").get("neutral_shortcut", True))
    stats = stats if stats is not None else DpStats(q=q)
    search = _NodeSearch(g, inst, td, x, child_profiles, q, neutral_shortcut, trace, mutation, stats)
    a = td.adhesion(x)
    groups: Dict[Tuple, List[Mark]] = {}
    for m in enumerate_marks(a, inst.k, inst.d):
        if m.u_a & ~inst.red:
            continue
        key = (m.s_a, m.d_a, m.u_a, m.partition, m.part_budgets)
        groups.setdefault(key, []).append(m)
    realized: Dict[Mark, Witness] = {}
    tested = 0
    for group in groups.values():
        witness = None
        for m in sorted(group, key=lambda mark: mark.k_a):
            if witness is None:
                tested += 1
                witness = search.realize(m)
            if witness is not None:
                realized[m] = witness
    stats.marks_tested += tested
    stats.realized += len(realized)
    logger.debug(f"Profile computed | node={x} | marks={tested} | realized={len(realized)}")
    return Profile(x, a, inst.red & a, frozenset(realized), realized)


# ============================================================================
# Driver
# ============================================================================

@dataclass(frozen=True)
class DpResult:
    verdict: bool
    deleted: VertexSet
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...]
    stats: DpStats
    td: TreeDecomposition
    trace: Optional[DpTrace] = None
    black_white: Optional[BlackWhiteReport] = None


def prepare_decomposition(g: Graph, k: int, td: Optional[TreeDecomposition] = None,
                          q: Optional[int] = None) -> Tuple[TreeDecomposition, int]:
    """
    Build a decomposition, or regularize and certify a supplied one.

    Raises:
        DecompositionError: if the supplied decomposition is invalid or q is too small
    """
    if td is None:
        return build_decomposition(g, k)
    report = validate_decomposition(g, td, g.vertex_count, k)
    if not report.valid:
        raise DecompositionError(f"invalid decomposition: {report.violation} ({report.detail})")
    regular = make_regular(g, td)
    certified = decomposition_q(g, regular, k)
    if q is not None and q < certified:
        raise DecompositionError(f"decomposition is not ({q},{k})-unbreakable; smallest valid q is {certified}")
    return regular, certified if q is None else q


def solve_adcd(g: Graph, inst: AnnotatedInstance, td: Optional[TreeDecomposition] = None,
               q: Optional[int] = None, *, trace: bool = False,
               neutral_shortcut: Optional[bool] = None, mutation: bool = False) -> DpResult:
    """
    Annotated Dominated Cluster Deletion through profiles over an unbreakable decomposition.

    Profiles are computed bottom-up; the instance is positive iff the root
    profile (empty adhesion) realizes a mark with k_a <= k. The certificate
    replays the stored witnesses top-down and is checked before returning.

    Raises:
        DecompositionError: if a supplied decomposition is invalid
        InvariantViolation: if the reconstructed certificate fails its check
    """
    td, q = prepare_decomposition(g, inst.k, td, q)
    stats = DpStats(q=q, nodes=len(td.nodes))
    dp_trace = DpTrace(inst.k, q, inst.d) if trace else None
    profiles: Dict[int, Profile] = {}
    for x in td.postorder():
        profiles[x] = compute_profile(g, inst, td, x, {y: profiles[y] for y in td.children(x)}, q,
                                      neutral_shortcut=neutral_shortcut, trace=dp_trace,
                                      mutation=mutation, stats=stats)
    root = profiles[td.root]
    accepted = sorted(root.marks, key=lambda m: m.k_a)
    report = branch_accounting(dp_trace) if dp_trace is not None else None
    if not accepted:
        logger.info(f"DP solve | n={g.vertex_count} | k={inst.k} | d={inst.d} | q={q} | "
                    f"nodes={stats.nodes} | verdict=no")
        return DpResult(False, 0, (), stats, td, dp_trace, report)
    if mutation:
        # the corrupted gate has no sound certificate to replay
        return DpResult(True, 0, (), stats, td, dp_trace, report)

    def collect(x: int, mark: Mark) -> VertexSet:
        witness = profiles[x].witnesses[mark]
        deleted = mark.s_a | witness.bag_deletions
        for y, mm in witness.choices:
            if mm is not None:
                deleted |= collect(y, mm)
        return deleted

    deleted = collect(td.root, accepted[0])
    doms = []
    for comp in connected_components(g, deleted):
        dom = red_blue_dominating_set(g, inst.red & comp, inst.blue & comp, inst.d)
        if dom is None:
            raise InvariantViolation("reconstructed deletion set leaves an undominated component")
        doms.append((comp, dom))
    if popcount(deleted) > inst.k or deleted & inst.forbidden:
        raise InvariantViolation("reconstructed deletion set breaks the budget or a forbidden vertex")
    logger.info(f"DP solve | n={g.vertex_count} | k={inst.k} | d={inst.d} | q={q} | "
                f"nodes={stats.nodes} | verdict=yes | deleted={popcount(deleted)}")
    return DpResult(True, deleted, tuple(doms), stats, td, dp_trace, report)
