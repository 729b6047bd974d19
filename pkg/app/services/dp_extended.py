"""
Extended marks and the dynamic program for Annotated Elimination Distance to
Dominated Clusters.

An extended mark records, for every elimination layer i, which adhesion
vertices sit at layer i, how the adhesion vertices alive at layer i are
connected inside the cone (classes), and whether each class's cone-side
component holds a layer-i vertex outside the adhesion (flag). The final
classes carry dominator budgets.

Profiles are generated: every consistent choice of child marks and bag
layering yields the mark it induces on the adhesion. A mark is kept when no
other generated mark with the same shape is at least as easy to use.

Small bags are layered exhaustively. Large bags are layered through their
bag graph: a skeleton family fixes the deletions next to the large component
C0, the small side is layered exhaustively and the deletions inside C0 are
the reds left over by a partial domination of C0, placed on free layers.
"""

from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple
import logging

from app.cache import config_cache
from app.services.baggraph import GadgetSpec, assemble_bag_graph, bag_skeleton_family
from app.services.decomposition import TreeDecomposition, decomposition_q
from app.services.domination import (
    partial_domination_options,
    red_blue_domination_number,
    red_blue_dominating_set,
)
from app.services.dp import DpStats, DpTrace, TraceNode, branch_accounting, prepare_decomposition, BlackWhiteReport
from app.services.elimination import EliminationTree, elimination_tree_from_layers, validate_elimination_tree
from app.services.graph import (
    AnnotatedInstance,
    Graph,
    InvariantViolation,
    VertexSet,
    closed_neighborhood,
    connected_components,
    iter_members,
    lowest,
    members,
    popcount,
    subsets_up_to,
    to_mask,
)

logger = logging.getLogger("dcd_solver")

ROUTES = ("auto", "exhaustive", "layered")

LevelClasses = Tuple[Tuple[VertexSet, bool], ...]


@dataclass(frozen=True)
class ExtendedMark:
    layers: Tuple[VertexSet, ...]
    d_a: VertexSet
    u_a: VertexSet
    classes: Tuple[LevelClasses, ...]
    partition: Tuple[VertexSet, ...] = ()
    part_budgets: Tuple[int, ...] = ()

    def __post_init__(self):
        seen = 0
        for layer in self.layers:
            if layer & seen:
                raise ValueError("an adhesion vertex sits on two layers")
            seen |= layer
        if (self.d_a | self.u_a) & seen or self.d_a & self.u_a:
            raise ValueError("dominators and exempt vertices must be alive and distinct")
        if len(self.classes) != len(self.layers) or len(self.partition) != len(self.part_budgets):
            raise ValueError("one class list per layer and one budget per part are required")
        finer = [[c for c, _ in level] for level in self.classes[1:]] + [list(self.partition)]
        for coarse, fine in zip(self.classes, finer):
            for part in fine:
                if not any(part & ~c == 0 for c, _ in coarse):
                    raise ValueError("classes must refine from one layer to the next")

    @property
    def deleted(self) -> VertexSet:
        mask = 0
        for layer in self.layers:
            mask |= layer
        return mask

    def layer_of(self, v: int) -> int:
        for i, layer in enumerate(self.layers, start=1):
            if layer >> v & 1:
                return i
        return 0

    def reach_flags(self) -> Tuple[Tuple[bool, ...], ...]:
        """Per final part, the flag of the class containing it at every layer."""
        result = []
        for part in self.partition:
            result.append(tuple(next(flag for c, flag in level if part & c) for level in self.classes))
        return tuple(result)

    def shape(self):
        return (self.layers, self.d_a, tuple(tuple(c for c, _ in level) for level in self.classes), self.partition)

    def sort_key(self):
        return (tuple(members(layer) for layer in self.layers), members(self.d_a), members(self.u_a),
                [[(members(c), f) for c, f in level] for level in self.classes],
                [members(p) for p in self.partition], self.part_budgets)


def extended_mark_dominates(better: ExtendedMark, worse: ExtendedMark) -> bool:
    if better.shape() != worse.shape() or better.u_a & ~worse.u_a:
        return False
    for level_b, level_w in zip(better.classes, worse.classes):
        if any(fb and not fw for (_, fb), (_, fw) in zip(level_b, level_w)):
            return False
    return all(b <= w for b, w in zip(better.part_budgets, worse.part_budgets))


def neutral_extended_mark(a: VertexSet, k: int) -> ExtendedMark:
    """No deletion, no dominator, no flag and budget 0, the adhesion in one class throughout."""
    level = ((a, False),) if a else ()
    return ExtendedMark((0,) * k, 0, 0, (level,) * k, (a,) if a else (), (0,) if a else ())


@dataclass(frozen=True)
class ExtendedWitness:
    choices: Tuple[Tuple[int, Optional[ExtendedMark]], ...]
    layers: Tuple[Tuple[int, int], ...]


@dataclass
class ExtendedProfile:
    node: int
    adhesion: VertexSet
    marks: FrozenSet[ExtendedMark]
    witnesses: Dict[ExtendedMark, ExtendedWitness] = field(repr=False, default_factory=dict)
    _minimal: Optional[List[ExtendedMark]] = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.marks)

    def __contains__(self, m: ExtendedMark) -> bool:
        return any(extended_mark_dominates(o, m) for o in self.marks)

    def minimal(self) -> List[ExtendedMark]:
        if self._minimal is None:
            buckets: Dict[tuple, List[ExtendedMark]] = {}
            for m in sorted(self.marks, key=ExtendedMark.sort_key):
                buckets.setdefault(m.shape(), []).append(m)
            self._minimal = sorted(
                (m for bucket in buckets.values() for m in bucket
                 if not any(o != m and extended_mark_dominates(o, m) for o in bucket)),
                key=ExtendedMark.sort_key,
            )
        return self._minimal


def _merge(comps: List[VertexSet], links: List[VertexSet]) -> List[VertexSet]:
    """Union the components touched by each link."""
    comps = list(comps)
    for link in links:
        hit = [c for c in comps if c & link]
        if len(hit) > 1:
            merged = 0
            for c in hit:
                merged |= c
            comps = [c for c in comps if not c & link] + [merged]
    return sorted(comps, key=lowest)


class _ExtendedNodeSearch:
    """Branches over child mark choices, then layers the bag exhaustively or through the bag graph."""

    def __init__(self, g: Graph, inst: AnnotatedInstance, td: TreeDecomposition, x: int,
                 child_profiles: Mapping[int, ExtendedProfile], q: int, route: str, neutral_shortcut: bool,
                 trace: Optional[DpTrace], stats: DpStats):
        self.g = g
        self.inst = inst
        self.td = td
        self.x = x
        self.bag = td.bags[x]
        self.a = td.adhesion(x)
        self.children = td.children(x)
        self.child_profiles = child_profiles
        self.q = q
        threshold = max(3 * q * (inst.k + q), 3 * q + 1)
        self.layered = route == "layered" or (route == "auto" and popcount(self.bag) >= threshold)
        self.neutral_shortcut = neutral_shortcut
        self.trace = trace
        self.stats = stats
        self.results: Dict[ExtendedMark, ExtendedWitness] = {}

    def run(self) -> Dict[ExtendedMark, ExtendedWitness]:
        root = TraceNode("root")
        if self.trace is not None:
            self.trace.searches.append(root)
        self._branch(0, {}, 0, 0, (), root)
        return self.results

    def _branch(self, i: int, fixed: Dict[int, int], dom: VertexSet, non_dom: VertexSet,
                choices: Tuple, node: TraceNode):
        if i == len(self.children):
            self.stats.leaves += 1
            if self.layered:
                self._layered(fixed, choices)
            else:
                self._level(1, fixed, choices, {}, ())
            return
        y = self.children[i]
        ay = self.td.adhesion(y)
        profile = self.child_profiles[y]
        if (self.neutral_shortcut and popcount(ay) <= 1 and not ay & self.inst.red
                and neutral_extended_mark(ay, self.inst.k) in profile.marks):
            child = TraceNode("white")
            node.children.append(child)
            self._branch(i + 1, fixed, dom, non_dom, choices + ((y, None),), child)
            return
        options = []
        for mm in profile.minimal():
            if mm.d_a & non_dom or dom & ay & ~mm.d_a:
                continue
            layers = dict(fixed)
            ok = True
            for v in iter_members(ay):
                lay = mm.layer_of(v)
                if layers.setdefault(v, lay) != lay:
                    ok = False
                    break
            if ok:
                options.append((layers, dom | mm.d_a, non_dom | (ay & ~mm.d_a), choices + ((y, mm),)))
        color = "white" if len(options) == 1 else "black"
        self.stats.branches += len(options)
        for option in options:
            child = TraceNode(color)
            node.children.append(child)
            self._branch(i + 1, *option, child)

    def _level(self, i: int, fixed: Dict[int, int], choices: Tuple, assign: Dict[int, int],
               infos: Tuple[LevelClasses, ...]):
        """Place at most one layer-i vertex in every component alive at layer i."""
        k = self.inst.k
        if i > k:
            self._final(fixed, choices, assign, infos)
            return
        g, a = self.g, self.a

        def layer(v: int) -> int:
            return fixed.get(v, assign.get(v, 0))

        alive = to_mask(v for v in iter_members(self.bag) if layer(v) == 0 or layer(v) >= i)
        links = [(c, flag) for _, mm in choices if mm is not None for c, flag in mm.classes[i - 1]]
        comps = _merge(connected_components(g, g.all_vertices & ~alive), [c for c, _ in links])
        at_layer = to_mask(v for v, lay in fixed.items() if lay == i)
        free = alive & ~to_mask(fixed) & ~to_mask(assign) & ~self.inst.forbidden
        options = []
        for comp in comps:
            tokens = popcount(at_layer & comp) + sum(1 for c, flag in links if flag and c & comp)
            if tokens > 1:
                return
            options.append([None] if tokens else [None] + members(free & comp))
        for combo in product(*options):
            placed = dict(assign)
            level = []
            for comp, v in zip(comps, combo):
                if v is not None:
                    placed[v] = i
                if comp & a:
                    outside = ((v is not None and not a >> v & 1) or bool(at_layer & comp & ~a)
                               or any(flag and c & comp for c, flag in links))
                    level.append((comp & a, outside))
            level.sort(key=lambda item: lowest(item[0]))
            self._level(i + 1, fixed, choices, placed, infos + (tuple(level),))

    def _layering_infos(self, fixed: Dict[int, int], choices: Tuple,
                        assign: Dict[int, int]) -> Optional[Tuple[LevelClasses, ...]]:
        """Classes of a complete bag layering, or None when a component alive at layer i holds two layer-i vertices."""
        g, a = self.g, self.a

        def layer(v: int) -> int:
            return fixed.get(v, assign.get(v, 0))

        infos = []
        for i in range(1, self.inst.k + 1):
            alive = to_mask(v for v in iter_members(self.bag) if layer(v) == 0 or layer(v) >= i)
            links = [(c, flag) for _, mm in choices if mm is not None for c, flag in mm.classes[i - 1]]
            comps = _merge(connected_components(g, g.all_vertices & ~alive), [c for c, _ in links])
            at_layer = to_mask(v for v in iter_members(self.bag) if layer(v) == i)
            level = []
            for comp in comps:
                flagged = [c for c, flag in links if flag and c & comp]
                if popcount(at_layer & comp) + len(flagged) > 1:
                    return None
                if comp & a:
                    level.append((comp & a, bool(at_layer & comp & ~a or flagged)))
            level.sort(key=lambda item: lowest(item[0]))
            infos.append(tuple(level))
        return tuple(infos)

    def _layered(self, fixed: Dict[int, int], choices: Tuple):
        """
        Bag-graph route: guess the layers of the free adhesion vertices, take
        candidate skeletons of the bag graph, layer the small side
        exhaustively and let partial domination pick the deletions of the
        large component C0, placed on the layers the skeleton leaves free.
        """
        g, inst, a = self.g, self.inst, self.a
        k, d = inst.k, inst.d
        dom = guaranteed = fixed_adh = 0
        gadgets: List[GadgetSpec] = []
        for y, mm in choices:
            if mm is None:
                continue
            ay = self.td.adhesion(y)
            dom |= mm.d_a
            fixed_adh |= ay
            guaranteed |= ay & ~mm.u_a
            for part, p in zip(mm.partition, mm.part_budgets):
                gadgets.append(GadgetSpec(part, p - popcount(mm.d_a & part), "child", y))
        for v in iter_members(dom):
            gadgets.append(GadgetSpec(1 << v, 1, "dominator", self.x))
        pinned = to_mask(fixed)
        kept = pinned | a
        free_adh = members(a & ~pinned & ~inst.forbidden)
        seen = set()
        for guess in product(range(k + 1), repeat=len(free_adh)):
            pre = {v: lay for v, lay in zip(free_adh, guess) if lay}
            deleted = to_mask(v for v, lay in fixed.items() if lay) | to_mask(pre)
            alive = self.bag & ~deleted
            bg = assemble_bag_graph(g, alive, gadgets, self.q, self.x)
            ext_forbidden, ext_red, ext_blue = bg.gadget_colors()
            blue = inst.blue & alive & ~fixed_adh
            red = inst.red & alive & ~guaranteed & ~closed_neighborhood(g, dom) & ~a
            forced = to_mask(v for v in iter_members(red) if not closed_neighborhood(g, 1 << v) & blue)
            family = bag_skeleton_family(bg, bg.to_compact(inst.forbidden | kept) | ext_forbidden,
                                         bg.to_compact(red & ~forced) | ext_red,
                                         bg.to_compact(blue) | ext_blue, d, k)
            for t in family:
                skeleton = bg.to_original(t)
                pieces = [bg.to_original(c) for c in connected_components(bg.graph, t)]
                large = [p for p in pieces if popcount(p) > self.q]
                if len(large) > 1:
                    continue
                c0 = large[0] if large else 0
                small = members(alive & ~skeleton & ~c0 & ~kept & ~inst.forbidden)
                left = k - popcount(skeleton)
                if c0:
                    removals = []
                    for solution in partial_domination_options(g, inst.forbidden | kept, red & c0, blue & c0, left, d):
                        if solution.deleted not in removals:
                            removals.append(solution.deleted)
                else:
                    removals = [0]
                for slots in permutations(range(1, k + 1), popcount(skeleton)):
                    spare = [i for i in range(1, k + 1) if i not in slots]
                    base = dict(pre)
                    base.update(zip(iter_members(skeleton), slots))
                    for removal in removals:
                        for tail in permutations(spare, popcount(removal)):
                            chain = dict(base)
                            chain.update(zip(iter_members(removal), tail))
                            for layers in product(range(k + 1), repeat=len(small)):
                                assign = dict(chain)
                                assign.update((v, lay) for v, lay in zip(small, layers) if lay)
                                key = frozenset(assign.items())
                                if key in seen:
                                    continue
                                seen.add(key)
                                infos = self._layering_infos(fixed, choices, assign)
                                if infos is not None:
                                    self._final(fixed, choices, assign, infos)

    def _final(self, fixed: Dict[int, int], choices: Tuple, assign: Dict[int, int],
               infos: Tuple[LevelClasses, ...]):
        g, inst, a = self.g, self.inst, self.a
        d = inst.d

        def layer(v: int) -> int:
            return fixed.get(v, assign.get(v, 0))

        alive = to_mask(v for v in iter_members(self.bag) if layer(v) == 0)
        dom = guaranteed = fixed_adh = 0
        links = []
        for y, mm in choices:
            if mm is None:
                continue
            ay = self.td.adhesion(y)
            dom |= mm.d_a
            fixed_adh |= ay
            guaranteed |= ay & ~mm.u_a
            for part, p in zip(mm.partition, mm.part_budgets):
                links.append((part, p - popcount(mm.d_a & part)))
        comps = _merge(connected_components(g, g.all_vertices & ~alive), [p for p, _ in links])
        red = inst.red & alive & ~guaranteed & ~closed_neighborhood(g, dom)
        cand = inst.blue & alive & ~fixed_adh
        per_part = []
        for comp in comps:
            base = popcount(dom & comp) + sum(cost for p, cost in links if p & comp)
            if base > d:
                return
            targets = red & comp
            if not comp & a:
                if red_blue_domination_number(g, targets, cand & comp, d - base) is None:
                    return
                continue
            opts = []
            for chosen in subsets_up_to(cand & comp & a, d - base):
                spent = base + popcount(chosen)
                rest = targets & ~closed_neighborhood(g, chosen)
                for exempt in subsets_up_to(rest & a, popcount(rest & a)):
                    need = red_blue_domination_number(g, rest & ~exempt, cand & comp & ~a, d - spent)
                    if need is not None:
                        opts.append((chosen, exempt, spent + need))
            opts = [o for o in opts if not any(
                p != o and p[0] == o[0] and not p[1] & ~o[1] and p[2] <= o[2] for p in opts)]
            if not opts:
                return
            per_part.append((comp & a, opts))
        per_part.sort(key=lambda item: lowest(item[0]))
        layers = tuple(to_mask(v for v in iter_members(a) if layer(v) == i) for i in range(1, inst.k + 1))
        witness = ExtendedWitness(choices, tuple(sorted(assign.items())))
        for combo in product(*(opts for _, opts in per_part)):
            d_a = dom & a
            u_a = 0
            for chosen, exempt, _ in combo:
                d_a |= chosen
                u_a |= exempt
            mark = ExtendedMark(layers, d_a, u_a, infos,
                                tuple(part for part, _ in per_part), tuple(o[2] for o in combo))
            self.results.setdefault(mark, witness)


def compute_extended_profile(g: Graph, inst: AnnotatedInstance, td: TreeDecomposition, x: int,
                             child_profiles: Mapping[int, ExtendedProfile], *, q: Optional[int] = None,
                             route: Optional[str] = None, neutral_shortcut: Optional[bool] = None,
                             trace: Optional[DpTrace] = None, stats: Optional[DpStats] = None) -> ExtendedProfile:
    """
    Generated extended profile of adhesion(x) in cone(x).

    Bags below max(3q(k+q), 3q+1) vertices are layered exhaustively. Larger
    bags go through their bag graph: candidate skeletons, exhaustive layering
    of the small side and partial domination in the large component.

    Args:
        g: Graph
        inst: Annotated instance; k bounds the elimination depth
        td: Regular decomposition
        x: Node id
        child_profiles: Extended profile of every child of x
        q: Unbreakability parameter of td (certified from td when omitted)
        route: "auto", "exhaustive" or "layered" (config default)
        neutral_shortcut: Skip neutral children (config default)
        trace: Collects Black/White search trees when given
        stats: Counters updated in place

    Returns:
        ExtendedProfile with one witness per generated mark

    Raises:
        ValueError: if the route is unknown
    """
    section = config_cache.get_section("dp")
    if neutral_shortcut is None:
        neutral_shortcut = bool(section.get("neutral_shortcut", True))
    route = route or section.get("extended_route", "auto")
    if route not in ROUTES:
        raise ValueError(f"unknown extended route {route!r}, expected one of {ROUTES}")
    if q is None:
        q = decomposition_q(g, td, inst.k)
    stats = stats if stats is not None else DpStats(q=q)
    search = _ExtendedNodeSearch(g, inst, td, x, child_profiles, q, route, neutral_shortcut, trace, stats)
    results = search.run()
    stats.realized += len(results)
    logger.debug(f"Extended profile computed | node={x} | layered={search.layered} | marks={len(results)}")
    return ExtendedProfile(x, td.adhesion(x), frozenset(results), results)


@dataclass(frozen=True)
class ExtendedDpResult:
    verdict: bool
    tree: Optional[EliminationTree]
    dominators: Tuple[Tuple[VertexSet, VertexSet], ...]
    stats: DpStats
    td: TreeDecomposition
    trace: Optional[DpTrace] = None
    black_white: Optional[BlackWhiteReport] = None

    @property
    def deleted(self) -> VertexSet:
        return self.tree.vertices if self.tree is not None else 0


def solve_aeddc(g: Graph, inst: AnnotatedInstance, td: Optional[TreeDecomposition] = None,
                q: Optional[int] = None, *, trace: bool = False, route: Optional[str] = None,
                neutral_shortcut: Optional[bool] = None) -> ExtendedDpResult:
    """
    Annotated Elimination Distance to Dominated Clusters through extended profiles.

    The root adhesion is empty, so the root profile holds at most one mark and
    the instance is positive iff it holds one. The elimination forest is rebuilt
    from the witnessed layers and validated with its final components.

    Raises:
        DecompositionError: if a supplied decomposition is invalid
        InvariantViolation: if the reconstructed certificate fails its check
    """
    td, q = prepare_decomposition(g, inst.k, td, q)
    stats = DpStats(q=q, nodes=len(td.nodes))
    dp_trace = DpTrace(inst.k, q, inst.d) if trace else None
    profiles: Dict[int, ExtendedProfile] = {}
    for x in td.postorder():
        profiles[x] = compute_extended_profile(g, inst, td, x, {y: profiles[y] for y in td.children(x)}, q=q,
                                               route=route, neutral_shortcut=neutral_shortcut,
                                               trace=dp_trace, stats=stats)
    report = branch_accounting(dp_trace) if dp_trace is not None else None
    root = profiles[td.root]
    if not root.marks:
        logger.info(f"Extended DP solve | n={g.vertex_count} | k={inst.k} | d={inst.d} | q={q} | verdict=no")
        return ExtendedDpResult(False, None, (), stats, td, dp_trace, report)

    def collect(x: int, mark: ExtendedMark, layers: Dict[int, int]):
        witness = profiles[x].witnesses[mark]
        layers.update(witness.layers)
        for y, mm in witness.choices:
            if mm is None:
                # skipped children still eliminate inside their cone
                mm = neutral_extended_mark(td.adhesion(y), inst.k)
            for v in iter_members(mm.deleted):
                layers[v] = mm.layer_of(v)
            collect(y, mm, layers)

    layers: Dict[int, int] = {}
    collect(td.root, min(root.marks, key=ExtendedMark.sort_key), layers)
    try:
        tree = elimination_tree_from_layers(g, layers)
    except ValueError as exc:
        raise InvariantViolation(f"witnessed layers are not an elimination forest: {exc}") from exc
    if not validate_elimination_tree(g, tree) or tree.depth > inst.k or tree.vertices & inst.forbidden:
        raise InvariantViolation("reconstructed elimination forest breaks depth, shape or forbidden vertices")
    doms = []
    for comp in connected_components(g, tree.vertices):
        dom = red_blue_dominating_set(g, inst.red & comp, inst.blue & comp, inst.d)
        if dom is None:
            raise InvariantViolation("reconstructed forest leaves an undominated component")
        doms.append((comp, dom))
    logger.info(f"Extended DP solve | n={g.vertex_count} | k={inst.k} | d={inst.d} | q={q} | "
                f"verdict=yes | depth={tree.depth}")
    return ExtendedDpResult(True, tree, tuple(doms), stats, td, dp_trace, report)
