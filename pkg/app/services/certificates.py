"""
Pure certificate checkers. Every emitted report passes through these.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from app.services.elimination import EliminationTree, validate_elimination_tree
from app.services.graph import (
    AnnotatedInstance,
    VertexSet,
    closed_neighborhood,
    connected_components,
    members,
    popcount,
)


@dataclass
class CertificateReport:
    valid: bool = True
    errors: List[str] = field(default_factory=list)

    def fail(self, message: str):
        self.valid = False
        self.errors.append(message)


def _check_components(inst: AnnotatedInstance, deleted: VertexSet,
                      dominators: Sequence[Tuple[VertexSet, VertexSet]], report: CertificateReport):
    g = inst.graph
    given = {comp: dom for comp, dom in dominators}
    for comp in connected_components(g, deleted):
        dom = given.get(comp)
        if dom is None:
            report.fail(f"no dominators listed for component {members(comp)}")
            continue
        if dom & ~comp or dom & ~inst.blue:
            report.fail(f"dominators {members(dom)} are not blue vertices of component {members(comp)}")
        if popcount(dom) > inst.d:
            report.fail(f"component {members(comp)} uses {popcount(dom)} dominators, more than d={inst.d}")
        missed = inst.red & comp & ~closed_neighborhood(g, dom)
        if missed:
            report.fail(f"red vertices {members(missed)} are not dominated")
    extra = set(given) - set(connected_components(g, deleted))
    if extra:
        report.fail(f"{len(extra)} listed components do not exist after the deletion")


def check_dcd_certificate(inst: AnnotatedInstance, deleted: VertexSet,
                          dominators: Sequence[Tuple[VertexSet, VertexSet]]) -> CertificateReport:
    """
    Check a deletion set with per-component dominators.

    Args:
        inst: Annotated instance the certificate claims to solve
        deleted: Deleted vertices
        dominators: (component, dominators) pairs of the remaining graph

    Returns:
        CertificateReport listing every broken condition
    """
    report = CertificateReport()
    if popcount(deleted) > inst.k:
        report.fail(f"{popcount(deleted)} deletions exceed k={inst.k}")
    if deleted & inst.forbidden:
        report.fail(f"forbidden vertices {members(deleted & inst.forbidden)} are deleted")
    _check_components(inst, deleted, dominators, report)
    return report


def check_eddc_certificate(inst: AnnotatedInstance, tree: Optional[EliminationTree],
                           dominators: Sequence[Tuple[VertexSet, VertexSet]]) -> CertificateReport:
    """
    Check an elimination forest of depth at most k with per-component dominators
    of the graph left after deleting the forest's vertices.
    """
    report = CertificateReport()
    tree = tree if tree is not None else EliminationTree.empty()
    deleted = tree.vertices
    if tree.depth > inst.k:
        report.fail(f"forest depth {tree.depth} exceeds k={inst.k}")
    if deleted & inst.forbidden:
        report.fail(f"forbidden vertices {members(deleted & inst.forbidden)} are deleted")
    try:
        if not validate_elimination_tree(inst.graph, tree):
            report.fail("deleted set is not tree-structured by the forest")
    except ValueError as exc:
        report.fail(str(exc))
    _check_components(inst, deleted, dominators, report)
    return report


def check_apd_certificate(inst: AnnotatedInstance, deleted: VertexSet, dominators: VertexSet) -> CertificateReport:
    """Check an Annotated Partial Domination solution: one dominator set for all remaining reds."""
    report = CertificateReport()
    if popcount(deleted) > inst.k:
        report.fail(f"{popcount(deleted)} deletions exceed k={inst.k}")
    if deleted & inst.forbidden:
        report.fail(f"forbidden vertices {members(deleted & inst.forbidden)} are deleted")
    if dominators & ~inst.blue or dominators & deleted:
        report.fail(f"dominators {members(dominators)} must be blue and not deleted")
    if popcount(dominators) > inst.d:
        report.fail(f"{popcount(dominators)} dominators exceed d={inst.d}")
    missed = inst.red & ~deleted & ~closed_neighborhood(inst.graph, dominators)
    if missed:
        report.fail(f"red vertices {members(missed)} are not dominated")
    return report
