"""Finite colimits of component diagrams, cocone checking, and mediators.

A diagram is a finite labelled graph of components and morphisms.  Its
colimit is computed sort by sort: tagged names (node, local name) are
quotiented by the identifications the edges impose, and the apex
presentations are the unions of the translated member presentations.  Every
commuting cocone over the diagram then factors uniquely through the apex.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from .diagnostics import ComposError, Diagnostic, error
from .logic import SentenceSet, translate_set
from .model import (SORTS, Component, ComponentMorphism, Presentation,
                    Signature, SignatureMorphism, validate_component,
                    validate_morphism)

Tagged = tuple[str, str]  # (node label, local name)


class IllDefinedMediator(ComposError):
    """Members of one quotient class disagree under the cocone legs."""


class NameCollision(ComposError):
    """Representative naming could not be disambiguated (unreachable)."""


class BoundExceeded(ComposError):
    """A diagram node exceeds the size bound of an exhaustive check."""


@dataclass(frozen=True)
class DiagramEdge:
    name: str
    source: str
    target: str
    morphism: ComponentMorphism


@dataclass(frozen=True)
class Diagram:
    nodes: Mapping[str, Component]
    edges: tuple[DiagramEdge, ...]


@dataclass(frozen=True)
class Cocone:
    apex: Component
    legs: Mapping[str, ComponentMorphism]  # node label -> morphism into apex


@dataclass(frozen=True)
class NamedClass:
    """One equivalence class of tagged names with its chosen apex name."""

    name: str
    members: frozenset[Tagged]


@dataclass(frozen=True)
class ColimitResult:
    cocone: Cocone
    classes: Mapping[str, tuple[NamedClass, ...]]  # per sort


class TaggedUnionFind:
    """Union-find over tagged names with path compression and a merge log."""

    def __init__(self, elements: Iterable[Tagged] = ()):
        self.parent: dict[Tagged, Tagged] = {}
        self.merge_log: list[tuple[str, Tagged, Tagged]] = []
        for element in elements:
            self.add(element)

    def add(self, element: Tagged) -> None:
        self.parent.setdefault(element, element)

    def find(self, element: Tagged) -> Tagged:
        root = element
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[element] != root:  # path compression
            self.parent[element], element = root, self.parent[element]
        return root

    def union(self, left: Tagged, right: Tagged, reason: str = "") -> bool:
        a, b = self.find(left), self.find(right)
        if a == b:
            return False
        if b < a:  # keep the least root so representatives are deterministic
            a, b = b, a
        self.parent[b] = a
        self.merge_log.append((reason, left, right))
        return True

    def classes(self) -> tuple[frozenset[Tagged], ...]:
        groups: dict[Tagged, set[Tagged]] = {}
        for element in self.parent:
            groups.setdefault(self.find(element), set()).add(element)
        return tuple(sorted((frozenset(g) for g in groups.values()), key=min))


SetEdge = tuple[str, str, str, Mapping[str, str]]  # (label, src node, dst node, map)


def colimit_set(node_sets: Mapping[str, Iterable[str]],
                edges: Iterable[SetEdge]) -> tuple[tuple[frozenset[Tagged], ...], dict[str, dict[str, int]]]:
    """Colimit of a finite diagram of sets, as a quotient of the disjoint union.

    Returns the equivalence classes (sorted by least member) together with,
    per node, the injection from each local name to its class index.
    """
    sets = {node: frozenset(names) for node, names in node_sets.items()}
    uf = TaggedUnionFind((node, name) for node in sorted(sets) for name in sorted(sets[node]))
    for label, src, dst, mapping in edges:
        for name in sorted(sets[src]):
            if name not in mapping:
                continue  # totality is the caller's precondition
            image = mapping[name]
            if image not in sets[dst]:
                raise ValueError(f"edge '{label}' maps '{name}' outside its target node")
            uf.union((src, name), (dst, image), reason=label)
    classes = uf.classes()
    index = {member: i for i, cls in enumerate(classes) for member in cls}
    injections = {node: {name: index[(node, name)] for name in sorted(sets[node])}
                  for node in sets}
    return classes, injections


def relational_closure_partition(node_sets: Mapping[str, Iterable[str]],
                                 edges: Iterable[SetEdge]) -> tuple[frozenset[Tagged], ...]:
    """The same quotient computed by naive fixpoint merging of blocks.

    Deliberately independent of the union-find route so the two serve as
    oracles of one another.
    """
    sets = {node: frozenset(names) for node, names in node_sets.items()}
    blocks: list[set[Tagged]] = [{(node, name)}
                                 for node in sorted(sets) for name in sorted(sets[node])]
    pairs = [((src, name), (dst, mapping[name]))
             for _, src, dst, mapping in edges
             for name in sorted(sets[src]) if name in mapping]
    changed = True
    while changed:
        changed = False
        for left, right in pairs:
            i = next(k for k, block in enumerate(blocks) if left in block)
            j = next(k for k, block in enumerate(blocks) if right in block)
            if i != j:
                lo, hi = min(i, j), max(i, j)
                blocks[lo] |= blocks[hi]
                del blocks[hi]
                changed = True
    return tuple(sorted((frozenset(b) for b in blocks), key=min))


def sort_view(diagram: Diagram, sort: str) -> tuple[dict[str, frozenset[str]], list[SetEdge]]:
    """Restrict a diagram to one name sort: node sets plus edge name maps."""
    node_sets = {node: comp.signature.sort(sort) for node, comp in diagram.nodes.items()}
    edges = []
    for edge in diagram.edges:
        mapping = edge.morphism.maps.map_for(sort)
        source_names = diagram.nodes[edge.source].signature.sort(sort)
        edges.append((edge.name, edge.source, edge.target,
                      {n: mapping[n] for n in sorted(source_names) if n in mapping}))
    return node_sets, edges


def validate_diagram(diagram: Diagram) -> list[Diagnostic]:
    """Check node components, edge endpoints, and edge morphism validity."""
    report: list[Diagnostic] = []
    for node, comp in sorted(diagram.nodes.items()):
        for diag in validate_component(comp):
            report.append(Diagnostic(diag.kind, (node,) + diag.subject,
                                     f"node '{node}': {diag.message}", diag.severity))
    for edge in diagram.edges:
        for endpoint, role in ((edge.source, "source"), (edge.target, "target")):
            if endpoint not in diagram.nodes:
                report.append(error("UnknownNode", edge.name, endpoint,
                                    message=f"edge '{edge.name}' references unknown {role} '{endpoint}'"))
        if edge.source in diagram.nodes and edge.morphism.source != diagram.nodes[edge.source]:
            report.append(error("EndpointMismatch", edge.name,
                                message=f"edge '{edge.name}' morphism source is not node '{edge.source}'"))
        if edge.target in diagram.nodes and edge.morphism.target != diagram.nodes[edge.target]:
            report.append(error("EndpointMismatch", edge.name,
                                message=f"edge '{edge.name}' morphism target is not node '{edge.target}'"))
        for diag in validate_morphism(edge.morphism):
            report.append(Diagnostic(diag.kind, (edge.name,) + diag.subject,
                                     f"edge '{edge.name}': {diag.message}", diag.severity))
    return report


_SORT_PREFIX = {"variables": "var_", "actions": "act_", "events": "evt_"}

Partitions = Mapping[str, tuple[frozenset[Tagged], ...]]


def _uniquify(candidates: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for candidate in candidates:
        name, k = candidate, 1
        while name in seen:
            k += 1
            name = f"{candidate}_{k}"
        seen.add(name)
        out.append(name)
    return out


def _class_names(partitions: Partitions) -> dict[str, list[str]]:
    """Deterministic apex names: the least member's local name, disambiguated.

    Within a sort, duplicated candidates get the owning node appended; across
    sorts, names claimed twice get a sort tag prefixed.  A counter suffix is
    the final fallback, so the scheme never actually fails.
    """
    names: dict[str, list[str]] = {}
    meta: dict[str, list[Tagged]] = {}
    for sort in SORTS:
        candidates, info = [], []
        for cls in partitions[sort]:
            node, local = min(cls)
            candidates.append(local)
            info.append((node, local))
        names[sort], meta[sort] = candidates, info
    for sort in SORTS:
        counts = Counter(names[sort])
        names[sort] = _uniquify([
            f"{local}_{node}" if counts[candidate] > 1 else candidate
            for candidate, (node, local) in zip(names[sort], meta[sort])
        ])
    for _ in range(100):
        owners: Counter[str] = Counter()
        for sort in SORTS:
            owners.update(set(names[sort]))
        clashes = {name for name, k in owners.items() if k > 1}
        if not clashes:
            return names
        for sort in SORTS:
            names[sort] = _uniquify([
                _SORT_PREFIX[sort] + name if name in clashes else name
                for name in names[sort]
            ])
    raise NameCollision("could not disambiguate representative names")


def _signature_from_partitions(diagram: Diagram, partitions: Partitions
                               ) -> tuple[Signature, dict[str, SignatureMorphism],
                                          dict[str, tuple[NamedClass, ...]]]:
    names = _class_names(partitions)
    signature = Signature(frozenset(names["variables"]),
                          frozenset(names["actions"]),
                          frozenset(names["events"]))
    classes = {sort: tuple(NamedClass(name, cls)
                           for cls, name in zip(partitions[sort], names[sort]))
               for sort in SORTS}
    injections = {}
    for node in diagram.nodes:
        maps: dict[str, dict[str, str]] = {sort: {} for sort in SORTS}
        for sort in SORTS:
            for named in classes[sort]:
                for member_node, local in named.members:
                    if member_node == node:
                        maps[sort][local] = named.name
        injections[node] = SignatureMorphism(maps["variables"], maps["actions"], maps["events"])
    return signature, injections, classes


def colimit_signature(diagram: Diagram) -> tuple[Signature, dict[str, SignatureMorphism],
                                                 dict[str, tuple[NamedClass, ...]]]:
    """Colimit of the signature part, computed independently per sort."""
    partitions = {sort: colimit_set(*sort_view(diagram, sort))[0] for sort in SORTS}
    return _signature_from_partitions(diagram, partitions)


def colimit_from_partitions(diagram: Diagram, partitions: Partitions,
                            apex_name: str = "colimit") -> ColimitResult:
    """Assemble apex and injection legs for a given name partition.

    The partition need not be the true quotient; callers that pass a finer or
    coarser one obtain a candidate that verify_universal_property rejects.
    """
    signature, injections, classes = _signature_from_partitions(diagram, partitions)
    guards: dict[str, SentenceSet] = {}
    effects: dict[str, SentenceSet] = {}
    for named in classes["actions"]:
        guard_union, effect_union = SentenceSet(), SentenceSet()
        for node, local in sorted(named.members):
            comp = diagram.nodes[node]
            vmap = injections[node].variable_map
            guard_union = guard_union | translate_set(vmap, comp.presentation.guards.get(local, SentenceSet()))
            effect_union = effect_union | translate_set(vmap, comp.presentation.effects.get(local, SentenceSet()))
        guards[named.name] = guard_union
        effects[named.name] = effect_union
    observations: dict[str, frozenset[str]] = {}
    for named in classes["events"]:
        observed: set[str] = set()
        for node, local in sorted(named.members):
            comp = diagram.nodes[node]
            amap = injections[node].action_map
            observed |= {amap[a] for a in comp.presentation.observations.get(local, frozenset())}
        observations[named.name] = frozenset(observed)
    apex = Component(apex_name, signature, Presentation(guards, effects, observations))
    legs = {node: ComponentMorphism(diagram.nodes[node], apex, injections[node])
            for node in diagram.nodes}
    return ColimitResult(Cocone(apex, legs), classes)


def colimit_system(diagram: Diagram, apex_name: str = "colimit") -> ColimitResult:
    """Compose the diagram: quotient the names, union the translated presentations."""
    partitions = {sort: colimit_set(*sort_view(diagram, sort))[0] for sort in SORTS}
    result = colimit_from_partitions(diagram, partitions, apex_name)
    issues = validate_component(result.cocone.apex)
    for node in sorted(result.cocone.legs):
        issues += validate_morphism(result.cocone.legs[node])
    if issues:  # closure property of the construction; a failure is a bug here
        raise RuntimeError(f"colimit construction produced an invalid result: {issues[0]}")
    return result


def check_cocone(diagram: Diagram, cocone: Cocone) -> list[Diagnostic]:
    """Check that the legs are valid morphisms into the apex and commute
    with every diagram edge; an empty report means the cocone is valid."""
    report: list[Diagnostic] = []
    for node in sorted(set(diagram.nodes) - set(cocone.legs)):
        report.append(error("LegMissing", node, message=f"no leg for node '{node}'"))
    for name in sorted(set(cocone.legs) - set(diagram.nodes)):
        report.append(error("LegUnknownNode", name,
                            message=f"leg for '{name}' matches no diagram node"))
    for node, comp in sorted(diagram.nodes.items()):
        leg = cocone.legs.get(node)
        if leg is None:
            continue
        if leg.source != comp:
            report.append(error("LegSourceMismatch", node,
                                message=f"leg source differs from node '{node}'"))
            continue
        if leg.target != cocone.apex:
            report.append(error("LegTargetMismatch", node,
                                message=f"leg target of '{node}' is not the apex"))
        for diag in validate_morphism(leg):
            report.append(Diagnostic(diag.kind, (node,) + diag.subject,
                                     f"leg '{node}': {diag.message}", diag.severity))
    for edge in diagram.edges:
        source_leg = cocone.legs.get(edge.source)
        target_leg = cocone.legs.get(edge.target)
        if source_leg is None or target_leg is None:
            continue
        for sort in SORTS:
            edge_map = edge.morphism.maps.map_for(sort)
            direct = source_leg.maps.map_for(sort)
            through = target_leg.maps.map_for(sort)
            for name in sorted(diagram.nodes[edge.source].signature.sort(sort)):
                left = direct.get(name)
                right = through.get(edge_map.get(name))
                if left != right:
                    report.append(error("CommutationFailure", edge.name, sort, name,
                                        message=f"legs disagree along edge '{edge.name}' "
                                                f"on '{name}': '{left}' vs '{right}'"))
    return report


def mediating_morphism(result: ColimitResult, cocone: Cocone) -> ComponentMorphism:
    """The unique morphism from the colimit apex through which every leg of
    the given cocone factors.

    Well-definedness is re-verified member by member; a disagreement raises
    IllDefinedMediator and is unreachable when check_cocone passed.
    """
    maps: dict[str, dict[str, str]] = {}
    for sort in SORTS:
        out: dict[str, str] = {}
        for named in result.classes[sort]:
            images = []
            for node, local in sorted(named.members):
                leg = cocone.legs.get(node)
                if leg is None:
                    raise ValueError(f"cocone lacks a leg for node '{node}'")
                images.append(leg.maps.map_for(sort)[local])
            if len(set(images)) != 1:
                raise IllDefinedMediator(
                    f"class '{named.name}' ({sort}) maps to {sorted(set(images))}; "
                    f"the cocone does not commute")
            out[named.name] = images[0]
        maps[sort] = out
    mediator = ComponentMorphism(result.cocone.apex, cocone.apex,
                                 SignatureMorphism(maps["variables"], maps["actions"], maps["events"]))
    issues = validate_morphism(mediator)
    if issues:
        raise ValueError(f"cocone legs are not valid morphisms: {issues[0]}")
    return mediator


def verify_universal_property(result: ColimitResult, diagram: Diagram,
                              bound: int = 5) -> bool:
    """Decide whether ``result`` is a colimit of ``diagram``.

    Equivalent to unique factorization through every cocone, decided by a
    complete structural characterization: the legs must form a commuting
    cocone, hit every apex name, induce exactly the relational closure of
    the edge identifications, and the apex presentations must be exactly
    the unions of the translated member presentations.  A reference cocone
    assembled from the independently computed closure partition is then used
    as an executable witness for the mediator.  Intended for tests.
    """
    for node, comp in sorted(diagram.nodes.items()):
        for sort in SORTS:
            if len(comp.signature.sort(sort)) > bound:
                raise BoundExceeded(f"node '{node}' has more than {bound} {sort}")
    if check_cocone(diagram, result.cocone):
        return False
    apex = result.cocone.apex

    fibers: dict[str, dict[str, set[Tagged]]] = {}
    for sort in SORTS:
        groups: dict[str, set[Tagged]] = {}
        for node, comp in diagram.nodes.items():
            leg_map = result.cocone.legs[node].maps.map_for(sort)
            for local in comp.signature.sort(sort):
                groups.setdefault(leg_map[local], set()).add((node, local))
        if set(groups) != set(apex.signature.sort(sort)):
            return False  # some apex name is not hit: mediators are not unique
        fibers[sort] = groups

    closure = {sort: relational_closure_partition(*sort_view(diagram, sort)) for sort in SORTS}
    for sort in SORTS:
        induced = tuple(sorted((frozenset(g) for g in fibers[sort].values()), key=min))
        if induced != closure[sort]:
            return False  # over-merged: the closure cocone has no mediator

    for name, members in sorted(fibers["actions"].items()):
        guard_union, effect_union = SentenceSet(), SentenceSet()
        for node, local in sorted(members):
            comp = diagram.nodes[node]
            vmap = result.cocone.legs[node].variable_map
            guard_union = guard_union | translate_set(vmap, comp.presentation.guards.get(local, SentenceSet()))
            effect_union = effect_union | translate_set(vmap, comp.presentation.effects.get(local, SentenceSet()))
        if apex.presentation.guards.get(name, SentenceSet()) != guard_union:
            return False
        if apex.presentation.effects.get(name, SentenceSet()) != effect_union:
            return False
    for name, members in sorted(fibers["events"].items()):
        observed: set[str] = set()
        for node, local in sorted(members):
            amap = result.cocone.legs[node].action_map
            observed |= {amap[a] for a in diagram.nodes[node].presentation.observations.get(local, frozenset())}
        if apex.presentation.observations.get(name, frozenset()) != frozenset(observed):
            return False

    reference = colimit_from_partitions(diagram, closure, "reference")
    try:
        mediator = mediating_morphism(result, reference.cocone)
    except (IllDefinedMediator, ValueError):
        return False
    for node, comp in diagram.nodes.items():
        for sort in SORTS:
            leg_here = result.cocone.legs[node].maps.map_for(sort)
            leg_there = reference.cocone.legs[node].maps.map_for(sort)
            med = mediator.maps.map_for(sort)
            for local in comp.signature.sort(sort):
                if med[leg_here[local]] != leg_there[local]:
                    return False
    return True
