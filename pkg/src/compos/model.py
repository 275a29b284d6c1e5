"""Components and structure-preserving morphisms.

A component couples a signature (three disjoint name sets: variables,
actions, events) with a presentation: every action carries a guard set
(sentences that must hold for the action to occur) and an effect set
(sentences asserted by its occurrence), and every event observes a finite
set of actions that fire together in one state transition.

A morphism is a triple of total name maps under which guards, effects, and
observation sets of the source are included in those of the target; guards
may only be strengthened and observation sets only extended.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .diagnostics import ComposError, Diagnostic, error
from .logic import Formula, SentenceSet, UnmappedSymbol, to_source, translate_set

#: The three name sorts of a signature, in canonical order.
SORTS = ("variables", "actions", "events")

_MAP_ATTR = {"variables": "variable_map", "actions": "action_map", "events": "event_map"}


class NonComposable(ComposError):
    """Composition was attempted on morphisms with mismatched endpoints."""


@dataclass(frozen=True)
class Signature:
    variables: frozenset[str]
    actions: frozenset[str]
    events: frozenset[str]

    def sort(self, sort: str) -> frozenset[str]:
        return getattr(self, sort)


@dataclass(frozen=True)
class Presentation:
    guards: Mapping[str, SentenceSet]            # action -> prescription
    effects: Mapping[str, SentenceSet]           # action -> description
    observations: Mapping[str, frozenset[str]]   # event -> observed actions


@dataclass(frozen=True)
class Component:
    name: str
    signature: Signature
    presentation: Presentation


@dataclass(frozen=True)
class SignatureMorphism:
    """Three total name maps between the sorts of two signatures."""

    variable_map: Mapping[str, str]
    action_map: Mapping[str, str]
    event_map: Mapping[str, str]

    def map_for(self, sort: str) -> Mapping[str, str]:
        return getattr(self, _MAP_ATTR[sort])


@dataclass(frozen=True)
class ComponentMorphism:
    source: Component
    target: Component
    maps: SignatureMorphism

    @property
    def variable_map(self) -> Mapping[str, str]:
        return self.maps.variable_map

    @property
    def action_map(self) -> Mapping[str, str]:
        return self.maps.action_map

    @property
    def event_map(self) -> Mapping[str, str]:
        return self.maps.event_map


def build_component(name: str, *,
                    variables: Iterable[str] = (),
                    actions: Iterable[str] = (),
                    events: Iterable[str] = (),
                    guards: Mapping[str, object] | None = None,
                    effects: Mapping[str, object] | None = None,
                    observations: Mapping[str, Iterable[str]] | None = None) -> Component:
    """Assemble a component, defaulting absent guard/effect/observation entries.

    Guard and effect values may be SentenceSets or iterables of formulas.
    """
    def to_sset(value: object) -> SentenceSet:
        if isinstance(value, SentenceSet):
            return value
        if isinstance(value, Formula):
            return SentenceSet((value,))
        return SentenceSet(value)  # type: ignore[arg-type]

    action_set = frozenset(actions)
    event_set = frozenset(events)
    guards = guards or {}
    effects = effects or {}
    observations = observations or {}
    pres = Presentation(
        {a: to_sset(guards.get(a, SentenceSet())) for a in sorted(action_set | set(guards))},
        {a: to_sset(effects.get(a, SentenceSet())) for a in sorted(action_set | set(effects))},
        {e: frozenset(observations.get(e, frozenset())) for e in sorted(event_set | set(observations))},
    )
    return Component(name, Signature(frozenset(variables), action_set, event_set), pres)


def validate_component(component: Component) -> list[Diagnostic]:
    """Check all structural invariants; an empty report means valid."""
    report: list[Diagnostic] = []
    sig = component.signature
    for sort in SORTS:
        for name in sorted(sig.sort(sort)):
            if not name or any(ch.isspace() for ch in name):
                report.append(error("MalformedName", sort, repr(name),
                                    message=f"{sort[:-1]} name {name!r} is empty or has whitespace"))
    for first, second in itertools.combinations(SORTS, 2):
        for name in sorted(sig.sort(first) & sig.sort(second)):
            report.append(error("NameSetsOverlap", name,
                                message=f"name '{name}' appears in both {first} and {second}"))

    pres = component.presentation
    domains = (
        ("guard", pres.guards, sig.actions, "GuardDomainMismatch"),
        ("effect", pres.effects, sig.actions, "EffectDomainMismatch"),
        ("observation", pres.observations, sig.events, "ObservationDomainMismatch"),
    )
    for label, mapping, domain, kind in domains:
        for name in sorted(domain - set(mapping)):
            report.append(error(kind, name, message=f"no {label} entry for '{name}'"))
        for name in sorted(set(mapping) - domain):
            report.append(error(kind, name, message=f"{label} entry for undeclared name '{name}'"))

    for action in sorted(sig.actions):
        for label, mapping in (("guard", pres.guards), ("effect", pres.effects)):
            sentences = mapping.get(action)
            if sentences is None:
                continue
            for symbol in sorted(sentences.symbols - sig.variables):
                report.append(error("SymbolNotDeclared", action, symbol,
                                    message=f"{label} of '{action}' mentions undeclared variable '{symbol}'"))
    for event in sorted(sig.events):
        for act in sorted(pres.observations.get(event, frozenset()) - sig.actions):
            report.append(error("ObservedActionUnknown", event, act,
                                message=f"event '{event}' observes unknown action '{act}'"))
    return report


def validate_morphism(morphism: ComponentMorphism) -> list[Diagnostic]:
    """Check totality and the three preservation inclusions.

    Assumes both endpoints pass validate_component; the report names every
    failing action or event.
    """
    report: list[Diagnostic] = []
    src_sig = morphism.source.signature
    dst_sig = morphism.target.signature
    for sort in SORTS:
        mapping = morphism.maps.map_for(sort)
        for name in sorted(src_sig.sort(sort) - set(mapping)):
            report.append(error("TotalityViolation", sort, name,
                                message=f"no image for {sort[:-1]} '{name}'"))
        for name in sorted(set(mapping) & src_sig.sort(sort)):
            image = mapping[name]
            if image not in dst_sig.sort(sort):
                report.append(error("ImageOutsideTarget", sort, name,
                                    message=f"image '{image}' of '{name}' is not a target {sort[:-1]}"))

    src_pres = morphism.source.presentation
    dst_pres = morphism.target.presentation
    vmap, amap, emap = morphism.variable_map, morphism.action_map, morphism.event_map
    inclusions = (
        ("PrescriptionNotPreserved", "guard", src_pres.guards, dst_pres.guards),
        ("DescriptionNotPreserved", "effect", src_pres.effects, dst_pres.effects),
    )
    for action in sorted(src_sig.actions):
        image = amap.get(action)
        if image is None or image not in dst_sig.actions:
            continue
        for kind, label, src_map, dst_map in inclusions:
            try:
                translated = translate_set(vmap, src_map.get(action, SentenceSet()))
            except UnmappedSymbol:
                continue  # already reported as a totality violation
            target_set = dst_map.get(image, SentenceSet())
            if not translated.issubset(target_set):
                witness = next(f for f in translated if f not in target_set)
                report.append(error(kind, action,
                                    message=f"translated {label} sentence '{to_source(witness)}' of "
                                            f"'{action}' is not in the {label} of '{image}'"))
    for event in sorted(src_sig.events):
        image = emap.get(event)
        if image is None or image not in dst_sig.events:
            continue
        observed = src_pres.observations.get(event, frozenset())
        if any(a not in amap for a in observed):
            continue
        mapped = {amap[a] for a in observed}
        target_obs = dst_pres.observations.get(image, frozenset())
        if not mapped <= target_obs:
            witness = sorted(mapped - target_obs)[0]
            report.append(error("ObservationNotPreserved", event,
                                message=f"action image '{witness}' of event '{event}' "
                                        f"is not observed by '{image}'"))
    return report


def identity(component: Component) -> ComponentMorphism:
    sig = component.signature
    maps = SignatureMorphism({n: n for n in sorted(sig.variables)},
                             {n: n for n in sorted(sig.actions)},
                             {n: n for n in sorted(sig.events)})
    return ComponentMorphism(component, component, maps)


def compose(first: ComponentMorphism, second: ComponentMorphism) -> ComponentMorphism:
    """Compose two morphisms by chaining their name maps pairwise."""
    if first.target != second.source:
        raise NonComposable(
            f"cannot compose: target of '{first.target.name}' differs from source "
            f"of '{second.source.name}'")

    def chain(f: Mapping[str, str], g: Mapping[str, str]) -> dict[str, str]:
        return {name: g[image] for name, image in f.items()}

    maps = SignatureMorphism(chain(first.variable_map, second.variable_map),
                             chain(first.action_map, second.action_map),
                             chain(first.event_map, second.event_map))
    return ComponentMorphism(first.source, second.target, maps)


def components_isomorphic(first: Component, second: Component) -> Optional[ComponentMorphism]:
    """Search for a bijective renaming under which the presentations coincide.

    Guards, effects, and observation sets must be equal (not merely included)
    under the renaming, so the returned morphism is valid in both directions.
    The search enumerates variable bijections with backtracking over actions
    and events; meant for desk-scale components only.
    """
    sig1, sig2 = first.signature, second.signature
    if any(len(sig1.sort(s)) != len(sig2.sort(s)) for s in SORTS):
        return None
    source_vars = sorted(sig1.variables)
    source_acts = sorted(sig1.actions)
    source_evs = sorted(sig1.events)
    pres1, pres2 = first.presentation, second.presentation

    for image_vars in itertools.permutations(sorted(sig2.variables)):
        vmap = dict(zip(source_vars, image_vars))
        try:
            wanted = {a: (translate_set(vmap, pres1.guards[a]),
                          translate_set(vmap, pres1.effects[a]))
                      for a in source_acts}
        except (UnmappedSymbol, KeyError):
            continue
        profiles2 = {b: (pres2.guards[b], pres2.effects[b]) for b in sig2.actions}
        act_candidates = {a: sorted(b for b, profile in profiles2.items() if profile == wanted[a])
                          for a in source_acts}
        for amap in _bijections(source_acts, act_candidates):
            ev_candidates = {
                e: sorted(f for f in sig2.events
                          if pres2.observations[f] == {amap[a] for a in pres1.observations[e]})
                for e in source_evs
            }
            for emap in _bijections(source_evs, ev_candidates):
                return ComponentMorphism(first, second,
                                         SignatureMorphism(vmap, dict(amap), dict(emap)))
    return None


def _bijections(items: list[str], candidates: dict[str, list[str]]) -> Iterator[dict[str, str]]:
    """All injective assignments of items to their candidate images."""
    order = sorted(items, key=lambda x: (len(candidates[x]), x))

    def extend(i: int, used: frozenset[str], acc: dict[str, str]) -> Iterator[dict[str, str]]:
        if i == len(order):
            yield dict(acc)
            return
        item = order[i]
        for image in candidates[item]:
            if image in used:
                continue
            acc[item] = image
            yield from extend(i + 1, used | {image}, acc)
            del acc[item]

    return extend(0, frozenset(), {})
