"""Execution of components as guarded-event transition systems.

States are total boolean valuations of a component's variables.  An event is
enabled when the guards of every action it observes hold jointly; firing it
applies the effect literals of all observed actions simultaneously, leaving
unmentioned variables unchanged.  Effects must be literals to execute;
richer effect sentences remain legal for composition and morphism checking
but are refused here.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

from .diagnostics import ComposError
from .logic import Formula, SentenceSet, as_literal, satisfies, to_source
from .model import Component

State = dict[str, bool]


class SimulationError(ComposError):
    pass


class NotEnabled(SimulationError):
    def __init__(self, event: str, reason: str = ""):
        detail = f" ({reason})" if reason else ""
        super().__init__(f"event '{event}' is not enabled{detail}")
        self.event = event


class NonLiteralEffect(SimulationError):
    def __init__(self, action: str, sentence: Formula):
        super().__init__(f"effect sentence '{to_source(sentence)}' of action "
                         f"'{action}' is not a literal; cannot execute")
        self.action = action
        self.sentence = sentence


class ConflictingEffects(SimulationError):
    def __init__(self, variable: str, event: str):
        super().__init__(f"firing '{event}' asserts both '{variable}' and its negation")
        self.variable = variable


class AmbiguousInitial(SimulationError):
    def __init__(self, count: int):
        if count == 0:
            message = "the initial constraint is unsatisfiable"
        else:
            message = f"{count} states satisfy the initial constraint; exactly one is needed"
        super().__init__(message)
        self.count = count


@dataclass(frozen=True)
class Trace:
    initial: Mapping[str, bool]
    steps: tuple[tuple[str, Mapping[str, bool]], ...]

    @property
    def final(self) -> Mapping[str, bool]:
        return self.steps[-1][1] if self.steps else self.initial

    @property
    def events(self) -> tuple[str, ...]:
        return tuple(event for event, _ in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


def _check_state(component: Component, state: Mapping[str, bool]) -> None:
    if set(state) != set(component.signature.variables):
        raise ValueError(f"state domain {sorted(state)} does not match the variables "
                         f"of '{component.name}'")


def initial_states(component: Component, constraint: SentenceSet) -> list[State]:
    """All total valuations satisfying every constraint sentence.

    The result is deterministically ordered (variables sorted, False before
    True); an unsatisfiable constraint yields an empty list.
    """
    variables = sorted(component.signature.variables)
    states = []
    for values in product((False, True), repeat=len(variables)):
        state = dict(zip(variables, values))
        if satisfies(state, constraint):
            states.append(state)
    return states


def enabled_events(component: Component, state: Mapping[str, bool]) -> frozenset[str]:
    """Events whose observed actions all have satisfied guards; an event
    observing no actions is enabled in every state."""
    _check_state(component, state)
    pres = component.presentation
    enabled = set()
    for event in component.signature.events:
        observed = pres.observations.get(event, frozenset())
        if all(satisfies(state, pres.guards[action]) for action in observed):
            enabled.add(event)
    return frozenset(enabled)


def fire(component: Component, state: Mapping[str, bool], event: str) -> State:
    """Apply all effect literals of the actions observed by ``event`` at once.

    Variables not mentioned by any effect keep their values (frame rule).
    """
    _check_state(component, state)
    if event not in component.signature.events:
        raise SimulationError(f"'{event}' is not an event of '{component.name}'")
    pres = component.presentation
    observed = sorted(pres.observations.get(event, frozenset()))
    for action in observed:
        if not satisfies(state, pres.guards[action]):
            raise NotEnabled(event, reason=f"guard of action '{action}' fails")
    assignments: dict[str, bool] = {}
    for action in observed:
        for sentence in pres.effects[action]:
            literal = as_literal(sentence)
            if literal is None:
                raise NonLiteralEffect(action, sentence)
            variable, value = literal
            if assignments.get(variable, value) != value:
                raise ConflictingEffects(variable, event)
            assignments[variable] = value
    successor = dict(state)
    successor.update(assignments)
    return successor


def run(component: Component, constraint: SentenceSet,
        schedule: Sequence[str]) -> Trace:
    """Fire the schedule from the unique state satisfying the constraint."""
    states = initial_states(component, constraint)
    if len(states) != 1:
        raise AmbiguousInitial(len(states))
    current = states[0]
    steps = []
    for event in schedule:
        current = fire(component, current, event)
        steps.append((event, current))
    return Trace(states[0], tuple(steps))


def reachable(component: Component, constraint: SentenceSet,
              goal: SentenceSet, bound: int) -> Optional[Trace]:
    """Breadth-first search for a shortest trace whose final state satisfies
    the goal, exploring at most ``bound`` steps.

    Ties break deterministically: initial states in value order, events in
    lexicographic order.  Returns None when no witness exists within bound.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    events = sorted(component.signature.events)
    queue: deque[Trace] = deque()
    seen: set[tuple[tuple[str, bool], ...]] = set()
    for state in initial_states(component, constraint):
        key = tuple(sorted(state.items()))
        if key not in seen:
            seen.add(key)
            queue.append(Trace(state, ()))
    while queue:
        trace = queue.popleft()
        if satisfies(trace.final, goal):
            return trace
        if len(trace) >= bound:
            continue
        for event in events:
            if event not in enabled_events(component, trace.final):
                continue
            successor = fire(component, trace.final, event)
            key = tuple(sorted(successor.items()))
            if key in seen:
                continue
            seen.add(key)
            queue.append(Trace(trace.initial, trace.steps + ((event, successor),)))
    return None


def render_state(state: Mapping[str, bool]) -> str:
    return " ".join(f"{name}={int(state[name])}" for name in sorted(state))


def render_trace(trace: Trace) -> str:
    """One line per step, ``<event>: <var>=<0|1> ...``; the initial state is
    labelled ``init``."""
    lines = [f"init: {render_state(trace.initial)}"]
    lines.extend(f"{event}: {render_state(state)}" for event, state in trace.steps)
    return "\n".join(lines)
