"""Propositional sentences over variable alphabets.

Sentences are immutable syntax trees.  Sentence sets are kept canonical:
top-level conjunctions are split into separate members and the constant True
is dropped, so a set always denotes the conjunction of its members and two
sets describing the same comma list compare equal.  Equality of sentences is
syntactic; no logical normalization beyond the above is performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .diagnostics import ComposError


class UnmappedSymbol(ComposError):
    """A translation was applied to a symbol outside its domain."""

    def __init__(self, symbol: str):
        super().__init__(f"no image for symbol '{symbol}'")
        self.symbol = symbol


class UnassignedSymbol(ComposError):
    """A sentence was evaluated in a state missing one of its symbols."""

    def __init__(self, symbol: str):
        super().__init__(f"state assigns no value to '{symbol}'")
        self.symbol = symbol


class Formula:
    """Base class of sentence syntax trees."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Sym(Formula):
    name: str

    def __post_init__(self):
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"malformed symbol name: {self.name!r}")


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


TRUE = Const(True)
FALSE = Const(False)


def symbols_of(formula: Formula) -> frozenset[str]:
    """The propositional symbols occurring in the formula."""
    match formula:
        case Const():
            return frozenset()
        case Sym(name):
            return frozenset((name,))
        case Not(operand):
            return symbols_of(operand)
        case And(left, right) | Or(left, right) | Implies(left, right):
            return symbols_of(left) | symbols_of(right)
    raise TypeError(f"not a formula: {formula!r}")


def translate_formula(mapping: Mapping[str, str], formula: Formula) -> Formula:
    """Rename every symbol through ``mapping``; the tree shape is unchanged.

    Raises UnmappedSymbol if a symbol of the formula has no image.
    """
    match formula:
        case Const():
            return formula
        case Sym(name):
            if name not in mapping:
                raise UnmappedSymbol(name)
            return Sym(mapping[name])
        case Not(operand):
            return Not(translate_formula(mapping, operand))
        case And(left, right):
            return And(translate_formula(mapping, left), translate_formula(mapping, right))
        case Or(left, right):
            return Or(translate_formula(mapping, left), translate_formula(mapping, right))
        case Implies(left, right):
            return Implies(translate_formula(mapping, left), translate_formula(mapping, right))
    raise TypeError(f"not a formula: {formula!r}")


def evaluate(formula: Formula, state: Mapping[str, bool]) -> bool:
    """Standard boolean semantics of a sentence in a state."""
    match formula:
        case Const(value):
            return value
        case Sym(name):
            if name not in state:
                raise UnassignedSymbol(name)
            return state[name]
        case Not(operand):
            return not evaluate(operand, state)
        case And(left, right):
            return evaluate(left, state) and evaluate(right, state)
        case Or(left, right):
            return evaluate(left, state) or evaluate(right, state)
        case Implies(left, right):
            return (not evaluate(left, state)) or evaluate(right, state)
    raise TypeError(f"not a formula: {formula!r}")


def as_literal(formula: Formula) -> tuple[str, bool] | None:
    """Decompose a literal into (symbol, asserted value); None otherwise."""
    match formula:
        case Sym(name):
            return name, True
        case Not(Sym(name)):
            return name, False
    return None


# Rendering precedence: implication < or < and < not < atoms.
_NOT, _AND, _OR, _IMPLIES = 4, 3, 2, 1


def to_source(formula: Formula) -> str:
    """Concrete syntax of a formula with a minimal set of parentheses."""
    return _render(formula, 0)


def _render(formula: Formula, floor: int) -> str:
    match formula:
        case Const(value):
            return "True" if value else "False"
        case Sym(name):
            return name
        case Not(operand):
            text, prec = f"\\not {_render(operand, _NOT)}", _NOT
        case And(left, right):
            text, prec = f"{_render(left, _AND)} \\and {_render(right, _AND + 1)}", _AND
        case Or(left, right):
            text, prec = f"{_render(left, _OR)} \\or {_render(right, _OR + 1)}", _OR
        case Implies(left, right):
            # right-associative
            text, prec = f"{_render(left, _IMPLIES + 1)} \\implies {_render(right, _IMPLIES)}", _IMPLIES
        case _:
            raise TypeError(f"not a formula: {formula!r}")
    return f"({text})" if prec < floor else text


def _flatten_into(formula: Formula, acc: set[Formula]) -> None:
    match formula:
        case And(left, right):
            _flatten_into(left, acc)
            _flatten_into(right, acc)
        case Const(True):
            pass
        case _:
            acc.add(formula)


class SentenceSet:
    """A canonical finite set of sentences.

    Construction splits top-level conjunctions into separate members, drops
    the constant True, and deduplicates syntactically, so SentenceSet((a&b,))
    equals SentenceSet((a, b)).  Instances are immutable and hashable.
    """

    __slots__ = ("_members",)

    def __init__(self, sentences: Iterable[Formula] = ()):
        acc: set[Formula] = set()
        for sentence in sentences:
            _flatten_into(sentence, acc)
        self._members: frozenset[Formula] = frozenset(acc)

    @property
    def members(self) -> frozenset[Formula]:
        return self._members

    @property
    def symbols(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for member in self._members:
            out |= symbols_of(member)
        return out

    def issubset(self, other: "SentenceSet") -> bool:
        return self._members <= other._members

    def __or__(self, other: "SentenceSet") -> "SentenceSet":
        return SentenceSet(self._members | other._members)

    def __contains__(self, formula: Formula) -> bool:
        return formula in self._members

    def __iter__(self) -> Iterator[Formula]:
        return iter(sorted(self._members, key=to_source))

    def __len__(self) -> int:
        return len(self._members)

    def __bool__(self) -> bool:
        return bool(self._members)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SentenceSet):
            return NotImplemented
        return self._members == other._members

    def __hash__(self) -> int:
        return hash(self._members)

    def __repr__(self) -> str:
        inner = ", ".join(to_source(f) for f in self)
        return f"SentenceSet({{{inner}}})"


def translate_set(mapping: Mapping[str, str], sentences: SentenceSet) -> SentenceSet:
    """Elementwise translation; the result re-canonicalizes and deduplicates."""
    return SentenceSet(translate_formula(mapping, f) for f in sentences)


def satisfies(state: Mapping[str, bool], sentences: SentenceSet) -> bool:
    """True iff every member holds in the state (empty set is satisfied)."""
    return all(evaluate(f, state) for f in sentences)
