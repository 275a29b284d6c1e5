"""Parser and pretty-printer for component texts and diagram files.

Component grammar (newline-insensitive between tokens, `--` starts a line
comment, `-->` and `->` are both accepted as the rule arrow):

    component    = "component" IDENT
                   "variables" [ namelist ":" "bool" ]
                   "actions"   namelist
                   "events"    namelist
                   "*[" { block } "]"
    namelist     = [ IDENT { "," IDENT } ]
    block        = IDENT ":" rule { rule }          -- an event and its rules
    rule         = IDENT ":" sentences arrow sentences
    sentences    = formula { "," formula }
    formula      = ... "\\not" > "\\and" > "\\or" > "\\implies", "True",
                   "False", parentheses, identifiers

A rule line `e: a: G --> D` binds action a to event e with guard sentences G
and effect sentences D; further rules under the same event add more observed
actions.  The declared actions list is cross-checked against the body; the
body is authoritative and a mismatch yields a warning.

Diagram files are line-oriented:

    component <name> <path>
    morphism <edge> : <src> -> <dst>
      var <x> -> <y> / action <a> -> <b> / event <e> -> <f>
    environment <name> <path>
    leg <node> -> <env>
      ... same map lines ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .category import Cocone, Diagram, DiagramEdge
from .diagnostics import ComposError, Diagnostic, ValidationFailure, error, warning
from .logic import (FALSE, TRUE, And, Formula, Implies, Not, Or, SentenceSet,
                    Sym, to_source)
from .model import (SORTS, Component, ComponentMorphism, Presentation,
                    Signature, SignatureMorphism, validate_component,
                    validate_morphism)


class ComposSyntaxError(ComposError):
    def __init__(self, message: str, origin: str, line: int, column: int):
        super().__init__(f"{origin}:{line}:{column}: {message}")
        self.reason = message
        self.origin = origin
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_PUNCT = {",": "COMMA", ":": "COLON", "]": "RBRACK", "(": "LPAREN", ")": "RPAREN"}
_OPERATORS = {"not": "NOT", "and": "AND", "or": "OR", "implies": "IMPLIES"}
_RESERVED = {"True", "False"}


def tokenize(text: str, origin: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, column, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, column, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            column, i = column + 1, i + 1
            continue
        if text.startswith("-->", i):
            tokens.append(Token("ARROW", "-->", line, column))
            column, i = column + 3, i + 3
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            tokens.append(Token("ARROW", "->", line, column))
            column, i = column + 2, i + 2
            continue
        if text.startswith("*[", i):
            tokens.append(Token("LBODY", "*[", line, column))
            column, i = column + 2, i + 2
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, line, column))
            column, i = column + 1, i + 1
            continue
        if ch == "\\":
            j = i + 1
            while j < n and text[j].isalpha():
                j += 1
            word = text[i + 1:j]
            if word not in _OPERATORS:
                raise ComposSyntaxError(f"unknown operator '\\{word}'", origin, line, column)
            tokens.append(Token(_OPERATORS[word], text[i:j], line, column))
            column, i = column + (j - i), j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, column))
            column, i = column + (j - i), j
            continue
        raise ComposSyntaxError(f"unexpected character {ch!r}", origin, line, column)
    tokens.append(Token("EOF", "", line, column))
    return tokens


class _ComponentParser:
    def __init__(self, tokens: list[Token], origin: str):
        self.tokens = tokens
        self.pos = 0
        self.origin = origin
        self.errors: list[Diagnostic] = []
        self.warnings: list[Diagnostic] = []
        self.declared: dict[str, tuple[str, Token]] = {}  # name -> (sort, first token)
        self.declared_variables: set[str] | None = None
        self._warned: set[tuple[str, str]] = set()

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "EOF":
            self.pos += 1
        return token

    def fail(self, message: str, token: Token | None = None) -> ComposSyntaxError:
        token = token or self.peek()
        found = f"'{token.text}'" if token.kind != "EOF" else "end of input"
        return ComposSyntaxError(f"{message}, found {found}", self.origin,
                                 token.line, token.column)

    def expect(self, kind: str, what: str) -> Token:
        if self.peek().kind != kind:
            raise self.fail(f"expected {what}")
        return self.advance()

    def keyword(self, word: str) -> Token:
        token = self.peek()
        if token.kind != "IDENT" or token.text != word:
            raise self.fail(f"expected '{word}'")
        return self.advance()

    def ident(self, what: str) -> Token:
        if self.peek().kind != "IDENT":
            raise self.fail(f"expected {what}")
        return self.advance()

    # -- grammar -----------------------------------------------------------

    def parse(self) -> tuple[Component, list[Diagnostic]]:
        self.keyword("component")
        name = self.ident("component name").text

        self.keyword("variables")
        variables = self.name_list(stop={"actions"}, sort="variables")
        if self.peek().kind == "COLON":
            self.advance()
            self.keyword("bool")
        elif variables:
            raise self.fail("expected ': bool' after the variable list")
        self.declared_variables = set(variables)

        self.keyword("actions")
        declared_actions = self.name_list(stop={"events"}, sort="actions")
        self.keyword("events")
        declared_events = self.name_list(stop=(), sort="events")

        self.expect("LBODY", "'*['")
        rules: list[tuple[str, str, list[Formula], list[Formula]]] = []
        body_events: list[str] = []
        body_actions: list[str] = []
        while self.peek().kind != "RBRACK":
            self.parse_block(rules, body_events, body_actions,
                             declared_actions, declared_events)
        self.expect("RBRACK", "']'")
        self.expect("EOF", "end of input")

        actions = sorted(set(declared_actions) | set(body_actions))
        events = sorted(set(declared_events) | set(body_events))
        guards = {a: SentenceSet() for a in actions}
        effects = {a: SentenceSet() for a in actions}
        observations: dict[str, set[str]] = {e: set() for e in events}
        for event, action, guard_formulas, effect_formulas in rules:
            guards[action] = guards[action] | SentenceSet(guard_formulas)
            effects[action] = effects[action] | SentenceSet(effect_formulas)
            observations[event].add(action)

        component = Component(
            name,
            Signature(frozenset(variables), frozenset(actions), frozenset(events)),
            Presentation(guards, effects,
                         {e: frozenset(acts) for e, acts in observations.items()}),
        )
        if self.errors:
            raise ValidationFailure(self.errors + self.warnings, self.origin)
        leftover = validate_component(component)
        if leftover:
            raise ValidationFailure(leftover, self.origin)
        return component, self.warnings

    def name_list(self, stop, sort: str) -> list[str]:
        names: list[str] = []
        while self.peek().kind == "IDENT" and self.peek().text not in stop:
            token = self.advance()
            self.check_name(token, sort)
            names.append(token.text)
            if self.peek().kind != "COMMA":
                break
            self.advance()
            if self.peek().kind != "IDENT" or self.peek().text in stop:
                raise self.fail("expected a name after ','")
        return names

    def check_name(self, token: Token, sort: str) -> None:
        if token.text in _RESERVED:
            raise ComposSyntaxError(f"'{token.text}' is reserved and cannot be a name",
                                    self.origin, token.line, token.column)
        known = self.declared.get(token.text)
        if known is None:
            self.declared[token.text] = (sort, token)
        elif known[0] == sort:
            self.warnings.append(warning(
                "DuplicateName", token.text,
                message=f"{sort[:-1]} '{token.text}' is declared twice",
                line=token.line, column=token.column))
        else:
            self.errors.append(error(
                "NameSetsOverlap", token.text,
                message=f"name '{token.text}' appears in both {known[0]} and {sort}",
                line=token.line, column=token.column))

    def parse_block(self, rules, body_events, body_actions,
                    declared_actions, declared_events) -> None:
        event_token = self.ident("an event name")
        self.expect("COLON", "':' after the event name")
        event = event_token.text
        if event not in declared_events and ("events", event) not in self._warned:
            self._warned.add(("events", event))
            self.warnings.append(warning(
                "UndeclaredEvent", event,
                message=f"event '{event}' appears in the body but is not declared",
                line=event_token.line, column=event_token.column))
        if event not in body_events:
            body_events.append(event)
        self.parse_rule(rules, body_actions, event, declared_actions)
        while self.starts_rule():
            self.parse_rule(rules, body_actions, event, declared_actions)

    def starts_rule(self) -> bool:
        # Both a rule and a new block begin IDENT ':'; a block is followed by
        # another IDENT ':' (its first rule), a rule by a sentence list.
        if self.peek().kind != "IDENT" or self.peek(1).kind != "COLON":
            return False
        return not (self.peek(2).kind == "IDENT" and self.peek(3).kind == "COLON")

    def parse_rule(self, rules, body_actions, event: str, declared_actions) -> None:
        action_token = self.ident("an action name")
        self.expect("COLON", "':' after the action name")
        action = action_token.text
        if action not in declared_actions and ("actions", action) not in self._warned:
            self._warned.add(("actions", action))
            self.warnings.append(warning(
                "UndeclaredAction", action,
                message=f"action '{action}' appears in the body but is not declared",
                line=action_token.line, column=action_token.column))
        if action not in body_actions:
            body_actions.append(action)
        guard = self.sentence_list()
        self.expect("ARROW", "'-->'")
        effect = self.sentence_list()
        rules.append((event, action, guard, effect))

    def sentence_list(self) -> list[Formula]:
        sentences = [self.formula()]
        while self.peek().kind == "COMMA":
            self.advance()
            sentences.append(self.formula())
        return sentences

    # -- formulas ----------------------------------------------------------

    def formula(self) -> Formula:
        left = self.or_expr()
        if self.peek().kind == "IMPLIES":
            self.advance()
            return Implies(left, self.formula())
        return left

    def or_expr(self) -> Formula:
        node = self.and_expr()
        while self.peek().kind == "OR":
            self.advance()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> Formula:
        node = self.unary()
        while self.peek().kind == "AND":
            self.advance()
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        if self.peek().kind == "NOT":
            self.advance()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        token = self.peek()
        if token.kind == "LPAREN":
            self.advance()
            inner = self.formula()
            self.expect("RPAREN", "')'")
            return inner
        if token.kind == "IDENT":
            self.advance()
            if token.text == "True":
                return TRUE
            if token.text == "False":
                return FALSE
            if self.declared_variables is not None and token.text not in self.declared_variables:
                self.errors.append(error(
                    "SymbolNotDeclared", token.text,
                    message=f"'{token.text}' is not a declared variable",
                    line=token.line, column=token.column))
            return Sym(token.text)
        raise self.fail("expected a sentence")


def parse_component(text: str, origin: str = "<input>") -> tuple[Component, list[Diagnostic]]:
    """Parse a component text into a validated Component plus any warnings.

    Raises ComposSyntaxError on malformed input and ValidationFailure (with
    positioned diagnostics) on structural errors.
    """
    return _ComponentParser(tokenize(text, origin), origin).parse()


def parse_component_file(path: str | Path) -> tuple[Component, list[Diagnostic]]:
    path = Path(path)
    return parse_component(path.read_text(encoding="utf-8"), origin=str(path))


def parse_formula(text: str, origin: str = "<formula>") -> Formula:
    """Parse a single formula (no variable-declaration checking)."""
    parser = _ComponentParser(tokenize(text, origin), origin)
    formula = parser.formula()
    parser.expect("EOF", "end of formula")
    return formula


# -- emission ---------------------------------------------------------------


def _sentences_text(sentences: SentenceSet) -> str:
    if not sentences:
        return "True"
    return ", ".join(sorted(to_source(f) for f in sentences))


def _rule_text(action: str, presentation: Presentation) -> str:
    guard = _sentences_text(presentation.guards.get(action, SentenceSet()))
    effect = _sentences_text(presentation.effects.get(action, SentenceSet()))
    return f"{action}: {guard} --> {effect}"


def emit_component(component: Component) -> str:
    """Render a component in the concrete grammar, deterministically ordered.

    Raises ValueError for components the grammar cannot express: an action
    whose guard or effect is nonempty can only be written under an event
    that observes it.
    """
    sig, pres = component.signature, component.presentation
    observed_somewhere = {a for acts in pres.observations.values() for a in acts}
    for action in sorted(sig.actions):
        if action not in observed_somewhere and (pres.guards.get(action) or pres.effects.get(action)):
            raise ValueError(f"action '{action}' carries sentences but no event observes it; "
                             f"the grammar cannot express it")

    lines = [f"component {component.name}", ""]
    lines.append("variables" + (f" {', '.join(sorted(sig.variables))} : bool" if sig.variables else ""))
    lines.append("actions" + (f" {', '.join(sorted(sig.actions))}" if sig.actions else ""))
    lines.append("events" + (f" {', '.join(sorted(sig.events))}" if sig.events else ""))
    lines.append("")

    blocks = [(event, sorted(pres.observations[event]))
              for event in sorted(sig.events) if pres.observations.get(event)]
    if not blocks:
        lines.append("*[ ]")
    else:
        body: list[str] = []
        for event, observed in blocks:
            first, *rest = observed
            body.append(f"{event}: {_rule_text(first, pres)}")
            indent = " " * (len(event) + 2)
            body.extend(indent + _rule_text(action, pres) for action in rest)
        body = ["*[ " + body[0]] + ["   " + line for line in body[1:]]
        body[-1] += " ]"
        lines.extend(body)
    return "\n".join(lines) + "\n"


def render_name_maps(maps: SignatureMorphism, indent: str = "  ") -> list[str]:
    lines = []
    for keyword, mapping in (("var", maps.variable_map), ("action", maps.action_map),
                             ("event", maps.event_map)):
        lines.extend(f"{indent}{keyword} {name} -> {mapping[name]}" for name in sorted(mapping))
    return lines


def render_morphism_block(name: str, source: str, target: str,
                          maps: SignatureMorphism) -> str:
    return "\n".join([f"morphism {name} : {source} -> {target}", *render_name_maps(maps)])


# -- diagram files ------------------------------------------------------------


@dataclass
class DiagramFile:
    """A resolved diagram description: the diagram itself, any environment
    cocones declared alongside it, and warnings from the referenced files."""

    diagram: Diagram
    cocones: dict[str, Cocone]
    warnings: list[Diagnostic] = field(default_factory=list)


def _strip_comment(line: str) -> str:
    i = 0
    while True:
        j = line.find("--", i)
        if j < 0:
            return line
        if line[j + 2:j + 3] == ">":
            i = j + 3
            continue
        return line[:j]


_SORT_KEYWORD = {"var": "variables", "action": "actions", "event": "events"}


@dataclass
class _MapBlock:
    label: str          # edge name, or "node->env" for legs
    source: str
    target: str
    line: int
    maps: dict[str, dict[str, str]]


def parse_diagram(text: str, origin: str = "<diagram>",
                  base_dir: str | Path | None = None,
                  components: Mapping[str, Component] | None = None) -> DiagramFile:
    """Parse a diagram description, loading referenced component files.

    ``components`` may pre-supply named components; file paths are resolved
    against ``base_dir``.  All edge morphisms are validated; declared cocone
    legs are checked for totality only (semantic checking belongs to
    check_cocone).
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    preloaded = dict(components or {})
    nodes: dict[str, Component] = {}
    environments: dict[str, Component] = {}
    edge_blocks: list[_MapBlock] = []
    leg_blocks: list[_MapBlock] = []
    warnings: list[Diagnostic] = []
    errors: list[Diagnostic] = []
    current: _MapBlock | None = None

    def load(name: str, path_text: str, lineno: int) -> Component | None:
        if name in preloaded:
            return preloaded[name]
        path = Path(path_text)
        if not path.is_absolute():
            path = base / path
        try:
            component, file_warnings = parse_component_file(path)
        except FileNotFoundError:
            errors.append(error("UnresolvedReference", name, path_text,
                                message=f"cannot read component file '{path_text}'",
                                line=lineno, column=1))
            return None
        for diag in file_warnings:
            warnings.append(Diagnostic(diag.kind, diag.subject,
                                       f"{path}: {diag.message}", diag.severity,
                                       line=lineno, column=1))
        return component

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if head in ("component", "environment"):
            parts = line.split(None, 2)
            if len(parts) != 3:
                raise ComposSyntaxError(f"expected '{head} <name> <path>'", origin, lineno, 1)
            _, name, path_text = parts
            table = nodes if head == "component" else environments
            if name in table:
                errors.append(error("DuplicateDeclaration", name,
                                    message=f"{head} '{name}' declared twice",
                                    line=lineno, column=1))
            else:
                component = load(name, path_text, lineno)
                if component is not None:
                    table[name] = component
            current = None
        elif head == "morphism":
            if len(words) != 6 or words[2] != ":" or words[4] not in ("->", "-->"):
                raise ComposSyntaxError("expected 'morphism <edge> : <src> -> <dst>'",
                                        origin, lineno, 1)
            edge_name, source, target = words[1], words[3], words[5]
            if any(block.label == edge_name for block in edge_blocks):
                errors.append(error("DuplicateDeclaration", edge_name,
                                    message=f"morphism '{edge_name}' declared twice",
                                    line=lineno, column=1))
            current = _MapBlock(edge_name, source, target, lineno,
                                {sort: {} for sort in SORTS})
            edge_blocks.append(current)
        elif head == "leg":
            if len(words) != 4 or words[2] not in ("->", "-->"):
                raise ComposSyntaxError("expected 'leg <node> -> <environment>'",
                                        origin, lineno, 1)
            node, env = words[1], words[3]
            label = f"{node}->{env}"
            if any(block.label == label for block in leg_blocks):
                errors.append(error("DuplicateDeclaration", node, env,
                                    message=f"leg '{node}' -> '{env}' declared twice",
                                    line=lineno, column=1))
            current = _MapBlock(label, node, env, lineno, {sort: {} for sort in SORTS})
            leg_blocks.append(current)
        elif head in _SORT_KEYWORD:
            if len(words) != 4 or words[2] not in ("->", "-->"):
                raise ComposSyntaxError(f"expected '{head} <name> -> <name>'",
                                        origin, lineno, 1)
            if current is None:
                raise ComposSyntaxError("map line outside a morphism or leg block",
                                        origin, lineno, 1)
            sort = _SORT_KEYWORD[head]
            name, image = words[1], words[3]
            if name in current.maps[sort]:
                errors.append(error("DuplicateMapping", current.label, name,
                                    message=f"'{name}' is mapped twice in '{current.label}'",
                                    line=lineno, column=1))
            current.maps[sort][name] = image
        else:
            raise ComposSyntaxError(f"unknown declaration '{head}'", origin, lineno, 1)

    def build_morphism(block: _MapBlock, source: Component, target: Component,
                       check_validity: bool) -> ComponentMorphism | None:
        ok = True
        for sort in SORTS:
            mapping = block.maps[sort]
            for name in sorted(source.signature.sort(sort) - set(mapping)):
                errors.append(error("TotalityViolation", block.label, name,
                                    message=f"'{block.label}' does not map {sort[:-1]} '{name}'",
                                    line=block.line, column=1))
                ok = False
            for name in sorted(mapping):
                if name not in source.signature.sort(sort):
                    errors.append(error("ImageOutsideTarget", block.label, name,
                                        message=f"'{block.label}' maps unknown {sort[:-1]} '{name}'",
                                        line=block.line, column=1))
                    ok = False
                elif mapping[name] not in target.signature.sort(sort):
                    errors.append(error("ImageOutsideTarget", block.label, name,
                                        message=f"'{block.label}' maps '{name}' to unknown "
                                                f"{sort[:-1]} '{mapping[name]}'",
                                        line=block.line, column=1))
                    ok = False
        morphism = ComponentMorphism(source, target, SignatureMorphism(
            dict(block.maps["variables"]), dict(block.maps["actions"]),
            dict(block.maps["events"])))
        if ok and check_validity:
            for diag in validate_morphism(morphism):
                errors.append(Diagnostic(diag.kind, (block.label,) + diag.subject,
                                         f"edge '{block.label}': {diag.message}",
                                         diag.severity, block.line, 1))
        return morphism

    edges: list[DiagramEdge] = []
    for block in edge_blocks:
        missing = [n for n in (block.source, block.target) if n not in nodes]
        for name in missing:
            errors.append(error("UnresolvedReference", block.label, name,
                                message=f"morphism '{block.label}' references unknown component '{name}'",
                                line=block.line, column=1))
        if missing:
            continue
        morphism = build_morphism(block, nodes[block.source], nodes[block.target],
                                  check_validity=True)
        edges.append(DiagramEdge(block.label, block.source, block.target, morphism))

    legs_by_env: dict[str, dict[str, ComponentMorphism]] = {env: {} for env in environments}
    for block in leg_blocks:
        node, env = block.source, block.target
        if node not in nodes:
            errors.append(error("UnresolvedReference", block.label, node,
                                message=f"leg references unknown component '{node}'",
                                line=block.line, column=1))
            continue
        if env not in environments:
            errors.append(error("UnknownEnvironment", block.label, env,
                                message=f"leg references undeclared environment '{env}'",
                                line=block.line, column=1))
            continue
        morphism = build_morphism(block, nodes[node], environments[env],
                                  check_validity=False)
        legs_by_env[env][node] = morphism

    if errors:
        raise ValidationFailure(errors + warnings, origin)
    diagram = Diagram(dict(sorted(nodes.items())), tuple(edges))
    cocones = {env: Cocone(environments[env], legs_by_env[env])
               for env in sorted(environments)}
    return DiagramFile(diagram, cocones, warnings)


def parse_diagram_file(path: str | Path) -> DiagramFile:
    path = Path(path)
    return parse_diagram(path.read_text(encoding="utf-8"), origin=str(path),
                         base_dir=path.parent)
