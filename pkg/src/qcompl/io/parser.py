"""Text formats: model files (schema, QATS, effects, named queries), query
files and fact files, with positioned errors, plus a printer whose output
parses back to the same model."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ..effects import CopyEffect, Effect, RealWorldEffect, is_useless
from ..model import (
    Atom,
    Comparison,
    ConjunctiveQuery,
    Database,
    ValidationError,
    Var,
    fact_key,
    term_str,
)
from ..qats import Qats, validate


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, expected: Sequence[str] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{hint}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>:-|<~|~>|->|!=|<=|>=|[-()=<>,.:/])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            ch = text[pos]
            if ch == '"':
                raise ParseError("unterminated string", line, col)
            raise ParseError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _number(text: str) -> Fraction:
    if "/" in text:
        n, d = text.split("/")
        if int(d) == 0:
            raise ZeroDivisionError
        return Fraction(Fraction(n), int(d))
    return Fraction(text)


@dataclass
class Model:
    qats: Qats
    queries: Dict[str, ConjunctiveQuery] = field(default_factory=dict)
    lines: Dict[str, int] = field(default_factory=dict)

    def query(self, name: str) -> ConjunctiveQuery:
        if name not in self.queries:
            known = ", ".join(sorted(self.queries)) or "none"
            raise ValidationError(f"unknown query {name} (known: {known})")
        return self.queries[name]


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, expected: Sequence[str] = (), tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, t.line, t.col, expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", [repr(text)])
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", [what])
        t = self.tok
        self.i += 1
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or not re.fullmatch(r"\d+", t.text):
            raise self.error(f"unexpected {t.text or 'end of input'!r}", ["non-negative integer"])
        self.i += 1
        return int(t.text)

    def term(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if t.kind == "number":
            self.i += 1
            try:
                return _number(t.text)
            except (ValueError, ZeroDivisionError):
                raise self.error(f"bad number {t.text!r}", tok=t) from None
        if t.kind == "string":
            self.i += 1
            return _unquote(t.text)
        raise self.error(f"unexpected {t.text or 'end of input'!r}", ["variable", "number", "string"])

    def atom(self) -> Atom:
        name = self.ident("relation name")
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.term())
            while self.at(","):
                self.i += 1
                args.append(self.term())
        self.expect(")")
        return Atom(name.text, tuple(args))

    def literal(self):
        """An atom or a comparison, decided by lookahead."""
        t = self.tok
        if t.kind == "ident" and self.toks[self.i + 1].text == "(" and self.toks[self.i + 1].kind == "op":
            return self.atom()
        left = self.term()
        op = self.tok
        if op.kind != "op" or op.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise self.error(f"unexpected {op.text or 'end of input'!r}", ["comparison operator"])
        self.i += 1
        right = self.term()
        try:
            return Comparison(left, op.text, right)
        except ValidationError as e:
            raise self.error(str(e), tok=op) from None

    def conjunction(self, stop: Sequence[str]) -> Tuple[List[Atom], List[Comparison]]:
        atoms: List[Atom] = []
        comps: List[Comparison] = []
        if any(self.at(s) for s in stop):
            return atoms, comps
        while True:
            lit = self.literal()
            (atoms if isinstance(lit, Atom) else comps).append(lit)
            if not self.at(","):
                break
            self.i += 1
        return atoms, comps

    def query(self) -> ConjunctiveQuery:
        start = self.expect("query")
        name = self.ident("query name")
        self.expect("(")
        head = []
        if not self.at(")"):
            head.append(self.term())
            while self.at(","):
                self.i += 1
                head.append(self.term())
        self.expect(")")
        self.expect(":-")
        body_tok = self.tok
        atoms, comps = self.conjunction(["."])
        self.expect(".")
        if not atoms:
            raise self.error(f"query {name.text} has no relational atom", tok=body_tok)
        try:
            return ConjunctiveQuery(name.text, tuple(head), tuple(atoms), tuple(comps))
        except ValidationError as e:
            raise self.error(str(e), tok=start) from None

    def effect(self, action: str):
        kind = self.ident("'rweffect' or 'copyeffect'")
        if kind.text not in ("rweffect", "copyeffect"):
            raise self.error(f"unexpected {kind.text!r}", ["'rweffect'", "'copyeffect'"], tok=kind)
        eid = self.ident("effect id")
        self.expect(":")
        head = self.atom()
        guard: Tuple[List[Atom], List[Comparison]] = ([], [])
        if kind.text == "rweffect":
            self.expect("<~")
            guard = self.conjunction(["."])
        else:
            if self.at("if"):
                self.i += 1
                guard = self.conjunction(["~>"])
                self.expect("~>")
                self.expect("copy")
            else:
                self.expect("~>")
                if self.at("copy") and self.toks[self.i + 1].text == ".":
                    self.i += 1
                else:
                    guard = self.conjunction(["."])
        self.expect(".")
        cls = RealWorldEffect if kind.text == "rweffect" else CopyEffect
        try:
            return cls(eid.text, head, tuple(guard[0]), tuple(guard[1])), eid
        except ValidationError as e:
            raise self.error(str(e), tok=eid) from None


def parse_model(text: str, check: bool = True) -> Model:
    """Parse a model file; with ``check`` also run the structural validation,
    reporting the first problem at the line that introduced it."""
    p = _Parser(text)
    rels: Dict[str, int] = {}
    rel_tok: Dict[str, Token] = {}
    states: List[str] = []
    state_tok: Dict[str, Token] = {}
    initial: Optional[str] = None
    actions: List[str] = []
    action_tok: Dict[str, Token] = {}
    edges: List[Tuple[str, str, str]] = []
    edge_toks: List[Tuple[Token, Token, Token]] = []
    re_: Dict[str, List[RealWorldEffect]] = {}
    ce: Dict[str, List[CopyEffect]] = {}
    effect_toks: List[Tuple[Effect, str, Token, Token]] = []
    queries: Dict[str, ConjunctiveQuery] = {}
    query_toks: Dict[str, Token] = {}
    lines: Dict[str, int] = {}

    while p.tok.kind != "eof":
        t = p.tok
        if p.at("rel"):
            p.i += 1
            name = p.ident("relation name")
            p.expect("/")
            arity = p.integer()
            if name.text in rels:
                raise p.error(f"relation {name.text} declared twice", tok=name)
            rels[name.text] = arity
            rel_tok[name.text] = name
        elif p.at("state"):
            p.i += 1
            name = p.ident("state name")
            if name.text in state_tok:
                raise p.error(f"state {name.text} declared twice", tok=name)
            states.append(name.text)
            state_tok[name.text] = name
            lines[f"state {name.text}"] = name.line
            if p.at("init"):
                if initial is not None:
                    raise p.error(f"second initial state {name.text} (first: {initial})")
                p.i += 1
                initial = name.text
        elif p.at("action"):
            p.i += 1
            name = p.ident("action name")
            if name.text in action_tok:
                raise p.error(f"action {name.text} declared twice", tok=name)
            actions.append(name.text)
            action_tok[name.text] = name
        elif p.at("edge"):
            p.i += 1
            src = p.ident("state name")
            p.expect("-")
            act = p.ident("action name")
            p.expect("->")
            dst = p.ident("state name")
            edges.append((src.text, act.text, dst.text))
            edge_toks.append((src, act, dst))
        elif p.at("on"):
            p.i += 1
            act = p.ident("action name")
            p.expect(":")
            eff, eid = p.effect(act.text)
            target = re_ if isinstance(eff, RealWorldEffect) else ce
            target.setdefault(act.text, []).append(eff)
            effect_toks.append((eff, act.text, act, eid))
        elif p.at("query"):
            q = p.query()
            if q.name in queries:
                raise ParseError(f"query {q.name} declared twice", t.line, t.col)
            queries[q.name] = q
            query_toks[q.name] = t
        else:
            raise p.error(
                f"unexpected {t.text!r}",
                ["'rel'", "'state'", "'action'", "'edge'", "'on'", "'query'"],
            )

    if check:
        for (src, act, dst), toks in zip(edges, edge_toks):
            for name, tok in ((src, toks[0]), (dst, toks[2])):
                if name not in state_tok:
                    raise ParseError(f"edge refers to undeclared state {name}", tok.line, tok.col)
            if act not in action_tok:
                raise ParseError(f"edge refers to undeclared action {act}", toks[1].line, toks[1].col)
        seen_ids: Dict[str, Token] = {}
        for eff, act, act_t, eid in effect_toks:
            if act not in action_tok:
                raise ParseError(f"effect {eff.id} bound to undeclared action {act}", act_t.line, act_t.col)
            if eff.id in seen_ids:
                raise ParseError(f"effect id {eff.id} used twice", eid.line, eid.col)
            seen_ids[eff.id] = eid
            for atom in (eff.head,) + eff.guard_atoms:
                _check_atom(atom, rels, f"effect {eff.id}", eid)
            if isinstance(eff, RealWorldEffect) and is_useless(eff):
                raise ParseError(f"useless effect {eff.id}: it can never add a fact", eid.line, eid.col)
        for name, q in queries.items():
            for atom in q.body:
                _check_atom(atom, rels, f"query {name}", query_toks[name])
        if states and initial is None:
            first = state_tok[states[0]]
            raise ParseError("no initial state (mark one with 'init')", first.line, first.col)

    qats = Qats(
        states=tuple(states),
        initial=initial or "",
        actions=tuple(actions),
        edges=tuple(edges),
        re={a: tuple(es) for a, es in re_.items()},
        ce={a: tuple(es) for a, es in ce.items()},
        schema=rels,
    )
    if check:
        problems = validate(qats)
        if problems:
            raise ParseError(str(problems[0]), 1, 1)
    return Model(qats, queries, lines)


def _check_atom(atom: Atom, rels: Dict[str, int], where: str, tok: Token) -> None:
    if atom.relation not in rels:
        raise ParseError(f"{where}: undeclared relation {atom.relation}", tok.line, tok.col)
    if rels[atom.relation] != atom.arity:
        raise ParseError(
            f"{where}: relation {atom.relation} has arity {rels[atom.relation]}, used with {atom.arity}",
            tok.line,
            tok.col,
        )


def parse_queries(text: str) -> List[ConjunctiveQuery]:
    """All ``query`` declarations of a query file, in order."""
    p = _Parser(text)
    out = []
    while p.tok.kind != "eof":
        if not p.at("query"):
            raise p.error(f"unexpected {p.tok.text!r}", ["'query'"])
        out.append(p.query())
    return out


def parse_query(text: str) -> ConjunctiveQuery:
    qs = parse_queries(text)
    if len(qs) != 1:
        raise ParseError(f"expected exactly one query, found {len(qs)}", 1, 1)
    return qs[0]


def parse_facts(text: str) -> Database:
    """Ground atoms, one per line; a trailing ``.`` is optional."""
    p = _Parser(text)
    facts = set()
    while p.tok.kind != "eof":
        t = p.tok
        a = p.atom()
        if not a.is_ground():
            raise ParseError(f"fact {a} contains a variable", t.line, t.col)
        if p.at("."):
            p.i += 1
        facts.add(a)
    db = Database(frozenset(facts))
    try:
        db.relation_arities()
    except ValidationError as e:
        raise ParseError(str(e), 1, 1) from None
    return db


def parse_effect(text: str) -> Effect:
    """One effect in model syntax without the ``on <action>:`` prefix."""
    p = _Parser(text)
    eff, _ = p.effect("")
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}", ["end of input"])
    return eff


def parse_fact(text: str) -> Atom:
    db = parse_facts(text)
    if len(db) != 1:
        raise ParseError(f"expected one fact, found {len(db)}", 1, 1)
    return next(iter(db))


def parse_constant(text: str):
    p = _Parser(text)
    c = p.term()
    if isinstance(c, Var) or p.tok.kind != "eof":
        raise ParseError(f"not a constant: {text!r}", 1, 1)
    return c


def format_query(q: ConjunctiveQuery) -> str:
    head = ",".join(term_str(t) for t in q.head)
    parts = [str(a) for a in q.body] + [_comparison_str(c) for c in q.comparisons]
    return f"query {q.name}({head}) :- {', '.join(parts)} ."


def _comparison_str(c: Comparison) -> str:
    return f"{term_str(c.left)} {c.op} {term_str(c.right)}"


def _guard_str(e: Effect) -> str:
    return ", ".join([str(a) for a in e.guard_atoms] + [_comparison_str(c) for c in e.guard_comparisons])


def format_facts(db: Database) -> str:
    return "".join(f"{f}\n" for f in sorted(db.facts, key=fact_key))


def format_model(m: Model) -> str:
    q = m.qats
    out: List[str] = []
    for name, arity in q.schema.items():
        out.append(f"rel {name}/{arity}")
    for s in q.states:
        out.append(f"state {s}{' init' if s == q.initial else ''}")
    for a in q.actions:
        out.append(f"action {a}")
    for s, a, t in q.edges:
        out.append(f"edge {s} -{a}-> {t}")
    for a in q.actions:
        for e in q.real_world_effects(a):
            out.append(f"on {a}: rweffect {e.id}: {e.head} <~ {_guard_str(e)} .".replace(" <~  .", " <~ ."))
        for e in q.copy_effects(a):
            guard = _guard_str(e)
            cond = f" if {guard}" if guard else ""
            out.append(f"on {a}: copyeffect {e.id}: {e.head}{cond} ~> copy .")
    for cq in m.queries.values():
        out.append(format_query(cq))
    return "\n".join(out) + "\n"


__all__ = [
    "Model",
    "ParseError",
    "Token",
    "format_facts",
    "format_model",
    "format_query",
    "parse_constant",
    "parse_fact",
    "parse_facts",
    "parse_model",
    "parse_queries",
    "parse_query",
    "tokenize",
]
