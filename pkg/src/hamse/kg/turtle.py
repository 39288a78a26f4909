"""
Turtle and N-Triples I/O for :class:`~hamse.kg.rdf.TripleGraph`.

The parser accepts the subset the serializer produces plus the common
conveniences: ``@prefix``/``PREFIX``, prefixed names, ``a``, predicate
lists (``;``), object lists (``,``), language tags, ``^^`` datatypes,
bare integers, decimals, doubles and booleans, ``_:`` blank nodes and
``#`` comments.
"""
from __future__ import annotations

import re

from .rdf import IRI, RDF_TYPE, XSD, BNode, Literal, TripleGraph

__all__ = ["TurtleError", "serialize_turtle", "serialize_ntriples", "parse_turtle"]

_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


class TurtleError(ValueError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _compact(term, prefixes):
    if isinstance(term, IRI):
        best = None
        for prefix, ns in prefixes.items():
            if term.value.startswith(ns):
                local = term.value[len(ns):]
                if _LOCAL.match(local) and (best is None or len(ns) > len(best[1])):
                    best = (prefix, ns, local)
        if best:
            return f"{best[0]}:{best[2]}"
        return term.n3()
    if isinstance(term, Literal) and not term.lang:
        compact_dt = _compact(IRI(term.datatype), prefixes)
        body = Literal(term.lexical).n3()
        if term.datatype == XSD + "string":
            return body
        return f"{body}^^{compact_dt}"
    return term.n3()


def serialize_turtle(graph: TripleGraph) -> str:
    """Deterministic Turtle: prefixes sorted, then subjects, predicates and
    objects in ascending term order, one subject block per paragraph."""
    prefixes = dict(sorted(graph.namespaces.items()))
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in prefixes.items()]
    blocks = []
    current, body = None, []
    for s, p, o in graph.sorted_triples():
        pred = "a" if p == RDF_TYPE else _compact(p, prefixes)
        obj = _compact(o, prefixes)
        if s != current:
            if body:
                blocks.append(body)
            current = s
            body = [(_compact(s, prefixes), pred, obj)]
        else:
            body.append((None, pred, obj))
    if body:
        blocks.append(body)
    for block in blocks:
        lines.append("")
        subj = block[0][0]
        if len(block) == 1:
            lines.append(f"{subj} {block[0][1]} {block[0][2]} .")
            continue
        lines.append(subj)
        for k, (_, pred, obj) in enumerate(block):
            end = " ." if k == len(block) - 1 else " ;"
            lines.append(f"    {pred} {obj}{end}")
    return "\n".join(lines) + "\n"


def serialize_ntriples(graph: TripleGraph) -> str:
    return "".join(f"{s.n3()} {p.n3()} {o.n3()} .\n" for s, p, o in graph.sorted_triples())


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<bnode>_:[A-Za-z0-9_][A-Za-z0-9_.-]*(?<!\.))
  | (?P<double>[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.?\d+[eE][+-]?\d+))
  | (?P<decimal>[+-]?\d*\.\d+)
  | (?P<integer>[+-]?\d+)
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_.-]*(?<!\.))?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?)
  | (?P<keyword>@prefix|PREFIX|a(?![A-Za-z0-9_:])|true|false)
  | (?P<punct>[.;,])
""", re.VERBOSE)

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "'": "'", "\\": "\\", "b": "\b", "f": "\f"}


def _unescape(body, line):
    out, i = [], 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1] if i + 1 < len(body) else ""
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            width = 4 if nxt == "u" else 8
            hexpart = body[i + 2:i + 2 + width]
            if len(hexpart) != width or not re.fullmatch(r"[0-9A-Fa-f]+", hexpart):
                raise TurtleError("bad unicode escape", line)
            out.append(chr(int(hexpart, 16)))
            i += 2 + width
        else:
            raise TurtleError(f"bad escape \\{nxt}", line)
    return "".join(out)


def _tokenize(text):
    tokens, pos, line = [], 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TurtleError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            # keyword group must win over pname for "a", "true", "false"
            if kind == "pname" and ":" not in value:
                kind = "keyword"
            tokens.append((kind, value, line))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes = {}
        self.graph = TripleGraph()

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, self._last_line())

    def _last_line(self):
        return self.tokens[-1][2] if self.tokens else 1

    def next(self):
        tok = self.peek()
        if tok[0] is None:
            raise TurtleError("unexpected end of input", tok[2])
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, line = self.next()
        if text != value:
            raise TurtleError(f"expected {value!r}, found {text!r}", line)

    def parse(self):
        while self.peek()[0] is not None:
            kind, text, line = self.peek()
            if text in ("@prefix", "PREFIX"):
                self.next()
                pk, pname, pline = self.next()
                if pk != "pname" or not pname.endswith(":"):
                    raise TurtleError("expected a prefix name", pline)
                ik, iri, iline = self.next()
                if ik != "iri":
                    raise TurtleError("expected an IRI", iline)
                self.prefixes[pname[:-1]] = iri[1:-1]
                if text == "@prefix":
                    self.expect(".")
                continue
            subject = self.term(subject=True)
            self.predicate_objects(subject)
            self.expect(".")
        self.graph.namespaces = dict(self.prefixes)
        return self.graph

    def predicate_objects(self, subject):
        while True:
            kind, text, line = self.peek()
            if text == "a" and kind == "keyword":
                self.next()
                pred = RDF_TYPE
            else:
                pred = self.term()
                if not isinstance(pred, IRI):
                    raise TurtleError("predicate must be an IRI", line)
            while True:
                obj = self.term()
                self.graph.add(subject, pred, obj)
                if self.peek()[1] == ",":
                    self.next()
                    continue
                break
            if self.peek()[1] == ";":
                while self.peek()[1] == ";":
                    self.next()
                if self.peek()[1] == ".":
                    return
                continue
            return

    def iri(self, kind, text, line):
        if kind == "iri":
            value = _unescape(text[1:-1], line)
        else:
            prefix, _, local = text.partition(":")
            if prefix not in self.prefixes:
                raise TurtleError(f"undeclared prefix {prefix!r}", line)
            value = self.prefixes[prefix] + local
        try:
            return IRI(value)
        except ValueError as exc:
            raise TurtleError(str(exc), line) from None

    def term(self, subject=False):
        kind, text, line = self.next()
        if kind in ("iri", "pname"):
            return self.iri(kind, text, line)
        if kind == "bnode":
            return BNode(text[2:])
        if subject:
            raise TurtleError(f"unexpected {text!r} as subject", line)
        if kind == "string":
            lexical = _unescape(text[1:-1], line)
            nk, ntext, nline = self.peek()
            if nk == "lang":
                self.next()
                return Literal(lexical, lang=ntext[1:])
            if nk == "dtype":
                self.next()
                dk, dtext, dline = self.next()
                if dk not in ("iri", "pname"):
                    raise TurtleError("expected a datatype IRI", dline)
                return Literal(lexical, self.iri(dk, dtext, dline).value)
            return Literal(lexical)
        if kind == "integer":
            return Literal(text, XSD + "integer")
        if kind == "decimal":
            return Literal(text, XSD + "decimal")
        if kind == "double":
            return Literal(text, XSD + "double")
        if kind == "keyword" and text in ("true", "false"):
            return Literal(text, XSD + "boolean")
        raise TurtleError(f"unexpected {text!r}", line)


def parse_turtle(text: str) -> TripleGraph:
    """Parse Turtle (or N-Triples) text into a graph."""
    return _Parser(text).parse()
