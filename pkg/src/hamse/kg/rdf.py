"""RDF terms and an indexed in-memory triple set."""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

__all__ = [
    "IRI",
    "BNode",
    "Literal",
    "Var",
    "Term",
    "Triple",
    "TripleGraph",
    "XSD",
    "RDF_TYPE",
    "term_key",
]

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
_ABSOLUTE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:[^\s<>\"{}|\\^`]*$")


@dataclass(frozen=True, order=True)
class IRI:
    value: str

    def __post_init__(self):
        if not _ABSOLUTE.match(self.value):
            raise ValueError(f"not an absolute IRI: {self.value!r}")

    def __str__(self):
        return self.value

    def n3(self) -> str:
        return f"<{self.value}>"

    def __truediv__(self, suffix) -> "IRI":
        return IRI(f"{self.value}/{suffix}")


RDF_TYPE = IRI("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")


@dataclass(frozen=True, order=True)
class BNode:
    id: str

    def n3(self) -> str:
        return f"_:{self.id}"


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    lang: Optional[str] = None

    def __post_init__(self):
        if self.lang is not None:
            object.__setattr__(self, "lang", self.lang.lower())
            object.__setattr__(self, "datatype", "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString")

    @classmethod
    def of(cls, value) -> "Literal":
        """Typed literal for a Python value (bool, int, float, Fraction, str)."""
        if isinstance(value, bool):
            return cls("true" if value else "false", XSD + "boolean")
        if isinstance(value, int):
            return cls(str(value), XSD + "integer")
        if isinstance(value, float):
            return cls(f"{value:.6f}", XSD + "double")
        if isinstance(value, Fraction):
            return rational_literal(value)
        if isinstance(value, str):
            return cls(value)
        raise TypeError(f"no literal mapping for {type(value).__name__}")

    def n3(self) -> str:
        body = f'"{_escape(self.lexical)}"'
        if self.lang:
            return f"{body}@{self.lang}"
        if self.datatype == XSD_STRING:
            return body
        return f"{body}^^<{self.datatype}>"

    def to_python(self):
        dt = self.datatype
        if dt == XSD + "integer":
            return int(self.lexical)
        if dt == XSD + "decimal":
            return Fraction(Decimal(self.lexical))
        if dt in (XSD + "double", XSD + "float"):
            return float(self.lexical)
        if dt == XSD + "boolean":
            return self.lexical == "true"
        if dt == XSD_STRING and re.fullmatch(r"-?\d+/\d+", self.lexical):
            return Fraction(self.lexical)
        return self.lexical


def rational_literal(value: Fraction) -> Literal:
    """Exact decimal when the expansion terminates, else ``"num/den"`` as a string."""
    value = Fraction(value)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return Literal(f"{value.numerator}/{value.denominator}")
    places = max(twos, fives)
    scaled = value * 10 ** places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    text = digits if not places else f"{digits[:-places]}.{digits[-places:]}"
    return Literal(sign + text, XSD + "decimal")


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def n3(self) -> str:
        return f"?{self.name}"


Term = Union[IRI, BNode, Literal]
Triple = tuple


def term_key(term) -> str:
    """Total order on terms used for deterministic output."""
    return term.n3()


class TripleGraph:
    """A set of triples with subject, predicate and object indexes."""

    def __init__(self, triples: Iterable[Triple] = (), namespaces: Optional[dict] = None):
        self.namespaces = dict(namespaces or {})
        self._triples = set()
        self._s = defaultdict(set)
        self._p = defaultdict(set)
        self._o = defaultdict(set)
        for t in triples:
            self.add(*t)

    def add(self, s, p, o) -> None:
        if not isinstance(s, (IRI, BNode)):
            raise TypeError(f"subject must be an IRI or blank node, got {s!r}")
        if not isinstance(p, IRI):
            raise TypeError(f"predicate must be an IRI, got {p!r}")
        if not isinstance(o, (IRI, BNode, Literal)):
            raise TypeError(f"object must be an RDF term, got {o!r}")
        t = (s, p, o)
        if t in self._triples:
            return
        self._triples.add(t)
        self._s[s].add(t)
        self._p[p].add(t)
        self._o[o].add(t)

    def update(self, other: Iterable[Triple]) -> "TripleGraph":
        if isinstance(other, TripleGraph):
            for prefix, ns in other.namespaces.items():
                self.namespaces.setdefault(prefix, ns)
        for t in other:
            self.add(*t)
        return self

    __ior__ = update

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __len__(self):
        return len(self._triples)

    def __contains__(self, triple):
        return tuple(triple) in self._triples

    def __eq__(self, other):
        if isinstance(other, TripleGraph):
            return self._triples == other._triples
        return NotImplemented

    def triples(self, s=None, p=None, o=None) -> Iterator[Triple]:
        """Triples matching the given terms (``None`` matches anything)."""
        candidates = None
        for term, index in ((s, self._s), (p, self._p), (o, self._o)):
            if term is None:
                continue
            bucket = index.get(term)
            if not bucket:
                return iter(())
            if candidates is None or len(bucket) < len(candidates):
                candidates = bucket
        if candidates is None:
            candidates = self._triples
        return (t for t in list(candidates)
                if (s is None or t[0] == s) and (p is None or t[1] == p) and (o is None or t[2] == o))

    def objects(self, s, p) -> list:
        return sorted((t[2] for t in self.triples(s, p, None)), key=term_key)

    def subjects(self, p, o) -> list:
        return sorted((t[0] for t in self.triples(None, p, o)), key=term_key)

    def value(self, s, p, default=None):
        objs = self.objects(s, p)
        return objs[0] if objs else default

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples, key=lambda t: (term_key(t[0]), term_key(t[1]), term_key(t[2])))
