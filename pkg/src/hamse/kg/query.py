"""
Basic graph pattern matching and the twelve competency questions.

Patterns are ``(s, p, o)`` triples whose positions hold terms or variables.
A variable is a :class:`~hamse.kg.rdf.Var` or a string starting with ``?``.
"""
from __future__ import annotations

import enum
from collections import Counter, defaultdict
from typing import Iterable, Mapping, Optional, Sequence

from .rdf import IRI, RDF_TYPE, Literal, TripleGraph, Var, term_key
from .vocab import HAMSE, MO, RDFS, TL

__all__ = ["QueryError", "match", "CQ", "CQ_PARAMS", "answer_cq", "predominant_quadrant", "work_quadrants"]


class QueryError(ValueError):
    pass


def _var(x):
    if isinstance(x, Var):
        return x.name
    if isinstance(x, str) and x.startswith("?") and len(x) > 1:
        return x[1:]
    return None


def _normalize(patterns):
    out = []
    for pat in patterns:
        if len(pat) != 3:
            raise QueryError(f"pattern must have three positions: {pat!r}")
        row = []
        for x in pat:
            name = _var(x)
            if name is not None:
                row.append(Var(name))
            elif isinstance(x, str):
                raise QueryError(f"plain string {x!r} in pattern; use IRI/Literal or '?var'")
            else:
                row.append(x)
        out.append(tuple(row))
    return out


def _subclasses(g, cls):
    return [cls] + [t[0] for t in g.triples(None, RDFS.subClassOf, cls)]


def _candidates(g, pat, binding, expand):
    s, p, o = (binding.get(x.name) if isinstance(x, Var) else x for x in pat)
    if expand and p == RDF_TYPE and o is not None:
        seen = set()
        for cls in _subclasses(g, o):
            for t in g.triples(s, p, cls):
                if t[0] not in seen:
                    seen.add(t[0])
                    yield (t[0], p, o)
        return
    yield from g.triples(s, p, o)


def _bound_count(pat, binding):
    return sum(1 for x in pat if not isinstance(x, Var) or x.name in binding)


def match(g: TripleGraph, patterns: Sequence, expand_subclasses: bool = False) -> list[dict]:
    """All variable bindings satisfying every pattern.

    Evaluated as a nested-loop join, most-bound pattern first. Solutions
    are distinct and sorted by their terms in variable-name order.

    With ``expand_subclasses``, ``(?x, rdf:type, C)`` also matches
    instances of the direct subclasses of ``C``.
    """
    pats = _normalize(patterns)
    names = sorted({x.name for pat in pats for x in pat if isinstance(x, Var)})
    found = set()

    def solve(binding, remaining):
        if not remaining:
            found.add(tuple(binding.get(n) for n in names))
            return
        best = max(range(len(remaining)), key=lambda i: (_bound_count(remaining[i], binding), -i))
        pat = remaining[best]
        rest = remaining[:best] + remaining[best + 1:]
        for triple in _candidates(g, pat, binding, expand_subclasses):
            new = dict(binding)
            ok = True
            for x, term in zip(pat, triple):
                if isinstance(x, Var):
                    if new.setdefault(x.name, term) != term:
                        ok = False
                        break
            if ok:
                solve(new, rest)

    if pats:
        solve({}, pats)
    rows = sorted(found, key=lambda row: tuple(term_key(t) for t in row))
    return [dict(zip(names, row)) for row in rows]


class CQ(enum.Enum):
    TONALITY = "what is the tonality?"
    COMPOSER = "who is the composer?"
    MOVEMENT_COUNT = "what is the number of movements?"
    DURATION_SECONDS = "how long (in seconds) is the song?"
    DURATION_BARS = "how long (in bars) is the song?"
    PREDOMINANT_EMOTION = "to which predominant category in Russell's model of emotion does it belong?"
    BAR_IN_RECORDINGS = "for a bar in a score, where is the correspondence in different audio recordings?"
    PATTERN_IN_SENTIMENT = "how common is this pattern in songs that evoke a specific sentiment?"
    PATTERN_CATEGORY = "is it a pattern most common in a specific predominant category?"
    PATTERNS_OF_CATEGORY = "what are the most common patterns that belong to it?"
    STRUCTURES_WITH_PATTERN = "which are the most common structures in songs that contain a specific pattern?"
    COMPOSER_OF_PATTERN = "which composer wrote the greatest number of songs containing a given pattern?"


CQ_PARAMS = {
    CQ.TONALITY: ("work",),
    CQ.COMPOSER: ("work",),
    CQ.MOVEMENT_COUNT: ("work",),
    CQ.DURATION_SECONDS: ("work",),
    CQ.DURATION_BARS: ("work",),
    CQ.PREDOMINANT_EMOTION: ("work",),
    CQ.BAR_IN_RECORDINGS: ("work", "bar"),
    CQ.PATTERN_IN_SENTIMENT: ("pattern", "quadrant"),
    CQ.PATTERN_CATEGORY: ("pattern",),
    CQ.PATTERNS_OF_CATEGORY: ("quadrant",),
    CQ.STRUCTURES_WITH_PATTERN: ("pattern",),
    CQ.COMPOSER_OF_PATTERN: ("pattern",),
}

_PATTERN_CLASSES = ("MelodicPattern", "IntervalPattern", "RhythmicPattern", "ChordProgression")


def _iri(value, name):
    if isinstance(value, IRI):
        return value
    try:
        return IRI(str(value))
    except ValueError:
        raise QueryError(f"argument {name!r} is not an IRI: {value!r}") from None


def _py(term):
    return term.to_python() if isinstance(term, Literal) else term.value


def _works(g):
    return [r["w"] for r in match(g, [("?w", RDF_TYPE, MO.MusicalWork)])]


def _recordings(g, work):
    rows = match(g, [("?perf", MO.performance_of, work), ("?perf", MO.produced_sound, "?snd"),
                     ("?rec", MO.records, "?snd"), ("?rec", MO.produced_signal, "?sig"),
                     ("?sig", TL.timeline, "?tl")])
    return [(r["rec"], r["sig"], r["tl"]) for r in rows]


def work_quadrants(g, work) -> list[str]:
    rows = match(g, [("?perf", MO.performance_of, work), ("?perf", MO.produced_sound, "?snd"),
                     ("?rec", MO.records, "?snd"), ("?rec", MO.produced_signal, "?sig"),
                     ("?sig", HAMSE.hasFeature, "?e"), ("?e", HAMSE.hasQuadrant, "?q")])
    return [r["q"].lexical for r in rows]


def predominant_quadrant(quadrants: Iterable[str]) -> Optional[str]:
    """Most frequent quadrant, ties to the lower quadrant name; ``None`` when empty."""
    counts = Counter(quadrants)
    if not counts:
        return None
    return min(counts, key=lambda q: (-counts[q], q))


def _pattern_hits(g, pattern, kind=None) -> dict:
    """``{work: occurrence count}`` for works whose representation carries the pattern."""
    classes = [kind] if kind else list(_PATTERN_CLASSES)
    hits = Counter()
    for cls in classes:
        rows = match(g, [("?f", RDF_TYPE, HAMSE[cls]), ("?f", RDFS.label, Literal(pattern)),
                         ("?rep", HAMSE.hasFeature, "?f"), ("?mv", HAMSE.hasSymbolicRepresentation, "?rep"),
                         ("?w", MO.movement, "?mv"), ("?f", HAMSE.occursIn, "?occ")])
        for r in rows:
            hits[r["w"]] += 1
    return dict(hits)


def _composer(g, work):
    rows = match(g, [("?c", MO.produced_work, work), ("?c", MO.composer, "?a"), ("?a", RDFS.label, "?name")])
    return rows


def _cq_tonality(g, a):
    rows = match(g, [(a["work"], MO.key, "?k"), ("?k", RDFS.label, "?label")])
    return [{"key": r["label"].lexical} for r in rows]


def _cq_composer(g, a):
    return [{"composer": r["name"].lexical, "agent": r["a"].value} for r in _composer(g, a["work"])]


def _cq_movements(g, a):
    rows = match(g, [(a["work"], MO.movement, "?m")])
    return [{"movements": len(rows)}] if rows else []


def _extent(g, sig):
    rows = match(g, [(sig, MO.time, "?i"), ("?i", TL.beginsAt, "?b"), ("?i", TL.endsAt, "?e")])
    return [(_py(r["b"]), _py(r["e"])) for r in rows]


def _cq_seconds(g, a):
    out = []
    for rec, sig, _ in _recordings(g, a["work"]):
        for begin, end in _extent(g, sig):
            out.append({"recording": rec.value, "seconds": round(float(end) - float(begin), 6)})
    return out


def _cq_bars(g, a):
    rows = match(g, [(a["work"], MO.movement, "?mv"), ("?mv", HAMSE.hasSymbolicRepresentation, "?rep"),
                     ("?rep", HAMSE.hasPart, "?part"), ("?part", HAMSE.hasEvent, "?ev"),
                     ("?ev", HAMSE.hasPosition, "?pos"), ("?pos", HAMSE.hasBar, "?bar")])
    best = defaultdict(int)
    for r in rows:
        best[r["rep"]] = max(best[r["rep"]], _py(r["bar"]))
    return [{"representation": rep.value, "bars": n} for rep, n in sorted(best.items(), key=lambda kv: kv[0].value)]


def _cq_emotion(g, a):
    quads = work_quadrants(g, a["work"])
    q = predominant_quadrant(quads)
    if q is None:
        return []
    return [{"quadrant": q, "recordings": Counter(quads)[q], "of": len(quads)}]


def _cq_bar(g, a):
    try:
        bar = int(a["bar"])
    except (TypeError, ValueError):
        raise QueryError(f"argument 'bar' must be an integer, got {a['bar']!r}") from None
    rows = match(g, [(a["work"], MO.movement, "?mv"), ("?mv", HAMSE.hasSymbolicRepresentation, "?rep"),
                     ("?rep", TL.timeline, "?atl"), ("?b", TL.onTimeLine, "?atl"),
                     ("?b", RDF_TYPE, TL.AbstractInterval), ("?b", HAMSE.hasBar, Literal.of(bar)),
                     ("?b", HAMSE.hasAlignedInterval, "?d"), ("?d", TL.onTimeLine, "?tl"),
                     ("?d", TL.beginsAt, "?start"), ("?d", TL.endsAt, "?end"),
                     ("?sig", TL.timeline, "?tl"), ("?rec", MO.produced_signal, "?sig")])
    return [{"recording": r["rec"].value, "start_s": _py(r["start"]), "end_s": _py(r["end"])} for r in rows]


def _by_quadrant(g):
    return {w: predominant_quadrant(work_quadrants(g, w)) for w in _works(g)}


def _cq_pattern_in_sentiment(g, a):
    quad = _by_quadrant(g)
    in_q = sorted(w.value for w, q in quad.items() if q == a["quadrant"])
    hits = _pattern_hits(g, a["pattern"], a.get("kind"))
    with_p = [w for w in in_q if IRI(w) in hits]
    return [{"quadrant": a["quadrant"], "pattern": a["pattern"], "songs_with_pattern": len(with_p),
             "songs_in_quadrant": len(in_q), "occurrences": sum(hits[IRI(w)] for w in with_p)}]


def _cq_pattern_category(g, a):
    quad = _by_quadrant(g)
    hits = _pattern_hits(g, a["pattern"], a.get("kind"))
    counts = Counter(quad[w] for w in hits if quad.get(w))
    occ = Counter()
    for w, n in hits.items():
        if quad.get(w):
            occ[quad[w]] += n
    ranked = sorted(counts, key=lambda q: (-counts[q], -occ[q], q))
    return [{"quadrant": q, "songs": counts[q], "occurrences": occ[q], "predominant": i == 0}
            for i, q in enumerate(ranked)]


def _cq_patterns_of_category(g, a):
    works = {w for w, q in _by_quadrant(g).items() if q == a["quadrant"]}
    songs, occ = Counter(), Counter()
    for cls in _PATTERN_CLASSES:
        rows = match(g, [("?f", RDF_TYPE, HAMSE[cls]), ("?f", RDFS.label, "?key"),
                         ("?rep", HAMSE.hasFeature, "?f"), ("?mv", HAMSE.hasSymbolicRepresentation, "?rep"),
                         ("?w", MO.movement, "?mv"), ("?f", HAMSE.occursIn, "?occ")])
        seen = set()
        for r in rows:
            if r["w"] not in works:
                continue
            k = (cls, r["key"].lexical)
            occ[k] += 1
            if (k, r["w"]) not in seen:
                seen.add((k, r["w"]))
                songs[k] += 1
    ranked = sorted(songs, key=lambda k: (-songs[k], -occ[k], k))
    limit = int(a.get("limit", 10))
    return [{"class": c, "pattern": p, "songs": songs[(c, p)], "occurrences": occ[(c, p)]}
            for c, p in ranked[:limit]]


def _forms(g, work) -> list[str]:
    out = []
    for rec, sig, _ in _recordings(g, work):
        rows = match(g, [(sig, HAMSE.hasFeature, "?s"), ("?s", RDF_TYPE, HAMSE.Structure),
                         ("?s", RDFS.label, "?label"), ("?s", HAMSE.occursIn, "?i"), ("?i", TL.beginsAt, "?b")])
        rows.sort(key=lambda r: _py(r["b"]))
        if rows:
            out.append("".join(r["label"].lexical for r in rows))
    return out


def _cq_structures(g, a):
    hits = _pattern_hits(g, a["pattern"], a.get("kind"))
    forms = Counter()
    for w in hits:
        forms.update(set(_forms(g, w)))
    return [{"structure": f, "songs": forms[f]} for f in sorted(forms, key=lambda f: (-forms[f], f))]


def _cq_composer_of_pattern(g, a):
    hits = _pattern_hits(g, a["pattern"], a.get("kind"))
    per = Counter()
    names = {}
    for w in hits:
        for r in _composer(g, w):
            per[r["a"]] += 1
            names[r["a"]] = r["name"].lexical
    ranked = sorted(per, key=lambda c: (-per[c], names[c]))
    return [{"composer": names[c], "songs": per[c]} for c in ranked]


_HANDLERS = {
    CQ.TONALITY: _cq_tonality,
    CQ.COMPOSER: _cq_composer,
    CQ.MOVEMENT_COUNT: _cq_movements,
    CQ.DURATION_SECONDS: _cq_seconds,
    CQ.DURATION_BARS: _cq_bars,
    CQ.PREDOMINANT_EMOTION: _cq_emotion,
    CQ.BAR_IN_RECORDINGS: _cq_bar,
    CQ.PATTERN_IN_SENTIMENT: _cq_pattern_in_sentiment,
    CQ.PATTERN_CATEGORY: _cq_pattern_category,
    CQ.PATTERNS_OF_CATEGORY: _cq_patterns_of_category,
    CQ.STRUCTURES_WITH_PATTERN: _cq_structures,
    CQ.COMPOSER_OF_PATTERN: _cq_composer_of_pattern,
}


def answer_cq(g: TripleGraph, cq: CQ, args: Optional[Mapping] = None) -> list[dict]:
    """Answer one competency question as a list of result rows.

    Parameters
    ----------
    g : TripleGraph
    cq : CQ
    args : mapping
        The parameters named in ``CQ_PARAMS[cq]``: ``work`` (IRI),
        ``pattern`` (feature label), ``quadrant`` ("Q1".."Q4"), ``bar``.
        Pattern questions also accept ``kind`` (a pattern class name).

    Raises
    ------
    QueryError
        If a required parameter is missing.
    """
    args = dict(args or {})
    for name in CQ_PARAMS[cq]:
        if args.get(name) is None:
            raise QueryError(f"{cq.name} needs the {name!r} parameter")
    if "work" in args:
        args["work"] = _iri(args["work"], "work")
    if args.get("kind") is not None and args["kind"] not in _PATTERN_CLASSES:
        raise QueryError(f"unknown pattern kind {args['kind']!r}")
    return _HANDLERS[cq](g, args)
