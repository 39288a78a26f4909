"""
Closed vocabulary of the knowledge graph.

Every predicate, every class used with ``rdf:type`` and every class in a
subclass axiom must come from :data:`TERMS`.
"""
from __future__ import annotations

from .rdf import IRI, RDF_TYPE, TripleGraph

__all__ = [
    "PREFIXES",
    "Namespace",
    "HAMSE", "MO", "FRBR", "TL", "RDF", "RDFS", "XSDNS",
    "TERMS",
    "NOTE_CLASSES",
    "FEATURE_CLASSES",
    "SCHEMA_AXIOMS",
    "schema_graph",
    "vocabulary_violations",
]

PREFIXES = {
    "frbr": "http://purl.org/vocab/frbr/core#",
    "hamse": "https://purl.org/andreapoltronieri/HaMSEontology#",
    "mo": "http://purl.org/ontology/mo/",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "tl": "http://purl.org/NET/c4dm/timeline.owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
}


class Namespace:
    """Attribute access to the declared terms of one prefix."""

    def __init__(self, prefix: str, names: str):
        self.prefix = prefix
        self.base = PREFIXES[prefix]
        self.names = frozenset(names.split())

    def __getattr__(self, name) -> IRI:
        if name.startswith("_") or name not in self.names:
            raise AttributeError(f"{self.prefix}:{name} is not in the vocabulary")
        return IRI(self.base + name)

    def __getitem__(self, name) -> IRI:
        return self.__getattr__(name)

    def terms(self) -> set[IRI]:
        return {IRI(self.base + n) for n in self.names}


HAMSE = Namespace("hamse", """
    MusicologicalFeature SymbolicRepresentation Part Voice Section
    SymbolicEvent NoteC NoteD NoteE NoteF NoteG NoteA NoteB Rest
    Accidental Dynamic Position
    MelodicPattern IntervalPattern RhythmicPattern Chord ChordProgression
    Structure Emotion
    hasMidiProgram hasMetre hasClef hasLiteralDynamic hasMidiVelocity
    hasMidiPitch hasOctave hasStaff
    hasSymbolicRepresentation hasPart hasVoice hasSection hasEvent
    hasAccidental hasDynamic hasPosition hasBar hasBeat hasStartBar
    hasVoiceIndex hasInterval hasFeature occursIn includesRests
    hasPatternLength hasQuadrant hasValence hasArousal hasMethod
    hasAlignedInterval alignedBy hasTitle
""")

MO = Namespace("mo", """
    MusicalWork Composition Score PublishedScore Arrangement Genre Key
    Performance Instrument Sound Recording Signal DigitalSignal AnalogSignal
    Movement MusicArtist
    produced_work composer produced_score movement movementNum genre key
    arrangement_of performance_of instrument performer produced_sound
    records produced_signal sampled_version_of time
""")

FRBR = Namespace("frbr", "Work Agent")

TL = Namespace("tl", """
    Interval AbstractInterval TimeLine AbstractTimeLine DiscreteTimeLine
    TimeLineMap
    onTimeLine timeline domainTimeLine rangeTimeLine beginsAt endsAt duration
""")

RDF = Namespace("rdf", "type")
RDFS = Namespace("rdfs", "subClassOf label")
XSDNS = Namespace("xsd", "string integer decimal double boolean")

TERMS = frozenset().union(*(ns.terms() for ns in (HAMSE, MO, FRBR, TL, RDF, RDFS)))

NOTE_CLASSES = {k: HAMSE["Note" + k] for k in "CDEFGAB"}

FEATURE_CLASSES = ("MelodicPattern", "IntervalPattern", "RhythmicPattern", "Chord",
                   "ChordProgression", "Structure", "Emotion")

SCHEMA_AXIOMS = (
    [(HAMSE[c], HAMSE.MusicologicalFeature) for c in
     ("SymbolicRepresentation", "Part", "Voice", "Section", "SymbolicEvent",
      "Accidental", "Dynamic", "Position") + FEATURE_CLASSES]
    + [(cls, HAMSE.SymbolicEvent) for cls in NOTE_CLASSES.values()]
    + [(HAMSE.Rest, HAMSE.SymbolicEvent)]
    + [(MO.MusicalWork, FRBR.Work),
       (MO.MusicArtist, FRBR.Agent),
       (MO.PublishedScore, MO.Score),
       (MO.DigitalSignal, MO.Signal),
       (MO.AnalogSignal, MO.Signal),
       (TL.AbstractInterval, TL.Interval),
       (TL.AbstractTimeLine, TL.TimeLine),
       (TL.DiscreteTimeLine, TL.TimeLine)]
)


def schema_graph() -> TripleGraph:
    """The subclass axioms emitted at the top of every graph."""
    return TripleGraph(((sub, RDFS.subClassOf, sup) for sub, sup in SCHEMA_AXIOMS),
                       namespaces=PREFIXES)


def vocabulary_violations(graph: TripleGraph) -> list:
    """Predicates and classes in ``graph`` that are not in :data:`TERMS`."""
    bad = set()
    for s, p, o in graph:
        if p not in TERMS:
            bad.add(p)
        if p == RDF_TYPE and o not in TERMS:
            bad.add(o)
        if p == RDFS.subClassOf:
            for c in (s, o):
                if c not in TERMS:
                    bad.add(c)
    return sorted(bad, key=str)
