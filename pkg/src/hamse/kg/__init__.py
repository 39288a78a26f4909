"""RDF knowledge graph: terms, vocabulary, emitters, Turtle I/O and queries."""
from .emit import (
    FeatureOccurrence,
    Minter,
    Performance,
    RecordingInfo,
    WorkMetadata,
    emit_alignment,
    emit_emotion,
    emit_features,
    emit_score,
    emit_segments,
    emit_work,
    features_from_chords,
    features_from_patterns,
    features_from_progressions,
)
from .query import CQ, CQ_PARAMS, QueryError, answer_cq, match, predominant_quadrant
from .rdf import IRI, BNode, Literal, TripleGraph, Var
from .turtle import TurtleError, parse_turtle, serialize_ntriples, serialize_turtle
from .vocab import FRBR, HAMSE, MO, PREFIXES, RDFS, TL, vocabulary_violations

__all__ = [
    "CQ", "CQ_PARAMS", "QueryError", "answer_cq", "match", "predominant_quadrant",
    "FeatureOccurrence", "Minter", "Performance", "RecordingInfo", "WorkMetadata",
    "emit_alignment", "emit_emotion", "emit_features", "emit_score", "emit_segments", "emit_work",
    "features_from_chords", "features_from_patterns", "features_from_progressions",
    "IRI", "BNode", "Literal", "TripleGraph", "Var",
    "TurtleError", "parse_turtle", "serialize_ntriples", "serialize_turtle",
    "FRBR", "HAMSE", "MO", "PREFIXES", "RDFS", "TL", "vocabulary_violations",
]
