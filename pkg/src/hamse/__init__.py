"""
Musicological analysis toolkit: symbolic scores, pattern and harmony
extraction, score-to-audio alignment, structure and emotion tagging, and
an RDF knowledge graph over the results.
"""
from .score import Score, Part, Voice, Section, SymbolicEvent, Position, Dynamic
from .hts import parse_hts, write_hts
from .smf import parse_smf, write_smf
from .patterns import mine_patterns, PatternKind, PatternType
from .harmony import chordify, estimate_key, find_dissonances, mine_progressions
from .audio import AudioClip, Chromagram, chroma_from_audio, chroma_from_score, read_wav, write_wav
from .align import AlignmentMap, dtw, map_beats_to_seconds
from .structure import Segment, segment
from .emotion import EmotionTag, classify_emotion

__version__ = "0.1.0"

__all__ = [
    "Score", "Part", "Voice", "Section", "SymbolicEvent", "Position", "Dynamic",
    "parse_hts", "write_hts", "parse_smf", "write_smf",
    "mine_patterns", "PatternKind", "PatternType",
    "chordify", "estimate_key", "find_dissonances", "mine_progressions",
    "AudioClip", "Chromagram", "chroma_from_audio", "chroma_from_score", "read_wav", "write_wav",
    "AlignmentMap", "dtw", "map_beats_to_seconds",
    "Segment", "segment",
    "EmotionTag", "classify_emotion",
]
