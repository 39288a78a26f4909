"""
Interval, rhythmic and melodic n-gram patterns.

Every voice is turned into token runs; n-grams never cross a run boundary
or a voice boundary. With ``include_rests=False`` a rest ends the current
run. With ``include_rests=True`` rests become tokens themselves: the interval
view emits ``R`` for any step touching a rest, the rhythmic and melodic views
emit ``("R", duration)``.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .score import Position, Score, Voice, position_from_abs

__all__ = [
    "REST",
    "PatternType",
    "PatternKind",
    "Token",
    "PatternOccurrence",
    "PatternOccurrenceSet",
    "tokenize",
    "token_text",
    "key_text",
    "ngram_occurrences",
    "mine_patterns",
    "ALL_KINDS",
]

REST = "R"


class PatternType(enum.Enum):
    INTERVAL = "interval"
    RHYTHMIC = "rhythmic"
    MELODIC = "melodic"


@dataclass(frozen=True)
class PatternKind:
    type: PatternType
    include_rests: bool = False

    @property
    def feature_class(self) -> str:
        return {"interval": "IntervalPattern", "rhythmic": "RhythmicPattern",
                "melodic": "MelodicPattern"}[self.type.value]

    def __str__(self):
        return f"{self.type.value}{'+rests' if self.include_rests else ''}"


ALL_KINDS = tuple(PatternKind(t, r) for t in PatternType for r in (False, True))


@dataclass(frozen=True)
class Token:
    value: Hashable
    first: int  # index of the first event covered
    last: int   # index of the last event covered
    run: int


@dataclass(frozen=True)
class PatternOccurrence:
    part: str
    voice: int
    start: Position
    end: Position


@dataclass(frozen=True)
class PatternOccurrenceSet:
    kind: PatternKind
    key: tuple
    occurrences: tuple[PatternOccurrence, ...]

    @property
    def length(self) -> int:
        return len(self.key)

    @property
    def count(self) -> int:
        return len(self.occurrences)

    @property
    def text(self) -> str:
        return key_text(self.key)


def token_text(token) -> str:
    if token == REST:
        return REST
    if isinstance(token, int):
        return f"{token:+d}" if token else "0"
    if isinstance(token, Fraction):
        return str(token)
    head, dur = token
    return f"{head}:{dur}"


def key_text(key: Sequence) -> str:
    """Canonical comma-separated rendering of a pattern key."""
    return ",".join(token_text(t) for t in key)


def tokenize(voice: Voice, kind: PatternKind) -> list[Token]:
    """Tokens of one voice with the index span of events they cover."""
    events = voice.events
    tokens = []
    run = 0
    if kind.type is PatternType.INTERVAL:
        prev = None
        for i, e in enumerate(events):
            if e.is_rest and not kind.include_rests:
                prev = None
                run += 1
                continue
            if prev is not None:
                a = events[prev]
                if a.is_rest or e.is_rest:
                    value = REST
                else:
                    value = e.midi_pitch - a.midi_pitch
                tokens.append(Token(value, prev, i, run))
            prev = i
        return tokens
    for i, e in enumerate(events):
        if e.is_rest:
            if not kind.include_rests:
                run += 1
                continue
            value = (REST, e.duration_beats)
        elif kind.type is PatternType.RHYTHMIC:
            value = e.duration_beats
        else:
            value = (e.midi_pitch % 12, e.duration_beats)
        tokens.append(Token(value, i, i, run))
    return tokens


def ngram_occurrences(sequences: Iterable[Sequence], n_min: int, n_max: int,
                      min_count: int) -> dict[tuple, list[tuple[int, int]]]:
    """Count contiguous n-grams over several independent sequences.

    Returns ``{ngram: [(sequence index, start index), ...]}`` for n-grams with
    ``n_min <= n <= n_max`` occurring at least ``min_count`` times.
    """
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    if min_count < 2:
        raise ValueError("min_count must be at least 2")
    found = defaultdict(list)
    for s, seq in enumerate(sequences):
        seq = tuple(seq)
        for n in range(n_min, min(n_max, len(seq)) + 1):
            for i in range(len(seq) - n + 1):
                found[seq[i:i + n]].append((s, i))
    return {k: v for k, v in found.items() if len(v) >= min_count}


def mine_patterns(score: Score, kind: PatternKind, n_min: int = 2, n_max: int = 8,
                  min_count: int = 2) -> list[PatternOccurrenceSet]:
    """Recurring n-grams of ``kind`` across all voices of ``score``.

    Results are sorted by count (descending), length (descending), then
    canonical key text. Occurrences within a set are sorted by start.
    """
    runs = []  # (part index, part, voice, tokens of one run)
    for pi, part in enumerate(score.parts):
        for voice in part.voices:
            by_run = defaultdict(list)
            for t in tokenize(voice, kind):
                by_run[t.run].append(t)
            for r in sorted(by_run):
                runs.append((pi, part, voice, by_run[r]))

    found = ngram_occurrences(([t.value for t in toks] for *_, toks in runs),
                              n_min, n_max, min_count)
    result = []
    for key, sites in found.items():
        occ = []
        for s, i in sites:
            pi, part, voice, toks = runs[s]
            first = voice.events[toks[i].first]
            last = voice.events[toks[i + len(key) - 1].last]
            end = position_from_abs(last.offset, part.sections)
            occ.append(((first.onset, pi, voice.index),
                        PatternOccurrence(part.name, voice.index, first.position, end)))
        occ.sort(key=lambda o: o[0])
        result.append(PatternOccurrenceSet(kind, key, tuple(o[1] for o in occ)))
    result.sort(key=lambda p: (-p.count, -p.length, p.text))
    return result
