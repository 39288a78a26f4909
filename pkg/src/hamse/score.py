"""
Symbolic score model.

A :class:`Score` holds parts, each part holds voices (the events) and
sections (metre and clef runs). Positions and durations are exact
:class:`fractions.Fraction` values measured in quarter-note beats; seconds
only appear once a score has been aligned to a recording.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

__all__ = [
    "ScoreError",
    "NoteKind",
    "Accidental",
    "Dynamic",
    "Position",
    "Section",
    "SymbolicEvent",
    "Voice",
    "Part",
    "Score",
    "natural_semitone",
    "bar_length",
    "abs_beats_of",
    "position_at",
    "position_from_abs",
    "flatten_events",
    "make_note",
    "make_rest",
    "pitch_spelling",
    "CLEFS",
]


class ScoreError(ValueError):
    """Raised when a score object violates one of its invariants."""


class NoteKind(enum.Enum):
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"
    A = "A"
    B = "B"
    REST = "R"

    @property
    def is_rest(self) -> bool:
        return self is NoteKind.REST


class Accidental(enum.Enum):
    NONE = ""
    SHARP = "#"
    FLAT = "b"
    DOUBLE_SHARP = "##"
    DOUBLE_FLAT = "bb"

    @property
    def offset(self) -> int:
        return _ACCIDENTAL_OFFSET[self]


_NATURAL_SEMITONE = {
    NoteKind.C: 0, NoteKind.D: 2, NoteKind.E: 4, NoteKind.F: 5,
    NoteKind.G: 7, NoteKind.A: 9, NoteKind.B: 11,
}

_ACCIDENTAL_OFFSET = {
    Accidental.NONE: 0, Accidental.SHARP: 1, Accidental.FLAT: -1,
    Accidental.DOUBLE_SHARP: 2, Accidental.DOUBLE_FLAT: -2,
}

# sharp spelling used when only a MIDI number is known
_SPELLING = [
    (NoteKind.C, Accidental.NONE), (NoteKind.C, Accidental.SHARP),
    (NoteKind.D, Accidental.NONE), (NoteKind.D, Accidental.SHARP),
    (NoteKind.E, Accidental.NONE), (NoteKind.F, Accidental.NONE),
    (NoteKind.F, Accidental.SHARP), (NoteKind.G, Accidental.NONE),
    (NoteKind.G, Accidental.SHARP), (NoteKind.A, Accidental.NONE),
    (NoteKind.A, Accidental.SHARP), (NoteKind.B, Accidental.NONE),
]

CLEFS = ("treble", "bass", "alto", "tenor")

_DENOMINATORS = (1, 2, 4, 8, 16, 32)


def natural_semitone(kind: NoteKind) -> int:
    """Semitone offset of a natural note above C (C=0 ... B=11)."""
    if kind.is_rest:
        raise ScoreError("a rest has no natural semitone")
    return _NATURAL_SEMITONE[kind]


def pitch_spelling(midi_pitch: int) -> tuple[NoteKind, Accidental, int]:
    """Default (sharp) spelling of a MIDI pitch as ``(kind, accidental, octave)``."""
    kind, acc = _SPELLING[midi_pitch % 12]
    return kind, acc, midi_pitch // 12 - 1


@dataclass(frozen=True)
class Dynamic:
    literal: Optional[str] = None
    midi_velocity: Optional[int] = None

    def __post_init__(self):
        if self.literal is None and self.midi_velocity is None:
            raise ScoreError("a dynamic needs a literal or a MIDI velocity")
        if self.midi_velocity is not None and not 0 <= self.midi_velocity <= 127:
            raise ScoreError(f"MIDI velocity out of range: {self.midi_velocity}")
        if self.literal is not None and (not self.literal or any(c.isspace() for c in self.literal)):
            raise ScoreError(f"invalid dynamic literal: {self.literal!r}")


@dataclass(frozen=True)
class Position:
    bar: int
    beat: Fraction
    abs_beats: Fraction

    def __post_init__(self):
        if self.bar < 1:
            raise ScoreError(f"bar numbers start at 1, got {self.bar}")
        if self.beat < 0 or self.abs_beats < 0:
            raise ScoreError("beat offsets must be non-negative")

    def __str__(self):
        return f"{self.bar}:{self.beat}"


@dataclass(frozen=True)
class Section:
    start_bar: int
    metre: tuple[int, int] = (4, 4)
    clef: str = "treble"

    def __post_init__(self):
        num, den = self.metre
        if self.start_bar < 1:
            raise ScoreError(f"section start bar must be positive, got {self.start_bar}")
        if num < 1 or den not in _DENOMINATORS:
            raise ScoreError(f"invalid metre {num}/{den}")
        if not self.clef or any(c.isspace() for c in self.clef):
            raise ScoreError(f"invalid clef {self.clef!r}")

    @property
    def bar_beats(self) -> Fraction:
        return bar_length(self.metre)


def bar_length(metre: tuple[int, int]) -> Fraction:
    """Length of one bar in quarter-note beats."""
    num, den = metre
    return Fraction(num * 4, den)


def _check_sections(sections: Sequence[Section]):
    if not sections:
        raise ScoreError("at least one section is required")
    for a, b in zip(sections, sections[1:]):
        if b.start_bar <= a.start_bar:
            raise ScoreError("sections must be ordered by strictly increasing start bar")


def abs_beats_of(bar: int, beat: Fraction, sections: Sequence[Section]) -> Fraction:
    """Offset from the score start of ``beat`` within ``bar``.

    The score starts at the first bar of the first section; each bar lasts
    ``numerator * 4 / denominator`` beats under the section active for it.
    """
    _check_sections(sections)
    if bar < sections[0].start_bar:
        raise ScoreError(f"bar {bar} precedes the first section (bar {sections[0].start_bar})")
    total = Fraction(0)
    for sec, nxt in zip(sections, list(sections[1:]) + [None]):
        last = bar if nxt is None else min(bar, nxt.start_bar)
        if last <= sec.start_bar:
            break
        total += (last - sec.start_bar) * sec.bar_beats
    return total + Fraction(beat)


def _section_for(bar: int, sections: Sequence[Section]) -> Section:
    active = sections[0]
    for sec in sections:
        if sec.start_bar <= bar:
            active = sec
        else:
            break
    return active


def position_at(bar: int, beat, sections: Sequence[Section]) -> Position:
    """Build a validated :class:`Position` for ``bar``/``beat``."""
    beat = Fraction(beat)
    abs_beats = abs_beats_of(bar, beat, sections)
    length = _section_for(bar, sections).bar_beats
    if not 0 <= beat < length:
        raise ScoreError(f"beat {beat} outside bar {bar} of length {length}")
    return Position(bar, beat, abs_beats)


def position_from_abs(abs_beats, sections: Sequence[Section]) -> Position:
    """Inverse of :func:`abs_beats_of`: locate an absolute offset in bars."""
    abs_beats = Fraction(abs_beats)
    if abs_beats < 0:
        raise ScoreError("negative offset")
    _check_sections(sections)
    start = Fraction(0)
    for sec, nxt in zip(sections, list(sections[1:]) + [None]):
        length = sec.bar_beats
        if nxt is not None:
            span = (nxt.start_bar - sec.start_bar) * length
            if abs_beats >= start + span:
                start += span
                continue
        k, beat = divmod(abs_beats - start, length)
        return Position(sec.start_bar + int(k), beat, abs_beats)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class SymbolicEvent:
    """A note or a rest. Rests carry no pitch fields."""

    kind: NoteKind
    position: Position
    duration_beats: Fraction
    accidental: Optional[Accidental] = None
    octave: Optional[int] = None
    midi_pitch: Optional[int] = None
    dynamic: Optional[Dynamic] = None

    def __post_init__(self):
        if self.duration_beats <= 0:
            raise ScoreError(f"duration must be positive, got {self.duration_beats}")
        if self.kind.is_rest:
            if (self.accidental, self.octave, self.midi_pitch) != (None, None, None):
                raise ScoreError("rests must not carry pitch fields")
            return
        if self.accidental is None or self.octave is None or self.midi_pitch is None:
            raise ScoreError("notes need accidental, octave and midi_pitch")
        if not -1 <= self.octave <= 9:
            raise ScoreError(f"octave out of range: {self.octave}")
        expected = 12 * (self.octave + 1) + natural_semitone(self.kind) + self.accidental.offset
        if self.midi_pitch != expected:
            raise ScoreError(f"midi_pitch {self.midi_pitch} inconsistent with spelling (expected {expected})")
        if not 0 <= self.midi_pitch <= 127:
            raise ScoreError(f"midi_pitch out of range: {self.midi_pitch}")

    @property
    def is_rest(self) -> bool:
        return self.kind.is_rest

    @property
    def onset(self) -> Fraction:
        return self.position.abs_beats

    @property
    def offset(self) -> Fraction:
        return self.position.abs_beats + self.duration_beats

    @property
    def name(self) -> str:
        if self.is_rest:
            return "R"
        return f"{self.kind.value}{self.accidental.value}{self.octave}"


def make_note(kind: NoteKind, accidental: Accidental, octave: int, position: Position,
              duration, dynamic: Optional[Dynamic] = None) -> SymbolicEvent:
    pitch = 12 * (octave + 1) + natural_semitone(kind) + accidental.offset
    return SymbolicEvent(kind, position, Fraction(duration), accidental, octave, pitch, dynamic)


def make_rest(position: Position, duration, dynamic: Optional[Dynamic] = None) -> SymbolicEvent:
    return SymbolicEvent(NoteKind.REST, position, Fraction(duration), dynamic=dynamic)


@dataclass(frozen=True)
class Voice:
    index: int
    events: tuple[SymbolicEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.index < 1:
            raise ScoreError(f"voice index must be positive, got {self.index}")
        for a, b in zip(self.events, self.events[1:]):
            if b.onset < a.onset:
                raise ScoreError(f"voice {self.index}: events not sorted by onset")
            if b.onset < a.offset:
                raise ScoreError(f"voice {self.index}: events overlap at {b.position}")

    @property
    def notes(self) -> list[SymbolicEvent]:
        return [e for e in self.events if not e.is_rest]


@dataclass(frozen=True)
class Part:
    name: str
    voices: tuple[Voice, ...]
    sections: tuple[Section, ...] = (Section(1),)
    midi_program: int = 0
    staff: int = 1

    def __post_init__(self):
        object.__setattr__(self, "voices", tuple(self.voices))
        object.__setattr__(self, "sections", tuple(self.sections))
        if not self.name or any(c.isspace() for c in self.name):
            raise ScoreError(f"invalid part name {self.name!r}")
        if not 0 <= self.midi_program <= 127:
            raise ScoreError(f"MIDI program out of range: {self.midi_program}")
        if self.staff < 1:
            raise ScoreError("staff must be positive")
        if not self.voices:
            raise ScoreError(f"part {self.name} has no voices")
        if [v.index for v in self.voices] != list(range(1, len(self.voices) + 1)):
            raise ScoreError(f"part {self.name}: voices must be numbered 1..n in order")
        _check_sections(self.sections)
        first = self.sections[0].start_bar
        for v in self.voices:
            for e in v.events:
                if e.position.bar < first:
                    raise ScoreError(f"part {self.name}: event in bar {e.position.bar} precedes first section")
                if e.position.abs_beats != abs_beats_of(e.position.bar, e.position.beat, self.sections):
                    raise ScoreError(f"part {self.name}: inconsistent position {e.position}")

    @property
    def events(self) -> list[SymbolicEvent]:
        return [e for v in self.voices for e in v.events]


@dataclass(frozen=True)
class Score:
    work_ref: str
    parts: tuple[Part, ...]
    ticks_per_quarter: int = 480
    title: Optional[str] = None
    tempo_bpm: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ScoreError("a score needs at least one part")
        if self.ticks_per_quarter < 1:
            raise ScoreError("ticks_per_quarter must be positive")
        names = [p.name for p in self.parts]
        if len(set(names)) != len(names):
            raise ScoreError("part names must be unique")
        if self.tempo_bpm is not None and not self.tempo_bpm > 0:
            raise ScoreError("tempo must be positive")

    def part(self, name: str) -> Part:
        for p in self.parts:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def n_events(self) -> int:
        return sum(len(v.events) for p in self.parts for v in p.voices)

    @property
    def has_notes(self) -> bool:
        return any(not e.is_rest for p in self.parts for e in p.events)

    @property
    def end_beats(self) -> Fraction:
        """Offset of the last event end (0 for an empty score)."""
        return max((e.offset for p in self.parts for e in p.events), default=Fraction(0))

    @property
    def sections(self) -> tuple[Section, ...]:
        """Sections of the first part, the reference for score-wide positions."""
        return self.parts[0].sections

    def iter_voices(self) -> Iterator[tuple[Part, Voice]]:
        for p in self.parts:
            for v in p.voices:
                yield p, v

    def transposed(self, semitones: int) -> "Score":
        """Copy with every note moved by ``semitones`` (respelled with sharps)."""
        parts = []
        for p in self.parts:
            voices = []
            for v in p.voices:
                events = []
                for e in v.events:
                    if e.is_rest:
                        events.append(e)
                        continue
                    kind, acc, octave = pitch_spelling(e.midi_pitch + semitones)
                    events.append(make_note(kind, acc, octave, e.position, e.duration_beats, e.dynamic))
                voices.append(Voice(v.index, events))
            parts.append(Part(p.name, voices, p.sections, p.midi_program, p.staff))
        return Score(self.work_ref, parts, self.ticks_per_quarter, self.title, self.tempo_bpm)


def flatten_events(score: Score) -> list[tuple[str, int, SymbolicEvent]]:
    """All events as ``(part name, voice index, event)`` in score order.

    Sorted by onset; simultaneous events keep part order, then voice order.
    """
    keyed = []
    for pi, part in enumerate(score.parts):
        for voice in part.voices:
            for ei, event in enumerate(voice.events):
                keyed.append(((event.onset, pi, voice.index, ei), (part.name, voice.index, event)))
    keyed.sort(key=lambda item: item[0])
    return [item for _, item in keyed]
