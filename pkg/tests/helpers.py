"""Builders shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from hamse.score import (Accidental, Dynamic, NoteKind, Part, Score, Section, Voice, make_note,
                         make_rest, pitch_spelling, position_from_abs)

FIXTURES = Path(__file__).parent / "fixtures"
CHORALE_HTS = FIXTURES / "chorale.hts"
CHORALE_META = FIXTURES / "chorale.json"

METRES = [(4, 4), (3, 4), (6, 8), (2, 2), (5, 8), (7, 16)]
DURATIONS = [Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(1, 3)]

# alternative spellings: pitch class -> [(kind, accidental, octave shift)]
_SPELLINGS = {
    0: [("C", "", 0), ("B", "#", -1), ("D", "bb", 0)],
    1: [("C", "#", 0), ("D", "b", 0)],
    2: [("D", "", 0), ("C", "##", 0), ("E", "bb", 0)],
    3: [("D", "#", 0), ("E", "b", 0)],
    4: [("E", "", 0), ("F", "b", 0), ("D", "##", 0)],
    5: [("F", "", 0), ("E", "#", 0), ("G", "bb", 0)],
    6: [("F", "#", 0), ("G", "b", 0)],
    7: [("G", "", 0), ("F", "##", 0), ("A", "bb", 0)],
    8: [("G", "#", 0), ("A", "b", 0)],
    9: [("A", "", 0), ("G", "##", 0), ("B", "bb", 0)],
    10: [("A", "#", 0), ("B", "b", 0)],
    11: [("B", "", 0), ("C", "b", 1), ("A", "##", 0)],
}


def spelled_note(pitch, pos, dur, rng=None, dynamic=None):
    """A note for ``pitch``, spelled at random when ``rng`` is given."""
    if rng is None:
        kind, acc, octave = pitch_spelling(pitch)
        return make_note(kind, acc, octave, pos, dur, dynamic)
    letter, acc, shift = rng.choice(_SPELLINGS[pitch % 12])
    octave = pitch // 12 - 1 + shift
    return make_note(NoteKind(letter), Accidental(acc), octave, pos, dur, dynamic)


def melody(pitches, durations=None, metre=(4, 4), start=0, name="P1", tempo=None):
    """Single-voice score; ``None`` in ``pitches`` is a rest."""
    sections = (Section(1, metre),)
    durations = durations or [1] * len(pitches)
    t = Fraction(start)
    events = []
    for p, d in zip(pitches, durations):
        pos = position_from_abs(t, sections)
        events.append(make_rest(pos, d) if p is None else spelled_note(p, pos, d))
        t += Fraction(d)
    return Score("test", (Part(name, (Voice(1, events),), sections),), tempo_bpm=tempo)


def chords(progression, dur=1, tempo=None):
    """One part per chord tone; ``progression`` is a list of equal-size pitch tuples."""
    sections = (Section(1),)
    width = len(progression[0])
    parts = []
    for k in range(width):
        events = []
        for i, ch in enumerate(progression):
            pos = position_from_abs(Fraction(i * dur), sections)
            events.append(spelled_note(ch[k], pos, dur))
        parts.append(Part(f"V{k + 1}", (Voice(1, events),), sections))
    return Score("test", parts, tempo_bpm=tempo)


def random_sections(rng):
    sections = [Section(1, rng.choice(METRES), rng.choice(["treble", "bass", "alto", "tenor"]))]
    if rng.random() < 0.4:
        sections.append(Section(rng.randint(2, 4), rng.choice(METRES), "treble"))
    return tuple(sections)


def random_score(rng: random.Random, max_events=64, rest_p=0.2, pitch_range=(36, 84),
                 spell=True, dynamics=True, max_parts=3, max_voices=2, diatonic=None) -> Score:
    """Random valid score with at most ``max_events`` events in total.

    ``diatonic`` restricts pitches to the major scale on that tonic.
    """
    sections = random_sections(rng)
    n_parts = rng.randint(1, max_parts)
    shape = [(p, v) for p in range(n_parts) for v in range(rng.randint(1, max_voices))]
    shape = shape[:max_events]
    n_parts = shape[-1][0] + 1
    budget = rng.randint(len(shape), max_events)
    # every voice gets at least one event
    share = {k: 1 for k in shape}
    for _ in range(budget - len(shape)):
        share[rng.choice(shape)] += 1
    lo, hi = pitch_range
    scale = None
    if diatonic is not None:
        scale = [p for p in range(lo, hi + 1) if (p - diatonic) % 12 in (0, 2, 4, 5, 7, 9, 11)]
    parts = []
    for p in range(n_parts):
        voices = []
        for v in [k for k in shape if k[0] == p]:
            t = Fraction(rng.choice([0, 0, 0, 1, Fraction(1, 2)]))
            events = []
            for _ in range(share[v]):
                if rng.random() < 0.1:
                    t += rng.choice(DURATIONS)
                pos = position_from_abs(t, sections)
                dur = rng.choice(DURATIONS)
                dyn = None
                if dynamics and rng.random() < 0.2:
                    dyn = rng.choice([Dynamic("p"), Dynamic("mf"), Dynamic(midi_velocity=rng.randint(1, 127)),
                                      Dynamic("ff", 112)])
                if rng.random() < rest_p:
                    events.append(make_rest(pos, dur, dyn))
                else:
                    pitch = rng.choice(scale) if scale else rng.randint(lo, hi)
                    events.append(spelled_note(pitch, pos, dur, rng if spell else None, dyn))
                t += dur
            voices.append(Voice(len(voices) + 1, events))
        parts.append(Part(f"P{p + 1}", voices, sections, rng.randint(0, 127), p + 1))
    return Score(f"w{rng.randint(0, 999)}", parts, rng.choice([96, 480, 960]),
                 rng.choice([None, "Study", "Chorale no 3"]), rng.choice([None, 60.0, 96.0]))
