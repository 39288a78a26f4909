"""
HaMSE Text Score (HTS): a line-oriented, diffable score format.

Grammar, one directive or event per line (blank lines and lines starting
with ``;`` are ignored)::

    #score tpq=<int> title="<text>" [work=<id>] [tempo=<bpm>]
    #part <name> <midi-program 0-127> <staff>
    #section <part> <num>/<den> <clef> startbar=<int>
    <bar>:<beat> <duration> <pitch|R> [vel=<0-127>] [voice=<int>] [dyn=<text>] [part=<name>]

Beats and durations are rationals (``3/2``, ``0.5`` or ``2``). A pitch is a
letter A-G, an optional ``#``, ``b``, ``##`` or ``bb``, and an octave from
-1 to 9 (C4 = MIDI 60). Events without ``part=`` belong to the most recently
declared part; events without ``voice=`` go to voice 1.
"""
from __future__ import annotations

import re
import shlex
from collections import defaultdict
from fractions import Fraction

from .score import (Accidental, Dynamic, NoteKind, Part, Score, ScoreError,
                    Section, Voice, make_note, make_rest, position_at)

__all__ = ["HtsError", "parse_hts", "write_hts", "parse_pitch"]

_PITCH_RE = re.compile(r"^([A-G])(##|bb|#|b)?(-1|[0-9])$")


class HtsError(ValueError):
    """Malformed HTS input. ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def parse_pitch(text):
    """Split a pitch name into ``(NoteKind, Accidental, octave)``."""
    m = _PITCH_RE.match(text)
    if not m:
        raise ValueError(f"malformed pitch {text!r}")
    letter, acc, octave = m.groups()
    return NoteKind(letter), Accidental(acc or ""), int(octave)


def _rational(text):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational: {text!r}") from None
    return value


def _options(fields, allowed, lineno):
    opts = {}
    for f in fields:
        key, sep, value = f.partition("=")
        if not sep or key not in allowed:
            raise HtsError(f"unexpected field {f!r}", lineno)
        if key in opts:
            raise HtsError(f"duplicate field {key!r}", lineno)
        opts[key] = value
    return opts


def parse_hts(text: str) -> Score:
    """Parse an HTS document into a :class:`~hamse.score.Score`."""
    header = {"tpq": 480, "title": None, "work": "work", "tempo": None}
    parts = {}  # name -> (program, staff)
    part_order = []
    sections = defaultdict(list)
    raw_events = []  # (lineno, part, voice, bar, beat, dur, pitch, dyn)
    current = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";"):
            continue
        if line.startswith("#"):
            try:
                fields = shlex.split(line[1:])
            except ValueError as exc:
                raise HtsError(str(exc), lineno) from None
            if not fields:
                raise HtsError("empty directive", lineno)
            directive, args = fields[0], fields[1:]
            if directive == "score":
                opts = _options(args, {"tpq", "title", "work", "tempo"}, lineno)
                try:
                    if "tpq" in opts:
                        header["tpq"] = int(opts["tpq"])
                    if "tempo" in opts:
                        header["tempo"] = float(opts["tempo"])
                except ValueError as exc:
                    raise HtsError(str(exc), lineno) from None
                header["title"] = opts.get("title", header["title"])
                header["work"] = opts.get("work", header["work"])
            elif directive == "part":
                if len(args) != 3:
                    raise HtsError("expected '#part <name> <program> <staff>'", lineno)
                name = args[0]
                if name in parts:
                    raise HtsError(f"part {name!r} declared twice", lineno)
                try:
                    parts[name] = (int(args[1]), int(args[2]))
                except ValueError:
                    raise HtsError("program and staff must be integers", lineno) from None
                part_order.append(name)
                current = name
            elif directive == "section":
                if len(args) != 4:
                    raise HtsError("expected '#section <part> <num>/<den> <clef> startbar=<int>'", lineno)
                name, metre, clef, start = args
                if name not in parts:
                    raise HtsError(f"undeclared part {name!r}", lineno)
                m = re.fullmatch(r"(\d+)/(\d+)", metre)
                if not m or not start.startswith("startbar="):
                    raise HtsError("malformed section directive", lineno)
                try:
                    sections[name].append(Section(int(start[9:]), (int(m[1]), int(m[2])), clef))
                except (ValueError, ScoreError) as exc:
                    raise HtsError(str(exc), lineno) from None
            else:
                raise HtsError(f"unknown directive {directive!r}", lineno)
            continue

        fields = line.split()
        if len(fields) < 3:
            raise HtsError("expected '<bar>:<beat> <duration> <pitch|R> ...'", lineno)
        where, dur_text, pitch_text = fields[:3]
        opts = _options(fields[3:], {"vel", "voice", "dyn", "part"}, lineno)
        part = opts.get("part", current)
        if part is None or part not in parts:
            raise HtsError(f"undeclared part {part!r}", lineno)
        bar_text, sep, beat_text = where.partition(":")
        try:
            if not sep:
                raise ValueError(f"malformed position {where!r}")
            bar = int(bar_text)
            beat = _rational(beat_text)
            dur = _rational(dur_text)
            pitch = None if pitch_text == "R" else parse_pitch(pitch_text)
            voice = int(opts.get("voice", 1))
            vel = int(opts["vel"]) if "vel" in opts else None
        except ValueError as exc:
            raise HtsError(str(exc), lineno) from None
        dyn = None
        if vel is not None or "dyn" in opts:
            try:
                dyn = Dynamic(opts.get("dyn"), vel)
            except ScoreError as exc:
                raise HtsError(str(exc), lineno) from None
        raw_events.append((lineno, part, voice, bar, beat, dur, pitch, dyn))

    if not part_order:
        raise HtsError("no #part declared")

    by_voice = defaultdict(list)
    for lineno, part, voice, bar, beat, dur, pitch, dyn in raw_events:
        secs = sections[part] or [Section(1)]
        try:
            pos = position_at(bar, beat, secs)
            if pitch is None:
                event = make_rest(pos, dur, dyn)
            else:
                event = make_note(*pitch, pos, dur, dyn)
        except ScoreError as exc:
            raise HtsError(str(exc), lineno) from None
        if voice < 1:
            raise HtsError(f"voice must be positive, got {voice}", lineno)
        by_voice[part, voice].append((event.onset, lineno, event))

    score_parts = []
    for name in part_order:
        indices = [v for (p, v) in by_voice if p == name]
        n_voices = max(indices, default=1)
        voices = []
        for v in range(1, n_voices + 1):
            items = sorted(by_voice.get((name, v), []), key=lambda t: (t[0], t[1]))
            for (_, _, a), (_, ln, b) in zip(items, items[1:]):
                if b.onset < a.offset:
                    raise HtsError(f"event overlaps the previous one in voice {v} of {name}", ln)
            voices.append(Voice(v, [t[2] for t in items]))
        program, staff = parts[name]
        try:
            score_parts.append(Part(name, voices, sections[name] or [Section(1)], program, staff))
        except ScoreError as exc:
            raise HtsError(str(exc)) from None
    try:
        return Score(header["work"], score_parts, header["tpq"], header["title"], header["tempo"])
    except ScoreError as exc:
        raise HtsError(str(exc)) from None


def _quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_hts(score: Score) -> str:
    """Serialize a score to HTS text; :func:`parse_hts` inverts it."""
    head = [f"tpq={score.ticks_per_quarter}"]
    if score.title is not None:
        head.append(f"title={_quote(score.title)}")
    head.append(f"work={shlex.quote(score.work_ref)}")
    if score.tempo_bpm is not None:
        head.append(f"tempo={score.tempo_bpm!r}")
    lines = ["#score " + " ".join(head)]
    for part in score.parts:
        lines.append(f"#part {part.name} {part.midi_program} {part.staff}")
        for sec in part.sections:
            lines.append(f"#section {part.name} {sec.metre[0]}/{sec.metre[1]} {sec.clef} startbar={sec.start_bar}")
    multi_part = len(score.parts) > 1
    for part in score.parts:
        tag_voice = len(part.voices) > 1
        for voice in part.voices:
            for e in voice.events:
                fields = [f"{e.position.bar}:{e.position.beat}", str(e.duration_beats), e.name]
                if e.dynamic is not None and e.dynamic.midi_velocity is not None:
                    fields.append(f"vel={e.dynamic.midi_velocity}")
                if tag_voice:
                    fields.append(f"voice={voice.index}")
                if e.dynamic is not None and e.dynamic.literal is not None:
                    fields.append(f"dyn={e.dynamic.literal}")
                if multi_part:
                    fields.append(f"part={part.name}")
                lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"
