"""
Standard MIDI File (format 0 and 1) reader and a minimal writer.

Only note on/off, program change, and the tempo (0x51), time signature
(0x58) and track name (0x03) meta events are interpreted; everything else
is skipped after its length has been honoured.
"""
from __future__ import annotations

import struct
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction

from .score import (Dynamic, Part, Score, ScoreError, Section, Voice,
                    abs_beats_of, bar_length, make_note, pitch_spelling,
                    position_from_abs)

__all__ = [
    "MidiParseError",
    "UnclosedNoteWarning",
    "SmfFile",
    "read_smf",
    "parse_smf",
    "write_smf",
    "encode_vlq",
]


class MidiParseError(ValueError):
    """Malformed MIDI data. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnclosedNoteWarning(UserWarning):
    """A note-on had no matching note-off and was closed at the track end."""


@dataclass
class SmfTrack:
    # (absolute tick, status byte, data bytes) for channel events;
    # (absolute tick, 0xFF, (meta type, payload)) for meta events
    events: list = field(default_factory=list)
    end_tick: int = 0


@dataclass
class SmfFile:
    format: int
    ticks_per_quarter: int
    tracks: list


def _read_vlq(data, pos, limit):
    value = 0
    for _ in range(4):
        if pos >= limit:
            raise MidiParseError("truncated variable-length quantity", pos)
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiParseError("variable-length quantity longer than 4 bytes", pos)


def encode_vlq(value: int) -> bytes:
    if value < 0 or value > 0x0FFFFFFF:
        raise ValueError("VLQ out of range")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


_DATA_LENGTH = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def _parse_track(data, start, end):
    track = SmfTrack()
    pos, tick, running = start, 0, None
    while pos < end:
        delta, pos = _read_vlq(data, pos, end)
        tick += delta
        if pos >= end:
            raise MidiParseError("truncated event", pos)
        status = data[pos]
        if status == 0xFF:
            if pos + 2 > end:
                raise MidiParseError("truncated meta event", pos)
            mtype = data[pos + 1]
            length, pos = _read_vlq(data, pos + 2, end)
            if pos + length > end:
                raise MidiParseError("truncated meta event payload", pos)
            payload = bytes(data[pos:pos + length])
            pos += length
            if mtype == 0x2F:
                track.end_tick = tick
                break
            track.events.append((tick, 0xFF, (mtype, payload)))
            continue
        if status in (0xF0, 0xF7):
            length, pos = _read_vlq(data, pos + 1, end)
            if pos + length > end:
                raise MidiParseError("truncated sysex event", pos)
            pos += length
            running = None
            continue
        if status & 0x80:
            if status >= 0xF0:
                raise MidiParseError(f"unsupported status byte 0x{status:02X}", pos)
            running = status
            pos += 1
        elif running is None:
            raise MidiParseError("data byte without running status", pos)
        n = _DATA_LENGTH[running & 0xF0]
        if pos + n > end:
            raise MidiParseError("truncated channel event", pos)
        track.events.append((tick, running, bytes(data[pos:pos + n])))
        pos += n
    track.end_tick = max(track.end_tick, tick)
    return track


def read_smf(data: bytes) -> SmfFile:
    """Decode the chunk structure and events of a MIDI file."""
    data = memoryview(bytes(data))
    if len(data) < 14 or bytes(data[:4]) != b"MThd":
        raise MidiParseError("missing MThd header", 0)
    (length,) = struct.unpack(">I", data[4:8])
    if length != 6:
        raise MidiParseError(f"header length {length}, expected 6", 4)
    fmt, ntracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}", 8)
    if division & 0x8000 or division == 0:
        raise MidiParseError("SMPTE or zero time division is not supported", 12)
    pos = 14
    tracks = []
    while len(tracks) < ntracks:
        if pos + 8 > len(data):
            raise MidiParseError(f"expected {ntracks} tracks, found {len(tracks)}", pos)
        tag = bytes(data[pos:pos + 4])
        (clen,) = struct.unpack(">I", data[pos + 4:pos + 8])
        body = pos + 8
        if body + clen > len(data):
            raise MidiParseError(f"truncated {tag.decode('latin-1')} chunk", pos)
        if tag == b"MTrk":
            tracks.append(_parse_track(data, body, body + clen))
        pos = body + clen
    return SmfFile(fmt, division, tracks)


def _time_signature_sections(meta_events, tpq):
    """Turn time-signature changes into sections; a change takes effect at
    the bar that contains it (or the next one if it falls mid-bar)."""
    changes = []
    for tick, (num, den) in sorted(meta_events):
        beats = Fraction(tick, tpq)
        if changes and changes[-1][0] == beats:
            changes[-1] = (beats, (num, den))
        elif not changes or changes[-1][1] != (num, den):
            changes.append((beats, (num, den)))
    if not changes or changes[0][0] > 0:
        changes.insert(0, (Fraction(0), (4, 4)))
    sections = []
    bar, at, metre = 1, Fraction(0), changes[0][1]
    sections.append(Section(1, metre))
    for beats, new in changes[1:]:
        length = bar_length(metre)
        bars, rem = divmod(beats - at, length)
        bar += int(bars) + (1 if rem else 0)
        at += (int(bars) + (1 if rem else 0)) * length
        if new != sections[-1].metre:
            if sections[-1].start_bar == bar:
                sections[-1] = Section(bar, new)
            else:
                sections.append(Section(bar, new))
        metre = new
    return sections


def _assign_voices(notes):
    """Greedy first-free voice assignment of (onset, offset, ...) tuples."""
    voices = []  # list of [end, notes]
    for note in notes:
        for slot in voices:
            if slot[0] <= note[0]:
                slot[0] = note[1]
                slot[1].append(note)
                break
        else:
            voices.append([note[1], [note]])
    return [slot[1] for slot in voices]


def parse_smf(data: bytes, work_ref: str = "work") -> Score:
    """Parse MIDI bytes into a :class:`~hamse.score.Score`.

    One part per track that carries notes. Overlapping notes within a part
    are split into voices greedily. Notes still sounding at the end of a
    track are closed there and an :class:`UnclosedNoteWarning` is issued.
    """
    smf = read_smf(data)
    tpq = smf.ticks_per_quarter
    tempos, timesigs = [], []
    parsed = []
    for index, track in enumerate(smf.tracks):
        name, program = None, None
        pending = defaultdict(deque)
        notes = []
        for tick, status, payload in track.events:
            if status == 0xFF:
                mtype, body = payload
                if mtype == 0x51 and len(body) == 3:
                    tempos.append((tick, int.from_bytes(body, "big")))
                elif mtype == 0x58 and len(body) >= 2:
                    timesigs.append((tick, (body[0], 2 ** body[1])))
                elif mtype == 0x03 and name is None:
                    name = body.decode("latin-1").strip()
                continue
            kind, channel = status & 0xF0, status & 0x0F
            if kind == 0xC0 and program is None:
                program = payload[0]
            elif kind == 0x90 and payload[1] > 0:
                pending[channel, payload[0]].append((tick, payload[1]))
            elif kind == 0x80 or (kind == 0x90 and payload[1] == 0):
                queue = pending.get((channel, payload[0]))
                if queue:
                    on, vel = queue.popleft()
                    notes.append((on, tick, payload[0], vel))
        unclosed = [(on, track.end_tick, pitch, vel)
                    for (channel, pitch), queue in pending.items() for on, vel in queue]
        if unclosed:
            warnings.warn(f"track {index}: {len(unclosed)} note(s) without note-off closed at "
                          f"tick {track.end_tick}", UnclosedNoteWarning, stacklevel=2)
            notes.extend(unclosed)
        notes = [n for n in notes if n[1] > n[0]]
        if notes:
            notes.sort(key=lambda n: (n[0], n[2], n[1]))
            parsed.append((name or f"Track{index + 1}", program or 0, notes))

    if not parsed:
        raise MidiParseError("no note events found", 0)
    for tick, (num, den) in timesigs:
        if den not in (1, 2, 4, 8, 16, 32) or num < 1:
            raise MidiParseError(f"unsupported time signature {num}/{den}", 0)
    sections = _time_signature_sections(timesigs, tpq)
    tempo_bpm = None
    if tempos:
        tempo_bpm = 60_000_000 / min(tempos)[1]

    parts, seen = [], set()
    for name, program, notes in parsed:
        name = "_".join(name.split()) or "Track"
        base, k = name, 2
        while name in seen:
            name, k = f"{base}_{k}", k + 1
        seen.add(name)
        voices = []
        for i, group in enumerate(_assign_voices(notes), start=1):
            events = []
            for on, off, pitch, vel in group:
                onset = Fraction(on, tpq)
                kind, acc, octave = pitch_spelling(pitch)
                try:
                    events.append(make_note(kind, acc, octave, position_from_abs(onset, sections),
                                            Fraction(off - on, tpq), Dynamic(midi_velocity=vel)))
                except ScoreError as exc:
                    raise MidiParseError(str(exc), 0) from None
            voices.append(Voice(i, events))
        parts.append(Part(name, voices, sections, program, 1))
    return Score(work_ref, parts, tpq, None, tempo_bpm)


def write_smf(score: Score, tempo_bpm: float | None = None) -> bytes:
    """Encode a score as a format-1 MIDI file (one track per part, rests dropped)."""
    tpq = score.ticks_per_quarter
    tempo = tempo_bpm or score.tempo_bpm or 120.0

    def chunk(tag, body):
        return tag + struct.pack(">I", len(body)) + body

    def track(events):
        events.sort(key=lambda e: (e[0], e[1]))
        out, last = bytearray(), 0
        for tick, _, raw in events:
            out += encode_vlq(tick - last) + raw
            last = tick
        out += encode_vlq(0) + b"\xff\x2f\x00"
        return chunk(b"MTrk", bytes(out))

    def ticks(beats):
        value = beats * tpq
        if value.denominator != 1:
            raise ValueError(f"{beats} beats is not a whole number of ticks at tpq={tpq}")
        return int(value)

    conductor = [(0, 0, b"\xff\x51\x03" + round(60_000_000 / tempo).to_bytes(3, "big"))]
    for sec in score.sections:
        num, den = sec.metre
        at = ticks(abs_beats_of(sec.start_bar, 0, score.sections))
        conductor.append((at, 0, b"\xff\x58\x04" + bytes([num, den.bit_length() - 1, 24, 8])))
    chunks = [track(conductor)]
    for channel, part in enumerate(score.parts):
        channel %= 16
        name = part.name.encode("latin-1", "replace")
        events = [(0, 0, b"\xff\x03" + encode_vlq(len(name)) + name),
                  (0, 1, bytes([0xC0 | channel, part.midi_program]))]
        for e in part.events:
            if e.is_rest:
                continue
            vel = e.dynamic.midi_velocity if e.dynamic and e.dynamic.midi_velocity else 80
            events.append((ticks(e.onset), 3, bytes([0x90 | channel, e.midi_pitch, vel])))
            events.append((ticks(e.offset), 2, bytes([0x80 | channel, e.midi_pitch, 0])))
        chunks.append(track(events))
    header = chunk(b"MThd", struct.pack(">HHH", 1, len(chunks), tpq))
    return header + b"".join(chunks)

