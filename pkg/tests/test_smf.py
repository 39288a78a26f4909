import random
import struct
import warnings

import pytest

from hamse.smf import MidiParseError, UnclosedNoteWarning, encode_vlq, parse_smf, read_smf, write_smf

from helpers import melody, random_score


def chunk(tag, body):
    return tag + struct.pack(">I", len(body)) + body


def smf(tracks, fmt=0, tpq=96, ntracks=None):
    head = chunk(b"MThd", struct.pack(">HHH", fmt, len(tracks) if ntracks is None else ntracks, tpq))
    return head + b"".join(chunk(b"MTrk", t) for t in tracks)


END = b"\x00\xff\x2f\x00"


def test_minimal_single_note():
    track = b"\x00\x90\x3c\x40" + b"\x60\x80\x3c\x00" + END
    s = parse_smf(smf([track]))
    (e,) = s.parts[0].events
    assert (e.midi_pitch, e.duration_beats, e.onset) == (60, 1, 0)
    assert e.dynamic.midi_velocity == 64
    assert s.ticks_per_quarter == 96


def test_velocity_zero_is_note_off():
    a = b"\x00\x90\x3c\x40" + b"\x60\x80\x3c\x00" + END
    b = b"\x00\x90\x3c\x40" + b"\x60\x90\x3c\x00" + END
    assert parse_smf(smf([a])) == parse_smf(smf([b]))


def test_running_status():
    # second note-on and both offs reuse status 0x90
    track = b"\x00\x90\x3c\x40" + b"\x00\x40\x40" + b"\x60\x3c\x00" + b"\x00\x40\x00" + END
    s = parse_smf(smf([track]))
    assert sorted(e.midi_pitch for e in s.parts[0].events) == [60, 64]
    assert len(s.parts[0].voices) == 2


def test_header_claims_more_tracks():
    with pytest.raises(MidiParseError):
        parse_smf(smf([END], ntracks=2))


def test_truncated_chunk_offset():
    data = smf([b"\x00\x90\x3c\x40" + b"\x60\x80\x3c\x00" + END])[:-3]
    with pytest.raises(MidiParseError) as err:
        read_smf(data)
    assert err.value.offset == 14


def test_not_midi():
    with pytest.raises(MidiParseError):
        parse_smf(b"RIFF0000")


def test_unclosed_note_warns():
    track = b"\x00\x90\x3c\x40" + b"\x60\xff\x2f\x00"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = parse_smf(smf([track]))
    assert any(issubclass(w.category, UnclosedNoteWarning) for w in caught)
    assert s.parts[0].events[0].duration_beats == 1


def test_meta_events():
    tempo = b"\x00\xff\x51\x03\x07\xa1\x20"  # 500000 us = 120 bpm
    timesig = b"\x00\xff\x58\x04\x03\x02\x18\x08"  # 3/4
    name = b"\x00\xff\x03\x04Lead"
    program = b"\x00\xc0\x28"
    notes = b"\x00\x90\x3c\x40" + b"\x81\x40\x80\x3c\x00"  # 192 ticks = 2 beats
    data = smf([tempo + timesig + END, name + program + notes + END], fmt=1)
    s = parse_smf(data)
    assert s.tempo_bpm == pytest.approx(120.0)
    assert s.parts[0].name == "Lead" and s.parts[0].midi_program == 40
    assert s.parts[0].sections[0].metre == (3, 4)
    assert s.parts[0].events[0].duration_beats == 2


def test_greedy_voices_never_overlap():
    rng = random.Random(5)
    for _ in range(30):
        body = b""
        events = []
        for _ in range(20):
            start = rng.randint(0, 400)
            events.append((start, 0x90, rng.randint(40, 80)))
            events.append((start + rng.randint(1, 200), 0x80, events[-1][2]))
        events.sort(key=lambda e: (e[0], e[1] == 0x90))
        # drop pitch collisions that make pairs ambiguous
        t = 0
        for tick, status, pitch in events:
            body += encode_vlq(tick - t) + bytes([status, pitch, 64 if status == 0x90 else 0])
            t = tick
        try:
            s = parse_smf(smf([body + END]))
        except MidiParseError:
            continue
        for v in s.parts[0].voices:
            for a, b in zip(v.events, v.events[1:]):
                assert b.onset >= a.offset


def test_vlq():
    assert encode_vlq(0) == b"\x00"
    assert encode_vlq(0x7F) == b"\x7f"
    assert encode_vlq(0x80) == b"\x81\x00"
    assert encode_vlq(0x0FFFFFFF) == b"\xff\xff\xff\x7f"


def test_write_then_parse_keeps_notes():
    rng = random.Random(2)
    for _ in range(20):
        s = random_score(rng, rest_p=0.0, spell=False, dynamics=False)
        back = parse_smf(write_smf(s))
        def notes(score):
            return sorted((e.onset, e.duration_beats, e.midi_pitch) for p in score.parts for e in p.events
                          if not e.is_rest)
        quantised = sorted((round(float(o) * s.ticks_per_quarter), round(float(d) * s.ticks_per_quarter), p)
                           for o, d, p in notes(s))
        got = sorted((round(float(o) * s.ticks_per_quarter), round(float(d) * s.ticks_per_quarter), p)
                     for o, d, p in notes(back))
        assert got == quantised


def test_write_single_melody():
    s = melody([60, 62, 64], tempo=90)
    back = parse_smf(write_smf(s))
    assert [e.midi_pitch for e in back.parts[0].events] == [60, 62, 64]
    assert back.tempo_bpm == pytest.approx(90.0)
