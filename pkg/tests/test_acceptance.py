"""The ten acceptance criteria, each timed against its budget.

Every criterion prints a PASS/FAIL line in the terminal summary.
"""
import functools
import json
import math
import random
import time
import wave
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from hamse import pipeline as pl
from hamse.align import cosine_cost, dtw, map_beats_to_seconds
from hamse.audio import AudioClip, Chromagram, chroma_from_audio, chroma_from_score
from hamse.emotion import classify_emotion
from hamse.harmony import KeyEstimate, estimate_key
from hamse.hts import parse_hts, write_hts
from hamse.kg import (CQ, TripleGraph, WorkMetadata, emit_features, emit_score, emit_work,
                      features_from_patterns, match, parse_turtle, serialize_turtle, vocabulary_violations)
from hamse.patterns import PatternKind, PatternType, key_text, mine_patterns
from hamse.score import abs_beats_of
from hamse.smf import parse_smf
from hamse.structure import label_segments, segment

from conftest import ACCEPTANCE, render_chorale
from helpers import CHORALE_HTS, CHORALE_META, random_score
from oracles import brute_force_dtw, brute_match, exact_dtw, key_oracle, naive_patterns

SR = 22050


def criterion(n, title, limit=None):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            passed = False
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - t0
                assert limit is None or elapsed < limit, f"took {elapsed:.2f} s, limit {limit} s"
                passed = True
            finally:
                ACCEPTANCE.append((n, title, passed, time.perf_counter() - t0, limit))
        return run
    return wrap


def wav_seconds(path):
    with wave.open(str(path)) as w:
        return w.getnframes() / w.getframerate()


def wav_samples(path):
    with wave.open(str(path)) as w:
        raw = w.readframes(w.getnframes())
    return np.frombuffer(raw, dtype="<i2") / 32768.0


def oracle_pattern_counts(score):
    """``{(feature class, key text): occurrences}`` over both rest settings."""
    out = Counter()
    for ptype, cls in (("interval", "IntervalPattern"), ("rhythmic", "RhythmicPattern"),
                       ("melodic", "MelodicPattern")):
        for rests in (False, True):
            for key, occ in naive_patterns(score, ptype, rests, 2, 8, 2).items():
                out[(cls, key_text(key))] += len(occ)
    return out


@criterion(1, "competency questions on the chorale fixture", 10)
def test_criterion_01_competency_questions(tmp_path):
    wav = render_chorale(tmp_path)
    cfg = pl.PipelineConfig(score_path=str(CHORALE_HTS), recording_paths=(str(wav),),
                            metadata_path=str(CHORALE_META), output_dir=str(tmp_path / "out"), figures=False)
    result = pl.run_pipeline(cfg)
    args = pl.choose_cq_args(result["graph"], result["meta"], result["features"])
    answers = {cq: rows for cq, _, rows in result["answers"]}
    assert all(answers[cq] for cq in CQ)

    score = parse_hts(CHORALE_HTS.read_text(encoding="utf-8"))
    meta_json = json.loads(CHORALE_META.read_text(encoding="utf-8"))
    _, tonic, mode = key_oracle(score)[0]
    names = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]
    assert answers[CQ.TONALITY] == [{"key": f"{names[tonic]} {mode}"}]
    assert answers[CQ.COMPOSER][0]["composer"] == "Johann Sebastian Bach" == meta_json["composer"]
    assert answers[CQ.MOVEMENT_COUNT] == [{"movements": 6}]
    (secs,) = answers[CQ.DURATION_SECONDS]
    assert secs["seconds"] == pytest.approx(wav_seconds(wav), abs=1e-6)
    max_bar = max(e.position.bar for p in score.parts for e in p.events)
    assert answers[CQ.DURATION_BARS] == [{"representation": answers[CQ.DURATION_BARS][0]["representation"],
                                          "bars": max_bar}]
    assert max_bar == 8

    # arousal sign from loudness and tempo; valence is positive for any dissonance rate in major
    x = wav_samples(wav)
    rms = np.mean([np.sqrt(np.mean(x[i:i + SR] ** 2)) for i in range(0, len(x), SR)])
    arousal = ((rms - 0.1) / 0.1 + (score.tempo_bpm - 100) / 60) / 2
    assert mode == "major"
    quadrant = "Q1" if arousal >= 0 else "Q4"
    assert answers[CQ.PREDOMINANT_EMOTION] == [{"quadrant": quadrant, "recordings": 1, "of": 1}]

    (bar1,) = answers[CQ.BAR_IN_RECORDINGS]
    hop = cfg.hop / SR
    assert bar1["start_s"] == pytest.approx(0.0, abs=2 * hop)
    assert bar1["end_s"] == pytest.approx(4 * 60 / score.tempo_bpm, abs=2 * hop)

    counts = oracle_pattern_counts(score)
    pattern, kind = args["pattern"], args["kind"]
    assert answers[CQ.PATTERN_IN_SENTIMENT] == [{"quadrant": quadrant, "pattern": pattern,
                                                 "songs_with_pattern": 1, "songs_in_quadrant": 1,
                                                 "occurrences": counts[(kind, pattern)]}]
    assert answers[CQ.PATTERN_CATEGORY] == [{"quadrant": quadrant, "songs": 1,
                                             "occurrences": counts[(kind, pattern)], "predominant": True}]
    top = answers[CQ.PATTERNS_OF_CATEGORY]
    pattern_rows = [r for r in top if r["class"] != "ChordProgression"]
    assert pattern_rows
    for r in pattern_rows:
        assert r["songs"] == 1 and r["occurrences"] == counts[(r["class"], r["pattern"])]
    assert [r["occurrences"] for r in top] == sorted((r["occurrences"] for r in top), reverse=True)
    assert top[0]["occurrences"] >= max(counts.values())

    clip = AudioClip(x, SR)
    segs, _, _ = segment(chroma_from_audio(clip), clip.duration_s)
    assert answers[CQ.STRUCTURES_WITH_PATTERN] == [{"structure": "".join(s.label for s in segs), "songs": 1}]
    assert answers[CQ.COMPOSER_OF_PATTERN] == [{"composer": "Johann Sebastian Bach", "songs": 1}]


@criterion(2, "DTW cost equals the brute-force minimum on 100 random pairs", 5)
def test_criterion_02_dtw_oracle():
    rng = np.random.default_rng(2024)
    enumerated = 0
    for _ in range(100):
        n, m = rng.integers(1, 11, size=2)
        a, b = rng.random((12, n)), rng.random((12, m))
        a[:, rng.random(n) < 0.1] = 0.0
        align = dtw(Chromagram(a, 0.1, "audio"), Chromagram(b, 0.1, "symbolic"))
        cost = cosine_cost(a, b)
        if n <= 6 and m <= 6:
            # small enough to list every monotone path
            assert align.total_cost == brute_force_dtw(cost)
            enumerated += 1
        assert align.total_cost == exact_dtw(cost)
    assert enumerated > 10


@criterion(3, "pattern mining equals the naive oracle on 100 random scores", 10)
def test_criterion_03_pattern_oracle():
    rng = random.Random(33)
    kinds = [(t, r) for t in ("interval", "rhythmic", "melodic") for r in (False, True)]
    for i in range(100):
        score = random_score(rng, max_events=64, pitch_range=(60, 65))
        ptype, rests = kinds[i % len(kinds)]
        got = {r.key: [(o.part, o.voice, o.start.abs_beats, o.end.abs_beats) for o in r.occurrences]
               for r in mine_patterns(score, PatternKind(PatternType(ptype), rests), 2, 8, 2)}
        assert got == naive_patterns(score, ptype, rests, 2, 8, 2)


@criterion(4, "self-alignment is the zero diagonal; a 2x stretch doubles bar times")
def test_criterion_04_self_alignment():
    score = parse_hts(CHORALE_HTS.read_text(encoding="utf-8"))
    hop = 512 / SR
    sym = chroma_from_score(score, 72.0, hop)
    align = dtw(sym, sym)
    assert align.path == tuple((i, i) for i in range(sym.n_frames))
    assert align.total_cost == 0.0

    slow = chroma_from_score(score, 36.0, hop)
    stretched = dtw(Chromagram(slow.frames, hop, "audio"), sym)
    for bar in range(1, 9):
        iv = map_beats_to_seconds(stretched, score, (bar, 0, bar + 1, 0))
        start = float(abs_beats_of(bar, Fraction(0), score.sections)) * 60 / 72
        assert iv.start_s == pytest.approx(2 * start, abs=2 * hop)
        if bar < 8:
            assert iv.end_s == pytest.approx(2 * (start + 4 * 60 / 72), abs=2 * hop)


@criterion(5, "key estimate is transposition covariant on 50 diatonic scores")
def test_criterion_05_key_covariance():
    rng = random.Random(55)
    for _ in range(50):
        score = random_score(rng, rest_p=0.1, pitch_range=(48, 72), diatonic=rng.randrange(12))
        base = estimate_key(score)
        k = rng.randrange(1, 12)
        moved = estimate_key(score.transposed(k))
        assert moved.tonic_pc == (base.tonic_pc + k) % 12
        assert moved.mode == base.mode
        assert abs(moved.correlation - base.correlation) <= 1e-9


@criterion(6, "pure tones give argmax pitch class 9 (440 Hz) and 0 (261.63 Hz)")
def test_criterion_06_chroma():
    t = np.arange(SR) / SR
    for freq, pc in ((440.0, 9), (261.63, 0)):
        chroma = chroma_from_audio(AudioClip(0.5 * np.sin(2 * np.pi * freq * t), SR))
        edge = 2048 // 2 // 512 + 1
        interior = chroma.frames[:, edge:chroma.n_frames - edge]
        assert np.all(np.argmax(interior, axis=0) == pc)


def _blocks(pcs, size=20):
    cols = []
    for pc in pcs:
        col = np.zeros(12)
        col[pc] = 1.0
        cols += [col] * size
    return Chromagram(np.array(cols).T, 0.5, "audio")


@criterion(7, "two-texture boundary at frame 20 +-1; ABA labelled A,B,A")
def test_criterion_07_segmentation():
    chroma = _blocks([0, 7])
    segs, _, _ = segment(chroma)
    assert len(segs) == 2
    assert abs(segs[1].start_s / chroma.hop_s - 20) <= 1
    aba = _blocks([0, 7, 0])
    assert [s.label for s in label_segments(aba, [0.0, 10.0, 20.0, 30.0])] == ["A", "B", "A"]
    assert [s.label for s in segment(aba)[0]] == ["A", "B", "A"]


def _graphs(tmp_path):
    meta = WorkMetadata.from_dict(json.loads(CHORALE_META.read_text(encoding="utf-8")))
    score = parse_hts(CHORALE_HTS.read_text(encoding="utf-8"))
    yield emit_work(meta)
    yield emit_score(score, meta)
    yield emit_features(features_from_patterns(
        mine_patterns(score, PatternKind(PatternType.INTERVAL), 2, 4, 2)), meta)
    cfg = pl.PipelineConfig(score_path=str(CHORALE_HTS), recording_paths=(str(render_chorale(tmp_path)),),
                            metadata_path=str(CHORALE_META), output_dir=str(tmp_path / "out"), figures=False)
    yield pl.run_pipeline(cfg)["graph"]
    rng = random.Random(88)
    for _ in range(10):
        yield emit_score(random_score(rng, max_events=12, max_parts=1), WorkMetadata("r", "r", "c"))


@criterion(8, "closed vocabulary, Turtle round trip, stable bytes, match equals brute force")
def test_criterion_08_rdf_integrity(tmp_path):
    rng = random.Random(8)
    small = 0
    for g in _graphs(tmp_path):
        assert vocabulary_violations(g) == []
        text = serialize_turtle(g)
        assert parse_turtle(text) == g
        assert serialize_turtle(parse_turtle(text)) == text
        if len(g) <= 200:
            small += 1
            triples = g.sorted_triples()
            for _ in range(20):
                pats = []
                for _ in range(rng.randint(1, 3)):
                    t = list(rng.choice(triples))
                    for i in range(3):
                        if rng.random() < 0.5:
                            t[i] = rng.choice(["?a", "?b", "?c"])
                    pats.append(tuple(t))
                assert {tuple(sorted(r.items())) for r in match(g, pats)} == brute_match(g, pats)
    assert small >= 5
    meta = WorkMetadata("w", "t", "c")
    score = random_score(random.Random(1))
    assert serialize_turtle(emit_score(score, meta)) == serialize_turtle(emit_score(score, meta))
    assert isinstance(TripleGraph(), TripleGraph)


@criterion(9, "HTS parse(write) identity on 100 scores; minimal SMF decodes to one event")
def test_criterion_09_round_trips():
    rng = random.Random(99)
    for _ in range(100):
        score = random_score(rng)
        assert parse_hts(write_hts(score)) == score
    track = b"\x00\x90\x3c\x40" + b"\x60\x80\x3c\x00" + b"\x00\xff\x2f\x00"
    data = b"MThd\x00\x00\x00\x06\x00\x00\x00\x01\x00\x60" + b"MTrk" + len(track).to_bytes(4, "big") + track
    score = parse_smf(data)
    (event,) = [e for p in score.parts for e in p.events]
    assert (event.midi_pitch, event.duration_beats, event.onset) == (60, 1, 0)


@criterion(10, "emotion quadrant/sign consistency and monotonicity on 1000 inputs")
def test_criterion_10_emotion():
    rng = np.random.default_rng(10)
    major = KeyEstimate(0, "major", 0.9, (9, "minor", 0.8))
    minor = KeyEstimate(9, "minor", 0.9, (0, "major", 0.8))
    signs = {"Q1": (True, True), "Q2": (False, True), "Q3": (False, False), "Q4": (True, False)}
    for _ in range(1000):
        level = rng.uniform(0, 0.5)
        clip = AudioClip(rng.uniform(-1, 1, 400) * level, 400)
        t1, t2 = np.sort(rng.uniform(20, 300, 2))
        d = rng.uniform(0, 1)
        key = major if rng.random() < 0.5 else minor
        tag = classify_emotion(clip, key, t1, d)
        assert signs[tag.quadrant] == (tag.valence >= 0, tag.arousal >= 0)
        assert classify_emotion(clip, key, t2, d).arousal >= tag.arousal
        assert classify_emotion(clip, minor, t1, d).valence <= classify_emotion(clip, major, t1, d).valence
        assert not math.isnan(tag.valence)
