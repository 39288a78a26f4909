"""
End-to-end orchestration: score and recordings in, feature tables, alignment
anchors, segments, emotion tags, a Turtle graph, competency-question
answers and figures out. Every output is a deterministic function of the
inputs and the configuration.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import plotting
from .align import AlignmentMap, anchors_csv, cosine_cost, dtw
from .audio import AudioClip, Chromagram, WavError, chroma_from_audio, chroma_from_score, read_wav
from .emotion import EmotionTag, classify_emotion
from .harmony import (ChordProgression, ChordSlice, DissonanceReport, HarmonyError, KeyEstimate,
                      chordify, dissonance_rate, estimate_key, find_dissonances, key_correlations,
                      mine_progressions, pitch_class_histogram)
from .hts import HtsError, parse_hts
from .kg import (CQ, CQ_PARAMS, RecordingInfo, TripleGraph, WorkMetadata, answer_cq, emit_alignment,
                 emit_emotion, emit_features, emit_score, emit_segments, emit_work, features_from_chords,
                 features_from_patterns, features_from_progressions, predominant_quadrant)
from .kg.query import work_quadrants
from .kg.turtle import serialize_turtle
from .patterns import PatternKind, PatternOccurrenceSet, PatternType, mine_patterns
from .score import Score, ScoreError
from .smf import MidiParseError, parse_smf
from .structure import Segment, segment, segments_csv

log = logging.getLogger(__name__)

__all__ = [
    "InputError",
    "PipelineConfig",
    "Features",
    "RecordingAnalysis",
    "load_score",
    "load_metadata",
    "load_recording",
    "extract_features",
    "analyse_recording",
    "analyse_recordings",
    "build_graph",
    "choose_cq_args",
    "answer_all",
    "format_answers",
    "write_features",
    "run_pipeline",
]

DEFAULT_TEMPO = 120.0
SCORE_SUFFIXES = {".hts": "hts", ".txt": "hts", ".mid": "smf", ".midi": "smf", ".smf": "smf"}


class InputError(Exception):
    """Bad user input: missing or malformed files, invalid options."""


@dataclass
class PipelineConfig:
    score_path: Optional[str] = None
    recording_paths: list = field(default_factory=list)
    output_dir: str = "hamse-out"
    metadata_path: Optional[str] = None
    pattern_kinds: tuple = ("interval", "rhythmic", "melodic")
    rests: str = "both"
    n_min: int = 2
    n_max: int = 8
    min_count: int = 2
    frame_len: int = 2048
    hop: int = 512
    tempo: Optional[float] = None
    kernel_half: int = 8
    min_distance: int = 8
    label_threshold: float = 0.15
    figures: bool = True
    workers: int = 4

    def __post_init__(self):
        self.recording_paths = list(self.recording_paths or [])
        if isinstance(self.pattern_kinds, str):
            self.pattern_kinds = tuple(k.strip() for k in self.pattern_kinds.split(",") if k.strip())
        self.pattern_kinds = tuple(self.pattern_kinds)
        bad = [k for k in self.pattern_kinds if k.upper() not in PatternType.__members__]
        if bad:
            raise InputError(f"unknown pattern kind(s): {', '.join(bad)}")
        if self.rests not in ("with", "without", "both"):
            raise InputError(f"rests must be 'with', 'without' or 'both', got {self.rests!r}")
        if not 1 <= self.n_min <= self.n_max:
            raise InputError("need 1 <= n_min <= n_max")
        if self.min_count < 2:
            raise InputError("min_count must be at least 2")
        if self.frame_len < 2 or self.hop < 1:
            raise InputError("frame_len must be >= 2 and hop >= 1")
        if self.tempo is not None and self.tempo <= 0:
            raise InputError("tempo must be positive")

    @property
    def kinds(self) -> list[PatternKind]:
        rests = {"with": (True,), "without": (False,), "both": (False, True)}[self.rests]
        return [PatternKind(PatternType[k.upper()], r) for k in self.pattern_kinds for r in rests]

    @classmethod
    def from_json(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InputError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)


def load_score(path) -> Score:
    """Parse an HTS or Standard MIDI file, chosen by extension."""
    path = Path(path)
    fmt = SCORE_SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise InputError(f"{path}: unknown score format (expected .hts, .mid or .midi)")
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    if not data.strip():
        raise InputError(f"{path}: empty file")
    try:
        if fmt == "hts":
            return parse_hts(data.decode("utf-8"))
        return parse_smf(data, work_ref=path.stem)
    except (HtsError, MidiParseError, ScoreError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def load_metadata(path, score: Score) -> WorkMetadata:
    """Work metadata from a JSON sidecar, or a bare record derived from the score."""
    if path is None:
        return WorkMetadata(work_id=score.work_ref, title=score.title or score.work_ref,
                            composer_name="unknown")
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return WorkMetadata.from_dict(data)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad metadata ({exc})") from None


def load_recording(path) -> AudioClip:
    try:
        return read_wav(Path(path).read_bytes())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except WavError as exc:
        raise InputError(f"{path}: {exc}") from None


@dataclass
class Features:
    patterns: list[PatternOccurrenceSet]
    slices: list[ChordSlice]
    progressions: list[ChordProgression]
    dissonances: list[DissonanceReport]
    key: Optional[KeyEstimate]

    @property
    def dissonance_rate(self) -> float:
        return dissonance_rate(self.slices) if self.slices else 0.0


def extract_features(score: Score, cfg: PipelineConfig) -> Features:
    if not score.has_notes:
        raise InputError("score has no notes to analyse")
    patterns = []
    for kind in cfg.kinds:
        patterns.extend(mine_patterns(score, kind, cfg.n_min, cfg.n_max, cfg.min_count))
    try:
        slices = chordify(score)
    except HarmonyError as exc:
        raise InputError(str(exc)) from None
    progs = mine_progressions(slices, cfg.n_min, cfg.n_max, cfg.min_count)
    return Features(patterns, slices, progs, find_dissonances(slices), estimate_key(score))


@dataclass
class RecordingAnalysis:
    rec_id: str
    clip: AudioClip
    audio_chroma: Chromagram
    symbolic_chroma: Chromagram
    align: AlignmentMap
    segments: list[Segment]
    ssm: np.ndarray
    novelty: np.ndarray
    emotion: Optional[EmotionTag]


def score_tempo(score: Score, cfg: PipelineConfig) -> float:
    return float(cfg.tempo or score.tempo_bpm or DEFAULT_TEMPO)


def analyse_recording(score: Score, features: Features, rec_id: str, clip: AudioClip,
                      cfg: PipelineConfig) -> RecordingAnalysis:
    tempo = score_tempo(score, cfg)
    audio = chroma_from_audio(clip, cfg.frame_len, cfg.hop)
    symbolic = chroma_from_score(score, tempo, audio.hop_s)
    align = dtw(audio, symbolic, rec_id)
    if audio.n_frames > 2 * cfg.kernel_half:
        segs, ssm, nov = segment(audio, clip.duration_s, cfg.kernel_half, cfg.min_distance, cfg.label_threshold)
    else:
        segs, ssm, nov = [Segment(0.0, clip.duration_s, "A")], np.ones((1, 1)), np.zeros(1)
    emotion = None
    if features.key is not None:
        emotion = classify_emotion(clip, features.key, tempo, features.dissonance_rate)
    return RecordingAnalysis(rec_id, clip, audio, symbolic, align, segs, ssm, nov, emotion)


def analyse_recordings(score: Score, features: Features, paths: Sequence, cfg: PipelineConfig
                       ) -> list[RecordingAnalysis]:
    """Analyse recordings concurrently; results come back sorted by recording id."""
    ids = [Path(p).stem for p in paths]
    if len(set(ids)) != len(ids):
        raise InputError("recording file names must be unique")
    clips = [load_recording(p) for p in paths]
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        jobs = [pool.submit(analyse_recording, score, features, rid, clip, cfg)
                for rid, clip in zip(ids, clips)]
        results = [j.result() for j in jobs]
    return sorted(results, key=lambda r: r.rec_id)


def complete_metadata(meta: WorkMetadata, features: Optional[Features],
                      recordings: Sequence[RecordingAnalysis]) -> WorkMetadata:
    """Fill the key from the estimate and recordings/durations from the analysed files."""
    recs = {r.rec_id: r for r in meta.recordings}
    for ra in recordings:
        info = recs.get(ra.rec_id, RecordingInfo(ra.rec_id))
        recs[ra.rec_id] = replace(info, duration_s=ra.clip.duration_s)
    key = meta.key_label
    if key is None and features is not None and features.key is not None:
        key = features.key.label
    return replace(meta, key_label=key, recordings=tuple(recs[k] for k in sorted(recs)))


def build_graph(score: Score, meta: WorkMetadata, features: Features,
                recordings: Sequence[RecordingAnalysis] = ()) -> TripleGraph:
    """The full graph: work, score, features, alignments, segments and emotion."""
    g = emit_work(meta)
    g |= emit_score(score, meta)
    feats = (features_from_patterns(features.patterns) + features_from_chords(features.slices)
             + features_from_progressions(features.progressions))
    aligns = {r.rec_id: r.align for r in recordings}
    g |= emit_features(feats, meta, aligns=aligns)
    for r in recordings:
        g |= emit_alignment(score, meta, r.rec_id, r.align)
        g |= emit_segments(r.segments, meta, r.rec_id)
        if r.emotion is not None:
            g |= emit_emotion(r.emotion, meta, r.rec_id)
    return g


def choose_cq_args(g: TripleGraph, meta: WorkMetadata, features: Features) -> dict:
    """Parameters for the report: this work, bar 1, the most common
    pattern of the first mined kind, and the work's predominant quadrant."""
    args = {"work": meta.work_iri, "bar": 1}
    if features.patterns:
        top = features.patterns[0]
        args["pattern"] = top.text
        args["kind"] = top.kind.feature_class
    elif features.progressions:
        args["pattern"] = features.progressions[0].text
        args["kind"] = "ChordProgression"
    args["quadrant"] = predominant_quadrant(work_quadrants(g, meta.work_iri)) or "Q1"
    return args


_NEEDS_RECORDING = {CQ.DURATION_SECONDS, CQ.PREDOMINANT_EMOTION, CQ.BAR_IN_RECORDINGS,
                    CQ.PATTERN_IN_SENTIMENT, CQ.PATTERN_CATEGORY, CQ.PATTERNS_OF_CATEGORY,
                    CQ.STRUCTURES_WITH_PATTERN}


def answer_all(g: TripleGraph, args: dict) -> list[tuple[CQ, dict, list]]:
    out = []
    for cq in CQ:
        used = {k: args[k] for k in CQ_PARAMS[cq] if k in args}
        if "pattern" in CQ_PARAMS[cq] and "kind" in args:
            used["kind"] = args["kind"]
        if any(k not in used for k in CQ_PARAMS[cq]):
            out.append((cq, used, []))
            continue
        out.append((cq, used, answer_cq(g, cq, used)))
    return out


def _cell(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def format_answers(answers, has_recordings: bool) -> str:
    lines = []
    for n, (cq, used, rows) in enumerate(answers, start=1):
        lines.append(f"CQ{n} {cq.value}")
        if used:
            lines.append("  args: " + "; ".join(f"{k}={_cell(v)}" for k, v in sorted(used.items())))
        if not rows:
            reason = "no recording" if cq in _NEEDS_RECORDING and not has_recordings else "no answer"
            lines.append(f"  {reason}")
        for row in rows:
            lines.append("  " + "; ".join(f"{k}={_cell(v)}" for k, v in row.items()))
        lines.append("")
    answered = sum(1 for _, _, rows in answers if rows)
    lines.append(f"answered {answered}/{len(answers)}")
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _pos(p) -> str:
    return f"{p.bar}:{p.beat}"


def patterns_csv(patterns: Sequence[PatternOccurrenceSet]) -> str:
    rows = []
    for s in patterns:
        occ = ";".join(f"{o.part}/{o.voice}@{_pos(o.start)}" for o in s.occurrences)
        rows.append([s.kind.type.value, "with" if s.kind.include_rests else "without", s.length, s.text, s.count, occ])
    return _csv(["kind", "rests", "length", "key", "count", "occurrences"], rows)


def write_features(out: Path, features: Features) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "patterns.csv": patterns_csv(features.patterns),
        "chords.csv": _csv(["bar", "beat", "abs_beats", "duration", "label", "pitches"],
                           [[s.onset.bar, s.onset.beat, s.onset.abs_beats, s.duration_beats, s.label,
                             " ".join(map(str, s.pitches))] for s in features.slices]),
        "progressions.csv": _csv(["length", "progression", "count", "occurrences"],
                                 [[len(p.labels), p.text, p.count, ";".join(_pos(o) for o in p.occurrences)]
                                  for p in features.progressions]),
        "dissonances.csv": _csv(["interval_class", "count", "examples"],
                                [[d.interval_class, d.count, ";".join(_pos(o) for o in d.example_sites)]
                                 for d in features.dissonances]),
    }
    k = features.key
    if k is not None:
        files["key.csv"] = _csv(["key", "tonic_pc", "mode", "correlation", "runner_up"],
                                [[k.label, k.tonic_pc, k.mode, f"{k.correlation:.6f}",
                                  f"{k.runner_up[0]} {k.runner_up[1]} {k.runner_up[2]:.6f}"]])
    written = []
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        written.append(out / name)
    return written


def emotion_csv(recordings: Sequence[RecordingAnalysis]) -> str:
    return _csv(["recording", "quadrant", "valence", "arousal", "method"],
                [[r.rec_id, r.emotion.quadrant, f"{r.emotion.valence:.6f}", f"{r.emotion.arousal:.6f}",
                  r.emotion.method] for r in recordings if r.emotion is not None])


def write_recordings(out: Path, recordings: Sequence[RecordingAnalysis], figures: bool,
                     align: bool = True, segments: bool = True, emotion: bool = True) -> list[Path]:
    written = []
    for r in recordings:
        if align:
            p = out / "align" / f"{r.rec_id}.csv"
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(anchors_csv(r.align), encoding="utf-8")
            written.append(p)
        if segments:
            p = out / "segments" / f"{r.rec_id}.csv"
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(segments_csv(r.segments), encoding="utf-8")
            written.append(p)
        if figures:
            fig = out / "figures"
            written.append(plotting.plot_chromagram(r.audio_chroma, fig / f"chroma_{r.rec_id}.png",
                                                    f"{r.rec_id} chroma"))
            if align:
                cost = cosine_cost(r.audio_chroma.frames, r.symbolic_chroma.frames)
                written.append(plotting.plot_alignment(r.align, cost, fig / f"align_{r.rec_id}.png"))
            if segments and r.ssm.shape[0] > 1:
                written.append(plotting.plot_structure(r.ssm, r.novelty, r.segments, r.audio_chroma.hop_s,
                                                       fig / f"structure_{r.rec_id}.png"))
    if emotion and recordings:
        (out / "emotion.csv").write_text(emotion_csv(recordings), encoding="utf-8")
        written.append(out / "emotion.csv")
    return written


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run everything and write all outputs under ``cfg.output_dir``."""
    if not cfg.score_path:
        raise InputError("no score given")
    out = Path(cfg.output_dir)
    score = load_score(cfg.score_path)
    meta = load_metadata(cfg.metadata_path, score)
    features = extract_features(score, cfg)
    recordings = analyse_recordings(score, features, cfg.recording_paths, cfg)
    meta = complete_metadata(meta, features, recordings)
    written = write_features(out, features)
    written += write_recordings(out, recordings, cfg.figures)
    g = build_graph(score, meta, features, recordings)
    (out / "graph.ttl").write_text(serialize_turtle(g), encoding="utf-8")
    answers = answer_all(g, choose_cq_args(g, meta, features))
    (out / "answers.txt").write_text(format_answers(answers, bool(recordings)), encoding="utf-8")
    written += [out / "graph.ttl", out / "answers.txt"]
    if cfg.figures:
        symbolic = chroma_from_score(score, score_tempo(score, cfg), cfg.hop / 22050)
        written.append(plotting.plot_chromagram(symbolic, out / "figures" / "chroma_score.png", "score chroma"))
        written.append(plotting.plot_key_profile(pitch_class_histogram(score),
                                                 key_correlations(pitch_class_histogram(score)),
                                                 out / "figures" / "key_profile.png",
                                                 features.key.label if features.key else ""))
    log.info("wrote %d files to %s", len(written), out)
    return {"score": score, "meta": meta, "features": features, "recordings": recordings,
            "graph": g, "answers": answers, "files": written}
