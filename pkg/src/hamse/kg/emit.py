"""
Materialize works, scores, extracted features, alignments, structure and
emotion tags as triples.

IRIs are minted deterministically under ``<base>/<work-id>/...`` (see
:class:`Minter`), so re-emitting the same inputs gives the same graph.
"""
from __future__ import annotations

import os
import re
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from ..align import AlignmentMap
from ..emotion import EmotionTag
from ..harmony import ChordProgression, ChordSlice
from ..patterns import PatternOccurrenceSet
from ..score import Accidental, Position, Score, position_from_abs
from ..structure import Segment
from .rdf import IRI, RDF_TYPE, Literal, TripleGraph
from .vocab import FRBR, HAMSE, MO, NOTE_CLASSES, PREFIXES, RDFS, TL, schema_graph

__all__ = [
    "DEFAULT_BASE",
    "base_iri",
    "Minter",
    "Performance",
    "RecordingInfo",
    "WorkMetadata",
    "FeatureOccurrence",
    "features_from_patterns",
    "features_from_chords",
    "features_from_progressions",
    "emit_work",
    "emit_score",
    "emit_features",
    "emit_alignment",
    "emit_segments",
    "emit_emotion",
]

DEFAULT_BASE = "http://example.org/hamse"


def base_iri() -> str:
    """Base for minted IRIs; ``HAMSE_BASE_IRI`` overrides the default."""
    return os.environ.get("HAMSE_BASE_IRI", DEFAULT_BASE).rstrip("/")


def slug(text: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-").lower()
    return s or "x"


class Minter:
    """Deterministic IRIs for one work."""

    def __init__(self, work_id: str, base: Optional[str] = None):
        self.base = IRI(base or base_iri())
        self.work_id = slug(work_id)

    @property
    def work(self) -> IRI:
        return self.base / self.work_id

    def agent(self, name: str) -> IRI:
        return self.base / "agent" / slug(name)

    def accidental(self, acc: Accidental) -> IRI:
        return self.base / "accidental" / acc.name.lower().replace("_", "-")

    def movement(self, k: int) -> IRI:
        return self.work / "movement" / k

    def rep(self, n: int = 1) -> IRI:
        return self.work / "rep" / n

    def part(self, n: int, k: int) -> IRI:
        return self.rep(n) / "part" / k

    def voice(self, n: int, k: int, v: int) -> IRI:
        return self.part(n, k) / "voice" / v

    def event(self, n: int, k: int, v: int, e: int) -> IRI:
        return self.voice(n, k, v) / "event" / e

    def recording(self, rec_id: str) -> IRI:
        return self.work / "recording" / slug(rec_id)

    def signal(self, rec_id: str, kind: str = "digital") -> IRI:
        return self.recording(rec_id) / "signal" / kind

    def feature(self, n: int, feature_class: str, k: int) -> IRI:
        return self.rep(n) / "feature" / slug(feature_class) / k


@dataclass(frozen=True)
class Performance:
    instruments: tuple[str, ...] = ()
    musicians: tuple[str, ...] = ()


@dataclass(frozen=True)
class RecordingInfo:
    rec_id: str
    signals: tuple[str, ...] = ("digital",)
    duration_s: Optional[float] = None

    def __post_init__(self):
        if not self.signals or any(s not in ("digital", "analog") for s in self.signals):
            raise ValueError(f"signal kinds must be 'digital' and/or 'analog', got {self.signals}")

    @property
    def primary_signal(self) -> str:
        return "digital" if "digital" in self.signals else "analog"


@dataclass(frozen=True)
class WorkMetadata:
    work_id: str
    title: str
    composer_name: str
    movement_count: int = 1
    score_movement: Optional[int] = None
    genre: Optional[str] = None
    key_label: Optional[str] = None
    arrangement: Optional[str] = None
    performance: Optional[Performance] = None
    recordings: tuple[RecordingInfo, ...] = ()
    published_score: bool = False
    base: Optional[str] = None

    def __post_init__(self):
        if self.movement_count < 1:
            raise ValueError("movement_count must be positive")
        mvt = self.score_movement if self.score_movement is not None else self.movement_count
        if not 1 <= mvt <= self.movement_count:
            raise ValueError(f"score movement {mvt} outside 1..{self.movement_count}")
        object.__setattr__(self, "score_movement", mvt)
        object.__setattr__(self, "recordings", tuple(self.recordings))
        ids = [slug(r.rec_id) for r in self.recordings]
        if len(set(ids)) != len(ids):
            raise ValueError("recording ids must be unique")

    @property
    def minter(self) -> Minter:
        return Minter(self.work_id, self.base)

    @property
    def work_iri(self) -> IRI:
        return self.minter.work

    @property
    def movement_iris(self) -> list[IRI]:
        return [self.minter.movement(k) for k in range(1, self.movement_count + 1)]

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorkMetadata":
        perf = data.get("performance")
        recs = []
        for r in data.get("recordings", ()):
            sig = r.get("signal", "digital")
            sig = (sig,) if isinstance(sig, str) else tuple(sig)
            recs.append(RecordingInfo(r["id"], sig, r.get("duration_s")))
        return cls(
            work_id=data["work_id"],
            title=data.get("title", data["work_id"]),
            composer_name=data["composer"],
            movement_count=int(data.get("movements", 1)),
            score_movement=data.get("score_movement"),
            genre=data.get("genre"),
            key_label=data.get("key"),
            arrangement=data.get("arrangement"),
            performance=Performance(tuple(perf.get("instruments", ())),
                                    tuple(perf.get("musicians", ()))) if perf else None,
            recordings=tuple(recs),
            published_score=bool(data.get("published_score", False)),
            base=data.get("base_iri"),
        )


def _graph() -> TripleGraph:
    return TripleGraph(namespaces=PREFIXES)


def _named(g, node, cls, label):
    g.add(node, RDF_TYPE, cls)
    g.add(node, RDFS.label, Literal(label))


def emit_work(meta: WorkMetadata) -> TripleGraph:
    """Editorial layer: work, composition, composer, movements, genre, key,
    arrangement, performance, recordings and their signals."""
    m = meta.minter
    g = schema_graph()
    work = m.work
    _named(g, work, MO.MusicalWork, meta.title)
    composition = work / "composition"
    composer = m.agent(meta.composer_name)
    g.add(composition, RDF_TYPE, MO.Composition)
    g.add(composition, MO.produced_work, work)
    g.add(composition, MO.composer, composer)
    _named(g, composer, FRBR.Agent, meta.composer_name)
    score_node = work / "score"
    g.add(composition, MO.produced_score, score_node)
    g.add(score_node, RDF_TYPE, MO.PublishedScore if meta.published_score else MO.Score)
    for k, mvt in enumerate(meta.movement_iris, start=1):
        g.add(work, MO.movement, mvt)
        g.add(mvt, RDF_TYPE, MO.Movement)
        g.add(mvt, MO.movementNum, Literal.of(k))
    if meta.genre:
        g.add(work, MO.genre, work / "genre")
        _named(g, work / "genre", MO.Genre, meta.genre)
    if meta.key_label:
        g.add(work, MO.key, work / "key")
        _named(g, work / "key", MO.Key, meta.key_label)
    if meta.arrangement:
        arr = work / "arrangement"
        _named(g, arr, MO.Arrangement, meta.arrangement)
        g.add(arr, MO.arrangement_of, work)
    perf = None
    # recordings hang off a performance; an anonymous one is made when none is given
    performance = meta.performance or (Performance() if meta.recordings else None)
    if performance is not None:
        perf = work / "performance"
        g.add(perf, RDF_TYPE, MO.Performance)
        g.add(perf, MO.performance_of, work)
        for i, name in enumerate(performance.instruments, start=1):
            node = perf / "instrument" / i
            g.add(perf, MO.instrument, node)
            _named(g, node, MO.Instrument, name)
        for i, name in enumerate(performance.musicians, start=1):
            node = m.agent(name)
            g.add(perf, MO.performer, node)
            _named(g, node, MO.MusicArtist, name)
    for rec in meta.recordings:
        rec_node = m.recording(rec.rec_id)
        _named(g, rec_node, MO.Recording, rec.rec_id)
        if perf is not None:
            sound = rec_node / "sound"
            g.add(sound, RDF_TYPE, MO.Sound)
            g.add(perf, MO.produced_sound, sound)
            g.add(rec_node, MO.records, sound)
        for kind in rec.signals:
            sig = m.signal(rec.rec_id, kind)
            g.add(rec_node, MO.produced_signal, sig)
            g.add(sig, RDF_TYPE, MO.DigitalSignal if kind == "digital" else MO.AnalogSignal)
        if len(rec.signals) == 2:
            g.add(m.signal(rec.rec_id, "digital"), MO.sampled_version_of, m.signal(rec.rec_id, "analog"))
        primary = m.signal(rec.rec_id, rec.primary_signal)
        timeline = rec_node / "timeline"
        g.add(timeline, RDF_TYPE, TL.DiscreteTimeLine)
        g.add(primary, TL.timeline, timeline)
        if rec.duration_s is not None:
            extent = rec_node / "extent"
            g.add(primary, MO.time, extent)
            _interval(g, extent, TL.Interval, timeline, 0.0, float(rec.duration_s))
    return g


def _interval(g, node, cls, timeline, start, end=None, duration=None):
    g.add(node, RDF_TYPE, cls)
    g.add(node, TL.onTimeLine, timeline)
    g.add(node, TL.beginsAt, Literal.of(start))
    if end is not None:
        g.add(node, TL.endsAt, Literal.of(end))
    if duration is not None:
        g.add(node, TL.duration, Literal.of(duration))


def emit_score(score: Score, meta: WorkMetadata, rep: int = 1) -> TripleGraph:
    """Symbolic layer: representation, parts, sections, voices, events,
    bars, and the abstract timeline they are placed on."""
    m = meta.minter
    g = schema_graph()
    rep_node = m.rep(rep)
    timeline = rep_node / "timeline"
    g.add(m.movement(meta.score_movement), HAMSE.hasSymbolicRepresentation, rep_node)
    g.add(rep_node, RDF_TYPE, HAMSE.SymbolicRepresentation)
    g.add(rep_node, TL.timeline, timeline)
    g.add(timeline, RDF_TYPE, TL.AbstractTimeLine)
    if score.title:
        g.add(rep_node, HAMSE.hasTitle, Literal(score.title))
    for k, part in enumerate(score.parts, start=1):
        pnode = m.part(rep, k)
        g.add(rep_node, HAMSE.hasPart, pnode)
        _named(g, pnode, HAMSE.Part, part.name)
        g.add(pnode, HAMSE.hasMidiProgram, Literal.of(part.midi_program))
        g.add(pnode, HAMSE.hasStaff, Literal.of(part.staff))
        for s, sec in enumerate(part.sections, start=1):
            snode = pnode / "section" / s
            g.add(pnode, HAMSE.hasSection, snode)
            g.add(snode, RDF_TYPE, HAMSE.Section)
            g.add(snode, HAMSE.hasStartBar, Literal.of(sec.start_bar))
            g.add(snode, HAMSE.hasMetre, Literal(f"{sec.metre[0]}/{sec.metre[1]}"))
            g.add(snode, HAMSE.hasClef, Literal(sec.clef))
        for voice in part.voices:
            vnode = m.voice(rep, k, voice.index)
            g.add(pnode, HAMSE.hasVoice, vnode)
            g.add(vnode, RDF_TYPE, HAMSE.Voice)
            g.add(vnode, HAMSE.hasVoiceIndex, Literal.of(voice.index))
            for e_idx, ev in enumerate(voice.events, start=1):
                enode = m.event(rep, k, voice.index, e_idx)
                g.add(vnode, HAMSE.hasEvent, enode)
                g.add(pnode, HAMSE.hasEvent, enode)
                if ev.is_rest:
                    g.add(enode, RDF_TYPE, HAMSE.Rest)
                else:
                    g.add(enode, RDF_TYPE, NOTE_CLASSES[ev.kind.value])
                    g.add(enode, HAMSE.hasMidiPitch, Literal.of(ev.midi_pitch))
                    g.add(enode, HAMSE.hasOctave, Literal.of(ev.octave))
                    g.add(enode, HAMSE.hasStaff, Literal.of(part.staff))
                    if ev.accidental is not Accidental.NONE:
                        acc = m.accidental(ev.accidental)
                        g.add(enode, HAMSE.hasAccidental, acc)
                        _named(g, acc, HAMSE.Accidental, ev.accidental.name.lower().replace("_", " "))
                if ev.dynamic is not None:
                    dnode = enode / "dynamic"
                    g.add(enode, HAMSE.hasDynamic, dnode)
                    g.add(dnode, RDF_TYPE, HAMSE.Dynamic)
                    if ev.dynamic.literal is not None:
                        g.add(dnode, HAMSE.hasLiteralDynamic, Literal(ev.dynamic.literal))
                    if ev.dynamic.midi_velocity is not None:
                        g.add(dnode, HAMSE.hasMidiVelocity, Literal.of(ev.dynamic.midi_velocity))
                pos = enode / "position"
                g.add(enode, HAMSE.hasPosition, pos)
                g.add(pos, RDF_TYPE, HAMSE.Position)
                g.add(pos, HAMSE.hasBar, Literal.of(ev.position.bar))
                g.add(pos, HAMSE.hasBeat, Literal.of(Fraction(ev.position.beat)))
                g.add(pos, HAMSE.hasInterval, enode / "interval")
                _interval(g, enode / "interval", TL.AbstractInterval, timeline,
                          Fraction(ev.onset), duration=Fraction(ev.duration_beats))
    for bar, start, end in _bars(score):
        bnode = rep_node / "bar" / bar
        _interval(g, bnode, TL.AbstractInterval, timeline, start, duration=end - start)
        g.add(bnode, HAMSE.hasBar, Literal.of(bar))
    return g


def _bars(score: Score):
    """``(bar, start_beats, end_beats)`` for every bar up to the score end."""
    end = score.end_beats
    out = []
    if end <= 0:
        return out
    sections = score.sections
    pos = position_from_abs(0, sections)
    bar = pos.bar
    from ..score import abs_beats_of
    start = abs_beats_of(bar, 0, sections)
    while start < end:
        nxt = abs_beats_of(bar + 1, 0, sections)
        out.append((bar, start, nxt))
        bar, start = bar + 1, nxt
    return out


@dataclass(frozen=True)
class FeatureOccurrence:
    """One extracted feature and the score spans ``(start, end_beats)`` where it occurs."""

    feature_class: str
    label: str
    spans: tuple[tuple[Position, Fraction], ...]
    include_rests: Optional[bool] = None
    length: Optional[int] = None


def features_from_patterns(sets: Iterable[PatternOccurrenceSet]) -> list[FeatureOccurrence]:
    return [FeatureOccurrence(s.kind.feature_class, s.text,
                              tuple((o.start, o.end.abs_beats) for o in s.occurrences),
                              s.kind.include_rests, s.length)
            for s in sets]


def features_from_chords(slices: Sequence[ChordSlice]) -> list[FeatureOccurrence]:
    """One ``Chord`` feature per distinct label, in order of first appearance."""
    groups = OrderedDict()
    for s in slices:
        if s.is_rest:
            continue
        groups.setdefault(s.label, []).append((s.onset, s.offset_beats))
    return [FeatureOccurrence("Chord", label, tuple(spans)) for label, spans in groups.items()]


def features_from_progressions(progs: Sequence[ChordProgression]) -> list[FeatureOccurrence]:
    return [FeatureOccurrence("ChordProgression", p.text, tuple(zip(p.occurrences, p.ends)),
                              None, len(p.labels))
            for p in progs]


def emit_features(features: Sequence[FeatureOccurrence], meta: WorkMetadata, rep: int = 1,
                  aligns: Optional[Mapping[str, AlignmentMap]] = None) -> TripleGraph:
    """Feature resources with one abstract interval per occurrence; with
    alignments, each interval also gets a seconds interval per recording."""
    m = meta.minter
    g = _graph()
    rep_node = m.rep(rep)
    timeline = rep_node / "timeline"
    counters = {}
    for feat in features:
        k = counters[feat.feature_class] = counters.get(feat.feature_class, 0) + 1
        fnode = m.feature(rep, feat.feature_class, k)
        g.add(rep_node, HAMSE.hasFeature, fnode)
        _named(g, fnode, HAMSE[feat.feature_class], feat.label)
        if feat.include_rests is not None:
            g.add(fnode, HAMSE.includesRests, Literal.of(feat.include_rests))
        if feat.length is not None:
            g.add(fnode, HAMSE.hasPatternLength, Literal.of(feat.length))
        for j, (start, end) in enumerate(feat.spans, start=1):
            inode = fnode / "occurrence" / j
            g.add(fnode, HAMSE.occursIn, inode)
            _interval(g, inode, TL.AbstractInterval, timeline, Fraction(start.abs_beats),
                      duration=Fraction(end) - Fraction(start.abs_beats))
            for rec_id, align in sorted((aligns or {}).items()):
                _aligned(g, m, inode, rec_id, align, start.abs_beats, end)
    return g


def _aligned(g, m, inode, rec_id, align, start_beats, end_beats):
    rec = m.recording(rec_id)
    dnode = inode / "in" / slug(rec_id)
    start = align.beats_to_seconds(start_beats)
    end = max(start, align.beats_to_seconds(end_beats))
    _interval(g, dnode, TL.Interval, rec / "timeline", start, end=end)
    g.add(inode, HAMSE.hasAlignedInterval, dnode)
    g.add(dnode, HAMSE.alignedBy, m.rep(_rep_of(inode)) / "map" / slug(rec_id))


def _rep_of(node: IRI) -> int:
    return int(re.search(r"/rep/(\d+)/", node.value + "/").group(1))


def emit_alignment(score: Score, meta: WorkMetadata, rec_id: str, align: AlignmentMap,
                   rep: int = 1) -> TripleGraph:
    """TimeLineMap between the score timeline and a recording timeline, plus
    the seconds interval of every bar."""
    m = meta.minter
    g = _graph()
    rep_node = m.rep(rep)
    map_node = rep_node / "map" / slug(rec_id)
    g.add(map_node, RDF_TYPE, TL.TimeLineMap)
    g.add(map_node, TL.domainTimeLine, rep_node / "timeline")
    g.add(map_node, TL.rangeTimeLine, m.recording(rec_id) / "timeline")
    for bar, start, end in _bars(score):
        _aligned(g, m, rep_node / "bar" / bar, rec_id, align, start, end)
    return g


def emit_segments(segments: Sequence[Segment], meta: WorkMetadata, rec_id: str) -> TripleGraph:
    m = meta.minter
    rec = m.recording(rec_id)
    info = {r.rec_id: r for r in meta.recordings}.get(rec_id)
    signal = m.signal(rec_id, info.primary_signal if info else "digital")
    g = _graph()
    for i, seg in enumerate(segments, start=1):
        node = rec / "structure" / i
        g.add(signal, HAMSE.hasFeature, node)
        _named(g, node, HAMSE.Structure, seg.label)
        g.add(node, HAMSE.occursIn, node / "interval")
        _interval(g, node / "interval", TL.Interval, rec / "timeline", seg.start_s, end=seg.end_s)
    return g


def emit_emotion(tag: EmotionTag, meta: WorkMetadata, rec_id: str) -> TripleGraph:
    m = meta.minter
    info = {r.rec_id: r for r in meta.recordings}.get(rec_id)
    signal = m.signal(rec_id, info.primary_signal if info else "digital")
    node = m.recording(rec_id) / "emotion"
    g = _graph()
    g.add(signal, HAMSE.hasFeature, node)
    _named(g, node, HAMSE.Emotion, tag.quadrant)
    g.add(node, HAMSE.hasQuadrant, Literal(tag.quadrant))
    g.add(node, HAMSE.hasValence, Literal.of(float(tag.valence)))
    g.add(node, HAMSE.hasArousal, Literal.of(float(tag.arousal)))
    g.add(node, HAMSE.hasMethod, Literal(tag.method))
    return g
