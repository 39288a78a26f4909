"""
Command line front end.

Exit status is 0 on success, 2 on bad input (missing or malformed files,
invalid options) and 1 on an internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as pl
from .align import dtw
from .audio import chroma_from_score
from .hts import write_hts
from .kg.turtle import serialize_turtle
from .structure import segment, segments_csv

log = logging.getLogger("hamse")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2

# flag dest -> PipelineConfig field
_CONFIG_FIELDS = {
    "score": "score_path",
    "recordings": "recording_paths",
    "output": "output_dir",
    "metadata": "metadata_path",
    "kinds": "pattern_kinds",
    "rests": "rests",
    "n_min": "n_min",
    "n_max": "n_max",
    "min_count": "min_count",
    "frame_len": "frame_len",
    "hop": "hop",
    "tempo": "tempo",
    "kernel_half": "kernel_half",
    "min_distance": "min_distance",
    "label_threshold": "label_threshold",
    "figures": "figures",
    "workers": "workers",
}


def _add_common(p, score=True, recordings=True):
    if score:
        p.add_argument("score", nargs="?", help="score file (.hts, .mid, .midi)")
    if recordings:
        p.add_argument("recordings", nargs="*", help="WAV recordings")
    p.add_argument("-o", "--output", help="output directory (default: hamse-out)")
    p.add_argument("--config", help="JSON file with the same keys as the long options")


def _add_patterns(p):
    g = p.add_argument_group("patterns")
    g.add_argument("--kinds", help="comma-separated pattern kinds: interval,rhythmic,melodic")
    g.add_argument("--rests", choices=("with", "without", "both"))
    g.add_argument("--n-min", type=int, dest="n_min")
    g.add_argument("--n-max", type=int, dest="n_max")
    g.add_argument("--min-count", type=int, dest="min_count")


def _add_audio(p):
    g = p.add_argument_group("audio")
    g.add_argument("--frame-len", type=int, dest="frame_len")
    g.add_argument("--hop", type=int)
    g.add_argument("--tempo", type=float, help="score tempo in bpm (overrides the score)")
    g.add_argument("--kernel-half", type=int, dest="kernel_half")
    g.add_argument("--min-distance", type=int, dest="min_distance")
    g.add_argument("--label-threshold", type=float, dest="label_threshold")
    g.add_argument("--workers", type=int)
    g.add_argument("--no-figures", action="store_false", dest="figures", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamse", description="Analyse a score and its recordings and build a HaMSE knowledge graph.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a score and print a summary")
    p.add_argument("score")
    p.add_argument("--emit-hts", action="store_true", help="print the score as HTS instead")

    p = sub.add_parser("extract", help="mine patterns, chords, progressions, dissonances and key")
    _add_common(p, recordings=False)
    _add_patterns(p)

    p = sub.add_parser("align", help="align recordings to the score")
    _add_common(p)
    _add_audio(p)
    p.add_argument("--self", action="store_true", dest="self_test",
                   help="align the score rendering to itself and check the diagonal")

    p = sub.add_parser("segment", help="segment recordings into labelled sections")
    _add_common(p, score=False)
    _add_audio(p)

    p = sub.add_parser("emotion", help="tag recordings with a circumplex quadrant")
    _add_common(p)
    _add_audio(p)

    for name, text in (("kg", "build the knowledge graph and answer the competency questions"),
                       ("pipeline", "run every stage and write all outputs")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--metadata", help="work metadata JSON sidecar")
        _add_patterns(p)
        _add_audio(p)
    return parser


def make_config(args) -> pl.PipelineConfig:
    """Config file values, overridden by any flag given on the command line."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise pl.InputError(f"{args.config}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise pl.InputError(f"{args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise pl.InputError(f"{args.config}: expected a JSON object")
    for dest, name in _CONFIG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None and value != []:
            data[name] = value
    try:
        return pl.PipelineConfig.from_json(data)
    except TypeError as exc:
        raise pl.InputError(f"bad configuration: {exc}") from None


def _require_score(cfg):
    if not cfg.score_path:
        raise pl.InputError("a score file is required")
    return pl.load_score(cfg.score_path)


def _require_recordings(cfg):
    if not cfg.recording_paths:
        raise pl.InputError("at least one recording is required")
    for p in cfg.recording_paths:
        if not Path(p).is_file():
            raise pl.InputError(f"{p}: no such file")


def cmd_parse(args, out):
    score = pl.load_score(args.score)
    if args.emit_hts:
        out.write(write_hts(score))
        return
    out.write(f"work {score.work_ref}\n")
    if score.title:
        out.write(f"title {score.title}\n")
    out.write(f"parts {len(score.parts)}\n")
    for part in score.parts:
        for voice in part.voices:
            out.write(f"  {part.name} voice {voice.index}: {len(voice.events)} events\n")
    out.write(f"events {score.n_events}\n")
    out.write(f"length {score.end_beats} beats\n")


def cmd_extract(args, out):
    cfg = make_config(args)
    score = _require_score(cfg)
    features = pl.extract_features(score, cfg)
    for path in pl.write_features(Path(cfg.output_dir), features):
        out.write(f"{path}\n")
    if features.key is not None:
        out.write(f"key {features.key.label} ({features.key.correlation:.4f})\n")


def cmd_align(args, out):
    cfg = make_config(args)
    score = _require_score(cfg)
    outdir = Path(cfg.output_dir)
    if args.self_test:
        tempo = pl.score_tempo(score, cfg)
        chroma = chroma_from_score(score, tempo, cfg.hop / 22050)
        align = dtw(chroma, chroma, "self")
        diagonal = all(a == s for a, s in align.path)
        out.write(f"self-alignment frames {chroma.n_frames} total_cost {align.total_cost:.6f} "
                  f"diagonal {'yes' if diagonal else 'no'}\n")
        if not diagonal or align.total_cost != 0:
            raise RuntimeError("self-alignment is not the zero-cost diagonal")
        return
    _require_recordings(cfg)
    features = pl.Features([], [], [], [], None)
    recs = pl.analyse_recordings(score, features, cfg.recording_paths, cfg)
    for path in pl.write_recordings(outdir, recs, cfg.figures, segments=False, emotion=False):
        out.write(f"{path}\n")
    for r in recs:
        out.write(f"{r.rec_id} total_cost {r.align.total_cost:.6f}\n")


def cmd_segment(args, out):
    cfg = make_config(args)
    _require_recordings(cfg)
    from .audio import chroma_from_audio
    from . import plotting
    outdir = Path(cfg.output_dir)
    for p in sorted(cfg.recording_paths, key=lambda p: Path(p).stem):
        clip = pl.load_recording(p)
        chroma = chroma_from_audio(clip, cfg.frame_len, cfg.hop)
        if chroma.n_frames <= 2 * cfg.kernel_half:
            raise pl.InputError(f"{p}: too short to segment ({chroma.n_frames} frames)")
        segs, S, nov = segment(chroma, clip.duration_s, cfg.kernel_half, cfg.min_distance, cfg.label_threshold)
        rec_id = Path(p).stem
        target = outdir / "segments" / f"{rec_id}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(segments_csv(segs), encoding="utf-8")
        out.write(f"{target}\n")
        if cfg.figures:
            fig = plotting.plot_structure(S, nov, segs, chroma.hop_s, outdir / "figures" / f"structure_{rec_id}.png")
            out.write(f"{fig}\n")
        out.write(f"{rec_id} form {''.join(s.label for s in segs)}\n")


def cmd_emotion(args, out):
    cfg = make_config(args)
    score = _require_score(cfg)
    _require_recordings(cfg)
    features = pl.extract_features(score, cfg)
    recs = pl.analyse_recordings(score, features, cfg.recording_paths, cfg)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "emotion.csv").write_text(pl.emotion_csv(recs), encoding="utf-8")
    out.write(f"{outdir / 'emotion.csv'}\n")
    for r in recs:
        out.write(f"{r.rec_id} {r.emotion.quadrant}\n")


def cmd_kg(args, out):
    cfg = make_config(args)
    score = _require_score(cfg)
    if cfg.recording_paths:
        _require_recordings(cfg)
    meta = pl.load_metadata(cfg.metadata_path, score)
    features = pl.extract_features(score, cfg)
    recs = pl.analyse_recordings(score, features, cfg.recording_paths, cfg)
    meta = pl.complete_metadata(meta, features, recs)
    g = pl.build_graph(score, meta, features, recs)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "graph.ttl").write_text(serialize_turtle(g), encoding="utf-8")
    answers = pl.answer_all(g, pl.choose_cq_args(g, meta, features))
    (outdir / "answers.txt").write_text(pl.format_answers(answers, bool(recs)), encoding="utf-8")
    out.write(f"{outdir / 'graph.ttl'}\n{outdir / 'answers.txt'}\n")
    out.write(f"triples {len(g)}; answered {sum(1 for *_, rows in answers if rows)}/{len(answers)}\n")


def cmd_pipeline(args, out):
    cfg = make_config(args)
    if cfg.recording_paths:
        _require_recordings(cfg)
    result = pl.run_pipeline(cfg)
    for path in result["files"]:
        out.write(f"{path}\n")
    answered = sum(1 for *_, rows in result["answers"] if rows)
    out.write(f"triples {len(result['graph'])}; answered {answered}/{len(result['answers'])}\n")


COMMANDS = {
    "parse": cmd_parse,
    "extract": cmd_extract,
    "align": cmd_align,
    "segment": cmd_segment,
    "emotion": cmd_emotion,
    "kg": cmd_kg,
    "pipeline": cmd_pipeline,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args, out)
    except pl.InputError as exc:
        print(f"hamse: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.debug("internal error", exc_info=True)
        print(f"hamse: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
