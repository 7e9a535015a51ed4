"""Command-line entry point.

Subcommands: synth, corpus, lm-train, score, features, train-detector,
detect, eval-matrix, watermark-gen, watermark-detect, pool-build, collide.

Exit codes: 0 success, 1 user/input error (message names the offending
input), 2 internal failure. One global ``--seed`` reproduces everything:
each stage draws from splitmix64(seed XOR hash(stage name)), and every
artifact embeds (toolkit version, seed, parameter echo) metadata.

A ``--config`` file of ``key=value`` lines supplies flag defaults;
explicit flags win.
"""

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import __version__, collider, corpus, features, gbm, matrix, reflm, synth, watermark
from .errors import InvalidInputError, ToolkitError
from .evaluation import auc
from .fileio import make_meta, write_csv
from .rng import derive_seed


class _UsageError(ToolkitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # unknown flags are user errors (exit 1), not argparse's 2
        raise _UsageError(message)


def _require_file(path, what="input"):
    p = Path(path)
    if not p.is_file():
        raise InvalidInputError(f"{what} file does not exist: {path}")
    return p


def _parse_counts(spec):
    parts = spec.split(",")
    if len(parts) != 4:
        raise InvalidInputError(
            f"counts must be four comma-separated integers "
            f"(human_test,ai_test,ai_train,human_train), got \"{spec}\""
        )
    try:
        return corpus.SplitCounts(*(int(x) for x in parts))
    except ValueError as exc:
        raise InvalidInputError(f"bad counts \"{spec}\": {exc}") from exc


def _parse_grid(spec):
    """Grid DSL: semicolon-separated configs of key=value pairs, e.g.
    "rounds=100,depth=2,lr=0.1;rounds=300,depth=3,lr=0.05"."""
    if not spec:
        return gbm.DEFAULT_GRID
    keymap = {"rounds": "n_rounds", "depth": "max_depth", "lr": "learning_rate", "lambda": "reg_lambda"}
    grid = []
    for part in spec.split(";"):
        kwargs = {}
        for kv in part.split(","):
            if "=" not in kv:
                raise InvalidInputError(f"bad grid entry \"{kv}\" (expected key=value)")
            key, val = kv.split("=", 1)
            key = keymap.get(key.strip(), key.strip())
            try:
                kwargs[key] = int(val) if key in ("n_rounds", "max_depth", "min_leaf") else float(val)
            except ValueError as exc:
                raise InvalidInputError(f"bad grid value \"{kv}\"") from exc
        try:
            grid.append(gbm.Hyperparams(**kwargs))
        except TypeError as exc:
            raise InvalidInputError(f"unknown grid key in \"{part}\": {exc}") from exc
    return tuple(grid)


def _corpus_labels(path):
    essays = corpus.load_corpus(path)
    return essays, {e.id: (0 if e.source == corpus.HUMAN_SOURCE else 1) for e in essays}


def _load_backend(args):
    if getattr(args, "scored", None):
        scored = reflm.load_scored(_require_file(args.scored, "scored tokens"))
        return {s.essay_id: s for s in scored}
    model_path = getattr(args, "lm", None)
    if not model_path:
        raise InvalidInputError("need --lm MODEL or --scored FILE")
    return reflm.load_model(_require_file(model_path, "language model"))


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_synth(args):
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    essays = synth.build_corpus(
        seed=derive_seed(args.seed, "synth"),
        essays_per_source=args.essays_per_source,
        gen_k=args.gen_k,
    )
    meta = make_meta(seed=args.seed, params={"essays_per_source": args.essays_per_source, "gen_k": args.gen_k})
    corpus.save_corpus(out, essays, meta=meta)
    print(f"wrote {len(essays)} essays to {out}")
    return 0


def _cmd_corpus(args):
    essays = corpus.load_corpus(_require_file(args.input, "corpus"))
    stats = corpus.corpus_stats(essays)
    print(f"{len(essays)} essays, {len(stats)} sources")
    for src in sorted(stats):
        row = stats[src]
        prompts = ", ".join(f"{p}:{c}" for p, c in sorted(row["prompts"].items()))
        print(
            f"  {src:12s} n={row['count']:5d}  mean_tokens={row['mean_tokens']:7.1f}  "
            f"mean_sentences={row['mean_sentences']:5.1f}  prompts[{prompts}]"
        )
    if args.split:
        counts = _parse_counts(args.counts)
        plan = corpus.make_split(essays, counts, seed=derive_seed(args.seed, "corpus-split"))
        corpus.save_split(args.split, plan, meta=make_meta(seed=args.seed, params={"counts": args.counts}))
        print(f"wrote split plan to {args.split}")
    return 0


def _cmd_lm_train(args):
    if args.bundled:
        if args.bundled == "all":
            model = synth.reference_model(order=args.order, k=args.k)
        else:
            if args.bundled not in synth.BUNDLED:
                raise InvalidInputError(
                    f"unknown bundled corpus \"{args.bundled}\" (have: {', '.join(synth.BUNDLED)}, all)"
                )
            model = reflm.train_lm_from_text(
                synth.bundled_text(args.bundled), order=args.order, k=args.k,
                trained_on=f"bundled:{args.bundled}",
            )
    else:
        if not args.input:
            raise InvalidInputError("need --input CORPUS or --bundled NAME")
        essays = corpus.load_corpus(_require_file(args.input, "corpus"))
        model = reflm.train_lm(essays, order=args.order, k=args.k, trained_on=Path(args.input).name)
    reflm.save_model(args.out, model, meta=make_meta(seed=args.seed, params={"order": args.order, "k": args.k}))
    print(f"trained {model.descriptor}: vocabulary {model.vocab_size} -> {args.out}")
    return 0


def _cmd_score(args):
    model = reflm.load_model(_require_file(args.lm, "language model"))
    essays = corpus.load_corpus(_require_file(args.input, "corpus"))
    scored = [reflm.score_essay(model, e) for e in essays]
    reflm.save_scored(args.out, scored, meta=make_meta(seed=args.seed, params={"lm": model.descriptor}))
    print(f"scored {len(scored)} essays -> {args.out}")
    return 0


def _cmd_features(args):
    scored = reflm.load_scored(_require_file(args.scored, "scored tokens"))
    labels = {}
    if args.corpus:
        _, labels = _corpus_labels(_require_file(args.corpus, "corpus"))
    vectors = []
    single_sentence = []
    for s in scored:
        prof = features.profile(s)
        if len(prof.sentence_ppls) == 1:
            single_sentence.append(s.essay_id)
        vectors.append(features.featurize(prof, label=labels.get(s.essay_id)))
    meta = make_meta(
        seed=args.seed,
        params={
            "percentile": "linear interpolation, h = p*(n-1)",
            "single_sentence_essays": single_sentence,
        },
    )
    features.save_feature_table(args.out, vectors, meta=meta)
    print(f"wrote {len(vectors)} feature rows -> {args.out}")
    return 0


def _cmd_train_detector(args):
    vectors, _ = features.load_feature_table(_require_file(args.features, "feature table"))
    labeled = [v for v in vectors if v.label is not None]
    if len(labeled) < len(vectors):
        raise InvalidInputError(f"{args.features}: {len(vectors) - len(labeled)} rows have no label")
    grid = _parse_grid(args.grid)
    model = gbm.train_detector(labeled, grid=grid, folds=args.folds, seed=derive_seed(args.seed, "gbm-cv"))
    gbm.save_model(
        args.out, model,
        meta=make_meta(seed=args.seed, params={"folds": args.folds, "grid": [hp.to_dict() for hp in grid]}),
    )
    best = model.hyperparams
    mean_auc = max(r["mean_auc"] for r in model.cv_report)
    print(
        f"selected rounds={best.n_rounds} depth={best.max_depth} lr={best.learning_rate} "
        f"(mean CV AUC {mean_auc:.3f}) -> {args.out}"
    )
    return 0


def _cmd_detect(args):
    model = gbm.load_model(_require_file(args.model, "detector model"))
    vectors, _ = features.load_feature_table(_require_file(args.features, "feature table"))
    probs = gbm.predict(model, vectors)
    rows = [(v.essay_id, float(p), v.label) for v, p in zip(vectors, probs)]
    write_csv(
        args.out,
        ("essay_id", "prob_ai", "label"),
        rows,
        meta=make_meta(seed=args.seed, params={"model": Path(args.model).name}),
    )
    labeled = [(p, v.label) for v, p in zip(vectors, probs) if v.label is not None]
    msg = f"scored {len(rows)} essays -> {args.out}"
    if labeled and len({l for _, l in labeled}) == 2:
        msg += f"  (AUC {auc([p for p, _ in labeled], [l for _, l in labeled]):.3f})"
    print(msg)
    return 0


def _cmd_eval_matrix(args):
    essays = corpus.load_corpus(_require_file(args.corpus, "corpus"))
    backend = _load_backend(args)
    counts = _parse_counts(args.counts)
    plan = corpus.make_split(essays, counts, seed=derive_seed(args.seed, "corpus-split"))
    m = matrix.cross_matrix(
        essays, plan, backend,
        grid=_parse_grid(args.grid), folds=args.folds,
        seed=derive_seed(args.seed, "matrix"), jobs=args.jobs,
    )
    m.metadata["seed"] = args.seed  # echo the global seed, not the derived module seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix.save_matrix_csv(out / "matrix.csv", m)
    matrix.save_matrix_meta(out / "matrix.meta.json", m)
    matrix.write_heatmap_svg(out / "matrix.svg", m)
    corpus.save_split(out / "split.json", plan, meta=make_meta(seed=args.seed, params={"counts": args.counts}))
    print(f"wrote {len(m.train_sources)}x{len(m.test_sources)} matrix to {out}")
    for name, row in zip(m.train_sources, m.cells):
        print(f"  {name:12s} " + "  ".join(f"{v:.3f}" for v in row))
    return 0


def _cmd_watermark_gen(args):
    model = reflm.load_model(_require_file(args.lm, "language model"))
    config = watermark.WatermarkConfig(key=args.key, gamma=args.gamma, delta=args.delta)
    essays = []
    for i in range(args.count):
        stream = watermark.generate_watermarked(
            model, config, args.length, seed=derive_seed(args.seed, f"watermark-gen:{i}")
        )
        essays.append(
            corpus.Essay(
                id=f"wm-{i:04d}", prompt_id="wm", source="watermarked", text=watermark.render_text(stream)
            )
        )
    meta = make_meta(
        seed=args.seed,
        params={"key": args.key, "gamma": args.gamma, "delta": args.delta, "length": args.length},
    )
    corpus.save_corpus(args.out, essays, meta=meta)
    print(f"generated {len(essays)} watermarked essays -> {args.out}")
    return 0


def _cmd_watermark_detect(args):
    config = watermark.WatermarkConfig(
        key=args.key, gamma=args.gamma, delta=0.0, z_threshold=args.z_threshold
    )
    essays = corpus.load_corpus(_require_file(args.input, "corpus"))
    items = []
    for e in essays:
        try:
            stream = reflm.tokenize_and_segment(e.text)
            items.append((e.id, watermark.detect_watermark(stream, config)))
        except ToolkitError as exc:
            raise type(exc)(f"essay \"{e.id}\": {exc}") from exc
    meta = make_meta(
        seed=args.seed,
        params={"key": args.key, "gamma": args.gamma, "z_threshold": args.z_threshold},
    )
    watermark.save_verdicts(args.out, items, meta=meta)
    flagged = sum(1 for _, v in items if v.flagged)
    print(f"tested {len(items)} essays, flagged {flagged} -> {args.out}")
    return 0


def _cmd_pool_build(args):
    essays = corpus.load_corpus(_require_file(args.corpus, "corpus"))
    if args.prompt:
        essays = [e for e in essays if e.prompt_id == args.prompt]
        if not essays:
            raise InvalidInputError(f"no essays with prompt \"{args.prompt}\" in {args.corpus}")
    pool = collider.build_pool(essays, k=args.k)
    collider.save_pool(args.out, pool, meta=make_meta(seed=args.seed, params={"k": args.k}))
    print(f"indexed {len(pool.entries)} essays ({len(pool.postings)} fingerprints) -> {args.out}")
    return 0


def _cmd_collide(args):
    pool = collider.load_pool(_require_file(args.pool, "pool index"))
    submissions = corpus.load_corpus(_require_file(args.input, "submissions"))
    params = collider.ScanParams(min_span=args.min_span, min_fingerprints=args.min_fingerprints)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rendered = []
    for e in submissions:
        matches = collider.scan(e, pool, params=params)
        report = collider.overlap_report(matches, e, pool)
        collider.save_report(
            out / f"report-{e.id}.json", report,
            meta=make_meta(seed=args.seed, params={"min_span": args.min_span}),
        )
        rendered.append(collider.render_report(report))
        print(
            f"  {e.id}: {len(matches)} match(es), {report.covered_fraction:.1%} of tokens covered"
        )
    if args.render:
        Path(args.render).write_text("\n".join(rendered), encoding="utf-8")
    print(f"wrote {len(submissions)} report(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly

def build_parser():
    parser = _Parser(prog="essaydetect", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"essaydetect {__version__}")
    parser.add_argument("--seed", type=int, default=42, help="global seed (default 42)")
    parser.add_argument(
        "--jobs", type=int, default=os.cpu_count() or 1,
        help="worker-process cap for the matrix experiment (default: logical cores; results do not depend on it)",
    )
    parser.add_argument("--config", default=None, help="key=value file of flag defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", parents=[], help="build the synthetic multi-source corpus")
    p.add_argument("--out", required=True, help="corpus output path (.jsonl)")
    p.add_argument("--essays-per-source", type=int, default=200)
    p.add_argument("--gen-k", type=float, default=synth.DEFAULT_GEN_K)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("corpus", help="validate a corpus, print stats, optionally split")
    p.add_argument("--input", required=True)
    p.add_argument("--split", default=None, help="write a split plan here")
    p.add_argument("--counts", default="100,100,300,100", help="human_test,ai_test,ai_train,human_train")
    p.set_defaults(func=_cmd_corpus)

    p = sub.add_parser("lm-train", help="train the n-gram reference model")
    p.add_argument("--input", default=None, help="corpus to train on")
    p.add_argument("--bundled", default=None, help="bundled text name or \"all\"")
    p.add_argument("--order", type=int, default=synth.DEFAULT_REF_ORDER)
    p.add_argument("--k", type=float, default=synth.DEFAULT_REF_K)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lm_train)

    p = sub.add_parser("score", help="score a corpus with a reference model")
    p.add_argument("--lm", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("features", help="scored tokens -> feature table")
    p.add_argument("--scored", required=True)
    p.add_argument("--corpus", default=None, help="corpus supplying labels (human=0, else 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train-detector", help="cross-validate and fit the boosted-tree detector")
    p.add_argument("--features", required=True)
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--grid", default="", help="rounds=..,depth=..,lr=..[;more]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_detector)

    p = sub.add_parser("detect", help="apply a detector to a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval-matrix", help="the cross-source train/test AUC matrix experiment")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lm", default=None)
    p.add_argument("--scored", default=None, help="ScoredTokens file instead of --lm")
    p.add_argument("--counts", default="100,100,300,100")
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--grid", default="")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_eval_matrix)

    p = sub.add_parser("watermark-gen", help="generate watermarked essays from an n-gram model")
    p.add_argument("--lm", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--key", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_watermark_gen)

    p = sub.add_parser("watermark-detect", help="z-test essays for the green-list watermark")
    p.add_argument("--input", required=True)
    p.add_argument("--key", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--z-threshold", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_watermark_detect)

    p = sub.add_parser("pool-build", help="index a per-prompt pool of generated essays")
    p.add_argument("--corpus", required=True)
    p.add_argument("--prompt", default=None, help="restrict to one prompt id")
    p.add_argument("--k", type=int, default=8, help="shingle length in tokens")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pool_build)

    p = sub.add_parser("collide", help="scan submissions against a pool index")
    p.add_argument("--pool", required=True)
    p.add_argument("--input", required=True, help="submissions corpus")
    p.add_argument("--min-span", type=int, default=20)
    p.add_argument("--min-fingerprints", type=int, default=2)
    p.add_argument("--render", default=None, help="also write a plain-text side-by-side report")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_collide)

    return parser


def _config_defaults(argv):
    """Pre-scan for --config and return converted key=value defaults."""
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None:
        return {}
    defaults = {}
    for lineno, line in enumerate(Path(_require_file(path, "config")).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}: line {lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        for conv in (int, float):
            try:
                val = conv(val)
                break
            except ValueError:
                continue
        defaults[key] = val
    return defaults


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    defaults = _config_defaults(argv)
    if defaults:
        # apply each key only to parsers that define it: a blanket set_defaults
        # on a subparser would override values the main parser already parsed
        for target in [parser, *parser._subparsers._group_actions[0].choices.values()]:
            dests = {a.dest for a in target._actions}
            matching = {k: v for k, v in defaults.items() if k in dests}
            if matching:
                target.set_defaults(**matching)
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    return args.func(args)


def main(argv=None):
    try:
        return run(argv)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
