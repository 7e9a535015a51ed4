"""Command-line entry point: score an essay corpus with a causal LM.

    essaydetect-adapter --model gpt2 --input corpus.jsonl --out scored.jsonl

The output is the essaydetect ScoredTokens line format and feeds directly
into ``essaydetect features``.
"""

import argparse
import sys
import traceback

from .adapter import AdapterConfig, score_corpus


def build_parser():
    parser = argparse.ArgumentParser(prog="essaydetect-adapter", description=__doc__)
    parser.add_argument("--model", required=True, help="model identifier or local path")
    parser.add_argument("--input", required=True, help="essay corpus (JSON lines)")
    parser.add_argument("--out", required=True, help="ScoredTokens output path")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--context-mode", choices=("sentence", "document"), default="sentence")
    parser.add_argument("--max-window", type=int, default=None, help="override the model's context limit")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            model=args.model,
            device=args.device,
            batch_size=args.batch_size,
            context_mode=args.context_mode,
            max_window=args.max_window,
        )
        meta = score_corpus(args.input, args.out, config)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    chunked = len(meta["chunked_essays"])
    print(f"scored {meta['total_tokens']} tokens -> {args.out}" + (f" ({chunked} essays chunked)" if chunked else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
