"""CLI: embed sentences with a pretrained encoder into interchange files.

    embed-export --model roberta-base --in sentences.jsonl --out dataset.jsonl
    embed-export --model ./local-encoder --in s.jsonl --out d.jsonl --no-special-tokens
"""

from __future__ import annotations

import argparse
import logging
import sys

from .exporting import ExportConfig, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-export")
    parser.add_argument("--model", required=True, help="encoder name or local path")
    parser.add_argument("--in", dest="input_path", required=True,
                        help="JSONL with text/label/aspect_char_spans per line")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="output JSONL path (sidecar written next to it)")
    parser.add_argument("--max-length", type=int, default=128)
    parser.add_argument("--no-special-tokens", action="store_true",
                        help="drop encoder marker tokens from the export")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    report = export(ExportConfig(
        model=args.model,
        input_path=args.input_path,
        output_path=args.output_path,
        max_length=args.max_length,
        include_special_tokens=not args.no_special_tokens,
    ))
    print(f"exported {report.exported} records, skipped {len(report.skipped)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
