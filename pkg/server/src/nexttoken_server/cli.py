"""Command line: serve a probability model, or move text through tokenizers."""

from __future__ import annotations

import argparse
import sys

from .models import MockTableModel
from .server import ProbabilityServer, ServerConfig
from .tokenizers import detokenize_file, export_tokens, get_tokenizer


def cmd_serve(args) -> int:
    if bool(args.mock) == bool(args.hf_model):
        print("error: pass exactly one of --mock TABLE.json or --hf-model NAME", file=sys.stderr)
        return 2
    if args.mock:
        model = MockTableModel.from_file(args.mock)
    else:
        from .models import CausalLmModel

        model = CausalLmModel(args.hf_model)
    server = ProbabilityServer(ServerConfig(model, args.max_context))
    if args.stdio:
        server.serve_stdio()
        return 0
    host, sep, port = args.listen.rpartition(":")
    if not sep:
        print(f"error: --listen expects HOST:PORT, got {args.listen!r}", file=sys.stderr)
        return 2
    try:
        server.serve_tcp(host, int(port), once=args.once)
    except KeyboardInterrupt:
        pass
    return 0


def cmd_export_tokens(args) -> int:
    tokenizer = get_tokenizer(args.tokenizer)
    with open(args.input, encoding="utf-8") as fh:
        text = fh.read()
    content = export_tokens(text, tokenizer)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(content)
    print(f"wrote {content.count(chr(10)) - 1} tokens to {args.output}", file=sys.stderr)
    return 0


def cmd_detokenize(args) -> int:
    tokenizer = get_tokenizer(args.tokenizer)
    with open(args.input, encoding="utf-8") as fh:
        content = fh.read()
    text = detokenize_file(content, tokenizer)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nexttoken-server")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="answer next-token probability requests")
    p.add_argument("--mock", help="JSON weight table (deterministic mock mode)")
    p.add_argument("--hf-model", help="Hugging Face causal LM name or path")
    p.add_argument("--listen", default="127.0.0.1:7199", help="HOST:PORT (0 picks a port)")
    p.add_argument("--stdio", action="store_true", help="serve over stdin/stdout")
    p.add_argument("--max-context", type=int, default=1024)
    p.add_argument("--once", action="store_true", help="exit after one connection")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-tokens", help="tokenize text into a token file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--tokenizer", default="bytes", help="bytes | hf:<model>")
    p.set_defaults(func=cmd_export_tokens)

    p = sub.add_parser("detokenize", help="turn a token file back into text")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--tokenizer", default="bytes", help="bytes | hf:<model>")
    p.set_defaults(func=cmd_detokenize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
