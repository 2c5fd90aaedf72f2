"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 I/O, 4 protocol/remote, 5 corrupt data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import container as container_mod
from .container import PREDICTOR_NONE, demux, mux
from .errors import (
    CorruptStream,
    DegenerateCurve,
    EmptyInput,
    InvalidHeader,
    InvalidReading,
    LengthMismatch,
    NoOverlap,
    NotAContainer,
    ProtocolError,
    RankCodecError,
    RemoteUnavailable,
    Truncated,
    UnsupportedVersion,
    VocabMismatch,
)
from .metrics import (
    LossWeights,
    MetricReadings,
    aggregate_loss,
    bd_rate,
    compression_ratio,
    read_rd_curve,
)
from .pipelines import (
    BACKEND_CHOICES,
    PIPELINE_CHOICES,
    backend_needs_predictor,
    coding_stats,
    decode_payload,
    encode_payload,
    raw_bits,
    run_bench,
)
from .predictor import (
    DEFAULT_MAX_CONTEXT,
    NgramModel,
    Predictor,
    RemotePredictor,
    UniformPredictor,
    Vocabulary,
)
from .tokens_io import (
    BYTES_VOCAB,
    bytes_to_tokens,
    looks_like_token_file,
    parse_token_file,
    render_token_file,
    tokens_to_bytes,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_REMOTE = 4
EXIT_CORRUPT = 5

REMOTE_ADDR_ENV = "RANKCODEC_REMOTE"

DEFAULT_BACKEND = "rank+deflate"
DEFAULT_PREDICTOR = "uniform"


class UsageError(Exception):
    pass


def _read_file(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _atomic_write(path: str, data: bytes) -> None:
    """Write through a temp file so failures leave no partial output."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent) or ".", prefix=target.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _parse_input_tokens(data: bytes):
    if looks_like_token_file(data):
        try:
            return parse_token_file(data)
        except ValueError as exc:
            raise UsageError(f"bad token file: {exc}") from exc
    return bytes_to_tokens(data)


def _build_predictor(spec: str, vocab: Vocabulary, max_context: int) -> Predictor:
    """Turn a --predictor spec into a live predictor for ``vocab``."""
    if spec == "uniform":
        return UniformPredictor(vocab)
    if spec.startswith("ngram:"):
        order = None
        train_path = None
        for part in spec[len("ngram:") :].split(":"):
            if part.startswith("k="):
                order = int(part[2:])
            elif part.startswith("train="):
                train_path = part[len("train=") :]
            else:
                raise UsageError(f"bad ngram predictor option {part!r}")
        if order is None:
            raise UsageError("ngram predictor needs k=<order>")
        model = NgramModel(vocab, order)
        if train_path is not None:
            train_tokens = _parse_input_tokens(_read_file(train_path))
            if train_tokens.vocab != vocab:
                raise VocabMismatch(
                    f"training data uses {train_tokens.vocab.identifier!r}, "
                    f"input uses {vocab.identifier!r}"
                )
            model.update(train_tokens)
        return model
    if spec == "remote" or spec.startswith("remote:"):
        addr = spec[len("remote:") :] if spec.startswith("remote:") else ""
        if not addr:
            addr = os.environ.get(REMOTE_ADDR_ENV, "")
        if not addr:
            raise UsageError(
                f"remote predictor needs an address (remote:HOST:PORT, "
                f"remote:stdio:<cmd>, or ${REMOTE_ADDR_ENV})"
            )
        return RemotePredictor.connect(addr, expected_vocab=vocab, max_context=max_context)
    raise UsageError(f"unknown predictor spec {spec!r}")


def _predictor_for_decode(
    header, vocab: Vocabulary, spec: str | None, max_context: int
) -> Predictor | None:
    pid = header.predictor_id
    if pid == PREDICTOR_NONE:
        return None
    if pid == "uniform":
        return UniformPredictor(vocab)
    if pid.startswith("ngram:"):
        if spec is None:
            raise UsageError(
                f"container was coded with {pid!r}; pass the same "
                f"--predictor ngram:k=K:train=PATH used to compress"
            )
        predictor = _build_predictor(spec, vocab, max_context)
        if predictor.identifier != pid:
            raise VocabMismatch(
                f"--predictor resolves to {predictor.identifier!r}, "
                f"container needs {pid!r}"
            )
        return predictor
    if pid.startswith("remote:"):
        addr_spec = spec if spec is not None else "remote"
        if not (addr_spec == "remote" or addr_spec.startswith("remote:")):
            raise VocabMismatch(
                f"container needs a remote predictor ({pid!r}), got {addr_spec!r}"
            )
        try:
            return _build_predictor(addr_spec, vocab, max_context)
        except RemoteUnavailable as exc:
            raise RemoteUnavailable(
                f"container needs the prediction server for {pid!r}; "
                f"start it and pass --predictor remote:ADDR or set "
                f"${REMOTE_ADDR_ENV} ({exc})"
            ) from exc
    raise UsageError(f"container names unknown predictor {pid!r}")


def _emit(args, human: str, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_compress(args) -> int:
    tokens = _parse_input_tokens(_read_file(args.input))
    predictor = None
    if backend_needs_predictor(args.backend):
        predictor = _build_predictor(args.predictor, tokens.vocab, args.max_context)
    bs, predictor_id = encode_payload(args.backend, tokens, predictor)
    image = _read_file(args.image) if args.image else b""
    cf = mux(
        backend=bs.backend,
        predictor_id=predictor_id,
        vocab_identifier=tokens.vocab.identifier,
        vocab_size=tokens.vocab.size,
        token_count=len(tokens),
        text=bs,
        image=image,
        width=args.width,
        height=args.height,
    )
    _atomic_write(args.output, cf.to_bytes())
    stats = coding_stats(args.backend, tokens, bs, predictor)
    if isinstance(predictor, RemotePredictor):
        predictor.close()
    raw = raw_bits(tokens)
    ratio = compression_ratio(raw, bs.bit_length) if raw else 0.0
    payload = {
        "input_symbols": stats.input_symbols,
        "output_bits": stats.output_bits,
        "raw_bits": raw,
        "ratio_pct": round(ratio, 2),
        "backend": args.backend,
        "predictor_id": predictor_id,
        "output": args.output,
    }
    if stats.cross_entropy_bits is not None:
        payload["cross_entropy_bits"] = round(stats.cross_entropy_bits, 3)
    _emit(
        args,
        f"compressed {stats.input_symbols} symbols -> {stats.output_bits} bits "
        f"(ratio {ratio:.2f}% vs raw {raw} bits) backend={args.backend} "
        f"predictor={predictor_id} -> {args.output}",
        payload,
    )
    return EXIT_OK


def cmd_decompress(args) -> int:
    cf = demux(_read_file(args.input))
    h = cf.header
    vocab = Vocabulary(h.vocab_size, h.vocab_identifier)
    predictor = _predictor_for_decode(h, vocab, args.predictor, args.max_context)
    tokens = decode_payload(cf.text_payload, vocab, h.token_count, h.predictor_id, predictor)
    if isinstance(predictor, RemotePredictor):
        predictor.close()
    if vocab == BYTES_VOCAB and not args.tokens:
        out_bytes = tokens_to_bytes(tokens)
    else:
        out_bytes = render_token_file(tokens)
    _atomic_write(args.output, out_bytes)
    _emit(
        args,
        f"decompressed {len(tokens)} symbols ({len(out_bytes)} bytes) -> {args.output}",
        {"symbols": len(tokens), "output_bytes": len(out_bytes), "output": args.output},
    )
    return EXIT_OK


def cmd_mux(args) -> int:
    cf = demux(_read_file(args.container))
    image = _read_file(args.image)
    h = cf.header
    width = args.width if args.width else h.width
    height = args.height if args.height else h.height
    new = mux(
        backend=h.backend,
        predictor_id=h.predictor_id,
        vocab_identifier=h.vocab_identifier,
        vocab_size=h.vocab_size,
        token_count=h.token_count,
        text=cf.text_payload,
        image=image,
        width=width,
        height=height,
    )
    _atomic_write(args.output, new.to_bytes())
    _emit(
        args,
        f"muxed {len(image)} image bytes with {h.text_payload_bytes} text bytes -> {args.output}",
        {"image_bytes": len(image), "text_bytes": h.text_payload_bytes, "output": args.output},
    )
    return EXIT_OK


def cmd_demux(args) -> int:
    cf = demux(_read_file(args.input))
    h = cf.header
    if args.text:
        _atomic_write(args.text, cf.text_payload.data)
    if args.image:
        _atomic_write(args.image, cf.image_payload)
    payload = {
        "format_version": h.format_version,
        "backend": h.backend.name.lower(),
        "predictor_id": h.predictor_id,
        "vocab_identifier": h.vocab_identifier,
        "vocab_size": h.vocab_size,
        "token_count": h.token_count,
        "text_bit_length": h.text_bit_length,
        "text_payload_bytes": h.text_payload_bytes,
        "image_payload_bytes": h.image_payload_bytes,
        "width": h.width,
        "height": h.height,
    }
    if h.width and h.height:
        payload["bpp"] = round(container_mod.bits_per_pixel(cf), 6)
    human = ", ".join(f"{k}={v}" for k, v in payload.items())
    _emit(args, human, payload)
    return EXIT_OK


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise UsageError(f"{args.corpus} is not a directory")
    pipelines = [p.strip() for p in args.pipelines.split(",") if p.strip()]
    for p in pipelines:
        if p not in PIPELINE_CHOICES:
            raise UsageError(f"unknown pipeline {p!r} (choices: {', '.join(PIPELINE_CHOICES)})")
    if not pipelines:
        raise UsageError("no pipelines selected")
    documents = []
    vocab = None
    for path in sorted(corpus.iterdir()):
        if not path.is_file():
            continue
        try:
            tokens = _parse_input_tokens(path.read_bytes())
        except (OSError, UsageError) as exc:
            if args.lenient:
                print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
                continue
            raise OSError(f"unreadable corpus file {path}: {exc}") from exc
        if vocab is None:
            vocab = tokens.vocab
        elif tokens.vocab != vocab:
            raise UsageError(f"{path.name} uses a different vocabulary than the corpus")
        documents.append((path.name, tokens))
    if not documents:
        raise EmptyInput(f"no readable documents in {args.corpus}")
    predictor = None
    if any(p != "none" and backend_needs_predictor(p) for p in pipelines):
        predictor = _build_predictor(args.predictor, vocab, args.max_context)
    report = run_bench(documents, pipelines, predictor)
    if isinstance(predictor, RemotePredictor):
        predictor.close()
    if args.out:
        from .report import write_bench_report

        paths = write_bench_report(report, args.out)
        print(f"report written to {', '.join(str(p) for p in paths)}", file=sys.stderr)
    if args.json:
        print(
            json.dumps(
                {
                    "pipelines": list(report.pipelines),
                    "totals": list(report.totals),
                    "ratios_pct": [round(r, 2) for r in report.ratios],
                    "documents": list(report.documents),
                },
                sort_keys=True,
            )
        )
    else:
        print(report.to_text(), end="")
    return EXIT_OK


def cmd_bd_rate(args) -> int:
    anchor = read_rd_curve(args.anchor, args.metric, args.lower_is_better)
    test = read_rd_curve(args.test, args.metric, args.lower_is_better)
    value = bd_rate(anchor, test)
    if args.plot:
        from .report import save_rd_figure

        save_rd_figure(anchor, test, args.plot, value)
    _emit(
        args,
        f"BD-rate: {value:+.2f}%",
        {"bd_rate_pct": value, "metric": args.metric},
    )
    return EXIT_OK


def cmd_ratio(args) -> int:
    value = compression_ratio(args.baseline_bits, args.compressed_bits)
    _emit(
        args,
        f"compression ratio: {value:.2f}%",
        {
            "baseline_bits": args.baseline_bits,
            "compressed_bits": args.compressed_bits,
            "ratio_pct": value,
        },
    )
    return EXIT_OK


def _four_floats(text: str, what: str) -> tuple[float, float, float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 4:
        raise UsageError(f"{what} needs four comma-separated values")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def cmd_loss(args) -> int:
    weights = LossWeights(args.lam, _four_floats(args.kappas, "--kappas"))
    readings = MetricReadings(
        rate=args.rate,
        mse=args.mse,
        lpips=args.lpips,
        clipiqa=args.clipiqa,
        clipi2t=args.clipi2t,
        maxima=_four_floats(args.maxima, "--maxima"),
    )
    loss, distortion = aggregate_loss(weights, readings)
    _emit(
        args,
        f"loss={loss:.6f} distortion={distortion:.6f}",
        {"loss": loss, "distortion": distortion},
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankcodec",
        description="Predictive lossless text compression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_predictor_opts(p, default=DEFAULT_PREDICTOR):
        p.add_argument(
            "--predictor",
            default=default,
            help="uniform | ngram:k=K[:train=PATH] | remote[:HOST:PORT | :stdio:<cmd>]",
        )
        p.add_argument("--max-context", type=int, default=DEFAULT_MAX_CONTEXT)

    p = sub.add_parser("compress", help="compress text or a token file into a container")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--backend", choices=BACKEND_CHOICES, default=DEFAULT_BACKEND)
    add_predictor_opts(p)
    p.add_argument("--image", help="opaque image bitstream to mux alongside the text")
    p.add_argument("--width", type=int, default=0)
    p.add_argument("--height", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="recover the original text from a container")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--predictor", default=None, help="required when the container was coded with a trained or remote model")
    p.add_argument("--max-context", type=int, default=DEFAULT_MAX_CONTEXT)
    p.add_argument("--tokens", action="store_true", help="write a token file even for byte-level input")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("mux", help="attach an image payload to a container")
    p.add_argument("container")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--width", type=int, default=0)
    p.add_argument("--height", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_mux)

    p = sub.add_parser("demux", help="inspect a container and extract payloads")
    p.add_argument("input")
    p.add_argument("--text", help="write the text payload bytes here")
    p.add_argument("--image", help="write the image payload bytes here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demux)

    p = sub.add_parser("bench", help="run pipelines over a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--pipelines", default="none,deflate,rank+deflate")
    add_predictor_opts(p)
    p.add_argument("--out", help="directory for report.csv/.txt/.png")
    p.add_argument("--lenient", action="store_true", help="skip unreadable files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bd-rate", help="Bjontegaard delta rate between two R-D CSV files")
    p.add_argument("anchor")
    p.add_argument("test")
    p.add_argument("--metric", default="quality")
    p.add_argument("--lower-is-better", action="store_true")
    p.add_argument("--plot", help="write an R-D figure here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bd_rate)

    p = sub.add_parser("ratio", help="compression ratio from two bit totals")
    p.add_argument("baseline_bits", type=int)
    p.add_argument("compressed_bits", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("loss", help="aggregate rate and distortion readings")
    p.add_argument("--lam", type=float, required=True, help="rate-distortion trade-off weight")
    p.add_argument("--kappas", default="0.5,0.2,0.2,0.1")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--mse", type=float, required=True)
    p.add_argument("--lpips", type=float, required=True)
    p.add_argument("--clipiqa", type=float, required=True)
    p.add_argument("--clipi2t", type=float, required=True)
    p.add_argument("--maxima", default="255,1,1,1")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_loss)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EmptyInput, NoOverlap, DegenerateCurve, InvalidReading) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RemoteUnavailable, ProtocolError, VocabMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (
        CorruptStream,
        LengthMismatch,
        NotAContainer,
        Truncated,
        UnsupportedVersion,
        InvalidHeader,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except RankCodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
