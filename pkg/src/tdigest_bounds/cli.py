"""Command-line front end.

Exit status: 0 success, 1 failed verification, 2 usage error, 3 I/O or
format error.  Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from typing import Sequence

import numpy as np

from .analysis import (
    DEFAULT_SEEDS,
    default_trials,
    run_trials,
    verify_digest,
    write_csv,
)
from .datagen import DISTRIBUTIONS, generate
from .digest import EmptyDigestError, TDigest
from .scale import DomainError, NormalizerPolicy, ScaleKind, ScaleSpec, _forward, normalizer
from .serial import DigestFormatError, dumps, loads

__all__ = ["main", "generate"]

log = logging.getLogger("tdigest_bounds")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _csv_list(text: str, conv, what: str) -> list:
    try:
        return [conv(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list: {text!r}") from None


def _scale_kind(text: str) -> ScaleKind:
    try:
        return ScaleKind[text.strip().upper()]
    except KeyError:
        raise UsageError(f"unknown scale {text!r}; choose k0, k1, k2 or k3") from None


def make_spec(scale: str, delta: float, norm: str = "paper") -> ScaleSpec:
    """Build a spec from CLI spellings; ``norm`` is ``paper`` or ``const:<z>``."""
    kind = _scale_kind(scale)
    try:
        if norm == "paper":
            return ScaleSpec.paper(kind, delta)
        if norm.startswith("const:"):
            return ScaleSpec(kind, delta, NormalizerPolicy.CONSTANT, float(norm[6:]))
    except ValueError as e:
        raise UsageError(str(e)) from None
    raise UsageError(f"bad normalizer {norm!r}; use 'paper' or 'const:<z>'")


def read_samples(path: str) -> np.ndarray:
    fh = sys.stdin if path == "-" else open(path)
    values = []
    try:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                v = float(line)
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number: {line!r}") from None
            if not math.isfinite(v):
                raise InputError(f"{path}:{lineno}: sample must be finite")
            values.append(v)
    finally:
        if fh is not sys.stdin:
            fh.close()
    return np.asarray(values, dtype=float)


def load_digest(path: str) -> TDigest:
    if path == "-":
        data = sys.stdin.buffer.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    return loads(data)


def _open_out(path: str | None, binary=False):
    if path in (None, "-"):
        return sys.stdout.buffer if binary else sys.stdout
    return open(path, "wb" if binary else "w", newline="" if not binary else None)


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_build(args) -> int:
    spec = make_spec(args.scale, args.delta, args.normalizer)
    if args.input is not None:
        samples = read_samples(args.input)
    elif args.dist is not None:
        if args.n is None:
            raise UsageError("--dist needs --n")
        samples = generate(args.dist, int(args.n[0]), int(args.seed[0]))
    else:
        raise UsageError("build needs --input or --dist/--n")
    d = TDigest(spec, args.buffer)
    d.insert_many(samples)
    d.compress()
    out = _open_out(args.output, binary=True)
    out.write(dumps(d))
    out.flush()
    log.info("built %r", d)
    return EXIT_OK


def cmd_quantile(args) -> int:
    if args.quantiles is None:
        raise UsageError("quantile needs --quantiles")
    qs = _csv_list(args.quantiles, float, "quantile")
    if any(not 0 <= q <= 1 for q in qs):
        raise UsageError("quantiles must lie in [0, 1]")
    d = load_digest(args.input)
    for q in qs:
        print(_fmt(d.quantile(q)))
    return EXIT_OK


def cmd_cdf(args) -> int:
    if args.values is None:
        raise UsageError("cdf needs --values")
    xs = _csv_list(args.values, float, "value")
    d = load_digest(args.input)
    for x in xs:
        print(_fmt(d.cdf(x)))
    return EXIT_OK


def cmd_verify(args) -> int:
    d = load_digest(args.input)
    report = verify_digest(d)
    json.dump(report.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if report.all_ok else EXIT_VERIFY


def cmd_dump(args) -> int:
    d = load_digest(args.input)
    out = _open_out(args.output)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["mean", "weight", "q_left", "q_right", "k_size"])
    n = float(d.total_weight)
    if n:
        z = normalizer(d.spec, n)
        left = 0.0
        for mean, weight in zip(d.means.tolist(), d.weights.tolist()):
            q_left = left / n
            q_right = min(1.0, (left + weight) / n)
            ks = (_forward(d.spec.kind, d.spec.delta, z, q_right)
                  - _forward(d.spec.kind, d.spec.delta, z, q_left))
            writer.writerow([_fmt(mean), _fmt(weight), _fmt(q_left), _fmt(q_right), _fmt(ks)])
            left += weight
    out.flush()
    return EXIT_OK


def cmd_sweep(args) -> int:
    dists = _csv_list(args.dist, str, "distribution") if args.dist else list(DISTRIBUTIONS)
    for dist in dists:
        if dist not in DISTRIBUTIONS:
            raise UsageError(f"unknown distribution {dist!r}")
    seeds = args.seed if args.seed_given else list(DEFAULT_SEEDS)
    if args.scale_given or args.delta_given or args.n is not None:
        kinds = _csv_list(args.scale, str, "scale")
        deltas = _csv_list(str(args.delta_text), float, "delta")
        ns = args.n if args.n is not None else [100_000]
        trials = [(make_spec(k, delta, args.normalizer), n)
                  for k in kinds for delta in deltas for n in ns]
    else:
        trials = default_trials()
    rows = run_trials(trials, dists, seeds, buffer=args.buffer)
    out = _open_out(args.output)
    write_csv(rows, out)
    out.flush()
    bad = sum(not r.count_ok or r.ksize_violations for r in rows)
    log.info("%d rows, %d with count or k-size failures", len(rows), bad)
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "quantile": cmd_quantile,
    "cdf": cmd_cdf,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "dump": cmd_dump,
}


def _u64_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a whole number: {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected non-negative whole numbers: {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scale", default=None, help="k0, k1, k2 or k3 (sweep: comma list)")
    common.add_argument("--delta", default=None, help="compression parameter (sweep: comma list)")
    common.add_argument("--normalizer", default="paper", help="'paper' or 'const:<z>'")
    common.add_argument("--input", default=None, help="input path, '-' for stdin")
    common.add_argument("--output", default=None, help="output path, default stdout")
    common.add_argument("--dist", default=None, help=f"one of {', '.join(DISTRIBUTIONS)}")
    common.add_argument("--n", type=_u64_list, default=None, help="sample count")
    common.add_argument("--seed", type=_u64_list, default=None, help="generator seed")
    common.add_argument("--buffer", type=int, default=None, help="buffer capacity, default 10*delta")
    common.add_argument("--quantiles", default=None, help="comma-separated quantiles")
    common.add_argument("--values", default=None, help="comma-separated sample values")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="tdigest-bounds",
        description="Build and query t-digests and check their size bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _normalize(args) -> None:
    args.scale_given = args.scale is not None
    args.delta_given = args.delta is not None
    args.seed_given = args.seed is not None
    args.delta_text = args.delta if args.delta is not None else "100"
    if args.seed is None:
        args.seed = [0]
    if args.buffer is not None and args.buffer < 1:
        raise UsageError("--buffer must be >= 1")
    if args.n is not None and any(v < 1 for v in args.n):
        raise UsageError("--n must be >= 1")
    if args.dist is not None and args.command == "build" and args.dist not in DISTRIBUTIONS:
        raise UsageError(f"unknown distribution {args.dist!r}")
    if args.command == "sweep":
        if args.scale is None:
            args.scale = "k0,k1,k2,k3"
        return
    if args.command == "build":
        args.scale = args.scale or "k1"
        try:
            args.delta = float(args.delta_text)
        except ValueError:
            raise UsageError(f"bad --delta {args.delta_text!r}") from None
        if not args.delta >= 2:
            raise UsageError("--delta must be >= 2")
    elif args.input is None:
        raise UsageError(f"{args.command} needs --input")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        _normalize(args)
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, InputError, DigestFormatError, EmptyDigestError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
