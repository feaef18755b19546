"""Command-line surface: embed, extract, verify, capacity, attack, sweep.

Exit codes: 0 success, 2 usage error, 1 runtime failure, 3 integrity
breach from `verify` (distinct from 1 so scripts can tell "broken input"
from "tampered model"). JSON mode prints exactly one document on stdout
and is byte-identical across identical invocations; anything wall-clock
shaped stays out of it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .attacks import AttackSpec, apply_attack, sweep_gaussian, sweep_to_csv
from .container import load_container, save_container
from .core import WatermarkConfig, embed_details, extract, frame_payload
from .errors import WhstampError
from .keys import WatermarkKey
from .plan import capacity, recommend_payload_bits

_THREADS_ENV = "WHSTAMP_THREADS"


class _UsageError(Exception):
    """Bad flag values or combinations; maps to exit code 2."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--json", action="store_true", help="emit one JSON document on stdout"
    )
    common.add_argument(
        "--threads",
        type=_positive_int,
        default=None,
        help=f"worker threads (default: ${_THREADS_ENV} or runtime default)",
    )
    return common


def _config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lsb-bits", type=int, default=4, metavar="L")
    parser.add_argument("--sigfigs", type=int, default=5, metavar="S")
    parser.add_argument("--max-block", type=int, default=2048, metavar="N")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whstamp",
        description="Fragile key-controlled checkpoint watermarking.",
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", parents=[common], help="hide a payload in a model")
    p.add_argument("--model", required=True)
    p.add_argument("--key-file", required=True)
    p.add_argument("--payload", required=True, help="file with payload bytes")
    p.add_argument("--out", required=True)
    p.add_argument("--density", type=float, default=0.01)
    _config_flags(p)

    p = sub.add_parser("extract", parents=[common], help="read and check the payload")
    p.add_argument("--model", required=True)
    p.add_argument("--key-file", required=True)
    p.add_argument(
        "--reference",
        help="original payload file; enables the bit-error-ratio diagnostic",
    )
    _config_flags(p)

    p = sub.add_parser("verify", parents=[common], help="integrity verdict only")
    p.add_argument("--model", required=True)
    p.add_argument("--key-file", required=True)
    _config_flags(p)

    p = sub.add_parser("capacity", parents=[common], help="capacity of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--lsb-bits", type=int, default=4, metavar="L")
    p.add_argument("--density", type=float, default=0.01)

    p = sub.add_parser("attack", parents=[common], help="tamper with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--key-file", required=True)
    p.add_argument(
        "--mode", required=True, choices=["gaussian", "zero_range", "replace_value"]
    )
    p.add_argument("--fraction", type=float)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--tensor")
    p.add_argument("--start", type=int)
    p.add_argument("--stop", type=int)
    p.add_argument("--value", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", parents=[common], help="noise-fraction sweep to CSV")
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--csv", required=True, help="output CSV path")

    return parser


def _set_threads(requested: int | None) -> None:
    if requested is None:
        raw = os.environ.get(_THREADS_ENV)
        if raw is None:
            return
        try:
            requested = int(raw)
        except ValueError as exc:
            raise _UsageError(f"invalid {_THREADS_ENV}={raw!r}") from exc
        if requested < 1:
            raise _UsageError(f"invalid {_THREADS_ENV}={raw!r}")
    try:
        import numba

        numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def _cfg(args: argparse.Namespace) -> WatermarkConfig:
    try:
        return WatermarkConfig(
            l=args.lsb_bits, s_target=args.sigfigs, max_block=args.max_block
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _check_density(density: float, l: int) -> None:
    if not 0.0 < density <= l:
        raise _UsageError(f"--density must be in (0, {l}], got {density}")


def _emit(args: argparse.Namespace, doc: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for line in human_lines:
            print(line)


def _cmd_embed(args: argparse.Namespace) -> int:
    cfg = _cfg(args)
    _check_density(args.density, cfg.l)
    key = WatermarkKey.from_file(args.key_file)
    with open(args.payload, "rb") as fh:
        payload = fh.read()
    model = load_container(args.model)
    n_p = sum(t.size for t in model.values())
    result = embed_details(model, key, payload, cfg)
    budget = int(np.floor(n_p * args.density))
    if len(result.frame) > budget:
        print(
            f"warning: {len(result.frame)} hidden bits exceed the "
            f"{args.density:g}-density budget of {budget}",
            file=sys.stderr,
        )
    save_container(args.out, result.tensors)
    doc = {
        "out": args.out,
        "n_p": int(n_p),
        "hidden_bit_count": len(result.frame),
        "payload_bytes": len(payload),
        "config": cfg.to_dict(),
    }
    _emit(
        args,
        doc,
        [
            f"embedded {len(payload)} payload bytes "
            f"({len(result.frame)} hidden bits) into {n_p} parameters",
            f"wrote {args.out}",
        ],
    )
    return 0


def _load_report(args: argparse.Namespace, reference_path: str | None):
    cfg = _cfg(args)
    key = WatermarkKey.from_file(args.key_file)
    model = load_container(args.model)
    reference = None
    if reference_path:
        with open(reference_path, "rb") as fh:
            reference = frame_payload(fh.read())
    return extract(model, key, cfg, reference)


def _cmd_extract(args: argparse.Namespace) -> int:
    report = _load_report(args, args.reference)
    doc = report.to_dict()
    lines = [
        f"verified: {str(report.verified).lower()}",
        f"hidden bits read: {report.hidden_bit_count}",
    ]
    if report.payload is not None:
        lines.append(f"payload ({len(report.payload)} bytes, hex): "
                     f"{report.payload.hex()}")
    if report.ber is not None:
        lines.append(f"bit error ratio: {report.ber:.6f}")
    if report.diagnostic:
        lines.append(f"diagnostic: {report.diagnostic}")
    _emit(args, doc, lines)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = _load_report(args, None)
    doc = {"verified": report.verified, "diagnostic": report.diagnostic}
    _emit(args, doc, [f"verified: {str(report.verified).lower()}"])
    return 0 if report.verified else 3


def _cmd_capacity(args: argparse.Namespace) -> int:
    if args.lsb_bits < 1:
        raise _UsageError(f"--lsb-bits must be >= 1, got {args.lsb_bits}")
    _check_density(args.density, args.lsb_bits)
    model = load_container(args.model)
    n_p = int(sum(t.size for t in model.values()))
    cap = capacity(n_p, args.lsb_bits)
    rec = recommend_payload_bits(n_p, args.density, args.lsb_bits)
    doc = {
        "n_p": n_p,
        "capacity_bits": cap,
        "recommended_payload_bits": rec,
        "recommended_payload_bytes": rec // 8,
    }
    _emit(
        args,
        doc,
        [
            f"parameters: {n_p}",
            f"capacity: {cap} bits",
            f"recommended payload at density {args.density:g}: "
            f"{rec // 8} bytes ({rec} bits)",
        ],
    )
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    try:
        if args.mode == "gaussian":
            spec = AttackSpec(
                mode="gaussian",
                fraction=args.fraction,
                sigma=args.sigma,
                seed_label=str(args.seed),
            )
        else:
            spec = AttackSpec(
                mode=args.mode,
                tensor=args.tensor,
                start=args.start,
                stop=args.stop,
                value=args.value,
            )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    key = WatermarkKey.from_file(args.key_file)
    model = load_container(args.model)
    attacked, count = apply_attack(model, spec, key)
    save_container(args.out, attacked)
    doc = {"out": args.out, "mode": spec.mode, "attack": spec.describe(),
           "modified_count": count}
    _emit(
        args,
        doc,
        [f"{spec.mode} attack ({spec.describe()}) modified {count} parameters",
         f"wrote {args.out}"],
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.config) as fh:
        conf = json.load(fh)
    for field in ("model", "key_file", "fractions"):
        if field not in conf:
            raise WhstampError(f"sweep config missing {field!r}")
    if ("payload_file" in conf) == ("payload_hex" in conf):
        raise WhstampError("sweep config needs exactly one of payload_file/payload_hex")
    if "payload_file" in conf:
        with open(conf["payload_file"], "rb") as fh:
            payload = fh.read()
    else:
        payload = bytes.fromhex(conf["payload_hex"])
    cfg = WatermarkConfig(
        l=conf.get("lsb_bits", 4),
        s_target=conf.get("sigfigs", 5),
        max_block=conf.get("max_block", 2048),
    )
    key = WatermarkKey.from_file(conf["key_file"])
    model = load_container(conf["model"])
    rows = sweep_gaussian(
        model,
        key,
        payload,
        [float(f) for f in conf["fractions"]],
        trials=int(conf.get("trials", 20)),
        sigma=float(conf.get("sigma", 1.0)),
        cfg=cfg,
    )
    text = sweep_to_csv(rows)
    with open(args.csv, "w") as fh:
        fh.write(text)
    doc = {
        "csv": args.csv,
        "rows": [
            {
                "fraction": row.fraction,
                "modified_count": row.modified_count,
                "ber": row.ber,
                "verified": row.verified,
            }
            for row in rows
        ],
    }
    _emit(args, doc, [f"wrote {len(rows)} sweep rows to {args.csv}"])
    return 0


_DISPATCH = {
    "embed": _cmd_embed,
    "extract": _cmd_extract,
    "verify": _cmd_verify,
    "capacity": _cmd_capacity,
    "attack": _cmd_attack,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        _set_threads(args.threads)
        return _DISPATCH[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (WhstampError, OSError, ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
