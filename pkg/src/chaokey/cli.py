"""Command-line front end.

Exit codes: 0 success, 1 I/O, 2 usage/invalid argument, 3 numeric failure,
4 format error, 5 missing key, 6 frame rejected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dna import CipherImage, decrypt_image, encrypt_image
from .dynamics import (bifurcation_scan, complexity_grid, lyapunov_spectrum,
                       write_lyapunov_trace_csv, zero_one_test)
from .errors import FormatError, InvalidArg, KeyMissing, NonFinite
from .imageio import read_image, write_image
from .keystream import SEQUENCE_NAMES, CipherKey, derive_key, keystream_bits
from .metrics import export_bits, image_report, nist_subset, read_bits
from .modbus import build_frame, encrypt_crc, parse_frame, verify_frame
from .system import DEFAULT_DT, DEFAULT_TRANSIENT, REFERENCE_INIT, SystemParams, simulate

log = logging.getLogger("chaokey")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC, EXIT_FORMAT, EXIT_KEY, EXIT_REJECT = range(7)


# --- argument helpers ----------------------------------------------------------


def _floats(text: str, n: int | None = None) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated values")
    return vals


def _ints(text: str, n: int) -> tuple:
    vals = _floats(text, n)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def _pair(text):
    return _floats(text, 2)


def _rect(text):
    return _ints(text, 4)


def _res(text):
    return _ints(text, 2) if "," in text else (int(text), int(text))


def _hex(text: str) -> bytes:
    text = text.strip().replace(" ", "")
    if text.lower().startswith("0x"):
        text = text[2:]
    if len(text) % 2:
        raise InvalidArg("hex string has odd length")
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise InvalidArg(f"not a hex string: {text!r}") from None


def _add_system(p):
    g = p.add_argument_group("system")
    g.add_argument("--a", type=float, default=27.0)
    g.add_argument("--b", type=float, default=23.0)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--u4u8", action="store_true", help="add u4*u8 to the u9 equation")
    g.add_argument("--init", type=lambda s: _floats(s, 9), default=REFERENCE_INIT,
                   help="nine comma-separated initial values")
    g.add_argument("--dt", type=float, default=DEFAULT_DT)


def _params(args) -> SystemParams:
    return SystemParams(args.a, args.b, args.c, args.u4u8)


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "config_file"):
            continue
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def _write_json(path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _sidecar(path, args) -> None:
    """Record the effective configuration next to a CSV artifact."""
    Path(str(path) + ".run.json").write_text(json.dumps(_config(args), sort_keys=True, indent=2))


def _check_output(path) -> None:
    if path is None or str(path) == "-":
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")


def _check_input(path) -> None:
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file not found: {path}")


def _load_key(path) -> CipherKey:
    if path is None or not Path(path).is_file():
        raise KeyMissing(f"key file not found: {path}")
    return CipherKey.load(path)


# --- commands ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    _check_output(args.output)
    traj = simulate(args.init, _params(args), args.dt, args.steps, args.transient, args.stride)
    traj.to_csv(args.output)
    _sidecar(args.output, args)
    log.info("wrote %d samples to %s", len(traj), args.output)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    _check_output(args.output)
    if args.trace:
        _check_output(args.trace)
    t0 = time.perf_counter()
    spec = lyapunov_spectrum(_params(args), args.init, args.dt, args.total_time,
                             args.transient_time, args.reorth,
                             trace_every=args.trace_every if args.trace else 0)
    res = spec.to_dict()
    res["elapsed_s"] = time.perf_counter() - t0
    res["config"] = _config(args)
    _write_json(args.output, res)
    if args.trace:
        write_lyapunov_trace_csv(spec, args.trace)
    return EXIT_OK


def cmd_bifurcation(args) -> int:
    _check_output(args.output)
    data = bifurcation_scan(_params(args), args.vary, args.lo, args.hi, args.points,
                            args.component, args.dt, args.steps, args.transient, args.init)
    data.to_csv(args.output)
    _sidecar(args.output, args)
    n_failed = sum(data.failed)
    if n_failed:
        log.warning("%d parameter values diverged and were skipped", n_failed)
    return EXIT_OK


def _series_from_csv(path, column: str) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if column not in header:
        raise InvalidArg(f"column {column!r} not in {path}")
    return np.loadtxt(path, delimiter=",", skiprows=1, usecols=header.index(column), ndmin=1)


def cmd_zero_one(args) -> int:
    _check_output(args.output)
    if args.input:
        _check_input(args.input)
        x = _series_from_csv(args.input, args.column)
    else:
        col = int(args.column.lstrip("u")) - 1
        traj = simulate(args.init, _params(args), args.dt, args.samples * args.every,
                        args.transient)
        x = traj.component(col)
    x = x[::args.every][:args.samples] if args.input else x[::args.every]
    res = zero_one_test(x, args.c01, seed=args.seed, n_draws=args.draws)
    _write_json(args.output, {"K": res.K, "c": res.c, "n": len(x), "config": _config(args)})
    return EXIT_OK


def cmd_complexity(args) -> int:
    se_path = Path(f"{args.output}_se.csv")
    c0_path = Path(f"{args.output}_c0.csv")
    _check_output(se_path)
    grid = complexity_grid(args.a_range, args.c_range, args.b, args.resolution, args.samples,
                           args.stride, args.dt, args.transient, args.init)
    grid.to_csv(se_path, "se")
    grid.to_csv(c0_path, "c0")
    _sidecar(se_path, args)
    return EXIT_OK


def cmd_encrypt(args) -> int:
    _check_input(args.input)
    _check_output(args.output)
    _check_output(args.key)
    img = read_image(args.input)
    t0 = time.perf_counter()
    key = derive_key(img, args.seed.encode() if args.seed else None)
    cipher = encrypt_image(img, key, args.region)
    elapsed = time.perf_counter() - t0
    cipher.save(args.output)
    key.save(args.key)
    print(f"encryption time: {elapsed:.3f} s", file=sys.stderr)
    if args.cipher_png:
        _check_output(args.cipher_png)
        write_image(args.cipher_png, cipher.as_image())
    if args.metrics:
        _check_output(args.metrics)
        report = image_report(cipher.as_image(), n_pairs=args.pairs, rng_seed=args.rng_seed)
        report.config.update(_config(args))
        report.config["encrypt_time_s"] = elapsed
        Path(args.metrics).write_text(report.to_json() + "\n")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    _check_input(args.input)
    _check_output(args.output)
    key = _load_key(args.key)
    cipher = CipherImage.load(args.input)
    t0 = time.perf_counter()
    plain = decrypt_image(cipher, key)
    print(f"decryption time: {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    write_image(args.output, plain)
    return EXIT_OK


def cmd_frame_protect(args) -> int:
    raw = _hex(args.frame)
    if len(raw) < 2:
        raise InvalidArg("need at least address and function bytes")
    key = _load_key(args.key)
    frame = build_frame(raw[0], raw[1], raw[2:])
    print(encrypt_crc(frame, key, args.nonce).hex())
    return EXIT_OK


def cmd_frame_verify(args) -> int:
    raw = _hex(args.frame)
    key = _load_key(args.key)
    frame = parse_frame(raw)
    verdict = verify_frame(frame, key, args.nonce)
    print(verdict.value)
    return EXIT_OK if verdict else EXIT_REJECT


def cmd_keystream(args) -> int:
    _check_output(args.output)
    if args.image:
        _check_input(args.image)
        key = derive_key(read_image(args.image), args.seed.encode() if args.seed else None)
        if args.write_key:
            _check_output(args.write_key)
            key.save(args.write_key)
    else:
        key = _load_key(args.key)
    t0 = time.perf_counter()
    bits = keystream_bits(key, args.bits, args.sequence)
    export_bits(bits, args.output)
    report = {"bits": int(len(bits)), "elapsed_s": time.perf_counter() - t0,
              "config": _config(args)}
    if len(bits) >= 100_000:
        report["nist"] = [asdict(r) for r in nist_subset(bits)]
    _write_json(args.report, report)
    return EXIT_OK


def cmd_metrics(args) -> int:
    _check_input(args.image)
    if args.other:
        _check_input(args.other)
    _check_output(args.output)
    img = read_image(args.image)
    other = read_image(args.other) if args.other else None
    bits = None
    if args.bits:
        _check_input(args.bits)
        bits = read_bits(args.bits)
    if other is not None and other.shape != img.shape:
        raise InvalidArg(f"image shapes differ: {img.shape} vs {other.shape}")
    report = image_report(img, other, n_pairs=args.pairs, rng_seed=args.rng_seed, bits=bits)
    report.config.update(_config(args))
    _write_json(args.output, report.to_dict())
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaokey", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", dest="config_file",
                        help="flat key=value file; command-line flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the 9D system and write a trajectory CSV")
    _add_system(p)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("-o", "--output", type=Path, default=Path("trajectory.csv"))
    p.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="dynamics analyses").add_subparsers(dest="analysis",
                                                                            required=True)
    p = an.add_parser("lyapunov")
    _add_system(p)
    p.add_argument("--total-time", type=float, default=500.0)
    p.add_argument("--transient-time", type=float, default=50.0)
    p.add_argument("--reorth", type=int, default=10)
    p.add_argument("--trace", type=Path, help="CSV of the running estimate")
    p.add_argument("--trace-every", type=int, default=100)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_lyapunov)

    p = an.add_parser("bifurcation")
    _add_system(p)
    p.add_argument("--vary", choices=("a", "b", "c"), default="a")
    p.add_argument("--lo", type=float, default=20.0)
    p.add_argument("--hi", type=float, default=30.0)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--component", type=int, default=0, help="0-based state index")
    p.add_argument("--steps", type=int, default=50_000)
    p.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    p.add_argument("-o", "--output", type=Path, default=Path("bifurcation.csv"))
    p.set_defaults(func=cmd_bifurcation)

    p = an.add_parser("zero-one")
    _add_system(p)
    p.add_argument("--input", type=Path, help="trajectory CSV; simulated when omitted")
    p.add_argument("--column", default="u1")
    p.add_argument("--every", type=int, default=100, help="keep every n-th sample")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    p.add_argument("--c01", type=float)
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_zero_one)

    p = an.add_parser("complexity")
    _add_system(p)
    p.add_argument("--a-range", type=_pair, default=(20.0, 30.0))
    p.add_argument("--c-range", type=_pair, default=(0.5, 2.0))
    p.add_argument("--resolution", type=_res, default=(20, 20))
    p.add_argument("--samples", type=int, default=8192)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--transient", type=int, default=DEFAULT_TRANSIENT)
    p.add_argument("-o", "--output", default="complexity", help="output prefix")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("encrypt", help="encrypt an image; writes container and key file")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, default=Path("cipher.chk"))
    p.add_argument("--key", type=Path, default=Path("cipher.key"))
    p.add_argument("--region", type=_rect, help="x,y,w,h")
    p.add_argument("--seed", help="optional user secret mixed into the key")
    p.add_argument("--cipher-png", type=Path, help="also save the cipher as an image")
    p.add_argument("--metrics", type=Path, help="write a metrics report of the cipher")
    p.add_argument("--pairs", type=int, default=3000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a container with its key file")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, default=Path("decrypted.png"))
    p.add_argument("--key", type=Path, default=Path("cipher.key"))
    p.set_defaults(func=cmd_decrypt)

    fr = sub.add_parser("frame", help="Modbus RTU CRC protection").add_subparsers(
        dest="action", required=True)
    p = fr.add_parser("protect", help="hex address+function+data -> frame with encrypted CRC")
    p.add_argument("frame")
    p.add_argument("--key", type=Path, default=Path("cipher.key"))
    p.add_argument("--nonce", type=int, default=0)
    p.set_defaults(func=cmd_frame_protect)
    p = fr.add_parser("verify", help="check a received frame; exit 6 on reject")
    p.add_argument("frame")
    p.add_argument("--key", type=Path, default=Path("cipher.key"))
    p.add_argument("--nonce", type=int, default=0)
    p.set_defaults(func=cmd_frame_verify)

    p = sub.add_parser("keystream", help="export keystream bits and run the NIST subset")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--key", type=Path, default=Path("cipher.key"))
    src.add_argument("--image", type=Path, help="derive the key from this image")
    p.add_argument("--seed")
    p.add_argument("--write-key", type=Path)
    p.add_argument("--bits", type=int, default=1_000_000)
    p.add_argument("--sequence", choices=SEQUENCE_NAMES, default="A")
    p.add_argument("-o", "--output", type=Path, default=Path("keystream.txt"))
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_keystream)

    p = sub.add_parser("metrics", help="histogram, correlation, entropy, SSIM report")
    p.add_argument("image", type=Path)
    p.add_argument("other", type=Path, nargs="?")
    p.add_argument("--bits", type=Path, help="ASCII bit file for the NIST subset")
    p.add_argument("--pairs", type=int, default=3000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_metrics)
    return parser


def read_config(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArg(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, cfg: dict) -> None:
    """Install config values as defaults on every (sub)parser that knows the key."""
    stack = [parser]
    while stack:
        p = stack.pop()
        dests = {a.dest: a for a in p._actions}
        known = {k: v for k, v in cfg.items() if k in dests and k != "help"}
        for k, v in known.items():
            a = dests[k]
            if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                known[k] = v.lower() in ("1", "true", "yes", "on")
        p.set_defaults(**known)
        for a in p._actions:
            if isinstance(a, argparse._SubParsersAction):
                stack.extend(a.choices.values())


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", dest="config_file")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config_file:
            _apply_config(parser, read_config(known.config_file))
    except OSError as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidArg as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except KeyMissing as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_KEY
    except FormatError as exc:
        if isinstance(exc, InvalidArg) and args.command == "frame":
            print(f"chaokey: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except InvalidArg as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFinite as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"chaokey: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
