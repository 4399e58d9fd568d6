"""Command-line front end.

    roundwalk lattice-retract --basis '[[0.5,0],[0,2]]'
    roundwalk h2-retract --z 0.1+1.2i
    roundwalk spectrum --fn '[[2,2,2],[0,0,0]]' --cutoff 4 --format csv
    roundwalk systoles --fn '[[1.5,1.5,1.5],[0,0,0]]'
    roundwalk surface-retract --fn '[[0.5,2,2],[0,0,0]]' --stop thick --eps 1.0
    roundwalk batch --input runs.json --jobs 4

Exit status: 0 success, 2 domain error, 1 I/O error, 64 unknown command.
Errors go to stderr as one JSON line ``{"error": kind, "reason": text}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .hyperbolic import FNPoint, GeometryError, fn_to_group
from .lattice import Lattice, LatticeError, reduce_h2, retract, retract_h2
from .spectrum import EPS0, HARD_CAP, TOL_SYS, SpectrumError, length_spectrum, spectrum_csv, systole_set
from .surface import FlowError, flow

COMMANDS = ("lattice-retract", "h2-retract", "spectrum", "systoles", "surface-retract", "batch")
EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 64
DOMAIN_ERRORS = (ValueError, LatticeError, GeometryError, SpectrumError, FlowError, ArithmeticError)


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roundwalk", description="Well-rounded and systole retractions.")
    p.add_argument("command", help=" | ".join(COMMANDS))
    p.add_argument("--basis", help="lattice basis as JSON (columns are basis vectors)")
    p.add_argument("--z", help="upper half-plane point, e.g. 0.1+1.2i")
    p.add_argument("--fn", help="Fenchel-Nielsen point as JSON [[l1,l2,l3],[t1,t2,t3]]")
    p.add_argument("--input", help="JSON file (or inline JSON) supplying the input or a batch")
    p.add_argument("--stop", choices=("thick", "spine", "s2"), default="thick")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--eps0", type=float, default=EPS0)
    p.add_argument("--tol-sys", type=float, default=TOL_SYS)
    p.add_argument("--cutoff", type=float, default=4.0)
    p.add_argument("--max-word-len", type=int, default=HARD_CAP, help="hard cap on the word-length bound")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1)
    return p


# -- input parsing ---------------------------------------------------------------


def _load_json(text: str):
    """Inline JSON, or a path to a JSON file."""
    text = text.strip()
    if text[:1] in "[{" or text[:1].isdigit() or text[:1] == "-":
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    if t.endswith("j") and t[-2:-1] in ("+", "-", ""):
        t = t[:-1] + "1j"
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


def format_complex(z: complex, digits: int = 6) -> str:
    re = f"{z.real:.{digits}f}".rstrip("0").rstrip(".")
    im = f"{abs(z.imag):.{digits}f}".rstrip("0").rstrip(".")
    sign = "-" if z.imag < 0 else "+"
    return f"{re}{sign}{im}i"


def _config(args) -> dict:
    cfg = {
        "command": args.command,
        "version": __version__,
        "tol_sys": args.tol_sys,
        "eps": args.eps,
        "eps0": args.eps0,
        "format": args.format,
        "seed": os.environ.get("ROUNDWALK_SEED"),
    }
    for key in ("basis", "z", "fn", "input"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if args.command == "spectrum":
        cfg["cutoff"] = args.cutoff
    if args.command in ("spectrum", "systoles", "surface-retract"):
        cfg["max_word_len"] = args.max_word_len
    if args.command == "surface-retract":
        cfg["stop"] = args.stop
    return cfg


def _check(args) -> None:
    for name in ("tol_sys", "eps", "eps0", "cutoff"):
        if not getattr(args, name) > 0:
            raise ValueError(f"{name.replace('_', '-')} must be positive")
    if args.eps0 > EPS0:
        raise ValueError(f"eps0 may not exceed the collar constant {EPS0:.12g}")
    if args.eps > args.eps0:
        raise ValueError("eps must not exceed eps0")
    if args.max_word_len < 1:
        raise ValueError("max-word-len must be >= 1")


def _fn(args) -> FNPoint:
    src = args.fn if args.fn is not None else args.input
    if src is None:
        raise ValueError("--fn is required")
    return FNPoint.from_dict(_load_json(src))


# -- commands -----------------------------------------------------------------------


def _lattice_retract(args):
    src = args.basis if args.basis is not None else args.input
    if src is None:
        raise ValueError("--basis is required")
    data = _load_json(src)
    lat = Lattice.from_dict(data) if isinstance(data, dict) else Lattice(np.array(data, dtype=float))
    traj = retract(lat)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "t_star", "rank_before", "rank_after"])
        for i, e in enumerate(traj.events, 1):
            w.writerow([i, repr(e.t_star), e.rank_before, e.rank_after])
        return buf.getvalue()
    return {"trajectory": traj.to_dict(), "final_basis": traj.final.basis.tolist()}


def _h2_retract(args):
    if args.z is None:
        raise ValueError("--z is required")
    z = parse_complex(args.z)
    w, g = reduce_h2(z)
    r = retract_h2(w)
    if args.format == "csv":
        return "re,im\n" + f"{r.real!r},{r.imag!r}\n"
    return {
        "input": [z.real, z.imag],
        "reduced": [w.real, w.imag],
        "reduction": g.tolist(),
        "retracted": [r.real, r.imag],
        "text": format_complex(r),
    }


def _spectrum(args):
    group = fn_to_group(_fn(args))
    spec = length_spectrum(group, args.cutoff, hard_cap=args.max_word_len)
    if args.format == "csv":
        return spectrum_csv(spec)
    return {"cutoff": args.cutoff, "classes": [c.to_dict() for c in spec]}


def _systoles(args):
    s = systole_set(fn_to_group(_fn(args)), args.tol_sys, hard_cap=args.max_word_len)
    if args.format == "csv":
        return spectrum_csv(s.classes)
    return s.to_dict()


def _surface_retract(args):
    traj = flow(_fn(args), stop=args.stop, eps=args.eps, tol_sys=args.tol_sys)
    if args.format == "csv":
        return traj.to_csv()
    return traj.to_dict()


HANDLERS = {
    "lattice-retract": _lattice_retract,
    "h2-retract": _h2_retract,
    "spectrum": _spectrum,
    "systoles": _systoles,
    "surface-retract": _surface_retract,
}


# -- output --------------------------------------------------------------------------


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".roundwalk-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(args, result) -> str:
    if isinstance(result, str):
        return result
    return json.dumps({"config": _config(args), "result": result}, indent=2) + "\n"


def _fail(kind: str, reason: str, code: int) -> int:
    print(json.dumps({"error": kind, "reason": reason}), file=sys.stderr)
    return code


def run(args) -> int:
    """Execute one parsed configuration; returns the exit status."""
    try:
        _check(args)
        text = _render(args, HANDLERS[args.command](args))
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    except DOMAIN_ERRORS as e:
        return _fail("domain", str(e), EXIT_DOMAIN)
    try:
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    return EXIT_OK


def _batch_args(entry: dict) -> list:
    argv = [entry["command"]]
    for k, v in entry.items():
        if k == "command":
            continue
        flag = "--" + k.replace("_", "-")
        argv += [flag, v if isinstance(v, str) else json.dumps(v)]
    return argv


def _run_entry(entry: dict) -> int:
    args = _parser().parse_args(_batch_args(entry))
    if args.command not in HANDLERS:
        return _fail("usage", f"unknown command {args.command!r}", EXIT_USAGE)
    return run(args)


def _batch(args) -> int:
    if args.input is None:
        return _fail("usage", "batch needs --input", EXIT_USAGE)
    try:
        entries = _load_json(args.input)
    except OSError as e:
        return _fail("io", str(e), EXIT_IO)
    except ValueError as e:
        return _fail("domain", str(e), EXIT_DOMAIN)
    if not isinstance(entries, list) or not all(isinstance(e, dict) and "command" in e for e in entries):
        return _fail("domain", "batch input must be a JSON array of objects with a command", EXIT_DOMAIN)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = list(ex.map(_run_entry, entries))
    else:
        codes = [_run_entry(e) for e in entries]
    return max(codes, default=EXIT_OK)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    if not argv or argv[0] in ("-h", "--help"):
        parser.print_help(sys.stderr if not argv else sys.stdout)
        return EXIT_USAGE if not argv else EXIT_OK
    if argv[0] not in COMMANDS:
        parser.print_usage(sys.stderr)
        return _fail("usage", f"unknown command {argv[0]!r}", EXIT_USAGE)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.command == "batch":
        return _batch(args)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
