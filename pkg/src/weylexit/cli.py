"""Command-line entry point: ``weylexit {partition,law,tail,constant,verify}``.

Exit codes: 0 ok, 1 verification failure, 2 usage or parse error,
3 capability error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .asymptotics import asymptotic_law
from .constant import AsymptoticRegimeError, constant_direct, constant_extracted
from .exact_tail import km_survival, proposition_tail, tail_exact, tail_n2_closed
from .montecarlo import THREADS_ENV, SimConfig, estimate_tail, resolve_threads
from .numerics import CapabilityError, QuadratureSpec
from .partition import DriftVector, ParseError, StartVector, parse_vector, partition_dict, stable_partition
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAPABILITY = 0, 1, 2, 3
VECTOR_OPTIONS = ("--drifts", "--x", "--t-grid")
TAIL_METHODS = ("km", "exact", "prop", "closed2", "mc")


@dataclass
class RunManifest:
    command: list
    config: dict
    version: str
    wall_time: float = 0.0
    outputs: object = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


def version_string() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        v = "0+unknown"
    try:
        here = Path(__file__).resolve().parent
        desc = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                              capture_output=True, text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            v += "+" + desc.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return v


def _round(obj):
    """Round floats to 12 significant digits for printing."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def _emit(data, fmt: str, out) -> None:
    data = _round(data)
    if fmt == "json":
        out.write(json.dumps(data) + "\n")
        return
    rows = data if isinstance(data, list) else [data]
    flat = [{k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()} for r in rows]
    keys = list(dict.fromkeys(k for r in flat for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(flat)
    out.write(buf.getvalue())


def _quad_spec(args) -> QuadratureSpec | None:
    if args.quad_truncation is None and args.quad_points is None and args.quad_scheme is None \
            and args.quad_panels is None:
        return None
    base = QuadratureSpec()
    return QuadratureSpec(
        truncation=args.quad_truncation or base.truncation,
        points_per_dim=args.quad_points or base.points_per_dim,
        scheme=args.quad_scheme or base.scheme,
        panels=args.quad_panels or base.panels,
    )


def _float_list(text: str) -> list[float]:
    return [float(v) for v in parse_vector(text)]


def cmd_partition(args):
    a = DriftVector.of(parse_vector(args.drifts))
    return partition_dict(stable_partition(a))


def cmd_law(args):
    return asymptotic_law(parse_vector(args.drifts)).to_dict()


def _tail_one(args, x, a, t, q):
    m = args.method
    if m == "km":
        if any(v != a.values[0] for v in a.values):
            raise CapabilityError("method km is for equal drifts only")
        est = km_survival(x, t, q)
    elif m == "exact":
        est = tail_exact(x, a, t, q)
    elif m == "prop":
        est = proposition_tail(x, a, t, q)
    elif m == "closed2":
        est = tail_n2_closed(x, a, t)
    else:
        cfg = SimConfig(dt=args.mc_dt, replicas=args.mc_replicas, seed=args.mc_seed,
                        bridge_correction=not args.mc_no_bridge)
        est = estimate_tail(x, a, t, cfg, args.threads)
    return est.to_dict(t=t, n=a.n)


def cmd_tail(args):
    a = DriftVector.of(parse_vector(args.drifts))
    x = StartVector.of(_float_list(args.x))
    if x.n != a.n:
        raise ParseError("--x and --drifts differ in length")
    q = _quad_spec(args)
    if args.t_grid:
        return [_tail_one(args, x, a, t, q) for t in _float_list(args.t_grid)]
    if args.t is None:
        raise ParseError("give --t or --t-grid")
    return _tail_one(args, x, a, args.t, q)


def cmd_constant(args):
    a = DriftVector.of(parse_vector(args.drifts))
    q = _quad_spec(args)
    if args.method == "direct":
        rep = constant_direct(a, q=q)
    else:
        if not args.x or not args.t_grid:
            raise ParseError("--method extract needs --x and --t-grid")
        x = StartVector.of(_float_list(args.x))
        rep = constant_extracted(x, a, t_grid=_float_list(args.t_grid), oracle=args.oracle)
    return rep.to_dict()


def cmd_verify(args):
    rows = run_suite(args.suite, threads=args.threads)
    for r in rows:
        print(r.line(), file=sys.stderr)
    data = [r.to_dict() for r in rows]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"verify_{args.suite}.json").write_text(json.dumps(_round(data), indent=1) + "\n", encoding="utf-8")
        with open(out / f"verify_{args.suite}.csv", "w", encoding="utf-8", newline="") as fh:
            _emit(data, "csv", fh)
    failed = [r.name for r in rows if not r.passed]
    return data, failed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weylexit", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--manifest", metavar="PATH", help="write a run manifest JSON here")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="stable partition and strong representation")
    p.add_argument("--drifts", required=True)

    p = sub.add_parser("law", help="gamma, alpha and the h(x) descriptor")
    p.add_argument("--drifts", required=True)

    def quad_opts(sp):
        sp.add_argument("--quad-truncation", type=float)
        sp.add_argument("--quad-points", type=int)
        sp.add_argument("--quad-panels", type=int)
        sp.add_argument("--quad-scheme", choices=("gauss_legendre", "gauss_hermite", "tensor_trapezoid", "adaptive"))

    p = sub.add_parser("tail", help="P_x(tau > t) by one of the oracles")
    p.add_argument("--x", required=True)
    p.add_argument("--drifts", required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--t-grid")
    p.add_argument("--method", choices=TAIL_METHODS, default="exact")
    quad_opts(p)
    p.add_argument("--mc-dt", type=float)
    p.add_argument("--mc-replicas", type=int, default=100_000)
    p.add_argument("--mc-seed", type=int, default=0)
    p.add_argument("--mc-no-bridge", action="store_true")

    p = sub.add_parser("constant", help="the constant C, direct or extracted")
    p.add_argument("--drifts", required=True)
    p.add_argument("--method", choices=("direct", "extract"), default="direct")
    p.add_argument("--x")
    p.add_argument("--t-grid")
    p.add_argument("--oracle", choices=("exact", "closed2", "km"), default="exact")
    quad_opts(p)

    p = sub.add_parser("verify", help="run acceptance checks")
    p.add_argument("--suite", choices=tuple(SUITES), default="all")
    p.add_argument("--out", help="directory for per-suite JSON and CSV reports")
    return parser


def _glue_vectors(argv):
    """Join ``--drifts -1,2`` into ``--drifts=-1,2`` so negative lists parse."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in VECTOR_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


COMMANDS = {"partition": cmd_partition, "law": cmd_law, "tail": cmd_tail, "constant": cmd_constant}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_vectors(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.threads is not None:
        args.threads = resolve_threads(args.threads)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        if args.command == "verify":
            data, failed = cmd_verify(args)
            if failed:
                print("verification failed: " + "; ".join(failed), file=sys.stderr)
                code = EXIT_VERIFY
        else:
            data = COMMANDS[args.command](args)
    except (CapabilityError, AsymptoticRegimeError, ArithmeticError) as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(data, args.format, sys.stdout)
    if args.manifest:
        config = {k: v for k, v in vars(args).items() if k != "manifest"}
        man = RunManifest(["weylexit"] + argv, config, version_string(), time.perf_counter() - t0, data)
        Path(args.manifest).write_text(json.dumps(_round(man.to_dict()), indent=1) + "\n", encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
