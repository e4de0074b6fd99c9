"""Command-line front end.

Usage::

    tdm gen --v 3                      # F_{3,0} on the principal branch
    tdm expand --v 3 --kmax 3 --format csv
    tdm verify                         # oracle suite, pass/fail matrix
    tdm mc --beta 2 --N 100 --samples 10000 --seed 42
    tdm export --input table.json --format csv

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from .looprec import DEFAULT_VMAX
from .seriesx import SOURCES, CumulantRecord

__all__ = [
    "RunConfig",
    "ConfigError",
    "main",
    "write_records",
    "read_records",
    "resolve_threads",
]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

log = logging.getLogger("tdm")


class ConfigError(ValueError):
    """Invalid command-line configuration (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    v: int = 1
    kmax: int = 3
    beta: Fraction | None = None  # None keeps beta symbolic
    seed: int = 0
    samples: int = 10000
    n_channels: int = 100
    threads: int = 1
    format: str = "text"
    output: str | None = None
    vmax: int = DEFAULT_VMAX

    def validate(self) -> "RunConfig":
        if self.format not in ("json", "csv", "text"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.command in ("gen", "expand"):
            if self.v < 1:
                raise ConfigError(f"--v must be >= 1, got {self.v}")
            if self.v > self.vmax:
                raise ConfigError(f"--v {self.v} exceeds the configured maximum {self.vmax}")
        if self.command == "expand" and self.kmax < 1:
            raise ConfigError(f"--kmax must be >= 1, got {self.kmax}")
        if self.command == "mc":
            if self.beta not in (1, 2, 4):
                raise ConfigError(f"--beta must be 1, 2 or 4 for mc, got {self.beta}")
            if self.samples < 100:
                raise ConfigError(f"insufficient samples: need >= 100, got {self.samples}")
            if self.n_channels < 2:
                raise ConfigError("--N must be >= 2")
            if self.kmax < 1:
                raise ConfigError(f"--kmax must be >= 1, got {self.kmax}")
        if self.threads < 1:
            raise ConfigError("thread count must be >= 1")
        return self


def resolve_threads(flag: int | None) -> int:
    """``TDM_THREADS`` overrides the flag; the default is the available parallelism."""
    env = os.environ.get("TDM_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"TDM_THREADS must be an integer, got {env!r}") from exc
    if flag is not None:
        return flag
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------

CSV_COLUMNS = ("v", "kappa", "alpha", "source")


def record_to_json(r: CumulantRecord) -> dict:
    return {
        "v": r.v,
        "kappa": list(r.kappa),
        "alpha": str(r.alpha),
        "beta_exponent": 1 - r.v,
        "source": r.source,
    }


def record_from_json(d: dict) -> CumulantRecord:
    kappa = tuple(int(k) for k in d["kappa"])
    v = int(d["v"])
    if "beta_exponent" in d and int(d["beta_exponent"]) != 1 - v:
        raise ValueError(f"beta_exponent {d['beta_exponent']} inconsistent with v = {v}")
    return CumulantRecord(v, kappa, int(str(d["alpha"])), str(d["source"]))


def write_records(records: Iterable[CumulantRecord], fmt: str, out: TextIO) -> None:
    records = list(records)
    if fmt == "json":
        json.dump([record_to_json(r) for r in records], out, indent=1)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([r.v, ";".join(str(k) for k in r.kappa), str(r.alpha), r.source])
    elif fmt == "text":
        width = max((len(str(r.alpha)) for r in records), default=1)
        for r in records:
            kappa = "(" + ",".join(str(k) for k in r.kappa) + ")"
            out.write(f"{r.v}  {kappa:<{2 * r.v + 2}}  {r.alpha:>{width}}  {r.source}\n")
    else:
        raise ConfigError(f"unknown format {fmt!r}")


def read_records(inp: TextIO, fmt: str | None = None) -> list[CumulantRecord]:
    """Parse records written by :func:`write_records` (JSON or CSV; sniffed when ``fmt`` is None)."""
    text = inp.read()
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("[") else "csv"
    if fmt == "json":
        return [record_from_json(d) for d in json.loads(text)]
    if fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        out = []
        for row in rows:
            kappa = tuple(int(k) for k in row["kappa"].split(";"))
            out.append(CumulantRecord(int(row["v"]), kappa, int(row["alpha"]), row["source"]))
        return out
    raise ConfigError(f"cannot read format {fmt!r}")


def _open_output(path: str | None):
    if path is None or path == "-":
        return _NoClose(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


class _NoClose:
    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        self.stream.flush()
        return False


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> int:
    from .symcore import BETA, expr_substitute
    from .wsmodel import gen_F

    f = gen_F(cfg.v)
    if cfg.beta is not None:
        f = expr_substitute(f, {BETA: cfg.beta})
    with _open_output(cfg.output) as out:
        if cfg.format == "json":
            json.dump({"v": cfg.v, "beta_exponent": 1 - cfg.v, "numerator": str(f.num), "denominator": _den_str(f)}, out)
            out.write("\n")
        else:
            out.write(f"F_{cfg.v},0 = {f}\n")
    return EXIT_OK


def _den_str(f) -> str:
    text = str(f)
    return text.split(" / ", 1)[1] if " / " in text else "1"


def cmd_expand(cfg: RunConfig) -> int:
    from .seriesx import extract_alpha

    records = extract_alpha(cfg.v, cfg.kmax)
    with _open_output(cfg.output) as out:
        write_records(records, cfg.format, out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, corrupt: tuple[int, tuple[int, ...], int] | None = None) -> int:
    from .verify import run_verification

    report = run_verification(vmax=cfg.v, corrupt=corrupt)
    with _open_output(cfg.output) as out:
        if cfg.format == "json":
            json.dump(report.to_json(), out, indent=1)
            out.write("\n")
        else:
            out.write(report.render())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_mc(cfg: RunConfig) -> int:
    from .oracle.closed import closed_alpha2, schroder
    from .oracle.montecarlo import empirical_cumulants, mc_grid, sample_ensemble

    beta = int(cfg.beta)
    samples = sample_ensemble(cfg.n_channels, beta, cfg.samples, cfg.seed, cfg.threads)
    rows = []
    for v in (1, 2):
        for kappa in mc_grid(cfg.kmax, v):
            est, se = empirical_cumulants(samples, kappa)
            alpha = schroder(kappa[0]) if v == 1 else closed_alpha2(*kappa)
            target = alpha / beta ** (v - 1)
            z = (est - target) / se if se > 0 else float("nan")
            rows.append({"v": v, "kappa": list(kappa), "estimate": est, "stderr": se, "target": target, "z": z})
    with _open_output(cfg.output) as out:
        if cfg.format == "json":
            meta = {"N": cfg.n_channels, "beta": beta, "samples": cfg.samples, "seed": cfg.seed}
            json.dump({"config": meta, "rows": rows}, out, indent=1)
            out.write("\n")
        elif cfg.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["v", "kappa", "estimate", "stderr", "target", "z"])
            for r in rows:
                w.writerow([r["v"], ";".join(map(str, r["kappa"])), repr(r["estimate"]), repr(r["stderr"]), repr(r["target"]), repr(r["z"])])
        else:
            out.write(f"# N={cfg.n_channels} beta={beta} samples={cfg.samples} seed={cfg.seed}\n")
            out.write("# N^(2(v-1)) C_v(T_k...) vs alpha/beta^(v-1)\n")
            for r in rows:
                kappa = "(" + ",".join(map(str, r["kappa"])) + ")"
                out.write(f"{r['v']}  {kappa:<8} {r['estimate']:14.6f} +- {r['stderr']:.6f}  target {r['target']:12.6f}  z={r['z']:+.2f}\n")
    return EXIT_OK


def cmd_export(cfg: RunConfig, source: str, input_path: str | None, input_format: str | None) -> int:
    if source == "file":
        if input_path is None:
            raise ConfigError("export needs --input (or --table / --closed)")
        try:
            with open(input_path, encoding="utf-8") as fh:
                records = read_records(fh, input_format)
        except OSError as exc:
            raise ConfigError(f"cannot read {input_path}: {exc.strerror}") from exc
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"malformed record file {input_path}: {exc}") from exc
    elif source == "table":
        from .oracle.reference import reference_table

        records = reference_table().records
    else:
        from .oracle.closed import closed_alpha2, closed_alpha3, schroder
        import itertools

        fn = {1: schroder, 2: closed_alpha2, 3: closed_alpha3}.get(cfg.v)
        if fn is None:
            raise ConfigError("closed forms exist for v = 1, 2, 3 only")
        records = [
            CumulantRecord(cfg.v, k, fn(*k), "CLOSED_FORM")
            for k in itertools.product(range(1, cfg.kmax + 1), repeat=cfg.v)
        ]
    records = sorted(records, key=lambda r: (r.v, r.kappa))
    with _open_output(cfg.output) as out:
        write_records(records, cfg.format, out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------


def _parse_beta(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid beta {text!r}") from exc


def _parse_corrupt(text: str) -> tuple[int, tuple[int, ...], int]:
    """``V:K1,K2,...=ALPHA``, e.g. ``2:1,1=5``."""
    try:
        head, alpha = text.split("=")
        v, kappa = head.split(":")
        return int(v), tuple(int(k) for k in kappa.split(",")), int(alpha)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected V:K1,K2,...=ALPHA, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tdm", description="Exact limiting cumulants of time-delay power traces.")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt_default="text"):
        sp.add_argument("--format", choices=("json", "csv", "text"), default=fmt_default)
        sp.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--vmax", type=int, default=DEFAULT_VMAX, help="largest order the engine will build")

    g = sub.add_parser("gen", help="print the generating function F_{v,0}")
    g.add_argument("--v", type=int, required=True)
    g.add_argument("--beta", type=_parse_beta, default=None, help="substitute a value for beta")
    common(g)

    e = sub.add_parser("expand", help="table of alpha[kappa] for 1 <= kappa_i <= kmax")
    e.add_argument("--v", type=int, required=True)
    e.add_argument("--kmax", type=int, default=3)
    common(e)

    v = sub.add_parser("verify", help="run the oracle suite")
    v.add_argument("--v", type=int, default=5, help="largest order for structure and table checks")
    v.add_argument("--corrupt", type=_parse_corrupt, default=None, help="replace one reference entry (harness self-test)")
    common(v)

    m = sub.add_parser("mc", help="Monte-Carlo check of the leading cumulants")
    m.add_argument("--beta", type=_parse_beta, required=True)
    m.add_argument("--N", type=int, default=100, dest="n_channels")
    m.add_argument("--samples", type=int, default=10000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--kmax", type=int, default=2)
    common(m)

    x = sub.add_parser("export", help="convert or emit record tables")
    src = x.add_mutually_exclusive_group()
    src.add_argument("--input", default=None, help="JSON or CSV record file")
    src.add_argument("--table", action="store_true", help="emit the published reference values")
    src.add_argument("--closed", type=int, default=None, metavar="V", help="emit closed-form values for v = 1, 2, 3")
    x.add_argument("--input-format", choices=("json", "csv"), default=None)
    x.add_argument("--kmax", type=int, default=3)
    common(x, "json")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
        threads = resolve_threads(args.threads)
        cfg = RunConfig(
            command=args.command,
            v=getattr(args, "v", None) or (args.closed if args.command == "export" and args.closed else 1),
            kmax=getattr(args, "kmax", 3),
            beta=getattr(args, "beta", None),
            seed=getattr(args, "seed", 0),
            samples=getattr(args, "samples", 10000),
            n_channels=getattr(args, "n_channels", 100),
            threads=threads,
            format=args.format,
            output=args.output,
            vmax=args.vmax,
        )
        if args.command == "gen" or args.command == "expand":
            if args.v is not None and args.v < 1:
                raise ConfigError(f"--v must be >= 1, got {args.v}")
        if args.command == "verify" and (args.v < 3):
            raise ConfigError("verify --v must be >= 3")
        cfg.validate()
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "expand":
            return cmd_expand(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.corrupt)
        if args.command == "mc":
            return cmd_mc(cfg)
        source = "table" if args.table else ("closed" if args.closed is not None else "file")
        return cmd_export(cfg, source, args.input, args.input_format)
    except ConfigError as exc:
        print(f"tdm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        # integrality, beta-residue or sqrt(2)-residue violations
        print(f"tdm: verification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main_exit() -> None:  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_exit()
