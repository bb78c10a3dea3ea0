"""Command-line front end: bound tables, Lindblad curves and oracle values."""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounds import ALL_KINDS, SS_TOL, BoundKind, compute_bounds, is_ss
from .channel import MODEL_NAMES, build_model, load_channel
from .errors import InvalidInputError, SolverError
from .gauge import g_table
from .lindblad import classify_span, integrate_bound, load_model
from .qfi import Strategy, simulate_intro
from .sdp import FEAS_TOL, GAP_TOL, default_backend

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARSE, EXIT_SOLVER = 0, 2, 3


@dataclass
class RunConfig:
    input: str | None = None
    model: str | None = None
    p: float | None = None
    phi: float = 0.0
    mode: str = "bounds"
    nmax: int = 100
    grid: int = 500
    bounds: tuple[BoundKind, ...] = ALL_KINDS
    normalize: bool = False
    deterministic: bool = False
    out: str | None = None
    format: str = "csv"
    time: float = 10.0
    steps: int = 10


@dataclass
class Table:
    metadata: dict = field(default_factory=dict)
    rows: list[tuple[int, str, float, float | None]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.10g}"


def _parse_kinds(text: str) -> tuple[BoundKind, ...]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("bound list is empty")
    try:
        return tuple(BoundKind(s) for s in names)
    except ValueError as exc:
        valid = ", ".join(k.value for k in ALL_KINDS)
        raise argparse.ArgumentTypeError(f"{exc}; valid kinds: {valid}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qfibounds",
        description="Upper bounds on the quantum Fisher information of repeated channel uses.")
    ap.add_argument("--input", help="channel JSON (bounds mode) or Lindblad JSON (lindblad mode)")
    ap.add_argument("--model", choices=MODEL_NAMES, help="built-in qubit model instead of --input")
    ap.add_argument("--p", type=float, help="noise parameter of the built-in model")
    ap.add_argument("--phi", type=float, default=0.0, help="signal phase (default 0)")
    ap.add_argument("--mode", choices=("bounds", "lindblad", "oracle"), default="bounds")
    ap.add_argument("--nmax", type=_positive_int, default=100)
    ap.add_argument("--grid", type=_positive_int, default=500, help="g-table size (default 500)")
    ap.add_argument("--bounds", type=_parse_kinds, default=ALL_KINDS,
                    help="comma-separated bound kinds (default: all)")
    ap.add_argument("--normalize", action="store_true", help="also report value / (n F1)")
    ap.add_argument("--deterministic", action="store_true", help="omit the timestamp line")
    ap.add_argument("--out", help="output file (default stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--time", type=float, default=10.0, help="final time for lindblad mode")
    ap.add_argument("--steps", type=int, default=10, help="initial step count for lindblad mode")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(ns.input, ns.model, ns.p, ns.phi, ns.mode, ns.nmax, ns.grid, ns.bounds,
                     ns.normalize, ns.deterministic, ns.out, ns.format, ns.time, ns.steps)


def _channel(cfg: RunConfig):
    if cfg.input and cfg.model:
        raise InvalidInputError("give either --input or --model, not both")
    if cfg.input:
        return load_channel(cfg.input), {"input": cfg.input}
    if cfg.model:
        if cfg.p is None:
            raise InvalidInputError("--model requires --p")
        return build_model(cfg.model, cfg.p, cfg.phi), {"model": cfg.model, "p": cfg.p, "phi": cfg.phi}
    raise InvalidInputError("no channel given: use --input or --model/--p")


def run_bounds(cfg: RunConfig) -> Table:
    ch, source = _channel(cfg)
    if cfg.grid < 2:
        raise InvalidInputError("--grid must be at least 2")
    gt = g_table(ch, cfg.grid)
    f1 = 4 * gt.r ** 2
    tab = Table(dict(source, l=fmt(gt.l), r=fmt(gt.r), grid=gt.size, nmax=cfg.nmax,
                     solver=default_backend().solver, feas_tol=fmt(FEAS_TOL), gap_tol=fmt(GAP_TOL),
                     ss_tol=fmt(SS_TOL)))
    if cfg.normalize and f1 == 0:
        tab.warnings.append("single-use QFI is zero; normalized column left empty")
    series = compute_bounds(gt, cfg.nmax, cfg.bounds)
    for kind in cfg.bounds:
        s = series[kind]
        if s is None:
            tab.warnings.append(f"{kind.value} omitted: l = {fmt(gt.l)} (beta removable, linear scaling)")
            continue
        norm = s.normalized(f1) if cfg.normalize and f1 > 0 else None
        for n in range(1, cfg.nmax + 1):
            tab.rows.append((n, kind.value, s[n], None if norm is None else float(norm[n - 1])))
    if is_ss(gt):
        tab.metadata["scaling"] = "standard"
    return tab


def run_lindblad(cfg: RunConfig) -> Table:
    if not cfg.input:
        raise InvalidInputError("lindblad mode needs --input with a Lindblad model")
    m = load_model(cfg.input)
    span = classify_span(m)
    curve = integrate_bound(m, cfg.time, cfg.steps)
    tab = Table({"input": cfg.input, "T": fmt(cfg.time), "steps": curve.steps,
                 "dt": fmt(cfg.time / curve.steps), "span": span.kind.value,
                 "coefficient": fmt(span.coefficient), "span_residual": fmt(span.residual),
                 "feas_tol": fmt(FEAS_TOL), "gap_tol": fmt(GAP_TOL)})
    for k, F in enumerate(curve.F):
        tab.rows.append((k, "Lindblad", float(F), None))
    return tab


def run_oracle(cfg: RunConfig) -> Table:
    if cfg.model not in (None, "dephasing_perp"):
        raise InvalidInputError("oracle mode only supports the dephasing_perp model")
    if cfg.p is None:
        raise InvalidInputError("oracle mode requires --p")
    tab = Table({"model": "dephasing_perp", "p": cfg.p, "phi": cfg.phi})
    for s in Strategy:
        tab.rows.append((2, s.value, simulate_intro(cfg.p, cfg.phi, s), None))
    return tab


def render(tab: Table, cfg: RunConfig) -> str:
    meta = dict(tab.metadata)
    meta["mode"] = cfg.mode
    meta["version"] = __version__
    if not cfg.deterministic:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    if cfg.format == "json":
        rows = [{"n": n, "kind": k, "value": float(fmt(v)),
                 "normalized": None if z is None else float(fmt(z))} for n, k, v, z in tab.rows]
        return json.dumps({"metadata": meta, "warnings": tab.warnings, "rows": rows}, indent=1) + "\n"
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key}={val}\n")
    for w in tab.warnings:
        buf.write(f"# warning={w}\n")
    buf.write("n,kind,value,normalized\n")
    for n, k, v, z in tab.rows:
        buf.write(f"{n},{k},{fmt(v)},{fmt(z)}\n")
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    try:
        tab = {"bounds": run_bounds, "lindblad": run_lindblad, "oracle": run_oracle}[cfg.mode](cfg)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for w in tab.warnings:
        log.warning(w)
    text = render(tab, cfg)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
