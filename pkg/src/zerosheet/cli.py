"""Batch command-line front end.

Commands: ``synth`` (make test data), ``search`` (find a blur, no
restoration), ``deblur`` (find and remove one blur), ``pipeline`` (remove a
sequence of blurs), ``roots`` (dump slice roots for inspection).  Every
command that searches writes a versioned JSON report whose numbers carry 17
significant digits, so reports are loss-free and byte-identical across
reruns (except the wall_time_ms fields).

Option precedence: command-line flags override the ``--config`` key=value
file, which overrides built-in defaults.  The env var ``ZEROSHEET_LOG``
(off|info|debug) controls stderr logging.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NoBlurFoundError, ZeroSheetError
from .image import (
    convolve,
    load_image,
    save_csv,
    save_matrix_csv,
    save_pgm,
    synth_blur,
    synth_image,
)
from .restore import pipeline, remove_blur
from .search import Axis, SearchConfig, search_image
from .zpoly import ZeroPolynomialError, slice_in_v, slice_roots, unit_point, ztransform

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_BLUR = 3
EXIT_PARTIAL = 4

log = logging.getLogger("zerosheet.cli")

_DEFAULTS: dict[str, object] = {
    "base_phase": 0.3,
    "phase_step": 0.01,
    "tol_null": 1e-6,
    "tol_real": 1e-6,
    "tol_track_ratio": 0.5,
    "max_combinations": 1_000_000,
    "axis": "v",
    "threads": 1,
    "seed": 7,
    "width": 40,
    "height": 40,
    "maxval": 255,
    "points": 1,
    "early_stop": False,
}

_CONFIG_TYPES: dict[str, type] = {
    "base_phase": float,
    "phase_step": float,
    "tol_null": float,
    "tol_real": float,
    "tol_track_ratio": float,
    "max_combinations": int,
    "axis": str,
    "threads": int,
    "seed": int,
    "width": int,
    "height": int,
    "maxval": int,
    "points": int,
    "early_stop": bool,
}


# --------------------------------------------------------------------------
# JSON emission: floats at 17 significant digits, deterministic key order
# --------------------------------------------------------------------------


def _json_escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _to_json(value, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite number {v!r} in report")
        return format(v, ".17g")
    if isinstance(value, str):
        return _json_escape(value)
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [_to_json(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}{_json_escape(str(k))}: {_to_json(v, indent + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def write_json(obj: dict, path) -> None:
    Path(path).write_text(_to_json(obj) + "\n", encoding="ascii")


# --------------------------------------------------------------------------
# Argument plumbing
# --------------------------------------------------------------------------


def _parse_size(text: str) -> tuple[int, int]:
    try:
        m, n = text.lower().split("x")
        m, n = int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"blur size {text!r} is not of the form MxN") from None
    if m < 1 or n < 1:
        raise argparse.ArgumentTypeError(f"blur size {text!r} must be positive")
    return m, n


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    return [_parse_size(tok) for tok in text.split(",") if tok.strip()]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _read_config_file(path) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ZeroSheetError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise ZeroSheetError(f"{path}:{lineno}: unknown config key {key!r}")
        caster = _CONFIG_TYPES[key]
        try:
            values[key] = _parse_bool(val) if caster is bool else caster(val)
        except ValueError:
            raise ZeroSheetError(f"{path}:{lineno}: bad value for {key!r}: {val!r}") from None
    return values


def _resolve(ns: argparse.Namespace) -> dict[str, object]:
    """Merge CLI flags over config-file values over defaults."""
    file_vals = _read_config_file(ns.config) if getattr(ns, "config", None) else {}
    out = dict(_DEFAULTS)
    out.update(file_vals)
    for key in _DEFAULTS:
        cli_val = getattr(ns, key, None)
        if cli_val is not None:
            out[key] = cli_val
    return out


def _build_config(opts: dict, m: int, n: int) -> SearchConfig:
    return SearchConfig(
        blur_m=m,
        blur_n=n,
        base_phase=float(opts["base_phase"]),
        phase_step=float(opts["phase_step"]),
        tol_null=float(opts["tol_null"]),
        tol_real=float(opts["tol_real"]),
        tol_track_ratio=float(opts["tol_track_ratio"]),
        max_combinations=int(opts["max_combinations"]),
        axis=Axis(str(opts["axis"]).lower()),
        early_stop=bool(opts["early_stop"]),
    )


def _config_echo(opts: dict) -> dict:
    return {
        "base_phase": float(opts["base_phase"]),
        "phase_step": float(opts["phase_step"]),
        "tol_null": float(opts["tol_null"]),
        "tol_real": float(opts["tol_real"]),
        "tol_track_ratio": float(opts["tol_track_ratio"]),
        "max_combinations": int(opts["max_combinations"]),
        "axis": str(opts["axis"]).lower(),
        "early_stop": bool(opts["early_stop"]),
    }


def _out_dir(ns) -> Path:
    out = Path(ns.output or "zerosheet_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_path(ns, out: Path) -> Path:
    return Path(ns.report) if getattr(ns, "report", None) else out / "report.json"


def _blur_rows(h: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in h]


def _stage_dict(report, restoration, wall_ms: float) -> dict:
    best = report.best
    d: dict[str, object] = {
        "blur_size": [report.blur_m, report.blur_n],
        "q": report.q,
        "axis": report.axis.value,
        "sample_phases": [float(p) for p in report.sample_phases],
        "n_prime": report.n_prime,
        "combinations_total": report.combinations_total,
        "combinations_evaluated": report.combinations_evaluated,
        "tracking_failures": report.tracking_failures,
        "enumeration_truncated": report.truncated,
        "accepted_combination": list(best.combination) if best else None,
        "sigma_min": best.sigma_min if best else None,
        "sigma_gap": best.sigma_gap if best else None,
        "realness": best.realness if best else None,
        "blur_matrix": _blur_rows(best.h) if best else None,
    }
    if restoration is not None:
        d["restore_method"] = restoration.method.value
        d["forward_residual"] = restoration.forward_residual
        d["min_H_on_grid"] = restoration.min_H_on_grid
        d["restored_size"] = [restoration.image.width, restoration.image.height]
    d["wall_time_ms"] = int(round(wall_ms))
    return d


def _run_report(command: str, opts: dict, stages: list[dict], status: str) -> dict:
    return {
        "report_version": 1,
        "tool_version": __version__,
        "command": command,
        "config_echo": _config_echo(opts),
        "status": status,
        "per_stage": stages,
    }


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_synth(ns: argparse.Namespace) -> int:
    opts = _resolve(ns)
    out = _out_dir(ns)
    seed = int(opts["seed"])
    width, height = int(opts["width"]), int(opts["height"])
    maxval = int(opts["maxval"])
    sizes = ns.sizes or []

    truth = synth_image(width, height, seed)
    save_pgm(truth, out / "true.pgm", maxval)
    save_csv(truth, out / "true.csv")
    print(f"true {truth.width}x{truth.height}")

    g = truth
    for i, (m, n) in enumerate(sizes, start=1):
        blur = synth_blur(m, n, seed + 1000 * i)
        save_matrix_csv(blur.pixels.T, out / f"blur_{i}.csv")
        g = convolve(g, blur)
        print(f"blur_{i} {m}x{n}")
    save_pgm(g, out / "convolved.pgm", maxval)
    save_csv(g, out / "convolved.csv")
    print(f"convolved {g.width}x{g.height}")
    return EXIT_OK


def cmd_search(ns: argparse.Namespace) -> int:
    opts = _resolve(ns)
    out = _out_dir(ns)
    m, n = ns.blur
    cfg = _build_config(opts, m, n)
    img = load_image(ns.input)

    t0 = time.perf_counter()
    report = search_image(img, cfg, int(opts["threads"]))
    wall = (time.perf_counter() - t0) * 1e3

    status = "OK" if report.best is not None else "NO_BLUR_FOUND"
    doc = _run_report("search", opts, [_stage_dict(report, None, wall)], status)
    write_json(doc, _report_path(ns, out))
    if report.best is not None:
        save_matrix_csv(report.best.h, out / "blur.csv")
        print(f"accepted combination {list(report.best.combination)} "
              f"sigma_gap {report.best.sigma_gap:.3e}")
        return EXIT_OK
    print("no blur of the requested size was accepted")
    return EXIT_NO_BLUR


def cmd_deblur(ns: argparse.Namespace) -> int:
    opts = _resolve(ns)
    out = _out_dir(ns)
    m, n = ns.blur
    cfg = _build_config(opts, m, n)
    maxval = int(opts["maxval"])
    img = load_image(ns.input)

    t0 = time.perf_counter()
    try:
        candidate, restoration, report = remove_blur(img, cfg, int(opts["threads"]))
    except NoBlurFoundError as exc:
        wall = (time.perf_counter() - t0) * 1e3
        stages = [_stage_dict(exc.report, None, wall)] if exc.report else []
        doc = _run_report("deblur", opts, stages, "NO_BLUR_FOUND")
        write_json(doc, _report_path(ns, out))
        print("no blur of the requested size was accepted")
        return EXIT_NO_BLUR
    wall = (time.perf_counter() - t0) * 1e3

    save_matrix_csv(candidate.h, out / "blur.csv")
    save_pgm(restoration.image, out / "restored.pgm", maxval)
    save_csv(restoration.image, out / "restored.csv")
    doc = _run_report("deblur", opts, [_stage_dict(report, restoration, wall)], "OK")
    write_json(doc, _report_path(ns, out))
    print(f"restored {restoration.image.width}x{restoration.image.height} "
          f"(forward residual {restoration.forward_residual:.3e})")
    return EXIT_OK


def cmd_pipeline(ns: argparse.Namespace) -> int:
    opts = _resolve(ns)
    out = _out_dir(ns)
    cfg = _build_config(opts, *ns.sizes[0])
    maxval = int(opts["maxval"])
    img = load_image(ns.input)

    result = pipeline(img, ns.sizes, cfg, int(opts["threads"]))

    stages = []
    for i, stage in enumerate(result.stages, start=1):
        stages.append(_stage_dict(stage.report, stage.restoration, stage.wall_time_ms))
        save_matrix_csv(stage.candidate.h, out / f"blur_{i}.csv")
        save_pgm(stage.restoration.image, out / f"restored_{i}.pgm", maxval)
        save_csv(stage.restoration.image, out / f"restored_{i}.csv")
        print(f"stage {i}: removed {stage.report.blur_m}x{stage.report.blur_n}, "
              f"now {stage.restoration.image.width}x{stage.restoration.image.height}")
    if result.ok:
        status, code = "OK", EXIT_OK
    else:
        if result.failure_report is not None:
            stages.append(_stage_dict(result.failure_report, None, result.failure_wall_ms))
        if result.failed_stage == 1:
            status, code = "NO_BLUR_FOUND", EXIT_NO_BLUR
        else:
            status, code = "PARTIAL", EXIT_PARTIAL
        print(f"stage {result.failed_stage}: no blur found, stopping")
    doc = _run_report("pipeline", opts, stages, status)
    write_json(doc, _report_path(ns, out))
    return code


def cmd_roots(ns: argparse.Namespace) -> int:
    opts = _resolve(ns)
    out = _out_dir(ns)
    img = load_image(ns.input)
    P = ztransform(img)
    base = float(opts["base_phase"])
    step = float(opts["phase_step"])
    count = int(opts["points"])

    entries = []
    for i in range(count):
        phase = base + i * step
        u = unit_point(phase)
        entry: dict[str, object] = {
            "index": i + 1,
            "phase": phase,
            "u": {"re": u.real, "im": u.imag},
        }
        try:
            slice_in_v(P, u)
        except ZeroPolynomialError:
            entry["degenerate"] = True
            entries.append(entry)
            continue
        rs = slice_roots(P, u)
        entry["degenerate"] = False
        entry["n_prime"] = rs.count
        entry["leading_coeff"] = {"re": rs.leading_coeff.real, "im": rs.leading_coeff.imag}
        entry["clustered"] = rs.clustered
        entry["roots"] = [
            {"re": r.real, "im": r.imag, "residual": float(res)}
            for r, res in zip(rs.roots, rs.residuals)
        ]
        entries.append(entry)

    doc = {
        "report_version": 1,
        "tool_version": __version__,
        "command": "roots",
        "input": str(ns.input),
        "points": entries,
    }
    write_json(doc, _report_path(ns, out))
    degenerate = sum(1 for e in entries if e["degenerate"])
    print(f"dumped {len(entries)} sample point(s), {degenerate} degenerate")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser / entry point
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_search_opts: bool = True) -> None:
    p.add_argument("--output", help="output directory (default zerosheet_out)")
    p.add_argument("--report", help="report JSON path (default <output>/report.json)")
    p.add_argument("--config", help="key=value config file")
    if with_search_opts:
        p.add_argument("--base-phase", dest="base_phase", type=float)
        p.add_argument("--phase-step", dest="phase_step", type=float)
        p.add_argument("--tol-null", dest="tol_null", type=float)
        p.add_argument("--tol-real", dest="tol_real", type=float)
        p.add_argument("--tol-track-ratio", dest="tol_track_ratio", type=float)
        p.add_argument("--max-combinations", dest="max_combinations", type=int)
        p.add_argument("--axis", choices=["u", "v"])
        p.add_argument("--threads", type=int)
        p.add_argument("--early-stop", dest="early_stop", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zerosheet",
        description="Find and remove convolution blurs via z-transform zero tracking.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic true image, blurs, and their convolution")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sizes", type=_parse_sizes, help="blur sizes, e.g. 2x2,2x3,3x3")
    p.add_argument("--maxval", type=int, help="PGM maxval for written images")
    _add_common(p, with_search_opts=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("search", help="search an image for one blur of a given size")
    p.add_argument("--input", required=True)
    p.add_argument("--blur", type=_parse_size, required=True, metavar="MxN")
    _add_common(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("deblur", help="search for one blur and restore the image")
    p.add_argument("--input", required=True)
    p.add_argument("--blur", type=_parse_size, required=True, metavar="MxN")
    p.add_argument("--maxval", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("pipeline", help="remove a sequence of blurs")
    p.add_argument("--input", required=True)
    p.add_argument("--sizes", type=_parse_sizes, required=True, metavar="LIST")
    p.add_argument("--maxval", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("roots", help="dump slice roots at one or more sample points")
    p.add_argument("--input", required=True)
    p.add_argument("--base-phase", dest="base_phase", type=float)
    p.add_argument("--phase-step", dest="phase_step", type=float)
    p.add_argument("--points", type=int, help="number of sample points to dump")
    _add_common(p, with_search_opts=False)
    p.set_defaults(func=cmd_roots)

    return parser


def _setup_logging() -> None:
    level = os.environ.get("ZEROSHEET_LOG", "off").strip().lower()
    if level in ("info", "debug"):
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if level == "info" else logging.DEBUG,
            format="%(levelname)s %(name)s: %(message)s",
        )


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ZeroSheetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
