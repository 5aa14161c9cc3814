"""Command-line front end.

    phaseosc <command> --config run.json [--out DIR] [--format csv,svg,json] [--a.b VALUE ...]

Commands: simulate, stability, scan, reversal, integrability.  Exit status
is 0 on success, 2 for configuration errors and 3 for numerical failures.
All outputs are assembled in memory and written only after the command
has succeeded.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import sys
import tempfile
from typing import Any, Callable, Optional

import jsonschema
import numpy as np

from . import __version__
from .bifurcation import analytic_curves, integrability_report, scan_detected_curves
from .cir import sample_q_set, q_membership
from .coupling import TWO_PI, HarmonicCoupling
from .invariant_states import (
    classify, even_q30_equilibria, even_q40_equilibria, even_q43_equilibria, splay_eigs, splay_point,
    sync_eig, two_cluster_equilibria, write_reports_csv,
)
from .ode import IntegrationError
from .portrait import portrait, portrait_svg, write_portrait_csv
from .svg import SvgCanvas
from .system import SystemParams, integrate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FORMATS = ("csv", "svg", "json")

_number = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int_pos = {"type": "integer", "minimum": 1}

COUPLING_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["two_harmonic"],
         "properties": {"two_harmonic": {
             "type": "object", "additionalProperties": False, "required": ["q", "r", "alpha", "beta"],
             "properties": {k: _number for k in ("q", "r", "alpha", "beta")}}}},
        {"type": "object", "additionalProperties": False, "required": ["even_cosine"],
         "properties": {"even_cosine": {"type": "array", "items": _number, "minItems": 1}}},
        {"type": "object", "additionalProperties": False, "required": ["harmonics"],
         "properties": {"c0": _number, "harmonics": {
             "type": "array", "items": {"type": "array", "prefixItems": [_int_pos, _number, _number],
                                        "items": False, "minItems": 3}}}},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system"],
    "properties": {
        "system": {
            "type": "object", "additionalProperties": False, "required": ["N", "coupling"],
            "properties": {"N": {"type": "integer", "minimum": 2}, "omega": _number, "coupling": COUPLING_SCHEMA},
        },
        "run": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "T": _number, "rel_tol": _pos, "abs_tol": _pos, "n_samples": {"type": "integer", "minimum": 2},
                "backward": {"type": "boolean"},
                "seeds": {"type": "array", "items": {"type": "array", "items": _number}},
            },
        },
        "scan": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "beta": _number, "alpha_points": {"type": "integer", "minimum": 2}, "r_max": _pos,
                "detect_alpha_points": {"type": "integer", "minimum": 0},
                "detect_r_points": {"type": "integer", "minimum": 2},
                "detect_grid": {"type": "integer", "minimum": 4},
            },
        },
        "reversal": {
            "type": "object", "additionalProperties": False,
            "properties": {"q_samples": {"type": "integer", "minimum": 2}, "q43_grid": {"type": "integer", "minimum": 4}},
        },
        "integrability": {
            "type": "object", "additionalProperties": False,
            "properties": {"face_grid": {"type": "integer", "minimum": 8}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"directory": {"type": "string"},
                           "formats": {"type": "array", "items": {"enum": list(FORMATS)}, "uniqueItems": True}},
        },
    },
}


class ConfigError(ValueError):
    pass


# -- config handling --------------------------------------------------------------------


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply ``--a.b.c VALUE`` pairs; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(config)
    it = iter(overrides)
    for flag in it:
        if not flag.startswith("--") or len(flag) <= 2:
            raise ConfigError(f"unexpected argument {flag!r}")
        try:
            value = next(it)
        except StopIteration:
            raise ConfigError(f"override {flag} needs a value") from None
        keys = flag[2:].split(".")
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {flag} descends into a non-object")
        node[keys[-1]] = _parse_value(value)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA, cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from None


def system_from_config(cfg: dict) -> SystemParams:
    s = cfg["system"]
    try:
        g = HarmonicCoupling.from_json(s["coupling"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid coupling: {exc}") from None
    return SystemParams(s["N"], s.get("omega", 0.0), g)


# -- output bundle ------------------------------------------------------------------------


class Outputs:
    """Files collected in memory and written together at the end."""

    def __init__(self, formats):
        self.formats = set(formats)
        self.files: dict[str, str] = {}

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def add_json(self, name: str, obj) -> None:
        if self.wants("json"):
            self.add(name, json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n")

    def add_writer(self, name: str, fmt: str, writer: Callable[[str], None], tmpdir: str) -> None:
        if not self.wants(fmt):
            return
        path = os.path.join(tmpdir, name)
        writer(path)
        with open(path, encoding="utf-8") as fh:
            self.add(name, fh.read())
        os.remove(path)

    def flush(self, directory: str) -> list[str]:
        os.makedirs(directory, exist_ok=True)
        written = []
        for name in sorted(self.files):
            path = os.path.join(directory, name)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.files[name])
            written.append(path)
        return written


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(r if isinstance(r, str) else _fmt(r) for r in row) + "\n")
    return buf.getvalue()


def _complex_list(ev) -> list[list[float]]:
    return [[float(np.real(z)), float(np.imag(z))] for z in ev]


def _require_even(p: SystemParams):
    if not p.g.is_even():
        raise ConfigError("this command requires an even coupling function")


def _require_n(p: SystemParams, allowed):
    if p.N not in allowed:
        raise ConfigError(f"this command supports N in {sorted(allowed)}, got N = {p.N}")


def _seeds(cfg: dict, p: SystemParams) -> np.ndarray:
    seeds = cfg.get("run", {}).get("seeds", [])
    for s in seeds:
        if len(s) != p.N:
            raise ConfigError(f"seed {s} has length {len(s)}, expected N = {p.N}")
    return np.array(seeds, dtype=float).reshape(-1, p.N)


# -- commands ---------------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Outputs, tmpdir: str) -> None:
    p = system_from_config(cfg)
    run = cfg.get("run", {})
    seeds = _seeds(cfg, p)
    if not len(seeds):
        raise ConfigError("simulate needs at least one seed in run.seeds")
    T = run.get("T", 50.0)
    if T == 0:
        raise ConfigError("run.T must be nonzero")
    n = run.get("n_samples", 501)
    t_eval = np.linspace(0.0, T, n)
    tr = integrate(p, seeds, T, run.get("rel_tol", 1e-9), run.get("abs_tol", 1e-11), t_eval=t_eval)
    if out.wants("csv"):
        for b in range(len(seeds)):
            out.add_writer(f"trajectory_{b}.csv", "csv", lambda path, b=b: tr.to_csv(path, member=b), tmpdir)
    out.add_json("simulate.json", {
        "N": p.N, "T": T, "n_seeds": len(seeds), "n_accepted": tr.n_accepted, "n_rejected": tr.n_rejected,
        "final_state": tr.wrapped()[-1].tolist(),
    })
    if p.N in (3, 4) and (out.wants("svg") or out.wants("csv")):
        data = portrait(p, seeds, T, n_samples=n, backward=run.get("backward", False))
        if out.wants("svg"):
            out.add("portrait.svg", portrait_svg(data, "simulate").render())
        out.add_writer("portrait.csv", "csv", lambda path: write_portrait_csv(path, data), tmpdir)


def cmd_stability(cfg: dict, out: Outputs, tmpdir: str) -> None:
    p = system_from_config(cfg)
    s0 = sync_eig(p)
    lam = splay_eigs(p)
    nonzero = lam[:-1]
    hopf = bool(np.any((np.abs(nonzero.real) < 1e-9) & (np.abs(nonzero.imag) > 1e-9)))
    clusters = {}
    all_reports = []
    for k in range(1, p.N):
        reps = two_cluster_equilibria(p, k)
        clusters[str(k)] = [r.to_json() for r in reps]
        all_reports += reps
    out.add_json("stability.json", {
        "N": p.N,
        "sync": {"eigenvalue": s0, "multiplicity": p.N - 1, "stable": s0 < -1e-9,
                 "at_threshold": abs(s0) < 1e-9},
        "splay": {"eigenvalues": _complex_list(lam), "class": classify(nonzero), "hopf": hopf,
                  "stable": bool(np.all(nonzero.real < -1e-9))},
        "two_cluster": clusters,
    })
    out.add_writer("two_cluster.csv", "csv", lambda path: write_reports_csv(path, all_reports), tmpdir)


def _curves_svg(curves, r_max) -> str:
    colours = {"sync_steady": "blue", "splay_hopf": "#00a0a0", "splay_block": "orange",
               "two_cluster_sn": "red", "s2s2": "purple", "scan_detected": "green"}
    cv = SvgCanvas((0.0, TWO_PI, 0.0, r_max), width=720, height=420, title="bifurcation curves")
    cv.polyline([(0, 0), (TWO_PI, 0), (TWO_PI, r_max), (0, r_max), (0, 0)], stroke="black")
    for c in curves:
        for a, r in c.points:
            cv.circle((a, r), r=1.2, fill=colours[c.kind], stroke=colours[c.kind])
    return cv.render()


def cmd_scan(cfg: dict, out: Outputs, tmpdir: str) -> None:
    p = system_from_config(cfg)
    _require_n(p, {3, 4})
    sc = cfg.get("scan", {})
    beta = sc.get("beta", 0.0)
    r_max = sc.get("r_max", 3.0)
    curves = analytic_curves(p.N, beta, sc.get("alpha_points", 181), r_max)
    na = sc.get("detect_alpha_points", 12)
    if na:
        curves.append(scan_detected_curves(p.N, beta, na, sc.get("detect_r_points", 12), r_max,
                                           sc.get("detect_grid", 16)))
    if out.wants("csv"):
        for c in curves:
            out.add(f"curve_{c.label.replace('(p=', '_p').replace(')', '')}.csv",
                    _csv(["kind", "beta", "alpha", "r"], [[c.label, beta, a, r] for a, r in c.points]))
    out.add_json("scan.json", {"N": p.N, "beta": beta, "curves": [
        {"kind": c.kind, "p": c.p, "n_points": int(len(c.points)), "degenerate": c.degenerate, "note": c.note}
        for c in curves]})
    if out.wants("svg"):
        out.add("scan.svg", _curves_svg(curves, r_max))


def cmd_reversal(cfg: dict, out: Outputs, tmpdir: str) -> None:
    p = system_from_config(cfg)
    _require_n(p, {3, 4})
    _require_even(p)
    rv = cfg.get("reversal", {})
    nq = rv.get("q_samples", 50)
    rows = []
    for q in range(p.N):
        for k, th in enumerate(sample_q_set(p.N, q, nq)):
            rows.append([str(q), str(k)] + list(th))
    splay = splay_point(p.N)
    report: dict[str, Any] = {
        "N": p.N,
        "splay_in_q": {str(q): bool(q_membership(splay, q).member) for q in range(p.N)},
    }
    if p.N == 3:
        eqs = even_q30_equilibria(p.g)
        report["q30_equilibria"] = [e.to_json() for e in eqs]
    else:
        q40 = even_q40_equilibria(p.g)
        q43 = even_q43_equilibria(p.g, rv.get("q43_grid", 32))
        eqs = q40 + q43.points
        report["q40_equilibria"] = [e.to_json() for e in q40]
        report["q43_equilibria"] = [dict(e.to_json(), zero_eigenvector=list(e.zero_eigenvector)) for e in q43.points]
        phis = np.linspace(0.0, math.pi, 13)[1:-1]
        for cont in (q43.l_minus, q43.l_plus):
            report[cont.name] = [{"phi": float(ph), "psi": cont.point(ph).tolist(),
                                  "eigenvalues": _complex_list(cont.eigenvalues(ph))} for ph in phis]
    if out.wants("csv"):
        out.add("q_sets.csv", _csv(["q", "index"] + [f"theta_{k + 1}" for k in range(p.N)], rows))
        out.add_writer("equilibria.csv", "csv", lambda path: write_reports_csv(path, eqs), tmpdir)
    out.add_json("reversal.json", report)
    if out.wants("svg"):
        run = cfg.get("run", {})
        seeds = _seeds(cfg, p)
        data = portrait(p, seeds, run.get("T", 20.0), equilibria=eqs)
        out.add("reversal.svg", portrait_svg(data, "reversal sets").render())


def cmd_integrability(cfg: dict, out: Outputs, tmpdir: str) -> None:
    p = system_from_config(cfg)
    _require_n(p, {4})
    _require_even(p)
    rep = integrability_report(p.g, cfg.get("integrability", {}).get("face_grid", 256))
    out.add_json("integrability.json", rep.to_json())
    if out.wants("svg"):
        cv = SvgCanvas((0.0, TWO_PI, 0.0, TWO_PI), title="S2 face (0, 0, x, y)")
        cv.polyline([(0, 0), (0, TWO_PI), (TWO_PI, TWO_PI), (0, 0)], stroke="black", width=1.5)
        cv.polyline([(0, math.pi), (math.pi, math.pi)], stroke="#999999", width=1.0, dash="4,3")
        for e in rep.equilibria:
            cv.glyph((e.x, e.y), e.stability)
        out.add("integrability.svg", cv.render())


COMMANDS = {
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "scan": cmd_scan,
    "reversal": cmd_reversal,
    "integrability": cmd_integrability,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phaseosc", description="Coupled identical phase oscillators.")
    ap.add_argument("--version", action="version", version=f"phaseosc {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    ap.add_argument("--format", default=None, help="comma-separated subset of csv,svg,json")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args, rest = ap.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = apply_overrides(cfg, rest)
        validate_config(cfg)
        formats = cfg.get("output", {}).get("formats", list(FORMATS))
        if args.format is not None:
            formats = [f.strip() for f in args.format.split(",") if f.strip()]
            bad = sorted(set(formats) - set(FORMATS))
            if bad:
                raise ConfigError(f"unknown output formats {bad}")
        directory = args.out or cfg.get("output", {}).get("directory", "out")
        out = Outputs(formats)
        with tempfile.TemporaryDirectory() as tmpdir:
            COMMANDS[args.command](cfg, out, tmpdir)
    except (ConfigError, ValueError) as exc:
        print(f"phaseosc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"phaseosc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in out.flush(directory):
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
