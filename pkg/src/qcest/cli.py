"""Command-line front end.

    qcest fm        --ensemble tetra --dps 0 --out r.json
    qcest fc        --ensemble tetra -N 2 --formulation direct
    qcest converge  --ensemble equator:8 --nmax 20 --out rows.csv
    qcest tradeoff  --ensemble tetra --nb 1 --grid 9 --out curve.csv
    qcest ebc-check --choi-file choi.json

Exit codes: 0 success, 2 usage or input error, 3 solver stopped at its
numerical limit (the report is still written, with status fields).

Reports are deterministic: same inputs and seed give byte-identical output.
converge and tradeoff default to CSV rows (plottable) and render a PNG figure
next to the output file; single-value commands default to JSON with a
provenance block.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, optim, sdp, serialize
from .channels import is_ppt, load_choi, negativity, _pt_reference
from .ensembles import (EnsembleFormatError, blind_guess_value, load_ensemble,
                        make_builtin)
from .qmath import DimensionCapError

FIDELITY_TOL = 1e-5
HEURISTIC_GAP = 1e-4


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    ensemble_spec: str | None
    ensemble_file: str | None
    out: str | None
    fmt: str
    tol: float
    options: dict


def _parse_builtin(spec: str):
    name, _, param = spec.partition(":")
    if name == "equator":
        if not param:
            raise UsageError("equator needs a point count, e.g. equator:8")
        return make_builtin("equator", M=int(param))
    if name == "pair":
        if not param:
            raise UsageError("pair needs an overlap, e.g. pair:0.5")
        return make_builtin("pair", c=float(param))
    if param:
        raise UsageError(f"builtin {name!r} takes no parameter")
    return make_builtin(name)


def _load_ensemble(cfg: RunConfig):
    if (cfg.ensemble_spec is None) == (cfg.ensemble_file is None):
        raise UsageError("give exactly one of --ensemble or --ensemble-file")
    if cfg.ensemble_file is not None:
        return load_ensemble(cfg.ensemble_file)
    try:
        return _parse_builtin(cfg.ensemble_spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _provenance(cfg: RunConfig, seed=None) -> dict:
    doc = {"tool_version": __version__, "command": cfg.command}
    if seed is not None:
        doc["seed"] = int(seed)
    doc["tolerances"] = {"solver": cfg.tol, "fidelity": FIDELITY_TOL}
    return doc


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def emit_report(doc: dict, csv_header, csv_rows, fmt: str, path: str | None) -> None:
    """Write a report in the chosen format with bit-stable rendering."""
    if fmt == "json":
        _write(serialize.dump_json(doc), path)
    elif fmt == "csv":
        _write(serialize.dump_csv(csv_header, csv_rows), path)
    else:
        raise UsageError(f"unknown format {fmt!r}")


def _figure_path(cfg: RunConfig) -> str | None:
    if cfg.options.get("no_plot"):
        return None
    if cfg.options.get("plot"):
        return cfg.options["plot"]
    if cfg.out is not None:
        stem = cfg.out.rsplit(".", 1)[0] if "." in cfg.out.rsplit("/", 1)[-1] else cfg.out
        return stem + ".png"
    return None


def _cmd_fm(cfg: RunConfig) -> int:
    e = _load_ensemble(cfg)
    opts = cfg.options
    status = "optimal"
    lower, _strategy = optim.fm_seesaw(e, opts["outcomes"], opts["restarts"],
                                       opts["seed"], cfg.tol)
    try:
        upper = optim.fm_upper(e, opts["dps"], cfg.tol)
    except sdp.SolverError as exc:
        status = exc.solution.status if exc.solution is not None else "numerical-limit"
        upper = exc.solution.value if exc.solution is not None else float("nan")
    gap = upper - lower
    doc = _provenance(cfg, seed=opts["seed"])
    doc.update({
        "ensemble": e.label, "d_in": e.d_in, "d_target": e.d_target,
        "dps_level": opts["dps"],
        "outcomes": opts["outcomes"] if opts["outcomes"] is not None else e.d_in**2,
        "restarts": opts["restarts"],
        "upper": upper, "lower": lower, "gap": gap,
        "upper_exact": optim.fm_is_exact(e),
        "outcome_heuristic_flagged": bool(gap > HEURISTIC_GAP),
        "status": status,
    })
    emit_report(doc, ["upper", "lower", "gap", "status"],
                [[upper, lower, gap, status]], cfg.fmt, cfg.out)
    return 0 if status == "optimal" else 3


def _cmd_fc(cfg: RunConfig) -> int:
    e = _load_ensemble(cfg)
    opts = cfg.options
    n = opts["n"]
    if n is None:
        raise UsageError("fc needs a clone count: -N / --n")
    formulation = opts["formulation"]
    if formulation == "direct":
        value, _, sol = optim._fc_direct_solve(e, n, cfg.tol)
    else:
        mode = "full-perm" if formulation == "ext-full" else "bose"
        value, _, sol = optim._fc_ext_solve(e, n, mode, cfg.tol)
    status = sol.status
    residuals = sol.residuals
    doc = _provenance(cfg)
    doc.update({
        "ensemble": e.label, "d_in": e.d_in, "d_target": e.d_target,
        "N": n, "formulation": formulation,
        "value": value, "status": status, "residuals": residuals,
    })
    emit_report(doc, ["N", "value", "formulation", "status"],
                [[n, value, formulation, status]], cfg.fmt, cfg.out)
    return 0 if status == "optimal" else 3


def _cmd_converge(cfg: RunConfig) -> int:
    e = _load_ensemble(cfg)
    opts = cfg.options
    mode = "full-perm" if opts["formulation"] == "ext-full" else "bose"
    report = optim.converge(e, opts["nmax"], mode, opts["dps"], opts["outcomes"],
                            opts["restarts"], opts["seed"], cfg.tol)
    rows = [[r.n, r.fc, r.mode, r.negativity, r.status] for r in report.rows]
    doc = _provenance(cfg, seed=opts["seed"])
    doc.update({
        "ensemble": e.label,
        "mode": mode,
        "fm_lower": report.fm_bounds.lower,
        "fm_upper": report.fm_bounds.upper,
        "fm_upper_exact": report.fm_bounds.upper_exact,
        "monotone": report.monotone,
        "final_gap": report.final_gap,
        "rows": [{"N": r.n, "F_C": r.fc, "mode": r.mode,
                  "negativity": r.negativity, "status": r.status} for r in report.rows],
    })
    emit_report(doc, ["N", "F_C", "mode", "negativity", "status"], rows, cfg.fmt, cfg.out)
    fig_path = _figure_path(cfg)
    if fig_path is not None:
        from . import figures

        figures.save_figure(figures.plot_convergence(report), fig_path)
    bad = [r for r in report.rows if r.status != "optimal"]
    return 3 if bad else 0


def _cmd_tradeoff(cfg: RunConfig) -> int:
    e = _load_ensemble(cfg)
    opts = cfg.options
    lo = blind_guess_value(e)
    grid = np.linspace(lo, 1.0, opts["grid"])
    curve = optim.asym_tradeoff(e, opts["nb"], grid, cfg.tol)
    rows = [[p.fa, p.fb, p.status] for p in curve.points]
    doc = _provenance(cfg)
    doc.update({
        "ensemble": e.label, "N_B": curve.n_b,
        "monotone": curve.monotone,
        "points": [{"F_A": p.fa, "F_B": p.fb, "status": p.status} for p in curve.points],
    })
    emit_report(doc, ["F_A", "F_B", "status"], rows, cfg.fmt, cfg.out)
    fig_path = _figure_path(cfg)
    if fig_path is not None:
        from . import figures

        figures.save_figure(figures.plot_tradeoff(curve), fig_path)
    bad = [p for p in curve.points if p.status not in ("optimal", "infeasible")]
    return 3 if bad else 0


def _cmd_ebc_check(cfg: RunConfig) -> int:
    path = cfg.options.get("choi_file")
    if path is None:
        raise UsageError("ebc-check needs --choi-file")
    j = load_choi(path)
    min_eig = float(np.linalg.eigvalsh(_pt_reference(j))[0])
    ppt = is_ppt(j, tol=cfg.options["ppt_tol"])
    d_out = j.d_out if hasattr(j, "d_out") else j.d_clone**j.n_clones
    # PPT certifies separability only up to dimension 2x3
    separable = ppt if j.d_in * d_out <= 6 else (None if ppt else False)
    doc = _provenance(cfg)
    doc.update({
        "choi_file": path, "d_in": j.d_in, "d_out": d_out,
        "ppt": ppt, "negativity": negativity(j), "min_pt_eigenvalue": min_eig,
        "separable": separable, "ppt_tol": cfg.options["ppt_tol"],
    })
    emit_report(doc, ["ppt", "negativity", "min_pt_eigenvalue"],
                [[ppt, negativity(j), min_eig]], cfg.fmt, cfg.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcest",
        description="optimal state-estimation and N-cloning fidelities for pure-state ensembles")
    parser.add_argument("--version", action="version", version=f"qcest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, ensemble=True):
        if ensemble:
            p.add_argument("--ensemble", help="builtin name, e.g. tetra, equator:8, pair:0.5")
            p.add_argument("--ensemble-file", help="path to an ensemble JSON file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], help="output format")
        p.add_argument("--tol", type=float, default=sdp.DEFAULT_TOL, help="solver tolerance")

    p = sub.add_parser("fm", help="optimal estimation fidelity (SDP upper + see-saw lower)")
    common(p)
    p.add_argument("--dps", type=int, default=0, help="extendibility level of the relaxation")
    p.add_argument("--outcomes", type=int, default=None, help="POVM outcomes (default d_in^2)")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("fc", help="optimal N-clone fidelity")
    common(p)
    p.add_argument("-N", "--n", type=int, dest="n", help="number of clones")
    p.add_argument("--formulation", choices=["ext-full", "ext-bose", "direct"],
                   default="ext-full")

    p = sub.add_parser("converge", help="tabulate F_C(N) against the estimation bounds")
    common(p)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--formulation", choices=["ext-full", "ext-bose"], default="ext-bose")
    p.add_argument("--dps", type=int, default=0)
    p.add_argument("--outcomes", type=int, default=None)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--plot", help="also render a PNG figure to this path")
    p.add_argument("--no-plot", action="store_true", help="suppress the default figure")

    p = sub.add_parser("tradeoff", help="asymmetric clone trade-off curve")
    common(p)
    p.add_argument("--nb", type=int, required=True, help="number of B clones")
    p.add_argument("--grid", type=int, default=9, help="grid points over [blind, 1]")
    p.add_argument("--plot", help="also render a PNG figure to this path")
    p.add_argument("--no-plot", action="store_true", help="suppress the default figure")

    p = sub.add_parser("ebc-check", help="PPT / negativity certificate for a Choi file")
    common(p, ensemble=False)
    p.add_argument("--choi-file", required=True)
    p.add_argument("--ppt-tol", type=float, default=1e-9)
    return parser


_DEFAULT_FORMAT = {"fm": "json", "fc": "json", "converge": "csv",
                   "tradeoff": "csv", "ebc-check": "json"}

_HANDLERS = {"fm": _cmd_fm, "fc": _cmd_fc, "converge": _cmd_converge,
             "tradeoff": _cmd_tradeoff, "ebc-check": _cmd_ebc_check}


def run(argv) -> int:
    """Parse arguments, dispatch, and map failures onto the exit-code contract."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    opts = vars(ns).copy()
    cfg = RunConfig(
        command=opts.pop("command"),
        ensemble_spec=opts.pop("ensemble", None),
        ensemble_file=opts.pop("ensemble_file", None),
        out=opts.pop("out", None),
        fmt=opts.pop("format", None) or _DEFAULT_FORMAT[ns.command],
        tol=opts.pop("tol"),
        options=opts,
    )
    try:
        return _HANDLERS[cfg.command](cfg)
    except (UsageError, EnsembleFormatError, DimensionCapError) as exc:
        print(f"qcest: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"qcest: {exc}", file=sys.stderr)
        return 2
    except sdp.SolverError as exc:
        print(f"qcest: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
