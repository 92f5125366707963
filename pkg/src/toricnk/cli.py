"""Command-line front end: grid verification, radial sweeps and the golden suite.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import radial as rd
from . import structure as st
from .errors import PreconditionError, ToricNKError
from .golden import run_golden
from .jets import EXACT, FINITE_DIFFERENCE, PhiFamily, load_polynomial, polynomial_family, radial_phi, s3s3_phi

log = logging.getLogger("toricnk")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHUNK = 2048
MODES = {"exact": EXACT, "fd": FINITE_DIFFERENCE, EXACT: EXACT, FINITE_DIFFERENCE: FINITE_DIFFERENCE}
# finite differences carry an O(h²) truncation error, so they get a looser default
DEFAULT_TOL = {EXACT: 1e-9, FINITE_DIFFERENCE: 1e-4}


class UsageError(Exception):
    pass


def resolve_family(name: str, mode: str = EXACT, fd_step: Optional[float] = None) -> PhiFamily:
    """Look up ``s3s3``, ``poly:<coeff-file>`` or ``radial:<trajectory.csv>``."""
    if name == "s3s3":
        fam = s3s3_phi()
    elif name.startswith("poly:"):
        path = name[len("poly:"):]
        if not Path(path).is_file():
            raise UsageError(f"polynomial file not found: {path}")
        fam = polynomial_family(name, load_polynomial(path))
    elif name.startswith("radial:"):
        path = name[len("radial:"):]
        if not Path(path).is_file():
            raise UsageError(f"trajectory file not found: {path}")
        fam = radial_phi(rd.read_trajectory_csv(path), name)
    else:
        raise UsageError(f"unknown family {name!r}")
    return fam.with_mode(MODES[mode], fd_step)


@dataclass(frozen=True)
class ScanConfig:
    family: str
    box: Tuple[Tuple[float, float], ...]
    resolution: Tuple[int, int, int]
    residual_tol: float = 1e-9
    pivot_tol: float = st.PIVOT_TOL
    mode: str = EXACT
    out: Optional[str] = None
    records: bool = True

    def __post_init__(self):
        if len(self.box) != 3 or len(self.resolution) != 3:
            raise UsageError("box and resolution need three axes")
        for lo, hi in self.box:
            if not lo < hi:
                raise UsageError(f"degenerate interval [{lo}, {hi}]")
        if min(self.resolution) < 1:
            raise UsageError("resolution must be >= 1 on every axis")

    def axes(self):
        # a single sample sits at the interval midpoint
        return [
            np.array([0.5 * (lo + hi)]) if n == 1 else np.linspace(lo, hi, n)
            for (lo, hi), n in zip(self.box, self.resolution)
        ]

    def points(self):
        g = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([a.ravel() for a in g], axis=-1)


def parse_box(text: str):
    vals = [float(v) for v in text.replace(" ", "").split(",")]
    if len(vals) != 6:
        raise UsageError("--box needs six numbers a1,b1,a2,b2,a3,b3")
    return tuple((vals[2 * i], vals[2 * i + 1]) for i in range(3))


def parse_res(text: str):
    vals = [int(v) for v in text.replace(" ", "").split(",")]
    if len(vals) == 1:
        vals *= 3
    if len(vals) != 3:
        raise UsageError("--res needs n or n1,n2,n3")
    return tuple(vals)


def _nan_to_none(a):
    a = np.asarray(a, dtype=float)
    return [None if not math.isfinite(v) else float(v) for v in a.ravel()]


def evaluate_points(family: PhiFamily, ys: np.ndarray, pivot_tol: float = st.PIVOT_TOL) -> dict:
    """Per-point columns for one chunk; residual columns are NaN where ε² ≤ 0."""
    n = len(ys)
    jet = family(ys)
    adm = st.admissibility(jet, ys, pivot_tol)
    eps2 = st.epsilon_sq(jet, ys)
    cols = {
        "ma_residual": np.abs(st.ma_residual(jet, ys)),
        "eps2": eps2,
        "in_U0": adm.in_U0,
    }
    names = ["vol1_residual", "nk1_residual", "nk2_residual", "integrability_max",
             "wedge_zero", "trace_residual", "J_square_residual", "comp_residual", "g_min_eigenvalue"]
    for k in names:
        cols[k] = np.full(n, np.nan)
    ok = eps2 > 0
    if np.any(ok):
        sub = jet[ok]
        rep = st.nk_residuals(sub, ys[ok])
        h = rep.hitchin
        vals = [rep.vol1_residual, rep.nk1_residual, rep.nk2_residual, rep.max_integrability,
                h.wedge_zero, h.trace_residual, h.J_square_residual, h.comp_residual, h.g_min_eigenvalue]
        for k, v in zip(names, vals):
            cols[k][ok] = v
    return cols


_RESIDUAL_KEYS = ("ma_residual", "vol1_residual", "nk1_residual", "nk2_residual", "integrability_max",
                  "wedge_zero", "trace_residual", "J_square_residual", "comp_residual")


def _worker(args):
    family_name, mode, ys, pivot_tol = args
    return evaluate_points(resolve_family(family_name, mode), ys, pivot_tol)


def worker_count(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("NK_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"NK_WORKERS must be an integer, got {env!r}") from exc
    return 1


def scan(config: ScanConfig, workers: int = 1) -> dict:
    """Evaluate every grid point; returns the report payload (no timing data)."""
    family = resolve_family(config.family, config.mode)
    ys = config.points()
    chunks = [ys[i:i + CHUNK] for i in range(0, len(ys), CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_worker, [(config.family, config.mode, c, config.pivot_tol) for c in chunks]))
    else:
        parts = [evaluate_points(family, c, config.pivot_tol) for c in chunks]
    cols = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return build_report(config, ys, cols)


def aggregate(ys, cols, tol) -> dict:
    in_u0 = cols["in_U0"].astype(bool)
    n = len(ys)
    worst = np.zeros(n)
    for k in _RESIDUAL_KEYS:
        worst = np.fmax(worst, cols[k])
    u0_worst = np.where(in_u0, worst, -np.inf)
    n_adm = int(np.sum(in_u0))
    agg = {
        "n_points": n,
        "n_admissible": n_adm,
        "admissible_fraction": n_adm / n if n else 0.0,
        "max_ma_residual": float(np.max(cols["ma_residual"])) if n else None,
        "max_residual_U0": float(np.max(u0_worst)) if n_adm else None,
        "worst_point": ys[int(np.argmax(u0_worst))].tolist() if n_adm else None,
        "max_by_kind_U0": {
            k: (float(np.nanmax(cols[k][in_u0])) if n_adm else None) for k in _RESIDUAL_KEYS
        },
        "min_g_eigenvalue_U0": float(np.nanmin(cols["g_min_eigenvalue"][in_u0])) if n_adm else None,
    }
    agg["passed"] = bool(n_adm > 0 and agg["max_residual_U0"] <= tol and agg["min_g_eigenvalue_U0"] > 0)
    return agg


def build_report(config: ScanConfig, ys, cols) -> dict:
    report = {
        "config": {
            "family": config.family,
            "box": [list(b) for b in config.box],
            "resolution": list(config.resolution),
            "residual_tol": config.residual_tol,
            "pivot_tol": config.pivot_tol,
            "mode": config.mode,
        },
        "aggregates": aggregate(ys, cols, config.residual_tol),
    }
    if config.records:
        recs = []
        cols_l = {k: (v.tolist() if k == "in_U0" else _nan_to_none(v)) for k, v in cols.items()}
        for i, y in enumerate(ys.tolist()):
            rec = {"y": y}
            for k, v in cols_l.items():
                rec[k] = bool(v[i]) if k == "in_U0" else v[i]
            recs.append(rec)
        report["records"] = recs
    return report


def to_json(obj, indent=0) -> str:
    """JSON with every float written at 17 significant digits and NaN as null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, payload, metadata=None):
    """Write the payload; run metadata (timings, host details) goes to a sidecar file."""
    path = Path(path)
    path.write_text(to_json(payload) + "\n")
    if metadata is not None:
        path.with_name(path.name + ".meta.json").write_text(to_json(metadata) + "\n")


def cmd_verify(args) -> int:
    config = ScanConfig(
        family=args.family,
        box=parse_box(args.box),
        resolution=parse_res(args.res),
        residual_tol=DEFAULT_TOL[MODES[args.mode]] if args.tol is None else args.tol,
        mode=MODES[args.mode],
        out=args.out,
        records=not args.summary_only,
    )
    if config.out is not None:
        parent = Path(config.out).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise UsageError(f"cannot write report to {config.out}")
    workers = worker_count(args.workers)
    start = time.perf_counter()
    report = scan(config, workers)
    elapsed = time.perf_counter() - start
    agg = report["aggregates"]
    if config.out:
        write_json(config.out, report, {"version": __version__, "seconds": elapsed, "workers": workers})
    print(f"points {agg['n_points']}  admissible {agg['n_admissible']} ({agg['admissible_fraction']:.3f})")
    print(f"max residual over U0: {agg['max_residual_U0']}  (tol {config.residual_tol:g})")
    print(f"max |MA residual| over all points: {agg['max_ma_residual']}")
    if agg["n_admissible"] == 0:
        print("no admissible points: nothing certified")
    print("PASS" if agg["passed"] else "FAIL")
    return EXIT_OK if agg["passed"] else EXIT_FAIL


def run_sweep(lines, t_end_override, out_dir: Path, controls: rd.Controls = rd.Controls()) -> dict:
    entries = []
    for lineno, text in lines:
        entry = {"line": lineno, "text": text}
        try:
            state, t_end = rd.parse_sweep_line(text)
        except ValueError as exc:
            entry.update(status="rejected", reason=str(exc))
            entries.append(entry)
            continue
        if t_end_override is not None:
            t_end = t_end_override
        entry.update(initial=[state.t, state.x, state.xp], t_end=t_end)
        try:
            sol = rd.integrate(state, t_end, controls)
        except (PreconditionError, ValueError) as exc:
            entry.update(status="rejected", reason=str(exc))
            entries.append(entry)
            continue
        csv_path = out_dir / f"trajectory_line{lineno}.csv"
        rd.write_trajectory_csv(sol, csv_path)
        entry.update(
            status="integrated",
            termination=sol.termination,
            t_final=sol.t_max,
            n_nodes=len(sol),
            max_ode_residual=float(np.max(rd.ode_residuals(sol))),
            windows=[list(w) for w in rd.admissible_window(sol)],
            csv=csv_path.name,
        )
        entries.append(entry)
    return {
        "n_lines": len(entries),
        "n_integrated": sum(e["status"] == "integrated" for e in entries),
        "n_rejected": sum(e["status"] == "rejected" for e in entries),
        "entries": entries,
    }


def cmd_radial(args) -> int:
    sweep = Path(args.sweep)
    if not sweep.is_file():
        raise UsageError(f"sweep file not found: {sweep}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = run_sweep(rd.read_sweep(sweep), args.t_end, out_dir)
    write_json(out_dir / "summary.json", summary)
    for e in summary["entries"]:
        if e["status"] == "rejected":
            print(f"line {e['line']}: rejected ({e['reason']})")
        else:
            print(f"line {e['line']}: {e['termination']} at t={e['t_final']:.6g}, windows {e['windows']}")
    print(f"{summary['n_integrated']} integrated, {summary['n_rejected']} rejected")
    return EXIT_OK


def cmd_golden(args) -> int:
    checks, seconds = run_golden(n_points=args.points, seed=args.seed)
    for c in checks:
        print(c.line())
    passed = all(c.passed for c in checks)
    print(f"{'PASS' if passed else 'FAIL'} ({seconds:.2f} s)")
    if args.out:
        write_json(args.out, {"checks": [asdict(c) | {"passed": c.passed} for c in checks], "passed": passed},
                   {"version": __version__, "seconds": seconds})
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toricnk", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="scan a grid and certify the NK structure equations")
    v.add_argument("--family", required=True, help="s3s3 | poly:<coeff-file> | radial:<trajectory.csv>")
    v.add_argument("--box", required=True, help="a1,b1,a2,b2,a3,b3")
    v.add_argument("--res", required=True, help="n1,n2,n3 (or a single n)")
    v.add_argument("--mode", choices=["exact", "fd"], default="exact")
    v.add_argument("--tol", type=float, default=None, help="default 1e-9 (exact) or 1e-4 (fd)")
    v.add_argument("--out", default=None)
    v.add_argument("--workers", type=int, default=None, help="overrides NK_WORKERS")
    v.add_argument("--summary-only", action="store_true", help="omit per-point records")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("radial", help="integrate radial initial data from a sweep file")
    r.add_argument("--sweep", required=True, help="lines 't0 x0 xp0 t_end'")
    r.add_argument("--t-end", type=float, default=None, help="override every line's t_end")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_radial)

    g = sub.add_parser("golden", help="compare against the S3xS3 closed forms")
    g.add_argument("--points", type=int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_golden)
    return p


def _join_box(argv):
    # "--box -0.25,..." would otherwise be read as an unknown option
    argv = list(sys.argv[1:] if argv is None else argv)
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--box" and i + 1 < len(argv):
            out.append("--box=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_join_box(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ToricNKError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
