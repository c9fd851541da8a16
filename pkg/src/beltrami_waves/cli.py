"""Command line interface.

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O error.
Every command that writes files also writes a manifest next to them.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import (
    ContinuationError,
    continue_alpha,
    find_bifurcation_points,
    rescue_sweep,
    scan_eigencurves,
)
from .config import ConfigError, check_non_resonance, load_config
from .lsbif import (
    ReductionError,
    complement_problem,
    coupled_branch,
    coupled_problem,
    pitchfork_problem,
    reduce,
    solve_branch,
)
from .trivial_flows import Tau
from .vertical_modes import ResonanceError
from .wavefield import (
    ETA_FILE,
    META_FILE,
    VOLUME_FILE,
    UnverifiedPointError,
    assemble_first_order,
    export_field,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class OutputExists(OSError):
    pass


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.replace(microsecond=0).isoformat()


def _claim(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise OutputExists(f"{path} exists; use --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, command: str, cfg_hash, params: dict, outputs: list) -> Path:
    manifest = {
        "command": command,
        "config_hash": cfg_hash,
        "parameters": params,
        "timestamp": _timestamp(),
        "version": __version__,
        "outputs": [str(p) for p in outputs],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _manifest_for(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    report = {"config": str(args.config), "checks": []}
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        report["checks"].append({"name": "invariants", "ok": False, "reason": str(exc)})
        report["ok"] = False
        print(_dump(report), end="")
        return EXIT_VALIDATION
    report["checks"].append({"name": "invariants", "ok": True})
    res = check_non_resonance(cfg.fluid, cfg.lattice)
    report["checks"].append({"name": "non_resonance", **res.to_dict()})
    report["config_hash"] = cfg.digest()
    report["canonical_lattice"] = cfg.lattice.to_dict()
    report["ok"] = res.ok
    text = _dump(report)
    print(text, end="")
    if args.out:
        out = _claim(Path(args.out), args.force)
        out.write_text(text)
        _write_manifest(_manifest_for(out), "validate", report["config_hash"], {}, [out])
    return EXIT_OK if res.ok else EXIT_VALIDATION


def _load_checked(path):
    cfg = load_config(path)
    res = check_non_resonance(cfg.fluid, cfg.lattice)
    if not res.ok:
        raise ConfigError(f"non-resonance violated: {res.violations}")
    return cfg


def cmd_scan(args) -> int:
    cfg = _load_checked(args.config)
    out = _claim(Path(args.out), args.force)
    scan = scan_eigencurves(cfg.fluid, cfg.lattice, args.grid)
    n = cfg.fluid.n
    header = ["theta"] + [f"mu_{i}_k1" for i in range(1, n + 1)] + [f"mu_{i}_k2" for i in range(1, n + 1)]
    rows = np.column_stack([scan.theta, scan.mu[0], scan.mu[1]])[:-1]
    with open(out, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")
    _write_manifest(_manifest_for(out), "scan", cfg.digest(), {"grid": args.grid}, [out])
    return EXIT_OK


def _points_payload(cfg, points, rejections, extra=None) -> dict:
    payload = {
        "config_hash": cfg.digest(),
        "lattice": cfg.lattice.to_dict(),
        "points": [p.to_dict() for p in points],
        "rejections": [r.to_dict() for r in rejections],
        "accepted": sum(1 for p in points if p.report is None or p.report.ok),
    }
    if extra:
        payload.update(extra)
    return payload


def cmd_bifurcate(args) -> int:
    cfg = _load_checked(args.config)
    out = _claim(Path(args.out), args.force)
    fs, lat = cfg.fluid, cfg.lattice
    found = find_bifurcation_points(fs, lat, args.grid)
    points = []
    for p in found.points:
        rep = p.report
        if args.rescue and not rep.ok and rep.part1["ok"] and rep.part2["ok"] and lat.is_symmetric():
            try:
                _, _, p = rescue_sweep(fs, lat, p)
            except RuntimeError:
                pass
        points.append(p)
    out.write_text(_dump(_points_payload(cfg, points, found.rejections)))
    _write_manifest(_manifest_for(out), "bifurcate", cfg.digest(),
                    {"grid": args.grid, "rescue": args.rescue}, [out])
    return EXIT_OK


class _StoredPoint:
    """The fields of a serialised point that the wave-field reconstruction needs."""

    def __init__(self, d: dict):
        self.tau_star = Tau(d["r_star"], d["theta_star"])
        self.iota, self.kappa = d["iota"], d["kappa"]
        self.eta1 = np.array(d["eta1"], dtype=float)
        self.eta2 = np.array(d["eta2"], dtype=float)
        self.sigma = d.get("sigma")
        ok = d.get("report", {}).get("ok", False)
        self.report = type("Report", (), {"ok": ok})()


def cmd_wavefield(args) -> int:
    cfg = _load_checked(args.config)
    fs, lat = cfg.fluid, cfg.lattice
    payload = json.loads(Path(args.points).read_text())
    pts = payload["points"]
    if not 0 <= args.point < len(pts):
        raise ConfigError(f"point index {args.point} outside 0..{len(pts) - 1}")
    point = _StoredPoint(pts[args.point])
    if point.sigma is not None:
        fs = fs.replace(sigma=point.sigma)
    outdir = Path(args.out)
    files = [outdir / ETA_FILE, outdir / VOLUME_FILE, outdir / META_FILE]
    for f in files:
        _claim(f, args.force)
    sample = assemble_first_order(fs, lat, point, args.t1, args.t2, shape=(args.grid, args.grid),
                                  nz=args.nz, force=args.force, config_hash=cfg.digest())
    sample.metadata["manifest"] = "manifest.json"
    export_field(sample, "eta", files[0])
    export_field(sample, "volume", files[1])
    export_field(sample, "meta", files[2])
    _write_manifest(outdir / "manifest.json", "wavefield", cfg.digest(),
                    {"point": args.point, "t1": args.t1, "t2": args.t2, "grid": args.grid,
                     "nz": args.nz}, files)
    return EXIT_OK


def cmd_continue_alpha(args) -> int:
    cfg = _load_checked(args.config)
    out = _claim(Path(args.out), args.force)
    fs, lat = cfg.fluid, cfg.lattice
    target = np.array(args.target if args.target is not None else fs.alpha, dtype=float)
    if target.shape != (fs.n + 1,):
        raise ConfigError(f"--target needs {fs.n + 1} values")
    fs0 = fs.replace(alpha=np.zeros(fs.n + 1))
    found = find_bifurcation_points(fs0, lat, args.grid)
    points = []
    for p in found.points:
        if not (p.report.part1["ok"] and p.report.part2["ok"]):
            continue
        points.append(continue_alpha(fs0, lat, p, target, args.steps))
    out.write_text(_dump(_points_payload(cfg, points, found.rejections,
                                         {"alpha_target": target.tolist()})))
    _write_manifest(_manifest_for(out), "continue-alpha", cfg.digest(),
                    {"target": target.tolist(), "steps": args.steps, "grid": args.grid}, [out])
    return EXIT_OK


def cmd_lsdemo(args) -> int:
    checks = []
    p = pitchfork_problem()
    s = np.array([2e-2, -3e-2])
    b = solve_branch(p, s)
    checks.append(("pitchfork branch c = c* + s^2",
                   float(np.max(np.abs(b.c - p.c_star - s**2))), 1e-10))
    p = complement_problem()
    s = np.array([3e-2, 1e-2])
    xt = reduce(p, s, p.c_star)
    checks.append(("complement x~ = (0, 0, -s1^2)",
                   float(np.max(np.abs(xt - [0, 0, -s[0] ** 2]))), 1e-10))
    p = coupled_problem()
    s = np.array([5e-2, 4e-2])
    b = solve_branch(p, s)
    checks.append(("coupled branch closed form",
                   float(np.max(np.abs(b.c - coupled_branch(s, p.c_star)))), 1e-8))
    ok = True
    for name, err, tol in checks:
        passed = err < tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: error {err:.3e} (tol {tol:.0e})")
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beltrami-waves", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("--out", required=out_required)
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p = sub.add_parser("validate", help="check invariants and non-resonance")
    common(p, out_required=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scan", help="write eigencurves as CSV")
    common(p)
    p.add_argument("--grid", type=int, default=2048)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bifurcate", help="find and verify bifurcation points")
    common(p)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--rescue", action="store_true", help="rescale tensions if the lattice scan fails")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("wavefield", help="export first-order interfaces and fields")
    common(p)
    p.add_argument("--points", required=True, help="output of the bifurcate command")
    p.add_argument("--point", type=int, default=0)
    p.add_argument("--t1", type=float, default=0.0)
    p.add_argument("--t2", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--nz", type=int, default=33)
    p.set_defaults(func=cmd_wavefield)

    p = sub.add_parser("continue-alpha", help="continue alpha = 0 points to a target vorticity")
    common(p)
    p.add_argument("--target", type=float, nargs="+")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--grid", type=int, default=2048)
    p.set_defaults(func=cmd_continue_alpha)

    p = sub.add_parser("lsdemo", help="run the Lyapunov-Schmidt toy problems")
    p.set_defaults(func=cmd_lsdemo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ConfigError, UnverifiedPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ResonanceError, ContinuationError, ReductionError, np.linalg.LinAlgError,
            ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
