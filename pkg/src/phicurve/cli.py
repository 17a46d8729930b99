"""Command line entry point: ``phicurve run`` and ``phicurve verify``.

Exit codes: 0 success, 1 verification failures, 2 bad input, 3 the first
sweep point could not be solved.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import SHOOTING_TOL, branch_features, inequality_audit, shoot
from .continuation import BranchCurve, NewtonFailure, SolverSettings, solve_at_xi, sweep_xi
from .model import ConfigurationError, Forcing, ForcingMeanError, ProblemSpec, make_g, make_phi, validate_spec
from .periodic_fn import derivative, format_float
from .svg import branch_svg

log = logging.getLogger("phicurve")

OUTPUT_ENV = "PHICURVE_OUTPUT_DIR"
BRANCH_COLUMNS = ["xi", "mu", "u_at_0", "uprime_at_0", "sup_uprime", "variation",
                  "shooting_defect", "newton_iters"]

EXIT_OK, EXIT_UNVERIFIED, EXIT_INPUT, EXIT_FIRST_POINT = 0, 1, 2, 3


@dataclass
class RunConfig:
    spec: ProblemSpec
    xi0: float
    dxi: float
    nsteps: int
    settings: SolverSettings
    directory: Path
    emit_svg: bool = True
    profile_xis: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


def _forcing(block: dict) -> Forcing:
    terms = []
    kind = block.get("kind")
    amp = float(block.get("amplitude", 0.0))
    if kind is not None:
        terms.extend(Forcing.single(kind, amp).terms)
    for item in block.get("harmonics", []):
        n, s, c = item
        terms.append((int(n), float(s), float(c)))
    desc = ", ".join(f"n={n}: {s}*sin + {c}*cos" for n, s, c in terms) or "0"
    return Forcing(tuple(terms), desc)


def parse_config(data: dict) -> RunConfig:
    try:
        prob = data["problem"]
        spec = ProblemSpec(
            phi=make_phi(prob.get("phi", "relativistic")),
            g=make_g(prob["g"]),
            lam=float(prob.get("lambda", 0.0)),
            k=float(prob["k"]),
            T=float(prob["T"]),
            e=_forcing(prob.get("forcing", {})),
            N=int(prob.get("N", 256)),
        )
        sw = data["sweep"]
        xi0, dxi, nsteps = float(sw["xi0"]), float(sw["dxi"]), int(sw["nsteps"])
        sol = data.get("solver", {})
        settings = SolverSettings(
            newton_tol=float(sol.get("newton_tol", 1e-10)),
            max_newton_iters=int(sol.get("max_newton_iters", 12)),
            n_kappa_steps=int(sol.get("n_kappa_steps", 10)),
            rtol=float(sol.get("rtol", 1e-10)),
            atol=float(sol.get("atol", 1e-12)),
            fixed_iterations=sol.get("fixed_iterations"),
        )
        out = data.get("output", {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad config: {exc!r}") from exc
    if dxi == 0 or nsteps < 0:
        raise ConfigurationError("sweep needs dxi != 0 and nsteps >= 0")
    directory = Path(os.environ.get(OUTPUT_ENV) or out.get("directory", "out"))
    return RunConfig(spec, xi0, dxi, nsteps, settings, directory,
                     bool(out.get("emit_svg", True)),
                     [float(x) for x in out.get("profile_xis", [])], data)


def load_config(path) -> RunConfig:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return parse_config(data)


# -- output -----------------------------------------------------------------


def _write_lines(path: Path, header: list, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_float(v) if not isinstance(v, int) else str(v) for v in row) + "\n")


def branch_rows(curve: BranchCurve):
    for p in curve.points:
        s = p.solution
        if s is None:
            yield [p.xi, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, 0]
            continue
        defect = p.verification.periodicity_defect if p.verification is not None else math.nan
        yield [p.xi, s.mu, s.u0, s.uprime0, s.sup_uprime, s.variation, defect, s.newton_iterations]


def _profile(cfg: RunConfig, curve: BranchCurve, xi: float):
    solved = curve.solved
    nearest = min(solved, key=lambda p: abs(p.xi - xi)) if solved else None
    warm = nearest.solution if nearest is not None else None
    try:
        sol = solve_at_xi(cfg.spec, xi, warm, cfg.settings)
    except NewtonFailure:
        sol = solve_at_xi(cfg.spec, xi, None, cfg.settings)
    t = sol.grid.nodes
    return t, sol.u.samples, derivative(sol.U, 1).samples


def _audit_summary(cfg: RunConfig, curve: BranchCurve) -> dict:
    worst: dict = {}
    all_hold = True
    for p in curve.solved:
        rep = inequality_audit(p.solution, cfg.spec)
        all_hold &= rep.all_hold
        for name, m in rep.margins.items():
            worst[name] = min(worst.get(name, math.inf), m)
    return {"all_hold": all_hold, "min_margins": worst}


def execute(cfg: RunConfig) -> int:
    spec = cfg.spec
    report = validate_spec(spec)
    for w in report.warnings:
        log.warning(w)
    try:
        curve = sweep_xi(spec, cfg.xi0, cfg.dxi, cfg.nsteps, cfg.settings, verify=True)
    except NewtonFailure as exc:
        log.error("%s", exc)
        return EXIT_FIRST_POINT
    out = cfg.directory
    out.mkdir(parents=True, exist_ok=True)
    _write_lines(out / "branch.csv", BRANCH_COLUMNS, branch_rows(curve))
    for xi in cfg.profile_xis:
        t, u, up = _profile(cfg, curve, xi)
        _write_lines(out / f"profile_{format_float(xi)}.csv", ["t", "u", "uprime"], zip(t, u, up))
    feats = branch_features(curve, spec, query_mu=(0.0,))
    flagged = [{"xi": p.xi, "flag": p.flag} for p in curve.points if not p.accepted]
    summary = {
        "config": cfg.raw,
        "validation": report.as_dict(),
        "features": feats.as_dict(),
        "audit": _audit_summary(cfg, curve),
        "points": len(curve.points),
        "verified": sum(p.accepted for p in curve.points),
        "flagged": flagged,
        "max_shooting_defect": max((p.verification.periodicity_defect for p in curve.solved), default=None),
    }
    with open(out / "summary.json", "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    if cfg.emit_svg:
        _write_text(out / "branch.svg", branch_svg(curve.xi, curve.mu))
    log.info("wrote %d points to %s", len(curve.points), out)
    return EXIT_OK if curve.all_verified else EXIT_UNVERIFIED


def _write_text(path: Path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def run(config_path) -> int:
    try:
        cfg = load_config(config_path)
        validate_spec(cfg.spec)
    except (OSError, json.JSONDecodeError, ConfigurationError, ForcingMeanError) as exc:
        log.error("cannot use config %s: %s", config_path, exc)
        return EXIT_INPUT
    return execute(cfg)


def verify(config_path, branch_csv, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        cfg = load_config(config_path)
        with open(branch_csv, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except (OSError, json.JSONDecodeError, ConfigurationError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    missing = [c for c in ("xi", "mu", "u_at_0", "uprime_at_0") if c not in header]
    if missing:
        log.error("branch file lacks columns %s", missing)
        return EXIT_INPUT
    if not rows:
        log.error("branch file has no rows")
        return EXIT_INPUT
    failed = 0
    for row in rows:
        try:
            xi, mu = float(row["xi"]), float(row["mu"])
            u0, up0 = float(row["u_at_0"]), float(row["uprime_at_0"])
        except ValueError:
            log.error("unparsable row %s", row)
            return EXIT_INPUT
        try:
            if not all(map(math.isfinite, (mu, u0, up0))):
                raise ValueError("unsolved point")
            defect, _ = shoot(cfg.spec, u0, up0, mu)
        except Exception as exc:  # noqa: BLE001 - any failure marks the row
            defect = math.inf
            log.debug("row xi=%s: %s", xi, exc)
        ok = defect < SHOOTING_TOL
        failed += not ok
        print(f"{format_float(xi)},{defect:.3e},{'ok' if ok else 'FAIL'}", file=out)
    return EXIT_OK if failed == 0 else EXIT_UNVERIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phicurve",
                                     description="Branches of periodic solutions of phi-Laplacian pendulum equations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="sweep the mean value and write branch data")
    p_run.add_argument("configs", nargs="+", help="JSON run configuration(s)")
    p_run.add_argument("-j", "--jobs", type=int, default=1, help="process configs in parallel")
    p_ver = sub.add_parser("verify", help="re-integrate every row of a branch file")
    p_ver.add_argument("config")
    p_ver.add_argument("branch_csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return verify(args.config, args.branch_csv)
    if args.jobs > 1 and len(args.configs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            codes = list(pool.map(run, args.configs))
    else:
        codes = [run(c) for c in args.configs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
