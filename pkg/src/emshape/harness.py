"""Command-line front end: verification suites, forward solve and shape derivative.

Subcommands::

    emshape verify <suite> [--config FILE] [--out DIR] [--band-limit L] [--seed S]
    emshape solve  [--config FILE] [--out DIR] [--band-limit L]
    emshape derive [--deformation KIND] [--config FILE] [--out DIR] [--band-limit L]

Exit codes are 0 when everything passes, 1 when a check fails and 2 for usage
or configuration errors. Report files are deterministic; wall-clock timings
go to a separate ``timings.csv``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import checks
from . import geometry as geo
from . import scattering as sc
from .config import ConfigError, RunConfig, load_config
from .export import write_coeff_csv, write_field_csv
from .sphere import default_grid

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
REPORT_COLUMNS = ("check_id", "params", "analytic", "oracle", "abs_err", "rel_err", "observed_order", "tol",
                  "pass")


class UsageError(ValueError):
    """Bad command-line input."""


def _f(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else "%.9e" % x


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------
def run_suite(name: str, config: str | Path | RunConfig | None = None) -> list[checks.CheckReport]:
    """Run one suite (or ``all``) and return its reports sorted by check_id."""
    cfg = config if isinstance(config, RunConfig) else load_config(config)
    names = checks.SUITES if name == "all" else (name,)
    if any(n not in checks.REGISTRY for n in names):
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(checks.SUITES + ('all',))}")
    reports = []
    for n in names:
        logger.info("running suite %s", n)
        reports += checks.run_checks(n, cfg)
    return sorted(reports, key=lambda r: r.check_id)


def write_reports(reports: list[checks.CheckReport], out_dir: str | Path, config: RunConfig,
                  suite: str) -> dict:
    """reports.csv, summary.json and timings.csv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "reports.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow([r.check_id, r.params_text(), _f(r.analytic), _f(r.oracle), _f(r.abs_err), _f(r.rel_err),
                        _f(r.observed_order), _f(r.tol), "PASS" if r.passed else "FAIL"])
    failed = [r.check_id for r in reports if not r.passed]
    summary = {
        "suite": suite,
        "seed": config.seed,
        "band_limit": config.band_limit,
        "config": config.source,
        "checks": len(reports),
        "passed": len(reports) - len(failed),
        "failed": failed,
        "status": "PASS" if not failed else "FAIL",
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    with (out / "timings.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check_id", "runtime_ms"])
        for r in reports:
            w.writerow([r.check_id, "%.1f" % r.runtime_ms])
    return summary


# ---------------------------------------------------------------------------
# forward solve
# ---------------------------------------------------------------------------
def direction_grid(n: int) -> np.ndarray:
    """Deterministic, nearly uniform unit directions (golden-angle spiral)."""
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + 5**0.5) * k
    rho = np.sqrt(1 - z**2)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def _spherical_frame(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    th = np.arccos(np.clip(x[:, 2], -1, 1))
    ph = np.arctan2(x[:, 1], x[:, 0])
    e_th = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
    e_ph = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=1)
    return e_th, e_ph


def _problem(config: RunConfig, band_limit: int):
    cfg = config.scattering_config()
    return cfg, config.incident(), default_grid(band_limit)


def solve_cmd(config: str | Path | RunConfig | None, out_dir: str | Path) -> dict:
    """Solve on the reference sphere and write density, far field, probes and residuals."""
    rc = config if isinstance(config, RunConfig) else load_config(config)
    L = rc.band_limit or checks.DEFAULT_BAND_LIMIT["scattering"]
    cfg, inc, s = _problem(rc, L)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        sol = sc.solve(cfg, inc, s)
    except Exception as exc:
        raise RuntimeError(f"forward solve failed (L={L}, kappa_e={cfg.kappa_e}, kappa_i={cfg.kappa_i}): {exc}") \
            from exc
    h = sol.j
    write_coeff_csv(out / "density_p.csv", h.p.coeffs, L, "p")
    write_coeff_csv(out / "density_q.csv", h.q.coeffs, L, "q")
    from .surfops import helmholtz_recompose

    write_field_csv(out / "density_field.csv", s, helmholtz_recompose(h).values)
    dirs = direction_grid(rc.n_dirs)
    ff = sol.farfield(dirs)
    e_th, e_ph = _spherical_frame(dirs)
    with (out / "farfield.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["direction", "x", "y", "z", "component", "re", "im"])
        for i, x in enumerate(dirs):
            for comp, e in (("theta", e_th[i]), ("phi", e_ph[i])):
                z = complex(ff[i] @ e)
                w.writerow([i, _f(x[0]), _f(x[1]), _f(x[2]), comp, _f(z.real), _f(z.imag)])
    with (out / "probes.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region", "x", "y", "z", "field", "component", "re", "im"])
        for region, pts, E, cE, mu in (("exterior", rc.probes("exterior"), sol.E_s, sol.curl_E_s, cfg.mu_e),
                                        ("interior", rc.probes("interior"), sol.E_i, sol.curl_E_i, cfg.mu_i)):
            Ev = E(pts)
            Hv = sc.magnetic_field(cE(pts), cfg.omega, mu)
            for i, p in enumerate(pts):
                for name, F in (("E", Ev), ("H", Hv)):
                    for a, comp in enumerate("xyz"):
                        z = complex(F[i, a])
                        w.writerow([region, _f(p[0]), _f(p[1]), _f(p[2]), name, comp, _f(z.real), _f(z.imag)])
    tr = sc.transmission_residual(sol)
    sm = sc.silver_mueller(sol)
    residuals = {
        "band_limit": L,
        "condition": sol.condition,
        "transmission_E": tr.electric,
        "transmission_H": tr.magnetic,
        "silver_mueller": [float(v) for v in sm],
        "maxwell_exterior": sc.maxwell_residual(sol.E_s, sol.curl_E_s, rc.probes("exterior"), cfg.kappa_e),
        "maxwell_interior": sc.maxwell_residual(sol.E_i, sol.curl_E_i, rc.probes("interior"), cfg.kappa_i),
        "farfield_max": float(np.abs(ff).max()),
    }
    residuals = {k: (float("%.9e" % v) if isinstance(v, float) else v) for k, v in residuals.items()}
    (out / "residuals.json").write_text(json.dumps(residuals, indent=2, sort_keys=True) + "\n")
    return residuals


# ---------------------------------------------------------------------------
# shape derivative
# ---------------------------------------------------------------------------
def derive_cmd(config: str | Path | RunConfig | None, deformation_name: str | None, out_dir: str | Path) -> dict:
    """Shape derivative of the far field against a full-pipeline FD, plus the characterization table."""
    rc = config if isinstance(config, RunConfig) else load_config(config)
    L = rc.band_limit or checks.DEFAULT_BAND_LIMIT["scattering"]
    cfg, inc, s = _problem(rc, L)
    try:
        xi = rc.deformation_field(deformation_name)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dirs = direction_grid(rc.n_dirs)
    sol = sc.solve(cfg, inc, s)
    dsol = sc.d_solution(cfg, inc, s, xi)
    an = dsol.farfield(dirs)
    steps = rc.fd_steps[:2]
    cache: dict[float, np.ndarray] = {}

    def ff(t: float) -> np.ndarray:
        if t not in cache:
            cache[t] = sc.solve(cfg, inc, s, xi, t).farfield(dirs)
        return cache[t]

    fds = [geo.gateaux_fd(ff, h) for h in steps]
    fd = fds[-1]
    scale = float(np.abs(an).max())
    phase = sc.translation_law(sol, xi.params["c"], dirs) if xi.kind == "constant" else None
    rows = []
    for i, x in enumerate(dirs):
        e0 = np.abs(fds[0][i] - an[i]).max()
        e1 = np.abs(fds[1][i] - an[i]).max()
        order = math.log(e0 / e1) / math.log(steps[0] / steps[1]) if e0 > 0 and e1 > 0 else float("nan")
        for a, comp in enumerate("xyz"):
            z, f = complex(an[i, a]), complex(fd[i, a])
            row = [i, _f(x[0]), _f(x[1]), _f(x[2]), comp, _f(z.real), _f(z.imag), _f(f.real), _f(f.imag),
                   _f(abs(z - f) / scale if scale > 0 else abs(z - f)), _f(order)]
            if phase is not None:
                p = complex(phase[i, a])
                row += [_f(p.real), _f(p.imag)]
            rows.append(row)
    head = ["direction", "x", "y", "z", "component", "analytic_re", "analytic_im", "fd_re", "fd_im", "rel_err",
            "observed_order"]
    if phase is not None:
        head += ["phase_law_re", "phase_law_im"]
    with (out / "derivative.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        w.writerows(rows)
    rep = sc.characterization_check(sol, dsol, xi)
    with (out / "characterization.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "lhs_D", "g_D", "diff_D", "lhs_N", "g_N", "diff_N"])
        for i in range(rep.lhs_D.shape[0]):
            w.writerow([i] + [_f(float(np.linalg.norm(v))) for v in
                              (rep.lhs_D[i], rep.g_D[i], rep.lhs_D[i] - rep.g_D[i],
                               rep.lhs_N[i], rep.g_N[i], rep.lhs_N[i] - rep.g_N[i])])
    err = [np.abs(f - an).max() for f in fds]
    summary = {
        "deformation": xi.tag,
        "band_limit": L,
        "steps": list(steps),
        "rel_err": err[-1] / scale if scale > 0 else err[-1],
        "observed_order": math.log(err[0] / err[1]) / math.log(steps[0] / steps[1]) if min(err) > 0 else None,
        "characterization_D": rep.residual_D if np.linalg.norm(rep.g_D) > 0 else None,
        "characterization_N": rep.residual_N if np.linalg.norm(rep.g_N) > 0 else None,
        "characterization_abs_D": rep.abs_D,
        "characterization_abs_N": rep.abs_N,
    }
    summary = {k: (float("%.9e" % v) if isinstance(v, float) else v) for k, v in summary.items()}
    (out / "derive_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------
def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emshape", description="Shape derivatives for Maxwell transmission problems.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", default=out_default, help="output directory (created if missing)")
        sp.add_argument("--band-limit", type=int, help="override the band limit")
        sp.add_argument("--seed", type=int, help="override the random seed")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help="|".join(checks.SUITES + ("all",)))
    common(v, "emshape-out/verify")
    common(sub.add_parser("solve", help="forward solve on the reference sphere"), "emshape-out/solve")
    d = sub.add_parser("derive", help="shape derivative with FD comparison")
    d.add_argument("--deformation", help="preset kind (defaults to the config's)")
    common(d, "emshape-out/derive")
    return p


def _load(args) -> RunConfig:
    rc = load_config(args.config)
    if args.band_limit is not None:
        if args.band_limit < 2:
            raise UsageError("--band-limit must be at least 2")
        rc = dataclasses.replace(rc, band_limit=args.band_limit)
    if args.seed is not None:
        rc = dataclasses.replace(rc, seed=args.seed)
    return rc


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = _load(args)
        if args.command == "verify":
            if args.suite not in checks.SUITES + ("all",):
                raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(checks.SUITES + ('all',))}")
            reports = run_suite(args.suite, rc)
            summary = write_reports(reports, args.out, rc, args.suite)
            for r in reports:
                print(f"{'PASS' if r.passed else 'FAIL'} {r.check_id}")
            print(f"{summary['passed']}/{summary['checks']} checks passed -> {args.out}")
            return EXIT_OK if not summary["failed"] else EXIT_FAIL
        if args.command == "solve":
            res = solve_cmd(rc, args.out)
            print(json.dumps(res, sort_keys=True))
            return EXIT_OK
        res = derive_cmd(rc, args.deformation, args.out)
        print(json.dumps(res, sort_keys=True))
        return EXIT_OK
    except (ConfigError, UsageError) as exc:
        print(f"emshape: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (sc.ConditioningError, geo.InadmissibleDeformation, RuntimeError) as exc:
        print(f"emshape: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
