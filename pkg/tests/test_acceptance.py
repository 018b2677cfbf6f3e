"""Acceptance gate: one PASS/FAIL line per criterion.

Criteria 1-5 run a full verification suite at its default band limit and
require every check to pass within the runtime budget. Criterion 6 reruns
``verify all`` through the CLI and compares the report files byte for byte
with the in-process run.

Run standalone with ``python tests/test_acceptance.py``.
"""

import subprocess
import sys
import time

import pytest

from emshape import checks
from emshape.config import RunConfig
from emshape.harness import write_reports

CRITERIA = {
    1: ("geometry", 30.0, "geometry derivatives vs FD, 3 presets x 2 grids, order [1.8, 2.2], rel < 1e-5 at t=1e-3"),
    2: ("surfops", 60.0, "surface identities < 1e-9, spectrum < 1e-8, derivative lemmas FD-verified, L=15"),
    3: ("kernels", 120.0, "kernel eigenvalues < 1e-6, derivatives FD-verified, translation < 1e-9, phase law, L=12"),
    4: ("emfield", 240.0, "curl/Maxwell residuals < 1e-4, two-route < 1e-6, d_emfield order [1.7, 2.3], L=10"),
    5: ("scattering", 600.0, "null, transmission, radiation, d_solution vs FD, characterization, L=10"),
}

_RESULTS: dict[str, list] = {}


def _announce(capsys, line: str) -> None:
    with capsys.disabled():
        print(f"\n{line}", flush=True)


def _suite_reports(suite: str) -> tuple[list, float]:
    t0 = time.perf_counter()
    reports = checks.run_checks(suite, RunConfig())
    elapsed = time.perf_counter() - t0
    _RESULTS[suite] = reports
    return reports, elapsed


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    suite, budget, text = CRITERIA[number]
    reports, elapsed = _suite_reports(suite)
    failed = [r.check_id for r in reports if not r.passed]
    ok = not failed and elapsed < budget
    detail = f"{len(reports) - len(failed)}/{len(reports)} checks, {elapsed:.1f} s (budget {budget:.0f} s)"
    if failed:
        detail += f"; failed: {', '.join(failed)}"
    _announce(capsys, f"{'PASS' if ok else 'FAIL'} criterion {number} [{suite}]: {text} -- {detail}")
    assert not failed, failed
    assert elapsed < budget


@pytest.mark.slow
def test_criterion_6_determinism(tmp_path, capsys):
    reports = []
    for suite in checks.SUITES:
        reports += _RESULTS[suite] if suite in _RESULTS else _suite_reports(suite)[0]
    reports.sort(key=lambda r: r.check_id)
    write_reports(reports, tmp_path / "first", RunConfig(), "all")
    proc = subprocess.run([sys.executable, "-m", "emshape", "verify", "all", "--out", str(tmp_path / "second")],
                          capture_output=True, text=True)
    same = all((tmp_path / "first" / f).read_bytes() == (tmp_path / "second" / f).read_bytes()
               for f in ("reports.csv", "summary.json"))
    ok = same and proc.returncode in (0, 1)
    _announce(capsys, f"{'PASS' if ok else 'FAIL'} criterion 6 [determinism]: verify all twice gives byte-identical "
                      f"reports.csv and summary.json (second run exit {proc.returncode})")
    assert proc.returncode in (0, 1), proc.stderr
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
