from __future__ import annotations

import re

import pytest

from fermi_lab.potentials import zero
from fermi_lab.spectrum import compute_spectrum

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d{2}[ab]?)_(\w+)")


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    # trigger jit compilation before any timed assertion
    compute_spectrum(zero(), lam=1.0, n=32, M=4)
    yield


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[str, tuple[str, str]] = {}
    for key in ("passed", "failed", "error", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m is None:
                continue
            tag, label = m.group(1), m.group(2).replace("_", " ")
            if key == "passed":
                verdict = "PASS"
            elif key == "xfailed":
                verdict = "FAIL (known defect, see README)"
            else:
                verdict = "FAIL"
            # keep the worst verdict if setup and call phases disagree
            prev = results.get(tag)
            if prev is None or (prev[1] == "PASS" and verdict != "PASS"):
                results[tag] = (label, verdict)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(results):
        label, verdict = results[tag]
        terminalreporter.write_line(f"ACCEPTANCE {tag} {label}: {verdict}")
