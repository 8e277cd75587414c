import time

import pytest

from footteleop.teleop import bundled_scenario_path, load_scenario, run_scenario

# acceptance results, printed in the terminal summary: (label, passed, detail)
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def reference_run():
    """The bundled grasp scenario, run once per session: (config, trace, seconds)."""
    cfg = load_scenario(bundled_scenario_path("grasp_reference"))
    t0 = time.perf_counter()
    trace = run_scenario(cfg)
    return cfg, trace, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
