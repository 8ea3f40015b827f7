import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and wording")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, text = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        previous = _CRITERIA.get(n, (text, True))
        _CRITERIA[n] = (text, previous[1] and report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, ok = _CRITERIA[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {text}")


# -- shared simulation runs ------------------------------------------------------

@pytest.fixture(scope="session")
def default_run():
    """Default scenario recorded at every step (300 s, dt = 1e-3)."""
    from filtrans.harness import ScenarioConfig, run_scenario

    return run_scenario(ScenarioConfig(name="default", record_every=1), write=False)


@pytest.fixture(scope="session")
def long_run():
    """Default gains over 500 s, recorded every 10 steps."""
    from filtrans.harness import ScenarioConfig, run_scenario

    return run_scenario(ScenarioConfig(name="long", t_final=500.0, record_every=10), write=False)
