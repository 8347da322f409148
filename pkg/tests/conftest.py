import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; a test that dies before recording counts as FAIL."""
    results = request.config.stash[_RESULTS]
    label = (request.node.function.__doc__ or request.node.name).strip().splitlines()[0]
    results[label] = (False, "did not complete")

    def record(ok, detail):
        results[label] = (bool(ok), detail)
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label, (ok, detail) in results.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
