import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture(scope="session")
def report(request):
    """report(n, ok, text): record one acceptance line, printed in the terminal summary."""
    lines = request.config.stash[_LINES]

    def add(n: int, ok: bool, text: str) -> None:
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {text}"
        lines.append((n, line))
        print(line)

    return add


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
