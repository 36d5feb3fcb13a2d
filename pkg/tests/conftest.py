import pytest


@pytest.fixture(scope="session")
def criterion_log(request):
    """Collects one pass/fail line per acceptance criterion for the summary."""
    lines = getattr(request.config, "_criterion_lines", None)
    if lines is None:
        lines = request.config._criterion_lines = []
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
