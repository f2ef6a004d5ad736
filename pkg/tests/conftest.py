import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion verdicts where capture cannot hide them."""
    module = next(
        (
            m
            for name, m in sys.modules.items()
            if name.rsplit(".", 1)[-1] == "test_acceptance" and m is not None
        ),
        None,
    )
    lines = getattr(module, "CRITERION_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
