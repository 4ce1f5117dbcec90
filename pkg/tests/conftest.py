def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for idx in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[idx])
