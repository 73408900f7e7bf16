def pytest_terminal_summary(terminalreporter):
    from test_acceptance import SCALE, VERDICTS
    if not VERDICTS:
        return
    terminalreporter.section(f"acceptance criteria (scale={SCALE})")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
