"""Terminal-summary hook: one verdict line per acceptance criterion."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for bucket, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"),
                         ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(bucket, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::")[-1].split("[")[0]
            parts = name.split("_")
            rows.append((int(parts[2]), word, " ".join(parts[3:])))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, word, slug in sorted(rows):
        terminalreporter.write_line(f"criterion {num:2d}: {word}  ({slug})")
