"""Collects acceptance outcomes and prints one line per criterion after the run."""

ACCEPTANCE: dict[tuple[int, str], tuple[bool, str]] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[(number, title)] = (ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[(number, title)]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}  {detail}")
