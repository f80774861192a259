"""Registry of acceptance outcomes, printed at the end of the pytest run."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    RESULTS[number] = line
    print(line)
    return passed
