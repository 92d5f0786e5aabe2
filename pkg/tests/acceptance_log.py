"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

RESULTS: dict[int, tuple[str, str]] = {}


def record(number: int, status: str, detail: str) -> None:
    RESULTS[number] = (status, detail)
