"""Shared collector for acceptance pass/fail lines (printed at session end)."""

LINES: list[str] = []


def report(tag: str, ok: bool, detail: str, qualifier: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    if qualifier:
        status += f" ({qualifier})"
    line = f"[{tag}] {status} — {detail}"
    LINES.append(line)
    print(line, flush=True)
