"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
RESULTS = {}


def record(number, title, passed, detail, monitored=False, case=None):
    verdict = "PASS" if passed else "FAIL"
    tag = " (monitored)" if monitored else ""
    label = f"{number:>2}" if case is None else f"{number:>2} [{case}]"
    line = f"CRITERION {label} {verdict}{tag}: {title} | {detail}"
    RESULTS[(number, case or 0)] = line
    print(line)
    return passed
