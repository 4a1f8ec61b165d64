import csv
from pathlib import Path


def read_csv_rows(path) -> list[dict[str, str]]:
    """Rows of a CSV artifact, comment lines skipped."""
    with Path(path).open(newline="") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))
