#!/usr/bin/env python3
"""Fetch the three UCI benchmark datasets and convert them to the CSV
schema the acceptance tests expect (header row, numeric features, one
two-valued `class` column). See data/uci/README.md for the exact mapping.

Usage: python3 scripts/fetch_uci.py [output_dir]
"""

import csv
import sys
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases"

SOURCES = {
    "sonar": f"{BASE}/undocumented/connectionist-bench/sonar/sonar.all-data",
    "glass": f"{BASE}/glass/glass.data",
    "bupa": f"{BASE}/liver-disorders/bupa.data",
}


def fetch(url: str) -> list[list[str]]:
    with urllib.request.urlopen(url, timeout=60) as resp:
        text = resp.read().decode("utf-8")
    return [row for row in csv.reader(text.splitlines()) if row]


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def convert_sonar(out_dir: Path) -> None:
    rows = fetch(SOURCES["sonar"])
    header = [f"f{i+1}" for i in range(60)] + ["class"]
    write_csv(out_dir / "sonar.csv", header, rows)


def convert_glass2(out_dir: Path) -> None:
    rows = fetch(SOURCES["glass"])
    header = ["ri", "na", "mg", "al", "si", "k", "ca", "ba", "fe", "class"]
    out = []
    for row in rows:
        # columns: id, 9 features, type
        glass_type = int(row[-1])
        if glass_type not in (1, 2, 3):
            continue  # window glass only
        label = "float" if glass_type in (1, 3) else "nonfloat"
        out.append(row[1:-1] + [label])
    if len(out) != 163:
        print(f"warning: expected 163 window-glass rows, got {len(out)}")
    write_csv(out_dir / "glass2.csv", header, out)


def convert_liver(out_dir: Path) -> None:
    rows = fetch(SOURCES["bupa"])
    header = ["mcv", "alkphos", "sgpt", "sgot", "gammagt", "drinks", "class"]
    write_csv(out_dir / "liver.csv", header, rows)


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/uci")
    out_dir.mkdir(parents=True, exist_ok=True)
    convert_sonar(out_dir)
    convert_glass2(out_dir)
    convert_liver(out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
