"""Six-row correlation table (input, spin-wave, released) against the measured values."""

import argparse
from pathlib import Path

from trimem.config import ExperimentSpec
from trimem.criteria import table1_report
from trimem.report import bundled_spec, comparison_checks, report_csv, report_text


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, help="experiment spec JSON (default: bundled)")
    ap.add_argument("--csv", type=Path, help="write long-format CSV here")
    args = ap.parse_args()
    spec = ExperimentSpec.load(args.config) if args.config else bundled_spec()

    rows = table1_report(spec)
    print(report_text(rows))
    print("spin-wave column at the spin waves' own optimal gains:")
    for row in table1_report(spec, atomic_gains="optimal"):
        print(f"  {row.combination:<20}{row.atomic_dB:8.3f} dB")
    print()
    for check in comparison_checks(spec):
        print(check.line())
    if args.csv:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(report_csv(rows), encoding="utf-8")


if __name__ == "__main__":
    main()
