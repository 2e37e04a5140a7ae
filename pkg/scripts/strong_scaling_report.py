#!/usr/bin/env python3
"""Simulated strong scaling of the canonical case vs the measured rows.

Usage: python scripts/strong_scaling_report.py [output.csv]
"""

import csv
import sys

from semperf.harness import CampaignSpec, run_strong_scaling
from semperf.profiles import REFERENCE_STRONG_CASE, builtin_profiles
from semperf.refdata import STRONG_SCALING_ROWS


def build_rows():
    machine = builtin_profiles()["pleiades2-sim"]
    measured = {p: (gf, t, e) for p, gf, t, e in STRONG_SCALING_ROWS}
    spec = CampaignSpec(
        kind="strong",
        case=REFERENCE_STRONG_CASE,
        machine=machine,
        p_list=tuple(sorted(measured)),
    )
    rows = []
    for rec in run_strong_scaling(spec):
        gf, t, e = measured[rec.n_ranks]
        rows.append(
            {
                "P": rec.n_ranks,
                "model_gflops": rec.mflops_wall / 1000.0,
                "measured_gflops": gf,
                "model_walltime_s": rec.step_walltime,
                "measured_walltime_s": t,
                "model_efficiency": rec.efficiency,
                "measured_efficiency": e,
            }
        )
    return rows


def main(argv):
    rows = build_rows()
    print(
        f"{'P':>3} {'GF/s model':>11} {'GF/s meas':>10} "
        f"{'T model':>9} {'T meas':>8} {'E model':>8} {'E meas':>7}"
    )
    for r in rows:
        print(
            f"{r['P']:>3} {r['model_gflops']:>11.3f} "
            f"{r['measured_gflops']:>10.3f} {r['model_walltime_s']:>9.2f} "
            f"{r['measured_walltime_s']:>8.2f} {r['model_efficiency']:>8.3f} "
            f"{r['measured_efficiency']:>7.2f}"
        )
    if len(argv) > 1:
        with open(argv[1], "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {argv[1]}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
