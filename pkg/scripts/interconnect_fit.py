#!/usr/bin/env python3
"""Fit (W, alpha, T_L) to the three-cluster measurement table and check the
implied bandwidths and times against the measured rows."""

import sys

from semperf.gamma import calibrate
from semperf.refdata import (
    BASE_BANDWIDTH_MBS,
    INTERCONNECT_ROWS,
    calibration_fixture,
)


def main():
    rows = calibration_fixture()
    fit = calibrate(rows, base_bandwidth=BASE_BANDWIDTH_MBS)
    print(f"W     = {fit.w_mb:8.3f} MB per step")
    print(f"alpha = {fit.alpha:8.3f}  (b2 = {fit.scaled_bandwidth:.1f} MB/s)")
    print(f"T_L   = {fit.t_l:8.3f} s")
    print()
    print(f"{'cluster':<14} {'T_C model':>10} {'T_C meas':>9} {'resid':>10}")
    measured_tc = {name: t_c for name, _, t_c, _, _ in INTERCONNECT_ROWS}
    for row, resid in zip(rows, fit.residuals):
        b_eff = row.effective_bandwidth(BASE_BANDWIDTH_MBS, fit.alpha)
        t_c = fit.w_mb / b_eff
        print(
            f"{row.name:<14} {t_c:>10.3f} {measured_tc[row.name]:>9.2f} "
            f"{resid:>10.2e}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
