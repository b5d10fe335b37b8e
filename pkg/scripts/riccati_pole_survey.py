"""Count the poles of the zeroth-order gauge coefficient for A sech^2(x/w) profiles.

The Riccati solution a_-^0 blows up where the zero mode s = p' changes sign. The survey reports the
pole count, the first pole, the regular charge Q^0 (when defined) and its principal value.
"""
import argparse
import csv
import sys

import numpy as np

from qikdv import abelianization as ab
from qikdv import charges as ch
from qikdv.grid import GridField


def survey(amplitudes, widths, length, n):
    rows = []
    for w in widths:
        for a in amplitudes:
            u = GridField.from_function(lambda x: a / np.cosh(x / w) ** 2, length, n)
            _, s = ab.zero_mode(u)
            poles = int(np.count_nonzero(np.diff(np.sign(s)) != 0))
            sol = ab.solve_riccati_zeroth(u)
            regular = ch.charge_Q0(u, sol) if sol.singular is None else float("nan")
            first = sol.singular if sol.singular is not None else float("nan")
            rows.append((a, w, poles, first, regular, ch.charge_Q0_principal(u)))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[-2.0, -0.5, -0.2, 0.0, 0.05, 0.2, 0.5, 2.0])
    ap.add_argument("--widths", type=float, nargs="+", default=[1.0, 3.0])
    ap.add_argument("--length", type=float, default=40.0)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    args = ap.parse_args(argv)
    rows = survey(args.amplitudes, args.widths, args.length, args.n)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("amplitude", "width", "poles", "first_pole_x", "Q0_regular", "Q0_principal"))
    w.writerows(rows)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
