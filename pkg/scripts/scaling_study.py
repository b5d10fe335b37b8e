"""Log-log slope of the KdV-NLS correspondence error in the weak-coupling parameter.

Runs the undeformed pairing and, for each requested deformation strength, the beta = 1 + 5 eps/3
pairing. Writes one row per (deformation, epsilon) with the fitted slope repeated per group.
"""
import argparse
import csv
import sys

from qikdv import nls_map


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.01, 0.02, 0.04, 0.08])
    ap.add_argument("--deformations", type=float, nargs="+", default=[0.0, 0.03])
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    args = ap.parse_args(argv)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("deformation_epsilon", "beta", "epsilon", "error", "slope"))
    for d in args.deformations:
        rows, slope = nls_map.scaling_study(args.epsilons, deformation_eps=d, t_end=args.t_end)
        for eps, err in rows:
            w.writerow((d, 1.0 + 5.0 * d / 3.0, eps, err, slope))
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
