"""Cross-check every solver against the brute-force oracle on random small MDPs."""
import argparse
import sys
import time

from percentile.crosscheck import sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mdps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    t = time.time()
    res = sweep(args.mdps, args.seed)
    tally = res.tally()
    for key in sorted(tally):
        print("%-15s solver=%-8s oracle=%-13s %d" % (key + (tally[key],)))
    for key in sorted(res.seconds):
        print("%-15s %-7s %7.1fs" % (key + (res.seconds[key],)))
    for c in res.disagreements:
        print("DISAGREE mdp %d %s %s solver=%s oracle=%s (%s)"
              % (c.index, c.family, c.constraints, c.verdict.status, c.oracle, c.reason))
    print("disagreements: %d   (%.1fs)" % (len(res.disagreements), time.time() - t))
    return 1 if res.disagreements else 0


if __name__ == "__main__":
    sys.exit(main())
