"""Solve every fixture query, compare with the expected verdict, and check finite witnesses exactly."""
import sys
import time

from percentile.fixtures import corpus
from percentile.sim import exact_verify_finite
from percentile.solve import solve_query


def main():
    wrong = 0
    for mname, (mdp, queries) in corpus().items():
        for qname, (query, expected) in queries.items():
            t = time.perf_counter()
            v = solve_query(mdp, query)
            secs = time.perf_counter() - t
            probs = ""
            witnesses = v.finite_witnesses()
            if witnesses:
                strategy, meets = witnesses[0]
                checks = exact_verify_finite(mdp, strategy, meets, query.initial)
                probs = " ".join(str(c.lower) if c.exact else "[%s, %s]" % (float(c.lower), float(c.upper))
                                 for c in checks)
            mark = "" if v.status == expected else "   <-- expected %s" % expected
            wrong += v.status != expected
            print("%-28s %-8s %6.2fs  %s%s" % (mname + "." + qname, v.status, secs, probs, mark))
    return 1 if wrong else 0


if __name__ == "__main__":
    sys.exit(main())
