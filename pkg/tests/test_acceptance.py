"""Acceptance criteria 1-8, one reported line each.

Each test records a ``criterion N: PASS|FAIL ...`` line and then asserts;
the lines are repeated in the pytest terminal summary.
"""
import dataclasses
import functools
import random
import sys
import time
from fractions import Fraction as F

import pytest

from percentile.crosscheck import sweep
from percentile.fixtures import corpus, exp_memory_mdp, nested_mdp, randomness_mdp, switch_mdp
from percentile.horizon import (ds_build_rounded_unfolding, ds_eps_gap_solve, ds_horizon_bound, rounded_branch,
                                sp_build_product)
from percentile.meanpayoff import mp_inf_solve, mp_sup_solve
from percentile.model import PercentileConstraint as C
from percentile.oracle import brute_force_oracle
from percentile.randgen import FAMILIES, PROBS, random_mdp, random_query
from percentile.reach import almost_sure_multi_reach, nested_multi_reach
from percentile.sim import estimate_percentiles, exact_verify_finite, minimize_memory, reach_probability_of
from percentile.solve import solve_conjunction, solve_query

HALF = F(1, 2)
SWEEP_MDPS, SWEEP_SEED = 200, 7


LINES = {}  # criterion -> line, echoed in the terminal summary by conftest


def report(n, ok, detail):
    line = "criterion %d: %s  %s" % (n, "PASS" if ok else "FAIL", detail)
    LINES[n] = line
    print(line)
    return line


@functools.lru_cache(maxsize=None)
def _sweep():
    t = time.perf_counter()
    res = sweep(SWEEP_MDPS, SWEEP_SEED)
    return res, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def _solved_corpus():
    out = []
    for mname, (mdp, queries) in corpus().items():
        for qname, (query, expected) in queries.items():
            out.append(("%s.%s" % (mname, qname), mdp, query, expected, solve_query(mdp, query)))
    return out


def _timed(fn):
    t = time.perf_counter()
    ok = fn()
    return ok, time.perf_counter() - t


# ----------------------------------------------------------------------------


def _randomness_part():
    m = randomness_mdp()
    ok = True
    for qname, (query, expected) in corpus()["randomness"][1].items():
        if expected != "yes":
            continue
        ok &= solve_query(m, query).yes
        ok &= brute_force_oracle(m, 0, query.disjuncts[0], pure_only=True).verdict == "no"
    return ok


def _nested_part():
    ok = True
    for n in (2, 3):
        mdp, targets, alphas = nested_mdp(n)
        s = nested_multi_reach(mdp, 0, targets, alphas)
        ok &= s is not None and all(reach_probability_of(mdp, s, T) >= a for T, a in zip(targets, alphas))
        for i in range(n):
            bumped = list(alphas)
            bumped[i] += F(1, 100)
            ok &= nested_multi_reach(mdp, 0, targets, bumped) is None
    return ok


def _expmem_part():
    ok = True
    for k in (1, 2, 3):
        mdp, targets = exp_memory_mdp(k)
        res = almost_sure_multi_reach(mdp, 0, targets)
        ok &= res is not None and minimize_memory(mdp, res[0]).lower_bound >= 2 ** k
    return ok


def _switch_part():
    m = switch_mdp()
    return (mp_sup_solve(m, 0, [C("mp_sup", 0, 1, 1), C("mp_sup", 1, 1, 1)]).yes
            and mp_inf_solve(m, 0, [C("mp_inf", 0, HALF, F(3, 5)), C("mp_inf", 1, HALF, F(3, 5))]).yes
            and mp_inf_solve(m, 0, [C("mp_inf", 0, 1, 1), C("mp_inf", 1, 1, 1)]).no)


def test_criterion_1_fixtures():
    parts = {"randomness": _randomness_part, "nested": _nested_part,
             "expmem": _expmem_part, "switch": _switch_part}
    results = {name: _timed(fn) for name, fn in parts.items()}
    ok = all(r and t < 1.0 for r, t in results.values())
    report(1, ok, " ".join("%s=%s/%.2fs" % (k, "ok" if r else "bad", t) for k, (r, t) in results.items()))
    assert ok


def test_criterion_2_oracle_equivalence():
    res, secs = _sweep()
    bad = res.disagreements
    conclusive = sum(c.oracle != "inconclusive" for c in res.cases)
    ok = not bad and secs < 300
    report(2, ok, "%d MDPs, %d queries, %d conclusive, %d disagreements, %.0fs"
           % (SWEEP_MDPS, len(res.cases), conclusive, len(bad), secs))
    assert not bad, ["mdp %d %s %s: solver %s oracle %s" % (c.index, c.family, c.constraints,
                                                            c.verdict.status, c.oracle) for c in bad]
    assert secs < 300


def test_criterion_3_exactness():
    checked, failures = 0, []
    witnesses = [(name, mdp, query.initial, v) for name, mdp, query, _, v in _solved_corpus()]
    witnesses += [("sweep%d.%s" % (c.index, c.family), c.mdp, 0, c.verdict) for c in _sweep()[0].cases]
    for name, mdp, init, v in witnesses:
        if not v.yes:
            continue
        for strategy, meets in v.finite_witnesses()[:1]:
            checks = exact_verify_finite(mdp, strategy, meets, init)
            checked += 1
            if not all(ch.certified for ch in checks):
                failures.append(name)
    ok = not failures
    report(3, ok, "%d Yes witnesses certified exactly, %d failed %s" % (checked, len(failures), failures[:5]))
    assert ok


def test_criterion_4_simulation():
    checked, violations = 0, []
    for name, mdp, query, _, v in _solved_corpus():
        if v.status not in ("yes", "unknown"):
            continue
        for strategy, meets in v.finite_witnesses():
            rep = estimate_percentiles(mdp, strategy, meets, horizon=200, episodes=10_000, seed=0,
                                       init=query.initial)
            checked += 1
            for e in rep.estimates:
                halfwidth = (e.upper - e.lower) / 2
                if e.frequency < float(e.constraint.prob) - halfwidth - e.prob_slack:
                    violations.append((name, e.constraint.dim, e.frequency))
    ok = not violations
    report(4, ok, "%d finite witnesses simulated (10^4 episodes), %d violations %s"
           % (checked, len(violations), violations[:3]))
    assert ok


def test_criterion_5_ds_error_budget():
    rng = random.Random(5)
    lams = [F(1, 4), F(1, 3), HALF, F(2, 3), F(3, 4)]
    bad = 0
    for _ in range(100):
        mdp = random_mdp(rng, max_states=4, dim=2, weights=(-4, -2, -1, 0, 1, 2, 4))
        eps = rng.choice([F(1, 4), F(1, 8)])
        cons = [C("discounted_sum", l, 0, 1, discount=rng.choice(lams)) for l in (0, 1)]
        W = mdp.max_abs_weight()
        h = ds_horizon_bound(max(c.discount for c in cons), W, eps)
        path, s = [], 0
        for _ in range(h - 1):
            k = rng.randrange(len(mdp.actions[s]))
            succ = mdp.actions[s][k].succ
            t = rng.choices([t for t, _ in succ], weights=[float(p) for _, p in succ])[0]
            path.append((k, t))
            s = t
        labels = rounded_branch(mdp, 0, cons, eps, path)
        exact, s = [F(0), F(0)], 0
        for j, (k, t) in enumerate(path):
            for i, c in enumerate(cons):
                exact[i] += c.discount ** (j + 1) * mdp.actions[s][k].weights[c.dim]
            s = t
        for i, c in enumerate(cons):
            bad += abs(labels[-1][i] - exact[i]) > eps / 2
            bad += W * c.discount ** h / (1 - c.discount) > eps / 2
    minimal = 0
    for lam in lams:
        for W in range(1, 5):
            for eps in (F(1, 4), F(1, 8)):
                h = ds_horizon_bound(lam, W, eps)
                ok_h = W * lam ** h / (1 - lam) <= eps / 2
                ok_prev = h == 1 or W * lam ** (h - 1) / (1 - lam) > eps / 2
                minimal += not (ok_h and ok_prev)
    ok = bad == 0 and minimal == 0
    report(5, ok, "100 branches: %d budget violations; horizon bound minimality: %d violations" % (bad, minimal))
    assert ok


def _ds_instance(rng):
    mdp = random_mdp(rng, max_states=3, dim=2)
    return mdp, random_query(rng, mdp, ["discounted_sum"]), rng.choice([F(1, 4), F(1, 8)])


def test_criterion_6_gap_contract():
    from percentile.fixtures import coin_mdp
    m = coin_mdp()
    ds = lambda l, v: C("discounted_sum", l, v, 1, discount=HALF)
    hand = (ds_eps_gap_solve(m, 0, [ds(0, HALF)], F(1, 16)).status,
            ds_eps_gap_solve(m, 0, [ds(0, 2)], F(1, 4)).status,
            ds_eps_gap_solve(m, 0, [ds(0, 1), ds(1, -1)], F(1, 8)).status)
    rng = random.Random(6)
    incoherent, yes_pairs = 0, 0
    for _ in range(50):
        mdp, cons, eps = _ds_instance(rng)
        i = rng.randrange(len(cons))
        if rng.random() < 0.5:
            weaker_c = dataclasses.replace(cons[i], value=cons[i].value - rng.choice([F(1, 4), HALF, 1]))
        else:
            weaker_c = dataclasses.replace(cons[i], prob=rng.choice([p for p in PROBS if p <= cons[i].prob]))
        weaker = cons[:i] + [weaker_c] + cons[i + 1:]
        strong = ds_eps_gap_solve(mdp, 0, cons, eps)
        if strong.yes:
            yes_pairs += 1
            incoherent += ds_eps_gap_solve(mdp, 0, weaker, eps).no
    ok = hand == ("yes", "no", "unknown") and incoherent == 0
    report(6, ok, "coin verdicts %s; 50 pairs (%d with a Yes), %d incoherent" % (hand, yes_pairs, incoherent))
    assert ok


def _strengthen(rng, c):
    """Harder variants of one constraint: higher threshold, or a higher (TS: lower) value."""
    out = []
    higher = [p for p in PROBS if p > c.prob]
    if higher:
        out.append(dataclasses.replace(c, prob=rng.choice(higher)))
    if c.kind == "truncated_sum":
        if c.value >= 1:
            out.append(dataclasses.replace(c, value=c.value - 1))
    else:
        out.append(dataclasses.replace(c, value=c.value + rng.choice([HALF, 1])))
    return out


def test_criterion_7_monotonicity():
    rng = random.Random(7)
    flips, tested = [], {}
    for fam, kinds in FAMILIES.items():
        n = 0
        for _ in range(50):
            mdp = random_mdp(rng, dim=rng.randint(1, 2))
            cons = random_query(rng, mdp, kinds)
            eps = F(1, 8) if fam == "discounted_sum" else None
            if not solve_conjunction(mdp, 0, cons, eps).no:
                continue
            for i, c in enumerate(cons):
                for harder in _strengthen(rng, c):
                    n += 1
                    if solve_conjunction(mdp, 0, cons[:i] + [harder] + cons[i + 1:], eps).yes:
                        flips.append((fam, cons, i, harder))
        tested[fam] = n
    ok = not flips
    report(7, ok, "250 instances, strengthened No queries per family %s, %d No->Yes flips"
           % (dict(tested), len(flips)))
    assert ok, flips[:3]


def test_criterion_8_structure():
    rng = random.Random(8)
    sp_bad = ds_bad = 0
    for _ in range(40):
        mdp = random_mdp(rng, dim=2)
        cons = random_query(rng, mdp, ["truncated_sum"])
        cp = sp_build_product(mdp, 0, cons)
        vmax = max(int(c.value) for c in cons)
        sp_bad += cp.product.mdp.n_states > mdp.n_states * (vmax + 2) ** mdp.dim
    for _ in range(20):
        mdp, cons, eps = _ds_instance(rng)
        for settle in (True, False):
            unf = ds_build_rounded_unfolding(mdp, 0, cons, eps, settle=settle)
            h = ds_horizon_bound(max(c.discount for c in cons), mdp.max_abs_weight(), eps)
            ds_bad += not (unf.layers == unf.horizon == h)
    ok = sp_bad == 0 and ds_bad == 0
    report(8, ok, "40 SP products over the size bound: %d; 40 DS unfoldings with layers != h: %d"
           % (sp_bad, ds_bad))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
