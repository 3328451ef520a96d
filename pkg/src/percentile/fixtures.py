"""Small MDPs used as worked examples and regression fixtures."""
from __future__ import annotations

from fractions import Fraction as F

from .model import PercentileConstraint, PercentileQuery as Q, WeightedMdp


def randomness_mdp() -> WeightedMdp:
    """Two absorbing branches; meeting (1/2, 1/2) needs a coin flip in s0."""
    return WeightedMdp.build(
        ["s0", "s1", "s2"],
        {
            "s0": [("a", (1, 0), {"s1": 1}), ("b", (0, 1), {"s2": 1})],
            "s1": [("a", (1, 0), {"s1": 1})],
            "s2": [("b", (0, 1), {"s2": 1})],
        },
    )


def switch_mdp() -> WeightedMdp:
    """Two states with a self-loop each, rewarding one dimension each, and free transfers."""
    return WeightedMdp.build(
        ["s", "t"],
        {
            "s": [("loop", (1, 0), {"s": 1}), ("go", (0, 0), {"t": 1})],
            "t": [("loop", (0, 1), {"t": 1}), ("go", (0, 0), {"s": 1})],
        },
    )


def nested_mdp(n: int):
    """Hub s with actions a_i reaching t_i w.p. 1 - 1/(i+1), else the sink.

    Returns (mdp, targets, thresholds) with T_i = {t_1..t_i} and the
    tight thresholds alpha_n = 1 - 1/(n+1), alpha_i = alpha_{i+1}(1 - 1/(i+1)).
    """
    names = ["s"] + ["t%d" % i for i in range(1, n + 1)] + ["bot"]
    trans = {"s": [], "bot": [("stay", (0,), {"bot": 1})]}
    for i in range(1, n + 1):
        p = 1 - F(1, i + 1)
        trans["s"].append(("a%d" % i, (0,), {"t%d" % i: p, "bot": 1 - p}))
        trans["t%d" % i] = [("back", (0,), {"s": 1} if i > 1 else {"bot": 1})]
    mdp = WeightedMdp.build(names, trans)
    targets = [frozenset(mdp.index("t%d" % j) for j in range(1, i + 1)) for i in range(1, n + 1)]
    alphas = [None] * n
    alphas[n - 1] = 1 - F(1, n + 1)
    for i in range(n - 1, 0, -1):
        alphas[i - 1] = alphas[i] * (1 - F(1, i + 1))
    return mdp, targets, alphas


def exp_memory_mdp(k: int):
    """k random left/right gadgets followed by k controlled ones.

    To see every target the controller has to answer each random outcome
    with the opposite choice later, so it must remember k bits.
    Returns (mdp, targets).
    """
    names, trans = [], {}
    for i in range(1, k + 1):
        names += ["r%d" % i, "r%dL" % i, "r%dR" % i]
    for i in range(1, k + 1):
        names += ["c%d" % i, "c%dL" % i, "c%dR" % i]
    for i in range(1, k + 1):
        nxt = "r%d" % (i + 1) if i < k else "c1"
        trans["r%d" % i] = [("go", (0,), {"r%dL" % i: F(1, 2), "r%dR" % i: F(1, 2)})]
        trans["r%dL" % i] = [("go", (0,), {nxt: 1})]
        trans["r%dR" % i] = [("go", (0,), {nxt: 1})]
    for i in range(1, k + 1):
        trans["c%d" % i] = [("L", (0,), {"c%dL" % i: 1}), ("R", (0,), {"c%dR" % i: 1})]
        if i < k:
            trans["c%dL" % i] = [("go", (0,), {"c%d" % (i + 1): 1})]
            trans["c%dR" % i] = [("go", (0,), {"c%d" % (i + 1): 1})]
        else:
            trans["c%dL" % i] = [("stay", (0,), {"c%dL" % i: 1})]
            trans["c%dR" % i] = [("stay", (0,), {"c%dR" % i: 1})]
    mdp = WeightedMdp.build(names, trans)
    targets = []
    for i in range(1, k + 1):
        targets.append(frozenset({mdp.index("r%dL" % i), mdp.index("c%dL" % i)}))
        targets.append(frozenset({mdp.index("r%dR" % i), mdp.index("c%dR" % i)}))
    return mdp, targets


def coin_mdp() -> WeightedMdp:
    """One state, two self-loops: a with weights (0,0) and b with (1,-1)."""
    return WeightedMdp.build(["s"], {"s": [("a", (0, 0), {"s": 1}), ("b", (1, -1), {"s": 1})]})


def split_mdp() -> WeightedMdp:
    """s branches 50/50 to target t through a cheap (w=1) or a costly (w=3) middle state."""
    return WeightedMdp.build(
        ["s", "m1", "m3", "t"],
        {
            "s": [("go", (0,), {"m1": F(1, 2), "m3": F(1, 2)})],
            "m1": [("go", (1,), {"t": 1})],
            "m3": [("go", (3,), {"t": 1})],
            "t": [("stay", (0,), {"t": 1})],
        },
    )


def route_mdp() -> WeightedMdp:
    """Commute to t: a risky road (cost 1, jammed half the time) or a safe one (cost 5).

    From the jam a detour (6 more) or waiting (9 more) leads to t.
    """
    return WeightedMdp.build(
        ["s", "jam", "t"],
        {
            "s": [("risky", (1,), {"t": F(1, 2), "jam": F(1, 2)}), ("safe", (5,), {"t": 1})],
            "jam": [("detour", (6,), {"t": 1}), ("wait", (9,), {"t": 1})],
            "t": [("stay", (0,), {"t": 1})],
        },
    )


def _c(kind, dim, value, prob, **kw):
    return PercentileConstraint(kind, dim, value, prob, **kw)


def corpus():
    """Named models with named queries: {model_name: (mdp, {query_name: (PercentileQuery, expected)})}.

    Reachability of T is written as a truncated sum of zero weights
    bounded by 0 with target T.
    """
    half = F(1, 2)
    out = {}

    m = randomness_mdp()
    s1, s2 = m.index("s1"), m.index("s2")
    qs = {}
    for kind in ("inf", "sup", "liminf", "limsup", "mp_inf", "mp_sup"):
        qs[kind] = (Q.conj([_c(kind, 0, 1, half), _c(kind, 1, 1, half)]), "yes")
    qs["discounted_sum"] = (Q.conj([_c("discounted_sum", 0, half, half, discount=half),
                                    _c("discounted_sum", 1, half, half, discount=half)], epsilon=F(1, 8)), "yes")
    qs["truncated_sum"] = (Q.conj([_c("truncated_sum", 1, 0, half, target={s1}),
                                   _c("truncated_sum", 0, 0, half, target={s2})]), "yes")
    qs["sup_perturbed"] = (Q.conj([_c("sup", 0, 1, F(51, 100)), _c("sup", 1, 1, half)]), "no")
    out["randomness"] = (m, qs)

    m = switch_mdp()
    out["switch"] = (m, {
        "limsup": (Q.conj([_c("limsup", 0, 1, 1), _c("limsup", 1, 1, 1)]), "yes"),
        "liminf": (Q.conj([_c("liminf", 0, 1, half), _c("liminf", 1, 1, half)]), "yes"),
        "mp_sup": (Q.conj([_c("mp_sup", 0, 1, 1), _c("mp_sup", 1, 1, 1)]), "yes"),
        "mp_inf": (Q.conj([_c("mp_inf", 0, half, F(3, 5)), _c("mp_inf", 1, half, F(3, 5))]), "yes"),
        "mp_inf_joint": (Q.conj([_c("mp_inf", 0, 1, 1), _c("mp_inf", 1, 1, 1)]), "no"),
        "mp_inf_relaxed": (Q.conj([_c("mp_inf", 0, half, 1), _c("mp_inf", 1, half, 1)], epsilon=F(1, 10)), "yes"),
    })

    for n in (2, 3):
        m, targets, alphas = nested_mdp(n)
        out["nested%d" % n] = (m, {
            "tight": (Q.conj([_c("truncated_sum", 0, 0, a, target=T) for T, a in zip(targets, alphas)]), "yes"),
        })

    for k in (1, 2, 3):
        m, targets = exp_memory_mdp(k)
        out["expmem%d" % k] = (m, {
            "all_targets": (Q.conj([_c("truncated_sum", 0, 0, 1, target=T) for T in targets]), "yes"),
        })

    m = coin_mdp()
    out["coin"] = (m, {
        "yes": (Q.conj([_c("discounted_sum", 0, half, 1, discount=half)], epsilon=F(1, 16)), "yes"),
        "no": (Q.conj([_c("discounted_sum", 0, 2, 1, discount=half)], epsilon=F(1, 4)), "no"),
        "boundary": (Q.conj([_c("discounted_sum", 0, 1, 1, discount=half),
                             _c("discounted_sum", 1, -1, 1, discount=half)], epsilon=F(1, 8)), "unknown"),
    })

    m = split_mdp()
    t = frozenset({m.index("t")})
    out["split"] = (m, {
        "cheap_half": (Q.conj([_c("truncated_sum", 0, 1, half, target=t)]), "yes"),
        "cheap_more": (Q.conj([_c("truncated_sum", 0, 1, F(3, 5), target=t)]), "no"),
    })

    m = route_mdp()
    t = frozenset({m.index("t")})
    out["route"] = (m, {
        "fast_or_safe": (Q.conj([_c("truncated_sum", 0, 1, F(1, 4), target=t),
                                 _c("truncated_sum", 0, 5, F(3, 4), target=t)]), "yes"),
        "too_greedy": (Q.conj([_c("truncated_sum", 0, 1, half, target=t),
                               _c("truncated_sum", 0, 5, 1, target=t)]), "no"),
        "disjunction": (Q(((_c("truncated_sum", 0, 0, 1, target=t),),
                           (_c("truncated_sum", 0, 15, 1, target=t),))), "yes"),
    })
    return out
