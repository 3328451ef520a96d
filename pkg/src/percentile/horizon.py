"""Truncated sums (shortest path, non-negative weights) and discounted sums (epsilon-gap).

Both reduce to multiple reachability on a finite product: saturating
counters for truncated sums, and a depth-bounded unfolding with labels
rounded to a grid for discounted sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .model import Action, MooreStrategy, PercentileConstraint, WeightedMdp, as_fraction, tabulate
from .product import Product, ProductBuilder, absorbing_action, lift_strategy
from .reach import absorbing_flow, acyclic_multi_reach, general_multi_reach
from .verdict import NO, UNKNOWN, YES, Verdict, no, trivial_strategy, yes


class NegativeWeights(ValueError):
    pass


class PreciseDiscountUnsupported(ValueError):
    pass


# ----------------------------------------------------------------------------
# truncated sums


@dataclass
class CounterProduct:
    product: Product
    dims: Tuple[int, ...]  # tracked dimensions, in counter order
    caps: Tuple[int, ...]  # saturation value per tracked dimension
    accept: List[frozenset]  # per constraint: product states meeting it

    def counter(self, p, dim) -> int:
        return self.product.aux[p][self.dims.index(dim)]


def sp_build_product(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> CounterProduct:
    """States x saturating counters for the dimensions the constraints use."""
    if any(w < 0 for row in mdp.actions for a in row for w in a.weights):
        raise NegativeWeights("mixed-sign shortest path is undecidable; rejected")
    dims = tuple(sorted({c.dim for c in constraints}))
    caps = tuple(max(math.floor(c.value) for c in constraints if c.dim == l) + 1 for l in dims)
    caps = tuple(max(cap, 0) for cap in caps)
    b = ProductBuilder(mdp)
    zero = (0,) * len(dims)
    start = b.state((init, zero), init, zero)

    def expand(p):
        s, cnt = b.keys[p]
        acts, origins = [], []
        for k, act in enumerate(mdp.actions[s]):
            nc = tuple(min(cnt[j] + act.weights[l], caps[j]) for j, l in enumerate(dims))
            succ = tuple((b.state((t, nc), t, nc), pr) for t, pr in act.succ)
            acts.append(Action(act.name, act.weights, succ))
            origins.append(k)
        b.set_actions(p, acts, origins)

    b.explore(expand)
    prod = b.finish(start)
    accept = []
    for c in constraints:
        j = dims.index(c.dim)
        accept.append(frozenset(p for p, o in enumerate(prod.origin)
                                if o in c.target and prod.aux[p][j] <= c.value))
    return CounterProduct(prod, dims, caps, accept)


def _stop_at(mdp: WeightedMdp, stops) -> WeightedMdp:
    acts = tuple((absorbing_action(s, mdp.dim),) if s in stops else row for s, row in enumerate(mdp.actions))
    return WeightedMdp(mdp.states, acts, mdp.dim, mdp.initial)


def sp_solve(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint]) -> Verdict:
    constraints = tuple(constraints)
    for c in constraints:
        if c.kind != "truncated_sum":
            raise ValueError("not a truncated-sum constraint: %s" % c.kind)
    live = [c for c in constraints if c.prob > 0]
    if not live:
        return yes(constraints, trivial_strategy(mdp, init))
    cp = sp_build_product(mdp, init, live)
    prod = cp.product
    cert = {"product_states": prod.mdp.n_states, "dims": cp.dims, "caps": cp.caps}
    alphas = [c.prob for c in live]
    if len({c.target for c in live}) == 1:
        # a run's sums are fixed at its first target visit: stop there
        stops = frozenset(p for p, o in enumerate(prod.origin) if o in live[0].target)
        sol = absorbing_flow(_stop_at(prod.mdp, stops), prod.init, cp.accept, alphas)
        if sol is None:
            return no(constraints, certificate=cert)
        inner = MooreStrategy.memoryless(prod.mdp, prod.init,
                                         lambda p: 0 if p in stops else sol.policy.get(p, 0))
        cert["method"] = "counter product, absorbing targets"
    else:
        inner = general_multi_reach(prod.mdp, prod.init, cp.accept, alphas)
        if inner is None:
            return no(constraints, certificate=cert)
        cert["method"] = "counter product, general targets"
    return yes(constraints, lift_strategy(prod, inner), certificate=cert)


# ----------------------------------------------------------------------------
# discounted sums


def ds_horizon_bound(discount, max_weight: int, eps) -> int:
    """Smallest h >= 1 with W * discount^h / (1 - discount) <= eps / 2."""
    lam, eps = as_fraction(discount), as_fraction(eps)
    if not 0 < lam < 1:
        raise ValueError("discount must lie in (0,1)")
    if eps <= 0:
        raise PreciseDiscountUnsupported("precise discounted sum is not supported")
    if max_weight == 0:
        return 1
    h, power = 1, lam
    while max_weight * power / (1 - lam) > eps / 2:
        h += 1
        power *= lam
    return h


def round_to_grid(x: Fraction, gamma: Fraction) -> Fraction:
    """Nearest multiple of gamma, halves rounded up."""
    return math.floor(x / gamma + Fraction(1, 2)) * gamma


@dataclass
class RoundedUnfolding:
    mdp: WeightedMdp  # layered, leaves absorbing
    base: WeightedMdp
    depth: List[int]
    origin: List[int]
    labels: List[Tuple[Fraction, ...]]
    leaves: List[int]
    horizon: int
    gamma: Optional[Fraction]
    succ_index: Dict[Tuple[int, int, int], int]  # (node, base action, base successor) -> node

    def leaf_set(self, constraints, shift) -> List[frozenset]:
        return [frozenset(n for n in self.leaves if self.labels[n][i] >= c.value + shift)
                for i, c in enumerate(constraints)]

    @property
    def layers(self) -> int:
        return max(self.depth) + 1


class LabelRule:
    """How a node's labels change along one action: add the discounted weight, round, maybe freeze.

    With ``settle`` a label is frozen as soon as no continuation can change
    whether its leaves land in the Sure and Maybe sets; it is then replaced
    by a representative value (v + eps: both, v - eps: Maybe only,
    v - eps - 1: neither) so that equivalent nodes merge.
    """

    def __init__(self, mdp: WeightedMdp, constraints: Sequence[PercentileConstraint], eps, settle: bool = True):
        eps = as_fraction(eps)
        if not 0 < eps < 1:
            if eps <= 0:
                raise PreciseDiscountUnsupported("precise discounted sum is not supported")
            raise ValueError("epsilon must be below 1")
        self.constraints = tuple(constraints)
        self.eps = eps
        self.settle = settle
        W = mdp.max_abs_weight()
        self.horizon = h = ds_horizon_bound(max(c.discount for c in constraints), W, eps)
        self.gamma = eps / (h - 1) if h > 1 else None
        # largest change of label i after depth d, rounding included
        self.reach = [[sum((W * c.discount ** j for j in range(d + 1, h)), Fraction(0))
                       + (h - 1 - d) * (self.gamma or 0) / 2 for d in range(h)] for c in constraints]

    def _settle(self, i, d, x):
        c, eps = self.constraints[i], self.eps
        lo, hi = x - self.reach[i][d], x + self.reach[i][d]
        if lo >= c.value + eps:
            return c.value + eps, True
        if hi < c.value - eps:
            return c.value - eps - 1, True
        if lo >= c.value - eps and hi < c.value + eps:
            return c.value - eps, True
        return x, False

    def step(self, labels, frozen, d: int, weights):
        """Labels after playing an action with ``weights`` at depth d (the (d+1)-th action)."""
        lab, frz = [], []
        for i, c in enumerate(self.constraints):
            if frozen[i]:
                x, f = labels[i], True
            else:
                x, f = round_to_grid(labels[i] + c.discount ** (d + 1) * weights[c.dim], self.gamma), False
                if self.settle:
                    x, f = self._settle(i, d + 1, x)
            lab.append(x)
            frz.append(f)
        return tuple(lab), tuple(frz)


def ds_build_rounded_unfolding(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint],
                               eps, max_nodes: int = 500_000, settle: bool = True) -> RoundedUnfolding:
    """Layered unfolding of depth h with labels rounded to multiples of gamma (see LabelRule)."""
    rule = LabelRule(mdp, constraints, eps, settle)
    h, q = rule.horizon, len(rule.constraints)
    index: Dict[tuple, int] = {}
    depth, origin, labels, rows = [], [], [], []
    succ_index = {}
    frozen: Dict[int, Tuple[bool, ...]] = {}

    def node(d, s, lab, frz):
        key = (d, s, lab, frz)
        n = index.get(key)
        if n is None:
            n = index[key] = len(depth)
            depth.append(d)
            origin.append(s)
            labels.append(lab)
            rows.append(None)
            frozen[n] = frz
            if len(depth) > max_nodes:
                raise MemoryError("rounded unfolding exceeds %d nodes" % max_nodes)
        return n

    root = node(0, init, (Fraction(0),) * q, (False,) * q)
    frontier = [root]
    for d in range(h - 1):
        nxt = []
        for n in frontier:
            s = origin[n]
            acts = []
            for k, act in enumerate(mdp.actions[s]):
                lab, frz = rule.step(labels[n], frozen[n], d, act.weights)
                succ = []
                for t, p in act.succ:
                    before = len(depth)
                    m = node(d + 1, t, lab, frz)
                    if len(depth) > before:
                        nxt.append(m)
                    succ_index[(n, k, t)] = m
                    succ.append((m, p))
                acts.append(Action(act.name, act.weights, tuple(succ)))
            rows[n] = acts
        frontier = nxt
    leaves = [n for n in range(len(depth)) if rows[n] is None]
    for n in leaves:
        rows[n] = [absorbing_action(n, mdp.dim)]
    names = tuple("%s@%d%s" % (mdp.states[origin[n]], depth[n], list(map(str, labels[n]))) for n in range(len(depth)))
    layered = WeightedMdp(names, tuple(tuple(r) for r in rows), mdp.dim, root)
    return RoundedUnfolding(layered, mdp, depth, origin, labels, leaves, h, rule.gamma, succ_index)


def rounded_branch(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint], eps,
                   path: Sequence[Tuple[int, int]], settle: bool = False) -> List[Tuple[Fraction, ...]]:
    """Labels along one branch of the unfolding without building the rest of it.

    ``path`` lists (action index, successor) pairs; the result has one label
    vector per depth, starting with the root's zeros.
    """
    rule = LabelRule(mdp, constraints, eps, settle)
    lab, frz = (Fraction(0),) * len(rule.constraints), (False,) * len(rule.constraints)
    out, s = [lab], init
    for d, (k, t) in enumerate(path):
        act = mdp.actions[s][k]
        if t not in act.support():
            raise ValueError("%s is not a successor of action %s" % (mdp.states[t], act.name))
        lab, frz = rule.step(lab, frz, d, act.weights)
        out.append(lab)
        s = t
    return out


def unfolding_strategy(unf: RoundedUnfolding, policy, init: int, tail_action=lambda s: 0) -> MooreStrategy:
    """Follow ``policy`` through the unfolding, then play ``tail_action`` forever.

    ``policy`` maps nodes to action distributions, or is a list of
    (weight, policy) pairs drawn from once at the start.
    """
    if isinstance(policy, dict):
        policy = [(Fraction(1), policy)]
    leaves = set(unf.leaves)
    root = unf.mdp.initial

    def choice(d):
        return {d: Fraction(1)} if isinstance(d, int) else d

    def act(s, m):
        i, node = m
        if node == "tail" or node in leaves:
            return {tail_action(s): Fraction(1)}
        return choice(policy[i][1].get(node, 0))

    def upd(s, m, a, t):
        i, node = m
        if node == "tail" or node in leaves:
            return {(i, "tail"): Fraction(1)}
        return {(i, unf.succ_index[(node, a, t)]): Fraction(1)}
    return tabulate(unf.base, init, {(i, root): w for i, (w, _) in enumerate(policy) if w}, act, upd)


def _multi_reach(unf: RoundedUnfolding, goals, alphas):
    """Mixture of unfolding policies meeting the goals, or None."""
    if len(goals) <= 2:
        sol = acyclic_multi_reach(unf.mdp, unf.mdp.initial, goals, alphas)
        return None if sol is None else list(zip(sol.weights, sol.policies))
    sol = absorbing_flow(unf.mdp, unf.mdp.initial, goals, alphas)
    return None if sol is None else [(Fraction(1), sol.policy)]


def _shift(constraints, delta):
    return tuple(c.replace(value=c.value + delta) for c in constraints)


def ds_eps_gap_solve(mdp: WeightedMdp, init: int, constraints: Sequence[PercentileConstraint], eps) -> Verdict:
    """epsilon-gap answer for discounted-sum constraints.

    Yes: the returned strategy meets the query.  No: no strategy meets it.
    Unknown: no strategy meets the query raised by 2 eps, and the attached
    relaxed strategy meets the query lowered by 2 eps.
    """
    constraints = tuple(constraints)
    for c in constraints:
        if c.kind != "discounted_sum":
            raise ValueError("not a discounted-sum constraint: %s" % c.kind)
    eps = as_fraction(eps) if eps is not None else Fraction(0)
    if eps <= 0:
        raise PreciseDiscountUnsupported("precise discounted sum is not supported")
    live = [c for c in constraints if c.prob > 0]
    if not live:
        return yes(constraints, trivial_strategy(mdp, init), epsilon=eps)
    unf = ds_build_rounded_unfolding(mdp, init, live, eps)
    alphas = [c.prob for c in live]
    cert = {"horizon": unf.horizon, "gamma": unf.gamma, "nodes": unf.mdp.n_states, "layers": unf.layers}
    sure = _multi_reach(unf, unf.leaf_set(live, eps), alphas)
    if sure is not None:
        return yes(constraints, unfolding_strategy(unf, sure, init), certificate=cert, epsilon=eps,
                   notes=["query with thresholds raised by 2 eps may or may not hold"])
    maybe = _multi_reach(unf, unf.leaf_set(live, -eps), alphas)
    if maybe is None:
        return no(constraints, certificate=cert, epsilon=eps)
    cert["unsatisfiable_shift"] = 2 * eps
    return Verdict(UNKNOWN, constraints, None, cert,
                   ["thresholds + 2 eps are unsatisfiable; thresholds - 2 eps are met by the relaxed strategy"],
                   epsilon=eps, suggested_epsilon=eps / 2,
                   relaxed_strategy=unfolding_strategy(unf, maybe, init),
                   relaxed_constraints=_shift(constraints, -2 * eps))
