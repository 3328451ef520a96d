"""Brute-force oracle for small instances, independent of the solvers.

Candidates are memoryless strategies on a history-summary product that
tracks, per constraint, only what the payoff needs (violation/seen bits,
saturating counters, target-visited bits).  Achievement vectors of all
pure candidates are computed exactly on the induced chains.

Yes comes with a witness: a candidate, or a mixture of candidates chosen
by an initial coin.  No needs an argument that covers every strategy:

* for payoffs where weighted sums of the objectives are optimized by pure
  memoryless strategies on the summary product (inf, sup, liminf,
  truncated sums, reachability), the achievable set is the downward
  closure of the hull of the pure vectors, so a threshold vector outside
  it is unachievable;
* otherwise a single constraint whose optimum (over pure memoryless
  strategies, which are optimal for one constraint) is below its
  threshold;
* for limsup and mean-payoff constraints, runs settle in end components
  and each constraint can hold only if the component allows it (some
  good action; best pure expected mean payoff at least the threshold).
  Memoryless strategies that either commit to one action or spread
  uniformly over a subset of actions reach every settling distribution
  over maximal components, so the hull of their optimistic vectors
  bounds every strategy;
* for discounted sums, an optimistic backward induction over an exact
  unfolding bounds weighted sums over all strategies from above.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .chain import Chain, bottom_sccs, class_mean_payoff, constraint_probability, reach_probability
from .model import MooreStrategy, PercentileConstraint, WeightedMdp, as_fraction, tabulate
from .ratlp import LinearProgram, solve_lp

HULL_COMPLETE = {"inf", "sup", "liminf", "truncated_sum", "reach"}
SETTLING = {"limsup", "mp_inf", "mp_sup"}


@dataclass(frozen=True)
class Reach:
    """Objective 'visit target' with threshold prob, used for multi-reachability cross-checks."""

    target: frozenset
    prob: Fraction
    kind: str = "reach"


@dataclass
class OracleResult:
    verdict: str  # yes / no / inconclusive
    reason: str
    witness: Optional[List[Tuple[Fraction, object]]] = None  # mixture of base strategies
    candidates: int = 0
    vectors: List[Tuple[Fraction, ...]] = field(default_factory=list, repr=False)


class InstanceTooLarge(ValueError):
    pass


class _Summary:
    """Product of the MDP with per-objective history summaries, explored from init."""

    def __init__(self, mdp: WeightedMdp, init: int, objs):
        self.mdp, self.objs = mdp, objs
        self.keys, self.index, self.rows = [], {}, []
        start = self._node((init, tuple(self._start(o, init) for o in objs)))
        self.init = start
        k = 0
        while k < len(self.keys):
            s, summ = self.keys[k]
            row = []
            for a, act in enumerate(mdp.actions[s]):
                succ = []
                for t, p in act.succ:
                    nxt = tuple(self._step(o, x, s, act.weights, t) for o, x in zip(objs, summ))
                    succ.append((self._node((t, nxt)), p))
                row.append(succ)
            self.rows[k] = row
            k += 1

    def _node(self, key):
        i = self.index.get(key)
        if i is None:
            i = self.index[key] = len(self.keys)
            self.keys.append(key)
            self.rows.append(None)
        return i

    @staticmethod
    def _start(o, s):
        if o.kind in ("inf", "sup"):
            return False
        if o.kind == "truncated_sum":
            return (s in o.target, 0)
        if o.kind == "reach":
            return s in o.target
        return None

    @staticmethod
    def _step(o, x, s, weights, t):
        k = o.kind
        if k == "inf":
            return x or weights[o.dim] < o.value
        if k == "sup":
            return x or weights[o.dim] >= o.value
        if k == "truncated_sum":
            hit, acc = x
            if hit:
                return x
            cap = max(math.floor(o.value) + 1, 0)
            return (t in o.target, min(acc + weights[o.dim], cap))
        if k == "reach":
            return x or t in o.target
        return None

    def decision_nodes(self):
        return [i for i, row in enumerate(self.rows) if len(row) > 1]

    def chain(self, choice: Dict[int, Dict[int, Fraction]]) -> Chain:
        """Induced chain of a memoryless product strategy; labels are (base state, product node)."""
        order, pos = [self.init], {self.init: 0}
        edges = []
        k = 0
        while k < len(order):
            i = order[k]
            out = []
            for a, pa in choice.get(i, {0: Fraction(1)}).items():
                for j, p in self.rows[i][a]:
                    if j not in pos:
                        pos[j] = len(order)
                        order.append(j)
                    out.append((pos[j], a, pa * p))
            edges.append(out)
            k += 1
        return Chain({0: Fraction(1)}, edges, [(self.keys[i][0], i) for i in order])

    def value(self, ch: Chain, o) -> Fraction:
        """Exact probability (lower bound for discounted sums) of objective ``o``."""
        if o.kind == "reach":
            return reach_probability(ch, [i for i, lab in enumerate(ch.labels) if lab[0] in o.target])
        v = constraint_probability(self.mdp, ch, o, ds_depth=14)
        return v[0] if isinstance(v, tuple) else v

    def base_strategy(self, choice) -> MooreStrategy:
        """The product strategy as a Moore strategy on the base MDP (memory = summary)."""

        def act(s, summ):
            return choice.get(self.index[(s, summ)], {0: Fraction(1)})

        def upd(s, summ, a, t):
            i = self.index[(s, summ)]
            for j, _ in self.rows[i][a]:
                if self.keys[j][0] == t:
                    return {self.keys[j][1]: Fraction(1)}
            raise KeyError((s, a, t))
        s0, summ0 = self.keys[self.init]
        return tabulate(self.mdp, s0, {summ0: Fraction(1)}, act, upd)


def _grid_dists(n_actions: int, res: int):
    for parts in itertools.product(range(res + 1), repeat=n_actions):
        if sum(parts) == res:
            yield {a: Fraction(k, res) for a, k in enumerate(parts) if k}


def _in_hull(vectors, alphas) -> Optional[List[Fraction]]:
    """Convex weights putting the mixture above ``alphas`` componentwise, or None."""
    lp = LinearProgram()
    lam = [lp.add_var() for _ in vectors]
    lp.add_constraint({j: 1 for j in lam}, "==", 1)
    for i, a in enumerate(alphas):
        lp.add_constraint({lam[k]: vec[i] for k, vec in enumerate(vectors) if vec[i]}, ">=", a)
    res = solve_lp(lp)
    if not res.ok:
        return None
    return [res.point[j] for j in lam]


def _spread_options(n_actions: int):
    """Pure choices and uniform spreads over every subset of at least two actions."""
    out = [{a: Fraction(1)} for a in range(n_actions)]
    for size in range(2, n_actions + 1):
        for sub in itertools.combinations(range(n_actions), size):
            out.append({a: Fraction(1, size) for a in sub})
    return out


def _memoryless_chain(mdp: WeightedMdp, init: int, policy) -> Chain:
    order, pos, edges = [init], {init: 0}, []
    k = 0
    while k < len(order):
        s = order[k]
        out = []
        for a, pa in policy[s].items():
            for t, p in mdp.actions[s][a].succ:
                if t not in pos:
                    pos[t] = len(order)
                    order.append(t)
                out.append((pos[t], a, pa * p))
        edges.append(out)
        k += 1
    return Chain({0: Fraction(1)}, edges, [(s, None) for s in order])


def _best_pure_mean(mdp: WeightedMdp, pairs, dim: int) -> Fraction:
    """Largest mean payoff of a bottom class under pure memoryless strategies using only ``pairs``."""
    acts: Dict[int, List[int]] = {}
    for s, a in pairs:
        acts.setdefault(s, []).append(a)
    states = sorted(acts)
    best = None
    for picks in itertools.product(*[acts[s] for s in states]):
        pol = {s: {a: Fraction(1)} for s, a in zip(states, picks)}
        for s0 in states:
            ch = _memoryless_chain(mdp, s0, pol)
            for comp in bottom_sccs(ch):
                v = class_mean_payoff(mdp, ch, comp, dim)
                best = v if best is None or v > best else best
    return best


def _optimistic_vectors(mdp: WeightedMdp, init: int, cons, limit: int):
    opts = [_spread_options(len(mdp.actions[s])) for s in range(mdp.n_states)]
    if math.prod(len(o) for o in opts) > limit:
        return None
    cache: Dict[Tuple[frozenset, int], Fraction] = {}
    vectors = []
    for combo in itertools.product(*opts):
        ch = _memoryless_chain(mdp, init, combo)
        vec = [Fraction(0)] * len(cons)
        for comp in bottom_sccs(ch):
            pairs = frozenset((ch.labels[i][0], a) for i in comp for _, a, _ in ch.edges[i])
            good = []
            for c in cons:
                if c.kind == "limsup":
                    good.append(max(mdp.actions[s][a].weights[c.dim] for s, a in pairs) >= c.value)
                else:
                    key = (pairs, c.dim)
                    if key not in cache:
                        cache[key] = _best_pure_mean(mdp, pairs, c.dim)
                    good.append(cache[key] >= c.value)
            if any(good):
                p = reach_probability(ch, comp)
                for i, g in enumerate(good):
                    if g:
                        vec[i] += p
        vectors.append(tuple(vec))
    return vectors


def _ds_upper(mdp: WeightedMdp, init: int, cons: Sequence[PercentileConstraint], weights, depth: int,
              cap: int = 60_000) -> Optional[Fraction]:
    """Upper bound on max over all strategies of sum_i weights[i] * P[DS_i >= v_i]."""
    W = mdp.max_abs_weight()
    tails = [W * c.discount ** (depth + 1) / (1 - c.discount) for c in cons]
    layers = [{(init, (Fraction(0),) * len(cons))}]
    for n in range(depth):
        nxt = set()
        for s, acc in layers[-1]:
            for act in mdp.actions[s]:
                lab = tuple(acc[i] + c.discount ** (n + 1) * act.weights[c.dim] for i, c in enumerate(cons))
                for t, _ in act.succ:
                    nxt.add((t, lab))
        if len(nxt) > cap:
            return None
        layers.append(nxt)
    value = {node: sum((w for w, c, a, tl in zip(weights, cons, node[1], tails) if a + tl >= c.value), Fraction(0))
             for node in layers[-1]}
    for n in range(depth - 1, -1, -1):
        cur = {}
        for s, acc in layers[n]:
            best = None
            for act in mdp.actions[s]:
                lab = tuple(acc[i] + c.discount ** (n + 1) * act.weights[c.dim] for i, c in enumerate(cons))
                val = sum((p * value[(t, lab)] for t, p in act.succ), Fraction(0))
                best = val if best is None or val > best else best
            cur[(s, acc)] = best
        value = cur
    return value[(init, (Fraction(0),) * len(cons))]


def brute_force_oracle(mdp: WeightedMdp, init: int, objectives: Sequence, grid: int = 4,
                       max_pure: int = 4096, max_grid: int = 4096, pure_only: bool = False) -> OracleResult:
    """Yes / No / inconclusive for a conjunction of constraints (or Reach objectives)."""
    objs = list(objectives)
    if mdp.n_states > 6 or len(objs) > 3:
        raise InstanceTooLarge("brute force needs at most 6 states and 3 constraints")
    live = [o for o in objs if o.prob > 0]
    if not live:
        return OracleResult("yes", "all thresholds are zero", [(Fraction(1), None)])
    alphas = [as_fraction(o.prob) for o in live]
    prod = _Summary(mdp, init, live)
    dec = prod.decision_nodes()
    total = math.prod(len(prod.rows[i]) for i in dec)
    kinds = {o.kind for o in live}
    vectors, choices = [], []
    exhaustive = total <= max_pure
    if exhaustive:
        for picks in itertools.product(*[range(len(prod.rows[i])) for i in dec]):
            choice = {i: {a: Fraction(1)} for i, a in zip(dec, picks)}
            ch = prod.chain(choice)
            vec = tuple(prod.value(ch, o) for o in live)
            vectors.append(vec)
            choices.append(choice)
            if all(x >= a for x, a in zip(vec, alphas)):
                return OracleResult("yes", "pure product strategy", [(Fraction(1), prod.base_strategy(choice))],
                                    len(vectors), vectors)
    if pure_only:
        if exhaustive:
            return OracleResult("no", "no pure memoryless product strategy meets the query", None,
                                len(vectors), vectors)
        return OracleResult("inconclusive", "too many pure product strategies (%d)" % total)
    pure_count = len(vectors)
    if not kinds <= HULL_COMPLETE:
        # randomized memoryless strategies on the base MDP, on a grid
        base_dec = [s for s in range(mdp.n_states) if len(mdp.actions[s]) > 1]
        per = [list(_grid_dists(len(mdp.actions[s]), grid)) for s in base_dec]
        if math.prod(len(p) for p in per) <= max_grid:
            for combo in itertools.product(*per):
                pol = dict(zip(base_dec, combo))
                choice = {i: pol[prod.keys[i][0]] for i in range(len(prod.keys)) if prod.keys[i][0] in pol}
                ch = prod.chain(choice)
                vec = tuple(prod.value(ch, o) for o in live)
                vectors.append(vec)
                choices.append(choice)
                if all(x >= a for x, a in zip(vec, alphas)):
                    return OracleResult("yes", "randomized memoryless strategy on the grid",
                                        [(Fraction(1), prod.base_strategy(choice))], len(vectors), vectors)
    if vectors:
        mix = _in_hull(vectors, alphas)
        if mix is not None:
            witness = [(w, prod.base_strategy(choices[k])) for k, w in enumerate(mix) if w > 0]
            return OracleResult("yes", "mixture of %d candidates" % len(witness), witness, len(vectors), vectors)
    if exhaustive and kinds <= HULL_COMPLETE:
        return OracleResult("no", "outside the hull of all pure product strategies", None, len(vectors), vectors)
    if kinds <= SETTLING:
        outer = _optimistic_vectors(mdp, init, live, max_grid)
        if outer is not None and _in_hull(outer, alphas) is None:
            return OracleResult("no", "outside the optimistic hull of settling strategies", None,
                                len(vectors), vectors)
    if exhaustive and "discounted_sum" not in kinds:
        for i, a in enumerate(alphas):
            best = max(v[i] for v in vectors[:pure_count])
            if best < a:
                return OracleResult("no", "constraint %d alone is at most %s" % (i, best), None,
                                    len(vectors), vectors)
    if kinds == {"discounted_sum"} and len(live) <= 2:
        dirs = [(Fraction(1),)] if len(live) == 1 else [(Fraction(k, 8), 1 - Fraction(k, 8)) for k in range(9)]
        for depth in (6, 9, 12):
            for w in dirs:
                ub = _ds_upper(mdp, init, live, w, depth)
                if ub is None:
                    break
                if sum((x * a for x, a in zip(w, alphas)), Fraction(0)) > ub:
                    return OracleResult("no", "weighted sum %s bounded by %s at depth %d" % (list(w), ub, depth),
                                        None, len(vectors), vectors)
    return OracleResult("inconclusive", "no witness and no covering argument", None, len(vectors), vectors)
