"""Exact analysis of the Markov chain induced by a finite-memory strategy.

Probabilities of percentile constraints are computed with rational
linear systems: reachability for inf/sup/truncated sums (via small
deterministic monitors carried along the chain), bottom SCC analysis for
the limit payoffs, and certified lower/upper bounds for discounted sums.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from .graph import scc_decompose
from .model import (InducedChain, PercentileConstraint, WeightedMdp, induced_chain,
                    discounted_tail_bound)
from .ratlp import solve_linear_system


class Chain:
    """Plain finite Markov chain with action-labelled edges."""

    def __init__(self, initial: Dict[int, Fraction], edges: List[List[Tuple[int, int, Fraction]]],
                 labels: List[Hashable]):
        self.initial = initial
        self.edges = edges
        self.labels = labels  # per node: (mdp state, anything)

    @classmethod
    def from_induced(cls, ch: InducedChain) -> "Chain":
        return cls(dict(ch.initial), ch.edges, list(ch.nodes))

    def __len__(self):
        return len(self.edges)

    def succ(self, i):
        return [j for j, _, _ in self.edges[i]]


def monitor_product(mdp: WeightedMdp, chain: Chain, start: Callable, step: Callable) -> Chain:
    """Product of a chain with a deterministic monitor.

    ``start(state)`` gives the monitor value at the initial node and
    ``step(mon, s, a, t)`` its value after the transition s -a-> t.
    """
    index: Dict[Tuple[int, Hashable], int] = {}
    labels, edges = [], []

    def node(key):
        k = index.get(key)
        if k is None:
            k = index[key] = len(labels)
            labels.append(key)
            edges.append(None)
        return k

    initial = {}
    for i, p in chain.initial.items():
        k = node((i, start(chain.labels[i][0])))
        initial[k] = initial.get(k, Fraction(0)) + p
    k = 0
    while k < len(labels):
        i, mon = labels[k]
        s = chain.labels[i][0]
        out = []
        for j, a, p in chain.edges[i]:
            t = chain.labels[j][0]
            out.append((node((j, step(mon, s, a, t))), a, p))
        edges[k] = out
        k += 1
    # relabel with the mdp state first so nested products keep working
    return Chain(initial, edges, [(chain.labels[i][0], (chain.labels[i], mon)) for i, mon in labels])


def reach_probability(chain: Chain, targets: Iterable[int], start: Optional[Dict[int, Fraction]] = None) -> Fraction:
    """Exact probability of eventually visiting ``targets``."""
    targets = set(targets)
    start = chain.initial if start is None else start
    if not targets:
        return Fraction(0)
    n = len(chain)
    pred: Dict[int, Set[int]] = {}
    for i in range(n):
        for j, _, _ in chain.edges[i]:
            pred.setdefault(j, set()).add(i)
    can = set(targets)
    queue = deque(targets)
    while queue:
        j = queue.popleft()
        for i in pred.get(j, ()):
            if i not in can:
                can.add(i)
                queue.append(i)
    # restrict to nodes relevant from the start distribution
    live = set()
    queue = deque(i for i in start if i in can and i not in targets)
    live.update(queue)
    while queue:
        i = queue.popleft()
        for j, _, _ in chain.edges[i]:
            if j in can and j not in targets and j not in live:
                live.add(j)
                queue.append(j)
    order = sorted(live)
    pos = {i: k for k, i in enumerate(order)}
    rows, rhs = [], []
    for i in order:
        row = {pos[i]: Fraction(1)}
        b = Fraction(0)
        for j, _, p in chain.edges[i]:
            if j in targets:
                b += p
            elif j in pos:
                row[pos[j]] = row.get(pos[j], Fraction(0)) - p
        rows.append(row)
        rhs.append(b)
    x = solve_linear_system(rows, rhs) if order else []
    total = Fraction(0)
    for i, p in start.items():
        if i in targets:
            total += p
        elif i in pos:
            total += p * x[pos[i]]
    return total


def reachable_nodes(chain: Chain) -> Set[int]:
    seen = set(chain.initial)
    queue = deque(seen)
    while queue:
        i = queue.popleft()
        for j in chain.succ(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return seen


def bottom_sccs(chain: Chain) -> List[List[int]]:
    live = reachable_nodes(chain)
    succ = {i: chain.succ(i) for i in live}
    out = []
    for comp in scc_decompose(succ, sorted(live)):
        cs = set(comp)
        if all(j in cs for i in comp for j in succ[i]):
            out.append(comp)
    return out


def stationary(chain: Chain, comp: Sequence[int]) -> Dict[int, Fraction]:
    """Stationary distribution of an irreducible closed class."""
    comp = list(comp)
    pos = {i: k for k, i in enumerate(comp)}
    n = len(comp)
    # pi (P - I) = 0, with the last equation replaced by sum pi = 1
    cols = [dict() for _ in range(n)]
    for i in comp:
        r = pos[i]
        cols[r][r] = cols[r].get(r, Fraction(0)) - 1
        for j, _, p in chain.edges[i]:
            c = pos[j]
            cols[c][r] = cols[c].get(r, Fraction(0)) + p
    rows = cols[:-1] + [{k: Fraction(1) for k in range(n)}]
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    x = solve_linear_system(rows, rhs)
    return {i: x[pos[i]] for i in comp}


def class_mean_payoff(mdp: WeightedMdp, chain: Chain, comp, dim: int) -> Fraction:
    pi = stationary(chain, comp)
    total = Fraction(0)
    for i, pr in pi.items():
        s = chain.labels[i][0]
        for j, a, p in chain.edges[i]:
            total += pr * p * mdp.actions[s][a].weights[dim]
    return total


def class_weights(mdp: WeightedMdp, chain: Chain, comp, dim: int) -> List[int]:
    return [mdp.actions[chain.labels[i][0]][a].weights[dim] for i in comp for _, a, _ in chain.edges[i]]


def _limit_probability(mdp, chain: Chain, good: Callable[[List[int]], bool]) -> Fraction:
    targets = set()
    for comp in bottom_sccs(chain):
        if good(comp):
            targets.update(comp)
    return reach_probability(chain, targets)


def constraint_probability(mdp: WeightedMdp, chain: Chain, c: PercentileConstraint,
                           ds_depth: Optional[int] = None):
    """Exact probability that the run satisfies ``c``.

    For discounted sums an interval ``(lower, upper)`` is returned instead,
    computed from an exact unfolding of ``ds_depth`` steps.
    """
    k, l, v = c.kind, c.dim, c.value
    if k == "inf":
        prod = monitor_product(mdp, chain, lambda s: False,
                               lambda bad, s, a, t: bad or mdp.actions[s][a].weights[l] < v)
        return 1 - reach_probability(prod, [i for i, lab in enumerate(prod.labels) if lab[1][1]])
    if k == "sup":
        prod = monitor_product(mdp, chain, lambda s: False,
                               lambda ok, s, a, t: ok or mdp.actions[s][a].weights[l] >= v)
        return reach_probability(prod, [i for i, lab in enumerate(prod.labels) if lab[1][1]])
    if k == "liminf":
        return _limit_probability(mdp, chain, lambda comp: min(class_weights(mdp, chain, comp, l)) >= v)
    if k == "limsup":
        return _limit_probability(mdp, chain, lambda comp: max(class_weights(mdp, chain, comp, l)) >= v)
    if k in ("mp_inf", "mp_sup"):
        # inside a bottom class the running average converges almost surely
        return _limit_probability(mdp, chain, lambda comp: class_mean_payoff(mdp, chain, comp, l) >= v)
    if k == "truncated_sum":
        cap = int(v) + 1 if v >= 0 else 0
        T = c.target

        def start(s):
            return ("hit", 0) if s in T else ("run", 0)

        def step(mon, s, a, t):
            if mon[0] == "hit":
                return mon
            acc = min(mon[1] + mdp.actions[s][a].weights[l], cap)
            return ("hit", acc) if t in T else ("run", acc)
        if any(a.weights[l] < 0 for row in mdp.actions for a in row):
            raise ValueError("truncated sums need non-negative weights")
        prod = monitor_product(mdp, chain, start, step)
        good = [i for i, lab in enumerate(prod.labels) if lab[1][1][0] == "hit" and lab[1][1][1] <= v]
        return reach_probability(prod, good)
    if k == "discounted_sum":
        return discounted_bounds(mdp, chain, c, ds_depth or 12)
    raise ValueError(k)


def discounted_bounds(mdp: WeightedMdp, chain: Chain, c: PercentileConstraint, depth: int,
                      max_nodes: int = 200_000) -> Tuple[Fraction, Fraction]:
    """Certified interval for P[DS >= v] from an exact ``depth``-step unfolding."""
    lam, l, v = c.discount, c.dim, c.value
    tail = discounted_tail_bound(mdp, lam, depth)
    layer: Dict[Tuple[int, Fraction], Fraction] = {}
    for i, p in chain.initial.items():
        layer[(i, Fraction(0))] = layer.get((i, Fraction(0)), Fraction(0)) + p
    lower = upper = Fraction(0)
    coeff = Fraction(1)
    for n in range(depth + 1):
        rest_tail = discounted_tail_bound(mdp, lam, n)
        nxt: Dict[Tuple[int, Fraction], Fraction] = {}
        undecided = False
        for (i, acc), p in layer.items():
            if acc - rest_tail >= v:
                lower += p
                upper += p
                continue
            if acc + rest_tail < v:
                continue
            if n == depth:
                if acc - tail >= v:
                    lower += p
                if acc + tail >= v:
                    upper += p
                continue
            undecided = True
            s = chain.labels[i][0]
            for j, a, q in chain.edges[i]:
                key = (j, acc + coeff * lam * mdp.actions[s][a].weights[l])
                nxt[key] = nxt.get(key, Fraction(0)) + p * q
        if not undecided:
            break
        if len(nxt) > max_nodes:
            raise MemoryError("discounted unfolding too large")
        layer = nxt
        coeff *= lam
    return lower, upper


def strategy_chain(mdp: WeightedMdp, strategy, init=None) -> Chain:
    return Chain.from_induced(induced_chain(mdp, strategy, init))


def constraint_probabilities(mdp: WeightedMdp, strategy, constraints, init=None, ds_depth=None):
    ch = strategy_chain(mdp, strategy, init)
    return [constraint_probability(mdp, ch, c, ds_depth) for c in constraints]
