"""Weighted MDPs, percentile constraints, finite-memory strategies and induced chains."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

INF_KINDS = ("inf", "sup", "liminf", "limsup")
MP_KINDS = ("mp_sup", "mp_inf")
KINDS = INF_KINDS + MP_KINDS + ("truncated_sum", "discounted_sum")

Dist = Dict[Hashable, Fraction]


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted; use Fraction or 'p/q' strings")
    return Fraction(x)


@dataclass(frozen=True)
class Action:
    name: str
    weights: Tuple[int, ...]
    succ: Tuple[Tuple[int, Fraction], ...]  # (successor index, probability)

    def support(self):
        return [t for t, _ in self.succ]


@dataclass(frozen=True)
class WeightedMdp:
    """Finite MDP with integer weight vectors on actions.

    ``actions[s]`` lists the actions enabled in state ``s``; actions are
    addressed by their position in that list.
    """

    states: Tuple[str, ...]
    actions: Tuple[Tuple[Action, ...], ...]
    dim: int
    initial: int = 0

    @classmethod
    def build(cls, states, transitions, dim=None, initial=None):
        """Build from ``{state: [(action, weights, {succ: prob}), ...]}`` using names."""
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        acts = []
        for s in states:
            row = []
            for name, weights, dist in transitions.get(s, ()):
                if isinstance(weights, int):
                    weights = (weights,)
                succ = tuple(sorted((index[t], as_fraction(p)) for t, p in dist.items()))
                row.append(Action(str(name), tuple(int(w) for w in weights), succ))
            acts.append(tuple(row))
        if dim is None:
            dim = next((len(a.weights) for row in acts for a in row), 1)
        init = 0 if initial is None else index[initial]
        return cls(states, tuple(acts), dim, init)

    @property
    def n_states(self):
        return len(self.states)

    def index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError("unknown state %r" % (name,)) from None

    def action_index(self, s: int, name: str) -> int:
        for k, a in enumerate(self.actions[s]):
            if a.name == name:
                return k
        raise KeyError("state %r has no action %r" % (self.states[s], name))

    def max_abs_weight(self) -> int:
        return max((abs(w) for row in self.actions for a in row for w in a.weights), default=0)

    def successors(self, s: int):
        out = set()
        for a in self.actions[s]:
            out.update(a.support())
        return out

    def is_absorbing(self, s: int) -> bool:
        return all(a.succ == ((s, Fraction(1)),) for a in self.actions[s])

    def with_initial(self, init: int) -> "WeightedMdp":
        return WeightedMdp(self.states, self.actions, self.dim, init)


def validate_mdp(mdp: WeightedMdp) -> List[str]:
    """Return the list of broken model invariants; empty means the model is valid."""
    problems = []
    n = mdp.n_states
    if len(set(mdp.states)) != n:
        problems.append("duplicate state names")
    if not 0 <= mdp.initial < n:
        problems.append("initial state out of range")
    for s, row in enumerate(mdp.actions):
        name = mdp.states[s]
        if not row:
            problems.append("deadlock state %s" % name)
        seen = set()
        for a in row:
            where = "(%s,%s)" % (name, a.name)
            if a.name in seen:
                problems.append("duplicate action name at %s" % where)
            seen.add(a.name)
            if len(a.weights) != mdp.dim:
                problems.append("weight vector of length %d at %s, expected %d"
                                % (len(a.weights), where, mdp.dim))
            total = Fraction(0)
            for t, p in a.succ:
                if not 0 <= t < n:
                    problems.append("successor outside state set at %s" % where)
                if not 0 < p <= 1:
                    problems.append("probability %s outside (0,1] at %s" % (p, where))
                total += p
            if total != 1:
                problems.append("distribution sum %s ≠ 1 at %s" % (total, where))
    return problems


def repair_deadlocks(mdp: WeightedMdp) -> WeightedMdp:
    """Give every deadlock state a zero-weight self-loop, making it absorbing."""
    acts = []
    for s, row in enumerate(mdp.actions):
        if not row:
            row = (Action("idle", (0,) * mdp.dim, ((s, Fraction(1)),)),)
        acts.append(row)
    return WeightedMdp(mdp.states, tuple(acts), mdp.dim, mdp.initial)


@dataclass(frozen=True)
class PercentileConstraint:
    """P[f_dim >= value] >= prob (for truncated sums: P[TS_dim <= value] >= prob).

    ``dim`` is zero-based.
    """

    kind: str
    dim: int
    value: Fraction
    prob: Fraction
    target: Optional[frozenset] = None
    discount: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "value", as_fraction(self.value))
        object.__setattr__(self, "prob", as_fraction(self.prob))
        if self.kind not in KINDS:
            raise ValueError("unknown payoff kind %r" % (self.kind,))
        if not 0 <= self.prob <= 1:
            raise ValueError("probability threshold %s outside [0,1]" % self.prob)
        if self.kind == "truncated_sum":
            if not self.target:
                raise ValueError("truncated sum needs a nonempty target set")
            object.__setattr__(self, "target", frozenset(self.target))
        elif self.target is not None:
            raise ValueError("target set only applies to truncated sums")
        if self.kind == "discounted_sum":
            if self.discount is None:
                raise ValueError("discounted sum needs a discount factor")
            lam = as_fraction(self.discount)
            if not 0 < lam < 1:
                raise ValueError("discount %s must lie strictly between 0 and 1" % lam)
            object.__setattr__(self, "discount", lam)
        elif self.discount is not None:
            raise ValueError("discount only applies to discounted sums")

    def replace(self, **kw) -> "PercentileConstraint":
        d = dict(kind=self.kind, dim=self.dim, value=self.value, prob=self.prob,
                 target=self.target, discount=self.discount)
        d.update(kw)
        return PercentileConstraint(**d)


@dataclass(frozen=True)
class PercentileQuery:
    """Disjunction of conjunctions of constraints, from a single initial state."""

    disjuncts: Tuple[Tuple[PercentileConstraint, ...], ...]
    initial: Optional[int] = None
    epsilon: Optional[Fraction] = None

    @classmethod
    def conj(cls, constraints, initial=None, epsilon=None):
        return cls((tuple(constraints),), initial, epsilon)


# ----------------------------------------------------------------------------
# strategies


class MooreStrategy:
    """Finite-memory randomized strategy, tabulated on the pairs it can reach.

    Memory elements are arbitrary hashable values.  ``act[(s, m)]`` is the
    action distribution and ``upd[(s, m, a, t)]`` the distribution of the
    next memory element after playing ``a`` in ``s`` and moving to ``t``.
    Deterministic updates are the special case of one-point distributions.
    """

    finite = True

    def __init__(self, init: int, initial: Dist, act, upd):
        self.init = init
        self.initial = dict(initial)
        self.act = act
        self.upd = upd

    @property
    def memory(self):
        mem = set(self.initial)
        for (_, m) in self.act:
            mem.add(m)
        for d in self.upd.values():
            mem.update(d)
        return mem

    @property
    def memory_size(self) -> int:
        return len(self.memory)

    def initial_dist(self) -> Dist:
        return self.initial

    def next_action(self, s, m) -> Dist:
        try:
            return self.act[(s, m)]
        except KeyError:
            raise KeyError("strategy undefined at state %r memory %r" % (s, m)) from None

    def next_memory(self, s, m, a, t) -> Dist:
        try:
            return self.upd[(s, m, a, t)]
        except KeyError:
            raise KeyError("memory update undefined at %r" % ((s, m, a, t),)) from None

    def is_pure(self) -> bool:
        return (len(self.initial) == 1 and all(len(d) == 1 for d in self.act.values())
                and all(len(d) == 1 for d in self.upd.values()))

    @classmethod
    def memoryless(cls, mdp: WeightedMdp, init: int, policy) -> "MooreStrategy":
        """``policy(s)`` or ``policy[s]`` gives an action distribution (or a single action)."""
        get = policy if callable(policy) else policy.__getitem__

        def act(s, m):
            d = get(s)
            return {d: Fraction(1)} if isinstance(d, int) else d
        return tabulate(mdp, init, {0: Fraction(1)}, act, lambda s, m, a, t: {0: Fraction(1)})


def _check_dist(d, what):
    if not d:
        raise ValueError("empty distribution for %s" % what)
    total = sum(d.values(), Fraction(0))
    if total != 1 or any(p <= 0 for p in d.values()):
        raise ValueError("invalid distribution %r for %s" % (d, what))


def tabulate(mdp: WeightedMdp, init: int, initial: Dist, act_fn, upd_fn,
             limit: int = 2_000_000) -> MooreStrategy:
    """Explore (state, memory) pairs reachable from ``init`` and freeze the tables."""
    initial = {m: as_fraction(p) for m, p in initial.items() if p}
    _check_dist(initial, "initial memory")
    act, upd = {}, {}
    queue = deque((init, m) for m in initial)
    seen = set(queue)
    while queue:
        s, m = queue.popleft()
        d = {a: as_fraction(p) for a, p in act_fn(s, m).items() if p}
        _check_dist(d, "state %s memory %r" % (mdp.states[s], m))
        if any(not 0 <= a < len(mdp.actions[s]) for a in d):
            raise ValueError("action outside A(%s)" % mdp.states[s])
        act[(s, m)] = d
        for a in d:
            for t, _ in mdp.actions[s][a].succ:
                key = (s, m, a, t)
                nd = {n: as_fraction(p) for n, p in upd_fn(s, m, a, t).items() if p}
                _check_dist(nd, "update %r" % (key,))
                upd[key] = nd
                for n in nd:
                    if (t, n) not in seen:
                        seen.add((t, n))
                        queue.append((t, n))
                        if len(seen) > limit:
                            raise MemoryError("strategy tabulation exceeded %d pairs" % limit)
    return MooreStrategy(init, initial, act, upd)


class SymbolicStrategy:
    """Strategy given by callables, possibly with infinite memory.

    Used for the switching schedules of mean-payoff objectives.  It cannot
    be turned into a finite chain; ``instantiate(mdp, horizon)`` returns a
    finite Moore strategy that agrees with it for ``horizon`` steps.
    """

    finite = False

    def __init__(self, init, initial, act_fn, upd_fn, description=""):
        self.init = init
        self.initial = dict(initial)
        self.act_fn = act_fn
        self.upd_fn = upd_fn
        self.description = description

    def initial_dist(self):
        return self.initial

    def next_action(self, s, m):
        return self.act_fn(s, m)

    def next_memory(self, s, m, a, t):
        return self.upd_fn(s, m, a, t)

    def instantiate(self, mdp: WeightedMdp, horizon: int) -> MooreStrategy:
        """Finite strategy with memory (step, m): identical for the first ``horizon`` steps,
        afterwards frozen at the last reached memory element."""

        def act(s, mm):
            return self.act_fn(s, mm[1])

        def upd(s, mm, a, t):
            step, m = mm
            if step >= horizon:
                return {mm: Fraction(1)}
            return {(step + 1, n): p for n, p in self.upd_fn(s, m, a, t).items()}
        return tabulate(mdp, self.init, {(0, m): p for m, p in self.initial.items()}, act, upd)


# ----------------------------------------------------------------------------
# induced chains


@dataclass
class InducedChain:
    """Markov chain on reachable (state, memory) pairs.

    ``edges[i]`` lists ``(j, action, prob)`` with the action taken in the
    MDP state of node ``i``; parallel edges with different actions are kept
    apart so action weights stay visible.
    """

    nodes: List[Tuple[int, Hashable]]
    index: Dict[Tuple[int, Hashable], int]
    initial: Dict[int, Fraction]
    edges: List[List[Tuple[int, int, Fraction]]] = field(default_factory=list)

    def state_of(self, i) -> int:
        return self.nodes[i][0]

    def successors(self, i):
        return {j for j, _, _ in self.edges[i]}

    def __len__(self):
        return len(self.nodes)


class NotChainRepresentable(TypeError):
    pass


def induced_chain(mdp: WeightedMdp, strategy, init: Optional[int] = None) -> InducedChain:
    if not getattr(strategy, "finite", False):
        raise NotChainRepresentable("not chain-representable: strategy has infinite memory")
    if init is None:
        init = strategy.init
    nodes, index, edges = [], {}, []

    def node(key):
        i = index.get(key)
        if i is None:
            i = index[key] = len(nodes)
            nodes.append(key)
            edges.append(None)
        return i

    initial = {}
    for m, p in strategy.initial_dist().items():
        i = node((init, m))
        initial[i] = initial.get(i, Fraction(0)) + p
    k = 0
    while k < len(nodes):
        s, m = nodes[k]
        out = {}
        for a, pa in strategy.next_action(s, m).items():
            for t, pt in mdp.actions[s][a].succ:
                for n, pn in strategy.next_memory(s, m, a, t).items():
                    j = node((t, n))
                    out[(j, a)] = out.get((j, a), Fraction(0)) + pa * pt * pn
        edges[k] = [(j, a, p) for (j, a), p in out.items()]
        k += 1
    return InducedChain(nodes, index, initial, edges)


# ----------------------------------------------------------------------------
# prefixes


@dataclass(frozen=True)
class RunPrefix:
    """States s_0..s_n and actions a_1..a_n (``actions[j]`` is played in ``states[j]``)."""

    states: Tuple[int, ...]
    actions: Tuple[int, ...]

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("a prefix has one more state than actions")

    def weights(self, mdp: WeightedMdp, dim: int) -> List[int]:
        return [mdp.actions[s][a].weights[dim] for s, a in zip(self.states, self.actions)]


def check_prefix(mdp: WeightedMdp, prefix: RunPrefix) -> None:
    for j, a in enumerate(prefix.actions):
        s, t = prefix.states[j], prefix.states[j + 1]
        if not 0 <= a < len(mdp.actions[s]) or t not in mdp.actions[s][a].support():
            raise ValueError("prefix step %d is not a transition of the model" % j)


def prefix_payoff(mdp: WeightedMdp, prefix: RunPrefix, c: PercentileConstraint):
    """Payoff of a finite prefix; ``math.inf`` when a truncated-sum target was not visited."""
    check_prefix(mdp, prefix)
    ws = prefix.weights(mdp, c.dim)
    if c.kind in ("inf", "sup"):
        if not ws:
            raise ValueError("empty prefix has no %s" % c.kind)
        return Fraction(min(ws) if c.kind == "inf" else max(ws))
    if c.kind in MP_KINDS:
        if not ws:
            raise ValueError("undefined average on an empty prefix")
        return Fraction(sum(ws), len(ws))
    if c.kind == "truncated_sum":
        for j, s in enumerate(prefix.states):
            if s in c.target:
                return Fraction(sum(ws[:j]))
        return math.inf
    if c.kind == "discounted_sum":
        total, coeff = Fraction(0), Fraction(1)
        for w in ws:
            coeff *= c.discount
            total += coeff * w
        return total
    raise ValueError("limit payoff %s is not determined by a finite prefix" % c.kind)


def discounted_tail_bound(mdp: WeightedMdp, discount: Fraction, n: int) -> Fraction:
    """Largest possible contribution of actions after the first ``n``."""
    return mdp.max_abs_weight() * discount ** (n + 1) / (1 - discount)
