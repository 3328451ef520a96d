"""Product constructions over a base MDP and lifting of strategies back to it.

A product is an MDP whose decision states remember a base state (their
``origin``) together with a finite label (``aux``).  Every product action
either copies a base action (``action_origin``) or is fresh and has no
counterpart.  Products may contain internal states (origin ``None``) that
the base MDP does not see, such as the split states used to move weights
from actions onto states; runs pass through them with a forced action.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Hashable, List, Optional, Tuple

from .model import Action, MooreStrategy, SymbolicStrategy, WeightedMdp, tabulate


@dataclass
class Product:
    mdp: WeightedMdp
    base: WeightedMdp
    origin: List[Optional[int]]
    aux: List[Hashable]
    action_origin: List[List[Optional[int]]]
    init: int
    tags: Dict[Tuple[int, int], Hashable] = field(default_factory=dict)  # fresh action -> tag

    def is_fresh(self, p, k):
        return self.action_origin[p][k] is None


class ProductBuilder:
    """Incremental construction of a product by exploring from its initial state."""

    def __init__(self, base: WeightedMdp, dim: Optional[int] = None):
        self.base = base
        self.dim = base.dim if dim is None else dim
        self.keys: List[Hashable] = []
        self.index: Dict[Hashable, int] = {}
        self.origin: List[Optional[int]] = []
        self.aux: List[Hashable] = []
        self.names: List[str] = []
        self.rows: List[Optional[list]] = []
        self.action_origin: List[Optional[list]] = []
        self.tags: Dict[Tuple[int, int], Hashable] = {}
        self.queue: deque = deque()

    def state(self, key, origin, aux, name=None) -> int:
        p = self.index.get(key)
        if p is None:
            p = self.index[key] = len(self.keys)
            self.keys.append(key)
            self.origin.append(origin)
            self.aux.append(aux)
            if name is None:
                name = "%s|%s" % (self.base.states[origin] if origin is not None else "·", aux)
            self.names.append(name)
            self.rows.append(None)
            self.action_origin.append(None)
            self.queue.append(p)
        return p

    def set_actions(self, p, actions, origins):
        self.rows[p] = actions
        self.action_origin[p] = origins

    def explore(self, expand: Callable[[int], None], limit=1_000_000):
        while self.queue:
            p = self.queue.popleft()
            expand(p)
            if len(self.keys) > limit:
                raise MemoryError("product exceeds %d states" % limit)

    def finish(self, init: int) -> Product:
        mdp = WeightedMdp(tuple(self.names), tuple(tuple(r) for r in self.rows), self.dim, init)
        return Product(mdp, self.base, self.origin, self.aux,
                       [list(o) for o in self.action_origin], init, self.tags)


def absorbing_action(p: int, dim: int, name="stay") -> Action:
    return Action(name, (0,) * dim, ((p, Fraction(1)),))


def renormalize(dist: Dict[int, Fraction], keep: Callable[[int], bool], fallback: int) -> Dict[int, Fraction]:
    kept = {k: q for k, q in dist.items() if keep(k)}
    total = sum(kept.values(), Fraction(0))
    if total == 0:
        return {fallback: Fraction(1)}
    return {k: q / total for k, q in kept.items()}


def first_plain_action(prod: Product, p: int) -> int:
    return next(k for k, o in enumerate(prod.action_origin[p]) if o is not None)


def lift_strategy(prod: Product, inner, init_memory=None) -> MooreStrategy:
    """Turn a strategy on the product into a Moore strategy on the base MDP.

    The base strategy's memory is ``(aux, m)``: the product label of the
    current decision state and the inner strategy's memory.  Fresh product
    actions must not be used by ``inner``.
    """
    base = prod.base
    by_key = {}
    for p, o in enumerate(prod.origin):
        if o is not None:
            by_key[(o, prod.aux[p])] = p

    def joint(p, m, k, t):
        # unnormalized distribution over (next decision state, memory) ending in base state t
        out: Dict[Tuple[int, Hashable], Fraction] = {}
        for p2, q in prod.mdp.actions[p][k].succ:
            o = prod.origin[p2]
            if o is not None and o != t:
                continue
            for m2, r in inner.next_memory(p, m, k, p2).items():
                if o is not None:
                    out[(p2, m2)] = out.get((p2, m2), Fraction(0)) + q * r
                    continue
                for k2, r2 in inner.next_action(p2, m2).items():
                    for key, r3 in joint(p2, m2, k2, t).items():
                        out[key] = out.get(key, Fraction(0)) + q * r * r2 * r3
        return out

    def act(s, mem):
        aux, m = mem
        p = by_key[(s, aux)]
        d: Dict[int, Fraction] = {}
        for k, q in inner.next_action(p, m).items():
            a = prod.action_origin[p][k]
            if a is None:
                raise ValueError("inner strategy uses a fresh product action")
            d[a] = d.get(a, Fraction(0)) + q
        return d

    def upd(s, mem, a, t):
        aux, m = mem
        p = by_key[(s, aux)]
        acc: Dict[Tuple[int, Hashable], Fraction] = {}
        for k, q in inner.next_action(p, m).items():
            if prod.action_origin[p][k] != a:
                continue
            for key, r in joint(p, m, k, t).items():
                acc[key] = acc.get(key, Fraction(0)) + q * r
        total = sum(acc.values(), Fraction(0))
        return {(prod.aux[p2], m2): r / total for (p2, m2), r in acc.items()}

    p0 = prod.init
    initial = {(prod.aux[p0], m): q for m, q in inner.initial_dist().items()}
    return tabulate(base, prod.origin[p0], initial, act, upd)


class Mode:
    """A strategy fragment entered at some point of a run (e.g. when settling in an end component)."""

    finite = True

    def initial(self, s) -> Dict[Hashable, Fraction]:
        return {0: Fraction(1)}

    def act(self, s, m) -> Dict[int, Fraction]:
        raise NotImplementedError

    def update(self, s, m, a, t) -> Dict[Hashable, Fraction]:
        return {m: Fraction(1)}


class MemorylessMode(Mode):
    def __init__(self, policy: Dict[int, Dict[int, Fraction]], name=""):
        self.policy = policy
        self.name = name

    def act(self, s, m):
        return self.policy[s]


class MixtureMode(Mode):
    """Pick one of several modes at entry, with given probabilities, and commit to it."""

    def __init__(self, choices: Dict[Hashable, Tuple[Fraction, Mode]]):
        self.choices = {k: v for k, v in choices.items() if v[0] > 0}
        self.finite = all(mode.finite for _, mode in self.choices.values())

    def initial(self, s):
        out = {}
        for k, (w, mode) in self.choices.items():
            for m, q in mode.initial(s).items():
                out[(k, m)] = out.get((k, m), Fraction(0)) + w * q
        return out

    def act(self, s, mm):
        k, m = mm
        return self.choices[k][1].act(s, m)

    def update(self, s, mm, a, t):
        k, m = mm
        return {(k, n): q for n, q in self.choices[k][1].update(s, m, a, t).items()}


def switching_strategy(prod: Product, tau: Dict[int, Dict[int, Fraction]],
                       modes: Dict[Hashable, Mode]):
    """Follow a memoryless product strategy ``tau`` until it takes a fresh action.

    Taking the fresh action tagged ``key`` hands control to ``modes[key]``.
    The hand-over coin is tossed on arrival in a product state, so the
    action distribution only depends on memory.  Products used here have
    no internal states and are deterministic in the observed base
    successor.  Returns a Moore strategy when every mode is finite, a
    symbolic strategy otherwise.
    """
    base = prod.base
    by_key = {(o, prod.aux[p]): p for p, o in enumerate(prod.origin) if o is not None}
    succ_of: Dict[Tuple[int, int, int], int] = {}

    def arrival(p):
        out: Dict[Hashable, Fraction] = {}
        stay = Fraction(1)
        for k, q in tau.get(p, {}).items():
            if prod.action_origin[p][k] is None:
                key = prod.tags[(p, k)]
                stay -= q
                for m, r in modes[key].initial(prod.origin[p]).items():
                    out[("m", key, m)] = out.get(("m", key, m), Fraction(0)) + q * r
        if stay > 0:
            out[("r", prod.aux[p])] = stay
        return out

    def act(s, mem):
        if mem[0] == "m":
            return modes[mem[1]].act(s, mem[2])
        p = by_key[(s, mem[1])]
        d = renormalize(tau.get(p, {}), lambda k: prod.action_origin[p][k] is not None,
                        first_plain_action(prod, p))
        return {prod.action_origin[p][k]: q for k, q in d.items()}

    def upd(s, mem, a, t):
        if mem[0] == "m":
            return {("m", mem[1], n): q for n, q in modes[mem[1]].update(s, mem[2], a, t).items()}
        p = by_key[(s, mem[1])]
        key = (p, a, t)
        p2 = succ_of.get(key)
        if p2 is None:
            k = prod.action_origin[p].index(a)
            p2 = next(x for x, _ in prod.mdp.actions[p][k].succ if prod.origin[x] == t)
            succ_of[key] = p2
        return arrival(p2)

    initial = arrival(prod.init)
    init = prod.origin[prod.init]
    if all(m.finite for m in modes.values()):
        return tabulate(base, init, initial, act, upd)
    return SymbolicStrategy(init, initial, act, upd, "reach phase followed by per-component schedules")


def identity_product(mdp: WeightedMdp, fresh_tags: Dict[Tuple[int, int], Hashable],
                     n_base: int, base: WeightedMdp, init: int) -> Product:
    """View an MDP that extends ``base`` with fresh states/actions as a product over it."""
    origin = [s if s < n_base else None for s in range(mdp.n_states)]
    aux = [0] * mdp.n_states
    action_origin = []
    for s in range(mdp.n_states):
        row = []
        for k in range(len(mdp.actions[s])):
            row.append(None if (s, k) in fresh_tags or s >= n_base else k)
        action_origin.append(row)
    return Product(mdp, base, origin, aux, action_origin, init, dict(fresh_tags))
