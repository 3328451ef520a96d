"""Graph algorithms on MDPs: SCCs, end components and reachability regions."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .model import Action, WeightedMdp


def scc_decompose(succ: Sequence[Iterable[int]], nodes: Optional[Iterable[int]] = None) -> List[List[int]]:
    """Strongly connected components in reverse topological order (sinks first).

    Iterative Tarjan.  ``succ[v]`` gives the successors of ``v``; when
    ``nodes`` is given only those nodes (and edges between them) are used.
    """
    if nodes is None:
        nodes = range(len(succ))
        member = None
    else:
        nodes = list(nodes)
        member = set(nodes)
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    on_stack: Set[int] = set()
    stack: List[int] = []
    out: List[List[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if member is not None and w not in member:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


@dataclass(frozen=True)
class EndComponent:
    states: FrozenSet[int]
    actions: Dict[int, Tuple[int, ...]]  # state -> allowed action indices

    def __hash__(self):
        return hash(self.states)

    def pairs(self):
        for s in sorted(self.states):
            for a in self.actions[s]:
                yield s, a


@dataclass
class MecDecomposition:
    mecs: List[EndComponent]
    membership: Dict[int, int]

    def __iter__(self):
        return iter(self.mecs)

    def __len__(self):
        return len(self.mecs)


def is_end_component(mdp: WeightedMdp, states, actions) -> bool:
    states = set(states)
    if not states:
        return False
    for s in states:
        acts = actions.get(s, ())
        if not acts:
            return False
        for a in acts:
            if not set(mdp.actions[s][a].support()) <= states:
                return False
    succ = {s: [t for a in actions[s] for t in mdp.actions[s][a].support()] for s in states}
    comps = scc_decompose(succ, states)
    return len(comps) == 1


def end_components_within(mdp: WeightedMdp, states: Iterable[int],
                          allowed: Callable[[int, int], bool] = lambda s, a: True) -> List[EndComponent]:
    """Maximal end components of the sub-MDP on ``states`` using only allowed actions."""
    cand = set(states)
    acts = {s: [a for a in range(len(mdp.actions[s])) if allowed(s, a)] for s in cand}
    while True:
        succ = {s: [t for a in acts[s] for t in mdp.actions[s][a].support() if t in cand] for s in cand}
        comps = scc_decompose(succ, sorted(cand))
        comp_of = {s: k for k, comp in enumerate(comps) for s in comp}
        changed = False
        for s in list(cand):
            keep = [a for a in acts[s]
                    if all(comp_of.get(t) == comp_of[s] for t in mdp.actions[s][a].support())]
            if len(keep) != len(acts[s]):
                acts[s] = keep
                changed = True
        for s in [s for s in cand if not acts[s]]:
            cand.discard(s)
            del acts[s]
            changed = True
        if not changed:
            break
    result = [EndComponent(frozenset(comp), {s: tuple(acts[s]) for s in comp})
              for comp in comps if all(s in cand for s in comp)]
    result.sort(key=lambda ec: min(ec.states))
    return result


def max_end_components(mdp: WeightedMdp, states: Optional[Iterable[int]] = None) -> MecDecomposition:
    mecs = end_components_within(mdp, range(mdp.n_states) if states is None else states)
    membership = {s: k for k, ec in enumerate(mecs) for s in ec.states}
    return MecDecomposition(mecs, membership)


STAR = "a*"


@dataclass
class Contraction:
    mdp: WeightedMdp
    mec_state: List[int]          # MEC index -> fresh absorbing state
    star_action: Dict[int, int]   # original state in some MEC -> index of its a* action
    decomposition: MecDecomposition


def contract_mecs(mdp: WeightedMdp, mecs: Optional[MecDecomposition] = None) -> Contraction:
    """Add, per MEC C, an absorbing state s_C and an action a* from every s in C to s_C."""
    if mecs is None:
        mecs = max_end_components(mdp)
    zero = (0,) * mdp.dim
    n = mdp.n_states
    states = list(mdp.states)
    acts = [list(row) for row in mdp.actions]
    mec_state, star = [], {}
    for k, ec in enumerate(mecs.mecs):
        sc = n + k
        mec_state.append(sc)
        states.append("MEC%d" % k)
        for s in sorted(ec.states):
            star[s] = len(acts[s])
            acts[s].append(Action(STAR, zero, ((sc, Fraction(1)),)))
    for sc in mec_state:
        acts.append([Action(STAR, zero, ((sc, Fraction(1)),))])
    new = WeightedMdp(tuple(states), tuple(tuple(r) for r in acts), mdp.dim, mdp.initial)
    return Contraction(new, mec_state, star, mecs)


def positive_reach_set(mdp: WeightedMdp, targets: Iterable[int],
                       allowed: Optional[Callable[[int, int], bool]] = None) -> Set[int]:
    """States from which some path (through allowed actions) reaches a target."""
    pred: Dict[int, Set[int]] = {}
    for s, row in enumerate(mdp.actions):
        for a, act in enumerate(row):
            if allowed is not None and not allowed(s, a):
                continue
            for t, _ in act.succ:
                pred.setdefault(t, set()).add(s)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in pred.get(t, ()):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def forward_reach_set(mdp: WeightedMdp, sources: Iterable[int]) -> Set[int]:
    seen = set(sources)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        for t in mdp.successors(s):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return seen


def almost_sure_attractor(mdp: WeightedMdp, targets: Iterable[int],
                          within: Optional[Iterable[int]] = None) -> Tuple[Set[int], Dict[int, int]]:
    """Almost-sure winning region for reaching ``targets`` and a pure memoryless witness.

    Classic nested fixpoint: repeatedly keep the states that can reach the
    targets using actions that never leave the current region.  The witness
    picks, outside the targets, an action staying in the region and making
    progress in the last backward search (lower distance rank).
    """
    targets = set(targets)
    region = set(range(mdp.n_states)) if within is None else set(within) | targets
    while True:
        safe = {s: [a for a, act in enumerate(mdp.actions[s])
                    if all(t in region for t in act.support())] for s in region}
        rank = {t: 0 for t in targets if t in region}
        choice: Dict[int, int] = {}
        frontier = list(rank)
        pred: Dict[int, List[Tuple[int, int]]] = {}
        for s in region:
            if s in rank:
                continue
            for a in safe[s]:
                for t in mdp.actions[s][a].support():
                    pred.setdefault(t, []).append((s, a))
        level = 0
        while frontier:
            level += 1
            nxt = []
            for t in frontier:
                for s, a in pred.get(t, ()):
                    if s not in rank:
                        rank[s] = level
                        choice[s] = a
                        nxt.append(s)
            frontier = nxt
        new_region = set(rank)
        if new_region == region:
            return region, choice
        region = new_region


def almost_sure_reach_set(mdp: WeightedMdp, targets: Iterable[int]) -> Set[int]:
    return almost_sure_attractor(mdp, targets)[0]


def sure_safe_region(mdp: WeightedMdp, allowed: Callable[[int, int], bool],
                     within: Optional[Iterable[int]] = None) -> Tuple[Set[int], Dict[int, Tuple[int, ...]]]:
    """Largest set of states where the controller can use allowed actions forever."""
    region = set(range(mdp.n_states)) if within is None else set(within)
    while True:
        acts = {s: tuple(a for a, act in enumerate(mdp.actions[s])
                         if allowed(s, a) and all(t in region for t in act.support()))
                for s in region}
        keep = {s for s in region if acts[s]}
        if keep == region:
            return region, acts
        region = keep
