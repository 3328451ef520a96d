"""Multiple reachability and the end-component decomposition meta-solvers.

The workhorse is the flow program for absorbing targets: variables
y[s,a] are expected numbers of times action a is played in s, and z[t]
the probability of ending in target t.  Everything else in the package
reduces to it, either directly or through a product construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, FrozenSet, Hashable, List, Optional, Sequence, Set, Tuple

from .graph import (EndComponent, MecDecomposition, almost_sure_attractor, contract_mecs,
                    forward_reach_set, max_end_components, positive_reach_set)
from .model import Action, MooreStrategy, WeightedMdp, as_fraction, tabulate
from .product import (Mode, MemorylessMode, MixtureMode, Product, ProductBuilder, absorbing_action,
                      identity_product, lift_strategy, renormalize, switching_strategy)
from .ratlp import LinearProgram, solve_lp


class TargetsNotAbsorbing(ValueError):
    pass


@dataclass
class FlowSolution:
    """Memoryless strategy read off a feasible flow, with the flow itself as certificate."""

    policy: Dict[int, Dict[int, Fraction]]
    flow: Dict[Tuple[int, int], Fraction]
    reach: Dict[int, Fraction]
    lp_size: Tuple[int, int] = (0, 0)

    def strategy(self, mdp: WeightedMdp, init: int) -> MooreStrategy:
        return MooreStrategy.memoryless(mdp, init, lambda s: self.policy.get(s, 0))


def _policy_from_flow(mdp, states, flow):
    policy = {}
    for s in states:
        out = {a: flow.get((s, a), Fraction(0)) for a in range(len(mdp.actions[s]))}
        total = sum(out.values(), Fraction(0))
        if total > 0:
            policy[s] = {a: q / total for a, q in out.items() if q}
        else:
            policy[s] = {0: Fraction(1)}
    return policy


def _flow_program(mdp, init, targets, alphas, every):
    """The LP together with its variable maps (y[s,a], z[t]); None if init cannot reach a target."""
    reach = forward_reach_set(mdp, [init])
    can = positive_reach_set(mdp, every)
    if init not in can:
        return None
    trans = sorted(s for s in reach if s in can and s not in every)
    ends = sorted(t for t in every if t in reach)
    lp = LinearProgram()
    y = {}
    for s in trans:
        for a in range(len(mdp.actions[s])):
            y[(s, a)] = lp.add_var("y[%s,%s]" % (mdp.states[s], mdp.actions[s][a].name))
    z = {t: lp.add_var("z[%s]" % mdp.states[t]) for t in ends}
    inflow: Dict[int, Dict[int, Fraction]] = {}
    for (s, a), j in y.items():
        for t, p in mdp.actions[s][a].succ:
            if t in z or t in can:
                inflow.setdefault(t, {})[j] = inflow.setdefault(t, {}).get(j, Fraction(0)) + p
    for s in trans:
        row = {y[(s, a)]: Fraction(1) for a in range(len(mdp.actions[s]))}
        for j, p in inflow.get(s, {}).items():
            row[j] = row.get(j, Fraction(0)) - p
        lp.add_constraint(row, "==", 1 if s == init else 0)
    for t in ends:
        row = {z[t]: Fraction(1)}
        for j, p in inflow.get(t, {}).items():
            row[j] = row.get(j, Fraction(0)) - p
        lp.add_constraint(row, "==", 0)
    for T, a in zip(targets, alphas):
        if a > 0:
            lp.add_constraint({z[t]: Fraction(1) for t in T if t in z}, ">=", a)
    return lp, y, z


def absorbing_flow(mdp: WeightedMdp, init: int, targets: Sequence, alphas: Sequence) -> Optional[FlowSolution]:
    """Solve the absorbing-target flow program; None when infeasible."""
    targets = [frozenset(T) for T in targets]
    alphas = [as_fraction(a) for a in alphas]
    every = set().union(*targets) if targets else set()
    for t in every:
        if not mdp.is_absorbing(t):
            raise TargetsNotAbsorbing("targets must be absorbing (state %s)" % mdp.states[t])
    full = {s: {0: Fraction(1)} for s in range(mdp.n_states)}
    if init in every:
        ok = all(a <= (1 if init in T else 0) for T, a in zip(targets, alphas))
        return FlowSolution(full, {}, {init: Fraction(1)}) if ok else None
    if not any(a > 0 for a in alphas):
        return FlowSolution(full, {}, {})
    built = _flow_program(mdp, init, targets, alphas, every)
    if built is None:
        return None
    lp, y, z = built
    res = solve_lp(lp)
    if not res.ok:
        return None
    flow = {key: res.point[j] for key, j in y.items() if res.point[j]}
    policy = dict(full)
    policy.update(_policy_from_flow(mdp, {s for s, _ in y}, flow))
    return FlowSolution(policy, flow, {t: res.point[j] for t, j in z.items()},
                        (lp.n_vars, len(lp.rows)))


def check_flow_certificate(mdp: WeightedMdp, init: int, targets: Sequence, alphas: Sequence,
                           flow: Dict[Tuple[int, int], Fraction], reach: Dict[int, Fraction]) -> List[int]:
    """Re-check a flow certificate exactly; returns the indices of violated LP rows (empty: valid)."""
    targets = [frozenset(T) for T in targets]
    alphas = [as_fraction(a) for a in alphas]
    every = set().union(*targets) if targets else set()
    if init in every or not any(a > 0 for a in alphas):
        return [] if not flow else [-1]
    built = _flow_program(mdp, init, targets, alphas, every)
    if built is None:
        return [-1]
    lp, y, z = built
    if any(key not in y for key in flow) or any(t not in z for t in reach if reach[t]):
        return [-1]
    point = [Fraction(0)] * lp.n_vars
    for key, j in y.items():
        point[j] = as_fraction(flow.get(key, 0))
    for t, j in z.items():
        point[j] = as_fraction(reach.get(t, 0))
    return lp.check(point)


def absorbing_multi_reach(mdp: WeightedMdp, init: int, targets, alphas) -> Optional[MooreStrategy]:
    """Memoryless strategy reaching each absorbing target set T_i with probability >= alpha_i."""
    sol = absorbing_flow(mdp, init, targets, alphas)
    return None if sol is None else sol.strategy(mdp, init)


# ----------------------------------------------------------------------------
# acyclic models, at most two targets


class NotAcyclic(ValueError):
    pass


@dataclass
class PolicyMixture:
    """Randomize once at the start between pure memoryless policies.

    ``points[i]`` is the exact reach vector of ``policies[i]``.
    """

    weights: List[Fraction]
    policies: List[Dict[int, int]]
    points: List[Tuple[Fraction, ...]]
    frontier: List[Tuple[Fraction, ...]] = field(default_factory=list)

    def strategy(self, mdp: WeightedMdp, init: int) -> MooreStrategy:
        initial = {i: w for i, w in enumerate(self.weights) if w}
        return tabulate(mdp, init, initial, lambda s, m: {self.policies[m].get(s, 0): Fraction(1)},
                        lambda s, m, a, t: {m: Fraction(1)})


def _reverse_topological(mdp: WeightedMdp, init: int) -> List[int]:
    """States reachable from init, successors first; absorbing self-loops are ignored."""
    order, state = [], {}
    stack = [(init, iter(sorted(mdp.successors(init) - {init})))]
    state[init] = 1
    while stack:
        s, it = stack[-1]
        t = next(it, None)
        if t is None:
            stack.pop()
            state[s] = 2
            order.append(s)
            continue
        if state.get(t) == 1:
            raise NotAcyclic("cycle through state %s" % mdp.states[t])
        if t not in state:
            if not mdp.is_absorbing(t) and t in mdp.successors(t):
                raise NotAcyclic("self-loop at non-absorbing state %s" % mdp.states[t])
            state[t] = 1
            stack.append((t, iter(sorted(mdp.successors(t) - {t}))))
    return order


def _weighted_best(mdp, order, targets, w, tie):
    """Pure policy maximizing (w . p, tie . p) lexicographically, with its reach vectors."""
    q = len(targets)
    vec, policy = {}, {}
    zero = (Fraction(0),) * q
    for s in order:
        if mdp.is_absorbing(s):
            vec[s] = tuple(Fraction(int(s in T)) for T in targets)
            continue
        best, best_key = None, None
        for a, act in enumerate(mdp.actions[s]):
            v = list(zero)
            for t, p in act.succ:
                for i, x in enumerate(vec[t]):
                    if x:
                        v[i] += p * x
            key = (sum((wi * x for wi, x in zip(w, v)), Fraction(0)), sum((ti * x for ti, x in zip(tie, v)), Fraction(0)))
            if best_key is None or key > best_key:
                best, best_key = (a, tuple(v)), key
        policy[s], vec[s] = best
    return policy, vec


def acyclic_multi_reach(mdp: WeightedMdp, init: int, targets: Sequence, alphas: Sequence) -> Optional[PolicyMixture]:
    """Multiple reachability of absorbing targets when the reachable part is acyclic (q <= 2).

    The achievable reach vectors form a polygon whose upper-right vertices
    are weighted-sum optima of pure memoryless policies.  The frontier is
    traced by repeatedly maximizing along the normal of each edge, every
    maximization being one exact backward pass.  None when infeasible.
    """
    targets = [frozenset(T) for T in targets]
    alphas = [as_fraction(a) for a in alphas]
    q = len(targets)
    if not 1 <= q <= 2:
        raise ValueError("acyclic_multi_reach handles one or two targets")
    for T in targets:
        for t in T:
            if not mdp.is_absorbing(t):
                raise TargetsNotAbsorbing("targets must be absorbing (state %s)" % mdp.states[t])
    order = _reverse_topological(mdp, init)

    def best(w, tie):
        pol, vec = _weighted_best(mdp, order, targets, w, tie)
        return pol, vec[init]

    if q == 1:
        pol, p = best((1,), (0,))
        if p[0] < alphas[0]:
            return None
        return PolicyMixture([Fraction(1)], [pol], [p], [p])
    hi2 = best((0, 1), (1, 0))  # top-left end of the frontier
    hi1 = best((1, 0), (0, 1))  # bottom-right end
    verts = [hi2]
    stack = [(hi2, hi1)]
    # depth-first refinement keeps the frontier ordered left to right
    pending = []
    while stack:
        A, B = stack.pop()
        if A[1] == B[1]:
            pending.append(B)
            continue
        w = (A[1][1] - B[1][1], B[1][0] - A[1][0])
        C = best(w, (1, 1))
        if w[0] * C[1][0] + w[1] * C[1][1] > w[0] * A[1][0] + w[1] * A[1][1]:
            stack.append((C, B))
            stack.append((A, C))
        else:
            pending.append(B)
    verts += pending
    frontier = [v[1] for v in verts]
    a1, a2 = alphas
    for (PA, pa), (PB, pb) in zip(verts, verts[1:] + [verts[-1]]):
        # points (1-lam) pa + lam pb, with pa[0] <= pb[0] and pa[1] >= pb[1]
        if pa[0] >= a1 and pa[1] >= a2:
            return PolicyMixture([Fraction(1)], [PA], [pa], frontier)
        if pb[0] > pa[0] and pb[0] >= a1 > pa[0]:
            lam = (a1 - pa[0]) / (pb[0] - pa[0])
            if (1 - lam) * pa[1] + lam * pb[1] >= a2:
                return PolicyMixture([1 - lam, lam], [PA, PB], [pa, pb], frontier)
    return None


# ----------------------------------------------------------------------------
# nested targets


def _check_nested(targets):
    for a, b in zip(targets, targets[1:]):
        if not set(a) <= set(b):
            raise ValueError("targets are not nested (T_i ⊆ T_i+1 required)")


def nested_product(mdp: WeightedMdp, init: int, targets) -> Tuple[Product, List[frozenset]]:
    """q+1 copies; copy i means T_i..T_q were already visited.  Fresh sink per copy."""
    q = len(targets)
    sets = [frozenset(T) for T in targets]

    def first_copy(t):
        return next((j for j in range(1, q + 1) if t in sets[j - 1]), q + 1)

    b = ProductBuilder(mdp)
    sinks = {}

    def sink(i):
        if i not in sinks:
            sinks[i] = b.state(("sink", i), None, ("sink", i), "⊥%d" % i)
        return sinks[i]

    start = b.state((init, first_copy(init)), init, first_copy(init))

    def expand(p):
        key = b.keys[p]
        if key[0] == "sink":
            b.set_actions(p, [absorbing_action(p, mdp.dim)], [None])
            return
        s, i = key
        acts, origins = [], []
        for k, act in enumerate(mdp.actions[s]):
            succ = {}
            for t, pr in act.succ:
                j = min(i, first_copy(t))
                x = b.state((t, j), t, j)
                succ[x] = succ.get(x, Fraction(0)) + pr
            acts.append(Action(act.name, act.weights, tuple(sorted(succ.items()))))
            origins.append(k)
        x = sink(i)
        b.tags[(p, len(acts))] = "stop"
        acts.append(Action("a⊥", (0,) * mdp.dim, ((x, Fraction(1)),)))
        origins.append(None)
        b.set_actions(p, acts, origins)

    b.explore(expand)
    prod = b.finish(start)
    goals = [frozenset(sinks[j] for j in range(1, i + 1) if j in sinks) for i in range(1, q + 1)]
    return prod, goals


def _drop_fresh(prod: Product, policy):
    """Memoryless product strategy with fresh actions removed (renormalized)."""
    def pol(p):
        if prod.origin[p] is None:
            return {0: Fraction(1)}
        fallback = next(k for k, o in enumerate(prod.action_origin[p]) if o is not None)
        return renormalize(policy.get(p, {}), lambda k: prod.action_origin[p][k] is not None, fallback)
    return MooreStrategy.memoryless(prod.mdp, prod.init, pol)


def nested_multi_reach(mdp: WeightedMdp, init: int, targets, alphas) -> Optional[MooreStrategy]:
    """Nested targets T_1 ⊆ ... ⊆ T_q, solved on q+1 copies with linear memory.

    Stopping in a copy only gives up targets not yet visited, so the
    stop actions can simply be ignored when lifting: continuing can only
    visit more targets.
    """
    targets = [frozenset(T) for T in targets]
    _check_nested(targets)
    prod, goals = nested_product(mdp, init, targets)
    sol = absorbing_flow(prod.mdp, prod.init, goals, alphas)
    if sol is None:
        return None
    return lift_strategy(prod, _drop_fresh(prod, sol.policy))


# ----------------------------------------------------------------------------
# almost-sure, arbitrary targets


def almost_sure_multi_reach(mdp: WeightedMdp, init: int, targets) -> Optional[Tuple[MooreStrategy, int]]:
    """Decide whether all targets can be visited with probability one.

    The winning region for a residual index set I is computed once per I:
    make every state of some T_i (i in I) absorbing, keep those whose own
    residual set is winning, and take the almost-sure attractor.  The
    witness remembers the residual set.
    """
    sets = [frozenset(T) for T in targets]
    q = len(sets)
    memo: Dict[FrozenSet[int], Tuple[Set[int], Dict[int, int]]] = {}

    def residual(I, x):
        return frozenset(i for i in I if x not in sets[i])

    def absorbing_view(T):
        acts = []
        for s, row in enumerate(mdp.actions):
            if s in T:
                acts.append(tuple(Action(a.name, a.weights, ((s, Fraction(1)),)) for a in row))
            else:
                acts.append(row)
        return WeightedMdp(mdp.states, tuple(acts), mdp.dim, mdp.initial)

    def win(I):
        if I in memo:
            return memo[I]
        if not I:
            memo[I] = (set(range(mdp.n_states)), {})
            return memo[I]
        T = set().union(*(sets[i] for i in I))
        good = set()
        for x in T:
            R = residual(I, x)
            if x in win(R)[0]:
                good.add(x)
        region, choice = almost_sure_attractor(absorbing_view(T), good)
        memo[I] = (region, choice)
        return memo[I]

    I0 = residual(frozenset(range(q)), init)
    if init not in win(I0)[0]:
        return None

    def act(s, I):
        if not I:
            return {0: Fraction(1)}
        return {win(I)[1].get(s, 0): Fraction(1)}

    def upd(s, I, a, t):
        return {residual(I, t): Fraction(1)}

    strat = tabulate(mdp, init, {I0: Fraction(1)}, act, upd)
    return strat, strat.memory_size


# ----------------------------------------------------------------------------
# arbitrary targets, arbitrary thresholds


def visited_product(mdp: WeightedMdp, init: int, targets) -> Product:
    sets = [frozenset(T) for T in targets]

    def bits(s, old=frozenset()):
        return old | frozenset(i for i, T in enumerate(sets) if s in T)

    b = ProductBuilder(mdp)
    start = b.state((init, bits(init)), init, bits(init))

    def expand(p):
        s, have = b.keys[p]
        acts, origins = [], []
        for k, act in enumerate(mdp.actions[s]):
            succ = {}
            for t, pr in act.succ:
                x = b.state((t, bits(t, have)), t, bits(t, have))
                succ[x] = succ.get(x, Fraction(0)) + pr
            acts.append(Action(act.name, act.weights, tuple(sorted(succ.items()))))
            origins.append(k)
        b.set_actions(p, acts, origins)

    b.explore(expand)
    return b.finish(start)


def general_multi_reach(mdp: WeightedMdp, init: int, targets, alphas) -> Optional[MooreStrategy]:
    """Arbitrary targets: visited-set product, MEC contraction, absorbing flow.

    A run's visited set is fixed once it settles in an end component of the
    product, so reaching the proxy of a component whose label contains i
    certifies a visit to T_i.  Proxy actions are ignored when lifting (the
    bits are already set at that point).
    """
    prod = visited_product(mdp, init, targets)
    con = contract_mecs(prod.mdp)
    q = len(targets)
    goals = [frozenset(con.mec_state[k] for k, ec in enumerate(con.decomposition.mecs)
                       if i in prod.aux[min(ec.states)]) for i in range(q)]
    sol = absorbing_flow(con.mdp, prod.init, goals, alphas)
    if sol is None:
        return None
    n = prod.mdp.n_states
    policy = {}
    for p in range(n):
        d = sol.policy.get(p, {0: Fraction(1)})
        policy[p] = renormalize(d, lambda k: k < len(prod.mdp.actions[p]), 0)
    inner = MooreStrategy.memoryless(prod.mdp, prod.init, lambda p: policy[p])
    return lift_strategy(prod, inner)


# ----------------------------------------------------------------------------
# prefix-independent objectives


def uniform_mode(ec: EndComponent) -> MemorylessMode:
    return MemorylessMode({s: {a: Fraction(1, len(acts)) for a in acts} for s, acts in ec.actions.items()},
                          "uniform")


@dataclass
class DecompositionResult:
    strategy: object
    certificate: dict = field(default_factory=dict)


def prefix_independent_solve(mdp: WeightedMdp, init: int, alphas: Sequence,
                             oracle: Callable[[EndComponent, int], bool],
                             in_mec: Callable[[EndComponent, FrozenSet[int]], Mode],
                             mecs: Optional[MecDecomposition] = None) -> Optional[DecompositionResult]:
    """Constraints whose satisfaction depends only on the end component a run settles in.

    ``oracle(C, i)`` says constraint i can be met almost surely inside C;
    ``in_mec(C, I)`` must return one in-component strategy meeting all of
    I at once.
    """
    if mecs is None:
        mecs = max_end_components(mdp)
    con = contract_mecs(mdp, mecs)
    q = len(alphas)
    good = [[bool(oracle(ec, i)) for i in range(q)] for ec in mecs.mecs]
    goals = [frozenset(con.mec_state[k] for k in range(len(mecs.mecs)) if good[k][i]) for i in range(q)]
    sol = absorbing_flow(con.mdp, init, goals, alphas)
    if sol is None:
        return None
    tags = {(s, k): ("mec", mecs.membership[s]) for s, k in con.star_action.items()}
    prod = identity_product(con.mdp, tags, mdp.n_states, mdp, init)
    modes = {("mec", k): in_mec(ec, frozenset(i for i in range(q) if good[k][i]))
             for k, ec in enumerate(mecs.mecs)}
    strat = switching_strategy(prod, sol.policy, modes)
    cert = {"targets": [sorted(g) for g in goals], "flow": sol.flow, "reach": sol.reach,
            "mec_oracle": good}
    return DecompositionResult(strat, cert)


class DownwardClosureViolation(ValueError):
    pass


def maximal_subsets(q: int, feasible: Callable[[FrozenSet[int]], bool]) -> List[FrozenSet[int]]:
    """Maximal feasible subsets of {0..q-1}, searched from the top of the lattice."""
    found: List[FrozenSet[int]] = []
    for size in range(q, -1, -1):
        for I in combinations(range(q), size):
            I = frozenset(I)
            if any(I <= J for J in found):
                continue
            if feasible(I):
                found.append(I)
    for I in found:
        for i in I:
            if not feasible(I - {i}):
                raise DownwardClosureViolation("oracle accepts %s but rejects %s" % (sorted(I), sorted(I - {i})))
    return found


@dataclass
class LambdaResult:
    feasible: bool
    strategy: object = None
    flow: Dict = field(default_factory=dict)
    star: Dict[int, Fraction] = field(default_factory=dict)
    weights: Dict[Tuple[int, FrozenSet[int]], Fraction] = field(default_factory=dict)
    maximal: Dict[int, List[FrozenSet[int]]] = field(default_factory=dict)
    mecs: Optional[MecDecomposition] = None
    alphas: Tuple = ()

    def check(self) -> bool:
        """Re-check the certificate's component and threshold lines exactly."""
        if not self.feasible:
            return True
        if sum(self.star.values(), Fraction(0)) != 1:
            return False
        for k, ec in enumerate(self.mecs.mecs):
            lhs = sum((self.star.get(s, Fraction(0)) for s in ec.states), Fraction(0))
            rhs = sum((w for (c, _), w in self.weights.items() if c == k), Fraction(0))
            if lhs != rhs:
                return False
        for i, a in enumerate(self.alphas):
            got = sum((w for (_, I), w in self.weights.items() if i in I), Fraction(0))
            if got < a:
                return False
        return all(w >= 0 for w in self.weights.values())


def lambda_decomposition_solve(mdp: WeightedMdp, init: int, alphas: Sequence,
                               oracle: Callable[[EndComponent, FrozenSet[int]], bool],
                               in_mec: Optional[Callable[[EndComponent, FrozenSet[int]], Mode]] = None,
                               mecs: Optional[MecDecomposition] = None) -> LambdaResult:
    """Settle in end components and split each one's mass over maximal satisfiable subsets."""
    alphas = tuple(as_fraction(a) for a in alphas)
    q = len(alphas)
    if mecs is None:
        mecs = max_end_components(mdp)
    reach = forward_reach_set(mdp, [init])
    maximal = {}
    for k, ec in enumerate(mecs.mecs):
        if not ec.states & reach:
            continue
        cache: Dict[FrozenSet[int], bool] = {}

        def feas(I, ec=ec, cache=cache):
            if I not in cache:
                cache[I] = bool(oracle(ec, I)) if I else True
            return cache[I]
        maximal[k] = maximal_subsets(q, feas)

    lp = LinearProgram()
    states = sorted(reach)
    y, ystar, lam = {}, {}, {}
    for s in states:
        for a in range(len(mdp.actions[s])):
            y[(s, a)] = lp.add_var("y[%s,%d]" % (mdp.states[s], a))
        if s in mecs.membership:
            ystar[s] = lp.add_var("y*[%s]" % mdp.states[s])
    for k, subs in maximal.items():
        for I in subs:
            lam[(k, I)] = lp.add_var("lambda[%d,%s]" % (k, sorted(I)))
    inflow: Dict[int, Dict[int, Fraction]] = {}
    for (s, a), j in y.items():
        for t, p in mdp.actions[s][a].succ:
            d = inflow.setdefault(t, {})
            d[j] = d.get(j, Fraction(0)) + p
    for s in states:
        row = {y[(s, a)]: Fraction(1) for a in range(len(mdp.actions[s]))}
        if s in ystar:
            row[ystar[s]] = Fraction(1)
        for j, p in inflow.get(s, {}).items():
            row[j] = row.get(j, Fraction(0)) - p
        lp.add_constraint(row, "==", 1 if s == init else 0)
    lp.add_constraint({j: 1 for j in ystar.values()}, "==", 1)
    for k in maximal:
        row = {ystar[s]: Fraction(1) for s in mecs.mecs[k].states if s in ystar}
        for I in maximal[k]:
            row[lam[(k, I)]] = Fraction(-1)
        lp.add_constraint(row, "==", 0)
    for i, a in enumerate(alphas):
        if a > 0:
            lp.add_constraint({j: 1 for (k, I), j in lam.items() if i in I}, ">=", a)
    res = solve_lp(lp)
    if not res.ok:
        return LambdaResult(False, maximal=maximal, mecs=mecs, alphas=alphas)
    x = res.point
    flow = {key: x[j] for key, j in y.items() if x[j]}
    star = {s: x[j] for s, j in ystar.items() if x[j]}
    weights = {key: x[j] for key, j in lam.items() if x[j]}
    out = LambdaResult(True, None, flow, star, weights, maximal, mecs, alphas)
    if in_mec is not None:
        out.strategy = lambda_strategy(mdp, init, out, in_mec)
    return out


def lambda_strategy(mdp, init, res: LambdaResult, in_mec):
    con = contract_mecs(mdp, res.mecs)
    policy = {}
    for s in range(mdp.n_states):
        d = {a: res.flow.get((s, a), Fraction(0)) for a in range(len(mdp.actions[s]))}
        if s in con.star_action:
            d[con.star_action[s]] = res.star.get(s, Fraction(0))
        total = sum(d.values(), Fraction(0))
        policy[s] = {a: q / total for a, q in d.items() if q} if total else {0: Fraction(1)}
    tags = {(s, k): ("mec", res.mecs.membership[s]) for s, k in con.star_action.items()}
    prod = identity_product(con.mdp, tags, mdp.n_states, mdp, init)
    modes = {}
    for k, ec in enumerate(res.mecs.mecs):
        choices = {}
        total = sum((w for (c, _), w in res.weights.items() if c == k), Fraction(0))
        for (c, I), w in res.weights.items():
            if c == k and w > 0:
                choices[tuple(sorted(I))] = (w / total, in_mec(ec, I))
        if not choices:
            choices[()] = (Fraction(1), uniform_mode(ec))
        modes[("mec", k)] = MixtureMode(choices)
    return switching_strategy(prod, policy, modes)
