"""Checking strategies: Monte-Carlo simulation, exact chain verification, memory minimization."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .chain import Chain, bottom_sccs, constraint_probability, strategy_chain
from .model import (InducedChain, NotChainRepresentable, PercentileConstraint, RunPrefix, WeightedMdp,
                    discounted_tail_bound, induced_chain)

BLOCK = 2048


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PERCENTILE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class Runs:
    states: np.ndarray  # (episodes, horizon + 1)
    actions: np.ndarray  # (episodes, horizon)
    seed: int

    @property
    def episodes(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.actions.shape[1]

    def prefix(self, e: int) -> RunPrefix:
        return RunPrefix(tuple(int(s) for s in self.states[e]), tuple(int(a) for a in self.actions[e]))


class _Tables:
    """Padded cumulative transition tables of an induced chain, for vectorized sampling."""

    def __init__(self, ch: InducedChain):
        n = len(ch)
        width = max(len(e) for e in ch.edges)
        self.cum = np.ones((n, width))
        self.nxt = np.zeros((n, width), dtype=np.int64)
        self.act = np.zeros((n, width), dtype=np.int64)
        for i, row in enumerate(ch.edges):
            acc = 0.0
            for k, (j, a, p) in enumerate(row):
                acc += float(p)
                self.cum[i, k] = acc
                self.nxt[i, k] = j
                self.act[i, k] = a
            self.cum[i, len(row) - 1:] = 2.0  # guard against rounding
            if len(row) < width:
                self.nxt[i, len(row):] = self.nxt[i, len(row) - 1]
                self.act[i, len(row):] = self.act[i, len(row) - 1]
        init = sorted(ch.initial.items())
        self.init_nodes = np.array([i for i, _ in init], dtype=np.int64)
        self.init_cum = np.cumsum([float(p) for _, p in init])
        self.init_cum[-1] = 2.0
        self.state = np.array([s for s, _ in ch.nodes], dtype=np.int64)


def _sample_block(tab: _Tables, horizon: int, count: int, rng: np.random.Generator):
    nodes = tab.init_nodes[np.searchsorted(tab.init_cum, rng.random(count), side="right")]
    states = np.empty((count, horizon + 1), dtype=np.int64)
    actions = np.empty((count, horizon), dtype=np.int64)
    states[:, 0] = tab.state[nodes]
    for t in range(horizon):
        u = rng.random(count)
        k = (u[:, None] >= tab.cum[nodes]).sum(axis=1)
        actions[:, t] = tab.act[nodes, k]
        nodes = tab.nxt[nodes, k]
        states[:, t + 1] = tab.state[nodes]
    return states, actions


def _block_rng(seed: int, b: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(b,))))


def simulate_runs(mdp: WeightedMdp, strategy, init: Optional[int] = None, horizon: int = 100,
                  episodes: int = 1000, seed: int = 0, threads: Optional[int] = None) -> Runs:
    """Sample i.i.d. run prefixes.

    Episodes are cut into fixed blocks, each with its own counter-based
    generator derived from (seed, block index), so the result does not
    depend on the number of threads.  Infinite-memory strategies must be
    instantiated to a horizon first.
    """
    if not getattr(strategy, "finite", False):
        raise NotChainRepresentable("simulate an infinite-memory strategy through .instantiate(mdp, horizon)")
    tab = _Tables(induced_chain(mdp, strategy, init))
    nblocks = -(-episodes // BLOCK)
    sizes = [min(BLOCK, episodes - b * BLOCK) for b in range(nblocks)]

    def work(b):
        return _sample_block(tab, horizon, sizes[b], _block_rng(seed, b))
    threads = threads or default_threads()
    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(nblocks)))
    else:
        parts = [work(b) for b in range(nblocks)]
    return Runs(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), seed)


# ----------------------------------------------------------------------------
# estimation


@dataclass
class ConstraintEstimate:
    constraint: PercentileConstraint
    successes: int
    episodes: int
    lower: float
    upper: float
    value_slack: float = 0.0  # payoff judged against value - value_slack
    prob_slack: float = 0.0  # probability the slack argument may fail
    note: str = ""

    @property
    def frequency(self) -> float:
        return self.successes / self.episodes

    @property
    def consistent(self) -> bool:
        """Threshold not refuted: the interval's upper end plus the probability slack reaches it."""
        return self.upper + self.prob_slack >= float(self.constraint.prob)


@dataclass
class SimulationReport:
    estimates: List[ConstraintEstimate]
    episodes: int
    horizon: int
    seed: int
    level: float
    generator: str = "Philox (numpy), per-block SeedSequence spawn keys"

    @property
    def consistent(self) -> bool:
        return all(e.consistent for e in self.estimates)


def clopper_pearson(k: int, n: int, level: float = 0.99) -> Tuple[float, float]:
    a = 1 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def _weight_table(mdp: WeightedMdp) -> np.ndarray:
    width = max(len(r) for r in mdp.actions)
    tab = np.zeros((mdp.n_states, width, mdp.dim))
    for s, row in enumerate(mdp.actions):
        for a, act in enumerate(row):
            tab[s, a] = [float(w) for w in act.weights]
    return tab


def mean_payoff_slack(mdp: WeightedMdp, ch: InducedChain, dim: int, horizon: int,
                      eta: float = 0.005) -> Tuple[float, float]:
    """(value slack, probability slack) for judging horizon averages of a finite chain.

    With probability at least 1 - eta every run's horizon average is within
    the value slack below the mean payoff of the bottom class it ends in.
    Markov's inequality bounds the time to reach a bottom class, and a
    Poisson decomposition plus Azuma bounds the fluctuation inside it.
    """
    n = len(ch)
    W = float(mdp.max_abs_weight()) or 0.0
    chain = Chain.from_induced(ch)
    bottoms = bottom_sccs(chain)
    in_bottom = {i for comp in bottoms for i in comp}
    live = sorted(i for i in range(n))
    trans = [i for i in live if i not in in_bottom]
    eta_t = eta_a = eta / 2
    k = 0
    if trans:
        pos = {i: r for r, i in enumerate(trans)}
        A = np.eye(len(trans))
        for i in trans:
            for j, _, p in ch.edges[i]:
                if j in pos:
                    A[pos[i], pos[j]] -= float(p)
        tau = np.linalg.solve(A, np.ones(len(trans)))
        expected = sum(float(p) * tau[pos[i]] for i, p in ch.initial.items() if i in pos)
        k = math.ceil(expected / eta_t)
    if k >= horizon:
        return 2 * W, eta
    worst = 0.0
    for comp in bottoms:
        pos = {i: r for r, i in enumerate(comp)}
        m = len(comp)
        P = np.zeros((m, m))
        rbar = np.zeros(m)
        for i in comp:
            s = ch.nodes[i][0]
            for j, a, p in ch.edges[i]:
                P[pos[i], pos[j]] += float(p)
                rbar[pos[i]] += float(p) * float(mdp.actions[s][a].weights[dim])
        # h + g 1 = r + P h, h[0] = 0
        M = np.zeros((m, m))
        M[:, :m - 1] = (np.eye(m) - P)[:, 1:]
        M[:, m - 1] = 1.0
        sol = np.linalg.lstsq(M, rbar, rcond=None)[0]
        h = np.concatenate([[0.0], sol[:m - 1]])
        ph = P @ h
        c = 0.0
        for i in comp:
            s = ch.nodes[i][0]
            for j, a, p in ch.edges[i]:
                w = float(mdp.actions[s][a].weights[dim])
                c = max(c, abs(w - rbar[pos[i]] + h[pos[j]] - ph[pos[i]]))
        span = float(h.max() - h.min())
        fluct = c * math.sqrt(2 * horizon * math.log((k + 1) / eta_a))
        worst = max(worst, (2 * W * k + span + fluct) / horizon)
    return worst, eta


def _episode_values(mdp, runs: Runs, wt: np.ndarray, c: PercentileConstraint):
    """Per-episode payoff of the prefix (inf when a truncated-sum target is missed)."""
    w = wt[runs.states[:, :-1], runs.actions, c.dim]
    k = c.kind
    if k == "inf":
        return w.min(axis=1)
    if k == "sup":
        return w.max(axis=1)
    if k == "liminf":
        return w[:, w.shape[1] // 2:].min(axis=1)
    if k == "limsup":
        return w[:, w.shape[1] // 2:].max(axis=1)
    if k in ("mp_inf", "mp_sup"):
        return w.mean(axis=1)
    if k == "truncated_sum":
        hit = np.isin(runs.states, list(c.target))
        first = np.where(hit.any(axis=1), hit.argmax(axis=1), -1)
        csum = np.concatenate([np.zeros((w.shape[0], 1)), np.cumsum(w, axis=1)], axis=1)
        out = np.full(w.shape[0], np.inf)
        ok = first >= 0
        out[ok] = csum[np.nonzero(ok)[0], first[ok]]
        return out
    if k == "discounted_sum":
        coeff = float(c.discount) ** np.arange(1, w.shape[1] + 1)
        return w @ coeff
    raise ValueError(k)


def estimate_percentiles(mdp: WeightedMdp, strategy, constraints: Sequence[PercentileConstraint],
                         horizon: int = 200, episodes: int = 10_000, seed: int = 0,
                         level: float = 0.99, init: Optional[int] = None,
                         runs: Optional[Runs] = None, eta: float = 0.005) -> SimulationReport:
    if runs is None:
        runs = simulate_runs(mdp, strategy, init, horizon, episodes, seed)
    wt = _weight_table(mdp)
    ch = None
    out = []
    for c in constraints:
        vals = _episode_values(mdp, runs, wt, c)
        vslack, pslack, note = 0.0, 0.0, ""
        v = float(c.value)
        if c.kind == "truncated_sum":
            good = vals <= v
            missed = int(np.isinf(vals).sum())
            note = "%d episodes missed the target within the horizon" % missed if missed else ""
        else:
            if c.kind in ("mp_inf", "mp_sup"):
                if ch is None:
                    ch = induced_chain(mdp, strategy, init)
                vslack, pslack = mean_payoff_slack(mdp, ch, c.dim, runs.horizon, eta)
                note = "horizon average judged against value - slack"
            elif c.kind == "discounted_sum":
                vslack = float(discounted_tail_bound(mdp, c.discount, runs.horizon))
                note = "prefix sum judged against value - tail bound"
            elif c.kind in ("liminf", "limsup"):
                note = "judged on the second half of the horizon"
            elif c.kind == "inf":
                note = "prefix minimum (over-approximates)"
            good = vals >= v - vslack - 1e-12
        k = int(good.sum())
        lo, hi = clopper_pearson(k, runs.episodes, level)
        out.append(ConstraintEstimate(c, k, runs.episodes, lo, hi, vslack, pslack, note))
    return SimulationReport(out, runs.episodes, runs.horizon, runs.seed, level)


# ----------------------------------------------------------------------------
# exact verification


@dataclass
class ExactCheck:
    constraint: PercentileConstraint
    lower: Fraction
    upper: Fraction

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def certified(self) -> bool:
        return self.lower >= self.constraint.prob

    @property
    def refuted(self) -> bool:
        return self.upper < self.constraint.prob


def exact_verify_finite(mdp: WeightedMdp, strategy, constraints: Sequence[PercentileConstraint],
                        init: Optional[int] = None, max_ds_depth: int = 40) -> List[ExactCheck]:
    """Exact satisfaction probabilities on the induced chain.

    Discounted sums get certified bounds, deepened until they decide the
    threshold or ``max_ds_depth`` is reached.
    """
    ch = strategy_chain(mdp, strategy, init)
    out = []
    for c in constraints:
        if c.kind == "discounted_sum":
            depth = 4
            while True:
                lo, hi = constraint_probability(mdp, ch, c, depth)
                if lo >= c.prob or hi < c.prob or depth >= max_ds_depth:
                    break
                depth = min(max_ds_depth, depth * 2)
            out.append(ExactCheck(c, lo, hi))
        else:
            p = constraint_probability(mdp, ch, c)
            out.append(ExactCheck(c, p, p))
    return out


def reach_probability_of(mdp: WeightedMdp, strategy, targets, init=None) -> Fraction:
    """Exact probability of visiting ``targets`` under a finite strategy."""
    from .chain import reach_probability
    ch = strategy_chain(mdp, strategy, init)
    targets = set(targets)
    return reach_probability(ch, [i for i, lab in enumerate(ch.labels) if lab[0] in targets])


# ----------------------------------------------------------------------------
# memory


@dataclass
class MemoryReport:
    used: int  # memory elements the strategy reaches
    classes: int  # behaviourally distinct (state, memory) classes in total
    lower_bound: int  # max over states of distinct classes there
    per_state: Dict[int, int] = field(default_factory=dict)


def minimize_memory(mdp: WeightedMdp, strategy, init: Optional[int] = None) -> MemoryReport:
    """Partition refinement of reachable (state, memory) pairs by future behaviour.

    Two pairs are merged when they prescribe the same action distribution
    and, for every action and successor, the same distribution over
    classes.  Any Moore strategy with the same behaviour from the initial
    state needs at least as many memory elements as there are classes at
    the busiest state, which gives the reported lower bound.
    """
    ch = induced_chain(mdp, strategy, init)
    nodes = ch.nodes
    act_sig = {}
    for i, (s, m) in enumerate(nodes):
        act_sig[i] = (s, tuple(sorted(strategy.next_action(s, m).items())))
    # transitions per node: (action, successor state) -> {node: prob}
    moves: List[Dict[Tuple[int, int], Dict[int, Fraction]]] = []
    for i, (s, m) in enumerate(nodes):
        d: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        for a in strategy.next_action(s, m):
            for t, _ in mdp.actions[s][a].succ:
                for n, q in strategy.next_memory(s, m, a, t).items():
                    j = ch.index[(t, n)]
                    dd = d.setdefault((a, t), {})
                    dd[j] = dd.get(j, Fraction(0)) + q
        moves.append(d)
    block = _relabel([act_sig[i] for i in range(len(nodes))])
    while True:
        sig = []
        for i in range(len(nodes)):
            parts = []
            for key in sorted(moves[i]):
                agg: Dict[int, Fraction] = {}
                for j, q in moves[i][key].items():
                    agg[block[j]] = agg.get(block[j], Fraction(0)) + q
                parts.append((key, tuple(sorted(agg.items()))))
            sig.append((block[i], tuple(parts)))
        new = _relabel(sig)
        if len(set(new)) == len(set(block)):
            break
        block = new
    per_state: Dict[int, set] = {}
    for i, (s, _) in enumerate(nodes):
        per_state.setdefault(s, set()).add(block[i])
    counts = {s: len(b) for s, b in per_state.items()}
    used = len({m for _, m in nodes})
    return MemoryReport(used, len(set(block)), max(counts.values()), counts)


def _relabel(sigs) -> List[int]:
    ids: Dict[Hashable, int] = {}
    return [ids.setdefault(s, len(ids)) for s in sigs]
