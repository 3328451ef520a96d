"""JSON model, query and strategy files.

Rationals travel as "num/den" strings (plain integers are accepted as
shorthand).  Floats are refused everywhere a solver reads a number.
Errors carry the JSON path of the offending field and, for syntax
errors, the line and column.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Hashable, List, Optional, Tuple, Union

from .model import (KINDS, Action, MooreStrategy, PercentileConstraint, PercentileQuery, WeightedMdp,
                    validate_mdp)

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class DataError(ValueError):
    """Malformed input file; ``where`` is a JSON path such as ``actions[2].to[0].prob``."""

    def __init__(self, message: str, where: str = "", source: str = ""):
        self.message = message
        self.where = where
        self.source = source
        prefix = ":".join(p for p in (source, where) if p)
        super().__init__("%s: %s" % (prefix, message) if prefix else message)

    def at(self, source: str) -> "DataError":
        return DataError(self.message, self.where, self.source or source)


def parse_rational(x, where: str = "") -> Fraction:
    if isinstance(x, bool):
        raise DataError("expected a rational, got %r" % (x,), where)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        raise DataError("floats are not accepted (%r); write \"p/q\"" % (x,), where)
    if isinstance(x, str):
        m = _RATIONAL.match(x)
        if m:
            den = int(m.group(2)) if m.group(2) else 1
            if den == 0:
                raise DataError("zero denominator in %r" % (x,), where)
            return Fraction(int(m.group(1)), den)
    raise DataError("bad rational %r" % (x,), where)


def format_rational(x) -> Union[str, int]:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)


def _load(source) -> Tuple[Any, str]:
    if isinstance(source, (dict, list)):
        return source, ""
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError("cannot read file (%s)" % e.strerror, source=str(path)) from None
    try:
        return json.loads(text), str(path)
    except json.JSONDecodeError as e:
        raise DataError("invalid JSON: %s" % e.msg, "line %d column %d" % (e.lineno, e.colno),
                        str(path)) from None


def _field(obj, key, where, kind=None, optional=False):
    if not isinstance(obj, dict):
        raise DataError("expected an object", where)
    if key not in obj:
        if optional:
            return None
        raise DataError("missing field %r" % key, where)
    v = obj[key]
    if kind is not None and not isinstance(v, kind) or isinstance(v, bool) and kind is int:
        raise DataError("expected %s" % getattr(kind, "__name__", kind), "%s.%s" % (where, key) if where else key)
    return v


# ----------------------------------------------------------------------------
# models


def model_from_json(doc, source: str = "") -> WeightedMdp:
    try:
        return _model_from_json(doc)
    except DataError as e:
        raise e.at(source) from None


def _model_from_json(doc) -> WeightedMdp:
    d = _field(doc, "dimensions", "", int)
    if d < 1:
        raise DataError("need at least one dimension", "dimensions")
    states = _field(doc, "states", "", list)
    for i, s in enumerate(states):
        if not isinstance(s, str):
            raise DataError("state names must be strings", "states[%d]" % i)
    seen = {}
    for i, s in enumerate(states):
        if s in seen:
            raise DataError("duplicate state name %r (first at states[%d])" % (s, seen[s]), "states[%d]" % i)
        seen[s] = i
    if not states:
        raise DataError("no states", "states")
    initial = _field(doc, "initial", "", str)
    if initial not in seen:
        raise DataError("unknown state %r" % initial, "initial")
    rows: List[List[Action]] = [[] for _ in states]
    for k, a in enumerate(_field(doc, "actions", "", list)):
        where = "actions[%d]" % k
        src = _field(a, "from", where, str)
        if src not in seen:
            raise DataError("unknown state %r" % src, where + ".from")
        name = _field(a, "name", where, str)
        if any(b.name == name for b in rows[seen[src]]):
            raise DataError("duplicate action %r at state %r" % (name, src), where + ".name")
        weights = _field(a, "weights", where, list)
        if len(weights) != d:
            raise DataError("%d weights for %d dimensions" % (len(weights), d), where + ".weights")
        for j, w in enumerate(weights):
            if isinstance(w, bool) or not isinstance(w, int):
                raise DataError("weights must be integers", "%s.weights[%d]" % (where, j))
        succ: Dict[int, Fraction] = {}
        to = _field(a, "to", where, list)
        if not to:
            raise DataError("empty distribution", where + ".to")
        for j, e in enumerate(to):
            w2 = "%s.to[%d]" % (where, j)
            t = _field(e, "state", w2, str)
            if t not in seen:
                raise DataError("unknown state %r" % t, w2 + ".state")
            p = parse_rational(_field(e, "prob", w2), w2 + ".prob")
            if not 0 < p <= 1:
                raise DataError("probability %s outside (0,1]" % p, w2 + ".prob")
            succ[seen[t]] = succ.get(seen[t], Fraction(0)) + p
        total = sum(succ.values(), Fraction(0))
        if total != 1:
            raise DataError("probabilities sum to %s, not 1" % total, where + ".to")
        rows[seen[src]].append(Action(name, tuple(weights), tuple(sorted(succ.items()))))
    for s, row in enumerate(rows):
        if not row:
            raise DataError("state %r has no actions" % states[s], "actions")
    mdp = WeightedMdp(tuple(states), tuple(tuple(r) for r in rows), d, seen[initial])
    problems = validate_mdp(mdp)
    if problems:  # pragma: no cover - the checks above should have caught these
        raise DataError("; ".join(problems))
    return mdp


def parse_model(source) -> WeightedMdp:
    """Read a model file (path) or an already decoded JSON document."""
    doc, name = _load(source)
    return model_from_json(doc, name)


def model_to_json(mdp: WeightedMdp) -> dict:
    acts = []
    for s, row in enumerate(mdp.actions):
        for a in row:
            acts.append({"from": mdp.states[s], "name": a.name, "weights": list(a.weights),
                         "to": [{"state": mdp.states[t], "prob": format_rational(p)} for t, p in a.succ]})
    return {"dimensions": mdp.dim, "states": list(mdp.states), "initial": mdp.states[mdp.initial],
            "actions": acts}


# ----------------------------------------------------------------------------
# queries


def query_from_json(doc, mdp: WeightedMdp, source: str = "") -> PercentileQuery:
    try:
        return _query_from_json(doc, mdp)
    except DataError as e:
        raise e.at(source) from None


def _query_from_json(doc, mdp: WeightedMdp) -> PercentileQuery:
    default = _field(doc, "payoff", "", str, optional=True)
    if default is not None and default not in KINDS:
        raise DataError("unknown payoff %r (one of %s)" % (default, ", ".join(KINDS)), "payoff")
    eps = doc.get("epsilon")
    eps = None if eps is None else parse_rational(eps, "epsilon")
    init = doc.get("initial")
    if init is not None:
        if not isinstance(init, str) or init not in mdp.states:
            raise DataError("unknown state %r" % (init,), "initial")
        init = mdp.states.index(init)
    blocks = _field(doc, "disjuncts", "", list)
    if not blocks:
        raise DataError("no disjuncts", "disjuncts")
    out = []
    for b, block in enumerate(blocks):
        if not isinstance(block, list) or not block:
            raise DataError("a disjunct is a nonempty list of constraints", "disjuncts[%d]" % b)
        cons = []
        for i, c in enumerate(block):
            cons.append(_constraint(c, "disjuncts[%d][%d]" % (b, i), default, mdp))
        out.append(tuple(cons))
    return PercentileQuery(tuple(out), init, eps)


def _constraint(c, where, default, mdp) -> PercentileConstraint:
    kind = _field(c, "payoff", where, str, optional=True) or default
    if kind is None:
        raise DataError("no payoff kind given (top-level or per constraint)", where)
    if kind not in KINDS:
        raise DataError("unknown payoff %r" % kind, where + ".payoff")
    dim = _field(c, "dim", where, int)
    if not 0 <= dim < mdp.dim:
        raise DataError("dimension %d outside 0..%d" % (dim, mdp.dim - 1), where + ".dim")
    value = parse_rational(_field(c, "value", where), where + ".value")
    prob = parse_rational(_field(c, "prob", where), where + ".prob")
    if not 0 <= prob <= 1:
        raise DataError("probability threshold %s outside [0,1]" % prob, where + ".prob")
    target = c.get("target")
    if kind == "truncated_sum":
        if not isinstance(target, list) or not target:
            raise DataError("truncated sums need a nonempty target list", where + ".target")
        for j, t in enumerate(target):
            if t not in mdp.states:
                raise DataError("unknown state %r" % (t,), "%s.target[%d]" % (where, j))
        target = frozenset(mdp.states.index(t) for t in target)
    elif target is not None:
        raise DataError("target only applies to truncated_sum", where + ".target")
    discount = c.get("discount")
    if kind == "discounted_sum":
        if discount is None:
            raise DataError("discounted sums need a discount", where + ".discount")
        discount = parse_rational(discount, where + ".discount")
        if not 0 < discount < 1:
            raise DataError("discount %s outside (0,1)" % discount, where + ".discount")
    elif discount is not None:
        raise DataError("discount only applies to discounted_sum", where + ".discount")
    return PercentileConstraint(kind, dim, value, prob, target, discount)


def parse_query(source, mdp: WeightedMdp) -> PercentileQuery:
    doc, name = _load(source)
    return query_from_json(doc, mdp, name)


def constraint_to_json(c: PercentileConstraint, mdp: WeightedMdp) -> dict:
    d = {"payoff": c.kind, "dim": c.dim, "value": format_rational(c.value), "prob": format_rational(c.prob)}
    if c.target is not None:
        d["target"] = [mdp.states[t] for t in sorted(c.target)]
    if c.discount is not None:
        d["discount"] = format_rational(c.discount)
    return d


def query_to_json(q: PercentileQuery, mdp: WeightedMdp) -> dict:
    kinds = {c.kind for b in q.disjuncts for c in b}
    doc: Dict[str, Any] = {}
    if len(kinds) == 1:
        doc["payoff"] = kinds.pop()
    if q.epsilon is not None:
        doc["epsilon"] = format_rational(q.epsilon)
    if q.initial is not None:
        doc["initial"] = mdp.states[q.initial]
    blocks = []
    for b in q.disjuncts:
        cons = []
        for c in b:
            d = constraint_to_json(c, mdp)
            if "payoff" in doc:
                del d["payoff"]
            cons.append(d)
        blocks.append(cons)
    doc["disjuncts"] = blocks
    return doc


# ----------------------------------------------------------------------------
# strategies


def strategy_to_json(strategy: MooreStrategy, mdp: WeightedMdp) -> dict:
    """Memory elements are renumbered 0, 1, ... in order of first appearance."""
    ids: Dict[Hashable, int] = {}

    def mid(m):
        if m not in ids:
            ids[m] = len(ids)
        return ids[m]

    initial = [{"memory": mid(m), "prob": format_rational(p)} for m, p in strategy.initial.items()]
    act = []
    for (s, m), d in strategy.act.items():
        act.append({"state": mdp.states[s], "memory": mid(m),
                    "actions": [{"action": mdp.actions[s][a].name, "prob": format_rational(p)}
                                for a, p in sorted(d.items())]})
    upd = []
    for (s, m, a, t), d in strategy.upd.items():
        upd.append({"state": mdp.states[s], "memory": mid(m), "action": mdp.actions[s][a].name,
                    "to": mdp.states[t],
                    "next": [{"memory": mid(n), "prob": format_rational(p)} for n, p in d.items()]})
    return {"kind": "moore", "initial_state": mdp.states[strategy.init], "memory_size": len(ids),
            "initial_memory": initial, "act": act, "update": upd}


def _dist(entries, where, key, resolve) -> Dict[Any, Fraction]:
    if not isinstance(entries, list) or not entries:
        raise DataError("expected a nonempty list", where)
    out: Dict[Any, Fraction] = {}
    for j, e in enumerate(entries):
        w = "%s[%d]" % (where, j)
        k = resolve(_field(e, key, w), w + "." + key)
        p = parse_rational(_field(e, "prob", w), w + ".prob")
        if p <= 0:
            raise DataError("probability must be positive", w + ".prob")
        out[k] = out.get(k, Fraction(0)) + p
    if sum(out.values(), Fraction(0)) != 1:
        raise DataError("probabilities do not sum to 1", where)
    return out


def strategy_from_json(doc, mdp: WeightedMdp, source: str = "") -> MooreStrategy:
    try:
        return _strategy_from_json(doc, mdp)
    except DataError as e:
        raise e.at(source) from None


def _strategy_from_json(doc, mdp: WeightedMdp) -> MooreStrategy:
    kind = _field(doc, "kind", "", str)
    if kind != "moore":
        raise DataError("only finite-memory ('moore') strategies can be loaded, got %r" % kind, "kind")

    def state(x, where):
        if x not in mdp.states:
            raise DataError("unknown state %r" % (x,), where)
        return mdp.states.index(x)

    def memory(x, where):
        if isinstance(x, bool) or not isinstance(x, int):
            raise DataError("memory ids are integers", where)
        return x

    init = state(_field(doc, "initial_state", ""), "initial_state")
    initial = _dist(_field(doc, "initial_memory", ""), "initial_memory", "memory", memory)
    act, upd = {}, {}
    for i, e in enumerate(_field(doc, "act", "", list)):
        w = "act[%d]" % i
        s = state(_field(e, "state", w), w + ".state")
        m = memory(_field(e, "memory", w), w + ".memory")

        def action(x, where, s=s):
            try:
                return mdp.action_index(s, x)
            except KeyError:
                raise DataError("state %r has no action %r" % (mdp.states[s], x), where) from None
        act[(s, m)] = _dist(_field(e, "actions", w), w + ".actions", "action", action)
    for i, e in enumerate(_field(doc, "update", "", list)):
        w = "update[%d]" % i
        s = state(_field(e, "state", w), w + ".state")
        m = memory(_field(e, "memory", w), w + ".memory")
        try:
            a = mdp.action_index(s, _field(e, "action", w))
        except KeyError:
            raise DataError("state %r has no action %r" % (mdp.states[s], e["action"]), w + ".action") from None
        t = state(_field(e, "to", w), w + ".to")
        upd[(s, m, a, t)] = _dist(_field(e, "next", w), w + ".next", "memory", memory)
    strategy = MooreStrategy(init, initial, act, upd)
    _check_closed(strategy, mdp)
    return strategy


def _check_closed(strategy: MooreStrategy, mdp: WeightedMdp):
    """Every reachable (state, memory) pair and every update it needs must be defined."""
    todo = [(strategy.init, m) for m in strategy.initial]
    seen = set(todo)
    while todo:
        s, m = todo.pop()
        if (s, m) not in strategy.act:
            raise DataError("no action distribution for state %r memory %d" % (mdp.states[s], m), "act")
        for a in strategy.act[(s, m)]:
            for t, _ in mdp.actions[s][a].succ:
                key = (s, m, a, t)
                if key not in strategy.upd:
                    raise DataError("no memory update for state %r memory %d action %r successor %r"
                                    % (mdp.states[s], m, mdp.actions[s][a].name, mdp.states[t]), "update")
                for n in strategy.upd[key]:
                    if (t, n) not in seen:
                        seen.add((t, n))
                        todo.append((t, n))


def parse_strategy(source, mdp: WeightedMdp) -> MooreStrategy:
    doc, name = _load(source)
    return strategy_from_json(doc, mdp, name)


# ----------------------------------------------------------------------------
# certificates and reports


def to_jsonable(x):
    """Fractions become "p/q" strings, sets sorted lists, tuple-keyed dicts lists of pairs."""
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return x
    if is_dataclass(x) and not isinstance(x, type):
        return to_jsonable(asdict(x))
    if isinstance(x, dict):
        if all(isinstance(k, str) for k in x):
            return {k: to_jsonable(v) for k, v in x.items()}
        if all(isinstance(k, int) for k in x):
            return {str(k): to_jsonable(v) for k, v in x.items()}
        return [[to_jsonable(k), to_jsonable(v)] for k, v in x.items()]
    if isinstance(x, (set, frozenset)):
        items = [to_jsonable(v) for v in x]
        try:
            return sorted(items)
        except TypeError:
            return items
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalars
        return x.item()
    return repr(x)


def dumps(x) -> str:
    return json.dumps(to_jsonable(x), indent=2, ensure_ascii=False)


SCHEMAS = {
    "model": {
        "dimensions": "d >= 1",
        "states": ["name", "..."],
        "initial": "name",
        "actions": [{"from": "name", "name": "action", "weights": ["int (d entries)"],
                     "to": [{"state": "name", "prob": "p/q or integer"}]}],
    },
    "query": {
        "payoff": "|".join(KINDS) + " (default for every constraint)",
        "epsilon": "p/q, required for discounted_sum, optional relaxation for mean payoff",
        "initial": "name (optional, defaults to the model's initial state)",
        "disjuncts": [[{"payoff": "optional per-constraint override", "dim": "0-based dimension",
                        "value": "p/q", "prob": "p/q in [0,1]",
                        "target": ["name (truncated_sum only)"], "discount": "p/q in (0,1) (discounted_sum only)"}]],
    },
    "strategy": {
        "kind": "moore",
        "initial_state": "name",
        "memory_size": "int",
        "initial_memory": [{"memory": "int", "prob": "p/q"}],
        "act": [{"state": "name", "memory": "int", "actions": [{"action": "name", "prob": "p/q"}]}],
        "update": [{"state": "name", "memory": "int", "action": "name", "to": "name",
                    "next": [{"memory": "int", "prob": "p/q"}]}],
    },
}
