"""SLD resolution with a growing constraint network.

The machine is an explicit-stack depth-first interpreter: a state is a
cons-list of pending entries, a substitution, a network, and the current
derivation depth. Clause choice pushes an alternatives frame; cut
truncates the alternatives stack back to the height recorded when the
calling goal was selected. Bindings that touch constrained variables are
routed into the network after every unification: variable-variable
bindings merge or retarget nodes, ground bindings become evidence.

findall/setof run the sub-goal in a nested machine sharing the id
counter, then union the solution networks into the caller's store,
deduplicating nodes by ground label.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .errors import (
    AggregatorError,
    ArithmeticGoalError,
    EngineError,
    EvidenceConflictError,
    FindallMergeError,
    LimitExceededError,
    MalformedCptError,
    NetworkCycleError,
)
from .network import MERGE_TOLERANCE, ConstraintNetwork
from .parser import term_to_text
from .program import Program, cpt_spec_from_term, parse_query
from .terms import (
    EMPTY_SUBST,
    Atom,
    FreshVars,
    Struct,
    Subst,
    Term,
    Var,
    is_ground,
    is_number,
    list_items,
    mklist,
    rename_term,
    term_equal,
    term_sort_key,
    unify,
    unify_trail,
    vars_of,
)

DEFAULT_DEPTH_LIMIT = 10_000

_COMPARISONS = {"<", ">", "=<", ">=", "=:=", "=\\="}
_BUILTIN_KEYS = {
    ("true", 0),
    ("fail", 0),
    ("=", 2),
    ("is", 2),
    ("findall", 3),
    ("setof", 3),
    ("average", 2),
    ("mean", 2),
    ("aggregate_cpt", 5),
} | {(op, 2) for op in _COMPARISONS}


@dataclass
class Answer:
    """One solution: resolved query bindings plus the final network."""

    bindings: dict[str, Term]
    network: ConstraintNetwork
    query_nodes: dict[str, int]  # query variables that ended up constrained
    subst: Subst = field(repr=False, default=EMPTY_SUBST)

    def binding_text(self) -> dict[str, str]:
        return {name: term_to_text(t) for name, t in self.bindings.items()}


def _cons(entries: list, rest=None):
    out = rest
    for e in reversed(entries):
        out = (e, out)
    return out


class Engine:
    """Resolution engine for one program. Reusable across queries; each
    query draws node and variable ids from the shared counter."""

    def __init__(self, program: Program, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> None:
        program.ensure_valid()
        self.program = program
        self.depth_limit = depth_limit
        self.ids = FreshVars()
        self.declared_evidence: dict[str, Term] = {}
        for label, value in program.evidence:
            if is_ground(label):
                self.declared_evidence[term_to_text(label)] = value
        # Head argument positions that hold a constraint variable in some
        # clause: a ground query argument there is evidence, not a filter.
        self._evidence_positions: dict[tuple[str, int], set[int]] = {}
        for clause in program.clauses:
            if not clause.constraints or not isinstance(clause.head, Struct):
                continue
            cvar_ids = {c.var.id for c in clause.constraints}
            for pos, arg in enumerate(clause.head.args):
                if isinstance(arg, Var) and arg.id in cvar_ids:
                    self._evidence_positions.setdefault(clause.key, set()).add(pos)

    # --- public API -----------------------------------------------------

    def solve_text(self, query: str, limit: Optional[int] = None) -> Iterator[Answer]:
        goals, varmap = parse_query(query)
        return self.solve_goals(goals, varmap, limit)

    def solve_goals(
        self,
        goals: list[Term],
        varmap: dict[str, Var],
        limit: Optional[int] = None,
    ) -> Iterator[Answer]:
        mapping: dict[int, Var] = {}
        renamed = [rename_term(g, mapping, self.ids) for g in goals]
        qvars = {name: mapping[v.id] for name, v in varmap.items() if v.id in mapping}
        entries: list = []
        for g in renamed:
            g2, ev = self._extract_evidence(g)
            entries.append(("goal", g2, 0))
            for ev_var, value in ev:
                entries.append(("evidence", ev_var, value))
        init = _cons(entries)
        net0 = self.base_network()
        s0 = EMPTY_SUBST
        if self.program.evidence:
            # Declared evidence conditions every query, so the observed
            # nodes must be in the network before the query runs. Derive
            # them once, committing to the first derivation.
            pre_entries = [
                ("goal", g, 0) for g in self._evidence_derivation_goals()
            ]
            pre = next(
                self._solutions(_cons(pre_entries), EMPTY_SUBST, net0, 0), None
            )
            if pre is None:
                return
            s0, net0 = pre
        count = 0
        for s, n in self._solutions(init, s0, net0, 0):
            frozen = n.apply_substitution(s)
            if frozen is None:
                continue
            ok, cycle = frozen.check_acyclic()
            if not ok:
                raise NetworkCycleError("answer network is cyclic", cycle)
            bindings = {name: s.resolve(v) for name, v in qvars.items()}
            query_nodes = {}
            for name, v in qvars.items():
                w = s.walk(v)
                if isinstance(w, Var):
                    nid = frozen.binding.get(w.id)
                    if nid is not None and nid in frozen.nodes:
                        query_nodes[name] = nid
            yield Answer(bindings, frozen, query_nodes, s)
            count += 1
            if limit is not None and count >= limit:
                return

    def base_network(self) -> ConstraintNetwork:
        return ConstraintNetwork(
            skolem_functors=set(self.program.skolem_registry),
            skolem_constants=self.program.skolem_constants,
        )

    def _evidence_derivation_goals(self) -> list[Term]:
        """One goal per evidence directive that derives the observed node.

        The directive names a ground random-variable label; the goal is the
        head of the clause introducing that label's functor, specialized by
        unifying the clause's written label against the directive's."""
        goals: list[Term] = []
        for label, _value in self.program.evidence:
            if isinstance(label, Struct):
                key = (label.functor, label.arity)
            elif isinstance(label, Atom):
                key = (label.name, 0)
            else:
                raise EngineError(
                    f"evidence label must be a ground term: {term_to_text(label)}"
                )
            intros = self.program._skolem_intros.get(key)
            if not intros:
                raise EngineError(
                    f"evidence declared on {term_to_text(label)}, but no "
                    "clause introduces that random variable"
                )
            goal = None
            for ci, _cj, sk in intros:
                clause = self.program.clauses[ci]
                mapping: dict[int, Var] = {}
                head2 = rename_term(clause.head, mapping, self.ids)
                sk2 = rename_term(sk, mapping, self.ids)
                s = unify(sk2, label, EMPTY_SUBST)
                if s is None:
                    continue
                candidate = s.resolve(head2)
                # Callable only if the label pins down everything except the
                # constraint variables; otherwise the clause needs arguments
                # a caller would have to supply.
                cvars = {
                    mapping[c.var.id].id
                    for c in clause.constraints
                    if c.var.id in mapping
                }
                if all(v.id in cvars for v in vars_of(candidate)):
                    goal = candidate
                    break
            if goal is None:
                raise EngineError(
                    f"no clause can derive the evidence node "
                    f"{term_to_text(label)} from its label alone; enter this "
                    "observation through a query argument instead"
                )
            goals.append(goal)
        return goals

    def union_network(
        self,
        driver_goals: list[Term],
        start: Optional[ConstraintNetwork] = None,
    ) -> tuple[ConstraintNetwork, list[Term]]:
        """Union the networks of every solution of every driver goal,
        deduplicating nodes by ground label. Returns the combined network
        and the resolved driver-goal instances (one per solution)."""
        net = start if start is not None else self.base_network()
        instances: list[Term] = []
        for g in driver_goals:
            mapping: dict[int, Var] = {}
            g2 = rename_term(g, mapping, self.ids)
            net, items = self._collect(g2, g2, EMPTY_SUBST, net, 0)
            instances.extend(items)
        return net, instances

    # --- evidence preprocessing ------------------------------------------

    def _extract_evidence(self, goal: Term) -> tuple[Term, list[tuple[Var, Term]]]:
        if not isinstance(goal, Struct):
            return goal, []
        positions = self._evidence_positions.get((goal.functor, goal.arity))
        if not positions:
            return goal, []
        args = list(goal.args)
        out: list[tuple[Var, Term]] = []
        for pos in sorted(positions):
            a = args[pos]
            if is_ground(a) and not self.program.has_skolem_subterm(a):
                e = self.ids.new()
                args[pos] = e
                out.append((e, a))
        if not out:
            return goal, []
        return Struct(goal.functor, tuple(args)), out

    # --- the machine ------------------------------------------------------

    def _solutions(
        self, init, subst: Subst, net: ConstraintNetwork, depth: int
    ) -> Iterator[tuple[Subst, ConstraintNetwork]]:
        alts: list[tuple] = []
        state: Optional[tuple] = (init, subst, net, depth)
        while True:
            if state is None:
                if not alts:
                    return
                goal, barrier, clauses, idx, rest, s0, n0, d0 = alts.pop()
                if idx + 1 < len(clauses):
                    alts.append((goal, barrier, clauses, idx + 1, rest, s0, n0, d0))
                state = self._try_clause(clauses[idx], goal, barrier, rest, s0, n0, d0)
                continue
            goals, s, n, d = state
            if goals is None:
                yield s, n
                state = None
                continue
            entry, rest = goals
            if entry[0] == "evidence":
                state = self._query_evidence(entry[1], entry[2], rest, s, n, d)
                continue
            g = s.walk(entry[1])
            barrier = entry[2]
            if isinstance(g, Var):
                raise EngineError("goal is an unbound variable")
            if is_number(g):
                raise EngineError(f"goal is not callable: {term_to_text(g)}")
            key = (g.functor, g.arity) if isinstance(g, Struct) else (g.name, 0)
            if key == ("!", 0):
                del alts[barrier:]
                state = (rest, s, n, d)
                continue
            if key == (",", 2):
                state = (
                    _cons([("goal", g.args[0], barrier), ("goal", g.args[1], barrier)], rest),
                    s,
                    n,
                    d,
                )
                continue
            if key == ("^", 2):
                state = ((("goal", g.args[1], barrier), rest), s, n, d)
                continue
            if key == ("{}", 1):
                state = self._post(g, rest, s, n, d)
                continue
            if key in _BUILTIN_KEYS:
                state = self._builtin(key, g, rest, s, n, d)
                continue
            clause_ids = self.program.index.get(key)
            if not clause_ids:
                state = None
                continue
            clauses = [self.program.clauses[i] for i in clause_ids]
            alts.append((g, len(alts), clauses, 0, rest, s, n, d))
            state = None

    def _try_clause(self, clause, goal, barrier, rest, s, n, d):
        if d + 1 > self.depth_limit:
            raise LimitExceededError(
                f"derivation depth exceeded the limit of {self.depth_limit} frames"
            )
        mapping: dict[int, Var] = {}
        head = rename_term(clause.head, mapping, self.ids)
        r = unify_trail(head, goal, s)
        if r is None:
            return None
        s2, trail = r
        absorbed = self._absorb(n, s2, trail)
        if absorbed is None:
            return None
        n2, s2 = absorbed
        goals = _cons(
            [("goal", rename_term(g, mapping, self.ids), barrier) for g in clause.body],
            rest,
        )
        return (goals, s2, n2, d + 1)

    def _absorb(
        self, net: ConstraintNetwork, subst: Subst, trail: list[tuple[Var, Term]]
    ) -> Optional[tuple[ConstraintNetwork, Subst]]:
        """Route new bindings of constrained variables into the network."""
        queue = list(trail)
        while queue:
            v, t = queue.pop(0)
            nid = net.binding.get(v.id)
            if nid is None or nid not in net.nodes:
                continue
            tw = subst.walk(t)
            if isinstance(tw, Var):
                other = net.binding.get(tw.id)
                if other is None:
                    net = net.copy()
                    net.binding[tw.id] = nid
                elif other != nid:
                    merged = net._merge_nodes(nid, other, subst)
                    if merged is None:
                        return None
                    net, subst, extra, _survivor = merged
                    queue.extend(extra)
                continue
            value = subst.resolve(tw)
            if is_ground(value):
                try:
                    n2 = net.set_evidence(nid, value)
                except EvidenceConflictError:
                    return None
                if n2 is None:
                    return None
                net = n2
            else:
                node = net.nodes[nid]
                keep = [
                    i
                    for i, val in enumerate(node.domain)
                    if unify(val, value) is not None
                ]
                n2 = net.restrict_node_domain(nid, keep)
                if n2 is None:
                    return None
                net = n2
        return net, subst

    def _unify_goal(self, a: Term, b: Term, rest, s, n, d):
        r = unify_trail(a, b, s)
        if r is None:
            return None
        s2, trail = r
        absorbed = self._absorb(n, s2, trail)
        if absorbed is None:
            return None
        n2, s2 = absorbed
        return (rest, s2, n2, d)

    def _query_evidence(self, ev_var: Var, value: Term, rest, s, n, d):
        w = s.walk(ev_var)
        if isinstance(w, Var):
            nid = n.binding.get(w.id)
            if nid is not None and nid in n.nodes:
                try:
                    n2 = n.set_evidence(nid, value)
                except EvidenceConflictError:
                    return None
                if n2 is None:
                    return None
                return (rest, s, n2, d)
        return self._unify_goal(ev_var, value, rest, s, n, d)

    # --- constraint posting -----------------------------------------------

    def _post(self, g: Struct, rest, s, n, d):
        inner = g.args[0]
        if not (
            isinstance(inner, Struct)
            and inner.functor == "with"
            and inner.arity == 2
            and isinstance(inner.args[0], Struct)
            and inner.args[0].functor == "="
            and inner.args[0].arity == 2
        ):
            raise MalformedCptError(
                f"constraint goal must be {{V = Skolem with Cpt}}: {term_to_text(g)}"
            )
        v_t, sk_t = inner.args[0].args
        cpt_t = inner.args[1]
        v = s.walk(v_t)
        label = s.resolve(sk_t)
        if not isinstance(label, (Struct, Atom)):
            raise MalformedCptError(
                f"Skolem term must be an atom or compound: {term_to_text(label)}"
            )
        spec = cpt_spec_from_term(s.resolve(cpt_t), n.is_skolem_term)
        try:
            posted = n.post_constraint(v, label, spec, s, self.ids, self.declared_evidence)
        except EvidenceConflictError:
            return None
        if posted is None:
            return None
        n2, s2, _nid, trail = posted
        absorbed = self._absorb(n2, s2, trail)
        if absorbed is None:
            return None
        n3, s3 = absorbed
        return (rest, s3, n3, d)

    # --- builtins ----------------------------------------------------------

    def _builtin(self, key, g, rest, s, n, d):
        name, _arity = key
        if name == "true":
            return (rest, s, n, d)
        if name == "fail":
            return None
        if name == "=":
            return self._unify_goal(g.args[0], g.args[1], rest, s, n, d)
        if name == "is":
            value = _arith(g.args[1], s)
            return self._unify_goal(g.args[0], value, rest, s, n, d)
        if name in _COMPARISONS:
            a = _arith(g.args[0], s)
            b = _arith(g.args[1], s)
            ok = {
                "<": a < b,
                ">": a > b,
                "=<": a <= b,
                ">=": a >= b,
                "=:=": a == b,
                "=\\=": a != b,
            }[name]
            return (rest, s, n, d) if ok else None
        if name == "findall":
            template, goal, out = g.args
            merged, items = self._collect(template, goal, s, n, d)
            return self._unify_goal(out, mklist(items), rest, s, merged, d)
        if name == "setof":
            return self._setof(g, rest, s, n, d)
        if name == "average":
            return self._average(g, rest, s, n, d)
        if name == "mean":
            items = list_items(s.resolve(g.args[0]))
            if items is None or not items:
                raise ArithmeticGoalError("mean needs a non-empty proper list")
            if not all(is_number(x) for x in items):
                raise ArithmeticGoalError("mean needs a ground list of numbers")
            value = float(sum(items)) / len(items)
            return self._unify_goal(g.args[1], value, rest, s, n, d)
        if name == "aggregate_cpt":
            return self._aggregate_cpt(g, rest, s, n, d)
        raise EngineError(f"unhandled builtin {name}")

    # --- collection (findall / setof) ---------------------------------------

    def _collect(self, template, goal, s, n, d):
        solutions = list(self._solutions((("goal", goal, 0), None), s, n, d))
        merged = n
        items: list[Term] = []
        for s_i, n_i in solutions:
            merged, item = self._import_branch(merged, template, s_i, n_i)
            items.append(item)
        return merged, items

    def _import_branch(self, merged, template, s_i, n_i):
        """Copy one solution's new nodes into the running store and return
        the collected instance with node-referencing variables rebound."""
        remap: dict[int, int] = {}
        for nid in sorted(n_i.nodes):
            if nid in merged.nodes:
                continue
            node = n_i.nodes[nid]
            label = s_i.resolve(node.label)
            parents = tuple(remap.get(p, p) for p in node.parents)
            existing = merged.find_by_label(label, s_i) if is_ground(label) else None
            if existing is not None:
                target = merged.nodes[existing]
                same = (
                    len(target.domain) == len(node.domain)
                    and all(
                        term_equal(a, b)
                        for a, b in zip(target.domain, node.domain)
                    )
                    and target.parents == parents
                    and len(target.table) == len(node.table)
                    and all(
                        math.isclose(a, b, rel_tol=0.0, abs_tol=MERGE_TOLERANCE)
                        for a, b in zip(target.table, node.table)
                    )
                )
                if not same:
                    raise FindallMergeError(
                        f"two derivations disagree about {term_to_text(label)}"
                    )
                remap[nid] = existing
                continue
            for p in parents:
                if p not in merged.nodes:
                    raise FindallMergeError(
                        f"node {term_to_text(label)} depends on a node "
                        "that did not survive collection"
                    )
            merged = merged.copy()
            merged.nodes[nid] = replace(node, label=label, parents=parents)
        resolved = s_i.resolve(template)
        mapping: dict[int, Var] = {}
        item = rename_term(resolved, mapping, self.ids)
        if mapping:
            merged = merged.copy()
            for old_id, new_var in mapping.items():
                src = n_i.binding.get(old_id)
                if src is not None:
                    target = remap.get(src, src)
                    if target in merged.nodes:
                        merged.binding[new_var.id] = target
        return merged, item

    def _setof(self, g, rest, s, n, d):
        template, goal, out = g.args
        goal = s.walk(goal)
        while isinstance(goal, Struct) and goal.functor == "^" and goal.arity == 2:
            goal = s.walk(goal.args[1])
        merged, items = self._collect(template, goal, s, n, d)
        if not items:
            return None
        keyed = []
        for it in items:
            w = s.walk(it) if isinstance(it, Var) else it
            if isinstance(w, Var):
                nid = merged.binding.get(w.id)
                if nid is not None:
                    keyed.append(((1, nid), it))
                else:
                    keyed.append(((2, w.id), it))
            else:
                keyed.append(((0, term_sort_key(s.resolve(w))), it))
        keyed.sort(key=lambda kv: kv[0])
        deduped: list[Term] = []
        last_key = None
        for k, it in keyed:
            if k == last_key:
                continue
            deduped.append(it)
            last_key = k
        return self._unify_goal(out, mklist(deduped), rest, s, merged, d)

    # --- aggregation --------------------------------------------------------

    def _parent_nodes(self, lst: Term, s, n, what: str):
        items = list_items(s.resolve(lst))
        if items is None:
            raise AggregatorError(f"{what} needs a proper list of constrained variables")
        if not items:
            raise AggregatorError(f"{what} over an empty list")
        pvars: list[Var] = []
        nodes = []
        for it in items:
            w = s.walk(it)
            nid = n.binding.get(w.id) if isinstance(w, Var) else None
            if nid is None or nid not in n.nodes:
                raise AggregatorError(
                    f"{what} argument is not a constrained variable: {term_to_text(w)}"
                )
            pvars.append(w)
            nodes.append(n.nodes[nid])
        return pvars, nodes

    def _average(self, g, rest, s, n, d):
        lst, out = g.args
        pvars, nodes = self._parent_nodes(lst, s, n, "average")
        for node in nodes:
            if not all(is_number(x) for x in node.domain):
                raise AggregatorError(
                    f"average parent {term_to_text(node.label)} has a non-numeric domain"
                )
        combos = list(itertools.product(*[node.domain for node in nodes]))
        rounded = [_round_half_down(sum(float(x) for x in c) / len(c)) for c in combos]
        domain = sorted(set(rounded))
        row = {v: i for i, v in enumerate(domain)}
        cols = len(combos)
        table = [0.0] * (len(domain) * cols)
        for j, r in enumerate(rounded):
            table[row[r] * cols + j] = 1.0
        cpt = Struct(
            "p",
            (
                mklist([int(v) for v in domain]),
                mklist(table),
                mklist(list(pvars)),
            ),
        )
        return self._unify_goal(out, cpt, rest, s, n, d)

    def _aggregate_cpt(self, g, rest, s, n, d):
        op_t, lst, agg_dom_t, field_cpt_t, out = g.args
        op = s.walk(op_t)
        if not isinstance(op, Atom) or op.name not in ("mean", "min", "max", "mode"):
            raise AggregatorError(
                f"aggregate operator must be mean, min, max, or mode: {term_to_text(op)}"
            )
        pvars, nodes = self._parent_nodes(lst, s, n, "aggregate_cpt")
        agg_dom = list_items(s.resolve(agg_dom_t))
        if agg_dom is None or not agg_dom:
            raise AggregatorError("aggregate domain must be a non-empty proper list")
        field = cpt_spec_from_term(s.resolve(field_cpt_t), n.is_skolem_term)
        field_cols = len(field.table) // len(field.domain)
        if field_cols != len(agg_dom):
            raise AggregatorError(
                f"field table has {field_cols} columns but the aggregate "
                f"domain has {len(agg_dom)} values"
            )
        if op.name in ("mean", "min", "max"):
            for node in nodes:
                if not all(is_number(x) for x in node.domain):
                    raise AggregatorError(
                        f"{op.name} parent {term_to_text(node.label)} has a "
                        "non-numeric domain"
                    )
        combos = list(itertools.product(*[node.domain for node in nodes]))
        cols = len(combos)
        d_out = len(field.domain)
        table = [0.0] * (d_out * cols)
        for j, combo in enumerate(combos):
            if op.name == "mean":
                value: Term = _round_half_down(
                    sum(float(x) for x in combo) / len(combo)
                )
            elif op.name == "min":
                value = min(combo, key=float)
            elif op.name == "max":
                value = max(combo, key=float)
            else:
                counts: list[tuple[Term, int]] = []
                for x in combo:
                    for i, (y, c) in enumerate(counts):
                        if term_equal(x, y):
                            counts[i] = (y, c + 1)
                            break
                    else:
                        counts.append((x, 1))
                top = max(c for _, c in counts)
                candidates = [y for y, c in counts if c == top]
                value = min(candidates, key=term_sort_key)
            k = _agg_index(agg_dom, value)
            if k is None:
                raise AggregatorError(
                    f"aggregate value {term_to_text(value)} is outside the "
                    "declared aggregate domain"
                )
            for r in range(d_out):
                table[r * cols + j] = field.table[r * len(agg_dom) + k]
        cpt = Struct(
            "p",
            (
                mklist(list(field.domain)),
                mklist(table),
                mklist(list(pvars)),
            ),
        )
        return self._unify_goal(out, cpt, rest, s, n, d)


def _agg_index(domain: list[Term], value: Term) -> Optional[int]:
    for k, dv in enumerate(domain):
        if is_number(dv) and is_number(value):
            if float(dv) == float(value):
                return k
        elif term_equal(dv, value):
            return k
    return None


def _round_half_down(m: float) -> int:
    """Round to the nearest integer; exact halves round toward the smaller."""
    return int(math.ceil(m - 0.5))


def _arith(t: Term, s: Subst):
    t = s.walk(t)
    if is_number(t):
        return t
    if isinstance(t, Var):
        raise ArithmeticGoalError("arithmetic on an unbound variable")
    if isinstance(t, Struct):
        f, a = t.functor, t.args
        if f == "-" and t.arity == 1:
            return -_arith(a[0], s)
        if f == "+" and t.arity == 1:
            return _arith(a[0], s)
        if t.arity == 2 and f in ("+", "-", "*", "/", "//", "mod", "^"):
            x = _arith(a[0], s)
            y = _arith(a[1], s)
            try:
                if f == "+":
                    return x + y
                if f == "-":
                    return x - y
                if f == "*":
                    return x * y
                if f == "/":
                    if isinstance(x, int) and isinstance(y, int) and x % y == 0:
                        return x // y
                    return x / y
                if f == "//":
                    return x // y
                if f == "mod":
                    return x % y
                return x**y
            except ZeroDivisionError as e:
                raise ArithmeticGoalError("division by zero") from e
    raise ArithmeticGoalError(f"not an arithmetic expression: {term_to_text(t)}")


def solve(
    program: Program,
    query: str,
    limit: Optional[int] = None,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> Iterator[Answer]:
    return Engine(program, depth_limit).solve_text(query, limit)
