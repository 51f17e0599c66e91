"""Parameter fitting, BIC scoring, cycle removal, and structure comparison.

Everything here works on complete sample tables (one column per ground
random variable, one row per draw) and on a *structural* grounding of the
program: instead of running queries, the clause structure is instantiated
directly over the fact base, so programs whose ground networks contain
directed cycles can still be grounded, scored, and repaired. Running such
a program would recurse forever; reading its structure terminates.

The structural grounding covers a deliberately simple clause fragment:
one defining clause per random-variable functor, a literal p/3 table,
body goals that are either facts or calls to other defining clauses.
Clauses outside the fragment (computed tables, aggregation, arithmetic)
are left untouched by fitting and ignored by scoring.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

import numpy as np

from .errors import LearnError
from .network import ConstraintNetwork, Node
from .parser import term_to_text
from .program import (
    Clause,
    Program,
    cpt_spec_from_term,
    parse_program,
)
from .terms import (
    Atom,
    Struct,
    Term,
    Var,
    is_ground,
    mklist,
    term_equal,
)


# --- sample tables -------------------------------------------------------------


@dataclass
class SampleSet:
    """Rectangular table of printed node labels and printed domain values."""

    columns: list[str]
    rows: list[list[str]]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for r in self.rows:
            if len(r) != len(self.columns):
                raise LearnError(
                    f"ragged sample row: {len(r)} cells, "
                    f"{len(self.columns)} columns"
                )

    @classmethod
    def from_csv(cls, text: str, provenance: Optional[dict] = None) -> "SampleSet":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise LearnError("empty sample CSV") from None
        rows = [row for row in reader if row]
        return cls(header, rows, provenance or {})

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def column(self, label_text: str) -> int:
        try:
            return self.columns.index(label_text)
        except ValueError:
            raise LearnError(
                f"sample set has no column for {label_text}"
            ) from None

    def __len__(self) -> int:
        return len(self.rows)


# --- clause fragment analysis ----------------------------------------------------


@dataclass
class _FieldClause:
    clause_index: int
    key: tuple[str, int]
    head: Struct
    cvar_id: int
    label: Term
    domain: tuple[Term, ...]
    table: tuple[float, ...]
    parent_vars: tuple[Var, ...]
    body_goals: list[Struct]  # non-constraint goals in order


@dataclass
class _Analysis:
    facts: dict[tuple[str, int], list[tuple[Term, ...]]]
    fields: dict[tuple[str, int], _FieldClause]
    skipped: dict[tuple[str, int], str]  # reason per skipped predicate


def _goal_key(g: Term) -> Optional[tuple[str, int]]:
    if isinstance(g, Struct):
        return (g.functor, g.arity)
    if isinstance(g, Atom):
        return (g.name, 0)
    return None


def _analyze(program: Program) -> _Analysis:
    facts: dict[tuple[str, int], list[tuple[Term, ...]]] = {}
    fields: dict[tuple[str, int], _FieldClause] = {}
    skipped: dict[tuple[str, int], str] = {}
    by_key: dict[tuple[str, int], list[tuple[int, Clause]]] = {}
    for i, c in enumerate(program.clauses):
        by_key.setdefault(c.key, []).append((i, c))
    for key, entries in by_key.items():
        if all(
            not c.body and is_ground(c.head) for _, c in entries
        ):
            facts[key] = [
                tuple(c.head.args) if isinstance(c.head, Struct) else ()
                for _, c in entries
            ]
            continue
        with_constraints = [(i, c) for i, c in entries if c.constraints]
        if not with_constraints:
            skipped[key] = "no defining constraint clause"
            continue
        if len(entries) > 1:
            skipped[key] = "more than one clause"
            continue
        i, c = entries[0]
        if len(c.constraints) != 1:
            skipped[key] = "more than one constraint in the clause"
            continue
        con = c.constraints[0]
        if not isinstance(c.head, Struct):
            skipped[key] = "atomic head"
            continue
        if not any(
            isinstance(a, Var) and a.id == con.var.id for a in c.head.args
        ):
            skipped[key] = "constraint variable not a head argument"
            continue
        cpt = con.cpt
        if not (isinstance(cpt, Struct) and cpt.functor == "p" and cpt.arity == 3):
            skipped[key] = "table is computed, not literal"
            continue
        try:
            spec = cpt_spec_from_term(cpt, program.is_skolem_term)
        except Exception as e:  # malformed literal table
            skipped[key] = str(e)
            continue
        if not all(isinstance(p, Var) for p in spec.parents):
            skipped[key] = "non-variable CPT parent"
            continue
        goals = [
            g
            for g in c.body
            if not (isinstance(g, Struct) and g.functor == "{}" and g.arity == 1)
        ]
        if not all(isinstance(g, (Struct, Atom)) for g in goals):
            skipped[key] = "body goal outside the supported fragment"
            continue
        fields[key] = _FieldClause(
            clause_index=i,
            key=key,
            head=c.head,
            cvar_id=con.var.id,
            label=con.skolem,
            domain=spec.domain,
            table=spec.table,
            parent_vars=tuple(spec.parents),
            body_goals=[g if isinstance(g, Struct) else g for g in goals],
        )
    return _Analysis(facts, fields, skipped)


# --- structural grounding --------------------------------------------------------


def _resolve(t: Term, theta: dict[int, Term]) -> Term:
    if isinstance(t, Var):
        v = theta.get(t.id)
        return t if v is None else v
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_resolve(a, theta) for a in t.args))
    return t


def _match(pattern: Term, value: Term, theta: dict[int, Term]) -> Optional[dict[int, Term]]:
    """One-way match of a clause pattern against a ground value."""
    p = _resolve(pattern, theta)
    if isinstance(p, Var):
        out = dict(theta)
        out[p.id] = value
        return out
    if isinstance(p, Struct) and isinstance(value, Struct):
        if p.functor != value.functor or p.arity != value.arity:
            return None
        for a, b in zip(p.args, value.args):
            nxt = _match(a, b, theta)
            if nxt is None:
                return None
            theta = nxt
        return theta
    return theta if term_equal(p, value) else None


@dataclass
class _Instance:
    label: Term
    parents: tuple[Term, ...]  # parent labels, CPT order


def _cvar_position(fc: _FieldClause) -> int:
    return next(
        j
        for j, a in enumerate(fc.head.args)
        if isinstance(a, Var) and a.id == fc.cvar_id
    )


def _callee_binding(
    goal: Struct, callee: _FieldClause
) -> tuple[dict[int, Term], int]:
    """Map callee head variables to caller argument terms.

    Returns the mapping (callee var id -> caller term) and the goal-argument
    position holding the callee's constraint variable."""
    cpos = _cvar_position(callee)
    binding: dict[int, Term] = {}
    for j, (carg, garg) in enumerate(zip(callee.head.args, goal.args)):
        if j == cpos:
            continue
        if isinstance(carg, Var):
            binding[carg.id] = garg
    return binding, cpos


def structural_instances(
    program: Program, population: Iterable[Term] = ()
) -> tuple[dict[tuple[str, int], list[_Instance]], _Analysis]:
    """Ground instances of every supported defining clause, by fixpoint.

    Fact goals join against the fact base. A call to another defining
    clause with its entity arguments already bound is taken on faith (no
    existence check, which is what lets mutually dependent clauses ground
    instead of deadlocking) and *demands* the callee instance with those
    arguments, so clauses with no guard goals of their own still produce
    the nodes their callers rely on. A call with unbound arguments joins
    generatively against the callee instances found so far.
    """
    prog = program
    pop = list(population)
    if pop:
        text = prog.to_text() + "\n" + "\n".join(
            term_to_text(f) + "." for f in pop
        ) + "\n"
        prog = parse_program(text)
    analysis = _analyze(prog)
    insts: dict[tuple[str, int], list[_Instance]] = {
        key: [] for key in analysis.fields
    }
    seen: dict[tuple[str, int], set[str]] = {key: set() for key in analysis.fields}
    head_tuples: dict[tuple[str, int], list[tuple[Term, ...]]] = {
        key: [] for key in analysis.fields
    }
    # text-keyed so repeat demands are cheap; values are the ground args
    demands: dict[tuple, tuple[tuple[str, int], tuple[Term, ...]]] = {}

    changed = True
    while changed:
        changed = False
        jobs: list[tuple[tuple[str, int], Optional[tuple[Term, ...]]]] = [
            (key, None) for key in analysis.fields
        ]
        jobs.extend(demands.values())
        for key, demanded_args in jobs:
            fc = analysis.fields[key]
            theta0: Optional[dict[int, Term]] = None
            if demanded_args is not None:
                theta0 = {}
                cpos = _cvar_position(fc)
                positions = [
                    j for j in range(len(fc.head.args)) if j != cpos
                ]
                ok = True
                for pos, val in zip(positions, demanded_args):
                    th = _match(fc.head.args[pos], val, theta0)
                    if th is None:
                        ok = False
                        break
                    theta0 = th
                if not ok:
                    continue
            before = len(demands)
            for theta, parent_map in _enumerate_clause(
                fc, analysis, head_tuples, demands, theta0
            ):
                label = _resolve(fc.label, theta)
                if not is_ground(label):
                    continue
                ltext = term_to_text(label)
                if ltext in seen[key]:
                    continue
                parents = []
                ok = True
                for pv in fc.parent_vars:
                    pat = parent_map.get(pv.id)
                    if pat is None:
                        raise LearnError(
                            f"clause for {key[0]}/{key[1]}: CPT parent "
                            f"{pv.display()} is not bound by a defining-"
                            "clause call in the body"
                        )
                    plabel = _resolve(pat, theta)
                    if not is_ground(plabel):
                        ok = False
                        break
                    parents.append(plabel)
                if not ok:
                    continue
                seen[key].add(ltext)
                insts[key].append(_Instance(label, tuple(parents)))
                cpos = _cvar_position(fc)
                head_tuples[key].append(
                    tuple(
                        None if j == cpos else _resolve(a, theta)
                        for j, a in enumerate(fc.head.args)
                    )
                )
                changed = True
            if len(demands) != before:
                changed = True
    return insts, analysis


def _enumerate_clause(
    fc: _FieldClause,
    analysis: _Analysis,
    head_tuples: dict[tuple[str, int], list[tuple[Term, ...]]],
    demands: dict[tuple, tuple[tuple[str, int], tuple[Term, ...]]],
    theta0: Optional[dict[int, Term]] = None,
):
    """All (theta, parent-var -> parent-label-pattern) pairs for one clause."""
    thetas: list[tuple[dict[int, Term], dict[int, Term]]] = [
        (dict(theta0) if theta0 else {}, {})
    ]
    for goal in fc.body_goals:
        gkey = _goal_key(goal)
        nxt: list[tuple[dict[int, Term], dict[int, Term]]] = []
        if gkey in analysis.facts:
            for theta, pmap in thetas:
                for fact in analysis.facts[gkey]:
                    th = theta
                    ok = True
                    for pat, val in zip(goal.args, fact):
                        th2 = _match(pat, val, th)
                        if th2 is None:
                            ok = False
                            break
                        th = th2
                    if ok:
                        nxt.append((th, pmap))
        elif gkey in analysis.fields:
            callee = analysis.fields[gkey]
            binding, cpos = _callee_binding(goal, callee)
            label_pattern = _resolve(callee.label, binding)
            for theta, pmap in thetas:
                out_var = goal.args[cpos]
                pmap2 = dict(pmap)
                if isinstance(out_var, Var):
                    pmap2[out_var.id] = label_pattern
                resolved = [_resolve(a, theta) for a in goal.args]
                free = [
                    j
                    for j, a in enumerate(resolved)
                    if j != cpos and not is_ground(a)
                ]
                if not free:
                    args = tuple(
                        a for j, a in enumerate(resolved) if j != cpos
                    )
                    dkey = (gkey, tuple(term_to_text(a) for a in args))
                    if dkey not in demands:
                        demands[dkey] = (gkey, args)
                    nxt.append((theta, pmap2))
                    continue
                for tup in head_tuples[gkey]:
                    th = theta
                    ok = True
                    for j, a in enumerate(goal.args):
                        if j == cpos:
                            continue
                        th2 = _match(a, tup[j], th)
                        if th2 is None:
                            ok = False
                            break
                        th = th2
                    if ok:
                        nxt.append((th, pmap2))
        elif gkey in analysis.skipped:
            raise LearnError(
                f"clause for {fc.key[0]}/{fc.key[1]} calls {gkey[0]}/{gkey[1]}, "
                f"which is outside the supported fragment "
                f"({analysis.skipped[gkey]})"
            )
        else:
            # unknown predicate: no tuples, clause grounds to nothing
            nxt = []
        thetas = nxt
    return thetas


def structural_ground(
    program: Program, population: Iterable[Term] = ()
) -> ConstraintNetwork:
    """Ground network read off the clause structure; may contain cycles."""
    insts, analysis = structural_instances(program, population)
    ordered: list[tuple[tuple[str, int], _Instance]] = []
    for key in sorted(insts):
        for inst in sorted(insts[key], key=lambda i: term_to_text(i.label)):
            ordered.append((key, inst))
    net = ConstraintNetwork(
        skolem_functors=set(program.skolem_registry),
        skolem_constants=program.skolem_constants,
    )
    ids: dict[str, int] = {}
    for nid, (key, inst) in enumerate(ordered):
        ids[term_to_text(inst.label)] = nid
    for nid, (key, inst) in enumerate(ordered):
        fc = analysis.fields[key]
        parents = []
        for plabel in inst.parents:
            pid = ids.get(term_to_text(plabel))
            if pid is None:
                raise LearnError(
                    f"parent {term_to_text(plabel)} of "
                    f"{term_to_text(inst.label)} was never derived"
                )
            parents.append(pid)
        net.nodes[nid] = Node(
            nid, inst.label, fc.domain, fc.table, tuple(parents), None
        )
    for node in net.nodes.values():
        expected = len(node.domain)
        for p in node.parents:
            expected *= net.nodes[p].cardinality
        if len(node.table) != expected:
            raise LearnError(
                f"node {term_to_text(node.label)}: table length "
                f"{len(node.table)} does not match domain and parents "
                f"({expected})"
            )
    return net


# --- counting -----------------------------------------------------------------


def _domain_texts(domain: tuple[Term, ...]) -> list[str]:
    return [term_to_text(v) for v in domain]


def _count_tables(
    program: Program,
    population: Iterable[Term],
    samples: SampleSet,
) -> dict[tuple[str, int], tuple[np.ndarray, _FieldClause, list[int]]]:
    """Per defining clause: pooled (d x cols) counts over all instances.

    Returns counts, the clause record, and the parent domain sizes."""
    insts, analysis = structural_instances(program, population)
    net = structural_ground(program, population)
    label_to_node = {
        term_to_text(n.label): n for n in net.nodes.values()
    }
    out: dict[tuple[str, int], tuple[np.ndarray, _FieldClause, list[int]]] = {}
    for key, fc in analysis.fields.items():
        if not insts[key]:
            continue
        first = insts[key][0]
        psizes = [
            len(label_to_node[term_to_text(p)].domain) for p in first.parents
        ]
        cols = 1
        for s in psizes:
            cols *= s
        counts = np.zeros((len(fc.domain), cols))
        value_index = {t: i for i, t in enumerate(_domain_texts(fc.domain))}
        for inst in insts[key]:
            ci = samples.column(term_to_text(inst.label))
            parent_cols = []
            parent_indexes = []
            for p in inst.parents:
                pnode = label_to_node[term_to_text(p)]
                parent_cols.append(samples.column(term_to_text(p)))
                parent_indexes.append(
                    {t: i for i, t in enumerate(_domain_texts(pnode.domain))}
                )
            for row in samples.rows:
                try:
                    r = value_index[row[ci]]
                except KeyError:
                    raise LearnError(
                        f"value {row[ci]!r} is outside the domain of "
                        f"{term_to_text(inst.label)}"
                    ) from None
                col = 0
                for pc, pidx, size in zip(parent_cols, parent_indexes, psizes):
                    try:
                        col = col * size + pidx[row[pc]]
                    except KeyError:
                        raise LearnError(
                            f"value {row[pc]!r} is outside a parent domain "
                            f"of {term_to_text(inst.label)}"
                        ) from None
                counts[r, col] += 1.0
        out[key] = (counts, fc, psizes)
    return out


# --- fitting ------------------------------------------------------------------


def _rewrite_clause_table(
    program: Program, fc: _FieldClause, new_table: list[float],
    new_parents: Optional[list[Var]] = None,
) -> Program:
    clause = program.clauses[fc.clause_index]
    parents = list(fc.parent_vars) if new_parents is None else new_parents
    new_cpt = Struct(
        "p",
        (
            mklist(list(fc.domain)),
            mklist([float(x) for x in new_table]),
            mklist(list(parents)),
        ),
    )
    new_body = []
    for g in clause.body:
        if isinstance(g, Struct) and g.functor == "{}" and g.arity == 1:
            inner = g.args[0]
            eq = Struct("=", (clause.constraints[0].var, clause.constraints[0].skolem))
            new_body.append(Struct("{}", (Struct("with", (eq, new_cpt)),)))
        else:
            new_body.append(g)
    new_clause = replace(
        clause,
        body=tuple(new_body),
        constraints=(replace(clause.constraints[0], cpt=new_cpt),),
    )
    lines = []
    for item in program.items:
        if isinstance(item, Clause) and item is clause:
            lines.append(new_clause.to_text())
        else:
            lines.append(item.to_text())
    return parse_program("\n".join(lines) + "\n")


def fit_cpts(
    program: Program,
    population: Iterable[Term] = (),
    samples: Optional[SampleSet] = None,
    alpha: float = 1.0,
) -> Program:
    """Replace every literal table with smoothed ML estimates.

    Counts are pooled over all ground instances of each defining clause
    (all instances share one table). Entries become
    (count + alpha) / (column-total + alpha * domain-size).
    """
    if samples is None:
        raise LearnError("fit_cpts needs a sample set")
    tables = _count_tables(program, population, samples)
    fitted = program
    for key in sorted(tables):
        counts, fc, _psizes = tables[key]
        d, cols = counts.shape
        colsums = counts.sum(axis=0)
        smoothed = (counts + alpha) / (colsums + alpha * d)
        flat = [float(smoothed[r, j]) for r in range(d) for j in range(cols)]
        # indexes shift as clauses are reparsed; look the clause up again
        cur = _analyze(fitted).fields[key]
        fitted = _rewrite_clause_table(fitted, cur, flat)
    return fitted


# --- scoring ------------------------------------------------------------------


def bic_score(
    program: Program,
    population: Iterable[Term] = (),
    samples: Optional[SampleSet] = None,
    alpha: float = 0.0,
) -> float:
    """Log-likelihood under ML parameters minus (k/2) ln N; higher is better.

    ML parameters are unsmoothed by default (alpha = 0); pass alpha > 0 to
    score against smoothed estimates instead. k counts
    (domain-1) x product(parent sizes) free parameters per defining clause
    (tables are tied across instances). Parent configurations that never
    occur contribute nothing. Cycles in the ground structure are no
    obstacle: the score is a sum of per-node conditional terms.
    """
    if samples is None:
        raise LearnError("bic_score needs a sample set")
    n = len(samples)
    if n == 0:
        return 0.0
    tables = _count_tables(program, population, samples)
    loglik = 0.0
    k = 0
    for key in sorted(tables):
        counts, fc, psizes = tables[key]
        d, cols = counts.shape
        k += (d - 1) * int(np.prod(psizes)) if psizes else (d - 1)
        colsums = counts.sum(axis=0)
        for j in range(cols):
            if colsums[j] <= 0:
                continue
            for r in range(d):
                c = counts[r, j]
                if c > 0:
                    est = (c + alpha) / (colsums[j] + alpha * d)
                    loglik += c * math.log(est)
    return loglik - 0.5 * k * math.log(n)


# --- cycle removal --------------------------------------------------------------


def _cycle_edges(net: ConstraintNetwork) -> set[tuple[int, int]]:
    """Directed edges that lie inside a strongly connected component."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comp: dict[int, int] = {}
    counter = [0]
    comp_id = [0]

    def strongconnect(v: int) -> None:
        work = [(v, iter(net.children(v)))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(net.children(w))))
                    advanced = True
                    break
                elif w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = comp_id[0]
                    if w == node:
                        break
                comp_id[0] += 1

    for v in net.nodes:
        if v not in index:
            strongconnect(v)
    members: dict[int, int] = {}
    for v, c in comp.items():
        members[c] = members.get(c, 0) + 1
    edges = set()
    for child in net.nodes.values():
        for p in child.parents:
            if comp[p] == comp[child.id] and members[comp[child.id]] > 1:
                edges.add((p, child.id))
    return edges


def _delete_parent(
    program: Program, fc: _FieldClause, position: int, psizes: list[int]
) -> Program:
    """Remove one CPT parent from a defining clause, averaging the table
    over the removed axis."""
    d = len(fc.domain)
    vals = np.asarray(fc.table, dtype=float).reshape(d, *psizes)
    vals = vals.mean(axis=1 + position)
    cols = 1
    for j, s in enumerate(psizes):
        if j != position:
            cols *= s
    flat = [float(x) for x in vals.reshape(d, cols).flatten()]
    new_parents = [
        p for j, p in enumerate(fc.parent_vars) if j != position
    ]
    return _rewrite_clause_table(program, fc, flat, new_parents)


def remove_cycles(
    program: Program,
    population: Iterable[Term] = (),
    samples: Optional[SampleSet] = None,
) -> Program:
    """Delete single CPT parents until the ground network is acyclic.

    Each step considers every parent deletion that removes at least one
    edge inside a cycle, scores the resulting program, and keeps the
    deletion with the smallest BIC drop (ties by the parent predicate's
    name, then clause order). Acyclic input comes back unchanged.
    """
    if samples is None:
        raise LearnError("remove_cycles needs a sample set")
    current = program
    while True:
        net = structural_ground(current, population)
        ok, _cycle = net.check_acyclic()
        if ok:
            return current
        bad = _cycle_edges(net)
        insts, analysis = structural_instances(current, population)
        label_node = {term_to_text(n.label): n.id for n in net.nodes.values()}
        candidates = []
        for key, fc in analysis.fields.items():
            if not insts[key] or not fc.parent_vars:
                continue
            first = insts[key][0]
            psizes = [
                len(net.nodes[label_node[term_to_text(p)]].domain)
                for p in first.parents
            ]
            for j in range(len(fc.parent_vars)):
                removed = {
                    (label_node[term_to_text(inst.parents[j])],
                     label_node[term_to_text(inst.label)])
                    for inst in insts[key]
                }
                if not (removed & bad):
                    continue
                trial = _delete_parent(current, fc, j, psizes)
                score = bic_score(trial, population, samples)
                parent_functor = _parent_functor_name(first.parents[j])
                candidates.append(
                    (-score, parent_functor, fc.clause_index, j, trial)
                )
        if not candidates:
            raise LearnError(
                "the ground network is cyclic but no parent deletion "
                "breaks a cycle"
            )
        candidates.sort(key=lambda c: c[:4])
        current = candidates[0][4]


def _parent_functor_name(label: Term) -> str:
    if isinstance(label, Struct):
        return label.functor
    if isinstance(label, Atom):
        return label.name
    return term_to_text(label)


# --- structure comparison --------------------------------------------------------


@dataclass(frozen=True)
class StructureReport:
    link_precision: float
    link_recall: float
    direction_match: float
    markov_precision: float
    markov_recall: float

    def to_json(self) -> dict:
        return {
            "link_precision": self.link_precision,
            "link_recall": self.link_recall,
            "direction_match": self.direction_match,
            "markov_precision": self.markov_precision,
            "markov_recall": self.markov_recall,
        }


def _edges_by_label(net: ConstraintNetwork) -> set[tuple[str, str]]:
    out = set()
    for child in net.nodes.values():
        for p in child.parents:
            out.add(
                (term_to_text(net.nodes[p].label), term_to_text(child.label))
            )
    return out


def _markov_pairs(net: ConstraintNetwork) -> set[frozenset]:
    """Unordered pairs where one node is in the other's Markov blanket."""
    pairs: set[frozenset] = set()
    for child in net.nodes.values():
        clabel = term_to_text(child.label)
        plabels = [term_to_text(net.nodes[p].label) for p in child.parents]
        for pl in plabels:
            pairs.add(frozenset((pl, clabel)))
        for i in range(len(plabels)):
            for j in range(i + 1, len(plabels)):
                if plabels[i] != plabels[j]:
                    pairs.add(frozenset((plabels[i], plabels[j])))
    return pairs


def _ratio(hit: int, total: int) -> float:
    return hit / total if total else 1.0


def compare_structures(
    learned: Program,
    truth: Program,
    population: Iterable[Term] = (),
) -> StructureReport:
    lnet = structural_ground(learned, population)
    tnet = structural_ground(truth, population)
    lnodes = {term_to_text(n.label) for n in lnet.nodes.values()}
    tnodes = {term_to_text(n.label) for n in tnet.nodes.values()}
    if lnodes != tnodes:
        only_l = sorted(lnodes - tnodes)[:3]
        only_t = sorted(tnodes - lnodes)[:3]
        raise LearnError(
            f"node sets differ (only learned: {only_l}, only truth: {only_t})"
        )
    ledges = _edges_by_label(lnet)
    tedges = _edges_by_label(tnet)
    llinks = {frozenset(e) for e in ledges}
    tlinks = {frozenset(e) for e in tedges}
    shared = llinks & tlinks
    direction_hits = 0
    for link in shared:
        l_dir = {e for e in ledges if frozenset(e) == link}
        t_dir = {e for e in tedges if frozenset(e) == link}
        if l_dir == t_dir:
            direction_hits += 1
    lmark = _markov_pairs(lnet)
    tmark = _markov_pairs(tnet)
    return StructureReport(
        link_precision=_ratio(len(shared), len(llinks)),
        link_recall=_ratio(len(shared), len(tlinks)),
        direction_match=_ratio(direction_hits, len(shared)),
        markov_precision=_ratio(len(lmark & tmark), len(lmark)),
        markov_recall=_ratio(len(lmark & tmark), len(tmark)),
    )
