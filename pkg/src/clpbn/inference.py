"""Exact inference over constraint networks.

Two independent engines answer the same question. `marginal` runs variable
elimination: the node's conditional tables become factors, evidence is
clamped by slicing, and non-target variables are summed out one at a time
in min-degree order. `enumerate_joint` builds the full joint table over
all non-evidence nodes by brute-force broadcasting, which is only feasible
for small networks but makes a good cross-check because it shares no
elimination machinery with the first path.

The module also houses forward sampling (seeded, reproducible, CSV
output), whole-program grounding over a population of facts, and the
agreement checks that compare query-time networks against the fully
ground network.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    GroundingError,
    InconsistentEvidenceError,
    InferenceError,
    JointSizeError,
)
from .network import ConstraintNetwork, Node
from .parser import parse_term, term_to_text
from .program import Program, parse_program, parse_query
from .terms import EMPTY_SUBST, FreshVars, Struct, Term, is_ground, term_equal

JOINT_STATE_LIMIT = 2 ** 24

NodeRef = Union[int, str, Term]


# --- factors ----------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    """A nonnegative table over a tuple of node ids.

    `values` has one axis per entry of `vars`, in order, with axis size
    equal to that node's (current) cardinality.
    """

    vars: tuple[int, ...]
    values: np.ndarray

    def reduce(self, var: int, index: int) -> "Factor":
        axis = self.vars.index(var)
        vals = np.take(self.values, index, axis=axis)
        rest = self.vars[:axis] + self.vars[axis + 1 :]
        return Factor(rest, vals)

    def sum_out(self, var: int) -> "Factor":
        axis = self.vars.index(var)
        rest = self.vars[:axis] + self.vars[axis + 1 :]
        return Factor(rest, self.values.sum(axis=axis))


def node_factor(net: ConstraintNetwork, node: Node) -> Factor:
    """CPT of one node as a factor with axes (node, parent1, ...).

    Columns are renormalized exactly here, so tables that pass the parse-time
    tolerance check (or arrive slightly off) do not leak drift into results.
    """
    d = node.cardinality
    psizes = net.parent_sizes(node)
    cols = 1
    for s in psizes:
        cols *= s
    vals = np.asarray(node.table, dtype=float).reshape(d, cols)
    sums = vals.sum(axis=0)
    if np.any(sums <= 0.0):
        raise InferenceError(
            f"node {term_to_text(node.label)} has a zero-mass table column"
        )
    vals = (vals / sums).reshape(d, *psizes)
    return Factor((node.id,) + node.parents, vals)


def _factor_product(a: Factor, b: Factor) -> Factor:
    allvars = tuple(sorted(set(a.vars) | set(b.vars)))
    return Factor(allvars, _expand(a, allvars) * _expand(b, allvars))


def _expand(f: Factor, allvars: tuple[int, ...]) -> np.ndarray:
    """View of f.values broadcastable over the axes listed in allvars."""
    positions = [allvars.index(v) for v in f.vars]
    perm = sorted(range(len(f.vars)), key=lambda i: positions[i])
    vals = np.transpose(f.values, perm) if f.vars else f.values
    shape = [1] * len(allvars)
    for i in perm:
        shape[positions[i]] = f.values.shape[i]
    return vals.reshape(shape)


# --- marginals by variable elimination ---------------------------------------


@dataclass(frozen=True)
class Marginal:
    node_id: int
    label: Term
    domain: tuple[Term, ...]
    probs: tuple[float, ...]

    def prob(self, value: Term) -> float:
        for v, p in zip(self.domain, self.probs):
            if term_equal(v, value):
                return p
        raise InferenceError(
            f"{term_to_text(value)} is not in the domain of "
            f"{term_to_text(self.label)}"
        )

    def to_json(self) -> dict:
        return {
            "node": term_to_text(self.label),
            "domain": [term_to_text(v) for v in self.domain],
            "probs": list(self.probs),
        }

    def __str__(self) -> str:
        pairs = ", ".join(
            f"{term_to_text(v)}: {p:.6g}" for v, p in zip(self.domain, self.probs)
        )
        return f"{term_to_text(self.label)} = {{{pairs}}}"


def resolve_node(net: ConstraintNetwork, node: NodeRef) -> int:
    if isinstance(node, int):
        if node not in net.nodes:
            raise InferenceError(f"no node with id {node}")
        return node
    label = parse_term(node) if isinstance(node, str) else node
    nid = net.find_by_label(label, EMPTY_SUBST)
    if nid is None:
        raise InferenceError(f"no node labeled {term_to_text(label)}")
    return nid


def _clamped_factors(net: ConstraintNetwork) -> list[Factor]:
    factors = []
    for nid in net.node_ids():
        f = node_factor(net, net.nodes[nid])
        for var in tuple(f.vars):
            ev = net.nodes[var].evidence
            if ev is not None:
                f = f.reduce(var, ev)
        factors.append(f)
    return factors


def _min_degree_order(
    factors: list[Factor], eliminate: set[int], reverse_ties: bool
) -> list[int]:
    scopes = [set(f.vars) for f in factors]
    remaining = set(eliminate)
    order = []
    while remaining:
        best = None
        for v in remaining:
            neighbors: set[int] = set()
            for s in scopes:
                if v in s:
                    neighbors |= s
            neighbors.discard(v)
            key = (len(neighbors), -v if reverse_ties else v)
            if best is None or key < best[0]:
                best = (key, v, neighbors)
        _, v, neighbors = best
        order.append(v)
        remaining.discard(v)
        # simulate elimination: merge the scopes containing v
        scopes = [s for s in scopes if v not in s]
        scopes.append(neighbors)
    return order


def _run_elimination(factors: list[Factor], order: Sequence[int]) -> Factor:
    scalar = 1.0
    work = list(factors)
    for v in order:
        bucket = [f for f in work if v in f.vars]
        work = [f for f in work if v not in f.vars]
        if not bucket:
            continue
        prod = bucket[0]
        for f in bucket[1:]:
            prod = _factor_product(prod, f)
        prod = prod.sum_out(v)
        if not prod.vars:
            scalar *= float(prod.values)
        else:
            work.append(prod)
    result = Factor((), np.array(scalar))
    for f in work:
        result = _factor_product(result, f)
    return result


def marginal(
    net: ConstraintNetwork,
    node: NodeRef,
    order: Optional[Sequence[int]] = None,
    reverse_ties: bool = False,
) -> Marginal:
    """Exact posterior marginal of one node given the network's evidence.

    `order` forces an explicit elimination order (it must cover exactly the
    non-evidence, non-target nodes); otherwise min-degree with ties broken
    by node id, or by reversed id when `reverse_ties` is set.
    """
    target = resolve_node(net, node)
    tnode = net.nodes[target]
    factors = _clamped_factors(net)
    eliminate = {
        nid
        for nid in net.nodes
        if nid != target and net.nodes[nid].evidence is None
    }
    if tnode.evidence is not None:
        eliminate = {nid for nid in net.nodes if net.nodes[nid].evidence is None}
    if order is not None:
        if set(order) != eliminate or len(order) != len(set(order)):
            raise InferenceError(
                "explicit elimination order must list each non-evidence "
                "non-target node exactly once"
            )
        elim_order = list(order)
    else:
        elim_order = _min_degree_order(factors, eliminate, reverse_ties)
    result = _run_elimination(factors, elim_order)

    if tnode.evidence is not None:
        z = float(result.values)
        if z <= 0.0:
            raise InconsistentEvidenceError(
                f"evidence on {term_to_text(tnode.label)} and its context "
                "has zero probability"
            )
        probs = tuple(
            1.0 if i == tnode.evidence else 0.0 for i in range(tnode.cardinality)
        )
        return Marginal(target, tnode.label, tnode.domain, probs)

    if result.vars != (target,):
        raise InferenceError("elimination left unexpected variables")
    vec = result.values.astype(float)
    z = float(vec.sum())
    if z <= 0.0:
        raise InconsistentEvidenceError(
            "the network's evidence has zero probability"
        )
    return Marginal(
        target, tnode.label, tnode.domain, tuple(float(x) for x in vec / z)
    )


def all_marginals(
    net: ConstraintNetwork, reverse_ties: bool = False
) -> list[Marginal]:
    return [marginal(net, nid, reverse_ties=reverse_ties) for nid in net.node_ids()]


# --- brute-force joint --------------------------------------------------------


def enumerate_joint(net: ConstraintNetwork) -> Factor:
    """Normalized joint over all non-evidence nodes, by direct enumeration.

    Deliberately shares nothing with the elimination path: every clamped
    CPT is broadcast over the full joint shape and multiplied in.
    """
    free = [nid for nid in net.node_ids() if net.nodes[nid].evidence is None]
    states = 1
    for nid in free:
        states *= net.nodes[nid].cardinality
        if states > JOINT_STATE_LIMIT:
            raise JointSizeError(
                f"joint would exceed {JOINT_STATE_LIMIT} states"
            )
    shape = tuple(net.nodes[nid].cardinality for nid in free)
    joint = np.ones(shape)
    allvars = tuple(free)
    for f in _clamped_factors(net):
        joint = joint * _expand(f, allvars)
    z = float(joint.sum())
    if z <= 0.0:
        raise InconsistentEvidenceError(
            "the network's evidence has zero probability"
        )
    return Factor(allvars, joint / z)


def joint_marginal(joint: Factor, net: ConstraintNetwork, node: NodeRef) -> Marginal:
    """Read one node's marginal out of an enumerate_joint result."""
    target = resolve_node(net, node)
    tnode = net.nodes[target]
    if tnode.evidence is not None:
        probs = tuple(
            1.0 if i == tnode.evidence else 0.0 for i in range(tnode.cardinality)
        )
        return Marginal(target, tnode.label, tnode.domain, probs)
    f = joint
    for v in joint.vars:
        if v != target:
            f = f.sum_out(v)
    return Marginal(
        target, tnode.label, tnode.domain, tuple(float(x) for x in f.values)
    )


# --- forward sampling ---------------------------------------------------------


def sample(net: ConstraintNetwork, n: int, seed: int) -> tuple[list[int], np.ndarray]:
    """Draw n assignments by ancestral sampling in topological order.

    Returns (node ids in topological order, an n-by-k array of domain
    indices). Evidence nodes are clamped to their observed value. The draw
    sequence is fixed by the seed and the topological order, so identical
    inputs reproduce identical output.
    """
    order = net.topological_order()
    rng = np.random.default_rng(seed)
    col_of = {nid: j for j, nid in enumerate(order)}
    out = np.zeros((n, len(order)), dtype=np.int64)
    for j, nid in enumerate(order):
        node = net.nodes[nid]
        if node.evidence is not None:
            out[:, j] = node.evidence
            continue
        d = node.cardinality
        psizes = net.parent_sizes(node)
        cols = 1
        for s in psizes:
            cols *= s
        table = np.asarray(node.table, dtype=float).reshape(d, cols)
        sums = table.sum(axis=0)
        if np.any(sums <= 0.0):
            raise InferenceError(
                f"node {term_to_text(node.label)} has a zero-mass table column"
            )
        table = table / sums
        col = np.zeros(n, dtype=np.int64)
        for p, size in zip(node.parents, psizes):
            col = col * size + out[:, col_of[p]]
        cum = np.cumsum(table[:, col], axis=0)  # shape (d, n)
        draws = rng.random(n)
        out[:, j] = np.minimum((draws[None, :] >= cum).sum(axis=0), d - 1)
    return order, out


def sample_csv(net: ConstraintNetwork, n: int, seed: int) -> str:
    """CSV with one column per node (printed labels, topological order)."""
    order, rows = sample(net, n, seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(term_to_text(net.nodes[nid].label) for nid in order)
    domains = [net.nodes[nid].domain for nid in order]
    for i in range(n):
        writer.writerow(
            term_to_text(domains[j][rows[i, j]]) for j in range(len(order))
        )
    return buf.getvalue()


# --- grounding ----------------------------------------------------------------


def default_drivers(program: Program) -> list[Term]:
    ids = FreshVars()
    goals = []
    for name, arity in program.constraint_defining_predicates():
        goals.append(Struct(name, tuple(ids.new() for _ in range(arity))))
    return goals


def _parse_driver(text: str) -> Term:
    """One driver goal from text; conjunctions stay a single goal term."""
    goals, _ = parse_query(text)
    g = goals[-1]
    for h in reversed(goals[:-1]):
        g = Struct(",", (h, g))
    return g


def _driver_goals(
    program: Program, drivers: Optional[Sequence[Union[Term, str]]]
) -> list[Term]:
    if drivers is None:
        return default_drivers(program)
    return [_parse_driver(d) if isinstance(d, str) else d for d in drivers]


def _with_population(program: Program, population: Iterable[Term]) -> Program:
    facts = list(population)
    if not facts:
        return program
    text = program.to_text() + "\n" + "\n".join(
        term_to_text(f) + "." for f in facts
    ) + "\n"
    return parse_program(text)


def ground_program(
    program: Program,
    population: Iterable[Term] = (),
    drivers: Optional[Sequence[Union[Term, str]]] = None,
    depth_limit: Optional[int] = None,
) -> ConstraintNetwork:
    """Full network over every random variable the program can derive.

    `population` supplies extra ground facts (entity tables). Driver goals
    determine which derivations get enumerated; by default, one fresh-variable
    goal per constraint-defining predicate. Programs whose recursion cannot
    run with unbound arguments need explicit drivers (for instance a bounded
    horizon goal for a chain model).
    """
    from .engine import DEFAULT_DEPTH_LIMIT, Engine

    prog = _with_population(program, population)
    goals = _driver_goals(prog, drivers)
    engine = Engine(prog, depth_limit=depth_limit or DEFAULT_DEPTH_LIMIT)
    net, _ = engine.union_network(goals)
    for nid in net.node_ids():
        label = net.nodes[nid].label
        if not is_ground(label):
            raise GroundingError(
                f"grounding produced the non-ground label {term_to_text(label)}; "
                "supply driver goals that bind every entity argument"
            )
    ok, cycle = net.check_acyclic()
    if not ok:
        labels = " -> ".join(term_to_text(net.nodes[n].label) for n in cycle)
        raise GroundingError(f"ground network is cyclic: {labels}")
    return net


# --- query-vs-ground agreement -------------------------------------------------


def _transfer_evidence(
    ground: ConstraintNetwork, answer_net: ConstraintNetwork
) -> Optional[ConstraintNetwork]:
    """Copy the answer network's evidence onto the ground network by label."""
    g = ground
    for nid in answer_net.node_ids():
        node = answer_net.nodes[nid]
        if node.evidence is None:
            continue
        gid = g.find_by_label(node.label, EMPTY_SUBST)
        if gid is None:
            raise GroundingError(
                f"evidence node {term_to_text(node.label)} is missing from "
                "the ground network"
            )
        g2 = g.set_evidence(gid, node.evidence_value())
        if g2 is None:
            return None
        g = g2
    return g


def agreement_check(
    program: Program,
    query: str,
    population: Iterable[Term] = (),
    drivers: Optional[Sequence[Union[Term, str]]] = None,
    limit: int = 1,
    tolerance: float = 1e-9,
) -> dict:
    """Compare query-network marginals against ground-network marginals.

    Solves the query, then for every constrained query variable computes its
    marginal twice: once on the answer's own network, once on the full ground
    network carrying the same evidence. Reports both distributions and the
    largest absolute difference seen.
    """
    from .engine import Engine

    prog = _with_population(program, population)
    ground = ground_program(prog, drivers=drivers)
    engine = Engine(prog)
    entries = []
    worst = 0.0
    answers = list(engine.solve_text(query, limit=limit))
    for ans in answers:
        gnet = _transfer_evidence(ground, ans.network)
        for name in sorted(ans.query_nodes):
            nid = ans.query_nodes[name]
            m_query = marginal(ans.network, nid)
            if gnet is None:
                raise InconsistentEvidenceError(
                    "evidence rejected by the ground network but accepted "
                    "by the query network"
                )
            m_ground = marginal(gnet, resolve_node(gnet, m_query.label))
            diff = max(
                abs(a - b) for a, b in zip(m_query.probs, m_ground.probs)
            )
            worst = max(worst, diff)
            entries.append(
                {
                    "variable": name,
                    "node": term_to_text(m_query.label),
                    "query_probs": list(m_query.probs),
                    "ground_probs": list(m_ground.probs),
                    "max_abs_diff": diff,
                }
            )
    return {
        "query": query,
        "answers": len(answers),
        "entries": entries,
        "max_abs_diff": worst,
        "agree": worst <= tolerance,
    }


def agreement_sweep(
    program: Program,
    drivers: Optional[Sequence[Union[Term, str]]] = None,
    population: Iterable[Term] = (),
    tolerance: float = 1e-9,
) -> dict:
    """Exhaustive agreement check over single-node queries.

    Every driver solution yields an answer network; every node of every
    answer network is compared against the ground network, both with no
    evidence and under each single-node evidence assignment (querying each
    other node). Evidence with zero probability must be rejected on both
    sides to count as agreement.
    """
    from .engine import Engine

    prog = _with_population(program, population)
    ground = ground_program(prog, drivers=drivers)
    engine = Engine(prog)
    goals = _driver_goals(prog, drivers)
    worst = 0.0
    comparisons = 0
    failures: list[str] = []

    def compare(bnet: ConstraintNetwork, gnet: ConstraintNetwork, qid: int):
        nonlocal worst, comparisons
        label = bnet.nodes[qid].label
        try:
            mq = marginal(bnet, qid)
            q_failed = False
        except InconsistentEvidenceError:
            q_failed = True
        try:
            mg = marginal(gnet, resolve_node(gnet, label))
            g_failed = False
        except InconsistentEvidenceError:
            g_failed = True
        comparisons += 1
        if q_failed or g_failed:
            if q_failed != g_failed:
                failures.append(
                    f"{term_to_text(label)}: zero-probability evidence "
                    f"rejected on one side only"
                )
            return
        if len(mq.probs) != len(mg.probs):
            failures.append(f"{term_to_text(label)}: domain size mismatch")
            return
        diff = max(abs(a - b) for a, b in zip(mq.probs, mg.probs))
        worst = max(worst, diff)
        if diff > tolerance:
            failures.append(f"{term_to_text(label)}: differs by {diff:.3g}")

    for goal in goals:
        for ans in engine.solve_goals([goal], {}, limit=None):
            bnet = ans.network
            for qid in bnet.node_ids():
                compare(bnet, ground, qid)
            for eid in bnet.node_ids():
                enode = bnet.nodes[eid]
                if enode.evidence is not None:
                    continue
                for value in enode.domain:
                    b2 = bnet.set_evidence(eid, value)
                    gid = ground.find_by_label(enode.label, EMPTY_SUBST)
                    g2 = ground.set_evidence(gid, value) if gid is not None else None
                    if b2 is None or g2 is None:
                        if (b2 is None) != (g2 is None):
                            failures.append(
                                f"{term_to_text(enode.label)}={term_to_text(value)}: "
                                "evidence accepted on one side only"
                            )
                        continue
                    for qid in bnet.node_ids():
                        if qid != eid:
                            compare(b2, g2, qid)
    return {
        "comparisons": comparisons,
        "max_abs_diff": worst,
        "failures": failures,
        "agree": not failures,
    }
