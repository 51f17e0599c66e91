import numpy as np
import pytest

from clpbn import inference
from clpbn.engine import Engine
from clpbn.errors import (
    GroundingError,
    InconsistentEvidenceError,
    JointSizeError,
)
from clpbn.fixtures import SCHOOL_DRIVERS, fixture_text
from clpbn.network import ConstraintNetwork
from clpbn.parser import parse_term, term_to_text
from clpbn.program import parse_program
from netgen import random_net

TOL = 1e-9


def _query_marginal(program, query, var):
    ans = next(Engine(program).solve_text(query))
    return inference.marginal(ans.network, ans.query_nodes[var])


# --- anchors ---------------------------------------------------------------------


def test_school_grade_prior(school):
    m = _query_marginal(school, "grade(r2, G).", "G")
    assert m.probs == pytest.approx((0.415, 0.31, 0.275), abs=TOL)


def test_school_intelligence_given_grade(school):
    m = _query_marginal(school, "grade(r2, a), intelligence(ann, I).", "I")
    assert m.probs[0] == pytest.approx(0.6746987951807228, abs=TOL)


def test_hmm_caught_zero(hmm):
    m = _query_marginal(hmm, "caught(0, C).", "C")
    assert m.probs == pytest.approx((0.0, 1.0), abs=TOL)


def test_hmm_fixed_caught_one(hmm_fixed):
    m = _query_marginal(hmm_fixed, "caught(1, C).", "C")
    assert m.probs == pytest.approx((0.0255, 0.9745), abs=TOL)


def test_hmm_fixed_watch_posterior(hmm_fixed):
    m = _query_marginal(hmm_fixed, "caught(1, t), watch(1, W).", "W")
    assert m.probs[0] == pytest.approx(0.025 / 0.0255, abs=TOL)


# --- variable elimination internals -----------------------------------------------


def _school_net(school):
    return inference.ground_program(school, drivers=SCHOOL_DRIVERS)


def test_ve_matches_joint_on_school(school):
    net = _school_net(school)
    joint = inference.enumerate_joint(net)
    for nid in net.node_ids():
        ve = inference.marginal(net, nid)
        je = inference.joint_marginal(joint, net, nid)
        assert ve.probs == pytest.approx(je.probs, abs=TOL)


def test_elimination_order_does_not_change_marginals(school):
    net = _school_net(school)
    for nid in net.node_ids():
        a = inference.marginal(net, nid)
        b = inference.marginal(net, nid, reverse_ties=True)
        assert a.probs == pytest.approx(b.probs, abs=TOL)


def test_explicit_elimination_order(school):
    net = _school_net(school)
    target = net.node_ids()[0]
    order = [n for n in reversed(net.node_ids()) if n != target]
    a = inference.marginal(net, target)
    b = inference.marginal(net, target, order=order)
    assert a.probs == pytest.approx(b.probs, abs=TOL)


def test_marginal_accepts_label_and_text(school):
    net = _school_net(school)
    by_text = inference.marginal(net, "i(ann)")
    by_term = inference.marginal(net, parse_term("i(ann)"))
    assert by_text.probs == by_term.probs
    assert term_to_text(by_text.label) == "i(ann)"


def test_evidence_target_is_point_mass(school):
    net = _school_net(school)
    nid = net.find_by_label(parse_term("i(ann)"))
    net = net.set_evidence(nid, parse_term("h"))
    m = inference.marginal(net, nid)
    assert m.probs == (1.0, 0.0)


def test_inconsistent_evidence_raises():
    net = ConstraintNetwork(skolem_functors=[("x", 1)])
    net, a = net.add_node(parse_term("x(1)"), [parse_term("t"), parse_term("f")], [1.0, 0.0])
    net = net.set_evidence(a, parse_term("f"))  # P(f) = 0
    with pytest.raises(InconsistentEvidenceError):
        inference.marginal(net, a)
    with pytest.raises(InconsistentEvidenceError):
        inference.enumerate_joint(net)


def test_joint_size_guard():
    net = ConstraintNetwork(skolem_functors=[("x", 1)])
    for i in range(25):
        net, _ = net.add_node(
            parse_term(f"x({i})"), [parse_term("t"), parse_term("f")], [0.5, 0.5]
        )
    with pytest.raises(JointSizeError):
        inference.enumerate_joint(net)


def test_random_nets_ve_vs_joint():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        net = random_net(rng)
        joint = inference.enumerate_joint(net)
        for nid in net.node_ids():
            ve = inference.marginal(net, nid)
            je = inference.joint_marginal(joint, net, nid)
            assert ve.probs == pytest.approx(je.probs, abs=TOL)


# --- sampling ---------------------------------------------------------------------


def test_sampling_deterministic(school):
    net = _school_net(school)
    a = inference.sample_csv(net, 500, seed=9)
    b = inference.sample_csv(net, 500, seed=9)
    assert a == b
    c = inference.sample_csv(net, 500, seed=10)
    assert a != c


def test_sample_csv_header_topological(school):
    net = _school_net(school)
    header = inference.sample_csv(net, 1, seed=0).splitlines()[0]
    labels = header.split(",")
    order = [term_to_text(net.nodes[n].label) for n in net.topological_order()]
    assert labels == order


def test_sample_respects_evidence(school):
    net = _school_net(school)
    nid = net.find_by_label(parse_term("i(ann)"))
    net = net.set_evidence(nid, parse_term("l"))
    text = inference.sample_csv(net, 50, seed=3)
    rows = text.splitlines()
    col = rows[0].split(",").index("i(ann)")
    assert all(r.split(",")[col] == "l" for r in rows[1:])


def test_sample_frequencies_match_prior():
    net = ConstraintNetwork(skolem_functors=[("x", 1)])
    net, a = net.add_node(
        parse_term("x(1)"), [parse_term("t"), parse_term("f")], [0.25, 0.75]
    )
    _, draws = inference.sample(net, 20000, seed=5)
    freq = float((draws[:, 0] == 0).mean())
    assert abs(freq - 0.25) < 0.01


# --- grounding --------------------------------------------------------------------


def test_ground_school_node_count(school):
    net = _school_net(school)
    assert len(net) == 18


def test_ground_hmm_horizon(hmm_fixed):
    net = inference.ground_program(hmm_fixed, drivers=["caught(3, C)"])
    labels = sorted(term_to_text(n.label) for n in net.nodes.values())
    assert labels == [
        "c(0)", "c(1)", "c(2)", "c(3)", "p(0)", "p(1)", "p(2)", "p(3)",
    ]


def test_ground_rejects_non_ground_labels(school):
    # default drivers leave entity arguments unbound for school's
    # guard-free clauses
    with pytest.raises(GroundingError):
        inference.ground_program(school)


def test_cyclic_program_cannot_be_ground_by_queries():
    # resolution never terminates on mutually dependent clauses; the
    # structural grounding in the learn module is the tool for these
    from clpbn.errors import LimitExceededError
    from clpbn.learn import structural_ground

    prog = parse_program(fixture_text("cyclic.clpbn"))
    with pytest.raises(LimitExceededError):
        inference.ground_program(prog, drivers=["a(E, X)"])
    net = structural_ground(prog)
    ok, _ = net.check_acyclic()
    assert not ok


def test_ground_with_population(school):
    pop = [parse_term("reg(r4, c2, ann)")]
    net = inference.ground_program(school, population=pop, drivers=SCHOOL_DRIVERS)
    assert net.find_by_label(parse_term("grade(r4)")) is not None
    assert len(net) == 20  # +grade(r4), +sat(r4)


# --- agreement --------------------------------------------------------------------


def test_agreement_check_single_query(school):
    report = inference.agreement_check(
        school, "grade(r2, G).", drivers=SCHOOL_DRIVERS
    )
    assert report["agree"]
    assert report["max_abs_diff"] <= TOL
    assert report["entries"]


def test_agreement_sweep_school(school):
    report = inference.agreement_sweep(school, drivers=SCHOOL_DRIVERS)
    assert report["agree"], report["failures"]
    assert report["comparisons"] >= 100


def test_agreement_sweep_hmm(hmm_fixed):
    report = inference.agreement_sweep(hmm_fixed, drivers=["caught(3, C)"])
    assert report["agree"], report["failures"]
    assert report["comparisons"] >= 100
