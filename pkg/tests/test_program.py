import pytest

from clpbn.errors import ClpbnSyntaxError, InvalidProgramError, MalformedCptError
from clpbn.parser import term_to_text
from clpbn.program import Clause, Directive, cpt_spec_from_term, parse_program
from clpbn.parser import parse_term


def _codes(text):
    return [d.code for d in parse_program(text).validate()]


def _diags(text):
    return parse_program(text).validate()


GOOD = "q(X) :- {X = s(a) with p([h,l],[0.5,0.5],[])}.\n"


def test_clean_program_has_no_diagnostics():
    assert _codes(GOOD) == []


def test_school_fixture_clean(school):
    assert school.validate() == []


def test_hmm_warns_on_column_four(hmm):
    diags = hmm.validate()
    assert [d.severity for d in diags] == ["warning"]
    assert diags[0].code == "non-normalized-column"
    assert "column 4" in diags[0].message and "0.1" in diags[0].message


def test_hmm_fixed_clean(hmm_fixed):
    assert hmm_fixed.validate() == []


# --- well-formedness codes, one fixture per code --------------------------------

WF1 = "w1(X) :- {X = s1(a) with p([h,l],[0.5,0.5],[P])}.\n"
WF2 = (
    "w2a(X) :- {X = shared(k) with p([h,l],[0.5,0.5],[])}.\n"
    "w2b(X) :- {X = shared(k) with p([h,l],[0.5,0.5],[])}.\n"
)
WF3A = "w3(X) :- {X = s3(a) with p(oops,[0.5,0.5],[])}.\n"
WF3B = "w4(X) :- {X = s4(a) with p([h,l],[0.5,0.5],oops)}.\n"
WF3C = "w5(X) :- {X = s5(a) with p([h,l],[0.5,0.5,0.5],[])}.\n"


@pytest.mark.parametrize(
    "text,code",
    [(WF1, "WF1"), (WF2, "WF2"), (WF3A, "WF3a"), (WF3B, "WF3b"), (WF3C, "WF3c")],
    ids=["WF1", "WF2", "WF3a", "WF3b", "WF3c"],
)
def test_wf_codes(text, code):
    assert _codes(text) == [code]


def test_wf3a_duplicate_domain_value():
    text = "d(X) :- {X = s6(a) with p([h,h],[0.5,0.5],[])}.\n"
    assert _codes(text) == ["WF3a"]


def test_wf3c_non_p_cpt():
    text = "c6(X) :- {X = s7(a) with q([h],[1.0])}.\n"
    assert _codes(text) == ["WF3c"]


def test_wf2_allows_specialization_chain():
    # a recursive family may re-introduce the functor at different terms
    text = """
base(X) :- {X = c(0) with p([t,f],[0.5,0.5],[])}.
step(I, X) :- I > 0, {X = c(I) with p([t,f],[0.5,0.5],[])}.
"""
    assert _codes(text) == []


def test_wf1_var_only_in_skolem_argument():
    text = "v(X) :- {X = s8(Q) with p([h,l],[0.5,0.5],[])}.\n"
    assert _codes(text) == ["WF1"]


def test_non_normalized_column_threshold():
    off = "n1(X) :- {X = s9(a) with p([h,l],[0.6,0.5],[])}.\n"
    diags = _diags(off)
    assert [d.code for d in diags] == ["non-normalized-column"]
    assert diags[0].severity == "warning"
    # within tolerance: quiet
    near = "n2(X) :- {X = s10(a) with p([h,l],[0.5000000001,0.4999999999],[])}.\n"
    assert _codes(near) == []


def test_fact_scan_warns_on_non_normalized_bound_table(school):
    from clpbn.fixtures import fixture_text

    diags = parse_program(fixture_text("int_table.clpbn")).validate()
    assert [d.code for d in diags] == ["non-normalized-column"]
    assert "int_table" in diags[0].message


# --- structure ------------------------------------------------------------------


def test_items_clauses_directives():
    p = parse_program(":- skolem_constants([sk1]).\nf(a).\ng(X) :- f(X).\n")
    kinds = [type(i).__name__ for i in p.items]
    assert kinds == ["Directive", "Clause", "Clause"]
    assert p.clauses[1].key == ("g", 1)
    assert ("sk1" in p.skolem_constants)


def test_evidence_directive_collected():
    p = parse_program(
        "e(X) :- {X = ev(a) with p([h,l],[0.5,0.5],[])}.\n:- evidence(ev(a), h).\n"
    )
    assert len(p.evidence) == 1
    label, value = p.evidence[0]
    assert term_to_text(label) == "ev(a)"
    assert term_to_text(value) == "h"


def test_skolem_registry(school):
    for functor in ["ab", "pop", "dif", "i", "grade", "sat", "rating", "rank"]:
        assert (functor, 1) in school.skolem_registry


def test_to_text_reparses(school):
    text = school.to_text()
    again = parse_program(text)
    assert again.validate() == []
    assert len(again.clauses) == len(school.clauses)
    # printing is a fixed point once normalized
    assert again.to_text() == text


def test_clause_to_text():
    c = parse_program("h(X) :- a(X), b(X).\n").clauses[0]
    assert c.to_text() == "h(X) :- a(X), b(X)."
    d = Directive(parse_term("skolem_constants([sk1])"))
    assert d.to_text() == ":- skolem_constants([sk1])."


# --- cpt_spec_from_term ----------------------------------------------------------


def _spec(text):
    p = parse_program(GOOD)
    return cpt_spec_from_term(parse_term(text), p.is_skolem_term)


def test_cpt_spec_ok():
    spec = _spec("p([h,l],[0.3,0.7],[])")
    assert [term_to_text(v) for v in spec.domain] == ["h", "l"]
    assert spec.table == (0.3, 0.7)
    assert spec.parents == ()


def test_cpt_spec_rejects_bad_shapes():
    bad = [
        "q([h],[1.0])",  # not p/3
        "p(x,[0.5],[])",  # domain not list
        "p([h,l],[0.5],[])",  # length not a multiple
        "p([h,l],[0.5,x],[])",  # non-number entry
        "p([h,l],[0.5,1.5],[])",  # out of [0,1]
        "p([h,l],[0.5,0.5],x)",  # parents not list
    ]
    for text in bad:
        with pytest.raises(MalformedCptError):
            _spec(text)


def test_program_level_errors_raise_on_ensure_valid():
    p = parse_program(WF1)
    with pytest.raises(InvalidProgramError):
        p.ensure_valid()


def test_parse_error_has_line():
    with pytest.raises(ClpbnSyntaxError):
        parse_program("f(a.\n")
