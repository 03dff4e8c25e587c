"""Tests for finite preorders, lattices, quantales, and the well-below
machinery.  The closed-form well-below decision is pinned to the literal
all-families definition on every carrier small enough to enumerate."""

import pytest

from nablamod import ContractError, InputError, ParseError, ResourceBoundError
from nablamod.quantale_lab import (
    FinitePoset,
    FinitePreorder,
    FiniteQuantale,
    check_quantale_laws,
    is_isotone,
    make_example,
    meet_quantale,
    parse_lattice,
    raney_check,
    vdl_check,
    well_below,
    well_below_by_definition,
)


def powerset_members(name):
    return frozenset() if name == "{}" else frozenset(name[1:-1].split(","))


# ---------------------------------------------------------------------------
# Order structure.


def test_preorder_closure():
    p = FinitePreorder(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert p.leq("a", "c")  # transitivity
    assert p.leq("b", "b")  # reflexivity
    assert not p.leq("c", "a")


def test_preorder_allows_cycles_poset_does_not():
    cyc = [("a", "b"), ("b", "a")]
    p = FinitePreorder(["a", "b"], cyc)
    assert p.leq("a", "b") and p.leq("b", "a")
    with pytest.raises(InputError):
        FinitePoset(["a", "b"], cyc)


def test_chain_joins_are_max():
    q = make_example("chain", 5)
    p = q.poset
    assert p.join("1", "3") == "3"
    assert p.meet("1", "3") == "1"
    assert p.top() == "4"
    assert p.bottom() == "0"
    assert p.join_all([]) == "0"
    assert p.join_all(["1", "4", "2"]) == "4"


def test_powerset_joins_are_unions():
    p = make_example("powerset", 3).poset
    assert p.join("{1}", "{2,3}") == "{1,2,3}"
    assert p.meet("{1,2}", "{2,3}") == "{2}"
    assert p.bottom() == "{}"
    assert p.top() == "{1,2,3}"


def test_vee_shape_is_not_a_lattice():
    p = FinitePoset(["a", "b", "top"], [("a", "top"), ("b", "top")])
    assert p.join("a", "b") == "top"
    assert p.meet("a", "b") is None
    assert not p.is_lattice()
    with pytest.raises(InputError):
        meet_quantale(p)


# ---------------------------------------------------------------------------
# Well below.


def test_well_below_frozen_powerset_cases():
    q = make_example("powerset", 2)
    assert well_below(q, "{}", "{1}")
    assert well_below(q, "{1}", "{1,2}")
    assert not well_below(q, "{1,2}", "{1,2}")
    assert not well_below(q, "{}", "{}")  # the empty family refutes bottom


def test_well_below_powerset_characterization():
    # an element is well below B exactly when it is empty (and B is not) or
    # a singleton whose member lies in B
    for n in range(4):
        p = make_example("powerset", n).poset
        for a in p.elements:
            for b in p.elements:
                sa, sb = powerset_members(a), powerset_members(b)
                expected = (not sa and bool(sb)) or (len(sa) == 1 and sa <= sb)
                assert well_below(p, a, b) == expected, (n, a, b)


def test_well_below_matches_literal_definition():
    carriers = [
        make_example("chain", 1),
        make_example("chain", 2),
        make_example("chain", 5),
        make_example("powerset", 0),
        make_example("powerset", 2),
        make_example("powerset", 3),
        make_example("diamond"),
    ]
    for q in carriers:
        for a in q.elements:
            for b in q.elements:
                assert well_below(q, a, b) == well_below_by_definition(q, a, b)


def test_well_below_on_chains_is_not_strict_order():
    # on a finite chain every element is well below itself except bottom;
    # the strict-inequality shortcut familiar from the unit interval is a
    # property of density, not of chains in general
    p = make_example("chain", 4).poset
    assert not well_below(p, "0", "0")
    for e in ["1", "2", "3"]:
        assert well_below(p, e, e)


def test_well_below_oracle_is_gated():
    with pytest.raises(ResourceBoundError):
        well_below_by_definition(make_example("powerset", 4), "{}", "{1}")


def test_raney_frozen_cases():
    assert raney_check(make_example("chain", 6))
    assert raney_check(make_example("powerset", 3))
    assert not raney_check(make_example("diamond"))


def test_vdl_frozen_cases():
    assert vdl_check(make_example("two")) == {"raney": True, "vdl1": True, "vdl2": True}
    assert vdl_check(make_example("powerset", 2)) == {
        "raney": True,
        "vdl1": True,
        "vdl2": False,
    }
    assert vdl_check(make_example("chain", 3)) == {
        "raney": True,
        "vdl1": True,
        "vdl2": True,
    }


# ---------------------------------------------------------------------------
# Quantale laws.


def test_two_with_meet_is_a_value_quantale():
    report = check_quantale_laws(make_example("two"))
    assert report.semigroup
    assert report.left_dist and report.right_dist
    assert report.commutative
    assert report.unital and report.unit == "1"
    assert report.integral
    assert report.value_quantale


def test_powerset_meet_quantale_is_not_a_value_quantale():
    report = check_quantale_laws(make_example("powerset", 2))
    assert report.semigroup and report.left_dist and report.right_dist
    assert report.unital and report.integral
    assert not report.value_quantale  # join stability near the top fails


def test_chain_meet_quantale_is_a_frame_and_value_quantale():
    report = check_quantale_laws(make_example("chain", 4))
    assert report.left_dist and report.right_dist  # frame: meet over joins
    assert report.value_quantale


def test_diamond_meet_fails_distributivity():
    report = check_quantale_laws(make_example("diamond"))
    assert report.semigroup and report.commutative
    assert not report.left_dist and not report.right_dist
    assert not report.value_quantale


def test_non_associative_operation_is_reported():
    p = make_example("two").poset
    op = {("0", "0"): "1", ("0", "1"): "0", ("1", "0"): "0", ("1", "1"): "0"}
    report = check_quantale_laws(FiniteQuantale(p, op))
    assert not report.semigroup
    assert not report.unital


def test_quantale_construction_requires_total_table():
    p = make_example("two").poset
    with pytest.raises(InputError):
        FiniteQuantale(p, {("0", "0"): "0"})
    with pytest.raises(InputError):
        FiniteQuantale(p, {(a, b): "2" for a in "01" for b in "01"})


def test_law_check_is_gated():
    with pytest.raises(ResourceBoundError):
        check_quantale_laws(make_example("chain", 17))


def test_make_example_validates_arguments():
    with pytest.raises(InputError):
        make_example("chain")
    with pytest.raises(InputError):
        make_example("powerset", 6)
    with pytest.raises(InputError):
        make_example("mystery")


# ---------------------------------------------------------------------------
# Isotone maps.


def test_is_isotone():
    src = FinitePreorder(["a", "b"], [("a", "b")])
    dst = make_example("chain", 3).poset
    assert is_isotone(src, dst, {"a": "0", "b": "2"})
    assert is_isotone(src, dst, {"a": "1", "b": "1"})
    assert not is_isotone(src, dst, {"a": "2", "b": "0"})
    with pytest.raises(InputError):
        is_isotone(src, dst, {"a": "0"})


# ---------------------------------------------------------------------------
# Lattice files.


TWO_FILE = """\
# the two-element chain with its meet
elem 0
elem 1
leq 0 1
op 0 0 0
op 0 1 0
op 1 0 0
op 1 1 1
unit 1
"""


def test_parse_lattice_roundtrip():
    lf = parse_lattice(TWO_FILE)
    assert lf.poset.elements == ("0", "1")
    assert lf.poset.leq("0", "1")
    assert lf.unit == "1"
    q = lf.quantale()
    assert check_quantale_laws(q).value_quantale


def test_parse_lattice_without_op():
    lf = parse_lattice("elem x\nelem y\nleq x y\n")
    assert lf.op is None
    assert lf.poset.is_lattice()
    with pytest.raises(InputError):
        lf.quantale()


@pytest.mark.parametrize(
    "text,line",
    [
        ("elem a\nleq a b\n", 2),
        ("elem a\nelem a\n", 2),
        ("elem a\nwat a\n", 2),
        ("elem a\nleq a\n", 2),
        ("elem a\nelem b\nleq a b\nleq b a\n", 4),
    ],
)
def test_parse_lattice_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_lattice(text)
    assert exc.value.line == line


def test_parse_lattice_comments_and_blank_lines():
    lf = parse_lattice("\n# nothing here\nelem only  # trailing\n")
    assert lf.poset.elements == ("only",)
