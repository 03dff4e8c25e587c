"""Categories enriched in a quantale of distances.

A space with step-function distances is the same data as a small category
enriched in the step-function quantale: points become objects and each
ordered pair carries a hom given by its distance profile.  This module
provides that categorical presentation (:class:`NablaCategory`), its
counterpart over an explicit finite quantale (:class:`FiniteQCategory`),
the conversions between spaces and categories, the open-ball topology,
and two bridge constructions: preorders as categories over the
two-element quantale, and extended quasi-pseudometrics as categories
over a truncated-addition chain.

Everything here is exact and instance-level: the conversions are checked
by running them, not by appeal to a general theorem.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import ContractError, InputError, ParseError
from .modular import (
    FiniteTopology,
    PointMap,
    StepModularSpace,
    _checked_points,
    _gate,
    _minimal_masks,
    candidate_parameters,
    regularize,
    topology,
)
from .quantale_lab import FinitePoset, FinitePreorder, FiniteQuantale, make_example
from .stepfn import (
    ZERO,
    ExtRational,
    RationalLike,
    StepFunction,
    as_fraction,
    ext,
    format_step_literal,
    is_left_continuous,
    le_op,
    left_regularize,
    oplus_interior,
    parse_step_literal,
    well_below_fstep,
)

__all__ = [
    "NablaCategory",
    "FiniteQCategory",
    "QCategoryReport",
    "check_qcategory",
    "e_mod",
    "e_nabla",
    "e_nabla_L",
    "u_regularize",
    "verify_diagram",
    "is_q_functor",
    "ball",
    "ball_topology",
    "verify_topology_theorem",
    "to_preorder",
    "from_preorder",
    "ExtendedQPMetric",
    "lawvere_truncated_quantale",
    "to_eqpm",
    "from_eqpm",
    "parse_qcat",
    "format_qcat",
]


class NablaCategory:
    """Objects with step-function homs.

    Same well-formedness rules as a step space: the hom table must cover
    every ordered pair of distinct objects, and diagonal homs default to
    the zero function.  Whether the composition and identity axioms hold
    is a separate question answered by :func:`check_qcategory`.
    """

    def __init__(
        self, points: Iterable[str], hom: Mapping[tuple[str, str], StepFunction]
    ):
        pts = _checked_points(points)
        known = set(pts)
        table: dict[tuple[str, str], StepFunction] = {}
        for (a, b), fn in hom.items():
            if a not in known or b not in known:
                raise InputError(f"hom given for unknown pair ({a}, {b})")
            if not isinstance(fn, StepFunction):
                raise InputError(f"hom for ({a}, {b}) is not a step function")
            table[(a, b)] = fn
        for a in pts:
            table.setdefault((a, a), ZERO)
            for b in pts:
                if (a, b) not in table:
                    raise InputError(f"missing hom for pair ({a}, {b})")
        self.points = pts
        self._hom = table

    def hom(self, x: str, y: str) -> StepFunction:
        try:
            return self._hom[(x, y)]
        except KeyError:
            raise InputError(f"unknown pair ({x}, {y})") from None

    def all_homs(self) -> Iterable[StepFunction]:
        return self._hom.values()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NablaCategory):
            return NotImplemented
        return self.points == other.points and self._hom == other._hom

    def __hash__(self) -> int:
        return hash((self.points, frozenset(self._hom.items())))

    def __repr__(self) -> str:
        return f"<NablaCategory on {len(self.points)} objects>"


class FiniteQCategory:
    """Objects with homs drawn from an explicit finite quantale.

    The quantale must carry a unit; enrichment without one is out of
    scope.  Diagonal homs default to the unit element.
    """

    def __init__(
        self,
        quantale: FiniteQuantale,
        points: Iterable[str],
        hom: Mapping[tuple[str, str], str],
    ):
        if quantale.unit is None:
            raise InputError("enrichment needs a quantale with a unit")
        pts = _checked_points(points)
        known = set(pts)
        carrier = set(quantale.elements)
        table: dict[tuple[str, str], str] = {}
        for (a, b), v in hom.items():
            if a not in known or b not in known:
                raise InputError(f"hom given for unknown pair ({a}, {b})")
            if v not in carrier:
                raise InputError(f"hom value {v!r} is not a quantale element")
            table[(a, b)] = v
        for a in pts:
            table.setdefault((a, a), quantale.unit)
            for b in pts:
                if (a, b) not in table:
                    raise InputError(f"missing hom for pair ({a}, {b})")
        self.quantale = quantale
        self.points = pts
        self._hom = table

    def hom(self, x: str, y: str) -> str:
        try:
            return self._hom[(x, y)]
        except KeyError:
            raise InputError(f"unknown pair ({x}, {y})") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteQCategory):
            return NotImplemented
        if self.points != other.points or self._hom != other._hom:
            return False
        q1, q2 = self.quantale, other.quantale
        if q1 is q2:
            return True
        return (
            q1.elements == q2.elements
            and q1.unit == q2.unit
            and q1.poset.pairs() == q2.poset.pairs()
            and all(
                q1.mul(a, b) == q2.mul(a, b)
                for a in q1.elements
                for b in q1.elements
            )
        )

    def __repr__(self) -> str:
        return (
            f"<FiniteQCategory on {len(self.points)} objects over "
            f"{len(self.quantale.elements)} quantale elements>"
        )


Category = Union[NablaCategory, FiniteQCategory]


@dataclass(frozen=True)
class QCategoryReport:
    """Outcome of the enriched-category axiom checks."""

    qc1: bool
    qc2: bool
    separated: bool
    symmetric: bool


def check_qcategory(cat: Category) -> QCategoryReport:
    """Check identity (qc1) and composition (qc2) along with the optional
    separation and symmetry properties.

    For step-function homs, composition uses the strict-split convolution,
    mirroring the split triangle check on spaces; "the hom is as large as
    possible" means equal to the zero function, which is the top of the
    reversed order.  For finite quantales the same reading uses the
    lattice top and the quantale multiplication.
    """
    if isinstance(cat, NablaCategory):
        return _check_nabla(cat)
    return _check_finite(cat)


def _check_nabla(cat: NablaCategory) -> QCategoryReport:
    pts = cat.points
    qc1 = all(cat.hom(x, x) == ZERO for x in pts)
    qc2 = True
    for x in pts:
        for z in pts:
            hxz = cat.hom(x, z)
            for y in pts:
                comp = oplus_interior(hxz, cat.hom(z, y))
                if not le_op(comp, cat.hom(x, y)):
                    qc2 = False
                    break
            if not qc2:
                break
        if not qc2:
            break
    separated = all(
        not (cat.hom(x, y) == ZERO and cat.hom(y, x) == ZERO)
        for x in pts
        for y in pts
        if x != y
    )
    symmetric = all(cat.hom(x, y) == cat.hom(y, x) for x in pts for y in pts)
    return QCategoryReport(qc1=qc1, qc2=qc2, separated=separated, symmetric=symmetric)


def _check_finite(cat: FiniteQCategory) -> QCategoryReport:
    q = cat.quantale
    top = q.poset.top()
    if top is None:
        raise InputError("quantale order has no top element")
    leq = q.poset.leq
    pts = cat.points
    qc1 = all(leq(top, cat.hom(x, x)) for x in pts)
    qc2 = all(
        leq(q.mul(cat.hom(x, z), cat.hom(z, y)), cat.hom(x, y))
        for x in pts
        for z in pts
        for y in pts
    )
    separated = all(
        not (leq(top, cat.hom(x, y)) and leq(top, cat.hom(y, x)))
        for x in pts
        for y in pts
        if x != y
    )
    symmetric = all(cat.hom(x, y) == cat.hom(y, x) for x in pts for y in pts)
    return QCategoryReport(qc1=qc1, qc2=qc2, separated=separated, symmetric=symmetric)


# ---------------------------------------------------------------------------
# Space <-> category conversions.


def e_mod(space: StepModularSpace) -> NablaCategory:
    """View a step space as an enriched category.

    The distance table already assigns each ordered pair a step function,
    so this just re-curries the data; object order and hom values are
    untouched.  The split triangle axiom becomes the composition axiom and
    the zero diagonal becomes the identity axiom.
    """
    if not isinstance(space, StepModularSpace):
        raise InputError("only step spaces have a categorical presentation")
    return NablaCategory(
        space.points, {(a, b): space.w(a, b) for a in space.points for b in space.points}
    )


def e_nabla(cat: NablaCategory) -> StepModularSpace:
    """Inverse of :func:`e_mod`: read the hom table as a distance table."""
    if not isinstance(cat, NablaCategory):
        raise InputError("only step-function categories convert to spaces")
    return StepModularSpace(
        cat.points, {(a, b): cat.hom(a, b) for a in cat.points for b in cat.points}
    )


def e_nabla_L(cat: NablaCategory) -> StepModularSpace:
    """Like :func:`e_nabla`, but restricted to categories all of whose homs
    are left continuous; anything else breaks the restriction's contract."""
    for a in cat.points:
        for b in cat.points:
            if not is_left_continuous(cat.hom(a, b)):
                raise ContractError(
                    f"hom ({a}, {b}) is not left continuous"
                )
    return e_nabla(cat)


def u_regularize(cat: NablaCategory) -> NablaCategory:
    """Left-regularize every hom."""
    return NablaCategory(
        cat.points,
        {
            (a, b): left_regularize(cat.hom(a, b))
            for a in cat.points
            for b in cat.points
        },
    )


def verify_diagram(space: StepModularSpace) -> bool:
    """Regularizing the space and regularizing its categorical presentation
    must land on the same space: compare
    e_nabla_L(u_regularize(e_mod(S))) with regularize(S) structurally."""
    via_category = e_nabla_L(u_regularize(e_mod(space)))
    return via_category == regularize(space)


# ---------------------------------------------------------------------------
# Functors.


def is_q_functor(m: PointMap) -> bool:
    """Whether a point map respects the enrichment: each source hom must
    stay below the hom between the image objects.

    Between step-function categories this is the order on step functions;
    between finite enriched categories (over the same quantale carrier)
    the quantale order.  Mixed inputs make no sense.
    """
    src, dst = m.source, m.target
    if isinstance(src, NablaCategory) and isinstance(dst, NablaCategory):
        return all(
            le_op(src.hom(x, y), dst.hom(m(x), m(y)))
            for x in src.points
            for y in src.points
        )
    if isinstance(src, FiniteQCategory) and isinstance(dst, FiniteQCategory):
        if src.quantale.elements != dst.quantale.elements:
            raise InputError("functor check needs a shared quantale carrier")
        leq = dst.quantale.poset.leq
        return all(
            leq(src.hom(x, y), dst.hom(m(x), m(y)))
            for x in src.points
            for y in src.points
        )
    raise InputError("functor check needs two categories of the same kind")


# ---------------------------------------------------------------------------
# Open balls.


def ball(
    cat: NablaCategory,
    x: str,
    t: RationalLike,
    eps: Union[RationalLike, ExtRational],
) -> frozenset[str]:
    """The open ball around ``x`` with the step radius given by ``t`` and
    ``eps``: all objects whose hom from ``x`` lies strictly inside the
    radius in the well-below sense."""
    if x not in cat.points:
        raise InputError(f"unknown object {x!r}")
    t_f = as_fraction(t)
    if t_f <= 0:
        raise InputError(f"parameter must be positive, got {t_f}")
    e = ext(eps)
    return frozenset(
        y for y in cat.points if well_below_fstep(t_f, e, cat.hom(x, y))
    )


def ball_topology(cat: NablaCategory, *, max_points: int = 12) -> FiniteTopology:
    """The topology with the open balls as a base.

    Only step radii over the finite candidate grid are used: any other
    radius sits between two grid radii, and its ball is then squeezed
    between theirs, so the generated topology is the same.  A set is open
    when every member lies in some ball (around any center) inside it.
    """
    _gate(cat, max_points)
    pts = cat.points
    n = len(pts)
    index = {p: i for i, p in enumerate(pts)}
    t_cands, eps_cands = candidate_parameters(e_nabla(cat))
    base: set[int] = set()
    for t in t_cands:
        for eps in eps_cands:
            for z in pts:
                m = 0
                for y in ball(cat, z, t, eps):
                    m |= 1 << index[y]
                base.add(m)
    per_point: list[set[int]] = [set() for _ in range(n)]
    for m in base:
        mm = m
        while mm:
            j = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            per_point[j].add(m)
    minimal = [_minimal_masks(s) for s in per_point]
    good = []
    for g in range(1 << n):
        ok = True
        m = g
        while m:
            i = (m & -m).bit_length() - 1
            m &= m - 1
            if not any(mask & ~g == 0 for mask in minimal[i]):
                ok = False
                break
        if ok:
            good.append(g)
    opens = frozenset(
        frozenset(pts[j] for j in range(n) if g >> j & 1) for g in good
    )
    return FiniteTopology(points=pts, opens=opens)


def verify_topology_theorem(space: StepModularSpace) -> bool:
    """The parameter topology of a space must coincide with the open-ball
    topology of its categorical presentation."""
    return topology(space) == ball_topology(e_mod(space))


# ---------------------------------------------------------------------------
# Preorders as categories over the two-element quantale.


def _is_two_quantale(q: FiniteQuantale) -> bool:
    return set(q.elements) == {"0", "1"}


def to_preorder(cat: FiniteQCategory) -> FinitePreorder:
    """Read a category over the two-element quantale as a preorder:
    x precedes y exactly when the hom is the top element \"1\"."""
    if not _is_two_quantale(cat.quantale):
        raise InputError("preorder bridge needs the two-element quantale")
    pairs = [
        (x, y)
        for x in cat.points
        for y in cat.points
        if cat.hom(x, y) == "1"
    ]
    return FinitePreorder(cat.points, pairs)


def from_preorder(pre: FinitePreorder) -> FiniteQCategory:
    """Present a preorder as a category over the two-element quantale."""
    q = make_example("two")
    hom = {
        (x, y): "1" if pre.leq(x, y) else "0"
        for x in pre.elements
        for y in pre.elements
    }
    return FiniteQCategory(q, pre.elements, hom)


# ---------------------------------------------------------------------------
# Extended quasi-pseudometrics as categories over a truncated-addition chain.


class ExtendedQPMetric:
    """A finite point set with a single extended distance per ordered pair.

    No axioms are imposed here; they are checked through the categorical
    presentation.  Diagonal entries default to zero.
    """

    def __init__(
        self,
        points: Iterable[str],
        d: Mapping[tuple[str, str], Union[RationalLike, ExtRational]],
    ):
        pts = _checked_points(points)
        known = set(pts)
        table: dict[tuple[str, str], ExtRational] = {}
        for (a, b), v in d.items():
            if a not in known or b not in known:
                raise InputError(f"distance given for unknown pair ({a}, {b})")
            val = ext(v)
            if not val.is_infinite and val.as_fraction() < 0:
                raise InputError(f"negative distance for ({a}, {b})")
            table[(a, b)] = val
        for a in pts:
            table.setdefault((a, a), ext(0))
            for b in pts:
                if (a, b) not in table:
                    raise InputError(f"missing distance for pair ({a}, {b})")
        self.points = pts
        self._d = table

    def d(self, x: str, y: str) -> ExtRational:
        try:
            return self._d[(x, y)]
        except KeyError:
            raise InputError(f"unknown pair ({x}, {y})") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExtendedQPMetric):
            return NotImplemented
        return self.points == other.points and self._d == other._d

    def __hash__(self) -> int:
        return hash((self.points, frozenset(self._d.items())))

    def __repr__(self) -> str:
        return f"<ExtendedQPMetric on {len(self.points)} points>"


_CARRIER_CAP = 100_000


def lawvere_truncated_quantale(
    values: Iterable[Union[RationalLike, ExtRational]],
) -> FiniteQuantale:
    """The smallest chain quantale of extended numbers containing the given
    values, zero, and infinity, closed under addition saturated past twice
    the largest finite value.

    Saturation keeps the carrier finite without disturbing any sum that a
    binary composition check can see: two carrier values never add to more
    than the threshold, so only longer iterated sums collapse to infinity.
    The order is reversed (smaller numbers sit higher), making 0 both the
    top and the unit.
    """
    finite: set[Fraction] = {Fraction(0)}
    has_inf = False
    for v in values:
        e = ext(v)
        if e.is_infinite:
            has_inf = True
            continue
        f = e.as_fraction()
        if f < 0:
            raise InputError(f"negative value {f}")
        finite.add(f)
    threshold = 2 * max(finite)
    positives = [f for f in finite if f > 0]
    if positives:
        # every multiple of the smallest value up to the threshold lands in
        # the closure, so this rejects hopeless inputs before any real work
        if threshold / min(positives) > _CARRIER_CAP:
            raise InputError("value set does not close to a manageable carrier")
    frontier = set(finite)
    while frontier:
        new: set[Fraction] = set()
        for a in frontier:
            for b in finite:
                s = a + b
                if s <= threshold and s not in finite and s not in new:
                    new.add(s)
                    if len(finite) + len(new) > _CARRIER_CAP:
                        raise InputError(
                            "value set does not close to a manageable carrier"
                        )
        finite.update(new)
        frontier = new

    ordered = sorted(finite)
    ids = [str(ext(f)) for f in ordered] + ["inf"]
    numeric: dict[str, Optional[Fraction]] = {str(ext(f)): f for f in ordered}
    numeric["inf"] = None
    # reversed chain: numerically larger means lower in the order
    pairs = []
    chain = list(reversed(ids))  # from bottom (inf) upward to 0
    for lo, hi in zip(chain, chain[1:]):
        pairs.append((lo, hi))
    poset = FinitePoset(ids, pairs)

    def add(a: str, b: str) -> str:
        fa, fb = numeric[a], numeric[b]
        if fa is None or fb is None:
            return "inf"
        s = fa + fb
        return str(ext(s)) if s <= threshold else "inf"

    op = {(a, b): add(a, b) for a in ids for b in ids}
    return FiniteQuantale(poset, op, unit="0")


def from_eqpm(metric: ExtendedQPMetric) -> FiniteQCategory:
    """Present an extended distance table as a category over the truncated
    addition chain generated by its values."""
    q = lawvere_truncated_quantale(
        metric.d(x, y) for x in metric.points for y in metric.points
    )
    hom = {
        (x, y): str(metric.d(x, y))
        for x in metric.points
        for y in metric.points
    }
    return FiniteQCategory(q, metric.points, hom)


def to_eqpm(cat: FiniteQCategory) -> ExtendedQPMetric:
    """Read a category whose hom labels are extended numbers back as a
    distance table."""
    table: dict[tuple[str, str], ExtRational] = {}
    for x in cat.points:
        for y in cat.points:
            v = cat.hom(x, y)
            try:
                table[(x, y)] = ext(v)
            except (ValueError, ZeroDivisionError, InputError):
                raise InputError(
                    f"hom value {v!r} is not an extended number"
                ) from None
    return ExtendedQPMetric(cat.points, table)


# ---------------------------------------------------------------------------
# File format.


_WORD = re.compile(r"\S+")


def parse_qcat(text: str, *, base_path: Optional[str] = None) -> Category:
    """Parse the line-oriented category format.

    The header is ``qcat nabla`` or ``qcat finite <lattice-file>`` (path
    taken relative to ``base_path``).  ``point <id>`` declares objects and
    ``hom <a> <b> ...`` gives hom values: a step literal in the nabla
    case, a quantale element id in the finite case.  Diagonal homs default
    to zero respectively the unit.
    """
    kind: Optional[str] = None
    quantale: Optional[FiniteQuantale] = None
    points: list[str] = []
    seen: set[str] = set()
    nabla_hom: dict[tuple[str, str], StepFunction] = {}
    finite_hom: dict[tuple[str, str], str] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        cut = raw.find("#")
        body = raw[:cut] if cut >= 0 else raw
        tokens = [(mt.group(0), mt.start() + 1) for mt in _WORD.finditer(body)]
        if not tokens:
            continue
        head, head_col = tokens[0]
        if kind is None:
            if head != "qcat" or len(tokens) < 2 or tokens[1][0] not in (
                "nabla",
                "finite",
            ):
                raise ParseError(
                    "expected header 'qcat nabla' or 'qcat finite <lattice-file>'",
                    lineno,
                    head_col,
                )
            kind = tokens[1][0]
            if kind == "finite":
                if len(tokens) != 3:
                    raise ParseError(
                        "'qcat finite' needs a lattice file path",
                        lineno,
                        head_col,
                    )
                quantale = _load_quantale(tokens[2][0], base_path)
            elif len(tokens) != 2:
                raise ParseError("'qcat nabla' takes no arguments", lineno, head_col)
            continue
        if head == "qcat":
            raise ParseError("duplicate header", lineno, head_col)
        if head == "point":
            if len(tokens) != 2:
                raise ParseError("'point' takes one name", lineno, head_col)
            name, col = tokens[1]
            if name in seen:
                raise ParseError(f"duplicate point {name!r}", lineno, col)
            seen.add(name)
            points.append(name)
        elif head == "hom":
            if len(tokens) < 4:
                raise ParseError(
                    "'hom' needs two points and a value", lineno, head_col
                )
            a, col_a = tokens[1]
            b, col_b = tokens[2]
            if a not in seen:
                raise ParseError(f"unknown point {a!r}", lineno, col_a)
            if b not in seen:
                raise ParseError(f"unknown point {b!r}", lineno, col_b)
            key = (a, b)
            if key in nabla_hom or key in finite_hom:
                raise ParseError(f"duplicate entry for ({a}, {b})", lineno, head_col)
            if kind == "nabla":
                lit_col = tokens[3][1]
                nabla_hom[key] = parse_step_literal(
                    body[lit_col - 1 :], line=lineno, col_offset=lit_col - 1
                )
            else:
                if len(tokens) != 4:
                    raise ParseError(
                        "'hom' takes a single element id here", lineno, head_col
                    )
                v, col_v = tokens[3]
                assert quantale is not None
                if v not in set(quantale.elements):
                    raise ParseError(
                        f"{v!r} is not an element of the quantale", lineno, col_v
                    )
                finite_hom[key] = v
        else:
            raise ParseError(f"unknown directive {head!r}", lineno, head_col)

    if kind is None:
        raise ParseError("empty file: expected a 'qcat' header", 1, 1)
    if not points:
        raise InputError("category file declares no points")
    if kind == "nabla":
        return NablaCategory(points, nabla_hom)
    assert quantale is not None
    return FiniteQCategory(quantale, points, finite_hom)


def _load_quantale(path: str, base_path: Optional[str]) -> FiniteQuantale:
    from .quantale_lab import parse_lattice

    full = path if base_path is None else os.path.join(base_path, path)
    try:
        with open(full, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise InputError(f"cannot read lattice file {path!r}: {err}") from err
    try:
        lat = parse_lattice(text)
    except ParseError as err:
        raise InputError(f"in lattice file {path!r}: {err}") from err
    return lat.quantale()


def format_qcat(cat: NablaCategory) -> str:
    """Serialize a step-function category; parsing the output reproduces
    it exactly.  Finite categories are not serialized because their
    quantale lives in a separate file this function cannot invent."""
    if not isinstance(cat, NablaCategory):
        raise InputError("only step-function categories can be serialized")
    lines = ["qcat nabla"]
    for p in cat.points:
        lines.append(f"point {p}")
    for a in cat.points:
        for b in cat.points:
            lines.append(f"hom {a} {b} {format_step_literal(cat.hom(a, b))}")
    return "\n".join(lines) + "\n"
