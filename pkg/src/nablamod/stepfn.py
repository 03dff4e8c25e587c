"""Non-increasing step functions with exact rational arithmetic.

This module is the value side of the whole package: distances are not numbers
but functions of a positive parameter, non-increasing, with values in the
nonnegative rationals extended by infinity.  The carrier implemented here is
the set of such functions that are piecewise constant with finitely many
rational cut points, where the value *at* a cut is distinguished from the
value on the open interval after it.  That distinction is load-bearing: the
interesting counterexamples live exactly in functions that jump at a cut.

Ordering is the opposite pointwise order (``le_op(f, g)`` means ``g <= f``
pointwise in the usual sense), so the constant-zero function is the top
element and the constant-infinity function is the bottom.  Under that order
the carrier is a complete lattice, and ``oplus`` (infimal convolution) makes
it a commutative quantale whose unit is the top.

All computations are exact; there is no floating point in any result.
"""

from __future__ import annotations

import math
import random
import re
from bisect import bisect_right
from fractions import Fraction
from math import lcm
from typing import Iterable, NamedTuple, Union

from .errors import InputError, ParseError

__all__ = [
    "ExtRational",
    "INF",
    "ext",
    "as_fraction",
    "Cut",
    "StepFunction",
    "ZERO",
    "BOTTOM",
    "eval_at",
    "value_after",
    "le_op",
    "join_op",
    "meet_op",
    "oplus",
    "oplus_interior",
    "f_step",
    "left_regularize",
    "is_left_continuous",
    "well_below_top",
    "well_below_fstep",
    "time_rescale",
    "scale_values",
    "parse_step_literal",
    "format_step_literal",
    "random_step",
    "POSITION_GRID",
    "VALUE_GRID",
]

RationalLike = Union[int, str, Fraction]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce an int, ``p/q`` string, or Fraction to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise InputError(f"not a rational value: {value!r}")


class ExtRational:
    """A nonnegative rational or infinity, with absorbing arithmetic.

    Addition treats infinity as absorbing; multiplication uses the convention
    ``0 * inf == 0`` (needed so that scaling a gauge function by a zero
    distance yields the zero function).  The order is total, with every
    finite value below infinity.
    """

    __slots__ = ("_num",)

    def __init__(self, value: Union[RationalLike, "ExtRational", None]) -> None:
        if value is None:
            self._num: Fraction | None = None
            return
        if isinstance(value, ExtRational):
            self._num = value._num
            return
        if isinstance(value, str) and value.strip() == "inf":
            self._num = None
            return
        num = as_fraction(value)
        if num < 0:
            raise InputError(f"negative value not allowed: {num}")
        self._num = num

    @property
    def is_infinite(self) -> bool:
        return self._num is None

    def as_fraction(self) -> Fraction:
        if self._num is None:
            raise InputError("infinite value has no fraction form")
        return self._num

    def __add__(self, other: "ExtRational") -> "ExtRational":
        if self._num is None or other._num is None:
            return INF
        return ExtRational(self._num + other._num)

    def __mul__(self, other: "ExtRational") -> "ExtRational":
        if self._num == 0 or other._num == 0:
            return ExtRational(0)
        if self._num is None or other._num is None:
            return INF
        return ExtRational(self._num * other._num)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExtRational):
            return NotImplemented
        return self._num == other._num

    def __lt__(self, other: "ExtRational") -> bool:
        if self._num is None:
            return False
        if other._num is None:
            return True
        return self._num < other._num

    def __le__(self, other: "ExtRational") -> bool:
        return self == other or self < other

    def __gt__(self, other: "ExtRational") -> bool:
        return other < self

    def __ge__(self, other: "ExtRational") -> bool:
        return other <= self

    def __hash__(self) -> int:
        return hash(self._num)

    def __str__(self) -> str:
        return "inf" if self._num is None else str(self._num)

    def __repr__(self) -> str:
        return f"ExtRational({self})"


INF = ExtRational(None)


def ext(value: Union[RationalLike, ExtRational, None]) -> ExtRational:
    """Shorthand constructor for :class:`ExtRational`."""
    return value if isinstance(value, ExtRational) else ExtRational(value)


class Cut(NamedTuple):
    """One cut of a step function: the position, the value exactly there,
    and the value on the open interval that follows."""

    pos: Fraction
    at: ExtRational
    after: ExtRational


class StepFunction:
    """A non-increasing piecewise-constant map from (0, inf) to [0, inf].

    ``head`` is the value on the initial open interval before the first cut
    (or everywhere, if there are no cuts).  Instances are immutable and kept
    in canonical form (cuts that change nothing are merged away), so
    structural equality coincides with pointwise equality and no tolerance is
    ever needed in tests.
    """

    __slots__ = ("head", "cuts")

    head: ExtRational
    cuts: tuple[Cut, ...]

    def __init__(
        self,
        head: Union[RationalLike, ExtRational],
        cuts: Iterable[tuple] = (),
    ) -> None:
        head_v = ext(head)
        normalized: list[Cut] = []
        prev_pos: Fraction | None = None
        prev_val = head_v
        for raw in cuts:
            pos, at, after = raw
            pos_f = as_fraction(pos)
            at_v = ext(at)
            after_v = ext(after)
            if pos_f <= 0:
                raise InputError(f"cut position must be positive, got {pos_f}")
            if prev_pos is not None and pos_f <= prev_pos:
                raise InputError(
                    f"cut positions must be strictly increasing, got {pos_f} after {prev_pos}"
                )
            if at_v > prev_val or after_v > at_v:
                raise InputError(
                    f"values must be non-increasing, got {prev_val} -> {at_v} -> {after_v} at cut {pos_f}"
                )
            prev_pos = pos_f
            if at_v == prev_val and after_v == prev_val:
                continue  # redundant cut
            normalized.append(Cut(pos_f, at_v, after_v))
            prev_val = after_v
        object.__setattr__(self, "head", head_v)
        object.__setattr__(self, "cuts", tuple(normalized))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("StepFunction is immutable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return self.head == other.head and self.cuts == other.cuts

    def __hash__(self) -> int:
        return hash((self.head, self.cuts))

    def __repr__(self) -> str:
        return f"<{format_step_literal(self)}>"

    def __str__(self) -> str:
        return format_step_literal(self)

    def __call__(self, t: RationalLike) -> ExtRational:
        return eval_at(self, t)

    @property
    def positions(self) -> tuple[Fraction, ...]:
        return tuple(c.pos for c in self.cuts)

    def final_value(self) -> ExtRational:
        """The eventual value (on the unbounded last interval)."""
        return self.cuts[-1].after if self.cuts else self.head

    def attained_values(self) -> set[ExtRational]:
        vals = {self.head}
        for c in self.cuts:
            vals.add(c.at)
            vals.add(c.after)
        return vals

    def is_constant(self) -> bool:
        return not self.cuts


ZERO = StepFunction(0)
BOTTOM = StepFunction(INF)


def eval_at(f: StepFunction, t: RationalLike) -> ExtRational:
    """The value of ``f`` at parameter ``t > 0``, honoring at/after cuts."""
    t_f = as_fraction(t)
    if t_f <= 0:
        raise InputError(f"parameter must be positive, got {t_f}")
    positions = [c.pos for c in f.cuts]
    i = bisect_right(positions, t_f)
    if i == 0:
        return f.head
    cut = f.cuts[i - 1]
    return cut.at if cut.pos == t_f else cut.after


def value_after(f: StepFunction, t: RationalLike) -> ExtRational:
    """The constant value of ``f`` on the open interval just right of ``t >= 0``."""
    t_f = as_fraction(t)
    positions = [c.pos for c in f.cuts]
    i = bisect_right(positions, t_f)
    return f.head if i == 0 else f.cuts[i - 1].after


def _merged_positions(fs: Iterable[StepFunction]) -> list[Fraction]:
    pos: set[Fraction] = set()
    for f in fs:
        pos.update(c.pos for c in f.cuts)
    return sorted(pos)


def le_op(f: StepFunction, g: StepFunction) -> bool:
    """True iff ``f`` is below ``g`` in the opposite pointwise order.

    Concretely: ``eval_at(g, t) <= eval_at(f, t)`` for every ``t > 0``,
    decided exactly on the merged cut grid (each cut point plus one value per
    open interval).
    """
    if g.head > f.head:
        return False
    for p in _merged_positions((f, g)):
        if eval_at(g, p) > eval_at(f, p):
            return False
        if value_after(g, p) > value_after(f, p):
            return False
    return True


def _pointwise(fs: Iterable[StepFunction], pick) -> StepFunction:
    fns = list(fs)
    if not fns:
        raise InputError("empty family; use the ZERO/BOTTOM constants instead")
    head = pick(f.head for f in fns)
    cuts = []
    for p in _merged_positions(fns):
        at = pick(eval_at(f, p) for f in fns)
        after = pick(value_after(f, p) for f in fns)
        cuts.append((p, at, after))
    return StepFunction(head, cuts)


def join_op(fs: Iterable[StepFunction]) -> StepFunction:
    """Join in the opposite order = pointwise minimum in the usual order."""
    return _pointwise(fs, min)


def meet_op(fs: Iterable[StepFunction]) -> StepFunction:
    """Meet in the opposite order = pointwise maximum in the usual order."""
    return _pointwise(fs, max)


# ---------------------------------------------------------------------------
# Infimal convolution.
#
# The hot path below works on integer-scaled data: cut positions are scaled
# by twice their common denominator (so midpoints stay integral) and finite
# values by theirs; infinity rides along as math.inf, which mixes exactly
# with Python ints under + and min.

_IFn = tuple[object, list[int], list[object], list[object]]


def _scale_positions(f: StepFunction, p_scale: int) -> list[int]:
    out = []
    for c in f.cuts:
        scaled = c.pos * p_scale
        out.append(scaled.numerator)  # exact: p_scale is a multiple of the denominator
    return out


def _scale_value(v: ExtRational, v_scale: int):
    if v.is_infinite:
        return math.inf
    scaled = v.as_fraction() * v_scale
    return scaled.numerator


def _scaled_fn(f: StepFunction, p_scale: int, v_scale: int) -> _IFn:
    return (
        _scale_value(f.head, v_scale),
        _scale_positions(f, p_scale),
        [_scale_value(c.at, v_scale) for c in f.cuts],
        [_scale_value(c.after, v_scale) for c in f.cuts],
    )


def _ieval(fn: _IFn, t: int):
    head, pos, at, after = fn
    i = bisect_right(pos, t)
    if i == 0:
        return head
    return at[i - 1] if pos[i - 1] == t else after[i - 1]


def _iafter(fn: _IFn, t: int):
    head, pos, _at, after = fn
    i = bisect_right(pos, t)
    return head if i == 0 else after[i - 1]


def _conv_value(tau: int, fi: _IFn, gi: _IFn, with_boundary: bool):
    """Infimum of f(r) + g(s) over splits r + s = tau.

    Interior splits have r, s > 0.  With ``with_boundary`` the degenerate
    splits r = 0 and s = 0 contribute the head (0+ limit) of the respective
    function, which is what makes the zero function a genuine unit.
    """
    best = math.inf
    if with_boundary:
        b1 = fi[0] + _ieval(gi, tau)
        b2 = _ieval(fi, tau) + gi[0]
        if b1 < best:
            best = b1
        if b2 < best:
            best = b2
    pts: set[int] = set()
    for p in fi[1]:
        if 0 < p < tau:
            pts.add(p)
    for q in gi[1]:
        r = tau - q
        if 0 < r < tau:
            pts.add(r)
    spts = sorted(pts)
    for r in spts:
        v = _ieval(fi, r) + _ieval(gi, tau - r)
        if v < best:
            best = v
    prev = 0
    for b in spts:
        v = _iafter(fi, prev) + _iafter(gi, tau - b)
        if v < best:
            best = v
        prev = b
    v = _iafter(fi, prev) + _iafter(gi, 0)
    if v < best:
        best = v
    return best


def _unscale(v, v_scale: int) -> ExtRational:
    return INF if v == math.inf else ExtRational(Fraction(v, v_scale))


def _oplus_impl(f: StepFunction, g: StepFunction, with_boundary: bool) -> StepFunction:
    if f == BOTTOM or g == BOTTOM:
        return BOTTOM
    if with_boundary:
        # ZERO is the unit of the boundary-inclusive form (and only of it).
        if f == ZERO:
            return g
        if g == ZERO:
            return f
    p_scale = 2 * lcm(
        1, *(c.pos.denominator for c in f.cuts), *(c.pos.denominator for c in g.cuts)
    )
    v_scale = lcm(
        1,
        *(
            v.as_fraction().denominator
            for fn in (f, g)
            for v in fn.attained_values()
            if not v.is_infinite
        ),
    )
    fi = _scaled_fn(f, p_scale, v_scale)
    gi = _scaled_fn(g, p_scale, v_scale)
    f_marks = [0, *fi[1]]
    g_marks = [0, *gi[1]]
    cands = sorted({p + q for p in f_marks for q in g_marks} - {0})
    head = _unscale(fi[0] + gi[0], v_scale)
    cuts = []
    for i, c in enumerate(cands):
        at = _conv_value(c, fi, gi, with_boundary)
        probe = (c + cands[i + 1]) // 2 if i + 1 < len(cands) else c + 1
        after = _conv_value(probe, fi, gi, with_boundary)
        cuts.append((Fraction(c, p_scale), _unscale(at, v_scale), _unscale(after, v_scale)))
    return StepFunction(head, cuts)


def oplus(f: StepFunction, g: StepFunction) -> StepFunction:
    """Infimal convolution: the quantale multiplication of the step carrier.

    ``oplus(f, g)(t)`` is the infimum of ``f(r) + g(s)`` over splits
    ``r + s = t`` with ``r, s >= 0``, where the value at 0 is read as the
    function's head (its limit from the right at 0).  Including the
    degenerate splits is what makes the zero function a strict unit and the
    operation associative on non-left-continuous inputs.  Axiom checking for
    spaces uses :func:`oplus_interior` instead, which keeps the classic split
    triangle inequality.

    The result is exact: its cuts lie among pairwise sums of the inputs'
    sample positions and the at/after values account for one-sided limits.
    """
    return _oplus_impl(f, g, with_boundary=True)


def oplus_interior(f: StepFunction, g: StepFunction) -> StepFunction:
    """Infimal convolution over strictly positive splits only.

    ``oplus_interior(f, g)(t)`` is the infimum of ``f(r) + g(s)`` over
    ``r + s = t`` with ``r, s > 0``.  On left-continuous inputs this agrees
    with :func:`oplus`; in general it is larger at left-jump points (its
    convolution with the zero function is the left regularization).  It is
    the form matching the split triangle axiom of modular spaces.
    """
    return _oplus_impl(f, g, with_boundary=False)


def f_step(t: RationalLike, eps: Union[RationalLike, ExtRational]) -> StepFunction:
    """The step radius: infinity before ``t``, value ``eps`` at and after.

    These functions are exactly the radii used for open balls; with
    ``eps = inf`` the cut merges away and the result is the bottom element.
    """
    t_f = as_fraction(t)
    eps_v = ext(eps)
    if t_f <= 0:
        raise InputError(f"threshold must be positive, got {t_f}")
    if not eps_v.is_infinite and eps_v.as_fraction() == 0:
        raise InputError("radius value must be positive")
    return StepFunction(INF, [(t_f, eps_v, eps_v)])


def left_regularize(f: StepFunction) -> StepFunction:
    """Replace the value at each cut by the limit from the left.

    The result is the largest left-continuous function below ``f`` in the
    opposite order (equivalently: ``t -> inf of f on (0, t)``).
    """
    cuts = []
    prev = f.head
    for c in f.cuts:
        cuts.append((c.pos, prev, c.after))
        prev = c.after
    return StepFunction(f.head, cuts)


def is_left_continuous(f: StepFunction) -> bool:
    """True iff ``f`` has no left jump at any cut."""
    prev = f.head
    for c in f.cuts:
        if c.at != prev:
            return False
        prev = c.after
    return True


def well_below_top(f: StepFunction) -> bool:
    """Decide whether ``f`` is well below the top (zero) element.

    Characterization: ``f`` must be infinite on some initial interval and its
    infimum (the eventual value) must be strictly positive.  The constant
    infinity (bottom) satisfies both.  Validated in the test suite against
    explicit refuting families for each failed condition.
    """
    return f.head.is_infinite and final_positive(f)


def final_positive(f: StepFunction) -> bool:
    v = f.final_value()
    return v.is_infinite or v.as_fraction() > 0


def well_below_fstep(
    t: RationalLike, eps: Union[RationalLike, ExtRational], g: StepFunction
) -> bool:
    """Decide whether the step radius at ``(t, eps)`` is well below ``g``.

    For finite ``eps`` this reduces to ``g(t) < eps``: the join of everything
    not above the radius is the function with value ``eps`` on ``(0, t]`` and
    0 after, and ``g`` escapes it exactly when ``g(t) < eps``.  For
    ``eps = inf`` the radius is the bottom element, and bottom is well below
    precisely the non-bottom elements, which the plain evaluation test would
    get wrong.
    """
    t_f = as_fraction(t)
    eps_v = ext(eps)
    if t_f <= 0:
        raise InputError(f"threshold must be positive, got {t_f}")
    if not eps_v.is_infinite and eps_v.as_fraction() == 0:
        raise InputError("radius value must be positive")
    if eps_v.is_infinite:
        return g != BOTTOM
    return eval_at(g, t_f) < eps_v


def time_rescale(f: StepFunction, k: RationalLike) -> StepFunction:
    """The function ``t -> f(k * t)`` (cuts move to pos / k)."""
    k_f = as_fraction(k)
    if k_f <= 0:
        raise InputError(f"rescale factor must be positive, got {k_f}")
    return StepFunction(f.head, [(c.pos / k_f, c.at, c.after) for c in f.cuts])


def scale_values(f: StepFunction, c: Union[RationalLike, ExtRational]) -> StepFunction:
    """Pointwise multiply all values by ``c`` (with 0 * inf = 0)."""
    c_v = ext(c)
    return StepFunction(
        f.head * c_v, [(cut.pos, cut.at * c_v, cut.after * c_v) for cut in f.cuts]
    )


# ---------------------------------------------------------------------------
# Textual literal.

_TOKEN_RE = re.compile(r"\S+")


def format_step_literal(f: StepFunction) -> str:
    parts = [f"step head={f.head}"]
    for c in f.cuts:
        parts.append(f"cut={c.pos} at={c.at} after={c.after}")
    return " ".join(parts)


def _parse_value(text: str, line: int, col: int) -> ExtRational:
    if text == "inf":
        return INF
    try:
        frac = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad value {text!r}", line, col) from None
    if frac < 0:
        raise ParseError(f"negative value {text!r}", line, col)
    return ExtRational(frac)


def parse_step_literal(text: str, *, line: int = 1, col_offset: int = 0) -> StepFunction:
    """Parse the bit-exact literal ``step head=<v> [cut=<t> at=<v> after=<v>]*``.

    ``line``/``col_offset`` locate the literal inside a larger file so parse
    errors point at the right token.
    """
    tokens = [(m.group(0), col_offset + m.start() + 1) for m in _TOKEN_RE.finditer(text)]

    def fail(msg: str, col: int):
        raise ParseError(msg, line, col)

    if not tokens or tokens[0][0] != "step":
        fail("expected 'step'", tokens[0][1] if tokens else col_offset + 1)
    if len(tokens) < 2 or not tokens[1][0].startswith("head="):
        fail("expected 'head=<value>'", tokens[1][1] if len(tokens) > 1 else tokens[0][1])
    head = _parse_value(tokens[1][0][5:], line, tokens[1][1])
    rest = tokens[2:]
    if len(rest) % 3 != 0:
        fail("incomplete cut group (need cut=, at=, after=)", rest[-1][1])
    cuts = []
    for i in range(0, len(rest), 3):
        (t_cut, c_cut), (t_at, c_at), (t_after, c_after) = rest[i : i + 3]
        if not t_cut.startswith("cut="):
            fail("expected 'cut=<t>'", c_cut)
        if not t_at.startswith("at="):
            fail("expected 'at=<value>'", c_at)
        if not t_after.startswith("after="):
            fail("expected 'after=<value>'", c_after)
        try:
            pos = Fraction(t_cut[4:])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad cut position {t_cut[4:]!r}", line, c_cut) from None
        at = _parse_value(t_at[3:], line, c_at)
        after = _parse_value(t_after[6:], line, c_after)
        cuts.append((pos, at, after))
    try:
        return StepFunction(head, cuts)
    except InputError as exc:
        raise ParseError(str(exc), line, tokens[0][1]) from None


# ---------------------------------------------------------------------------
# Random generation (the generator grid shared by the verification suites).

POSITION_GRID: tuple[Fraction, ...] = tuple(Fraction(i, 4) for i in range(1, 33))
VALUE_GRID: tuple[ExtRational, ...] = (INF,) + tuple(
    ExtRational(Fraction(i, 4)) for i in range(16, -1, -1)
)


def random_step(rng: random.Random, max_cuts: int = 6) -> StepFunction:
    """A random step function: up to ``max_cuts`` cuts on the quarter grid
    in (0, 8], values drawn from {0, 1/4, ..., 4, inf}."""
    k = rng.randint(0, max_cuts)
    positions = sorted(rng.sample(POSITION_GRID, k))
    values = sorted((rng.choice(VALUE_GRID) for _ in range(2 * k + 1)), reverse=True)
    head = values[0]
    cuts = []
    for i, pos in enumerate(positions):
        cuts.append((pos, values[2 * i + 1], values[2 * i + 2]))
    return StepFunction(head, cuts)
