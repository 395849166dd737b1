"""Exact order bookkeeping for Fourier integral distribution classes.

Every order that appears in the construction is a rational number with a
power-of-two denominator (half-integers shifted by the conormal order mu),
so the ledger stores orders exactly as ``numerator / 2**log2_den`` pairs and
never touches floating point.  Operator classes carry either one canonical
relation tag or an ordered pair of tags; compositions that the calculus does
not define are rejected instead of guessed.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Tuple, Union

from .errors import DomainError, TagError

__all__ = [
    "Dyadic",
    "CanonicalRelationTag",
    "IplClass",
    "RecursionSchedule",
    "compose_antoniano",
    "compose_single",
    "build_recursion_schedule",
    "predict_zero_section_orders",
    "intersect_all_l",
    "schedule_to_csv",
]


class Dyadic:
    """Exact rational with a power-of-two denominator.

    Stored normalized: either ``log2_den == 0`` or ``num`` is odd.
    """

    __slots__ = ("num", "log2_den")

    def __init__(self, num: int, log2_den: int = 0):
        if log2_den < 0:
            num *= 2 ** (-log2_den)
            log2_den = 0
        while log2_den > 0 and num % 2 == 0:
            num //= 2
            log2_den -= 1
        self.num = num
        self.log2_den = log2_den

    @classmethod
    def from_any(cls, value) -> "Dyadic":
        """Coerce an int, string like '-3/2', Fraction, or Dyadic."""
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, Fraction):
            den = value.denominator
            k = den.bit_length() - 1
            if den != 2**k:
                raise DomainError(f"denominator of {value} is not a power of two")
            return cls(value.numerator, k)
        if isinstance(value, float):
            frac = Fraction(value).limit_denominator(1 << 20)
            if frac != Fraction(value):
                raise DomainError(f"{value} is not an exact dyadic rational")
            return cls.from_any(frac)
        raise TypeError(f"cannot build Dyadic from {type(value).__name__}")

    def _align(self, other: "Dyadic") -> Tuple[int, int, int]:
        k = max(self.log2_den, other.log2_den)
        a = self.num << (k - self.log2_den)
        b = other.num << (k - other.log2_den)
        return a, b, k

    def __add__(self, other) -> "Dyadic":
        other = Dyadic.from_any(other)
        a, b, k = self._align(other)
        return Dyadic(a + b, k)

    __radd__ = __add__

    def __sub__(self, other) -> "Dyadic":
        other = Dyadic.from_any(other)
        a, b, k = self._align(other)
        return Dyadic(a - b, k)

    def __rsub__(self, other) -> "Dyadic":
        return Dyadic.from_any(other) - self

    def __mul__(self, other) -> "Dyadic":
        other = Dyadic.from_any(other)
        return Dyadic(self.num * other.num, self.log2_den + other.log2_den)

    __rmul__ = __mul__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.num, self.log2_den)

    def __eq__(self, other) -> bool:
        try:
            other = Dyadic.from_any(other)
        except (TypeError, DomainError):
            return NotImplemented
        return self.num == other.num and self.log2_den == other.log2_den

    def __lt__(self, other) -> bool:
        other = Dyadic.from_any(other)
        a, b, _ = self._align(other)
        return a < b

    def __le__(self, other) -> bool:
        other = Dyadic.from_any(other)
        a, b, _ = self._align(other)
        return a <= b

    def __gt__(self, other) -> bool:
        return Dyadic.from_any(other) < self

    def __ge__(self, other) -> bool:
        return Dyadic.from_any(other) <= self

    def __hash__(self):
        return hash((self.num, self.log2_den))

    def __float__(self) -> float:
        return self.num / 2**self.log2_den

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 2**self.log2_den)

    def __repr__(self) -> str:
        if self.log2_den == 0:
            return f"{self.num}"
        return f"{self.num}/{2 ** self.log2_den}"


HALF = Dyadic(1, 1)


class CanonicalRelationTag(enum.Enum):
    """The four canonical relations operators in the construction live on."""

    DELTA = "Delta"
    CSIGMA = "CSigma"
    C0 = "C0"
    C0T = "C0Transpose"

    def __repr__(self):
        return self.value


TagSpec = Union[CanonicalRelationTag, Tuple[CanonicalRelationTag, CanonicalRelationTag]]


@dataclass(frozen=True)
class IplClass:
    """Order class on one canonical relation or an ordered pair of them.

    ``l`` is present exactly when ``relations`` is a pair.  Orders are exact
    dyadic rationals.
    """

    p: Dyadic
    l: Dyadic | None
    relations: Tuple[CanonicalRelationTag, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", Dyadic.from_any(self.p))
        if self.l is not None:
            object.__setattr__(self, "l", Dyadic.from_any(self.l))
        rels = self.relations
        if isinstance(rels, CanonicalRelationTag):
            rels = (rels,)
        rels = tuple(rels)
        object.__setattr__(self, "relations", rels)
        if len(rels) not in (1, 2):
            raise TagError("a class carries one relation tag or an ordered pair")
        if len(rels) == 1 and self.l is not None:
            raise TagError("single-relation classes carry no second order l")
        if len(rels) == 2 and self.l is None:
            raise TagError("two-relation classes require the second order l")

    @classmethod
    def pair(cls, p, l, first: CanonicalRelationTag, second: CanonicalRelationTag) -> "IplClass":
        return cls(Dyadic.from_any(p), Dyadic.from_any(l), (first, second))

    @classmethod
    def single(cls, p, relation: CanonicalRelationTag) -> "IplClass":
        return cls(Dyadic.from_any(p), None, (relation,))

    @property
    def is_pair(self) -> bool:
        return len(self.relations) == 2

    def nests_inside(self, other: "IplClass") -> bool:
        """Whether this class is contained in ``other`` (orders no larger)."""
        if self.relations != other.relations:
            return False
        if self.is_pair:
            return self.p <= other.p and self.l <= other.l
        return self.p <= other.p

    def __repr__(self):
        tags = ",".join(t.value for t in self.relations)
        if self.is_pair:
            return f"I^({self.p},{self.l})({tags})"
        return f"I^{self.p}({tags})"


_PAIR_DELTA = (CanonicalRelationTag.DELTA, CanonicalRelationTag.CSIGMA)


def compose_antoniano(a: IplClass, b: IplClass) -> IplClass:
    """Compose two classes on the (diagonal, flowout) pair.

    The result has first order ``p + p' + 1/2`` and second order
    ``l + l' - 1/2`` on the same pair.  Only this pair composes; anything
    else raises :class:`TagError`.
    """
    for cls_ in (a, b):
        if not cls_.is_pair or cls_.relations != _PAIR_DELTA:
            raise TagError(f"operand {cls_!r} is not on the (Delta, CSigma) pair")
    return IplClass.pair(a.p + b.p + HALF, a.l + b.l - HALF, *_PAIR_DELTA)


def compose_single(a: IplClass, b: IplClass) -> IplClass:
    """Compose two single-relation flowout classes: orders add plus 1/2."""
    for cls_ in (a, b):
        if cls_.is_pair or cls_.relations[0] is not CanonicalRelationTag.CSIGMA:
            raise TagError(f"operand {cls_!r} is not a single-relation flowout class")
    return IplClass.single(a.p + b.p + HALF, CanonicalRelationTag.CSIGMA)


def intersect_all_l(cls_: IplClass) -> IplClass:
    """Collapse a two-relation class to its second relation as l -> -infinity.

    Intersecting over all l leaves the single-relation class on the second
    Lagrangian with the same first order.
    """
    if not cls_.is_pair:
        return cls_
    return IplClass.single(cls_.p, cls_.relations[1])


# Classes of the five pieces the operator splits into, as functions of mu
# (and the dimension n for the pieces on the (C0, CSigma) pair).


def class_A12(mu: Dyadic) -> IplClass:
    return IplClass.pair(mu + Dyadic(5, 1), -mu - HALF, *_PAIR_DELTA)


def class_A11(mu: Dyadic) -> IplClass:
    return IplClass.pair(mu + Dyadic(5, 1), -mu - Dyadic(3, 1), *_PAIR_DELTA)


def class_A2(mu: Dyadic) -> IplClass:
    return IplClass.single(mu + Dyadic(5, 1), CanonicalRelationTag.CSIGMA)


def class_A3mu(mu: Dyadic, n: int) -> IplClass:
    return IplClass.pair(
        mu + Dyadic(5, 1), Dyadic(-2) - Dyadic(n, 1), CanonicalRelationTag.C0, CanonicalRelationTag.CSIGMA
    )


def class_A3mu1(mu: Dyadic, n: int) -> IplClass:
    return IplClass.pair(
        mu + Dyadic(5, 1), Dyadic(-1) - Dyadic(n, 1), CanonicalRelationTag.C0, CanonicalRelationTag.CSIGMA
    )


def class_B(mu: Dyadic, i: int, j: int) -> IplClass:
    return IplClass.pair(mu - Dyadic(i) - HALF, -mu - Dyadic(j) + HALF, *_PAIR_DELTA)


def class_E1(mu: Dyadic, i: int, j: int) -> IplClass:
    two_mu = mu + mu
    return IplClass.pair(two_mu - Dyadic(i) + Dyadic(3, 1), -two_mu - Dyadic(j) - HALF, *_PAIR_DELTA)


def class_E23(mu: Dyadic, i: int, j: int) -> IplClass:
    two_mu = mu + mu
    return IplClass.pair(two_mu - Dyadic(i) + Dyadic(5, 1), -two_mu - Dyadic(j) - Dyadic(3, 1), *_PAIR_DELTA)


def class_residual(mu: Dyadic) -> IplClass:
    return IplClass.single(mu + mu + Dyadic(3, 1), CanonicalRelationTag.CSIGMA)


ScheduleKey = Tuple[int, int, str]


@dataclass
class RecursionSchedule:
    """All operator classes generated by M stages of N substages each."""

    mu: Dyadic
    stages: int
    substages: int
    entries: Mapping[ScheduleKey, IplClass] = field(default_factory=dict)
    residual: IplClass | None = None

    def entry(self, i: int, j: int, kind: str) -> IplClass:
        return self.entries[(i, j, kind)]


def build_recursion_schedule(mu, M: int, N: int) -> RecursionSchedule:
    """Generate the full class schedule for an M-stage, N-substage build.

    Entry closed forms (verified against the generating compositions):

    * ``B``  at (i, j): ``(mu - i - 1/2, -mu - j + 1/2)``
    * ``E1`` at (i, j): ``(2mu - i + 3/2, -2mu - j - 1/2)``
    * ``E2`` and ``E3`` at (i, j): ``(2mu - i + 5/2, -2mu - j - 3/2)``

    Raises :class:`DomainError` unless ``mu < -1`` (otherwise the residual
    class is not smoothing) and cross-checks every error entry against the
    pair composition that generates it.
    """
    mu = Dyadic.from_any(mu)
    if not mu < Dyadic(-1):
        raise DomainError(f"conormal order mu={mu} must be below -1 for a smoothing residual")
    if M < 1 or N < 1:
        raise DomainError("need at least one stage and one substage")

    a12 = class_A12(mu)
    a11 = class_A11(mu)
    entries: dict[ScheduleKey, IplClass] = {}
    for i in range(1, M + 1):
        for j in range(1, N + 1):
            b = class_B(mu, i, j)
            e1 = class_E1(mu, i, j)
            e23 = class_E23(mu, i, j)
            entries[(i, j, "B")] = b
            entries[(i, j, "E1")] = e1
            entries[(i, j, "E2")] = e23
            entries[(i, j, "E3")] = e23

            # Cross-checks against the compositions that generate each entry.
            full = compose_antoniano(a12, b)
            assert e1 == IplClass.pair(full.p - 1, full.l, *_PAIR_DELTA), (i, j)
            assert e23 == IplClass.pair(full.p, full.l - 1, *_PAIR_DELTA), (i, j)
            assert compose_antoniano(a11, b) == e23, (i, j)
            if j < N:
                # The next substage piece is built to cancel E2 + E3.
                assert compose_antoniano(a12, class_B(mu, i, j + 1)) == e23, (i, j)
        if i < M:
            # The next stage opens against the accumulated E1 class at j=1.
            assert compose_antoniano(a12, class_B(mu, i + 1, 1)) == class_E1(mu, i, 1), i

    return RecursionSchedule(mu=mu, stages=M, substages=N, entries=entries, residual=class_residual(mu))


def predict_zero_section_orders(m1, m2, n: int) -> Tuple[Dyadic, IplClass, IplClass]:
    """Orders of the two pieces of an adjoint-times-operator composition.

    For factors of orders ``m1, m2 < -1/2`` on the flowout in dimension
    ``n``, the composition splits into classes ``(p, l1)`` on (C0, CSigma)
    and ``(p, l2)`` on (C0^t, CSigma) with ``p = m1 + m2 + 1/2`` and
    ``l_j = -(n + 1)/2 - m_j``.
    """
    m1 = Dyadic.from_any(m1)
    m2 = Dyadic.from_any(m2)
    minus_half = -HALF
    for m in (m1, m2):
        if not m < minus_half:
            raise DomainError(f"operator order {m} must be below -1/2")
    p = m1 + m2 + HALF
    half_np1 = Dyadic(n + 1, 1)
    l1 = -half_np1 - m1
    l2 = -half_np1 - m2
    good = IplClass.pair(p, l1, CanonicalRelationTag.C0, CanonicalRelationTag.CSIGMA)
    bad = IplClass.pair(p, l2, CanonicalRelationTag.C0T, CanonicalRelationTag.CSIGMA)
    return p, good, bad


def schedule_to_csv(schedule: RecursionSchedule, path) -> None:
    """Write the schedule as CSV with exact numerator / log2-denominator columns."""
    kinds = ("B", "E1", "E2", "E3")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stage_i", "substage_j", "kind", "p_num", "p_log2den", "l_num", "l_log2den", "relation_pair"]
        )
        for i in range(1, schedule.stages + 1):
            for j in range(1, schedule.substages + 1):
                for kind in kinds:
                    cls_ = schedule.entry(i, j, kind)
                    writer.writerow(
                        [
                            i,
                            j,
                            kind,
                            cls_.p.num,
                            cls_.p.log2_den,
                            cls_.l.num,
                            cls_.l.log2_den,
                            "|".join(t.value for t in cls_.relations),
                        ]
                    )
        res = schedule.residual
        writer.writerow([0, 0, "residual", res.p.num, res.p.log2_den, "", "", res.relations[0].value])
