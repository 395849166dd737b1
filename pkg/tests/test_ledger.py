import random

import pytest

from greenfio.errors import DomainError, TagError
from greenfio.ledger import (
    CanonicalRelationTag,
    Dyadic,
    IplClass,
    build_recursion_schedule,
    class_A11,
    class_A12,
    compose_antoniano,
    compose_single,
    intersect_all_l,
    predict_zero_section_orders,
)

D = Dyadic.from_any
DELTA = CanonicalRelationTag.DELTA
CSIGMA = CanonicalRelationTag.CSIGMA


def pair(p, l):
    return IplClass.pair(D(p), D(l), DELTA, CSIGMA)


def single(p):
    return IplClass.single(D(p), CSIGMA)


class TestDyadic:
    def test_arithmetic_exact(self):
        assert D("-3/2") + D("5/2") == D(1)
        assert D("1/2") - D("1/2") == D(0)
        assert D("-3/2") * 2 == D(-3)
        assert -D("7/4") == D("-7/4")

    def test_normalization(self):
        x = Dyadic(4, 2)  # 4/4
        assert x.num == 1 and x.log2_den == 0

    def test_ordering(self):
        assert D("-3/2") < D("-5/4") < D(-1)
        assert D("1/2") <= D("1/2")

    def test_rejects_non_dyadic(self):
        with pytest.raises(DomainError):
            D("1/3")

    def test_float_round_trip(self):
        assert float(D("-3/2")) == -1.5
        assert D(0.25) == D("1/4")


class TestComposeAntoniano:
    def test_paper_case(self):
        # mu + 5/2, -mu - 1/2 composed with mu - 3/2, -mu - 1/2 at symbolic mu
        mu = D("-3/2")
        a = pair(mu + D("5/2"), -mu - D("1/2"))
        b = pair(mu - D("3/2"), -mu - D("1/2"))
        out = compose_antoniano(a, b)
        assert out == pair(mu + mu + D("3/2"), -mu - mu - D("3/2"))

    def test_neutral_element(self):
        e = pair("-1/2", "1/2")
        for p, l in [("-3/2", "1/2"), (1, 0), ("7/4", "-9/4")]:
            a = pair(p, l)
            assert compose_antoniano(a, e) == a
            assert compose_antoniano(e, a) == a

    def test_direct_evaluation(self):
        assert compose_antoniano(pair(1, 1), pair(-3, 1)) == pair("-3/2", "3/2")

    def test_associative(self):
        rng = random.Random(7)
        for _ in range(200):
            ps = [Dyadic(rng.randint(-16, 16), rng.randint(0, 3)) for _ in range(3)]
            ls = [Dyadic(rng.randint(-16, 16), rng.randint(0, 3)) for _ in range(3)]
            a, b, c = (pair(p, l) for p, l in zip(ps, ls))
            left = compose_antoniano(compose_antoniano(a, b), c)
            right = compose_antoniano(a, compose_antoniano(b, c))
            assert left == right

    def test_rejects_wrong_tags(self):
        good = pair(0, 0)
        c0_pair = IplClass.pair(D(0), D(0), CanonicalRelationTag.C0, CSIGMA)
        with pytest.raises(TagError):
            compose_antoniano(good, c0_pair)
        with pytest.raises(TagError):
            compose_antoniano(single(0), good)


class TestComposeSingle:
    def test_paper_case(self):
        mu = D("-3/2")
        assert compose_single(single(mu + D("5/2")), single(mu - D("3/2"))) == single(mu + mu + D("3/2"))

    def test_neutral(self):
        for p in [D(0), D("-7/4"), D(3)]:
            assert compose_single(single(p), single("-1/2")) == single(p)

    def test_direct(self):
        assert compose_single(single(-1), single(-1)) == single("-3/2")

    def test_rejects_pairs(self):
        with pytest.raises(TagError):
            compose_single(pair(0, 0), single(0))


class TestSchedule:
    def test_b_entry_mu_neg_three_half(self):
        sched = build_recursion_schedule("-3/2", 3, 3)
        assert sched.entry(1, 1, "B") == pair(-3, 1)

    def test_e3_entry_equals_generating_composition(self):
        mu = D("-3/2")
        sched = build_recursion_schedule(mu, 3, 3)
        e3 = sched.entry(1, 1, "E3")
        assert e3 == compose_antoniano(class_A11(mu), sched.entry(1, 1, "B"))
        # Closed form 2mu - i + 5/2, -2mu - j - 3/2 at i = j = 1.
        assert e3 == pair("-3/2", "1/2")

    def test_all_entries_consistent(self):
        for mu in ["-5/4", "-3/2", -2]:
            sched = build_recursion_schedule(mu, 3, 3)
            mu = D(mu)
            a12 = class_A12(mu)
            for i in range(1, 4):
                for j in range(1, 4):
                    b = sched.entry(i, j, "B")
                    assert b == pair(mu - D(i) - D("1/2"), -mu - D(j) + D("1/2"))
                    full = compose_antoniano(a12, b)
                    assert sched.entry(i, j, "E1") == pair(full.p - 1, full.l)
                    assert sched.entry(i, j, "E2") == pair(full.p, full.l - 1)

    def test_residual_class(self):
        sched = build_recursion_schedule("-3/2", 2, 2)
        assert sched.residual == single("-3/2")

    def test_rejects_non_smoothing_mu(self):
        with pytest.raises(DomainError):
            build_recursion_schedule(-1, 2, 2)
        with pytest.raises(DomainError):
            build_recursion_schedule("-1/2", 2, 2)

    def test_nesting_on_entries(self):
        sched = build_recursion_schedule("-3/2", 3, 3)
        for (i, j, kind), cls_ in sched.entries.items():
            lower_p = IplClass.pair(cls_.p - 1, cls_.l, *cls_.relations)
            lower_l = IplClass.pair(cls_.p, cls_.l - 1, *cls_.relations)
            assert lower_p.nests_inside(cls_)
            assert lower_l.nests_inside(cls_)
            assert not cls_.nests_inside(lower_p)

    def test_intersection_limit_collapses_tag(self):
        sched = build_recursion_schedule("-3/2", 2, 2)
        e1 = sched.entry(2, 2, "E1")
        collapsed = intersect_all_l(e1)
        assert not collapsed.is_pair
        assert collapsed.relations == (CSIGMA,)
        assert collapsed.p == e1.p

    def test_deterministic(self):
        s1 = build_recursion_schedule("-3/2", 3, 3)
        s2 = build_recursion_schedule("-3/2", 3, 3)
        assert s1.entries == s2.entries


class TestZeroSectionOrders:
    def test_symmetric_case(self):
        p, good, bad = predict_zero_section_orders(-1, -1, 1)
        assert p == D("-3/2")
        assert good.l == D(0) and bad.l == D(0)
        assert good.relations == (CanonicalRelationTag.C0, CSIGMA)
        assert bad.relations == (CanonicalRelationTag.C0T, CSIGMA)

    def test_asymmetric_case(self):
        p, good, bad = predict_zero_section_orders(-1, -2, 2)
        assert p == D("-5/2")
        assert good.l == D("-1/2")
        assert bad.l == D("1/2")

    def test_l_equal_iff_orders_equal(self):
        rng = random.Random(3)
        for _ in range(100):
            m1 = Dyadic(-rng.randint(2, 9), 1)  # in (-9/2, -1)
            m2 = Dyadic(-rng.randint(2, 9), 1)
            _, good, bad = predict_zero_section_orders(m1, m2, 2)
            assert (good.l == bad.l) == (m1 == m2)

    def test_rejects_large_orders(self):
        with pytest.raises(DomainError):
            predict_zero_section_orders(0, -1, 1)
        with pytest.raises(DomainError):
            predict_zero_section_orders(-1, "-1/2", 1)


def test_schedule_csv_round_trip(tmp_path):
    from greenfio.ledger import schedule_to_csv

    sched = build_recursion_schedule("-3/2", 3, 3)
    path = tmp_path / "schedule.csv"
    schedule_to_csv(sched, path)
    lines = path.read_text().strip().splitlines()
    # Header, 9 (i, j) cells times 4 kinds, one residual row.
    assert len(lines) == 1 + 9 * 4 + 1
    assert lines[0].split(",")[:3] == ["stage_i", "substage_j", "kind"]
    b11 = next(l for l in lines if l.startswith("1,1,B"))
    # p = -3, l = 1 at mu = -3/2: exact integer fields
    assert b11.split(",")[3:7] == ["-3", "0", "1", "0"]
