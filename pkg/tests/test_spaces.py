import random
from fractions import Fraction

import pytest

from formalcalc.spaces import (Discrete, NEG_INF, OpenSet, POS_INF, RSet,
                               SmoothLine, region_from_json, region_intersect,
                               region_is_compact, region_subset_open,
                               region_to_json, region_union)


def _sample_points():
    # quarter-integer grid covering every integer-endpoint piece below;
    # any nonempty integer-endpoint RSet contains one of these points
    pts = [Fraction(n, 4) for n in range(-40, 41)]
    return pts


def _member_vector(rs, pts):
    return tuple(rs.contains(p) for p in pts)


def test_rset_boolean_algebra_by_membership():
    # oracle: pointwise boolean logic on a sample grid
    rng = random.Random(1)
    pts = _sample_points()
    for _ in range(200):
        def rand_rset():
            pieces = []
            for _ in range(rng.randint(1, 3)):
                lo = Fraction(rng.randint(-6, 5))
                hi = lo + Fraction(rng.randint(0, 4))
                pieces.append((lo, hi, bool(rng.randint(0, 1)),
                               bool(rng.randint(0, 1))))
            return RSet(pieces)
        a, b = rand_rset(), rand_rset()
        va, vb = _member_vector(a, pts), _member_vector(b, pts)
        assert _member_vector(a.union(b), pts) == \
            tuple(x or y for x, y in zip(va, vb))
        assert _member_vector(a.intersect(b), pts) == \
            tuple(x and y for x, y in zip(va, vb))
        assert _member_vector(a.difference(b), pts) == \
            tuple(x and not y for x, y in zip(va, vb))
        assert _member_vector(a.complement(), pts) == \
            tuple(not x for x in va)
        assert a.is_subset(b) == all(y for x, y in zip(va, vb) if x)


def test_rset_canonical_pieces():
    r = RSet([(Fraction(0), Fraction(1), False, True),
              (Fraction(1), Fraction(2), False, True)])
    assert len(r.pieces) == 1
    # degenerate open interval drops out
    assert RSet([(Fraction(1), Fraction(1), True, True)]).is_empty
    # a single point survives
    p = RSet.point(Fraction(3))
    assert p.contains(Fraction(3)) and not p.contains(Fraction(2))


def test_rset_closure_interior():
    r = RSet.open_pairs([(Fraction(0), Fraction(1))])
    assert r.closure().contains(Fraction(0))
    assert not r.closure().interior().contains(Fraction(0))
    assert r.closure().interior() == r


def test_rset_unbounded():
    r = RSet([(NEG_INF, Fraction(0), True, False)])
    assert r.contains(Fraction(-1000))
    assert not r.is_bounded
    assert not region_is_compact(r)
    assert region_is_compact(RSet.closed_pairs([(Fraction(0), Fraction(1))]))


def test_discrete_space_and_opensets():
    sp = Discrete(["b", "a", 3])
    assert sp.points == ("3", "a", "b")
    u = OpenSet(sp, ["a", "3"])
    v = OpenSet(sp, ["a"])
    assert v.is_subset(u) and not u.is_subset(v)
    assert u.intersect(v).labels == frozenset({"a"})
    assert u.union(v).labels == frozenset({"a", "3"})
    assert sp.whole().labels == frozenset({"3", "a", "b"})
    with pytest.raises(ValueError):
        OpenSet(sp, ["zzz"])


def test_smooth_opensets_must_be_open():
    sp = SmoothLine()
    u = OpenSet(sp, [(Fraction(0), Fraction(1))])
    assert u.contains(Fraction(1, 2)) and not u.contains(Fraction(0))
    with pytest.raises(ValueError):
        OpenSet(sp, RSet.closed_pairs([(Fraction(0), Fraction(1))]))
    whole = sp.whole()
    assert whole.contains(Fraction(10 ** 9))


def test_openset_json_roundtrip():
    spd = Discrete(["x", "y"])
    u = OpenSet(spd, ["y"])
    assert OpenSet.from_json(spd, u.to_json()) == u
    sps = SmoothLine()
    w = OpenSet(sps, [(NEG_INF, Fraction(0)), (Fraction(1, 2), POS_INF)])
    assert OpenSet.from_json(sps, w.to_json()) == w


def test_region_helpers():
    spd = Discrete(["p", "q", "r"])
    u = OpenSet(spd, ["p", "q"])
    assert region_subset_open(frozenset({"p"}), u)
    assert not region_subset_open(frozenset({"r"}), u)
    assert region_union(frozenset({"p"}), frozenset({"q"})) == \
        frozenset({"p", "q"})
    assert region_intersect(frozenset({"p", "q"}), frozenset({"q"})) == \
        frozenset({"q"})
    sps = SmoothLine()
    r = region_from_json(sps, [[0, 1], ["3/2", None]])
    assert r.contains(Fraction(1)) and r.contains(Fraction(100))
    assert region_from_json(sps, region_to_json(r)) == r
