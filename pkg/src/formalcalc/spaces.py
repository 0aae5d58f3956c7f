"""Base spaces, their open subsets, and support regions.

Two backends:

* Discrete: a finite set of labelled points with the discrete topology.
  Every subset is open and there are no coordinate directions, so the
  only x-multi-index is the empty tuple.

* SmoothLine: the real line with global coordinate x. Open sets are
  finite unions of open intervals with rational or infinite endpoints,
  held in canonical sorted disjoint form.

The smooth side rests on RSet, an exact boolean algebra of interval
unions with explicit endpoint flags. RSet also models supports (closed,
possibly unbounded unions, including degenerate single points) and
plateau regions, so subset, difference, and emptiness questions are all
decided exactly in rational arithmetic.
"""

from __future__ import annotations

from .errors import DomainMismatchError
from .scalars import rat_from_json, rat_to_json

NEG_INF = float("-inf")
POS_INF = float("inf")


def _is_inf(v) -> bool:
    return v == NEG_INF or v == POS_INF


def _ep_from_json(v, side: str):
    if v is None:
        return NEG_INF if side == "lo" else POS_INF
    return rat_from_json(v)


def _ep_to_json(v):
    return None if _is_inf(v) else rat_to_json(v)


class RSet:
    """Finite union of intervals with rational or infinite endpoints.

    Pieces are (lo, hi, lo_open, hi_open) tuples kept sorted, disjoint,
    and maximal. Infinite endpoints are always open. A piece with
    lo == hi and both ends closed is a single point.
    """

    __slots__ = ("pieces",)

    def __init__(self, pieces=()):
        self.pieces = _canon(pieces)

    @classmethod
    def open_pairs(cls, pairs):
        return cls([(lo, hi, True, True) for lo, hi in pairs])

    @classmethod
    def closed_pairs(cls, pairs):
        return cls([(lo, hi, _is_inf(lo), _is_inf(hi)) for lo, hi in pairs])

    @classmethod
    def point(cls, a):
        return cls([(a, a, False, False)])

    @classmethod
    def whole(cls):
        return cls([(NEG_INF, POS_INF, True, True)])

    # -- queries --------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_bounded(self) -> bool:
        return all(not _is_inf(lo) and not _is_inf(hi)
                   for lo, hi, _, _ in self.pieces)

    def contains(self, x) -> bool:
        for lo, hi, lo_open, hi_open in self.pieces:
            if (x > lo or (x == lo and not lo_open)) and \
               (x < hi or (x == hi and not hi_open)):
                return True
        return False

    def hull(self):
        """(lo, hi) of the smallest enclosing interval; None if empty."""
        if not self.pieces:
            return None
        return (self.pieces[0][0], self.pieces[-1][1])

    def bounds_list(self):
        """Piece endpoint pairs, endpoint flags dropped."""
        return [(lo, hi) for lo, hi, _, _ in self.pieces]

    # -- boolean algebra -------------------------------------------------

    def union(self, other: "RSet") -> "RSet":
        return RSet(self.pieces + other.pieces)

    def complement(self) -> "RSet":
        out = []
        cur_lo, cur_open = NEG_INF, True
        for lo, hi, lo_open, hi_open in self.pieces:
            out.append((cur_lo, lo, cur_open, not lo_open))
            cur_lo, cur_open = hi, not hi_open
        out.append((cur_lo, POS_INF, cur_open, True))
        return RSet(out)

    def intersect(self, other: "RSet") -> "RSet":
        out = []
        for a in self.pieces:
            for b in other.pieces:
                lo, lo_open = max((a[0], a[2]), (b[0], b[2]))
                hi, hi_open = min((a[1], not a[3]), (b[1], not b[3]))
                out.append((lo, hi, lo_open, not hi_open))
        return RSet(out)

    def difference(self, other: "RSet") -> "RSet":
        return self.intersect(other.complement())

    def is_subset(self, other: "RSet") -> bool:
        return self.difference(other).is_empty

    def closure(self) -> "RSet":
        return RSet([(lo, hi, _is_inf(lo), _is_inf(hi))
                     for lo, hi, _, _ in self.pieces])

    def interior(self) -> "RSet":
        return self.complement().closure().complement()

    @property
    def is_open(self) -> bool:
        return self == self.interior()

    # -- plumbing ---------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, RSet) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        if not self.pieces:
            return "RSet()"
        bits = []
        for lo, hi, lo_open, hi_open in self.pieces:
            bits.append("%s%s, %s%s" % ("(" if lo_open else "[", lo, hi,
                                        ")" if hi_open else "]"))
        return "RSet{%s}" % " u ".join(bits)


def _canon(pieces):
    kept = []
    for lo, hi, lo_open, hi_open in pieces:
        if _is_inf(lo):
            lo_open = True
        if _is_inf(hi):
            hi_open = True
        if lo > hi:
            continue
        if lo == hi and (lo_open or hi_open):
            continue
        kept.append((lo, hi, lo_open, hi_open))
    kept.sort(key=lambda p: (p[0], p[2]))
    out = []
    for p in kept:
        if out:
            q = out[-1]
            touches = p[0] < q[1] or (p[0] == q[1] and not (q[3] and p[2]))
            if touches:
                hi, hi_closed = max((q[1], not q[3]), (p[1], not p[3]))
                out[-1] = (q[0], hi, q[2], not hi_closed)
                continue
        out.append(p)
    return tuple(out)


class Discrete:
    """Finite discrete base space with string point labels."""

    kind = "discrete"
    ndim = 0

    def __init__(self, labels):
        pts = tuple(sorted(set(str(p) for p in labels)))
        if not pts:
            raise ValueError("a discrete base space needs at least one point")
        self.points = pts

    def whole(self) -> "OpenSet":
        return OpenSet(self, self.points)

    def __eq__(self, other):
        return isinstance(other, Discrete) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        return "Discrete(%s)" % (list(self.points),)


class SmoothLine:
    """The real line with global coordinate x."""

    kind = "smoothline"
    ndim = 1

    def whole(self) -> "OpenSet":
        return OpenSet(self, [(NEG_INF, POS_INF)])

    def __eq__(self, other):
        return isinstance(other, SmoothLine)

    def __hash__(self):
        return hash("smoothline")

    def __repr__(self):
        return "SmoothLine()"


class OpenSet:
    """An open subset of a base space.

    Discrete: any label subset. SmoothLine: a canonical finite union of
    open intervals, stored as an open RSet.
    """

    __slots__ = ("space", "labels", "rset")

    def __init__(self, space, data):
        self.space = space
        if space.kind == "discrete":
            labels = frozenset(str(p) for p in data)
            stray = labels - set(space.points)
            if stray:
                raise ValueError("labels not in the base space: %s"
                                 % sorted(stray))
            self.labels = labels
            self.rset = None
        else:
            rs = data if isinstance(data, RSet) else RSet.open_pairs(data)
            if not rs.is_open:
                raise ValueError("not an open interval union: %r" % (rs,))
            self.rset = rs
            self.labels = None

    # -- set operations ---------------------------------------------------

    def union(self, other: "OpenSet") -> "OpenSet":
        self._check_space(other)
        if self.labels is not None:
            return OpenSet(self.space, self.labels | other.labels)
        return OpenSet(self.space, self.rset.union(other.rset))

    def intersect(self, other: "OpenSet") -> "OpenSet":
        self._check_space(other)
        if self.labels is not None:
            return OpenSet(self.space, self.labels & other.labels)
        return OpenSet(self.space, self.rset.intersect(other.rset))

    def is_subset(self, other: "OpenSet") -> bool:
        self._check_space(other)
        if self.labels is not None:
            return self.labels <= other.labels
        return self.rset.is_subset(other.rset)

    def minus_region(self, region) -> "OpenSet":
        """Open part of this set lying outside the given region."""
        if self.labels is not None:
            return OpenSet(self.space, self.labels - set(region))
        return OpenSet(self.space, self.rset.difference(region).interior())

    def contains(self, x) -> bool:
        if self.labels is not None:
            return x in self.labels
        return self.rset.contains(x)

    @property
    def is_empty(self) -> bool:
        if self.labels is not None:
            return not self.labels
        return self.rset.is_empty

    def points(self):
        """Labels of a discrete open set, in sorted order."""
        assert self.labels is not None
        return sorted(self.labels)

    def _check_space(self, other):
        if self.space != other.space:
            raise DomainMismatchError("open sets over different base spaces")

    # -- plumbing -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, OpenSet) or self.space != other.space:
            return False
        return self.labels == other.labels and self.rset == other.rset

    def __hash__(self):
        return hash((self.space, self.labels, self.rset))

    def __repr__(self):
        if self.labels is not None:
            return "OpenSet(%s)" % sorted(self.labels)
        return "OpenSet(%r)" % (self.rset,)

    # -- serialization ---------------------------------------------------------

    def to_json(self):
        if self.labels is not None:
            return sorted(self.labels)
        return [[_ep_to_json(lo), _ep_to_json(hi)]
                for lo, hi, _, _ in self.rset.pieces]

    @classmethod
    def from_json(cls, space, v):
        if not isinstance(v, list):
            raise ValueError("open set must be a JSON array")
        if space.kind == "discrete":
            return cls(space, v)
        pairs = []
        for pair in v:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ValueError("interval must be a [lo, hi] pair: %r" % (pair,))
            pairs.append((_ep_from_json(pair[0], "lo"),
                          _ep_from_json(pair[1], "hi")))
        return cls(space, pairs)


# -- support regions -----------------------------------------------------
#
# A support witness is a frozenset of labels (discrete) or an RSet
# (smooth, usually closed). Regions are compared exactly.

def region_empty(space):
    return frozenset() if space.kind == "discrete" else RSet()


def region_union(a, b):
    if isinstance(a, frozenset):
        return a | b
    return a.union(b)


def region_intersect(a, b):
    if isinstance(a, frozenset):
        return a & b
    return a.intersect(b)


def region_is_empty(r) -> bool:
    if isinstance(r, frozenset):
        return not r
    return r.is_empty


def region_is_compact(r) -> bool:
    if isinstance(r, frozenset):
        return True
    return r.is_bounded


def region_subset_open(r, u: OpenSet, within: OpenSet = None) -> bool:
    """Is the region inside the open set, relative to an ambient open set?

    With `within` given, only the part of the region meeting `within`
    must lie in `u`; supports of sections over an open whole set are
    closures taken in the line, so their overhang outside the ambient
    set is ignored.
    """
    if isinstance(r, frozenset):
        if within is not None:
            r = r & within.labels
        return r <= u.labels
    if within is not None:
        r = r.intersect(within.rset)
    return r.is_subset(u.rset)


def region_intersect_open(r, u: OpenSet):
    if isinstance(r, frozenset):
        return r & u.labels
    return r.intersect(u.rset)


def region_from_json(space, v):
    if space.kind == "discrete":
        return frozenset(str(p) for p in v)
    pairs = []
    for pair in v:
        pairs.append((_ep_from_json(pair[0], "lo"), _ep_from_json(pair[1], "hi")))
    return RSet.closed_pairs(pairs)


def region_to_json(r):
    if isinstance(r, frozenset):
        return sorted(r)
    return [[_ep_to_json(lo), _ep_to_json(hi)] for lo, hi, _, _ in r.pieces]
