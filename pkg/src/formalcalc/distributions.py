"""Distributions, generalized functions, and point-supported functionals.

Value spaces are coordinate spaces C^m; every E-valued object is a
tuple of m scalar coefficient objects and every E-valued operation is
the componentwise scalar operation.

Three dual families over a common coefficient type BaseDistribution:

* FormalDistribution: continuous functionals on compactly supported
  formal functions, graded by y*-multi-indices with L! pairing weights.
  They restrict (transpose of extension by zero); the compactly
  supported ones form CompactFormalDistribution, which extends to
  larger open sets and, through a cutoff, to functionals on all global
  sections (cutoff_extend).

* GeneralizedFunction: continuous functionals on compactly supported
  formal densities, graded by y-multi-indices up to a truncation order.
  Formal functions embed here, and the embedding reproduces the
  density pairing.

* PointDistribution: finite combinations of jet evaluations at a single
  point; the normalized monomial family is dual to the jet basis.

A BaseDistribution on the discrete backend is a weight map; on the
smooth line it is a finite sum of SmoothTerm(g) (integrate g against
the partner) and PointTerm(a, i, c) (c times the i-th derivative of
the partner's coefficient function at a). When a derivative stack
d_x^I from a density coefficient meets a term, the stack is transposed
onto the smooth side: SmoothTerm differentiates g, PointTerm folds the
stack into its own order with the sign (-1)^|I|.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .basedensity import BaseDensity
from .densities import FormalDensity, submultiindices
from .errors import (BackendError, DomainMismatchError, SupportError,
                     TruncationError)
from .expr import Const, Expr, ZERO, diff, ev, mul, parse_sexpr, pow_, to_sexpr, X
from .functions import (FormalFunction, SupportedFormalFunction, coeff_diff,
                        coeff_ev, cutoff_product)
from .multiindex import (degree, enumerate_upto, key_str, mi, mi_factorial,
                         mi_sub, parse_key)
from .quadrature import DEFAULT_ABS_TOL, integrate_expr
from .scalars import QC, QC_ZERO, qc, qc_from_json, qc_to_json
from .spaces import (OpenSet, RSet, region_from_json, region_intersect,
                     region_intersect_open, region_is_compact,
                     region_subset_open, region_to_json, region_union)


def _fin(v):
    """Exact values stay exact; mpmath values flatten to complex."""
    return v if isinstance(v, QC) else complex(v)


def _is_zero_scalar(c) -> bool:
    if isinstance(c, QC):
        return not c
    return c == 0


class SmoothTerm:
    """Acts on a partner function g' by integrating g * g'.

    `bound` is an optional support witness for g (an RSet). Integration
    ranges are clipped to it, so that a narrow g inside a wide partner
    support cannot slip between quadrature nodes.
    """

    __slots__ = ("g", "bound")

    def __init__(self, g: Expr, bound=None):
        self.g = g
        self.bound = bound

    def __repr__(self):
        if self.bound is None:
            return "SmoothTerm(%s)" % to_sexpr(self.g)
        return "SmoothTerm(%s, bound=%s)" % (to_sexpr(self.g), self.bound)


class PointTerm:
    """Acts on a partner function g' by c * (d^i g')(a)."""

    __slots__ = ("a", "i", "c")

    def __init__(self, a, i: int, c=1):
        self.a = Fraction(a)
        self.i = int(i)
        if self.i < 0:
            raise ValueError("derivative order must be nonnegative")
        self.c = c if isinstance(c, complex) else qc(c)

    def __repr__(self):
        return "PointTerm(a=%s, i=%d, c=%s)" % (self.a, self.i, self.c)


class BaseDistribution:
    """Scalar distribution on the base space."""

    __slots__ = ("space", "weights", "terms")

    def __init__(self, space, weights=None, terms=None):
        self.space = space
        if space.kind == "discrete":
            w = {}
            for p, v in (weights or {}).items():
                p = str(p)
                if p not in space.points:
                    raise DomainMismatchError("weight at unknown point %r" % p)
                v = qc(v)
                if v:
                    w[p] = v
            self.weights = w
            self.terms = None
        else:
            self.weights = None
            self.terms = _canon_dist_terms(terms or ())

    @classmethod
    def zero(cls, space):
        return cls(space)

    @classmethod
    def from_weights(cls, space, weights):
        return cls(space, weights=weights)

    @classmethod
    def smooth(cls, space, g: Expr, bound=None):
        return cls(space, terms=(SmoothTerm(g, bound),))

    @classmethod
    def point(cls, space, a, i: int = 0, c=1):
        return cls(space, terms=(PointTerm(a, i, c),))

    def is_exactly_zero(self) -> bool:
        if self.weights is not None:
            return not self.weights
        return not self.terms

    # -- linear structure ---------------------------------------------------

    def add(self, other: "BaseDistribution") -> "BaseDistribution":
        if self.space != other.space:
            raise DomainMismatchError("distributions over different base spaces")
        if self.weights is not None:
            w = dict(self.weights)
            for p, v in other.weights.items():
                u = w.get(p, QC_ZERO) + v
                if u:
                    w[p] = u
                elif p in w:
                    del w[p]
            return BaseDistribution(self.space, weights=w)
        return BaseDistribution(self.space, terms=self.terms + other.terms)

    def scale(self, c) -> "BaseDistribution":
        if self.weights is not None:
            c = qc(c)
            return BaseDistribution(self.space,
                                    weights={p: v * c for p, v in self.weights.items()})
        out = []
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                out.append(SmoothTerm(mul(Const(qc(c)), t.g), t.bound))
            else:
                out.append(PointTerm(t.a, t.i, _scalar_mul(t.c, c)))
        return BaseDistribution(self.space, terms=out)

    # -- actions ------------------------------------------------------------

    def act_on_function(self, c, ranges=None, abs_tol=DEFAULT_ABS_TOL, budget=None):
        """Pair with a base function coefficient (dict or Expr).

        `ranges` bounds the integration of SmoothTerm parts; pass the
        bounded pieces that carry the partner's support.
        """
        if self.weights is not None:
            acc = QC_ZERO
            for p in sorted(self.weights):
                acc = acc + self.weights[p] * c.get(p, QC_ZERO)
            return acc
        acc = QC_ZERO
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                rr = _clip_ranges(ranges or [], t.bound)
                acc = acc + integrate_expr(mul(t.g, c), rr, abs_tol, budget)
            else:
                acc = acc + _scalar_mul(t.c, ev(diff(c, t.i) if t.i else c, t.a))
        return acc

    def act_on_density(self, tau: BaseDensity, stack: int, domain: OpenSet,
                       abs_tol=DEFAULT_ABS_TOL, budget=None):
        """Pair with a base density carrying a derivative stack d^stack."""
        if self.weights is not None:
            if stack:
                raise BackendError("the discrete backend has no derivative stacks")
            acc = QC_ZERO
            for p in sorted(self.weights):
                acc = acc + self.weights[p] * tau.weights.get(p, QC_ZERO)
            return acc
        acc = QC_ZERO
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                g = diff(t.g, stack) if stack else t.g
                prod = tau.mul_coeff(g)
                if t.bound is not None:
                    prod = BaseDensity.smooth(self.space, prod.expr,
                                              region_intersect(prod.bound,
                                                               t.bound))
                acc = acc + prod.integrate(domain, abs_tol, budget)
            else:
                if tau.bound.contains(t.a):
                    sign = -1 if stack % 2 else 1
                    v = ev(diff(tau.expr, t.i + stack) if t.i + stack else tau.expr,
                           t.a)
                    acc = acc + sign * _scalar_mul(t.c, v)
        return acc

    def mul_coeff(self, f0) -> "BaseDistribution":
        """Product with a base function: <f.w, g> = <w, f g>."""
        if self.weights is not None:
            w = {}
            for p, v in self.weights.items():
                u = v * f0.get(p, QC_ZERO)
                if u:
                    w[p] = u
            return BaseDistribution(self.space, weights=w)
        out = []
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                out.append(SmoothTerm(mul(f0, t.g), t.bound))
            else:
                for j in range(t.i + 1):
                    d = coeff_ev(self.space, coeff_diff(self.space, f0, t.i - j), t.a)
                    c = _scalar_mul(t.c, math.comb(t.i, j) * _as_scalar(d))
                    out.append(PointTerm(t.a, j, c))
        return BaseDistribution(self.space, terms=out)

    def clip_bounds(self, region) -> "BaseDistribution":
        """Intersect smooth-term support bounds with a region witness.

        Sound when every smooth term is known to vanish outside the
        region, e.g. after multiplication by a cutoff supported there.
        """
        if self.weights is not None:
            return self
        out = []
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                b = region if t.bound is None else region_intersect(t.bound,
                                                                    region)
                out.append(SmoothTerm(t.g, b))
            else:
                out.append(t)
        return BaseDistribution(self.space, terms=out)

    def restrict(self, u: OpenSet) -> "BaseDistribution":
        if self.weights is not None:
            return BaseDistribution(self.space,
                                    weights={p: v for p, v in self.weights.items()
                                             if p in u.labels})
        out = []
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                out.append(t)
            elif u.contains(t.a):
                out.append(t)
        return BaseDistribution(self.space, terms=out)

    # -- plumbing ---------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, BaseDistribution) or self.space != other.space:
            return False
        if self.weights is not None:
            return self.weights == other.weights
        return _terms_key(self.terms) == _terms_key(other.terms)

    def __repr__(self):
        if self.weights is not None:
            return "BaseDistribution(%s)" % {p: str(v)
                                             for p, v in sorted(self.weights.items())}
        return "BaseDistribution(%s)" % (list(self.terms),)

    def to_json(self):
        if self.weights is not None:
            return {p: qc_to_json(v) for p, v in sorted(self.weights.items())}
        out = []
        for t in self.terms:
            if isinstance(t, SmoothTerm):
                tj = {"kind": "smooth", "expr": to_sexpr(t.g)}
                if t.bound is not None:
                    tj["support"] = region_to_json(t.bound)
                out.append(tj)
            else:
                if isinstance(t.c, QC):
                    cj = qc_to_json(t.c)
                else:
                    cj = [t.c.real, t.c.imag]
                out.append({"kind": "point", "a": str(t.a), "i": t.i, "c": cj})
        return out

    @classmethod
    def from_json(cls, space, v, region=None):
        if space.kind == "discrete":
            if not isinstance(v, dict):
                raise ValueError("discrete distribution must be a point->value map")
            return cls(space, weights={p: qc_from_json(w) for p, w in v.items()})
        if not isinstance(v, list):
            raise ValueError("smooth distribution must be a list of terms")
        terms = []
        for t in v:
            kind = t.get("kind")
            if kind == "smooth":
                bound = None
                if "support" in t:
                    bound = region_from_json(space, t["support"])
                terms.append(SmoothTerm(parse_sexpr(t["expr"], region=region),
                                        bound))
            elif kind == "point":
                terms.append(PointTerm(Fraction(str(t["a"])), int(t["i"]),
                                       qc_from_json(t.get("c", 1))))
            else:
                raise ValueError("unknown distribution term kind %r" % (kind,))
        return cls(space, terms=terms)


def _as_scalar(v):
    return v if isinstance(v, (QC, complex)) else complex(v)


def _scalar_mul(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a * b
    if isinstance(a, QC) and isinstance(b, int):
        return a * b
    if isinstance(b, QC) and isinstance(a, int):
        return b * a
    return complex(a) * complex(b)


def _canon_dist_terms(terms):
    smooth = []
    points = {}
    for t in terms:
        if isinstance(t, SmoothTerm):
            if t.g != ZERO:
                smooth.append(t)
        elif isinstance(t, PointTerm):
            key = (t.a, t.i)
            prev = points.get(key)
            points[key] = t.c if prev is None else _scalar_add(prev, t.c)
        else:
            raise TypeError("unknown distribution term %r" % (t,))
    smooth.sort(key=lambda t: (to_sexpr(t.g), _bound_key(t.bound)))
    out = list(smooth)
    for (a, i) in sorted(points):
        c = points[(a, i)]
        if not _is_zero_scalar(c):
            out.append(PointTerm(a, i, c))
    return tuple(out)


def _bound_key(bound):
    return () if bound is None else bound.pieces


def _scalar_add(a, b):
    if isinstance(a, QC) and isinstance(b, QC):
        return a + b
    return complex(a) + complex(b)


def _terms_key(terms):
    out = []
    for t in terms:
        if isinstance(t, SmoothTerm):
            out.append(("smooth", to_sexpr(t.g), _bound_key(t.bound)))
        else:
            out.append(("point", t.a, t.i, complex(t.c) if not isinstance(t.c, QC)
                        else t.c))
    return out


def _clip_ranges(ranges, bound):
    """Intersect integration intervals with a support witness."""
    if bound is None:
        return ranges
    out = []
    for lo, hi in ranges:
        for blo, bhi, _, _ in bound.pieces:
            l, h = max(lo, blo), min(hi, bhi)
            if l < h:
                out.append((l, h))
    return out


class FormalDistribution:
    """Functional on compactly supported formal functions.

    <eta, u> = sum_L L! <w_L, u_L> componentwise in E = C^m, with
    coefficient vectors w_L of BaseDistribution entries.
    """

    def __init__(self, space, domain: OpenSet, k: int, e_dim: int, coeffs=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        if e_dim < 1:
            raise ValueError("value space dimension must be at least 1")
        self.space = space
        self.domain = domain
        self.k = k
        self.e_dim = e_dim
        clean = {}
        for l, vec in (coeffs or {}).items():
            l = mi(l)
            if len(l) != k:
                raise ValueError("star index %r has length %d, expected k=%d"
                                 % (l, len(l), k))
            vec = tuple(vec)
            if len(vec) != e_dim:
                raise ValueError("coefficient vector at %r has %d entries, "
                                 "expected %d" % (l, len(vec), e_dim))
            if any(w.space != space for w in vec):
                raise DomainMismatchError("coefficient over a different base space")
            if not all(w.is_exactly_zero() for w in vec):
                clean[l] = vec
        self.coeffs = clean

    @classmethod
    def zero(cls, space, domain, k, e_dim=1):
        return cls(space, domain, k, e_dim)

    def star_degree(self) -> int:
        return max((degree(l) for l in self.coeffs), default=0)

    def keys_sorted(self):
        return sorted(self.coeffs, key=lambda l: (degree(l), l))

    def coeff(self, l):
        return self.coeffs.get(mi(l),
                               tuple(BaseDistribution.zero(self.space)
                                     for _ in range(self.e_dim)))

    def is_exactly_zero(self) -> bool:
        return not self.coeffs

    # -- linear structure ----------------------------------------------------

    def add(self, other):
        self._check(other)
        out = {}
        for l in set(self.coeffs) | set(other.coeffs):
            a, b = self.coeff(l), other.coeff(l)
            out[l] = tuple(x.add(y) for x, y in zip(a, b))
        return FormalDistribution(self.space, self.domain, self.k, self.e_dim,
                                  out)

    def scale(self, c):
        out = {l: tuple(w.scale(c) for w in vec) for l, vec in self.coeffs.items()}
        return self._clone(coeffs=out)

    def component(self, j: int) -> "FormalDistribution":
        out = {l: (vec[j],) for l, vec in self.coeffs.items()}
        return FormalDistribution(self.space, self.domain, self.k, 1, out)

    # -- action ------------------------------------------------------------------

    def apply(self, u: SupportedFormalFunction, abs_tol=DEFAULT_ABS_TOL,
              budget=None):
        """E-vector of pairings against a compactly supported function."""
        if u.space != self.space or u.domain != self.domain or u.k != self.k:
            raise DomainMismatchError("partners live on different domains")
        if u.trunc < self.star_degree():
            raise TruncationError("application needs trunc >= %d, got %d"
                                  % (self.star_degree(), u.trunc))
        if not isinstance(u, SupportedFormalFunction):
            raise SupportError("distributions pair with supported functions")
        if not region_is_compact(u.support):
            raise SupportError("the partner needs a compact support witness")
        ranges = None
        if self.space.kind == "smoothline":
            ranges = region_intersect_open(u.support, self.domain).bounds_list()
        out = []
        for j in range(self.e_dim):
            acc = QC_ZERO
            for l in self.keys_sorted():
                lf = mi_factorial(l)
                v = self.coeffs[l][j].act_on_function(u.coeff(l), ranges,
                                                      abs_tol, budget)
                acc = acc + lf * v
            out.append(_fin(acc))
        return out

    # -- module action ----------------------------------------------------------

    def module_action(self, f: FormalFunction) -> "FormalDistribution":
        """eta . f, defined by <eta . f, u> = <eta, f u>.

        Coefficientwise (eta . f)_{J'} = sum_{L >= J'} (L!/J'!)
        f_{L-J'} . w_L, with function-times-distribution products.
        """
        if f.space != self.space or f.domain != self.domain or f.k != self.k:
            raise DomainMismatchError("module action partner on a different domain")
        if f.trunc < self.star_degree():
            raise TruncationError("module action needs trunc >= %d, got %d"
                                  % (self.star_degree(), f.trunc))
        out = {}
        for l, vec in self.coeffs.items():
            lf = mi_factorial(l)
            for jp in submultiindices(l):
                ratio = lf // mi_factorial(jp)
                fj = f.coeff(mi_sub(l, jp))
                add_vec = tuple(w.mul_coeff(fj).scale(ratio) for w in vec)
                prev = out.get(jp)
                out[jp] = add_vec if prev is None else \
                    tuple(x.add(y) for x, y in zip(prev, add_vec))
        return self._clone(coeffs=out)

    # -- sheaf structure -------------------------------------------------------------

    def restrict(self, v: OpenSet) -> "FormalDistribution":
        """Transpose of extension by zero: keep what acts inside v."""
        if not v.is_subset(self.domain):
            raise DomainMismatchError("restriction target is not inside the domain")
        out = {l: tuple(w.restrict(v) for w in vec)
               for l, vec in self.coeffs.items()}
        return FormalDistribution(self.space, v, self.k, self.e_dim, out)

    # -- plumbing ------------------------------------------------------------------------

    def _clone(self, coeffs):
        return FormalDistribution(self.space, self.domain, self.k, self.e_dim,
                                  coeffs)

    def _check(self, other):
        if self.space != other.space or self.domain != other.domain \
                or self.k != other.k or self.e_dim != other.e_dim:
            raise DomainMismatchError("distributions live on different domains")

    def __eq__(self, other):
        if not isinstance(other, FormalDistribution):
            return False
        return (self.space == other.space and self.domain == other.domain
                and self.k == other.k and self.e_dim == other.e_dim
                and self.coeffs == other.coeffs)

    def __repr__(self):
        return "%s(E_dim=%d, keys=%s)" % (type(self).__name__, self.e_dim,
                                          self.keys_sorted())

    def to_json(self):
        return {
            "E_dim": self.e_dim,
            "coeffs": {key_str(l): [w.to_json() for w in self.coeffs[l]]
                       for l in self.keys_sorted()},
        }

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict):
            raise ValueError("distribution needs an object with E_dim and coeffs")
        e_dim = int(v.get("E_dim", 1))
        coeffs = {}
        for key, vecs in v.get("coeffs", {}).items():
            l = parse_key(key, length=k)
            coeffs[l] = tuple(BaseDistribution.from_json(space, w, region=region)
                              for w in vecs)
        return cls(space, domain, k, e_dim, coeffs)


class CompactFormalDistribution(FormalDistribution):
    """Formal distribution with a compact support witness.

    Discrete weights, point terms, and bounded smooth integral terms
    are checked against the witness; a smooth integral term without its
    own bound carries the witness on trust, like every other smooth
    support bound in the package.
    """

    def __init__(self, space, domain, k, e_dim, coeffs=None, support=None):
        super().__init__(space, domain, k, e_dim, coeffs)
        if support is None:
            support = self._support_from_coeffs()
        if space.kind == "discrete":
            support = frozenset(support)
        if not region_is_compact(support):
            raise SupportError("support witness is not compact")
        if not region_subset_open(support, domain):
            raise SupportError("support witness escapes the domain")
        for l, vec in self.coeffs.items():
            for w in vec:
                if w.weights is not None:
                    stray = set(w.weights) - support
                    if stray:
                        raise SupportError("weights outside the support witness "
                                           "at %r: %s" % (l, sorted(stray)))
                elif w.terms is not None:
                    for t in w.terms:
                        if isinstance(t, PointTerm) and not support.contains(t.a):
                            raise SupportError("point term at %s outside the "
                                               "support witness" % t.a)
                        if isinstance(t, SmoothTerm) and t.bound is not None \
                                and not t.bound.is_subset(support):
                            raise SupportError("smooth term bound escapes the "
                                               "support witness")
        self.support = support

    def _support_from_coeffs(self):
        if self.space.kind == "discrete":
            pts = set()
            for vec in self.coeffs.values():
                for w in vec:
                    pts |= set(w.weights)
            return frozenset(pts)
        acc = RSet()
        for vec in self.coeffs.values():
            for w in vec:
                for t in w.terms:
                    if isinstance(t, PointTerm):
                        acc = acc.union(RSet.point(t.a))
                    elif t.bound is not None:
                        acc = acc.union(t.bound)
                    else:
                        raise SupportError("a smooth integral term needs an "
                                           "explicit support witness")
        return acc

    def _clone(self, coeffs):
        return CompactFormalDistribution(self.space, self.domain, self.k,
                                         self.e_dim, coeffs, support=self.support)

    def add(self, other):
        plain = FormalDistribution.add(self, other)
        if isinstance(other, CompactFormalDistribution):
            return CompactFormalDistribution(
                self.space, self.domain, self.k, self.e_dim, plain.coeffs,
                support=region_union(self.support, other.support))
        return plain

    def ext(self, m: OpenSet) -> "CompactFormalDistribution":
        """Extension by zero to a larger open set."""
        if not self.domain.is_subset(m):
            raise DomainMismatchError("extension target does not contain the domain")
        return CompactFormalDistribution(self.space, m, self.k, self.e_dim,
                                         self.coeffs, support=self.support)

    def restrict(self, v: OpenSet) -> "CompactFormalDistribution":
        plain = FormalDistribution.restrict(self, v)
        return CompactFormalDistribution(self.space, v, self.k, self.e_dim,
                                         plain.coeffs,
                                         support=region_intersect_open(self.support, v))

    def to_json(self):
        out = super().to_json()
        out["support"] = region_to_json(self.support)
        return out

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        plain = FormalDistribution.from_json(space, domain, k, v, region=region)
        support = None
        if "support" in v:
            support = region_from_json(space, v["support"])
        return cls(space, domain, k, plain.e_dim, plain.coeffs, support=support)


class ExtendedFunctional:
    """A compactly supported distribution read against global sections.

    Wraps <eta', u> := <eta, (f u)|_U> for a cutoff f that is exactly
    one on a neighborhood of the support of eta; any two admissible
    cutoffs give the same values.
    """

    def __init__(self, eta: CompactFormalDistribution, cutoff: SupportedFormalFunction):
        self.eta = eta
        self.cutoff = cutoff

    def __call__(self, u: FormalFunction, abs_tol=DEFAULT_ABS_TOL, budget=None):
        v = cutoff_product(self.cutoff, u)
        return self.eta.apply(v.restrict(self.eta.domain), abs_tol, budget)


def cutoff_extend(eta: CompactFormalDistribution,
                  f: SupportedFormalFunction) -> ExtendedFunctional:
    """Extend a compactly supported distribution to all global sections.

    Preconditions: the cutoff is compactly supported inside the
    distribution's open set, and its recorded plateau (where it equals
    one) covers a neighborhood of the distribution's support.
    """
    if f.space != eta.space or f.k != eta.k:
        raise DomainMismatchError("cutoff does not match the distribution")
    if not eta.domain.is_subset(f.domain):
        raise DomainMismatchError("cutoff domain does not contain the "
                                  "distribution's open set")
    if not region_is_compact(f.support):
        raise SupportError("cutoff needs a compact support witness")
    if not region_subset_open(f.support, eta.domain, within=f.domain):
        raise SupportError("cutoff support escapes the distribution's open set")
    if f.plateau is None:
        raise SupportError("cutoff carries no plateau witness")
    if eta.space.kind == "discrete":
        ok = eta.support <= f.plateau
    else:
        ok = eta.support.is_subset(f.plateau.interior())
    if not ok:
        raise SupportError("cutoff plateau does not cover a neighborhood of "
                           "the distribution's support")
    return ExtendedFunctional(eta, f)


class GeneralizedFunction:
    """Functional on compactly supported formal densities.

    <u, eta> = sum_L L! <u_L, eta_L> componentwise in E, where u_L is a
    BaseDistribution vector and eta_L a sum of stacked base densities.
    """

    def __init__(self, space, domain: OpenSet, k: int, trunc: int, e_dim: int,
                 coeffs=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        if trunc < 0 or e_dim < 1:
            raise ValueError("trunc must be >= 0 and E_dim >= 1")
        self.space = space
        self.domain = domain
        self.k = k
        self.trunc = trunc
        self.e_dim = e_dim
        clean = {}
        for j, vec in (coeffs or {}).items():
            j = mi(j)
            if len(j) != k:
                raise ValueError("index %r has length %d, expected k=%d"
                                 % (j, len(j), k))
            if degree(j) > trunc:
                raise TruncationError("coefficient at %r exceeds trunc %d"
                                      % (j, trunc))
            vec = tuple(vec)
            if len(vec) != e_dim:
                raise ValueError("coefficient vector at %r has %d entries, "
                                 "expected %d" % (j, len(vec), e_dim))
            if not all(w.is_exactly_zero() for w in vec):
                clean[j] = vec
        self.coeffs = clean

    @classmethod
    def zero(cls, space, domain, k, trunc, e_dim=1):
        return cls(space, domain, k, trunc, e_dim)

    @classmethod
    def embed(cls, u: FormalFunction) -> "GeneralizedFunction":
        """A formal function as a generalized function (E_dim 1)."""
        coeffs = {}
        for j, c in u.coeffs.items():
            if u.space.kind == "discrete":
                w = BaseDistribution.from_weights(u.space, c)
            else:
                w = BaseDistribution.smooth(u.space, c)
            coeffs[j] = (w,)
        return cls(u.space, u.domain, u.k, u.trunc, 1, coeffs)

    def keys_sorted(self):
        return sorted(self.coeffs, key=lambda j: (degree(j), j))

    def coeff(self, j):
        return self.coeffs.get(mi(j),
                               tuple(BaseDistribution.zero(self.space)
                                     for _ in range(self.e_dim)))

    def is_exactly_zero(self) -> bool:
        return not self.coeffs

    def add(self, other):
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = {}
        for j in set(self.coeffs) | set(other.coeffs):
            if degree(j) > trunc:
                continue
            a, b = self.coeff(j), other.coeff(j)
            out[j] = tuple(x.add(y) for x, y in zip(a, b))
        return GeneralizedFunction(self.space, self.domain, self.k, trunc,
                                   self.e_dim, out)

    def scale(self, c):
        out = {j: tuple(w.scale(c) for w in vec) for j, vec in self.coeffs.items()}
        return GeneralizedFunction(self.space, self.domain, self.k, self.trunc,
                                   self.e_dim, out)

    def component(self, j: int) -> "GeneralizedFunction":
        out = {key: (vec[j],) for key, vec in self.coeffs.items()}
        return GeneralizedFunction(self.space, self.domain, self.k, self.trunc,
                                   1, out)

    def apply(self, eta: FormalDensity, abs_tol=DEFAULT_ABS_TOL, budget=None):
        """E-vector <u, eta>; derivative stacks transpose onto u."""
        if eta.space != self.space or eta.domain != self.domain or eta.k != self.k:
            raise DomainMismatchError("partners live on different domains")
        if self.trunc < eta.star_degree():
            raise TruncationError("application needs trunc >= %d, got %d"
                                  % (eta.star_degree(), self.trunc))
        out = []
        for j in range(self.e_dim):
            acc = QC_ZERO
            for l in eta.keys_sorted():
                lf = mi_factorial(l)
                vec = self.coeff(l)
                for i, tau in eta.coeffs[l]:
                    stack = i[0] if i else 0
                    acc = acc + lf * vec[j].act_on_density(tau, stack, self.domain,
                                                           abs_tol, budget)
            out.append(_fin(acc))
        return out

    def module_action(self, f: FormalFunction) -> "GeneralizedFunction":
        """f . u with coefficientwise Cauchy products: <f u, eta> = <u, eta . f>."""
        if f.space != self.space or f.domain != self.domain or f.k != self.k:
            raise DomainMismatchError("module action partner on a different domain")
        trunc = min(self.trunc, f.trunc)
        out = {}
        for j1, fc in f.coeffs.items():
            for j2, vec in self.coeffs.items():
                j = tuple(a + b for a, b in zip(j1, j2))
                if degree(j) > trunc:
                    continue
                add_vec = tuple(w.mul_coeff(fc) for w in vec)
                prev = out.get(j)
                out[j] = add_vec if prev is None else \
                    tuple(x.add(y) for x, y in zip(prev, add_vec))
        return GeneralizedFunction(self.space, self.domain, self.k, trunc,
                                   self.e_dim, out)

    def restrict(self, v: OpenSet) -> "GeneralizedFunction":
        if not v.is_subset(self.domain):
            raise DomainMismatchError("restriction target is not inside the domain")
        out = {j: tuple(w.restrict(v) for w in vec)
               for j, vec in self.coeffs.items()}
        return GeneralizedFunction(self.space, v, self.k, self.trunc,
                                   self.e_dim, out)

    def _check(self, other):
        if self.space != other.space or self.domain != other.domain \
                or self.k != other.k or self.e_dim != other.e_dim:
            raise DomainMismatchError("generalized functions live on "
                                      "different domains")

    def __eq__(self, other):
        if not isinstance(other, GeneralizedFunction):
            return False
        return (self.space == other.space and self.domain == other.domain
                and self.k == other.k and self.trunc == other.trunc
                and self.e_dim == other.e_dim and self.coeffs == other.coeffs)

    def __repr__(self):
        return "GeneralizedFunction(trunc=%d, E_dim=%d, keys=%s)" % (
            self.trunc, self.e_dim, self.keys_sorted())

    def to_json(self):
        return {
            "trunc": self.trunc,
            "E_dim": self.e_dim,
            "coeffs": {key_str(j): [w.to_json() for w in self.coeffs[j]]
                       for j in self.keys_sorted()},
        }

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict) or "trunc" not in v:
            raise ValueError("generalized function needs a 'trunc' field")
        e_dim = int(v.get("E_dim", 1))
        coeffs = {}
        for key, vecs in v.get("coeffs", {}).items():
            j = parse_key(key, length=k)
            coeffs[j] = tuple(BaseDistribution.from_json(space, w, region=region)
                              for w in vecs)
        return cls(space, domain, k, int(v["trunc"]), e_dim, coeffs)


class PointDistribution:
    """Finite combination of jet evaluations at a single point.

    coeffs maps (I, J) pairs to E-vectors of scalars; applying to u
    gives sum c_{I,J} * jet(u, a, I, J) componentwise.
    """

    def __init__(self, space, domain: OpenSet, k: int, a, e_dim: int = 1,
                 coeffs=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        if not domain.contains(a):
            raise DomainMismatchError("base point %r outside the domain" % (a,))
        self.space = space
        self.domain = domain
        self.k = k
        self.a = a if space.kind == "discrete" else Fraction(a)
        self.e_dim = e_dim
        clean = {}
        for (i, j), vec in (coeffs or {}).items():
            i, j = mi(i), mi(j)
            if len(i) != space.ndim or len(j) != k:
                raise ValueError("jet key (%r, %r) does not fit the space" % (i, j))
            vec = tuple(qc(c) if not isinstance(c, complex) else c for c in vec)
            if len(vec) != e_dim:
                raise ValueError("coefficient vector at (%r, %r) has %d entries, "
                                 "expected %d" % (i, j, len(vec), e_dim))
            if not all(_is_zero_scalar(c) for c in vec):
                clean[(i, j)] = vec
        self.coeffs = clean

    def order(self) -> int:
        return max((degree(i) + degree(j) for i, j in self.coeffs), default=0)

    def keys_sorted(self):
        return sorted(self.coeffs,
                      key=lambda ij: (degree(ij[0]) + degree(ij[1]), ij[0], ij[1]))

    def apply(self, u: FormalFunction):
        """E-vector sum c_{I,J} * jet(u, a, I, J)."""
        if u.space != self.space or u.domain != self.domain or u.k != self.k:
            raise DomainMismatchError("partners live on different domains")
        out = []
        for comp in range(self.e_dim):
            acc = QC_ZERO
            for (i, j) in self.keys_sorted():
                c = self.coeffs[(i, j)][comp]
                if not _is_zero_scalar(c):
                    acc = acc + _scalar_mul(c, _as_scalar(u.jet(self.a, i, j)))
            out.append(_fin(acc))
        return out

    def to_compact(self) -> CompactFormalDistribution:
        """Repackage as a compactly supported formal distribution."""
        coeffs = {}
        for (i, j), vec in self.coeffs.items():
            stack = i[0] if i else 0
            add_vec = []
            for c in vec:
                if _is_zero_scalar(c):
                    add_vec.append(BaseDistribution.zero(self.space))
                elif self.space.kind == "discrete":
                    add_vec.append(BaseDistribution.from_weights(self.space,
                                                                 {self.a: c}))
                else:
                    add_vec.append(BaseDistribution.point(self.space, self.a,
                                                          stack, c))
            prev = coeffs.get(j)
            coeffs[j] = tuple(add_vec) if prev is None else \
                tuple(x.add(y) for x, y in zip(prev, add_vec))
        if self.space.kind == "discrete":
            support = frozenset({self.a})
        else:
            support = RSet.point(self.a)
        return CompactFormalDistribution(self.space, self.domain, self.k,
                                         self.e_dim, coeffs, support=support)

    def __repr__(self):
        return "PointDistribution(a=%s, keys=%s)" % (self.a, self.keys_sorted())

    def to_json(self):
        return {
            "a": str(self.a),
            "E_dim": self.e_dim,
            "terms": [{"I": list(i), "J": list(j),
                       "c": [qc_to_json(c) if isinstance(c, QC) else
                             [c.real, c.imag] for c in self.coeffs[(i, j)]]}
                      for i, j in self.keys_sorted()],
        }

    @classmethod
    def from_json(cls, space, domain, k, v):
        a = v["a"] if space.kind == "discrete" else Fraction(str(v["a"]))
        e_dim = int(v.get("E_dim", 1))
        coeffs = {}
        for t in v.get("terms", []):
            i = mi(t.get("I", [0] * space.ndim))
            j = mi(t.get("J", [0] * k))
            coeffs[(i, j)] = tuple(qc_from_json(c) for c in t["c"])
        return cls(space, domain, k, a, e_dim, coeffs)


def point_basis(space, domain: OpenSet, k: int, a, r: int, e_dim: int = 1):
    """Jet-evaluation basis at a point: all (I, J) with |I|+|J| <= r.

    Ordered graded-lexicographically on the concatenated index. Each
    element is scalar-valued in every E-component (value 1 in each).
    """
    out = []
    for m in enumerate_upto(space.ndim + k, r):
        i, j = m[:space.ndim], m[space.ndim:]
        vec = tuple(QC(1) for _ in range(e_dim))
        out.append(PointDistribution(space, domain, k, a, e_dim,
                                     {(i, j): vec}))
    return out


def normalized_monomial(space, domain: OpenSet, k: int, trunc: int, i, j):
    """x^I y^J / (I! J!), the dual family of the jet basis at 0.

    On the discrete backend (no coordinates) this is y^J / J! with the
    constant-one base coefficient.
    """
    i, j = mi(i), mi(j)
    if len(i) != space.ndim:
        raise BackendError("x-index %r does not fit the base" % (i,))
    scale = Fraction(1, mi_factorial(i) * mi_factorial(j))
    if space.kind == "discrete":
        c = {p: QC(scale) for p in domain.labels}
    else:
        c = mul(Const(QC(scale)), pow_(X, i[0])) if i[0] else Const(QC(scale))
    return FormalFunction(space, domain, k, trunc, {j: c})


def jet_kernel_check(u: FormalFunction, a, r: int, tol: float = 0.0) -> bool:
    """Do all jets of total order below r vanish at the point?

    Exact comparison for exact values; |value| <= tol for quadrature or
    kernel-bearing values (the default tolerance is strict zero).
    """
    if u.trunc < r:
        raise TruncationError("jet kernel check at order %d needs trunc >= %d"
                              % (r, r))
    for m in enumerate_upto(u.space.ndim + u.k, r - 1):
        i, j = m[:u.space.ndim], m[u.space.ndim:]
        v = u.jet(a, i, j)
        if isinstance(v, QC):
            if v:
                return False
        elif abs(complex(v)) > tol:
            return False
    return True


def dist_space_dimension(n: int, k: int, r: int) -> int:
    """Number of jet-evaluation basis elements of order <= r."""
    return len(enumerate_upto(n + k, r))
