"""Compactly supported differential operators and the rho map.

A DensityDiffOp is a finite sum of terms tau . d_x^I d_y^L with
compactly supported base-density coefficients; it eats a formal
function and returns a base density, with the reduction to y = 0 built
into the formula

    D(u) = sum_{(I,L)} tau_{I,L} * L! * (d_x^I u_L).

Derivative stacks sit on the right of the coefficients (normal form);
composing with a formal function on the right is renormalized back
into that form through the Leibniz rule. The rho map regroups the
terms of D into a formal density, and pairing rho(D) against u is the
same number as integrating D(u).

An EndoDiffOp has formal-function coefficients and lands back in base
functions; it only feeds the seminorm diagnostics.
"""

from __future__ import annotations

from .basedensity import BaseDensity
from .densities import FormalDensity, submultiindices
from .errors import DomainMismatchError, SupportError, TruncationError
from .expr import ev_f
from .functions import (FormalFunction, SupportedFormalFunction, coeff_add,
                        coeff_diff, coeff_mul, coeff_scale, coeff_zero)
from .multiindex import degree, mi, mi_binom, mi_factorial, mi_sub
from .spaces import (OpenSet, region_empty, region_is_compact,
                     region_subset_open, region_union)


def _term_sort_key(key):
    i, l = key
    return (degree(i) + degree(l), i, l)


class DensityDiffOp:
    """Operator sum tau_{I,L} . d_x^I d_y^L from functions to densities."""

    def __init__(self, space, domain: OpenSet, k: int, terms=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        self.space = space
        self.domain = domain
        self.k = k
        clean = {}
        for (i, l), tau in (terms or {}).items():
            i, l = mi(i), mi(l)
            if len(i) != space.ndim or len(l) != k:
                raise ValueError("term key (%r, %r) does not fit the space" % (i, l))
            if tau.space != space:
                raise DomainMismatchError("coefficient on a different base space")
            if tau.is_exactly_zero():
                continue
            if not region_is_compact(tau.support):
                raise SupportError("coefficient at (%r, %r) is not compactly "
                                   "supported" % (i, l))
            if not region_subset_open(tau.support, domain):
                raise SupportError("coefficient support at (%r, %r) escapes the "
                                   "domain" % (i, l))
            clean[(i, l)] = tau
        self.terms = clean

    @classmethod
    def zero(cls, space, domain, k):
        return cls(space, domain, k)

    @classmethod
    def monomial(cls, space, domain, k, i, l, tau: BaseDensity):
        """Single term tau . d_x^I d_y^L."""
        return cls(space, domain, k, {(mi(i), mi(l)): tau})

    # -- queries ---------------------------------------------------------

    def order(self) -> int:
        return max((degree(i) + degree(l) for i, l in self.terms), default=0)

    def y_order(self) -> int:
        return max((degree(l) for _, l in self.terms), default=0)

    def support(self):
        acc = region_empty(self.space)
        for tau in self.terms.values():
            acc = region_union(acc, tau.support)
        return acc

    def is_exactly_zero(self) -> bool:
        return not self.terms

    def keys_sorted(self):
        return sorted(self.terms, key=_term_sort_key)

    # -- linear structure --------------------------------------------------

    def add(self, other: "DensityDiffOp") -> "DensityDiffOp":
        self._check(other)
        out = dict(self.terms)
        for key, tau in other.terms.items():
            out[key] = out[key].add(tau) if key in out else tau
        return DensityDiffOp(self.space, self.domain, self.k, out)

    def scale(self, c) -> "DensityDiffOp":
        out = {key: tau.scale(c) for key, tau in self.terms.items()}
        return DensityDiffOp(self.space, self.domain, self.k, out)

    # -- action ------------------------------------------------------------

    def apply(self, u: FormalFunction) -> BaseDensity:
        """D(u) = sum tau * L! * (d_x^I u_L), a base density."""
        if u.space != self.space or u.domain != self.domain or u.k != self.k:
            raise DomainMismatchError("operator and function live on "
                                      "different domains")
        if u.trunc < self.y_order():
            raise TruncationError("application needs trunc >= %d, got %d"
                                  % (self.y_order(), u.trunc))
        acc = BaseDensity.zero(self.space)
        for (i, l) in self.keys_sorted():
            tau = self.terms[(i, l)]
            der = coeff_diff(self.space, u.coeff(l), i[0] if i else 0)
            acc = acc.add(tau.mul_coeff(der).scale(mi_factorial(l)))
        return acc

    # -- the rho map --------------------------------------------------------

    def rho(self) -> FormalDensity:
        """Regroup the terms into the formal density sum (tau . d^I)(y*)^L.

        Defining identity: pair(rho(D), u) = integrate(apply(D, u)).
        """
        coeffs = {}
        for (i, l), tau in self.terms.items():
            coeffs.setdefault(l, []).append((i, tau))
        return FormalDensity(self.space, self.domain, self.k, coeffs)

    # -- composition with functions ----------------------------------------------

    def postcompose_function(self, f: FormalFunction) -> "DensityDiffOp":
        """f . D: multiply the output density by f via the reduction.

        Densities on the base only feel the y-constant coefficient f_0.
        """
        if f.space != self.space or f.domain != self.domain or f.k != self.k:
            raise DomainMismatchError("composition partner on a different domain")
        f0 = f.coeff((0,) * self.k)
        out = {key: tau.mul_coeff(f0) for key, tau in self.terms.items()}
        return DensityDiffOp(self.space, self.domain, self.k, out)

    def precompose_function(self, f: FormalFunction) -> "DensityDiffOp":
        """D . f, with apply(D . f, u) = apply(D, f u).

        Pushing f through the stacks and renormalizing, the term
        tau . d^I d^L spawns, for J' <= L and I' <= I, the term
        ((L!/J'!) C(I,I') tau * d^{I-I'} f_{L-J'}) . d^{I'} d^{J'}.
        """
        if f.space != self.space or f.domain != self.domain or f.k != self.k:
            raise DomainMismatchError("composition partner on a different domain")
        if f.trunc < self.y_order():
            raise TruncationError("composition needs trunc >= %d, got %d"
                                  % (self.y_order(), f.trunc))
        out = {}
        for (i, l), tau in self.terms.items():
            lfact = mi_factorial(l)
            for jp in submultiindices(l):
                ratio = lfact // mi_factorial(jp)
                fj = f.coeff(mi_sub(l, jp))
                for ip in submultiindices(i):
                    c = ratio * mi_binom(i, ip)
                    order = (mi_sub(i, ip))[0] if i else 0
                    fac = coeff_diff(self.space, fj, order)
                    term = tau.mul_coeff(fac).scale(c)
                    key = (ip, jp)
                    out[key] = out[key].add(term) if key in out else term
        return DensityDiffOp(self.space, self.domain, self.k, out)

    # -- cosheaf structure ----------------------------------------------------------

    def ext(self, m: OpenSet) -> "DensityDiffOp":
        """Extension by zero to a larger open set."""
        if not self.domain.is_subset(m):
            raise DomainMismatchError("extension target does not contain the domain")
        return DensityDiffOp(self.space, m, self.k, self.terms)

    def restrict_op(self, v: OpenSet) -> "DensityDiffOp":
        """Restriction to a smaller open set holding the whole support."""
        if not v.is_subset(self.domain):
            raise DomainMismatchError("restriction target is not inside the domain")
        if not region_subset_open(self.support(), v, within=self.domain):
            raise SupportError("operator support escapes the target open set")
        out = {key: tau.restrict(v) for key, tau in self.terms.items()}
        return DensityDiffOp(self.space, v, self.k, out)

    # -- plumbing ----------------------------------------------------------------------

    def _check(self, other):
        if self.space != other.space or self.domain != other.domain \
                or self.k != other.k:
            raise DomainMismatchError("operators live on different domains")

    def __eq__(self, other):
        if not isinstance(other, DensityDiffOp):
            return False
        return (self.space == other.space and self.domain == other.domain
                and self.k == other.k and self.terms == other.terms)

    def __repr__(self):
        bits = ["%r . d_x^%s d_y^%s" % (self.terms[key], key[0], key[1])
                for key in self.keys_sorted()]
        return "DensityDiffOp(%s)" % ("; ".join(bits) or "0")

    def to_json(self):
        return {"terms": [{"I": list(i), "L": list(l),
                           "coeff": self.terms[(i, l)].to_json()}
                          for i, l in self.keys_sorted()]}

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict) or "terms" not in v:
            raise ValueError("operator needs a 'terms' field")
        terms = {}
        for t in v["terms"]:
            i = mi(t.get("I", [0] * space.ndim))
            l = mi(t.get("L", [0] * k))
            if (i, l) in terms:
                raise ValueError("duplicate operator term at (%r, %r)" % (i, l))
            terms[(i, l)] = BaseDensity.from_json(space, t["coeff"], region=region)
        return cls(space, domain, k, terms)


class EndoDiffOp:
    """Operator with formal-function coefficients, landing in base
    functions after reduction; feeds the seminorm diagnostics."""

    def __init__(self, space, domain: OpenSet, k: int, terms=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        self.space = space
        self.domain = domain
        self.k = k
        clean = {}
        for (i, l), f in (terms or {}).items():
            i, l = mi(i), mi(l)
            if len(i) != space.ndim or len(l) != k:
                raise ValueError("term key (%r, %r) does not fit the space" % (i, l))
            if not isinstance(f, SupportedFormalFunction):
                raise SupportError("coefficients need a support witness")
            if f.space != space or f.domain != domain or f.k != k:
                raise DomainMismatchError("coefficient on a different domain")
            if f.is_exactly_zero():
                continue
            if not region_is_compact(f.support):
                raise SupportError("coefficient at (%r, %r) is not compactly "
                                   "supported" % (i, l))
            clean[(i, l)] = f
        self.terms = clean

    @classmethod
    def zero(cls, space, domain, k):
        return cls(space, domain, k)

    @classmethod
    def identity_term(cls, space, domain, k, f: SupportedFormalFunction):
        """The multiplication operator u -> (f u)_0."""
        zero_i = (0,) * space.ndim
        zero_l = (0,) * k
        return cls(space, domain, k, {(zero_i, zero_l): f})

    def order(self) -> int:
        return max((degree(i) + degree(l) for i, l in self.terms), default=0)

    def y_order(self) -> int:
        return max((degree(l) for _, l in self.terms), default=0)

    def support(self):
        acc = region_empty(self.space)
        for f in self.terms.values():
            acc = region_union(acc, f.support)
        return acc

    def keys_sorted(self):
        return sorted(self.terms, key=_term_sort_key)

    def apply_reduced(self, u: FormalFunction):
        """Base coefficient of X(u): sum (f_{I,L})_0 * L! * (d_x^I u_L)."""
        if u.space != self.space or u.domain != self.domain or u.k != self.k:
            raise DomainMismatchError("operator and function live on "
                                      "different domains")
        if u.trunc < self.y_order():
            raise TruncationError("application needs trunc >= %d, got %d"
                                  % (self.y_order(), u.trunc))
        acc = coeff_zero(self.space)
        for (i, l) in self.keys_sorted():
            f0 = self.terms[(i, l)].coeff((0,) * self.k)
            der = coeff_diff(self.space, u.coeff(l), i[0] if i else 0)
            term = coeff_mul(self.space, f0,
                             coeff_scale(self.space, der, mi_factorial(l)))
            acc = coeff_add(self.space, acc, term)
        return acc

    def to_json(self):
        return {"terms": [{"I": list(i), "L": list(l),
                           "coeff": self.terms[(i, l)].to_json()}
                          for i, l in self.keys_sorted()]}

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict) or "terms" not in v:
            raise ValueError("operator needs a 'terms' field")
        terms = {}
        for t in v["terms"]:
            i = mi(t.get("I", [0] * space.ndim))
            l = mi(t.get("L", [0] * k))
            if (i, l) in terms:
                raise ValueError("duplicate operator term at (%r, %r)" % (i, l))
            terms[(i, l)] = SupportedFormalFunction.from_json(space, domain, k,
                                                              t["coeff"])
        return cls(space, domain, k, terms)


SEMINORM_GRID = 1001


def seminorm(u: FormalFunction, x: EndoDiffOp) -> float:
    """|u|_X = sup over the base of |X(u)(a)|.

    Exact max over points on the discrete backend. On the smooth line
    this is a diagnostic: the sup is sampled on a uniform grid of
    SEMINORM_GRID points spanning the hull of the operator's support.
    """
    c = x.apply_reduced(u)
    if x.space.kind == "discrete":
        best = 0.0
        for v in c.values():
            best = max(best, abs(v))
        return best
    supp = x.support()
    if supp.is_empty:
        return 0.0
    lo, hi = supp.hull()
    best = 0.0
    for t in range(SEMINORM_GRID):
        a = lo + (hi - lo) * t / (SEMINORM_GRID - 1)
        best = max(best, abs(ev_f(c, a)))
    return best
