"""Compactly supported formal densities and their pairing calculus.

A formal density on an open set U is a finite sum

    eta = sum_L ( sum_i tau_i . d_x^{I_i} ) (y*)^L

over y*-multi-indices L, where each tau_i is a base density and d_x^{I}
is a derivative stack acting on the function side of every pairing:

    <(tau . d_x^I)(y*)^L, u> = L! * integral of tau * (d_x^I u_L).

Derivative stacks are never integrated by parts onto tau; pairings
differentiate the smooth partner symbolically instead, so quadrature
only ever sees the stated density expressions.

The star degree of a density is the largest |L| present. Pairings and
module actions demand a partner whose truncation covers that degree and
raise TruncationError otherwise, since lower-order guarantees cannot
determine the answer.
"""

from __future__ import annotations

from itertools import product as _cartesian

from .basedensity import BaseDensity
from .errors import (DomainMismatchError, SupportError, TruncationError)
from .functions import FormalFunction, SupportedFormalFunction, coeff_diff
from .multiindex import degree, key_str, mi, mi_binom, mi_factorial, mi_sub, parse_key
from .quadrature import DEFAULT_ABS_TOL
from .scalars import QC_ZERO
from .spaces import (OpenSet, region_empty, region_is_compact,
                     region_subset_open, region_union)


def submultiindices(m: tuple):
    """All multi-indices componentwise <= m."""
    return [tuple(t) for t in _cartesian(*(range(e + 1) for e in m))]


def _canon_terms(space, terms):
    """Merge derivative-stack terms with equal I, drop exact zeros, sort."""
    acc = {}
    for i, tau in terms:
        i = mi(i)
        if i in acc:
            acc[i] = acc[i].add(tau)
        else:
            acc[i] = tau
    out = []
    for i in sorted(acc, key=lambda t: (degree(t), t)):
        if not acc[i].is_exactly_zero():
            out.append((i, acc[i]))
    return tuple(out)


class FormalDensity:
    """sum_L (sum tau . d_x^I) (y*)^L over an open set."""

    def __init__(self, space, domain: OpenSet, k: int, coeffs=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        self.space = space
        self.domain = domain
        self.k = k
        clean = {}
        for l, terms in (coeffs or {}).items():
            l = mi(l)
            if len(l) != k:
                raise ValueError("star index %r has length %d, expected k=%d"
                                 % (l, len(l), k))
            for i, tau in terms:
                if len(mi(i)) != space.ndim:
                    raise ValueError("derivative stack %r does not fit a base "
                                     "of dimension %d" % (i, space.ndim))
                if tau.space != space:
                    raise DomainMismatchError("coefficient density on a "
                                              "different base space")
            canon = _canon_terms(space, terms)
            if canon:
                clean[l] = canon
        self.coeffs = clean

    @classmethod
    def zero(cls, space, domain, k):
        return cls(space, domain, k)

    @classmethod
    def monomial(cls, space, domain, k, l, tau: BaseDensity, i=None):
        """Single term (tau . d_x^I)(y*)^L."""
        if i is None:
            i = (0,) * space.ndim
        return cls(space, domain, k, {mi(l): ((mi(i), tau),)})

    # -- queries ---------------------------------------------------------

    def star_degree(self) -> int:
        return max((degree(l) for l in self.coeffs), default=0)

    def support(self):
        acc = region_empty(self.space)
        for terms in self.coeffs.values():
            for _, tau in terms:
                acc = region_union(acc, tau.support)
        return acc

    def is_exactly_zero(self) -> bool:
        return not self.coeffs

    def keys_sorted(self):
        return sorted(self.coeffs, key=lambda l: (degree(l), l))

    # -- linear structure ---------------------------------------------------

    def add(self, other: "FormalDensity") -> "FormalDensity":
        self._check(other)
        out = {}
        for l in set(self.coeffs) | set(other.coeffs):
            terms = self.coeffs.get(l, ()) + other.coeffs.get(l, ())
            out[l] = terms
        return FormalDensity(self.space, self.domain, self.k, out)

    def scale(self, c) -> "FormalDensity":
        out = {}
        for l, terms in self.coeffs.items():
            out[l] = tuple((i, tau.scale(c)) for i, tau in terms)
        return FormalDensity(self.space, self.domain, self.k, out)

    # -- pairing ----------------------------------------------------------------

    def pair(self, u: FormalFunction, abs_tol=DEFAULT_ABS_TOL, budget=None):
        """<eta, u> = sum_L L! sum_(I,tau) integral of tau * (d_x^I u_L).

        Exact on the discrete backend; complex (quadrature) when any
        smooth non-polynomial coefficient enters.
        """
        if u.space != self.space or u.domain != self.domain or u.k != self.k:
            raise DomainMismatchError("pairing partners live on different domains")
        if u.trunc < self.star_degree():
            raise TruncationError("pairing needs trunc >= %d, got %d"
                                  % (self.star_degree(), u.trunc))
        acc = QC_ZERO
        for l in self.keys_sorted():
            ul = u.coeff(l)
            lfact = mi_factorial(l)
            for i, tau in self.coeffs[l]:
                order = i[0] if i else 0
                der = coeff_diff(self.space, ul, order)
                val = tau.mul_coeff(der).integrate(self.domain, abs_tol, budget)
                acc = acc + lfact * val
        return acc

    # -- module action -------------------------------------------------------------

    def module_action(self, f: FormalFunction) -> "FormalDensity":
        """eta . f, defined by <eta . f, u> = <eta, f u>.

        Expanding the Cauchy product and the Leibniz rule termwise:
        (tau . d^I)(y*)^L picks up, for every J' <= L and I' <= I, the
        term ((L!/J'!) C(I,I') tau * d^{I-I'} f_{L-J'}) . d^{I'} (y*)^{J'}.
        """
        if f.space != self.space or f.domain != self.domain or f.k != self.k:
            raise DomainMismatchError("module action partner on a different domain")
        if f.trunc < self.star_degree():
            raise TruncationError("module action needs trunc >= %d, got %d"
                                  % (self.star_degree(), f.trunc))
        out = {}
        for l, terms in self.coeffs.items():
            lfact = mi_factorial(l)
            for jp in submultiindices(l):
                ratio = lfact // mi_factorial(jp)
                fj = f.coeff(mi_sub(l, jp))
                for i, tau in terms:
                    for ip in submultiindices(i):
                        c = ratio * mi_binom(i, ip)
                        order = (mi_sub(i, ip))[0] if i else 0
                        fac = coeff_diff(self.space, fj, order)
                        term = tau.mul_coeff(fac).scale(c)
                        out.setdefault(jp, []).append((ip, term))
        return FormalDensity(self.space, self.domain, self.k, out)

    # -- cosheaf structure ------------------------------------------------------------

    def ext(self, m: OpenSet) -> "FormalDensity":
        """Extension by zero to a larger open set (coefficients carry over)."""
        if not self.domain.is_subset(m):
            raise DomainMismatchError("extension target does not contain the domain")
        supp = self.support()
        if not region_is_compact(supp):
            raise SupportError("extension by zero needs a compact support")
        if not region_subset_open(supp, self.domain):
            raise SupportError("support escapes the domain")
        return FormalDensity(self.space, m, self.k, self.coeffs)

    def restrict_data(self, v: OpenSet) -> "FormalDensity":
        """Restriction of the raw coefficient data; sensible when the
        support already sits inside v (cutoff first otherwise)."""
        if not v.is_subset(self.domain):
            raise DomainMismatchError("restriction target is not inside the domain")
        out = {}
        for l, terms in self.coeffs.items():
            out[l] = tuple((i, tau.restrict(v)) for i, tau in terms)
        return FormalDensity(self.space, v, self.k, out)

    def cutoff_restrict(self, f: SupportedFormalFunction, v: OpenSet) -> "FormalDensity":
        """(eta . f)|_v for a cutoff f supported inside v.

        This is the unique density on v that extends back to eta . f,
        because the cutoff confines every coefficient inside v.
        """
        if not v.is_subset(self.domain):
            raise DomainMismatchError("cutoff target is not inside the domain")
        if not region_subset_open(f.support, v, within=f.domain):
            raise SupportError("cutoff support escapes the target open set")
        f_here = f if f.domain == self.domain else f.restrict(self.domain)
        out = self.module_action(f_here).restrict_data(v)
        if self.space.kind == "discrete":
            return out
        # clip the recorded bounds by the cutoff support, so the result
        # is compactly supported inside v whenever the cutoff is
        clipped = {}
        for l, terms in out.coeffs.items():
            clipped[l] = tuple(
                (i, BaseDensity.smooth(self.space, tau.expr,
                                       tau.bound.intersect(f_here.support)))
                for i, tau in terms)
        return FormalDensity(self.space, v, self.k, clipped)

    # -- plumbing ----------------------------------------------------------------------

    def _check(self, other):
        if self.space != other.space or self.domain != other.domain \
                or self.k != other.k:
            raise DomainMismatchError("formal densities live on different domains")

    def __eq__(self, other):
        """Exact structural equality of canonical forms."""
        if not isinstance(other, FormalDensity):
            return False
        return (self.space == other.space and self.domain == other.domain
                and self.k == other.k and self.coeffs == other.coeffs)

    def __repr__(self):
        bits = []
        for l in self.keys_sorted():
            for i, tau in self.coeffs[l]:
                bits.append("(%r . d^%s)(y*)^%s" % (tau, i, l))
        return "FormalDensity(%s)" % ("; ".join(bits) or "0")

    # -- serialization -----------------------------------------------------------------

    def to_json(self):
        out = {}
        for l in self.keys_sorted():
            out[key_str(l)] = [{"I": list(i), "tau": tau.to_json()}
                               for i, tau in self.coeffs[l]]
        return {"coeffs": out}

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict) or "coeffs" not in v:
            raise ValueError("formal density needs a 'coeffs' field")
        coeffs = {}
        for key, terms in v["coeffs"].items():
            l = parse_key(key, length=k)
            lst = []
            for t in terms:
                i = mi(t.get("I", [0] * space.ndim))
                tau = BaseDensity.from_json(space, t["tau"], region=region)
                lst.append((i, tau))
            coeffs[l] = tuple(lst)
        return cls(space, domain, k, coeffs)
