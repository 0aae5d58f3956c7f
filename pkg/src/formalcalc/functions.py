"""Truncated formal functions over a base space.

A formal function on an open set U is a polynomial-in-y package of base
coefficients: u = sum_J u_J y^J over y-multi-indices J of length k with
degree(J) <= trunc(u). The truncation order is a guarantee, not a
storage detail: coefficients up to and including degree trunc are
exactly right and nothing is known beyond, so binary operations return
the minimum of the operand truncations. Missing keys are zero.

Coefficients are dicts label -> QC on the discrete backend and smooth
expressions on the line. SupportedFormalFunction adds a support witness
region outside of which every coefficient vanishes, plus an optional
plateau region on which the function is exactly the constant one (used
by cutoff arguments).
"""

from __future__ import annotations

from .errors import (BackendError, DomainMismatchError, SupportError,
                     TruncationError)
from .expr import ZERO, diff, ev, mul, parse_sexpr, to_sexpr
from .expr import bump as _bump_expr
from .multiindex import degree, key_str, mi, mi_factorial, parse_key
from .scalars import QC, QC_ZERO, qc, qc_from_json, qc_to_json
from .spaces import (OpenSet, region_from_json, region_is_compact,
                     region_subset_open, region_to_json)


# -- base coefficient helpers (dict on discrete, Expr on smooth) -----------

def coeff_zero(space):
    return {} if space.kind == "discrete" else ZERO


def coeff_is_zero(space, c) -> bool:
    if space.kind == "discrete":
        return not c
    return c == ZERO


def coeff_add(space, a, b):
    if space.kind == "discrete":
        out = dict(a)
        for p, v in b.items():
            w = out.get(p, QC_ZERO) + v
            if w:
                out[p] = w
            elif p in out:
                del out[p]
        return out
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return a + b


def coeff_scale(space, c, s):
    s = qc(s)
    if not s:
        return coeff_zero(space)
    if space.kind == "discrete":
        return {p: v * s for p, v in c.items()}
    from .expr import Const
    return mul(Const(s), c)


def coeff_mul(space, a, b):
    if space.kind == "discrete":
        out = {}
        for p, v in a.items():
            w = v * b.get(p, QC_ZERO)
            if w:
                out[p] = w
        return out
    return mul(a, b)


def coeff_diff(space, c, i: int):
    if i == 0:
        return c
    if space.kind == "discrete":
        raise BackendError("the discrete backend has no x-derivatives")
    return diff(c, i)


def coeff_ev(space, c, a):
    if space.kind == "discrete":
        return c.get(str(a), QC_ZERO)
    return ev(c, a)


def coeff_restrict(space, c, u: OpenSet):
    if space.kind == "discrete":
        return {p: v for p, v in c.items() if p in u.labels}
    return c


def coeff_to_json(space, c):
    if space.kind == "discrete":
        return {p: qc_to_json(v) for p, v in sorted(c.items())}
    return to_sexpr(c)


def coeff_from_json(space, v, domain: OpenSet = None, region=None):
    if space.kind == "discrete":
        if not isinstance(v, dict):
            raise ValueError("discrete coefficient must be a point->value map")
        out = {}
        for p, w in v.items():
            if domain is not None and p not in domain.labels:
                raise ValueError("coefficient value at point %r outside the domain" % p)
            w = qc_from_json(w)
            if w:
                out[p] = w
        return out
    if not isinstance(v, str):
        raise ValueError("smooth coefficient must be an expression string")
    return parse_sexpr(v, region=region)


class FormalFunction:
    """sum_J u_J y^J with guaranteed order trunc over an open set."""

    def __init__(self, space, domain: OpenSet, k: int, trunc: int, coeffs=None):
        if domain.space != space:
            raise DomainMismatchError("domain belongs to a different base space")
        if k < 0 or trunc < 0:
            raise ValueError("k and trunc must be nonnegative")
        self.space = space
        self.domain = domain
        self.k = k
        self.trunc = trunc
        clean = {}
        for j, c in (coeffs or {}).items():
            j = mi(j)
            if len(j) != k:
                raise ValueError("coefficient key %r has length %d, expected k=%d"
                                 % (j, len(j), k))
            if degree(j) > trunc:
                raise TruncationError("coefficient at %r exceeds trunc %d"
                                      % (j, trunc))
            if space.kind == "discrete":
                c = {p: qc(v) for p, v in c.items() if qc(v)}
                stray = set(c) - domain.labels
                if stray:
                    raise DomainMismatchError("coefficient values outside the "
                                              "domain: %s" % sorted(stray))
            if not coeff_is_zero(space, c):
                clean[j] = c
        self.coeffs = clean

    @classmethod
    def zero(cls, space, domain, k, trunc):
        return cls(space, domain, k, trunc)

    @classmethod
    def constant(cls, space, domain, k, trunc, value=1):
        value = qc(value)
        j0 = mi([0] * k)
        if space.kind == "discrete":
            c = {p: value for p in domain.labels}
        else:
            from .expr import Const
            c = Const(value)
        return cls(space, domain, k, trunc, {j0: c})

    # -- queries -----------------------------------------------------------

    def coeff(self, j):
        return self.coeffs.get(mi(j), coeff_zero(self.space))

    def y_degree(self) -> int:
        return max((degree(j) for j in self.coeffs), default=0)

    def is_exactly_zero(self) -> bool:
        return not self.coeffs

    def keys_sorted(self):
        return sorted(self.coeffs, key=lambda j: (degree(j), j))

    # -- ring operations ---------------------------------------------------

    def add(self, other: "FormalFunction") -> "FormalFunction":
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = {}
        for j in set(self.coeffs) | set(other.coeffs):
            if degree(j) > trunc:
                continue
            c = coeff_add(self.space, self.coeff(j), other.coeff(j))
            if not coeff_is_zero(self.space, c):
                out[j] = c
        return FormalFunction(self.space, self.domain, self.k, trunc, out)

    def scale(self, s) -> "FormalFunction":
        out = {j: coeff_scale(self.space, c, s) for j, c in self.coeffs.items()}
        return FormalFunction(self.space, self.domain, self.k, self.trunc, out)

    def mul(self, other: "FormalFunction") -> "FormalFunction":
        """Cauchy product in y, truncated to the minimum guaranteed order."""
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = {}
        for j1, c1 in self.coeffs.items():
            for j2, c2 in other.coeffs.items():
                j = tuple(a + b for a, b in zip(j1, j2))
                if degree(j) > trunc:
                    continue
                c = coeff_mul(self.space, c1, c2)
                prev = out.get(j)
                out[j] = c if prev is None else coeff_add(self.space, prev, c)
        return FormalFunction(self.space, self.domain, self.k, trunc, out)

    def restrict(self, v: OpenSet) -> "FormalFunction":
        if not v.is_subset(self.domain):
            raise DomainMismatchError("restriction target is not inside the domain")
        out = {j: coeff_restrict(self.space, c, v) for j, c in self.coeffs.items()}
        return FormalFunction(self.space, v, self.k, self.trunc, out)

    # -- evaluation ------------------------------------------------------------

    def ev(self, a):
        """Value of the reduced function (the y-constant coefficient) at a."""
        if not self.domain.contains(a):
            raise DomainMismatchError("evaluation point %r outside the domain" % (a,))
        return coeff_ev(self.space, self.coeff(mi([0] * self.k)), a)

    def jet(self, a, i, j):
        """Jet value J! * (d_x^I u_J)(a).

        i is an x-multi-index of length space.ndim (the empty tuple on
        the discrete backend), j a y-multi-index of length k.
        """
        i, j = mi(i), mi(j)
        if len(i) != self.space.ndim:
            raise BackendError("x-index %r does not fit a base of dimension %d"
                               % (i, self.space.ndim))
        if len(j) != self.k:
            raise ValueError("y-index %r has length %d, expected %d"
                             % (j, len(j), self.k))
        if degree(j) > self.trunc:
            raise TruncationError("jet order %r exceeds trunc %d" % (j, self.trunc))
        if not self.domain.contains(a):
            raise DomainMismatchError("jet point %r outside the domain" % (a,))
        c = self.coeff(j)
        order = i[0] if i else 0
        c = coeff_diff(self.space, c, order) if order else c
        return mi_factorial(j) * coeff_ev(self.space, c, a)

    # -- plumbing -----------------------------------------------------------------

    def _check(self, other):
        if self.space != other.space or self.domain != other.domain \
                or self.k != other.k:
            raise DomainMismatchError("formal functions live on different domains")

    def __eq__(self, other):
        if not isinstance(other, FormalFunction):
            return False
        return (self.space == other.space and self.domain == other.domain
                and self.k == other.k and self.trunc == other.trunc
                and self.coeffs == other.coeffs)

    def __repr__(self):
        bits = []
        for j in self.keys_sorted():
            bits.append("y^%s: %s" % (j, coeff_to_json(self.space, self.coeffs[j])))
        return "FormalFunction(trunc=%d, %s)" % (self.trunc, "; ".join(bits))

    # -- serialization ---------------------------------------------------------------

    def to_json(self):
        return {
            "trunc": self.trunc,
            "coeffs": {key_str(j): coeff_to_json(self.space, self.coeffs[j])
                       for j in self.keys_sorted()},
        }

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        if not isinstance(v, dict) or "trunc" not in v:
            raise ValueError("formal function needs a 'trunc' field")
        coeffs = {}
        for key, cv in v.get("coeffs", {}).items():
            j = parse_key(key, length=k)
            coeffs[j] = coeff_from_json(space, cv, domain=domain, region=region)
        return cls(space, domain, k, int(v["trunc"]), coeffs)


class SupportedFormalFunction(FormalFunction):
    """Formal function with a support witness and optional unit plateau."""

    def __init__(self, space, domain, k, trunc, coeffs=None, support=None,
                 plateau=None):
        super().__init__(space, domain, k, trunc, coeffs)
        if support is None:
            support = self._support_from_coeffs()
        if space.kind == "discrete":
            support = frozenset(support)
            for j, c in self.coeffs.items():
                stray = set(c) - support
                if stray:
                    raise SupportError("coefficient at %r is nonzero outside "
                                       "the support witness: %s" % (j, sorted(stray)))
        self.support = support
        self.plateau = plateau

    def _support_from_coeffs(self):
        if self.space.kind == "discrete":
            pts = set()
            for c in self.coeffs.values():
                pts |= set(c)
            return frozenset(pts)
        raise SupportError("a smooth supported function needs an explicit "
                           "support witness")

    def restrict(self, v: OpenSet) -> "SupportedFormalFunction":
        plain = super().restrict(v)
        from .spaces import region_intersect_open
        return SupportedFormalFunction(self.space, v, self.k, self.trunc,
                                       plain.coeffs,
                                       support=region_intersect_open(self.support, v),
                                       plateau=None)

    def extend_by_zero(self, m: OpenSet) -> "SupportedFormalFunction":
        """Reinterpret over a larger open set, zero outside the support.

        Requires a compact support witness sitting inside the current
        domain; the coefficients themselves carry over unchanged.
        """
        if not self.domain.is_subset(m):
            raise DomainMismatchError("extension target does not contain the domain")
        if not region_is_compact(self.support):
            raise SupportError("extension by zero needs a compact support witness")
        if not region_subset_open(self.support, self.domain):
            raise SupportError("support witness escapes the domain")
        return SupportedFormalFunction(self.space, m, self.k, self.trunc,
                                       self.coeffs, support=self.support,
                                       plateau=self.plateau)

    def to_json(self):
        out = super().to_json()
        out["support"] = region_to_json(self.support)
        if self.plateau is not None:
            out["plateau"] = region_to_json(self.plateau)
        return out

    @classmethod
    def from_json(cls, space, domain, k, v, region=None):
        plain = FormalFunction.from_json(space, domain, k, v, region=region)
        support = None
        if "support" in v:
            support = region_from_json(space, v["support"])
        plateau = None
        if "plateau" in v:
            plateau = region_from_json(space, v["plateau"])
        return cls(space, domain, k, plain.trunc, plain.coeffs,
                   support=support, plateau=plateau)


def cutoff_product(f: SupportedFormalFunction, u: FormalFunction):
    """Multiply a function on U by a cutoff supported inside U.

    f lives on a larger open set M with support inside U = domain(u);
    the product is the formal function f*u on U extended by zero over M,
    with support witness supp(f), intersected with supp(u) when u also
    carries one.
    """
    if f.space != u.space or f.k != u.k:
        raise DomainMismatchError("cutoff and function do not match")
    if not u.domain.is_subset(f.domain):
        raise DomainMismatchError("cutoff domain does not contain the function domain")
    if not region_subset_open(f.support, u.domain, within=f.domain):
        raise SupportError("cutoff support escapes the open set of the function")
    prod = f.restrict(u.domain).mul(u)
    support = f.support
    if isinstance(u, SupportedFormalFunction):
        from .spaces import region_intersect
        support = region_intersect(support, u.support)
    return SupportedFormalFunction(f.space, f.domain, f.k, prod.trunc,
                                   prod.coeffs, support=support)


def indicator_cutoff(space, domain: OpenSet, k: int, trunc: int, labels):
    """Discrete cutoff: the indicator of a label set, constant in y."""
    if space.kind != "discrete":
        raise BackendError("indicator cutoffs exist on the discrete backend only")
    labels = frozenset(str(p) for p in labels)
    if not labels <= domain.labels:
        raise SupportError("indicator labels escape the domain")
    j0 = mi([0] * k)
    c = {p: QC(1) for p in labels}
    return SupportedFormalFunction(space, domain, k, trunc, {j0: c},
                                   support=labels, plateau=labels)


def bump_cutoff(space, domain: OpenSet, k: int, trunc: int, a, b, c, d):
    """Smooth cutoff: a plateau bump in x, constant in y.

    Zero outside (a, d), exactly one on [b, c]; support witness [a, d]
    must sit inside the domain.
    """
    if space.kind != "smoothline":
        raise BackendError("bump cutoffs exist on the smooth backend only")
    e, support, plateau = _bump_expr(a, b, c, d)
    if not region_subset_open(support, domain):
        raise SupportError("bump support [%s, %s] escapes the domain" % (a, d))
    j0 = mi([0] * k)
    return SupportedFormalFunction(space, domain, k, trunc, {j0: e},
                                   support=support, plateau=plateau)
