"""Expression trees: evaluation, differentiation, bumps, serialization."""

import random
from fractions import Fraction

import pytest
from mpmath import mpc, mpf

from formalcalc.errors import BackendError, CertificateError
from formalcalc.expr import (
    ONE,
    X,
    ZERO,
    Const,
    bump,
    certify_positive,
    diff,
    div,
    ev,
    ev_c,
    ev_f,
    falling_edge,
    ibounds,
    is_polynomial,
    kern,
    mul,
    add,
    parse_sexpr,
    poly_coeffs,
    poly_definite_integral,
    pow_,
    rising_edge,
    sub,
    to_sexpr,
)
from formalcalc.scalars import QC
from formalcalc.spaces import RSet


def rand_poly_coeffs(rng, deg):
    return {d: Fraction(rng.randint(-6, 6), rng.randint(1, 3))
            for d in range(deg + 1) if rng.random() < 0.8}


def poly_expr(coeffs):
    e = ZERO
    for d, v in coeffs.items():
        e = add(e, mul(Const(v), pow_(X, d)))
    return e


def horner(coeffs, x):
    return sum(v * x ** d for d, v in coeffs.items())


def test_polynomial_evaluation_is_exact():
    rng = random.Random(11)
    for _ in range(200):
        coeffs = rand_poly_coeffs(rng, rng.randint(0, 4))
        e = poly_expr(coeffs)
        x = Fraction(rng.randint(-8, 8), rng.randint(1, 4))
        got = ev(e, x)
        assert isinstance(got, QC)
        assert got == QC(horner(coeffs, x))


def test_poly_coeffs_roundtrip_and_rejection():
    rng = random.Random(13)
    for _ in range(100):
        coeffs = rand_poly_coeffs(rng, rng.randint(0, 4))
        e = poly_expr(coeffs)
        got = poly_coeffs(e)
        want = {d: QC(v) for d, v in coeffs.items() if v}
        assert got == want
    assert poly_coeffs(kern(X)) is None
    assert not is_polynomial(kern(sub(X, ONE)))
    # a kernel of a positive constant is constant but transcendental
    assert poly_coeffs(kern(Const(2))) is None


def test_poly_definite_integral_matches_antiderivative():
    rng = random.Random(17)
    for _ in range(100):
        coeffs = rand_poly_coeffs(rng, rng.randint(0, 4))
        lo = Fraction(rng.randint(-6, 0))
        hi = lo + Fraction(rng.randint(1, 6), rng.randint(1, 2))
        qcoeffs = {d: QC(v) for d, v in coeffs.items()}
        got = poly_definite_integral(qcoeffs, lo, hi)
        want = sum((Fraction(v, d + 1) * (hi ** (d + 1) - lo ** (d + 1))
                    for d, v in coeffs.items()), Fraction(0))
        assert got == QC(want)


def test_derivative_of_polynomial_is_exact():
    rng = random.Random(19)
    for _ in range(100):
        coeffs = rand_poly_coeffs(rng, rng.randint(1, 4))
        e = poly_expr(coeffs)
        dcoeffs = {d - 1: d * v for d, v in coeffs.items() if d > 0 and v}
        want = {d: QC(v) for d, v in dcoeffs.items() if v}
        assert poly_coeffs(diff(e)) == want


def smooth_catalogue():
    r, s_, p_ = rising_edge(0, 1), falling_edge(-1, 1), pow_(add(X, ONE), 3)
    b, _, _ = bump(-2, -1, 1, 2)
    return [
        kern(X),
        kern(X, 2),
        kern(sub(Const(1), mul(X, X))),
        r,
        s_,
        b,
        mul(p_, b),
        add(mul(Const(Fraction(1, 2)), r), kern(X, 1)),
    ]


def to_mp(v):
    if isinstance(v, QC):
        return mpc(mpf(v.re.numerator) / mpf(v.re.denominator),
                   mpf(v.im.numerator) / mpf(v.im.denominator))
    return v


def central_diff(e, x, h=Fraction(1, 10 ** 9)):
    # subtract at 30-digit precision; float64 would lose the difference
    d = to_mp(ev(e, x + h)) - to_mp(ev(e, x - h))
    return complex(d / (2 * to_mp(QC(h))))


def test_derivative_matches_central_difference():
    pts = [Fraction(1, 3), Fraction(1, 2), Fraction(3, 4),
           Fraction(-1, 2), Fraction(5, 4)]
    for e in smooth_catalogue():
        de = diff(e)
        for x in pts:
            got = complex(ev(de, x))
            fd = central_diff(e, x)
            assert abs(got - fd) < 1e-9 * max(1.0, abs(got))


def test_second_derivative_matches_difference_of_first():
    e = kern(X)
    d2 = diff(e, 2)
    d1 = diff(e)
    for x in (Fraction(1, 4), Fraction(2, 3), Fraction(3, 2)):
        got = complex(ev(d2, x))
        fd = central_diff(d1, x)
        assert abs(got - fd) < 1e-8 * max(1.0, abs(got))


def test_kernel_vanishes_exactly_left_of_zero():
    e = kern(X)
    for x in (Fraction(0), Fraction(-1, 2), -3):
        v = ev(e, x)
        assert isinstance(v, QC)
        assert not v
        assert ev_f(e, float(x)) == 0j
    # every derivative inherits the flat left tail
    d3 = diff(e, 3)
    assert ev(d3, Fraction(0)) == QC(0)
    assert ev(d3, Fraction(-2)) == QC(0)


def test_bump_plateau_is_exactly_one_and_tails_exactly_zero():
    e, supp, plat = bump(Fraction(-2), Fraction(-1), 1, 2)
    assert supp == RSet.closed_pairs([(-2, 2)])
    assert plat == RSet.closed_pairs([(-1, 1)])
    for x in (Fraction(-1), Fraction(0), Fraction(1, 3), Fraction(1)):
        assert ev(e, x) == 1
        assert ev_f(e, float(x)) == 1 + 0j
    for x in (Fraction(-2), Fraction(2), Fraction(3), Fraction(-5)):
        v = ev(e, x)
        assert isinstance(v, QC)
        assert not v
    # transition values stay inside [0, 1]
    for x in (Fraction(-3, 2), Fraction(3, 2)):
        v = complex(ev(e, x))
        assert v.imag == 0
        assert 0 < v.real < 1


def test_edge_constructors_validate_order():
    with pytest.raises(ValueError):
        rising_edge(1, 1)
    with pytest.raises(ValueError):
        falling_edge(2, 1)
    with pytest.raises(ValueError):
        bump(0, 0, 1, 2)
    with pytest.raises(ValueError):
        bump(0, 2, 1, 3)


def test_rising_and_falling_edges_sum_to_one_on_overlap():
    r = rising_edge(0, 1)
    f = falling_edge(0, 1)
    for x in (Fraction(1, 4), Fraction(1, 2), Fraction(7, 8)):
        assert complex(ev(add(r, f), x)) == pytest.approx(1.0, abs=1e-25)


def test_ev_f_agrees_with_ev():
    rng = random.Random(23)
    for e in smooth_catalogue():
        for _ in range(10):
            x = rng.uniform(-3, 3)
            hi = complex(ev(e, Fraction(x).limit_denominator(10 ** 6)))
            lo = ev_f(e, float(Fraction(x).limit_denominator(10 ** 6)))
            assert abs(hi - lo) < 1e-12 * max(1.0, abs(hi))


def test_ev_c_flattens_to_complex():
    assert ev_c(Const(QC(Fraction(1, 2), Fraction(3))), Fraction(0)) == 0.5 + 3j
    assert isinstance(ev_c(kern(X), Fraction(1)), complex)


def test_constructor_simplifications():
    assert add(ZERO, X) is X
    assert mul(ONE, X) is X
    assert mul(ZERO, kern(X)) == ZERO
    assert pow_(X, 0) == ONE
    assert pow_(X, 1) is X
    assert pow_(Const(3), 2) == Const(9)
    assert kern(Const(-1)) == ZERO
    assert kern(Const(0)) == ZERO
    with pytest.raises(ValueError):
        pow_(X, -1)
    with pytest.raises(ValueError):
        kern(X, -1)
    with pytest.raises(BackendError):
        kern(Const(QC(Fraction(0), Fraction(1))))


def test_div_constant_folding_and_zero_denominator():
    assert div(X, Const(2)) == mul(Const(Fraction(1, 2)), X)
    assert div(ZERO, kern(X)) == ZERO
    with pytest.raises(ZeroDivisionError):
        div(X, ZERO)


def test_certify_positive_accepts_and_rejects():
    certify_positive(add(pow_(X, 2), ONE), RSet.whole())
    certify_positive(X, RSet.open_pairs([(1, 100)]))
    certify_positive(Const(Fraction(1, 7)), RSet.whole())
    with pytest.raises(CertificateError):
        certify_positive(X, RSet.whole())
    with pytest.raises(CertificateError):
        certify_positive(sub(pow_(X, 2), ONE), RSet.open_pairs([(-2, 2)]))
    with pytest.raises(CertificateError):
        div(ONE, X)


def test_certified_quotient_edge_denominator():
    # the standard edge denominator s(x) + s(1-x) is positive everywhere
    den = add(kern(X), kern(sub(ONE, X)))
    e = div(kern(X), den)
    assert complex(ev(e, Fraction(2))) == pytest.approx(1.0, abs=1e-25)
    v = ev(e, Fraction(-1))
    assert isinstance(v, QC) and not v


def test_ibounds_contains_true_range():
    e = pow_(X, 2)
    lo, hi = ibounds(e, 2.0, 3.0)
    assert lo <= 4.0 and hi >= 9.0
    lo, hi = ibounds(kern(X), -1.0, 0.0)
    assert lo == 0.0 and hi == 0.0
    lo, hi = ibounds(kern(X), 0.5, 2.0)
    assert 0.0 <= lo and hi >= float(ev_f(kern(X), 2.0).real)


def test_sexpr_roundtrip():
    exprs = smooth_catalogue() + [
        X,
        Const(Fraction(-7, 3)),
        Const(QC(Fraction(1, 2), Fraction(-2, 5))),
        diff(bump(-1, Fraction(-1, 2), Fraction(1, 2), 1)[0]),
        pow_(add(X, Const(2)), 4),
    ]
    for e in exprs:
        s = to_sexpr(e)
        back = parse_sexpr(s)
        assert back == e
        assert to_sexpr(back) == s


def test_parse_sexpr_grammar():
    assert parse_sexpr("x") is X
    assert parse_sexpr("3/4") == Const(Fraction(3, 4))
    assert parse_sexpr("0.25") == Const(Fraction(1, 4))
    assert parse_sexpr("-2") == Const(-2)
    # n-ary + and * fold left into binary nodes
    assert parse_sexpr("(+ 1 2 3)") == Const(6)
    e = parse_sexpr("(* x x x)")
    assert poly_coeffs(e) == {3: QC(1)}
    assert parse_sexpr("(complex 1/2 -3)") == Const(QC(Fraction(1, 2), Fraction(-3)))
    assert parse_sexpr("(sm x 2)") == kern(X, 2)


def test_parse_sexpr_rejects_malformed_input():
    for bad in ("", "(", ")", "(+ 1)", "(pow x y)", "(frob x 1)",
                "x x", "(s x", "(/ 1)", "y", "(complex 1)"):
        with pytest.raises(ValueError):
            parse_sexpr(bad)
    # quotient certification runs during parsing
    with pytest.raises(CertificateError):
        parse_sexpr("(/ 1 x)")


def test_parse_region_scopes_certificates():
    e = parse_sexpr("(/ 1 x)", region=RSet.open_pairs([(1, 9)]))
    assert ev(e, Fraction(4)) == QC(Fraction(1, 4))
