"""Parser, exact arithmetic, and series container checks."""

import math
import random
from fractions import Fraction

import pytest

from newtonosc.errors import DomainError, NegativeExponentError, ParseError
from newtonosc.polycore import (
    BivarPoly,
    PuiseuxBranch,
    PuiseuxTerm,
    Reality,
    eval_branch,
    eval_poly,
    integrate_xy,
    mixed_derivative,
    parse_poly,
)

F = Fraction


class TestParse:
    def test_quartic_coefficient(self):
        assert parse_poly("x^2*y^2/4").terms == {(2, 2): F(1, 4)}

    def test_binomial_square(self):
        assert parse_poly("(y-x)^2").terms == {(0, 2): 1, (1, 1): -2, (2, 0): 1}

    def test_zero(self):
        assert parse_poly("0").terms == {}
        assert not parse_poly("x - x")

    def test_rational_literal(self):
        assert parse_poly("3/4").terms == {(0, 0): F(3, 4)}
        assert parse_poly("1/2*x").terms == {(1, 0): F(1, 2)}

    def test_leading_minus(self):
        assert parse_poly("-(y-x)^4/12") == -(parse_poly("(y-x)^2") ** 2) * F(1, 12)

    def test_whitespace_insignificant(self):
        assert parse_poly(" x ^ 2 + y ") == parse_poly("x^2+y")

    def test_negative_exponent(self):
        with pytest.raises(NegativeExponentError) as info:
            parse_poly("x^(-1)")
        assert info.value.position == 3

    def test_negative_exponent_bare(self):
        with pytest.raises(NegativeExponentError):
            parse_poly("x^-2")

    def test_syntax_errors_carry_position(self):
        for text, pos in [("x +", 3), ("2x", 1), ("(x", 2), ("x^", 2), ("x & y", 2)]:
            with pytest.raises(ParseError) as info:
                parse_poly(text)
            assert info.value.position == pos, text

    def test_division_by_zero(self):
        with pytest.raises(ParseError) as info:
            parse_poly("x/0")
        assert info.value.position == 2

    def test_divisor_must_be_literal(self):
        with pytest.raises(ParseError):
            parse_poly("x/y")

    def test_roundtrip_random(self):
        # parse(render(p)) == p on a seeded corpus
        rng = random.Random(1203)
        for _ in range(200):
            terms = {}
            for _ in range(rng.randrange(0, 8)):
                key = (rng.randrange(0, 7), rng.randrange(0, 7))
                terms[key] = F(rng.randrange(-40, 41), rng.randrange(1, 13))
            p = BivarPoly(terms)
            assert parse_poly(p.render()) == p

    def test_render_canonical_forms(self):
        assert parse_poly("x*y").render() == "x*y"
        assert parse_poly("0").render() == "0"
        assert parse_poly("-x + y^2").render() == "y^2 - x"
        assert parse_poly("x^2*y^2/4").render() == "1/4*x^2*y^2"


class TestCalculus:
    def test_mixed_of_product_phase(self):
        assert mixed_derivative(parse_poly("x*y")) == BivarPoly.constant(1)

    def test_mixed_of_quartic_phase(self):
        assert mixed_derivative(parse_poly("x^2*y^2/4")) == parse_poly("x*y")

    def test_mixed_of_degenerate_phase(self):
        got = mixed_derivative(parse_poly("-(y-x)^4/12"))
        assert got == parse_poly("(y-x)^2")

    def test_linearity(self):
        rng = random.Random(7)
        mono = [parse_poly(s) for s in ("x^3*y", "x*y^5", "x^2", "y^2", "x*y", "1")]
        for _ in range(50):
            a = F(rng.randrange(-9, 10), rng.randrange(1, 5))
            b = F(rng.randrange(-9, 10), rng.randrange(1, 5))
            p = sum((rng.choice(mono) for _ in range(3)), BivarPoly())
            q = sum((rng.choice(mono) for _ in range(3)), BivarPoly())
            assert mixed_derivative(a * p + b * q) == a * mixed_derivative(p) + b * mixed_derivative(q)

    def test_support_shift(self):
        # d2/dxdy maps (a, b) to (a-1, b-1) with factor a*b, killing a=0 or b=0
        rng = random.Random(99)
        for _ in range(100):
            a, b = rng.randrange(0, 6), rng.randrange(0, 6)
            c = F(rng.randrange(1, 20), rng.randrange(1, 7))
            got = mixed_derivative(BivarPoly({(a, b): c}))
            if a == 0 or b == 0:
                assert got.terms == {}
            else:
                assert got.terms == {(a - 1, b - 1): c * a * b}

    def test_integrate_xy_inverts_mixed(self):
        for text in ("x*y", "x^2*y^2/4", "(y-x)^2", "1", "x^3*y + 2*y^2"):
            mixed = parse_poly(text)
            assert mixed_derivative(integrate_xy(mixed)) == mixed

    def test_integrate_xy_no_pure_terms(self):
        phase = integrate_xy(parse_poly("1 + x + y + x^2*y^3"))
        for a, b in phase.support():
            assert a >= 1 and b >= 1


class TestEval:
    def test_product_point(self):
        assert eval_poly(BivarPoly({(1, 1): 1}), 0.5, 0.25) == 0.125

    def test_pythagorean(self):
        assert eval_poly(parse_poly("x^2 + y^2"), 3.0, 4.0) == 25.0

    def test_correct_rounding(self):
        # reference: exact Fraction arithmetic evaluated independently here
        rng = random.Random(42)
        for _ in range(100):
            terms = {
                (rng.randrange(0, 5), rng.randrange(0, 5)): F(rng.randrange(-30, 31), rng.randrange(1, 9))
                for _ in range(5)
            }
            p = BivarPoly(terms)
            x = rng.uniform(-2, 2)
            y = rng.uniform(-2, 2)
            exact = Fraction(0)
            for (a, b), c in p.terms.items():
                exact += c * Fraction(x) ** a * Fraction(y) ** b
            want = float(exact)
            got = eval_poly(p, x, y)
            assert got == want or abs(got - want) <= 2 * math.ulp(max(abs(want), 1e-300))

    def test_exact_agrees_at_rational_points(self):
        p = parse_poly("x^3*y - 2*x*y^2 + 7/3")
        x, y = F(5, 7), F(-3, 2)
        want = F(5, 7) ** 3 * F(-3, 2) - 2 * F(5, 7) * F(-3, 2) ** 2 + F(7, 3)
        assert p.eval_exact(x, y) == want


class TestBranchTypes:
    def test_eval_power(self):
        br = PuiseuxBranch(ramification=2, terms=(PuiseuxTerm(F(3, 2), 1.0),))
        assert eval_branch(br, 4.0) == 8.0

    def test_eval_sum(self):
        br = PuiseuxBranch(
            ramification=2,
            terms=(PuiseuxTerm(F(1), 1.0), PuiseuxTerm(F(5, 2), 1.0)),
        )
        assert eval_branch(br, 1.0) == 2.0

    def test_eval_domain(self):
        br = PuiseuxBranch(ramification=1, terms=(PuiseuxTerm(F(1), 1.0),))
        with pytest.raises(DomainError):
            eval_branch(br, 0.0)
        with pytest.raises(DomainError):
            eval_branch(br, -1.0)

    def test_complex_value(self):
        br = PuiseuxBranch(
            ramification=2,
            terms=(PuiseuxTerm(F(3, 2), 1j),),
            reality=Reality.COMPLEX_PAIR,
        )
        assert eval_branch(br, 4.0) == 8j

    def test_exponents_strictly_increase(self):
        with pytest.raises(ValueError):
            PuiseuxBranch(
                ramification=2,
                terms=(PuiseuxTerm(F(3, 2), 1.0), PuiseuxTerm(F(3, 2), 2.0)),
            )

    def test_ramification_divides_denominators(self):
        with pytest.raises(ValueError):
            PuiseuxBranch(ramification=2, terms=(PuiseuxTerm(F(1, 3), 1.0),))

    def test_term_validation(self):
        with pytest.raises(ValueError):
            PuiseuxTerm(F(-1, 2), 1.0)
        with pytest.raises(ValueError):
            PuiseuxTerm(F(1, 2), 0.0)

    def test_branch_needs_terms(self):
        with pytest.raises(ValueError):
            PuiseuxBranch(ramification=1, terms=())
