"""Branch expansion on the reference corpus, with residual-slope oracles.

Expected coefficients here were derived by hand: y^2 = x^2*(1+x) gives
y = x*(1+x)^(1/2) = x + x^2/2 - x^3/8 + x^4/16 - ..., and the other corpus
members terminate, so their series are checked exactly.
"""

import math
import random
from fractions import Fraction

import pytest

from newtonosc.errors import EmptyPolygonError, NumericalUnderflowError
from newtonosc.polycore import (
    BivarPoly,
    PuiseuxBranch,
    PuiseuxTerm,
    Reality,
    parse_poly,
)
from newtonosc.puiseux import BranchSet, branch_residual_order, expand_branches

F = Fraction


def coeffs(branch):
    return {t.exponent: t.coefficient for t in branch.terms}


class TestCorpus:
    def test_cusp(self):
        out = expand_branches(parse_poly("y^2 - x^3"))
        assert out.axis_roots == (0, 0)
        assert out.total_multiplicity == 2
        minus, plus = out.branches
        for br, sign in ((minus, -1), (plus, 1)):
            assert br.ramification == 2
            assert br.multiplicity == 1
            assert br.exact
            assert br.reality is Reality.REAL
            assert coeffs(br) == {F(3, 2): sign}

    def test_shifted_pair_exact(self):
        out = expand_branches(parse_poly("(y-x)^2 - x^5"))
        assert out.total_multiplicity == 2
        assert len(out.branches) == 2
        for br, sign in zip(out.branches, (-1, 1)):
            assert br.exact
            assert not br.split_undetermined
            got = coeffs(br)
            assert got[F(1)] == 1
            assert abs(got[F(5, 2)] - sign) < 1e-12
            assert set(got) == {F(1), F(5, 2)}

    def test_shifted_pair_below_horizon(self):
        # order 2 cannot see the exponent 5/2 where the sheets separate
        out = expand_branches(parse_poly("(y-x)^2 - x^5"), order=2)
        (br,) = out.branches
        assert br.multiplicity == 2
        assert br.split_undetermined
        assert not br.exact
        assert br.order == 2
        assert coeffs(br) == {F(1): 1}

    def test_square_root_series(self):
        out = expand_branches(parse_poly("y^2 - x^2 - x^3"), order=4)
        assert out.total_multiplicity == 2
        minus, plus = out.branches
        want = {F(1): 1, F(2): 0.5, F(3): -0.125, F(4): 0.0625}
        got = coeffs(plus)
        assert set(got) == set(want)
        for e, c in want.items():
            assert abs(got[e] - c) < 1e-9, e
        got_minus = coeffs(minus)
        for e, c in want.items():
            assert abs(got_minus[e] + c) < 1e-9, e
        assert plus.ramification == 1
        assert not plus.exact

    def test_axis_factor(self):
        out = expand_branches(parse_poly("x*(y-x)^2"))
        assert out.axis_roots == (1, 0)
        (br,) = out.branches
        assert br.exact and br.multiplicity == 2
        assert coeffs(br) == {F(1): 1}

    def test_complex_pair(self):
        out = expand_branches(parse_poly("x^2 + y^2"))
        assert out.total_multiplicity == 2
        assert {br.reality for br in out.branches} == {Reality.COMPLEX_PAIR}
        got = sorted((br.terms[0].coefficient for br in out.branches), key=lambda c: c.imag)
        assert got[0] == -1j and got[1] == 1j
        for br in out.branches:
            assert br.exact
            assert br.leading_exponent == 1

    def test_monomial_has_no_branches(self):
        out = expand_branches(parse_poly("x^2*y^3"))
        assert out.branches == ()
        assert out.axis_roots == (2, 3)
        assert out.total_multiplicity == 0

    def test_zero_rejected(self):
        with pytest.raises(EmptyPolygonError):
            expand_branches(BivarPoly())

    def test_rational_double_sheet_merges(self):
        # ((1+x)y - x)^2 vanishes on y = x/(1+x); the square never separates
        out = expand_branches(parse_poly("((1+x)*y - x)^2"), order=6)
        (br,) = out.branches
        assert br.multiplicity == 2
        assert br.split_undetermined
        assert br.order == 6
        got = coeffs(br)
        for k in range(1, 7):
            assert abs(got[F(k)] - (-1) ** (k + 1)) < 1e-9


class TestResiduals:
    def test_exact_branches_score_machine_zero(self):
        for text in ("y^2 - x^3", "(y-x)^2 - x^5", "x^2 + y^2"):
            poly = parse_poly(text)
            out = expand_branches(poly)
            for br in out.branches:
                slope = branch_residual_order(poly, br)
                assert slope == math.inf
                assert slope >= 30

    def test_truncated_series_slope(self):
        poly = parse_poly("y^2 - x^2 - x^3")
        out = expand_branches(poly, order=3)
        for br in out.branches:
            slope = branch_residual_order(poly, br)
            # truncating at x^3 leaves a residual of size x^5
            assert 4.5 < slope < 5.5
            assert slope >= 3 + float(br.leading_exponent) - 0.25

    def test_wrong_branch_flagged(self):
        # claiming y = x solves (y-x)^2 - x^5 to order 5 must fail the
        # contract: the residual is exactly -x^5, slope 5 < 5 + 1
        poly = parse_poly("(y-x)^2 - x^5")
        imposter = PuiseuxBranch(ramification=1, terms=(PuiseuxTerm(F(1), 1.0),))
        slope = branch_residual_order(poly, imposter)
        assert abs(slope - 5.0) < 1e-6
        assert slope < 5 + 1 - 0.25

    def test_underflow_detected(self):
        poly = BivarPoly({(0, 2): F(1, 10**290), (3, 0): F(-1, 10**290)})
        off = PuiseuxBranch(
            ramification=2, terms=(PuiseuxTerm(F(3, 2), 1.0 + 1e-12),)
        )
        with pytest.raises(NumericalUnderflowError):
            branch_residual_order(poly, off)


class TestRandomFactors:
    def test_recovers_planted_polynomial_sheets(self):
        rng = random.Random(314)
        for _ in range(40):
            count = rng.randrange(1, 4)
            planted = []
            seen = set()
            for _ in range(count):
                c = [F(rng.randrange(-3, 4)) for _ in range(3)]
                c[0] = F(rng.choice([1, -1, 2, -2, 3]))
                key = tuple(c)
                if key in seen:
                    continue
                seen.add(key)
                planted.append(c)
            x, y = BivarPoly.variable("x"), BivarPoly.variable("y")
            Fpoly = BivarPoly.constant(1)
            for c in planted:
                f = c[0] * x + c[1] * x * x + c[2] * x * x * x
                Fpoly = Fpoly * (y - f)
            out = expand_branches(Fpoly)
            assert out.total_multiplicity == len(planted)
            recovered = []
            for br in out.branches:
                got = coeffs(br)
                series = [got.get(F(k), 0j) for k in (1, 2, 3)]
                for _ in range(br.multiplicity):
                    recovered.append(series)
            assert len(recovered) == len(planted)
            for c in planted:
                want = [complex(float(v), 0.0) for v in c]
                hit = min(
                    range(len(recovered)),
                    key=lambda i: sum(
                        abs(recovered[i][k] - want[k]) for k in range(3)
                    ),
                )
                err = sum(abs(recovered[hit][k] - want[k]) for k in range(3))
                assert err < 1e-8
                recovered.pop(hit)

    def test_double_sheet_exactness(self):
        rng = random.Random(2718)
        for _ in range(25):
            a = rng.choice([1, -1, 2, -2])
            b = rng.randrange(-3, 4)
            f = parse_poly(f"{a}*x + {b}*x^2" if b >= 0 else f"{a}*x - {abs(b)}*x^2")
            y = BivarPoly.variable("y")
            Fpoly = (y - f) * (y - f)
            out = expand_branches(Fpoly)
            (br,) = out.branches
            assert br.exact
            assert br.multiplicity == 2
            got = coeffs(br)
            assert abs(got[F(1)] - a) < 1e-10
            if b:
                assert abs(got[F(2)] - b) < 1e-10


class TestSerialization:
    def test_branchset_dict(self):
        out = expand_branches(parse_poly("y^2 - x^3"))
        data = out.to_dict()
        assert data["total_multiplicity"] == 2
        assert data["axis_roots"] == {"x": 0, "y": 0}
        exps = {br["leading_exp"] for br in data["branches"]}
        assert exps == {"3/2"}
        for br in data["branches"]:
            assert br["reality"] == "Real"
            assert br["terms"][0]["exp"] == "3/2"
            assert isinstance(br["terms"][0]["re"], float)
