"""Dyadic partition, block classification, and block-level bound checks."""

import numpy as np
import pytest

from newtonosc.blocks import (
    BlockEstimate,
    DyadicPartition,
    Region,
    block_rect,
    build_partition,
    chi,
    classify_block,
    derivative_control,
    empirical_range,
    first_block_scale,
    measure_block,
    mu_for_block,
    reconstruction_error,
    theta,
    verify_blocks,
)
from newtonosc.errors import WrongRegionError
from newtonosc.newton import build_polygon
from newtonosc.opnorm import PhaseSpec, size_bound
from newtonosc.polycore import integrate_xy, parse_poly


def polygon(s: str):
    return build_polygon(parse_poly(s))


# ---------------------------------------------------------------------------
# transition function and partition of unity


class TestTheta:
    def test_plateaus(self):
        # identically 1 below the transition, identically 0 above it
        assert theta(np.array([-1.0, 0.0, 0.5, 1.0])).tolist() == [1, 1, 1, 1]
        assert theta(np.array([2.0, 3.0, 100.0])).tolist() == [0, 0, 0]

    def test_strictly_between_on_transition(self):
        # stay away from the endpoints where theta flattens to machine 0/1
        t = np.linspace(1.2, 1.8, 50)
        v = theta(t)
        assert np.all((v > 0) & (v < 1))
        # monotone decreasing across the transition
        assert np.all(np.diff(v) < 0)

    def test_scalar_input(self):
        assert theta(0.25) == 1.0
        assert theta(4.0) == 0.0
        assert 0 < theta(1.5) < 1

    def test_smooth_at_junctions(self):
        # values approach the plateaus to high order; crude finite check
        assert theta(1.0 + 1e-4) > 1 - 1e-6
        assert theta(2.0 - 1e-4) < 1e-6


class TestChi:
    def test_support(self):
        j = 3
        t = np.array([2.0 ** (-j - 1) * 0.99, 2.0 ** (-j + 1) * 1.01, 0.0, -0.5])
        assert np.all(chi(j, t) == 0)

    def test_peak_value_one(self):
        # at t = 2^-j both transitions sit on their plateaus
        for j in range(0, 8):
            assert chi(j, 2.0**-j) == pytest.approx(1.0, abs=1e-15)

    def test_adjacent_overlap_only(self):
        t = np.geomspace(2.0**-9, 0.9, 400)
        for j in range(2, 8):
            inside = chi(j, t) > 0
            for other in range(0, 10):
                if abs(other - j) > 1:
                    assert np.all(chi(other, t)[inside] == 0)

    def test_partition_sums_to_one(self):
        part = build_partition(2, 9)
        t = np.geomspace(2.0**-9, 2.0**-3, 500)
        total = sum(part.chi(j, t) for j in range(2, 10))
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_telescoped_total_matches_sum(self):
        part = build_partition(1, 8)
        t = np.geomspace(2.0**-10, 2.0, 300)
        s = sum(part.chi(j, t) for j in range(1, 9))
        assert np.max(np.abs(part.total(t) - s)) < 1e-12

    def test_total_vanishes_at_origin(self):
        part = build_partition(1, 8)
        assert part.total(np.array([0.0, -1.0, 2.0**-12])).tolist() == [0, 0, 0]

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            build_partition(5, 4)


# ---------------------------------------------------------------------------
# block classification


class TestClassify:
    def test_circle_gap_and_near_edge(self):
        g = polygon("x^2 + y^2")
        assert str(classify_block(5, 10, g)) == "Gap(1)"
        assert str(classify_block(5, 5, g)) == "NearEdge(1)"
        assert str(classify_block(10, 5, g)) == "Gap(0)"

    def test_circle_has_no_axis_regions(self):
        # both offsets vanish, so neither axis band can trigger
        g = polygon("x^2 + y^2")
        for j, k in [(20, 1), (1, 20), (30, 2), (2, 30)]:
            assert classify_block(j, k, g).kind == "Gap"

    def test_monomial_is_all_vertex_gap(self):
        g = polygon("x*y")
        r = classify_block(4, 9, g)
        assert r.kind == "Gap" and r.nu is None
        assert str(r) == "Gap(vertex)"

    def test_near_edge_band_width(self):
        g = polygon("x^2 + y^2")  # single edge, slope 1
        assert classify_block(7, 7 + 2, g).kind == "NearEdge"
        assert classify_block(7, 7 + 3, g).kind == "Gap"
        assert classify_block(7, 7 - 2, g, D=3.0).kind == "NearEdge"
        assert classify_block(7, 7 + 3, g, D=4.0).kind == "NearEdge"

    def test_x_offset_axis_band(self):
        # F = x(y-x)^2: offset A=1 so small-k blocks fall in the y-axis band
        g = polygon("x*(y - x)^2")
        assert str(classify_block(4, 4, g)) == "NearEdge(1)"
        assert str(classify_block(8, 1, g)) == "AxisY"

    def test_y_offset_axis_band(self):
        # F = y(x-y)^2: offset B=1, single edge slope 1, doubled slope 2
        g = polygon("y*(x - y)^2")
        assert g.B == 1 and g.A == 0
        assert str(classify_block(2, 8, g)) == "AxisX"
        assert classify_block(2, 6, g).kind != "AxisX"

    def test_widening_band_transitions(self):
        # larger D grows the near-edge bands and shrinks the axis bands,
        # so blocks may move Gap/Axis -> NearEdge or Axis -> Gap, never
        # out of NearEdge and never Gap -> Axis
        rng = np.random.default_rng(4)
        for _ in range(60):
            pts = rng.integers(0, 7, size=(rng.integers(1, 5), 2))
            poly = " + ".join(f"x^{a}*y^{b}" for a, b in pts)
            g = polygon(poly)
            for j in range(1, 9):
                for k in range(1, 9):
                    narrow = classify_block(j, k, g, D=3.0)
                    wide = classify_block(j, k, g, D=5.0)
                    if narrow.kind == "NearEdge":
                        assert wide.kind == "NearEdge"
                        # a wider band can only match an earlier edge
                        assert wide.nu <= narrow.nu
                    elif narrow.kind == "Gap":
                        assert wide.kind in ("Gap", "NearEdge")

    def test_region_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            Region("Edge")


# ---------------------------------------------------------------------------
# per-block size parameter


class TestMu:
    def test_frozen_values(self):
        g = polygon("x^2 + y^2")
        r = classify_block(5, 10, g)
        assert mu_for_block(5, 10, r, g) == pytest.approx(2.0**-10)
        r = classify_block(10, 5, g)
        assert mu_for_block(10, 5, r, g) == pytest.approx(2.0**-10)

    def test_monomial_mu(self):
        g = polygon("x*y")
        r = classify_block(3, 4, g)
        assert mu_for_block(3, 4, r, g) == pytest.approx(2.0**-7)

    def test_rejects_non_gap(self):
        g = polygon("x^2 + y^2")
        r = classify_block(5, 5, g)
        assert r.kind == "NearEdge"
        with pytest.raises(WrongRegionError):
            mu_for_block(5, 5, r, g)

    def test_matches_empirical_magnitude(self):
        # on gap blocks mu tracks |F| within the dominance margin
        cases = ["x^2 + y^2", "x*y", "x*(y - x)^2"]
        for s in cases:
            f = parse_poly(s)
            g = build_polygon(f)
            margin = 2.0 ** (g.A + g.B + 4)
            for j in range(1, 9):
                for k in range(1, 9):
                    r = classify_block(j, k, g)
                    if r.kind != "Gap":
                        continue
                    mu = mu_for_block(j, k, r, g)
                    lo, hi = empirical_range(f, j, k)
                    assert lo >= mu / margin, (s, j, k)
                    assert hi <= mu * margin, (s, j, k)

    def test_circle_empirical_factors(self):
        lo, hi = empirical_range(parse_poly("x^2 + y^2"), 5, 10)
        mu = 2.0**-10
        assert lo / mu == pytest.approx(0.25, rel=0.05)
        assert hi / mu == pytest.approx(4.0, rel=0.05)


# ---------------------------------------------------------------------------
# measured block norms against the two bounds


class TestBlockRect:
    def test_rect(self):
        assert block_rect(2, 3) == (2.0**-3, 2.0**-1, 2.0**-4, 2.0**-2)

    def test_first_scale(self):
        assert first_block_scale(0.5) == 1
        assert first_block_scale(1.0) == 0
        assert first_block_scale(0.25) == 2


class TestVerifyBlocks:
    def test_monomial_phase_blocks(self):
        p = PhaseSpec(S=parse_poly("x^2*y^2/4"), rho=0.5)
        g = polygon("x*y")
        ests, summary = verify_blocks(p, 2.0**8, g, D=3.0, j_max=6)
        assert len(ests) == 36
        assert all(str(e.region) == "Gap(vertex)" for e in ests)
        assert summary["violations"] == []
        assert summary["resolution_failures"] == []
        # oscillatory bound is comfortably ahead of the measurement
        assert summary["worst_ratio"]["Gap"] == pytest.approx(0.405, abs=0.1)

    def test_band_width_stability(self):
        # no compact edges here, so the band width cannot matter at all
        p = PhaseSpec(S=parse_poly("x^2*y^2/4"), rho=0.5)
        g = polygon("x*y")
        worst = []
        for d in (3.0, 4.0, 5.0):
            _, summary = verify_blocks(p, 2.0**8, g, D=d, j_max=5)
            worst.append(summary["worst_ratio"]["Gap"])
        assert max(worst) == min(worst)

    def test_edge_phase_blocks(self):
        f = parse_poly("x^2 + y^2")
        p = PhaseSpec(S=integrate_xy(f), rho=0.5)
        ests, summary = verify_blocks(p, 2.0**8, build_polygon(f), j_max=5)
        assert summary["violations"] == []
        kinds = {e.region.kind for e in ests}
        assert kinds == {"Gap", "NearEdge"}
        assert summary["worst_ratio"]["Gap"] < 1.0
        assert summary["worst_ratio"]["NearEdge"] < 1.0

    def test_static_phase_uses_size_bound(self):
        p = PhaseSpec(S=parse_poly("x^2*y^2/4"), rho=0.5)
        ests, summary = verify_blocks(p, 0.0, polygon("x*y"), j_max=4)
        assert all(np.isinf(e.osc) for e in ests)
        assert summary["violations"] == []
        for e in ests:
            assert e.measured <= e.size * 1.01

    def test_unresolvable_block_recorded_not_raised(self):
        f = parse_poly("x^2 + y^2")
        p = PhaseSpec(S=integrate_xy(f), rho=0.5)
        ests, summary = verify_blocks(p, 2.0**30, build_polygon(f), j_max=1)
        assert ests == []
        failures = summary["resolution_failures"]
        assert len(failures) == 1 and failures[0][:2] == (1, 1)

    def test_estimate_row(self):
        e = BlockEstimate(
            j=2, k=3, mu=0.5, measured=0.125,
            size=0.3, osc=np.inf, region=Region("Gap", 1),
        )
        row = e.to_row()
        assert row["region"] == "Gap(1)"
        assert row["osc_bound"] == ""
        assert e.bound == 0.3
        assert e.ratio == pytest.approx(0.125 / 0.3)

    def test_measured_below_size_bound(self):
        # size bound is oscillation-blind, so it must hold at any lambda
        p = PhaseSpec(S=parse_poly("x^2*y^2/4"), rho=0.5)
        g = polygon("x*y")
        for lam in (0.0, 2.0**6, 2.0**9):
            ests, _ = verify_blocks(p, lam, g, j_max=4)
            for e in ests:
                assert e.measured <= e.size * 1.01


class TestDerivativeControl:
    def test_monomial_constants(self):
        rows = derivative_control(parse_poly("x*y"), polygon("x*y"), j_max=6)
        assert rows
        for _, _, c1, c2 in rows:
            assert c1 == pytest.approx(2.0, rel=1e-12)
            assert c2 == 0.0

    def test_circle_constants_bounded(self):
        rows = derivative_control(
            parse_poly("x^2 + y^2"), polygon("x^2 + y^2"), j_max=8
        )
        c1s = [r[2] for r in rows]
        c2s = [r[3] for r in rows]
        assert max(c1s) == pytest.approx(4.0, rel=0.01)
        assert max(c2s) == pytest.approx(2.0, rel=0.01)
        assert max(c1s) <= 8.0 and max(c2s) <= 8.0


class TestReconstruction:
    def test_block_sum_matches_direct_operator(self):
        p = PhaseSpec(S=parse_poly("x^2*y^2/4"), rho=0.5)
        err = reconstruction_error(p, 2.0**8, j_max=8, trials=5, seed=0, n=1024)
        assert err <= 0.05
