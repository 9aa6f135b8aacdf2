"""Numeric Newton-Puiseux expansion of a polynomial's zero set near 0+.

Exponents stay exact Fractions throughout; coefficients are complex
doubles.  Each recursion level picks a slope from the (fractional) Newton
polygon of the transformed polynomial, solves the edge polynomial for
leading coefficients, substitutes, and recurses.  Ramification is tracked
per branch; there is never a global x -> x^(1/r) substitution.

Truncation is reported in band: a cluster of sheets that agree to the
computed order comes back as one branch with the combined multiplicity
and split_undetermined set, never as an exception and never silently
merged as proven equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import EmptyPolygonError, NumericalUnderflowError
from .polycore import BivarPoly, PuiseuxBranch, PuiseuxTerm, Reality, eval_branch

# Floor for the relative clustering tolerance.  An exact m-fold root of an
# edge polynomial scatters by about eps^(1/m) relative in double precision
# (measured: ~8e-8 for doubles, ~1e-5 for triples), so the ladder in
# _cluster_roots widens the tolerance with the candidate cluster size; this
# floor covers the m = 1..2 regime.
CLUSTER_REL_TOL = 1e-6
_CLUSTER_LADDER = 100.0
# Coefficients below this fraction of their accumulated absolute mass are
# cancellation residue and are dropped after substitution.
PRUNE_REL_TOL = 1e-10
REAL_SNAP_TOL = 1e-10
TERM_DROP_TOL = 1e-12

_MAX_DEPTH = 512


@dataclass(frozen=True)
class BranchSet:
    """All solution sheets of F = 0 through the origin, plus axis factors.

    axis_roots counts the plain x and y powers dividing F; they are kept
    as counts, not branches.  total_multiplicity is the number of sheets
    (with multiplicity) tending to 0 along x -> 0+, and always equals the
    sum of branch multiplicities.  cluster_tolerance is the relative
    tolerance that was used to merge root clusters.
    """

    branches: tuple[PuiseuxBranch, ...]
    total_multiplicity: int
    axis_roots: tuple[int, int]
    cluster_tolerance: float
    order: Fraction

    def to_dict(self) -> dict:
        return {
            "axis_roots": {"x": self.axis_roots[0], "y": self.axis_roots[1]},
            "total_multiplicity": self.total_multiplicity,
            "cluster_tolerance": self.cluster_tolerance,
            "order": str(self.order),
            "branches": [
                {
                    "leading_exp": str(b.leading_exponent),
                    "ramification": b.ramification,
                    "terms": [
                        {
                            "exp": str(t.exponent),
                            "re": t.coefficient.real,
                            "im": t.coefficient.imag,
                        }
                        for t in b.terms
                    ],
                    "multiplicity": b.multiplicity,
                    "reality": b.reality.value,
                    "exact": b.exact,
                    "split_undetermined": b.split_undetermined,
                }
                for b in self.branches
            ],
        }


# --- fractional Newton polygon helpers -------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(support):
    """Lower-left hull vertices of (Fraction, int) points, left to right."""
    cols: dict[Fraction, int] = {}
    for e, k in support:
        if e not in cols or k < cols[e]:
            cols[e] = k
    pareto: list[tuple[Fraction, int]] = []
    for e, k in sorted(cols.items()):
        if not pareto or k < pareto[-1][1]:
            pareto.append((e, k))
    hull: list[tuple[Fraction, int]] = []
    for p in pareto:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def _edges(hull):
    out = []
    for (e0, k0), (e1, k1) in zip(hull, hull[1:]):
        out.append((Fraction(e1 - e0, k0 - k1), (e0, k0), (e1, k1)))
    return out


def _edge_poly(poly, gamma, upper, lower):
    """Coefficients (highest power first) of the edge polynomial psi.

    psi(z) collects the support points on the edge; its nonzero roots are
    the admissible leading coefficients at exponent gamma.  The constant
    term sits at the lower vertex, so zero is never a root.
    """
    e_up, k_up = upper
    k_lo = lower[1]
    deg = k_up - k_lo
    coeffs = np.zeros(deg + 1, dtype=complex)
    for (e, k), c in poly.items():
        if k_lo <= k <= k_up and e == e_up + gamma * (k_up - k):
            coeffs[k_up - k] = c
    return coeffs


# --- roots of the edge polynomial ------------------------------------------


def _cluster_tol(size: int) -> float:
    eps = float(np.finfo(float).eps)
    return max(CLUSTER_REL_TOL, _CLUSTER_LADDER * eps ** (1.0 / size))


def _linkage(roots, tol):
    """Single-linkage groups at an absolute threshold."""
    n = len(roots)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(roots[i])
    return list(groups.values())


def _resolve_clusters(roots, scale):
    """Split a candidate cluster at the tolerance its own size justifies.

    A set of s roots is accepted as one s-fold root only if they all sit
    within the s-fold scatter radius; otherwise the subgroups are resolved
    recursively at their own, tighter, radii.  Distinct roots closer than
    the scatter radius of the enclosing group are therefore still told
    apart whenever double precision can tell them apart.
    """
    s = len(roots)
    if s == 1:
        return [(roots[0], 1)]
    groups = _linkage(roots, _cluster_tol(s) * scale)
    if len(groups) == 1:
        return [(sum(roots) / s, s)]
    out = []
    for g in groups:
        out.extend(_resolve_clusters(g, scale))
    return out


def _cluster_roots(roots):
    """Cluster scattered copies of multiple roots; returns (mean, size) pairs."""
    scale = max(1.0, max(abs(r) for r in roots))
    out = _resolve_clusters(list(roots), scale)
    out.sort(key=lambda rc: (rc[0].real, rc[0].imag))
    return out


def _polish_root(psi, root, multiplicity):
    """Refine a cluster mean; an m-fold root is simple for the (m-1)th derivative."""
    p = np.asarray(psi, dtype=complex)
    for _ in range(multiplicity - 1):
        p = np.polyder(p)
    z = complex(root)
    for _ in range(8):
        dv = np.polyval(np.polyder(p), z)
        if dv == 0:
            break
        step = np.polyval(p, z) / dv
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    if abs(z - root) > 1e-4 * max(1.0, abs(root)):
        return complex(root)  # the polish ran away; trust the cluster
    return z


def _snap(z: complex) -> complex:
    scale = max(1.0, abs(z))
    re, im = z.real, z.imag
    if im != 0 and abs(im) <= REAL_SNAP_TOL * scale:
        im = 0.0
    if re != 0 and abs(re) <= REAL_SNAP_TOL * scale:
        re = 0.0
    return complex(re, im)


# --- substitution -----------------------------------------------------------


def _substitute(poly, gamma, c):
    """Apply y -> c*x^gamma + y, pruning cancellation residue.

    Alongside each value an absolute accumulation is tracked; entries whose
    final value is below PRUNE_REL_TOL of that mass are treated as exact
    cancellations.
    """
    out: dict[tuple[Fraction, int], complex] = {}
    acc: dict[tuple[Fraction, int], float] = {}
    for (e, k), coeff in poly.items():
        for j in range(k + 1):
            w = math.comb(k, j) * c ** (k - j)
            key = (e + gamma * (k - j), j)
            out[key] = out.get(key, 0j) + coeff * w
            acc[key] = acc.get(key, 0.0) + abs(coeff) * abs(w)
    return {
        key: val
        for key, val in out.items()
        if abs(val) > PRUNE_REL_TOL * acc[key]
    }


# --- the expansion ----------------------------------------------------------


def _expand(poly, m, prefix, gamma_prev, order, out):
    if len(prefix) > _MAX_DEPTH:
        raise RuntimeError("expansion recursion exceeded the depth cap")
    v = min(k for _, k in poly)
    if v > 0:
        # y^v divides exactly: the prefix is a terminating solution
        out.append({"terms": list(prefix), "mult": v, "exact": True, "order": None})
        poly = {(e, k - v): c for (e, k), c in poly.items()}

    target = [edge for edge in _edges(_hull(poly.keys())) if edge[0] > gamma_prev]
    k_top = target[0][1][1] if target else 0
    leftover = m - v - k_top
    if leftover < 0:
        raise RuntimeError("sheet accounting failed during expansion")
    if leftover > 0:
        # sheets stuck at the cluster scale: conflated roots that did not
        # separate; report them on the prefix, never drop them
        out.append(
            {
                "terms": list(prefix),
                "mult": leftover,
                "exact": False,
                "split": leftover > 1,
                "order": gamma_prev,
            }
        )

    horizon = 0
    for gamma, upper, lower in target:
        n_e = upper[1] - lower[1]
        if gamma > order:
            horizon += n_e
            continue
        psi = _edge_poly(poly, gamma, upper, lower)
        roots = list(np.roots(psi))
        for mean, size in _cluster_roots(roots):
            c = _snap(_polish_root(psi, mean, size))
            _expand(
                _substitute(poly, gamma, c),
                size,
                prefix + [(gamma, c)],
                gamma,
                order,
                out,
            )

    if horizon > 0:
        if prefix:
            # continuations live entirely beyond the horizon: merge them
            # onto the prefix with the combined multiplicity
            out.append(
                {
                    "terms": list(prefix),
                    "mult": horizon,
                    "exact": False,
                    "split": horizon > 1,
                    "order": order,
                }
            )
        else:
            # top level: a branch needs its leading term even when that
            # term already sits beyond the requested order
            for gamma, upper, lower in target:
                if gamma <= order:
                    continue
                psi = _edge_poly(poly, gamma, upper, lower)
                for mean, size in _cluster_roots(list(np.roots(psi))):
                    c = _snap(_polish_root(psi, mean, size))
                    out.append(
                        {
                            "terms": [(gamma, c)],
                            "mult": size,
                            "exact": False,
                            "split": size > 1,
                            "order": order,
                        }
                    )


def _record_order(rec) -> Optional[Fraction]:
    if rec["exact"]:
        return None
    return rec["order"]


def _records_equal(a, b) -> bool:
    """Same expansion as far as both records are resolved."""
    ra, rb = _record_order(a), _record_order(b)
    if ra is None and rb is None:
        cutoff = None
    elif ra is None:
        cutoff = rb
    elif rb is None:
        cutoff = ra
    else:
        cutoff = min(ra, rb)

    def upto(rec):
        return {
            e: c for e, c in rec["terms"] if cutoff is None or e <= cutoff
        }

    ta, tb = upto(a), upto(b)
    if set(ta) != set(tb):
        return False
    for e, ca in ta.items():
        cb = tb[e]
        if abs(ca - cb) > CLUSTER_REL_TOL * max(1.0, abs(ca), abs(cb)):
            return False
    return True


def _merge_records(records):
    merged = []
    used = [False] * len(records)
    for i, rec in enumerate(records):
        if used[i]:
            continue
        group = [rec]
        for j in range(i + 1, len(records)):
            if not used[j] and _records_equal(rec, records[j]):
                used[j] = True
                group.append(records[j])
        if len(group) == 1:
            merged.append(rec)
            continue
        # indistinguishable at this order; combine and flag rather than
        # keep duplicates or claim they are provably equal
        orders = [_record_order(g) for g in group if _record_order(g) is not None]
        longest = max(group, key=lambda g: len(g["terms"]))
        merged.append(
            {
                "terms": longest["terms"],
                "mult": sum(g["mult"] for g in group),
                "exact": False,
                "split": True,
                "order": min(orders) if orders else None,
            }
        )
    return merged


def _record_to_branch(rec) -> PuiseuxBranch:
    terms = rec["terms"]
    lead = abs(terms[0][1])
    kept = [
        (e, c) for e, c in terms if abs(c) > TERM_DROP_TOL * lead
    ]
    ram = 1
    for e, _ in kept:
        ram = ram * e.denominator // math.gcd(ram, e.denominator)
    real = all(c.imag == 0 for _, c in kept)
    return PuiseuxBranch(
        ramification=ram,
        terms=tuple(PuiseuxTerm(e, c) for e, c in kept),
        multiplicity=rec["mult"],
        reality=Reality.REAL if real else Reality.COMPLEX_PAIR,
        exact=rec["exact"],
        split_undetermined=rec.get("split", False),
        order=rec["order"],
    )


def expand_branches(F: BivarPoly, order=None) -> BranchSet:
    """Expand every solution sheet of F = 0 through the origin.

    order bounds the largest exponent computed (default 4*total_degree + 8);
    larger is slower and rarely needed.  Pure x and y factors are split off
    into axis_roots first, so a monomial comes back with no branches.
    """
    if not F:
        raise EmptyPolygonError("the zero polynomial has no branch structure")
    if order is None:
        order = Fraction(4 * F.total_degree() + 8)
    order = Fraction(order)

    A = min(a for a, _ in F.support())
    B = min(b for _, b in F.support())
    work = {
        (Fraction(a - A), b - B): complex(c) for (a, b), c in F.terms.items()
    }
    m = min(k for (e, k) in work if e == 0)

    cluster_tol = _cluster_tol(m) if m >= 2 else CLUSTER_REL_TOL
    records: list[dict] = []
    if m > 0:
        _expand(work, m, [], Fraction(0), order, records)
    records = _merge_records(records)
    branches = sorted(
        (_record_to_branch(rec) for rec in records),
        key=lambda b: (
            b.leading_exponent,
            b.leading_coefficient.real,
            b.leading_coefficient.imag,
        ),
    )
    total = sum(b.multiplicity for b in branches)
    if total != m:
        raise RuntimeError(
            f"expansion lost sheets: expected {m}, accounted {total}"
        )
    return BranchSet(
        branches=tuple(branches),
        total_multiplicity=total,
        axis_roots=(A, B),
        cluster_tolerance=cluster_tol,
        order=order,
    )


# --- residual check ---------------------------------------------------------


def branch_residual_order(
    F: BivarPoly, branch: PuiseuxBranch, xs=(0.1, 0.05, 0.025, 0.0125)
) -> float:
    """Least-squares slope of log |F(x, branch(x))| against log x.

    A branch truncated at order K with leading exponent g should score at
    least K + g on a clean corpus; a wrong branch scores the vanishing
    order of whatever residual it leaves.  Returns inf when the residual
    is zero at the working precision at every sample, which is the
    expected outcome for exact branches.
    """
    coeffs = [(a, b, float(c)) for (a, b), c in F.terms.items()]
    eps = float(np.finfo(float).eps)
    residuals = []
    machine_zero = True
    for x in xs:
        y = complex(eval_branch(branch, x))
        value = 0j
        scale = 0.0
        for a, b, c in coeffs:
            xa = x**a
            yb = y**b
            value += c * xa * yb
            scale += abs(c) * xa * abs(yb)
        r = abs(value)
        if 0.0 < r < 1e-300:
            raise NumericalUnderflowError(
                f"residual {r} at x={x} is below measurable range"
            )
        if r > 100 * eps * scale:
            machine_zero = False
        residuals.append(r)
    if machine_zero:
        return math.inf
    pts = [(math.log(x), math.log(r)) for x, r in zip(xs, residuals) if r > 0.0]
    if len(pts) < 2:
        return math.inf
    lx = np.array([p[0] for p in pts])
    lr = np.array([p[1] for p in pts])
    slope = float(np.polyfit(lx, lr, 1)[0])
    return slope
