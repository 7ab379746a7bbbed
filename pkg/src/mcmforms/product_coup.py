"""Degree arithmetic for product decompositions.

Splits d = p*s + q*(s+1) over the numerical semigroup generated by s and
s+1 (every d >= s(s-1) splits; the largest gap is s(s-1)-1), computes the
exact big-integer comparison d0*(d0+1) < N^(N^2), and verifies pointwise
over F_q that the incidence locus of factored sections decomposes into the
union of factor-level pieces.
"""

from __future__ import annotations

from itertools import combinations, product
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

from .exact_algebra import MultiPoly, arith, total_differential
from .finite_geometry import _eval_section, proj_points, tangent_directions
from .schedule import ProblemShape, rescale_ledger


class NoRepresentation(ValueError):
    """d has no expression p*s + q*(s+1) with nonnegative p, q."""


def frobenius_split(d: int, s: int) -> Tuple[int, int]:
    """The q-minimal split d = p*s + q*(s+1) with p, q >= 0.

    q must equal d mod s, so the minimal candidate is q = d mod s; if that
    leaves p < 0 no larger candidate can work. Existence is guaranteed for
    d >= s(s-1).
    """
    if d < 0 or s < 2:
        raise ValueError("need d >= 0 and s >= 2")
    q = d % s
    p = (d - q * (s + 1)) // s
    if p < 0:
        raise NoRepresentation(f"{d} is not p*{s} + q*{s + 1} with p, q >= 0")
    return p, q


def verify_semigroup_bound(s: int, horizon: int) -> dict:
    """Exhaustive split check on [0, horizon] against the threshold s(s-1).

    Every d at or above the threshold must split; the unrepresentable d
    below it are listed (the largest is always s(s-1)-1 for s >= 2).
    """
    if s < 2:
        raise ValueError("need s >= 2")
    threshold = s * (s - 1)
    if horizon < threshold:
        raise ValueError(f"horizon {horizon} is below the threshold {threshold}")
    failures_above = []
    failures_below = []
    for d in range(horizon + 1):
        try:
            p, q = frobenius_split(d, s)
        except NoRepresentation:
            (failures_below if d < threshold else failures_above).append(d)
            continue
        assert d == p * s + q * (s + 1) and 0 <= q <= s - 1
    return {
        "op": "semigroup-bound",
        "s": s,
        "horizon": horizon,
        "threshold": threshold,
        "gaps_below_threshold": failures_below,
        "failures_at_or_above": failures_above,
        "ok": not failures_above,
    }


def effective_bound_NN2(N: int) -> dict:
    """Exact comparison of d0*(d0+1) with N^(N^2), d0 = N^(N^2/2) - 1.

    For N <= 2 the bound holds trivially at d = N^(N^2). For even N the
    comparison is exact big-integer arithmetic. For odd N the exponent
    N^2/2 is fractional: both integerized thresholds (ceil and floor of
    N^(N^2/2)) are reported next to the algebraically true real form
    (x-1)x < x^2; neither integerization overrides the other.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    exponent = N * N
    bound = N ** exponent
    report = {"op": "effective-bound", "N": N, "exponent": exponent, "bound": bound}
    if N <= 2:
        report.update({
            "parity": "trivial",
            "note": f"bound holds trivially at d = {bound}",
            "verdict": "PASS",
            "flagged": False,
            "ok": True,
        })
        return report
    if exponent % 2 == 0:
        d0 = N ** (exponent // 2) - 1
        prod = d0 * (d0 + 1)
        fits = prod < bound
        report.update({
            "parity": "even",
            "d0": d0,
            "product": prod,
            "comparison": f"{d0}*{d0 + 1} {'<' if fits else '>='} {N}^{exponent}",
            "verdict": "PASS" if fits else "FAIL",
            "flagged": not fits,
            "ok": fits,
        })
        return report
    root = isqrt(bound)  # floor of N^(N^2/2), never exact for odd exponent
    variants = {}
    for name, s in (("floor", root), ("ceil", root + 1)):
        prod = s * (s - 1)
        fits = prod < bound
        variants[name] = {
            "s": s,
            "product": prod,
            "comparison": f"{s}*{s - 1} {'<' if fits else '>='} {N}^{exponent}",
            "verdict": "PASS" if fits else "FAIL",
        }
    report.update({
        "parity": "odd",
        "sqrt_floor": root,
        "floor_variant": variants["floor"],
        "ceil_variant": variants["ceil"],
        "real_form": {"inequality": "(x-1)*x < x^2 for x = N^(N^2/2) > 1", "verdict": "PASS"},
        "flagged": any(v["verdict"] == "FAIL" for v in variants.values()),
        "ok": True,
    })
    return report


def rescale_grid_report(d_max: int = 100, s_max: int = 20, l_max: int = 20,
                        a_values: Sequence[int] = (-2, -1, 0, 1, 2)) -> dict:
    """The exponent identities of the rescale ledger over the whole grid
    1 <= d' <= d <= d_max, 1 <= s, l <= s_max/l_max, a in a_values."""
    rows = 0
    violations = []
    for s_exp in range(1, s_max + 1):
        for l_exp in range(1, l_max + 1):
            for a in a_values:
                for d in range(1, d_max + 1):
                    for entry in rescale_ledger(s_exp, l_exp, d, a, cap=d_max):
                        rows += 1
                        if not (entry["commutation_ok"] and entry["decomposition_ok"]):
                            violations.append({"s": s_exp, "l": l_exp, "a": a,
                                               "d": d, "dprime": entry["dprime"]})
    return {
        "op": "rescale-grid",
        "d_max": d_max,
        "s_max": s_max,
        "l_max": l_max,
        "a_values": list(a_values),
        "rows": rows,
        "violations": violations[:10],
        "ok": not violations,
    }


# ----- pointwise product decomposition -----


def _pieces(factor_counts: Sequence[int], c: int) -> List[Tuple]:
    """All decomposition pieces: for each subset of the first c indices a
    factor choice with full (value and differential) vanishing; for the
    complement a pair of distinct factors vanishing in value; for indices
    beyond c a single factor vanishing in value."""
    cr = len(factor_counts)
    out = []
    for k in range(c + 1):
        for subset in combinations(range(c), k):
            comp = [i for i in range(c) if i not in subset]
            full_choices = [range(factor_counts[i]) for i in subset]
            pair_choices = [list(combinations(range(factor_counts[i]), 2)) for i in comp]
            single_choices = [range(factor_counts[i]) for i in range(c, cr)]
            for vs in product(*full_choices):
                for ws in product(*pair_choices):
                    for us in product(*single_choices):
                        out.append((
                            tuple(zip(subset, vs)),
                            tuple(zip(comp, ws)),
                            tuple(zip(range(c, cr), us)),
                        ))
    return out


def verify_product_decomposition(factors: Sequence[Sequence[MultiPoly]],
                                 shape: ProblemShape, q: int) -> dict:
    """Set equality between the incidence locus of the multiplied sections
    and the union of factor-level pieces, pointwise over F_q.

    The left side collects the pairs (z, [xi]) with F_i(z) = 0 for every i
    and dF_j(z, xi) = 0 for j <= c, where F_i is the product of the i-th
    factor list. The right side is the union over all pieces; mismatch
    witnesses are dumped both ways.
    """
    cr = shape.c + shape.r
    if len(factors) != cr:
        raise ValueError(f"need {cr} factor lists, got {len(factors)}")
    if any(not fs for fs in factors):
        raise ValueError("every section needs at least one factor")
    N = shape.N
    c = shape.c
    zero_dz = [0] * (N + 1)

    Fs = []
    for fs in factors:
        F = fs[0]
        for g in fs[1:]:
            F = arith("mul", F, g)
        Fs.append(F)
    dFs = [total_differential(F) for F in Fs[:c]]
    dfs = [[total_differential(f) for f in fs] for fs in factors]

    pieces = _pieces([len(fs) for fs in factors], c)
    lhs_only = []
    rhs_only = []
    lhs_count = 0
    rhs_count = 0
    pairs = 0
    for pt in proj_points(N, q):
        z = list(pt.coords)
        fvals = [[_eval_section(f, z, zero_dz, q) for f in fs] for fs in factors]
        Fvals = [_eval_section(F, z, zero_dz, q) for F in Fs]
        for d in tangent_directions(z, [], q):
            xi = list(d.xi)
            pairs += 1
            in_lhs = all(v == 0 for v in Fvals) and all(
                _eval_section(dF, z, xi, q) == 0 for dF in dFs
            )
            fdiff = [[_eval_section(df, z, xi, q) for df in row] for row in dfs[:c]]
            in_rhs = any(
                all(fvals[i][k] == 0 and fdiff[i][k] == 0 for i, k in full)
                and all(fvals[i][k1] == 0 and fvals[i][k2] == 0 for i, (k1, k2) in two)
                and all(fvals[i][k] == 0 for i, k in single)
                for full, two, single in pieces
            )
            lhs_count += in_lhs
            rhs_count += in_rhs
            if in_lhs and not in_rhs and len(lhs_only) < 10:
                lhs_only.append({"z": z, "xi": xi})
            if in_rhs and not in_lhs and len(rhs_only) < 10:
                rhs_only.append({"z": list(z), "xi": xi})
    return {
        "op": "product-coup",
        "q": q,
        "shape": {"N": N, "c": c, "r": shape.r},
        "factor_counts": [len(fs) for fs in factors],
        "pieces": len(pieces),
        "pairs": pairs,
        "lhs_count": lhs_count,
        "rhs_count": rhs_count,
        "only_lhs": lhs_only,
        "only_rhs": rhs_only,
        "ok": not lhs_only and not rhs_only and lhs_count == rhs_count,
    }
