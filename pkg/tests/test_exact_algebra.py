import random
from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcmforms.exact_algebra import (
    DivisibilityError,
    Field,
    MultiPoly,
    ParseError,
    QQ,
    arith,
    chart_restrict,
    deriv,
    det_mod_p,
    divide_exact,
    dz_components,
    euler_substitute,
    from_literal,
    gradient_rows,
    identity_test,
    poly_det,
    tangent_projection,
    times_monomial,
    to_literal,
    total_differential,
    z_power,
)

F7 = Field(7)


def rand_poly(rng, N, field, max_terms=5, max_deg=3, with_dz=True):
    terms = {}
    for _ in range(rng.randrange(1, max_terms + 1)):
        exp = [0] * (2 * (N + 1))
        for _ in range(rng.randrange(0, max_deg + 1)):
            exp[rng.randrange(N + 1)] += 1
        if with_dz:
            for _ in range(rng.randrange(0, 3)):
                exp[N + 1 + rng.randrange(N + 1)] += 1
        coeff = field.rand_elt(rng)
        if coeff != 0:
            terms[tuple(exp)] = terms.get(tuple(exp), 0) + coeff
    return MultiPoly(N, field, terms)


def brute_det(rows):
    n = len(rows)
    sample = rows[0][0]
    acc = MultiPoly.zero(sample.N, sample.field)
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        piece = MultiPoly.const(sample.N, sign, sample.field)
        for i in range(n):
            piece = piece * rows[i][perm[i]]
        acc = acc + piece
    return acc


# ----- ring arithmetic -----


def test_difference_of_squares():
    z0 = MultiPoly.z(2, 0)
    z1 = MultiPoly.z(2, 1)
    assert (z0 + z1) * (z0 - z1) == z0 * z0 - z1 * z1


def test_zero_polynomial_is_empty_dict():
    z0 = MultiPoly.z(1, 0)
    p = z0 - z0
    assert p.is_zero() and p.terms == {}
    assert p.is_bihomogeneous() and p.bidegree() is None


def test_mod_p_coefficients_wrap():
    p = MultiPoly.const(1, 5, F7) + MultiPoly.const(1, 4, F7)
    assert p.terms == {(0, 0, 0, 0): 2}
    q = MultiPoly.z(1, 0, F7).scale(3) * MultiPoly.z(1, 0, F7).scale(5)
    assert list(q.terms.values()) == [1]  # 15 mod 7


def test_arith_dispatcher_matches_operators():
    rng = random.Random(0)
    for _ in range(10):
        p = rand_poly(rng, 2, QQ)
        q = rand_poly(rng, 2, QQ)
        assert arith("add", p, q) == p + q
        assert arith("sub", p, q) == p - q
        assert arith("mul", p, q) == p * q
        assert arith("neg", p) == -p
    with pytest.raises(ValueError):
        arith("div", p, q)


def test_power_by_squaring():
    p = MultiPoly.z(1, 0) + MultiPoly.z(1, 1)
    assert p**0 == MultiPoly.const(1, 1)
    assert p**3 == p * p * p


def test_field_rejects_composite_characteristic():
    with pytest.raises(ValueError):
        Field(15)
    with pytest.raises(ValueError):
        Field(2**31)


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50))
@settings(max_examples=50, deadline=None)
def test_ring_axioms_on_constants_and_variables(a, b, c):
    N = 2
    p = MultiPoly.z(N, 0).scale(a) + MultiPoly.const(N, b)
    q = MultiPoly.z(N, 1).scale(c) + MultiPoly.dz(N, 2)
    r = MultiPoly.z(N, 2) * MultiPoly.dz(N, 0)
    assert (p + q) + r == p + (q + r)
    assert p * (q + r) == p * q + p * r
    assert p * q == q * p


# ----- grading -----


def test_bidegree_of_monomial():
    m = MultiPoly.monomial(2, QQ, 3, [2, 1, 0], [0, 0, 1])
    assert m.bidegree() == (3, 1)
    assert m.z_degree() == 3 and m.dz_degree() == 1


def test_inhomogeneous_bidegree_raises():
    p = MultiPoly.z(1, 0) + MultiPoly.const(1, 1)
    assert not p.is_bihomogeneous()
    with pytest.raises(ValueError):
        p.bidegree()


# ----- literals -----


def test_literal_examples():
    p = MultiPoly.monomial(2, QQ, Fraction(3, 2), [2, 0, 0], [0, 1, 0])
    assert to_literal(p) == "3/2 * z0^2 dz1^1"
    q = MultiPoly.z(2, 0) - MultiPoly.z(2, 1)
    assert to_literal(q) == "1 * z0^1 + -1 * z1^1"
    assert to_literal(MultiPoly.zero(2)) == "0"
    assert to_literal(MultiPoly.const(2, Fraction(-1, 3))) == "-1/3"


def test_literal_round_trip_is_byte_exact():
    rng = random.Random(7)
    for field in (QQ, F7):
        for _ in range(50):
            p = rand_poly(rng, 3, field)
            s = to_literal(p)
            assert from_literal(s, 3, field) == p
            assert to_literal(from_literal(s, 3, field)) == s


def test_lenient_parsing():
    assert from_literal("z0", 2) == MultiPoly.z(2, 0)
    assert from_literal("2*z1^2 * dz0", 2) == MultiPoly.monomial(2, QQ, 2, [0, 2, 0], [1, 0, 0])
    assert from_literal("-z0 + z1", 2) == MultiPoly.z(2, 1) - MultiPoly.z(2, 0)


def test_parse_errors_name_the_token():
    with pytest.raises(ParseError) as info:
        from_literal("2 * w0^1", 2)
    assert "w0" in str(info.value)
    with pytest.raises(ParseError):
        from_literal("z5", 2)
    with pytest.raises(ParseError):
        from_literal("", 2)


def test_canonical_order_is_graded_lex_descending():
    # z1^2 (degree 2) before z0 dz... same-degree terms compared lexicographically
    p = from_literal("1 * z0^1 + 1 * z1^2 + 1 * z0^1 dz0^1", 1)
    assert to_literal(p) == "1 * z0^1 dz0^1 + 1 * z1^2 + 1 * z0^1"


# ----- calculus -----


def test_total_differential_example():
    p = from_literal("z0^2 z1^1", 1)
    assert total_differential(p) == from_literal("2 * z0^1 z1^1 dz0^1 + 1 * z0^2 dz1^1", 1)


def test_total_differential_leibniz_random_pairs():
    rng = random.Random(11)
    for deg in range(1, 5):
        for _ in range(100):
            N = rng.randrange(1, 6)
            field = QQ if rng.random() < 0.5 else F7
            p = rand_poly(rng, N, field, max_deg=deg, with_dz=False)
            q = rand_poly(rng, N, field, max_deg=deg, with_dz=False)
            assert total_differential(p * q) == p * total_differential(q) + q * total_differential(p)


def test_differential_drops_terms_killed_by_characteristic():
    p = MultiPoly.z(1, 0, F7, power=7)
    assert total_differential(p).is_zero()


def test_euler_relation():
    rng = random.Random(3)
    for _ in range(20):
        N = rng.randrange(1, 4)
        deg = rng.randrange(1, 5)
        terms = {}
        for _ in range(4):
            exp = [0] * (2 * (N + 1))
            for _ in range(deg):
                exp[rng.randrange(N + 1)] += 1
            terms[tuple(exp)] = Fraction(rng.randrange(1, 9))
        f = MultiPoly(N, QQ, terms)
        assert euler_substitute(total_differential(f)) == f.scale(deg)


def test_chart_restrict_examples():
    p = from_literal("1 * z0^2 z1^1 + 1 * z2^1 dz0^1", 2)
    assert chart_restrict(p, 0) == from_literal("z1", 2)
    assert chart_restrict(p, 1) == from_literal("1 * z0^2 + 1 * z2^1 dz0^1", 2)


def test_chart_restrict_is_ring_homomorphism():
    rng = random.Random(5)
    for _ in range(30):
        N = rng.randrange(1, 4)
        l = rng.randrange(N + 1)
        p = rand_poly(rng, N, QQ)
        q = rand_poly(rng, N, QQ)
        assert chart_restrict(p + q, l) == chart_restrict(p, l) + chart_restrict(q, l)
        assert chart_restrict(p * q, l) == chart_restrict(p, l) * chart_restrict(q, l)


def test_chart_restrict_commutes_with_differential():
    # restricting d(p) to a chart equals the chart-wise differential of p's restriction
    rng = random.Random(9)
    for _ in range(30):
        N = rng.randrange(1, 4)
        l = rng.randrange(N + 1)
        p = rand_poly(rng, N, QQ, with_dz=False)
        assert chart_restrict(total_differential(p), l) == total_differential(chart_restrict(p, l))


def test_chart_restrict_commutes_with_determinant():
    rng = random.Random(13)
    rows = [[rand_poly(rng, 2, QQ, max_terms=3) for _ in range(3)] for _ in range(3)]
    d = poly_det(rows)
    restricted = [[chart_restrict(e, 1) for e in row] for row in rows]
    assert chart_restrict(d, 1) == poly_det(restricted)


def test_deriv_and_gradient_rows():
    f = from_literal("1 * z0^2 z1^1 + 2 * z2^3", 2)
    df = total_differential(f)
    grads = gradient_rows(df)
    for k in range(3):
        assert grads[k] == deriv(f, k)
    comps = dz_components(df)
    assert all(sum(key) == 1 for key in comps)


def test_gradient_rows_rejects_nonlinear_dz():
    p = MultiPoly.dz(1, 0) * MultiPoly.dz(1, 1)
    with pytest.raises(ValueError):
        gradient_rows(p)


# ----- monomial division -----


def test_divide_exact_examples():
    p = from_literal("2 * z0^3 z1^1 dz0^1 + 4 * z0^2", 1)
    q = divide_exact(p, z_power(1, 0, 2))
    assert q == from_literal("2 * z0^1 z1^1 dz0^1 + 4", 1)


def test_divide_exact_reports_offending_term():
    p = from_literal("1 * z0^2 + 1 * z1^1", 1)
    with pytest.raises(DivisibilityError) as info:
        divide_exact(p, z_power(1, 0, 1))
    assert info.value.term == (0, 1, 0, 0)


def test_divide_multiply_round_trip():
    rng = random.Random(17)
    for _ in range(30):
        N = rng.randrange(1, 4)
        p = rand_poly(rng, N, QQ)
        mono = z_power(N, rng.randrange(N + 1), rng.randrange(1, 4))
        assert divide_exact(times_monomial(p, mono), mono) == p


# ----- substitutions -----


def test_tangent_projection_kills_own_direction():
    # dz_l maps to z_l dz_l - dz_l z_l = 0
    assert tangent_projection(MultiPoly.dz(2, 1), 1).is_zero()


def test_tangent_projection_is_multiplicative_in_dz_factors():
    N = 2
    p = MultiPoly.dz(N, 0) * MultiPoly.dz(N, 2)
    w0 = tangent_projection(MultiPoly.dz(N, 0), 1)
    w2 = tangent_projection(MultiPoly.dz(N, 2), 1)
    assert tangent_projection(p, 1) == w0 * w2


# ----- identity testing -----


def test_identity_test_exact():
    z0 = MultiPoly.z(2, 0)
    z1 = MultiPoly.z(2, 1)
    res = identity_test((z0 + z1) ** 2, z0 * z0 + z0 * z1 + z0 * z1 + z1 * z1, mode="exact")
    assert res["equal"] and res["mode"] == "exact"


def test_identity_test_probabilistic_detects_inequality():
    z0 = MultiPoly.z(2, 0)
    z1 = MultiPoly.z(2, 1)
    res = identity_test(z0, z1, mode="probabilistic", trials=20, seed=1)
    assert not res["equal"] and "witness" in res


def test_identity_test_probabilistic_accepts_equal_over_fp():
    fld = Field(101)
    p = (MultiPoly.z(1, 0, fld) + MultiPoly.z(1, 1, fld)) ** 3
    q = p + MultiPoly.zero(1, fld)
    res = identity_test(p, q, mode="probabilistic", trials=5, seed=2)
    assert res["equal"]


def test_identity_test_auto_small_goes_exact():
    p = MultiPoly.z(1, 0)
    res = identity_test(p, p, mode="auto")
    assert res["mode"] == "exact" and res["equal"]


# ----- determinants -----


def test_poly_det_matches_permutation_expansion():
    rng = random.Random(23)
    for n in (2, 3, 4):
        rows = [[rand_poly(rng, 2, QQ, max_terms=2, max_deg=2) for _ in range(n)] for _ in range(n)]
        assert poly_det(rows) == brute_det(rows)


def test_poly_det_vanishes_on_repeated_rows():
    rng = random.Random(29)
    row = [rand_poly(rng, 2, QQ) for _ in range(3)]
    other = [rand_poly(rng, 2, QQ) for _ in range(3)]
    assert poly_det([row, other, row]).is_zero()


def test_det_mod_p_agrees_with_poly_det_on_constants():
    rng = random.Random(31)
    p = 13
    fld = Field(p)
    for _ in range(10):
        m = [[rng.randrange(p) for _ in range(3)] for _ in range(3)]
        rows = [[MultiPoly.const(0, x, fld) for x in row] for row in m]
        sym = poly_det(rows)
        val = 0 if sym.is_zero() else list(sym.terms.values())[0]
        assert val == det_mod_p(m, p)


# ----- evaluation -----


def test_evaluate_exact_and_mod():
    p = from_literal("1 * z0^2 + 3 * z1^1 dz0^1", 1)
    assert p.evaluate([2, 5], [7, 0]) == Fraction(4 + 105)
    assert p.evaluate_mod([2, 5], [7, 0], 11) == (4 + 105) % 11


def test_evaluate_handles_large_exponents_mod_p():
    p = MultiPoly.z(1, 0, Field(5), power=64845)
    assert p.evaluate([2, 1], [0, 0]) == pow(2, 64845, 5)
