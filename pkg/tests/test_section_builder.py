import random

import pytest

from mcmforms.exact_algebra import Field, MultiPoly, QQ, from_literal, to_literal, total_differential
from mcmforms.schedule import ProblemShape, build_schedule, twist_ledger
from mcmforms.section_builder import (
    DivisibilityClaimFailed,
    SectionFamily,
    build_matrices,
    build_sections,
    build_selected,
    column_divisors,
    extract_form,
    load_family,
    random_homogeneous,
    save_family,
)

F5 = Field(5)
F101 = Field(101)

UNIT_LINE = {
    "A:1:0": "1",
    "A:1:1": "1",
    "A:1:2": "1",
}


def unit_line_family():
    return build_sections(
        ProblemShape(2, 1, 0), "general_fermat", field=QQ,
        lambdas=(1, 1, 1), degrees=(1,), coeff_source="explicit", explicit=UNIT_LINE,
    )


def mcm_family(N=4, c=3, r=0, p=5, seed=1, heart=2):
    shape = ProblemShape(N, c, r)
    sched = build_schedule(shape, heart)
    return build_sections(shape, "mcm", field=Field(p), schedule=sched, seed=seed)


# ----- family construction -----


def test_unit_coefficients_give_the_sum_of_coordinates():
    fam = unit_line_family()
    assert fam.sections[0] == from_literal("1 * z0^1 + 1 * z1^1 + 1 * z2^1", 2)


def test_random_cubic_family_is_homogeneous():
    fam = build_sections(
        ProblemShape(2, 1, 0), "general_fermat", field=F101,
        lambdas=(2, 2, 2), degrees=(3,), seed=42,
    )
    assert fam.sections[0].z_degree() == 3
    assert fam.sections[0].dz_degree() == 0


def test_explicit_degree_mismatch_is_rejected():
    bad = dict(UNIT_LINE)
    bad["A:1:0"] = "z0"  # degree 1 where 0 is required
    with pytest.raises(ValueError, match="bookkeeping"):
        build_sections(
            ProblemShape(2, 1, 0), "general_fermat", field=QQ,
            lambdas=(1, 1, 1), degrees=(1,), coeff_source="explicit", explicit=bad,
        )


def test_random_homogeneous_has_exact_degree():
    rng = random.Random(3)
    for deg in (0, 1, 2, 3):
        p = random_homogeneous(3, deg, F101, rng)
        assert p.z_degree() == deg and not p.is_zero()


def test_mcm_sections_have_expected_degree_and_terms():
    fam = mcm_family(seed=2)
    sched = fam.schedule
    d = sched.d
    for i, F in enumerate(fam.sections):
        assert F.z_degree() == sched.eps[i] + d
        # pure part: 5 coordinates, linear coefficients; moving part: one
        # level-4 tuple with 5 distinguished choices
        assert F.term_count() <= 5 * 5 + 5 * 5


def test_mcm_heart_must_dominate_twists():
    shape = ProblemShape(4, 3, 0)
    sched = build_schedule(shape, 2)
    with pytest.raises(ValueError, match="heart"):
        build_sections(shape, "mcm", field=F5, schedule=sched, twists=(2, 0, 0), seed=0)


# ----- matrices -----


def test_line_matrix_is_coordinates_over_differentials():
    fam = unit_line_family()
    K = build_matrices(fam)
    assert K.layout == "sec4" and K.nrows == 2 and K.ncols == 3
    assert [to_literal(e) for e in K.entries[0]] == ["1 * z0^1", "1 * z1^1", "1 * z2^1"]
    assert [to_literal(e) for e in K.entries[1]] == ["1 * dz0^1", "1 * dz1^1", "1 * dz2^1"]


def test_quadratic_differential_rows_factor_through_the_coordinate():
    fam = build_sections(
        ProblemShape(2, 1, 0), "general_fermat", field=F101,
        lambdas=(2, 2, 2), degrees=(3,), seed=42,
    )
    K = build_matrices(fam)
    for j in range(3):
        entry = K.entries[1][j]
        assert all(exp[j] >= 1 for exp in entry.terms)


def test_mcm_matrix_shape_and_tags():
    fam = mcm_family(seed=3)
    K = build_matrices(fam)
    assert K.nrows == 2 * 3 + 0 and K.ncols == 10
    assert K.column_tags == ("A_0", "A_1", "A_2", "A_3", "A_4", "B_0", "B_1", "B_2", "B_3", "B_4")


def test_row_sum_and_differential_row_invariants():
    fam = mcm_family(seed=4)
    K = build_matrices(fam)
    cr = 3
    for i in range(cr):
        total = MultiPoly.zero(4, fam.field)
        for e in K.entries[i]:
            total = total + e
        assert total == fam.sections[i]
        for col in range(K.ncols):
            assert K.entries[cr + i][col] == total_differential(K.entries[i][col])


# ----- column selection -----


def test_K_nu_keeps_plain_columns_and_appends_the_combined_one():
    fam = mcm_family(seed=5)
    K = build_matrices(fam)
    sel = build_selected(K, ("K_nu", 0))
    assert sel.column_tags == ("A_1", "A_2", "A_3", "A_4", "A_0+sumB")
    combined = sel.entries[0][4]
    expected = K.entries[0][0]
    for j in range(5):
        expected = expected + K.entries[0][5 + j]
    assert combined == expected


def test_K_tau_rho_column_layout():
    fam = mcm_family(seed=6)
    K = build_matrices(fam)
    sel = build_selected(K, ("K_tau_rho", 0, 1))
    assert sel.column_tags == ("A_0+B_0", "A_2", "A_3", "A_4", "A_1+sumB_gt_tau")
    assert sel.entries[0][0] == K.entries[0][0] + K.entries[0][5]
    combined = sel.entries[0][4]
    expected = K.entries[0][1]
    for j in range(1, 5):
        expected = expected + K.entries[0][5 + j]
    assert combined == expected


def test_selection_index_guards():
    fam = mcm_family(seed=7)
    K = build_matrices(fam)
    with pytest.raises(ValueError):
        build_selected(K, ("K_nu", 5))
    with pytest.raises(ValueError):
        build_selected(K, ("K_tau_rho", 1, 1))
    with pytest.raises(ValueError):
        build_selected(K, ("mystery", 0))


def test_hidden_restriction_of_explicit_matrix():
    fam = build_sections(
        ProblemShape(4, 2, 0), "general_fermat", field=F101,
        lambdas=(2, 2, 2, 2, 2), degrees=(4, 4), seed=9,
    )
    K = build_matrices(fam)
    H = build_selected(K, ("hidden", 0))
    assert H.retained == (1, 2, 3, 4) and H.vanished == (0,)
    for row in H.entries:
        for e in row:
            assert all(exp[0] == 0 and exp[5] == 0 for exp in e.terms)


def test_hidden_needs_lambda_at_least_two():
    fam = build_sections(
        ProblemShape(4, 2, 0), "general_fermat", field=F101,
        lambdas=(1, 2, 2, 2, 2), degrees=(4, 4), seed=9,
    )
    K = build_matrices(fam)
    with pytest.raises(ValueError, match="lambda"):
        build_selected(K, ("hidden", 0))


def test_hidden_depth_bounds():
    fam = mcm_family(seed=8)  # n = 1: no hidden depth available
    K = build_matrices(fam)
    with pytest.raises(ValueError, match="depth"):
        build_selected(K, ("hidden", 0))


# ----- divisors -----


def test_declared_divisors_verified_for_K_nu_and_K_tau_rho():
    fam = mcm_family(seed=10)
    sched = fam.schedule
    K = build_matrices(fam)
    div_nu = column_divisors(K, ("K_nu", 0))
    assert [d["exponent"] for d in div_nu] == [sched.d - sched.delta[4]] * 4 + [sched.mu[(4, 0)]]
    div_tr = column_divisors(K, ("K_tau_rho", 1, 3))
    assert div_tr[0]["exponent"] == sched.d - 4 * sched.mu[(4, 0)]
    assert div_tr[1]["exponent"] == sched.d - 4 * sched.mu[(4, 1)]
    assert div_tr[-1]["exponent"] == sched.mu[(4, 2)]


def test_pure_columns_carry_divisor_slack_when_lower_levels_are_absent():
    # with c+r+1 = N the A-columns are single pure terms z_j^d; the declared
    # exponent d - delta_N leaves slack exactly delta_N
    fam = mcm_family(seed=11)
    sched = fam.schedule
    K = build_matrices(fam)
    for j in range(5):
        entry = K.entries[0][j]
        assert min(exp[j] for exp in entry.terms) == sched.d
    div = column_divisors(K, ("K_nu", 2))
    assert div[0]["exponent"] == sched.d - sched.delta[4]


def test_corrupted_entry_fails_divisor_verification_with_coordinates():
    fam = mcm_family(seed=12)
    K = build_matrices(fam)
    K.entries[0][0] = K.entries[0][0] + MultiPoly.z(4, 1, fam.field)
    with pytest.raises(DivisibilityClaimFailed) as info:
        column_divisors(K, ("K_nu", 1))
    assert info.value.row == 0 and info.value.col == 0


# ----- form extraction -----


def test_line_form_and_chart_restriction():
    fam = unit_line_family()
    K = build_matrices(fam)
    form = extract_form(K, None, (1,), omit=2, chart=0, kind="psi")
    assert to_literal(form.value_global) == "1 * z0^1 dz1^1 + -1 * z1^1 dz0^1"
    assert to_literal(form.value) == "1 * dz1^1"
    assert form.twist == 2 and form.dz_degree == 1


def test_cubic_divided_form_twist():
    fam = build_sections(
        ProblemShape(2, 1, 0), "general_fermat", field=F101,
        lambdas=(2, 2, 2), degrees=(3,), seed=42,
    )
    K = build_matrices(fam)
    form = extract_form(K, None, (1,), omit=0, chart=1, kind="omega")
    assert form.twist == 2 * 3 - 3 == 3
    assert form.value_global.bidegree()[1] == 1


def test_mcm_K_nu_form_matches_ledger_twist():
    fam = mcm_family(seed=13)
    K = build_matrices(fam)
    ledger = twist_ledger(fam.schedule)
    for nu in (0, 3):
        form = extract_form(K, ("K_nu", nu), (1,), omit=4, chart=0)
        assert form.kind == "phi_nu"
        assert form.twist == ledger.lookup(0, "K_nu", None, (1,)).value == -8
        assert form.dz_degree == 1
    form = extract_form(K, ("K_tau_rho", 0, 2), (1,), omit=0, chart=1)
    assert form.kind == "psi_tau_rho" and form.twist == -8


def test_form_evaluation_matches_value_global():
    fam = mcm_family(seed=14)
    K = build_matrices(fam)
    form = extract_form(K, ("K_nu", 1), (1,), omit=2, chart=0)
    rng = random.Random(0)
    for _ in range(5):
        z = [rng.randrange(1, 5) for _ in range(5)]
        dz = [rng.randrange(5) for _ in range(5)]
        assert form.evaluate_at(z, dz) == form.value_global.evaluate(z, dz)


def test_selection_validation():
    fam = mcm_family(seed=15)
    K = build_matrices(fam)
    with pytest.raises(ValueError):
        extract_form(K, ("K_nu", 0), (1, 2), omit=0, chart=0)  # too many rows
    with pytest.raises(ValueError):
        extract_form(K, ("K_nu", 0), (4,), omit=0, chart=0)  # row index out of range


def test_omit_sign_convention():
    fam = unit_line_family()
    K = build_matrices(fam)
    f0 = extract_form(K, None, (1,), omit=0, chart=1, kind="psi")
    f1 = extract_form(K, None, (1,), omit=1, chart=0, kind="psi")
    # (-1)^0 det[[z1,z2],[dz1,dz2]] and (-1)^1 det[[z0,z2],[dz0,dz2]]
    assert to_literal(f0.value_global) == "1 * z1^1 dz2^1 + -1 * z2^1 dz1^1"
    assert to_literal(f1.value_global) == "-1 * z0^1 dz2^1 + 1 * z2^1 dz0^1"


def test_twist_consistency_for_random_families_all_small_shapes():
    shapes = [(2, 1, 0), (3, 2, 0), (3, 1, 1), (4, 3, 0), (4, 2, 0), (4, 2, 1), (4, 1, 2)]
    rng = random.Random(99)
    for N, c, r in shapes:
        shape = ProblemShape(N, c, r)
        for trial in range(20):
            lambdas = tuple(rng.randrange(1, 3) for _ in range(N + 1))
            base = max(lambdas)
            spread = 2 if N <= 3 else 1
            degrees = tuple(base + rng.randrange(spread) for _ in range(c + r))
            twists = tuple(rng.randrange(0, 2) for _ in range(c + r))
            fam = build_sections(
                shape, "general_fermat", field=F101, lambdas=lambdas,
                degrees=degrees, twists=twists, seed=1000 + trial,
            )
            K = build_matrices(fam)
            selection = tuple(sorted(rng.sample(range(1, c + 1), shape.n)))
            omit = rng.randrange(N + 1)
            chart = rng.randrange(N + 1)
            kind = "psi" if trial % 2 else "omega"
            form = extract_form(K, None, selection, omit=omit, chart=chart, kind=kind)
            spent = sum(l - 1 for l in lambdas) if kind == "omega" else 0
            expected = sum(degrees) + sum(degrees[j - 1] for j in selection) - spent
            assert form.twist == expected
            if not form.value_global.is_zero():
                zdeg, dzdeg = form.value_global.bidegree()
                a_sum = sum(twists) + sum(twists[j - 1] for j in selection)
                omit_spend = (lambdas[omit] - 1) if kind == "omega" else 0
                assert zdeg == form.twist + a_sum + omit_spend - dzdeg


def test_hidden_mcm_form_twist_matches_hidden_ledger():
    shape = ProblemShape(4, 2, 0)  # n = 2: hidden depth 1 available
    sched = build_schedule(shape, 2)
    fam = build_sections(shape, "mcm", field=F5, schedule=sched, seed=21)
    K = build_matrices(fam)
    H = build_selected(K, ("hidden", 4))
    assert H.retained == (0, 1, 2, 3)
    ledger = twist_ledger(sched)
    form = extract_form(H, ("K_nu", 0), (2,), omit=1, chart=1)
    assert form.kind == "hidden_phi_nu"
    assert form.twist == ledger.lookup(1, "K_nu", None, (2,)).value
    assert form.dz_degree == 1
    form2 = extract_form(H, ("K_tau_rho", 0, 3), (1,), omit=2, chart=0)
    assert form2.twist == ledger.lookup(1, "K_tau_rho", 0, (1,)).value


def test_hidden_explicit_form_twist():
    fam = build_sections(
        ProblemShape(4, 2, 0), "general_fermat", field=F101,
        lambdas=(2, 2, 2, 2, 2), degrees=(4, 4), seed=31,
    )
    K = build_matrices(fam)
    H = build_selected(K, ("hidden", 0))
    form = extract_form(H, None, (1,), omit=1, chart=2, kind="omega")
    assert form.kind == "hidden_omega"
    # heart' skips the vanished lambda: (4 + 4 + 4) - 4*(2-1)
    assert form.twist == 12 - 4


# ----- serialization -----


def test_family_save_load_round_trip(tmp_path):
    fam = mcm_family(seed=16)
    path = tmp_path / "family.json"
    save_family(fam, str(path))
    fam2 = load_family(str(path))
    assert fam2.sections == fam.sections
    assert fam2.coefficients == fam.coefficients
    assert fam2.schedule == fam.schedule


def test_general_family_save_load_round_trip(tmp_path):
    fam = build_sections(
        ProblemShape(2, 1, 0), "general_fermat", field=QQ,
        lambdas=(2, 2, 2), degrees=(3,), seed=5,
    )
    path = tmp_path / "cubic.json"
    save_family(fam, str(path))
    fam2 = load_family(str(path))
    assert fam2.sections == fam.sections and fam2.lambdas == fam.lambdas
