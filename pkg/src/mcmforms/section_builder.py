"""Section families, their structured matrices, and divided determinant forms.

Two family modes:

  general_fermat   F_i = sum_j A_i^j z_j^{lambda_j}, with coefficient degrees
                   eps_i^j = d_i - lambda_j (plus the O(a_i) twist a_i).
  mcm              F_i = sum_j A_i^j z_j^d
                        + sum over levels l and tuples j_0<...<j_l and
                          distinguished positions k of
                          M_i^{j_0..j_l;j_k} * prod_{m != k} z_{j_m}^{mu_{l,k}}
                                            * z_{j_k}^{d - l*mu_{l,k}}
                   with all coefficients homogeneous of degree a_i + eps_i.

From a family we build the (c+r+c) x (N+1) matrix (value rows, then the
total differentials of the first c rows), or for mcm the (2c+r) x (2N+2)
matrix with column groups A_0..A_N, B_0..B_N (B_k collects the top-level
terms with distinguished coordinate k). Column-combined selections K_nu and
K_tau_rho, vanishing-coordinate restrictions, declared column divisors, and
signed divided determinants with twist bookkeeping all live here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from itertools import combinations, combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from .exact_algebra import (
    DivisibilityError,
    Field,
    MultiPoly,
    QQ,
    chart_restrict,
    det_mod_p,
    divide_exact,
    from_literal,
    kill_coordinates,
    poly_det,
    to_literal,
    total_differential,
)
from .schedule import (
    ExponentSchedule,
    ProblemShape,
    fermat_heart,
    fermat_heart_prime,
    fermat_hidden_heart_prime,
    schedule_from_dict,
    schedule_to_dict,
    twist_ledger,
)
from .util import child_rng

FAMILY_SCHEMA_VERSION = 1


class DivisibilityClaimFailed(Exception):
    """A declared column divisor does not divide some matrix entry."""

    def __init__(self, message: str, row: int, col: int):
        super().__init__(message)
        self.row = row
        self.col = col


@dataclass
class SectionFamily:
    """Sections F_1..F_{c+r} with their coefficient data.

    coefficients keys: "A:i:j" for the pure terms, "M:i:j0,..,jl:jk" for the
    moving terms (i is 1-based, coordinates 0-based, jk the distinguished
    coordinate inside the tuple). degrees holds the L-degrees d_i (general
    mode) and is derived as eps_i + d in mcm mode.
    """

    shape: ProblemShape
    mode: str
    field: Field
    twists: Tuple[int, ...]
    coefficients: Dict[str, MultiPoly]
    sections: Tuple[MultiPoly, ...]
    lambdas: Optional[Tuple[int, ...]] = None
    degrees: Optional[Tuple[int, ...]] = None
    schedule: Optional[ExponentSchedule] = None
    seed: Optional[int] = None

    def section_l_degrees(self) -> Tuple[int, ...]:
        """The L-degree of each section (the O(1)-degree minus the a_i twist)."""
        if self.mode == "general_fermat":
            return tuple(self.degrees)
        d = self.schedule.d
        return tuple(e + d for e in self.schedule.eps)


@dataclass
class FormalMatrixBundle:
    """A matrix of polynomials with enough metadata to take divided minors.

    layout "sec4": columns indexed by retained coordinates, divisor template
    z^(lambda - 1) per column. layout "mcm": 2m+2 grouped columns tagged
    A_<coord> / B_<coord> over m+1 retained coordinates. layout "selected":
    m+1 columns produced by a K_nu / K_tau_rho combination, with declared
    divisor exponents per column.
    """

    layout: str
    family: SectionFamily
    entries: List[List[MultiPoly]]
    column_tags: Tuple[str, ...]
    retained: Tuple[int, ...]
    vanished: Tuple[int, ...] = ()
    selected_kind: Optional[str] = None
    selected_params: Tuple[int, ...] = ()
    divisor_exponents: Optional[Tuple[int, ...]] = None

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def ncols(self) -> int:
        return len(self.entries[0])

    def value_rows(self) -> int:
        return self.family.shape.c + self.family.shape.r

    def eta(self) -> int:
        return len(self.vanished)


@dataclass
class FormBundle:
    """One signed, divided determinant with its twist metadata."""

    kind: str
    selection: Tuple[int, ...]
    params: Tuple[int, ...]
    vanished: Tuple[int, ...]
    omit: int
    omit_coord: Optional[int]
    chart: int
    value: MultiPoly
    value_global: MultiPoly
    twist: int
    dz_degree: int
    divided_rows: List[List[MultiPoly]] = dc_field(default_factory=list, repr=False)
    sign: int = 1

    def evaluate_at(self, z_vals: Sequence[int], dz_vals: Sequence[int]):
        """Evaluate the global form; uses the divided matrix when available,
        since the determinant commutes with pointwise evaluation."""
        fld = self.value_global.field
        if self.divided_rows and fld.p:
            numeric = [
                [e.evaluate(z_vals, dz_vals) for e in row] for row in self.divided_rows
            ]
            return (self.sign * det_mod_p(numeric, fld.p)) % fld.p
        return self.value_global.evaluate(z_vals, dz_vals)


# ----- random coefficients -----


def random_homogeneous(N: int, degree: int, field: Field, rng) -> MultiPoly:
    """Dense random homogeneous polynomial of exact degree; never zero."""
    if degree == 0:
        return MultiPoly.const(N, field.rand_nonzero(rng), field)
    while True:
        terms = {}
        for combo in combinations_with_replacement(range(N + 1), degree):
            exp = [0] * (2 * (N + 1))
            for idx in combo:
                exp[idx] += 1
            c = field.rand_elt(rng)
            if c != 0:
                terms[tuple(exp)] = c
        if terms:
            return MultiPoly(N, field, terms)


# ----- family construction -----


def _coeff_degree_general(i: int, j: int, twists, degrees, lambdas) -> int:
    return twists[i - 1] + degrees[i - 1] - lambdas[j]


def mcm_tuple_space(shape: ProblemShape, coords: Sequence[int]) -> List[Tuple[int, Tuple[int, ...], int]]:
    """All (level, tuple, distinguished coordinate) triples over the given
    coordinates; levels run c+r+1 .. len(coords)-1."""
    cr = shape.c + shape.r
    out = []
    top = len(coords) - 1
    for level in range(cr + 1, top + 1):
        for tup in combinations(sorted(coords), level + 1):
            for jk in tup:
                out.append((level, tup, jk))
    return out


def build_sections(
    shape: ProblemShape,
    mode: str,
    field: Field = QQ,
    twists: Optional[Sequence[int]] = None,
    lambdas: Optional[Sequence[int]] = None,
    degrees: Optional[Sequence[int]] = None,
    schedule: Optional[ExponentSchedule] = None,
    coeff_source: str = "random",
    seed: int = 0,
    explicit: Optional[Dict[str, str]] = None,
) -> SectionFamily:
    """Assemble a section family with homogeneity checked per section.

    general_fermat needs lambdas (length N+1, all >= 1) and degrees d_i with
    d_i >= lambda_j everywhere; mcm needs a valid schedule whose shape
    matches. Random coefficients are seeded; explicit mode takes a dict of
    polynomial literals keyed like SectionFamily.coefficients.
    """
    cr = shape.c + shape.r
    if twists is None:
        twists = (0,) * cr
    twists = tuple(int(a) for a in twists)
    if len(twists) != cr:
        raise ValueError(f"need {cr} twists")
    coeffs: Dict[str, MultiPoly] = {}

    def make(key: str, degree: int, rng) -> MultiPoly:
        if coeff_source == "explicit":
            if key not in explicit:
                raise ValueError(f"missing explicit coefficient {key}")
            poly = from_literal(explicit[key], shape.N, field)
            if not poly.is_zero():
                if poly.dz_degree() != 0:
                    raise ValueError(f"coefficient {key} must be dz-free")
                if poly.z_degree() != degree:
                    raise ValueError(
                        f"degree bookkeeping mismatch at {key}: got {poly.z_degree()}, need {degree}"
                    )
            return poly
        return random_homogeneous(shape.N, degree, field, rng)

    if mode == "general_fermat":
        if lambdas is None or degrees is None:
            raise ValueError("general_fermat needs lambdas and degrees")
        lambdas = tuple(int(x) for x in lambdas)
        degrees = tuple(int(x) for x in degrees)
        if len(lambdas) != shape.N + 1 or any(l < 1 for l in lambdas):
            raise ValueError("need N+1 lambdas, all >= 1")
        if len(degrees) != cr:
            raise ValueError(f"need {cr} section degrees")
        for i in range(1, cr + 1):
            for j, lam in enumerate(lambdas):
                if degrees[i - 1] - lam < 0:
                    raise ValueError(f"degree bookkeeping mismatch: d_{i} = {degrees[i - 1]} < lambda_{j} = {lam}")
        sections = []
        for i in range(1, cr + 1):
            rng = child_rng(seed, "build_sections", i)
            F = MultiPoly.zero(shape.N, field)
            for j in range(shape.N + 1):
                key = f"A:{i}:{j}"
                coeffs[key] = make(key, _coeff_degree_general(i, j, twists, degrees, lambdas), rng)
                F = F + coeffs[key] * MultiPoly.z(shape.N, j, field, power=lambdas[j])
            expected = twists[i - 1] + degrees[i - 1]
            if not F.is_zero() and F.z_degree() != expected:
                raise ValueError(f"section {i} degree {F.z_degree()} != {expected}")
            sections.append(F)
        return SectionFamily(
            shape=shape, mode=mode, field=field, twists=twists, coefficients=coeffs,
            sections=tuple(sections), lambdas=lambdas, degrees=degrees, seed=seed,
        )

    if mode == "mcm":
        if schedule is None:
            raise ValueError("mcm needs an exponent schedule")
        if schedule.shape != shape:
            raise ValueError("schedule shape mismatch")
        d = schedule.d
        triples = mcm_tuple_space(shape, range(shape.N + 1))
        sections = []
        for i in range(1, cr + 1):
            rng = child_rng(seed, "build_sections", i)
            cdeg = twists[i - 1] + schedule.eps[i - 1]
            F = MultiPoly.zero(shape.N, field)
            for j in range(shape.N + 1):
                key = f"A:{i}:{j}"
                coeffs[key] = make(key, cdeg, rng)
                F = F + coeffs[key] * MultiPoly.z(shape.N, j, field, power=d)
            for level, tup, jk in triples:
                k_pos = tup.index(jk)
                m_exp = schedule.mu[(level, k_pos)]
                if d - level * m_exp < 1:
                    raise ValueError("schedule residual exponent not positive")
                key = f"M:{i}:{','.join(map(str, tup))}:{jk}"
                coeffs[key] = make(key, cdeg, rng)
                mono = [0] * (2 * (shape.N + 1))
                for m in tup:
                    mono[m] = m_exp
                mono[jk] = d - level * m_exp
                term = coeffs[key] * MultiPoly(shape.N, field, {tuple(mono): 1})
                F = F + term
            expected = cdeg + d
            if not F.is_zero() and F.z_degree() != expected:
                raise ValueError(f"section {i} degree {F.z_degree()} != {expected}")
            sections.append(F)
        # negativity reading of the twist data: heart must exceed every a_i
        if schedule.heart <= max(twists, default=0):
            raise ValueError("schedule heart must exceed every twist a_i")
        return SectionFamily(
            shape=shape, mode=mode, field=field, twists=twists, coefficients=coeffs,
            sections=tuple(sections), schedule=schedule, seed=seed,
        )

    raise ValueError(f"unknown mode: {mode}")


# ----- matrices -----


def build_matrices(fam: SectionFamily) -> FormalMatrixBundle:
    """The full structured matrix of the family, invariants asserted."""
    shape = fam.shape
    N, c, cr = shape.N, shape.c, shape.c + shape.r
    coords = tuple(range(N + 1))
    if fam.mode == "general_fermat":
        rows: List[List[MultiPoly]] = []
        for i in range(1, cr + 1):
            rows.append(
                [fam.coefficients[f"A:{i}:{j}"] * MultiPoly.z(N, j, fam.field, power=fam.lambdas[j]) for j in coords]
            )
        for q in range(1, c + 1):
            rows.append([total_differential(e) for e in rows[q - 1]])
        bundle = FormalMatrixBundle(
            layout="sec4", family=fam, entries=rows,
            column_tags=tuple(f"col_{j}" for j in coords), retained=coords,
        )
    elif fam.mode == "mcm":
        sched = fam.schedule
        d = sched.d
        groups: List[List[MultiPoly]] = []
        for i in range(1, cr + 1):
            row: List[MultiPoly] = []
            for j in coords:  # A-groups: pure term plus all levels below the top
                g = fam.coefficients[f"A:{i}:{j}"] * MultiPoly.z(N, j, fam.field, power=d)
                for level, tup, jk in mcm_tuple_space(shape, coords):
                    if jk != j or level == N:
                        continue
                    g = g + _mcm_term(fam, i, level, tup, jk)
                row.append(g)
            for k in coords:  # B-groups: the top level, distinguished coordinate k
                row.append(_mcm_term(fam, i, N, coords, k))
            groups.append(row)
        for q in range(1, c + 1):
            groups.append([total_differential(e) for e in groups[q - 1]])
        tags = tuple([f"A_{j}" for j in coords] + [f"B_{k}" for k in coords])
        bundle = FormalMatrixBundle(
            layout="mcm", family=fam, entries=groups, column_tags=tags, retained=coords,
        )
    else:
        raise ValueError(fam.mode)
    _assert_bundle_invariants(bundle)
    return bundle


def _mcm_term(fam: SectionFamily, i: int, level: int, tup: Tuple[int, ...], jk: int) -> MultiPoly:
    sched = fam.schedule
    k_pos = tup.index(jk)
    m_exp = sched.mu[(level, k_pos)]
    mono = [0] * (2 * (fam.shape.N + 1))
    for m in tup:
        mono[m] = m_exp
    mono[jk] = sched.d - level * m_exp
    key = f"M:{i}:{','.join(map(str, tup))}:{jk}"
    return fam.coefficients[key] * MultiPoly(fam.shape.N, fam.field, {tuple(mono): 1})


def _assert_bundle_invariants(bundle: FormalMatrixBundle) -> None:
    fam = bundle.family
    cr = bundle.value_rows()
    for i in range(cr):
        total = MultiPoly.zero(fam.shape.N, fam.field)
        for e in bundle.entries[i]:
            total = total + e
        expected = fam.sections[i]
        if bundle.vanished:
            expected = kill_coordinates(expected, bundle.vanished)
        assert total == expected, f"row {i} does not sum to its section"
    for q in range(1, fam.shape.c + 1):
        for col, e in enumerate(bundle.entries[cr + q - 1]):
            want = total_differential(bundle.entries[q - 1][col])
            if bundle.vanished:
                want = kill_coordinates(want, bundle.vanished)
            assert e == want, f"differential row {q} mismatch at column {col}"


def _hidden_mcm_bundle(base: FormalMatrixBundle, vanished: Tuple[int, ...]) -> FormalMatrixBundle:
    """Rebuild the grouped matrix over the retained coordinates.

    Substituting z_v = 0 into the full groups would leave the surviving
    top-level terms attached to their old A-groups; on the restricted model
    the top level is len(retained)-1, so the groups are reassembled from the
    surviving coefficient terms directly.
    """
    fam = base.family
    shape = fam.shape
    retained = tuple(j for j in range(shape.N + 1) if j not in vanished)
    top = len(retained) - 1
    cr = shape.c + shape.r
    if top < cr + 1:
        raise ValueError("too many vanished coordinates: no moving level remains")

    def sub(p: MultiPoly) -> MultiPoly:
        return kill_coordinates(p, vanished)

    d = fam.schedule.d
    rows: List[List[MultiPoly]] = []
    for i in range(1, cr + 1):
        row = []
        for j in retained:
            g = sub(fam.coefficients[f"A:{i}:{j}"]) * MultiPoly.z(shape.N, j, fam.field, power=d)
            for level, tup, jk in mcm_tuple_space(shape, retained):
                if jk != j or level == top:
                    continue
                g = g + sub(_mcm_term(fam, i, level, tup, jk))
            row.append(g)
        for k in retained:
            row.append(sub(_mcm_term(fam, i, top, retained, k)))
        rows.append(row)
    for q in range(1, shape.c + 1):
        rows.append([total_differential(e) for e in rows[q - 1]])
    tags = tuple([f"A_{j}" for j in retained] + [f"B_{k}" for k in retained])
    bundle = FormalMatrixBundle(
        layout="mcm", family=fam, entries=rows, column_tags=tags,
        retained=retained, vanished=vanished,
    )
    _assert_bundle_invariants(bundle)
    return bundle


def build_selected(K: FormalMatrixBundle, which: Tuple) -> FormalMatrixBundle:
    """Select and combine columns: ("K_nu", nu), ("K_tau_rho", tau, rho), or
    ("hidden", v_1..v_eta).

    K_nu keeps the plain A-columns except position nu and appends the
    combined column A_nu + sum_j B_j (displayed last; its logical slot is
    the omitted position). K_tau_rho combines A_k + B_k for k <= tau, keeps
    A_j for tau < j <= top except rho, and appends A_rho + sum_{j>tau} B_j.
    Positions refer to the retained coordinate list. hidden restricts to the
    complement of the vanished set, substituting z_v = 0, dz_v = 0; on mcm
    bundles the groups are rebuilt over the retained coordinates.
    """
    kind = which[0]
    fam = K.family
    if kind == "hidden":
        vanished = tuple(sorted(set(which[1:]) | set(K.vanished)))
        eta = len(vanished)
        if not (1 <= eta <= fam.shape.n - 1):
            raise ValueError(f"hidden depth must be 1..n-1, got {eta}")
        if any(not (0 <= v <= fam.shape.N) for v in vanished):
            raise ValueError("vanished index out of range")
        if K.layout == "sec4":
            if any(l < 2 for l in fam.lambdas):
                raise ValueError("hidden forms require all lambda_j >= 2")
            retained = tuple(j for j in range(fam.shape.N + 1) if j not in vanished)
            rows = [[kill_coordinates(K.entries[i][j], vanished) for j in retained] for i in range(K.nrows)]
            bundle = FormalMatrixBundle(
                layout="sec4", family=fam, entries=rows,
                column_tags=tuple(f"col_{j}" for j in retained),
                retained=retained, vanished=vanished,
            )
            _assert_bundle_invariants(bundle)
            return bundle
        if K.layout == "mcm":
            return _hidden_mcm_bundle(K, vanished)
        raise ValueError("hidden selection needs a sec4 or mcm bundle")

    if K.layout != "mcm":
        raise ValueError("column combinations need an mcm bundle")
    m1 = len(K.retained)  # m+1 columns in the output
    top = m1 - 1
    A = [[row[j] for j in range(m1)] for row in K.entries]
    B = [[row[m1 + j] for j in range(m1)] for row in K.entries]
    sched = fam.schedule
    d = sched.d
    lvl = top  # top moving level on this (possibly restricted) model
    delta_top = sched.delta[lvl]

    if kind == "K_nu":
        (nu,) = which[1:]
        if not (0 <= nu <= top):
            raise ValueError(f"nu out of range 0..{top}")
        cols: List[List[MultiPoly]] = []
        tags: List[str] = []
        divisors: List[int] = []
        for j in range(m1):
            if j == nu:
                continue
            cols.append([A[i][j] for i in range(K.nrows)])
            tags.append(f"A_{K.retained[j]}")
            divisors.append(d - delta_top)
        combined = []
        for i in range(K.nrows):
            e = A[i][nu]
            for j in range(m1):
                e = e + B[i][j]
            combined.append(e)
        cols.append(combined)
        tags.append(f"A_{K.retained[nu]}+sumB")
        divisors.append(sched.mu[(lvl, 0)])
        entries = [[cols[c][i] for c in range(len(cols))] for i in range(K.nrows)]
        return FormalMatrixBundle(
            layout="selected", family=fam, entries=entries, column_tags=tuple(tags),
            retained=K.retained, vanished=K.vanished, selected_kind="K_nu",
            selected_params=(nu,), divisor_exponents=tuple(divisors),
        )

    if kind == "K_tau_rho":
        tau, rho = which[1:]
        if not (0 <= tau <= top - 1 and tau + 1 <= rho <= top):
            raise ValueError(f"need 0 <= tau < rho <= {top}")
        cols = []
        tags = []
        divisors = []
        for k in range(tau + 1):
            cols.append([A[i][k] + B[i][k] for i in range(K.nrows)])
            tags.append(f"A_{K.retained[k]}+B_{K.retained[k]}")
            divisors.append(d - lvl * sched.mu[(lvl, k)])
        for j in range(tau + 1, m1):
            if j == rho:
                continue
            cols.append([A[i][j] for i in range(K.nrows)])
            tags.append(f"A_{K.retained[j]}")
            divisors.append(d - delta_top)
        combined = []
        for i in range(K.nrows):
            e = A[i][rho]
            for j in range(tau + 1, m1):
                e = e + B[i][j]
            combined.append(e)
        cols.append(combined)
        tags.append(f"A_{K.retained[rho]}+sumB_gt_tau")
        divisors.append(sched.mu[(lvl, tau + 1)])
        entries = [[cols[c][i] for c in range(len(cols))] for i in range(K.nrows)]
        return FormalMatrixBundle(
            layout="selected", family=fam, entries=entries, column_tags=tuple(tags),
            retained=K.retained, vanished=K.vanished, selected_kind="K_tau_rho",
            selected_params=(tau, rho), divisor_exponents=tuple(divisors),
        )

    raise ValueError(f"unknown selection kind: {kind}")


# ----- divisors -----


def column_divisors(K: FormalMatrixBundle, which: Optional[Tuple] = None, verify: bool = True) -> List[Dict[str, object]]:
    """Declared divisor of each column of a selected bundle, verified.

    Declared exponents are the induced lambda-template values: value rows
    must be divisible by z^e, differential rows by z^(e-1) (their structure
    z^(e-1) * (z dA + e A dz) spends one power on the differential, exactly
    as in the explicit-exponent matrices). Verification failures raise
    DivisibilityClaimFailed with the entry coordinates.
    """
    if which is not None:
        K = build_selected(K, which)
    if K.layout != "selected" or K.divisor_exponents is None:
        raise ValueError("column divisors are declared for selected bundles only")
    out = []
    cr = K.value_rows()
    for col in range(K.ncols):
        e = K.divisor_exponents[col]
        coord = _column_coordinate(K, col)
        report = {"col": col, "tag": K.column_tags[col], "coordinate": coord, "exponent": e}
        if verify:
            for row in range(K.nrows):
                need = e if row < cr else e - 1
                entry = K.entries[row][col]
                if entry.is_zero():
                    continue
                if min(exp[coord] for exp in entry.terms) < need:
                    raise DivisibilityClaimFailed(
                        f"entry ({row},{col}) not divisible by z{coord}^{need}", row=row, col=col
                    )
        out.append(report)
    return out


def _column_coordinate(K: FormalMatrixBundle, col: int) -> int:
    tag = K.column_tags[col]
    head = tag.split("+")[0]
    return int(head.split("_")[1])


# ----- form extraction -----


def extract_form(
    K: FormalMatrixBundle,
    which: Optional[Tuple],
    selection: Sequence[int],
    omit: int,
    chart: int,
    kind: Optional[str] = None,
) -> FormBundle:
    """Signed divided determinant of the selected rows and columns.

    Rows: all c+r value rows plus the differential rows j_1 < ... < j_{n-eta}
    named by selection (indices in 1..c). Columns: all but position `omit`;
    each remaining column is divided by z_coord^(e-1) for its declared
    exponent e (e = lambda template; e = 1 for the undivided kind "psi").
    value_global is (-1)^omit * det of the divided matrix, bihomogeneous of
    dz-degree n - eta; value is its restriction to the chart z_chart = 1.
    The twist is sum of the row L-degrees minus sum over all columns of
    (e - 1), cross-checked against the ledger entry for mcm selections.
    """
    if which is not None:
        K = build_selected(K, which)
    fam = K.family
    shape = fam.shape
    eta = K.eta()
    n_eff = shape.n - eta
    selection = tuple(selection)
    if len(selection) != n_eff or any(not (1 <= j <= shape.c) for j in selection) or len(set(selection)) != n_eff:
        raise ValueError(f"selection must pick {n_eff} distinct differential rows in 1..{shape.c}")
    if sorted(selection) != list(selection):
        raise ValueError("selection must be increasing")
    ncols = K.ncols
    if not (0 <= omit < ncols):
        raise ValueError("omitted column out of range")
    if chart not in K.retained:
        raise ValueError(f"chart {chart} is not a retained coordinate")

    if K.layout == "sec4":
        if kind is None:
            kind = "omega"
        if kind not in ("psi", "omega"):
            raise ValueError(f"kind {kind!r} invalid for explicit-exponent bundles")
        divisor_exps = tuple(
            1 if kind == "psi" else fam.lambdas[coord] for coord in K.retained
        )
        omit_coord = K.retained[omit]
    elif K.layout == "selected":
        kind = "phi_nu" if K.selected_kind == "K_nu" else "psi_tau_rho"
        divisor_exps = K.divisor_exponents
        omit_coord = _column_coordinate(K, omit)
    else:
        raise ValueError("extract_form needs a sec4 or selected bundle")
    if eta:
        kind = "hidden_" + kind

    cr = shape.c + shape.r
    row_ids = list(range(cr)) + [cr + j - 1 for j in selection]
    divided: List[List[MultiPoly]] = []
    for rid in row_ids:
        row = []
        for col in range(ncols):
            if col == omit:
                continue
            e = divisor_exps[col]
            coord = _column_coordinate(K, col) if K.layout == "selected" else K.retained[col]
            entry = K.entries[rid][col]
            if e > 1:
                mono = [0] * (2 * (shape.N + 1))
                mono[coord] = e - 1
                try:
                    entry = divide_exact(entry, tuple(mono))
                except DivisibilityError as err:
                    raise DivisibilityClaimFailed(
                        f"column {col} not divisible by z{coord}^{e - 1}", row=rid, col=col
                    ) from err
            row.append(entry)
        divided.append(row)

    sign = -1 if omit % 2 else 1
    det = poly_det(divided)
    value_global = det if sign == 1 else -det
    if not value_global.is_zero():
        assert value_global.is_bihomogeneous(), "form value must be bihomogeneous"
        assert value_global.dz_degree() == n_eff, "form dz-degree must be n - eta"

    twist = _twist_for(K, kind, selection, divisor_exps)
    _crosscheck_degree(K, value_global, twist, selection, divisor_exps, omit, n_eff)
    return FormBundle(
        kind=kind,
        selection=selection,
        params=tuple(K.selected_params),
        vanished=K.vanished,
        omit=omit,
        omit_coord=omit_coord,
        chart=chart,
        value=chart_restrict(value_global, chart),
        value_global=value_global,
        twist=twist,
        dz_degree=n_eff,
        divided_rows=divided,
        sign=sign,
    )


def _twist_for(K: FormalMatrixBundle, kind: str, selection, divisor_exps) -> int:
    fam = K.family
    base_kind = kind.removeprefix("hidden_")
    if base_kind == "psi":
        return fermat_heart(fam.degrees, selection)
    if base_kind == "omega":
        if K.vanished:
            return fermat_hidden_heart_prime(fam.degrees, fam.lambdas, selection, K.vanished)
        return fermat_heart_prime(fam.degrees, fam.lambdas, selection)
    ledger = twist_ledger(fam.schedule)
    eta = K.eta()
    if base_kind == "phi_nu":
        return ledger.lookup(eta, "K_nu", None, selection).value
    if base_kind == "psi_tau_rho":
        tau = K.selected_params[0]
        return ledger.lookup(eta, "K_tau_rho", tau, selection).value
    raise ValueError(kind)


def _crosscheck_degree(K, value_global, twist, selection, divisor_exps, omit, n_eff) -> None:
    """Exact degree bookkeeping: the L-twist equals sum of row L-degrees
    minus sum over all columns of (e-1); the global z-degree carries the
    a_i twists and keeps the omitted column's share."""
    fam = K.family
    ldeg = fam.section_l_degrees()
    rows_l = sum(ldeg) + sum(ldeg[j - 1] for j in selection)
    rows_a = sum(fam.twists) + sum(fam.twists[j - 1] for j in selection)
    spent_all = sum(e - 1 for e in divisor_exps)
    assert twist == rows_l - spent_all, "twist does not match degree bookkeeping"
    if not value_global.is_zero():
        spent_kept = spent_all - (divisor_exps[omit] - 1)
        expected_z = rows_l + rows_a - spent_kept - n_eff
        assert value_global.z_degree() == expected_z, "global z-degree mismatch"


# ----- serialization -----


def save_family(fam: SectionFamily, path: str) -> None:
    data = {
        "schema_version": FAMILY_SCHEMA_VERSION,
        "shape": {"N": fam.shape.N, "c": fam.shape.c, "r": fam.shape.r},
        "mode": fam.mode,
        "field_p": fam.field.p,
        "twists": list(fam.twists),
        "seed": fam.seed,
        "coefficients": {k: to_literal(v) for k, v in sorted(fam.coefficients.items())},
    }
    if fam.mode == "general_fermat":
        data["lambdas"] = list(fam.lambdas)
        data["degrees"] = list(fam.degrees)
    else:
        data["schedule"] = schedule_to_dict(fam.schedule)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_family(path: str) -> SectionFamily:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("schema_version") != FAMILY_SCHEMA_VERSION:
        raise ValueError(f"unsupported family schema version: {data.get('schema_version')}")
    shape = ProblemShape(**data["shape"])
    field = Field(data["field_p"])
    kwargs = dict(
        shape=shape,
        mode=data["mode"],
        field=field,
        twists=data["twists"],
        coeff_source="explicit",
        explicit=data["coefficients"],
        seed=data.get("seed"),
    )
    if data["mode"] == "general_fermat":
        kwargs.update(lambdas=data["lambdas"], degrees=data["degrees"])
    else:
        kwargs.update(schedule=schedule_from_dict(data["schedule"]))
    return build_sections(**kwargs)
