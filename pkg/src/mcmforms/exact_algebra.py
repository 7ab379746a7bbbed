"""Exact sparse arithmetic for bigraded polynomials in z_0..z_N, dz_0..dz_N.

Representation: a polynomial is a dict mapping an exponent tuple of length
2*(N+1) to a nonzero coefficient. Slots 0..N hold the z-exponents, slots
N+1..2N+1 hold the dz-exponents. The zero polynomial is the empty dict and
counts as bihomogeneous of every bidegree. Coefficients live in Q (exact
fractions, p == 0) or in F_p for a prime p < 2**31.

The canonical term order is graded lexicographic on the concatenated
exponent vector, largest first; the literal printer emits terms in that
order and the parser accepts the printed form back byte-exactly.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Exponent = Tuple[int, ...]

# Default 31-bit prime for probabilistic identity testing (2**31 - 1).
IDENTITY_PRIME = 2147483647

# Above this many already-expanded terms, identity_test "auto" goes probabilistic.
AUTO_EXACT_TERM_LIMIT = 100_000


class DivisibilityError(ValueError):
    """Raised when an exact division request fails; carries the offending term."""

    def __init__(self, message: str, term: Optional[Exponent] = None):
        super().__init__(message)
        self.term = term


class ParseError(ValueError):
    """Raised on malformed polynomial literals; names the offending token."""

    def __init__(self, message: str, token: str = ""):
        super().__init__(message)
        self.token = token


@dataclass(frozen=True)
class Field:
    """Coefficient field: Q when p == 0, else F_p for a prime p < 2**31."""

    p: int = 0

    def __post_init__(self):
        if self.p:
            if not (2 <= self.p < 2**31):
                raise ValueError(f"field characteristic out of range: {self.p}")
            if not _is_prime(self.p):
                raise ValueError(f"field characteristic must be prime: {self.p}")

    def coerce(self, x):
        if self.p:
            if isinstance(x, Fraction):
                if x.denominator % self.p == 0:
                    raise ZeroDivisionError("denominator vanishes in F_p")
                return (x.numerator * pow(x.denominator, self.p - 2, self.p)) % self.p
            return int(x) % self.p
        return x if isinstance(x, Fraction) else Fraction(x)

    def add(self, a, b):
        return (a + b) % self.p if self.p else a + b

    def mul(self, a, b):
        return (a * b) % self.p if self.p else a * b

    def neg(self, a):
        return (-a) % self.p if self.p else -a

    def inv(self, a):
        if self.p:
            if a % self.p == 0:
                raise ZeroDivisionError("inverse of zero in F_p")
            return pow(a, self.p - 2, self.p)
        if a == 0:
            raise ZeroDivisionError("inverse of zero in Q")
        return 1 / Fraction(a)

    def rand_elt(self, rng):
        if self.p:
            return rng.randrange(self.p)
        return Fraction(rng.randrange(-10, 11))

    def rand_nonzero(self, rng):
        while True:
            x = self.rand_elt(rng)
            if x != 0:
                return x

    def __str__(self):
        return "Q" if self.p == 0 else f"F_{self.p}"


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    # deterministic Miller-Rabin, valid far beyond 2**31
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


QQ = Field(0)


class MultiPoly:
    """Sparse exact polynomial in z_0..z_N, dz_0..dz_N over Q or F_p."""

    __slots__ = ("N", "field", "terms")

    def __init__(self, N: int, field: Field, terms: Optional[Dict[Exponent, object]] = None):
        if N < 0:
            raise ValueError("N must be >= 0")
        self.N = N
        self.field = field
        clean: Dict[Exponent, object] = {}
        if terms:
            width = 2 * (N + 1)
            for exp, c in terms.items():
                if len(exp) != width:
                    raise ValueError(f"exponent width {len(exp)} != {width}")
                if any(e < 0 for e in exp):
                    raise ValueError("negative exponent")
                c = field.coerce(c)
                if c != 0:
                    prev = clean.get(exp)
                    if prev is None:
                        clean[exp] = c
                    else:
                        s = field.add(prev, c)
                        if s == 0:
                            del clean[exp]
                        else:
                            clean[exp] = s
        self.terms = clean

    # ----- constructors -----

    @staticmethod
    def zero(N: int, field: Field = QQ) -> "MultiPoly":
        return MultiPoly(N, field)

    @staticmethod
    def const(N: int, c, field: Field = QQ) -> "MultiPoly":
        exp = (0,) * (2 * (N + 1))
        return MultiPoly(N, field, {exp: c})

    @staticmethod
    def z(N: int, j: int, field: Field = QQ, power: int = 1) -> "MultiPoly":
        if not (0 <= j <= N):
            raise ValueError(f"z index {j} out of range 0..{N}")
        exp = [0] * (2 * (N + 1))
        exp[j] = power
        return MultiPoly(N, field, {tuple(exp): 1})

    @staticmethod
    def dz(N: int, j: int, field: Field = QQ, power: int = 1) -> "MultiPoly":
        if not (0 <= j <= N):
            raise ValueError(f"dz index {j} out of range 0..{N}")
        exp = [0] * (2 * (N + 1))
        exp[N + 1 + j] = power
        return MultiPoly(N, field, {tuple(exp): 1})

    @staticmethod
    def monomial(N: int, field: Field, coeff, z_exps: Sequence[int], dz_exps: Sequence[int] = ()) -> "MultiPoly":
        zs = list(z_exps) + [0] * (N + 1 - len(z_exps))
        ds = list(dz_exps) + [0] * (N + 1 - len(dz_exps))
        return MultiPoly(N, field, {tuple(zs + ds): coeff})

    # ----- ring structure -----

    def _check_compat(self, other: "MultiPoly"):
        if self.N != other.N or self.field != other.field:
            raise ValueError("mixed ambient dimension or coefficient field")

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check_compat(other)
        out = dict(self.terms)
        fld = self.field
        for exp, c in other.terms.items():
            prev = out.get(exp)
            if prev is None:
                out[exp] = c
            else:
                s = fld.add(prev, c)
                if s == 0:
                    del out[exp]
                else:
                    out[exp] = s
        res = MultiPoly(self.N, fld)
        res.terms = out
        return res

    def __neg__(self) -> "MultiPoly":
        fld = self.field
        res = MultiPoly(self.N, fld)
        res.terms = {exp: fld.neg(c) for exp, c in self.terms.items()}
        return res

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        self._check_compat(other)
        fld = self.field
        out: Dict[Exponent, object] = {}
        small, big = (self.terms, other.terms) if len(self.terms) <= len(other.terms) else (other.terms, self.terms)
        for e1, c1 in small.items():
            for e2, c2 in big.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                c = fld.mul(c1, c2)
                prev = out.get(exp)
                if prev is None:
                    out[exp] = c
                else:
                    s = fld.add(prev, c)
                    if s == 0:
                        del out[exp]
                    else:
                        out[exp] = s
        res = MultiPoly(self.N, fld)
        res.terms = out
        return res

    def scale(self, c) -> "MultiPoly":
        fld = self.field
        c = fld.coerce(c)
        if c == 0:
            return MultiPoly.zero(self.N, fld)
        res = MultiPoly(self.N, fld)
        res.terms = {exp: fld.mul(v, c) for exp, v in self.terms.items()}
        return res

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.const(self.N, 1, self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.N == other.N and self.field == other.field and self.terms == other.terms

    def __hash__(self):
        return hash((self.N, self.field, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def term_count(self) -> int:
        return len(self.terms)

    # ----- grading -----

    def z_degree(self) -> Optional[int]:
        """Common z-degree when z-homogeneous; None for the zero polynomial."""
        degs = {sum(exp[: self.N + 1]) for exp in self.terms}
        if not degs:
            return None
        if len(degs) != 1:
            raise ValueError(f"not z-homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def dz_degree(self) -> Optional[int]:
        degs = {sum(exp[self.N + 1 :]) for exp in self.terms}
        if not degs:
            return None
        if len(degs) != 1:
            raise ValueError(f"not dz-homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def is_bihomogeneous(self) -> bool:
        n1 = self.N + 1
        pairs = {(sum(exp[:n1]), sum(exp[n1:])) for exp in self.terms}
        return len(pairs) <= 1

    def bidegree(self) -> Optional[Tuple[int, int]]:
        """(z-degree, dz-degree) when bihomogeneous; None for zero."""
        n1 = self.N + 1
        pairs = {(sum(exp[:n1]), sum(exp[n1:])) for exp in self.terms}
        if not pairs:
            return None
        if len(pairs) != 1:
            raise ValueError(f"not bihomogeneous: bidegrees {sorted(pairs)}")
        return pairs.pop()

    # ----- evaluation -----

    def evaluate(self, z_vals: Sequence, dz_vals: Sequence):
        """Exact evaluation in the coefficient field."""
        fld = self.field
        n1 = self.N + 1
        zv = [fld.coerce(v) for v in z_vals]
        dv = [fld.coerce(v) for v in dz_vals]
        total = fld.coerce(0)
        for exp, c in self.terms.items():
            val = c
            for k in range(n1):
                e = exp[k]
                if e:
                    val = fld.mul(val, pow(zv[k], e, fld.p) if fld.p else zv[k] ** e)
            for k in range(n1):
                e = exp[n1 + k]
                if e:
                    val = fld.mul(val, pow(dv[k], e, fld.p) if fld.p else dv[k] ** e)
            total = fld.add(total, val)
        return total

    def evaluate_mod(self, z_vals: Sequence[int], dz_vals: Sequence[int], modulus: int) -> int:
        """Evaluation mod a prime; Q coefficients are reduced via modular inverses."""
        n1 = self.N + 1
        total = 0
        for exp, c in self.terms.items():
            if isinstance(c, Fraction):
                den = c.denominator % modulus
                if den == 0:
                    raise ZeroDivisionError("denominator vanishes mod the test prime")
                cv = (c.numerator % modulus) * pow(den, modulus - 2, modulus) % modulus
            else:
                cv = c % modulus
            val = cv
            for k in range(n1):
                e = exp[k]
                if e:
                    val = (val * pow(z_vals[k] % modulus, e, modulus)) % modulus
            for k in range(n1):
                e = exp[n1 + k]
                if e:
                    val = (val * pow(dz_vals[k] % modulus, e, modulus)) % modulus
            total = (total + val) % modulus
        return total

    # ----- literals -----

    def __repr__(self):
        return f"MultiPoly({to_literal(self)!r}, N={self.N}, field={self.field})"


def arith(op: str, p: MultiPoly, q: Optional[MultiPoly] = None) -> MultiPoly:
    """Named dispatcher over the ring operations: add, sub, mul, neg."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "neg":
        return -p
    raise ValueError(f"unknown operation: {op}")


def canonical_terms(p: MultiPoly) -> List[Tuple[Exponent, object]]:
    """Terms sorted graded-lexicographically on the exponent vector, largest first."""
    return sorted(p.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)


def _coeff_str(c) -> str:
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return str(c.numerator)
        return f"{c.numerator}/{c.denominator}"
    return str(c)


def to_literal(p: MultiPoly) -> str:
    """Canonical literal: terms like 'coeff * z0^a ... dz0^b ...' joined by ' + '."""
    if p.is_zero():
        return "0"
    n1 = p.N + 1
    parts = []
    for exp, c in canonical_terms(p):
        factors = []
        for k in range(n1):
            if exp[k]:
                factors.append(f"z{k}^{exp[k]}")
        for k in range(n1):
            if exp[n1 + k]:
                factors.append(f"dz{k}^{exp[n1 + k]}")
        if factors:
            parts.append(f"{_coeff_str(c)} * " + " ".join(factors))
        else:
            parts.append(_coeff_str(c))
    return " + ".join(parts)


_FACTOR_RE = re.compile(r"^(d?z)(\d+)(?:\^(\d+))?$")
_COEFF_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def from_literal(s: str, N: int, field: Field = QQ) -> MultiPoly:
    """Parse a polynomial literal; inverse of to_literal on canonical output.

    Accepts a coefficient, '*' separators, and factors z<k>[^e] / dz<k>[^e];
    the caret and exponent may be omitted for exponent 1, and the leading
    coefficient may be omitted for coefficient 1.
    """
    text = s.strip()
    if text == "":
        raise ParseError("empty literal", token=s)
    if text == "0":
        return MultiPoly.zero(N, field)
    terms: Dict[Exponent, object] = {}
    poly = MultiPoly.zero(N, field)
    for raw_term in text.split("+"):
        term = raw_term.strip()
        if not term:
            raise ParseError("empty term between '+' separators", token=raw_term)
        tokens = [t for t in re.split(r"[\s*]+", term) if t]
        coeff: object = 1
        start = 0
        if _COEFF_RE.match(tokens[0]):
            tok = tokens[0]
            if "/" in tok:
                num, den = tok.split("/")
                coeff = Fraction(int(num), int(den))
            else:
                coeff = int(tok)
            start = 1
        elif tokens[0].startswith("-"):
            coeff = -1
            tokens[0] = tokens[0][1:]
            if not tokens[0]:
                raise ParseError("dangling minus sign", token=term)
        exp = [0] * (2 * (N + 1))
        for tok in tokens[start:]:
            m = _FACTOR_RE.match(tok)
            if not m:
                raise ParseError(f"unrecognized token {tok!r}", token=tok)
            kind, idx_s, pow_s = m.groups()
            idx = int(idx_s)
            if idx > N:
                raise ParseError(f"variable index {idx} exceeds N={N}", token=tok)
            e = int(pow_s) if pow_s is not None else 1
            slot = idx if kind == "z" else N + 1 + idx
            exp[slot] += e
        key = tuple(exp)
        prev = terms.get(key)
        terms[key] = coeff if prev is None else prev + coeff
    return MultiPoly(N, field, terms)


# ----- calculus and substitutions -----


def deriv(p: MultiPoly, j: int) -> MultiPoly:
    """Partial derivative with respect to z_j."""
    if not (0 <= j <= p.N):
        raise ValueError(f"z index {j} out of range")
    fld = p.field
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        e = exp[j]
        if e == 0:
            continue
        coeff = fld.mul(c, fld.coerce(e))
        if coeff == 0:
            continue
        new = list(exp)
        new[j] = e - 1
        key = tuple(new)
        prev = out.get(key)
        if prev is None:
            out[key] = coeff
        else:
            s = fld.add(prev, coeff)
            if s == 0:
                del out[key]
            else:
                out[key] = s
    res = MultiPoly(p.N, fld)
    res.terms = out
    return res


def total_differential(p: MultiPoly) -> MultiPoly:
    """d(p) = sum_k (partial p / partial z_k) * dz_k.

    Chart compatibility: restricting d(p) to the chart z_l = 1 equals the
    differential of the chart restriction, so this is the global lift of
    the chart-wise differential of p / z_l^deg on z_l != 0.
    """
    fld = p.field
    n1 = p.N + 1
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        for k in range(n1):
            e = exp[k]
            if e == 0:
                continue
            coeff = fld.mul(c, fld.coerce(e))
            if coeff == 0:
                continue
            new = list(exp)
            new[k] = e - 1
            new[n1 + k] += 1
            key = tuple(new)
            prev = out.get(key)
            if prev is None:
                out[key] = coeff
            else:
                s = fld.add(prev, coeff)
                if s == 0:
                    del out[key]
                else:
                    out[key] = s
    res = MultiPoly(p.N, fld)
    res.terms = out
    return res


def chart_restrict(p: MultiPoly, l: int) -> MultiPoly:
    """Restrict to the affine chart z_l = 1: send z_l -> 1 and dz_l -> 0.

    This is a ring homomorphism, so it commutes with sums, products and
    determinants.
    """
    if not (0 <= l <= p.N):
        raise ValueError(f"chart index {l} out of range")
    fld = p.field
    n1 = p.N + 1
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        if exp[n1 + l]:
            continue
        if exp[l]:
            new = list(exp)
            new[l] = 0
            key = tuple(new)
        else:
            key = exp
        prev = out.get(key)
        if prev is None:
            out[key] = c
        else:
            s = fld.add(prev, c)
            if s == 0:
                del out[key]
            else:
                out[key] = s
    res = MultiPoly(p.N, fld)
    res.terms = out
    return res


def z_power(N: int, j: int, e: int) -> Exponent:
    """Exponent tuple of the monomial z_j^e."""
    exp = [0] * (2 * (N + 1))
    exp[j] = e
    return tuple(exp)


def times_monomial(p: MultiPoly, mono: Exponent) -> MultiPoly:
    res = MultiPoly(p.N, p.field)
    res.terms = {tuple(a + b for a, b in zip(exp, mono)): c for exp, c in p.terms.items()}
    return res


def divide_exact(p: MultiPoly, mono: Exponent) -> MultiPoly:
    """Divide by a monomial, raising DivisibilityError on any failing term."""
    if len(mono) != 2 * (p.N + 1):
        raise ValueError("divisor exponent width mismatch")
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        new = tuple(a - b for a, b in zip(exp, mono))
        if any(e < 0 for e in new):
            raise DivisibilityError(
                f"term with exponents {exp} not divisible by monomial {mono}", term=exp
            )
        out[new] = c
    res = MultiPoly(p.N, p.field)
    res.terms = out
    return res


def substitute_dz(p: MultiPoly, images: Sequence[MultiPoly]) -> MultiPoly:
    """Replace each dz_k by images[k] (z-variables left alone)."""
    if len(images) != p.N + 1:
        raise ValueError("need one image per dz variable")
    fld = p.field
    n1 = p.N + 1
    total = MultiPoly.zero(p.N, fld)
    power_cache: Dict[Tuple[int, int], MultiPoly] = {}
    for exp, c in p.terms.items():
        z_part = MultiPoly(p.N, fld, {exp[:n1] + (0,) * n1: c})
        piece = z_part
        for k in range(n1):
            e = exp[n1 + k]
            if e == 0:
                continue
            key = (k, e)
            pw = power_cache.get(key)
            if pw is None:
                pw = images[k] ** e
                power_cache[key] = pw
            piece = piece * pw
        total = total + piece
    return total


def euler_substitute(p: MultiPoly) -> MultiPoly:
    """Substitute dz_k -> z_k; on d(F) this recovers deg(F) * F."""
    fld = p.field
    n1 = p.N + 1
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        new = tuple(exp[k] + exp[n1 + k] if k < n1 else 0 for k in range(2 * n1))
        prev = out.get(new)
        if prev is None:
            out[new] = c
        else:
            s = fld.add(prev, c)
            if s == 0:
                del out[new]
            else:
                out[new] = s
    res = MultiPoly(p.N, fld)
    res.terms = out
    return res


def kill_coordinates(p: MultiPoly, vanished: Iterable[int]) -> MultiPoly:
    """Substitute z_v -> 0 and dz_v -> 0 for every v in vanished.

    Every monomial containing a vanished coordinate (in either grading)
    drops out; nothing else changes.
    """
    vset = sorted(set(vanished))
    if any(not (0 <= v <= p.N) for v in vset):
        raise ValueError("vanished index out of range")
    n1 = p.N + 1
    out: Dict[Exponent, object] = {}
    for exp, c in p.terms.items():
        if any(exp[v] or exp[n1 + v] for v in vset):
            continue
        out[exp] = c
    res = MultiPoly(p.N, p.field)
    res.terms = out
    return res


def tangent_projection(p: MultiPoly, l: int) -> MultiPoly:
    """Substitute dz_k -> z_l * dz_k - dz_l * z_k for every k.

    This is the coordinate form of projecting a tangent vector into the
    chart z_l = 1, lifted to a global polynomial substitution.
    """
    if not (0 <= l <= p.N):
        raise ValueError(f"chart index {l} out of range")
    fld = p.field
    N = p.N
    images = []
    for k in range(N + 1):
        w = MultiPoly.z(N, l, fld) * MultiPoly.dz(N, k, fld) - MultiPoly.dz(N, l, fld) * MultiPoly.z(N, k, fld)
        images.append(w)
    return substitute_dz(p, images)


def dz_components(p: MultiPoly) -> Dict[Exponent, MultiPoly]:
    """Split p by dz-exponent pattern; values are z-only polynomials.

    Keys are dz-exponent tuples of length N+1. Useful for rows that are
    linear in dz: the component at dz_k is the coefficient polynomial.
    """
    n1 = p.N + 1
    buckets: Dict[Exponent, Dict[Exponent, object]] = {}
    zero_dz = (0,) * n1
    for exp, c in p.terms.items():
        dkey = exp[n1:]
        zexp = exp[:n1] + zero_dz
        buckets.setdefault(dkey, {})[zexp] = c
    out = {}
    for dkey, terms in buckets.items():
        poly = MultiPoly(p.N, p.field)
        poly.terms = terms
        out[dkey] = poly
    return out


def gradient_rows(p: MultiPoly) -> List[MultiPoly]:
    """For p linear in dz: the z-only coefficients [g_0..g_N] with p = sum g_k dz_k."""
    n1 = p.N + 1
    grads = [MultiPoly.zero(p.N, p.field) for _ in range(n1)]
    for dkey, comp in dz_components(p).items():
        s = sum(dkey)
        if s == 0:
            if not comp.is_zero():
                raise ValueError("polynomial has a dz-free part; not linear in dz")
            continue
        if s != 1:
            raise ValueError("polynomial is not linear in dz")
        k = dkey.index(1)
        grads[k] = grads[k] + comp
    return grads


# ----- identity testing -----


def identity_test(
    p: MultiPoly,
    q: MultiPoly,
    mode: str = "auto",
    trials: int = 20,
    seed: int = 0,
) -> Dict[str, object]:
    """Decide p == q, exactly or by Schwartz-Zippel point sampling.

    Returns {"equal": bool, "mode": used mode, "trials": count, ...}. Exact
    mode compares canonical term maps. Probabilistic mode evaluates p - q at
    uniform points, over F_p itself for positive characteristic and modulo
    a fixed 31-bit prime for Q; a nonzero value certifies inequality, and
    the miss probability per trial is bounded by total degree / field size.
    """
    p._check_compat(q)
    if mode == "auto":
        mode = "exact" if (p.term_count() + q.term_count()) <= AUTO_EXACT_TERM_LIMIT else "probabilistic"
    if mode == "exact":
        return {"equal": p.terms == q.terms, "mode": "exact", "trials": 0}
    if mode != "probabilistic":
        raise ValueError(f"unknown mode: {mode}")
    diff = p - q
    if diff.is_zero():
        return {"equal": True, "mode": "probabilistic", "trials": 0, "note": "difference is identically zero"}
    modulus = p.field.p if p.field.p else IDENTITY_PRIME
    rng_stream = random.Random(f"{seed}:identity_test")
    n1 = p.N + 1
    for t in range(trials):
        zv = [rng_stream.randrange(modulus) for _ in range(n1)]
        dv = [rng_stream.randrange(modulus) for _ in range(n1)]
        if diff.evaluate_mod(zv, dv, modulus) != 0:
            return {
                "equal": False,
                "mode": "probabilistic",
                "trials": t + 1,
                "witness": {"z": zv, "dz": dv},
            }
    return {"equal": True, "mode": "probabilistic", "trials": trials, "field_size": modulus}


# ----- determinants -----


def poly_det(rows: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    """Determinant of a square matrix of polynomials.

    Cofactor expansion along rows with memoization on the remaining column
    subset, so each subset determinant is expanded once (fraction-free by
    construction; no pseudo-division steps).
    """
    m = len(rows)
    if m == 0:
        raise ValueError("empty matrix")
    for row in rows:
        if len(row) != m:
            raise ValueError("matrix is not square")
    sample = rows[0][0]
    N, fld = sample.N, sample.field
    memo: Dict[Tuple[int, ...], MultiPoly] = {}

    def minor(cols: Tuple[int, ...]) -> MultiPoly:
        i = m - len(cols)
        if len(cols) == 1:
            return rows[i][cols[0]]
        cached = memo.get(cols)
        if cached is not None:
            return cached
        acc = MultiPoly.zero(N, fld)
        for t, col in enumerate(cols):
            entry = rows[i][col]
            if entry.is_zero():
                continue
            sub = minor(cols[:t] + cols[t + 1 :])
            piece = entry * sub
            acc = acc + piece if t % 2 == 0 else acc - piece
        memo[cols] = acc
        return acc

    return minor(tuple(range(m)))


def det_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    """Determinant of an integer matrix over F_p by elimination."""
    m = [[x % p for x in row] for row in rows]
    n = len(m)
    det = 1
    for col in range(n):
        pivot = None
        for i in range(col, n):
            if m[i][col]:
                pivot = i
                break
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = (-det) % p
        det = (det * m[col][col]) % p
        inv = pow(m[col][col], p - 2, p)
        for i in range(col + 1, n):
            if m[i][col]:
                f = (m[i][col] * inv) % p
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[col])]
    return det % p
