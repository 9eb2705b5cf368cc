"""Monomial-order calculus for overconvergent power series.

Provides the deglex total order, rho-leading terms at a fringe decay D,
completion of leading-term generators (Buchberger on the mod-p reduction,
lifted termwise), the norm-controlled division step, and the three-circles
interpolation check between fringe levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import MembershipError, PrecisionError
from .padics import PadicApprox
from .series import Series, coeff_value, gauss_norm, rho_value

Exp = tuple[int, ...]


# -- the order ---------------------------------------------------------------

def deglex_compare(I, J) -> str:
    """Total order refining divisibility and total degree.

    Ties in total degree break at the first differing position: the tuple
    with the LESSER entry there is the larger one.
    """
    I, J = tuple(I), tuple(J)
    if len(I) != len(J):
        raise ValueError("arity mismatch")
    if I == J:
        return "equal"
    dI, dJ = sum(I), sum(J)
    if dI != dJ:
        return "greater" if dI > dJ else "less"
    for a, b in zip(I, J):
        if a != b:
            return "greater" if a < b else "less"
    return "equal"


def deglex_key(I) -> tuple:
    """Sort key: ascending order agrees with deglex_compare."""
    return (sum(I), tuple(-a for a in I))


@dataclass(frozen=True)
class OrderedMonomial:
    index: Exp

    @property
    def order_key(self):
        return deglex_key(self.index)

    def divides(self, other: "OrderedMonomial") -> bool:
        return all(a <= b for a, b in zip(self.index, other.index))


@dataclass(frozen=True)
class LeadingDatum:
    element: Series
    rho_D: int | None       # None encodes the Gauss (1-leading) case
    leading_index: Exp
    leading_coeff: PadicApprox


def rho_leading_term(a: Series, D: int | None = None) -> LeadingDatum:
    """The term maximizing |a_I| rho^|I| (rho = p^(1/D)); among ties, the
    deglex-largest index wins.  D=None is the Gauss (rho -> 1) case."""
    best_key, best = None, None
    for e, c in a.terms:
        v = coeff_value(c)
        if v is None:
            continue
        key = Fraction(v) if D is None else Fraction(v) - Fraction(sum(e), D)
        if best_key is None or key < best_key or (
                key == best_key and deglex_compare(e, best[0]) == "greater"):
            best_key, best = key, (e, c)
    if best is None:
        raise ValueError("zero series has no leading term")
    return LeadingDatum(a, D, best[0], best[1])


# -- mod-p polynomial helpers (reduction to k[x_1..x_n]) ----------------------

def _modp_reduce(a: Series) -> dict:
    """Unit-content reduction of a nonzero series to an F_p polynomial."""
    g = a.gauss_value()
    if g is None:
        return {}
    p = a.descriptor.prime
    out = {}
    for e, c in a.terms:
        if coeff_value(c) == g:
            out[e] = c.unit % p
    return out


def _fp_lt(f: dict) -> Exp:
    return max(f, key=deglex_key)


def _fp_sub_mul(f: dict, coeff: int, mono: Exp, g: dict, p: int) -> dict:
    out = dict(f)
    for e, c in g.items():
        ne = tuple(a + b for a, b in zip(e, mono))
        out[ne] = (out.get(ne, 0) - coeff * c) % p
        if not out[ne]:
            del out[ne]
    return out


def _fp_divmod(f: dict, basis: list[dict], p: int) -> dict:
    """Remainder of multivariate division by the basis leading terms."""
    rem = dict(f)
    work = dict(f)
    rem = {}
    while work:
        lt = _fp_lt(work)
        for g in basis:
            glt = _fp_lt(g)
            if all(a <= b for a, b in zip(glt, lt)):
                mono = tuple(b - a for a, b in zip(glt, lt))
                q = work[lt] * pow(g[glt], -1, p) % p
                work = _fp_sub_mul(work, q, mono, g, p)
                break
        else:
            rem[lt] = work.pop(lt)
    return rem


def _fp_scale_shift(f: dict, coeff: int, mono: Exp, p: int) -> dict:
    return {tuple(a + b for a, b in zip(e, mono)): coeff * c % p
            for e, c in f.items()}


def _cof_combine(cof: dict, coeff: int, mono: Exp, other: dict, p: int) -> dict:
    """cof - coeff * x^mono * other, on cofactor maps gen_index -> F_p poly."""
    out = {i: dict(f) for i, f in cof.items()}
    for i, f in other.items():
        tgt = out.setdefault(i, {})
        for e, c in f.items():
            ne = tuple(a + b for a, b in zip(e, mono))
            tgt[ne] = (tgt.get(ne, 0) - coeff * c) % p
            if not tgt[ne]:
                del tgt[ne]
    return {i: f for i, f in out.items() if f}


def _fp_buchberger(gens: list[dict], p: int):
    """Buchberger completion over F_p with cofactor tracking.

    Returns (basis, cofactors): basis[k] = sum_i cofactors[k][i] * gens[i].
    """
    nvars = len(next(iter(gens[0])))
    zero_exp = (0,) * nvars
    basis = [dict(g) for g in gens]
    cof = [{i: {zero_exp: 1}} for i in range(len(gens))]
    pairs = [(i, j) for i in range(len(basis)) for j in range(i)]
    while pairs:
        i, j = pairs.pop(0)
        f, g = basis[i], basis[j]
        lf, lg = _fp_lt(f), _fp_lt(g)
        lcm = tuple(max(a, b) for a, b in zip(lf, lg))
        mf = tuple(l - a for l, a in zip(lcm, lf))
        mg = tuple(l - a for l, a in zip(lcm, lg))
        cf = pow(f[lf], -1, p)
        cg = pow(g[lg], -1, p)
        s = {}
        for e, c in _fp_scale_shift(f, cf, mf, p).items():
            s[e] = c
        for e, c in _fp_scale_shift(g, cg, mg, p).items():
            s[e] = (s.get(e, 0) - c) % p
        s = {e: c for e, c in s.items() if c}
        scof = _cof_combine({}, (-cf) % p, mf, cof[i], p)
        scof = _cof_combine(scof, cg, mg, cof[j], p)
        # divide s by the basis, updating the cofactor alongside
        work, wcof = s, scof
        rem, rcof = {}, wcof
        while work:
            lt = _fp_lt(work)
            for k, b in enumerate(basis):
                blt = _fp_lt(b)
                if all(a <= c for a, c in zip(blt, lt)):
                    mono = tuple(c - a for a, c in zip(blt, lt))
                    q = work[lt] * pow(b[blt], -1, p) % p
                    work = _fp_sub_mul(work, q, mono, b, p)
                    rcof = _cof_combine(rcof, q, mono, cof[k], p)
                    break
            else:
                rem[lt] = work.pop(lt)
        if rem:
            basis.append(rem)
            cof.append(rcof)
            pairs.extend((len(basis) - 1, k) for k in range(len(basis) - 1))
    return basis, cof


# -- completion and division --------------------------------------------------

def complete_leading_basis(gens: list[Series], D: int | None = None) -> list[LeadingDatum]:
    """A finite set of ideal elements whose leading terms divide every
    reachable leading term of the ideal.

    Buchberger completion runs on the mod-p reduction (where it is
    effective); each completed element's tracked cofactor combination is
    lifted termwise and applied to the original generators.  The lift's
    reduction equals the completed element, so its 1-leading index survives
    the lift.  The returned data carry the decay parameter at which
    rho-leading and 1-leading terms provably agree on the stored supports,
    so callers can retry at a larger decay after a failed division.
    """
    if not gens or any(g.is_zero() for g in gens):
        raise ValueError("generators must be nonzero")
    desc = gens[0].descriptor
    p, M = desc.prime, desc.precision

    # normalize generators to unit content
    work = []
    for g in gens:
        gv = g.gauss_value()
        work.append(g.scale(PadicApprox(p, 1, -gv, M)) if gv else g)

    reductions = [_modp_reduce(g) for g in work]
    if any(not r for r in reductions):
        raise PrecisionError("a generator reduced to zero mod p after scaling")
    basis_bar, cofactors = _fp_buchberger(reductions, p)
    out = list(work)
    for k in range(len(reductions), len(basis_bar)):
        lifted = Series.zero(desc)
        for i, poly in cofactors[k].items():
            lifted = lifted.add(work[i].mul(Series.from_ints(desc, poly)))
        if lifted.gauss_value() is None:
            continue
        out.append(lifted)
    stab = D if D is not None else max(stabilization_decay(g) for g in out)
    return [LeadingDatum(g, stab, rho_leading_term(g, None).leading_index,
                         rho_leading_term(g, None).leading_coeff)
            for g in out]


def stabilization_decay(a: Series) -> int:
    """Least integer D0 such that for all D >= D0 the rho-leading index of
    the stored support equals the 1-leading index."""
    lead = rho_leading_term(a, None)
    vI, I = coeff_value(lead.leading_coeff), lead.leading_index
    D0 = 1
    for e, c in a.terms:
        v = coeff_value(c)
        if v is None or e == I:
            continue
        if v > vI and sum(e) > sum(I):
            # need v - |e|/D > vI - |I|/D, i.e. D > (|e|-|I|)/(v-vI)
            need = Fraction(sum(e) - sum(I), v - vI)
            D0 = max(D0, int(need) + 1)
    return D0


def reduce_element(y: Series, z: Series, basis: list[LeadingDatum],
                   max_steps: int | None = None) -> Series:
    """Norm-controlled division: u with u - z in the ideal, |u| <= |y| and
    |u|_rho <= |z|_rho, by repeatedly cancelling the 1-leading term of
    (u - y) against a basis multiple."""
    desc = z.descriptor
    p, M = desc.prime, desc.precision
    gy = gauss_norm(y).value          # None encodes |y| = 0
    if max_steps is None:
        max_steps = 200 * (len(z.terms) + len(y.terms) + 8) + 40 * M
    u = z
    for _ in range(max_steps):
        gu = u.gauss_value()
        if gu is None:
            return u
        if gy is not None and gu >= gy:
            return u
        diff = u.sub(y)
        if diff.gauss_value() is None:
            return u
        lead = rho_leading_term(diff, None)
        for datum in basis:
            dl = datum.leading_index
            if all(a <= b for a, b in zip(dl, lead.leading_index)):
                mono = tuple(b - a for a, b in zip(dl, lead.leading_index))
                c = lead.leading_coeff.mul(datum.leading_coeff.invert())
                u = u.sub(datum.element.shift(mono).scale(c))
                break
        else:
            raise MembershipError(
                "leading term of the residual is not reducible by the basis; "
                "membership certificate failed at working precision")
    raise PrecisionError("division loop exceeded its step budget")


def reduces_to_zero(x: Series, basis: list[LeadingDatum],
                    max_steps: int = 10000) -> bool:
    """Ideal membership at working precision: full division leaves nothing."""
    work = x
    for _ in range(max_steps):
        if work.gauss_value() is None:
            return True
        lead = rho_leading_term(work, None)
        for datum in basis:
            dl = datum.leading_index
            if all(a <= b for a, b in zip(dl, lead.leading_index)):
                mono = tuple(b - a for a, b in zip(dl, lead.leading_index))
                c = lead.leading_coeff.mul(datum.leading_coeff.invert())
                work = work.sub(datum.element.shift(mono).scale(c))
                break
        else:
            return False
    raise PrecisionError("membership division exceeded its step budget")


# -- three circles -------------------------------------------------------------

@dataclass(frozen=True)
class HadamardResult:
    D_C: Fraction
    passed: bool
    value_A: Fraction | None
    value_B: Fraction | None
    value_C: Fraction | None


def hadamard_check(x: Series, D_A: int | None, D_B: int,
                   eps: Fraction) -> HadamardResult:
    """Interpolated decay D_C for rho_C = rho_B^eps and the convexity bound
    value_C(x) >= (1-eps) value_A(x) + eps value_B(x) on the window."""
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    D_C = Fraction(D_B) / eps
    vA = rho_value(x, D_A)
    vB = rho_value(x, D_B)
    vC = rho_value(x, D_C)
    if vA is None or vB is None or vC is None:
        return HadamardResult(D_C, True, vA, vB, vC)
    passed = vC >= (1 - eps) * vA + eps * vB
    return HadamardResult(D_C, passed, vA, vB, vC)
