"""Unipotence algorithms over windowed Robba rings.

Given a module whose connection is strictly triangular over the ring (a
unipotent filtration certificate), extract a basis in which the dlog operator
D acts through a constant nilpotent matrix X, bound the denominators showing
up in the horizontal-section iteration, run that iteration, and read off
H^0/H^1 from the kernel and cokernel of X on constant vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BadCertificateError, PrecisionError
from .linalg import sparse_snf
from .modules import ModuleVector, SeriesMatrix, SigmaNablaModule, apply_D
from .padics import PadicApprox, int_valuation, make_scalar
from .report import CohomologyReport, DegreeData
from .series import Series, dlog_antiderivative, t_d_dt, w_slope


@dataclass(frozen=True)
class UnipotentData:
    module: SigmaNablaModule
    change_of_basis: SeriesMatrix     # U: new basis = old basis * U
    nilpotent_X: tuple                # rank x rank PadicApprox constants
    nilpotency_e: int

    def verify(self, digits: int | None = None) -> bool:
        """N U + t dU/dt = U X at the working precision."""
        mod = self.module
        ring = mod.ring
        digits = ring.precision if digits is None else digits
        U = self.change_of_basis
        X = SeriesMatrix.make(ring, tuple(
            tuple(Series.make(ring, {ring.zero_exp(): c}) for c in row)
            for row in self.nilpotent_X))
        lhs = mod.connection.mul(U).add(U.map(lambda s: t_d_dt(s)))
        return lhs.sub(U.mul(X)).is_zero_at_precision(digits)

    def denominator_height(self) -> int:
        """h = max(0, -min vp(X)) over the constant matrix."""
        h = 0
        for row in self.nilpotent_X:
            for c in row:
                if c.val is not None:
                    h = max(h, -c.val)
        return h


def _constant_part(s: Series) -> PadicApprox:
    c = s.coeff(s.descriptor.zero_exp())
    if isinstance(c, Series):
        raise BadCertificateError("relative coefficients not supported here")
    return c


def _is_strictly_upper(N: SeriesMatrix, digits: int) -> bool:
    n = N.nrows
    for i in range(n):
        for j in range(n):
            if j > i:
                continue
            g = N.rows[i][j].gauss_value()
            if g is not None and g < digits:
                return False
    return True


def strongly_unipotent_basis(module: SigmaNablaModule,
                             filtration: SeriesMatrix | None = None
                             ) -> UnipotentData:
    """Turn a unipotent filtration into a basis where D acts by constants.

    ``filtration`` columns express a unipotent basis in the module's basis
    (identity if omitted); in that basis the connection must be strictly
    upper triangular over the ring (column j supported on rows < j).  Each
    offending entry splits into its constant part plus a dlog-antiderivable
    part which is pushed into the change of basis.
    """
    ring = module.ring
    if not ring.is_robba():
        raise BadCertificateError("unipotence algorithms need a robba-kind ring")
    n = module.rank
    M = ring.precision
    U = filtration if filtration is not None else SeriesMatrix.identity(ring, n)
    if filtration is not None:
        Uinv = U.inverse()
        N = Uinv.mul(module.connection).mul(U).add(
            Uinv.mul(U.map(lambda s: t_d_dt(s))))
    else:
        N = module.connection
    if not _is_strictly_upper(N, M):
        raise BadCertificateError(
            "connection is not strictly triangular in the supplied filtration")

    rows = [list(r) for r in N.rows]
    urows = [list(r) for r in U.rows]
    for i in range(n):
        for l in range(i - 1, -1, -1):
            a = rows[l][i]
            b = _constant_part(a)
            rest = a.sub(Series.make(ring, {ring.zero_exp(): b}))
            if rest.is_zero():
                continue
            e = dlog_antiderivative(rest)
            # basis change B_i <- B_i - e * B_l
            for r in range(n):
                rows[r][i] = rows[r][i].sub(e.mul(rows[r][l]))
            for c in range(n):
                rows[l][c] = rows[l][c].add(e.mul(rows[i][c]))
            rows[l][i] = rows[l][i].sub(rest)
            for r in range(n):
                urows[r][i] = urows[r][i].sub(e.mul(urows[r][l]))

    X = []
    for i in range(n):
        xrow = []
        for j in range(n):
            s = rows[i][j]
            c = _constant_part(s)
            nonconst = s.sub(Series.make(ring, {ring.zero_exp(): c}))
            g = nonconst.gauss_value()
            if g is not None and g < M:
                raise PrecisionError(
                    "non-constant residue survived basis extraction")
            xrow.append(c)
        X.append(tuple(xrow))
    X = tuple(X)

    e = _nilpotency_index(X, ring.prime, M)
    return UnipotentData(module, SeriesMatrix.make(ring, urows), X, e)


def _scalar_matmul(A, B, p, M):
    n = len(A)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = PadicApprox.zero(p)
            for k in range(n):
                acc = acc.add(A[i][k].mul(B[k][j]))
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def _nilpotency_index(X, p, M) -> int:
    n = len(X)
    power = X
    for e in range(1, n + 1):
        if all(c.is_zero() or (c.val is not None and c.val >= M)
               for row in power for c in row):
            return e
        power = _scalar_matmul(power, X, p, M)
    if all(c.is_zero() or (c.val is not None and c.val >= M)
           for row in power for c in row):
        return n + 1
    raise BadCertificateError("extracted matrix is not nilpotent at precision")


# -- the elementary denominator bound -----------------------------------------

def _ceil_log(n: int, p: int) -> int:
    a, power = 0, 1
    while power < n:
        power *= p
        a += 1
    return a


def bounddenom(m: int, l: int, e: int, p: int, verify: bool = False):
    """Bound (e-1)*ceil(log_p(|m|+l)) on the power of p clearing the
    denominators of prod_{i=1..l} (m+x+i)/i in Q_p[x]/(x^e).

    In verify mode also computes the exact least exponent from the product.
    """
    if l < 1 or e < 1:
        raise ValueError("l and e must be positive")
    bound = (e - 1) * _ceil_log(abs(m) + l, p)
    if not verify:
        return bound
    # numerator polynomial prod (m+i+x) in Z[x]/(x^e), exact integers
    num = [1] + [0] * (e - 1)
    for i in range(1, l + 1):
        nxt = [0] * e
        for j in range(e):
            nxt[j] = num[j] * (m + i)
            if j:
                nxt[j] += num[j - 1]
        num = nxt
    vfact = sum(l // p ** k for k in range(1, _ceil_log(l, p) + 2))
    exact = 0
    for c in num:
        if c:
            exact = max(exact, vfact - int_valuation(c, p))
    return bound, exact


# -- horizontal sections --------------------------------------------------------

@dataclass(frozen=True)
class IterationLog:
    steps: list                     # w_slope values of successive differences
    headroom_used: int
    result: ModuleVector


def horizontal_iterate(data: UnipotentData, w: ModuleVector, L: int
                       ) -> IterationLog:
    """f_0 = D^(e-1) w, then f_l = (1 - D^2/l^2)^e f_(l-1) up to l = L.

    Dividing by l^2 costs 2 vp(l) digits per application; the run aborts when
    the cumulative 2e * sum vp(l) exceeds the working precision headroom.
    """
    module = data.module
    ring = module.ring
    p, M = ring.prime, ring.precision
    e = data.nilpotency_e
    need = 2 * e * sum(int_valuation(l, p) for l in range(1, L + 1) if l % p == 0)
    if need >= M:
        raise PrecisionError(
            f"headroom report: iteration to L={L} needs {need} digits "
            f"of headroom but only {M} are available")

    f = w
    for _ in range(e - 1):
        f = apply_D(module, f)
    logs = []
    for l in range(1, L + 1):
        prev = f
        acc = [Series.zero(ring) for _ in range(module.rank)]
        dpow = prev
        for k in range(e + 1):
            c = make_scalar(
                Fraction((-1) ** k * math.comb(e, k), l ** (2 * k)), p, M)
            for idx in range(module.rank):
                acc[idx] = acc[idx].add(dpow.coords[idx].scale(c))
            if k < e:
                dpow = apply_D(module, apply_D(module, dpow))
        f = ModuleVector(module, tuple(acc))
        diff = tuple(a.sub(b) for a, b in zip(f.coords, prev.coords))
        vals = [w_slope(dcoord, ring.slope).value for dcoord in diff]
        vals = [v for v in vals if v is not None]
        logs.append(min(vals) if vals else None)
    return IterationLog(logs, need, f)


# -- cohomology of unipotent modules --------------------------------------------

def _scalar_matrix_snf(X, p, M):
    """SNF of a constant matrix given as PadicApprox entries."""
    n = len(X)
    vals = [c.val for row in X for c in row if c.val is not None]
    shift = -min(vals) if vals and min(vals) < 0 else 0
    N = M + shift
    mod = p ** N
    entries = {}
    for i in range(n):
        for j, c in enumerate(X[i]):
            if c.val is None:
                continue
            entries[(i, j)] = c.unit * p ** (c.val + shift) % mod
    return sparse_snf(n, n, entries, p, N), shift, N


def h0_h1_unipotent(data: UnipotentData) -> CohomologyReport:
    """H^0 = ker X and H^1 = coker X on constant vectors (tensor dt/t),
    reported in the module's original basis."""
    module = data.module
    ring = module.ring
    p, M = ring.prime, ring.precision
    n = module.rank
    snf, shift, N = _scalar_matrix_snf(data.nilpotent_X, p, M)
    U = data.change_of_basis

    def to_vectors(int_vecs):
        out = []
        for v in int_vecs:
            const = []
            for i in range(n):
                x = v.get(i, 0)
                if x:
                    val = 0
                    while x % p == 0:
                        x //= p
                        val += 1
                    const.append(PadicApprox(p, x % p ** max(N - val, 1), val,
                                             max(N - val, 1)))
                else:
                    const.append(PadicApprox.zero(p))
            coords = U.apply(tuple(
                Series.make(ring, {ring.zero_exp(): c}) for c in const))
            out.append(ModuleVector(module, coords))
        return out

    kernel = to_vectors(snf.kernel_basis())
    coker = to_vectors(snf.coker_reps())
    degrees = {
        0: DegreeData(len(kernel), tuple(kernel), len(kernel)),
        1: DegreeData(len(coker), tuple(coker), len(coker)),
    }
    return CohomologyReport("unipotent-h0-h1", degrees, snf.certification_gap())


@dataclass(frozen=True)
class PlusQuotientResult:
    passed: bool
    injective: bool
    surjective: bool
    modes_checked: int
    worst_divisor: int   # digits lost inverting the worst mode block


def pluscohom_check(data: UnipotentData) -> PlusQuotientResult:
    """The quotient map by the plus-part span is bijective at precision.

    In the strongly unipotent basis the map acts per negative mode m through
    the block m I + X, so bijectivity over K amounts to every block having
    full certified rank; the worst elementary divisor measures the digits a
    preimage costs."""
    module = data.module
    ring = module.ring
    p, M = ring.prime, ring.precision
    n = module.rank
    lo, _ = ring.window[0]
    ok = True
    worst = 0
    modes = 0
    for m in range(lo, 0):
        modes += 1
        block = tuple(
            tuple(data.nilpotent_X[i][j].add(
                make_scalar(m, p, M) if i == j else PadicApprox.zero(p))
                for j in range(n))
            for i in range(n))
        snf, shift, N = _scalar_matrix_snf(block, p, M)
        if snf.rank() < n:
            ok = False
        else:
            worst = max(worst, max(e for _, _, e in snf.pivots) - shift)
    return PlusQuotientResult(ok, ok, ok, modes, worst)
