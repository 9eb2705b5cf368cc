"""Sparse Smith-normal-form linear algebra over Z/p^N with valuation pivoting.

Kernel and cokernel computations throughout the engine reduce to this module.
Pivots are chosen at minimal valuation (so elimination never loses absolute
precision), preferring the lowest-ordered row/column so that reported
generators pivot on the lowest total exponent.  Elementary divisors at or
above the working precision are reported as "zero at precision"; a dimension
claim is certified by the gap between the largest surviving divisor and the
precision ceiling.
"""

from __future__ import annotations

from dataclasses import dataclass


def _val(x: int, p: int, N: int) -> int:
    """Valuation of a residue mod p^N (N if zero)."""
    if x == 0:
        return N
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return min(v, N)


@dataclass
class SnfResult:
    nrows: int
    ncols: int
    p: int
    N: int
    pivots: list           # list of (row, col, e) in pivoting order
    row_ops: list          # applied left, in order
    col_ops: list          # applied right, in order
    free_cols: list        # columns never pivoted (divisor N)
    free_rows: list        # rows never pivoted

    # -- certified quantities ---------------------------------------------

    def divisors(self) -> list:
        return sorted(e for _, _, e in self.pivots) + [self.N] * len(self.free_cols)

    def rank(self, cutoff: int | None = None) -> int:
        cutoff = self.N if cutoff is None else cutoff
        return sum(1 for _, _, e in self.pivots if e < cutoff)

    def certification_gap(self) -> int:
        """Distance from the largest certified divisor to the precision
        ceiling; the smaller the gap, the shakier the rank claim."""
        es = [e for _, _, e in self.pivots if e < self.N]
        return self.N - (max(es) if es else 0)

    # -- transform application ---------------------------------------------

    def apply_U(self, vec: dict) -> dict:
        """U @ vec for the accumulated row transform (D = U A V)."""
        v = dict(vec)
        mod = self.p ** self.N
        for op in self.row_ops:
            if op[0] == "rs":
                _, r, u = op
                if r in v:
                    v[r] = v[r] * u % mod
            else:
                _, src, dst, m = op
                if src in v:
                    v[dst] = (v.get(dst, 0) + m * v[src]) % mod
        return {k: x for k, x in v.items() if x}

    def apply_Uinv(self, vec: dict) -> dict:
        v = dict(vec)
        mod = self.p ** self.N
        for op in reversed(self.row_ops):
            if op[0] == "rs":
                _, r, u = op
                if r in v:
                    v[r] = v[r] * pow(u, -1, mod) % mod
            else:
                _, src, dst, m = op
                if src in v:
                    v[dst] = (v.get(dst, 0) - m * v[src]) % mod
        return {k: x for k, x in v.items() if x}

    def apply_V(self, vec: dict) -> dict:
        """V @ vec; feed unit vectors to read off kernel combinations."""
        v = dict(vec)
        mod = self.p ** self.N
        for op in reversed(self.col_ops):
            if op[0] == "cs":
                _, c, u = op
                if c in v:
                    v[c] = v[c] * u % mod
            else:
                _, src, dst, m = op
                if dst in v:
                    v[src] = (v.get(src, 0) + m * v[dst]) % mod
        return {k: x for k, x in v.items() if x}

    # -- materialized transforms (dict-of-rows sparse matrices) --------------

    def materialize_Uinv(self) -> dict:
        """Uinv as {row: {col: value}}; built by replaying inverse row ops."""
        mod = self.p ** self.N
        rows: dict[int, dict[int, int]] = {}

        def row(r):
            return rows.setdefault(r, {r: 1})

        for op in reversed(self.row_ops):
            if op[0] == "rs":
                _, r, u = op
                uinv = pow(u, -1, mod)
                rows[r] = {c: x * uinv % mod for c, x in row(r).items()}
            else:
                _, src, dst, m = op
                dd = dict(row(dst))
                for c, x in row(src).items():
                    dd[c] = (dd.get(c, 0) - m * x) % mod
                rows[dst] = {c: x for c, x in dd.items() if x}
        return rows

    def materialize_V_cols(self) -> dict:
        """V as {col: {row: value}} (column-major), replaying column ops."""
        mod = self.p ** self.N
        cols: dict[int, dict[int, int]] = {}

        def col(c):
            return cols.setdefault(c, {c: 1})

        for op in self.col_ops:
            if op[0] == "cs":
                _, c, u = op
                cols[c] = {r: x * u % mod for r, x in col(c).items()}
            else:
                _, src, dst, m = op
                dd = dict(col(dst))
                for r, x in col(src).items():
                    dd[r] = (dd.get(r, 0) + m * x) % mod
                cols[dst] = {r: x for r, x in dd.items() if x}
        return cols

    # -- derived spaces ------------------------------------------------------

    def kernel_basis(self, cutoff: int | None = None) -> list[dict]:
        """Columns of V above the zero (at precision) divisors."""
        cutoff = self.N if cutoff is None else cutoff
        cols = [c for _, c, e in self.pivots if e >= cutoff] + self.free_cols
        return [self.apply_V({c: 1}) for c in sorted(cols)]

    def coker_reps(self, cutoff: int | None = None) -> list[dict]:
        """Uinv images of the non-pivot rows: representatives of the cokernel."""
        cutoff = self.N if cutoff is None else cutoff
        rows = [r for r, _, e in self.pivots if e >= cutoff] + self.free_rows
        return [self.apply_Uinv({r: 1}) for r in sorted(rows)]

    def solve(self, b: dict, residual_cutoff: int | None = None):
        """Some x with A x = b at precision, or None if inconsistent.

        Residual entries with valuation >= residual_cutoff are tolerated.
        """
        cutoff = self.N if residual_cutoff is None else residual_cutoff
        bp = self.apply_U(b)
        x = {}
        for r, c, e in self.pivots:
            val = bp.pop(r, 0)
            if val == 0:
                continue
            if e >= cutoff:
                if _val(val, self.p, self.N) < cutoff:
                    return None
                continue
            if _val(val, self.p, self.N) < e:
                return None
            x[c] = val // self.p ** e
        for r, val in bp.items():
            if _val(val, self.p, self.N) < cutoff:
                return None
        return self.apply_V(x)


def sparse_snf(nrows: int, ncols: int, entries: dict, p: int, N: int,
               track: bool = True) -> SnfResult:
    """Reduce a sparse integer matrix mod p^N to diagonal form.

    ``entries``: {(row, col): int}.  Row/column indices are ints; the
    pivoting order prefers small indices, so callers should pre-order their
    bases (lowest total exponent first, deglex tiebreak).
    """
    mod = p ** N
    by_row: dict[int, dict[int, int]] = {}
    by_col: dict[int, dict[int, int]] = {}
    for (r, c), x in entries.items():
        x %= mod
        if x:
            by_row.setdefault(r, {})[c] = x
            by_col.setdefault(c, {})[r] = x

    active_rows = set(range(nrows))
    active_cols = set(range(ncols))
    colmin: dict[int, int] = {}
    touched: set[int] = set()

    def col_min(c: int) -> int:
        m = colmin.get(c)
        if m is None:
            d = by_col.get(c)
            m = min((_val(x, p, N) for x in d.values()), default=N) if d else N
            colmin[c] = m
        return m

    def set_entry(r: int, c: int, x: int):
        x %= mod
        if x:
            by_row.setdefault(r, {})[c] = x
            by_col.setdefault(c, {})[r] = x
        else:
            by_row.get(r, {}).pop(c, None)
            by_col.get(c, {}).pop(r, None)
        colmin.pop(c, None)
        touched.add(c)

    def pivot_at(c: int, level: int):
        col = by_col.get(c, {})
        r = min(rr for rr, x in col.items() if _val(x, p, N) == level)
        e = level
        # normalize the pivot row so the pivot becomes exactly p^e
        u = col[r] // p ** e % mod
        if u != 1:
            uinv = pow(u, -1, mod)
            for cc, x in list(by_row.get(r, {}).items()):
                set_entry(r, cc, x * uinv)
            if track:
                row_ops.append(("rs", r, uinv))
        # clear the pivot column with row operations
        for rr, x in list(by_col.get(c, {}).items()):
            if rr == r:
                continue
            m = x // p ** e % mod
            for cc, y in list(by_row.get(r, {}).items()):
                set_entry(rr, cc, by_row.get(rr, {}).get(cc, 0) - m * y)
            if track:
                row_ops.append(("ra", r, rr, (-m) % mod))
        # clear the pivot row with column operations
        for cc, x in list(by_row.get(r, {}).items()):
            if cc == c:
                continue
            m = x // p ** e % mod
            set_entry(r, cc, 0)
            if track:
                col_ops.append(("ca", c, cc, (-m) % mod))
        for cc in list(by_row.get(r, {})):
            set_entry(r, cc, 0)
        by_row.pop(r, None)
        active_rows.discard(r)
        active_cols.discard(c)
        by_col.pop(c, None)
        pivots.append((r, c, e))

    row_ops, col_ops, pivots = [], [], []

    for level in range(N):
        queue = sorted(c for c in active_cols if col_min(c) == level)
        pending: set[int] = set()
        qi = 0
        while qi < len(queue) or pending:
            if qi >= len(queue):
                queue = sorted(pending)
                pending.clear()
                qi = 0
                continue
            c = queue[qi]
            qi += 1
            if c not in active_cols or col_min(c) != level:
                continue
            touched.clear()
            pivot_at(c, level)
            pending.update(t for t in touched if t in active_cols)

    return SnfResult(nrows, ncols, p, N, pivots, row_ops, col_ops,
                     sorted(active_cols), sorted(active_rows))
