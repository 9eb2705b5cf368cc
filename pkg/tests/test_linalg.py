"""Sparse diagonal reduction against a dense elimination oracle."""

import random

from ovc.linalg import _val, sparse_snf


def dense_divisors(A, p, N):
    """Independent oracle: straightforward dense elimination."""
    A = [row[:] for row in A]
    mod = p ** N
    m, n = len(A), len(A[0]) if A else 0
    divs, rows, cols = [], list(range(m)), list(range(n))
    while rows and cols:
        best = None
        for i in rows:
            for j in cols:
                x = A[i][j] % mod
                if x:
                    v = _val(x, p, N)
                    if best is None or v < best[0]:
                        best = (v, i, j)
        if best is None:
            break
        v, i, j = best
        divs.append(v)
        u = pow(A[i][j] % mod // p ** v, -1, mod)
        for jj in cols:
            A[i][jj] = A[i][jj] * u % mod
        for ii in rows:
            if ii == i:
                continue
            x = A[ii][j] % mod
            if x:
                f = x // p ** v
                for jj in cols:
                    A[ii][jj] = (A[ii][jj] - f * A[i][jj]) % mod
        rows.remove(i)
        cols.remove(j)
    return sorted(divs) + [N] * len(cols)


def random_matrix(rng, p, N):
    m, n = rng.randint(1, 6), rng.randint(1, 6)
    A = [[rng.choice([0, 0, 1, 2, 5, 9, 27, 81, -3, 12]) % p ** N
          for _ in range(n)] for _ in range(m)]
    return A, {(i, j): A[i][j] for i in range(m) for j in range(n)
               if A[i][j] % p ** N}


def test_divisors_match_dense_oracle():
    rng = random.Random(2)
    p, N = 3, 6
    for _ in range(250):
        A, ent = random_matrix(rng, p, N)
        res = sparse_snf(len(A), len(A[0]), ent, p, N)
        assert res.divisors() == dense_divisors(A, p, N)


def test_kernel_and_solve():
    rng = random.Random(3)
    p, N = 3, 6
    mod = p ** N
    for _ in range(200):
        A, ent = random_matrix(rng, p, N)
        m, n = len(A), len(A[0])
        res = sparse_snf(m, n, ent, p, N)
        for k in res.kernel_basis():
            for i in range(m):
                assert sum(A[i][j] * k.get(j, 0) for j in range(n)) % mod == 0
        x0 = {j: rng.randint(0, mod - 1) for j in range(n)}
        b = {i: sum(A[i][j] * x0[j] for j in range(n)) % mod for i in range(m)}
        x = res.solve({i: v for i, v in b.items() if v})
        assert x is not None
        for i in range(m):
            assert (sum(A[i][j] * x.get(j, 0) for j in range(n))
                    - b[i]) % mod == 0


def test_solve_rejects_outside_image():
    p, N = 3, 5
    res = sparse_snf(2, 1, {(0, 0): 1}, p, N)
    assert res.solve({1: 1}) is None


def test_transforms_materialize_consistently():
    rng = random.Random(4)
    p, N = 3, 5
    mod = p ** N
    for _ in range(120):
        A, ent = random_matrix(rng, p, N)
        m, n = len(A), len(A[0])
        res = sparse_snf(m, n, ent, p, N)
        uinv = res.materialize_Uinv()
        b = {i: rng.randint(0, mod - 1) for i in range(m)}
        ub = res.apply_U(b)
        for r in range(m):
            row = uinv.get(r, {r: 1})
            s = sum(v * ub.get(c, 0) for c, v in row.items()) % mod
            assert s == b[r] % mod
        vc = res.materialize_V_cols()
        for j in range(n):
            direct = {k: v % mod for k, v in res.apply_V({j: 1}).items()
                      if v % mod}
            mat = {k: v % mod for k, v in vc.get(j, {j: 1}).items() if v % mod}
            assert direct == mat


def test_certification_gap():
    p, N = 3, 6
    res = sparse_snf(2, 2, {(0, 0): 1, (1, 1): 3 ** 4}, p, N)
    assert res.rank() == 2
    assert res.certification_gap() == N - 4
