"""Small exact linear algebra over the rationals (lists of lists of Fractions)."""
from fractions import Fraction


def mat(rows):
    return [[Fraction(x) for x in r] for r in rows]


def dot(u, v):
    return sum((Fraction(a) * b for a, b in zip(u, v)), Fraction(0))


def matvec(M, v):
    return [dot(r, v) for r in M]


def bilinear(G, u, v):
    return dot(u, matvec(G, v))


def _rref(M):
    """Row reduce in place; returns pivot columns."""
    rows, cols = len(M), len(M[0]) if M else 0
    piv = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        piv.append(c)
        r += 1
        if r == rows:
            break
    return piv


def rank(M):
    if not M:
        return 0
    return len(_rref([list(map(Fraction, r)) for r in M]))


def solve(A, b):
    """Unique solution of A x = b, or None if singular / inconsistent."""
    n = len(A[0]) if A else 0
    M = [list(map(Fraction, r)) + [Fraction(y)] for r, y in zip(A, b)]
    piv = _rref(M)
    if n in piv or len(piv) < n:
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(piv):
        x[c] = M[i][-1]
    return x


def solve_any(A, b):
    """Some solution of A x = b (free variables set to 0), or None."""
    n = len(A[0]) if A else 0
    M = [list(map(Fraction, r)) + [Fraction(y)] for r, y in zip(A, b)]
    piv = _rref(M)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(piv):
        x[c] = M[i][-1]
    return x


def nullspace(A, n=None):
    """Basis of the right kernel of A."""
    n = n if n is not None else len(A[0])
    if not A:
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    M = [list(map(Fraction, r)) for r in A]
    piv = _rref(M)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(piv):
            v[c] = -M[i][f]
        basis.append(v)
    return basis


def det(A):
    M = [list(map(Fraction, r)) for r in A]
    n = len(M)
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            d = -d
        d *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return d


def inertia(G):
    """(n_plus, n_minus, n_zero) of a symmetric matrix by congruence diagonalization."""
    M = [list(map(Fraction, r)) for r in G]
    n = len(M)
    diag = []
    k = 0
    while k < n:
        if M[k][k] == 0:
            j = next((j for j in range(k + 1, n) if M[j][j] != 0), None)
            if j is not None:
                M[k], M[j] = M[j], M[k]
                for r in M:
                    r[k], r[j] = r[j], r[k]
            else:
                j = next((j for j in range(k + 1, n) if M[k][j] != 0), None)
                if j is None:
                    diag.append(Fraction(0))
                    k += 1
                    continue
                # replace e_k by e_k + e_j to create a nonzero pivot
                M[k] = [a + b for a, b in zip(M[k], M[j])]
                for r in M:
                    r[k] += r[j]
        p = M[k][k]
        for i in range(k + 1, n):
            f = M[i][k] / p
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[k])]
        # the matching column operations only clear row k
        for i in range(k + 1, n):
            M[k][i] = Fraction(0)
        diag.append(p)
        k += 1
    return (sum(1 for d in diag if d > 0), sum(1 for d in diag if d < 0),
            sum(1 for d in diag if d == 0))


def is_negative_definite(G):
    n = len(G)
    if n == 0:
        return True
    for k in range(1, n + 1):
        d = det([r[:k] for r in G[:k]])
        if (d > 0) != (k % 2 == 0) or d == 0:
            return False
    return True
