"""Exact rational scalars, univariate polynomials and piecewise polynomials.

Polynomials are tuples of Fractions, lowest degree first.  A PiecewisePoly
stores each piece in the monomial basis centred at its left breakpoint, so
piece i is evaluated at lambda - b_i.
"""
from fractions import Fraction
from math import lcm

from .errors import DegenerateInput, DomainError, SchemaError

Q = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


def q(x) -> Fraction:
    """Coerce an int / Fraction / "p/q" string to a Fraction.  Floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SchemaError("boolean is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"not an exact rational: {x!r}")
    raise SchemaError(f"not an exact rational: {x!r} (floats are not accepted)")


def fmt(x: Fraction) -> str:
    """Serialize as "p/q", or "p" when q = 1."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def qpow(x: Fraction, k: int) -> Fraction:
    return Fraction(x) ** k


# -- polynomials ------------------------------------------------------------

def ptrim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(Fraction(c) for c in p)


def padd(a, b):
    n = max(len(a), len(b))
    return ptrim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def pscale(a, s):
    return ptrim([s * c for c in a])


def psub(a, b):
    return padd(a, pscale(b, -1))


def pmul(a, b):
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return ptrim(out)


def peval(p, x):
    acc = ZERO
    for c in reversed(p):
        acc = acc * x + c
    return acc


def pderiv(p):
    return ptrim([i * p[i] for i in range(1, len(p))])


def pantideriv(p):
    return ptrim([ZERO] + [p[i] / (i + 1) for i in range(len(p))])


def pshift(p, h):
    """Coefficients of x -> p(x + h)."""
    out = ()
    for c in reversed(p):
        out = padd(pmul(out, (h, ONE)), (c,))
    return out


def pdivmod(a, b):
    a = list(ptrim(a))
    b = ptrim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    quo = [ZERO] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        k = len(a) - len(b)
        c = a[-1] / b[-1]
        quo[k] = c
        for i, bc in enumerate(b):
            a[i + k] -= c * bc
        a = list(ptrim(a))
    return ptrim(quo), ptrim(a)


def pgcd(a, b):
    a, b = ptrim(a), ptrim(b)
    while b:
        a, b = b, pdivmod(a, b)[1]
    if not a:
        return a
    return pscale(a, 1 / a[-1])


def interpolate(xs, ys, center=ZERO):
    """Lagrange interpolation, returned in the basis centred at `center`."""
    xs = [Fraction(x) - center for x in xs]
    out = ()
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        term = (Fraction(yi),)
        for j, xj in enumerate(xs):
            if j != i:
                term = pmul(term, (-xj / (xi - xj), 1 / (xi - xj)))
        out = padd(out, term)
    return out


def _sturm_chain(p):
    chain = [p, pderiv(p)]
    while chain[-1]:
        r = pdivmod(chain[-2], chain[-1])[1]
        if not r:
            break
        chain.append(pscale(r, -1))
    return chain


def _variations(chain, x):
    signs = [s for s in (peval(c, x) for c in chain) if s != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def smallest_root(p, lo, hi):
    """Smallest root of p in (lo, hi], exact, or None.

    Raises DomainError if that root is irrational.
    """
    p = ptrim(p)
    if not p:
        raise DegenerateInput("zero polynomial has no isolated root")
    if len(p) == 1:
        return None
    sq = pdivmod(p, pgcd(p, pderiv(p)))[0]
    chain = _sturm_chain(sq)

    def count(a, b):
        return _variations(chain, a) - _variations(chain, b)

    lo, hi = Fraction(lo), Fraction(hi)
    if peval(sq, lo) == 0:
        raise DegenerateInput("root at the left end of the interval")
    if count(lo, hi) == 0:
        return None
    den = lcm(*[c.denominator for c in sq])
    lead = abs(sq[-1] * den)
    bound = Fraction(1, 2 * int(lead) ** 2)
    while True:
        if peval(sq, hi) == 0 and count(lo, hi) == 1:
            return hi
        if hi - lo < bound:
            break
        mid = (lo + hi) / 2
        if count(lo, mid) > 0:
            hi = mid
        else:
            lo = mid
    cand = ((lo + hi) / 2).limit_denominator(int(lead))
    if lo < cand <= hi and peval(sq, cand) == 0:
        return cand
    raise DomainError(f"first root in ({float(lo)}, {float(hi)}] is irrational")


# -- piecewise polynomials ----------------------------------------------------

class PiecewisePoly:
    """Continuous piecewise polynomial on [0, inf) with a constant tail."""

    def __init__(self, breakpoints, pieces, tail, max_degree=None):
        bps = [Fraction(b) for b in breakpoints]
        if not bps or bps[0] != 0:
            raise DomainError("breakpoints must start at 0")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(pieces) != len(bps) - 1:
            raise DomainError("need one piece per interval")
        self.breakpoints = tuple(bps)
        self.pieces = tuple(ptrim(p) for p in pieces)
        self.tail = Fraction(tail)
        if max_degree is not None:
            for p in self.pieces:
                if len(p) - 1 > max_degree:
                    raise DomainError(f"piece of degree {len(p) - 1} exceeds {max_degree}")
        self._check_continuity()

    def _check_continuity(self):
        for i, p in enumerate(self.pieces):
            right = peval(p, self.breakpoints[i + 1] - self.breakpoints[i])
            nxt = self.pieces[i + 1] if i + 1 < len(self.pieces) else (self.tail,)
            if peval(nxt, ZERO) != right:
                raise DomainError(f"discontinuity at breakpoint {fmt(self.breakpoints[i + 1])}")

    @classmethod
    def constant(cls, c):
        return cls([ZERO], [], c)

    def _locate(self, x):
        bps = self.breakpoints
        if x >= bps[-1]:
            return None
        for i in range(len(bps) - 1):
            if x < bps[i + 1]:
                return i
        return None

    def __call__(self, x):
        x = Fraction(x)
        if x < 0:
            raise DomainError("piecewise polynomial is defined on [0, inf)")
        i = self._locate(x)
        if i is None:
            return self.tail
        return peval(self.pieces[i], x - self.breakpoints[i])

    def left_limit(self, x):
        x = Fraction(x)
        for i in range(len(self.pieces)):
            if self.breakpoints[i] < x <= self.breakpoints[i + 1]:
                return peval(self.pieces[i], x - self.breakpoints[i])
        return self(x)

    @property
    def end(self):
        return self.breakpoints[-1]

    def degree(self):
        return max([len(p) - 1 for p in self.pieces] + [0])

    def scale(self, s):
        s = Fraction(s)
        return PiecewisePoly(self.breakpoints, [pscale(p, s) for p in self.pieces], s * self.tail)

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, PiecewisePoly) and self.breakpoints == other.breakpoints
                and self.pieces == other.pieces and self.tail == other.tail)

    def __repr__(self):
        return f"PiecewisePoly({[fmt(b) for b in self.breakpoints]}, {len(self.pieces)} pieces, tail={fmt(self.tail)})"

    def to_json(self):
        return {
            "breakpoints": [fmt(b) for b in self.breakpoints],
            "pieces": [[fmt(c) for c in p] for p in self.pieces],
            "tail": fmt(self.tail),
        }


def integrate(f: PiecewisePoly, a, b) -> Fraction:
    """Exact integral of f over [a, b]."""
    a, b = Fraction(a), Fraction(b)
    if a > b:
        raise DomainError("reversed integration bounds")
    if a < 0:
        raise DomainError("integration below 0")
    total = ZERO
    bps = f.breakpoints
    for i, p in enumerate(f.pieces):
        lo, hi = max(a, bps[i]), min(b, bps[i + 1])
        if lo < hi:
            P = pantideriv(p)
            total += peval(P, hi - bps[i]) - peval(P, lo - bps[i])
    lo = max(a, bps[-1])
    if lo < b:
        total += f.tail * (b - lo)
    return total


def first_nonneg_root(f: PiecewisePoly):
    """Smallest lambda >= 0 with f(lambda) = 0, or the string "none"."""
    if f(ZERO) <= 0:
        raise DegenerateInput("f(0) <= 0: the starting class is not big")
    bps = f.breakpoints
    for i, p in enumerate(f.pieces):
        r = smallest_root(p, ZERO, bps[i + 1] - bps[i])
        if r is not None:
            return bps[i] + r
    if f.tail > 0:
        return "none"
    return bps[-1]
