"""Surface backend: exact intersection theory on a smooth projective surface.

Zariski decompositions are computed by the usual finite iteration over a
user-supplied list of negative curves and certified afterwards.  Volume
curves lambda -> vol(pi^*w - lambda F) are built chamber by chamber: a
lexicographic perturbation identifies the Zariski support just to the right
of the current breakpoint, the support stays fixed until an affine condition
changes sign, and each quadratic piece is re-derived from sampled volumes.
"""
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .errors import ConfigError, ConsistencyError, DomainError, PositivityError, SchemaError
from .numclass import NumClass, VarietyModel
from .scalars import PiecewisePoly, fmt, interpolate, peval, ptrim


class NotPsef(DomainError):
    pass


class Eps:
    """a + b*eps with eps an infinitesimal > 0; ordered lexicographically."""
    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a, self.b = Fraction(a), Fraction(b)

    def __add__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return Eps(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return Eps(self.a - o.a, self.b - o.b)

    def __rsub__(self, o):
        return Eps(o) - self

    def __mul__(self, s):
        return Eps(self.a * s, self.b * s)

    __rmul__ = __mul__

    def _t(self):
        return (self.a, self.b)

    def __lt__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return self._t() < o._t()

    def __le__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return self._t() <= o._t()

    def __gt__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return self._t() > o._t()

    def __ge__(self, o):
        o = o if isinstance(o, Eps) else Eps(o)
        return self._t() >= o._t()


def _form(G, u, v):
    return sum((G[i][j] * u[i] * v[j] for i in range(len(u)) for j in range(len(v)) if G[i][j]),
               Fraction(0) if not isinstance(u[0], Eps) else Eps(0))


def _solve_eps(A, rhs):
    if rhs and isinstance(rhs[0], Eps):
        xa = linalg.solve(A, [r.a for r in rhs])
        xb = linalg.solve(A, [r.b for r in rhs])
        return [Eps(a, b) for a, b in zip(xa, xb)]
    return linalg.solve(A, rhs)


@dataclass(frozen=True, order=True)
class SurfaceValuation:
    """t * ord_D for a prime divisor D on the base (chain None) or on a chain's top model."""
    chain: str
    divisor: str
    t: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "t", Fraction(self.t))
        object.__setattr__(self, "chain", self.chain or "")
        if self.t < 0:
            raise DomainError("valuation scale must be >= 0")

    def scaled(self, s):
        return SurfaceValuation(self.chain, self.divisor, self.t * s)

    def encode(self):
        d = {"divisor": self.divisor, "t": fmt(self.t)}
        if self.chain:
            d["chain"] = self.chain
        return d

    def key(self):
        return (self.chain, self.divisor, self.t)

    def label(self):
        base = f"ord_{self.divisor}" + (f"@{self.chain}" if self.chain else "")
        return base if self.t == 1 else f"{fmt(self.t)}*{base}"


class SurfaceModel(VarietyModel):
    kind = "surface"
    dim = 2
    cone_assumption = "extremal_curves are assumed to generate the Mori cone (not verified)"

    def __init__(self, names, gram, canonical, primes, boundary=None, negative_curves=(),
                 extremal_curves=(), reference_ample=None, omega=None, chains=None, name="surface"):
        self.name = name
        self.backend_id = f"surface:{name}"
        self.names = list(names)
        self.rank = len(self.names)
        G = linalg.mat(gram)
        if len(G) != self.rank or any(len(r) != self.rank for r in G):
            raise SchemaError("gram matrix shape does not match the basis")
        if any(G[i][j] != G[j][i] for i in range(self.rank) for j in range(self.rank)):
            raise SchemaError("gram matrix is not symmetric")
        pos, neg, zero = linalg.inertia(G)
        if (pos, neg, zero) != (1, self.rank - 1, 0):
            raise SchemaError(f"intersection form has signature ({pos}, {neg}, {zero}); "
                              f"expected (1, {self.rank - 1}) and nondegenerate")
        self.G = G
        self.K_X = self.cls(canonical)
        self.primes = {}
        for pname, coords in primes.items():
            self.primes[pname] = self.cls(coords)
        self.boundary = {k: Fraction(b) for k, b in (boundary or {}).items()}
        for k in self.boundary:
            if k not in self.primes:
                raise SchemaError(f"boundary refers to unknown prime divisor {k!r}")
        self.negative_curves = [self._curve(c) for c in negative_curves]
        for c in self.negative_curves:
            if self.dot(c, c) >= 0:
                raise SchemaError(f"negative curve {c.to_json()} has self-intersection >= 0")
        self.extremal_curves = [self._curve(c) for c in extremal_curves]
        self.reference_ample = self.cls(reference_ample) if reference_ample is not None else None
        self.omega = self.cls(omega) if omega is not None else None
        if self.reference_ample is None:
            self.reference_ample = self.omega
        if self.reference_ample is None:
            raise SchemaError("surface model needs a reference ample class")
        ref = self.reference_ample
        if not (all(self.dot(ref, c) > 0 for c in self.extremal_curves) and self.dot(ref, ref) > 0):
            raise SchemaError("reference ample class fails the ampleness test")
        if self.omega is not None and self.ample_failure(self.omega):
            raise SchemaError("default omega is not ample")
        self.chain_specs = dict(chains or {})
        self._chains = {}

    def _curve(self, c):
        if isinstance(c, str):
            if c not in self.primes:
                raise SchemaError(f"unknown curve name {c!r}")
            return self.primes[c]
        return self.cls(c)

    def dot(self, u: NumClass, v: NumClass):
        return linalg.bilinear(self.G, u.coords, v.coords)

    @property
    def canonical(self):
        out = self.K_X
        for k, b in self.boundary.items():
            out = out + b * self.primes[k]
        return out

    def default_omega(self):
        return self.omega

    def top_power(self, w):
        return self.dot(w, w)

    def mixed(self, w, theta):
        return self.dot(w, theta)

    def curve_pairings(self, theta):
        return [self.dot(theta, c) for c in self.extremal_curves]

    def ample_failure(self, theta):
        if not self.extremal_curves:
            return "no extremal curves supplied"
        for c in self.extremal_curves:
            if self.dot(theta, c) <= 0:
                return f"theta.C <= 0 for extremal curve {c.to_json()}"
        if self.dot(theta, theta) <= 0:
            return "theta^2 <= 0"
        if self.dot(theta, self.reference_ample) <= 0:
            return "theta.omega0 <= 0"
        return None

    # -- Zariski decomposition ------------------------------------------------

    def _zariski_coords(self, alpha):
        """Fujita iteration on raw coordinates (Fractions or Eps).  Returns (P, support, x)."""
        G = self.G
        negs = [c.coords for c in self.negative_curves]
        S = []
        P, x = list(alpha), []
        while True:
            if S:
                GS = [[linalg.bilinear(G, negs[i], negs[j]) for j in S] for i in S]
                if not linalg.is_negative_definite(GS):
                    raise NotPsef("not pseudoeffective: support is not negative definite")
                rhs = [_form(G, alpha, negs[i]) for i in S]
                x = _solve_eps(GS, rhs)
                P = list(alpha)
                for xi, i in zip(x, S):
                    P = [p - xi * c for p, c in zip(P, negs[i])]
            new = [i for i in range(len(negs)) if i not in S and _form(G, P, negs[i]) < 0]
            if not new:
                break
            S = S + new
        for c in self.extremal_curves:
            if _form(G, P, c.coords) < 0:
                raise NotPsef("not pseudoeffective: no nef remainder from the supplied negative curves")
        if any(xi < 0 for xi in x):
            raise NotPsef("not pseudoeffective: negative part has a negative coefficient")
        return P, S, x

    def zariski(self, alpha: NumClass):
        """(P, N) with alpha = P + N; the certificate is checked exactly."""
        self.check(alpha)
        P, S, x = self._zariski_coords(alpha.coords)
        Pc = self.cls(P)
        N = self.zero()
        for xi, i in zip(x, S):
            N = N + xi * self.negative_curves[i]
        self.certify(Pc, N, [(xi, self.negative_curves[i]) for xi, i in zip(x, S)])
        return Pc, N

    def certify(self, P, N, parts):
        if any(self.dot(P, c) < 0 for c in self.extremal_curves + self.negative_curves):
            raise ConsistencyError("Zariski certificate: P is not nef")
        if any(xi < 0 for xi, _ in parts):
            raise ConsistencyError("Zariski certificate: N has a negative coefficient")
        supp = [c for xi, c in parts if xi > 0]
        if not linalg.is_negative_definite([[self.dot(a, b) for b in supp] for a in supp]):
            raise ConsistencyError("Zariski certificate: support of N is not negative definite")
        if self.dot(P, N) != 0 or any(self.dot(P, c) != 0 for c in supp):
            raise ConsistencyError("Zariski certificate: P.N != 0")
        return True

    def vol_big(self, alpha):
        try:
            P, _ = self.zariski(alpha)
        except NotPsef:
            return Fraction(0)
        return self.dot(P, P)

    def grad_vol(self, alpha, theta):
        """2 (P . theta); 0 outside Psef by convention."""
        self.check(theta)
        try:
            P, _ = self.zariski(alpha)
        except NotPsef:
            return Fraction(0)
        return 2 * self.dot(P, theta)

    # -- volume curves --------------------------------------------------------

    def chambers(self, alpha0: NumClass, F: NumClass):
        """Zariski chambers along lambda -> alpha0 - lambda F, lambda >= 0.

        Returns (T, [(lam0, lam1, P0, P1)]) where P(lambda) = P0 + lambda P1 on [lam0, lam1].
        """
        G = self.G
        a0, f = alpha0.coords, F.coords
        curves = [c.coords for c in self.negative_curves + self.extremal_curves]
        out = []
        lam = Fraction(0)
        for _ in range(10 * (len(curves) + 2)):
            point = [Eps(a - lam * b, -b) for a, b in zip(a0, f)]
            try:
                _, S, _ = self._zariski_coords(point)
            except NotPsef:
                return lam, out
            negs = [self.negative_curves[i].coords for i in S]
            if S:
                GS = [[linalg.bilinear(G, u, v) for v in negs] for u in negs]
                x0 = linalg.solve(GS, [linalg.bilinear(G, a0, c) for c in negs])
                x1 = linalg.solve(GS, [-linalg.bilinear(G, f, c) for c in negs])
            else:
                x0 = x1 = []
            P0, P1 = list(a0), [-b for b in f]
            for u, v, c in zip(x0, x1, negs):
                P0 = [p - u * ci for p, ci in zip(P0, c)]
                P1 = [p - v * ci for p, ci in zip(P1, c)]
            conds = [(linalg.bilinear(G, P0, c), linalg.bilinear(G, P1, c)) for c in curves]
            conds += list(zip(x0, x1))
            roots = [-c0 / c1 for c0, c1 in conds if c1 < 0 and -c0 / c1 > lam]
            if not roots:
                raise DomainError("volume curve never leaves the big cone (is F effective?)")
            nxt = min(roots)
            out.append((lam, nxt, P0, P1))
            lam = nxt
        raise ConsistencyError("chamber walk did not terminate")

    def vol_curve_classes(self, alpha0, F):
        T, ch = self.chambers(alpha0, F)
        bps = [Fraction(0)]
        pieces = []
        for lam0, lam1, P0, P1 in ch:
            w = lam1 - lam0
            xs = [lam0 + w * k / 4 for k in (1, 2, 3)]
            ys = [self.vol_big(alpha0 - x * F) for x in xs]
            piece = interpolate(xs, ys, center=lam0)
            check = lam0 + w / 5
            if peval(piece, check - lam0) != self.vol_big(alpha0 - check * F):
                raise ConsistencyError("volume piece failed verification at a fourth point")
            # symbolic P(lambda)^2 on the chamber must agree with the sampled piece
            Pl = [p + lam0 * d for p, d in zip(P0, P1)]
            sym = ptrim([linalg.bilinear(self.G, Pl, Pl), 2 * linalg.bilinear(self.G, Pl, P1),
                         linalg.bilinear(self.G, P1, P1)])
            if sym != piece:
                raise ConsistencyError("chamber formula disagrees with sampled volumes")
            bps.append(lam1)
            pieces.append(piece)
        if not pieces:
            raise PositivityError("starting class is not big")
        try:
            return PiecewisePoly(bps, pieces, 0, max_degree=2)
        except DomainError as e:
            raise ConsistencyError(f"volume curve is not continuous: {e}")

    def grad_vol_curve_classes(self, alpha0, F, theta):
        T, ch = self.chambers(alpha0, F)
        bps = [Fraction(0)]
        pieces = []
        for lam0, lam1, P0, P1 in ch:
            Pl = [p + lam0 * d for p, d in zip(P0, P1)]
            pieces.append(ptrim([2 * linalg.bilinear(self.G, Pl, theta.coords),
                                 2 * linalg.bilinear(self.G, P1, theta.coords)]))
            bps.append(lam1)
        # may jump to 0 at T, so this is returned as raw pieces rather than a PiecewisePoly
        return bps, pieces

    # -- blowups and valuations -----------------------------------------------

    def chain(self, name):
        if not name:
            return self
        if name not in self._chains:
            if name not in self.chain_specs:
                raise ConfigError(f"unknown blowup chain {name!r}")
            self._chains[name] = build_chain(self, name, self.chain_specs[name])
        return self._chains[name]

    def pullback(self, top, w: NumClass):
        if top is self:
            return w
        self.check(w)
        return top.cls(list(w.coords) + [0] * (top.rank - self.rank))

    def _resolve(self, v: SurfaceValuation):
        top = self.chain(v.chain)
        if v.divisor not in top.primes:
            raise ConfigError(f"unknown prime divisor {v.divisor!r} on model {top.name}")
        return top, top.primes[v.divisor]

    def log_discrepancy(self, v: SurfaceValuation):
        top, _ = self._resolve(v)
        return v.t * (1 - top.boundary.get(v.divisor, Fraction(0)))

    def vol_curve(self, w, v: SurfaceValuation):
        top, F = self._resolve(v)
        return top.vol_curve_classes(self.pullback(top, w), F)

    def grad_vol_curve(self, w, v, theta):
        top, F = self._resolve(v)
        bps, pieces = top.grad_vol_curve_classes(self.pullback(top, w), F, self.pullback(top, theta))
        return bps, pieces

    def candidates(self, radius=None, depth=1):
        out = [SurfaceValuation("", p) for p in sorted(self.primes)]
        depth = 1 if depth is None else depth
        for cname in sorted(self.chain_specs):
            steps = self.chain_specs[cname].get("steps", [])
            if len(steps) > depth:
                continue
            for st in steps:
                out.append(SurfaceValuation(cname, st["name"]))
        return out

    def candidate_description(self, radius=None, depth=1):
        depth = 1 if depth is None else depth
        return (f"prime divisors on X ({', '.join(sorted(self.primes))}) plus exceptional divisors "
                f"of blowup chains of length <= {depth}")

    def parse_valuation(self, d):
        return SurfaceValuation(d.get("chain", "") or "", str(d["divisor"]), Fraction(d.get("t", "1")))


def build_chain(base: SurfaceModel, name, spec):
    """Top model of a blowup chain, with the log pullback of B as boundary.

    Basis on the top model: pullbacks of the base basis followed by the total
    transforms e_1..e_k of the exceptional curves.  The boundary of the top model
    is B_Y with K_Y + B_Y = pi^*(K_X + B), so A(ord_D) = 1 - b_D there.
    """
    steps = spec.get("steps", [])
    if not steps:
        raise ConfigError(f"chain {name!r} has no steps")
    r = base.rank
    k = len(steps)
    n = r + k
    names = base.names + [st["name"] for st in steps]
    if len(set(names)) != n:
        raise SchemaError(f"chain {name!r}: exceptional names collide with the basis")
    G = [[Fraction(0)] * n for _ in range(n)]
    for i in range(r):
        for j in range(r):
            G[i][j] = base.G[i][j]
    for i in range(k):
        G[r + i][r + i] = Fraction(-1)
    canonical = list(base.K_X.coords) + [Fraction(1)] * k
    primes = {p: list(c.coords) + [Fraction(0)] * k for p, c in base.primes.items()}
    coeff = dict(base.boundary)
    for s, st in enumerate(steps):
        mult = st.get("mult", {})
        if st["name"] in primes:
            raise SchemaError(f"chain {name!r}: duplicate prime name {st['name']!r}")
        missing = [p for p in primes if p not in mult]
        if missing:
            raise ConfigError(f"chain {name!r} step {s + 1}: missing multiplicity data for "
                              f"{', '.join(sorted(missing))}")
        extra = [p for p in mult if p not in primes]
        if extra:
            raise SchemaError(f"chain {name!r} step {s + 1}: unknown curves {extra}")
        a = 2 - sum((coeff.get(p, Fraction(0)) * Fraction(m) for p, m in mult.items()), Fraction(0))
        for p, m in mult.items():
            if Fraction(m) < 0 or Fraction(m).denominator != 1:
                raise SchemaError("multiplicities must be nonnegative integers")
            primes[p][r + s] -= Fraction(m)
        e = [Fraction(0)] * n
        e[r + s] = Fraction(1)
        primes[st["name"]] = e
        coeff[st["name"]] = 1 - a
    boundary = {p: b for p, b in coeff.items() if b != 0}
    if "extremal" not in spec:
        raise SchemaError(f"chain {name!r}: the top model needs an 'extremal' curve list")
    pclasses = {p: c for p, c in primes.items()}

    def resolve(items):
        out = []
        for c in items:
            if isinstance(c, str):
                if c not in pclasses:
                    raise SchemaError(f"chain {name!r}: unknown curve {c!r}")
                out.append(pclasses[c])
            else:
                out.append(c)
        return out

    G_form = lambda u, v: linalg.bilinear(G, u, v)
    negs = spec.get("negative")
    if negs is None:
        negs = [p for p, c in sorted(pclasses.items()) if G_form(c, c) < 0]
    # reference ample on the top: pullback of the base ample minus a small multiple of the e_i
    ref = list(base.reference_ample.coords) + [Fraction(0)] * k
    top_extremal = resolve(spec["extremal"])
    scale = Fraction(1, 2)
    for _ in range(60):
        cand = [c for c in ref[:r]] + [Fraction(0)] * k
        for i in range(k):
            cand[r + i] = -scale ** (i + 1)
        if all(G_form(cand, c) > 0 for c in top_extremal) and G_form(cand, cand) > 0:
            ref = cand
            break
        scale /= 2
    else:
        raise SchemaError(f"chain {name!r}: could not find an ample class on the top model")
    return SurfaceModel(names, G, canonical, primes, boundary, resolve(negs), top_extremal,
                        reference_ample=ref, name=f"{base.name}/{name}")
