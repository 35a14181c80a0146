"""Toric backend: complete fans, moment polytopes and toric valuations.

A class is a torus-invariant divisor sum a_rho D_rho modulo principal divisors;
its coordinates are the a_rho on the non-pivot rays after using div(chi^m) to
clear a fixed set of n independent pivot rays.  The polytope of a class is
{m : <m, u_rho> >= -a_rho}.
"""
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import factorial, gcd

from . import linalg
from .errors import ConsistencyError, DomainError, PositivityError, SchemaError
from .numclass import NumClass, VarietyModel
from .scalars import PiecewisePoly, fmt, interpolate, integrate, pderiv, peval


def _dot(a, b):
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def _primitive_int(v):
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    w = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in w:
        g = gcd(g, x)
    return [x // g for x in w] if g else w


class HPolytope:
    """Bounded polytope {m : <m, u_i> + a_i >= 0}; vertices and triangulation are cached."""

    def __init__(self, normals, offsets, dim):
        self.dim = dim
        self.normals = [tuple(Fraction(x) for x in u) for u in normals]
        self.offsets = [Fraction(a) for a in offsets]
        self._verts = None
        self._simplices = None
        self._mom = None

    def slack(self, i, m):
        return _dot(self.normals[i], m) + self.offsets[i]

    def vertices(self):
        """List of (point, frozenset of tight inequality indices)."""
        if self._verts is not None:
            return self._verts
        n = self.dim
        seen = {}
        for idx in combinations(range(len(self.normals)), n):
            A = [self.normals[i] for i in idx]
            m = linalg.solve(A, [-self.offsets[i] for i in idx])
            if m is None:
                continue
            m = tuple(m)
            if m in seen:
                continue
            if all(self.slack(i, m) >= 0 for i in range(len(self.normals))):
                seen[m] = frozenset(i for i in range(len(self.normals)) if self.slack(i, m) == 0)
        self._verts = sorted(seen.items())
        return self._verts

    def _affine_dim(self, pts):
        if len(pts) <= 1:
            return 0
        p0 = pts[0]
        return linalg.rank([[a - b for a, b in zip(p, p0)] for p in pts[1:]])

    def simplices(self):
        """Triangulation coned from the vertex centroid of every face, recursively."""
        if self._simplices is not None:
            return self._simplices
        verts = self.vertices()
        pts = [p for p, _ in verts]
        tight = [t for _, t in verts]
        if not pts or self._affine_dim(pts) < self.dim:
            self._simplices = []
            return self._simplices

        def tri(ids, k):
            fpts = [pts[i] for i in ids]
            if k == 0:
                return [[fpts[0]]]
            c = tuple(sum(col) / len(fpts) for col in zip(*fpts))
            common = frozenset.intersection(*[tight[i] for i in ids])
            facets = set()
            for j in range(len(self.normals)):
                if j in common:
                    continue
                sub = frozenset(i for i in ids if j in tight[i])
                if len(sub) >= k and self._affine_dim([pts[i] for i in sorted(sub)]) == k - 1:
                    facets.add(sub)
            out = []
            for sub in sorted(facets, key=sorted):
                for s in tri(sorted(sub), k - 1):
                    out.append(s + [c])
            return out

        self._simplices = tri(list(range(len(pts))), self.dim)
        return self._simplices

    def _moments(self):
        if self._mom is None:
            tot = Fraction(0)
            acc = [Fraction(0)] * self.dim
            for s in self.simplices():
                w = abs(linalg.det([[a - b for a, b in zip(p, s[0])] for p in s[1:]]))
                tot += w
                for i in range(self.dim):
                    acc[i] += w * sum(p[i] for p in s) / len(s)
            self._mom = (tot, acc)
        return self._mom

    def normalized_volume(self):
        """n! * Euclidean volume."""
        return self._moments()[0]

    def barycenter(self):
        tot, acc = self._moments()
        if tot == 0:
            raise DomainError("barycenter of a degenerate polytope")
        return tuple(a / tot for a in acc)

    def extent(self, u):
        vals = [_dot(p, u) for p, _ in self.vertices()]
        return min(vals), max(vals)

    def with_halfspace(self, u, c):
        """Intersect with <m, u> >= c."""
        return HPolytope(self.normals + [tuple(u)], self.offsets + [-Fraction(c)], self.dim)

    def lawrence_volume(self):
        """n! Vol by Lawrence's vertex formula (simple polytopes only); an independent check."""
        n = self.dim
        xi = [Fraction(1, 3 + 7 * i * i) + i for i in range(n)]
        total = Fraction(0)
        for v, t in self.vertices():
            if len(t) != n:
                return None
            A = [self.normals[i] for i in sorted(t)]
            gam = linalg.solve([list(r) for r in zip(*A)], xi)
            if gam is None or any(g == 0 for g in gam):
                return None
            prod = abs(linalg.det(A))
            for g in gam:
                prod *= g
            total += _dot(xi, v) ** n / prod
        return (-1) ** n * total


@dataclass(frozen=True, order=True)
class ToricValuation:
    """t * v_u for a primitive lattice direction u."""
    u: tuple
    t: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(int(x) for x in self.u))
        object.__setattr__(self, "t", Fraction(self.t))
        if not any(self.u):
            raise DomainError("toric valuation direction must be nonzero")
        g = 0
        for x in self.u:
            g = gcd(g, x)
        if g != 1:
            raise DomainError(f"direction {self.u} is not primitive")
        if self.t < 0:
            raise DomainError("valuation scale must be >= 0")

    def scaled(self, s):
        return ToricValuation(self.u, self.t * s)

    def encode(self):
        return {"u": list(self.u), "t": fmt(self.t)}

    def key(self):
        # shortest first, then lexicographically largest; see the decisions ledger
        return (sum(abs(x) for x in self.u), tuple(-x for x in self.u), self.t)

    def label(self):
        base = "v_(" + ",".join(map(str, self.u)) + ")"
        return base if self.t == 1 else f"{fmt(self.t)}*{base}"


class ToricModel(VarietyModel):
    kind = "toric"

    def __init__(self, n, rays, max_cones, boundary=None, omega=None, name="toric"):
        self.name = name
        self.backend_id = f"toric:{name}"
        self.dim = int(n)
        self.rays = [tuple(int(x) for x in r) for r in rays]
        for r in self.rays:
            if len(r) != self.dim:
                raise SchemaError(f"ray {r} has wrong length")
            g = 0
            for x in r:
                g = gcd(g, x)
            if g != 1:
                raise SchemaError(f"ray {r} is not primitive")
        self.max_cones = [tuple(sorted(c)) for c in max_cones]
        for c in self.max_cones:
            if any(i < 0 or i >= len(self.rays) for i in c):
                raise SchemaError(f"cone {c} refers to an unknown ray")
            if linalg.rank([self.rays[i] for i in c]) != self.dim:
                raise SchemaError(f"cone {c} is not full dimensional")
        self.b = [Fraction(x) for x in (boundary or [0] * len(self.rays))]
        if len(self.b) != len(self.rays):
            raise SchemaError("need one boundary coefficient per ray")
        # pivot rays for the class-group presentation
        piv = []
        for i, r in enumerate(self.rays):
            if linalg.rank([self.rays[j] for j in piv + [i]]) == len(piv) + 1:
                piv.append(i)
            if len(piv) == self.dim:
                break
        if len(piv) < self.dim:
            raise SchemaError("rays do not span N_R")
        self.pivots = piv
        self.free = [i for i in range(len(self.rays)) if i not in piv]
        self.rank = len(self.free)
        self.simplicial_cones = []
        for c in self.max_cones:
            self.simplicial_cones.extend(self._triangulate_cone(list(c)))
        self._walls = self._compute_walls()
        self._check_complete()
        self.omega_support = [Fraction(x) for x in omega] if omega is not None else None
        self.omega = self.from_divisor(omega) if omega is not None else None
        if self.omega is not None and self.ample_failure(self.omega):
            raise SchemaError("omega support values do not give an ample class")
        self._poly_cache = {}
        self._cartier = None

    # -- fan combinatorics --------------------------------------------------

    def _facets_of(self, ids):
        """Facets (as sorted ray-index tuples) of the cone spanned by rays `ids`."""
        vecs = [self.rays[i] for i in ids]
        k = linalg.rank(vecs)
        basis = []
        for v in vecs:
            if linalg.rank(basis + [v]) > len(basis):
                basis.append(v)
        out = set()
        for sub in combinations(ids, k - 1):
            S = [self.rays[i] for i in sub]
            if linalg.rank(S) != k - 1 and k > 1:
                continue
            # w in span(basis) orthogonal to S
            A = [[_dot(s, b) for b in basis] for s in S]
            ns = linalg.nullspace(A, len(basis)) if A else [[Fraction(int(i == j)) for i in range(len(basis))]
                                                          for j in range(len(basis))]
            if len(ns) != 1:
                continue
            w = [sum(a * b[d] for a, b in zip(ns[0], basis)) for d in range(self.dim)]
            vals = [_dot(w, self.rays[i]) for i in ids]
            if all(x >= 0 for x in vals):
                pass
            elif all(x <= 0 for x in vals):
                vals = [-x for x in vals]
            else:
                continue
            out.add(tuple(sorted(i for i, x in zip(ids, vals) if x == 0)))
        return sorted(out)

    def _triangulate_cone(self, ids):
        ids = sorted(ids)
        k = linalg.rank([self.rays[i] for i in ids])
        if len(ids) == k:
            return [tuple(ids)]
        apex = ids[0]
        out = []
        for f in self._facets_of(ids):
            if apex in f:
                continue
            for s in self._triangulate_cone(list(f)):
                out.append(tuple(sorted(s + (apex,))))
        return out

    def _compute_walls(self):
        walls = {}
        for ci, c in enumerate(self.max_cones):
            for f in self._facets_of(list(c)):
                walls.setdefault(f, []).append(ci)
        out = []
        for f, cs in sorted(walls.items()):
            if len(cs) != 2:
                raise SchemaError(f"fan is not complete: wall {f} lies in {len(cs)} maximal cone(s)")
            out.append((f, cs[0], cs[1]))
        return out

    def _containing_cone(self, u):
        for c in self.simplicial_cones:
            coef = linalg.solve([list(r) for r in zip(*[self.rays[i] for i in c])], list(u))
            if coef is not None and all(x >= 0 for x in coef):
                return c, coef
        return None, None

    def _check_complete(self):
        probes = [[Fraction(1, 7 + 3 * i) + (-1) ** (i + s) * s for i in range(self.dim)] for s in range(4)]
        for p in probes:
            hits = 0
            for c in self.simplicial_cones:
                coef = linalg.solve([list(r) for r in zip(*[self.rays[i] for i in c])], p)
                if coef is not None and all(x > 0 for x in coef):
                    hits += 1
            if hits != 1:
                raise SchemaError(f"fan is not complete (a generic vector lies in {hits} cones)")

    # -- classes ------------------------------------------------------------

    def from_divisor(self, a) -> NumClass:
        """Class of sum a_rho D_rho."""
        a = [Fraction(x) for x in a]
        if len(a) != len(self.rays):
            raise SchemaError("need one coefficient per ray")
        m = linalg.solve([self.rays[i] for i in self.pivots], [-a[i] for i in self.pivots])
        red = [a[i] + _dot(m, self.rays[i]) for i in range(len(self.rays))]
        return self.cls([red[i] for i in self.free])

    def divisor(self, c: NumClass):
        self.check(c)
        a = [Fraction(0)] * len(self.rays)
        for i, x in zip(self.free, c.coords):
            a[i] = x
        return a

    @property
    def canonical(self):
        return self.from_divisor([-(1 - b) for b in self.b])

    def default_omega(self):
        return self.omega

    def local_m(self, a, cone):
        m = linalg.solve_any([self.rays[i] for i in cone], [-a[i] for i in cone])
        if m is None:
            return None
        if any(_dot(m, self.rays[i]) != -a[i] for i in cone):
            return None
        return m

    def ample_failure(self, theta):
        a = self.divisor(theta)
        for c in self.max_cones:
            m = self.local_m(a, c)
            if m is None:
                return f"not Cartier on cone {c}"
            for i in range(len(self.rays)):
                if i not in c and _dot(m, self.rays[i]) <= -a[i]:
                    return f"support function not strictly convex across cone {c} at ray {i}"
        return None

    def cartier_space(self):
        """Basis of the Q-Cartier classes (Pic tensor Q) inside the class coordinates."""
        if getattr(self, "_cartier", None) is None:
            r, n = self.rank, self.dim
            cones = [c for c in self.max_cones if len(c) > n]
            rows = []
            for k, c in enumerate(cones):
                for i in c:
                    row = [Fraction(0)] * (r + n * len(cones))
                    if i in self.free:
                        row[self.free.index(i)] = Fraction(1)
                    for d in range(n):
                        row[r + n * k + d] = Fraction(self.rays[i][d])
                    rows.append(row)
            basis = []
            for v in linalg.nullspace(rows, r + n * len(cones)):
                cand = v[:r]
                if linalg.rank(basis + [cand]) > len(basis):
                    basis.append(cand)
            self._cartier = [self.cls(b) for b in basis]
        return self._cartier

    def is_cartier(self, theta):
        a = self.divisor(theta)
        return all(self.local_m(a, c) is not None for c in self.max_cones)

    def curve_pairings(self, theta):
        a = self.divisor(theta)
        out = []
        for f, c1, c2 in self._walls:
            m1 = self.local_m(a, self.max_cones[c1])
            m2 = self.local_m(a, self.max_cones[c2])
            if m1 is None or m2 is None:
                raise DomainError("class is not Q-Cartier")
            S = [self.rays[i] for i in f]
            ns = linalg.nullspace(S, self.dim) if S else [[Fraction(int(i == j)) for i in range(self.dim)]
                                                         for j in range(self.dim)]
            e = _primitive_int(ns[0])
            u = next(self.rays[i] for i in self.max_cones[c2] if i not in f)
            if _dot(e, u) < 0:
                e = [-x for x in e]
            diff = [x - y for x, y in zip(m1, m2)]
            out.append(_dot(diff, u) / _dot(e, u))
        return out

    def polytope(self, w: NumClass) -> HPolytope:
        P = self._poly_cache.get(w.coords)
        if P is None:
            if len(self._poly_cache) > 4096:
                self._poly_cache.clear()
            P = self._poly_cache[w.coords] = HPolytope(self.rays, self.divisor(w), self.dim)
        return P

    def top_power(self, w):
        return self.polytope(w).normalized_volume()

    def _ample_step(self, w, theta, k):
        h = Fraction(1, 8)
        while self.ample_failure(w - k * h * theta) or self.ample_failure(w + k * h * theta):
            h /= 2
            if h < Fraction(1, 2 ** 60):
                raise PositivityError("no ample neighbourhood found")
        return h

    def _derivative(self, fn, w, theta, degree):
        """Exact derivative at 0 of s -> fn(w + s theta), a polynomial of `degree` on Amp."""
        h = self._ample_step(w, theta, degree + 1)
        xs = [h * (j - degree // 2) for j in range(degree + 1)]
        ys = [fn(w + x * theta) for x in xs]
        p = interpolate(xs, ys)
        chk = h * Fraction(1, 3)
        if peval(p, chk) != fn(w + chk * theta):
            raise ConsistencyError("polynomial interpolation on the ample cone failed verification")
        return peval(pderiv(p), 0)

    def mixed(self, w, theta):
        """(w^{n-1}.theta) = (1/n) d/ds (w + s theta)^n."""
        if not self.is_cartier(theta):
            raise DomainError("theta is not Q-Cartier on this fan")
        return self._derivative(self.top_power, w, theta, self.dim) / self.dim

    # -- polytope-based invariants -------------------------------------------

    def polytope_of(self, w, support=None):
        """Moment polytope of w; `support` picks the per-ray representative (default: reduced)."""
        from .numclass import require_ample
        require_ample(self, w)
        if support is not None:
            if self.from_divisor(support) != w:
                raise DomainError("support values do not represent the given class")
            P = HPolytope(self.rays, [Fraction(x) for x in support], self.dim)
        else:
            P = self.polytope(w)
            if getattr(P, "_verified", False):
                return P
        vol = P.normalized_volume()
        law = P.lawrence_volume()
        if law is not None and law != vol:
            raise ConsistencyError(f"polytope volume {vol} disagrees with the vertex formula {law}")
        if len(P.vertices()) != len(self.max_cones) and all(len(c) == self.dim for c in self.max_cones):
            raise ConsistencyError("vertex / maximal cone correspondence is not a bijection")
        P._verified = True
        return P

    def vol_slice(self, w, u, lam):
        if not any(u):
            raise DomainError("direction u = 0")
        P = self.polytope_of(w)
        lo, hi = P.extent(u)
        lam = Fraction(lam)
        if lam < 0:
            raise DomainError("lambda must be >= 0")
        if lam >= hi - lo:
            return Fraction(0)
        return P.with_halfspace(u, lo + lam).normalized_volume()

    def vol_slice_curve(self, w, u):
        if not any(u):
            raise DomainError("direction u = 0")
        P = self.polytope_of(w)
        lo, hi = P.extent(u)
        levels = sorted({_dot(p, u) - lo for p, _ in P.vertices()})
        n = self.dim
        pieces = []
        for l0, l1 in zip(levels, levels[1:]):
            xs = [l0 + (l1 - l0) * Fraction(j + 1, n + 2) for j in range(n + 1)]
            ys = [P.with_halfspace(u, lo + x).normalized_volume() for x in xs]
            piece = interpolate(xs, ys, center=l0)
            chk = l0 + (l1 - l0) * Fraction(1, n + 3)
            if peval(piece, chk - l0) != P.with_halfspace(u, lo + chk).normalized_volume():
                raise ConsistencyError("slice volume piece failed verification")
            pieces.append(piece)
        return PiecewisePoly(levels, pieces, 0, max_degree=n)

    def vol_curve(self, w, v: ToricValuation):
        return self.vol_slice_curve(w, v.u)

    def expected_order(self, w, v: ToricValuation):
        """t * V^-1 int_0^T slice; checked against the barycentre formula."""
        P = self.polytope_of(w)
        V = P.normalized_volume()
        f = self.vol_slice_curve(w, v.u)
        integral = v.t * integrate(f, 0, f.end) / V
        lo, _ = P.extent(v.u)
        bary = v.t * (_dot(P.barycenter(), v.u) - lo)
        if integral != bary:
            raise ConsistencyError(f"expected order: integral {integral} != barycentre {bary}")
        return integral

    def barycentric_order(self, w, v: ToricValuation):
        """t (<bar P, u> - min_P <., u>): the fast route to ||v||_w."""
        P = self.polytope_of(w)
        lo, _ = P.extent(v.u)
        return v.t * (_dot(P.barycenter(), v.u) - lo)

    def log_discrepancy(self, v: ToricValuation):
        c, coef = self._containing_cone(v.u)
        if c is None:
            raise ConsistencyError(f"direction {v.u} is in no cone of a complete fan")
        return v.t * sum((x * (1 - self.b[i]) for x, i in zip(coef, c)), Fraction(0))

    def dirac_energy_grad(self, w, v: ToricValuation, theta, method="exact"):
        """Derivative of ||v||_{w + s theta} at s = 0."""
        if not self.is_cartier(theta):
            raise DomainError("theta is not Q-Cartier on this fan")
        if method == "exact":
            def num(x):
                P = self.polytope(x)
                lo, _ = P.extent(v.u)
                return P.normalized_volume() * (_dot(P.barycenter(), v.u) - lo)
            N0, V0 = num(w), self.top_power(w)
            dN = self._derivative(num, w, theta, self.dim + 1)
            dV = self._derivative(self.top_power, w, theta, self.dim)
            return v.t * (dN * V0 - N0 * dV) / (V0 * V0)
        from .numerics import richardson
        return Fraction(richardson(lambda s: float(self.expected_order(w + Fraction(s) * theta, v)),
                                   float(self._ample_step(w, theta, 1))))

    def primitive_directions(self, R):
        out = []
        for u in product(range(-R, R + 1), repeat=self.dim):
            if not any(u):
                continue
            g = 0
            for x in u:
                g = gcd(g, x)
            if g == 1:
                out.append(ToricValuation(u))
        return sorted(out, key=lambda v: v.key())

    def candidates(self, radius=2, depth=None):
        return self.primitive_directions(2 if radius is None else radius)

    def candidate_description(self, radius=2, depth=None):
        R = 2 if radius is None else radius
        return (f"toric valuations v_u, u primitive with |u|_inf <= {R}; exact on this sublattice "
                f"only, an upper bound over all divisorial valuations")

    def parse_valuation(self, d):
        return ToricValuation(tuple(d["u"]), Fraction(d.get("t", "1")))
