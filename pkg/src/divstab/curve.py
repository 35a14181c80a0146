"""Curve backend: non-Archimedean pluripotential theory on a smooth projective curve.

The Berkovich curve is a tree: one ray t -> t*ord_p (t >= 0) per closed point p,
glued at the trivial valuation.  A PL omega-psh potential is a value c at the
root plus, on finitely many rays, a convex nonincreasing PL function that is
eventually constant.  Everything below is a finite rational computation on
slopes and breakpoints.
"""
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConsistencyError, DomainError, SchemaError
from .numclass import NumClass, VarietyModel
from .scalars import PiecewisePoly, fmt

TRIV = None  # point id used for the trivial valuation


@dataclass(frozen=True, order=True)
class CurveValuation:
    """v = t * ord_p; t = 0 is the trivial valuation."""
    point: str
    t: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "t", Fraction(self.t))
        if self.t < 0:
            raise DomainError("valuation scale must be >= 0")

    def scaled(self, s):
        return CurveValuation(self.point, self.t * s)

    def encode(self):
        return {"point": self.point, "t": fmt(self.t)}

    def key(self):
        return (self.point, self.t)

    def label(self):
        return f"{fmt(self.t)}*ord_{self.point}" if self.t != 1 else f"ord_{self.point}"


class CurveModel(VarietyModel):
    kind = "curve"
    dim = 1
    rank = 1

    def __init__(self, genus, V, points=None, name="curve", generic_point="q"):
        if int(genus) != genus or genus < 0:
            raise SchemaError("genus must be a nonnegative integer")
        self.genus = int(genus)
        self.V = Fraction(V)
        if self.V <= 0:
            raise SchemaError("V must be positive")
        self.points = {str(k): Fraction(b) for k, b in (points or {}).items()}
        self.name = name
        self.backend_id = f"curve:{name}"
        self.generic_point = generic_point
        while self.generic_point in self.points:
            self.generic_point += "'"

    def b(self, p):
        return self.points.get(p, Fraction(0))

    @property
    def deg_K(self):
        return Fraction(2 * self.genus - 2)

    @property
    def deg_KB(self):
        return self.deg_K + sum(self.points.values(), Fraction(0))

    @property
    def canonical(self):
        return self.cls([self.deg_KB])

    def default_omega(self):
        return self.cls([self.V])

    def with_degree(self, V):
        return CurveModel(self.genus, V, self.points, self.name, self.generic_point)

    def top_power(self, w):
        return w.coords[0]

    def mixed(self, w, theta):
        return theta.coords[0]

    def curve_pairings(self, theta):
        return [theta.coords[0]]

    def ample_failure(self, theta):
        return None if theta.coords[0] > 0 else "degree is not positive"

    # valuations
    def log_discrepancy(self, v: CurveValuation):
        return v.t * (1 - self.b(v.point))

    def vol_curve(self, w: NumClass, v: CurveValuation):
        """lambda -> vol(w - lambda p) = deg w - lambda on [0, deg w]."""
        d = w.coords[0]
        return PiecewisePoly([0, d], [(d, Fraction(-1))], 0, max_degree=1)

    def grad_vol_curve(self, w, v, theta):
        d = w.coords[0]
        return [Fraction(0), d], [(theta.coords[0],)]

    def candidates(self, radius=None, depth=None):
        pts = sorted(self.points) + [self.generic_point]
        return [CurveValuation(p) for p in pts]

    def candidate_description(self, radius=None, depth=None):
        return "all closed points (marked points plus one unmarked point); exact for curves"

    def parse_valuation(self, d):
        return CurveValuation(str(d["point"]), Fraction(d.get("t", "1")))


# -- potentials and measures -------------------------------------------------

@dataclass(frozen=True)
class RayData:
    """Convex PL function on [0, inf): slopes[i] holds on [knots[i-1], knots[i])."""
    knots: tuple
    slopes: tuple

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(Fraction(k) for k in self.knots))
        object.__setattr__(self, "slopes", tuple(Fraction(s) for s in self.slopes))
        if len(self.slopes) != len(self.knots) + 1:
            raise DomainError("need one more slope than knots")

    def value(self, c, t):
        t = Fraction(t)
        val, prev = Fraction(c), Fraction(0)
        for k, s in zip(self.knots, self.slopes):
            if t <= k:
                return val + s * (t - prev)
            val += s * (k - prev)
            prev = k
        return val + self.slopes[-1] * (t - prev)


@dataclass(frozen=True)
class PLPotential:
    c: Fraction
    rays: tuple = field(default=())  # sorted tuple of (point, RayData)

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "rays", tuple(sorted(dict(self.rays).items())))

    @classmethod
    def build(cls, c, rays: dict):
        return cls(c, tuple((p, rd if isinstance(rd, RayData) else RayData(*rd)) for p, rd in rays.items()))

    @property
    def ray_map(self):
        return dict(self.rays)

    def value(self, point, t):
        t = Fraction(t)
        if point is TRIV or t == 0:
            return self.c
        rd = self.ray_map.get(point)
        return self.c if rd is None else rd.value(self.c, t)

    def shifted(self, a):
        return PLPotential(self.c + a, self.rays)

    def scaled(self, s):
        """(s.phi)(v) = s phi(v / s)."""
        s = Fraction(s)
        return PLPotential(s * self.c, tuple((p, RayData([s * k for k in rd.knots], rd.slopes))
                                              for p, rd in self.rays))

    def to_json(self):
        return {"c": fmt(self.c), "rays": {p: {"knots": [fmt(k) for k in rd.knots],
                                                "slopes": [fmt(s) for s in rd.slopes]}
                                            for p, rd in self.rays}}


def check_potential(model: CurveModel, phi: PLPotential):
    """Raise DomainError("not omega-psh ...") unless phi satisfies the PL invariants."""
    total = Fraction(0)
    for p, rd in phi.rays:
        if any(k <= 0 for k in rd.knots) or any(b <= a for a, b in zip(rd.knots, rd.knots[1:])):
            raise DomainError(f"not omega-psh: knots on ray {p} must be positive and increasing")
        if any(s > 0 for s in rd.slopes):
            raise DomainError(f"not omega-psh: positive slope on ray {p}")
        if any(b < a for a, b in zip(rd.slopes, rd.slopes[1:])):
            raise DomainError(f"not omega-psh: slopes on ray {p} are not nondecreasing")
        if rd.slopes[-1] != 0:
            raise DomainError(f"not omega-psh: final slope on ray {p} is not 0")
        total += -rd.slopes[0]
    if total > model.V:
        raise DomainError("not omega-psh: initial slopes exceed the degree")


@dataclass(frozen=True)
class CurveMeasure:
    """Finite atomic probability measure; atoms are (point or None, t, mass)."""
    atoms: tuple

    def __post_init__(self):
        merged = {}
        for p, t, m in self.atoms:
            t, m = Fraction(t), Fraction(m)
            if m <= 0:
                raise DomainError("atom masses must be positive")
            if t < 0:
                raise DomainError("atom parameters must be >= 0")
            key = (None, Fraction(0)) if (p is None or t == 0) else (str(p), t)
            merged[key] = merged.get(key, Fraction(0)) + m
        if sum(merged.values(), Fraction(0)) != 1:
            raise DomainError("masses must sum to 1")
        atoms = sorted(merged.items(), key=lambda kv: ("" if kv[0][0] is None else "~" + kv[0][0], kv[0][1]))
        object.__setattr__(self, "atoms", tuple((p, t, m) for (p, t), m in atoms))

    @classmethod
    def from_divisorial(cls, mu):
        return cls(tuple((v.point, v.t, m) for v, m in mu.atoms))

    def pushforward(self, s):
        """s_star mu: scale every atom parameter by s."""
        return CurveMeasure(tuple((p, Fraction(s) * t, m) for p, t, m in self.atoms))

    def to_json(self):
        return [{"point": p, "t": fmt(t), "mass": fmt(m)} for p, t, m in self.atoms]


def dirac(point, t=1):
    return CurveMeasure(((point, Fraction(t), Fraction(1)),))


TRIVIAL_MEASURE = CurveMeasure(((None, 0, 1),))


def pair(phi: PLPotential, mu: CurveMeasure):
    """Integral of phi against mu."""
    return sum((m * phi.value(p, t) for p, t, m in mu.atoms), Fraction(0))


def monge_ampere(model: CurveModel, phi: PLPotential) -> CurveMeasure:
    check_potential(model, phi)
    V = model.V
    atoms = []
    root = Fraction(1)
    for p, rd in phi.rays:
        root += rd.slopes[0] / V
        for k, s0, s1 in zip(rd.knots, rd.slopes, rd.slopes[1:]):
            if s1 != s0:
                atoms.append((p, k, (s1 - s0) / V))
    if root < 0:
        raise DomainError("not omega-psh: negative mass at the trivial valuation")
    if root > 0:
        atoms.append((None, 0, root))
    return CurveMeasure(tuple(atoms))


def energy(model, phi) -> Fraction:
    """E = (integral of phi against MA(phi) + phi(v_triv)) / 2."""
    return (pair(phi, monge_ampere(model, phi)) + phi.c) / 2


def twisted_energy(model, phi, deg_theta) -> Fraction:
    check_potential(model, phi)
    return Fraction(deg_theta) / model.V * phi.c


def grad_energy(model, phi, deg_theta) -> Fraction:
    """Derivative of E in the direction theta: E^theta - tr(theta) E."""
    return Fraction(deg_theta) / model.V * (phi.c - energy(model, phi))


def normalized_potential(model, mu: CurveMeasure) -> PLPotential:
    """The potential phi_mu with MA(phi_mu) = mu and integral of phi_mu against mu = 0."""
    V = model.V
    by_ray = {}
    for p, t, m in mu.atoms:
        if p is not None:
            by_ray.setdefault(p, []).append((t, m))
    rays = {}
    for p, items in by_ray.items():
        items.sort()
        knots = [t for t, _ in items]
        tail = [sum((m for _, m in items[j:]), Fraction(0)) for j in range(len(items))]
        slopes = [-V * w for w in tail] + [Fraction(0)]
        rays[p] = RayData(knots, slopes)
    phi = PLPotential.build(0, rays)
    return phi.shifted(-pair(phi, mu))


def measure_energy(model, mu: CurveMeasure):
    """(||mu||, phi_mu)."""
    phi = normalized_potential(model, mu)
    if monge_ampere(model, phi) != mu:
        raise ConsistencyError("MA(phi_mu) != mu")
    return energy(model, phi), phi


def i_functional(model, phi, psi) -> Fraction:
    """I(phi, psi) = integral of (phi - psi) against MA(psi) - MA(phi)."""
    a, b = monge_ampere(model, phi), monge_ampere(model, psi)
    return (pair(phi, b) - pair(psi, b)) - (pair(phi, a) - pair(psi, a))


def j_mu(model, mu, phi) -> Fraction:
    norm, _ = measure_energy(model, mu)
    return norm - energy(model, phi) + pair(phi, mu)


def j_functional(model, phi) -> Fraction:
    """J(phi) = sup phi - E(phi), i.e. J_mu for mu = delta_triv."""
    return phi.c - energy(model, phi)


def entropy(model, mu: CurveMeasure) -> Fraction:
    return sum((m * t * (1 - model.b(p)) for p, t, m in mu.atoms if p is not None), Fraction(0))


def _require_subklt(model):
    bad = [p for p, b in model.points.items() if b >= 1]
    if bad:
        raise DomainError(f"pair is not subklt (b >= 1 at {', '.join(sorted(bad))})")


def l_functional(model, phi) -> Fraction:
    """inf over divisorial v of A(v) + phi(v); finite for subklt pairs."""
    _require_subklt(model)
    check_potential(model, phi)
    best = phi.c
    for p, rd in phi.rays:
        A = 1 - model.b(p)
        for t in rd.knots:
            best = min(best, t * A + rd.value(phi.c, t))
    return best


def ding(model, phi) -> Fraction:
    return l_functional(model, phi) - energy(model, phi)


def mabuchi(model, phi) -> Fraction:
    mu = monge_ampere(model, phi)
    return entropy(model, mu) + grad_energy(model, phi, model.deg_KB)


def beta(model, mu: CurveMeasure) -> Fraction:
    _, phi = measure_energy(model, mu)
    return entropy(model, mu) + grad_energy(model, phi, model.deg_KB)


def random_potential(model, rng: random.Random, points=None, max_rays=3, max_knots=3, den=6):
    """A random valid PL potential with small rational data."""
    points = points or (sorted(model.points) + [model.generic_point])
    k = rng.randint(0, min(max_rays, len(points)))
    chosen = rng.sample(points, k)
    budget = model.V
    rays = {}
    for p in chosen:
        n = rng.randint(1, max_knots)
        knots = sorted({Fraction(rng.randint(1, 4 * den), den) for _ in range(n)})
        # slopes: nondecreasing negatives ending at 0
        s0 = -budget * Fraction(rng.randint(1, den), den) / max(1, k)
        cuts = sorted(Fraction(rng.randint(0, den), den) for _ in range(len(knots) - 1))
        slopes = [s0 * (1 - c) for c in [Fraction(0)] + cuts] + [Fraction(0)]
        rays[p] = RayData(knots, slopes)
    c = Fraction(rng.randint(-2 * den, 2 * den), den)
    phi = PLPotential.build(c, rays)
    check_potential(model, phi)
    return phi


def random_measure(rng: random.Random, points, max_atoms=4, den=5, allow_triv=True):
    n = rng.randint(1, max_atoms)
    weights = [rng.randint(1, 5) for _ in range(n)]
    tot = sum(weights)
    atoms = []
    for w in weights:
        if allow_triv and rng.random() < 0.15:
            atoms.append((None, 0, Fraction(w, tot)))
        else:
            atoms.append((rng.choice(points), Fraction(rng.randint(1, 4 * den), den), Fraction(w, tot)))
    return CurveMeasure(tuple(atoms))
