"""Backend-generic stability invariants of a polarized pair (X, B; w).

Dirac energies come from integrating volume curves; beta is computed from the
derivative formula and, when -K_{X,B} is proportional to w, from the shortcut
Ent - lambda ||.||, and the two must agree exactly.  Thresholds are minima over
explicit candidate sets and every report says what kind of bound it is.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import curve as cv
from .errors import ConsistencyError, DomainError
from .numclass import NumClass, norm_sup, proportionality, require_ample, trace
from .scalars import fmt, integrate, peval, pantideriv


def c_n(n):
    return 2 * n * n + 1


@dataclass(frozen=True)
class PolarizedPair:
    model: object
    omega: NumClass

    def __post_init__(self):
        require_ample(self.model, self.omega)

    @property
    def V(self):
        return self.model.top_power(self.omega)

    @property
    def K(self):
        return self.model.canonical

    @property
    def lam(self):
        """lambda with -K_{X,B} == lambda w, or None."""
        return proportionality(self.model, self.omega, -self.K)

    def rescaled(self, s):
        return PolarizedPair(self.model, Fraction(s) * self.omega)

    def curve_model(self):
        """Curve backend only: the model with V replaced by deg w."""
        return self.model.with_degree(self.omega.coords[0])

    def __hash__(self):
        return hash((id(self.model), self.omega))

    def __eq__(self, other):
        return isinstance(other, PolarizedPair) and self.model is other.model and self.omega == other.omega


@dataclass(frozen=True)
class DivisorialMeasure:
    """Finite probability measure on divisorial valuations; None is the trivial valuation."""
    atoms: tuple

    def __post_init__(self):
        merged = {}
        for v, m in self.atoms:
            m = Fraction(m)
            if m <= 0:
                raise DomainError("masses must be positive")
            if v is not None and v.t == 0:
                v = None
            merged[v] = merged.get(v, Fraction(0)) + m
        if sum(merged.values(), Fraction(0)) != 1:
            raise DomainError("masses must sum to 1")
        kinds = {type(v) for v in merged if v is not None}
        if len(kinds) > 1:
            raise DomainError("mixed valuation types in one measure")
        items = sorted(merged.items(), key=lambda kv: (kv[0] is not None, kv[0].key() if kv[0] else ()))
        object.__setattr__(self, "atoms", tuple(items))

    @classmethod
    def dirac(cls, v):
        return cls(((v, 1),))

    def pushforward(self, s):
        return DivisorialMeasure(tuple((None if v is None else v.scaled(s), m) for v, m in self.atoms))

    def is_dirac(self):
        return len(self.atoms) == 1

    def encode(self):
        return [{"valuation": None if v is None else v.encode(), "mass": fmt(m)} for v, m in self.atoms]


@dataclass
class ThresholdReport:
    value: object  # Fraction, or None for -infinity / empty
    witness: object
    candidate_set: str
    bound_kind: str  # exact-on-set | bracket
    lower: object = None
    upper: object = None
    note: str = ""
    details: dict = field(default_factory=dict)

    def to_json(self):
        def enc(x):
            if x is None:
                return None
            return {"exact": fmt(x), "float": float(x)}
        w = self.witness
        if w is not None and hasattr(w, "encode"):
            w = w.encode()
        out = {"value": enc(self.value) if self.value is not None else ("-inf" if self.note.startswith("sublc") else None),
               "witness": w, "candidate_set": self.candidate_set, "bound_kind": self.bound_kind}
        if self.lower is not None or self.upper is not None:
            out["bracket"] = [enc(self.lower), enc(self.upper)]
        if self.note:
            out["note"] = self.note
        return out


# -- Dirac masses ---------------------------------------------------------------

def _unit(v):
    return v.scaled(1 / v.t) if v.t not in (0, 1) else v


@lru_cache(maxsize=4096)
def _unit_energy(model, omega, v):
    if hasattr(model, "barycentric_order"):
        # toric: barycentre form; the slice integral is compared against it in expected_order
        return model.barycentric_order(omega, v)
    f = model.vol_curve(omega, v)
    return integrate(f, 0, f.end) / model.top_power(omega)


def vol_curve(pair, v):
    return pair.model.vol_curve(pair.omega, _unit(v))


def log_discrepancy(pair, v):
    if v is None or v.t == 0:
        return Fraction(0)
    return pair.model.log_discrepancy(v)


def dirac_energy(pair, v):
    """||v|| = t V^-1 int_0^T vol(w - lambda F) d lambda."""
    if v is None or v.t == 0:
        return Fraction(0)
    return v.t * _unit_energy(pair.model, pair.omega, _unit(v))


def t_invariant(pair, v):
    """T_w(v): the first zero of the volume curve, times t."""
    from .scalars import first_nonneg_root
    if v is None or v.t == 0:
        return Fraction(0)
    return v.t * first_nonneg_root(vol_curve(pair, v))


@lru_cache(maxsize=4096)
def _unit_energy_grad(model, omega, v, theta):
    if hasattr(model, "dirac_energy_grad"):
        return model.dirac_energy_grad(omega, v, theta)
    bps, pieces = model.grad_vol_curve(omega, v, theta)
    total = Fraction(0)
    for a, b, p in zip(bps, bps[1:], pieces):
        P = pantideriv(p)
        total += peval(P, b - a) - peval(P, 0)
    V = model.top_power(omega)
    return total / V - trace(model, omega, theta) * _unit_energy(model, omega, v)


def dirac_energy_grad(pair, v, theta):
    """Derivative of ||v||_w in the direction theta."""
    if v is None or v.t == 0:
        return Fraction(0)
    return v.t * _unit_energy_grad(pair.model, pair.omega, _unit(v), theta)


def beta_dirac(pair, v, both=False):
    """A(v) + grad_K ||v||; cross-checked against Ent - lambda ||v|| when proportional."""
    A = log_discrepancy(pair, v)
    b1 = A + dirac_energy_grad(pair, v, pair.K)
    lam = pair.lam
    b2 = None
    if lam is not None:
        b2 = A - lam * dirac_energy(pair, v)
        if b1 != b2:
            raise ConsistencyError(f"beta disagreement for {v.label()}: derivative route {b1}, "
                                   f"proportional route {b2}")
    return (b1, b2) if both else b1


# -- measures -----------------------------------------------------------------

def entropy(pair, mu: DivisorialMeasure):
    return sum((m * log_discrepancy(pair, v) for v, m in mu.atoms), Fraction(0))


def _curve_measure(mu):
    return cv.CurveMeasure(tuple((None, 0, m) if v is None else (v.point, v.t, m) for v, m in mu.atoms))


@dataclass
class Bracketed:
    lo: Fraction
    hi: Fraction
    kind: str  # exact | bracket

    @property
    def exact(self):
        return self.kind == "exact"

    def to_json(self):
        if self.exact:
            return {"exact": fmt(self.lo), "float": float(self.lo), "bound_kind": "exact"}
        return {"bracket": [fmt(self.lo), fmt(self.hi)], "float": [float(self.lo), float(self.hi)],
                "bound_kind": "bracket"}


def _toric_lower(pair, mu):
    """Best lower bound from linear concave data g = sum c_i l_i on the polytope."""
    from .toric import _dot
    model, P = pair.model, pair.model.polytope(pair.omega)
    vs = [v for v, _ in mu.atoms if v is not None]
    if not vs:
        return Fraction(0)
    ws = [tuple(v.t * x for x in v.u) for v in vs]
    verts = [p for p, _ in P.vertices()]
    mins = [min(_dot(p, w) for p in verts) for w in ws]
    en = [dirac_energy(pair, v) for v in vs]
    best = Fraction(0)
    masses = [m for v, m in mu.atoms if v is not None]
    from itertools import product
    if len(vs) <= 3:
        families = [list(c) for c in product([Fraction(k, 8) for k in range(9)], repeat=len(vs))]
    else:
        base = [[Fraction(int(i == j)) for i in range(len(vs))] for j in range(len(vs))] + [list(masses)]
        families = [[Fraction(k, 16) * c for c in b] for b in base for k in range(1, 17)]
    for coeffs in families:
        E = sum((c * e for c, e in zip(coeffs, en)), Fraction(0))
        g = [sum((c * w[d] for c, w in zip(coeffs, ws)), Fraction(0)) for d in range(model.dim)]
        gmin = sum((c * mn for c, mn in zip(coeffs, mins)), Fraction(0))

        def phi(w):
            # phi_g(v_w) = max_m (<m, g - w>) - sum c_i min<., w_i> + min<., w>
            diff = [a - b for a, b in zip(g, w)]
            return max(_dot(p, diff) for p in verts) - gmin + min(_dot(p, w) for p in verts)

        integral = Fraction(0)
        for v, m in mu.atoms:
            w = tuple(0 for _ in range(model.dim)) if v is None else tuple(v.t * x for x in v.u)
            integral += m * phi(w)
        best = max(best, E - integral)
    return best


def measure_energy(pair, mu: DivisorialMeasure) -> Bracketed:
    """||mu||: exact on curves and for Dirac masses, otherwise a certified bracket."""
    if pair.model.kind == "curve":
        val, _ = cv.measure_energy(pair.curve_model(), _curve_measure(mu))
        return Bracketed(val, val, "exact")
    if len(mu.atoms) == 1:
        val = dirac_energy(pair, mu.atoms[0][0])
        return Bracketed(val, val, "exact")
    return _generic_bracket(pair, mu)


def _generic_bracket(pair, mu):
    n = pair.model.dim
    upper = sum((m * dirac_energy(pair, v) for v, m in mu.atoms), Fraction(0))
    lower = Fraction(0)
    for v, m in mu.atoms:
        if v is None:
            continue
        # s (phi_v - sup phi_v), s in [0,1], with sup phi_v <= (n+1)||v||
        lower = max(lower, dirac_energy(pair, v) * max(Fraction(0), 1 - (n + 1) * (1 - m)))
    if pair.model.kind == "toric":
        lower = max(lower, _toric_lower(pair, mu))
    if lower > upper:
        raise ConsistencyError("energy bracket is empty")
    return Bracketed(lower, upper, "bracket" if lower != upper else "exact")


def beta_measure(pair, mu: DivisorialMeasure) -> Bracketed:
    ent = entropy(pair, mu)
    if pair.model.kind == "curve":
        cm = pair.curve_model()
        _, phi = cv.measure_energy(cm, _curve_measure(mu))
        val = ent + cv.grad_energy(cm, phi, pair.K.coords[0])
        return Bracketed(val, val, "exact")
    if len(mu.atoms) == 1:
        v = mu.atoms[0][0]
        val = Fraction(0) if v is None else beta_dirac(pair, v)
        return Bracketed(val, val, "exact")
    en = measure_energy(pair, mu)
    lam = pair.lam
    if lam is not None:
        ends = [ent - lam * en.lo, ent - lam * en.hi]
        return Bracketed(min(ends), max(ends), "exact" if en.exact else "bracket")
    bound = c_n(pair.model.dim) * norm_sup(pair.model, pair.omega, pair.K) * en.hi
    return Bracketed(ent - bound, ent + bound, "bracket")


# -- thresholds -----------------------------------------------------------------

def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [fn(x) for x in items]


class _Ratio:
    """Picklable per-candidate evaluator."""

    def __init__(self, pair, kind):
        self.pair, self.kind = pair, kind

    def __call__(self, v):
        A = log_discrepancy(self.pair, v)
        S = dirac_energy(self.pair, v)
        if self.kind == "delta":
            return A, S, A / S
        b = beta_dirac(self.pair, v)
        return A, S, b / S


def _argmin(cands, values):
    best = None
    for v, val in zip(cands, values):
        if best is None or (val, v.key()) < (best[1], best[0].key()):
            best = (v, val)
    return best


def delta(pair, candidates, description="", jobs=1) -> ThresholdReport:
    cands = list(candidates)
    if not cands:
        return ThresholdReport(None, None, "empty candidate set", "exact-on-set", note="empty candidate set")
    res = _map(_Ratio(pair, "delta"), cands, jobs)
    bad = [(v, A) for v, (A, _, _) in zip(cands, res) if A < 0]
    if bad:
        v, A = min(bad, key=lambda x: (x[1], x[0].key()))
        return ThresholdReport(None, v, description, "exact-on-set",
                               note=f"sublc violation: A({v.label()}) = {fmt(A)} < 0; delta = -inf")
    v, val = _argmin(cands, [r[2] for r in res])
    return ThresholdReport(val, v, description, "exact-on-set")


def sigma_val(pair, candidates, description="", jobs=1) -> ThresholdReport:
    cands = list(candidates)
    if not cands:
        return ThresholdReport(None, None, "empty candidate set", "exact-on-set", note="empty candidate set")
    res = _map(_Ratio(pair, "sigma"), cands, jobs)
    v, val = _argmin(cands, [r[2] for r in res])
    return ThresholdReport(val, v, description, "exact-on-set")


def curve_measure_family(pair, count=40, seed=0):
    """Deterministic family of divisorial measures on a curve, for optimality checks."""
    import random
    rng = random.Random(seed)
    pts = [v.point for v in pair.model.candidates()]
    out = []
    for _ in range(count):
        cm = cv.random_measure(rng, pts, allow_triv=True)
        out.append(DivisorialMeasure(tuple((None if p is None else cv.CurveValuation(p, t), m)
                                           for p, t, m in cm.atoms)))
    return out


def sigma_div(pair, candidates, description="", jobs=1) -> ThresholdReport:
    cands = list(candidates)
    d = delta(pair, cands, description, jobs)
    lam = pair.lam
    if d.value is None:
        return ThresholdReport(None, d.witness, d.candidate_set, "exact-on-set", note=d.note)
    if lam is not None:
        val = d.value - lam
        if pair.model.kind == "curve":
            for mu in curve_measure_family(pair):
                en = measure_energy(pair, mu).lo
                if en == 0:
                    continue
                b = beta_measure(pair, mu).lo
                if b / en < val:
                    raise ConsistencyError("a divisorial measure beats delta - lambda on a curve")
            return ThresholdReport(val, d.witness, d.candidate_set + "; proportional case, delta - lambda",
                                   "exact-on-set")
        return ThresholdReport(val, d.witness, d.candidate_set + "; proportional case, delta - lambda",
                               "exact-on-set")
    sv = sigma_val(pair, cands, description, jobs)
    lower = d.value - c_n(pair.model.dim) * norm_sup(pair.model, pair.omega, pair.K)
    return ThresholdReport(sv.value, sv.witness, d.candidate_set, "bracket", lower=lower, upper=sv.value,
                           note="lower bound delta - C_n ||K||, upper bound sigma_val; both over the candidate set")


def candidates_for(model, radius=None, depth=None):
    kw = {}
    if radius is not None:
        kw["radius"] = radius
    if depth is not None:
        kw["depth"] = depth
    return model.candidates(**kw), model.candidate_description(**kw)
