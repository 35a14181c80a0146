"""Num(X): numerical classes, positivity, volume, trace, norms and the Thompson ratios.

Every backend model subclasses VarietyModel and supplies a handful of
intersection primitives; the functions at the bottom of this module are
backend-independent.
"""
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError, DomainError, PositivityError
from .scalars import fmt


@dataclass(frozen=True)
class NumClass:
    coords: tuple
    backend_id: str

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in self.coords))

    def _same(self, other):
        if not isinstance(other, NumClass):
            return NotImplemented
        if other.backend_id != self.backend_id:
            raise DomainError(f"classes from different models: {self.backend_id} vs {other.backend_id}")
        return True

    def __add__(self, other):
        self._same(other)
        return NumClass(tuple(a + b for a, b in zip(self.coords, other.coords)), self.backend_id)

    def __sub__(self, other):
        self._same(other)
        return NumClass(tuple(a - b for a, b in zip(self.coords, other.coords)), self.backend_id)

    def __neg__(self):
        return NumClass(tuple(-a for a in self.coords), self.backend_id)

    def __mul__(self, s):
        s = Fraction(s)
        return NumClass(tuple(s * a for a in self.coords), self.backend_id)

    __rmul__ = __mul__

    def is_zero(self):
        return all(c == 0 for c in self.coords)

    def to_json(self):
        return [fmt(c) for c in self.coords]


class VarietyModel:
    """Base class; subclasses set kind, dim, rank, backend_id, canonical."""

    kind = "abstract"
    dim = 0
    rank = 0
    backend_id = ""
    # every report carries this note for backends whose cones come from user data
    cone_assumption = None

    def cls(self, coords) -> NumClass:
        coords = tuple(Fraction(c) for c in coords)
        if len(coords) != self.rank:
            raise DomainError(f"class has {len(coords)} coordinates, model rank is {self.rank}")
        return NumClass(coords, self.backend_id)

    def zero(self):
        return self.cls([0] * self.rank)

    def check(self, c: NumClass):
        if c.backend_id != self.backend_id:
            raise DomainError(f"class belongs to {c.backend_id}, not {self.backend_id}")
        if len(c.coords) != self.rank:
            raise DomainError("class length does not match the Picard rank")

    # primitives supplied by backends
    def top_power(self, w: NumClass) -> Fraction:
        raise NotImplementedError

    def mixed(self, w: NumClass, theta: NumClass) -> Fraction:
        """(w^{n-1} . theta)"""
        raise NotImplementedError

    def curve_pairings(self, theta: NumClass):
        """theta . C over the extremal curves C."""
        raise NotImplementedError

    def ample_failure(self, theta: NumClass):
        """None if theta is ample, else a string naming the failed test."""
        raise NotImplementedError

    def default_omega(self):
        return None


def is_ample(model: VarietyModel, theta: NumClass) -> bool:
    model.check(theta)
    return model.ample_failure(theta) is None


def require_ample(model, w, what="omega"):
    model.check(w)
    why = model.ample_failure(w)
    if why is not None:
        raise PositivityError(f"{what} is not ample: {why}")


def volume(model, w) -> Fraction:
    require_ample(model, w)
    return model.top_power(w)


def trace(model, w, theta) -> Fraction:
    """tr_w(theta) = n (w^{n-1}.theta) / (w^n)."""
    require_ample(model, w)
    model.check(theta)
    return model.dim * model.mixed(w, theta) / model.top_power(w)


def norm_sup(model, w, theta) -> Fraction:
    require_ample(model, w)
    model.check(theta)
    tc = model.curve_pairings(theta)
    wc = model.curve_pairings(w)
    if not wc:
        raise ConfigError("no extremal curve classes supplied")
    return max(abs(a) / b for a, b in zip(tc, wc))


def thompson(model, w, w2):
    """Extreme ratios (s_lo, s_hi) with s_lo w <= w2 <= s_hi w."""
    require_ample(model, w)
    require_ample(model, w2, "omega'")
    a = model.curve_pairings(w)
    b = model.curve_pairings(w2)
    if not a:
        raise ConfigError("no extremal curve classes supplied")
    ratios = [y / x for x, y in zip(a, b)]
    return min(ratios), max(ratios)


def thompson_s(model, w, w2) -> Fraction:
    """Smallest s >= 1 with s^-1 w <= w2 <= s w."""
    lo, hi = thompson(model, w, w2)
    return max(hi, 1 / lo, Fraction(1))


def thompson_distance(pair) -> float:
    import math
    lo, hi = pair
    return max(math.log(hi), -math.log(lo), 0.0)


def proportionality(model, w, theta):
    """lambda with theta == lambda w in Num(X), or None."""
    model.check(w)
    model.check(theta)
    lam = None
    for a, b in zip(w.coords, theta.coords):
        if a == 0:
            if b != 0:
                return None
            continue
        r = b / a
        if lam is None:
            lam = r
        elif r != lam:
            return None
    return lam if lam is not None else Fraction(0)
