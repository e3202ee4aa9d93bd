"""Rate functions, the early-stop exponent minimizer, and tail predictions.

The relative-entropy kernel is H(x) = 1 - x + x log x.  The early-stop
exponent at supercriticality alpha > 1 and threshold r is J(x0), the
minimum over x >= 0 of

    J(x) = r/(r-1) * h(x) * H(x / h(x)),   h(x) = (alpha(1 - 1/r) + x)**r / r.

Tail predictions pair a speed v(n) with a deviation rate I(eps): the
log-probability of {(n - A*)/f(n) > eps} behaves like -I(eps) * v(n).
Which (v, I) applies depends on the regime of b_c(n) and on where the
scaling family f sits between b_c, a_c/(n p), and n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from .core import (AcNpDiverges, AcNpFinite, AcNpVanishes, BcDiverges,
                   BcFinite, BcVanishes, CriticalQuantities, Regime,
                   SequenceSpec, regime_label)
from .errors import EpsOutOfRange, ParameterError, UnsupportedCombination

__all__ = [
    "entropy_H", "rate_J", "minimize_rate", "ldp_rate_value", "tail_exponent",
    "ScalingFamily", "Const", "AsymBc", "BetweenBcAndAcNp", "AsymAcNp",
    "BetweenAcNpAndN", "TailExponent", "family_from_string",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_CEIL_TIE = 1e-9


def entropy_H(x: float) -> float:
    """H(x) = 1 - x + x log x on [0, inf), with H(0) = 1 and +inf on x < 0."""
    if math.isnan(x):
        raise ParameterError("H is undefined at NaN")
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return math.inf
    return 1.0 - x + x * math.log(x)


def _h_fun(x: float, alpha: float, r: int) -> float:
    return (alpha * (1.0 - 1.0 / r) + x) ** r / r


def rate_J(x: float, alpha: float, r: int):
    """Evaluate (h(x), J(x)); J is finite and strictly positive for x >= 0
    whenever alpha > 1, because x < h(x) everywhere."""
    if alpha <= 1.0:
        raise ParameterError("rate function needs a supercritical alpha > 1")
    if r < 2:
        raise ParameterError("r must be >= 2")
    if x < 0.0:
        raise ParameterError("J is evaluated on x >= 0 only")
    h_val = _h_fun(x, alpha, r)
    j_val = r / (r - 1.0) * h_val * entropy_H(x / h_val)
    return h_val, j_val


def _ceil_tied(y: float) -> float:
    """Ceiling with a tie rule: values within 1e-9 of an integer are
    treated as that integer, so float noise cannot flip the jump."""
    nearest = round(y)
    if abs(y - nearest) <= _CEIL_TIE:
        return float(nearest)
    return float(math.ceil(y))


def minimize_rate(alpha: float, r: int, tol: float = 1e-6):
    """Locate the unique minimizer x0 of J on [0, alpha/r].

    J'(0+) = -inf and J'(alpha/r) > 0 with strict convexity between, so
    the minimum is interior; golden-section on [0, alpha/r], then
    bisection on the central-difference derivative sign to polish well
    below tol.  The bracket must include 0: for large alpha**(r-1) the
    dip sits at x ~ h(0) exp(-h'(0)), which can lie below any positive
    floor even though the infimum value J(0+) stays perfectly computable.
    Returns (x0, J(x0)).
    """
    if alpha <= 1.0:
        raise ParameterError("minimize_rate needs alpha > 1")
    if r < 2:
        raise ParameterError("r must be >= 2")
    if not 0.0 < tol <= 1e-3:
        raise ParameterError("tol must lie in (0, 1e-3]")

    def j(x: float) -> float:
        return rate_J(x, alpha, r)[1]

    a, b = 0.0, alpha / r
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = j(c), j(d)
    # far below tol on purpose: when the dip hugs 0 the bracket midpoint
    # is the answer and its J value must match the infimum tightly
    golden_target = 1e-9
    while b - a > golden_target:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = j(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = j(d)

    def dj(x: float) -> float:
        # step relative to x: J''' grows like 1/x toward 0, so a fixed
        # step would bias the difference quotient there
        step = max(x * 1e-3, 1e-9)
        return (j(x + step) - j(x - step)) / (2.0 * step)

    lo = max(a - golden_target, golden_target / 4.0)
    hi = min(b + golden_target, alpha / r)
    if a > 0.0 and lo < hi and dj(lo) < 0.0 < dj(hi):
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if dj(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        a, b = lo, hi
    x0 = 0.5 * (a + b)
    return x0, j(x0)


@lru_cache(maxsize=256)
def _j_at_minimum(alpha: float, r: int) -> float:
    return minimize_rate(alpha, r)[1]


# ---------------------------------------------------------------------------
# Scaling families

class ScalingFamily:
    """Where the scaling function f(n) sits relative to b_c and a_c/(n p)."""

    tag = "family"

    def scale_at(self, n, p: float, crit: CriticalQuantities) -> float:
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(ScalingFamily):
    """f(n) -> ell, a positive constant."""

    ell: float
    tag: str = field(default="const", init=False)

    def __post_init__(self):
        if self.ell <= 0:
            raise ParameterError("constant scaling needs ell > 0")

    def scale_at(self, n, p, crit):
        return self.ell

    def spec_string(self):
        return f"const:{self.ell!r}"


@dataclass(frozen=True)
class AsymBc(ScalingFamily):
    """f(n) = ell2 * b_c(n)."""

    ell2: float
    tag: str = field(default="asym_bc", init=False)

    def __post_init__(self):
        if self.ell2 <= 0:
            raise ParameterError("asym_bc scaling needs ell2 > 0")

    def scale_at(self, n, p, crit):
        return self.ell2 * crit.b_c

    def spec_string(self):
        return f"asym_bc:{self.ell2!r}"


@dataclass(frozen=True)
class BetweenBcAndAcNp(ScalingFamily):
    """Divergent f with b_c << f << a_c/(n p); geometric interpolation
    f = max(b_c, 1)**(1-theta) * (a_c/(n p))**theta."""

    theta: float = 0.5
    tag: str = field(default="between_bc_acnp", init=False)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ParameterError("interpolation exponent theta must lie in (0, 1)")

    def scale_at(self, n, p, crit):
        anchor = crit.a_c / (n * p)
        return max(crit.b_c, 1.0) ** (1.0 - self.theta) * anchor ** self.theta

    def spec_string(self):
        return f"between_bc_acnp:{self.theta!r}"


@dataclass(frozen=True)
class AsymAcNp(ScalingFamily):
    """f(n) = ell' * a_c(n)/(n p_n)."""

    ell_prime: float
    tag: str = field(default="asym_acnp", init=False)

    def __post_init__(self):
        if self.ell_prime <= 0:
            raise ParameterError("asym_acnp scaling needs ell' > 0")

    def scale_at(self, n, p, crit):
        return self.ell_prime * crit.a_c / (n * p)

    def spec_string(self):
        return f"asym_acnp:{self.ell_prime!r}"


@dataclass(frozen=True)
class BetweenAcNpAndN(ScalingFamily):
    """a_c/(n p) << f(n) <~ n, the range where early stopping dominates.

    With ell1 = 0 the default is f(n) = max(1, g(n) a_c/(n p)) with
    g(n) = log n; g is an arbitrary diverging function in the theory, so
    it is exposed as a parameter.  With ell1 > 0, f(n) = ell1 * n and
    deviations are capped at 1/ell1.
    """

    ell1: float = 0.0
    g: Callable[[float], float] | None = None
    tag: str = field(default="between_acnp_n", init=False)

    def __post_init__(self):
        if self.ell1 < 0:
            raise ParameterError("ell1 must be >= 0")
        if self.ell1 > 0 and self.g is not None:
            raise ParameterError("give either ell1 > 0 or a diverging g, not both")

    def scale_at(self, n, p, crit):
        if self.ell1 > 0:
            return self.ell1 * n
        g = self.g if self.g is not None else math.log
        return max(1.0, g(n) * crit.a_c / (n * p))

    def spec_string(self):
        return f"between_acnp_n:{self.ell1!r}"


_FAMILY_TAGS = {
    "const": (Const, "ell"),
    "asym_bc": (AsymBc, "ell2"),
    "between_bc_acnp": (BetweenBcAndAcNp, "theta"),
    "asym_acnp": (AsymAcNp, "ell_prime"),
    "between_acnp_n": (BetweenAcNpAndN, "ell1"),
}


def family_from_string(text: str) -> ScalingFamily:
    """Parse 'tag' or 'tag:constant' into a ScalingFamily."""
    tag, _, arg = text.partition(":")
    if tag not in _FAMILY_TAGS:
        raise ParameterError(
            f"unknown family tag {tag!r}; choose from {sorted(_FAMILY_TAGS)}")
    cls, kw = _FAMILY_TAGS[tag]
    if not arg:
        if tag in ("between_bc_acnp", "between_acnp_n"):
            return cls()
        raise ParameterError(f"family {tag!r} needs a constant, e.g. '{tag}:1.0'")
    try:
        return cls(**{kw: float(arg)})
    except ValueError as exc:
        raise ParameterError(f"bad family constant in {text!r}") from exc


# ---------------------------------------------------------------------------
# Rate functions of the five limit theorems

def ldp_rate_value(regime: Regime, family: ScalingFamily, x: float,
                   alpha: float, r: int) -> float:
    """Rate-function value at x for the theorem matching (regime, family).

    x may be +-inf: the point at infinity is first-class, carrying the
    early-stop exponent J(x0) for the families with speed a_c.
    """
    if math.isnan(x):
        raise ParameterError("x must not be NaN")
    j0 = _j_at_minimum(alpha, r)
    acnp_diverges = isinstance(regime, (BcDiverges, BcFinite)) or (
        isinstance(regime, BcVanishes) and isinstance(regime.sub, AcNpDiverges))

    if isinstance(family, BetweenAcNpAndN):
        xbar = math.inf if family.ell1 == 0.0 else 1.0 / family.ell1
        if x == 0.0:
            return 0.0
        if x == xbar:
            return j0
        return math.inf

    if isinstance(family, AsymBc):
        if not isinstance(regime, BcDiverges):
            raise UnsupportedCombination(
                "f ~ b_c has a deviation law only when b_c diverges")
        return entropy_H(family.ell2 * x)

    if isinstance(family, BetweenBcAndAcNp):
        if not acnp_diverges:
            raise UnsupportedCombination(
                "no divergent f below a_c/(n p) exists when that ratio converges")
        return math.inf if x < 0 else float(x)

    if isinstance(family, AsymAcNp):
        if not acnp_diverges:
            raise UnsupportedCombination(
                "f ~ a_c/(n p) needs a_c/(n p) -> infinity")
        if x < 0:
            return math.inf
        if math.isinf(x):
            return j0
        return family.ell_prime * x

    if isinstance(family, Const):
        if not isinstance(regime, BcVanishes):
            raise UnsupportedCombination(
                "a convergent f only has a deviation law when b_c -> 0")
        if x < 0:
            return math.inf
        if isinstance(regime.sub, AcNpDiverges):
            return math.inf if math.isinf(x) else _ceil_tied(family.ell * x)
        if isinstance(regime.sub, AcNpFinite):
            if math.isinf(x):
                return j0
            return _ceil_tied(family.ell * x) / regime.sub.gamma
        if family.ell < 1.0:
            raise UnsupportedCombination(
                "with a_c/(n p) -> 0 the admissible constant scalings have ell >= 1")
        if x == 0.0:
            return 0.0
        return j0 if math.isinf(x) else math.inf

    raise UnsupportedCombination(f"unknown scaling family {family!r}")


# ---------------------------------------------------------------------------
# Tables 1-5: (speed, rate) lookup for the right tail

@dataclass(frozen=True)
class TailExponent:
    """Predicted pair (v(n), I(eps)) plus the product -I(eps) v(n).

    table_row records which table cell produced the prediction, e.g.
    'table3/col1'.
    """

    speed_at_n: float
    rate_at_eps: float
    log_prob_prediction: float
    table_row: str
    n: int | None = None
    eps: float | None = None

    def to_json(self) -> str:
        return json.dumps({
            "speed_at_n": self.speed_at_n,
            "rate_at_eps": self.rate_at_eps,
            "log_prob_prediction": self.log_prob_prediction,
            "log_base": "e",
            "table_row": self.table_row,
            "n": None if self.n is None else int(self.n),
            "eps": self.eps,
        }, sort_keys=True)


def _speed_collapse(f_val: float, log_b_c: float) -> float:
    # -f log(b_c/f); the theorem form, asymptotically equal to f log f when
    # b_c converges, and used uniformly here.
    return f_val * (math.log(f_val) - log_b_c)


def tail_exponent(spec: SequenceSpec, n, family: ScalingFamily, eps: float,
                  regime: Regime) -> TailExponent:
    """Look up (v(n), I(eps)) for P((n - A*)/f(n) > eps) in Tables 1-5.

    Raises UnsupportedCombination for cells absent from the tables and
    EpsOutOfRange where the tail estimate restricts eps (f ~ ell2 b_c
    needs eps > 1/ell2; f with lim f/n = ell1 > 0 needs eps < 1/ell1).
    """
    if eps <= 0.0:
        raise ParameterError("eps must be positive")
    if spec.alpha is None or spec.alpha <= 1.0:
        raise ParameterError("tail predictions need a supercritical alpha > 1")
    crit = spec.crit_at(n)
    p = spec.p_at(n)
    j0 = _j_at_minimum(spec.alpha, spec.r)

    def build(v: float, rate: float, tag: str) -> TailExponent:
        return TailExponent(speed_at_n=v, rate_at_eps=rate,
                            log_prob_prediction=-rate * v, table_row=tag,
                            n=int(n), eps=eps)

    def early_stop_guard(ell1: float):
        if ell1 > 0.0 and eps >= 1.0 / ell1:
            raise EpsOutOfRange(
                f"eps must lie in (0, {1.0 / ell1}) when f(n)/n -> {ell1}")

    if isinstance(regime, BcDiverges):
        table = "table1"
        if isinstance(family, AsymBc):
            if eps <= 1.0 / family.ell2:
                raise EpsOutOfRange(
                    f"the upper-tail estimate needs eps > {1.0 / family.ell2}")
            return build(crit.b_c, entropy_H(family.ell2 * eps), f"{table}/col1")
        if isinstance(family, BetweenBcAndAcNp):
            f_val = family.scale_at(n, p, crit)
            return build(_speed_collapse(f_val, crit.log_b_c), eps, f"{table}/col2")
        if isinstance(family, AsymAcNp):
            return build(crit.a_c, min(j0, family.ell_prime * eps), f"{table}/col3")
        if isinstance(family, BetweenAcNpAndN):
            early_stop_guard(family.ell1)
            return build(crit.a_c, j0, f"{table}/col4")
        raise UnsupportedCombination(
            f"no prediction for family {family.tag} when b_c diverges")

    if isinstance(regime, BcFinite):
        table = "table2"
        if isinstance(family, BetweenBcAndAcNp):
            f_val = family.scale_at(n, p, crit)
            return build(_speed_collapse(f_val, crit.log_b_c), eps, f"{table}/col1")
        if isinstance(family, AsymAcNp):
            return build(crit.a_c, min(j0, family.ell_prime * eps), f"{table}/col2")
        if isinstance(family, BetweenAcNpAndN):
            early_stop_guard(family.ell1)
            return build(crit.a_c, j0, f"{table}/col3")
        raise UnsupportedCombination(
            f"no prediction for family {family.tag} when b_c converges in (0, inf)")

    if isinstance(regime, BcVanishes):
        sub = regime.sub
        if isinstance(sub, AcNpDiverges):
            table = "table3"
            if isinstance(family, Const):
                return build(-crit.log_b_c, _ceil_tied(family.ell * eps),
                             f"{table}/col1")
            if isinstance(family, BetweenBcAndAcNp):
                f_val = family.scale_at(n, p, crit)
                return build(_speed_collapse(f_val, crit.log_b_c), eps,
                             f"{table}/col2")
            if isinstance(family, AsymAcNp):
                return build(crit.a_c, min(j0, family.ell_prime * eps),
                             f"{table}/col3")
            if isinstance(family, BetweenAcNpAndN):
                early_stop_guard(family.ell1)
                return build(crit.a_c, j0, f"{table}/col4")
            raise UnsupportedCombination(
                f"no prediction for family {family.tag} in the b_c -> 0, "
                "a_c/(n p) -> inf regime")
        if isinstance(sub, AcNpFinite):
            table = "table4"
            if isinstance(family, Const):
                rate = min(j0, _ceil_tied(family.ell * eps) / sub.gamma)
                return build(crit.a_c, rate, f"{table}/col1")
            if isinstance(family, BetweenAcNpAndN):
                early_stop_guard(family.ell1)
                return build(crit.a_c, j0, f"{table}/col2")
            raise UnsupportedCombination(
                f"no prediction for family {family.tag} in the b_c -> 0, "
                "a_c/(n p) -> gamma regime")
        # a_c/(n p) -> 0: one cell, speed a_c, rate J(x0)
        if isinstance(family, Const):
            if family.ell < 1.0:
                raise UnsupportedCombination(
                    "constant scalings need ell >= 1 when a_c/(n p) -> 0")
            return build(crit.a_c, j0, "table5/col1")
        if isinstance(family, BetweenAcNpAndN):
            early_stop_guard(family.ell1)
            return build(crit.a_c, j0, "table5/col1")
        raise UnsupportedCombination(
            f"no prediction for family {family.tag} in the b_c -> 0, "
            "a_c/(n p) -> 0 regime")

    raise UnsupportedCombination(f"unknown regime {regime_label(regime)!r}")
