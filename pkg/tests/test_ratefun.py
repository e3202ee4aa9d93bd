import json
import math

import numpy as np
import pytest

from bootperc.core import (AcNpDiverges, AcNpFinite, AcNpVanishes, BcDiverges,
                           BcFinite, BcVanishes, SequenceSpec)
from bootperc.errors import (EpsOutOfRange, ParameterError,
                             UnsupportedCombination)
from bootperc.ratefun import (AsymAcNp, AsymBc, BetweenAcNpAndN,
                              BetweenBcAndAcNp, Const, entropy_H,
                              family_from_string, ldp_rate_value,
                              minimize_rate, rate_J, tail_exponent)

REG_BC_INF = BcDiverges()
REG_BC_FIN = BcFinite(b=2.0)
REG_V_DIV = BcVanishes(sub=AcNpDiverges())
REG_V_GAM = BcVanishes(sub=AcNpFinite(gamma=2.0))
REG_V_VAN = BcVanishes(sub=AcNpVanishes())


def grid_J(x, alpha, r):
    h = (alpha * (1 - 1 / r) + x) ** r / r
    w = x / h
    hw = np.where(w > 0, 1 - w + w * np.log(np.maximum(w, 1e-300)), 1.0)
    return r / (r - 1) * h * hw


# ---------------------------------------------------------------------------
# entropy kernel

def test_entropy_values():
    assert entropy_H(1.0) == 0.0
    assert entropy_H(0.0) == 1.0
    assert entropy_H(2.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-12)
    assert entropy_H(-1.0) == math.inf
    assert entropy_H(math.inf) == math.inf


def test_entropy_shape_on_grid():
    xs = np.linspace(0.0, 10.0, 10_001)
    vals = np.array([entropy_H(float(x)) for x in xs])
    assert (vals >= -1e-15).all()
    assert vals[np.searchsorted(xs, 1.0)] == pytest.approx(0.0, abs=1e-12)
    below = vals[xs < 1.0]
    above = vals[xs > 1.0]
    assert (np.diff(below) < 0).all()
    assert (np.diff(above) > 0).all()
    # convexity via second differences
    assert (np.diff(vals, 2) > -1e-12).all()


# ---------------------------------------------------------------------------
# J and its structure

def test_rate_J_at_zero():
    h, j = rate_J(0.0, 2.0, 2)
    assert h == pytest.approx(0.5)
    assert j == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [1.01, 1.1, 2.0, 5.0, 10.0])
@pytest.mark.parametrize("r", [2, 3, 5])
def test_rate_J_zero_matches_closed_form(alpha, r):
    # the h/H route must agree with (1/r)(1-1/r)^(r-1) alpha^r
    _, j = rate_J(0.0, alpha, r)
    closed = (1 / r) * (1 - 1 / r) ** (r - 1) * alpha ** r
    assert j == pytest.approx(closed, rel=1e-12)


@pytest.mark.parametrize("alpha", [1.01, 1.1, 2.0, 5.0, 10.0])
@pytest.mark.parametrize("r", [2, 3, 5])
def test_x_below_h_and_J_positive(alpha, r):
    xs = np.linspace(0.0, 10 * alpha / r, 500)
    for x in xs:
        h, j = rate_J(float(x), alpha, r)
        assert x < h
        assert j > 0.0


def test_ratio_at_alpha_over_r():
    for alpha, r in [(2.0, 2), (1.5, 3), (3.0, 5)]:
        x = alpha / r
        h, j = rate_J(x, alpha, r)
        assert x / h == pytest.approx(alpha ** (1 - r), rel=1e-12)
        assert x / h < 1.0
        assert j > 0.0


@pytest.mark.parametrize("alpha,r", [(1.5, 2), (2.0, 3), (5.0, 5)])
def test_J_increasing_beyond_alpha_over_r(alpha, r):
    xs = np.linspace(alpha / r, 8 * alpha / r, 400)
    js = [rate_J(float(x), alpha, r)[1] for x in xs]
    assert all(b > a for a, b in zip(js, js[1:]))


def test_rate_J_validation():
    with pytest.raises(ParameterError):
        rate_J(0.5, 1.0, 2)
    with pytest.raises(ParameterError):
        rate_J(-0.1, 2.0, 2)
    with pytest.raises(ParameterError):
        rate_J(0.5, 2.0, 1)


# ---------------------------------------------------------------------------
# minimizer

@pytest.mark.parametrize("alpha,r", [(2.0, 2), (1.5, 3)])
def test_minimize_rate_matches_grid_oracle(alpha, r):
    xs = np.arange(0.0, alpha / r + 1e-6, 1e-6)
    js = grid_J(xs, alpha, r)
    x_star = float(xs[np.argmin(js)])
    x0, j0 = minimize_rate(alpha, r, tol=1e-6)
    assert abs(x0 - x_star) <= 1e-4
    assert j0 == pytest.approx(float(js.min()), rel=1e-8)


@pytest.mark.parametrize("alpha,r", [(1.1, 2), (2.0, 2), (5.0, 3), (2.0, 5)])
def test_minimizer_interior_and_stationary(alpha, r):
    tol = 1e-6
    x0, j0 = minimize_rate(alpha, r, tol=tol)
    assert 0.0 < x0 <= alpha / r
    # step scaled to x0: J''' blows up near 0, so a fixed step would put
    # third-derivative bias into the central difference
    step = max(x0 * 1e-3, 1e-9)
    deriv = (rate_J(x0 + step, alpha, r)[1]
             - rate_J(x0 - step, alpha, r)[1]) / (2 * step)
    assert abs(deriv) <= 10 * tol
    assert j0 == rate_J(x0, alpha, r)[1]


def test_minimize_rate_validation():
    with pytest.raises(ParameterError):
        minimize_rate(1.0, 2)
    with pytest.raises(ParameterError):
        minimize_rate(2.0, 2, tol=1e-2)
    with pytest.raises(ParameterError):
        minimize_rate(2.0, 2, tol=0.0)


# ---------------------------------------------------------------------------
# theorem rate functions

def test_rate_I2_vanishes_at_inverse_ell():
    assert ldp_rate_value(REG_BC_INF, AsymBc(1.0), 1.0, 2.0, 2) == 0.0
    assert ldp_rate_value(REG_BC_INF, AsymBc(2.0), 0.5, 2.0, 2) == 0.0


def test_rate_I4_ceiling():
    assert ldp_rate_value(REG_V_DIV, Const(1.0), 0.5, 2.0, 2) == 1.0
    assert ldp_rate_value(REG_V_DIV, Const(1.0), -0.5, 2.0, 2) == math.inf


def test_rate_I5_two_branches():
    j0 = minimize_rate(2.0, 2)[1]
    assert ldp_rate_value(REG_V_GAM, Const(1.0), 3.0, 2.0, 2) == pytest.approx(1.5)
    assert ldp_rate_value(REG_V_GAM, Const(1.0), math.inf, 2.0, 2) == pytest.approx(j0)


def test_rate_I1_two_point_structure():
    j0 = minimize_rate(2.0, 2)[1]
    fam = BetweenAcNpAndN()
    assert ldp_rate_value(REG_BC_INF, fam, 0.0, 2.0, 2) == 0.0
    assert ldp_rate_value(REG_BC_INF, fam, math.inf, 2.0, 2) == pytest.approx(j0)
    assert ldp_rate_value(REG_BC_INF, fam, 0.5, 2.0, 2) == math.inf
    lin = BetweenAcNpAndN(ell1=0.25)
    assert ldp_rate_value(REG_BC_FIN, lin, 4.0, 2.0, 2) == pytest.approx(j0)
    assert ldp_rate_value(REG_BC_FIN, lin, 5.0, 2.0, 2) == math.inf


def test_rate_I3_identity():
    for regime in (REG_BC_INF, REG_BC_FIN, REG_V_DIV):
        assert ldp_rate_value(regime, BetweenBcAndAcNp(), 1.7, 2.0, 2) == 1.7
        assert ldp_rate_value(regime, BetweenBcAndAcNp(), -1.0, 2.0, 2) == math.inf


def test_rate_I5_prime_linear():
    j0 = minimize_rate(2.0, 2)[1]
    fam = AsymAcNp(0.5)
    assert ldp_rate_value(REG_BC_INF, fam, 2.0, 2.0, 2) == pytest.approx(1.0)
    assert ldp_rate_value(REG_V_DIV, fam, math.inf, 2.0, 2) == pytest.approx(j0)


def test_rate_value_unsupported_combinations():
    with pytest.raises(UnsupportedCombination):
        ldp_rate_value(REG_BC_FIN, AsymBc(1.0), 1.0, 2.0, 2)
    with pytest.raises(UnsupportedCombination):
        ldp_rate_value(REG_V_GAM, BetweenBcAndAcNp(), 1.0, 2.0, 2)
    with pytest.raises(UnsupportedCombination):
        ldp_rate_value(REG_BC_INF, Const(1.0), 1.0, 2.0, 2)
    with pytest.raises(UnsupportedCombination):
        ldp_rate_value(REG_V_VAN, Const(0.5), 1.0, 2.0, 2)


def test_ceiling_tie_rule():
    # float noise within 1e-9 of an integer must not bump the ceiling
    assert ldp_rate_value(REG_V_DIV, Const(1.0), 2.0 + 1e-10, 2.0, 2) == 2.0
    assert ldp_rate_value(REG_V_DIV, Const(1.0), 2.0 - 1e-10, 2.0, 2) == 2.0
    assert ldp_rate_value(REG_V_DIV, Const(1.0), 2.0 + 1e-6, 2.0, 2) == 3.0


# ---------------------------------------------------------------------------
# tail exponents per table

SPEC_07 = SequenceSpec(rule="power", constants={"beta": 0.7}, r=2, alpha=2.0)
SPEC_FIN = SequenceSpec(rule="log_form", constants={"d": -math.log(2)},
                        r=2, alpha=2.0)
SPEC_DIV = SequenceSpec(rule="scaled_log", constants={"c": 0.5}, r=2, alpha=2.0)


def test_tail_exponent_early_stop_cell():
    te = tail_exponent(SPEC_DIV, 10**5, BetweenAcNpAndN(), 0.5, REG_BC_INF)
    j0 = minimize_rate(2.0, 2)[1]
    assert te.table_row == "table1/col4"
    assert te.speed_at_n == pytest.approx(SPEC_DIV.crit_at(10**5).a_c)
    assert te.rate_at_eps == pytest.approx(j0)


def test_tail_exponent_const_cell_in_table3():
    te = tail_exponent(SPEC_07, 10**5, Const(2.0), 0.5, REG_V_DIV)
    crit = SPEC_07.crit_at(10**5)
    assert te.table_row == "table3/col1"
    assert te.speed_at_n == pytest.approx(-crit.log_b_c)
    assert te.rate_at_eps == 1.0  # ceil(2 * 0.5)


def test_tail_exponent_asym_acnp_in_table2():
    te = tail_exponent(SPEC_FIN, 10**5, AsymAcNp(1.0), 0.3, REG_BC_FIN)
    j0 = minimize_rate(2.0, 2)[1]
    assert te.table_row == "table2/col2"
    assert te.rate_at_eps == pytest.approx(min(j0, 0.3))


def test_tail_exponent_speed_for_mid_family():
    te = tail_exponent(SPEC_DIV, 10**6, BetweenBcAndAcNp(), 0.5, REG_BC_INF)
    crit = SPEC_DIV.crit_at(10**6)
    f_val = BetweenBcAndAcNp().scale_at(10**6, SPEC_DIV.p_at(10**6), crit)
    assert te.speed_at_n == pytest.approx(-f_val * (crit.log_b_c - math.log(f_val)))
    assert te.rate_at_eps == 0.5


def test_tail_exponent_product_invariant():
    te = tail_exponent(SPEC_07, 10**4, BetweenAcNpAndN(), 0.25, REG_V_DIV)
    assert te.log_prob_prediction == pytest.approx(
        -te.rate_at_eps * te.speed_at_n)


def test_tail_exponent_eps_restrictions():
    with pytest.raises(EpsOutOfRange):
        tail_exponent(SPEC_DIV, 10**5, AsymBc(2.0), 0.4, REG_BC_INF)
    tail_exponent(SPEC_DIV, 10**5, AsymBc(2.0), 0.6, REG_BC_INF)
    with pytest.raises(EpsOutOfRange):
        tail_exponent(SPEC_07, 10**5, BetweenAcNpAndN(ell1=0.5), 2.5, REG_V_DIV)
    with pytest.raises(ParameterError):
        tail_exponent(SPEC_07, 10**5, Const(1.0), 0.0, REG_V_DIV)


FAMILIES = {
    "const": Const(1.0),
    "asym_bc": AsymBc(1.0),
    "between_bc_acnp": BetweenBcAndAcNp(),
    "asym_acnp": AsymAcNp(1.0),
    "between_acnp_n": BetweenAcNpAndN(),
}

# (regime, family) cells present in the five tables
SUPPORTED = {
    ("bc_diverges", "asym_bc", "table1/col1"),
    ("bc_diverges", "between_bc_acnp", "table1/col2"),
    ("bc_diverges", "asym_acnp", "table1/col3"),
    ("bc_diverges", "between_acnp_n", "table1/col4"),
    ("bc_finite", "between_bc_acnp", "table2/col1"),
    ("bc_finite", "asym_acnp", "table2/col2"),
    ("bc_finite", "between_acnp_n", "table2/col3"),
    ("bc_vanishes/acnp_diverges", "const", "table3/col1"),
    ("bc_vanishes/acnp_diverges", "between_bc_acnp", "table3/col2"),
    ("bc_vanishes/acnp_diverges", "asym_acnp", "table3/col3"),
    ("bc_vanishes/acnp_diverges", "between_acnp_n", "table3/col4"),
    ("bc_vanishes/acnp_finite", "const", "table4/col1"),
    ("bc_vanishes/acnp_finite", "between_acnp_n", "table4/col2"),
    ("bc_vanishes/acnp_vanishes", "const", "table5/col1"),
    ("bc_vanishes/acnp_vanishes", "between_acnp_n", "table5/col1"),
}

REGIME_SPECS = {
    "bc_diverges": (REG_BC_INF, SPEC_DIV),
    "bc_finite": (REG_BC_FIN, SPEC_FIN),
    "bc_vanishes/acnp_diverges": (REG_V_DIV, SPEC_07),
    "bc_vanishes/acnp_finite": (
        REG_V_GAM, SequenceSpec(rule="power", constants={"beta": 2 / 3},
                                r=2, alpha=2.0)),
    "bc_vanishes/acnp_vanishes": (
        REG_V_VAN, SequenceSpec(rule="power", constants={"beta": 0.6},
                                r=2, alpha=2.0)),
}


def test_table_cell_coverage_is_total():
    """Every cell of the five tables is reachable with a finite speed; all
    other (regime, family) pairs refuse."""
    eps = 0.4  # keeps every restricted eps admissible (1/ell2 = 1 > eps is
    # out of range for asym_bc, so use a dedicated eps there)
    seen = set()
    n_cover = 10**10  # large enough that b_c << a_c/(n p) orders numerically
    for reg_label, (regime, spec) in REGIME_SPECS.items():
        for fam_label, family in FAMILIES.items():
            expected = next((row for row in SUPPORTED
                             if row[0] == reg_label and row[1] == fam_label),
                            None)
            use_eps = 1.5 if fam_label == "asym_bc" else eps
            if expected is None:
                with pytest.raises(UnsupportedCombination):
                    tail_exponent(spec, n_cover, family, use_eps, regime)
            else:
                te = tail_exponent(spec, n_cover, family, use_eps, regime)
                assert math.isfinite(te.speed_at_n)
                assert te.speed_at_n > 0
                assert te.table_row == expected[2]
                seen.add(expected)
    assert seen == SUPPORTED


def test_tail_exponent_json_serialization():
    te = tail_exponent(SPEC_07, 10**4, Const(1.0), 0.7, REG_V_DIV)
    doc = json.loads(te.to_json())
    assert doc["table_row"] == "table3/col1"
    assert doc["log_base"] == "e"
    assert doc["eps"] == 0.7


# ---------------------------------------------------------------------------
# family parsing

def test_family_from_string():
    assert family_from_string("const:2.5") == Const(2.5)
    assert family_from_string("asym_bc:1.0") == AsymBc(1.0)
    assert family_from_string("between_bc_acnp") == BetweenBcAndAcNp()
    assert family_from_string("between_bc_acnp:0.3") == BetweenBcAndAcNp(0.3)
    assert family_from_string("asym_acnp:0.7") == AsymAcNp(0.7)
    assert family_from_string("between_acnp_n") == BetweenAcNpAndN()
    assert family_from_string("between_acnp_n:0.2") == BetweenAcNpAndN(ell1=0.2)
    with pytest.raises(ParameterError):
        family_from_string("nope:1")
    with pytest.raises(ParameterError):
        family_from_string("const")
    with pytest.raises(ParameterError):
        family_from_string("const:x")


def test_family_validation():
    with pytest.raises(ParameterError):
        Const(0.0)
    with pytest.raises(ParameterError):
        BetweenBcAndAcNp(theta=1.0)
    with pytest.raises(ParameterError):
        BetweenAcNpAndN(ell1=-1.0)
