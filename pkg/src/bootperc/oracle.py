"""Exact law of the final size via the binomial-increment Markov chain.

Writing S(t) for the number of non-seed activations by time t, the count
process is Markov: given S(t) = s, the next increment is
Bin(n - a - s, q_t) with q_t = (pi(t+1) - pi(t)) / (1 - pi(t)), and the
process stops at the first t with a + S(t) = t.  A forward pass over the
alive states (those with a + S(u) > u for all u <= t) therefore yields
the exact distribution of T = A*.

All state masses are carried in log space and reported as ScaledFloat, so
tail atoms far below 1e-308 survive; binomial transition rows are
truncated at 1e-30 relative to their peak with the discarded mass bound
reported alongside the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._binom import log_binom_cdf, log_binom_pmf, log_pmf_window
from .core import ModelParams, _pi, critical_quantities
from .errors import NumericalDegeneracyError, ParameterError
from .ratefun import ScalingFamily
from .scaled import ScaledFloat, scaled_sum

__all__ = [
    "FinalSizePmf", "exact_pmf", "exact_stop_cdf", "exact_tail_query",
    "auxiliary_tail", "brute_force_pmf", "PMF_NODE_CAP", "BRUTE_FORCE_CAP",
]

PMF_NODE_CAP = 2000
BRUTE_FORCE_CAP = 7
_ROW_REL_TOL = 1e-30
_LN_ROW_REL_TOL = math.log(_ROW_REL_TOL)
_FULL_ROW_LIMIT = 64  # rows at most this wide are never truncated


@dataclass(frozen=True)
class FinalSizePmf:
    """Exact pmf of A* over {a, ..., n}, entries as ScaledFloat.

    truncation_bound certifies the total transition mass discarded by row
    truncation; it is exactly 0.0 for small instances.
    """

    params: ModelParams
    probs: dict
    truncation_bound: float = 0.0

    def prob(self, k: int) -> float:
        return float(self.probs.get(k, ScaledFloat(0.0)))

    def log2_prob(self, k: int) -> float:
        return self.probs.get(k, ScaledFloat(0.0)).log2()

    def total(self) -> ScaledFloat:
        return scaled_sum(self.probs.values())

    def support(self):
        return sorted(self.probs)

    def cdf_at(self, k: int) -> ScaledFloat:
        return scaled_sum(v for t, v in self.probs.items() if t <= k)

    def csv_rows(self):
        for k in self.support():
            yield k, self.prob(k), self.log2_prob(k)


# ---------------------------------------------------------------------------
# conditional activation hazard

def _log_q_schedule(p: float, r: int, t_max: int):
    """For t = 0..t_max-1, the log of q_t and of 1 - q_t, where q_t is the
    chance an inactive node activates at step t+1 given inactivity at t.

    Computed from the log of the inactivity probability Q(t), whose
    difference gives log(1 - q_t) without cancellation even when pi ~ 1.
    """
    if p == 0.0:
        return (np.full(t_max, -np.inf), np.zeros(t_max))
    from scipy.special import gammaln

    t = np.arange(t_max + 1, dtype=np.float64)
    k = np.arange(r, dtype=np.float64)
    if p < 1.0:
        terms = (gammaln(t[:, None] + 1) - gammaln(k[None, :] + 1)
                 - gammaln(t[:, None] - k[None, :] + 1)
                 + k[None, :] * math.log(p)
                 + (t[:, None] - k[None, :]) * math.log1p(-p))
        terms = np.where(k[None, :] > t[:, None], -np.inf, terms)
        with np.errstate(invalid="ignore"):
            shift = terms.max(axis=1)
            log_q_inactive = shift + np.log(
                np.exp(terms - shift[:, None]).sum(axis=1))
    else:
        log_q_inactive = np.where(t < r, 0.0, -np.inf)

    with np.errstate(invalid="ignore"):
        delta = log_q_inactive[1:] - log_q_inactive[:-1]
    dead = ~np.isfinite(log_q_inactive[:-1])
    delta = np.where(dead, -np.inf, delta)  # no inactive nodes remain
    with np.errstate(invalid="ignore"):
        q = -np.expm1(delta)
    q = np.where(dead, 1.0, q)
    bad = (q < -1e-12) | (q > 1.0 + 1e-12)
    if bad.any():
        t_bad = int(np.nonzero(bad)[0][0])
        raise NumericalDegeneracyError(
            f"conditional activation probability q_{t_bad} = {q[t_bad]} "
            "left [0, 1] by more than 1e-12")
    q = np.clip(q, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
    log_1mq = np.where(dead, -np.inf, delta)
    return log_q, log_1mq


def _scalar_log_pmf(m: int, j: int, log_q: float, log_1mq: float) -> float:
    if j < 0 or j > m:
        return -math.inf
    if log_q == -math.inf:
        return 0.0 if j == 0 else -math.inf
    if log_1mq == -math.inf:
        return 0.0 if j == m else -math.inf
    return (math.lgamma(m + 1) - math.lgamma(j + 1) - math.lgamma(m - j + 1)
            + j * log_q + (m - j) * log_1mq)


def _row_window(m: int, log_q: float, log_1mq: float):
    """[j_lo, j_hi] covering all increments above the relative cutoff.

    Log-concavity of the binomial pmf makes edge probing sound.  Returns
    the window plus the number of support points dropped.
    """
    if m <= _FULL_ROW_LIMIT or log_q == -math.inf or log_1mq == -math.inf:
        return 0, m, 0
    q = math.exp(log_q)
    mode = min(m, int((m + 1) * q))
    cutoff = _scalar_log_pmf(m, mode, log_q, log_1mq) + _LN_ROW_REL_TOL
    sigma = math.sqrt(max(m * q * (1.0 - q), 1.0))
    j_hi = min(m, mode + int(12.0 * sigma) + 45)
    while j_hi < m and _scalar_log_pmf(m, j_hi, log_q, log_1mq) >= cutoff:
        j_hi = min(m, j_hi + 32)
    j_lo = max(0, mode - int(12.0 * sigma) - 45)
    while j_lo > 0 and _scalar_log_pmf(m, j_lo, log_q, log_1mq) >= cutoff:
        j_lo = max(0, j_lo - 32)
    return j_lo, j_hi, m + 1 - (j_hi - j_lo + 1)


# ---------------------------------------------------------------------------
# full pmf (alive-state forward pass)

def exact_pmf(params: ModelParams, cap: int = PMF_NODE_CAP) -> FinalSizePmf:
    """Exact distribution of A* by dynamic programming over (t, S(t))."""
    n, p, r, a = params.n, params.p, params.r, params.a
    if n > cap:
        raise ParameterError(
            f"exact_pmf refuses n = {n} above the cap {cap}; "
            "use exact_stop_cdf for truncated queries at large n")
    big = n - a
    log_q, log_1mq = _log_q_schedule(p, r, n)
    logvec = np.full(big + 1, -np.inf)
    logvec[0] = 0.0
    pmf_ln: dict[int, float] = {}
    discard_ln = -math.inf

    for t in range(n):
        lq, l1 = float(log_q[t]), float(log_1mq[t])
        if lq == -math.inf:
            new = logvec.copy()  # increments are identically zero
        else:
            new = np.full(big + 1, -np.inf)
            for s in np.nonzero(np.isfinite(logvec))[0]:
                s = int(s)
                m = big - s
                if m == 0:
                    new[s] = np.logaddexp(new[s], logvec[s])
                    continue
                j_lo, j_hi, dropped = _row_window(m, lq, l1)
                j = np.arange(j_lo, j_hi + 1)
                row = log_pmf_window(m, lq, l1, j)
                seg = slice(s + j_lo, s + j_hi + 1)
                new[seg] = np.logaddexp(new[seg], logvec[s] + row)
                if dropped:
                    discard_ln = np.logaddexp(
                        discard_ln, logvec[s] + math.log(dropped * _ROW_REL_TOL))
        k = t + 1 - a
        if 0 <= k <= big and math.isfinite(new[k]):
            pmf_ln[t + 1] = float(new[k])
            new[k] = -np.inf
        logvec = new
        if not np.isfinite(logvec).any():
            break

    probs = {k: ScaledFloat.from_ln(pmf_ln.get(k, -math.inf))
             for k in range(a, n + 1)}
    return FinalSizePmf(params=params, probs=probs,
                        truncation_bound=float(math.exp(discard_ln)))


def _chain_marginal_log_pmf(params: ModelParams, t: int) -> np.ndarray:
    """Marginal law of S(t) from the same transitions, survival ignored.

    Test hook: must reproduce Bin(n - a, pi(t)) and thereby validate the
    q_t construction.
    """
    n, p, r, a = params.n, params.p, params.r, params.a
    big = n - a
    log_q, log_1mq = _log_q_schedule(p, r, max(t, 1))
    logvec = np.full(big + 1, -np.inf)
    logvec[0] = 0.0
    for u in range(t):
        lq, l1 = float(log_q[u]), float(log_1mq[u])
        new = np.full(big + 1, -np.inf)
        for s in np.nonzero(np.isfinite(logvec))[0]:
            s = int(s)
            m = big - s
            j = np.arange(0, m + 1)
            row = log_pmf_window(m, lq, l1, j) if m else np.zeros(1)
            seg = slice(s, s + m + 1)
            new[seg] = np.logaddexp(new[seg], logvec[s] + row)
        logvec = new
    return logvec


# ---------------------------------------------------------------------------
# truncated early-stop probability

def exact_stop_cdf(params: ModelParams, tau: int,
                   with_bound: bool = False):
    """P(T <= tau), exactly, with states capped at S = tau - a + 1.

    Once a + S(t) > tau the chain can never stop by tau, so such states
    are dropped as permanently safe.  The cost is O(tau^2 * window),
    independent of n, which keeps n up to 1e6 cheap when tau = O(a_c).
    With with_bound=True also returns the certified bound on transition
    mass lost to row truncation (0.0 whenever the band is narrow).
    """
    n, p, r, a = params.n, params.p, params.r, params.a
    if tau > n:
        raise ParameterError("tau must not exceed n")
    if tau < a:
        return (ScaledFloat(0.0), 0.0) if with_bound else ScaledFloat(0.0)
    s_hi = min(tau - a + 1, n - a)
    log_q, log_1mq = _log_q_schedule(p, r, tau)
    states = np.arange(s_hi + 1, dtype=np.int64)
    m_arr = ((n - a) - states).astype(np.float64)
    logvec = np.full(s_hi + 1, -np.inf)
    logvec[0] = 0.0
    absorbed = -math.inf
    discard_ln = -math.inf

    for t in range(tau):
        lq, l1 = float(log_q[t]), float(log_1mq[t])
        if lq == -math.inf:
            new = logvec.copy()  # increments are identically zero
        else:
            q = math.exp(lq)
            modes = np.clip(np.floor((m_arr + 1) * q), 0, m_arr)
            log_rowmax = log_pmf_window(m_arr, lq, l1, modes)
            m_max = float(m_arr[0])
            sigma = math.sqrt(max(m_max * q * (1.0 - q), 1.0))
            j_win = min(s_hi, int(m_max * q + 12.0 * sigma) + 45)
            while j_win < s_hi:
                edge = log_pmf_window(m_arr, lq, l1, np.full(s_hi + 1, j_win))
                if np.any(edge >= log_rowmax + _LN_ROW_REL_TOL):
                    j_win = min(s_hi, j_win + 32)
                else:
                    break
            j = np.arange(j_win + 1)
            rows = log_pmf_window(m_arr[:, None], lq, l1, j[None, :])
            new = np.full(s_hi + 1, -np.inf)
            for jj in range(j_win + 1):
                hi = s_hi + 1 - jj
                if hi <= 0:
                    break
                seg = slice(jj, s_hi + 1)
                new[seg] = np.logaddexp(new[seg], logvec[:hi] + rows[:hi, jj])
            dropped = np.maximum(np.minimum(m_arr, s_hi - states) - j_win, 0)
            live = np.isfinite(logvec) & (dropped > 0)
            if live.any():
                with np.errstate(divide="ignore"):
                    add = (logvec[live] + np.log(dropped[live])
                           + log_rowmax[live] + _LN_ROW_REL_TOL)
                discard_ln = float(np.logaddexp(
                    discard_ln,
                    np.logaddexp.reduce(add)))
        k = t + 1 - a
        if 0 <= k <= s_hi and math.isfinite(new[k]):
            absorbed = np.logaddexp(absorbed, new[k])
            new[k] = -np.inf
        logvec = new
        if not np.isfinite(logvec).any():
            break
    result = ScaledFloat.from_ln(float(absorbed))
    if with_bound:
        return result, float(math.exp(discard_ln))
    return result


def exact_tail_query(params: ModelParams, family: ScalingFamily,
                     eps: float) -> ScaledFloat:
    """P((n - A*)/f(n) > eps) = P(T <= floor(n - eps f(n))).

    Follows the inclusive union convention for the stopping events, i.e.
    the threshold floor(n - eps f(n)) itself is included; strict vs weak
    inequality only differs when eps f(n) hits the integer lattice.
    """
    if eps <= 0.0:
        raise ParameterError("eps must be positive")
    crit = critical_quantities(params)
    f_val = family.scale_at(params.n, params.p, crit)
    threshold = math.floor(params.n - eps * f_val)
    if threshold < params.a:
        return ScaledFloat(0.0)
    return exact_stop_cdf(params, int(threshold))


# ---------------------------------------------------------------------------
# auxiliary process and brute force

def auxiliary_tail(params: ModelParams, t: int):
    """(P(S(t) + a <= t), P(S'(t) <= t)) where S' adds Bin(a, pi(t)).

    The second is an exact convolution; the first is never larger because
    the added count is at most a.
    """
    n, p, r, a = params.n, params.p, params.r, params.a
    if t > n:
        raise ParameterError("t must not exceed n")
    pi = _pi(t, p, r)
    p_event = math.exp(log_binom_cdf(n - a, pi, t - a)) if t >= a else 0.0
    terms = []
    for j in range(min(a, t) + 1):
        lp = log_binom_pmf(a, pi, j) + log_binom_cdf(n - a, pi, t - j)
        if lp > -math.inf:
            terms.append(math.exp(lp))
    p_aux = min(math.fsum(terms), 1.0) if terms else 0.0
    return p_event, p_aux


def brute_force_pmf(params: ModelParams, cap: int = BRUTE_FORCE_CAP) -> FinalSizePmf:
    """Exhaustive enumeration of all 2^C(n,2) graphs for n <= 7.

    Graphs are grouped by edge count, so the per-graph weights are applied
    to exact integer counts; the final summation is compensated.
    """
    n, p, r, a = params.n, params.p, params.r, params.a
    if n > cap:
        raise ParameterError(f"brute force enumeration is capped at n = {cap}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    ui = np.array([ij[0] for ij in pairs], dtype=np.int64)
    vi = np.array([ij[1] for ij in pairs], dtype=np.int64)
    n_edges = len(pairs)
    counts = np.zeros((n_edges + 1, n + 1), dtype=np.int64)

    from .process import _vector_cascade_sizes

    chunk = 1 << 15
    for start in range(0, 1 << n_edges, chunk):
        ids = np.arange(start, min(start + chunk, 1 << n_edges), dtype=np.int64)
        bits = ((ids[:, None] >> np.arange(n_edges)[None, :]) & 1).astype(bool)
        sizes = _vector_cascade_sizes(bits, ui, vi, n, r, a)
        np.add.at(counts, (bits.sum(axis=1), sizes), 1)

    probs = {}
    for k in range(a, n + 1):
        if p == 0.0:
            val = 1.0 if counts[0, k] else 0.0
        elif p == 1.0:
            val = 1.0 if counts[n_edges, k] else 0.0
        else:
            terms = [
                count * math.exp(e * math.log(p) + (n_edges - e) * math.log1p(-p))
                for e, count in enumerate(counts[:, k]) if count
            ]
            val = math.fsum(terms)
        probs[k] = ScaledFloat(val)
    return FinalSizePmf(params=params, probs=probs)
