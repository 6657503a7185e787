"""Closed-form security bounds for double-spend attacks with pre-mining.

Central quantities:

* the stationary distribution of the attacker's pre-mined lead (a reflecting
  biased random walk),
* the probability that an independently timed block with ``n`` confirmations
  is ever reversed (``arb_attack_prob``), and the confirmation threshold that
  pushes it below ``epsilon`` (``sigma_arb``),
* the light-client analogue where the victim does not relay blocks
  (``spv_attack_bound`` / ``sigma_spv``),
* the logarithmic policy whose probability of *ever* accepting a reversed
  block is below ``epsilon`` (``total_policy_constants`` / ``sigma_total``).

All sums are evaluated in log space and closed-form tails replace truncated
remainders wherever the geometry allows, so reported truncation errors are
tiny (see ``RobustBound.truncation_error``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum

from scipy.special import gammaln

from .core import (
    AttackerParams,
    LogarithmicPolicy,
    MajorityAttackerError,
    NoThresholdError,
    ParameterError,
    RobustnessKind,
    validate_params,
)

__all__ = [
    "GapDistribution",
    "RobustBound",
    "TotalPolicyConstants",
    "premined_gap_tail",
    "catchup_prob",
    "arb_attack_prob",
    "sigma_arb",
    "spv_attack_bound",
    "sigma_spv",
    "total_policy_constants",
    "sigma_total",
]

#: Default cap for threshold searches; unreachable for valid minority attackers
#: but guards against numerical pathologies.
DEFAULT_SEARCH_CAP = 1000

#: Tail mass below which truncated series are cut (the cut is accounted for in
#: the reported truncation error).
DEFAULT_TOL = 1e-12


def _require_minority(params: AttackerParams) -> float:
    validate_params(params, require_minority=True)
    return params.alpha


def _ratio(alpha: float) -> float:
    """The catch-up odds ratio alpha / (1 - alpha), < 1 for a minority attacker."""
    return alpha / (1.0 - alpha)


@dataclass(frozen=True)
class GapDistribution:
    """Stationary law of the attacker's maximal pre-mined lead.

    The lead performs a random walk on the non-negative integers, reflected at
    the origin: up with probability ``alpha``, down (or held at 0) otherwise.
    Its stationary distribution is geometric,

        mass(n) = (1 - 2a)/(1 - a) * (a/(1-a))**n,

    and first-order dominates the true pre-mined lead at any fixed time.
    """

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5):
            raise MajorityAttackerError(
                f"gap distribution requires 0 < alpha < 0.5, got {self.alpha}"
            )

    def mass(self, n: int) -> float:
        if n < 0:
            raise ParameterError(f"gap must be >= 0, got {n}")
        q = _ratio(self.alpha)
        return (1.0 - 2.0 * self.alpha) / (1.0 - self.alpha) * q**n

    def tail(self, n: int) -> float:
        """P(lead >= n); the geometric tail is exact: sum_{k>=n} mass(k) = q**n."""
        if n < 0:
            raise ParameterError(f"gap must be >= 0, got {n}")
        return _ratio(self.alpha) ** n


@dataclass(frozen=True)
class RobustBound:
    """A computed security bound together with its provenance.

    ``value`` is a probability (arbitrary/total kinds) or a long-run fraction
    (fractional kind); ``truncation_error`` bounds the absolute error
    introduced by cutting infinite sums.
    """

    kind: RobustnessKind
    value: float
    confirmations: int
    params: AttackerParams
    truncation_error: float = 0.0


@dataclass(frozen=True)
class TotalPolicyConstants:
    """Constants of the logarithmic any-reversal-safe policy.

    ``c`` is the large-deviation exponent of an attacker excursion ever
    reaching even length, ``b_alpha = (e**c + 1)/2`` the epoch growth base
    (strictly below ``e**c`` so the epoch union bound sums geometrically), and
    ``c_eps`` the additive confirmation constant chosen so the union bound over
    all epochs stays below epsilon.
    """

    c: float
    b_alpha: float
    c_eps: int


def premined_gap_tail(params: AttackerParams, n: int) -> float:
    """Upper bound on P(pre-mined lead >= n): the stationary geometric tail."""
    alpha = _require_minority(params)
    if n < 0:
        raise ParameterError(f"gap must be >= 0, got {n}")
    if alpha == 0.0:
        return 1.0 if n == 0 else 0.0
    return GapDistribution(alpha).tail(n)


def catchup_prob(params: AttackerParams, deficit: int) -> float:
    """Probability the attacker's walk ever overtakes from ``deficit`` behind.

    A deficit of d means the attacker must gain d net blocks; the classic
    gambler's-ruin hitting probability is (a/(1-a))**d.  Non-positive deficits
    mean the attacker is already ahead (probability 1).
    """
    alpha = _require_minority(params)
    if deficit <= 0:
        return 1.0
    if alpha == 0.0:
        return 0.0
    return _ratio(alpha) ** deficit


def _log_negbin_pmf(m: int, n: int, alpha: float) -> float:
    """log P(attacker mines m blocks while the honest network mines n).

    Negative-binomial pmf C(m+n-1, m) * alpha**m * (1-alpha)**n, in log space
    via log-gamma so large m/n never overflow.
    """
    if alpha == 0.0:
        return 0.0 if m == 0 else -math.inf
    return (
        gammaln(m + n)
        - gammaln(m + 1)
        - gammaln(n)
        + m * math.log(alpha)
        + n * math.log1p(-alpha)
    )


def arb_attack_prob(params: AttackerParams, n_confs: int) -> RobustBound:
    """Probability that an independently timed block with ``n_confs``
    confirmations is ever removed from the chain.

    Decomposes over the stationary pre-mined lead l and the attacker's block
    count m during the confirmation window:

    * lead l > n_confs: the attacker is already strictly ahead, success
      probability 1; this whole tail has exact mass (a/(1-a))**(n+1);
    * otherwise success happens immediately when m > n - l, and with catch-up
      probability (a/(1-a))**(n+1-m-l) when m <= n - l.

    The inner m-tail is resolved exactly through the complement of the finite
    negative-binomial partial sum, so only float rounding remains; the
    reported truncation error reflects that.
    """
    validate_params(params)
    if n_confs < 1:
        raise ParameterError(f"confirmation count must be >= 1, got {n_confs}")
    alpha = params.alpha
    if alpha == 0.0:
        return RobustBound(RobustnessKind.ARBITRARY, 0.0, n_confs, params, 0.0)
    if alpha >= 0.5:
        return RobustBound(RobustnessKind.ARBITRARY, 1.0, n_confs, params, 0.0)

    n = n_confs
    q = _ratio(alpha)
    gap = GapDistribution(alpha)
    terms = []
    for l in range(0, n + 1):
        p_l = gap.mass(l)
        inner = []
        cdf = []
        for m in range(0, n - l + 1):
            nb = math.exp(_log_negbin_pmf(m, n, alpha))
            cdf.append(nb)
            inner.append(nb * q ** (n + 1 - m - l))
        # mass of m > n - l, where success is certain
        inner.append(1.0 - fsum(cdf))
        terms.append(p_l * fsum(inner))
    terms.append(q ** (n + 1))  # exact tail over leads l > n
    value = fsum(terms)
    # all tails are closed-form; only accumulated float rounding remains
    roundoff = 1e-15 * (n + 2) * (n + 2)
    return RobustBound(
        RobustnessKind.ARBITRARY,
        min(max(value, 0.0), 1.0),
        n_confs,
        params,
        roundoff,
    )


def sigma_arb(params: AttackerParams, epsilon: float, cap: int = DEFAULT_SEARCH_CAP) -> int:
    """Smallest confirmation count whose reversal probability is below ``epsilon``.

    For gamma > 0 the closed form is only valid after one extra confirmation,
    so the threshold found for gamma = 0 is increased by one.
    """
    _require_minority(params)
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if params.alpha == 0.0:
        return 1 + (1 if params.gamma > 0 else 0)
    for n in range(1, cap + 1):
        if arb_attack_prob(params, n).value < epsilon:
            return n + (1 if params.gamma > 0 else 0)
    raise NoThresholdError(
        f"no confirmation count up to {cap} pushes the reversal bound below {epsilon}"
    )


def spv_attack_bound(
    params: AttackerParams, k_confs: int, tol: float = DEFAULT_TOL
) -> RobustBound:
    """Long-run fraction of accepted blocks a non-relaying light client can
    lose to pre-mining, when it accepts at ``k_confs`` confirmations.

    The per-attacker-block participation probability g(k, a) sums, over the
    stationary pre-mined lead l, the chance that the attacker ever holds both
    k confirmations on its secret branch and a lead of one over the public
    chain.  Dividing by the honest growth rate (1 - a) converts it into a
    fraction of accepted blocks.  The lead sum is truncated once its geometric
    tail drops below ``tol``; the cut mass is reported as truncation error.
    """
    validate_params(params)
    if k_confs < 1:
        raise ParameterError(f"confirmation count must be >= 1, got {k_confs}")
    if tol <= 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    alpha = params.alpha
    if alpha == 0.0:
        return RobustBound(RobustnessKind.FRACTIONAL, 0.0, k_confs, params, 0.0)
    if alpha >= 0.5:
        return RobustBound(RobustnessKind.FRACTIONAL, 1.0, k_confs, params, 0.0)

    k = k_confs
    q = _ratio(alpha)
    gap = GapDistribution(alpha)
    log_alpha = math.log(alpha)
    log_beta = math.log1p(-alpha)

    terms = []
    trunc = 0.0
    l = 0
    while True:
        p_l = gap.mass(l)
        # honest-block count n while the attacker mines its k confirmations;
        # n <= k + l leaves the attacker ahead or within catch-up reach.
        # pmf: C(n+k-1, n) * alpha**k * (1-alpha)**n
        head = []
        for n in range(0, k + l + 1):
            head.append(
                math.exp(
                    gammaln(n + k) - gammaln(n + 1) - gammaln(k) + k * log_alpha + n * log_beta
                )
            )
        head_mass = fsum(head)
        tail_terms = []
        remaining = max(1.0 - head_mass, 0.0)
        n = k + l + 1
        while True:
            log_nb = gammaln(n + k) - gammaln(n + 1) - gammaln(k) + k * log_alpha + n * log_beta
            nb = math.exp(log_nb)
            tail_terms.append(nb * q ** (n - l - k))
            remaining = max(remaining - nb, 0.0)
            # remaining catch-up-weighted mass is bounded by both factors
            bound = min(remaining, q ** (n + 1 - l - k))
            if bound < tol:
                trunc += p_l * bound
                break
            n += 1
        terms.append(p_l * (head_mass + fsum(tail_terms)))
        # brackets are <= 1, so the remaining lead-sum mass bounds the cut
        lead_tail = q ** (l + 1)
        if lead_tail < tol:
            trunc += lead_tail
            break
        l += 1

    g_value = fsum(terms)
    value = min(max(g_value / (1.0 - alpha), 0.0), 1.0)
    return RobustBound(
        RobustnessKind.FRACTIONAL, value, k_confs, params, trunc / (1.0 - alpha)
    )


def sigma_spv(params: AttackerParams, epsilon: float, cap: int = DEFAULT_SEARCH_CAP) -> int:
    """Smallest light-client confirmation count with reversed fraction below
    ``epsilon``; valid for every gamma (the bound already assumes the attacker
    wins all ties)."""
    _require_minority(params)
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if params.alpha == 0.0:
        return 1
    for k in range(1, cap + 1):
        if spv_attack_bound(params, k).value < epsilon:
            return k
    raise NoThresholdError(
        f"no confirmation count up to {cap} pushes the light-client bound below {epsilon}"
    )


def total_policy_constants(params: AttackerParams, epsilon: float) -> TotalPolicyConstants:
    """Constants (c, b_alpha, c_eps) of the logarithmic whole-history policy."""
    alpha = _require_minority(params)
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    c = 0.125 * (1.0 - 2.0 * alpha) ** 2 / (1.0 - alpha)
    b_alpha = (math.exp(c) + 1.0) / 2.0
    # b_alpha < e**c guarantees the epoch union bound is a convergent
    # geometric series; both factors below are therefore positive.
    c_eps = math.ceil(
        (1.0 / c)
        * math.log(
            (1.0 / epsilon)
            * b_alpha
            / (1.0 - math.exp(-c))
            / (1.0 - b_alpha * math.exp(-c))
        )
    )
    return TotalPolicyConstants(c=c, b_alpha=b_alpha, c_eps=int(c_eps))


def sigma_total(params: AttackerParams, epsilon: float) -> LogarithmicPolicy:
    """Logarithmic policy under which, with probability at least 1 - epsilon,
    no accepted block is ever reversed over the whole chain history.

    The guarantee holds for every gamma: the underlying bound already allows
    the attacker to win every tie.
    """
    consts = total_policy_constants(params, epsilon)
    return LogarithmicPolicy(base_confs=consts.c_eps, base=consts.b_alpha)
