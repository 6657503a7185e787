"""Seeded Monte Carlo oracle for the block race and pre-mining attacks.

Time is discretized to block-creation events: each event is the attacker's
with probability alpha, the honest network's otherwise.  Every quantity in
scope depends only on that event order, so real-valued inter-arrival times
are unnecessary.

Reproducibility: all randomness flows from numpy's PCG64 bit generator seeded
with ``(seed, stream)`` pairs, one stream per simulation phase; identical
configs replay bit-identical reports.  Estimators aggregate by sums only, so
results do not depend on any processing order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    AcceptancePolicy,
    AttackerParams,
    ConstantPolicy,
    ParameterError,
    validate_params,
)
from .analytic import total_policy_constants, sigma_total

__all__ = [
    "SimConfig",
    "SimReport",
    "WalkSummary",
    "TotalPolicySimResult",
    "walk_oracle",
    "simulate_finney_premine",
    "simulate_vector76",
    "simulate_total_policy",
]

RNG_ID = f"numpy.random.PCG64 (default_rng seeded with (seed, stream)), numpy {np.__version__}"

# per-phase stream ids appended to the user seed
_STREAM_WALK = 1
_STREAM_FINNEY_COND = 2
_STREAM_FINNEY_ARB = 3
_STREAM_V76 = 4
_STREAM_TOTAL = 5

# catch-up odds below 1e-12 are treated as lost; conservative for the defender
_NEGLIGIBLE = 1e-12

_LANE_BLOCK = 1 << 16
_STEP_CHUNK = 128


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def _catchup_cap(alpha: float) -> int:
    """Deficit beyond which ever catching up has probability < 1e-12."""
    q = alpha / (1.0 - alpha)
    if q <= 0.0:
        return 1
    return max(1, math.ceil(math.log(_NEGLIGIBLE) / math.log(q)))


@dataclass(frozen=True)
class SimConfig:
    """Inputs of a Monte Carlo experiment; two identical configs replay the
    exact same report.

    ``burn_in_steps`` is the walk horizon used to reach the stationary
    pre-mined lead; ``max_steps_per_trial`` caps each trial, with capped
    trials counted as attacker failures (conservative for defender-side
    bounds).  ``conditional_trials`` sizes the conditional-success estimator
    of the staged attack, whose per-trial cost is far higher than the
    arbitrary-block estimator's (defaults to min(trials, 10000)).
    """

    params: AttackerParams
    policy: Optional[AcceptancePolicy] = None
    trials: int = 100_000
    seed: int = 0
    burn_in_steps: int = 10_000
    max_steps_per_trial: int = 1_000_000
    conditional_trials: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.burn_in_steps < 1:
            raise ParameterError(f"burn_in_steps must be >= 1, got {self.burn_in_steps}")
        if self.max_steps_per_trial < 1:
            raise ParameterError(
                f"max_steps_per_trial must be >= 1, got {self.max_steps_per_trial}"
            )
        if self.conditional_trials is not None and self.conditional_trials < 1:
            raise ParameterError(
                f"conditional_trials must be >= 1, got {self.conditional_trials}"
            )

    @property
    def effective_conditional_trials(self) -> int:
        if self.conditional_trials is not None:
            return self.conditional_trials
        return min(self.trials, 10_000)

    def echo(self, k: Optional[int] = None) -> dict:
        d = {
            "alpha": self.params.alpha,
            "gamma": self.params.gamma,
            "trials": self.trials,
            "seed": self.seed,
            "burn_in_steps": self.burn_in_steps,
            "max_steps_per_trial": self.max_steps_per_trial,
            "conditional_trials": self.effective_conditional_trials,
        }
        if k is not None:
            d["k"] = k
        return d


@dataclass(frozen=True)
class SimReport:
    """Estimates from one experiment, with standard errors and provenance."""

    success_prob: float
    success_se: float
    fraction_reversed: float
    fraction_se: float
    mean_premine_duration_blocks: float
    trials_truncated: int
    config: dict
    rng_id: str = RNG_ID
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        mean_premine = self.mean_premine_duration_blocks
        return {
            "success_prob": self.success_prob,
            "success_se": self.success_se,
            "fraction_reversed": self.fraction_reversed,
            "fraction_se": self.fraction_se,
            "mean_premine_duration_blocks": (
                None if math.isnan(mean_premine) else mean_premine
            ),
            "trials_truncated": self.trials_truncated,
            "config": self.config,
            "rng_id": self.rng_id,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class WalkSummary:
    """Trajectory summary of the reflected pre-mining walk.

    ``occupancy[n]`` is the fraction of steps spent at lead n; ``se[n]`` its
    batch-means standard error (the trajectory is autocorrelated, so naive
    binomial errors would be too small).
    """

    final_gap: int
    steps: int
    occupancy: np.ndarray
    se: np.ndarray

    def occupancy_at(self, n: int) -> float:
        return float(self.occupancy[n]) if n < len(self.occupancy) else 0.0

    def se_at(self, n: int) -> float:
        return float(self.se[n]) if n < len(self.se) else 0.0


def walk_oracle(params: AttackerParams, steps: int, seed: int) -> WalkSummary:
    """Simulate the reflected lead walk and report its empirical occupancy.

    Right with probability alpha, left otherwise, held at the origin.  The
    whole trajectory is materialized through the running-minimum identity
    W_t = X_t - min(0, min_{s<=t} X_s), so the simulation is a handful of
    vectorized passes even at 10^7 steps.
    """
    validate_params(params, require_minority=True)
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    rng = _rng(seed, _STREAM_WALK)
    increments = np.where(rng.random(steps) < params.alpha, 1, -1).astype(np.int32)
    x = np.cumsum(increments, dtype=np.int64)
    running_min = np.minimum.accumulate(np.minimum(x, 0))
    gaps = x - running_min
    top = int(gaps.max())
    counts = np.bincount(gaps, minlength=top + 1)
    occupancy = counts / steps

    n_batches = min(100, steps)
    batch = steps // n_batches
    per_batch = np.zeros((n_batches, top + 1))
    for b in range(n_batches):
        seg = gaps[b * batch : (b + 1) * batch]
        per_batch[b] = np.bincount(seg, minlength=top + 1) / batch
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return WalkSummary(final_gap=int(gaps[-1]), steps=steps, occupancy=occupancy, se=se)


def _stationary_gap(rng: np.random.Generator, alpha: float, horizon: int, size: int) -> np.ndarray:
    """Sample the reflected walk's position after ``horizon`` steps from 0.

    Uses the time-reversal identity W_T =d max_{0<=j<=T} S_j of the free walk
    S; a lane stops early once S has dropped so far below its record that a
    new record within the odds floor (1e-12) is impossible.  Distribution is
    identical to stepping the reflected walk ``horizon`` times, at a fraction
    of the cost.
    """
    if alpha == 0.0:
        return np.zeros(size, dtype=np.int64)
    d_cap = _catchup_cap(alpha)
    out = np.empty(size, dtype=np.int64)
    for start in range(0, size, _LANE_BLOCK):
        n = min(_LANE_BLOCK, size - start)
        s = np.zeros(n, dtype=np.int64)
        record = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        steps_done = 0
        while active.size and steps_done < horizon:
            chunk = min(_STEP_CHUNK, horizon - steps_done)
            inc = np.where(
                rng.random((active.size, chunk)) < alpha, 1, -1
            ).astype(np.int64)
            paths = s[active, None] + np.cumsum(inc, axis=1)
            record[active] = np.maximum(record[active], paths.max(axis=1))
            s[active] = paths[:, -1]
            steps_done += chunk
            keep = s[active] > record[active] - d_cap
            active = active[keep]
        out[start : start + n] = record
    return out


def _race_to_overtake(
    rng: np.random.Generator,
    alpha: float,
    deficit: np.ndarray,
    max_steps: int,
) -> tuple[np.ndarray, int]:
    """Gambler's-ruin race: does the attacker ever gain ``deficit`` net blocks?

    Lanes whose deficit exceeds the odds floor, or that hit the step cap, lose.
    Returns (success mask, number of truncated lanes).
    """
    size = deficit.shape[0]
    success = deficit <= 0
    if alpha == 0.0:
        return success, 0
    d_cap = _catchup_cap(alpha)
    lose_line = d_cap
    truncated = 0
    racing = np.flatnonzero(~success & (deficit < lose_line))
    d = deficit[racing].astype(np.int64)
    steps = 0
    while racing.size and steps < max_steps:
        chunk = min(_STEP_CHUNK, max_steps - steps)
        inc = np.where(rng.random((racing.size, chunk)) < alpha, 1, -1).astype(np.int64)
        paths = d[:, None] - np.cumsum(inc, axis=1)
        won = (paths <= 0).any(axis=1)
        success[racing[won]] = True
        d = paths[:, -1]
        lost = d >= lose_line
        keep = ~(won | lost)
        racing = racing[keep]
        d = d[keep]
        steps += chunk
    truncated = int(racing.size)
    return success, truncated


def _premine_to_lead(
    rng: np.random.Generator,
    alpha: float,
    target_lead: int,
    trials: int,
    max_steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Pre-mining stage: reflected walk from 0 until the lead hits the target.

    Restarting above the public tip whenever the attacker falls behind is the
    reflection at the origin.  Returns (success mask, steps used, capped at
    max_steps for unsuccessful lanes).
    """
    success = np.zeros(trials, dtype=bool)
    steps_used = np.full(trials, max_steps, dtype=np.int64)
    if alpha == 0.0:
        return success, steps_used
    for start in range(0, trials, _LANE_BLOCK):
        n = min(_LANE_BLOCK, trials - start)
        w = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        steps_done = 0
        while active.size and steps_done < max_steps:
            chunk = min(_STEP_CHUNK, max_steps - steps_done)
            inc = np.where(rng.random((active.size, chunk)) < alpha, 1, -1).astype(np.int64)
            free = w[active, None] + np.cumsum(inc, axis=1)
            # reflect at the origin: adopting resets the branch race to zero
            refl = free - np.minimum(np.minimum.accumulate(free, axis=1), 0)
            hit = refl >= target_lead
            won = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            idx = active[won]
            success[start + idx] = True
            steps_used[start + idx] = steps_done + first[won] + 1
            w[active] = refl[:, -1]
            steps_done += chunk
            active = active[~won]
    return success, steps_used


def simulate_finney_premine(config: SimConfig, k: Optional[int] = None) -> SimReport:
    """Staged pre-mining double spend against a constant-``k`` defender.

    Two estimators share the report:

    * ``success_prob``: probability the attack succeeds conditioned on the
      victim seeing the transaction.  The attacker silently pre-mines a lead
      of k+1, only then surfaces; once the stage completes the release always
      overrides, so only step-cap truncations register as failures.
    * ``fraction_reversed``: the arbitrary-block experiment.  The pre-mined
      lead is burned in to stationarity, the target block spawns, the honest
      network mines the k-confirmation window while the attacker races on.
      Its success frequency estimates the analytic reversal probability
      f(k, alpha).
    """
    k = _resolve_k(config, k)
    validate_params(config.params, require_minority=True)
    alpha = config.params.alpha

    # estimator (a): conditional on the attack surfacing
    n_cond = config.effective_conditional_trials
    if alpha == 0.0:
        cond_success = np.zeros(n_cond, dtype=bool)
        premine_steps = np.full(n_cond, config.max_steps_per_trial, dtype=np.int64)
    else:
        rng_a = _rng(config.seed, _STREAM_FINNEY_COND)
        cond_success, premine_steps = _premine_to_lead(
            rng_a, alpha, k + 1, n_cond, config.max_steps_per_trial
        )
    cond_trunc = int((~cond_success).sum())
    p_a = cond_success.mean()
    se_a = _binom_se(p_a, n_cond)
    mean_premine = float(premine_steps[cond_success].mean()) if cond_success.any() else math.nan

    # estimator (b): unconditional attack on an arbitrary (stationary) block
    rng_b = _rng(config.seed, _STREAM_FINNEY_ARB)
    lead = _stationary_gap(rng_b, alpha, config.burn_in_steps, config.trials)
    if alpha > 0.0:
        mined = rng_b.negative_binomial(k, 1.0 - alpha, config.trials)
    else:
        mined = np.zeros(config.trials, dtype=np.int64)
    deficit = k + 1 - lead - mined
    arb_success, arb_trunc = _race_to_overtake(
        rng_b, alpha, deficit, config.max_steps_per_trial
    )
    p_b = arb_success.mean()
    se_b = _binom_se(p_b, config.trials)

    return SimReport(
        success_prob=float(p_a),
        success_se=se_a,
        fraction_reversed=float(p_b),
        fraction_se=se_b,
        mean_premine_duration_blocks=mean_premine,
        trials_truncated=cond_trunc + arb_trunc,
        config=config.echo(k),
        extras={
            "experiment": "finney",
            "conditional_trials": n_cond,
            "arbitrary_block_trials": config.trials,
        },
    )


def simulate_vector76(config: SimConfig, k: Optional[int] = None) -> SimReport:
    """Pre-mining attack on a non-relaying light client, run on a block
    schedule shared with the staged full-node attack.

    Per trial one sequence of block-creation outcomes drives both attacks
    (identical pre-mining with restart-on-falling-behind).  The light-client
    attack succeeds once the secret branch holds ``k`` confirmations and leads
    the public chain by one: the victim accepts the longest chain it is shown
    and never relays it, and the public chain buries the conflicting payment
    on its own.  The staged attack needs the far stricter lead of k+1, so its
    successes are contained in the light-client successes; the report counts
    violations (always zero) as evidence.

    ``fraction_reversed`` estimates the attacked fraction of the accepted
    chain: attacker blocks that participate in a successful attack (those
    with at least k confirmations inside the revealed branch, a - k + 1 of a
    branch of length a) over the honest blocks created, which are exactly the
    blocks the public chain accretes since the attacker never publishes.
    This is the quantity the light-client safety level bounds.
    """
    k = _resolve_k(config, k)
    validate_params(config.params, require_minority=True)
    alpha = config.params.alpha
    trials = config.trials
    max_steps = config.max_steps_per_trial

    v_success = np.zeros(trials, dtype=bool)
    f_success = np.zeros(trials, dtype=bool)
    v_attacked = np.zeros(trials, dtype=np.int64)  # participating blocks at reveal
    v_mined = np.zeros(trials, dtype=np.int64)     # attacker blocks up to reveal/cap
    v_honest = np.zeros(trials, dtype=np.int64)    # honest blocks up to reveal/cap
    v_steps = np.zeros(trials, dtype=np.int64)

    if alpha > 0.0:
        rng = _rng(config.seed, _STREAM_V76)
        for start in range(0, trials, _LANE_BLOCK):
            n = min(_LANE_BLOCK, trials - start)
            a = np.zeros(n, dtype=np.int64)
            h = np.zeros(n, dtype=np.int64)
            mined = np.zeros(n, dtype=np.int64)
            grown = np.zeros(n, dtype=np.int64)
            vwin = np.zeros(n, dtype=bool)
            vatt = np.zeros(n, dtype=np.int64)
            vmin = np.zeros(n, dtype=np.int64)
            vhon = np.zeros(n, dtype=np.int64)
            vst = np.zeros(n, dtype=np.int64)
            fwin = np.zeros(n, dtype=bool)
            active = np.arange(n)
            for step in range(1, max_steps + 1):
                if not active.size:
                    break
                att = rng.random(active.size) < alpha
                a[active] += att
                h[active] += ~att
                mined[active] += att
                grown[active] += ~att
                aa, hh = a[active], h[active]
                # light-client reveal: k confirmations and a lead of one
                now_v = ~vwin[active] & (aa >= k) & (aa > hh)
                idx = active[now_v]
                vwin[idx] = True
                # blocks deep enough to carry an attacked transaction
                vatt[idx] = a[idx] - k + 1
                vmin[idx] = mined[idx]
                vhon[idx] = grown[idx]
                vst[idx] = step
                # staged full-node attack: lead of k+1 completes the stage
                now_f = (aa - hh) >= k + 1
                fwin[active[now_f]] = True
                # falling behind restarts both attacks above the public tip
                behind = hh > aa
                idx_b = active[behind]
                a[idx_b] = 0
                h[idx_b] = 0
                active = active[~now_f]
            sl = slice(start, start + n)
            v_success[sl] = vwin
            f_success[sl] = fwin
            v_attacked[sl] = vatt
            v_mined[sl] = np.where(vwin, vmin, mined)
            v_honest[sl] = np.where(vwin, vhon, grown)
            v_steps[sl] = vst

    violations = int((f_success & ~v_success).sum())
    truncated = int((~f_success).sum())
    p_v = v_success.mean()
    frac, frac_se = _ratio_estimate(
        v_attacked.astype(np.float64), v_honest.astype(np.float64)
    )
    mean_premine = float(v_steps[v_success].mean()) if v_success.any() else math.nan

    return SimReport(
        success_prob=float(p_v),
        success_se=_binom_se(p_v, trials),
        fraction_reversed=frac,
        fraction_se=frac_se,
        mean_premine_duration_blocks=mean_premine,
        trials_truncated=truncated,
        config=config.echo(k),
        extras={
            "experiment": "vector76",
            "finney_success_prob": float(f_success.mean()),
            "containment_violations": violations,
            "attacker_blocks_mined": int(v_mined.sum()),
            "honest_blocks_created": int(v_honest.sum()),
            "participating_blocks": int(v_attacked.sum()),
        },
    )


@dataclass(frozen=True)
class TotalPolicySimResult:
    """Whole-history experiment output.

    ``first_success_heights[i]`` is the public chain height at which history i
    first contained a successful attack, or -1 if it never did; the
    any-success frequency at any prefix length L is then the fraction of
    entries in (0, L]."""

    any_success_frequency: float
    standard_error: float
    first_success_heights: np.ndarray
    trials: int
    chain_length: int
    policy_echo: dict

    def frequency_at(self, chain_length: int) -> float:
        hs = self.first_success_heights
        return float(((hs >= 0) & (hs <= chain_length)).mean())


def simulate_total_policy(
    params: AttackerParams,
    epsilon: float,
    chain_length: int,
    trials: int,
    seed: int,
    policy: Optional[AcceptancePolicy] = None,
) -> TotalPolicySimResult:
    """Fraction of simulated histories in which any accepted block is ever
    reversed, under a never-give-up attacker.

    The attacker mines a secret branch, adopting only when strictly behind
    (which maximizes its pre-mined lead), and wins as soon as its branch is at
    least as long as the honest branch while the honest branch is deep enough
    for its oldest block to be accepted -- the zero-crossing allowance that
    makes the analytic bound hold for every gamma.  The default policy is the
    logarithmic whole-history policy for (alpha, epsilon); pass ``policy`` to
    probe alternatives such as constant-k controls.
    """
    validate_params(params, require_minority=True)
    if chain_length < 1:
        raise ParameterError(f"chain_length must be >= 1, got {chain_length}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if policy is None:
        policy = sigma_total(params, epsilon)
        consts = total_policy_constants(params, epsilon)
        policy_echo = {
            "kind": "logarithmic",
            "base_confs": consts.c_eps,
            "base": consts.b_alpha,
            "epsilon": epsilon,
        }
    else:
        policy_echo = {"kind": policy.kind, "epsilon": epsilon}
        if isinstance(policy, ConstantPolicy):
            policy_echo["k"] = policy.k

    # required confirmations for every possible branch-bottom height
    required = np.array(
        [policy.evaluate(hh) for hh in range(1, chain_length + 2)], dtype=np.int64
    )

    alpha = params.alpha
    rng = _rng(seed, _STREAM_TOTAL)
    first_success = np.full(trials, -1, dtype=np.int64)
    a = np.zeros(trials, dtype=np.int64)
    h = np.zeros(trials, dtype=np.int64)
    height = np.zeros(trials, dtype=np.int64)  # public chain height
    bottom = np.ones(trials, dtype=np.int64)   # height of branch's oldest honest block
    active = np.arange(trials)
    while active.size:
        att = rng.random(active.size) < alpha
        a[active] += att
        hon = active[~att]
        h[hon] += 1
        height[hon] += 1
        aa, hh = a[active], h[active]
        win = (aa >= hh) & (hh >= required[bottom[active] - 1])
        idx_w = active[win]
        first_success[idx_w] = height[idx_w]
        behind = hh > aa
        idx_b = active[behind]
        a[idx_b] = 0
        h[idx_b] = 0
        bottom[idx_b] = height[idx_b] + 1
        done = win | (height[active] >= chain_length)
        active = active[~done]

    freq = float(((first_success >= 0) & (first_success <= chain_length)).mean())
    return TotalPolicySimResult(
        any_success_frequency=freq,
        standard_error=_binom_se(freq, trials),
        first_success_heights=first_success,
        trials=trials,
        chain_length=chain_length,
        policy_echo=policy_echo,
    )


def _resolve_k(config: SimConfig, k: Optional[int]) -> int:
    if k is None:
        if isinstance(config.policy, ConstantPolicy):
            return config.policy.k
        raise ParameterError(
            "a confirmation count is required: pass k or set a constant policy"
        )
    if k < 1:
        raise ParameterError(f"confirmation count must be >= 1, got {k}")
    return k


def _binom_se(p: float, n: int) -> float:
    return float(math.sqrt(max(p * (1.0 - p), 0.0) / n))


def _ratio_estimate(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Ratio-of-sums estimator sum(x)/sum(y) with its linearized standard error."""
    ty = float(y.sum())
    if ty <= 0.0:
        return 0.0, 0.0
    r = float(x.sum()) / ty
    resid = x - r * y
    se = float(np.sqrt((resid**2).sum()) / ty)
    return r, se
