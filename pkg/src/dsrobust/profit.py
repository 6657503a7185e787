"""Combined selfish-mining / double-spend revenue of an optimal attacker.

Same state and transition skeleton as the attack MDP, but the attacker now
collects one unit per own block that ends up in the main chain plus a bonus
``ds_reward`` per successful double spend, normalized by total main-chain
growth.  At ``ds_reward = 0`` this is exactly optimal selfish mining on the
truncated model.

Reward reconstruction notes.  The revenue split per event is:

* adopt: attacker 0, chain grows by the h honest blocks it concedes;
* override: attacker h+1 (its published blocks) plus the double-spend bonus
  when at least one reversed block had been accepted (h >= k), chain grows by
  h+1;
* successful match (the honest network mines onto the attacker's published
  tie): attacker h, same bonus rule, chain grows by h;
* wait: nothing settles.

The bonus is granted once per successful override/match that reverses at
least one accepted block.  Reading the reward as "per reversed block" instead
is plausible; set ``reward_per_reversed_block=True`` to get that variant.
Only blocks that remain in the final longest chain count toward the
denominator.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import AttackerParams, ConfigurationError, ParameterError, validate_params
from .mdp import DEFAULT_MAX_LEN, DEFAULT_TOL, MAX_SWEEPS, SolveResult, _RatioMdpBase, solve_ratio

__all__ = ["ProfitModel", "build_profit_mdp", "solve_profit"]


@dataclass(frozen=True)
class ProfitModel(_RatioMdpBase):
    """Revenue MDP: reward pairs are (attacker revenue, main-chain growth)."""

    k: int
    params: AttackerParams
    ds_reward: float
    max_len: int = DEFAULT_MAX_LEN
    reward_per_reversed_block: bool = False

    def _bonus(self, h: int) -> float:
        if h < self.k:  # no accepted block was reversed
            return 0.0
        if self.reward_per_reversed_block:
            return self.ds_reward * (h - self.k + 1)
        return self.ds_reward

    def _reward_adopt(self, a: int, h: int) -> tuple[float, float]:
        return (0.0, float(h))

    def _reward_override(self, a: int, h: int) -> tuple[float, float]:
        return (float(h + 1) + self._bonus(h), float(h + 1))

    def _reward_match_success(self, a: int, h: int) -> tuple[float, float]:
        return (float(h) + self._bonus(h), float(h))

    def _pair_to_num_den(self, pair: tuple[float, float]) -> tuple[float, float]:
        return pair

    @property
    def rho_upper(self) -> float:
        # per settled block the attacker earns at most 1 + ds_reward, in both
        # bonus variants (h - k + 1 <= h + 1)
        return 1.0 + self.ds_reward


def build_profit_mdp(
    k: int,
    params: AttackerParams,
    ds_reward: float,
    max_len: int = DEFAULT_MAX_LEN,
    reward_per_reversed_block: bool = False,
) -> ProfitModel:
    """Build the revenue MDP for a defender accepting at ``k`` confirmations."""
    validate_params(params)
    if k < 1:
        raise ParameterError(f"confirmation count must be >= 1, got {k}")
    if ds_reward < 0:
        raise ParameterError(f"double-spend reward must be >= 0, got {ds_reward}")
    if max_len < k + 2:
        raise ConfigurationError(
            f"truncation bound {max_len} too small for k={k}; need at least {k + 2}"
        )
    return ProfitModel(
        k=k,
        params=params,
        ds_reward=ds_reward,
        max_len=max_len,
        reward_per_reversed_block=reward_per_reversed_block,
    )


def solve_profit(
    model: ProfitModel,
    tol: float = DEFAULT_TOL,
    tie_tol: float = 1e-7,
    max_sweeps: int = MAX_SWEEPS,
) -> SolveResult:
    """Optimal normalized revenue; compare against the honest baseline alpha."""
    return solve_ratio(model, tol=tol, tie_tol=tie_tol, max_sweeps=max_sweeps)
