"""Shared vocabulary: attacker parameters, acceptance policies, attack actions.

Everything here is an immutable value object; instances can be shared freely
between threads or processes.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum, IntEnum

__all__ = [
    "ParameterError",
    "MajorityAttackerError",
    "NoThresholdError",
    "NumericalError",
    "ConfigurationError",
    "AttackerParams",
    "AcceptancePolicy",
    "ConstantPolicy",
    "LogarithmicPolicy",
    "AttackAction",
    "RobustnessKind",
    "policy_required_confs",
    "validate_params",
]


class ParameterError(ValueError):
    """A parameter is outside its legal domain."""


class MajorityAttackerError(ParameterError):
    """alpha >= 1/2: no minority-attacker guarantee exists (attack succeeds w.p. 1)."""


class NoThresholdError(RuntimeError):
    """A confirmation-threshold search exceeded its iteration cap."""


class NumericalError(RuntimeError):
    """An iterative solver failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ConfigurationError(ValueError):
    """Inconsistent build configuration (e.g. truncation bound too small)."""


@dataclass(frozen=True)
class AttackerParams:
    """Attacker model: hash-rate share ``alpha`` and tie-winning fraction ``gamma``.

    ``alpha`` is the attacker's fraction of the total block-creation rate;
    ``gamma`` is the fraction of honest mining power that ends up on the
    attacker's branch when it publishes a chain tying the public one.
    """

    alpha: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in [0, 1], got {self.gamma}")


def validate_params(params: AttackerParams, require_minority: bool = False) -> AttackerParams:
    """Check parameter domains, optionally requiring a minority attacker.

    Returns ``params`` unchanged on success.  With ``require_minority`` an
    ``alpha >= 1/2`` raises :class:`MajorityAttackerError`; callers that render
    tables catch it and report probability 1.
    """
    if not (0.0 <= params.alpha <= 1.0):
        raise ParameterError(f"alpha must lie in [0, 1], got {params.alpha}")
    if not (0.0 <= params.gamma <= 1.0):
        raise ParameterError(f"gamma must lie in [0, 1], got {params.gamma}")
    if require_minority and params.alpha >= 0.5:
        raise MajorityAttackerError(
            f"alpha={params.alpha} >= 0.5: attacker can rewrite the chain at will"
        )
    return params


class AcceptancePolicy(ABC):
    """Maps a block height to the confirmation count required to accept it.

    Confirmations include the block containing the transaction itself, so the
    result is always >= 1.
    """

    @abstractmethod
    def evaluate(self, height: int) -> int:
        """Required confirmations for a block at ``height``."""

    @property
    @abstractmethod
    def kind(self) -> str:
        """Policy family name, ``"constant"`` or ``"logarithmic"``."""


@dataclass(frozen=True)
class ConstantPolicy(AcceptancePolicy):
    """Accept after a fixed number of confirmations at every height."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"confirmation count must be >= 1, got {self.k}")

    def evaluate(self, height: int) -> int:
        if height < 0:
            raise ParameterError(f"height must be >= 0, got {height}")
        return self.k

    @property
    def kind(self) -> str:
        return "constant"


@dataclass(frozen=True)
class LogarithmicPolicy(AcceptancePolicy):
    """Accept after ``base_confs + floor(log_base(height))`` confirmations.

    Height 0 (genesis) is clamped to 1 before taking the log; the genesis block
    carries no user transaction, so the clamp keeps the function total without
    affecting any real acceptance decision.
    """

    base_confs: int
    base: float

    def __post_init__(self):
        if self.base_confs < 1:
            raise ParameterError(f"base confirmation count must be >= 1, got {self.base_confs}")
        if not self.base > 1.0:
            raise ParameterError(f"logarithm base must exceed 1, got {self.base}")

    def evaluate(self, height: int) -> int:
        if height < 0:
            raise ParameterError(f"height must be >= 0, got {height}")
        h = max(height, 1)
        j = math.floor(math.log(h) / math.log(self.base) + 1e-12)
        # settle float slop against the exact step boundaries
        while self.base ** (j + 1) <= h:
            j += 1
        while j > 0 and self.base**j > h:
            j -= 1
        return self.base_confs + j

    @property
    def kind(self) -> str:
        return "logarithmic"


def policy_required_confs(policy: AcceptancePolicy, height: int) -> int:
    """Confirmations ``policy`` demands for a block at ``height``."""
    return policy.evaluate(height)


class AttackAction(IntEnum):
    """The four moves available to the attacker at any point of the block race."""

    ADOPT = 0    # abandon the secret branch, restart above the public tip
    OVERRIDE = 1 # publish a strictly longer chain, replacing the public one
    MATCH = 2    # publish an equal-length chain, splitting honest mining power
    WAIT = 3     # keep mining in secret

    @property
    def initial(self) -> str:
        return {"ADOPT": "a", "OVERRIDE": "o", "MATCH": "m", "WAIT": "w"}[self.name]


class RobustnessKind(Enum):
    """Which security guarantee a computed bound refers to.

    Bounds of different kinds measure different quantities (per-block reversal
    probability, long-run reversed fraction, any-reversal-ever probability) and
    must never be compared with each other.
    """

    ARBITRARY = "arbitrary"
    FRACTIONAL = "fractional"
    TOTAL = "total"
