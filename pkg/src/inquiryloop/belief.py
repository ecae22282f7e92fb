"""Discrete belief over candidate hypotheses.

Exact finite-support arithmetic throughout: per-event tempered Bayes updates
(likelihood raised to the event's state weight), Shannon entropy in nats, and
expected information gain by exhaustive enumeration over an action's finite
outcome list. No sampling anywhere. Hypothesis sets stay small (<= 16 in the
bundled packs) so enumeration is cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .model import EngineConfig, StateLabel, StatefulEvent, state_weight

_NORM_TOL = 1e-12
_LOG_UNDERFLOW = -700.0


class DegenerateBeliefError(ArithmeticError):
    """All posterior mass underflowed; the likelihood table is inconsistent."""


class MissingOutcomeModelError(KeyError):
    """Expected-information-gain request for an action with no outcome model."""


@dataclass(frozen=True)
class Hypothesis:
    hypothesis_id: str
    label: str
    prior: float

    def __post_init__(self) -> None:
        if not (0.0 < self.prior <= 1.0):
            raise ValueError(f"prior must be in (0, 1], got {self.prior}")


@dataclass(frozen=True)
class Belief:
    probs: Mapping[str, float]
    history: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("belief probabilities must be non-negative")
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"belief must be normalized, sums to {total}")

    @classmethod
    def from_hypotheses(cls, hypotheses: Sequence[Hypothesis]) -> "Belief":
        total = sum(h.prior for h in hypotheses)
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"priors must sum to 1, got {total}")
        return cls(probs={h.hypothesis_id: h.prior for h in hypotheses})

    def to_dict(self) -> dict[str, Any]:
        return {
            "probs": {k: self.probs[k] for k in sorted(self.probs)},
            "history": [list(h) for h in self.history],
        }


@dataclass(frozen=True)
class LikelihoodModel:
    """p(observation | hypothesis) lookup keyed by (hypothesis, slot, value, state)."""

    table: Mapping[tuple[str, str, str, StateLabel], float]
    default_likelihood: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.default_likelihood <= 1.0):
            raise ValueError("default_likelihood must be in (0, 1]")
        for key, lik in self.table.items():
            if not (0.0 < lik <= 1.0):
                raise ValueError(f"likelihood for {key} must be in (0, 1], got {lik}")

    def models_observation(self, ev: StatefulEvent) -> bool:
        return any(
            key[1] == ev.field_id and key[2] == ev.value and key[3] == ev.state
            for key in self.table
        )

    def likelihood(self, hypothesis_id: str, ev: StatefulEvent) -> float:
        return self.table.get(
            (hypothesis_id, ev.field_id, ev.value, ev.state), self.default_likelihood
        )


@dataclass(frozen=True)
class OutcomeModel:
    """Finite outcome distributions per action key (``verb:slot``).

    For each action and hypothesis, outcome likelihoods sum to one.
    """

    per_action: Mapping[str, tuple[tuple[str, Mapping[str, float]], ...]]

    def __post_init__(self) -> None:
        for action_key, outcomes in self.per_action.items():
            sums: dict[str, float] = {}
            for _, per_h in outcomes:
                for h, p in per_h.items():
                    if p < 0:
                        raise ValueError(f"negative outcome likelihood in {action_key}")
                    sums[h] = sums.get(h, 0.0) + p
            for h, total in sums.items():
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(
                        f"outcome likelihoods for ({action_key}, {h}) sum to {total}"
                    )

    def outcomes_for(self, action_key: str):
        try:
            return self.per_action[action_key]
        except KeyError:
            raise MissingOutcomeModelError(action_key) from None

    def has(self, action_key: str) -> bool:
        return action_key in self.per_action


def update_belief(
    b: Belief,
    events: Sequence[StatefulEvent],
    lm: LikelihoodModel,
    turn_index: int = 0,
    config: EngineConfig | None = None,
) -> Belief:
    """Tempered sequential Bayes: each zero-weight event is skipped, each
    modeled event multiplies p(h) by likelihood ** state_weight, then the
    distribution renormalizes. Observations absent from the table are exact
    no-ops. Computation runs in log space; total underflow raises."""
    config = config or EngineConfig()
    ids = sorted(b.probs)
    log_mass = {h: (math.log(b.probs[h]) if b.probs[h] > 0 else -math.inf) for h in ids}

    for ev in events:
        w = state_weight(ev.state, config)
        if w <= 0.0:
            continue
        if not lm.models_observation(ev):
            continue  # uniform default likelihood cancels under normalization
        for h in ids:
            if log_mass[h] == -math.inf:
                continue
            log_mass[h] += w * math.log(lm.likelihood(h, ev))

    peak = max(log_mass.values())
    if peak < _LOG_UNDERFLOW:
        raise DegenerateBeliefError(
            f"posterior mass underflowed (max log mass {peak:.1f})"
        )
    unnorm = {h: math.exp(log_mass[h] - peak) for h in ids}
    z = sum(unnorm.values())
    probs = {h: unnorm[h] / z for h in ids}
    updated = Belief(probs=probs, history=b.history)
    return Belief(
        probs=probs,
        history=(*b.history, (turn_index, entropy(updated))),
    )


def entropy(b: Belief) -> float:
    """Shannon entropy in nats with the 0 * log 0 := 0 convention."""
    return -sum(p * math.log(p) for p in b.probs.values() if p > 0.0)


def top_two_margin(b: Belief) -> float | None:
    """Probability gap between the two leading hypotheses; None if fewer than two."""
    if len(b.probs) < 2:
        return None
    ranked = sorted(b.probs.values(), reverse=True)
    return ranked[0] - ranked[1]


def posterior_after_outcome(
    b: Belief, per_h: Mapping[str, float]
) -> tuple[float, dict[str, float] | None]:
    """Outcome marginal p(o) and the posterior given o (None if p(o) = 0)."""
    p_o = sum(b.probs[h] * per_h.get(h, 0.0) for h in b.probs)
    if p_o <= 0.0:
        return 0.0, None
    return p_o, {h: b.probs[h] * per_h.get(h, 0.0) / p_o for h in b.probs}


def expected_information_gain(b: Belief, action_key: str, om: OutcomeModel) -> float:
    """Prior entropy minus expected posterior entropy, enumerated exactly
    over the action's outcome list."""
    outcomes = om.outcomes_for(action_key)
    prior_h = entropy(b)
    expected_posterior_h = 0.0
    for _, per_h in outcomes:
        p_o, posterior = posterior_after_outcome(b, per_h)
        if posterior is None:
            continue
        expected_posterior_h += p_o * entropy(Belief(probs=posterior))
    return prior_h - expected_posterior_h


def likelihood_model_from_dict(raw: Mapping[str, Any]) -> LikelihoodModel:
    """Load a likelihood table from its JSON form.

    Entries look like {"hypothesis": h, "slot": f, "value": v, "state": s,
    "likelihood": p}.
    """
    table: dict[tuple[str, str, str, StateLabel], float] = {}
    for row in raw.get("entries", []):
        key = (
            row["hypothesis"],
            row["slot"],
            row["value"],
            StateLabel.parse(row["state"]),
        )
        table[key] = float(row["likelihood"])
    return LikelihoodModel(
        table=table, default_likelihood=float(raw.get("default_likelihood", 0.5))
    )


def outcome_model_from_dict(raw: Mapping[str, Any]) -> OutcomeModel:
    """Load outcome distributions from JSON:
    {"action": "ask:slot", "outcomes": [{"outcome_id": o, "likelihoods": {h: p}}]}.
    """
    per_action: dict[str, tuple[tuple[str, Mapping[str, float]], ...]] = {}
    for row in raw.get("actions", []):
        outcomes = tuple(
            (o["outcome_id"], {h: float(p) for h, p in o["likelihoods"].items()})
            for o in row["outcomes"]
        )
        per_action[row["action"]] = outcomes
    return OutcomeModel(per_action=per_action)
