from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inquiryloop.belief import (
    Belief,
    DegenerateBeliefError,
    Hypothesis,
    LikelihoodModel,
    MissingOutcomeModelError,
    OutcomeModel,
    entropy,
    expected_information_gain,
    top_two_margin,
    update_belief,
)
from inquiryloop.model import (
    EngineConfig,
    EvidenceSpan,
    Role,
    StateLabel,
    StatefulEvent,
    Temporality,
)

CFG = EngineConfig()

# Oracle value: posterior of a two-hypothesis tempered update, prior (0.5, 0.5),
# likelihoods (0.9, 0.1), exponent 0.2, computed by direct scalar arithmetic
# (0.9**0.2 and 0.1**0.2, normalized).
TEMPERED_ORACLE = (0.6081267572685932, 0.3918732427314069)

# Oracle value: binary-outcome EIG at belief (0.5, 0.5) with p(yes|h1)=0.9 and
# p(yes|h2)=0.1, from explicit enumeration of both posteriors and entropies.
EIG_BINARY_ORACLE = 0.3680642071684971


def event(slot, value, state):
    return StatefulEvent(
        field_id=slot, value=value, state=state, temporality=Temporality.PRESENT,
        role=Role.PATIENT, evidence=EvidenceSpan(0, 0, 3, Role.PATIENT),
        confidence=1.0, trace_id="t0e0",
    )


def lm(entries, default=0.5):
    return LikelihoodModel(table=entries, default_likelihood=default)


def test_bayes_with_equal_priors():
    b = Belief(probs={"h1": 0.5, "h2": 0.5})
    model = lm({
        ("h1", "s", "v", StateLabel.OBSERVED_RESULT): 0.9,
        ("h2", "s", "v", StateLabel.OBSERVED_RESULT): 0.1,
    })
    out = update_belief(b, [event("s", "v", StateLabel.OBSERVED_RESULT)], model, 0, CFG)
    assert out.probs["h1"] == pytest.approx(0.9, abs=1e-12)
    assert out.probs["h2"] == pytest.approx(0.1, abs=1e-12)


def test_unmodeled_observation_is_noop():
    b = Belief(probs={f"h{i}": 0.25 for i in range(4)})
    out = update_belief(b, [event("s", "v", StateLabel.OBSERVED_RESULT)], lm({}), 0, CFG)
    for h in b.probs:
        assert out.probs[h] == pytest.approx(0.25, abs=1e-15)


def test_tempered_update_matches_oracle():
    b = Belief(probs={"h1": 0.5, "h2": 0.5})
    model = lm({
        ("h1", "s", "v", StateLabel.RECOMMENDED): 0.9,
        ("h2", "s", "v", StateLabel.RECOMMENDED): 0.1,
    })
    out = update_belief(b, [event("s", "v", StateLabel.RECOMMENDED)], model, 0, CFG)
    assert out.probs["h1"] == pytest.approx(TEMPERED_ORACLE[0], abs=1e-9)
    assert out.probs["h2"] == pytest.approx(TEMPERED_ORACLE[1], abs=1e-9)


def test_zero_weight_event_skipped():
    b = Belief(probs={"h1": 0.3, "h2": 0.7})
    model = lm({
        ("h1", "s", "v", StateLabel.NEGATED): 0.9,
        ("h2", "s", "v", StateLabel.NEGATED): 0.1,
    })
    out = update_belief(b, [event("s", "v", StateLabel.NEGATED)], model, 0, CFG)
    assert out.probs == {"h1": pytest.approx(0.3), "h2": pytest.approx(0.7)}


def test_order_invariance_within_turn():
    b = Belief(probs={"h1": 0.4, "h2": 0.6})
    model = lm({
        ("h1", "a", "x", StateLabel.OBSERVED_RESULT): 0.9,
        ("h2", "a", "x", StateLabel.OBSERVED_RESULT): 0.2,
        ("h1", "b", "y", StateLabel.COMPLETED): 0.3,
        ("h2", "b", "y", StateLabel.COMPLETED): 0.8,
    })
    e1 = event("a", "x", StateLabel.OBSERVED_RESULT)
    e2 = event("b", "y", StateLabel.COMPLETED)
    fwd = update_belief(b, [e1, e2], model, 0, CFG)
    rev = update_belief(b, [e2, e1], model, 0, CFG)
    for h in b.probs:
        assert fwd.probs[h] == pytest.approx(rev.probs[h], abs=1e-12)


def test_degenerate_belief_raises():
    b = Belief(probs={"h1": 1.0, "h2": 0.0})
    model = lm({("h1", "s", "v", StateLabel.OBSERVED_RESULT): 1e-310,
                ("h2", "s", "v", StateLabel.OBSERVED_RESULT): 1e-310})
    with pytest.raises(DegenerateBeliefError):
        update_belief(b, [event("s", "v", StateLabel.OBSERVED_RESULT)] * 3, model, 0, CFG)


def test_entropy_known_values():
    assert entropy(Belief(probs={"a": 0.5, "b": 0.5})) == pytest.approx(math.log(2), abs=1e-12)
    assert entropy(Belief(probs={"a": 1.0, "b": 0.0, "c": 0.0})) == 0.0
    assert entropy(Belief(probs={c: 0.25 for c in "abcd"})) == pytest.approx(math.log(4), abs=1e-12)


def test_top_two_margin():
    assert top_two_margin(Belief(probs={"a": 1.0})) is None
    assert top_two_margin(Belief(probs={"a": 0.52, "b": 0.48})) == pytest.approx(0.04)


def binary_outcome_model(p_yes_h1, p_yes_h2, key="ask:s"):
    return OutcomeModel(per_action={key: (
        ("yes", {"h1": p_yes_h1, "h2": p_yes_h2}),
        ("no", {"h1": 1 - p_yes_h1, "h2": 1 - p_yes_h2}),
    )})


def test_eig_binary_matches_oracle():
    b = Belief(probs={"h1": 0.5, "h2": 0.5})
    om = binary_outcome_model(0.9, 0.1)
    assert expected_information_gain(b, "ask:s", om) == pytest.approx(
        EIG_BINARY_ORACLE, abs=1e-9)


def test_eig_uninformative_outcomes_zero():
    b = Belief(probs={"h1": 0.3, "h2": 0.7})
    om = binary_outcome_model(0.6, 0.6)
    assert expected_information_gain(b, "ask:s", om) == pytest.approx(0.0, abs=1e-12)


def test_eig_degenerate_belief_zero():
    b = Belief(probs={"h1": 1.0, "h2": 0.0})
    om = binary_outcome_model(0.9, 0.1)
    assert expected_information_gain(b, "ask:s", om) == pytest.approx(0.0, abs=1e-12)


def test_eig_missing_outcome_model():
    b = Belief(probs={"h1": 0.5, "h2": 0.5})
    with pytest.raises(MissingOutcomeModelError):
        expected_information_gain(b, "ask:unmodeled", binary_outcome_model(0.9, 0.1))


def test_outcome_model_validates_sums():
    with pytest.raises(ValueError):
        OutcomeModel(per_action={"ask:s": (
            ("yes", {"h1": 0.7}),
            ("no", {"h1": 0.7}),
        )})


def _eig_enumeration_oracle(probs: dict[str, float], outcomes) -> float:
    """Brute-force reference: explicit posterior per outcome, plain floats."""
    def h_of(dist):
        return -sum(p * math.log(p) for p in dist.values() if p > 0)
    prior_h = h_of(probs)
    expected = 0.0
    for _, per_h in outcomes:
        p_o = sum(probs[h] * per_h[h] for h in probs)
        if p_o <= 0:
            continue
        post = {h: probs[h] * per_h[h] / p_o for h in probs}
        expected += p_o * h_of(post)
    return prior_h - expected


def test_eig_against_enumeration_oracle_randomized():
    rng = random.Random(1234)
    for _ in range(200):
        n_h = rng.randint(2, 5)
        n_o = rng.randint(2, 4)
        raw = [rng.random() + 1e-9 for _ in range(n_h)]
        z = sum(raw)
        probs = {f"h{i}": raw[i] / z for i in range(n_h)}
        cols = []
        for i in range(n_h):
            w = [rng.random() + 1e-9 for _ in range(n_o)]
            wz = sum(w)
            cols.append([x / wz for x in w])
        outcomes = tuple(
            (f"o{j}", {f"h{i}": cols[i][j] for i in range(n_h)}) for j in range(n_o)
        )
        om = OutcomeModel(per_action={"a:*": outcomes})
        b = Belief(probs=probs)
        got = expected_information_gain(b, "a:*", om)
        want = _eig_enumeration_oracle(probs, outcomes)
        assert got == pytest.approx(want, abs=1e-10)
        assert got >= -1e-12  # information never hurts in expectation


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6))
def test_entropy_bounds_property(raw):
    z = sum(raw)
    b = Belief(probs={f"h{i}": x / z for i, x in enumerate(raw)})
    h = entropy(b)
    assert -1e-12 <= h <= math.log(len(raw)) + 1e-12


def test_normalization_after_many_updates():
    rng = random.Random(99)
    ids = ["h1", "h2", "h3"]
    b = Belief(probs={h: 1 / 3 for h in ids})
    states = [StateLabel.OBSERVED_RESULT, StateLabel.COMPLETED,
              StateLabel.HISTORICAL_RESULT, StateLabel.RECOMMENDED]
    table = {}
    for h in ids:
        for s in states:
            table[(h, "s", "v", s)] = rng.uniform(0.2, 1.0)
    model = lm(table)
    for i in range(2000):
        st_label = states[rng.randrange(len(states))]
        b = update_belief(b, [event("s", "v", st_label)], model, i, CFG)
        assert abs(sum(b.probs.values()) - 1.0) <= 1e-12


def test_priors_must_sum_to_one():
    with pytest.raises(ValueError):
        Belief.from_hypotheses([Hypothesis("a", "A", 0.5), Hypothesis("b", "B", 0.6)])
