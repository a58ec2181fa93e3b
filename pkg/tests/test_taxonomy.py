import itertools

import pytest

from ctxclass import data, taxonomy
from ctxclass.taxonomy import (
    classify_features,
    cond_prob,
    estimate_distribution,
    is_context_sensitive,
    is_contextual,
    is_primary,
)

from conftest import WORKED_PROBS, worked_spec


class TestCondProb:
    def test_class_marginal(self, worked_dist):
        assert cond_prob(worked_dist, ("x0", "1")) == pytest.approx(0.5)

    def test_single_condition(self, worked_dist):
        assert cond_prob(worked_dist, ("x0", "1"), {"x1": "1"}) == pytest.approx(0.44)

    def test_double_condition(self, worked_dist):
        got = cond_prob(worked_dist, ("x0", "1"), {"x1": "1", "x2": "1"})
        assert got == pytest.approx(0.5333, abs=1e-4)
        # independent check by summing the table rows directly
        num = sum(p for t, p in WORKED_PROBS.items() if t[0] == "1" and t[1] == "1" and t[2] == "1")
        den = sum(p for t, p in WORKED_PROBS.items() if t[1] == "1" and t[2] == "1")
        assert got == pytest.approx(num / den)

    def test_zero_probability_condition_is_undefined(self):
        dist = taxonomy.JointDistribution(
            ("c", "x"), (("0", "1"), ("0", "1")), {("0", "0"): 0.5, ("1", "0"): 0.5}
        )
        assert cond_prob(dist, ("c", "0"), {"x": "1"}) is None

    def test_unknown_variable_or_value(self, worked_dist):
        with pytest.raises(KeyError):
            cond_prob(worked_dist, ("nope", "1"))
        with pytest.raises(KeyError):
            cond_prob(worked_dist, ("x0", "9"))

    def test_conditionals_sum_to_one(self, worked_dist):
        for assign in itertools.product("01", repeat=3):
            given = dict(zip(("x1", "x2", "x3"), assign))
            if worked_dist.marginal(given) == 0:
                continue
            total = sum(cond_prob(worked_dist, ("x0", a0), given) for a0 in "01")
            assert total == pytest.approx(1.0)


class TestFeatureTests:
    def test_x1_is_primary(self, worked_dist):
        assert is_primary(worked_dist, "x1")

    def test_x2_not_primary_but_contextual(self, worked_dist):
        assert not is_primary(worked_dist, "x2")
        assert is_contextual(worked_dist, "x2")

    def test_x3_irrelevant(self, worked_dist):
        assert not is_primary(worked_dist, "x3")
        assert not is_contextual(worked_dist, "x3")

    def test_primary_excluded_from_contextual(self, worked_dist):
        assert not is_contextual(worked_dist, "x1")

    def test_independent_feature_not_primary(self):
        # x independent of the class by construction
        probs = {
            ("0", "0"): 0.3, ("0", "1"): 0.3, ("1", "0"): 0.2, ("1", "1"): 0.2,
        }
        dist = taxonomy.JointDistribution(("c", "x"), (("0", "1"), ("0", "1")), probs)
        assert not is_primary(dist, "x")

    def test_sensitivity_pair(self, worked_dist):
        assert is_context_sensitive(worked_dist, "x1", "x2")

    def test_sensitivity_tolerance_cutoff(self, worked_dist):
        # largest gap over all (a0, a1, a2) triples is |0.5333 - 0.44| < 0.2;
        # verified here by direct enumeration as the oracle
        largest = 0.0
        for a1 in "01":
            for a2 in "01":
                for a0 in "01":
                    joint = cond_prob(worked_dist, ("x0", a0), {"x1": a1, "x2": a2})
                    alone = cond_prob(worked_dist, ("x0", a0), {"x1": a1})
                    if joint is not None and alone is not None:
                        largest = max(largest, abs(joint - alone))
        assert largest < 0.2
        assert not is_context_sensitive(worked_dist, "x1", "x2", eps=0.2)

    def test_independent_context_not_sensitive(self):
        # x2 independent of (class, x1): p factorizes
        probs = {}
        for c in "01":
            for x1 in "01":
                for x2 in "01":
                    base = 0.4 if c == x1 else 0.1
                    probs[(c, x1, x2)] = base * (0.5 if x2 == "0" else 0.5)
        dist = taxonomy.JointDistribution(("c", "x1", "x2"), (("0", "1"),) * 3, probs)
        assert not is_context_sensitive(dist, "x1", "x2")


class TestEstimateDistribution:
    def test_matches_worked_table(self):
        spec = worked_spec()
        rows = []
        for tup, p in spec.probs.items():
            rows.extend([tup] * round(1000 * p))
        ds = data.Dataset.build(spec.schema(), rows)
        dist = estimate_distribution(ds)
        for tup, p in spec.probs.items():
            assert dist.probs[tup] == pytest.approx(p, abs=1e-3)

    def test_point_mass(self):
        spec = worked_spec()
        ds = data.Dataset.build(spec.schema(), [("0", "1", "0", "1")])
        dist = estimate_distribution(ds)
        assert dist.probs == {("0", "1", "0", "1"): 1.0}

    def test_empty_dataset_is_error(self):
        ds = data.Dataset.build(worked_spec().schema(), [])
        with pytest.raises(ValueError):
            estimate_distribution(ds)

    def test_continuous_feature_directs_to_binning(self):
        schema = data.FeatureSchema(
            (
                data.Feature("c", data.FeatureRole.CLASS, "discrete", ("0", "1")),
                data.Feature("x", data.FeatureRole.PRIMARY, "continuous"),
            )
        )
        ds = data.Dataset.build(schema, [("0", 1.0)])
        with pytest.raises(ValueError, match="binned"):
            estimate_distribution(ds)


class TestClassifyFeatures:
    def test_worked_verdict(self, worked_dist):
        v = classify_features(worked_dist)
        assert v.labels == {"x1": "primary", "x2": "contextual", "x3": "irrelevant"}
        assert v.sensitive_to == {"x1": ("x2",)}

    def test_all_independent_all_irrelevant(self):
        probs = {}
        for c in "01":
            for x1 in "01":
                for x2 in "01":
                    probs[(c, x1, x2)] = 0.125
        dist = taxonomy.JointDistribution(("c", "x1", "x2"), (("0", "1"),) * 3, probs)
        v = classify_features(dist)
        assert set(v.labels.values()) == {"irrelevant"}

    def test_sampled_verdict_matches_exact(self, table_spec, worked_dist):
        ds = data.sample_from(table_spec, 10000, seed=17)
        v = classify_features(estimate_distribution(ds), eps=0.03)
        assert v.labels == classify_features(worked_dist).labels

    def test_trichotomy(self, worked_dist):
        v = classify_features(worked_dist)
        assert set(v.labels) == {"x1", "x2", "x3"}
        assert all(l in ("primary", "contextual", "irrelevant") for l in v.labels.values())

    def test_eps_monotonicity(self, worked_dist):
        grid = [1e-9, 0.01, 0.05, 0.1, 0.3, 0.9]
        for name in ("x1", "x2", "x3"):
            prim = [is_primary(worked_dist, name, e) for e in grid]
            # once false at a small eps, never true at a larger one
            assert prim == sorted(prim, reverse=True)
        # the contextual test applies only to non-primary features; x1 is
        # primary at small eps, so only x2 and x3 are monotone here
        for name in ("x2", "x3"):
            ctx = [
                taxonomy._contextual_witness(worked_dist, name, e) is not None for e in grid
            ]
            assert ctx == sorted(ctx, reverse=True)

    def test_feature_order_permutation(self, table_spec):
        # permuting variable order permutes the verdict, nothing else
        spec = table_spec
        perm = (0, 3, 1, 2)  # keep the class first
        probs = {tuple(t[i] for i in perm): p for t, p in spec.probs.items()}
        dist = taxonomy.JointDistribution(
            tuple(spec.variables[i] for i in perm),
            tuple(spec.alphabets[i] for i in perm),
            probs,
        )
        v = classify_features(dist)
        assert v.labels == {"x1": "primary", "x2": "contextual", "x3": "irrelevant"}

    def test_verdict_rendering(self, worked_dist):
        text = taxonomy.verdict_table(classify_features(worked_dist))
        assert "x1" in text and "primary" in text and "x2" in text
