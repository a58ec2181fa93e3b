"""Joint distributions over discrete features and the primary/contextual/irrelevant tests.

A feature is *primary* if its value alone shifts the class distribution,
*contextual* if it is not primary but knowing it sharpens the prediction
given all the other features, and *irrelevant* otherwise.  A primary
feature is *context-sensitive* to a contextual one when the class
distribution given the primary value moves with the contextual value.

All tests compare conditional probabilities with a tolerance ``eps``;
conditioning events of probability zero are skipped (they provide no
witness, and the conditional is undefined there).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping

from .data import Dataset, JointSpec

#: suggested tolerance for distributions estimated from ~10^4 samples
EMPIRICAL_EPS = 0.03
#: tolerance for exact, analytically specified distributions
EXACT_EPS = 1e-9


@dataclass(frozen=True)
class JointDistribution:
    """Discrete joint distribution with marginal / conditional queries.

    ``class_var`` names the variable playing the role of the class in the
    feature tests; by convention it is the first variable.
    """

    variables: tuple[str, ...]
    alphabets: tuple[tuple[str, ...], ...]
    probs: Mapping[tuple[str, ...], float]
    class_var: str = ""

    def __post_init__(self):
        if len(self.variables) != len(self.alphabets):
            raise ValueError("one alphabet per variable required")
        total = 0.0
        for tup, p in self.probs.items():
            if len(tup) != len(self.variables):
                raise ValueError(f"tuple {tup!r} does not match variable count")
            if p < 0:
                raise ValueError(f"negative probability for {tup!r}")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if not self.class_var:
            object.__setattr__(self, "class_var", self.variables[0])
        elif self.class_var not in self.variables:
            raise ValueError(f"unknown class variable {self.class_var!r}")

    @classmethod
    def from_spec(cls, spec: JointSpec) -> "JointDistribution":
        return cls(spec.variables, spec.alphabets, dict(spec.probs))

    def index_of(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise KeyError(f"unknown variable {var!r}") from None

    def alphabet_of(self, var: str) -> tuple[str, ...]:
        return self.alphabets[self.index_of(var)]

    def _check(self, var: str, value: str) -> None:
        if value not in self.alphabet_of(var):
            raise KeyError(f"value {value!r} not in alphabet of {var!r}")

    def marginal(self, assignment: Mapping[str, str]) -> float:
        """Probability that every variable in ``assignment`` takes its value."""
        idx = {}
        for var, val in assignment.items():
            self._check(var, val)
            idx[self.index_of(var)] = val
        total = 0.0
        for tup, p in self.probs.items():
            if all(tup[i] == v for i, v in idx.items()):
                total += p
        return total


@dataclass(frozen=True)
class FeatureVerdict:
    """Per-feature labels plus, for primary features, their sensitivity sets."""

    labels: Mapping[str, str]  # feature name -> "primary" | "contextual" | "irrelevant"
    sensitive_to: Mapping[str, tuple[str, ...]]  # primary name -> contextual names
    witnesses: Mapping[str, tuple] = None

    def primaries(self) -> tuple[str, ...]:
        return tuple(n for n, l in self.labels.items() if l == "primary")

    def contextuals(self) -> tuple[str, ...]:
        return tuple(n for n, l in self.labels.items() if l == "contextual")

    def irrelevants(self) -> tuple[str, ...]:
        return tuple(n for n, l in self.labels.items() if l == "irrelevant")


def estimate_distribution(dataset: Dataset) -> JointDistribution:
    """Empirical joint distribution of a fully discrete dataset."""
    if dataset.n_rows == 0:
        raise ValueError("cannot estimate a distribution from an empty dataset")
    continuous = [f.name for f in dataset.schema if f.kind != "discrete"]
    if continuous:
        raise ValueError(
            f"continuous features {continuous} must be binned first "
            "(see preprocess.equal_freq_bins)"
        )
    counts: dict[tuple[str, ...], int] = {}
    for row in dataset.rows:
        counts[tuple(row)] = counts.get(tuple(row), 0) + 1
    n = dataset.n_rows
    probs = {t: c / n for t, c in counts.items()}
    return JointDistribution(
        variables=dataset.schema.names,
        alphabets=tuple(f.alphabet for f in dataset.schema),
        probs=probs,
        class_var=dataset.schema.class_feature.name,
    )


def cond_prob(
    dist: JointDistribution,
    event: tuple[str, str],
    given: Mapping[str, str] | None = None,
) -> float | None:
    """p(event | given); None when the conditioning event has probability 0."""
    var, val = event
    dist._check(var, val)
    given = dict(given or {})
    denom = dist.marginal(given)
    if denom == 0.0:
        return None
    joint = dict(given)
    joint[var] = val
    return dist.marginal(joint) / denom


def _non_class_vars(dist: JointDistribution) -> tuple[str, ...]:
    return tuple(v for v in dist.variables if v != dist.class_var)


def _check_feature(dist: JointDistribution, feature: str) -> None:
    dist.index_of(feature)
    if feature == dist.class_var:
        raise ValueError("the class variable is not a feature under test")


def _primary_witness(dist: JointDistribution, feature: str, eps: float):
    """Witness (a0, ai) with |p(x0=a0 | xi=ai) - p(x0=a0)| > eps, or None."""
    _check_feature(dist, feature)
    c = dist.class_var
    for ai in dist.alphabet_of(feature):
        for a0 in dist.alphabet_of(c):
            lhs = cond_prob(dist, (c, a0), {feature: ai})
            if lhs is None:
                continue
            if abs(lhs - dist.marginal({c: a0})) > eps:
                return (a0, ai)
    return None


def is_primary(dist: JointDistribution, feature: str, eps: float = EXACT_EPS) -> bool:
    return _primary_witness(dist, feature, eps) is not None


def _full_assignments(dist: JointDistribution) -> Iterator[dict[str, str]]:
    names = _non_class_vars(dist)
    for values in product(*(dist.alphabet_of(n) for n in names)):
        yield dict(zip(names, values))


def _contextual_witness(dist: JointDistribution, feature: str, eps: float):
    """Witness full assignment where dropping the feature moves the prediction.

    Both conditionals must be defined (positive conditioning probability on
    both sides); the same class value appears on both sides of the
    comparison because the witness is a single shared assignment.
    """
    _check_feature(dist, feature)
    if is_primary(dist, feature, eps):
        return None
    c = dist.class_var
    for full in _full_assignments(dist):
        reduced = {k: v for k, v in full.items() if k != feature}
        if dist.marginal(full) == 0.0 or dist.marginal(reduced) == 0.0:
            continue
        for a0 in dist.alphabet_of(c):
            with_i = cond_prob(dist, (c, a0), full)
            without_i = cond_prob(dist, (c, a0), reduced)
            if abs(with_i - without_i) > eps:
                return (a0, dict(full))
    return None


def is_contextual(dist: JointDistribution, feature: str, eps: float = EXACT_EPS) -> bool:
    return _contextual_witness(dist, feature, eps) is not None


def _sensitivity_witness(dist: JointDistribution, primary: str, contextual: str, eps: float):
    _check_feature(dist, primary)
    _check_feature(dist, contextual)
    if primary == contextual:
        raise ValueError("primary and contextual feature must differ")
    c = dist.class_var
    for ai in dist.alphabet_of(primary):
        base_denom = dist.marginal({primary: ai})
        if base_denom == 0.0:
            continue
        for aj in dist.alphabet_of(contextual):
            if dist.marginal({primary: ai, contextual: aj}) == 0.0:
                continue
            for a0 in dist.alphabet_of(c):
                joint = cond_prob(dist, (c, a0), {primary: ai, contextual: aj})
                alone = cond_prob(dist, (c, a0), {primary: ai})
                if abs(joint - alone) > eps:
                    return (a0, ai, aj)
    return None


def is_context_sensitive(
    dist: JointDistribution, primary: str, contextual: str, eps: float = EXACT_EPS
) -> bool:
    return _sensitivity_witness(dist, primary, contextual, eps) is not None


def classify_features(dist: JointDistribution, eps: float = EXACT_EPS) -> FeatureVerdict:
    """Label every non-class feature and fill sensitivity sets.

    Definition order matters: the contextual test only applies to features
    that failed the primary test, and irrelevant is the residual label.
    """
    labels: dict[str, str] = {}
    witnesses: dict[str, tuple] = {}
    for name in _non_class_vars(dist):
        w = _primary_witness(dist, name, eps)
        if w is not None:
            labels[name] = "primary"
            witnesses[name] = w
            continue
        w = _contextual_witness(dist, name, eps)
        if w is not None:
            labels[name] = "contextual"
            witnesses[name] = w
        else:
            labels[name] = "irrelevant"
    sensitive: dict[str, tuple[str, ...]] = {}
    for p, lab in labels.items():
        if lab != "primary":
            continue
        hits = tuple(
            ctx
            for ctx, lab2 in labels.items()
            if lab2 == "contextual" and is_context_sensitive(dist, p, ctx, eps)
        )
        sensitive[p] = hits
    return FeatureVerdict(labels=labels, sensitive_to=sensitive, witnesses=witnesses)


def verdict_table(verdict: FeatureVerdict) -> str:
    """Plain-text rendering of a verdict."""
    lines = [f"{'feature':<16} {'label':<12} sensitive to"]
    for name, label in verdict.labels.items():
        sens = ", ".join(verdict.sensitive_to.get(name, ())) or "-"
        lines.append(f"{name:<16} {label:<12} {sens}")
    return "\n".join(lines)


def verdict_json(verdict: FeatureVerdict) -> dict:
    return {
        "labels": dict(verdict.labels),
        "sensitive_to": {k: list(v) for k, v in verdict.sensitive_to.items()},
        "witnesses": {k: list(v) if v else None for k, v in (verdict.witnesses or {}).items()},
    }
