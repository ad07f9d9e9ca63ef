"""In-memory policy builders shared by engine and validator tests."""

from __future__ import annotations

import random

from lexgate.model import (
    AttributeValue,
    DataType,
    Effect,
    FunctionApplication,
    Literal,
    MatchClause,
    NodeKind,
    PolicyDocument,
    PolicyNode,
    Target,
)


def rule(rule_id, effect=Effect.PERMIT, condition=None, target=Target(), legislation=None,
         obligations=(), children=()):
    return PolicyNode(
        id=rule_id,
        kind=NodeKind.RULE,
        target=target,
        effect=effect,
        condition=condition,
        children=tuple(children),
        obligations=tuple(obligations),
        legislation=legislation,
    )


def policy(policy_id, rules, combining="deny-overrides", target=Target(), legislation=None,
           obligations=()):
    return PolicyNode(
        id=policy_id,
        kind=NodeKind.POLICY,
        target=target,
        combining=combining,
        children=tuple(rules),
        obligations=tuple(obligations),
        legislation=legislation,
    )


def policy_set(set_id, children, combining="deny-overrides", legislation=None):
    return PolicyNode(
        id=set_id,
        kind=NodeKind.POLICY_SET,
        combining=combining,
        children=tuple(children),
        legislation=legislation,
    )


def document(root, name="test.xml"):
    return PolicyDocument(root=root, source_name=name)


def boolean_literal(value: bool):
    return Literal(AttributeValue(DataType.BOOLEAN, value))


def always(value: bool):
    """A condition that evaluates to the given boolean."""
    return FunctionApplication("function:not", (boolean_literal(not value),))


def string_clause(attribute_id: str, text: str) -> MatchClause:
    return MatchClause(attribute_id, "function:string-equal", AttributeValue(DataType.STRING, text))


def random_forest(rng: random.Random, scope_pool=("DE", "FR", "LU", "EU", "GB", "CH", "JP")):
    """A random mix of untagged policies (any effects) and legislation-tagged
    policies whose rules are all Deny. Conditions are literal booleans so
    decisions vary without touching context."""
    documents = []
    for doc_index in range(rng.randint(1, 5)):
        tagged = rng.random() < 0.6
        rules = []
        for rule_index in range(rng.randint(1, 4)):
            effect = Effect.DENY if tagged else rng.choice((Effect.PERMIT, Effect.DENY))
            condition = rng.choice((None, always(True), always(False)))
            rules.append(rule(f"d{doc_index}-r{rule_index}", effect, condition))
        legislation = (
            frozenset(rng.sample(scope_pool, rng.randint(1, 2))) if tagged else None
        )
        combining = rng.choice(("deny-overrides", "permit-overrides", "first-applicable"))
        documents.append(
            document(
                policy(f"d{doc_index}", rules, combining=combining, legislation=legislation),
                name=f"d{doc_index}.xml",
            )
        )
    return documents
