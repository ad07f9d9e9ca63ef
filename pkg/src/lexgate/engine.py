"""Policy decision point: applicability, conditions, tree evaluation.

Evaluation is a pure function of (documents, request, supplier snapshot):
the location supplier is consulted at most once per call, the clock once,
and every derived attribute is cached write-once, so repeated evaluations
return identical responses including the trace.

Legislation applicability: a node carrying a legislation scope set is
applicable only when that set intersects the scopes observed by the
connection (closure of the source and destination national scopes plus
the organization scope). `legislation_mode="ignore-tags"` skips that
check, reproducing an engine that does not understand the tag; since
tagged policies constrain access, ignoring the tag can only over-restrict.

Default rule: when the last rule of a Policy has a match-any target, no
condition and no legislation set, it acts as the policy's fallback and
fires only if the declared combiner over the preceding rules yields
NotApplicable. This is how time-fence policies with a trailing
unconditional Deny rule behave as their authors intend under
deny-overrides; see README for the exact semantics.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .combining import CombinerRegistry
from .context.bundle import PipBundle
from .context.identity import ProximityToken
from .errors import LexgateError, PrecisionError, UnknownCombinerError
from .instant import parse_instant
from .model import (
    AttributeSelector,
    AttributeValue,
    Category,
    ConditionExpr,
    DataType,
    Decision,
    FunctionApplication,
    Literal,
    MatchClause,
    Obligation,
    PolicyDocument,
    PolicyNode,
    NodeKind,
    ResponseContext,
    STATUS_MISSING_ATTRIBUTE,
    STATUS_OK,
    STATUS_PROCESSING_ERROR,
    Target,
    TraceRecord,
)
from .parsing.location_xml import LocationReport
from .parsing.wire import PROXIMITY_TOKEN, RequestContext

# Reserved attribute ids the context handler fills from trusted suppliers;
# request-supplied values never override them.
ENV_CURRENT_TIME = "current-time"
ENV_CURRENT_DATE = "current-date"
ENV_CURRENT_ZONE = "current-zone"
ENV_SOURCE_COUNTRY = "source-country"
ENV_DESTINATION_COUNTRY = "destination-country"
ENV_TASK_STATUS = "task-status"
SUBJECT_KIND = "kind"
SUBJECT_RELATIONSHIP = "relationship"
RESOURCE_CONFIDENTIAL = "confidential"
RESOURCE_CUSTOMER_RELATED = "customer-related"
RESOURCE_HOST_COUNTRY = "host-country"
RESOURCE_CATEGORY = "category"


class Applicability(Enum):
    APPLICABLE = "Applicable"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ConditionOutcome:
    value: Optional[bool]  # None means Indeterminate
    status: str = STATUS_OK
    reason: str = ""


class _EvalError(Exception):
    """Internal: folded into Indeterminate at the nearest boundary."""

    def __init__(self, status: str, message: str):
        super().__init__(message)
        self.status = status


class EvaluationContext:
    """Per-call snapshot of everything conditions may consult."""

    def __init__(
        self,
        request: RequestContext,
        pips: PipBundle,
        now_utc: dt.datetime,
        source_location: Optional[LocationReport],
        source_country: Optional[str],
        destination_country: str,
        legislation_mode: str = "aware",
    ):
        self.request = request
        self.pips = pips
        self.now_utc = now_utc
        self.source_location = source_location
        self.source_country = source_country
        self.destination_country = destination_country
        self.legislation_mode = legislation_mode
        self.applicable_scopes: frozenset[str] = frozenset()
        self._cache: dict[tuple[Category, str], tuple[AttributeValue, ...]] = {}
        self.errors: list[str] = []

    # -- attribute snapshot ------------------------------------------------

    def _put(self, category: Category, attribute_id: str, *values: AttributeValue) -> None:
        key = (category, attribute_id)
        if key in self._cache:
            raise LexgateError(f"attribute {key} written twice")
        self._cache[key] = tuple(values)

    def bag(self, category: Category, attribute_id: str) -> tuple[AttributeValue, ...]:
        key = (category, attribute_id)
        if key not in self._cache:
            self._cache[key] = self.request.bag(category, attribute_id)
        return self._cache[key]

    def note_error(self, status: str) -> None:
        self.errors.append(status)

    def first_error_status(self) -> str:
        return self.errors[0] if self.errors else STATUS_PROCESSING_ERROR


def _proximity_tokens(request: RequestContext) -> tuple[ProximityToken, ...]:
    """Tokens travel as environment attributes 'customer|method|instant'."""
    tokens = []
    for value in request.bag(Category.ENVIRONMENT, PROXIMITY_TOKEN):
        if value.data_type is not DataType.STRING:
            continue
        pieces = str(value.value).split("|")
        if len(pieces) != 3:
            continue
        try:
            tokens.append(
                ProximityToken(
                    customer=pieces[0],
                    method=pieces[1],
                    verified_at=parse_instant(pieces[2]),
                )
            )
        except ValueError:
            continue
    return tuple(tokens)


# -- built-in functions ----------------------------------------------------

FunctionImpl = Callable[[EvaluationContext, list[object]], object]


def _need(args: list[object], count: int, function: str) -> None:
    if len(args) != count:
        raise _EvalError(
            STATUS_PROCESSING_ERROR, f"{function} takes {count} arguments, got {len(args)}"
        )


def _scalar(value: object, expected: type, function: str) -> object:
    if isinstance(value, tuple):
        raise _EvalError(STATUS_PROCESSING_ERROR, f"{function} expects a scalar, got a bag")
    if not isinstance(value, expected):
        raise _EvalError(
            STATUS_PROCESSING_ERROR,
            f"{function} expects {expected.__name__}, got {type(value).__name__}",
        )
    return value


def _fn_not(ctx: EvaluationContext, args: list[object]) -> object:
    _need(args, 1, "function:not")
    return not _scalar(args[0], bool, "function:not")


def _fn_string_equal(ctx: EvaluationContext, args: list[object]) -> object:
    _need(args, 2, "function:string-equal")
    a = _scalar(args[0], str, "function:string-equal")
    b = _scalar(args[1], str, "function:string-equal")
    return a == b


def _fn_boolean_equal(ctx: EvaluationContext, args: list[object]) -> object:
    _need(args, 2, "function:boolean-equal")
    a = _scalar(args[0], bool, "function:boolean-equal")
    b = _scalar(args[1], bool, "function:boolean-equal")
    return a == b


def _fn_time_ge(ctx: EvaluationContext, args: list[object]) -> object:
    _need(args, 2, "function:time-greater-than-or-equal")
    a = _scalar(args[0], dt.time, "function:time-greater-than-or-equal")
    b = _scalar(args[1], dt.time, "function:time-greater-than-or-equal")
    return a >= b


def _fn_time_le(ctx: EvaluationContext, args: list[object]) -> object:
    _need(args, 2, "function:time-less-than-or-equal")
    a = _scalar(args[0], dt.time, "function:time-less-than-or-equal")
    b = _scalar(args[1], dt.time, "function:time-less-than-or-equal")
    return a <= b


def _one_and_only(args: list[object], expected: type, function: str) -> object:
    _need(args, 1, function)
    bag = args[0]
    if not isinstance(bag, tuple):
        bag = (bag,)
    if len(bag) == 0:
        raise _EvalError(STATUS_MISSING_ATTRIBUTE, f"{function}: empty bag")
    if len(bag) > 1:
        raise _EvalError(STATUS_PROCESSING_ERROR, f"{function}: bag holds {len(bag)} values")
    return _scalar(bag[0], expected, function)


def _fn_time_one_and_only(ctx: EvaluationContext, args: list[object]) -> object:
    return _one_and_only(args, dt.time, "function:time-one-and-only")


def _fn_string_one_and_only(ctx: EvaluationContext, args: list[object]) -> object:
    return _one_and_only(args, str, "function:string-one-and-only")


def _fn_location_match(ctx: EvaluationContext, args: list[object]) -> object:
    """True iff the resolved source location lies in any named territory or
    zone category ('restricted'/'unrestricted')."""
    if not args:
        raise _EvalError(STATUS_PROCESSING_ERROR, "function:location-match needs arguments")
    for arg in args:
        name = str(_scalar(arg, str, "function:location-match"))
        if name in ("restricted", "unrestricted"):
            if ctx.source_location is None:
                raise _EvalError(
                    STATUS_MISSING_ATTRIBUTE, "zone classification unavailable"
                )
            if ctx.source_location.zone.value == name:
                return True
            continue
        if ctx.source_country is None:
            raise _EvalError(STATUS_MISSING_ATTRIBUTE, "source country unavailable")
        if name == ctx.source_country:
            return True
        if ctx.source_country in ctx.pips.zones.member_countries(name):
            return True
    return False


_BUILTINS: dict[str, FunctionImpl] = {
    "function:not": _fn_not,
    "function:string-equal": _fn_string_equal,
    "function:boolean-equal": _fn_boolean_equal,
    "function:time-greater-than-or-equal": _fn_time_ge,
    "function:time-less-than-or-equal": _fn_time_le,
    "function:time-one-and-only": _fn_time_one_and_only,
    "function:string-one-and-only": _fn_string_one_and_only,
    "function:location-match": _fn_location_match,
}

# and/or are special forms: the evaluator short-circuits them and tolerates
# operand errors that cannot change the outcome.
_SPECIAL_FORMS = ("function:and", "function:or")


class FunctionRegistry:
    def __init__(self, extra: dict[str, FunctionImpl] | None = None):
        self._functions = dict(_BUILTINS)
        for function_id, fn in (extra or {}).items():
            self.register(function_id, fn)

    def register(self, function_id: str, fn: FunctionImpl) -> None:
        if function_id in self._functions or function_id in _SPECIAL_FORMS:
            raise ValueError(f"function {function_id!r} is already registered")
        self._functions[function_id] = fn

    def __contains__(self, function_id: str) -> bool:
        return function_id in self._functions or function_id in _SPECIAL_FORMS

    def ids(self) -> frozenset[str]:
        return frozenset(self._functions) | frozenset(_SPECIAL_FORMS)

    def get(self, function_id: str) -> FunctionImpl:
        try:
            return self._functions[function_id]
        except KeyError:
            raise _EvalError(
                STATUS_PROCESSING_ERROR, f"unknown function {function_id!r}"
            ) from None


class PolicyDecisionPoint:
    """Immutable engine: registries are frozen at construction."""

    def __init__(
        self,
        functions: Optional[FunctionRegistry] = None,
        combiners: Optional[CombinerRegistry] = None,
        top_combiner: str = "deny-overrides",
    ):
        self.functions = functions or FunctionRegistry()
        self.combiners = combiners or CombinerRegistry()
        if top_combiner not in self.combiners:
            raise ValueError(f"top-level combiner {top_combiner!r} is not registered")
        self.top_combiner = top_combiner

    # -- context construction ---------------------------------------------

    def _build_context(
        self, request: RequestContext, pips: PipBundle, legislation_mode: str
    ) -> EvaluationContext:
        now = pips.clock.now_utc()

        report = request.source_location
        precision_country: Optional[str] = None
        if report is None:
            pips.log.record("locate")
            try:
                report = pips.location.locate(request)
            except PrecisionError as exc:
                if exc.country is None:
                    raise
                # Country is certain, the zone is not: continue degraded so
                # the pseudonymous fallback can still apply.
                precision_country = exc.country

        source_country = report.country if report is not None else precision_country
        resource_id = request.resource_id()
        record = pips.resources.get(resource_id) if resource_id else None
        destination = request.destination_country or pips.resources.host_country(resource_id)
        if source_country is None or destination is None:
            raise LexgateError("source or destination country cannot be resolved")

        ctx = EvaluationContext(
            request=request,
            pips=pips,
            now_utc=now,
            source_location=report,
            source_country=source_country,
            destination_country=destination,
            legislation_mode=legislation_mode,
        )

        pips.log.record("attributes")
        # Local time survives a zone-precision failure: the country (and so
        # its timezone) is still certain, only the zone classification is
        # not, so current-zone stays absent while current-time is served.
        tz_offset: Optional[float] = None
        if report is not None:
            tz_offset = report.timezone_offset
        elif precision_country is not None:
            tz_offset = pips.zones.country(precision_country).timezone_offset
        if tz_offset is not None:
            shifted = now + dt.timedelta(hours=tz_offset)
            ctx._put(Category.ENVIRONMENT, ENV_CURRENT_TIME, AttributeValue(DataType.TIME_OF_DAY, shifted.time()))
            ctx._put(Category.ENVIRONMENT, ENV_CURRENT_DATE, AttributeValue(DataType.DATE, shifted.date()))
        if report is not None:
            ctx._put(Category.ENVIRONMENT, ENV_CURRENT_ZONE, AttributeValue(DataType.STRING, report.zone.value))
        ctx._put(Category.ENVIRONMENT, ENV_SOURCE_COUNTRY, AttributeValue(DataType.COUNTRY_CODE, source_country))
        ctx._put(Category.ENVIRONMENT, ENV_DESTINATION_COUNTRY, AttributeValue(DataType.COUNTRY_CODE, destination))

        subject_id = request.subject_id()
        subject_record = pips.identities.get(subject_id) if subject_id else None
        if subject_record is not None:
            ctx._put(Category.SUBJECT, SUBJECT_KIND, AttributeValue(DataType.STRING, subject_record.kind.value))

        if record is not None:
            ctx._put(Category.RESOURCE, RESOURCE_CONFIDENTIAL, AttributeValue(DataType.BOOLEAN, record.confidential))
            ctx._put(Category.RESOURCE, RESOURCE_CUSTOMER_RELATED, AttributeValue(DataType.BOOLEAN, record.customer_related))
            ctx._put(Category.RESOURCE, RESOURCE_HOST_COUNTRY, AttributeValue(DataType.COUNTRY_CODE, record.host_country))
            if record.category:
                ctx._put(Category.RESOURCE, RESOURCE_CATEGORY, AttributeValue(DataType.STRING, record.category))
            if subject_id and record.customers:
                relation = pips.identities.check_relationship(subject_id, record.customers, now)
                ctx._put(Category.SUBJECT, SUBJECT_RELATIONSHIP, AttributeValue(DataType.STRING, relation.value))

        pips.log.record("diary")
        assessment = pips.diary.check_task(
            subject_id or "",
            resource_id or "",
            now,
            report,
            _proximity_tokens(request),
            pips.identities,
        )
        ctx._put(Category.ENVIRONMENT, ENV_TASK_STATUS, AttributeValue(DataType.STRING, assessment.value))
        return ctx

    # -- expression evaluation ----------------------------------------------

    def _eval_expr(self, expr: ConditionExpr, ctx: EvaluationContext) -> object:
        if isinstance(expr, Literal):
            return expr.value.value
        if isinstance(expr, AttributeSelector):
            bag = ctx.bag(expr.category, expr.attribute_id)
            return tuple(v.value for v in bag if v.data_type is expr.data_type)
        if isinstance(expr, FunctionApplication):
            if expr.function in _SPECIAL_FORMS:
                return self._eval_logical(expr, ctx)
            fn = self.functions.get(expr.function)
            args = [self._eval_expr(arg, ctx) for arg in expr.args]
            return fn(ctx, args)
        raise _EvalError(STATUS_PROCESSING_ERROR, f"unknown expression node {expr!r}")

    def _eval_logical(self, expr: FunctionApplication, ctx: EvaluationContext) -> bool:
        """Short-circuit and/or; an operand error surfaces only when the
        remaining operands cannot decide the outcome."""
        want_all = expr.function == "function:and"
        pending_error: Optional[_EvalError] = None
        for arg in expr.args:
            try:
                flag = _scalar(self._eval_expr(arg, ctx), bool, expr.function)
            except _EvalError as exc:
                pending_error = pending_error or exc
                continue
            if want_all and not flag:
                return False
            if not want_all and flag:
                return True
        if pending_error is not None:
            raise pending_error
        return want_all

    def evaluate_condition(self, expr: ConditionExpr, ctx: EvaluationContext) -> ConditionOutcome:
        """Three-valued condition evaluation; errors fold to Indeterminate."""
        try:
            value = self._eval_expr(expr, ctx)
        except _EvalError as exc:
            return ConditionOutcome(None, exc.status, str(exc))
        if isinstance(value, bool):
            return ConditionOutcome(value)
        return ConditionOutcome(
            None, STATUS_PROCESSING_ERROR, "condition did not produce a boolean"
        )

    # -- applicability -------------------------------------------------------

    def _match_clause(
        self, clause: MatchClause, category: Category, ctx: EvaluationContext
    ) -> bool:
        fn = self.functions.get(clause.match_function)
        for value in ctx.bag(category, clause.attribute_id):
            if fn(ctx, [value.value, clause.literal.value]) is True:
                return True
        return False

    def is_applicable(
        self, node: PolicyNode, ctx: EvaluationContext
    ) -> tuple[Applicability, str]:
        """Target and legislation applicability with a trace reason."""
        if (
            ctx.legislation_mode != "ignore-tags"
            and node.legislation is not None
            and not (node.legislation & ctx.applicable_scopes)
        ):
            scopes = ",".join(sorted(node.legislation))
            return Applicability.NOT_APPLICABLE, f"legislation-scope-miss:{scopes}"

        target: Target = node.target
        for category, clauses in (
            (Category.SUBJECT, target.subjects),
            (Category.RESOURCE, target.resources),
            (Category.ACTION, target.actions),
            (Category.ENVIRONMENT, target.environments),
        ):
            if not clauses:
                continue
            try:
                if not any(self._match_clause(c, category, ctx) for c in clauses):
                    return Applicability.NOT_APPLICABLE, f"target-no-match:{category.value}"
            except _EvalError as exc:
                ctx.note_error(exc.status)
                return Applicability.INDETERMINATE, f"target-error:{exc}"
        return Applicability.APPLICABLE, ""

    # -- tree evaluation -----------------------------------------------------

    @staticmethod
    def _is_default_rule(node: PolicyNode) -> bool:
        return (
            node.kind is NodeKind.RULE
            and node.effect is not None
            and node.condition is None
            and node.legislation is None
            and node.target.is_match_any()
        )

    def _evaluate_rule(
        self, rule: PolicyNode, ctx: EvaluationContext, visited: list
    ) -> Decision:
        applicability, reason = self.is_applicable(rule, ctx)
        if applicability is Applicability.NOT_APPLICABLE:
            visited.append((rule, Decision.NOT_APPLICABLE, reason))
            return Decision.NOT_APPLICABLE
        if applicability is Applicability.INDETERMINATE:
            visited.append((rule, Decision.INDETERMINATE, reason))
            return Decision.INDETERMINATE

        if rule.condition is not None:
            outcome = self.evaluate_condition(rule.condition, ctx)
            if outcome.value is None:
                ctx.note_error(outcome.status)
                visited.append(
                    (rule, Decision.INDETERMINATE, f"condition-error:{outcome.status}")
                )
                return Decision.INDETERMINATE
            if outcome.value is False:
                visited.append((rule, Decision.NOT_APPLICABLE, "condition-false"))
                return Decision.NOT_APPLICABLE
        decision = rule.effect.to_decision()
        visited.append((rule, decision, "effect"))
        return decision

    def _evaluate_node(
        self, node: PolicyNode, ctx: EvaluationContext, visited: list
    ) -> Decision:
        if node.kind is NodeKind.RULE:
            return self._evaluate_rule(node, ctx, visited)

        applicability, reason = self.is_applicable(node, ctx)
        if applicability is Applicability.NOT_APPLICABLE:
            visited.append((node, Decision.NOT_APPLICABLE, reason))
            return Decision.NOT_APPLICABLE
        if applicability is Applicability.INDETERMINATE:
            visited.append((node, Decision.INDETERMINATE, reason))
            return Decision.INDETERMINATE

        children = node.children
        default_rule: Optional[PolicyNode] = None
        if node.kind is NodeKind.POLICY and children and self._is_default_rule(children[-1]):
            default_rule = children[-1]
            children = children[:-1]

        decisions = [self._evaluate_node(child, ctx, visited) for child in children]
        try:
            combined = self.combiners.combine(node.combining, decisions)
        except UnknownCombinerError as exc:
            ctx.note_error(STATUS_PROCESSING_ERROR)
            visited.append((node, Decision.INDETERMINATE, f"combiner-error:{exc}"))
            return Decision.INDETERMINATE

        if combined is Decision.NOT_APPLICABLE and default_rule is not None:
            combined = default_rule.effect.to_decision()
            visited.append((default_rule, combined, "default-rule"))

        visited.append((node, combined, f"combined:{node.combining}"))
        return combined

    # -- entry points ----------------------------------------------------------

    def evaluate(
        self,
        documents: Sequence[PolicyDocument],
        request: RequestContext,
        pips: PipBundle,
        *,
        legislation_mode: str = "aware",
    ) -> ResponseContext:
        """Evaluate the document forest; never raises past this boundary."""
        if legislation_mode not in ("aware", "ignore-tags"):
            raise ValueError(f"unknown legislation mode {legislation_mode!r}")
        pips.log.pdp_entered()
        visited: list[tuple[PolicyNode, Decision, str]] = []
        try:
            ctx = self._build_context(request, pips, legislation_mode)
            pips.log.record("policies")
            ctx.applicable_scopes = pips.scopes.select_legislation(
                ctx.source_country, ctx.destination_country
            )
            decisions = [self._evaluate_node(doc.root, ctx, visited) for doc in documents]
            pips.log.record("decide")
            final = self.combiners.combine(self.top_combiner, decisions)
        except Exception as exc:  # PIP failures must not escape the boundary
            trace = tuple(TraceRecord(n.id, d, r) for n, d, r in visited)
            trace += (TraceRecord("<context>", Decision.INDETERMINATE, str(exc)),)
            return ResponseContext(
                Decision.INDETERMINATE, STATUS_PROCESSING_ERROR, (), trace
            )

        obligations: list[Obligation] = []
        if final in (Decision.PERMIT, Decision.DENY):
            for node, decision, _reason in visited:
                if decision is not final:
                    continue
                for ob in node.obligations:
                    if ob.fulfill_on.to_decision() is final:
                        obligations.append(ob)

        if final is Decision.INDETERMINATE:
            status = ctx.first_error_status()
        else:
            status = STATUS_OK
        return ResponseContext(
            decision=final,
            status=status,
            obligations=tuple(obligations),
            trace=tuple(TraceRecord(n.id, d, r) for n, d, r in visited),
        )


def evaluate_with_tag_handling(
    engine: PolicyDecisionPoint,
    mode: str,
    documents: Sequence[PolicyDocument],
    request: RequestContext,
    pips: PipBundle,
) -> ResponseContext:
    return engine.evaluate(documents, request, pips, legislation_mode=mode)
