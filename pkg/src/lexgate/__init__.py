"""lexgate: jurisdiction-aware policy decision engine and enforcement kit.

The pieces compose bottom-up: the policy model and parsers, the decision
engine with its function/combiner registries, the pluggable context
suppliers (identity, diary, clock, zone+ location, legal scopes) and the
reference monitor that enforces decisions, executes obligations and keeps
the audit trail. `lexgate.cli` exposes all of it as a command line.
"""

from .combining import CombinerRegistry, combine
from .engine import FunctionRegistry, PolicyDecisionPoint, evaluate_with_tag_handling
from .errors import LexgateError
from .model import (
    AttributeValue,
    Category,
    DataType,
    Decision,
    Effect,
    GeoPoint,
    MatchClause,
    NodeKind,
    Obligation,
    PolicyDocument,
    PolicyNode,
    ResponseContext,
    Target,
    TraceRecord,
    Violation,
    validate_document,
)
from .parsing import (
    LocationReport,
    RequestContext,
    ZoneKind,
    parse_location_report,
    parse_policy_document,
    parse_request,
    parse_response,
    serialize_location_report,
    serialize_policy_document,
    serialize_request,
    serialize_response,
)
from .pep import AuditLog, AuditRecord, AuthState, DataView, ReferenceMonitor, ViewMode

__version__ = "0.1.0"

__all__ = [
    "AttributeValue",
    "AuditLog",
    "AuditRecord",
    "AuthState",
    "Category",
    "CombinerRegistry",
    "DataType",
    "DataView",
    "Decision",
    "Effect",
    "FunctionRegistry",
    "GeoPoint",
    "LexgateError",
    "LocationReport",
    "MatchClause",
    "NodeKind",
    "Obligation",
    "PolicyDecisionPoint",
    "PolicyDocument",
    "PolicyNode",
    "ReferenceMonitor",
    "RequestContext",
    "ResponseContext",
    "Target",
    "TraceRecord",
    "ViewMode",
    "Violation",
    "ZoneKind",
    "combine",
    "evaluate_with_tag_handling",
    "parse_location_report",
    "parse_policy_document",
    "parse_request",
    "parse_response",
    "serialize_location_report",
    "serialize_policy_document",
    "serialize_request",
    "serialize_response",
    "validate_document",
    "__version__",
]
