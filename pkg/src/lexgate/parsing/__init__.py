from .location_xml import (
    LocationReport,
    ZoneKind,
    parse_location_report,
    serialize_location_report,
)
from .policy_xml import (
    normalize_combiner_id,
    normalize_function_id,
    parse_policy_document,
    serialize_policy_document,
)
from .wire import (
    RequestContext,
    WireView,
    parse_request,
    parse_response,
    serialize_request,
    serialize_response,
)

__all__ = [
    "LocationReport",
    "ZoneKind",
    "RequestContext",
    "WireView",
    "normalize_combiner_id",
    "normalize_function_id",
    "parse_location_report",
    "parse_policy_document",
    "parse_request",
    "parse_response",
    "serialize_location_report",
    "serialize_policy_document",
    "serialize_request",
    "serialize_response",
]
