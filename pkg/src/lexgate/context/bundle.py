"""Wiring of the context suppliers handed to the decision engine.

The bundle is assembled once (per process or per CLI invocation) from
immutable fixture stores; the only mutable member is the interaction log,
which exists purely so tests and audits can observe the component order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import FixtureError, LocationUnavailableError
from ..model import Category, DataType
from ..parsing.location_xml import LocationReport
from ..parsing.wire import CURRENT_POSITION, RequestContext
from .clock import Clock, SystemClock
from .diary import DiaryStore
from .identity import IdentityRegistry
from .legal import LegalScopeRegistry
from .loader import load_diary, load_identities, load_resources, load_scopes
from .resources import ResourceCatalog
from .zones import ZoneTree, load_zone_tree, resolve_location

POSITION_ACCURACY = "position-accuracy"


class InteractionLog:
    """Append-only record of component interactions for one request."""

    def __init__(self) -> None:
        self.events: list[str] = []
        self.pdp_calls = 0

    def record(self, event: str) -> None:
        self.events.append(event)

    def pdp_entered(self) -> None:
        self.pdp_calls += 1

    def clear(self) -> None:
        self.events.clear()
        self.pdp_calls = 0


class LocationSupplier:
    """The single channel that produces one location snapshot per request.

    Resolution order: a report already embedded in the request, else the
    request's raw geo-point environment attribute, else the device
    position registered for the requesting subject. Raw points are
    classified through the zone tree.
    """

    def __init__(self, zones: ZoneTree, identities: IdentityRegistry):
        self._zones = zones
        self._identities = identities

    def locate(self, request: RequestContext) -> LocationReport:
        if request.source_location is not None:
            return request.source_location

        accuracy = 0.0
        accuracy_value = request.first(Category.ENVIRONMENT, POSITION_ACCURACY)
        if accuracy_value is not None and accuracy_value.data_type is DataType.INTEGER:
            accuracy = float(accuracy_value.value)

        point_value = request.first(Category.ENVIRONMENT, CURRENT_POSITION)
        if point_value is not None and point_value.data_type is DataType.GEO_POINT:
            return resolve_location(point_value.value, accuracy, self._zones)

        subject = request.subject_id()
        if subject:
            position = self._identities.device_position(subject)
            if position is not None:
                return resolve_location(position, accuracy, self._zones)

        raise LocationUnavailableError(
            f"no position source for subject {subject!r}"
        )


@dataclass
class PipBundle:
    """Everything the engine consults besides the policy store."""

    zones: ZoneTree
    clock: Clock
    location: LocationSupplier
    identities: IdentityRegistry
    diary: DiaryStore
    scopes: LegalScopeRegistry
    resources: ResourceCatalog
    log: InteractionLog = field(default_factory=InteractionLog)


def organization_home(scopes: LegalScopeRegistry) -> Optional[str]:
    """The sovereign state the organization scope is a member of."""
    if scopes.organization is None:
        return None
    org = scopes.get(scopes.organization)
    states = sorted(
        parent for parent in org.parent_memberships
        if scopes.get(parent).kind == "sovereign-state"
    )
    return states[0] if states else None


def load_bundle(root: Path, clock: Optional[Clock] = None) -> PipBundle:
    """Assemble a bundle from a fixtures directory (standard file names)."""
    root = Path(root)
    for name in ("zones.xml", "identities.txt", "diary.txt", "scopes.txt", "resources.txt"):
        if not (root / name).exists():
            raise FixtureError(f"fixtures root {root} is missing {name}")
    zones = load_zone_tree((root / "zones.xml").read_bytes())
    identities = load_identities(root / "identities.txt")
    scopes = load_scopes(root / "scopes.txt")
    home = organization_home(scopes)
    diary = load_diary(root / "diary.txt", home_country=home)
    resources = load_resources(root / "resources.txt", default_host=home)
    return PipBundle(
        zones=zones,
        clock=clock or SystemClock(),
        location=LocationSupplier(zones, identities),
        identities=identities,
        diary=diary,
        scopes=scopes,
        resources=resources,
    )
