"""Loaders for the plain-text fixture stores.

Each store is a line-oriented file: blank lines and '#' comments are
skipped, every other line is shlex-split into a record head plus key=value
fields (quoting allows embedded spaces). docs/fixture-formats.md freezes
the field lists.
"""

from __future__ import annotations

import datetime as dt
import shlex
from pathlib import Path

from ..errors import FixtureError
from ..instant import parse_instant
from ..model import GeoPoint
from .diary import DiaryEntry, DiaryStore, ExpectedLocation, TimeRange
from .identity import Delegation, IdentityKind, IdentityRecord, IdentityRegistry
from .legal import LegalScope, LegalScopeRegistry
from .resources import ResourceCatalog, ResourceRecord


def _records(text: str, where: str):
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise FixtureError(f"{where}:{line_no}: {exc}") from exc
        head, fields = tokens[0], {}
        positional = []
        for token in tokens[1:]:
            if "=" in token:
                key, _, value = token.partition("=")
                fields[key] = value
            else:
                positional.append(token)
        yield line_no, head, positional, fields


def _split_ids(value: str) -> frozenset[str]:
    return frozenset(part for part in value.split(",") if part)


def _parse_point(value: str) -> GeoPoint:
    pieces = value.replace(",", " ").split()
    if len(pieces) != 2:
        raise ValueError(f"expected 'lat,lon', got {value!r}")
    return GeoPoint(float(pieces[0]), float(pieces[1]))


def load_identities(path: Path) -> IdentityRegistry:
    records: list[IdentityRecord] = []
    delegations: list[Delegation] = []
    positions: dict[str, GeoPoint] = {}
    where = path.name
    for line_no, head, positional, fields in _records(path.read_text(), where):
        try:
            if head in ("consultant", "customer", "supervisor", "supplier"):
                if len(positional) != 1:
                    raise ValueError("expected exactly one identity id")
                records.append(
                    IdentityRecord(
                        id=positional[0],
                        kind=IdentityKind(head),
                        credentials=fields.get("secret", fields.get("verifier", "")),
                        assigned_customers=_split_ids(fields.get("customers", "")),
                    )
                )
            elif head == "delegation":
                delegations.append(
                    Delegation(
                        consultant=fields["consultant"],
                        customers=_split_ids(fields["customers"]),
                        start=parse_instant(fields["from"]),
                        end=parse_instant(fields["to"]),
                    )
                )
            elif head == "device":
                if len(positional) != 1:
                    raise ValueError("expected exactly one user id")
                positions[positional[0]] = _parse_point(fields["pos"])
            else:
                raise ValueError(f"unknown record kind {head!r}")
        except (KeyError, ValueError) as exc:
            raise FixtureError(f"{where}:{line_no}: {exc}") from exc
    return IdentityRegistry(records, delegations, positions)


def load_diary(path: Path, home_country: str | None = None) -> DiaryStore:
    entries: list[DiaryEntry] = []
    where = path.name
    for line_no, head, positional, fields in _records(path.read_text(), where):
        if head != "entry":
            raise FixtureError(f"{where}:{line_no}: unknown record kind {head!r}")
        try:
            point = _parse_point(fields["point"]) if "point" in fields else None
            entries.append(
                DiaryEntry(
                    owner=fields["owner"],
                    task=fields.get("task", ""),
                    time=TimeRange(
                        start=parse_instant(fields["start"]),
                        end=parse_instant(fields["end"]),
                        pre_extension=dt.timedelta(minutes=int(fields.get("pre", "0"))),
                        post_extension=dt.timedelta(minutes=int(fields.get("post", "0"))),
                    ),
                    expected_location=ExpectedLocation(
                        country=fields["country"],
                        city=fields.get("city", ""),
                        point=point,
                        radius_m=float(fields.get("radius", "0")),
                    ),
                    participants=_split_ids(fields.get("participants", "")),
                    planned_resources=_split_ids(fields.get("resources", "")),
                    travel_authorized_by=fields.get("travel-authorized-by"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise FixtureError(f"{where}:{line_no}: {exc}") from exc
    return DiaryStore(entries, home_country=home_country)


def load_scopes(path: Path) -> LegalScopeRegistry:
    scopes: list[LegalScope] = []
    organization: str | None = None
    where = path.name
    for line_no, head, positional, fields in _records(path.read_text(), where):
        try:
            if head == "scope":
                scopes.append(
                    LegalScope(
                        id=fields["id"],
                        kind=fields["kind"],
                        parent_memberships=_split_ids(fields.get("member-of", "")),
                        precedence_rank=int(fields.get("rank", "0")),
                        constraints=tuple(_split_ids(fields.get("policies", ""))),
                        conditional_constraints=tuple(_split_ids(fields.get("requires", ""))),
                    )
                )
            elif head == "organization":
                if len(positional) != 1:
                    raise ValueError("expected exactly one organization scope id")
                organization = positional[0]
            else:
                raise ValueError(f"unknown record kind {head!r}")
        except (KeyError, ValueError) as exc:
            raise FixtureError(f"{where}:{line_no}: {exc}") from exc
    return LegalScopeRegistry(scopes, organization=organization)


def load_resources(path: Path, default_host: str | None = None) -> ResourceCatalog:
    records: list[ResourceRecord] = []
    where = path.name
    for line_no, head, positional, fields in _records(path.read_text(), where):
        if head != "resource":
            raise FixtureError(f"{where}:{line_no}: unknown record kind {head!r}")
        try:
            records.append(
                ResourceRecord(
                    id=fields["id"],
                    host_country=fields["host"],
                    confidential=fields.get("confidential", "false") == "true",
                    customer_related=fields.get("customer-related", "false") == "true",
                    customers=_split_ids(fields.get("customers", "")),
                    category=fields.get("category", ""),
                    content=fields.get("content", ""),
                )
            )
        except (KeyError, ValueError) as exc:
            raise FixtureError(f"{where}:{line_no}: {exc}") from exc
    return ResourceCatalog(records, default_host=default_host)
