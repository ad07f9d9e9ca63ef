"""Zone+ territory tree: hierarchical regions/countries whose leaves are
bisected into restricted areas and the unrestricted remainder.

The tree is loaded from an XML fixture (see docs/fixture-formats.md):
territories nest, countries carry a boundary polygon, a timezone, named
restricted polygons (customs areas and the like), city polygons and named
places that scenarios can reference instead of raw coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from ..errors import FixtureError, PolicySyntaxError, PrecisionError, UnknownTerritoryError
from ..model import GeoPoint
from ..parsing.location_xml import LocationReport, ZoneKind
from ..parsing.xmlread import XmlNode, parse_xml
from .geometry import disc_polygon_relation, is_simple_polygon, point_in_polygon

Polygon = tuple[GeoPoint, ...]


@dataclass(frozen=True)
class RestrictedArea:
    id: str
    name: str
    polygon: Polygon


@dataclass(frozen=True)
class CityArea:
    name: str
    polygon: Polygon


@dataclass(frozen=True)
class Place:
    name: str
    point: GeoPoint


@dataclass(frozen=True)
class TerritoryNode:
    id: str
    name: str
    kind: str  # union | region | country | state
    boundary: Optional[Polygon] = None
    timezone_name: str = "UTC"
    timezone_offset: float = 0.0
    restricted: tuple[RestrictedArea, ...] = ()
    cities: tuple[CityArea, ...] = ()
    places: tuple[Place, ...] = ()
    children: tuple["TerritoryNode", ...] = ()


class ZoneTree:
    """Immutable territory hierarchy with point classification."""

    def __init__(self, roots: tuple[TerritoryNode, ...]):
        self.roots = roots
        self._by_id: dict[str, TerritoryNode] = {}
        self._countries: list[TerritoryNode] = []
        self._places: dict[str, tuple[Place, TerritoryNode]] = {}
        self._country_membership: dict[str, set[str]] = {}
        for root in roots:
            self._index(root, ())
        self._validate()

    def _index(self, node: TerritoryNode, ancestors: tuple[str, ...]) -> None:
        if node.id in self._by_id:
            raise FixtureError(f"duplicate territory id {node.id!r}")
        self._by_id[node.id] = node
        if node.kind == "country":
            self._countries.append(node)
            for territory in ancestors + (node.id,):
                self._country_membership.setdefault(territory, set()).add(node.id)
        for place in node.places:
            if place.name in self._places:
                raise FixtureError(f"duplicate place name {place.name!r}")
            self._places[place.name] = (place, node)
        for child in node.children:
            self._index(child, ancestors + (node.id,))

    def _validate(self) -> None:
        for country in self._countries:
            if country.boundary is None:
                raise FixtureError(f"country {country.id!r} has no boundary polygon")
            if not is_simple_polygon(country.boundary):
                raise FixtureError(f"country {country.id!r} boundary is self-intersecting")
            for area in country.restricted:
                if not is_simple_polygon(area.polygon):
                    raise FixtureError(f"restricted area {area.id!r} is self-intersecting")
                for vertex in area.polygon:
                    if not point_in_polygon(vertex, country.boundary):
                        raise FixtureError(
                            f"restricted area {area.id!r} leaves country {country.id!r}"
                        )

    def countries(self) -> tuple[TerritoryNode, ...]:
        return tuple(self._countries)

    def country(self, code: str) -> TerritoryNode:
        node = self._by_id.get(code)
        if node is None or node.kind != "country":
            raise UnknownTerritoryError(f"no country {code!r} in the zone tree")
        return node

    def territory(self, territory_id: str) -> Optional[TerritoryNode]:
        return self._by_id.get(territory_id)

    def member_countries(self, territory_id: str) -> frozenset[str]:
        return frozenset(self._country_membership.get(territory_id, ()))

    def place(self, name: str) -> tuple[Place, TerritoryNode]:
        entry = self._places.get(name)
        if entry is None:
            raise FixtureError(f"unknown place {name!r}")
        return entry

    def iter_places(self) -> Iterator[Place]:
        for place, _ in self._places.values():
            yield place


def resolve_location(point: GeoPoint, accuracy_radius: float, zones: ZoneTree) -> LocationReport:
    """Classify a position against the territory tree.

    Raises UnknownTerritoryError when no country contains the point,
    PrecisionError when the accuracy disc overlaps several countries
    (country=None) or straddles a restricted boundary (country set).
    """
    containing = [c for c in zones.countries() if point_in_polygon(point, c.boundary)]
    if not containing:
        raise UnknownTerritoryError(
            f"no territory contains ({point.lat!r}, {point.lon!r})"
        )
    if len(containing) > 1:
        ids = ", ".join(c.id for c in containing)
        raise PrecisionError(f"point lies in several countries: {ids}")
    country = containing[0]

    if accuracy_radius > 0:
        for other in zones.countries():
            if other.id == country.id:
                continue
            if disc_polygon_relation(point, accuracy_radius, other.boundary) != "outside":
                raise PrecisionError(
                    f"accuracy disc of {accuracy_radius!r} m overlaps both "
                    f"{country.id} and {other.id}"
                )

    zone = ZoneKind.UNRESTRICTED
    for area in country.restricted:
        relation = disc_polygon_relation(point, accuracy_radius, area.polygon)
        if relation == "straddles":
            raise PrecisionError(
                f"accuracy disc straddles restricted area {area.id!r}",
                country=country.id,
            )
        if relation == "inside":
            zone = ZoneKind.RESTRICTED

    city = ""
    for city_area in country.cities:
        if point_in_polygon(point, city_area.polygon):
            city = city_area.name
            break

    return LocationReport(
        country=country.id,
        city=city,
        zone=zone,
        timezone_name=country.timezone_name,
        timezone_offset=country.timezone_offset,
        point=point,
        accuracy_radius=accuracy_radius,
    )


def _parse_polygon(node: XmlNode) -> Polygon:
    pos_list = node.find("posList")
    if pos_list is None:
        raise FixtureError(f"<{node.tag}> needs a <posList> (line {node.line})")
    numbers = pos_list.text.split()
    if len(numbers) < 6 or len(numbers) % 2:
        raise FixtureError(f"posList needs >= 3 'lat lon' pairs (line {pos_list.line})")
    coords = [float(n) for n in numbers]
    return tuple(GeoPoint(coords[i], coords[i + 1]) for i in range(0, len(coords), 2))


def _parse_territory(node: XmlNode) -> TerritoryNode:
    kind = node.attrs.get("kind", "")
    territory_id = node.attrs.get("id", "")
    if not kind or not territory_id:
        raise FixtureError(f"<territory> needs kind and id (line {node.line})")

    boundary = None
    boundary_node = node.find("boundary")
    if boundary_node is not None:
        boundary = _parse_polygon(boundary_node)

    tz_name, tz_offset = "UTC", 0.0
    tz_node = node.find("timezone")
    if tz_node is not None:
        name_node, value_node = tz_node.find("name"), tz_node.find("value")
        if name_node is None or value_node is None:
            raise FixtureError(f"<timezone> needs <name> and <value> (line {tz_node.line})")
        tz_name = name_node.text.strip()
        tz_offset = float(value_node.text.strip())

    restricted = []
    for area_node in node.findall("restricted"):
        area_boundary = area_node.find("boundary")
        if area_boundary is None:
            raise FixtureError(f"<restricted> needs a <boundary> (line {area_node.line})")
        restricted.append(
            RestrictedArea(
                id=area_node.attrs.get("id", ""),
                name=area_node.attrs.get("name", area_node.attrs.get("id", "")),
                polygon=_parse_polygon(area_boundary),
            )
        )

    cities = []
    for city_node in node.findall("city"):
        city_boundary = city_node.find("boundary")
        if city_boundary is None:
            raise FixtureError(f"<city> needs a <boundary> (line {city_node.line})")
        cities.append(
            CityArea(name=city_node.attrs.get("name", ""), polygon=_parse_polygon(city_boundary))
        )

    places = []
    for place_node in node.findall("place"):
        pos = place_node.attrs.get("pos", "")
        pieces = pos.split()
        if len(pieces) != 2:
            raise FixtureError(f"<place> needs pos=\"lat lon\" (line {place_node.line})")
        places.append(
            Place(
                name=place_node.attrs.get("name", ""),
                point=GeoPoint(float(pieces[0]), float(pieces[1])),
            )
        )

    children = tuple(_parse_territory(child) for child in node.findall("territory"))
    return TerritoryNode(
        id=territory_id,
        name=node.attrs.get("name", territory_id),
        kind=kind,
        boundary=boundary,
        timezone_name=tz_name,
        timezone_offset=tz_offset,
        restricted=tuple(restricted),
        cities=tuple(cities),
        places=tuple(places),
        children=children,
    )


def load_zone_tree(data: bytes | str) -> ZoneTree:
    try:
        root = parse_xml(data)
    except PolicySyntaxError as exc:
        raise FixtureError(f"zone tree: {exc}") from exc
    if root.tag != "zones":
        raise FixtureError("zone tree must be a <zones> document")
    return ZoneTree(tuple(_parse_territory(child) for child in root.findall("territory")))
