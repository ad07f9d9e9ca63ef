"""Resource catalogue: hosting country, confidentiality and content.

Backs destination-country resolution and the data views the enforcement
point serves; real deployments would replace this with a document store.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional


@dataclass(frozen=True)
class ResourceRecord:
    id: str
    host_country: str
    confidential: bool = False
    customer_related: bool = False
    customers: frozenset[str] = frozenset()
    category: str = ""
    content: str = ""


class ResourceCatalog:
    def __init__(self, records: Iterable[ResourceRecord], default_host: Optional[str] = None):
        self._records = {record.id: record for record in records}
        self.default_host = default_host

    def get(self, resource_id: str) -> Optional[ResourceRecord]:
        return self._records.get(resource_id)

    def host_country(self, resource_id: Optional[str]) -> Optional[str]:
        if resource_id is not None:
            record = self._records.get(resource_id)
            if record is not None:
                return record.host_country
        return self.default_host
