import datetime as dt
from pathlib import Path

import pytest

from lexgate.cli import default_fixtures_root, load_policy_dir
from lexgate.context.bundle import LocationSupplier, PipBundle, load_bundle
from lexgate.context.clock import FixedClock
from lexgate.engine import PolicyDecisionPoint
from lexgate.instant import parse_instant

FIXTURES = default_fixtures_root()


@pytest.fixture(scope="session")
def fixtures_root() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def policy_pack():
    return load_policy_dir(FIXTURES / "policies")


@pytest.fixture
def engine() -> PolicyDecisionPoint:
    return PolicyDecisionPoint()


class CountingLocationSupplier:
    """Wraps the location supplier to assert the no-tracking invariant."""

    def __init__(self, inner: LocationSupplier):
        self.inner = inner
        self.calls = 0

    def locate(self, request):
        self.calls += 1
        return self.inner.locate(request)


def make_bundle(at: str | dt.datetime, count_locates: bool = False) -> PipBundle:
    instant = parse_instant(at) if isinstance(at, str) else at
    bundle = load_bundle(FIXTURES, clock=FixedClock(instant))
    if count_locates:
        bundle.location = CountingLocationSupplier(bundle.location)
    return bundle


def wire_request(
    subject: str = "c.miller",
    resource: str = "products/overview",
    action: str = "read",
    point: str = "51.507861 -0.099349",
    tokens: tuple[str, ...] = (),
    token_at: str = "",
    extra_lines: tuple[str, ...] = (),
) -> bytes:
    lines = [
        "request",
        f"subject user-id identifier {subject}",
        f"resource resource-id string {resource}",
        f"action action-id string {action}",
    ]
    if point:
        lines.append(f"environment current-position geo-point {point}")
    for customer in tokens:
        lines.append(
            f"environment proximity-token string {customer}|code-card-subset|{token_at}"
        )
    lines.extend(extra_lines)
    lines.append("end")
    return ("\n".join(lines) + "\n").encode()
