# app/processing/cost.py
"""Retrieval cost under per-endpoint API rate limits."""

import logging
from dataclasses import asdict, dataclass
from typing import Annotated, Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app import constants
from app.errors import EvaluationError
from app.models.interaction import SignalKind
from app.models.store import RecordStore

log = logging.getLogger("processing.cost")

SIGNAL_ENDPOINT = {
    SignalKind.RETWEET: "tweets",
    SignalKind.MENTION: "tweets",
    SignalKind.QUOTE: "tweets",
    SignalKind.HASHTAG: "tweets",
    SignalKind.LIKE: "likes",
    SignalKind.FRIEND: "relations",
    SignalKind.FOLLOW: "relations",
}


class RateLimit(BaseModel):
    model_config = ConfigDict(extra="forbid")

    items_per_request: Annotated[int, Field(ge=1)]
    requests_per_window: Annotated[int, Field(ge=1)]
    window_minutes: Annotated[int, Field(ge=1)] = constants.DEFAULT_WINDOW_MINUTES

    @property
    def total_per_window(self) -> int:
        return self.items_per_request * self.requests_per_window


def _default_endpoints() -> dict[str, RateLimit]:
    return {
        name: RateLimit(items_per_request=ipr, requests_per_window=rpw)
        for name, (ipr, rpw) in constants.DEFAULT_RATE_LIMITS.items()
    }


class RateTable(BaseModel):
    model_config = ConfigDict(extra="forbid")

    endpoints: dict[str, RateLimit] = Field(default_factory=_default_endpoints)

    def get(self, endpoint: str) -> RateLimit:
        try:
            return self.endpoints[endpoint]
        except KeyError:
            raise EvaluationError(
                f"unknown endpoint {endpoint!r}; known: {sorted(self.endpoints)}"
            ) from None

    def with_overrides(self, overrides: Mapping[str, RateLimit]) -> "RateTable":
        return RateTable(endpoints={**self.endpoints, **overrides})


@dataclass
class CostPlan:
    endpoint: str
    n_users: int
    mean_requests: float
    users_per_window: float
    users_per_window_sd: float

    def to_dict(self) -> dict:
        return asdict(self)


def requests_per_user(counts: Sequence[int], limit: RateLimit) -> np.ndarray:
    """``max(1, ceil(count / items_per_request))`` per user."""
    counts = np.asarray(counts, dtype=np.int64)
    return np.maximum(1, -(-counts // limit.items_per_request))


def cost_plan(counts: Sequence[int], limit: RateLimit, endpoint: str = "") -> CostPlan:
    """Users retrievable per window, with the sd propagated from the requests.

    ``users_per_window = requests_per_window / mean(requests)``; the sd is the
    first-order propagation ``rpw * sd(requests) / mean(requests)^2``.

    Raises:
        EvaluationError: No users or a negative count.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        raise EvaluationError("cost plan needs at least one user")
    if counts.min() < 0:
        raise EvaluationError("item counts must be non-negative")
    req = requests_per_user(counts, limit)
    mean = float(req.mean())
    sd_req = float(req.std(ddof=1)) if req.size > 1 else 0.0
    rpw = limit.requests_per_window
    plan = CostPlan(
        endpoint=endpoint,
        n_users=int(counts.size),
        mean_requests=mean,
        users_per_window=rpw / mean,
        users_per_window_sd=rpw * sd_req / mean**2,
    )
    log.info(
        "%s: %.1f +/- %.1f users per %d-minute window",
        endpoint or "endpoint",
        plan.users_per_window,
        plan.users_per_window_sd,
        limit.window_minutes,
    )
    return plan


def endpoint_counts(store: RecordStore, users: Iterable[str], endpoint: str) -> list[int]:
    """Per-user item counts on ``endpoint``, summed over the kinds it serves."""
    totals: dict[str, int] = {}
    for kind, ep in SIGNAL_ENDPOINT.items():
        if ep != endpoint:
            continue
        for uid, c in store.activity_counts(kind).items():
            totals[uid] = totals.get(uid, 0) + c
    return [totals.get(u, 0) for u in users]


def combined_cost_plan(
    counts_by_endpoint: Mapping[str, Sequence[int]], table: RateTable | None = None
) -> CostPlan:
    """Endpoints are fetched in parallel, so the slowest one sets the pace."""
    table = table or RateTable()
    if not counts_by_endpoint:
        raise EvaluationError("no endpoints given")
    plans = [cost_plan(c, table.get(ep), ep) for ep, c in counts_by_endpoint.items()]
    return min(plans, key=lambda p: p.users_per_window)


def endpoints_for(signals: Iterable[SignalKind | str]) -> list[str]:
    out: list[str] = []
    for s in signals:
        ep = SIGNAL_ENDPOINT[SignalKind(s)]
        if ep not in out:
            out.append(ep)
    return out
