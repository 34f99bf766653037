"""Investment pool and building placement."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..ledger import Ledger
from ..production import FirmTemplate
from ..spatial import CityMap, MapFull
from ..state import POOL, Contribution, PoolState
from .actions import MalformedPayload, _extract_json
from .backends import BackendError, ChatConfig, ReplayStore, llm_decide
from .prompt import PromptDocument

CROWDING_PENALTY = 1.0


def allocate_shares(contributions: Sequence[Contribution], cost: int) -> dict[str, int]:
    """Cents of each owner's contribution used to cover ``cost``.

    Amounts are proportional to contributions, floored to the cent; the
    leftover cents go to the largest contributor (ties: smallest owner key).
    The result doubles as the share register of the new firm.
    """
    totals: dict[str, int] = {}
    for c in contributions:
        totals[c.owner] = totals.get(c.owner, 0) + c.amount
    total = sum(totals.values())
    if cost > total:
        raise ValueError("contributions do not cover the cost")
    if cost == 0:
        return {}
    used = {owner: cost * amt // total for owner, amt in sorted(totals.items())}
    largest = min(totals, key=lambda o: (-totals[o], o))
    used[largest] += cost - sum(used.values())
    return {o: u for o, u in used.items() if u > 0}


@dataclass
class PoolOutcome:
    founded: Optional[object] = None  # FirmState
    template: Optional[FirmTemplate] = None
    shares: dict[str, int] = field(default_factory=dict)
    refunds: dict[str, int] = field(default_factory=dict)
    eligible: int = 0


def pool_step(pool: PoolState, ledger: Ledger, templates: Sequence[FirmTemplate], step: int,
              choose: Callable[[int], Optional[int]],
              found: Callable[[FirmTemplate, dict[str, int]], object]) -> PoolOutcome:
    """Decide on contributions that have been held for a full step.

    ``choose(eligible_cents)`` returns a template id or ``None``; ``found``
    creates the firm and moves the founding cost out of the pool account.
    Eligible funds not used for a founding are refunded to their owners.
    """
    eligible = [c for c in pool.contributions if c.step < step]
    waiting = [c for c in pool.contributions if c.step >= step]
    out = PoolOutcome(eligible=sum(c.amount for c in eligible))
    by_id = {t.id: t for t in templates}
    used: dict[str, int] = {}
    if eligible and templates and out.eligible >= min(t.founding_cost for t in templates):
        tid = choose(out.eligible)
        tmpl = by_id.get(tid) if tid is not None else None
        if tmpl is not None and tmpl.founding_cost <= out.eligible:
            used = allocate_shares(eligible, tmpl.founding_cost)
            out.founded = found(tmpl, dict(used))
            out.template = tmpl
            out.shares = used
    paid: dict[str, int] = {}
    for c in eligible:
        paid[c.owner] = paid.get(c.owner, 0) + c.amount
    for owner in sorted(paid):
        back = paid[owner] - used.get(owner, 0)
        if back > 0:
            ledger.transfer(POOL, owner, back, "refund", step)
            out.refunds[owner] = back
    pool.contributions = waiting
    return out


# ---------------------------------------------------------------------------
# placement


def _scores(city: CityMap, kind: str, centroid: Optional[tuple[float, float]],
            crowding: float) -> np.ndarray:
    ys, xs = np.mgrid[0:city.height, 0:city.width].astype(float)
    occupied = np.zeros((city.height, city.width), dtype=bool)
    for (x, y) in city.cells:
        occupied[y, x] = True
    if kind == "residential":
        cx, cy = city.center
        score = -np.hypot(xs - cx, ys - cy)
    elif kind == "productive":
        cx, cy = city.center
        padded = np.pad(occupied.astype(float), 1)
        crowd = sum(padded[1 + dy:1 + dy + city.height, 1 + dx:1 + dx + city.width]
                    for dy in (-1, 0, 1) for dx in (-1, 0, 1))
        score = np.hypot(xs - cx, ys - cy) - crowding * crowd
    elif kind == "public":
        cx, cy = centroid if centroid is not None else city.center
        score = -np.hypot(xs - cx, ys - cy)
    else:
        raise ValueError(f"unknown building kind {kind!r}")
    score[occupied] = -np.inf
    return score


def heuristic_cell(city: CityMap, kind: str, centroid: Optional[tuple[float, float]] = None,
                   crowding: float = CROWDING_PENALTY) -> tuple[int, int]:
    """Best-scoring free cell; ties go to the lower row-major cell index."""
    if len(city.cells) >= city.width * city.height:
        raise MapFull("no free cell left")
    score = _scores(city, kind, centroid, crowding)
    flat = int(np.argmax(score))
    return (flat % city.width, flat // city.width)


class RemotePlacement:
    """Ask a chat model for a cell given a text rendering of the grid."""

    def __init__(self, config: ChatConfig, session=None, store=None):
        self.config = config
        self.session = session
        self.store = store
        if store is not None:
            pass
        elif config.replay_path:
            self.store = ReplayStore(config.replay_path, "replay")
        elif config.record_path:
            self.store = ReplayStore(config.record_path, "record")

    def prompt(self, city: CityMap, kind: str) -> PromptDocument:
        user = (f"City grid {city.width}x{city.height}; x grows to the right, y downwards. "
                "'.' is free, R residential, P productive, G public.\n\n"
                f"{city.render_text()}\n\nChoose a free cell for a new {kind} building. "
                'Reply with JSON {"cell": [x, y]}.\n')
        return PromptDocument("placement", 0, "You are the city planner.", user)

    def choose(self, city: CityMap, kind: str) -> tuple[int, int]:
        raw = llm_decide(self.config, self.prompt(city, kind), self.session, self.store)
        payload = _extract_json(raw)
        cell = payload.get("cell") if isinstance(payload, dict) else None
        if not (isinstance(cell, list) and len(cell) == 2 and all(isinstance(v, int) for v in cell)):
            raise MalformedPayload(f"no cell in placement reply: {raw[:80]!r}")
        return (cell[0], cell[1])


def place_building(city: CityMap, kind: str, policy=None, rng: Optional[np.random.Generator] = None,
                   centroid: Optional[tuple[float, float]] = None,
                   warnings: Optional[list] = None) -> tuple[int, int]:
    """Pick a free cell for a new building.

    ``policy`` is ``None`` (heuristic scoring) or an object with
    ``choose(city, kind)``. A remote answer that is malformed, occupied or
    off the map falls back to the heuristic and appends a warning.
    """
    if len(city.cells) >= city.width * city.height:
        raise MapFull("no free cell left")
    if policy is not None:
        try:
            cell = tuple(policy.choose(city, kind))
            if not city.in_bounds(cell):
                raise ValueError(f"cell {cell} is off the map")
            if cell in city.cells:
                raise ValueError(f"cell {cell} is occupied")
            return cell
        except (BackendError, MalformedPayload, ValueError, TypeError) as exc:
            if warnings is not None:
                warnings.append({"kind": "placement-fallback", "building": kind, "message": str(exc)})
    return heuristic_cell(city, kind, centroid)
