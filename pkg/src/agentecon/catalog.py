"""Goods catalog and skill list shipped with the package."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .money import Money, to_cents


class SchemaError(ValueError):
    pass


class DanglingReference(ValueError):
    pass


class DuplicateGood(ValueError):
    pass


@dataclass(frozen=True)
class Good:
    id: int
    name: str
    label: str
    essential: bool
    transport: bool
    durable: bool
    food: bool
    consumer: bool
    initial_price: Money


class GoodsCatalog:
    """Ordered goods with dense ids and the flag subsets (essential, transport, durable)."""

    def __init__(self, goods: list[Good]):
        ids = [g.id for g in goods]
        if ids != list(range(len(goods))):
            raise SchemaError("good ids must be dense 0..n-1 in order")
        names = [g.name for g in goods]
        if len(set(names)) != len(names):
            raise DuplicateGood("duplicate good name in catalog")
        self.goods = list(goods)
        self._by_name = {g.name: g for g in goods}

    def __len__(self) -> int:
        return len(self.goods)

    def __iter__(self):
        return iter(self.goods)

    def __getitem__(self, gid: int) -> Good:
        return self.goods[gid]

    def by_name(self, name: str) -> Good:
        try:
            return self._by_name[name]
        except KeyError:
            raise DanglingReference(f"unknown good {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def essential(self) -> list[int]:
        return [g.id for g in self.goods if g.essential]

    @property
    def transport(self) -> list[int]:
        return [g.id for g in self.goods if g.transport]

    @property
    def durable(self) -> list[int]:
        return [g.id for g in self.goods if g.durable]

    @property
    def food(self) -> list[int]:
        return [g.id for g in self.goods if g.food]

    @property
    def consumer(self) -> list[int]:
        return [g.id for g in self.goods if g.consumer and not g.essential]


def _data_path(name: str) -> Path:
    return Path(str(resources.files("agentecon") / "data" / name))


def load_goods(path: str | Path | None = None) -> GoodsCatalog:
    path = Path(path) if path else _data_path("goods.json")
    raw = json.loads(path.read_text())
    try:
        goods = [
            Good(int(g["id"]), str(g["name"]), str(g.get("label", g["name"])),
                 bool(g["essential"]), bool(g["transport"]), bool(g["durable"]),
                 bool(g.get("food", False)), bool(g.get("consumer", False)),
                 to_cents(g["initial_price"]))
            for g in raw["goods"]
        ]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad goods file {path}: {exc}") from exc
    return GoodsCatalog(goods)


def load_skills(path: str | Path | None = None) -> list[str]:
    path = Path(path) if path else _data_path("skills.txt")
    skills = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    if len(set(skills)) != len(skills):
        raise SchemaError("duplicate skill")
    return skills


def load_age_table(path: str | Path | None = None) -> tuple[list[tuple[int, int]], list[float]]:
    """Householder age bins ``[(lo, hi)]`` and their population weights."""
    path = Path(path) if path else _data_path("ages.csv")
    bins, weights = [], []
    for line in path.read_text().splitlines()[1:]:
        if not line.strip():
            continue
        lo, hi, w = line.split(",")
        bins.append((int(lo), int(hi)))
        weights.append(float(w))
    total = sum(weights)
    return bins, [w / total for w in weights]
