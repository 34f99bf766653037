"""City grid: one building per cell, distances, SVG snapshots."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

KINDS = ("residential", "productive", "public")
COLORS = {"residential": "#4e79a7", "productive": "#e15759", "public": "#59a14f"}
CELL_PX = 10
BACKGROUND = "#f4f1e8"
SNAPSHOT_VERSION = 1


class OutOfBounds(ValueError):
    pass


class CellOccupied(ValueError):
    pass


class UnknownBuilding(KeyError):
    pass


class MapFull(RuntimeError):
    pass


@dataclass(frozen=True)
class Building:
    id: int
    kind: str
    owner: str
    cell: tuple[int, int]


class CityMap:
    def __init__(self, width: int, height: int):
        if width <= 0 or height <= 0:
            raise ValueError("map dimensions must be positive")
        self.width = width
        self.height = height
        self.cells: dict[tuple[int, int], int] = {}
        self.buildings: dict[int, Building] = {}

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def _check(self, cell):
        if not self.in_bounds(cell):
            raise OutOfBounds(cell)

    def index(self, cell: tuple[int, int]) -> int:
        return cell[1] * self.width + cell[0]

    def distance(self, a: tuple[int, int], b: tuple[int, int]) -> float:
        self._check(a)
        self._check(b)
        return math.hypot(a[0] - b[0], a[1] - b[1])

    @property
    def center(self) -> tuple[float, float]:
        return ((self.width - 1) / 2, (self.height - 1) / 2)

    def free_cells(self) -> list[tuple[int, int]]:
        return [(x, y) for y in range(self.height) for x in range(self.width) if (x, y) not in self.cells]

    def occupy(self, cell: tuple[int, int], building: Building) -> None:
        self._check(cell)
        if cell in self.cells:
            raise CellOccupied(cell)
        if building.id in self.buildings:
            raise ValueError(f"building {building.id} already placed")
        if building.kind not in KINDS:
            raise ValueError(f"unknown building kind {building.kind!r}")
        placed = Building(building.id, building.kind, building.owner, tuple(cell))
        self.cells[tuple(cell)] = building.id
        self.buildings[building.id] = placed

    def release(self, building_id: int) -> Building:
        try:
            b = self.buildings.pop(building_id)
        except KeyError:
            raise UnknownBuilding(building_id) from None
        del self.cells[b.cell]
        return b

    def consistent(self) -> bool:
        return (len(self.cells) == len(self.buildings)
                and all(self.cells.get(b.cell) == bid for bid, b in self.buildings.items()))

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height,
                "buildings": [[b.id, b.kind, b.owner, list(b.cell)] for _, b in sorted(self.buildings.items())]}

    @classmethod
    def from_dict(cls, d: dict) -> "CityMap":
        m = cls(d["width"], d["height"])
        for bid, kind, owner, cell in d["buildings"]:
            m.occupy(tuple(cell), Building(bid, kind, owner, tuple(cell)))
        return m

    def render_text(self) -> str:
        """One character per cell: ``.`` empty, ``R``/``P``/``G`` by kind."""
        glyph = {"residential": "R", "productive": "P", "public": "G"}
        rows = []
        for y in range(self.height):
            rows.append("".join(glyph[self.buildings[self.cells[(x, y)]].kind] if (x, y) in self.cells else "."
                                for x in range(self.width)))
        return "\n".join(rows)


def render_svg(city: CityMap, step: int) -> str:
    w, h = city.width * CELL_PX, city.height * CELL_PX
    legend_h = 20 * len(KINDS) + 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h + legend_h}" '
        f'data-version="{SNAPSHOT_VERSION}" data-step="{step}">',
        f'<rect id="background" x="0" y="0" width="{w}" height="{h}" fill="{BACKGROUND}"/>',
    ]
    for bid, b in sorted(city.buildings.items()):
        x, y = b.cell
        out.append(f'<rect class="building" data-id="{bid}" data-kind="{b.kind}" x="{x * CELL_PX}" '
                   f'y="{y * CELL_PX}" width="{CELL_PX}" height="{CELL_PX}" fill="{COLORS[b.kind]}"/>')
    out.append(f'<text x="4" y="{h + 16}" font-size="12">step {step}</text>')
    for i, kind in enumerate(KINDS):
        ly = h + 24 + 20 * i
        out.append(f'<rect class="legend" x="4" y="{ly}" width="12" height="12" fill="{COLORS[kind]}"/>')
        out.append(f'<text x="20" y="{ly + 11}" font-size="11">{kind}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_snapshot(city: CityMap, step: int, path: str | Path) -> Path:
    """Write a deterministic SVG: background, one rect per building keyed by kind, legend, caption."""
    path = Path(path)
    path.write_text(render_svg(city, step))
    return path


def replay_map(initial: dict, records, step: int) -> CityMap:
    """Rebuild the map as it stood after ``step`` from a trace's initial map and per-step diffs."""
    city = CityMap.from_dict(initial)
    for rec in records:
        if rec["step"] > step:
            break
        for bid, kind, owner, x, y in rec["map"]["added"]:
            city.occupy((x, y), Building(bid, kind, owner, (x, y)))
        for bid in rec["map"]["removed"]:
            city.release(bid)
    return city
