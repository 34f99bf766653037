"""Regenerate the shipped goods catalog, IO matrix and firm templates.

The IO matrix is a stylized 44-industry table (OECD ISIC rev.4 grouping)
with a handful of dominant inputs per column and a thin residual spread
over general services. The primary sectors (agriculture, fishing, both
mining groups, energy utilities) draw on no produced inputs (all-zero
columns), so every supply chain ends in a raw producer. Templates are derived from it with
``synthesize_recipes`` so the shipped recipes are reproducible.

    python scripts/build_catalog.py
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from agentecon.production import synthesize_recipes

DATA = Path(__file__).resolve().parents[1] / "src" / "agentecon" / "data"

TECHNICAL_TOTAL = 0.40  # input value per unit of output value
MAIN_SHARE = 0.85
RESIDUAL_SECTORS = ["trade", "land_transport", "energy", "finance", "professional"]

DEFAULT_WAGE = 3000.00
DEFAULT_A = 8.0
DEFAULT_ALPHA = 0.33

# real_estate is the housing-services good supplied by residential
# buildings through the rental market, so no recipe uses it as an input.
# name, label, flags, dominant inputs (relative weights), positions (skill, headcount)
GOODS = [
    ("agriculture", "Agriculture, hunting, forestry", "EFC", {}, [("Physical Labor", 2), ("Equipment Operation", 1)]),
    ("fishing", "Fishing and aquaculture", "EFC", {}, [("Aquaculture", 2), ("Physical Labor", 1)]),
    ("mining_energy", "Mining and quarrying, energy producing products", "", {}, [("Mining", 2), ("Geology", 1)]),
    ("mining_other", "Mining and quarrying, non-energy producing products", "", {}, [("Mining", 2), ("Machinery Operation", 1)]),
    ("mining_support", "Mining support service activities", "", {"machinery": 3, "fabricated_metal": 2}, [("Equipment Maintenance", 2), ("Engineering", 1)]),
    ("food", "Food products, beverages and tobacco", "EFC", {"agriculture": 5, "food": 2, "fishing": 1}, [("Food Science", 1), ("Machinery Operation", 1), ("Quality Control", 1)]),
    ("textiles", "Textiles, textile products, leather and footwear", "EC", {"agriculture": 4, "textiles": 2, "energy": 1}, [("Assembly", 2), ("Design", 1)]),
    ("wood", "Wood and products of wood and cork", "", {"agriculture": 4, "wood": 1, "chemicals": 1}, [("Machinery Operation", 2), ("Physical Labor", 1)]),
    ("paper_printing", "Paper products and printing", "C", {"wood": 4, "paper_printing": 2, "chemicals": 1}, [("Machinery Operation", 2), ("Quality Control", 1)]),
    ("coke_petroleum", "Coke and refined petroleum products", "", {"mining_energy": 6, "chemicals": 1}, [("Chemistry", 1), ("Operations Management", 1), ("Safety Management", 1)]),
    ("chemicals", "Chemicals and chemical products", "", {"chemicals": 3, "coke_petroleum": 2, "mining_other": 1}, [("Chemistry", 2), ("Laboratory Skills", 1)]),
    ("pharmaceuticals", "Pharmaceuticals, medicinal chemical and botanical products", "C", {"chemicals": 4, "pharmaceuticals": 2, "professional": 1}, [("Pharmaceutical Science", 2), ("Laboratory Skills", 1)]),
    ("rubber_plastics", "Rubber and plastics products", "", {"chemicals": 5, "rubber_plastics": 1}, [("Machinery Operation", 2), ("Chemistry", 1)]),
    ("non_metallic", "Other non-metallic mineral products", "", {"mining_other": 4, "energy": 2}, [("Machinery Operation", 2), ("Physical Labor", 1)]),
    ("basic_metals", "Basic metals", "", {"mining_other": 4, "basic_metals": 2, "energy": 1}, [("Metalworking", 2), ("Safety Management", 1)]),
    ("fabricated_metal", "Fabricated metal products", "D", {"basic_metals": 5, "fabricated_metal": 1}, [("Metalworking", 2), ("Assembly", 1)]),
    ("electronics", "Computer, electronic and optical equipment", "DC", {"electronics": 4, "rubber_plastics": 1, "basic_metals": 1}, [("Engineering", 1), ("Assembly", 2)]),
    ("electrical", "Electrical equipment", "D", {"basic_metals": 3, "electronics": 2, "fabricated_metal": 1}, [("Engineering", 1), ("Assembly", 2)]),
    ("machinery", "Machinery and equipment n.e.c.", "D", {"basic_metals": 3, "fabricated_metal": 3, "electrical": 1}, [("Engineering", 1), ("Metalworking", 1), ("Assembly", 1)]),
    ("motor_vehicles", "Motor vehicles, trailers and semi-trailers", "TC", {"motor_vehicles": 3, "fabricated_metal": 2, "rubber_plastics": 1, "electronics": 1}, [("Assembly", 2), ("Engineering", 1)]),
    ("other_transport", "Other transport equipment", "T", {"basic_metals": 2, "fabricated_metal": 2, "electrical": 2}, [("Engineering", 1), ("Assembly", 2)]),
    ("furniture_other", "Furniture, other manufacturing, repair and installation", "C", {"wood": 3, "fabricated_metal": 2, "textiles": 1}, [("Assembly", 2), ("Design", 1)]),
    ("energy", "Electricity, gas, steam and air conditioning supply", "EC", {}, [("Energy Management", 2), ("Engineering", 1)]),
    ("water", "Water supply, sewerage, waste management and remediation", "EC", {"energy": 4, "water": 1}, [("Water Management", 2), ("Sanitation", 1)]),
    ("construction", "Construction", "", {"non_metallic": 3, "fabricated_metal": 2, "wood": 1, "professional": 1}, [("Building", 2), ("Project Management", 1)]),
    ("trade", "Wholesale and retail trade, repair of motor vehicles", "C", {"warehousing": 2, "land_transport": 2, "admin_support": 1}, [("Sales", 2), ("Customer Service", 1)]),
    ("land_transport", "Land transport and transport via pipelines", "T", {"coke_petroleum": 4, "motor_vehicles": 1, "warehousing": 1}, [("Driving", 2), ("Vehicle Maintenance", 1)]),
    ("water_transport", "Water transport", "", {"coke_petroleum": 4, "warehousing": 2}, [("Transportation", 2), ("Logistics", 1)]),
    ("air_transport", "Air transport", "C", {"coke_petroleum": 5, "warehousing": 1}, [("Transportation", 2), ("Safety Management", 1)]),
    ("warehousing", "Warehousing and support activities for transportation", "", {"land_transport": 3, "construction": 2}, [("Logistics Management", 1), ("Equipment Handling", 2)]),
    ("postal", "Postal and courier activities", "C", {"land_transport": 4, "warehousing": 2}, [("Logistics", 2), ("Driving", 1)]),
    ("accommodation", "Accommodation and food service activities", "FC", {"food": 5, "textiles": 1, "energy": 1}, [("Culinary", 2), ("Customer Service", 1)]),
    ("publishing_media", "Publishing, audiovisual and broadcasting activities", "C", {"publishing_media": 3, "paper_printing": 2, "it_services": 1}, [("Media Production", 2), ("Marketing", 1)]),
    ("telecom", "Telecommunications", "C", {"electronics": 3, "telecom": 2, "construction": 1}, [("Information Technology", 2), ("Technical Support", 1)]),
    ("it_services", "IT and other information services", "C", {"it_services": 3, "electronics": 2, "professional": 1}, [("Information Technology", 2), ("Data Analysis", 1)]),
    ("finance", "Financial and insurance activities", "C", {"finance": 4, "it_services": 2, "professional": 1}, [("Finance", 2), ("Insurance", 1)]),
    ("real_estate", "Real estate activities", "", {"construction": 4, "finance": 2}, [("Real Estate", 1), ("Building Maintenance", 1)]),
    ("professional", "Professional, scientific and technical activities", "C", {"professional": 3, "it_services": 2, "paper_printing": 1}, [("Consulting", 1), ("Research", 1), ("Legal Knowledge", 1)]),
    ("admin_support", "Administrative and support service activities", "", {"professional": 2, "paper_printing": 2, "land_transport": 1}, [("Administrative Support", 2), ("Office Management", 1)]),
    ("public_admin", "Public administration and defence, compulsory social security", "", {"construction": 2, "professional": 2, "it_services": 1}, [("Regulations", 1), ("Administrative Support", 2)]),
    ("education", "Education", "C", {"construction": 2, "paper_printing": 2, "it_services": 1}, [("Teaching", 2), ("Support", 1)]),
    ("health", "Human health and social work activities", "C", {"pharmaceuticals": 4, "professional": 1, "chemicals": 1}, [("Pharmaceutical Science", 1), ("Support", 2)]),
    ("arts_recreation", "Arts, entertainment and recreation", "C", {"publishing_media": 2, "construction": 2, "energy": 1}, [("Media Production", 1), ("Customer Service", 2)]),
    ("other_services", "Other service activities", "C", {"energy": 2, "chemicals": 1, "textiles": 1}, [("Cleaning", 1), ("Basic Repairs", 1), ("Human Resources", 1)]),
]


def build_io_matrix() -> np.ndarray:
    names = [g[0] for g in GOODS]
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    matrix = np.zeros((n, n))
    for col, (_, _, _, inputs, _) in enumerate(GOODS):
        if not inputs:
            continue
        weights = np.array(list(inputs.values()), dtype=float)
        weights /= weights.sum()
        for (src, w) in zip(inputs, weights):
            matrix[index[src], col] += TECHNICAL_TOTAL * MAIN_SHARE * w
        residual = TECHNICAL_TOTAL * (1 - MAIN_SHARE) / len(RESIDUAL_SECTORS)
        for src in RESIDUAL_SECTORS:
            matrix[index[src], col] += residual
    return np.round(matrix, 6)


def main() -> None:
    names = [g[0] for g in GOODS]
    assert len(names) == 44 and len(set(names)) == 44
    goods = []
    for i, (name, label, flags, _, _) in enumerate(GOODS):
        goods.append({
            "id": i,
            "name": name,
            "label": label,
            "essential": "E" in flags,
            "transport": "T" in flags,
            "durable": "D" in flags,
            "food": "F" in flags,
            "consumer": "C" in flags,
            "initial_price": 50.00,
        })
    (DATA / "goods.json").write_text(json.dumps({"schema": 1, "goods": goods}, indent=1) + "\n")

    matrix = build_io_matrix()
    with open(DATA / "io_matrix.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["input"] + names)
        for i, name in enumerate(names):
            writer.writerow([name] + [f"{v:.6f}" for v in matrix[i]])

    recipes = synthesize_recipes(matrix, threshold=0.75, exclude_self=True)
    templates = []
    for i, (name, label, _, _, positions) in enumerate(GOODS):
        headcount = sum(h for _, h in positions)
        templates.append({
            "id": i,
            "name": f"{label} producer",
            "good": name,
            "recipe": {names[j]: round(units, 6) for j, units in sorted(recipes[i].items())},
            "positions": [{"skill": s, "headcount": h} for s, h in positions],
            "tfp": DEFAULT_A,
            "alpha": DEFAULT_ALPHA,
            "founding_cost": round(12 * headcount * DEFAULT_WAGE, 2),
        })
    (DATA / "templates.json").write_text(json.dumps({"schema": 1, "templates": templates}, indent=1) + "\n")
    print(f"wrote {len(goods)} goods, {len(templates)} templates")


if __name__ == "__main__":
    main()
