import json

import pytest

from agentecon.catalog import DanglingReference, DuplicateGood, SchemaError, load_age_table, load_goods, load_skills
from agentecon.production import load_io_matrix, load_templates, synthesize_recipes
from agentecon.catalog import _data_path


def test_shipped_goods(catalog):
    assert len(catalog) == 44
    assert [g.id for g in catalog] == list(range(44))
    assert len({g.name for g in catalog}) == 44
    ids = set(range(44))
    assert set(catalog.essential) <= ids and set(catalog.transport) <= ids and set(catalog.durable) <= ids
    assert all(g.initial_price == 5000 for g in catalog)


def test_essential_set(catalog):
    names = {catalog[g].name for g in catalog.essential}
    assert names == {"agriculture", "fishing", "food", "textiles", "energy", "water"}


def test_lookup_unknown_good(catalog):
    with pytest.raises(DanglingReference):
        catalog.by_name("unobtainium")


def test_skills_and_ages(skills):
    assert len(skills) == len(set(skills)) > 0
    bins, weights = load_age_table()
    assert len(bins) == len(weights) and abs(sum(weights) - 1) < 1e-12
    assert all(lo <= hi for lo, hi in bins)


def test_duplicate_good_name(tmp_path):
    raw = json.loads(_data_path("goods.json").read_text())
    raw["goods"][1]["name"] = raw["goods"][0]["name"]
    p = tmp_path / "goods.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(DuplicateGood):
        load_goods(p)


def test_sparse_good_ids(tmp_path):
    raw = json.loads(_data_path("goods.json").read_text())
    raw["goods"][3]["id"] = 99
    p = tmp_path / "goods.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(SchemaError):
        load_goods(p)


def test_duplicate_skill(tmp_path):
    p = tmp_path / "skills.txt"
    p.write_text("a\nb\na\n")
    with pytest.raises(SchemaError):
        load_skills(p)


def test_templates_one_per_good(catalog, skills):
    templates = load_templates(None, catalog, skills)
    assert len(templates) == 44
    assert sorted(t.good for t in templates) == list(range(44))
    assert all(t.headcount > 0 for t in templates)


def test_template_recipes_follow_io_matrix(catalog, skills):
    templates = load_templates(None, catalog, skills)
    _, matrix = load_io_matrix()
    recipes = synthesize_recipes(matrix, exclude_self=True)
    for t in templates:
        assert set(t.recipe) == set(recipes[t.good])
        col = matrix[:, t.good].copy()
        col[t.good] = 0
        if col.sum() > 0:
            assert sum(col[i] for i in t.recipe) > 0.75 * col.sum()
            assert t.good not in t.recipe


def _templates_file(tmp_path, mutate):
    raw = json.loads(_data_path("templates.json").read_text())
    mutate(raw["templates"])
    p = tmp_path / "templates.json"
    p.write_text(json.dumps(raw))
    return p


def test_template_missing_good(tmp_path, catalog, skills):
    p = _templates_file(tmp_path, lambda ts: ts.pop(5))
    with pytest.raises(DanglingReference):
        load_templates(p, catalog, skills)


def test_template_duplicate_good(tmp_path, catalog, skills):
    def dup(ts):
        ts[5]["good"] = ts[4]["good"]
    with pytest.raises(DuplicateGood):
        load_templates(_templates_file(tmp_path, dup), catalog, skills)


def test_template_unknown_recipe_good(tmp_path, catalog, skills):
    def bad(ts):
        ts[7]["recipe"]["unobtainium"] = 1.0
    with pytest.raises(DanglingReference):
        load_templates(_templates_file(tmp_path, bad), catalog, skills)


def test_template_unknown_skill(tmp_path, catalog, skills):
    def bad(ts):
        ts[7]["positions"][0]["skill"] = "Juggling"
    with pytest.raises(DanglingReference):
        load_templates(_templates_file(tmp_path, bad), catalog, skills)
