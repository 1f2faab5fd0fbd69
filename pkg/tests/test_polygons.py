"""
格子多角形のテスト
"""
import numpy as np
import pytest
import sympy

from app.models.verification import DegeneratePolygon, SearchBudgetExceeded, UnknownLabel
from app.services.polygons import (
    LatticePolygon,
    catalog,
    catalog_check,
    classification_trials,
    classify,
    get_polygon,
    invariants,
    lattice_width,
    newton_polygon,
    quiver_for_polygon,
    random_unimodular,
    sa2z_equivalent,
    spectral_poly,
    verify_4a_to_4c,
)
from app.services.symkernel import RatExpr


def test_invariants_examples():
    assert invariants(get_polygon("3")).to_dict() == {"twice_area": 3, "area": "3/2", "boundary": 3, "interior": 1}
    nine = invariants(get_polygon("9"))
    assert (nine.twice_area, nine.boundary, nine.interior) == (9, 9, 1)
    unit = invariants([(0, 0), (1, 0), (0, 1)])
    assert (unit.twice_area, unit.boundary, unit.interior) == (1, 3, 0)


def test_degenerate_polygon():
    with pytest.raises(DegeneratePolygon):
        invariants([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(DegeneratePolygon):
        LatticePolygon(((0, 0), (0, 1), (1, 0)))


def test_collinear_points_are_not_vertices():
    assert len(get_polygon("9").vertices) == 3
    assert len(get_polygon("4c").vertices) == 3


def _interior_by_enumeration(polygon):
    n = len(polygon.vertices)
    xs = [v[0] for v in polygon.vertices]
    ys = [v[1] for v in polygon.vertices]
    count = 0
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            a = polygon.vertices
            if all((a[(i + 1) % n][0] - a[i][0]) * (y - a[i][1]) - (a[(i + 1) % n][1] - a[i][1]) * (x - a[i][0]) > 0
                   for i in range(n)):
                count += 1
    return count


def test_pick_against_enumeration():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(60):
        points = rng.integers(-6, 7, size=(int(rng.integers(3, 15)), 2)).tolist()
        try:
            polygon = LatticePolygon.from_points(points)
        except DegeneratePolygon:
            continue
        assert len(polygon.vertices) <= 14
        assert invariants(polygon).interior == _interior_by_enumeration(polygon)
        checked += 1
    assert checked > 40


def test_translate_gives_identity():
    polygon = get_polygon("4b")
    moved = polygon.transform([[1, 0], [0, 1]], (3, -2))
    result = sa2z_equivalent(polygon, moved)
    assert result.matrix == ((1, 0), (0, 1))
    assert result.shift == (3, -2)


def test_shear_is_recovered():
    polygon = get_polygon("4b")
    sheared = polygon.transform([[1, 1], [0, 1]])
    result = sa2z_equivalent(polygon, sheared)
    assert result.matrix == ((1, 1), (0, 1))
    assert result.shift == (0, 0)


def test_equivalence_maps_vertices():
    rng = np.random.default_rng(3)
    polygon = get_polygon("6c")
    move = random_unimodular(rng)
    image = polygon.transform(move.matrix, move.shift)
    result = sa2z_equivalent(polygon, image)
    assert {result.apply(v) for v in polygon.vertices} == set(image.vertices)


def test_4a_and_4b_inequivalent():
    assert sa2z_equivalent(get_polygon("4a"), get_polygon("4b")) is None


def test_classify():
    lam, mu = sympy.symbols("lam mu")
    assert classify(newton_polygon(lam + mu + 1 / (lam * mu) + 1)) == "3"
    rng = np.random.default_rng(11)
    move = random_unimodular(rng, steps=6)
    assert classify(get_polygon("8c").transform(move.matrix, move.shift)) == "8c"
    assert classify([(0, 0), (1, 0), (1, 1), (0, 1)]) is None


def test_quiver_for_polygon():
    assert quiver_for_polygon("4b") == "A7"
    assert quiver_for_polygon("4a") == quiver_for_polygon("4c") == "A7p"
    assert quiver_for_polygon("3") == "A8"
    assert {quiver_for_polygon(label) for label in ("8a", "8b", "8c")} == {"A3"}
    assert quiver_for_polygon("9") == "A2"
    with pytest.raises(UnknownLabel):
        quiver_for_polygon("10a")


def test_spectral_poly():
    g = RatExpr.gen
    expected = (g("a_1_0") * g("lam") + g("a_0_1") * g("mu") + g("a_0_0")
                + g("a_m1_0") * g("lam", -1) + g("a_0_m1") * g("mu", -1))
    assert spectral_poly("4a").equals(expected)
    assert len(get_polygon("3").lattice_points()) == 4
    for label, polygon in catalog().items():
        inv = invariants(polygon)
        assert len(polygon.lattice_points()) == inv.boundary + inv.interior


def test_4a_to_4c():
    result = verify_4a_to_4c()
    assert result["holds"]
    assert result["shape"] == "4c"
    a = {name: sympy.Symbol(name) for name in ("a_0_1", "a_1_0", "a_0_m1", "a_m1_0")}
    assert sympy.sympify(result["coefficients"]["lt^2 mt"]) - a["a_0_1"] * a["a_1_0"] == 0
    assert sympy.expand(sympy.sympify(result["coefficients"]["lt"])
                        - a["a_0_m1"] * a["a_0_1"] - a["a_m1_0"] * a["a_1_0"]) == 0


def test_catalog():
    result = catalog_check()
    assert len(result["polygons"]) == 16
    assert result["equivalent_pairs"] == []
    assert result["holds"]


def test_lattice_width():
    assert lattice_width(get_polygon("3"))[0] == 2
    assert lattice_width(get_polygon("9"))[0] == 3
    with pytest.raises(SearchBudgetExceeded):
        lattice_width(get_polygon("3").transform([[1, 50], [0, 1]]))


def test_classification_trials_quick():
    assert classification_trials(trials=5)["holds"]


@pytest.mark.slow
def test_classification_trials_full():
    result = classification_trials(trials=100)
    assert result["holds"]
    assert result["failures"] == []
