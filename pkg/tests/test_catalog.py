import numpy as np
import pytest

from catnet.catalog import (InverseMaxPoly, InversePoly, Constant, catalog_from_dict, preset_catalog,
                            scalar_from_spec, validate_catalog)


def test_decay_constants_dominate_weight():
    rs = np.array([1.0, 1.5, 3.0, 10.0])
    xs = np.linspace(0, 20, 401)
    for w in (Constant(1.0), InversePoly(2.0), InversePoly(3.0), InverseMaxPoly(2.0)):
        s1, s2 = w.decay
        for r in rs:
            assert np.all(s1 * r ** s2 * w(r * np.maximum(xs, 1.0)) >= w(xs) * (1 - 1e-12))


def test_scalar_spec_grammar():
    f, L, _ = scalar_from_spec({"base": "abs", "scale": -2.0, "shift": 1.0, "offset": 0.5})
    assert L == 2.0
    assert f(np.array([1.0, 3.0])).tolist() == [0.5, -3.5]
    with pytest.raises(ValueError):
        scalar_from_spec("cube")


def test_max_alias():
    C = preset_catalog("lip_max", K=1, r=1, max_dims=[2, 3])
    assert C["max"] is C["max:2"]
    assert "max" in C and "max:4" not in C


def test_inline_catalog_roundtrip():
    C = preset_catalog("rbf", r=5)
    again = catalog_from_dict(C.to_dict())
    assert set(again.functions) == set(C.functions)
    inline = {"kappa": [1, 7, 0, 1], "threshold": 1.0,
              "functions": [{"id": "id", "kind": "id"},
                            {"id": "pwl:g", "kind": "pwl", "function": "sin", "lipschitz": 1.0, "radius": 2.0}]}
    C2 = catalog_from_dict(inline)
    assert C2["pwl:g"].lipschitz == 1.0
    with pytest.raises(ValueError):
        catalog_from_dict({"functions": []})


@pytest.mark.parametrize("name,params", [
    ("lip", {"K": 1, "r": 1}),
    ("lip_weighted", {"K": 1, "q": 2}),
    ("rbf", {"r": 5}),
    ("prod", {"r": 1, "d": 2}),
])
def test_presets_validate(name, params):
    C = preset_catalog(name, params)
    report = validate_catalog(C, [C.threshold, C.threshold / 10], sample_budget=3000)
    assert report.passed, report.failures()


def test_understated_lipschitz_is_caught():
    inline = {"kappa": [1, 7, 0, 1], "threshold": 1.0,
              "functions": [{"id": "pwl:f", "kind": "pwl", "function": "abs", "lipschitz": 0.5, "radius": 1.0}]}
    report = validate_catalog(catalog_from_dict(inline), [1.0, 0.1], sample_budget=2000)
    assert not report.passed
    assert not report.failures()[0]["lipschitz_exact_pass"]


def test_preset_ranges():
    with pytest.raises(ValueError):
        preset_catalog("rbf", r=4)
    with pytest.raises(ValueError):
        preset_catalog("lip_weighted", K=1, q=1)
    with pytest.raises(ValueError):
        preset_catalog("nonsense")
