import math

import pytest

import shc

DISK = {"preset": "disk", "radius": 1.0}
STABLE15 = {"preset": "stable", "beta": 1.5}


def config(model, t_grid, n=2000, steps=64):
    return {"model": model, "domain": DISK, "t_grid": t_grid, "n_paths": [n], "steps": [steps], "seed": 3}


def test_brownian_sup_against_reflection():
    t = 1e-2
    e = shc.sup_functional({"preset": "brownian"}, t, n_paths=20000, steps=512, seed=5)
    assert abs(e["value"] - shc.brownian_sup_mean(t)) <= 4 * e["std_error"]


def test_scale_and_tail():
    assert shc.variation(STABLE15) == "unbounded"
    assert shc.variation({"preset": "stable", "beta": 0.5}) == "bounded"
    # phi = (2 - beta) r^beta / 2 for the stable profile.
    assert shc.phi(STABLE15, 0.1) == pytest.approx(0.25 * 0.1**1.5, rel=1e-6)
    assert shc.levy_tail_mass(STABLE15, 0.1) > shc.levy_tail_mass(STABLE15, 0.2)


def test_perimeter_and_deficit():
    bv = {"preset": "stable", "beta": 0.5}
    per = shc.perimeter(bv, DISK)
    assert per["value"] == pytest.approx(5.1718776, rel=1e-5)
    d = shc.heat_content_deficit(bv, DISK, 1e-3, n_paths=4000, steps=32)
    assert d["killing"]
    assert d["value"] / (1e-3 * per["value"]) == pytest.approx(1.0, abs=0.1)
    with pytest.raises(shc.DivergentPerimeterError):
        shc.perimeter(STABLE15, DISK)


def test_exit_probability_limits():
    e = shc.exit_probability_ball({"preset": "brownian"}, 0.1, 1.0, n_paths=1000)
    assert e["value"] == pytest.approx(1.0)


def test_dichotomy_report_is_deterministic():
    cfg = config({"preset": "brownian"}, [1e-2, 1e-3])
    a, b = shc.run_dichotomy(cfg), shc.run_dichotomy(cfg)
    assert a == b
    assert a["branch"] == "sup_functional"
    assert len(a["rows"]) == 2
    assert a["verdict"] in ("pass", "fail", "inconclusive")


def test_negligibility_and_errors():
    rep = shc.run_t_negligibility(config(STABLE15, [1e-2, 1e-3, 1e-4], n=4000))
    ratios = [row["ratio"] for row in rep["rows"]]
    assert ratios == sorted(ratios, reverse=True)
    with pytest.raises(shc.PreconditionError):
        shc.run_t_negligibility(config({"preset": "stable", "beta": 0.5}, [1e-2]))
    bad = config(STABLE15, [1e-2])
    bad["colour"] = "red"
    with pytest.raises(shc.ConfigError):
        shc.run_dichotomy(bad)
    assert issubclass(shc.ConfigError, shc.ShcError)


def test_audit_runs():
    cfg = config(STABLE15, [1e-2, 1e-3])
    cfg["r_grid"] = [0.05, 0.1, 0.2]
    rep = shc.run_bound_audit(cfg)
    names = {c["name"] for c in rep["checks"]}
    assert {"tail_sandwich", "exit_upper_ball", "reflection"} <= names
    assert not math.isnan(rep["checks"][0]["constants"].get("C1", 0.0))
