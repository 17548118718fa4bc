import json
import math

import millibot


def test_drag_coefficient_reference_values():
    c20 = millibot.drag_coefficient(20e-3, 7.4e-3, 1.4e-3)
    c43 = millibot.drag_coefficient(4.3e-3, 7.4e-3, 1.4e-3)
    assert abs(c20 - 5.585e-4) / 5.585e-4 < 1e-3
    assert abs(c43 - 1.201e-4) / 1.201e-4 < 1e-3


def test_metrics_worked_example():
    m = millibot.metrics([0.0, 3.0, 4.0])
    assert math.isclose(m["rmse_mm"], math.sqrt(25.0 / 3.0), rel_tol=1e-12)
    assert math.isclose(m["max_mm"], 4.0, rel_tol=1e-12)
    assert 3.0 <= m["p95_mm"] <= 4.0


def test_calibrate_default():
    rep = millibot.calibrate_default()
    assert abs(rep["peak_b_t"] - 24.05e-3) / 24.05e-3 < 1e-3
    assert rep["gain_scale"] > 0.0


def test_plan_default_waypoints():
    wps = millibot.plan_default()
    assert len(wps) == 10
    gaps = [
        math.dist(wps[i], wps[i + 1])
        for i in range(len(wps) - 1)
    ]
    assert max(gaps) - min(gaps) < 0.2


def test_run_scenario_roundtrip(tmp_path):
    wp = tmp_path / "line.csv"
    rows = ["idx,x_mm,y_mm"]
    for i in range(11):
        rows.append(f"{i},{0.5 * i},0")
    wp.write_text("\n".join(rows) + "\n")

    scenario = {
        "name": "py-smoke",
        "mission": {"waypoints_csv": "line.csv", "speed_mmps": 0.5},
        "sensor": {"sigma_pos_mm": 0.0, "dropout_prob": 0.0},
        "sim": {"seed": 11},
    }
    out = millibot.run_scenario(json.dumps(scenario), str(tmp_path))
    assert out["completed"] is True
    assert out["failure_reason"] is None
    assert out["rmse_mm"] < 1.0
    assert out["n_steps"] > 50
    assert len(out["waypoints_mm"]) == 11
    assert out["waypoints_mm"][0] == (0.0, 0.0)


def test_run_scenario_determinism(tmp_path):
    wp = tmp_path / "line.csv"
    wp.write_text("idx,x_mm,y_mm\n0,0,0\n1,3,0\n2,6,0\n")
    scenario = {
        "name": "py-det",
        "mission": {"waypoints_csv": str(wp), "speed_mmps": 0.5},
        "sensor": {"sigma_pos_mm": 0.05, "dropout_prob": 0.1},
        "sim": {"seed": 4},
    }
    a = millibot.run_scenario(json.dumps(scenario))
    b = millibot.run_scenario(json.dumps(scenario))
    assert a == b
