import json
import math

import numpy as np
import pytest

import shearfront as sf

SMALL = {
    "name": "py-small",
    "flow": {"type": "cosine"},
    "reaction": {"type": "ignition", "theta": 0.25},
    "grid": {"dim": 1, "points": 16, "n_x": 241},
    "A_schedule": [1, 2, 4],
    "routes": {"sweep": {"gauge_A": 2}, "viscosity": {"schedule": [1, 2, 4]}},
}


def test_version_and_flows():
    assert sf.__version__
    torus = sf.TorusGrid(1, 64)
    flow = sf.cosine_flow(torus, offset=0.2)
    assert flow.beta == pytest.approx(0.2)
    assert abs(flow.alpha.mean()) < 1e-14
    assert flow.alpha.shape == (64,)
    assert sf.check_nondegeneracy(flow, 2)
    custom = sf.custom_flow(torus, np.sin(2 * np.pi * np.arange(64) / 64))
    assert custom.alpha_max == pytest.approx(1.0)


def test_reactions():
    f = sf.Reaction.ignition(0.25)
    assert f(0.2) == 0.0
    assert f(0.5) == pytest.approx(0.125)
    cut = sf.make_cutoff(sf.Reaction.kpp(1.0), 0.125)
    assert cut.kind == "cutoff"
    with pytest.raises(ValueError):
        sf.Reaction.ignition(1.5)


def test_spectral():
    torus = sf.TorusGrid(1, 64)
    flow = sf.cosine_flow(torus)
    assert abs(sf.mu_of_lambda(0.0, 4.0, 0.1, flow)) < 1e-12
    assert sf.kpp_limit_speed(flow, 1.0) == pytest.approx(0.22266509, abs=1e-7)
    assert sf.decay_rate(3.0, 0.2, sf.zero_flow(torus)) == pytest.approx(0.2 * 9, rel=1e-10)
    value, phi = sf.principal_eigenvalue(torus, 1.0, flow.alpha)
    assert value > 0 and (phi > 0).all()


def test_front_solve():
    torus = sf.TorusGrid(1, 16)
    w = sf.WindowOptions()
    w.n_x = 241
    sol = sf.solve_front(2.0, sf.cosine_flow(torus), sf.Reaction.ignition(0.25), w)
    assert sol.U.shape == (241, 16)
    assert (np.diff(sol.U, axis=0) <= 1e-10).all()
    assert sol.speed == pytest.approx(2.0 * sol.gamma)
    ids = sf.identities(sol)
    assert ids["rel_err_reaction"] < 1e-3
    assert sol.certificate_bound() >= sol.gamma - 1e-8
    curve = sf.speed_curve([1, 2], sf.zero_flow(torus), sf.Reaction.ignition(0.25), w)
    c = [e["c_star"] for e in curve["entries"]]
    assert c[1] == pytest.approx(c[0], rel=1e-8)


def test_run_cache_and_check(tmp_path):
    out = tmp_path / "run"
    first = sf.run(SMALL, out, no_cache=False)
    assert first["exit_code"] == 0
    assert first["solver_calls"] > 0
    again = sf.run(SMALL, out)
    assert again["solver_calls"] == 0
    assert json.dumps(again["report"]) == json.dumps(first["report"])
    assert (out / "speeds.csv").read_text().startswith("# shearfront")
    code, messages = sf.check_report(out / "report.json")
    assert code == 0 and messages == []
    est = {e["route"]: e for e in first["report"]["estimates"]}
    assert 0 < est["vanishing_viscosity"]["value"] < 1


def test_toml_and_errors(tmp_path):
    toml = tmp_path / "small.toml"
    toml.write_text(
        'A_schedule = [1, 2]\n[flow]\ntype = "zero"\n[reaction]\ntype = "ignition"\ntheta = 0.25\n'
        "[grid]\npoints = 8\nn_x = 241\n[routes]\nsweep = true\n"
    )
    r = sf.run(toml, tmp_path / "t", mode="speeds", no_cache=True)
    assert r["exit_code"] == 0
    c = [e["c_star"] for e in r["report"]["sections"]["sweep"]["entries"]]
    assert math.isclose(c[0], c[1], rel_tol=1e-8)
    bad = dict(SMALL, reaction={"type": "ignition", "theta": 0.25, "thetta": 1})
    with pytest.raises(sf.ConfigError, match="reaction.thetta"):
        sf.run(bad, tmp_path / "bad")
