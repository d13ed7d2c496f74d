import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from cdatc.errors import NoData, ParseError, UnknownPreset, ValidationError
from cdatc.output import FILES, emit_results
from cdatc.scenario import (PRESETS, config_from_dict, dump_scenario, load_preset,
                            parse_scenario, parse_scenario_text)
from cdatc.simulator import compare

MINIMAL = """
[network]
nodes = 7
edges = [[1, 2], [1, 3], [2, 3], [5, 6], [5, 7], [6, 7], [1, 4], [2, 4], [3, 4], [4, 5], [4, 6], [4, 7]]
"""


def test_fig2a_preset_values():
    cfg = load_preset("fig2a")
    assert cfg.energy.harvest_prob == 0.4
    assert cfg.energy.capacity == 500
    assert cfg.energy.sense_cost == 1
    assert cfg.energy.tx_cost == 2
    assert cfg.energy.harvest_range == (2.0, 4.0)
    assert cfg.diffusion.mu == 0.1
    assert cfg.signal.taps == 50
    assert cfg.signal.noise_variances == (1e-4, 1e-4, 1e-4, 0.01, 0.5, 0.5, 0.5)
    assert cfg.schemes == ("cd-atc", "nsd-atc", "unconstrained")


def test_other_presets():
    assert load_preset("fig2b").energy.harvest_prob == 0.8
    assert load_preset("fig3a").schemes == ("cd-atc",)
    assert load_preset("fig3b").energy.harvest_prob == 0.8
    assert load_preset("unconstrained").schemes == ("unconstrained",)
    with pytest.raises(UnknownPreset):
        load_preset("fig9")


def test_defaults_applied():
    cfg = parse_scenario_text(MINIMAL)
    assert cfg.censoring.tau_init == 0.0
    assert cfg.censoring.alpha_x == 0.1 and cfg.censoring.eta == 0.01
    assert cfg.diffusion.delta == 1e-5
    assert cfg.diffusion.combiner == "adaptive-ls"
    assert cfg.energy.start_levels(7).tolist() == [500.0] * 7
    assert cfg.n_steps == 10000 and cfg.runs == 50


def test_missing_nodes():
    with pytest.raises(ValidationError) as info:
        parse_scenario_text("[network]\nedges = [[1, 2]]\n")
    assert info.value.key == "nodes"


@pytest.mark.parametrize("extra, key", [
    ("[energy]\nharvest_prob = 1.5\n", "harvest_prob"),
    ("[energy]\nbogus = 1\n", "bogus"),
    ("[weird]\nx = 1\n", "weird"),
    ("[diffusion]\ncombiner = 'median'\n", "combiner"),
    ("[censoring]\ncensoring = 'maybe'\n", "censoring"),
    ("[sim]\nsteps = 0\n", "steps"),
    ("[signal]\nnoise_variances = [0.1, 0.2]\n", "noise_variances"),
    ("[energy]\nharvest_prob = true\n", "harvest_prob"),
])
def test_validation_names_key(extra, key):
    with pytest.raises(ValidationError) as info:
        parse_scenario_text(MINIMAL + extra)
    assert info.value.key == key
    assert key in str(info.value)


def test_bad_topology_is_validation_error():
    with pytest.raises(ValidationError) as info:
        parse_scenario_text("[network]\nnodes = 3\nedges = [[1, 2]]\n[signal]\nnoise_variances=[0,0,0]\n")
    assert info.value.key == "edges"


def test_parse_error_line_number():
    with pytest.raises(ParseError) as info:
        parse_scenario_text("[network]\nnodes = 7\nedges = [[1, 2]\n")
    assert info.value.line is not None
    assert "line" in str(info.value)


def test_parse_from_file(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(MINIMAL + "[energy]\nharvest_prob = 0.8\n")
    assert parse_scenario(p).energy.harvest_prob == 0.8


@pytest.mark.parametrize("name", PRESETS)
def test_round_trip_presets(name):
    cfg = load_preset(name)
    assert parse_scenario_text(dump_scenario(cfg)) == cfg


@settings(max_examples=30, deadline=None)
@given(
    ph=st.floats(0, 1), mu=st.floats(1e-3, 1.5), eta=st.floats(0, 1),
    tau=st.floats(-5, 5), seed=st.integers(0, 2**31), runs=st.integers(1, 100),
    jump=st.none() | st.integers(1, 1000), init=st.none() | st.floats(0, 500),
    censor=st.booleans(),
)
def test_round_trip_property(ph, mu, eta, tau, seed, runs, jump, init, censor):
    base = parse_scenario_text(MINIMAL)
    cfg = replace(
        base, seed=seed, runs=runs,
        energy=replace(base.energy, harvest_prob=ph, initial_battery=init),
        diffusion=replace(base.diffusion, mu=mu),
        censoring=replace(base.censoring, eta=eta, tau_init=tau, enabled=censor),
        signal=replace(base.signal, jump_step=jump),
    )
    assert parse_scenario_text(dump_scenario(cfg)) == cfg


def test_per_node_initial_battery():
    cfg = parse_scenario_text(MINIMAL + "[energy]\ninitial_battery = [1, 2, 3, 4, 5, 6, 7]\n")
    assert cfg.energy.start_levels(7).tolist() == [1, 2, 3, 4, 5, 6, 7]
    assert parse_scenario_text(dump_scenario(cfg)) == cfg
    with pytest.raises(ValidationError):
        config_from_dict({"network": {"nodes": 7, "edges": [[1, 2]]}, "energy": {"initial_battery": [1, 2]}})


def quick(name="fig2a", **kw):
    return replace(load_preset(name), n_steps=kw.get("steps", 300), runs=kw.get("runs", 2))


def test_emit_results_files(tmp_path):
    cfg = quick()
    results = compare(cfg)
    paths = emit_results(results, cfg, tmp_path)
    assert [p.name for p in paths] == list(FILES)
    rows = (tmp_path / "nmsd.csv").read_text().splitlines()
    assert rows[0] == "step,scheme,nmsd_db"
    assert {r.split(",")[1] for r in rows[1:]} == set(cfg.schemes)
    assert len(rows) == 1 + 3 * 300
    tau_rows = (tmp_path / "thresholds.csv").read_text().splitlines()
    assert tau_rows[0] == "step,node,tau" and len(tau_rows) == 1 + 7 * 300
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["steady_nmsd_db"]) == set(cfg.schemes)
    assert len(summary["transmit_rates"]["cd-atc"]) == 7
    assert parse_scenario_text(dump_scenario(cfg)) == config_from_dict(summary["effective_config"])


def test_emit_results_is_deterministic(tmp_path):
    cfg = quick("fig3b")
    emit_results(compare(cfg), cfg, tmp_path / "a")
    emit_results(compare(cfg), cfg, tmp_path / "b")
    for f in FILES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_emit_results_no_data(tmp_path):
    with pytest.raises(NoData):
        emit_results({}, quick(), tmp_path / "x")
    assert not (tmp_path / "x").exists()
