import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import scenario_from
from urllcgraph import cli
from urllcgraph.allocators import ScheduleBuilder, SHARED, gba, gba_sic
from urllcgraph.core import min_rus
from urllcgraph.experiment import (ALGORITHMS, CSV_COLUMNS, SweepSpec, csv_text, evaluate, figure_tables, read_csv,
                                   run_sweep, summarize)
from urllcgraph.metrics import distance_bins, evaluate_schedule, jain, jain_over_bins, served_profile
from urllcgraph.params import SystemParams, canonical_key, dump_config, load_config
from urllcgraph.scenario import Scenario, generate_scenario
from urllcgraph.validate import validate_reliability


def test_jain_basics():
    assert jain([3.0, 3.0, 3.0]) == pytest.approx(1.0)
    assert jain([1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25)
    assert math.isnan(jain([0.0, 0.0]))
    with pytest.raises(ValueError):
        jain([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=30).filter(lambda v: any(x > 0 for x in v)))
def test_jain_range(x):
    j = jain(x)
    assert 1.0 / len(x) - 1e-12 <= j <= 1.0 + 1e-12


def test_distance_bins_and_profile():
    d = np.array([1.0, 4.9, 5.0, 49.0, 50.0])
    served = np.array([1, 0, 1, 1, 0], bool)
    edges, count, hit = distance_bins(d, served, 50.0)
    assert count[0] == 2 and count[1] == 1 and count[9] == 2
    prof = served_profile(d, served, 50.0)
    assert prof[0] == 0.5 and prof[1] == 1.0 and np.isnan(prof[5])
    assert jain_over_bins(prof) == pytest.approx(jain([0.5, 1.0, 0.5]))


def test_uniform_service_is_fair(params):
    s = scenario_from(params, [5.0, 15.0, 25.0, 35.0, 45.0], [1, 15, 29, 43, 57], [1.0])
    sched = gba(s)
    assert sched.served.all()
    rep = evaluate_schedule(sched, s)
    assert rep.jain_bin == pytest.approx(1.0) and rep.jain_dev == pytest.approx(1.0)
    assert rep.mean_aoi == pytest.approx(rep.mean_delay + params.cycle_slots / 2)
    assert rep.delay_averaged_over == "served"


def test_scenario_determinism(params):
    a = generate_scenario(50, 4, params, 123)
    b = generate_scenario(50, 4, params, 123)
    c = generate_scenario(50, 4, params, 124)
    assert np.array_equal(a.distances, b.distances) and np.array_equal(a.issue_times, b.issue_times)
    assert np.array_equal(a.interf, b.interf)
    assert not np.array_equal(a.distances, c.distances)


def test_scenario_ranges(params):
    s = generate_scenario(500, 20, params, 1)
    assert np.all((s.distances >= 0.1) & (s.distances <= params.area_radius))
    assert s.issue_times.min() >= 1 and s.issue_times.max() <= params.cycle_slots
    assert np.all((s.interf >= 1) & (s.interf <= 1 + params.max_interf))
    assert np.allclose(np.hypot(*s.positions.T), s.distances)
    one = generate_scenario(1, 1, params, 0)
    assert one.n_devices == 1 and one.n_channels == 1


def test_mean_distance_on_disc(params):
    s = generate_scenario(100_000, 1, params, 2024)
    assert s.distances.mean() == pytest.approx(2 * params.area_radius / 3, rel=0.01)


def test_scenario_validation(params):
    with pytest.raises(ValueError):
        scenario_from(params, [10.0], [0], [1.0])
    with pytest.raises(ValueError):
        scenario_from(params, [10.0], [1], [0.5])
    with pytest.raises(ValueError):
        scenario_from(params, [-1.0], [1], [1.0])


def test_evaluate_rejects_unknown(params):
    s = generate_scenario(5, 2, params, 0)
    with pytest.raises(ValueError, match="unknown algorithm"):
        evaluate("greedy", s)


@pytest.mark.parametrize("name", sorted(ALGORITHMS))
def test_every_algorithm_evaluates(params, name):
    s = generate_scenario(30, 3, params, 5)
    sched, rep = evaluate(name, s)
    assert rep.algorithm == sched.algorithm
    assert rep.fraction_served == sched.n_served / 30
    assert rep.max_delay <= params.delay_slots


RELAXED = SystemParams(reliability=0.99)


def test_validation_at_relaxed_reliability():
    s = generate_scenario(60, 5, RELAXED, 3)
    for name in ("gba", "gba_sic", "fsa", "bca"):
        sched, _ = evaluate(name, s)
        rep = validate_reliability(sched, s, 20_000, seed=1)
        assert np.all(rep.analytic[sched.served] > 0.99)
        assert rep.passed(3.0).all(), name


def test_validation_needs_enough_trials():
    s = generate_scenario(5, 2, RELAXED, 0)
    with pytest.raises(ValueError):
        validate_reliability(gba(s), s, 100)


def _solo_schedule(s, placements):
    b = ScheduleBuilder("manual", s.issue_times, s.delay_bounds, s.n_channels, s.params.cycle_slots)
    for dev, ch, slots in placements:
        for slot in slots:
            b.assign(dev, ch, slot, s.params.packet_bits / len(slots))
    return b.finish()


def test_more_rus_never_hurt():
    s = scenario_from(RELAXED, [50.0, 50.0], [1, 1], [3.0, 3.0])
    r = int(min_rus(50.0, 3.0, RELAXED))
    sched = _solo_schedule(s, [(0, 0, range(1, r + 1)), (1, 1, range(1, r + 3))])
    rep = validate_reliability(sched, s, 50_000, seed=4)
    assert rep.successes[1] >= rep.successes[0]
    assert rep.empirical[0] >= 0.99 - 3 * math.sqrt(0.99 * 0.01 / 50_000)


def test_sharing_never_beats_solo():
    s = scenario_from(RELAXED, [5.0, 50.0], [1, 1], [1.0])
    pair = gba_sic(s)
    assert pair.meta["pairs"] == 1
    rus = {u: pair.device_rus(u) for u in (0, 1)}
    slots = {u: [slot for _, slot, _, _ in rus[u]] for u in (0, 1)}
    two = scenario_from(RELAXED, [5.0, 50.0], [1, 1], [1.0, 1.0])
    # same per-device RU counts, but each device alone on its own copy of the channel
    solo = _solo_schedule(two, [(0, 0, slots[0]), (1, 1, slots[1])])
    rp = validate_reliability(pair, s, 50_000, seed=7)
    rs = validate_reliability(solo, two, 50_000, seed=7)
    assert rp.analytic[0] <= rs.analytic[0] + 1e-15 and rp.analytic[1] <= rs.analytic[1] + 1e-15
    assert rp.empirical[0] <= rs.empirical[0] + 3 * math.sqrt(0.01 / 50_000)
    assert rp.empirical[1] <= rs.empirical[1] + 3 * math.sqrt(0.01 / 50_000)
    assert (pair.role == SHARED).any()


def _small_spec(**kw):
    base = dict(var="N", values=[20, 40], algorithms=["gba", "bca"], seeds=[0, 1], n_channels=3,
                include_runtime=False)
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_csv_is_byte_identical():
    a = csv_text(run_sweep(_small_spec()))
    b = csv_text(run_sweep(_small_spec()))
    assert a == b
    assert a.splitlines()[0].split(",") == CSV_COLUMNS
    assert len(a.splitlines()) == 1 + 2 * 2 * 2


def test_parallel_sweep_matches_serial():
    assert csv_text(run_sweep(_small_spec(), jobs=2)) == csv_text(run_sweep(_small_spec()))


def test_sweep_rejects_bad_spec():
    with pytest.raises(ValueError):
        SweepSpec(var="T", values=[1])
    with pytest.raises(ValueError):
        SweepSpec(var="N", values=[1], algorithms=["nope"])


def test_delta_sweep_clamps_pairing_limit():
    spec = SweepSpec(var="Delta", values=[10, 35])
    _, _, p = spec.point(10)
    assert p.delay_slots == 10 and p.pairing_limit == 10


def test_csv_round_trip_and_summary():
    rows = run_sweep(_small_spec())
    back = read_csv(io.StringIO(csv_text(rows)))
    assert [r["fraction_served"] for r in back] == pytest.approx([r["fraction_served"] for r in rows], rel=1e-8)
    table = summarize(back, "fraction_served", "N")
    assert [(t["value"], t["algorithm"]) for t in table] == [(20, "gba"), (20, "bca"), (40, "gba"), (40, "bca")]
    assert all(t["n"] == 2 for t in table)


def test_figure_tables():
    rows = run_sweep(_small_spec()) + run_sweep(_small_spec(var="C", values=[2, 4]))
    tables = figure_tables(rows, distance_n=40)
    assert set(tables) == {"fig4", "fig5", "fig6", "fig8"}
    assert len(tables["fig8"]) == 10 * 2


def test_config_aliases(tmp_path):
    cfg = tmp_path / "sys.ini"
    cfg.write_text("[system]\nDelta = 20\nGamma_T_dB = 90\nM_D = 12\nrho = 0.999\n")
    p = load_config(cfg)
    assert (p.delay_slots, p.transmit_snr_db, p.pairing_limit, p.reliability) == (20, 90.0, 12, 0.999)
    assert load_config(cfg, delay_slots=25).delay_slots == 25
    assert canonical_key("M_T") == "pairing_limit"
    again = tmp_path / "again.ini"
    again.write_text(dump_config(p))
    assert load_config(again) == p
    bad = tmp_path / "bad.ini"
    bad.write_text("[system]\nfoo = 1\n")
    with pytest.raises(ValueError):
        load_config(bad)


def test_default_config_matches_reference_setup():
    p = SystemParams()
    assert p.q == pytest.approx(25.92)
    assert p.transmit_snr == pytest.approx(1e10)
    assert (p.pathloss_exp, p.max_interf, p.packet_bits, p.cycle_slots, p.delay_slots) == (3, 4, 100, 70, 35)
    assert (p.reliability, p.pairing_limit, p.area_radius) == (0.99999, 15, 50)


def test_cli_run(capsys):
    assert cli.main(["run", "gba_sic", "-n", "30", "-c", "3", "--seed", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["algorithm"] == "gba_sic" and out["n_devices"] == 30 and out["seed"] == 2


def test_cli_sweep_and_figure(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    args = ["sweep", "N", "20:40:20", "--algorithms", "gba,fsa", "--seeds", "2", "-c", "3", "--no-runtime"]
    assert cli.main(args + ["-o", str(csv_path)]) == 0
    first = csv_path.read_bytes()
    assert cli.main(args + ["-o", str(csv_path)]) == 0
    assert csv_path.read_bytes() == first
    assert cli.main(args) == 0
    assert capsys.readouterr().out.encode() == first
    assert cli.main(["figure", str(csv_path), "-o", str(tmp_path / "figs"), "--distance-devices", "40"]) == 0
    assert sorted(p.name for p in (tmp_path / "figs").iterdir()) == ["fig4.csv", "fig5.csv", "fig8.csv"]


def test_cli_validate(capsys):
    code = cli.main(["validate", "gba", "-n", "20", "-c", "3", "--trials", "20000"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0] == "device,served,analytic,empirical,lower_bound,pass"
    assert len(lines) == 21


def test_cli_schedule_dump(capsys):
    assert cli.main(["schedule-dump", "gba_sic", "-n", "40", "-c", "4", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "channel,slot,owner,role,bits"
    roles = {ln.split(",")[3] for ln in lines[1:]}
    assert roles and roles <= {"solo", "shared", "exclusive"}


def test_cli_config_overrides(capsys, tmp_path):
    assert cli.main(["config", "--delay-slots", "30", "--transmit-snr-db", "95"]) == 0
    text = capsys.readouterr().out
    cfg = tmp_path / "c.ini"
    cfg.write_text(text)
    p = load_config(cfg)
    assert p.delay_slots == 30 and p.transmit_snr_db == 95.0
    assert cli.main(["config", "--config", str(cfg), "--delay-slots", "20"]) == 0
    assert "20" in capsys.readouterr().out


def test_scenario_snr_shape(params):
    s = generate_scenario(9, 4, params, 0)
    assert isinstance(s, Scenario)
    assert s.snr_mean().shape == (9, 4)
    assert s.demand().shape == (4, 9)
