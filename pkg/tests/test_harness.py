import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamdenoise.channel_model import GeometricParams, gen_geometric, save_channels
from beamdenoise.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentSpec,
    ResultRow,
    dump_config,
    emit_csv,
    load_config,
    parse_config,
    read_csv,
    run_experiment,
)
from beamdenoise.numerics import RngStream, inverse_unitary_dft


def small(**kw):
    base = dict(M=64, trials=20, snr_grid_db=(0.0, 10.0), q_grid=(0.125,))
    base.update(kw)
    return ExperimentSpec(**base)


class TestConfig:
    def test_empty_gives_defaults(self):
        s = parse_config("")
        assert (s.M, s.K, s.trials, s.cost_c, s.eta) == (256, 16, 10000, 5.0, 0.99)

    def test_negative_cost_names_key(self):
        with pytest.raises(ConfigError, match="cost_c"):
            parse_config("cost_c = -1\n")

    def test_unknown_key_line_number(self):
        with pytest.raises(ConfigError, match=r":3: unknown key 'trails'"):
            parse_config("kind = mse\n# comment\ntrails = 5\n")

    def test_parse_error_line_number(self):
        with pytest.raises(ConfigError, match=r":2:"):
            parse_config("M = 64\njust words\n")

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="trials"):
            parse_config("trials = many\n")

    def test_lists_and_comments(self):
        s = parse_config("kind = roc  # ROC sweep\nsnr_grid_db = -5, 0,10\nq_grid = 0.25\n")
        assert s.kind == "roc" and s.snr_grid_db == (-5.0, 0.0, 10.0) and s.q_grid == (0.25,)

    @pytest.mark.parametrize("text", ["eta = 0\n", "eta = 1.5\n", "trials = 0\n", "kind = fig9\n",
                                      "snr_grid_db =\n", "q_grid = 0.1\n", "channel_source = raytrace\n",
                                      "kind = mse\nmethods = sure_st\n", "K = 300\n"])
    def test_rejects_out_of_range(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("kind = activity\nseed = 7\n")
        assert load_config(p).seed == 7
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.cfg")

    @settings(max_examples=60, deadline=None)
    @given(
        st.sampled_from(["mse", "activity", "roc", "cost_sweep", "noise_error_sweep", "ber"]),
        st.lists(st.floats(-30, 40), min_size=1, max_size=5),
        st.lists(st.floats(0.01, 100), min_size=1, max_size=5),
        st.integers(1, 10**6),
        st.floats(0.01, 1.0),
        st.integers(0, 2**63),
    )
    def test_round_trip(self, kind, snrs, costs, trials, eta, seed):
        s = ExperimentSpec(kind=kind, snr_grid_db=tuple(snrs), cost_grid=tuple(costs),
                           trials=trials, eta=eta, seed=seed, q_grid=(1 / 256, 0.5))
        assert parse_config(dump_config(s)) == s


class TestCsv:
    def test_zero_rows(self, tmp_path):
        p = tmp_path / "z.csv"
        emit_csv([], p)
        assert p.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_one_row(self, tmp_path):
        p = tmp_path / "o.csv"
        emit_csv([ResultRow("mse", 10.0, 0.125, 5.0, None, "ls", "mse", 1 / 3, 10, 0)], p)
        lines = p.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1] == "mse,10,0.125,5,,ls,mse,0.333333333,10,0"

    @given(st.lists(st.floats(-1e300, 1e300, allow_nan=False).filter(lambda v: v != 0), min_size=1, max_size=20))
    def test_parse_back(self, values):
        import tempfile, os

        rows = [ResultRow("x", None, None, None, None, "m", "v", v, 1, 0) for v in values]
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "r.csv")
            emit_csv(rows, path)
            back = read_csv(path)
        for r, b in zip(rows, back):
            # Nine significant digits bound the relative error by 5e-9.
            assert abs(b.value - r.value) <= 5e-9 * abs(r.value)


class TestRunExperiment:
    def test_mse_row_count(self):
        s = ExperimentSpec(kind="mse", M=64, trials=5, q_grid=(0.125,))
        rows = run_experiment(s)
        assert len(rows) == 5 * 4
        assert {r.method for r in rows} == {"proposed", "ls", "perfect_detection", "genie_st"}

    @pytest.mark.parametrize("kind,per_point", [("activity", 3), ("roc", 6), ("ber", 5)])
    def test_row_conservation(self, kind, per_point):
        s = small(kind=kind, K=4, n_symbols=8, trials=3, cost_grid=(1.0, 5.0))
        n_points = 2 * (2 if kind == "roc" else 1)
        assert len(run_experiment(s)) == n_points * per_point

    def test_noise_error_rows(self):
        s = small(kind="noise_error_sweep", noise_error_grid=(-0.5, 0.0, 0.5), methods=("proposed", "ls"), trials=3)
        rows = run_experiment(s)
        assert len(rows) == 2 * 3 * 2
        assert [r.noise_err for r in rows[:4]] == [-0.5, -0.5, 0.0, 0.0]

    def test_rows_ordered_by_point_then_method(self):
        rows = run_experiment(small(kind="mse", trials=3))
        keys = [(r.snr_db, r.q) for r in rows]
        assert keys == sorted(keys)
        assert [r.method for r in rows[:4]] == ["proposed", "ls", "perfect_detection", "genie_st"]

    def test_ls_mse_is_noise_power(self):
        rows = run_experiment(ExperimentSpec(kind="mse", M=256, trials=400, snr_grid_db=(5.0,), q_grid=(0.0625,),
                                             methods=("ls",)))
        assert rows[0].value == pytest.approx(1.0, rel=0.05)

    def test_same_seed_same_bytes(self, tmp_path):
        s = small(kind="mse", trials=6)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_experiment(s), a)
        emit_csv(run_experiment(s), b)
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_output(self, tmp_path):
        s = small(kind="activity", trials=9)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_experiment(s, threads=1), a)
        emit_csv(run_experiment(s, threads=3), b)
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_output(self):
        a = run_experiment(small(kind="mse", trials=4, seed=1))
        b = run_experiment(small(kind="mse", trials=4, seed=2))
        assert [r.value for r in a] != [r.value for r in b]

    def test_roc_theory_rows_are_closed_form(self):
        rows = run_experiment(small(kind="roc", trials=2, cost_grid=(5.0,), methods=("theory",)))
        pd_row, pfa_row = rows[0], rows[1]
        assert pd_row.metric == "p_d" and pfa_row.metric == "p_fa"
        q, snr = 0.125, 1.0
        exponent = 1.0 / (1.0 + snr / q)
        assert pd_row.value == pytest.approx(pfa_row.value ** exponent, rel=1e-12)

    def test_geometric_source(self):
        rows = run_experiment(small(kind="mse", channel_source="geometric_nlos", trials=3))
        assert all(r.q is None for r in rows) and len(rows) == 2 * 4

    def test_file_source(self, tmp_path):
        chans = np.stack([inverse_unitary_dft(gen_geometric(GeometricParams(64, L=2), rng=RngStream(5, i)).truth)
                          for i in range(4)])
        path = tmp_path / "ch.bmch"
        save_channels(path, chans)
        rows = run_experiment(small(kind="mse", channel_source=f"file:{path}", trials=5))
        assert len(rows) == 2 * 4
        ls = [r.value for r in rows if r.method == "ls"]
        assert all(v > 0 for v in ls)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            run_experiment(small(channel_source=f"file:{tmp_path / 'nope.bmch'}"))

    def test_file_length_mismatch(self, tmp_path):
        path = tmp_path / "ch.bmch"
        save_channels(path, np.ones((2, 32)))
        with pytest.raises(ConfigError, match="M=32"):
            run_experiment(small(channel_source=f"file:{path}"))

    def test_timing_rows(self):
        s = ExperimentSpec(kind="timing", m_grid=(16, 32), timing_repeats=2)
        rows = run_experiment(s)
        assert [r.metric for r in rows[:2]] == ["wall_s_M16", "wall_s_M32"]
        assert len(rows) == 3 * 2 and all(r.value > 0 for r in rows)

    def test_cost_sweep_points(self):
        rows = run_experiment(small(kind="cost_sweep", cost_grid=(0.5, 5.0), trials=2))
        assert [r.cost_c for r in rows] == [0.5, 5.0, 0.5, 5.0]
