import datetime as dt
import gzip
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from histhawkes import (
    ChainConfig,
    ConfigError,
    CountSeries,
    DthpModel,
    HistogramKernel,
    InvalidDataError,
    PriorConfig,
    SampleTrace,
    load_counts,
    rolling_smooth,
    run_parallel,
    save_counts,
    split_phases,
)
from histhawkes.config import RunConfig, config_hash, template
from histhawkes.io import load_model, read_trace, save_model, write_trace


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCounts:
    def test_zero_grid(self, tmp_path):
        s = load_counts(write(tmp_path, "0,0\n" * 10))
        assert (s.K, s.T) == (2, 10) and not s.counts.any()

    def test_dated_header(self, tmp_path):
        s = load_counts(write(tmp_path, "date,UK,US\n2020-03-01,1,2\n2020-03-02,3,4\n"))
        assert s.labels == ("UK", "US") and s.start_date == dt.date(2020, 3, 1)
        assert s.counts.tolist() == [[1, 3], [2, 4]]

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("1,2\n3,-1\n", "line 2"),
            ("1,2\n3,1.5\n", "non-integer"),
            ("1,2\n3\n", "line 2"),
            ("date,a\n2020-01-01,1\n2020-01-01,2\n", "duplicate"),
            ("date,a\n2020-01-02,1\n2020-01-01,2\n", "out of order"),
            ("date,a\n2020-01-01,1\n2020-01-03,2\n", "missing"),
            ("date,a\nnot-a-date,1\n", "date"),
            ("", "empty"),
        ],
    )
    def test_errors_name_the_problem(self, tmp_path, text, fragment):
        with pytest.raises(InvalidDataError, match=fragment):
            load_counts(write(tmp_path, text))

    def test_negative_reports_row(self, tmp_path):
        with pytest.raises(InvalidDataError, match="line 3"):
            load_counts(write(tmp_path, "a,b\n1,2\n3,-4\n"))

    def test_column_selection(self, tmp_path):
        p = write(tmp_path, "date,a,b,c\n2020-01-01,1,2,3\n2020-01-02,4,5,6\n")
        s = load_counts(p, columns=["c", "a"])
        assert s.labels == ("c", "a") and s.counts.tolist() == [[3, 6], [1, 4]]

    def test_real_counts_opt_in(self, tmp_path):
        assert load_counts(write(tmp_path, "0.5\n1.5\n"), allow_real=True).counts.tolist() == [[0.5, 1.5]]

    @pytest.mark.parametrize(
        "text",
        ["1,2\n3,4\n", "a,b\n1,2\n3,4\n", "date,a,b\n2021-12-31,1,2\n2022-01-01,3,4\n"],
    )
    def test_canonical_round_trip(self, tmp_path, text):
        src = write(tmp_path, text)
        save_counts(load_counts(src), tmp_path / "out.csv")
        assert (tmp_path / "out.csv").read_bytes() == src.read_bytes()


class TestSmoothing:
    def test_constant_unchanged(self):
        s = CountSeries([[4] * 20])
        assert rolling_smooth(s, 7) == s

    def test_window_one_is_identity(self):
        s = CountSeries([[1, 5, 2]])
        assert rolling_smooth(s, 1) == s

    def test_spike(self):
        y = [0] * 15
        y[7] = 7
        out = rolling_smooth(CountSeries([y]), 7).counts[0]
        assert out[7] == 1 and out[4] == 1 and out[10] == 1 and out[3] == 0

    def test_round_half_up(self):
        # day 0 sees days 0..1 with window 3: (1 + 2) / 2 = 1.5 -> 2
        assert rolling_smooth(CountSeries([[1, 2, 2]]), 3).counts[0, 0] == 2

    def test_real_valued_mode(self):
        out = rolling_smooth(CountSeries([[1, 2, 2]]), 3, round_counts=False)
        assert out.counts[0].tolist() == pytest.approx([1.5, 5 / 3, 2.0])
        assert out.allow_real

    def test_window_longer_than_series(self):
        with pytest.raises(ValueError):
            rolling_smooth(CountSeries([[1, 2]]), 7)

    @given(st.lists(st.integers(0, 50), min_size=7, max_size=40), st.integers(1, 7))
    def test_matches_direct_average(self, y, w):
        out = rolling_smooth(CountSeries([y]), w).counts[0]
        T = len(y)
        for t in range(T):
            window = y[max(0, t - (w - 1) // 2) : min(T, t + w // 2 + 1)]
            assert out[t] == int(np.floor(sum(window) / len(window) + 0.5))


class TestPhases:
    def test_no_boundaries(self):
        s = CountSeries([[1, 2, 3]])
        assert split_phases(s) == [s]

    def test_boundary_starts_new_phase(self):
        s = CountSeries([list(range(20))])
        a, b = split_phases(s, (10,))
        assert (a.T, b.T) == (9, 11) and b.counts[0, 0] == 9

    @given(st.integers(2, 40), st.data())
    def test_concatenation_identity(self, T, data):
        bounds = sorted(data.draw(st.sets(st.integers(2, T), max_size=4))) if T >= 2 else []
        s = CountSeries([list(range(T))])
        parts = split_phases(s, bounds)
        assert np.concatenate([p.counts for p in parts], axis=1).tolist() == s.counts.tolist()

    def test_dates_follow_phase(self):
        s = CountSeries([[1, 2, 3, 4]], start_date=dt.date(2020, 1, 1))
        assert split_phases(s, (3,))[1].start_date == dt.date(2020, 1, 3)

    @pytest.mark.parametrize("bounds", [(1,), (5, 5), (7, 3), (21,)])
    def test_invalid_boundaries(self, bounds):
        with pytest.raises(ValueError):
            split_phases(CountSeries([list(range(20))]), bounds)


class TestTraceFiles:
    @pytest.mark.parametrize("family", ["histogram", "geometric"])
    def test_round_trip(self, tmp_path, family):
        data = CountSeries(np.random.default_rng(0).poisson(2, size=(2, 40)))
        tr = run_parallel(data, PriorConfig(), ChainConfig(iterations=30, burn_in=10, n_chains=1, s_max=[[3, 4], [5, 2]]), family=family)
        write_trace(tr, tmp_path / "c.jsonl.gz", {"seed": 0})
        back = read_trace(tmp_path / "c.jsonl.gz")
        np.testing.assert_array_equal(back.mu, tr.mu)
        np.testing.assert_array_equal(back.alpha, tr.alpha)
        np.testing.assert_allclose(back.masses, tr.masses, rtol=1e-15)
        assert back.acceptance == tr.acceptance and back.fingerprint == tr.fingerprint

    def test_format(self, tmp_path):
        data = CountSeries([[1, 0, 2, 3, 1, 0]])
        tr = run_parallel(data, PriorConfig(), ChainConfig(iterations=4, burn_in=2, n_chains=1, s_max=3))
        write_trace(tr, tmp_path / "c.jsonl.gz")
        lines = gzip.decompress((tmp_path / "c.jsonl.gz").read_bytes()).decode().splitlines()
        header, first = json.loads(lines[0]), json.loads(lines[1])
        assert header["type"] == "header" and len(lines) == 3
        assert set(first) == {"iteration", "mu", "alpha", "kernels"}
        assert set(first["kernels"][0][0]) == {"J", "s", "theta"}

    def test_pooled_trace_rejected(self, tmp_path):
        data = CountSeries([[1, 0, 2, 3]])
        tr = run_parallel(data, PriorConfig(), ChainConfig(iterations=4, burn_in=2, n_chains=2, s_max=2))
        with pytest.raises(ValueError):
            write_trace(tr, tmp_path / "c.jsonl.gz")

    def test_model_round_trip(self, tmp_path, three_bin_truth):
        m = DthpModel([1.0], [[0.9]], [[three_bin_truth]])
        save_model(m, tmp_path / "m.json")
        assert load_model(tmp_path / "m.json").kernels == m.kernels


class TestRunConfig:
    def test_round_trip(self):
        cfg = RunConfig(seed=7, s_max=14, phase_boundaries=[30, 90], smoothing_window=7, prior=PriorConfig("quite_uninformative"))
        assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg

    def test_template_spells_out_defaults(self):
        d = template().to_dict()
        assert d["chain"]["iterations"] == 60_000 and d["chain"]["burn_in"] == 30_000
        assert d["prior"]["setting"] == "relatively_informative" and d["s_max"] == 7
        assert d["simulation"]["model"]["alpha"] == [[0.9]]

    @pytest.mark.parametrize("s_max", [14, 30])
    def test_case_study_memory_lengths(self, s_max):
        assert RunConfig(s_max=s_max).chain_config().s_max == s_max

    @pytest.mark.parametrize(
        "payload",
        [
            {"bogus": 1},
            {"s_max": 0},
            {"data": {"phase_boundaries": [5, 3]}},
            {"data": {"smoothing_window": -1}},
            {"chain": {"iterations": 10, "burn_in": 20}},
            {"chain": {"speed": 3}},
            {"prior": {"setting": "informative"}},
            [],
        ],
    )
    def test_invalid(self, payload):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(payload)

    def test_hash_ignores_locations_and_workers(self):
        a = RunConfig(data_path="/x/a.csv", output_dir="/o1")
        b = RunConfig(data_path="/y/b.csv", output_dir="/o2", chain={"workers": 4})
        assert config_hash(a) == config_hash(b) != config_hash(a.with_seed(1))
