import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdcavity.errors import EmptyDataset, ParseError
from qdcavity.fileio import (
    atomic_write,
    fit_config_from_config,
    fit_params_from_config,
    design_from_config,
    fmt,
    format_uncertainty,
    load_dataset,
    load_rf_series,
    read_json,
    save_dataset,
    save_rf_series,
    write_json,
)
from qdcavity.fitting import SpectrumDataset, Sweep
from qdcavity.rf import RfParams, synthetic_series

HEADER = "detuning_ueV,omega_R_ueV,counts\n"

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
counts = st.floats(0, 1e7, allow_nan=False, allow_infinity=False)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_two_row_file(tmp_path):
    p = write(tmp_path / "a.csv", HEADER + "0.5,-3,10\n0.5,4,12\n")
    ds = load_dataset(p)
    assert len(ds.sweeps) == 1
    assert ds.sweeps[0].delta == 0.5
    assert list(ds.sweeps[0].nu) == [-3.0, 4.0]
    assert list(ds.sweeps[0].counts) == [10.0, 12.0]


def test_comments_grouping_and_sorting(tmp_path):
    text = (HEADER + "# a comment\n\n"
            "5,2,1\n-5,0,2\n5,-1,3\n-5,-2,4\n5,0.5,5\n")
    ds = load_dataset(write(tmp_path / "b.csv", text))
    assert ds.deltas == [5.0, -5.0]
    assert list(ds.sweeps[0].nu) == [-1.0, 0.5, 2.0]
    assert list(ds.sweeps[0].counts) == [3.0, 5.0, 1.0]
    assert list(ds.sweeps[1].counts) == [4.0, 2.0]


def test_malformed_field_cites_line(tmp_path):
    rows = ["0,%d,1\n" % i for i in range(5)]
    rows[5 - 1] = "0,4,abc\n"
    # header is line 1, a comment line 2, so the fifth data row is line 7
    p = write(tmp_path / "c.csv", HEADER + "# note\n" + "".join(rows))
    with pytest.raises(ParseError) as info:
        load_dataset(p)
    assert info.value.line == 7
    assert "7" in str(info.value)


@pytest.mark.parametrize("text, exc", [
    ("", EmptyDataset),
    (HEADER, EmptyDataset),
    ("a,b,c\n1,2,3\n", ParseError),
    (HEADER + "1,2\n", ParseError),
    (HEADER + "1,2,-3\n", ParseError),
    (HEADER + "1,2,inf\n", ParseError),
    (HEADER + "1,2,3\n1,2,4\n", ParseError),
])
def test_load_errors(tmp_path, text, exc):
    with pytest.raises(exc):
        load_dataset(write(tmp_path / "d.csv", text))


@given(st.lists(st.tuples(finite, st.lists(st.tuples(finite, counts), min_size=1,
                                           max_size=6)), min_size=1, max_size=4))
def test_round_trip_fifteen_digits(tmp_path_factory, raw):
    sweeps, seen = [], set()
    for d, pts in raw:
        d = float(fmt(d))
        if d in seen:
            continue
        seen.add(d)
        pts = {float(fmt(nu)): float(fmt(c)) for nu, c in pts}
        nu = np.array(sorted(pts))
        sweeps.append(Sweep(d, nu, np.array([pts[x] for x in nu])))
    ds = SpectrumDataset(sweeps)
    path = tmp_path_factory.mktemp("rt") / "x.csv"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.deltas == ds.deltas
    for a, b in zip(ds.sweeps, back.sweeps):
        assert np.array_equal(a.nu, b.nu) and np.array_equal(a.counts, b.counts)
    first = path.read_bytes()
    save_dataset(back, path)
    assert path.read_bytes() == first


def test_atomic_write_leaves_nothing_on_error(tmp_path):
    target = tmp_path / "out.csv"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert os.listdir(tmp_path) == []
    target.write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_write(target) as fh:
            fh.write("new")
            raise RuntimeError("boom")
    assert target.read_text() == "old"


def test_line_endings_are_lf(tmp_path):
    ds = SpectrumDataset([Sweep(0.0, [1.0, 2.0], [3.0, 4.0])])
    save_dataset(ds, tmp_path / "e.csv")
    assert b"\r" not in (tmp_path / "e.csv").read_bytes()


@pytest.mark.parametrize("value, sigma, text", [
    (11.051, 0.021, "11.05(2)"),
    (11.05, 0.02, "11.05(2)"),
    (19.48, 0.09, "19.48(9)"),
    (2.28, 0.04, "2.28(4)"),
    (6.15, 0.04, "6.15(4)"),
    (1.26, 0.05, "1.26(5)"),
    (7.08, 0.04, "7.08(4)"),
    (5.4979, 0.10, "5.5(1)"),
    (9.049, 0.27, "9.0(3)"),
    (3.84, 0.04, "3.84(4)"),
    (7.0, 0.5, "7.0(5)"),
    (111.0, 9.0, "111(9)"),
    (1234.0, 56.0, "1230(60)"),
    (2.0, 0.096, "2.0(1)"),
])
def test_format_uncertainty(value, sigma, text):
    assert format_uncertainty(value, sigma) == text


def test_format_without_sigma():
    assert format_uncertainty(11.05, 0.0) == "11.05"
    assert "(" not in format_uncertainty(3.5, 0.0)


def test_rf_round_trip_and_label(tmp_path):
    s = synthetic_series(RfParams(0.8, 0.8, 1.5, beta=4e4), np.geomspace(1, 100, 6), 0.064,
                         0.01, 0.02, seed=0)
    s.flag[0] = True
    path = tmp_path / "QD3.csv"
    save_rf_series(s, path)
    back = load_rf_series(path)
    assert back.qd_label == "QD3"
    assert np.array_equal(back.flag, s.flag)
    assert np.allclose(back.intensity, s.intensity, rtol=1e-14)
    assert np.allclose(back.linewidth_sigma, 0.02)
    assert load_rf_series(path, "other").qd_label == "other"


def test_rf_minimal_and_errors(tmp_path):
    p = write(tmp_path / "r.csv", "power_nW,intensity_counts,linewidth_ueV\n1,2,3\n2,3,4\n")
    s = load_rf_series(p)
    assert not s.flag.any() and s.power.size == 2
    with pytest.raises(ParseError):
        load_rf_series(write(tmp_path / "r2.csv",
                             "power_nW,intensity_counts,linewidth_ueV,color\n1,2,3,4\n"))
    with pytest.raises(ParseError):
        load_rf_series(write(tmp_path / "r3.csv",
                             "power_nW,intensity_counts,linewidth_ueV\n-1,2,3\n"))


def test_json_helpers(tmp_path):
    write_json({"a": np.float64(1.5), "b": np.arange(3)}, tmp_path / "j.json")
    assert read_json(tmp_path / "j.json") == {"a": 1.5, "b": [0, 1, 2]}
    with pytest.raises(ParseError) as info:
        read_json(write(tmp_path / "bad.json", '{\n"a": 1,\n}'))
    assert info.value.line == 3


CONFIG = {
    "model": "M2", "mechanism": "spectral_wandering",
    "params": {"g": 11.13, "kappa": 19.84, "gamma_g": 1.38, "gamma_big": 1.26, "scale": 5e5},
    "omega_x": 0.3, "a_c": 2e4, "b0": 10.0,
    "design": {"detunings": [-5, 0, 5], "probe": {"start": -60, "stop": 60, "num": 11}},
    "fit": {"fixed": ["b0"], "bounds": {"omega_x": [-2, None]}, "multistart": 2},
}


def test_config_parsing():
    fp = fit_params_from_config(CONFIG)
    assert fp.params.gamma_sw == 1.26 and fp.gamma_big == 1.26
    design = design_from_config(CONFIG)
    assert [d for d, _ in design] == [-5.0, 0.0, 5.0] and design[0][1].size == 11
    fc = fit_config_from_config(CONFIG)
    assert fc.bound("omega_x") == (-2.0, np.inf)
    assert "b0" not in fc.free_names() and fc.multistart == 2
    per = fit_config_from_config({**CONFIG, "fit": {"per_sweep_background": True}}, 3)
    assert per.init.a_c == (2e4, 2e4, 2e4)
    explicit = design_from_config({"design": {"sweeps": [{"detuning": 1, "omega_R": [0, 1]}]}})
    assert explicit[0][0] == 1.0


def test_config_errors():
    from qdcavity.errors import DomainError

    with pytest.raises(DomainError):
        fit_params_from_config({"params": {"g": 1.0}})
    with pytest.raises(DomainError):
        fit_params_from_config({"params": {"g": 1, "kappa": 1, "gamma_g": 1, "zeta": 2}})
    with pytest.raises(DomainError):
        fit_config_from_config({**CONFIG, "fit": {"speed": "fast"}})
    with pytest.raises(DomainError):
        design_from_config({})
    json.dumps(CONFIG)
