import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qubitarrow import io
from qubitarrow.cli import EXIT_INPUT, main, verdict
from qubitarrow.errors import ParseError
from qubitarrow.measurement import KrausOperator
from qubitarrow.trajectory import SimConfig, reverse_movie, simulate_forward

FIG1 = """\
[simulation]
rabi_period_over_tau = 0.5
tau = 1.0
dt = 0.005
duration = {T}
initial_state = [1.0, 0.0, 0.0]
seed = 42
"""

NO_DRIVE = """\
omega = 0.0
tau = 1.0
dt = 0.005
duration = 2.0
initial_state = [1.0, 0.0, 0.0]
seed = 3
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_movie_round_trip_exact():
    cfg = SimConfig(4 * np.pi, 1.0, 0.005, 0.5, alpha=(0, 0.25j, 1), seed=9)
    for m in (simulate_forward(cfg), reverse_movie(simulate_forward(cfg), "active")):
        back = io.parse_movie(io.format_movie(m))
        assert back.equals(m)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
def test_movie_round_trip_arbitrary_records(rec):
    from qubitarrow.trajectory import replay_record
    m = replay_record((0, 0, 1), np.array(rec), 1.3, 1.0, 0.01)
    assert io.parse_movie(io.format_movie(m)).equals(m)


def test_zero_duration_movie_file(tmp_path):
    m = simulate_forward(SimConfig(1.0, 1.0, 0.01, 0.0))
    text = io.format_movie(m)
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    assert rows == ["t,r,x,y,z", "0,,1,0,0"]
    assert io.parse_movie(text).equals(m)


@pytest.mark.parametrize("mutate,line", [
    (lambda L: L[:6] + ["t,r,x,y"] + L[7:], 7),
    (lambda L: L[:8] + ["0.005,abc,1,0,0"] + L[9:], 9),
    (lambda L: L[:9] + ["0.01,1,2,0,0"] + L[10:], 10),
    (lambda L: L[:8] + ["0.005,1,1,0"] + L[9:], 9),
    (lambda L: L[:8] + ["0.7,1,1,0,0"] + L[9:], 9),
    (lambda L: L[:-1] + [L[-1].replace(",,", ",3,")], None),
])
def test_movie_parse_errors_carry_line(mutate, line):
    m = simulate_forward(SimConfig(0.0, 1.0, 0.005, 0.02))
    lines = io.format_movie(m).splitlines()
    bad = "\n".join(mutate(lines)) + "\n"
    with pytest.raises(ParseError) as info:
        io.parse_movie(bad)
    if line is None:
        line = len(lines)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_missing_header_field():
    text = io.format_movie(simulate_forward(SimConfig(0.0, 1.0, 0.005, 0.01)))
    with pytest.raises(ParseError, match="tau"):
        io.parse_movie("\n".join(l for l in text.splitlines() if not l.startswith("# tau")))


def test_sequence_round_trip_and_errors():
    rng = np.random.default_rng(0)
    seq = [KrausOperator(f"m{i}", rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) for i in range(3)]
    assert io.parse_sequence(io.format_sequence(seq)) == seq
    with pytest.raises(ParseError) as info:
        io.parse_sequence("# c\na 1 0 0 0 0 0 1 0\nb 1 0 0\n")
    assert info.value.line == 3


def test_config_parse_and_round_trip():
    cfg, opts = io.parse_config(FIG1.format(T=2.0) + "\n[ensemble]\nn = 10\nbins = 50\nrange = [-5.0, 12.0]\n")
    assert cfg.omega == pytest.approx(4 * np.pi)
    assert opts == {"n": 10, "bins": 50, "range": (-5.0, 12.0)}
    again, opts2 = io.parse_config(io.dump_config(cfg, opts))
    assert again == cfg and opts2 == opts
    alpha_cfg = cfg.with_(alpha=(0.6, 0.1j, 0.8 - 0.2j))
    assert io.parse_config(io.dump_config(alpha_cfg))[0] == alpha_cfg


@pytest.mark.parametrize("text,key", [
    (NO_DRIVE.replace("tau = 1.0\n", ""), "tau"),
    (NO_DRIVE.replace("omega = 0.0\n", ""), "omega"),
    (NO_DRIVE + "rabi_period_over_tau = 0.5\n", "omega"),
    (NO_DRIVE.replace("seed = 3", "seed = 1.5"), "seed"),
    (NO_DRIVE.replace("[1.0, 0.0, 0.0]", "[1.0, 0.0]"), "initial_state"),
    (NO_DRIVE.replace("[1.0, 0.0, 0.0]", "[1.0, 1.0, 0.0]"), "initial_state"),
    (NO_DRIVE + "alpha = [0, 0, 1, 0]\n", "alpha"),
    (NO_DRIVE + "colour = 1\n", "colour"),
    (NO_DRIVE.replace("dt = 0.005", 'dt = "small"'), "dt"),
])
def test_config_errors_name_key(text, key):
    with pytest.raises(io.ConfigError) as info:
        io.parse_config(text)
    assert info.value.key == key and repr(key) in str(info.value)


def test_config_syntax_error():
    with pytest.raises(ParseError):
        io.parse_config("omega = = 1\n")


def test_summary_and_samples_formats():
    text = io.format_summary([("a", 1.5), ("b", None), ("c", 3)])
    assert io.parse_summary(text) == {"a": "1.5", "b": "undefined", "c": "3"}
    x = np.array([0.1, -2.5, 1e-300])
    assert np.array_equal(io.parse_samples(io.format_samples(x)), x)


def test_verdict():
    assert verdict(0.5) == "forward-likely"
    assert verdict(-0.5) == "backward-likely"
    assert verdict(5e-4) == "ambiguous"
    assert verdict(5e-4, epsilon=1e-4) == "forward-likely"


def test_cli_simulate_deterministic(tmp_path):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=1.0))
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", "--config", cfg, "--out", a]) == 0
    assert main(["simulate", "--config", cfg, "--out", b]) == 0
    assert read(a) == read(b)
    man = io.read_manifest(a + ".manifest.json")
    assert man["outputs"]["a.csv"] == io.sha256_file(a)
    assert io.parse_config(man["config"])[0] == io.read_config(cfg)[0]
    c = str(tmp_path / "c.csv")
    main(["simulate", "--config", cfg, "--out", c, "--seed", "43"])
    assert read(c) != read(a)


def test_cli_zero_duration(tmp_path):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=0.0))
    out = str(tmp_path / "m.csv")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    rows = [l for l in open(out).read().splitlines() if not l.startswith("#")]
    assert rows[1:] == ["0,,1,0,0"]


@pytest.mark.parametrize("conv", ["passive", "active"])
def test_cli_reverse_twice_identity(tmp_path, conv):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=0.5))
    m, r, rr = (str(tmp_path / n) for n in ("m.csv", "r.csv", "rr.csv"))
    main(["simulate", "--config", cfg, "--out", m])
    assert main(["reverse", m, "--convention", conv, "--out", r]) == 0
    assert main(["reverse", r, "--convention", conv, "--out", rr]) == 0
    assert read(rr) == read(m)
    fwd, rev = io.read_movie(m), io.read_movie(r)
    if conv == "passive":
        assert np.array_equal(rev.record.samples, -fwd.record.samples[::-1])
    else:
        assert np.array_equal(rev.bloch, -fwd.bloch[::-1])
        assert np.array_equal(rev.record.samples, fwd.record.samples[::-1])


def test_cli_analyze(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=2.0))
    m, r = str(tmp_path / "m.csv"), str(tmp_path / "r.csv")
    main(["simulate", "--config", cfg, "--out", m])
    main(["reverse", m, "--out", r])
    capsys.readouterr()
    assert main(["analyze", m]) == 0
    f = io.parse_summary(capsys.readouterr().out)
    main(["analyze", r])
    b = io.parse_summary(capsys.readouterr().out)
    assert abs(float(f["lnR"]) + float(b["lnR"])) < 1e-10
    assert {f["verdict"], b["verdict"]} == {"forward-likely", "backward-likely"}
    assert float(f["max_residual"]) == pytest.approx(float(b["max_residual"]), rel=1e-9)


def test_cli_analyze_empty_record(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=0.0))
    m = str(tmp_path / "m.csv")
    main(["simulate", "--config", cfg, "--out", m])
    capsys.readouterr()
    main(["analyze", m])
    rep = io.parse_summary(capsys.readouterr().out)
    assert float(rep["lnR"]) == 0.0 and rep["verdict"] == "ambiguous"
    assert rep["max_residual"] == "undefined"


def test_cli_analyze_parse_error(tmp_path, capsys):
    head = "# direction = forward\n# omega = 0\n# tau = 1\n# dt = 0.1\n# alpha = 0 0 0 0 1 0\n"
    bad = write(tmp_path, "bad.csv", head + "t,r,x,y,z\n0,1,1,0,0\n0.1,1,nan,0,0\n0.2,,1,0,0\n")
    assert main(["analyze", bad]) == EXIT_INPUT
    assert "line 8" in capsys.readouterr().err


def test_cli_ensemble(tmp_path):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=2.0))
    d1, d2 = str(tmp_path / "e1"), str(tmp_path / "e2")
    assert main(["ensemble", "--config", cfg, "--n", "3000", "--bins", "60", "--out", d1]) == 0
    assert main(["ensemble", "--config", cfg, "--n", "3000", "--bins", "60", "--out", d2, "--workers", "3"]) == 0
    for name in ("histogram.txt", "summary.txt", "samples.txt"):
        assert read(os.path.join(d1, name)) == read(os.path.join(d2, name))
    s = io.parse_summary(open(os.path.join(d1, "summary.txt")).read())
    assert float(s["mean"]) == pytest.approx(3.0, abs=0.25)
    assert float(s["p_err_theory"]) == pytest.approx(0.0668, abs=1e-4)
    rows = [l for l in open(os.path.join(d1, "histogram.txt")) if not l.startswith("#")]
    assert rows[0].strip() == "center,density" and len(rows) == 61
    man = json.load(open(os.path.join(d1, "manifest.json")))
    assert set(man["outputs"]) == {"histogram.txt", "summary.txt", "samples.txt"}


def test_cli_ensemble_sweep_and_single(tmp_path):
    cfg = write(tmp_path, "c.toml", FIG1.format(T=2.0))
    d = str(tmp_path / "sweep")
    assert main(["ensemble", "--config", cfg, "--n", "200", "--out", d,
                 "--duration", "0.02", "0.2", "1.18", "2.0"]) == 0
    hists = sorted(f for f in os.listdir(d) if f.startswith("histogram"))
    assert len(hists) == 4
    d1 = str(tmp_path / "one")
    main(["ensemble", "--config", cfg, "--n", "1", "--out", d1])
    assert io.parse_summary(open(os.path.join(d1, "summary.txt")).read())["variance"] == "undefined"


def test_cli_ensemble_no_drive_never_negative(tmp_path):
    cfg = write(tmp_path, "c.toml", NO_DRIVE)
    d = str(tmp_path / "nd")
    assert main(["ensemble", "--config", cfg, "--n", "4000", "--out", d]) == 0
    s = io.parse_summary(open(os.path.join(d, "summary.txt")).read())
    assert float(s["p_err_empirical"]) == 0.0


def test_cli_config_missing_key(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", NO_DRIVE.replace("seed = 3\n", ""))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == EXIT_INPUT
    assert "'seed'" in capsys.readouterr().err


def test_cli_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2


def test_cli_janus(tmp_path, capsys):
    th = 0.7
    c, s = float(np.cos(th / 2)), float(np.sin(th / 2))
    # U_y(theta) = exp(-i theta sigma_y / 2) = [[c, -s], [s, c]]
    f = write(tmp_path, "u.txt", f"u {c!r} 0 {-s!r} 0 {s!r} 0 {c!r} 0\n")
    assert main(["janus", f, "--state", "0.6,0,0.8"]) == 0
    out = capsys.readouterr().out
    seq_text = "\n".join(l for l in out.splitlines() if "=" not in l)
    back = io.parse_sequence(seq_text)
    assert [op.label for op in back] == ["u'"]
    assert np.allclose(back[0].matrix, [[c, s], [-s, c]], atol=1e-15)
    rep = io.parse_summary(out)
    assert float(rep["restoration_deficit"]) < 1e-12
    assert abs(float(rep["lnR"])) < 1e-12


def test_cli_janus_projector(tmp_path, capsys):
    f = write(tmp_path, "p.txt", "a 1 0 0 0 0 0 0.5 0\np 1 0 0 0 0 0 0 0\n")
    assert main(["janus", f]) == EXIT_INPUT
    assert "operator 1" in capsys.readouterr().err


def test_cli_janus_mixed_state(tmp_path):
    f = write(tmp_path, "a.txt", "a 1 0 0 0 0 0 0.5 0\n")
    assert main(["janus", f, "--state", "0.5,0,0"]) == EXIT_INPUT
