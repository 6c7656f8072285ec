import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from spincool import cli, io
from spincool.analysis import FitError, FitResult
from spincool.centralspin import TransferCurve
from spincool.cli import EXPERIMENTS, ConfigError, emit_results, load_config, main, parse_config
from spincool.cooling import QscConfig, run_protocol
from spincool.sequences import Envelope

FIGURES = ("fig1d", "fig1e", "fig2a", "fig2b", "fig2cd", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e",
           "supp_t1", "supp_chevron")

finite = st.floats(allow_nan=False, allow_infinity=False)


def envelope(n):
    x = np.linspace(0, 1, n)
    return Envelope(x, x / 3, x / 7, x, 100, "ns")


def test_every_figure_has_a_preset(capsys):
    assert main(["presets", "list"]) == 0
    listed = capsys.readouterr().out.split()
    assert set(FIGURES) <= set(listed)
    for name in FIGURES:
        assert load_config(name).experiment in EXPERIMENTS


def test_unknown_experiment_lists_choices(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('experiment = "unknown"\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert len(EXPERIMENTS) == 10
    assert all(name in err for name in EXPERIMENTS)


@pytest.mark.parametrize("data,field", [
    ({"experiment": "rabi", "qubit": {"osp_fidelity": 2.0}}, "osp_fidelity"),
    ({"experiment": "rabi", "bath": {"tau_corr": 0.0}}, "tau_corr"),
    ({"experiment": "rabi", "qubit": {"t2": 1.0}}, "qubit.t2"),
    ({"experiment": "rabi", "shots": 0}, "shots"),
    ({"experiment": "rabi", "colour": "red"}, "colour"),
])
def test_invalid_parameters_name_the_field(data, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(data)


def test_invalid_sequence_parameter_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "ramsey"\n[sequence]\ntau = { start = 0, stop = 10 }\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "sequence.tau" in capsys.readouterr().err


def test_missing_config_is_config_error(capsys):
    assert main(["run", "no_such_preset_or_file"]) == 2
    assert "presets" in capsys.readouterr().err


def test_fit_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise FitError("synthetic", 1.0)

    monkeypatch.setattr(cli, "fit_decay", boom)
    assert main(["run", "supp_t1", "--shots", "50", "--out", str(tmp_path)]) == 3


def test_qsc_preset_outputs_cooled_ramsey(tmp_path, capsys):
    assert main(["run", "fig3b_qsc", "--shots", "300", "--out", str(tmp_path)]) == 0
    assert "T2*" in capsys.readouterr().out
    env = io.read_envelope(tmp_path / "envelope.csv")
    assert len(env) == 201
    header, rows = io.read_rows(tmp_path / "fit.csv")
    assert tuple(header) == io.FIT_COLUMNS
    t = {r[1]: float(r[2]) for r in rows}["T"]
    assert 450.0 < t < 1000.0
    header, _ = io.read_rows(tmp_path / "trace.csv")
    assert tuple(header) == io.TRACE_COLUMNS


def test_same_seed_identical_files(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "fig2cd", "--shots", "100", "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_seed_override_changes_output(tmp_path):
    main(["run", "fig1e", "--shots", "100", "--out", str(tmp_path / "a")])
    main(["run", "fig1e", "--shots", "100", "--seed", "99", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "envelope.csv").read_bytes() != (tmp_path / "b" / "envelope.csv").read_bytes()


def test_config_file_with_explicit_grid(tmp_path):
    cfg = tmp_path / "ramsey.toml"
    cfg.write_text('experiment = "ramsey"\nshots = 200\nseed = 4\n[bath]\nsigma_static = 2.9\n'
                   '[sequence]\ntau = [0.0, 50.0, 100.0, 150.0, 200.0, 250.0]\n[fit]\nmodel = "gaussian"\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert len((tmp_path / "o" / "envelope.csv").read_text().splitlines()) == 7


def test_empty_envelope_writes_header_only(tmp_path):
    path = emit_results(Envelope.empty(), tmp_path / "e.csv")
    assert path.read_text() == ",".join(io.ENVELOPE_COLUMNS) + "\n"
    assert len(io.read_envelope(path)) == 0


def test_three_points_four_lines(tmp_path):
    text = emit_results(envelope(3), tmp_path / "e.csv").read_text()
    assert text.endswith("\n")
    assert len(text.splitlines()) == 4


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.tuples(finite, finite, finite, finite), min_size=1, max_size=10),
       st.integers(1, 10 ** 9))
def test_envelope_round_trip_full_precision(tmp_path, rows, shots):
    cols = [np.array(c) for c in zip(*rows)]
    env = Envelope(*cols, shots)
    back = io.read_envelope(emit_results(env, tmp_path / "rt.csv"))
    for name in ("sweep", "top", "bottom", "visibility"):
        np.testing.assert_array_equal(getattr(back, name), getattr(env, name))
    assert back.shots == shots


def test_emit_other_result_types(tmp_path):
    fit = FitResult("gaussian", {"T": 1.0 / 3.0}, {"T": 0.1}, 0.5, 10)
    _, rows = io.read_rows(emit_results(fit, tmp_path / "f.csv"))
    assert float(rows[0][2]) == 1.0 / 3.0
    _, rows = io.read_rows(emit_results([fit, fit], tmp_path / "ff.csv"))
    assert len(rows) == 2
    trace = run_protocol(QscConfig(n_cycles=2), 1, n_traj=10, rng=0)
    header, rows = io.read_rows(emit_results(trace, tmp_path / "t.csv"))
    assert tuple(header) == io.TRACE_COLUMNS and len(rows) == 2
    header, _ = io.read_rows(emit_results(TransferCurve(np.ones(2), np.zeros(2)), tmp_path / "x.csv"))
    assert tuple(header) == io.TRANSFER_COLUMNS
    with pytest.raises(TypeError):
        emit_results(object(), tmp_path / "bad.csv")
