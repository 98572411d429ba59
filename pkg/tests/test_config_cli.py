import json

import pytest
from hypothesis import given, settings, strategies as st

from nlw_morawetz import __version__
from nlw_morawetz.cli import EXIT_FAIL, EXIT_IO, EXIT_PASS, EXIT_USAGE, main
from nlw_morawetz.config import (ConfigError, RunConfig, assign, parse_text, serialize, valid_keys,
                                 validate)
from nlw_morawetz.experiments import REGISTRY

finite = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(lam=st.one_of(st.none(), st.sampled_from([-1.0, 0.0, 1.0])), dr=finite, r_max=finite,
       cfl=st.one_of(st.none(), st.floats(0.05, 0.9)),
       radii=st.one_of(st.none(), st.lists(finite, min_size=1, max_size=5)),
       kind=st.sampled_from([None, "gaussian", "compact", "ground_state"]),
       k=st.one_of(st.none(), st.integers(1, 8)), stride=st.integers(0, 100))
def test_config_round_trip(lam, dr, r_max, cfl, radii, kind, k, stride):
    cfg = RunConfig(experiment="morawetz_identity", lam=lam, dr=dr, r_max=r_max, cfl=cfl,
                    stride=stride)
    cfg.schedule.radii = radii
    cfg.data.kind = kind
    cfg.weight.k = k
    back = parse_text(serialize(cfg))
    assert back == cfg
    assert back.digest() == cfg.digest()


def test_digest_ignores_output_directory():
    a = RunConfig(experiment="l2star_decay", out_dir="/a")
    b = RunConfig(experiment="l2star_decay", out_dir="/b")
    assert a.digest() == b.digest()
    b.dr = 0.01
    assert a.digest() != b.digest()


def test_text_grammar():
    cfg = parse_text('# comment\nexperiment = "equipartition"\nlambda = -1\n'
                     'schedule.radii = [5, 10]\nweight.name = phi\n\n')
    assert cfg.experiment == "equipartition"
    assert cfg.lam == -1.0
    assert cfg.schedule.radii == [5.0, 10.0]
    assert cfg.weight.name == "phi"


@pytest.mark.parametrize("text, key", [("bogus = 1", "bogus"), ("data.colour = 1", "data.colour"),
                                       ("dr = \"x\"", "dr"), ("weight.k = 1.5", "weight.k"),
                                       ("data = 3", "data"), ("no equals sign", "line 1")])
def test_bad_config_names_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_text(text)


@pytest.mark.parametrize("key, value, named", [("dt", 0.05, "dt"), ("dr", -1.0, "dr"),
                                               ("n_dim", 2, "n_dim"), ("data.kind", "square", "data.kind"),
                                               ("weight.R", 0.0, "weight.R"),
                                               ("schedule.radii", [500.0], "schedule.radii")])
def test_validate_names_the_key(key, value, named):
    cfg = RunConfig(experiment="l2star_decay")
    assign(cfg, key, value)
    with pytest.raises(ConfigError, match=named):
        validate(cfg, REGISTRY)


def test_valid_keys_cover_groups():
    keys = valid_keys()
    assert "lambda" in keys and "data.kind" in keys and "schedule.radii" in keys
    assert "lam" not in keys


def test_cli_list_and_version(capsys):
    assert main(["--list"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert all(name in out for name in REGISTRY)
    assert main(["--version"]) == EXIT_PASS
    assert __version__ in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["--experiment", "no_rate_scaling", "--out", out]) == EXIT_PASS
    # post-Huygens outgoing radiation is not exactly zero on the oracle, so this recipe fails
    assert main(["--experiment", "free_asymptotics", "--out", out]) == EXIT_FAIL
    assert main(["--experiment", "nope"]) == EXIT_USAGE
    assert main(["--experiment", "l2star_decay", "--set", "dt=0.5"]) == EXIT_USAGE
    assert main(["--experiment", "l2star_decay", "--set", "novalue"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["--bad-flag"]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "missing.cfg")]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--experiment", "no_rate_scaling", "--out", str(blocker / "sub")]) == EXIT_IO
    err = capsys.readouterr().err
    assert "unknown name 'nope'" in err and "CFL" in err


def test_cli_outputs_are_deterministic(tmp_path):
    runs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        assert main(["--experiment", "no_rate_scaling", "--out", str(d)]) == EXIT_PASS
        runs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    assert runs[0] and runs[0] == runs[1]
    first = next(iter(runs[0].values())).decode()
    assert first.startswith("# nlw-morawetz no_rate_scaling ")
    assert first.splitlines()[1] == "x,value"
    assert "\r" not in first


def test_cli_report_json(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text('experiment = "no_rate_scaling"\nscales = [0.5]\n')
    assert main(["--config", str(cfg), "--out", str(tmp_path)]) == EXIT_PASS
    (report,) = tmp_path.glob("*.report.json")
    doc = json.loads(report.read_text())
    assert doc["schema_version"] == 1 and doc["experiment"] == "no_rate_scaling"
    assert doc["config"]["scales"] == [0.5]
    assert report.name == f"no_rate_scaling-{doc['hash']}.report.json"
    assert all((tmp_path / name).exists() for name in doc["csv"].values())
    assert doc["report"]["verdicts"]


def test_cli_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("NLW_THREADS", "1")
    (tmp_path / "a.cfg").write_text('experiment = "no_rate_scaling"\n')
    (tmp_path / "b.cfg").write_text('experiment = "l2star_decay"\n')
    (tmp_path / "sweep.txt").write_text("# two runs\na.cfg\nb.cfg\n")
    assert main(["--sweep", str(tmp_path / "sweep.txt"), "--out", str(tmp_path / "o")]) == EXIT_PASS
    assert len(list((tmp_path / "o").glob("*.report.json"))) == 2
    (tmp_path / "bad.txt").write_text("missing.cfg\n")
    assert main(["--sweep", str(tmp_path / "bad.txt")]) == EXIT_IO
