"""Config parsing, command dispatch and exit codes"""

import json

import pytest


def _write_config(tmp_path, **fields):
    fields.setdefault("output", {"directory": str(tmp_path / "out")})
    path = tmp_path / "run.json"
    path.write_text(json.dumps(fields), encoding="utf-8")
    return path


def test_parse_config_defaults():
    """Only the command is required"""
    from cli.config import parse_config

    config = parse_config('{"command": "shape"}')
    assert config.n == 2
    assert config.grid.mode == "axisym"
    assert config.shape.kind == "perturbed"
    assert config.flow.law == "gerhardt"
    assert config.output.formats == ["json", "csv"]
    assert config.family is None


def test_parse_config_names_offending_fields():
    """Unknown and out-of-range fields come back as dotted paths"""
    from cli.config import parse_config
    from core.errors import ConfigError

    with pytest.raises(ConfigError) as info:
        parse_config('{"command": "flow", "flow": {"speed": 1}, "grid": {"resolution": -4}}')
    assert "flow.speed" in info.value.paths
    assert any(p.startswith("grid.resolution") for p in info.value.paths)


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        "[1, 2]",
        b"\xff\xfe",
        '{"command": "shape", "shape": {"kind": "file"}}',
        '{"command": "flow", "flow": {"law": "gerhardt", "k": 0}}',
    ],
)
def test_parse_config_rejects(text):
    """Malformed, non-object and inconsistent configs"""
    from cli.config import parse_config
    from core.errors import ConfigError

    with pytest.raises(ConfigError):
        parse_config(text)


def test_workers_env(monkeypatch):
    """QF_WORKERS overrides the config and must be a positive integer"""
    from cli.config import WORKERS_ENV, parse_config
    from core.errors import ConfigError

    config = parse_config('{"command": "suite", "workers": 3}')
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert config.effective_workers() == 3
    monkeypatch.setenv(WORKERS_ENV, "5")
    assert config.effective_workers() == 5
    for bad in ("zero", "0"):
        monkeypatch.setenv(WORKERS_ENV, bad)
        with pytest.raises(ConfigError):
            config.effective_workers()


def test_shape_eval_writes_record(tmp_path):
    """A sphere record: convex, with its quermass vector and residuals"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path,
        command="shape",
        grid={"resolution": 64},
        shape={"kind": "sphere", "rho0": 0.5},
        output={"directory": str(tmp_path / "out"), "save_shape": True},
    )
    assert main(["-q", "shape", "eval", "--config", str(path)]) == EXIT_OK
    record = json.loads((tmp_path / "out" / "shape.json").read_text())
    assert record["convex"]
    assert set(record["quermass"]["A"]) == {"-1", "0", "1"}
    assert (tmp_path / "out" / "shape.csv").exists()
    assert (tmp_path / "out" / "shape_graph.json").exists()


def test_saved_shape_reloads(tmp_path):
    """A saved graph is a valid `file` shape; a dimension mismatch is a config error"""
    from cli.main import EXIT_CONFIG, EXIT_OK, main

    out = tmp_path / "out"
    first = _write_config(
        tmp_path,
        command="shape",
        grid={"resolution": 32},
        shape={"kind": "sphere"},
        output={"directory": str(out), "save_shape": True, "formats": ["json"]},
    )
    assert main(["-q", "shape", "eval", "--config", str(first)]) == EXIT_OK

    graph = str(out / "shape_graph.json")
    second = _write_config(tmp_path, command="shape", shape={"kind": "file", "path": graph})
    assert main(["-q", "shape", "eval", "--config", str(second)]) == EXIT_OK
    third = _write_config(tmp_path, command="shape", n=3, shape={"kind": "file", "path": graph})
    assert main(["-q", "shape", "eval", "--config", str(third)]) == EXIT_CONFIG


def test_verify_sphere_exit_ok(tmp_path):
    """Spheres satisfy every inequality: exit 0 with JSON and CSV reports"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path, command="verify", grid={"resolution": 64}, shape={"kind": "sphere"}
    )
    assert main(["-q", "verify", "run", "--config", str(path)]) == EXIT_OK
    record = json.loads((tmp_path / "out" / "report.json").read_text())
    assert record["summary"]["all_pass"]
    assert len(record["reports"]) == 1
    assert (tmp_path / "out" / "report.csv").exists()


@pytest.mark.parametrize("formats", [["json"], ["json", "csv"]])
def test_verify_convergence_follows_formats(tmp_path, formats):
    """The convergence table is CSV only and is written only when csv is selected"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path,
        command="verify",
        grid={"resolution": 32},
        shape={"kind": "sphere"},
        convergence={"check": "minkowski_residual", "resolutions": [32, 64, 128]},
        output={"directory": str(tmp_path / "out"), "formats": formats},
    )
    assert main(["-q", "verify", "run", "--config", str(path)]) == EXIT_OK
    record = json.loads((tmp_path / "out" / "report.json").read_text())
    assert record["summary"]["convergence"]["check"] == "minkowski_residual"
    assert (tmp_path / "out" / "convergence.csv").exists() == ("csv" in formats)
    assert (tmp_path / "out" / "report.csv").exists() == ("csv" in formats)


def test_verify_family_with_failure(tmp_path):
    """A family member outside the hemisphere fails the run with exit 1"""
    from cli.main import EXIT_VERIFY_FAILED, main

    path = _write_config(
        tmp_path,
        command="verify",
        family={"rho0": [1.45], "eps": [0.2], "resolutions": [32]},
    )
    assert main(["-q", "verify", "run", "--config", str(path)]) == EXIT_VERIFY_FAILED
    record = json.loads((tmp_path / "out" / "report.json").read_text())
    assert record["summary"]["errors"] == 1


def test_flow_run_writes_trace(tmp_path):
    """A short gerhardt run on a sphere ends at t_max"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path,
        command="flow",
        grid={"resolution": 16},
        shape={"kind": "sphere", "rho0": 0.5},
        flow={
            "law": "gerhardt",
            "k": 1,
            "monitors": [],
            "step": {"dt_init": 1e-3, "adaptive": False},
            "stop": {"t_max": 0.01},
        },
    )
    assert main(["-q", "flow", "run", "--config", str(path)]) == EXIT_OK
    trace = json.loads((tmp_path / "out" / "trace.json").read_text())
    assert trace["stop_reason"] == "t_max"
    assert trace["points"][-1]["t"] == pytest.approx(0.01)
    header = (tmp_path / "out" / "trace.csv").read_text().splitlines()[0]
    assert header.startswith("t,dt")


def test_flow_breakdown_exit_code(tmp_path):
    """Leaving the cone: exit 2, and the partial trace is still written"""
    from cli.main import EXIT_BREAKDOWN, main

    path = _write_config(
        tmp_path,
        command="flow",
        grid={"resolution": 128},
        shape={"kind": "perturbed", "rho0": 1.2, "eps": 0.3, "ell": 6},
        flow={"law": "gerhardt", "k": 2, "monitors": []},
    )
    assert main(["-q", "flow", "run", "--config", str(path)]) == EXIT_BREAKDOWN
    trace = json.loads((tmp_path / "out" / "trace.json").read_text())
    assert trace["stop_reason"] == "breakdown"


def test_xi_dump(tmp_path):
    """Closed-form table on interior sample points"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path, command="xi", xi={"kind": "closed_minkowski_sq", "samples": 10}
    )
    assert main(["-q", "xi", "dump", "--config", str(path)]) == EXIT_OK
    record = json.loads((tmp_path / "out" / "xi.json").read_text())
    assert len(record["s"]) == len(record["xi"]) == 10
    lo, hi = record["domain"]
    assert all(lo < s < hi for s in record["s"])


def test_xi_kind_mismatch_is_config_error(tmp_path):
    """The (2,0) closed forms refuse other pairs"""
    from cli.main import EXIT_CONFIG, main

    path = _write_config(tmp_path, command="xi", xi={"kind": "ode", "k": 1, "l": -1})
    assert main(["-q", "xi", "dump", "--config", str(path)]) == EXIT_CONFIG


def test_malformed_config_exit_code(tmp_path):
    """Unreadable and invalid configs exit 3"""
    from cli.main import EXIT_CONFIG, main

    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["-q", "shape", "eval", "--config", str(bad)]) == EXIT_CONFIG
    missing = tmp_path / "missing.json"
    assert main(["-q", "shape", "eval", "--config", str(missing)]) == EXIT_CONFIG


def test_command_must_match_subcommand(tmp_path):
    """A flow config handed to `shape eval` is refused"""
    from cli.main import EXIT_CONFIG, main

    path = _write_config(tmp_path, command="flow")
    assert main(["-q", "shape", "eval", "--config", str(path)]) == EXIT_CONFIG


def test_out_override(tmp_path):
    """--out replaces the configured output directory"""
    from cli.main import EXIT_OK, main

    path = _write_config(
        tmp_path,
        command="xi",
        xi={"kind": "closed_minkowski_sq", "samples": 5},
        output={"directory": str(tmp_path / "ignored"), "formats": ["csv"]},
    )
    target = tmp_path / "elsewhere"
    assert main(["-q", "xi", "dump", "--config", str(path), "--out", str(target)]) == EXIT_OK
    assert (target / "xi.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_suite_dry_run(tmp_path):
    """The plan is printed and nothing is computed or written"""
    from cli.main import EXIT_OK, main

    path = _write_config(tmp_path, command="suite", suite={"criteria": [1, 2]})
    assert main(["-q", "suite", "--config", str(path), "--dry-run"]) == EXIT_OK
    assert not (tmp_path / "out").exists()


def test_dispatch_suite_small(tmp_path):
    """A cheap criterion through dispatch writes suite.json"""
    from cli.config import parse_config
    from cli.main import EXIT_OK, dispatch

    config = parse_config(
        json.dumps(
            {
                "command": "suite",
                "suite": {"criteria": [2], "samples": 50},
                "output": {"directory": str(tmp_path)},
            }
        )
    )
    assert dispatch(config) == EXIT_OK
    record = json.loads((tmp_path / "suite.json").read_text())
    assert record["criteria"][0]["pass"]


def test_schema_command(tmp_path, capsys):
    """The schema goes to stdout or to --out"""
    from cli.main import EXIT_OK, main

    assert main(["-q", "schema"]) == EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert "command" in schema["properties"]

    target = tmp_path / "schema.json"
    assert main(["-q", "schema", "--out", str(target)]) == EXIT_OK
    assert json.loads(target.read_text())["title"] == "RunConfig"
