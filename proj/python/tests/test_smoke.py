import json

import pytest

import xrl


@pytest.fixture(scope="module")
def mountaincar(tmp_path_factory):
    policy, curve = xrl.train("mountaincar", bins=[30, 30], episodes=3000)
    assert len(curve) == 3000
    replay = xrl.collect(policy, min_steps=3000)
    path = tmp_path_factory.mktemp("mc") / "mc.db"
    xrl.save_replay(replay, path)
    return path


def test_replay_round_trip(mountaincar):
    rs = xrl.load_replay(mountaincar)
    assert len(rs) >= 3000
    assert rs.schema.names == ["position", "velocity"]
    assert rs.action_names == ["push_left", "no_push", "push_right"]
    first = rs.records[0]
    assert first.episode == 0 and first.step == 0


def test_pipeline_and_rules(mountaincar, tmp_path):
    rs = xrl.load_replay(mountaincar)
    ps = xrl.make_limits(rs, 5, "gini")
    assert ps.n_cat == 5
    assert xrl.predicates_dict(ps)["n_cat"] == 5
    result = xrl.run_pipeline(rs, ps, xrl.PipelineConfig(theta=0.7))
    assert len(result.rules) > 0
    assert 0.0 <= result.fidelity.f1 <= 1.0
    assert result.properties.e_len >= result.properties.e_dup
    assert any(line.startswith("I take") for line in result.rules.explain())
    assert result.rules.select(list(rs.records[0].state)) in (0, 1, 2)

    result.rules.save(tmp_path / "rules.json")
    again = xrl.load_rules(tmp_path / "rules.json")
    assert len(again) == len(result.rules)
    assert json.loads((tmp_path / "rules.json").read_text())["weight_kind"] == "w2"

    perf = xrl.evaluate_performance(result.rules, "mountaincar")
    assert len(perf.episodes) == 10


def test_full_inclusion_covers_replay(mountaincar):
    rs = xrl.load_replay(mountaincar)
    ps = xrl.make_limits(rs, 5)
    result = xrl.run_pipeline(rs, ps, xrl.PipelineConfig(theta=1.0))
    assert result.fidelity.e_approx == 0.0


def test_query_helpers(mountaincar):
    rs = xrl.load_replay(mountaincar)
    assert xrl.question_to_sql(rs, "when action = push_right") == "SELECT * FROM replay WHERE action = 2"
    subset = rs.filter_sql("SELECT * FROM replay WHERE velocity > 0")
    assert all(r.state[1] > 0 for r in subset.records)
    with pytest.raises(xrl.ValidationError):
        xrl.validate_sql(rs, "DROP TABLE replay")
    with pytest.raises(xrl.ResolutionError):
        xrl.question_to_sql(rs, "what if altitude > 3")


def test_refine_does_not_worsen(mountaincar):
    rs = xrl.load_replay(mountaincar)
    ps = xrl.make_limits(rs, 4, "median")
    out = xrl.refine(rs, ps, mode="dup", budget=2)
    assert out.e_dup <= out.input_e_dup
    assert "steps" in json.loads(out.trace_json())


def test_qm_and_errors():
    assert xrl.qm_minimize([0, 1, 2, 3], [], 2) == ["--"]
    assert xrl.qm_minimize([5], [], 3) == ["101"]
    with pytest.raises(xrl.ResourceError):
        xrl.qm_minimize([0], [], 21)
    with pytest.raises(xrl.Error):
        xrl.make_limits(xrl.collect(xrl.train("cartpole", episodes=5)[0], 10), 1)


def test_cli_in_process():
    code, out, _ = xrl.run_cli(["--help"])
    assert code == 0 and "explain" in out
    code, _, err = xrl.run_cli(["rules", "--db", "/nonexistent.db"])
    assert code == 1
    assert json.loads(err)["error"] == "error"
