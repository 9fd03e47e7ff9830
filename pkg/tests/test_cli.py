import json

import pytest
import tomlkit
from boundary_lab.cli import main
from boundary_lab.walks import CSV_COLUMNS
from click.testing import CliRunner


def invoke(args, **kwargs):
    runner = CliRunner()
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


def test_smoke():
    result = invoke(["--help"])
    assert result.exit_code == 0
    assert "verify-paper" in result.output


def test_spp_decided():
    result = invoke(["spp", "--poly", "x^2 + x + 1"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["status"] == "no_spp"
    assert out["certificate"]["kind"] == "generalized_cyclotomic"

    result = invoke(["spp", "--poly", "x^2 - x - 1"])
    assert result.exit_code == 0
    assert json.loads(result.output)["N"] == 2


def test_spp_undecided():
    result = invoke(["spp", "--poly", "1 + x1 - x2", "--box", "2"])
    assert result.exit_code == 2
    out = json.loads(result.output)
    assert out["status"] == "unknown"
    assert out["certificate"]["bound"] == 3**9 - 1


def test_spp_bad_input():
    result = invoke(["spp", "--poly", "x +"])
    assert result.exit_code == 1
    result = invoke(["spp", "--poly", "x + y", "--vars", "x"])
    assert result.exit_code == 1
    result = invoke(["--threads", "0", "spp", "--poly", "x"])
    assert result.exit_code == 1


def test_threads_from_env():
    result = invoke(["spp", "--poly", "x - 2"], env={"BLAB_THREADS": "2"})
    assert result.exit_code == 0
    result = invoke(["spp", "--poly", "x - 2"], env={"BLAB_THREADS": "two"})
    assert result.exit_code == 1


def test_cube_torsion_demo():
    result = invoke(["cube", "--group", "lamp-z2-z2", "--demo", "torsion"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["group"] == "lamp-z2-z2"
    assert out["independent"] is False
    assert sorted(out["witness"]) == [[0, 1], [1, 0]]

    result = invoke(["cube", "--group", "g3-restricted", "--demo", "torsion"])
    assert result.exit_code == 1


def test_cube_restricted():
    result = invoke(["cube", "--group", "g3-restricted", "--k", "6", "--seed", "2"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["independent"] is True
    assert out["lattice"] == [3, 3, 3]
    assert out["n"] == 6

    result = invoke(
        ["cube", "--group", "g3-restricted", "--k", "6", "--method", "flat_combination"]
    )
    assert json.loads(result.output)["method"] == "flat_combination"


def test_cube_commuting_family():
    result = invoke(["cube", "--group", "g3-restricted", "--commuting", "2", "--N", "3"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["independent"] is True
    assert out["n"] == 8
    assert out["constant"] == 9.5


def test_cube_lamplighter_spacing():
    result = invoke(["cube", "--group", "lamplighter-z2", "--k", "5"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["lamp_spacing"] == 0
    assert out["independent"] is True


def test_cube_unknown_group():
    result = invoke(["cube", "--group", "no-such-group"])
    assert result.exit_code == 1
    assert "no such file or packaged example" in result.output


def test_walk_csv_is_reproducible(tmp_path):
    args = ["walk", "--group", "lamplighter-z2", "--n", "20,40", "--trials", "2", "--seed", "4"]
    first = invoke(args + ["--csv", str(tmp_path / "a.csv")])
    second = invoke(args + ["--csv", str(tmp_path / "b.csv"), "--threads", "1"])
    assert first.exit_code == 0
    assert second.exit_code == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    lines = a.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 5

    summary = json.loads(first.output)
    assert summary["seed"] == 4
    assert [s["n"] for s in summary["stats"]] == [20, 40]
    assert summary["measure"]["powers"] == {"1": "1/2", "2": "1/2"}


def test_walk_from_config(tmp_path):
    config = tmp_path / "walk.toml"
    config.write_text('group = "lamplighter-z2"\nn = [30]\ntrials = 3\nseed = 8\n')
    out = tmp_path / "summary.json"
    result = invoke(
        ["walk", "--config", str(config), "--json", str(out), "--swap-check"]
    )
    assert result.exit_code == 0
    rows = result.output.splitlines()
    assert rows[0] == ",".join(CSV_COLUMNS)
    assert len(rows) == 4
    summary = json.loads(out.read_text())
    assert len(summary["swap_checks"]) == 3
    assert all(s["distinct"] for s in summary["swap_checks"])


def walk_summary(tmp_path, *args):
    out = tmp_path / "summary.json"
    result = invoke(["walk", *args, "--csv", str(tmp_path / "rows.csv"), "--json", str(out)])
    assert result.exit_code == 0
    return json.loads(out.read_text())


def lower_bound_rates(summary):
    return {s["n"]: s["lower_bound_rate"] for s in summary["stats"]}


@pytest.mark.parametrize("group", ["baumslag-tf", "g3-restricted"])
def test_rate_persists_on_transient_projections(tmp_path, group):
    summary = walk_summary(
        tmp_path, "--group", group, "--n", "500,1000,2000,4000", "--trials", "200", "--seed", "1"
    )
    rate = lower_bound_rates(summary)
    assert all(r > 0 for r in rate.values())
    assert rate[4000] >= 0.8 * rate[1000]


def test_rate_decays_on_a_recurrent_projection(tmp_path):
    # the range of a walk on Z^2 grows like n / log n, so between 500 and
    # 4000 steps the rate can only fall by about log(500) / log(4000)
    summary = walk_summary(
        tmp_path, "--group", "lamp-z2-z2", "--n", "500,1000,2000,4000", "--trials", "200", "--seed", "1"
    )
    rate = lower_bound_rates(summary)
    assert rate[500] > rate[1000] > rate[2000] > rate[4000] > 0
    assert rate[4000] / rate[500] < 0.85


def test_swap_checks_on_restricted_group(tmp_path):
    summary = walk_summary(
        tmp_path, "--group", "g3-restricted", "--n", "1500", "--trials", "50", "--seed", "3", "--swap-check"
    )
    checks = summary["swap_checks"]
    assert [c["trial"] for c in checks] == list(range(50))
    assert all(c["k"] <= summary["swap_cap"] for c in checks)
    assert all(c["distinct"] and c["endpoints"] == 2 ** c["k"] for c in checks)


def test_walk_dump_config():
    result = invoke(
        ["walk", "--group", "g3-restricted", "--n", "10,20", "--seed", "3", "--dump-config"]
    )
    assert result.exit_code == 0
    doc = tomlkit.parse(result.output).unwrap()
    assert doc == {
        "group": "g3-restricted",
        "n": [10, 20],
        "trials": 1,
        "seed": 3,
        "endpoint_entropy": False,
    }


def test_walk_bad_config(tmp_path):
    config = tmp_path / "walk.toml"
    config.write_text('group = "lamplighter-z2"\nsteps = 4\n')
    result = invoke(["walk", "--config", str(config)])
    assert result.exit_code == 1
    assert "unknown keys steps" in result.output


def test_verify_paper():
    result = invoke(["verify-paper", "--only", "restricted-relation"])
    assert result.exit_code == 0
    assert result.output.startswith("restricted-relation")
    assert "PASS" in result.output

    result = invoke(["verify-paper", "--only", "restricted-relation", "--tamper"])
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_blocks():
    result = invoke(["blocks", "--input", "restricted-baumslag-blocks"])
    assert result.exit_code == 0
    out = json.loads(result.output)
    assert out["input"] == "restricted-baumslag-blocks"
    assert out["valid"] == 1
    (block,) = out["blocks"]
    assert block["relation"] == "x1 - x2 + 1"
    assert block["ring"]["kind"] == "single_poly"

    result = invoke(["blocks", "--input", "diagonal-blocks", "--word-bound", "3"])
    assert json.loads(result.output)["valid"] == 0
