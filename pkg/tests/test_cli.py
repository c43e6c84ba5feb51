import json
from pathlib import Path

import jsonschema
import pytest

import backend
from backend.cli import EXIT_BUDGET, EXIT_FAILED, EXIT_INVALID, EXIT_OK, main
from backend.finite_graphs import complete, cycle, write_edge_list

SCHEMA = json.loads((Path(backend.__file__).parent / "schemas" / "envelope.json").read_text(encoding="utf-8"))

PAIR = ["fire-verify", "--group", "z:1", "--cell-set", "explicit:0,1"]
BVT_Z2 = ["--group", "z:2", "--p", "0.2"]


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    envelope = None
    if out.strip().startswith("{"):
        envelope = json.loads(out)
        jsonschema.validate(envelope, SCHEMA)
    return code, envelope, out, err


@pytest.fixture
def c12(tmp_path):
    target = tmp_path / "c12.txt"
    write_edge_list(cycle(12), str(target))
    return str(target)


@pytest.fixture
def k6(tmp_path):
    target = tmp_path / "k6.txt"
    write_edge_list(complete(6), str(target))
    return str(target)


def point_mass_file(tmp_path, name, radius, symbol):
    data = {
        "radius": radius,
        "total": 10,
        "undetermined": 0,
        "entries": [{"hash": symbol, "count": 10, "example_graph": {"vertices": 1, "edges": []}}],
        "provenance": {},
    }
    target = tmp_path / name
    target.write_text(json.dumps(data))
    return str(target)


# --------- fire-verify --------- #

def test_fire_verify_with_oracle(capsys):
    code, env, _, err = run(capsys, PAIR + ["--delta", "0.5", "--samples", "2000", "--oracle"])
    assert code == EXIT_OK
    assert env["command"] == "fire-verify"
    assert env["seed"] == 0
    assert env["config"]["delta"] == 0.5
    result = env["result"]
    assert result["all_pass"]
    assert result["window_size"] == 4
    bound_i = next(b for b in result["bounds"] if b["bound_id"] == "i")
    assert bound_i["bound"] == pytest.approx(0.25)
    assert result["oracle"]["law"]["p_in_pi"] == pytest.approx(0.4375)
    assert result["oracle"]["comparison"]["p_in_pi"]["within_4se"]
    assert "all bounds pass" in err


def test_fire_verify_rejects_vacuous_delta(capsys):
    code, env, _, err = run(capsys, PAIR + ["--delta", "0.6"])
    assert code == EXIT_INVALID
    assert env is None
    assert "(1 − 2δ)" in err


def test_fire_verify_oracle_infeasible(capsys):
    argv = ["fire-verify", "--group", "f:2", "--cell-set", "ball:2", "--delta", "0.1", "--samples", "1000", "--oracle"]
    code, env, _, err = run(capsys, argv)
    assert code == EXIT_BUDGET
    assert "infeasible" in err


def test_fire_verify_needs_enough_samples(capsys):
    code, _, _, _ = run(capsys, PAIR + ["--delta", "0.3", "--samples", "10"])
    assert code == EXIT_INVALID


def test_missing_required_option(capsys):
    code, _, _, err = run(capsys, PAIR)
    assert code == EXIT_INVALID
    assert "--delta" in err


def test_bad_group_text(capsys):
    code, _, _, _ = run(capsys, ["fire-verify", "--group", "q:1", "--cell-set", "ball:1", "--delta", "0.2"])
    assert code == EXIT_INVALID


def test_same_seed_same_bytes(capsys):
    argv = PAIR + ["--delta", "0.3", "--samples", "1500", "--seed", "12"]
    _, _, first, _ = run(capsys, argv)
    _, _, second, _ = run(capsys, argv)
    assert first == second


def test_worker_count_never_changes_payload(capsys):
    argv = ["fire-verify", "--group", "z:2", "--cell-set", "ball:1", "--delta", "0.3", "--samples", "1200"]
    _, _, serial, _ = run(capsys, argv + ["--workers", "1"])
    _, _, parallel, _ = run(capsys, argv + ["--workers", "3"])
    assert serial == parallel


@pytest.mark.slow
@pytest.mark.parametrize(
    "argv",
    [
        PAIR + ["--delta", "0.25", "--samples", "20000"],
        ["bvt", "intensity-check"] + BVT_Z2 + ["--samples", "4000"],
        ["bvt", "nbhd"] + BVT_Z2 + ["--samples", "4000", "--radius", "2"],
        ["bvt", "histogram"] + BVT_Z2 + ["--samples", "4000"],
    ],
)
def test_eight_workers_match_one(capsys, argv):
    _, _, serial, _ = run(capsys, argv + ["--workers", "1"])
    _, _, parallel, _ = run(capsys, argv + ["--workers", "8"])
    assert serial == parallel


# --------- Config --------- #

def test_config_file_fills_missing_flags(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# pair run\ngroup = z:1\ncell-set = explicit:0,1\ndelta = 0.3\nsamples = 1000\nseed = 4\n")
    code, env, _, _ = run(capsys, ["fire-verify", "--config", str(config), "--seed", "5"])
    assert code == EXIT_OK
    assert env["config"]["samples"] == 1000
    assert env["seed"] == 5


def test_config_file_unknown_key(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("colour = blue\n")
    code, _, _, err = run(capsys, PAIR + ["--delta", "0.3", "--config", str(config)])
    assert code == EXIT_INVALID
    assert "colour" in err


def test_csv_only_where_tabular(capsys):
    code, _, _, _ = run(capsys, PAIR + ["--delta", "0.3", "--format", "csv"])
    assert code == EXIT_INVALID


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert backend.__version__ in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(PAIR + ["--delta", "0.3", "--frobnicate"])
    assert info.value.code == EXIT_INVALID


# --------- bvt --------- #

def test_bvt_sample(capsys):
    code, env, _, err = run(capsys, ["bvt", "sample"] + BVT_Z2 + ["--seed", "3"])
    assert code == EXIT_OK
    cells = env["result"]["cells"]
    assert len(cells) == 1
    assert cells[0]["root"] == "0/0"
    assert "center" in err


def test_bvt_intensity_check(capsys):
    code, env, _, _ = run(capsys, ["bvt", "intensity-check"] + BVT_Z2 + ["--samples", "1000"])
    assert code == EXIT_OK
    assert env["result"]["passes"]
    assert "undetermined_fraction" in env["result"]


def test_bvt_rejects_closed_intensity(capsys):
    code, _, _, _ = run(capsys, ["bvt", "intensity-check", "--group", "z:2", "--p", "1.0"])
    assert code == EXIT_INVALID


def test_bvt_histogram_json_and_csv(capsys):
    argv = ["bvt", "histogram", "--group", "z:2", "--p", "0.3", "--rmax", "3", "--samples", "300"]
    code, env, _, _ = run(capsys, argv)
    assert code == EXIT_OK
    result = env["result"]
    assert sum(result["masses"].values()) + result["undetermined_fraction"] == pytest.approx(1.0)

    code, env, out, _ = run(capsys, argv + ["--format", "csv"])
    assert code == EXIT_OK and env is None
    assert out.splitlines()[0] == "size,count,probability"


def test_bvt_nbhd_and_bs_distance(capsys, tmp_path):
    saved = tmp_path / "nbhd.json"
    argv = ["bvt", "nbhd"] + BVT_Z2 + ["--samples", "200", "--radius", "1", "--output", str(saved)]
    code, env, out, _ = run(capsys, argv)
    assert code == EXIT_OK
    assert env["result"]["total"] == 200
    envelope_file = tmp_path / "envelope.json"
    envelope_file.write_text(out)

    code, env, _, _ = run(capsys, ["bs-distance", str(saved), str(envelope_file)])
    assert code == EXIT_OK
    assert env["result"]["tv_distance"] == 0.0
    assert env["result"]["totals"] == [200, 200]


def test_bvt_profile_csv(capsys):
    argv = ["bvt", "profile"] + BVT_Z2 + ["--samples", "10", "--epsilon", "0.5", "--k", "3", "--format", "csv"]
    code, _, out, _ = run(capsys, argv)
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("stream_index,determined,cell_size")
    assert len(out.splitlines()) == 11


def test_bvt_profile_json(capsys):
    argv = ["bvt", "profile"] + BVT_Z2 + ["--samples", "5", "--epsilon", "0.5", "--k", "3"]
    code, env, _, _ = run(capsys, argv)
    assert code == EXIT_OK
    assert len(env["result"]["profiles"]) == 5


# --------- graph --------- #

def test_graph_hyperfinite_cycle(capsys, c12):
    code, env, _, _ = run(capsys, ["graph", "hyperfinite", "--input", c12, "--epsilon", "0.25", "--k", "4"])
    assert code == EXIT_OK
    cert = env["result"]["certificate"]
    assert cert["verdict"] == "yes"
    assert len(cert["witness"]) == 3
    assert env["seed"] is None


def test_graph_hyperfinite_greedy_mode(capsys, c12):
    argv = ["graph", "hyperfinite", "--input", c12, "--epsilon", "0.25", "--k", "4", "--mode", "greedy"]
    code, env, _, _ = run(capsys, argv)
    assert code == EXIT_OK
    assert env["result"]["certificate"]["heuristic"]


def test_graph_exact_budget(capsys, tmp_path):
    target = tmp_path / "c100.txt"
    write_edge_list(cycle(100), str(target))
    code, _, _, err = run(capsys, ["graph", "hyperfinite", "--input", str(target), "--epsilon", "0.05", "--k", "25"])
    assert code == EXIT_BUDGET
    assert "use greedy" in err


def test_graph_malformed_input(capsys, tmp_path):
    target = tmp_path / "bad.txt"
    target.write_text("0 1\n1 two\n")
    code, _, _, err = run(capsys, ["graph", "expansion", "--input", str(target), "--N", "2"])
    assert code == EXIT_INVALID
    assert "line 2" in err


def test_graph_missing_file(capsys, tmp_path):
    code, _, _, _ = run(capsys, ["graph", "expansion", "--input", str(tmp_path / "nope.txt"), "--N", "2"])
    assert code == EXIT_INVALID


def test_graph_expansion(capsys, k6):
    code, env, _, _ = run(capsys, ["graph", "expansion", "--input", k6, "--N", "3"])
    assert code == EXIT_OK
    assert env["result"]["profile"]["kappa"] == "3"
    code, _, out, _ = run(capsys, ["graph", "expansion", "--input", k6, "--N", "3", "--format", "csv"])
    assert out.splitlines()[0] == "size,ratio,witness"


def test_graph_robustness(capsys, k6):
    code, env, _, _ = run(capsys, ["graph", "robustness", "--input", k6, "--kappa", "3", "--N", "3", "--epsilon", "0.1"])
    assert code == EXIT_OK
    assert env["result"]["report"]["holds"]
    assert env["result"]["report"]["threshold"] == pytest.approx(0.2)


def test_graph_robustness_threshold(capsys, k6):
    argv = ["graph", "robustness", "--input", k6, "--kappa", "3", "--N", "3", "--epsilon", "0.25"]
    code, _, _, err = run(capsys, argv)
    assert code == EXIT_INVALID
    assert "κ/(2(1+d)+κ)" in err


def test_graph_generate(capsys, tmp_path):
    target = tmp_path / "q3.txt"
    code, env, _, _ = run(capsys, ["graph", "generate", "--name", "hypercube:3", "--output", str(target)])
    assert code == EXIT_OK
    assert env["result"]["graph"]["edges"] == 12
    assert len([line for line in target.read_text().splitlines() if not line.startswith("#")]) == 12


# --------- bs-distance --------- #

def test_bs_distance_disjoint(capsys, tmp_path):
    a = point_mass_file(tmp_path, "a.json", 2, "aa")
    b = point_mass_file(tmp_path, "b.json", 2, "bb")
    code, env, _, _ = run(capsys, ["bs-distance", a, b])
    assert code == EXIT_OK
    assert env["result"]["tv_distance"] == 1.0


def test_bs_distance_radius_mismatch(capsys, tmp_path):
    a = point_mass_file(tmp_path, "a.json", 2, "aa")
    b = point_mass_file(tmp_path, "b.json", 3, "aa")
    code, _, _, _ = run(capsys, ["bs-distance", a, b])
    assert code == EXIT_INVALID


def test_bs_distance_not_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("radius: 2")
    code, _, _, _ = run(capsys, ["bs-distance", str(bad), str(bad)])
    assert code == EXIT_INVALID
