import json

import pytest

from coopmech.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VERIFY,
    LOG_NAME,
    MANIFEST_NAME,
    load_run_config,
    main,
)
from coopmech.mechanisms.config import ConfigError


def write_config(path, **doc):
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def manifest(run_dir):
    return json.loads((run_dir / MANIFEST_NAME).read_text())


def test_minimal_run(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="prisoners", mechanism="no_mechanism",
                       roster=["AlwaysDefect"], repeats=1)
    assert main(["run", str(cfg), str(tmp_path / "out")]) == EXIT_OK
    run = tmp_path / "out" / "prisoners-no_mechanism"
    m = manifest(run)
    assert m["complete"] and m["episodes"]["logged"] == 1
    assert len((run / LOG_NAME).read_text().splitlines()) == 1


def test_interrupted_run_resumes(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", game="prisoners", mechanism="repetition",
                       roster=["UniformRandom", "TitForTat", "AlwaysDefect"], repeats=4, seed=2)
    out = tmp_path / "out"
    assert main(["run", str(cfg), str(out), "--max-episodes", "10"]) == EXIT_OK
    run = out / "prisoners-repetition"
    assert not (run / MANIFEST_NAME).exists()
    assert "resume" in capsys.readouterr().out
    assert len((run / LOG_NAME).read_text().splitlines()) == 10
    assert main(["run", str(cfg), str(out)]) == EXIT_OK
    m = manifest(run)
    assert m["episodes"]["new"] == 26 and m["episodes"]["logged"] == 36 and m["complete"]


def test_runs_and_summaries_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", games=["prisoners", "trust"],
                       mechanisms=["no_mechanism", "repetition"],
                       roster=["UniformRandom", "GrimTrigger"], repeats=2, seed=9)
    for name in ("a", "b"):
        assert main(["run", str(cfg), str(tmp_path / name)]) == EXIT_OK
        assert main(["analyze", str(tmp_path / name), "--bootstrap", "4"]) == EXIT_OK
    a, b = tmp_path / "a", tmp_path / "b"
    for run in ("prisoners-no_mechanism", "prisoners-repetition", "trust-repetition"):
        assert (a / run / LOG_NAME).read_bytes() == (b / run / LOG_NAME).read_bytes()
    assert (a / "analysis" / "summary.csv").read_bytes() == (b / "analysis" / "summary.csv").read_bytes()


def _summary(path):
    lines = (path / "analysis" / "summary.csv").read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_analyze_grim_trigger_mean_is_one(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="prisoners", mechanism="repetition",
                       roster=["GrimTrigger"], repeats=2)
    main(["run", str(cfg), str(tmp_path / "out")])
    assert main(["analyze", str(tmp_path / "out")]) == EXIT_OK
    rows = _summary(tmp_path / "out")
    mean = [r for r in rows if r["metric"] == "mean"]
    assert len(mean) == 1 and float(mean[0]["value"]) == 1.0
    assert {r["metric"] for r in rows} == {"mean", "fitness", "dr_rating", "dr_rank"}
    assert (tmp_path / "out" / "analysis" / "tensor-prisoners-repetition.csv").exists()


def test_analyze_reputation_has_mean_only(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="prisoners", mechanism="reputation_plus",
                       roster=["StandingNorm", "AlwaysDefect"], repeats=1)
    main(["run", str(cfg), str(tmp_path / "out")])
    assert main(["analyze", str(tmp_path / "out")]) == EXIT_OK
    assert {r["metric"] for r in _summary(tmp_path / "out")} == {"mean"}


def test_analyze_verify_mode(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", game="public_goods", mechanism="contracting",
                       roster=["TheoremContract", "AlwaysDefect"], repeats=1)
    out = tmp_path / "out"
    main(["run", str(cfg), str(out)])
    assert main(["analyze", str(out), "--verify"]) == EXIT_VERIFY  # nothing stored yet
    main(["analyze", str(out)])
    capsys.readouterr()
    assert main(["analyze", str(out), "--verify"]) == EXIT_OK
    assert "recompute" in capsys.readouterr().out
    summary = out / "analysis" / "summary.csv"
    summary.write_text(summary.read_text().replace("1.0", "0.9", 1))
    assert main(["analyze", str(out), "--verify"]) == EXIT_VERIFY
    main(["analyze", str(out)])
    log = out / "public_goods-contracting" / LOG_NAME
    lines = log.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["episode"]["weighted"][0] += 1.0
    log.write_text("\n".join([json.dumps(rec)] + lines[1:]) + "\n")
    assert main(["analyze", str(out), "--verify"]) == EXIT_VERIFY


def test_mixed_digests_are_refused(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="prisoners", mechanism="no_mechanism",
                       roster=["AlwaysDefect"], repeats=1)
    out = tmp_path / "out"
    main(["run", str(cfg), str(out)])
    log = out / "prisoners-no_mechanism" / LOG_NAME
    rec = json.loads(log.read_text())
    rec["digest"] = "0" * len(rec["digest"])
    log.write_text(json.dumps(rec) + "\n")
    assert main(["analyze", str(out)]) == EXIT_CONFIG


def test_empty_directory_is_a_config_error(tmp_path, capsys):
    assert main(["analyze", str(tmp_path)]) == EXIT_CONFIG
    assert "no runs found" in capsys.readouterr().err


def test_config_errors_name_the_field(tmp_path):
    bad = write_config(tmp_path / "c.json", game="prisoners", mechanism="no_mechanism",
                       roster=["AlwaysDefect"], repeat=1)
    with pytest.raises(ConfigError, match="'repeat'"):
        load_run_config(bad)
    (tmp_path / "d.json").write_text('{"game": "prisoners",\n "roster": [}')
    with pytest.raises(ConfigError, match=r"d\.json:2:"):
        load_run_config(tmp_path / "d.json")
    mech = write_config(tmp_path / "e.json", game="prisoners", mechanism="haggling", roster=["AlwaysDefect"])
    with pytest.raises(ConfigError, match=r"e\.json:\d+: field 'mechanisms\[0\]'"):
        load_run_config(mech)
    assert main(["run", str(bad), str(tmp_path / "out")]) == EXIT_CONFIG


@pytest.mark.parametrize("game", ["prisoners", "public_goods", "travelers", "trust"])
@pytest.mark.parametrize("variant", ["repetition", "reputation_plus", "mediation", "contracting"])
def test_verify_theorem_passes(game, variant, capsys):
    assert main(["verify-theorem", game, variant]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("verdict: pass")


def test_verify_theorem_below_threshold(capsys):
    assert main(["verify-theorem", "prisoners", "repetition", "--delta", "0.4"]) == EXIT_VERIFY
    out = capsys.readouterr()
    assert "delta_threshold = 0.5" in out.out and "verdict: fail" in out.out
    assert "violated" in out.err


def test_list_games(capsys):
    assert main(["list-games"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("prisoners", "public_goods", "travelers", "trust", "stag_hunt"):
        assert out.count(f"{name}:") == 1


def test_render_prompt(capsys):
    assert main(["render-prompt", "prisoners", "contracting", "propose_contract"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("Setup:\nYou are playing a decision-making game")
    assert "Here is the twist:" in out
    assert main(["render-prompt", "trust", "no_mechanism", "act", "--seat", "1", "--instruction", "cot"]) == 0
    assert "Player 2" in capsys.readouterr().out
    assert main(["render-prompt", "prisoners", "no_mechanism", "act", "--seat", "5"]) == EXIT_CONFIG
