import csv
from pathlib import Path

import numpy as np
import pytest

from enrichfix.certify import C
from enrichfix.cli import main
from enrichfix.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """\
space:
  domain: {kind: box, lo: [0.5], hi: [2.0]}
mapping:
  kind: reciprocal
task:
  command: certify
  class: ENRICHED_NONEXPANSIVE
  constants: {b: 1.5}
"""


def _body(path):
    return [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("# generated")]


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.space.dim == cfg.mapping.dim


def test_parse_base_config():
    cfg = parse_config(BASE, "base.yaml")
    assert cfg.class_id == C.ENRICHED_NONEXPANSIVE and cfg.constants == {"b": 1.5}
    assert cfg.command == "certify" and cfg.source == "base.yaml"


@pytest.mark.parametrize("bad, line, fragment", [
    (BASE.replace("kind: reciprocal", "kind: reciprocl"), 4, "reciprocl"),
    (BASE.replace("  constants: {b: 1.5}", "  constants: {b: -1.0}"), 8, "b"),
    (BASE.replace("  command: certify", "  comand: certify"), 6, "comand"),
    (BASE + "extra: 1\n", 9, "extra"),
    (BASE.replace("hi: [2.0]", "hi: [two]"), 2, "two"),
])
def test_errors_are_line_anchored(bad, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(bad, "bad.yaml")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.yaml:{line}:")
    assert fragment in str(info.value)


def test_yaml_syntax_error_is_config_error():
    with pytest.raises(ConfigError):
        parse_config("space: [unclosed\n", "x.yaml")


def test_certify_exit_codes(tmp_path):
    assert main(["certify", "--config", str(CONFIGS / "reciprocal_ene.yaml"), "--out", str(tmp_path / "a")]) == 0
    assert (tmp_path / "a" / "certificate.txt").exists()
    assert main(["certify", "--config", str(CONFIGS / "translation.yaml"), "--out", str(tmp_path / "b")]) == 2
    assert main(["certify", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "c")]) == 1


def test_bad_config_exits_1_with_location(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(BASE.replace("kind: reciprocal", "kind: nope"))
    assert main(["certify", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert f"{p}:4:" in capsys.readouterr().err


def test_solve_writes_trace(tmp_path):
    assert main(["solve", "--config", str(CONFIGS / "reflection_solve.yaml"), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "trace.csv").open()))
    assert rows[0] == ["n", "coord_0", "residual", "bound_apriori", "bound_aposteriori"]
    assert len(rows) == 3 and float(rows[2][1]) == 0.5
    assert (tmp_path / "solve_report.txt").exists()


@pytest.mark.parametrize("name", ["almost_contraction", "cyclic", "presic", "quasi_banach", "maia_truncated"])
def test_solve_shipped_configs(tmp_path, name):
    assert main(["solve", "--config", str(CONFIGS / f"{name}.yaml"), "--out", str(tmp_path)]) == 0


def test_lambda_override(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--config", str(CONFIGS / "reflection_solve.yaml"), "--out", str(out),
                 "--lambda", "0.25"]) == 0
    rows = list(csv.reader((out / "trace.csv").open()))
    assert float(rows[1][1]) == 0.2 and float(rows[2][1]) == pytest.approx(0.2 + 0.25 * 0.6)
    assert rows[1][3] == ""  # certified bounds do not transfer to another lambda


def test_verify_roundtrip_pass_and_fail(tmp_path):
    for cfg, code in (("reciprocal_ene", 0), ("translation", 2)):
        out = tmp_path / cfg
        assert main(["certify", "--config", str(CONFIGS / f"{cfg}.yaml"), "--out", str(out)]) == code
        assert main(["verify", str(out / "certificate.txt"), "--config", str(CONFIGS / f"{cfg}.yaml")]) == 0


def test_verify_detects_tampering(tmp_path):
    out = tmp_path / "o"
    main(["certify", "--config", str(CONFIGS / "reciprocal_ene.yaml"), "--out", str(out)])
    cert = out / "certificate.txt"
    cert.write_text(cert.read_text().replace('"min_margin": 0.0', '"min_margin": 0.5'))
    assert main(["verify", str(cert), "--config", str(CONFIGS / "reciprocal_ene.yaml")]) == 2
    cert.write_text("not json")
    assert main(["verify", str(cert), "--config", str(CONFIGS / "reciprocal_ene.yaml")]) == 1


def test_certify_is_deterministic_per_seed(tmp_path):
    runs = []
    for i, seed in enumerate(("5", "5", "6")):
        out = tmp_path / str(i)
        main(["certify", "--config", str(CONFIGS / "reciprocal_ene.yaml"), "--out", str(out), "--seed", seed,
              "--samples", "2000"])
        runs.append(_body(out / "certificate.txt"))
    assert runs[0] == runs[1] and runs[0] != runs[2]


def test_atlas_and_bench(tmp_path):
    assert main(["atlas", "--config", str(CONFIGS / "reciprocal_ene.yaml"), "--out", str(tmp_path),
                 "--samples", "2000"]) == 0
    text = (tmp_path / "membership.txt").read_text()
    assert "ENE" in text
    assert main(["bench", "--suite", "bounds", "--out", str(tmp_path), "--samples", "2000"]) == 0
    assert (tmp_path / "bench_bounds.txt").exists()
    assert main(["bench", "--suite", "nope", "--out", str(tmp_path)]) == 1


def test_seed_must_be_u64(tmp_path):
    with pytest.raises(SystemExit):
        main(["certify", "--config", str(CONFIGS / "reciprocal_ene.yaml"), "--seed", "-1"])
