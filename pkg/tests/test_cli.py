import json
import os

import pytest

from sketchlab.cli import main


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


ATTACK_CFG = {
    "seed": 7,
    "attack": {
        "n": 64,
        "r": 4,
        "family": "projection-threshold",
        "B": 8.0,
        "alpha_policy": "auto",
        "m": 300,
        "grid": {"kind": "geometric", "points": 6},
        "seeds": [0],
        "verify_trials": 500,
    },
}


class TestAttackRun:
    def test_artifacts_and_replayability(self, tmp_path):
        cfg = write_cfg(tmp_path, ATTACK_CFG)
        out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
        assert main(["attack", "run", "--config", cfg, "--out", out1]) == 0
        assert main(["attack", "run", "--config", cfg, "--out", out2]) == 0
        for f in ("transcript.jsonl", "summary.csv", "certificate.json",
                  "exploits.json", "report.json"):
            assert os.path.exists(os.path.join(out1, f))
        a = open(os.path.join(out1, "summary.csv"), "rb").read()
        b = open(os.path.join(out2, "summary.csv"), "rb").read()
        assert a == b  # byte-identical replay
        header = a.decode().splitlines()[0]
        assert header == "run_id,seed,round,sigma2,rate,m_prime,score,accepted"

    def test_schema_violation_reports_path(self, tmp_path, capsys):
        bad = dict(ATTACK_CFG)
        bad = json.loads(json.dumps(ATTACK_CFG))
        bad["attack"]["B"] = 2.0  # below minimum
        cfg = write_cfg(tmp_path, bad, "bad.json")
        rc = main(["attack", "run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "attack/B" in err

    def test_missing_field_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, {"attack": {"n": 64}}, "m.json")
        assert main(["attack", "run", "--config", cfg]) == 1

    def test_verify_roundtrip(self, tmp_path):
        cfg = write_cfg(tmp_path, ATTACK_CFG)
        out = str(tmp_path / "o")
        assert main(["attack", "run", "--config", cfg, "--out", out]) == 0
        cert_file = os.path.join(out, "certificate.json")
        certs = json.load(open(cert_file))
        if not any(certs):
            pytest.skip("run produced no certificate at these tiny parameters")
        sk_file = str(tmp_path / "sk.json")
        import sketchlab.cli as cli_mod
        # the sketch spec comes from the attack pieces; write it for verify
        sk, _, _ = cli_mod._build_attack_pieces(ATTACK_CFG["attack"], 7)
        open(sk_file, "w").write(sk.spec_json())
        rc = main(["attack", "verify", "--certificate", cert_file,
                   "--sketch", sk_file, "--trials", "500"])
        assert rc in (0, 2)


class TestOtherCommands:
    def test_stats_check_pmf_ratio(self):
        rc = main(["stats", "check", "pmf-ratio", "--n", "10", "--C", "2",
                   "--sigma2", "10000"])
        assert rc == 0

    def test_stats_check_normalization(self):
        assert main(["stats", "check", "normalization"]) == 0

    def test_sketch_build_info(self, tmp_path):
        out = str(tmp_path / "sk.json")
        assert main(["sketch", "build", "--family", "countsketch", "--n", "64",
                     "--r", "16", "--params", '{"reps": 4}', "--seed", "3",
                     "--out", out]) == 0
        assert main(["sketch", "info", "--in", out]) == 0

    def test_harddist_gen_and_gap(self, tmp_path):
        out = str(tmp_path / "inst.json")
        assert main(["harddist", "gen", "--family", "cs", "--side", "D2",
                     "--seed", "3", "--out", out]) == 0
        doc = json.load(open(out))
        assert doc["side"] == "D2" and len(doc["payload"]) == 256
        assert main(["harddist", "gap", "--family", "eigen",
                     "--params", '{"d": 32}', "--pairs", "10"]) == 0

    def test_harddist_tvd(self):
        assert main(["harddist", "tvd", "--family", "opnorm-alpha",
                     "--params", '{"n": 16, "s1": 0.0}', "--d", "1",
                     "--trials", "3000"]) == 0

    def test_suite_acceptance_subset(self):
        assert main(["suite", "acceptance", "--fast", "--only", "5,6"]) == 0

    def test_env_out_dir(self, tmp_path, monkeypatch):
        target = str(tmp_path / "env-out")
        monkeypatch.setenv("SKETCHLAB_OUT", target)
        cfg = write_cfg(tmp_path, ATTACK_CFG)
        assert main(["attack", "run", "--config", cfg]) == 0
        assert os.path.exists(os.path.join(target, "summary.csv"))


class TestShippedExampleConfig:
    def test_example_config_validates(self):
        from sketchlab.cli import load_config
        cfg = load_config("demos/projection_r8_n128.json")
        assert cfg["attack"]["n"] == 128 and len(cfg["attack"]["seeds"]) == 10
