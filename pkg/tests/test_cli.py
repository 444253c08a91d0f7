import csv
import json
import math

import numpy as np
import pytest

from shortmol import __version__, cli, pipeline, selfcheck
from shortmol.channel import Channel, SymmetryWitness, make_erasure_channel, make_typewriter_channel
from shortmol.exponents import typewriter_c0u_lower_bound
from shortmol.selfcheck import run_selfcheck


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_table(path):
    lines = [ln for ln in open(path, encoding="utf-8").read().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def kv(path):
    return {r["quantity"]: r["value"] for r in read_table(path)}


def test_channel_info_erasure(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "erasure", "q": 4, "p": 0.1}})
    out = tmp_path / "o.csv"
    assert cli.main(["channel-info", "--config", cfg, "--out", str(out)]) == 0
    t = kv(out)
    assert t["symmetric"] == "true" and t["witness_source"] == "bundled"
    assert float(t["r_max_nats"]) == pytest.approx(0.9 * math.log(4), abs=1e-12)
    assert float(t["r_max_bits"]) == pytest.approx(1.8, abs=1e-12)
    assert "shannon_capacity_nats" in t


def test_channel_info_typewriter(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "typewriter", "eps": 0.1}})
    out = tmp_path / "o.csv"
    assert cli.main(["channel-info", "--config", cfg, "--out", str(out)]) == 0
    t = kv(out)
    assert float(t["r_max_nats"]) == pytest.approx(math.log(1.5), abs=1e-12)
    assert float(t["c0u_lower_bound_nats"]) == pytest.approx(typewriter_c0u_lower_bound(0.1))
    assert t["c0u_bound_exceeds_r_max"] == "true"


def test_channel_info_full_support_and_custom(tmp_path, capsys):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "qary_symmetric", "q": 2, "delta": 0.1}})
    out = tmp_path / "o.csv"
    assert cli.main(["channel-info", "--config", cfg, "--out", str(out)]) == 0
    assert float(kv(out)["r_max_nats"]) == 0.0
    assert "full-support" in capsys.readouterr().err
    custom = {"channel": {"q": 2, "outputs": 2, "rows": [["0.9", "0.1"], ["0.5", "0.5"]]}}
    cfg = write_json(tmp_path / "a.json", custom)
    assert cli.main(["channel-info", "--config", cfg, "--out", str(out)]) == 0
    t = kv(out)
    assert t["symmetric"] == "false" and t["witness_source"] == "none"


def test_exponent_sweep(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "erasure", "q": 2, "p": 0.5},
                                           "rates": [0.0, 0.1, 0.2]})
    out = tmp_path / "o.csv"
    assert cli.main(["exponent-sweep", "--config", cfg, "--out", str(out), "--no-timestamp"]) == 0
    rows = read_table(out)
    assert list(rows[0]) == ["rate_nats", "exponent_nats", "rho_star", "saturated"]
    e = [float(r["exponent_nats"]) for r in rows]
    assert e[0] >= e[1] >= e[2] > 0
    assert rows[0]["saturated"] == "true"


def test_header_and_timestamp(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "erasure", "q": 2, "p": 0.5},
                                           "rates": [0.1], "seed": 42})
    out = tmp_path / "o.csv"
    cli.main(["exponent-sweep", "--config", cfg, "--out", str(out)])
    head = [ln for ln in out.read_text().splitlines() if ln.startswith("#")]
    assert head[0] == f"# shortmol {__version__}"
    assert "# seed=42" in head
    assert any(ln.startswith("# config_sha256=") for ln in head)
    assert any(ln.startswith("# timestamp=") for ln in head)
    cli.main(["exponent-sweep", "--config", cfg, "--out", str(out), "--no-timestamp", "--seed", "7"])
    text = out.read_text()
    assert "# timestamp=" not in text and "# seed=7" in text


def test_inner_erasure(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "erasure", "q": 2, "p": 0.3},
                                           "L": [6], "n_codes": 40, "trials_per_code": 200,
                                           "exact": True, "rho_max": 1.0, "seed": 3})
    out = tmp_path / "o.csv"
    assert cli.main(["inner-erasure", "--config", cfg, "--out", str(out)]) == 0
    (row,) = read_table(out)
    assert list(row) == ["L", "K", "rate_nats", "p_er_mc", "ci_half_width", "theorem2_bound", "p_er_exact"]
    assert int(row["K"]) == round(0.5 * 0.7 * 6)
    mc, ex, half = float(row["p_er_mc"]), float(row["p_er_exact"]), float(row["ci_half_width"])
    assert abs(mc - ex) <= 2 * half + 0.01
    assert mc <= float(row["theorem2_bound"]) + 2 * half


def test_inner_erasure_identity_full_rank(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "identity", "q": 2},
                                           "points": [{"L": 5, "K": 3}], "n_codes": 20,
                                           "trials_per_code": 100, "full_rank": True})
    out = tmp_path / "o.csv"
    assert cli.main(["inner-erasure", "--config", cfg, "--out", str(out)]) == 0
    assert float(read_table(out)[0]["p_er_mc"]) == 0.0


def test_end_to_end(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "identity", "q": 2}, "K": 3, "L": 3,
                                           "M": [1000, 4000, 16000], "xi": 0.02, "codebook_size": 128,
                                           "trials": 400, "seed": 5})
    out, log = tmp_path / "o.csv", tmp_path / "t.csv"
    assert cli.main(["end-to-end", "--config", cfg, "--out", str(out), "--trial-log", str(log)]) == 0
    rows = read_table(out)
    assert [int(r["M"]) for r in rows] == [1000, 4000, 16000]
    err = [float(r["err_rate"]) for r in rows]
    assert err[0] >= err[1] >= err[2]
    assert all(r["undetected_inner_errors"] == "0" for r in rows)
    assert "# seed=5" in out.read_text()
    assert len(read_table(log)) == 3 * 400


def test_exit_codes_and_no_partial_output(tmp_path):
    out = tmp_path / "o.csv"
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{"channel": {"name": "erasure",\n "q": 2 "p": 0.5}}')
    assert cli.main(["channel-info", "--config", str(bad_json), "--out", str(out)]) == 2
    assert not out.exists()
    bad = write_json(tmp_path / "b.json", {"channel": {"name": "erasure", "q": 2, "p": 1.5}})
    assert cli.main(["channel-info", "--config", bad, "--out", str(out)]) == 2
    empty = write_json(tmp_path / "e.json", {"channel": {"name": "erasure", "q": 2, "p": 0.5}, "rates": []})
    assert cli.main(["exponent-sweep", "--config", empty, "--out", str(out)]) == 2
    asym = write_json(tmp_path / "a.json", {"channel": {"q": 2, "outputs": 2,
                                                        "rows": [["0.9", "0.1"], ["0.5", "0.5"]]},
                                            "L": [4], "n_codes": 2, "trials_per_code": 2})
    assert cli.main(["inner-erasure", "--config", asym, "--out", str(out)]) == 2
    big = write_json(tmp_path / "g.json", {"channel": {"name": "erasure", "q": 2, "p": 0.3},
                                           "points": [{"L": 16, "K": 2}], "n_codes": 2,
                                           "trials_per_code": 5, "exact": True})
    assert cli.main(["inner-erasure", "--config", big, "--out", str(out)]) == 3
    assert cli.main(["channel-info", "--config", str(tmp_path / "missing.json"), "--out", str(out)]) == 2
    assert not out.exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".shortmol-")]


def test_config_error_reports_line(tmp_path, capsys):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{\n  "channel": {\n    "name": "erasure" "q": 2}\n}')
    assert cli.main(["channel-info", "--config", str(bad_json)]) == 2
    assert "bad.json:3:" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate", "--config", "x.json"])
    assert exc.value.code == 2


def test_invariant_failure_exit(tmp_path, monkeypatch):
    def wrong(code, channel, reads):
        return np.zeros(len(reads), dtype=np.int64)

    monkeypatch.setattr(pipeline, "zue_decode_many", wrong)
    cfg = write_json(tmp_path / "c.json", {"channel": {"name": "identity", "q": 2}, "K": 2, "L": 3,
                                           "M": 100, "xi": 0.2, "codebook_size": 4, "trials": 5})
    out = tmp_path / "o.csv"
    before = pipeline.TALLY.undetected
    assert cli.main(["end-to-end", "--config", cfg, "--out", str(out)]) == 1
    assert not out.exists()
    # the forced wrong decisions above are not real decoder output
    pipeline.TALLY.undetected = before


def test_selfcheck_pass(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["selfcheck", "--out", str(out), "--no-timestamp"]) == 0
    rows = list(csv.DictReader(ln for ln in out.read_text().splitlines() if not ln.startswith("#")))
    assert rows and all(r["passed"] == "true" for r in rows)


def corrupted_channel():
    tw = make_typewriter_channel(0.5)
    bad = SymmetryWitness(np.tile(np.arange(3)[:, None], (1, 3)))
    return Channel(tw.matrix, name="typewriter-bad-witness", witness=bad)


def test_selfcheck_names_corrupted_witness(tmp_path, monkeypatch, capsys):
    results = run_selfcheck(channels=[make_erasure_channel(2, 0.3), corrupted_channel()])
    failed = [r.name for r in results if not r.passed]
    assert failed == ["prop1/witness[typewriter-bad-witness]"]
    monkeypatch.setattr(selfcheck, "default_channels", lambda: [corrupted_channel()])
    assert cli.main(["selfcheck", "--out", str(tmp_path / "s.csv")]) == 1
    assert "prop1/witness[typewriter-bad-witness]" in capsys.readouterr().err
