import json

import numpy as np
import pytest

import oracle
from coopcast import channels, io
from coopcast.cli import main

FAST = ["--lambda-count", "9", "--grid-res", "5", "--restarts", "3"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_channel(tmp_path, ch, name="ch.json"):
    path = tmp_path / name
    path.write_text(json.dumps(io.channel_to_dict(ch)))
    return str(path)


def test_check_degraded(capsys):
    assert run(capsys, "check", "degraded", "builtin:bsbc?p1=0.1&p2=0.2")[:2] == (
        0, "degraded: yes\n")
    code, out, err = run(capsys, "check", "degraded", "builtin:bsbc2?p=0.1")
    assert code == 0 and out == "degraded: no\n" and "residual" in err


def test_channel_file_round_trip(tmp_path, capsys):
    ch = channels.random_channel(np.random.default_rng(4), 2, 3, 2, c12=0.2, c21=0.1)
    back = io.load_channel(write_channel(tmp_path, ch))
    assert np.array_equal(back.w, ch.w) and (back.c12, back.c21) == (0.2, 0.1)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"x_size": 2, "y1_size": 1, "y2_size": 1,
                               "transition": [[[1.0]], [[0.999]]], "c12": 0, "c21": 0}))
    code, _, err = run(capsys, "check", "degraded", str(bad))
    assert code == 3 and "index" in err
    (tmp_path / "junk.json").write_text("{not json")
    assert run(capsys, "check", "degraded", str(tmp_path / "junk.json"))[0] == 2
    assert run(capsys, "check", "degraded", "builtin:bsbc?p1=0.1")[0] == 2
    assert run(capsys, "check", "degraded", "builtin:bsbc2?p=0.1", "--bogus")[0] == 64
    assert run(capsys, "region", "degraded", "builtin:bsbc2?p=0.1", *FAST)[0] == 65
    assert run(capsys, "region", "degraded", "builtin:bsbc?p1=0.1&p2=0.1", "--card-u", "3",
               *FAST)[0] == 65
    assert run(capsys, "simulate", "df", "builtin:bsbc?p1=0.1&p2=0.1", "--r1", "1",
               "--r2", "1", "--n-grid", "16", "--trials", "1")[0] == 65
    assert run(capsys, "curve", "common", "builtin:bsbc2?p=0.1", "--c-grid", "0.3:0.5:0.1",
               "--closed-form")[0] == 65
    assert run(capsys, "rate", "common", "builtin:bsbc2?p=0.1", "--scheme", "magic")[0] == 2


def test_region_csv_and_audit(tmp_path, capsys):
    front, wit = tmp_path / "f.csv", tmp_path / "w.json"
    code, out, _ = run(capsys, "region", "degraded", "builtin:bsbc?p1=0.1&p2=0.1", "--c12",
                       "0.3", *FAST, "-o", str(front), "--witness-out", str(wit))
    assert code == 0 and out == ""
    lines = front.read_text().splitlines()
    assert lines[0] == "lambda,r1,r2,witness_id" and len(lines) == 10
    _, r1, r2, _ = io.read_frontier_csv(front.read_text())
    assert np.max(r1 + r2) == pytest.approx(oracle.CAP_01, abs=1e-3)
    code, out, _ = run(capsys, "audit", str(front), str(wit))
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["rows"] == 9


@pytest.mark.parametrize("argv", [
    ["region", "marton-coop", "builtin:bsbc2?p=0.1", "--c12", "0.2", "--c21", "0.1"],
    ["bound", "cutset", "builtin:bsbc?p1=0.1&p2=0.2", "--c21", "0.3"],
])
def test_audit_other_kinds(tmp_path, capsys, argv):
    front, wit = tmp_path / "f.csv", tmp_path / "w.json"
    assert run(capsys, *argv, *FAST, "-o", str(front), "--witness-out", str(wit))[0] == 0
    code, out, _ = run(capsys, "audit", str(front), str(wit))
    assert code == 0 and json.loads(out)["max_deviation"] <= 1e-9


def test_audit_detects_tampering(tmp_path, capsys):
    front, wit = tmp_path / "f.csv", tmp_path / "w.json"
    run(capsys, "bound", "cutset", "builtin:bsbc2?p=0.1", *FAST, "-o", str(front),
        "--witness-out", str(wit))
    lines = front.read_text().splitlines()
    lam, r1, r2, wid = lines[3].split(",")
    lines[3] = ",".join([lam, repr(float(r1) + 1e-3), r2, wid])
    front.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "audit", str(front), str(wit))
    assert code == 3 and not json.loads(out)["ok"]


def test_curve_closed_form_csv(capsys):
    code, out, _ = run(capsys, "curve", "common", "builtin:bsbc2?p=0.1",
                       "--c-grid", "0.469:0.75:0.01", "--closed-form")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "c,rate,scheme"
    rates = np.array([float(l.split(",")[1]) for l in lines[1:]])
    assert np.all(np.diff(rates) >= -1e-12)
    assert rates[-1] == pytest.approx(oracle.I_X_Y1Y2, abs=1e-6)


def test_rate_common_json(capsys):
    code, out, _ = run(capsys, "rate", "common", "builtin:bsbc2?p=0.1", "--c12", "0.55",
                       "--c21", "0.55", "--scheme", "corollary", *FAST)
    doc = json.loads(out)
    assert code == 0 and doc["scheme"] == "two_step_12"
    assert doc["rate"] == pytest.approx(oracle.TWO_STEP_055, abs=1e-6)
    assert doc["rate"] <= doc["upper"] + 1e-9
    assert len(doc["witness"]["p_x"]) == 2


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "df", "builtin:bsbc?p1=0.05&p2=0.1", "--c12", "0.3",
                       "--r1", "0.25", "--r2", "0.25", "--n-grid", "4,8", "--trials", "50")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("n,r1,r2,c12") and len(lines) == 3
    row = dict(zip(lines[0].split(","), lines[2].split(",")))
    assert row["n"] == "8" and int(row["trials"]) == 50


SEED = ["--seed", "0"]
ALL_COMMANDS = [
    ["region", "degraded", "builtin:bsbc?p1=0.1&p2=0.1", "--c12", "0.1", *FAST, *SEED],
    ["region", "nocoop-degraded", "builtin:bsbc?p1=0.1&p2=0.1", *FAST, *SEED],
    ["region", "marton", "builtin:bsbc2?p=0.1", *FAST, *SEED],
    ["region", "marton-coop", "builtin:bsbc2?p=0.1", "--c12", "0.3", *FAST, *SEED],
    ["bound", "cutset", "builtin:bsbc2?p=0.1", "--c12", "0.3", *FAST, *SEED],
    ["rate", "common", "builtin:bsbc2?p=0.1", "--c12", "0.6", "--c21", "0.6", *FAST, *SEED],
    ["rate", "common", "builtin:bsbc2?p=0.1", "--scheme", "upper", "--c12", "0.2", *FAST,
     *SEED],
    ["curve", "common", "builtin:bsbc2?p=0.1", "--c-grid", "0.47:0.7:0.05", *FAST, *SEED],
    ["curve", "common", "builtin:bsbc2?p=0.1", "--c-grid", "0.47,0.6", "--closed-form", *SEED],
    ["check", "degraded", "builtin:bsbc?p1=0.1&p2=0.1"],
    ["simulate", "df", "builtin:bsbc?p1=0.05&p2=0.1", "--c12", "0.3", "--r1", "0.25",
     "--r2", "0.125", "--n-grid", "4,8", "--trials", "40", "--ensemble", *SEED],
]


@pytest.mark.parametrize("argv", ALL_COMMANDS, ids=lambda a: "-".join(a[:2]))
def test_commands_are_deterministic(capsys, argv):
    first = run(capsys, *argv)
    assert first[0] == 0 and first == run(capsys, *argv)
