import csv
import json
from pathlib import Path

import pytest

from quadstretch import __version__, data_path
from quadstretch.cli import main
from quadstretch.protocol import fuzz_decoder
from quadstretch.device import QuadSimulator
from quadstretch.protocol import (CommandFrame, annotate_frame, decode_stream, encode_frame,
                                  loopback_session)

GOLDEN = Path(__file__).parent / "golden"
TRAJ = str(data_path("rubber_band.csv"))
CFG = str(data_path("rubber_band.cfg"))


def body(path):
    return [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]


@pytest.mark.parametrize("device", ["quadstretcher", "squeezer"])
def test_render_matches_golden(tmp_path, device):
    assert main(["render", TRAJ, "--config", CFG, "--device", device, "--out", str(tmp_path)]) == 0
    golden = GOLDEN / f"rubber_band_{device}.csv"
    assert (tmp_path / "render.csv").read_bytes() == golden.read_bytes()


def test_render_header_and_overwrite(tmp_path):
    args = ["render", TRAJ, "--scenario", "rubber_band", "--seed", "4", "--out", str(tmp_path)]
    assert main(args) == 0
    head = (tmp_path / "render.csv").read_text().splitlines()[:3]
    assert head[0].startswith("# config_hash=")
    assert head[1] == "# seed=4"
    assert head[2] == f"# tool=quadstretch {__version__}"
    assert main(args) == 1
    assert main(args + ["--force"]) == 0


def test_render_scheme_mismatch_is_usage_error(tmp_path):
    assert main(["render", TRAJ, "--config", CFG, "--scheme", "all-contract",
                 "--out", str(tmp_path)]) == 1


def test_render_away_scheme_flips_sides(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["render", TRAJ, "--config", CFG, "--out", str(a)])
    main(["render", TRAJ, "--config", CFG, "--scheme", "contract-away-from-force", "--out", str(b)])
    assert body(a / "render.csv") != body(b / "render.csv")


def test_render_bad_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,px,py,pz\n0,0,0,0\n0,0,0,0\n")
    assert main(["render", str(bad), "--scenario", "rubber_band", "--out", str(tmp_path)]) == 2
    assert main(["render", str(tmp_path / "missing.csv"), "--scenario", "rubber_band",
                 "--out", str(tmp_path)]) == 2
    assert main(["render", TRAJ, "--out", str(tmp_path)]) == 2  # no scenario id


def test_render_calibration_beyond_travel(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(Path(CFG).read_text() + "calibration.max_contraction = 30\n")
    assert main(["render", TRAJ, "--config", str(cfg), "--device", "squeezer",
                 "--out", str(tmp_path)]) == 3


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["render"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["jnd", "--side", "X"])
    assert exc.value.code == 1


def test_jnd_converges(tmp_path, capsys):
    assert main(["jnd", "--side", "R", "--type", "contraction", "--seed", "3",
                 "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "jnd_Rc.json").read_text())
    assert summary["status"] == "converged"
    assert summary["seed"] == 3 and summary["tool"].endswith(__version__)
    assert summary["reference"] == -4.3
    assert 0.1 < summary["weber_fraction"] < 0.7
    log = (tmp_path / "jnd_Rc_trials.csv").read_text().splitlines()
    assert log[0].startswith("# config_hash=") and "trial,delta,response,reversal" in log
    assert "Rc: status=converged" in capsys.readouterr().out


def test_jnd_chance_observer_fails(tmp_path):
    assert main(["jnd", "--sigma", "inf", "--out", str(tmp_path)]) == 3
    summary = json.loads((tmp_path / "jnd_De.json").read_text())
    assert summary["status"] == "diverged" and summary["noise_sigma"] == "inf"


def test_jnd_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["jnd", "--seed", "11", "--out", str(tmp_path / d)])
    assert (tmp_path / "a/jnd_De.json").read_bytes() == (tmp_path / "b/jnd_De.json").read_bytes()


@pytest.mark.parametrize("observer, session, expected", [("ideal", 1, 1.0), ("calibrated", 4, None)])
def test_confusion(tmp_path, observer, session, expected):
    assert main(["confusion", "--session", str(session), "--observer", observer,
                 "--reps", "50", "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / f"confusion_session{session}.json").read_text())
    assert out["row_sums"] == [50] * len(out["labels"])
    if expected is not None:
        assert out["accuracy"] == expected
    assert {"tool", "config_hash", "seed"} <= out.keys()


def test_protocol_dump_and_replay(tmp_path, capsys):
    main(["render", TRAJ, "--config", CFG, "--out", str(tmp_path)])
    dump = tmp_path / "frames.bin"
    assert len(dump.read_bytes()) == 151 * 12
    capsys.readouterr()
    assert main(["protocol", "dump", str(dump)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("A5 01 00 00 00 00 00 00 00 00 00 5A  sync dev=1")
    assert out[-1] == "0 error(s)"

    assert main(["protocol", "replay", str(dump), "--out", str(tmp_path)]) == 0
    frames, _ = decode_stream(dump.read_bytes())
    original = loopback_session(frames, QuadSimulator(), frame_period=0.02).trace
    assert body(tmp_path / "replay.csv") == original.to_csv_text().splitlines()

    damaged = tmp_path / "damaged.bin"
    raw = bytearray(dump.read_bytes())
    raw[30] ^= 0xFF
    damaged.write_bytes(bytes(raw))
    assert main(["protocol", "dump", str(damaged)]) == 2
    assert "1 error(s)" in capsys.readouterr().out


def test_protocol_fuzz(capsys):
    assert main(["protocol", "fuzz", "--count", "2000", "--seed", "1"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["crashes"] == 0 and stats["buffers"] == 2000
    assert fuzz_decoder(500, seed=2)["crashes"] == 0


def test_protocol_doc_examples_match_annotations():
    doc = (Path(__file__).parent.parent / "PROTOCOL.md").read_text().splitlines()
    lines = [l for l in doc if l.startswith("A5 ")]
    assert len(lines) == 3
    for line in lines:
        hex_part = line.split("  ", 1)[0]
        assert annotate_frame(bytes.fromhex(hex_part)) == line


def test_dump_of_neutral_frame_matches_doc(tmp_path, capsys):
    dump = tmp_path / "neutral.bin"
    dump.write_bytes(encode_frame(CommandFrame(1, 0, (0, 0, 0, 0))))
    assert main(["protocol", "dump", str(dump)]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    doc = (Path(__file__).parent.parent / "PROTOCOL.md").read_text()
    assert first in doc


def test_render_empty_trajectory(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,px,py,pz\n")
    assert main(["render", str(empty), "--scenario", "rubber_band", "--out", str(tmp_path)]) == 0
    assert body(tmp_path / "render.csv")[1:] == []


def test_pull_right_contracts_left(tmp_path):
    main(["render", TRAJ, "--config", CFG, "--scheme", "contract-towards-force",
          "--out", str(tmp_path)])
    rows = list(csv.DictReader(body(tmp_path / "render.csv")))
    pulled = [r for r in rows if float(r["fy"]) < -0.2 and abs(float(r["fz"])) < 0.05]
    assert pulled
    for r in pulled:
        assert float(r["target_L"]) < 0 < float(r["target_R"])


def test_render_is_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["render", TRAJ, "--config", CFG, "--device", "squeezer", "--seed", "5",
              "--long", "--out", str(tmp_path / d)])
    for name in ("render.csv", "render_long.csv", "frames.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    long_rows = body(tmp_path / "a" / "render_long.csv")
    assert long_rows[0] == "time,series,value" and len(long_rows) == 1 + 151 * 8


def test_jnd_noiseless_observer(tmp_path):
    assert main(["jnd", "--sigma", "0", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "jnd_De.json").read_text())
    assert summary["jnd"] <= 1.72 * 0.8 ** 4
    rows = list(csv.DictReader(body(tmp_path / "jnd_De_trials.csv")))
    deltas = [float(r["delta"]) for r in rows]
    first_miss = next(i for i, r in enumerate(rows) if r["response"] == "0")
    assert first_miss > 20
    assert all(b <= a for a, b in zip(deltas[:first_miss], deltas[1:first_miss + 1]))


def test_jnd_mean_over_runs(tmp_path):
    assert main(["jnd", "--side", "D", "--type", "expansion", "--runs", "100",
                 "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "jnd_De.json").read_text())
    assert len(summary["runs"]) == 100
    assert 0.25 <= summary["mean_weber_fraction"] <= 0.40
    assert main(["jnd", "--runs", "0", "--out", str(tmp_path), "--force"]) == 1


def test_confusion_session4_ideal_identity(tmp_path):
    assert main(["confusion", "--session", "4", "--observer", "ideal", "--reps", "10",
                 "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "confusion_session4.json").read_text())
    assert out["counts"] == [[10, 0], [0, 10]]
    assert out["labels"] == ["e", "c"]


def test_confusion_accounting(tmp_path):
    main(["confusion", "--session", "1", "--reps", "10", "--out", str(tmp_path)])
    out = json.loads((tmp_path / "confusion_session1.json").read_text())
    counts = out["counts"]
    assert len(counts) == 8 and all(len(r) == 8 for r in counts)
    assert out["row_sums"] == [10] * 8
    assert out["accuracy"] == sum(counts[i][i] for i in range(8)) / 80


def test_confusion_bad_session():
    with pytest.raises(SystemExit) as exc:
        main(["confusion", "--session", "5"])
    assert exc.value.code == 1
