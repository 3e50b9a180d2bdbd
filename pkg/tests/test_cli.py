import json

import pytest

from thermal_sentry.cli import main

DETECTION_KEYS = {
    "frame", "verdict", "movement", "active_count",
    "quadrant_means", "flags", "state", "elapsed_us",
}
EVENT_KEYS = {"frame", "event", "quadrant", "from_state", "to_state"}

STATIC_SCENE = """
width=32
height=24
frames=10
ambient=200
seed=1
# warm but under the 20%-over-mean bar, and static, so neither method fires
blob=300,2,object,0:24:6
"""

CROSSING_SCENE = """
width=32
height=24
frames=20
ambient=60
seed=2
# enters Q3 at frame 5 and stays
blob=900,2,human,0:40:18,5:24:18
"""

HOT_QUADRANT_SCENE = """
width=32
height=24
frames=6
ambient=50
seed=3
blob=900,2,human,0:8:6
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def make_dataset(tmp_path, scene_text, name="scene"):
    scene = tmp_path / f"{name}.scene"
    scene.write_text(scene_text)
    out_dir = tmp_path / name
    assert main(["synth", "--scene", str(scene), "--out-dir", str(out_dir)]) == 0
    return out_dir


class TestDetect:
    def test_static_scene_all_negative(self, tmp_path, capsys):
        data = make_dataset(tmp_path, STATIC_SCENE)
        capsys.readouterr()
        code, out, _ = run_cli(capsys, "detect", "--input-dir", str(data))
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert len(records) == 10
        for record in records:
            assert set(record) == DETECTION_KEYS
            assert record["verdict"] is False
            assert record["state"] == "Run"
            assert record["elapsed_us"] > 0

    def test_zone_crossing_emits_state_change(self, tmp_path, capsys):
        data = make_dataset(tmp_path, CROSSING_SCENE)
        zones = tmp_path / "zones.cfg"
        zones.write_text("Q3=critical\ndebounce=3\n")
        capsys.readouterr()
        code, out, _ = run_cli(
            capsys, "detect", "--input-dir", str(data), "--zones", str(zones)
        )
        assert code == 0
        lines = [json.loads(line) for line in out.splitlines()]
        events = [r for r in lines if "event" in r]
        assert all(set(e) == EVENT_KEYS for e in events)
        changes = [e for e in events if e["event"] == "StateChanged"]
        assert changes and changes[0]["from_state"] == "Run"
        assert changes[0]["to_state"] == "Stop"
        detections = [r for r in lines if "verdict" in r]
        assert detections[-1]["state"] == "Stop"

    def test_q0_events_and_return_to_run_serialize(self, tmp_path, capsys):
        # Q0 and SafetyState.RUN are falsy IntEnums; make sure the NDJSON
        # layer still names them
        scene = """
width=32
height=24
frames=24
ambient=60
seed=4
# visits Q0 for a while, then walks far off-frame
blob=900,2,human,0:8:6,10:8:6,16:-40:6
"""
        data = make_dataset(tmp_path, scene, name="visit")
        zones = tmp_path / "z.cfg"
        zones.write_text("Q0=critical\ndebounce=2\nclear=2\n")
        capsys.readouterr()
        # without a hold limit the departed blob stays burned into the held
        # background and movement never clears
        code, out, _ = run_cli(
            capsys, "detect", "--input-dir", str(data), "--zones", str(zones),
            "--max-hold-frames", "4",
        )
        assert code == 0
        events = [json.loads(l) for l in out.splitlines() if "event" in json.loads(l)]
        entered = [e for e in events if e["event"] == "Entered"]
        assert entered and entered[0]["quadrant"] == "Q0"
        changes = [e for e in events if e["event"] == "StateChanged"]
        assert changes[0]["from_state"] == "Run" and changes[0]["to_state"] == "Stop"
        assert changes[-1]["to_state"] == "Run"

    def test_empty_input_dir_clean_exit(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code, out, _ = run_cli(capsys, "detect", "--input-dir", str(empty))
        assert code == 0
        assert out == ""

    def test_positional_frames_input(self, tmp_path, capsys):
        data = make_dataset(tmp_path, STATIC_SCENE)
        frames = sorted(str(p) for p in data.glob("*.pgm"))[:3]
        capsys.readouterr()
        code, out, _ = run_cli(capsys, "detect", *frames)
        assert code == 0
        assert [json.loads(l)["frame"] for l in out.splitlines()] == [0, 1, 2]

    def test_requires_exactly_one_input_source(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "detect")
        assert code == 1 and "input" in err
        data = make_dataset(tmp_path, STATIC_SCENE)
        some = next(iter(sorted(data.glob("*.pgm"))))
        capsys.readouterr()
        code, _, err = run_cli(
            capsys, "detect", "--input-dir", str(data), str(some)
        )
        assert code == 1

    def test_out_file(self, tmp_path, capsys):
        data = make_dataset(tmp_path, STATIC_SCENE)
        out_file = tmp_path / "events.ndjson"
        code, _, _ = run_cli(
            capsys, "detect", "--input-dir", str(data), "--out", str(out_file)
        )
        assert code == 0
        lines = out_file.read_text().splitlines()
        assert len(lines) == 10
        assert all(json.loads(line) for line in lines)

    def test_sequential_mode_withholds_movement_fields(self, tmp_path, capsys):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        capsys.readouterr()
        code, out, _ = run_cli(
            capsys, "detect", "--input-dir", str(data), "--mode", "sequential"
        )
        assert code == 0
        records = [json.loads(line) for line in out.splitlines() if "verdict" in json.loads(line)]
        flagged = [r for r in records if any(r["flags"].values())]
        assert flagged
        for record in flagged:
            assert record["movement"] is None
            assert record["active_count"] is None
            assert record["verdict"] is True

    def test_unreadable_input_is_data_error(self, tmp_path, capsys):
        bogus = tmp_path / "bogus.pgm"
        bogus.write_bytes(b"not a pgm")
        code, _, err = run_cli(capsys, "detect", str(bogus))
        assert code == 2
        assert "pgm" in err.lower()

    def test_mid_stream_dimension_change_aborts(self, tmp_path, capsys):
        import numpy as np
        from thermal_sentry import ThermalFrame, write_pgm

        write_pgm(ThermalFrame(4, 4, np.zeros((4, 4), np.uint16)), tmp_path / "a.pgm")
        write_pgm(ThermalFrame(6, 4, np.zeros((4, 6), np.uint16)), tmp_path / "b.pgm")
        code, _, err = run_cli(capsys, "detect", "--input-dir", str(tmp_path))
        assert code == 2
        assert "dimension change" in err


class TestEval:
    def test_end_to_end_report(self, tmp_path, capsys):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        report_file = tmp_path / "report.json"
        capsys.readouterr()
        code, out, _ = run_cli(
            capsys, "eval",
            "--input-dir", str(data),
            "--labels", str(data / "labels.csv"),
            "--out", str(report_file),
        )
        assert code == 0
        assert "Method A (movement)" in out
        assert "frames evaluated: 6" in out
        payload = json.loads(report_file.read_text())
        assert payload["frames_evaluated"] == 6

    def test_cells_mode_prints_96_5(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "--cells", "1027,11,28,48")
        assert code == 0
        assert "accuracy: 96.5%" in out

    def test_cells_mode_malformed(self, capsys):
        code, _, err = run_cli(capsys, "eval", "--cells", "1,2,3")
        assert code == 1 and "TP,FP,FN,TN" in err

    def test_missing_label_is_data_error(self, tmp_path, capsys):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        labels = data / "labels.csv"
        lines = labels.read_text().splitlines()
        labels.write_text("\n".join(lines[:-1]) + "\n")  # drop last frame's label
        capsys.readouterr()
        code, _, err = run_cli(
            capsys, "eval", "--input-dir", str(data), "--labels", str(labels)
        )
        assert code == 2
        assert "frame 5" in err

    def test_requires_dataset_or_cells(self, capsys):
        code, _, err = run_cli(capsys, "eval")
        assert code == 1


class TestSynth:
    def test_summary_and_files(self, tmp_path, capsys):
        scene = tmp_path / "s.scene"
        scene.write_text(CROSSING_SCENE)
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "synth", "--scene", str(scene), "--out-dir", str(out_dir)
        )
        assert code == 0
        assert "wrote 20 frames" in out
        assert (out_dir / "labels.csv").exists()
        assert len(list(out_dir.glob("*.pgm"))) == 20
        # label tallies printed
        assert "positive" in out

    def test_bad_scene_file_is_data_error(self, tmp_path, capsys):
        scene = tmp_path / "bad.scene"
        scene.write_text("nonsense")
        code, _, err = run_cli(
            capsys, "synth", "--scene", str(scene), "--out-dir", str(tmp_path / "x")
        )
        assert code == 2


class TestBench:
    def test_default_scene_bench(self, capsys):
        code, out, _ = run_cli(capsys, "bench", "--iterations", "40")
        assert code == 0
        assert "40 iterations on 160x120 frames" in out
        assert "method A" in out and "method B" in out and "hybrid" in out

    def test_zero_iterations_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bench", "--iterations", "0"])
        assert exc.value.code == 1

    def test_bench_json_out(self, tmp_path, capsys):
        out_file = tmp_path / "bench.json"
        code, _, _ = run_cli(
            capsys, "bench", "--iterations", "10", "--out", str(out_file)
        )
        assert code == 0
        payload = json.loads(out_file.read_text())
        assert payload["iterations"] == 10
        assert set(payload["latency_us"]) == {"method_a", "method_b", "hybrid"}


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_no_subcommand_prints_help(self, capsys):
        code, out, _ = run_cli(capsys)
        assert code == 1
        assert "detect" in out and "eval" in out

    def test_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["detect", "--active-delta", "soup", "--input-dir", "x"])
        assert exc.value.code == 1


class TestConfigFile:
    def test_config_file_sets_defaults(self, tmp_path, capsys, monkeypatch):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        config = tmp_path / "sentry.cfg"
        # ratio high enough that nothing ever flags
        config.write_text("roi_ratio=50.0\n")
        capsys.readouterr()
        code, out, _ = run_cli(
            capsys, "--config", str(config), "detect", "--input-dir", str(data)
        )
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert not any(any(r["flags"].values()) for r in records)

    def test_cli_flag_overrides_config(self, tmp_path, capsys):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        config = tmp_path / "sentry.cfg"
        config.write_text("roi_ratio=50.0\n")
        capsys.readouterr()
        code, out, _ = run_cli(
            capsys, "--config", str(config),
            "detect", "--input-dir", str(data), "--roi-ratio", "1.2",
        )
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert any(any(r["flags"].values()) for r in records)

    def test_env_var_config(self, tmp_path, capsys, monkeypatch):
        data = make_dataset(tmp_path, HOT_QUADRANT_SCENE)
        config = tmp_path / "sentry.cfg"
        config.write_text("roi_ratio=50.0\n")
        monkeypatch.setenv("THERMAL_SENTRY_CONFIG", str(config))
        capsys.readouterr()
        code, out, _ = run_cli(capsys, "detect", "--input-dir", str(data))
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert not any(any(r["flags"].values()) for r in records)

    def test_bad_config_key_is_data_error(self, tmp_path, capsys):
        config = tmp_path / "sentry.cfg"
        config.write_text("volume=11\n")
        code, _, err = run_cli(capsys, "--config", str(config), "bench")
        assert code == 2
