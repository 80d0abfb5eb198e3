import json

import numpy as np
import pytest

from signals import regular_beats, spike_train
from tempord.cli import main
from tempord.outputs import heatmap_rgb, read_matrix_csv, read_ppm, sha256_file, write_heatmap, write_matrix_csv
from tempord.preprocess import load_bivariate_csv
from tempord.types import Method, TemporalOrderMatrix


def _matrix(rows, mask=None, method=Method.LM, shifts=(-1, 0, 1), fs=25.0):
    rows = np.asarray(rows, dtype=float)
    scores = np.ma.array(rows, mask=np.zeros(rows.shape, bool) if mask is None else mask)
    return TemporalOrderMatrix(scores, np.arange(rows.shape[0]) * 2, shifts[: rows.shape[1]], fs, method, "manhattan")


# --- matrix CSV ---------------------------------------------------------------

def test_matrix_csv_layout(tmp_path):
    m = _matrix([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]], mask=[[False, True, False], [False, False, False]])
    path = write_matrix_csv(m, tmp_path / "m.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0] == "window_start_s,-40,0,40"
    assert lines[1] == "0,0.1,NA,0.3"
    assert all(len(line.split(",")) == 4 for line in lines)


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    scores = rng.normal(size=(7, 3)) * 1e3
    mask = rng.uniform(size=scores.shape) < 0.3
    m = _matrix(np.abs(scores), mask=mask, method=Method.TD)
    starts, shifts_ms, back = read_matrix_csv(write_matrix_csv(m, tmp_path / "m.csv"))
    np.testing.assert_array_equal(np.ma.getmaskarray(back), mask)
    np.testing.assert_allclose(back.data[~mask], m.scores.data[~mask], rtol=1e-8, atol=1e-9)
    np.testing.assert_allclose(starts, m.window_start_times_s)
    np.testing.assert_allclose(shifts_ms, [-40, 0, 40])


# --- heatmap -----------------------------------------------------------------

def test_heatmap_all_ones_is_navy(tmp_path):
    img = read_ppm(write_heatmap(_matrix(np.ones((4, 3))), tmp_path / "h.ppm"))
    assert img.shape == (3, 4, 3)
    assert np.all(img == [0, 0, 128])


def test_heatmap_all_undefined_is_black():
    img = heatmap_rgb(_matrix(np.ones((4, 3)), mask=np.ones((4, 3), bool)))
    assert np.all(img == 0)


def test_heatmap_hand_computed_bytes(tmp_path):
    # windows x shifts; rows of the image run from the largest shift down
    m = _matrix([[1.0, 0.5], [0.0, 0.7]], mask=[[False, False], [False, True]], shifts=(0, 1))
    raw = write_heatmap(m, tmp_path / "h.ppm").read_bytes()
    expected = b"P6\n2 2\n255\n" + bytes([128, 0, 64, 0, 0, 0, 0, 0, 128, 255, 0, 0])
    assert raw == expected


def test_heatmap_td_polarity():
    m = _matrix([[0.0, 2.0], [4.0, 1.0]], method=Method.TD, shifts=(0, 1))
    img = heatmap_rgb(m)
    assert img[1, 0].tolist() == [0, 0, 128]  # minimum -> navy
    assert img[1, 1].tolist() == [255, 0, 0]  # maximum -> red


# --- commands ----------------------------------------------------------------

@pytest.fixture
def pair_csv(tmp_path):
    path = tmp_path / "pair.csv"
    assert main(["synth", "--kind", "rsa-pair", "--breath-rate-bpm", "10", "--lag-sec", "0.84",
                 "--duration-sec", "40", "--noise-sd", "1", "--output", str(path), "--no-timestamp"]) == 0
    return path


def test_synth_output_loads(pair_csv):
    rec = load_bivariate_csv(pair_csv)
    assert rec.sample_rate_hz == 25.0 and len(rec.signal1) == 1000
    assert pair_csv.with_suffix(".manifest.json").exists()


def test_analyze_writes_four_files(tmp_path, pair_csv):
    out = tmp_path / "out"
    code = main(["analyze", "--input", str(pair_csv), "--method", "td", "--distance", "manhattan",
                 "--segment-sec", "10", "--shift-min-sec", "-2", "--shift-max-sec", "2",
                 "--threshold", "0.15", "--out-dir", str(out), "--no-timestamp"])
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["pair.cv.csv", "pair.manifest.json", "pair.matrix.csv", "pair.stability.json"]
    manifest = json.loads((out / "pair.manifest.json").read_text())
    assert manifest["config"]["threshold"] == 0.15
    assert manifest["inputs"] == {"pair.csv": sha256_file(pair_csv)}
    for name, digest in manifest["outputs"].items():
        assert sha256_file(out / name) == digest
    stability = json.loads((out / "pair.stability.json").read_text())
    assert stability["manifest"] == "pair.manifest.json"
    assert {"mean_shift_ms", "sd_shift_ms", "longest_stable_run_s", "defined_ratio_percent",
            "stable_runs", "mean_run_duration_ms"} <= stability.keys()
    assert "timestamp" not in manifest


def test_analyze_bad_threshold_exit_2(pair_csv, capsys):
    assert main(["analyze", "--input", str(pair_csv), "--method", "lm", "--threshold", "1.5"]) == 2
    assert "BadThreshold" in capsys.readouterr().err


def test_analyze_missing_file_exit_3(tmp_path):
    assert main(["analyze", "--input", str(tmp_path / "absent.csv")]) == 3


def test_analyze_non_integer_samples_exit_2(pair_csv, tmp_path):
    assert main(["analyze", "--input", str(pair_csv), "--shift-max-sec", "0.5", "--out-dir", str(tmp_path)]) == 2


def test_analyze_asymmetric_axis(pair_csv, tmp_path):
    assert main(["analyze", "--input", str(pair_csv), "--shift-min-sec", "-2", "--shift-max-sec", "5",
                 "--out-dir", str(tmp_path), "--heatmap", "--no-timestamp"]) == 0
    header = (tmp_path / "pair.matrix.csv").read_text().splitlines()[0].split(",")
    assert header[1] == "-2000" and header[-1] == "5000" and len(header) == 1 + 176
    assert read_ppm(tmp_path / "pair.heatmap.ppm").shape[0] == 176


def test_analyze_byte_identical_reruns(pair_csv, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d, threads in zip(dirs, ("1", "4")):
        assert main(["analyze", "--input", str(pair_csv), "--method", "lm", "--heatmap", "--threads", threads,
                     "--out-dir", str(d), "--no-timestamp"]) == 0
    for f in sorted(dirs[0].iterdir()):
        assert f.read_bytes() == (dirs[1] / f.name).read_bytes(), f.name


def test_manifest_timestamp_present_by_default(pair_csv, tmp_path):
    assert main(["analyze", "--input", str(pair_csv), "--out-dir", str(tmp_path)]) == 0
    assert "timestamp" in json.loads((tmp_path / "pair.manifest.json").read_text())


def test_help_mentions_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["analyze", "--help"])
    text = capsys.readouterr().out
    assert "default: 10.0" in text and "default: -2.0" in text and "default: gaussian" in text


def test_report_aggregates_labels(tmp_path):
    files = []
    for label, lag, seed in [("6bpm", "2.48", 1), ("6bpm", "2.4", 2), ("15bpm", "0.32", 3)]:
        csv_path = tmp_path / f"{label}-{seed}.csv"
        bpm = label.removesuffix("bpm")
        main(["synth", "--kind", "rsa-pair", "--breath-rate-bpm", bpm, "--lag-sec", lag, "--duration-sec", "60",
              "--seed", str(seed), "--noise-sd", "1", "--output", str(csv_path), "--no-timestamp"])
        main(["analyze", "--input", str(csv_path), "--shift-max-sec", "3", "--label", label,
              "--out-dir", str(tmp_path), "--no-timestamp"])
        files.append(str(tmp_path / f"{label}-{seed}.stability.json"))
    out = tmp_path / "summary.csv"
    assert main(["report", *files, "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("label,n,n_defined,cv_mean_ms,cv_sd_ms")
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert rows["6bpm"][1] == "2" and rows["15bpm"][1] == "1"
    assert rows["15bpm"][4] == "NA"  # SD of a single record is undefined
    means = [json.loads(open(f).read())["mean_shift_ms"] for f in files[:2]]
    assert float(rows["6bpm"][3]) == pytest.approx(np.mean(means), rel=1e-8)


def test_preprocess_pipeline(tmp_path):
    fs, duration = 250.0, 40.0
    beats = regular_beats(75, duration)
    ecg = spike_train(beats, duration, noise_sd=0.02, seed=1)
    resp = np.sin(2 * np.pi * 0.25 * ecg.times)
    raw = tmp_path / "raw.csv"
    with raw.open("w") as fh:
        fh.write("time_s,ecg,resp\n")
        for t, e, r in zip(ecg.times, ecg.values, resp):
            fh.write(f"{float(t)!r},{float(e)!r},{float(r)!r}\n")
    out = tmp_path / "pair.csv"
    assert main(["preprocess", "--ecg", str(raw), "--resp", str(raw), "--output", str(out), "--no-timestamp"]) == 0
    rec = load_bivariate_csv(out)
    assert rec.sample_rate_hz == 25.0
    np.testing.assert_allclose(rec.signal1.values, 800.0, atol=4.0 + 1e-9)
    expected = np.sin(2 * np.pi * 0.25 * rec.signal2.times)
    assert np.max(np.abs(rec.signal2.values - expected)) < 0.02
    assert rec.signal1.start_time_s >= beats[0] - 1e-9
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert manifest["config"]["decimation_factor"] == 10


def test_preprocess_rate_not_multiple(tmp_path):
    raw = tmp_path / "raw.csv"
    t = np.arange(1000) / 250.0
    raw.write_text("time_s,ecg,resp\n" + "".join(f"{float(v)!r},0,0\n" for v in t))
    assert main(["preprocess", "--ecg", str(raw), "--resp", str(raw), "--target-rate", "30",
                 "--output", str(tmp_path / "o.csv")]) == 2
