import os

import pytest

from mctrack.cli import main
from mctrack.pipeline import load_detections, load_tracks


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A fully populated working directory: synth -> pairs -> train -> track."""
    root = tmp_path_factory.mktemp("cli")
    seq = str(root / "seq")
    rc = main([
        "synth", "--seed", "7", "--out", seq,
        "--persons", "3", "--frames", "60",
    ])
    assert rc == 0
    det = os.path.join(seq, "det.txt")
    gt = os.path.join(seq, "gt.txt")
    matches = os.path.join(seq, "matches.txt")
    pairs = str(root / "pairs.txt")
    rc = main(["pairs", "--det", det, "--gt", gt, "--matches", matches, "--out", pairs])
    assert rc == 0
    model = str(root / "model.txt")
    rc = main(["train", "--pairs", pairs, "--out", model])
    assert rc == 0
    tracks = str(root / "tracks.txt")
    rc = main([
        "track", "--det", det, "--matches", matches, "--model", model,
        "--out", tracks, "--diag", str(root / "diag.txt"),
        "--dump-config", str(root / "effective.txt"),
    ])
    assert rc == 0
    return {
        "root": root, "seq": seq, "det": det, "gt": gt,
        "matches": matches, "pairs": pairs, "model": model, "tracks": tracks,
    }


def test_synth_outputs_exist(workdir):
    for name in ("det.txt", "gt.txt", "matches.txt", "seqinfo.txt", "config.txt"):
        assert os.path.exists(os.path.join(workdir["seq"], name))
    assert len(load_detections(workdir["det"])) > 0


def test_synth_requires_seed(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["synth", "--out", str(tmp_path / "x")])


def test_pairs_file_has_header(workdir):
    with open(workdir["pairs"]) as fh:
        assert fh.readline().startswith("# scheme=dm tau_max=10")


def test_track_then_eval_writes_reports_and_figure(workdir):
    out = str(workdir["root"] / "report")
    rc = main(["eval", "--tracks", workdir["tracks"], "--gt", workdir["gt"], "--out", out])
    assert rc == 0
    assert os.path.exists(out + ".txt")
    assert os.path.exists(out + ".csv")
    assert os.path.exists(out + ".png")
    with open(out + ".csv") as fh:
        rows = dict(line.strip().split(",", 1) for line in fh)
    assert float(rows["mota"]) > 0.8


def test_eval_no_figure_flag(workdir):
    out = str(workdir["root"] / "nofig")
    rc = main(["eval", "--tracks", workdir["tracks"], "--gt", workdir["gt"],
               "--out", out, "--no-figure"])
    assert rc == 0
    assert os.path.exists(out + ".csv")
    assert not os.path.exists(out + ".png")


def test_track_deterministic_byte_identical(workdir):
    other = str(workdir["root"] / "tracks2.txt")
    rc = main([
        "track", "--det", workdir["det"], "--matches", workdir["matches"],
        "--model", workdir["model"], "--out", other,
    ])
    assert rc == 0
    with open(workdir["tracks"], "rb") as a, open(other, "rb") as b:
        assert a.read() == b.read()


def test_track_score_min_filters(workdir):
    out = str(workdir["root"] / "tracks_thr.txt")
    rc = main([
        "track", "--det", workdir["det"], "--matches", workdir["matches"],
        "--model", workdir["model"], "--out", out, "--score-min", "0.5",
    ])
    assert rc == 0
    assert os.path.exists(out)


def test_train_report_figure(workdir):
    prefix = str(workdir["root"] / "trainrep")
    rc = main(["train", "--pairs", workdir["pairs"], "--out",
               str(workdir["root"] / "model2.txt"), "--report", prefix])
    assert rc == 0
    assert os.path.exists(prefix + ".csv")
    assert os.path.exists(prefix + ".png")


def test_missing_file_is_one_line_error(tmp_path, capsys):
    rc = main(["eval", "--tracks", "/nonexistent/t.txt", "--gt", "/nonexistent/g.txt",
               "--out", str(tmp_path / "r")])
    assert rc == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: ")
    assert "\n" not in err


def test_malformed_det_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1,2,3\n")
    model = tmp_path / "m.txt"
    model.write_text("scheme st\ntau_max 10\nbins 0\n")
    rc = main(["track", "--det", str(bad), "--model", str(model),
               "--out", str(tmp_path / "t.txt")])
    assert rc == 1
    assert "line 1" in capsys.readouterr().err


def test_bench_writes_table_and_figure(tmp_path):
    prefix = str(tmp_path / "sweep")
    rc = main([
        "bench", "--seed", "5", "--out", prefix,
        "--persons", "2", "--frames", "40",
    ])
    assert rc == 0
    assert os.path.exists(prefix + ".csv")
    assert os.path.exists(prefix + ".png")
    with open(prefix + ".csv") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    assert lines[0].startswith("score_min,")
    assert len(lines) == 6  # header + 5 thresholds


def test_st_scheme_pipeline(workdir):
    root = workdir["root"]
    pairs = str(root / "pairs_st.txt")
    rc = main(["pairs", "--det", workdir["det"], "--gt", workdir["gt"],
               "--scheme", "st", "--out", pairs])
    assert rc == 0
    model = str(root / "model_st.txt")
    assert main(["train", "--pairs", pairs, "--out", model]) == 0
    out = str(root / "tracks_st.txt")
    rc = main(["track", "--det", workdir["det"], "--model", model, "--out", out])
    assert rc == 0
    assert load_tracks(out)
