"""CLI subcommands: exit codes, determinism, file formats and reports."""

import json
import os

import numpy as np
import pytest

import synthimages
from retinexpde.cli import main
from retinexpde.engine import STOP_REASONS
from retinexpde.fileio import read_image, write_image
from retinexpde.metrics import METRIC_COLUMNS

TRACE_HEADER = "iter,entropy,dE,d2E,pqm,mu,sigma,stop_reason"


@pytest.fixture(scope="module")
def small_png(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_small")
    img = dict(synthimages.metric_corpus())["ramp_colour"]
    path = d / "small.png"
    write_image(str(path), img)
    return path


@pytest.fixture(scope="module")
def pair_pngs(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_pair")
    img = dict(synthimages.metric_corpus())["ramp_colour"]
    a, b = d / "orig.png", d / "enh.png"
    write_image(str(a), img)
    write_image(str(b), np.clip(img * 1.1 + 0.02, 0.0, 1.0))
    return a, b


def _rows_by_first_field(csv_text):
    lines = csv_text.splitlines()
    header = lines[0].split(",")
    out = {}
    for line in lines[1:]:
        parts = line.split(",")
        out[parts[0]] = dict(zip(header[1:], parts[1:]))
    return out


class TestExitCodes:
    def test_success_is_zero(self, small_png, tmp_path):
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--iters", "1"]) == 0

    def test_missing_input_is_two(self, tmp_path):
        assert main(["enhance", str(tmp_path / "nope.png"),
                     str(tmp_path / "o.png")]) == 2

    def test_unsupported_extension_is_two(self, small_png, tmp_path):
        assert main(["enhance", str(small_png), str(tmp_path / "o.jpg")]) == 2

    def test_corrupt_image_is_two(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_text("this is not a png")
        assert main(["enhance", str(bad), str(tmp_path / "o.png")]) == 2

    def test_unknown_flag_is_three(self, small_png, tmp_path, capsys):
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--frobnicate"]) == 3
        assert "error" in capsys.readouterr().err

    def test_bad_flag_value_is_three(self, small_png, tmp_path, capsys):
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--alpha", "lots"]) == 3
        capsys.readouterr()

    def test_unstable_parameters_are_three(self, small_png, tmp_path, capsys):
        code = main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--alpha", "1.0", "--lambda", "0.3", "--dt", "0.5"])
        assert code == 3
        assert "unstable step" in capsys.readouterr().err

    def test_unknown_algorithm_is_three(self, small_png, tmp_path, capsys):
        assert main(["compare", str(small_png), "--algos", "sparkle",
                     "--out-dir", str(tmp_path)]) == 3
        capsys.readouterr()

    def test_empty_algorithm_list_is_three(self, small_png, tmp_path, capsys):
        assert main(["compare", str(small_png), "--algos", ",",
                     "--out-dir", str(tmp_path)]) == 3
        capsys.readouterr()

    def test_help_is_zero(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()


class TestEnhance:
    def test_writes_valid_image(self, small_png, tmp_path):
        out = tmp_path / "o.png"
        assert main(["enhance", str(small_png), str(out), "--iters", "2"]) == 0
        img = read_image(str(out))
        assert img.shape == (48, 48, 3)
        assert img.min() >= 0.0 and img.max() <= 1.0

    def test_reruns_are_byte_identical(self, small_png, tmp_path):
        args = ["--iters", "2", "--trace", None, "--report", None]
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.png"
            trace = tmp_path / f"{tag}_trace.csv"
            report = tmp_path / f"{tag}_report.csv"
            code = main(["enhance", str(small_png), str(out),
                         "--iters", "2", "--trace", str(trace),
                         "--report", str(report)])
            assert code == 0
            blobs.append((out.read_bytes(), trace.read_bytes(),
                          report.read_bytes()))
        assert blobs[0] == blobs[1]

    def test_auto_reruns_are_byte_identical(self, small_png, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"auto_{tag}.png"
            assert main(["enhance", str(small_png), str(out),
                         "--max-iter", "20"]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_trace_csv_layout(self, small_png, tmp_path):
        trace = tmp_path / "trace.csv"
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--iters", "3", "--trace", str(trace)]) == 0
        lines = trace.read_text().splitlines()
        assert lines[0] == TRACE_HEADER
        assert len(lines) == 4
        assert all(len(l.split(",")) == 8 for l in lines[1:])
        assert [l.split(",")[0] for l in lines[1:]] == ["1", "2", "3"]
        # every numeric column must be a bare decimal literal
        for line in lines[1:]:
            for tok in line.split(",")[:7]:
                float(tok)
        assert lines[1].split(",")[-1] == ""
        assert lines[-1].split(",")[-1] == "fixed_iter"

    def test_auto_trace_marks_stop_reason(self, small_png, tmp_path):
        trace = tmp_path / "trace.csv"
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--max-iter", "20", "--trace", str(trace)]) == 0
        lines = trace.read_text().splitlines()
        assert lines[-1].split(",")[-1] in STOP_REASONS

    def test_zero_iteration_rgb_run_is_identity(self, small_png, tmp_path):
        out = tmp_path / "o.png"
        assert main(["enhance", str(small_png), str(out),
                     "--alpha", "0", "--beta", "0", "--lambda", "0",
                     "--mode", "rgb", "--iters", "0"]) == 0
        assert np.array_equal(read_image(str(out)), read_image(str(small_png)))

    def test_report_csv_and_json_agree(self, small_png, tmp_path):
        csv_p = tmp_path / "rep.csv"
        json_p = tmp_path / "rep.json"
        for fmt, path in (("csv", csv_p), ("json", json_p)):
            assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                         "--iters", "2", "--report", str(path),
                         "--format", fmt]) == 0
        lines = csv_p.read_text().splitlines()
        assert lines[0] == ",".join(METRIC_COLUMNS)
        csv_vals = [float(t) for t in lines[1].split(",")]
        loaded = json.loads(json_p.read_text())
        assert list(loaded) == list(METRIC_COLUMNS)
        assert csv_vals == [loaded[c] for c in METRIC_COLUMNS]

    def test_preset_accepted(self, small_png, tmp_path):
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--preset", "colourcast", "--iters", "1"]) == 0

    def test_no_temp_files_left(self, small_png, tmp_path):
        assert main(["enhance", str(small_png), str(tmp_path / "o.png"),
                     "--iters", "1", "--trace", str(tmp_path / "t.csv")]) == 0
        leftovers = [n for n in os.listdir(tmp_path) if n.startswith(".tmp_")]
        assert leftovers == []


class TestRoundTrip:
    @pytest.mark.parametrize("ext", ["png", "ppm"])
    def test_eight_bit_round_trip_lossless(self, tmp_path, ext, rng):
        raw = rng.integers(0, 256, (21, 17, 3)).astype(np.float64)
        path = tmp_path / f"rt.{ext}"
        write_image(str(path), raw / 255.0)
        back = read_image(str(path))
        assert np.array_equal(back, raw / 255.0)

    def test_quantization_is_round_to_nearest(self, tmp_path):
        img = np.full((8, 8, 3), 0.25)
        path = tmp_path / "q.png"
        write_image(str(path), img)
        # 0.25 * 255 = 63.75 rounds to 64
        assert np.array_equal(read_image(str(path)),
                              np.full((8, 8, 3), 64 / 255.0))


class TestSweep:
    def test_sweep_outputs(self, small_png, tmp_path):
        out_dir = tmp_path / "sweep"
        assert main(["sweep", str(small_png), "--alpha-list", "0.4,0.6",
                     "--iters", "2", "--out-dir", str(out_dir)]) == 0
        table = (out_dir / "sweep.csv").read_text().splitlines()
        assert table[0] == "alpha," + ",".join(METRIC_COLUMNS) + ",n"
        assert len(table) == 3
        assert table[1].split(",")[0] == "0.4"
        assert table[2].split(",")[0] == "0.6"
        for tag in ("0.4", "0.6"):
            lines = (out_dir / f"trace_alpha_{tag}.csv").read_text().splitlines()
            assert lines[0] == TRACE_HEADER
            assert len(lines) == 3

    def test_sweep_reruns_byte_identical(self, small_png, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            out_dir = tmp_path / tag
            assert main(["sweep", str(small_png), "--alpha-list", "0.3,0.5",
                         "--iters", "1", "--out-dir", str(out_dir)]) == 0
            blobs.append((out_dir / "sweep.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestCompare:
    def test_compare_outputs(self, small_png, tmp_path):
        out_dir = tmp_path / "cmp"
        algos = "ghe,cs,goc1,shf,pa-rgb,pde-ghe"
        assert main(["compare", str(small_png), "--algos", algos,
                     "--iters", "2", "--out-dir", str(out_dir)]) == 0
        table = (out_dir / "compare.csv").read_text().splitlines()
        assert table[0] == "algo," + ",".join(METRIC_COLUMNS)
        names = [l.split(",")[0] for l in table[1:]]
        assert names == algos.split(",")
        for name in names:
            assert (out_dir / f"{name}.png").exists()

    def test_identity_algorithm_rows(self, small_png, tmp_path):
        # a zero-iteration rgb run reproduces the input, so every ratio is 1
        out_dir = tmp_path / "ident"
        assert main(["compare", str(small_png), "--algos", "pa-rgb",
                     "--iters", "0", "--out-dir", str(out_dir)]) == 0
        rows = _rows_by_first_field((out_dir / "compare.csv").read_text())
        row = rows["pa-rgb"]
        for col in ("RC", "F", "REMEC", "RM", "RSD", "RE", "RAG"):
            assert float(row[col]) == 1.0
        assert float(row["HDI"]) == 0.0

    def test_auto_hsi_algorithm(self, small_png, tmp_path):
        out_dir = tmp_path / "pa"
        assert main(["compare", str(small_png), "--algos", "pa-hsi",
                     "--max-iter", "15", "--out-dir", str(out_dir)]) == 0
        assert (out_dir / "pa-hsi.png").exists()


class TestMetrics:
    def test_csv_to_stdout(self, pair_pngs, capsys):
        a, b = pair_pngs
        assert main(["metrics", str(a), str(b)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(METRIC_COLUMNS)
        assert len(lines) == 2

    def test_json_to_file(self, pair_pngs, tmp_path):
        a, b = pair_pngs
        out = tmp_path / "m.json"
        assert main(["metrics", str(a), str(b), "--format", "json",
                     "--out", str(out)]) == 0
        loaded = json.loads(out.read_text())
        assert list(loaded) == list(METRIC_COLUMNS)

    def test_identical_pair_ratios(self, pair_pngs, capsys):
        a, _ = pair_pngs
        assert main(["metrics", str(a), str(a)]) == 0
        lines = capsys.readouterr().out.splitlines()
        row = dict(zip(lines[0].split(","), lines[1].split(",")))
        for col in ("RC", "F", "REMEC", "RM", "RSD", "RE", "RAG"):
            assert float(row[col]) == 1.0
        assert float(row["HDI"]) == 0.0

    def test_shape_mismatch_is_three(self, pair_pngs, tmp_path, capsys):
        a, _ = pair_pngs
        smaller = tmp_path / "small2.png"
        write_image(str(smaller), np.zeros((24, 24, 3)))
        assert main(["metrics", str(a), str(smaller)]) == 3
        capsys.readouterr()
