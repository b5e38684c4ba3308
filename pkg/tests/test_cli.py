import csv
import io
import math

import numpy as np
import pytest

from sdftfreq.bench import CSV_HEADER
from sdftfreq.cli import main

FS = 128e6


def tone(freq_hz, n=128):
    return np.exp(2j * math.pi * freq_hz / FS * np.arange(n))


def write_csv_iq(path, samples, header=True):
    lines = ["index,re,im"] if header else []
    lines += [f"{i},{float(z.real)!r},{float(z.imag)!r}" for i, z in enumerate(samples)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def write_raw(path, samples):
    inter = np.empty(2 * len(samples), dtype="<f8")
    inter[0::2] = np.real(samples)
    inter[1::2] = np.imag(samples)
    inter.tofile(path)
    return str(path)


def run_estimate(capsys, path, *extra):
    code = main(["estimate", path, "--sample-rate", str(FS), *extra])
    out, err = capsys.readouterr()
    return code, out, err


def parse_line(out):
    lines = out.splitlines()
    assert len(lines) == 1
    est, peak, delta, omega, freq, clamped = lines[0].split(",")
    return est, int(peak), float(delta), float(omega), float(freq), clamped


class TestEstimate:
    def test_exact_bin_tone(self, tmp_path, capsys):
        path = write_csv_iq(tmp_path / "t.csv", tone(40e6))
        code, out, _ = run_estimate(capsys, path)
        assert code == 0
        est, peak, delta, omega, freq, clamped = parse_line(out)
        assert est == "proposed" and peak == 40 and clamped == "0"
        assert freq == pytest.approx(40e6, abs=1e-3)
        assert abs(delta) < 1e-9
        assert omega == pytest.approx(2 * math.pi * 40 / 128, abs=1e-12)

    @pytest.mark.parametrize("fmt", ["csv-iq", "raw-f64le-iq"])
    def test_half_bin_tone(self, tmp_path, capsys, fmt):
        x = tone(30.5e6)
        if fmt == "csv-iq":
            path = write_csv_iq(tmp_path / "t.csv", x)
        else:
            path = write_raw(tmp_path / "t.bin", x)
        code, out, _ = run_estimate(capsys, path, "--format", fmt, "--damping", "0.9")
        assert code == 0
        assert abs(parse_line(out)[4] - 30.5e6) < 1000

    def test_uses_last_window(self, tmp_path, capsys):
        x = np.concatenate([tone(10e6, 300), tone(30.3e6, 128)])
        path = write_csv_iq(tmp_path / "t.csv", x, header=False)
        code, out, _ = run_estimate(capsys, path, "--estimator", "candan")
        assert code == 0
        assert abs(parse_line(out)[4] - 30.3e6) < 1000

    def test_short_file(self, tmp_path, capsys):
        path = write_csv_iq(tmp_path / "short.csv", tone(30e6, 127))
        code, out, err = run_estimate(capsys, path)
        assert code == 2
        assert out == ""
        assert "127" in err and "128" in err

    @pytest.mark.parametrize(
        "content", ["index,re,im\n0,abc,1\n", "0,1\n", "\x00\x01garbage"]
    )
    def test_undecodable(self, tmp_path, capsys, content):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        code, out, err = run_estimate(capsys, str(path))
        assert code == 2 and out == "" and "error" in err

    def test_odd_raw_length(self, tmp_path, capsys):
        path = tmp_path / "odd.bin"
        np.zeros(257, dtype="<f8").tofile(path)
        code, _, err = run_estimate(capsys, str(path), "--format", "raw-f64le-iq")
        assert code == 2 and "odd" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_estimate(capsys, str(tmp_path / "nope.csv"))
        assert code == 2 and "cannot read" in err

    def test_all_zero_is_degenerate(self, tmp_path, capsys):
        path = write_raw(tmp_path / "z.bin", np.zeros(128, dtype=complex))
        code, out, _ = run_estimate(capsys, path, "--format", "raw-f64le-iq")
        assert code == 3 and out == ""

    def test_bad_damping_is_usage_error(self, tmp_path, capsys):
        path = write_csv_iq(tmp_path / "t.csv", tone(40e6))
        code, _, _ = run_estimate(capsys, path, "--damping", "1.5")
        assert code == 2

    def test_missing_required_flag(self, capsys):
        assert main(["estimate", "x.csv"]) == 2


def bench_csv(capsys, *argv):
    code = main(["bench", *argv])
    out, err = capsys.readouterr()
    assert code == 0, err
    return out, err


class TestBench:
    def test_same_seed_same_bytes(self, capsys):
        a, _ = bench_csv(capsys, "--trials", "1", "--seed", "7")
        b, _ = bench_csv(capsys, "--trials", "1", "--seed", "7")
        assert a == b
        assert len(a.splitlines()) == 1 + 81

    def test_stdout_is_csv_only(self, capsys):
        out, err = bench_csv(
            capsys, "--trials", "3", "--freqs", "30.2e6", "--snr-db", "2,none"
        )
        rows = list(csv.reader(io.StringIO(out)))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 1 + 2 * 3
        assert "cells in" in err

    def test_half_bin_warning_goes_to_stderr(self, capsys):
        out, err = bench_csv(
            capsys, "--trials", "1", "--freqs", "30.5e6,30.2e6", "--snr-db", "none"
        )
        assert "30500000" in err
        # the flagged cell still runs
        assert sum("30500000" in line for line in out.splitlines()[1:]) == 3

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "trials = 2\nfreq_list_hz = 30.1e6\nsnr_db_list = none\nestimators = proposed\n"
        )
        out, _ = bench_csv(capsys, "--config", str(cfg), "--seed", "3")
        assert len(out.splitlines()) == 2

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("trials = 2\nfrobnicate = 1\n")
        code = main(["bench", "--config", str(cfg)])
        out, err = capsys.readouterr()
        assert code == 2 and out == "" and "frobnicate" in err

    def test_invalid_override(self, capsys):
        assert main(["bench", "--trials", "0"]) == 2

    def test_output_file(self, tmp_path, capsys):
        dest = tmp_path / "out.csv"
        code = main(["bench", "--trials", "1", "--snr-db", "none", "-o", str(dest)])
        out, _ = capsys.readouterr()
        assert code == 0 and out == ""
        assert len(dest.read_text().splitlines()) == 1 + 27

    def test_sweep_uses_damping_list(self, capsys):
        code = main(["sweep", "--trials", "1", "--snr-db", "none", "--estimators", "proposed"])
        out, _ = capsys.readouterr()
        assert code == 0
        dampings = {row[2] for row in list(csv.reader(io.StringIO(out)))[1:]}
        assert {float(d) for d in dampings} == {0.8, 0.9, 0.95, 0.99}


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    path = write_csv_iq(tmp_path / "t.csv", tone(40e6))
    proc = subprocess.run(
        [sys.executable, "-m", "sdftfreq", "estimate", path, "--sample-rate", str(FS)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("proposed,40,")
