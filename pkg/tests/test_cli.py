import numpy as np
import pytest

from pxp2.cli import main, parse_metadata, run_sweep
from pxp2.errors import SoftSpinDomainError


def _read(path):
    with open(path) as fh:
        return fh.read()


def _data_rows(path):
    rows = []
    for line in _read(path).splitlines():
        if line.startswith("#") or not line or line[0].isalpha() or line[0] == "-" and line[1].isalpha():
            continue
        if line[0].isdigit() or line[0] == "-":
            rows.append(line.split(","))
    return rows


def test_ground_scan_writes_and_resumes(tmp_path):
    out = tmp_path / "scan.csv"
    argv = [
        "ground-scan", "--L", "10", "--delta-range", "-1", "0", "3",
        "--out", str(out), "--epsilon", "1e-4",
    ]
    assert main(argv) == 0
    full = _read(out)
    meta = parse_metadata(out)
    assert meta["command"] == "ground-scan"
    assert meta["L"] == "10"
    assert meta["n_points"] == "3"
    rows = _data_rows(out)
    assert len(rows) == 3
    assert [float(r[0]) for r in rows] == [-1.0, -0.5, 0.0]

    # drop the last point and resume: the file is completed identically
    lines = full.splitlines(keepends=True)
    with open(out, "w") as fh:
        fh.writelines(lines[:-1])
    assert main(argv) == 0
    assert _read(out) == full

    # a second resume finds nothing to do and leaves the file alone
    assert main(argv) == 0
    assert _read(out) == full


def test_ground_scan_resume_rejects_changed_config(tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["ground-scan", "--L", "8", "--delta", "0.0", "--out", str(out)]
    assert main(argv) == 0
    with pytest.raises(SystemExit, match="refusing to resume"):
        main(["ground-scan", "--L", "8", "--delta", "0.0", "--out", str(out), "--epsilon", "1e-3"])


def test_ground_scan_broken_branch_columns(tmp_path):
    out = tmp_path / "broken.csv"
    rc = main([
        "ground-scan", "--L", "10", "--delta", "-2.0", "--broken",
        "--epsilon", "1e-4", "--out", str(out),
    ])
    assert rc == 0
    text = _read(out)
    header = [l for l in text.splitlines() if l.startswith("delta,")][0]
    assert "entropy_bits_broken" in header
    row = _data_rows(out)[0]
    cols = dict(zip(header.split(","), map(float, row)))
    # deep in the ordered phase the field picks one density-wave branch
    assert abs(cols["mz_stag"]) < 0.1  # symmetric cat averages to zero
    assert abs(cols["mz_stag_broken"]) > 0.9
    assert cols["entropy_bits"] > 0.9
    assert cols["entropy_bits_broken"] < 0.1


def test_dimension_guard_refuses_with_exit_2(tmp_path, capsys):
    rc = main(["ground-scan", "--L", "30", "--delta", "0.0", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "refused:" in capsys.readouterr().err


def test_softspin_scan_reports_domain_failures(tmp_path, capsys):
    out = tmp_path / "soft.csv"
    argv = [
        "softspin", "--L", "24", "--J", "1.0",
        "--delta-range", "0.5", "5", "4", "--out", str(out),
    ]
    rc = main(argv)
    err = capsys.readouterr().err
    assert rc == 1
    assert "1 point(s) failed" in err
    assert "manifest of completed points" in err
    rows = _data_rows(out)
    assert len(rows) == 3 * 24  # one dispersion row per k for each completed delta
    # rerun retries only the failed point and leaves completed rows in place
    before = _read(out)
    assert main(argv) == 1
    assert _read(out) == before


def test_quench_cli_csv(tmp_path):
    out = tmp_path / "quench.csv"
    rc = main([
        "quench", "--model", "pxp2", "--L", "8", "--delta", "0.0",
        "--tmin", "0.1", "--tmax", "1.0", "--tpoints", "5", "--out", str(out),
    ])
    assert rc == 0
    meta = parse_metadata(out)
    assert meta["model"] == "pxp2"
    assert meta["initial"] == "Z2"
    assert meta["entropy_base"] == "2"
    text = _read(out)
    header = [l for l in text.splitlines() if l.startswith("t,")][0]
    assert header.split(",")[:4] == ["t", "entropy_bits", "return_probability", "energy"]
    assert "C_4" in header
    assert len(_data_rows(out)) == 5


def test_overlaps_cli(tmp_path):
    out = tmp_path / "ov.csv"
    rc = main(["overlaps", "--L", "8", "--delta", "0.0", "--target", "Z2", "--out", str(out)])
    assert rc == 0
    meta = parse_metadata(out)
    assert float(meta["completeness"]) == pytest.approx(1.0, abs=1e-10)
    rows = _data_rows(out)
    energies = [float(r[0]) for r in rows]
    assert energies == sorted(energies)
    assert {int(r[2]) for r in rows} == {0, 4}  # density wave lives at k = 0 and pi


def test_level_stats_cli(tmp_path):
    out = tmp_path / "stats.csv"
    rc = main(["level-stats", "--L", "22", "--delta", "0.0", "--out", str(out)])
    assert rc == 0
    meta = parse_metadata(out)
    for key in ("ks_poisson", "ks_wigner_dyson", "ks_semi_poisson", "collapsed_levels"):
        assert key in meta
    assert int(meta["collapsed_levels"]) > 0  # paired spectrum at delta = 0
    assert len(_data_rows(out)) == 40


def test_single_delta_commands_default_to_zero(tmp_path):
    out = tmp_path / "quench.csv"
    rc = main([
        "quench", "--L", "8", "--tmin", "0.1", "--tmax", "1.0",
        "--tpoints", "3", "--out", str(out),
    ])
    assert rc == 0
    assert float(parse_metadata(out)["delta"]) == 0.0


def test_input_errors_exit_cleanly(tmp_path, capsys):
    # too few levels for unfolding is a user-input problem, not a crash
    rc = main(["level-stats", "--L", "10", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_spectral_density_cli(tmp_path):
    out = tmp_path / "spec.csv"
    rc = main([
        "spectral-density", "--L", "8", "--delta", "-0.3",
        "--kpoints", "0", "1", "--omega-range", "0", "3", "11", "--out", str(out),
    ])
    assert rc == 0
    meta = parse_metadata(out)
    assert meta["k_indices"] == "0 1"
    assert "sum_rule_k0" in meta and "sum_rule_k1" in meta
    rows = _data_rows(out)
    assert len(rows) == 2 * 11
    assert all(float(r[3]) >= 0.0 for r in rows)


def test_growth_scan_cli(tmp_path):
    out = tmp_path / "growth.csv"
    rc = main([
        "growth-scan", "--L", "8", "--delta-range", "-0.5", "0", "2",
        "--window", "0.5", "2.0", "--out", str(out),
    ])
    assert rc == 0
    rows = _data_rows(out)
    assert len(rows) == 2
    assert [float(r[0]) for r in rows] == [-0.5, 0.0]


def test_basis_info(tmp_path, capsys):
    dump = tmp_path / "states.txt"
    sectors = tmp_path / "sectors.csv"
    rc = main([
        "basis-info", "--L", "10", "--dump", str(dump), "--sectors", str(sectors),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "dim=123 closed_form=123" in out
    assert dump.exists()
    total = sum(int(r[2]) for r in _data_rows(sectors))
    assert total == 123


def test_run_sweep_collects_failures_and_skips():
    log = []

    def worker(p):
        if p == 1:
            raise SoftSpinDomainError("bad point")
        return p * 10

    def writer(key, value):
        log.append((key, value))

    points = [("0", 0), ("1", 1), ("2", 2)]
    completed, failures = run_sweep(points, worker, writer, threads=1, skip={"2"})
    assert completed == ["0"]
    assert set(failures) == {"1"}
    assert log == [("0", 0)]

    log.clear()
    completed, failures = run_sweep(points, worker, writer, threads=2)
    assert completed == ["0", "2"]
    assert set(failures) == {"1"}
    assert log == [("0", 0), ("2", 20)]
