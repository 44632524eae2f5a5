import csv
import io
import json
import math

import pytest

from poisbin.cli import main


def _table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestPmf:
    def test_two_halves(self, tmp_path, capsys):
        path = _write(tmp_path, "p.txt", "0.5\n0.5\n")
        assert main(["pmf", "--input", path]) == 0
        out = capsys.readouterr().out
        assert out.startswith("# schema=1\n")
        rows = _table(out)
        assert rows[0] == ["k", "w", "v", "diff"]
        assert [float(r[1]) for r in rows[1:]] == pytest.approx([0.25, 0.5, 0.25], abs=1e-16)
        for k, r in enumerate(rows[1:]):
            assert float(r[2]) == pytest.approx(math.exp(-1) / math.factorial(k), rel=1e-14)

    def test_dft_matches_dp(self, capsys):
        fam = "random-seeded:n=40,seed=5"
        assert main(["pmf", "--family", fam]) == 0
        dp = _table(capsys.readouterr().out)[1:]
        assert main(["pmf", "--family", fam, "--method", "dft"]) == 0
        dft = _table(capsys.readouterr().out)[1:]
        assert len(dp) == len(dft)
        for a, b in zip(dp, dft):
            assert abs(float(a[1]) - float(b[1])) <= 1e-12

    def test_bad_line_reports_line_number(self, tmp_path, capsys):
        path = _write(tmp_path, "bad.txt", "1.2\n")
        assert main(["pmf", "--input", path]) == 2
        err = capsys.readouterr().err
        assert f"{path}:1" in err

    def test_missing_instance(self, capsys):
        assert main(["pmf"]) == 2

    def test_json(self, capsys):
        assert main(["pmf", "--family", "equal:n=2,p=0.5", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["schema"] == 1 and len(doc["rows"]) == 3


class TestDivergence:
    def _values(self, argv, capsys):
        assert main(argv) == 0
        return {r[0]: r[1] for r in _table(capsys.readouterr().out)[1:]}

    def test_single_half(self, tmp_path, capsys):
        path = _write(tmp_path, "p.txt", "0.5\n")
        vals = self._values(["divergence", "--input", path], capsys)
        assert float(vals["kl"]) == pytest.approx(0.153426, abs=1e-6)
        assert float(vals["chi2"]) == pytest.approx(0.236541, abs=1e-6)
        assert float(vals["tv"]) == pytest.approx(0.393469, abs=1e-6)
        assert "truncation_tail_budget" in vals

    def test_zero_rate(self, tmp_path, capsys):
        path = _write(tmp_path, "z.txt", "0\n0\n")
        vals = self._values(["divergence", "--input", path], capsys)
        for key in ("tv", "kl", "chi2", "renyi_2", "tsallis_0.5", "vajda_3", "entropy_diff"):
            assert float(vals[key]) == 0.0

    def test_all_ones(self, capsys):
        vals = self._values(["divergence", "--family", "all-ones:n=5"], capsys)
        assert float(vals["kl"]) == pytest.approx(1.7403021806115441, rel=1e-12)

    def test_alpha_one_note(self, capsys):
        assert main(["divergence", "--family", "equal:n=3,p=0.2", "--alpha", "1,2"]) == 0
        captured = capsys.readouterr()
        assert "relative entropy" in captured.err
        vals = {r[0]: r[1] for r in _table(captured.out)[1:]}
        assert float(vals["renyi_1"]) == float(vals["kl"])

    def test_bad_alpha(self, capsys):
        assert main(["divergence", "--family", "equal:n=3,p=0.2", "--alpha", "x"]) == 2

    def test_extended(self, capsys):
        lo = self._values(["divergence", "--family", "equal:n=30,p=0.1"], capsys)
        hi = self._values(["divergence", "--family", "equal:n=30,p=0.1", "--precision", "extended"], capsys)
        assert hi["precision_mode"] == "extended"
        assert float(hi["kl"]) == pytest.approx(float(lo["kl"]), rel=1e-9)


class TestBounds:
    def _rows(self, argv, capsys, code=0):
        assert main(argv) == code
        rows = _table(capsys.readouterr().out)
        return {r[0]: dict(zip(rows[0], r)) for r in rows[1:]}

    def test_single_half_attains_barbour_hall(self, tmp_path, capsys):
        path = _write(tmp_path, "p.txt", "0.5\n")
        rows = self._rows(["bounds", "--input", path], capsys)
        assert abs(float(rows["barbour_hall_upper"]["margin"])) <= 1e-14

    def test_all_ones(self, capsys):
        rows = self._rows(["bounds", "--family", "all-ones:n=100"], capsys)
        assert all(rows[n]["applicable"] == "1" and rows[n]["holds"] == "1" for n in ("regime_envelope_kl", "regime_envelope_chi2"))
        assert rows["zacharovas_hwang_upper"]["applicable"] == "0"

    def test_zero_rate(self, tmp_path, capsys):
        path = _write(tmp_path, "z.txt", "0\n")
        rows = self._rows(["bounds", "--input", path], capsys)
        assert all(r["applicable"] == "0" for r in rows.values())

    def test_catalog(self, capsys):
        rows = self._rows(["bounds", "--catalog"], capsys)
        assert "barbour_hall_upper" in rows and "regime_envelope_kl" in rows
        assert all(r["statement"] for r in rows.values())


class TestSweep:
    def test_fixed_seed_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "--family", "random-seeded:n=12,seed=7", "--family", "equal:n=64,p=0.25", "--seed", "3"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.checks.csv").read_bytes() == (tmp_path / "b.checks.csv").read_bytes()
        assert "created_utc" not in a.read_text()
        meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
        assert meta["command"] == "sweep" and "created_utc" in meta

    def test_input_rejected(self, tmp_path, capsys):
        path = _write(tmp_path, "p.txt", "0.5\n")
        assert main(["sweep", "--input", path]) == 2

    def test_error_row(self, capsys):
        assert main(["sweep", "--family", "equal:n=3,p=0.5", "--family", "equal:n=2,p=1.5"]) == 0
        rows = _table(capsys.readouterr().out)
        header = rows[0]
        assert len(rows) == 3
        assert rows[2][header.index("error")].startswith("InputError")


class TestVerify:
    def test_unknown_suite(self, capsys):
        assert main(["verify", "--suite", "bogus"]) == 2

    def test_structure_suite(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["verify", "--suite", "structure", "--out", str(out)]) == 0
        assert (out / "summary.csv").exists()
        assert (out / "summary.csv.meta.json").exists()


class TestConfig:
    def test_config_supplies_defaults(self, tmp_path, capsys):
        cfg = _write(tmp_path, "cfg.json", json.dumps({"family": ["equal:n=2,p=0.5"], "format": "json"}))
        assert main(["pmf", "--config", cfg]) == 0
        assert json.loads(capsys.readouterr().out)["schema"] == 1

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = _write(tmp_path, "cfg.json", json.dumps({"family": ["equal:n=2,p=0.5"], "format": "json"}))
        assert main(["pmf", "--config", cfg, "--format", "csv"]) == 0
        assert capsys.readouterr().out.startswith("# schema=1")

    def test_bad_config(self, tmp_path, capsys):
        cfg = _write(tmp_path, "cfg.json", "{not json")
        assert main(["pmf", "--config", cfg]) == 2
        cfg = _write(tmp_path, "cfg2.json", json.dumps({"nonsense": 1}))
        assert main(["pmf", "--config", cfg]) == 2
