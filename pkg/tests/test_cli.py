import numpy as np
import pytest

from dbsampling.cli import (EXIT_BOUND, EXIT_CONFIG, EXIT_OK, dump_json,
                            fmt_float, load_config, main, write_csv)

BASE_CONFIG = """
[potential]
spec = preset cosine 2 2 4.7123889803846899

[domain]
a = 1.5707963267948966
b = 3.1415926535897931
gamma = 1.5707963267948966

[sampling]
n_max = 24
n_trunc = 12

[zgrid]
re_min = 0.0
re_max = 10.0
re_points = 7

[noise]
deltas = 0.1,0.01
seed = 7
trials = 2
psi_trials = 3

[output]
dir = {out}
"""


@pytest.fixture
def config_file(tmp_path):
    def make(extra="", **kwargs):
        out = tmp_path / kwargs.pop("out", "out")
        text = BASE_CONFIG.format(out=out) + extra
        for key, val in kwargs.items():
            text = text.replace(key, val)
        path = tmp_path / "run.ini"
        path.write_text(text)
        return path, out
    return make


class TestFormatting:
    def test_fmt_has_17_significant_digits(self):
        assert fmt_float(np.pi) == "3.1415926535897931"
        assert float(fmt_float(0.1)) == 0.1
        x = 1.0 / 3.0
        assert float(fmt_float(x)) == x  # round-trip exact

    def test_fmt_rejects_non_finite(self):
        from dbsampling.numerics import NumericsError
        with pytest.raises(NumericsError):
            fmt_float(float("nan"))

    def test_csv_and_json_emission(self, tmp_path):
        csv = tmp_path / "t.csv"
        write_csv(csv, ["a", "b"], [(1, 0.5), (2, np.pi)])
        text = csv.read_text()
        assert text.splitlines()[0] == "a,b"
        assert "3.1415926535897931" in text
        js = tmp_path / "t.json"
        dump_json(js, {"x": 0.25, "flag": True, "items": [1, 2]})
        out = js.read_text()
        assert '"schema_version": 1' in out
        assert '"flag": true' in out


class TestConfig:
    def test_parse_round_trip(self, config_file):
        path, out = config_file()
        cfg = load_config(path)
        assert cfg.n_max == 24 and cfg.n_trunc == 12
        assert cfg.deltas == (0.1, 0.01)
        assert abs(cfg.b - np.pi) < 1e-12
        assert len(cfg.real_z_grid()) == 7

    def test_seed_and_tol_overrides(self, config_file):
        path, _ = config_file()
        cfg = load_config(path, seed_override=99,
                          tol_overrides=["quad_tol=1e-9"])
        assert cfg.seed == 99 and cfg.tolerances.quad_tol == 1e-9

    def test_invalid_geometry_rejected(self, config_file):
        path, _ = config_file(**{"\na = 1.5707963267948966": "\na = 5.0"})
        with pytest.raises(Exception):
            load_config(path)

    def test_missing_file_is_config_error(self, tmp_path):
        rc = main(["spectrum", "--config", str(tmp_path / "nope.ini")])
        assert rc == EXIT_CONFIG

    def test_bad_tol_override_is_config_error(self, config_file):
        path, _ = config_file()
        rc = main(["spectrum", "--config", str(path), "--tol-override", "oops"])
        assert rc == EXIT_CONFIG


class TestSubcommands:
    def test_spectrum_csv(self, config_file):
        path, out = config_file()
        rc = main(["spectrum", "--config", str(path)])
        assert rc == EXIT_OK
        lines = (out / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "n,lambda,norming,boundary_residual"
        assert len(lines) == 26  # header + 25 eigenvalues

    def test_spectrum_free_matches_squares(self, config_file):
        path, out = config_file(
            **{"spec = preset cosine 2 2 4.7123889803846899":
               "spec = preset zero 3.1415926535897931",
               "b = 3.1415926535897931": "b = 3.1415926535897931"})
        rc = main(["spectrum", "--config", str(path)])
        assert rc == EXIT_OK
        lines = (out / "spectrum.csv").read_text().splitlines()[1:]
        lam = np.array([float(ln.split(",")[1]) for ln in lines])
        assert np.max(np.abs(lam - np.arange(25.0) ** 2)) <= 1e-8

    def test_kernel_csv(self, config_file):
        path, out = config_file()
        rc = main(["kernel", "--config", str(path)])
        assert rc == EXIT_OK
        lines = (out / "kernel.csv").read_text().splitlines()
        assert lines[0] == "z_re,z_im,w_re,w_im,k_re,k_im"
        assert len(lines) == 1 + 49

    def test_reconstruct_csv(self, config_file):
        path, out = config_file()
        rc = main(["reconstruct", "--config", str(path)])
        assert rc == EXIT_OK
        lines = (out / "reconstruct.csv").read_text().splitlines()
        assert lines[0] == "z_re,z_im,f_exact_re,f_exact_im,f_N_re,f_N_im,abs_err"
        errs = [float(ln.split(",")[-1]) for ln in lines[1:]]
        assert max(errs) < 1e-2

    def test_oversample_json(self, config_file):
        path, out = config_file()
        rc = main(["oversample", "--config", str(path)])
        data = (out / "oversample.json").read_text()
        assert '"empirical_C"' in data and '"ratios"' in data
        assert rc in (EXIT_OK, EXIT_BOUND)  # tail clause may sit over budget

    def test_undersample_json(self, config_file):
        path, out = config_file(
            **{"\na = 1.5707963267948966": "\na = 3.1415926535897931",
               "\nb = 3.1415926535897931": "\nb = 4.7123889803846899"})
        rc = main(["undersample", "--config", str(path)])
        assert rc == EXIT_OK
        data = (out / "undersample.json").read_text()
        for key in ("int_psi_tail", "sup_h", "max_violation", "trials"):
            assert f'"{key}"' in data

    def test_audit_json(self, config_file):
        path, out = config_file()
        rc = main(["audit", "--config", str(path)])
        assert rc == EXIT_OK
        assert (out / "audit.json").exists()
        assert (out / "audit_sequences.csv").exists()

    def test_numerical_failure_exit_code(self, config_file, monkeypatch):
        from dbsampling import cli as cli_mod
        from dbsampling.spectrum import SpectrumError

        def boom(cfg):
            raise SpectrumError("injected")
        monkeypatch.setitem(cli_mod.COMMANDS, "spectrum", boom)
        path, _ = config_file()
        rc = cli_mod.main(["spectrum", "--config", str(path)])
        assert rc == 3


class TestDeterminism:
    @pytest.mark.parametrize("command", ["spectrum", "reconstruct",
                                         "undersample"])
    def test_byte_identical_reruns(self, config_file, command, tmp_path):
        path, out = config_file()
        args = {"spectrum": [], "reconstruct": [], "undersample": []}[command]
        if command == "undersample":
            path, out = config_file(
                **{"\na = 1.5707963267948966": "\na = 3.1415926535897931",
                   "\nb = 3.1415926535897931": "\nb = 4.7123889803846899"})
        main([command, "--config", str(path), *args])
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        main([command, "--config", str(path), *args])
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_threads_do_not_change_bytes(self, config_file):
        path, out = config_file(
            **{"\na = 1.5707963267948966": "\na = 3.1415926535897931",
               "\nb = 3.1415926535897931": "\nb = 4.7123889803846899"})
        main(["undersample", "--config", str(path), "--threads", "1"])
        single = (out / "undersample.json").read_bytes()
        main(["undersample", "--config", str(path), "--threads", "4"])
        multi = (out / "undersample.json").read_bytes()
        assert single == multi
