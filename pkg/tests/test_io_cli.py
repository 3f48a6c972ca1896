import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edistill import cli, io, states
from edistill.errors import StateFileError
from edistill.states import DensityOp, Instrument, LocalMap


@pytest.fixture
def files(tmp_path):
    paths = {}
    docs = {
        "mes2": states.mes(2, 2).projector(),
        "maxmixed4": DensityOp(np.eye(4) / 4, (2, 2)),
        "rho": states.random_density(4, seed=3, dims=(2, 2)),
        "qrho": DensityOp(np.diag([0.75, 0.25]), (2,)),
        "qsigma": DensityOp(np.eye(2) / 2, (2,)),
        "mes2pure": states.mes(2, 2),
    }
    for name, s in docs.items():
        p = tmp_path / f"{name}.json"
        io.save_state(s, p)
        paths[name] = str(p)
    fam = tmp_path / "family"
    fam.mkdir()
    io.save_member(Instrument.identity(2), fam / "a_identity.json")
    io.save_member(Instrument.measurement(np.eye(2)), fam / "b_measure.json")
    paths["family"] = str(fam)
    paths["dir"] = tmp_path
    return paths


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), out, err


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestStateFiles:
    @given(re=arrays(float, (3, 3), elements=finite), im=arrays(float, (3, 3), elements=finite))
    @settings(max_examples=50, deadline=None)
    def test_pairs_round_trip_bit_exact(self, re, im):
        M = np.empty((3, 3), dtype=complex)
        M.real, M.imag = re, im
        doc = json.loads(json.dumps(io._pairs(M)))
        back = io._complex(doc, "x", 2)
        assert np.array_equal(back.view(np.uint64), M.view(np.uint64))

    @given(seed=st.integers(0, 10 ** 6))
    @settings(max_examples=25, deadline=None)
    def test_state_round_trip(self, seed, tmp_path_factory):
        rho = states.random_density(6, seed=seed, dims=(2, 3))
        p = tmp_path_factory.mktemp("rt") / "s.json"
        io.save_state(rho, p)
        back = io.load_state(p)
        assert np.array_equal(back.matrix, rho.matrix) and back.dims == rho.dims
        assert back.labels == rho.labels

    def test_pure_round_trip(self, tmp_path):
        v = states.random_pure((2, 3), seed=1)
        io.save_state(v, tmp_path / "v.json")
        back = io.load_state(tmp_path / "v.json")
        assert np.array_equal(back.amplitudes, v.amplitudes)
        assert np.array_equal(io.load_density(tmp_path / "v.json").matrix, v.projector().matrix)

    def test_malformed_json_reports_line(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{\n "dims": [2],\n "matrix": [[1, 0]\n')
        with pytest.raises(StateFileError, match="line"):
            io.load_state(p)

    def test_missing_field(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"dims": [2]}')
        with pytest.raises(StateFileError, match="matrix"):
            io.load_state(p)

    def test_bad_pairs(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"dims": [2], "matrix": [[1, 0], [0, 1]]}')
        with pytest.raises(StateFileError, match="pairs"):
            io.load_state(p)

    def test_not_psd(self):
        doc = {"dims": [2], "matrix": io._pairs(np.diag([1.5, -0.5]))}
        with pytest.raises(Exception, match="<state>"):
            io.state_from_dict(doc)

    def test_family_round_trip(self, tmp_path):
        ins = Instrument((("0", (np.diag([1.0, 0.6]),)), ("1", (np.diag([0.0, 0.8]),))), name="filt")
        lm = LocalMap.discard_b(2, 2)
        io.save_member(ins, tmp_path / "0.json")
        io.save_member(lm, tmp_path / "1.json")
        a, b = io.load_family(tmp_path)
        assert isinstance(a, Instrument) and a.name == "filt"
        assert np.array_equal(a.branches[0][1][0], ins.branches[0][1][0])
        assert isinstance(b, LocalMap) and b.out_dims == lm.out_dims

    def test_empty_family(self, tmp_path):
        with pytest.raises(StateFileError):
            io.load_family(tmp_path)


class TestCli:
    def test_entropy_examples(self, files, capsys):
        code, rep, _, _ = run(capsys, "entropy", "--quantity", "I0", "--state", files["mes2"])
        assert code == 0 and rep["result"]["value"] == pytest.approx(1.0, abs=1e-12)
        _, rep, _, _ = run(capsys, "entropy", "--quantity", "H2", "--state", files["maxmixed4"])
        assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-12)
        _, rep, _, _ = run(capsys, "entropy", "--quantity", "Dmax", "--state", files["rho"],
                           "--sigma", files["rho"])
        assert rep["result"]["value"] == pytest.approx(0.0, abs=1e-9)

    def test_entropy_pure_file(self, files, capsys):
        _, rep, _, _ = run(capsys, "entropy", "--quantity", "I", "--state", files["mes2pure"])
        assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-10)

    def test_entropy_needs_sigma(self, files, capsys):
        code, rep, _, err = run(capsys, "entropy", "--quantity", "S0", "--state", files["rho"])
        assert code == 2 and rep is None and "sigma" in err

    def test_smoothed_entropy_has_witness(self, files, capsys):
        _, rep, _, _ = run(capsys, "entropy", "--quantity", "I0", "--delta", "0.1",
                           "--state", files["rho"])
        res = rep["result"]
        assert res["side"] == "lower" and res["witness"] is not None

    def test_report_self_describes(self, files, capsys):
        argv = ["entropy", "--quantity", "I", "--state", files["rho"]]
        _, rep, _, _ = run(capsys, *argv)
        assert rep["command"] == ["edistill"] + argv and "version" in rep
        assert "runtime_ms" not in rep
        _, rep, _, _ = run(capsys, *argv, "--timing")
        assert rep["runtime_ms"] >= 0

    def test_bound_examples(self, files, capsys):
        code, rep, _, _ = run(capsys, "bound", "hashing", "--state", files["mes2"], "--eps", "0")
        assert code == 0 and rep["result"]["value"] == 0
        assert abs(rep["result"]["delta_remainder"]) <= 1e-12
        _, rep, _, _ = run(capsys, "bound", "oneway", "--state", files["mes2"], "--eps", "0")
        assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-9)
        assert rep["result"]["kind"] == "upper-surrogate"

    def test_bound_preprocessed(self, files, capsys):
        code, _, _, err = run(capsys, "bound", "preprocessed", "--state", files["mes2"], "--eps", "0")
        assert code == 2 and "family" in err
        code, rep, _, _ = run(capsys, "bound", "preprocessed", "--state", files["mes2"], "--eps", "0",
                              "--family", files["family"])
        assert code == 0 and rep["result"]["family"] == files["family"]

    def test_bound_out_of_range(self, files, capsys):
        code, _, _, _ = run(capsys, "bound", "hashing", "--state", files["mes2"], "--eps", "2")
        assert code == 2

    def test_missing_file(self, files, capsys):
        code, _, _, err = run(capsys, "entropy", "--quantity", "I", "--state", "/nonexistent.json")
        assert code == 2 and "cannot read" in err

    def test_simulate(self, files, capsys):
        code, rep, _, _ = run(capsys, "simulate", "hashing", "--state", files["mes2"], "-m", "2",
                              "--samples", "1", "--seed", "7")
        res = rep["result"]
        assert code == 0 and res["mean_fidelity"] == pytest.approx(1.0)
        assert res["stderr"] is None and res["stderr_available"] is False

    def test_simulate_deterministic(self, files, capsys):
        argv = ["simulate", "hashing", "--state", files["rho"], "-m", "1", "--samples", "50", "--seed", "3"]
        _, _, a, _ = run(capsys, *argv)
        _, _, b, _ = run(capsys, *argv)
        assert a == b
        _, _, c, _ = run(capsys, *argv, "--threads", "3")
        assert json.loads(a)["result"] == json.loads(c)["result"]

    def test_simulate_requires_seed(self, files):
        with pytest.raises(SystemExit) as exc:
            cli.main(["simulate", "hashing", "--state", files["mes2"], "-m", "2", "--samples", "3"])
        assert exc.value.code == 2

    def test_verify_exit_codes(self, capsys):
        code, rep, _, _ = run(capsys, "verify", "--suite", "sandwich", "--trials", "100", "--seed", "1")
        assert code == 0 and rep["result"]["passed"]
        code, rep, _, _ = run(capsys, "verify", "--suite", "sandwich", "--trials", "3", "--seed", "1",
                              "--broken")
        assert code == 1 and rep["result"]["violations"] == 3
        code, rep, _, err = run(capsys, "verify", "--suite", "nope", "--seed", "1")
        assert code == 2 and rep is None and "unknown suite" in err

    def test_verify_dims(self, capsys):
        code, rep, _, _ = run(capsys, "verify", "--suite", "duality", "--trials", "5", "--dims", "2x2x4",
                              "--seed", "0")
        assert code == 0
        code, _, _, _ = run(capsys, "verify", "--suite", "duality", "--dims", "2by2", "--seed", "0")
        assert code == 2

    def test_spectrum(self, files, capsys):
        code, rep, _, _ = run(capsys, "spectrum", "--rho", files["qrho"], "--sigma", files["qsigma"],
                              "--nmax", "40", "--gamma-min", "-1", "--gamma-max", "1",
                              "--gamma-step", "0.01")
        res = rep["result"]
        assert code == 0 and res["path"] == "classical"
        assert res["inf_est"] <= res["relative_entropy"] <= res["sup_est"]

    def test_spectrum_identical(self, files, capsys):
        _, rep, _, _ = run(capsys, "spectrum", "--rho", files["qsigma"], "--sigma", files["qsigma"],
                           "--nmax", "20", "--gamma-min", "-0.5", "--gamma-max", "0.5",
                           "--gamma-step", "0.05")
        assert rep["result"]["inf_est"] <= 0 <= rep["result"]["sup_est"]

    def test_spectrum_overflow(self, files, capsys):
        code, rep, _, err = run(capsys, "spectrum", "--rho", files["rho"], "--sigma", files["maxmixed4"],
                                "--nmax", "7", "--gamma-min", "0", "--gamma-max", "1",
                                "--gamma-step", "0.5", "--path", "dense")
        assert code == 2 and rep is None and "refused" in err

    def test_figures(self, files, capsys):
        d = files["dir"]
        code, rep, _, _ = run(capsys, "spectrum", "--rho", files["qrho"], "--sigma", files["qsigma"],
                              "--nmax", "10", "--gamma-min", "-1", "--gamma-max", "1",
                              "--gamma-step", "0.1", "--figure", str(d / "p.png"))
        assert code == 0 and (d / "p.png").stat().st_size > 0
        code, _, _, _ = run(capsys, "simulate", "hashing", "--state", files["rho"], "-m", "2",
                            "--samples", "20", "--seed", "1", "--figure", str(d / "h.pdf"))
        assert code == 0 and (d / "h.pdf").stat().st_size > 0

    def test_nonfinite_values_serialize(self, files, capsys):
        _, rep, out, _ = run(capsys, "bound", "oneway", "--state", files["mes2"], "--eps", "0.1")
        assert rep["result"]["value"] == "inf"
        assert "Infinity" not in out and "NaN" not in out
