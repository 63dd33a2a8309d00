import io
import json
import math

import pytest

from kbiq.cli import main, parse_n_list, read_nodes_csv


def run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


class TestHelpers:
    @pytest.mark.parametrize(
        "text, expected",
        [("5,10,20", (5, 10, 20)), ("5:20:5", (5, 10, 15, 20)), ("3:5", (3, 4, 5)), ("7", (7,))],
    )
    def test_parse_n_list(self, text, expected):
        assert parse_n_list(text) == expected

    def test_read_nodes_picks_trial(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("trial,point_index,x\n0,1,0.5\n0,0,0.25\n1,0,0.9\n")
        assert list(read_nodes_csv(str(p))) == [0.25, 0.5]
        assert list(read_nodes_csv(str(p), trial=1)) == [0.9]


class TestSample:
    def test_layout(self):
        code, text = run(["sample", "--n", "4", "--trials", "3", "--seed", "5"])
        lines = text.splitlines()
        assert code == 0
        assert lines[0] == "trial,point_index,x"
        assert len(lines) == 13
        assert all(0 <= float(l.split(",")[2]) <= 1 for l in lines[1:])

    def test_workers_do_not_change_output(self):
        base = ["sample", "--n", "5", "--trials", "12", "--seed", "9"]
        assert run(base)[1] == run(base + ["--workers", "3"])[1]


class TestWeightsAndWce:
    def test_weights_from_csv(self, tmp_path):
        p = tmp_path / "nodes.csv"
        p.write_text("trial,point_index,x\n0,0,0.0\n0,1,0.25\n")
        code, text = run(["weights", "--nodes", str(p), "--g", "e2"])
        assert code == 0
        lines = text.splitlines()
        assert lines[0] == "# rule=EZQ s=2 g=e2 N=2"
        assert lines[1] == "i,x_i,w_i"
        w = [float(l.split(",")[2]) for l in lines[2:]]
        assert w == pytest.approx([1 / math.sqrt(2), -1 / math.sqrt(2)])

    def test_wce_single_node(self, tmp_path):
        p = tmp_path / "nodes.csv"
        p.write_text("x\n0.3\n")
        code, text = run(["wce", "--nodes", str(p), "--json"])
        assert code == 0
        kv = dict(l.split("=", 1) for l in text.splitlines()[:-1])
        assert float(kv["wce_squared"]) == pytest.approx(math.pi**4 / 90)
        data = json.loads(text.splitlines()[-1])
        assert data["decomposition_value"] == pytest.approx(math.pi**4 / 90)

    def test_wce_sampled_nodes(self):
        code, text = run(["wce", "--n", "6", "--seed", "1", "--rule", "kbiq", "--g", "e1+0.5*e3"])
        assert code == 0
        assert "rule=KBIQ(mercer,12)" in text

    def test_singular_nodes_exit_2(self, tmp_path):
        p = tmp_path / "nodes.csv"
        p.write_text("x\n0.2\n0.2\n")
        assert run(["weights", "--nodes", str(p)])[0] == 2

    def test_bad_g_exit_1(self):
        assert run(["weights", "--n", "3", "--g", "q7"])[0] == 1

    def test_missing_nodes_exit_1(self):
        assert run(["wce"])[0] == 1


class TestExperiment:
    def test_byte_identical_across_workers(self, tmp_path):
        base = ["experiment", "--n", "3,6", "--trials", "30", "--rule", "ezq,okq,kbiq", "--seed", "4"]
        one = run(base)[1]
        assert one == run(base + ["--workers", "2"])[1]
        assert one.splitlines()[0] == "rule,s,g,N,trials,mean_wce2,stderr,ref_rN,ref_sigmaN1,failed_trials"
        assert len(one.splitlines()) == 7

    def test_outputs(self, tmp_path):
        out, svg, dump = tmp_path / "r.csv", tmp_path / "r.svg", tmp_path / "d.csv"
        code, _ = run(["experiment", "--n", "4:8:4", "--trials", "10", "--rule", "ezq,okq",
                       "--out", str(out), "--svg", str(svg), "--dump", str(dump)])
        assert code == 0
        assert out.read_text().count("\n") == 5
        assert svg.read_text().startswith("<svg")
        assert (tmp_path / "d.ezq.csv").read_text().startswith("N,trial,wce2,cond_phi,resamples\n")
        assert (tmp_path / "d.okq.csv").exists()

    @pytest.mark.parametrize(
        "extra",
        [["--n", "10,5"], ["--trials", "0"], ["--rule", "gauss"], ["--n", "a,b"], ["--gamma", "sigma"]],
    )
    def test_usage_errors(self, extra):
        assert run(["experiment", "--trials", "2", *extra])[0] == 1


class TestVerifyAndIdentities:
    def test_check_identities(self):
        code, text = run(["check-identities", "--configs", "20"])
        assert code == 0
        assert "PASS" in text

    def test_verify_passes(self):
        code, text = run(["verify", "theorem5", "--n", "5", "--m", "6,10", "--trials", "2000", "--seed", "3"])
        assert code == 0
        assert text.count("PASS") == 2

    def test_verify_failure_exit_3(self):
        # a deliberately wrong pass threshold forces a statistical failure
        code, text = run(["verify", "theorem1", "--trials", "500", "--z", "-1"])
        assert code == 3
        assert "FAIL" in text

    def test_unknown_subcommand(self):
        assert run(["frobnicate"])[0] == 1
        assert run(["--help"])[0] == 0
