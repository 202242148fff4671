import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from edgereg import io as eio
from edgereg.cli import RunConfig, _merge_config, _parse_levels, main

FAST_FIT = ["--iterations", "400", "--burn-in", "200", "--thin", "10"]


def run(args):
    return main([str(a) for a in args])


def tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run(["simulate", "--sim", "1", "--replicates", "2", "--seed", "7",
                "--out", out, "--n-reference", "15", "--n-mixed", "45",
                "--p", "8"]) == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fits")
    assert run(["fit", "--data", sim_dir, "--out", out, "--seed", "3",
                "--levels", "0,0.5,1", *FAST_FIT]) == 0
    return out


class TestConfigMerge:
    def test_defaults(self):
        class Args:
            config = None
        cfg = _merge_config(Args())
        assert cfg == RunConfig()

    def test_file_and_flag_precedence(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"iterations": 500, "thin": 2}))

        class Args:
            config = str(cfg_file)
            iterations = 800   # flag wins
        cfg = _merge_config(Args())
        assert cfg.iterations == 800
        assert cfg.thin == 2
        assert cfg.burn_in == RunConfig().burn_in

    def test_unknown_keys_rejected(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"iterationz": 5}))

        class Args:
            config = str(cfg_file)
        with pytest.raises(Exception):
            _merge_config(Args())

    def test_level_parsing(self):
        cfg = RunConfig(mode="purity", levels="0,0.5,1")
        levels = _parse_levels(cfg, 2)
        assert np.allclose(levels[1], [0.5, 0.5])
        cfg = RunConfig(mode="general", levels="1,0,1;0,1,1")
        levels = _parse_levels(cfg, 3)
        assert np.allclose(levels[0], [1, 0, 1])

    def test_workers_env_override(self, monkeypatch):
        monkeypatch.setenv("EDGEREG_WORKERS", "5")

        class Args:
            config = None
        assert _merge_config(Args()).workers == 5


class TestSimulate:
    def test_outputs(self, sim_dir):
        assert (sim_dir / "replicate_001.csv").exists()
        assert (sim_dir / "truth_001_truth.json").exists()
        manifest = json.loads((sim_dir / "simulate_manifest.json").read_text())
        assert manifest["replicates"] == 2

    def test_sim2_overlap_property(self, tmp_path):
        out = tmp_path / "sim2"
        assert run(["simulate", "--sim", "2", "--replicates", "1", "--seed", "5",
                    "--out", out, "--n-reference", "12", "--n-mixed", "20"]) == 0
        truth = json.loads((out / "truth_000_truth.json").read_text())
        normal = {tuple(e) for e in truth["edges_normal"]}
        tumor = {tuple(e) for e in truth["edges_tumor"]}
        assert len(normal & tumor) == 7

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--sim", "1", "--replicates", "2",
                        "--seed", "11", "--out", out,
                        "--n-reference", "10", "--n-mixed", "20", "--p", "6"]) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_bad_sim_rejected(self, tmp_path):
        assert run(["simulate", "--sim", "3", "--out", tmp_path / "x"]) == 2


class TestFit:
    def test_archive_contents(self, fit_dir):
        draws, manifest = eio.load_draws(fit_dir / "fit_000")
        assert draws.rho.shape == (20, 3, 28)     # (400-200)/10 draws, 3 levels, C(8,2)
        assert manifest["config"]["mode"] == "purity"
        assert (fit_dir / "fit_000" / "diagnostics.jsonl").exists()
        summary = json.loads((fit_dir / "fit_000" / "fit_summary.json").read_text())
        assert len(summary["mh_accept_rate"]) == 2

    def test_byte_identical_reruns(self, sim_dir, tmp_path):
        a, b = tmp_path / "fa", tmp_path / "fb"
        for out in (a, b):
            assert run(["fit", "--data", sim_dir / "replicate_000.csv",
                        "--out", out, "--seed", "3", "--levels", "0,1",
                        *FAST_FIT]) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_missing_data_is_io_error(self, tmp_path):
        assert run(["fit", "--data", tmp_path / "nope.csv",
                    "--out", tmp_path / "o"]) == 4

    def test_single_file_fit_layout(self, sim_dir, tmp_path):
        out = tmp_path / "single"
        assert run(["fit", "--data", sim_dir / "replicate_000.csv", "--out", out,
                    "--seed", "1", "--levels", "0,1", *FAST_FIT]) == 0
        assert (out / "manifest.json").exists()   # no fit_000 nesting


class TestSelect:
    def test_graph_documents(self, fit_dir, tmp_path):
        out = tmp_path / "graphs"
        assert run(["select", "--draws", fit_dir / "fit_000", "--out", out,
                    "--kappa", "0.1,0.2", "--alpha", "0.1",
                    "--levels", "0,0.5,1"]) == 0
        docs = sorted(out.glob("graph_*.json"))
        assert len(docs) == 6
        doc = json.loads(docs[0].read_text())
        assert set(doc) >= {"level", "kappa", "alpha", "edges", "fdr_threshold"}

    def test_selection_monotone_in_kappa(self, fit_dir, tmp_path):
        out = tmp_path / "graphs2"
        assert run(["select", "--draws", fit_dir / "fit_000", "--out", out,
                    "--kappa", "0.05,0.15,0.3", "--alpha", "0.2",
                    "--levels", "1"]) == 0

        def edges(kappa):
            doc = json.loads((out / f"graph_level2_kappa{kappa}_alpha0.2.json").read_text())
            return {(e["i"], e["j"]) for e in doc["edges"]}

        assert edges("0.3") <= edges("0.15") <= edges("0.05")

    def test_missing_level_rejected(self, fit_dir, tmp_path):
        assert run(["select", "--draws", fit_dir / "fit_000",
                    "--out", tmp_path / "g", "--levels", "0.123"]) == 2


class TestEvaluate:
    def test_report(self, sim_dir, fit_dir, tmp_path):
        out = tmp_path / "report.csv"
        assert run(["evaluate", "--sim-dir", sim_dir, "--fit-dir", fit_dir,
                    "--out", out, "--kappa", "0.1", "--alpha", "0.1"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(eio.EVAL_COLUMNS)
        # 2 replicates x 2 graphs + mean and sd rows per graph
        assert len(lines) == 1 + 4 + 4
        assert any(line.startswith("edge_regression_mean,normal") for line in lines)

    def test_missing_sim_dir(self, fit_dir, tmp_path):
        assert run(["evaluate", "--sim-dir", tmp_path / "nope",
                    "--fit-dir", fit_dir, "--out", tmp_path / "r.csv"]) == 2


class TestDiagnose:
    def test_full_report(self, fit_dir, tmp_path):
        out = tmp_path / "diag.csv"
        assert run(["diagnose", "--fit", fit_dir / "fit_000", "--out", out]) == 0
        lines = out.read_text().splitlines()
        # 2x28 betas + 8 omegas + 2 lambdas + gamma_sq, plus header
        assert len(lines) == 1 + 56 + 8 + 2 + 1
        hist = json.loads(out.with_suffix(".hist.json").read_text())
        assert len(hist["counts"]) == 20

    def test_params_filter(self, fit_dir, tmp_path):
        out = tmp_path / "diag2.csv"
        assert run(["diagnose", "--fit", fit_dir / "fit_000", "--out", out,
                    "--params", "lambda,gamma"]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 3
        assert run(["diagnose", "--fit", fit_dir / "fit_000",
                    "--out", tmp_path / "d3.csv", "--params", "zzz"]) == 2


class TestCovariateModes:
    def _group_dataset(self, tmp_path):
        from edgereg.model import Dataset
        from edgereg.simulate import encode_groups

        r = np.random.default_rng(9)
        labels = ["normal"] * 25 + ["tumor"] * 25
        x = encode_groups(labels)
        y = r.standard_normal((50, 5))
        data = Dataset(y=y, x=x, node_names=tuple(f"g{k}" for k in range(5)),
                       covariate_names=("normal", "tumor", "shared"))
        path = tmp_path / "groups.csv"
        eio.save_dataset(data, path)
        return path

    def test_group_mode_fit_and_select(self, tmp_path):
        path = self._group_dataset(tmp_path)
        out = tmp_path / "gfit"
        assert run(["fit", "--data", path, "--out", out, "--mode", "group",
                    "--levels", "1,0,1;0,1,1", "--seed", "2", *FAST_FIT]) == 0
        draws, manifest = eio.load_draws(out)
        assert draws.levels.shape == (2, 3)
        assert manifest["config"]["mode"] == "group"
        graphs = tmp_path / "ggraphs"
        assert run(["select", "--draws", out, "--out", graphs,
                    "--levels", "1,0,1;0,1,1", "--kappa", "0.1"]) == 0
        assert len(list(graphs.glob("graph_*.json"))) == 2

    def test_general_mode_with_intercept(self, tmp_path):
        from edgereg.model import Dataset

        r = np.random.default_rng(10)
        y = r.standard_normal((40, 4))
        x = r.random((40, 1))
        data = Dataset(y=y, x=x, node_names=tuple("abcd"), covariate_names=("z",))
        path = tmp_path / "gen.csv"
        eio.save_dataset(data, path)
        out = tmp_path / "ifit"
        assert run(["fit", "--data", path, "--out", out, "--mode", "general",
                    "--intercept", "--levels", "1,0;1,0.5;1,1", "--seed", "3",
                    *FAST_FIT]) == 0
        draws, _ = eio.load_draws(out)
        assert draws.levels.shape == (3, 2)       # intercept column added
        assert draws.beta.shape[1] == 2

    def test_purity_mode_rejects_wrong_q(self, tmp_path):
        from edgereg.model import Dataset

        r = np.random.default_rng(11)
        data = Dataset(y=r.standard_normal((20, 3)), x=r.random((20, 1)),
                       node_names=("a", "b", "c"), covariate_names=("z",))
        path = tmp_path / "bad.csv"
        eio.save_dataset(data, path)
        assert run(["fit", "--data", path, "--out", tmp_path / "o",
                    "--levels", "0,1", *FAST_FIT]) == 2


class TestExitCodes:
    def test_config_error(self, tmp_path):
        assert run(["simulate", "--sim", "1", "--out", tmp_path / "x",
                    "--workers", "0"]) == 2

    def test_archive_mismatch_is_config_error(self, sim_dir, tmp_path):
        out = tmp_path / "f"
        assert run(["fit", "--data", sim_dir / "replicate_000.csv", "--out", out,
                    "--seed", "1", "--levels", "0,1", *FAST_FIT]) == 0
        assert run(["fit", "--data", sim_dir / "replicate_000.csv", "--out", out,
                    "--seed", "2", "--levels", "0,1", *FAST_FIT]) == 2

    def test_numerical_abort_exits_3_with_snapshot(self, sim_dir, tmp_path,
                                                   monkeypatch):
        from edgereg.sampler import ChainAbort, SamplerState

        def boom(data, cfg, m_s=None):
            state = SamplerState(
                p=2, beta=np.zeros((2, 1)), omega_diag=np.ones(2),
                psi=np.ones((2, 1)), lam=np.ones(2), gamma_sq=1.0,
                m_s=np.ones(2), sigma_lambda=np.ones(2), iteration=17)
            raise ChainAbort("synthetic blow-up", state=state, iteration=17)

        monkeypatch.setattr("edgereg.cli.run_chain", boom)
        monkeypatch.chdir(tmp_path)
        assert run(["fit", "--data", sim_dir / "replicate_000.csv",
                    "--out", tmp_path / "o", "--levels", "0,1", *FAST_FIT]) == 3
        snap = np.load(tmp_path / "chain_abort_snapshot.npz")
        assert snap["iteration"] == 17
