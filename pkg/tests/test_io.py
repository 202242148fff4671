import json

import numpy as np
import pytest

from edgereg import io as eio
from edgereg.inference import GraphEstimate, PosteriorDraws
from edgereg.model import n_edges
from edgereg.simulate import build_sim1, generate_dataset

from conftest import make_dataset


def make_draws_obj(seed=0, with_subject=False):
    r = np.random.default_rng(seed)
    p, q, L, n_levels = 4, 2, 12, 2
    e = n_edges(p)
    return PosteriorDraws(
        levels=np.array([[1.0, 0.0], [0.0, 1.0]]),
        rho=r.standard_normal((L, n_levels, e)),
        beta=r.standard_normal((L, q, e)),
        omega=r.random((L, p)) + 0.5,
        draw_iterations=np.arange(10, 10 + L, dtype=np.int64),
        rho_subject=r.standard_normal((L, 5, e)) if with_subject else None,
    )


class TestDatasetRoundTrip:
    def test_exact(self, tmp_path):
        data = make_dataset(n=17, p=3, q=2, seed=1)
        path = tmp_path / "d.csv"
        eio.save_dataset(data, path, meta={"tag": 7})
        back = eio.load_dataset(path)
        assert np.array_equal(back.y, data.y)
        assert np.array_equal(back.x, data.x)
        assert back.node_names == data.node_names
        assert back.standardized == data.standardized
        assert np.array_equal(back.y_means, data.y_means)

    def test_deterministic_bytes(self, tmp_path):
        data = make_dataset(n=9, p=3, q=2, seed=2)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        eio.save_dataset(data, p1)
        eio.save_dataset(data, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.with_suffix(".json").read_bytes() == p2.with_suffix(".json").read_bytes()


class TestTruthRoundTrip:
    def test_exact(self, tmp_path, rng):
        truth = build_sim1(rng)
        eio.save_truth(truth, tmp_path / "t")
        back = eio.load_truth(tmp_path / "t")
        assert np.array_equal(back.omega_n, truth.omega_n)
        assert np.array_equal(back.omega_t, truth.omega_t)
        sidecar = json.loads((tmp_path / "t_truth.json").read_text())
        assert len(sidecar["edges_normal"]) == 19
        assert len(sidecar["edges_tumor"]) == 18


class TestDrawArchive:
    def test_round_trip_exact(self, tmp_path):
        draws = make_draws_obj(with_subject=True)
        eio.save_draws(draws, tmp_path / "arch", config={"seed": 1, "x": "y"})
        back, manifest = eio.load_draws(tmp_path / "arch")
        assert np.array_equal(back.rho, draws.rho)
        assert np.array_equal(back.beta, draws.beta)
        assert np.array_equal(back.omega, draws.omega)
        assert np.array_equal(back.draw_iterations, draws.draw_iterations)
        assert np.array_equal(back.rho_subject, draws.rho_subject)
        assert np.array_equal(back.levels, draws.levels)
        assert manifest["config"] == {"seed": 1, "x": "y"}

    def test_without_subject_level(self, tmp_path):
        draws = make_draws_obj()
        eio.save_draws(draws, tmp_path / "arch", config={"seed": 2})
        back, _ = eio.load_draws(tmp_path / "arch")
        assert back.rho_subject is None

    def test_config_hash_mismatch_refused(self, tmp_path):
        draws = make_draws_obj()
        eio.save_draws(draws, tmp_path / "arch", config={"seed": 1})
        with pytest.raises(eio.ArchiveMismatch, match="config hash"):
            eio.save_draws(draws, tmp_path / "arch", config={"seed": 99})
        # identical config rewrites fine
        eio.save_draws(draws, tmp_path / "arch", config={"seed": 1})

    def test_unknown_format_rejected(self, tmp_path):
        (tmp_path / "arch").mkdir()
        (tmp_path / "arch" / "manifest.json").write_text('{"format": "nope"}')
        with pytest.raises(eio.ArchiveMismatch):
            eio.load_draws(tmp_path / "arch")


class TestGraphDocs:
    def _estimate(self):
        ppi = np.array([0.99, 0.2, 0.9, 0.1, 0.5, 0.05])
        rho_mean = np.array([0.5, 0.0, -0.3, 0.0, 0.1, 0.0])
        return GraphEstimate(level=np.array([0.0, 1.0]),
                             selected=frozenset({0, 2}), ppi=ppi,
                             rho_mean=rho_mean, kappa=0.1, alpha=0.1,
                             fdr_threshold=0.15)

    def test_json_document(self):
        doc = eio.graph_to_json(self._estimate(), ["a", "b", "c", "d"], 4)
        assert doc["n_nodes"] == 4
        assert [e["i"] for e in doc["edges"]] == [0, 0]
        assert doc["edges"][0]["sign"] == 1
        assert doc["edges"][1]["sign"] == -1
        assert doc["edges"][1]["node_j"] == "d"  # edge index 2 is (0, 3)

    def test_empty_selection_valid(self):
        est = GraphEstimate(level=np.array([1.0, 0.0]), selected=frozenset(),
                            ppi=np.zeros(6), rho_mean=np.zeros(6),
                            kappa=0.1, alpha=0.1, fdr_threshold=0.0)
        doc = eio.graph_to_json(est, list("abcd"), 4)
        assert doc["edges"] == []
        dot = eio.graph_to_dot(est, list("abcd"), 4)
        assert dot.startswith("graph") and dot.rstrip().endswith("}")

    def test_dot_encoding(self):
        dot = eio.graph_to_dot(self._estimate(), ["a", "b", "c", "d"], 4)
        assert '"a" -- "b" [color=green' in dot
        assert '"a" -- "d" [color=red' in dot
        # width proportional to |rho|: 0.5 -> 3.5, 0.3 -> 2.3
        assert "penwidth=3.500" in dot and "penwidth=2.300" in dot


class TestDiagnosticsLog:
    def test_round_trip(self, tmp_path):
        records = [{"iteration": k, "lambda": [0.1 * k], "gamma_sq": 1.0 / (k + 1),
                    "sigma_lambda": [1.0], "accepted": [k % 2],
                    "accept_rate": [k / (k + 1)]} for k in range(1, 30)]
        path = tmp_path / "log.jsonl"
        eio.write_diagnostics_log(records, path)
        back = eio.read_diagnostics_log(path)
        assert back == records


class TestEvalCsv:
    def test_layout(self, tmp_path):
        rows = [dict(method="m", graph="normal", replicate=0, seed=1, tpr=0.9,
                     fpr=0.1, auc1=0.95, auc2=0.94, bauc=0.93, tpr_at_fpr10=0.88)]
        path = tmp_path / "r.csv"
        eio.write_eval_csv(rows, path)
        text = path.read_text().splitlines()
        assert text[0] == ",".join(eio.EVAL_COLUMNS)
        assert text[1].startswith("m,normal,0,1,0.9,0.1,")


class TestGenerateAndSaveIntegration:
    def test_dataset_written_from_generator(self, tmp_path, rng):
        truth = build_sim1(rng)
        data, _ = generate_dataset(truth, 10, 15, rng)
        eio.save_dataset(data, tmp_path / "g.csv")
        back = eio.load_dataset(tmp_path / "g.csv")
        assert np.array_equal(back.y, data.y)
        assert back.covariate_names == ("normal_weight", "tumor_weight")
