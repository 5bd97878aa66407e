"""Structural export checks, one estimator family at a time.

Every document that claims to be valid is pushed through the reference
CLI validator rather than any in-process API; the printed parameter count
is compared against a count derived independently from the fitted
attributes.
"""

import json
import pickle
import subprocess
import sys

import numpy as np
import pytest
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC, LinearSVC
from sklearn.tree import DecisionTreeClassifier

from exporter_helpers import validate_document
from mcuml_exporter import NotFitted, UnsupportedEstimator, export_model


class TestTreeExport:
    def test_depth1_tree_on_two_points(self, tmp_path):
        clf = DecisionTreeClassifier(random_state=0).fit([[0.0], [1.0]], ["a", "b"])
        res = export_model(clf)
        doc = json.loads(res.document)
        assert doc["family"] == "tree"
        assert doc["classes"] == ["a", "b"]
        nodes = doc["payload"]["nodes"]
        assert len(nodes) == 3
        root = nodes[0]
        assert root["feature"] == 0
        assert 0.0 < root["threshold"] < 1.0
        assert nodes[root["left"]] == {"leaf": "a"}
        assert nodes[root["right"]] == {"leaf": "b"}
        assert res.warnings == ()
        family, k, d, params = validate_document(res.document, tmp_path)
        assert (family, k, d, params) == ("tree", 2, 1, 1)

    def test_children_indices_stay_topological(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = DecisionTreeClassifier(max_depth=5, random_state=1).fit(X, y)
        doc = json.loads(export_model(clf).document)
        for i, node in enumerate(doc["payload"]["nodes"]):
            if "leaf" not in node:
                assert node["left"] > i and node["right"] > i
        validate_document(export_model(clf).document, tmp_path)

    def test_best_first_growth_still_exports(self, three_class_xy, tmp_path):
        # max_leaf_nodes switches the builder to best-first node numbering
        X, y = three_class_xy
        clf = DecisionTreeClassifier(max_leaf_nodes=6, random_state=1).fit(X, y)
        info = validate_document(export_model(clf).document, tmp_path)
        assert info[0] == "tree"

    def test_param_count_is_internal_node_count(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = DecisionTreeClassifier(max_depth=4, random_state=2).fit(X, y)
        internal = int(np.sum(clf.tree_.children_left >= 0))
        *_, params = validate_document(export_model(clf).document, tmp_path)
        assert params == internal


class TestLinearExport:
    def test_binary_collapses_to_sign_rule(self, binary_xy, tmp_path):
        X, y = binary_xy
        clf = LogisticRegression(max_iter=200).fit(X, y)
        doc = json.loads(export_model(clf).document)
        assert doc["family"] == "linear"
        assert doc["payload"]["score_rule"] == "binary_sign"
        assert len(doc["payload"]["weights"]) == 1
        assert doc["classes"] == ["neg", "pos"]
        family, k, d, params = validate_document(export_model(clf).document, tmp_path)
        assert (family, k, d) == ("linear", 2, 3)
        assert params == clf.coef_.size + clf.intercept_.size

    def test_multiclass_uses_argmax(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = LogisticRegression(max_iter=300).fit(X, y)
        doc = json.loads(export_model(clf).document)
        assert doc["payload"]["score_rule"] == "argmax_linear"
        assert len(doc["payload"]["weights"]) == 3
        *_, params = validate_document(export_model(clf).document, tmp_path)
        assert params == clf.coef_.size + clf.intercept_.size

    def test_linear_svc_maps_like_logistic(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = LinearSVC(max_iter=5000, random_state=0).fit(X, y)
        doc = json.loads(export_model(clf).document)
        assert doc["family"] == "linear"
        assert doc["payload"]["score_rule"] == "argmax_linear"
        validate_document(export_model(clf).document, tmp_path)


class TestSvmExport:
    def test_machine_layout_and_param_count(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = SVC(kernel="rbf", gamma=0.5).fit(X, y)
        doc = json.loads(export_model(clf).document)
        machines = doc["payload"]["machines"]
        assert [(m["class_a"], m["class_b"]) for m in machines] == [(0, 1), (0, 2), (1, 2)]
        ns = clf.n_support_
        for m in machines:
            want = int(ns[m["class_a"]] + ns[m["class_b"]])
            assert len(m["support_vectors"]) == want
            assert len(m["dual_coefs"]) == want
        total_sv = int(sum(len(m["support_vectors"]) for m in machines))
        *_, params = validate_document(export_model(clf).document, tmp_path)
        assert params == total_sv * X.shape[1] + total_sv + len(machines)

    def test_scale_gamma_resolves_to_number(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = SVC(kernel="rbf", gamma="scale").fit(X, y)
        doc = json.loads(export_model(clf).document)
        gamma = doc["payload"]["kernel"]["gamma"]
        assert isinstance(gamma, float)
        assert abs(gamma - 1.0 / (X.shape[1] * X.var())) < 1e-12
        validate_document(export_model(clf).document, tmp_path)

    def test_poly_kernel_keeps_its_parameters(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = SVC(kernel="poly", degree=2, gamma=0.25, coef0=1.5).fit(X, y)
        kern = json.loads(export_model(clf).document)["payload"]["kernel"]
        assert kern == {"type": "poly", "gamma": 0.25, "coef0": 1.5, "degree": 2}
        validate_document(export_model(clf).document, tmp_path)

    def test_linear_kernel_becomes_degree_one_poly(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = SVC(kernel="linear").fit(X, y)
        res = export_model(clf)
        kern = json.loads(res.document)["payload"]["kernel"]
        assert kern == {"type": "poly", "gamma": 1.0, "coef0": 0.0, "degree": 1}
        assert any("poly(degree=1" in w for w in res.warnings)
        validate_document(res.document, tmp_path)

    def test_probability_calibration_warns(self, binary_xy):
        X, y = binary_xy
        clf = SVC(kernel="rbf", gamma=0.5, probability=True, random_state=0).fit(X, y)
        res = export_model(clf)
        assert any("probability" in w for w in res.warnings)

    def test_sigmoid_kernel_is_refused(self, binary_xy):
        X, y = binary_xy
        clf = SVC(kernel="sigmoid").fit(X, y)
        with pytest.raises(UnsupportedEstimator, match="sigmoid"):
            export_model(clf)


class TestMlpExport:
    def test_softmax_head_warns_and_uses_identity(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = MLPClassifier(hidden_layer_sizes=(6,), activation="logistic",
                            max_iter=200, random_state=0).fit(X, y)
        res = export_model(clf)
        layers = json.loads(res.document)["payload"]["layers"]
        assert [ly["activation"] for ly in layers] == ["sigmoid", "identity"]
        assert any("softmax" in w for w in res.warnings)
        # rows are units, columns are inputs
        assert len(layers[0]["weights"]) == 6
        assert len(layers[0]["weights"][0]) == X.shape[1]
        *_, params = validate_document(res.document, tmp_path)
        want = sum(w.size for w in clf.coefs_) + sum(b.size for b in clf.intercepts_)
        assert params == want

    def test_binary_head_is_sigmoid(self, binary_xy, tmp_path):
        X, y = binary_xy
        clf = MLPClassifier(hidden_layer_sizes=(5,), activation="relu",
                            max_iter=200, random_state=0).fit(X, y)
        res = export_model(clf)
        layers = json.loads(res.document)["payload"]["layers"]
        assert [ly["activation"] for ly in layers] == ["relu", "sigmoid"]
        assert len(layers[-1]["weights"]) == 1
        assert not any("softmax" in w for w in res.warnings)
        validate_document(res.document, tmp_path)

    def test_tanh_activation_is_refused(self, binary_xy):
        X, y = binary_xy
        clf = MLPClassifier(hidden_layer_sizes=(4,), activation="tanh",
                            max_iter=50, random_state=0).fit(X, y)
        with pytest.raises(UnsupportedEstimator, match="tanh"):
            export_model(clf)


class TestPreconditions:
    @pytest.mark.parametrize("estimator", [
        DecisionTreeClassifier(), LogisticRegression(), SVC(), MLPClassifier()],
        ids=lambda e: type(e).__name__)
    def test_unfitted_raises(self, estimator):
        with pytest.raises(NotFitted):
            export_model(estimator)

    def test_unsupported_class_is_refused(self, binary_xy):
        X, y = binary_xy
        clf = RandomForestClassifier(n_estimators=3, random_state=0).fit(X, y)
        with pytest.raises(UnsupportedEstimator, match="RandomForestClassifier"):
            export_model(clf)

    def test_pipeline_is_refused_not_folded(self, binary_xy):
        X, y = binary_xy
        pipe = make_pipeline(StandardScaler(), LogisticRegression()).fit(X, y)
        with pytest.raises(UnsupportedEstimator, match="folded"):
            export_model(pipe)

    def test_single_class_fit_is_refused(self):
        clf = DecisionTreeClassifier().fit([[0.0], [1.0]], ["same", "same"])
        with pytest.raises(UnsupportedEstimator, match="single class"):
            export_model(clf)


class TestExportMechanics:
    def test_estimator_is_unmodified(self, three_class_xy):
        X, y = three_class_xy
        clf = SVC(kernel="rbf", gamma=0.5).fit(X, y)
        before = pickle.dumps(clf)
        export_model(clf)
        assert pickle.dumps(clf) == before

    def test_output_path_gets_the_same_text(self, binary_xy, tmp_path):
        X, y = binary_xy
        clf = LogisticRegression(max_iter=200).fit(X, y)
        out = tmp_path / "written.json"
        res = export_model(clf, str(out))
        assert out.read_text() == res.document

    def test_metadata_records_library_and_version(self, binary_xy):
        import sklearn
        X, y = binary_xy
        clf = LogisticRegression(max_iter=200).fit(X, y)
        meta = json.loads(export_model(clf).document)["metadata"]
        assert meta["library"] == "scikit-learn"
        assert meta["version"] == sklearn.__version__
        assert meta["estimator"] == "LogisticRegression"


class TestScriptInterface:
    def _run(self, *args):
        return subprocess.run([sys.executable, "-m", "mcuml_exporter", *args],
                              capture_output=True, text=True)

    def test_export_with_warning_on_stderr(self, three_class_xy, tmp_path):
        X, y = three_class_xy
        clf = SVC(kernel="linear").fit(X, y)
        pkl = tmp_path / "svc.pkl"
        pkl.write_bytes(pickle.dumps(clf))
        out = tmp_path / "svc.json"
        proc = self._run(str(pkl), str(out))
        assert proc.returncode == 0, proc.stderr
        assert "warning:" in proc.stderr
        validate_document(out.read_text(), tmp_path)

    def test_unfitted_pickle_fails_cleanly(self, tmp_path):
        pkl = tmp_path / "raw.pkl"
        pkl.write_bytes(pickle.dumps(DecisionTreeClassifier()))
        proc = self._run(str(pkl), str(tmp_path / "out.json"))
        assert proc.returncode == 1
        assert "error:" in proc.stderr

    def test_missing_pickle_fails_cleanly(self, tmp_path):
        proc = self._run(str(tmp_path / "nope.pkl"), str(tmp_path / "out.json"))
        assert proc.returncode == 1
        assert "error:" in proc.stderr

    def test_usage_error_exits_two(self):
        proc = self._run()
        assert proc.returncode == 2
