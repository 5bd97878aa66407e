"""Dump fitted scikit-learn classifiers into the portable model JSON format.

Supported estimators and the families they map to:

    DecisionTreeClassifier  -> tree
    LogisticRegression      -> linear (binary collapses to the sign rule)
    LinearSVC               -> linear (same collapse)
    SVC                     -> kernel_svm (one machine per class pair)
    MLPClassifier           -> mlp

Export is read-only: every parameter is copied out of the fitted attributes
and the estimator is never touched.  Training happens in 64-bit floats; the
document keeps the full decimal expansion, but downstream consumers evaluate
in 32 bits, so a small fraction of borderline rows may flip class.
"""

import json
import numbers
from dataclasses import dataclass
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1


class ExporterError(Exception):
    """Base for everything this module raises on purpose."""


class UnsupportedEstimator(ExporterError):
    """The estimator class, kernel, or activation has no document mapping."""


class NotFitted(ExporterError):
    """The estimator has no learned parameters yet."""


@dataclass(frozen=True)
class ExportResult:
    """Outcome of one export: the document text plus any advisory warnings."""
    document: str
    warnings: tuple = ()


def _require_fitted(estimator) -> None:
    from sklearn.exceptions import NotFittedError
    from sklearn.utils.validation import check_is_fitted
    try:
        check_is_fitted(estimator)
    except NotFittedError as e:
        raise NotFitted(str(e)) from None


def _labels(estimator) -> list:
    labels = [str(c) for c in estimator.classes_]
    if len(labels) < 2:
        raise UnsupportedEstimator(
            f"estimator was fitted on a single class ({labels}); "
            "documents need at least two")
    return labels


def _matrix(a) -> list:
    return [[float(v) for v in row] for row in np.asarray(a, dtype=float)]


def _vector(a) -> list:
    return [float(v) for v in np.ravel(np.asarray(a, dtype=float))]


# ---------------------------------------------------------------------------
# per-family converters; each returns (family, payload, warnings)

def _tree_payload(clf):
    t = clf.tree_
    labels = _labels(clf)
    # preorder walk; parents come before children, so child indices stay
    # strictly above the parent's, which the document format requires
    order, pos, stack = [], {}, [0]
    while stack:
        i = stack.pop()
        pos[i] = len(order)
        order.append(i)
        if t.children_left[i] >= 0:
            stack.append(int(t.children_right[i]))
            stack.append(int(t.children_left[i]))
    nodes = []
    for i in order:
        if t.children_left[i] < 0:
            nodes.append({"leaf": labels[int(np.argmax(t.value[i][0]))]})
        else:
            nodes.append({"feature": int(t.feature[i]),
                          "threshold": float(t.threshold[i]),
                          "left": pos[int(t.children_left[i])],
                          "right": pos[int(t.children_right[i])]})
    return "tree", {"nodes": nodes}, []


def _linear_payload(clf):
    W = np.asarray(clf.coef_, dtype=float)
    b = _vector(clf.intercept_)
    if W.ndim != 2:
        raise UnsupportedEstimator(f"expected a 2-d coefficient matrix, got shape {W.shape}")
    # one coefficient row means a signed binary decision, not a 1-way argmax
    rule = "binary_sign" if W.shape[0] == 1 else "argmax_linear"
    return "linear", {"weights": _matrix(W), "bias": b, "score_rule": rule}, []


_MLP_ACTIVATIONS = {"logistic": "sigmoid", "relu": "relu", "identity": "identity"}


def _mlp_payload(clf):
    act = _MLP_ACTIVATIONS.get(clf.activation)
    if act is None:
        raise UnsupportedEstimator(
            f"MLP activation {clf.activation!r} is not supported "
            f"(choose from {sorted(_MLP_ACTIVATIONS)})")
    warnings = []
    layers = []
    last = len(clf.coefs_) - 1
    for li, (wt, bias) in enumerate(zip(clf.coefs_, clf.intercepts_)):
        if li < last:
            layer_act = act
        elif clf.out_activation_ == "logistic":
            layer_act = "sigmoid"
        elif clf.out_activation_ == "softmax":
            # softmax is monotone per score vector; dropping it keeps the argmax
            layer_act = "identity"
            warnings.append("softmax output layer exported with identity scores; "
                            "the predicted class is unchanged")
        elif clf.out_activation_ == "identity":
            layer_act = "identity"
        else:
            raise UnsupportedEstimator(
                f"MLP output activation {clf.out_activation_!r} is not supported")
        # stored as (inputs, units); the document wants one row per unit
        layers.append({"weights": _matrix(np.asarray(wt).T),
                       "bias": _vector(bias),
                       "activation": layer_act})
    return "mlp", {"layers": layers}, warnings


def _svc_gamma(clf) -> float:
    resolved = getattr(clf, "_gamma", None)
    if isinstance(resolved, numbers.Real):
        return float(resolved)
    if isinstance(clf.gamma, numbers.Real):
        return float(clf.gamma)
    raise UnsupportedEstimator(
        f"cannot resolve numeric gamma from {clf.gamma!r} on this scikit-learn build")


def _svm_payload(clf):
    warnings = []
    if clf.kernel == "rbf":
        kernel = {"type": "rbf", "gamma": _svc_gamma(clf)}
    elif clf.kernel == "poly":
        kernel = {"type": "poly", "gamma": _svc_gamma(clf),
                  "coef0": float(clf.coef0), "degree": int(clf.degree)}
    elif clf.kernel == "linear":
        kernel = {"type": "poly", "gamma": 1.0, "coef0": 0.0, "degree": 1}
        warnings.append("linear kernel rewritten as poly(degree=1, gamma=1, coef0=0)")
    else:
        raise UnsupportedEstimator(
            f"SVC kernel {clf.kernel!r} is not supported (rbf, poly, or linear)")
    if getattr(clf, "probability", False):
        warnings.append("probability calibration is ignored; machines reproduce "
                        "the decision-function votes that predict() uses")
    k = len(clf.classes_)
    if k < 2:
        _labels(clf)
    starts = np.concatenate(([0], np.cumsum(clf.n_support_)))
    sv = clf.support_vectors_
    dual = clf.dual_coef_
    machines = []
    p = 0
    # pairwise machines in (0,1), (0,2), ..., (1,2), ... order; for pair
    # (i, j) the class-i support vectors carry row j-1 of the dual matrix
    # and the class-j vectors carry row i
    for i in range(k):
        for j in range(i + 1, k):
            ci = slice(int(starts[i]), int(starts[i + 1]))
            cj = slice(int(starts[j]), int(starts[j + 1]))
            machines.append({
                "class_a": i,
                "class_b": j,
                "support_vectors": _matrix(np.vstack((sv[ci], sv[cj]))),
                "dual_coefs": _vector(np.concatenate((dual[j - 1, ci], dual[i, cj]))),
                "intercept": float(clf.intercept_[p]),
            })
            p += 1
    return "kernel_svm", {"kernel": kernel, "machines": machines}, warnings


_CONVERTERS = {
    "DecisionTreeClassifier": _tree_payload,
    "LogisticRegression": _linear_payload,
    "LinearSVC": _linear_payload,
    "SVC": _svm_payload,
    "MLPClassifier": _mlp_payload,
}


def _find_converter(estimator):
    name = type(estimator).__name__
    try:
        from sklearn.pipeline import Pipeline
        if isinstance(estimator, Pipeline):
            raise UnsupportedEstimator(
                "pipelines are not exported; preprocessing such as a fitted "
                "scaler is never folded into model weights, so export the "
                "final estimator and apply the same preprocessing to the data")
    except ImportError:
        pass
    conv = _CONVERTERS.get(name)
    if conv is None:
        raise UnsupportedEstimator(
            f"{name} has no document mapping (supported: {sorted(_CONVERTERS)})")
    return conv


def export_model(estimator, output_path: Optional[str] = None) -> ExportResult:
    """Serialize a fitted classifier; optionally write the text to output_path.

    Raises UnsupportedEstimator for classes, kernels, or activations without
    a document mapping and NotFitted when the estimator has no parameters.
    """
    conv = _find_converter(estimator)
    _require_fitted(estimator)
    labels = _labels(estimator)
    family, payload, warnings = conv(estimator)
    import sklearn
    doc = {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "n_features": int(estimator.n_features_in_),
        "classes": labels,
        "payload": payload,
        "metadata": {
            "estimator": type(estimator).__name__,
            "library": "scikit-learn",
            "version": sklearn.__version__,
        },
    }
    text = json.dumps(doc, indent=2) + "\n"
    if output_path is not None:
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return ExportResult(document=text, warnings=tuple(warnings))
