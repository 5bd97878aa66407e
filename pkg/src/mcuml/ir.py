"""Model intermediate representation.

A ModelIR is an immutable, validated description of one trained classifier:
decision tree, linear scorer, multilayer perceptron, or kernel SVM.  Models
travel as JSON documents; parse_model/serialize_model round-trip them and
model_fingerprint hashes the canonical form so generated code and eval
reports can be tied back to the exact model they came from.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import SchemaError, StructureError

FAMILIES = ("tree", "linear", "mlp", "kernel_svm")
ACTIVATIONS = ("sigmoid", "relu", "identity")
SCORE_RULES = ("argmax_linear", "binary_sign")
KERNELS = ("poly", "rbf")

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature/threshold/left/right) or leaf (leaf_class)."""

    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional[int] = None
    right: Optional[int] = None
    leaf_class: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.leaf_class is not None


@dataclass(frozen=True)
class TreeModel:
    nodes: tuple


@dataclass(frozen=True)
class LinearModel:
    weights: tuple  # rows x n_features
    bias: tuple
    score_rule: str = "argmax_linear"


@dataclass(frozen=True)
class MLPLayer:
    weights: tuple  # out x in
    bias: tuple
    activation: str


@dataclass(frozen=True)
class MLPModel:
    layers: tuple


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float
    coef0: float = 0.0
    degree: int = 0


@dataclass(frozen=True)
class SVMMachine:
    class_a: int
    class_b: int
    support_vectors: tuple  # rows x n_features
    dual_coefs: tuple
    intercept: float


@dataclass(frozen=True)
class KernelSVMModel:
    kernel: KernelSpec
    machines: tuple


@dataclass(frozen=True)
class ModelIR:
    family: str
    n_features: int
    class_labels: tuple
    payload: Any
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)


@dataclass(frozen=True)
class ModelStats:
    param_count: int
    node_count: int = 0
    internal_count: int = 0
    leaf_count: int = 0
    max_depth: int = 0
    layer_widths: tuple = ()
    max_layer_width: int = 0
    machine_count: int = 0
    sv_count: int = 0


# ---------------------------------------------------------------------------
# parsing

def _want(obj, key, path, types, required=True, default=None):
    if key not in obj:
        if required:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return default
    v = obj[key]
    # bool passes isinstance checks against int; reject it explicitly
    if isinstance(v, bool) and bool not in types:
        raise SchemaError(f"{path}.{key}", f"expected {_names(types)}, got bool")
    if not isinstance(v, types):
        raise SchemaError(f"{path}.{key}", f"expected {_names(types)}, got {type(v).__name__}")
    return v


def _names(types) -> str:
    return "/".join(t.__name__ for t in types)


def _real(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected number, got {type(v).__name__}")
    return float(v)


def _int(v, path) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(path, f"expected integer, got {type(v).__name__}")
    return v


def _real_vector(v, path) -> tuple:
    if not isinstance(v, list):
        raise SchemaError(path, f"expected array, got {type(v).__name__}")
    return tuple(_real(x, f"{path}[{i}]") for i, x in enumerate(v))


def _real_matrix(v, path) -> tuple:
    if not isinstance(v, list):
        raise SchemaError(path, f"expected array, got {type(v).__name__}")
    return tuple(_real_vector(row, f"{path}[{i}]") for i, row in enumerate(v))


def _parse_tree(payload, path, class_labels) -> TreeModel:
    raw_nodes = _want(payload, "nodes", path, (list,))
    nodes = []
    for i, nd in enumerate(raw_nodes):
        npath = f"{path}.nodes[{i}]"
        if not isinstance(nd, dict):
            raise SchemaError(npath, f"expected object, got {type(nd).__name__}")
        if "leaf" in nd:
            label = nd["leaf"]
            if isinstance(label, str):
                if label not in class_labels:
                    raise SchemaError(f"{npath}.leaf", f"unknown class label {label!r}")
                cls = class_labels.index(label)
            else:
                cls = _int(label, f"{npath}.leaf")
            nodes.append(TreeNode(leaf_class=cls))
        else:
            nodes.append(TreeNode(
                feature=_int(_want(nd, "feature", npath, (int,)), f"{npath}.feature"),
                threshold=_real(_want(nd, "threshold", npath, (int, float)), f"{npath}.threshold"),
                left=_int(_want(nd, "left", npath, (int,)), f"{npath}.left"),
                right=_int(_want(nd, "right", npath, (int,)), f"{npath}.right"),
            ))
    return TreeModel(nodes=tuple(nodes))


def _parse_linear(payload, path) -> LinearModel:
    rule = _want(payload, "score_rule", path, (str,), required=False, default="argmax_linear")
    if rule not in SCORE_RULES:
        raise SchemaError(f"{path}.score_rule", f"unknown score rule {rule!r}")
    return LinearModel(
        weights=_real_matrix(_want(payload, "weights", path, (list,)), f"{path}.weights"),
        bias=_real_vector(_want(payload, "bias", path, (list,)), f"{path}.bias"),
        score_rule=rule,
    )


def _parse_mlp(payload, path) -> MLPModel:
    raw_layers = _want(payload, "layers", path, (list,))
    layers = []
    for i, ly in enumerate(raw_layers):
        lpath = f"{path}.layers[{i}]"
        if not isinstance(ly, dict):
            raise SchemaError(lpath, f"expected object, got {type(ly).__name__}")
        act = _want(ly, "activation", lpath, (str,))
        if act not in ACTIVATIONS:
            raise SchemaError(f"{lpath}.activation", f"unknown activation {act!r}")
        layers.append(MLPLayer(
            weights=_real_matrix(_want(ly, "weights", lpath, (list,)), f"{lpath}.weights"),
            bias=_real_vector(_want(ly, "bias", lpath, (list,)), f"{lpath}.bias"),
            activation=act,
        ))
    return MLPModel(layers=tuple(layers))


def _parse_svm(payload, path) -> KernelSVMModel:
    kobj = _want(payload, "kernel", path, (dict,))
    kpath = f"{path}.kernel"
    kind = _want(kobj, "type", kpath, (str,))
    if kind not in KERNELS:
        raise SchemaError(f"{kpath}.type", f"unknown kernel {kind!r}")
    gamma = _real(_want(kobj, "gamma", kpath, (int, float)), f"{kpath}.gamma")
    if kind == "poly":
        coef0 = _real(_want(kobj, "coef0", kpath, (int, float)), f"{kpath}.coef0")
        degree = _int(_want(kobj, "degree", kpath, (int,)), f"{kpath}.degree")
        kernel = KernelSpec(kind=kind, gamma=gamma, coef0=coef0, degree=degree)
    else:
        kernel = KernelSpec(kind=kind, gamma=gamma)
    raw_machines = _want(payload, "machines", path, (list,))
    machines = []
    for i, mc in enumerate(raw_machines):
        mpath = f"{path}.machines[{i}]"
        if not isinstance(mc, dict):
            raise SchemaError(mpath, f"expected object, got {type(mc).__name__}")
        machines.append(SVMMachine(
            class_a=_int(_want(mc, "class_a", mpath, (int,)), f"{mpath}.class_a"),
            class_b=_int(_want(mc, "class_b", mpath, (int,)), f"{mpath}.class_b"),
            support_vectors=_real_matrix(
                _want(mc, "support_vectors", mpath, (list,)), f"{mpath}.support_vectors"),
            dual_coefs=_real_vector(_want(mc, "dual_coefs", mpath, (list,)), f"{mpath}.dual_coefs"),
            intercept=_real(_want(mc, "intercept", mpath, (int, float)), f"{mpath}.intercept"),
        ))
    return KernelSVMModel(kernel=kernel, machines=tuple(machines))


def parse_model(text: str) -> ModelIR:
    """Parse model JSON; SchemaError on malformed input, StructureError on invalid models."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", f"expected object, got {type(doc).__name__}")
    version = _want(doc, "schema_version", "$", (int,), required=False, default=SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError("$.schema_version", f"unsupported version {version}, expected {SCHEMA_VERSION}")
    family = _want(doc, "family", "$", (str,))
    if family not in FAMILIES:
        raise SchemaError("$.family", f"unknown family {family!r}, expected one of {FAMILIES}")
    n_features = _want(doc, "n_features", "$", (int,))
    raw_classes = _want(doc, "classes", "$", (list,))
    classes = []
    for i, cl in enumerate(raw_classes):
        if not isinstance(cl, str):
            raise SchemaError(f"$.classes[{i}]", f"expected string, got {type(cl).__name__}")
        classes.append(cl)
    payload_obj = _want(doc, "payload", "$", (dict,))
    metadata = _want(doc, "metadata", "$", (dict,), required=False, default={})
    for k, v in metadata.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise SchemaError(f"$.metadata[{k!r}]", "metadata entries must map strings to strings")

    if family == "tree":
        payload = _parse_tree(payload_obj, "$.payload", classes)
    elif family == "linear":
        payload = _parse_linear(payload_obj, "$.payload")
    elif family == "mlp":
        payload = _parse_mlp(payload_obj, "$.payload")
    else:
        payload = _parse_svm(payload_obj, "$.payload")

    model = ModelIR(
        family=family,
        n_features=n_features,
        class_labels=tuple(classes),
        payload=payload,
        metadata=dict(metadata),
        schema_version=version,
    )
    violations = validate(model)
    if violations:
        raise StructureError(violations)
    return model


# ---------------------------------------------------------------------------
# validation

def _finite(x: float) -> bool:
    return math.isfinite(x)


def _check_tree(m: ModelIR, out: list):
    tree: TreeModel = m.payload
    nodes = tree.nodes
    n = len(nodes)
    if n == 0:
        out.append("TreeModel.nodes: must contain at least one node")
        return
    parents = {}
    for i, nd in enumerate(nodes):
        where = f"TreeModel.nodes[{i}]"
        if nd.is_leaf:
            if nd.feature is not None or nd.threshold is not None \
                    or nd.left is not None or nd.right is not None:
                out.append(f"{where}: leaf must not carry split fields")
            if not (0 <= nd.leaf_class < m.n_classes):
                out.append(f"{where}.leaf_class: {nd.leaf_class} outside [0, {m.n_classes})")
            continue
        if nd.feature is None or nd.threshold is None or nd.left is None or nd.right is None:
            out.append(f"{where}: internal node must carry feature, threshold, left, right")
            continue
        if not (0 <= nd.feature < m.n_features):
            out.append(f"{where}.feature: {nd.feature} outside [0, {m.n_features})")
        if not _finite(nd.threshold):
            out.append(f"{where}.threshold: must be finite")
        for side in ("left", "right"):
            child = getattr(nd, side)
            if not (0 <= child < n):
                out.append(f"{where}.{side}: child {child} outside [0, {n})")
            elif child <= i:
                out.append(f"{where}.{side}: child {child} must follow parent {i} (topological order)")
            elif child in parents:
                out.append(f"{where}.{side}: node {child} already has parent {parents[child]}")
            else:
                parents[child] = i
    if not out:
        for i in range(1, n):
            if i not in parents:
                out.append(f"TreeModel.nodes[{i}]: unreachable (no parent)")


def _check_linear(m: ModelIR, out: list):
    lin: LinearModel = m.payload
    rows = len(lin.weights)
    if lin.score_rule == "binary_sign":
        if m.n_classes != 2:
            out.append("LinearModel.score_rule: binary_sign requires exactly 2 classes")
        if rows != 1:
            out.append(f"LinearModel.weights: binary_sign expects 1 row, got {rows}")
    else:
        if rows != m.n_classes:
            out.append(f"LinearModel.weights: expected {m.n_classes} rows, got {rows}")
    for i, row in enumerate(lin.weights):
        if len(row) != m.n_features:
            out.append(f"LinearModel.weights[{i}]: expected {m.n_features} columns, got {len(row)}")
        if not all(_finite(w) for w in row):
            out.append(f"LinearModel.weights[{i}]: must be finite")
    if len(lin.bias) != rows:
        out.append(f"LinearModel.bias: expected {rows} entries, got {len(lin.bias)}")
    if not all(_finite(b) for b in lin.bias):
        out.append("LinearModel.bias: must be finite")


def _check_mlp(m: ModelIR, out: list):
    mlp: MLPModel = m.payload
    if not mlp.layers:
        out.append("MLPModel.layers: must contain at least one layer")
        return
    in_dim = m.n_features
    for i, ly in enumerate(mlp.layers):
        where = f"MLPModel.layers[{i}]"
        out_dim = len(ly.weights)
        if out_dim == 0:
            out.append(f"{where}.weights: layer must have at least one unit")
            continue
        for j, row in enumerate(ly.weights):
            if len(row) != in_dim:
                out.append(f"{where}.weights[{j}]: expected {in_dim} columns, got {len(row)}")
            if not all(_finite(w) for w in row):
                out.append(f"{where}.weights[{j}]: must be finite")
        if len(ly.bias) != out_dim:
            out.append(f"{where}.bias: expected {out_dim} entries, got {len(ly.bias)}")
        if not all(_finite(b) for b in ly.bias):
            out.append(f"{where}.bias: must be finite")
        if ly.activation not in ACTIVATIONS:
            out.append(f"{where}.activation: unknown {ly.activation!r}")
        in_dim = out_dim
    last = mlp.layers[-1]
    out_dim = len(last.weights)
    if out_dim == 1:
        if m.n_classes != 2:
            out.append("MLPModel.layers: single output unit requires exactly 2 classes")
        if last.activation != "sigmoid":
            out.append("MLPModel.layers: single output unit requires sigmoid final activation")
    elif out_dim != m.n_classes:
        out.append(f"MLPModel.layers: final width {out_dim} must equal n_classes {m.n_classes} (or 1)")


def _check_svm(m: ModelIR, out: list):
    svm: KernelSVMModel = m.payload
    k = svm.kernel
    if k.kind not in KERNELS:
        out.append(f"KernelSpec.kind: unknown {k.kind!r}")
    if not _finite(k.gamma) or k.gamma <= 0:
        out.append("KernelSpec.gamma: must be finite and positive")
    if k.kind == "poly":
        if k.degree < 1:
            out.append(f"KernelSpec.degree: must be >= 1, got {k.degree}")
        if not _finite(k.coef0):
            out.append("KernelSpec.coef0: must be finite")
    kk = m.n_classes
    expected_pairs = {(a, b) for a in range(kk) for b in range(a + 1, kk)}
    seen = set()
    for i, mc in enumerate(svm.machines):
        where = f"SVMMachine[{i}]"
        if not (0 <= mc.class_a < kk) or not (0 <= mc.class_b < kk):
            out.append(f"{where}: class pair ({mc.class_a}, {mc.class_b}) outside [0, {kk})")
            continue
        if mc.class_a >= mc.class_b:
            out.append(f"{where}: requires class_a < class_b, got ({mc.class_a}, {mc.class_b})")
            continue
        pair = (mc.class_a, mc.class_b)
        if pair in seen:
            out.append(f"{where}: duplicate machine for pair {pair}")
        seen.add(pair)
        if len(mc.support_vectors) == 0:
            out.append(f"{where}.support_vectors: must contain at least one vector")
        for j, sv in enumerate(mc.support_vectors):
            if len(sv) != m.n_features:
                out.append(f"{where}.support_vectors[{j}]: expected {m.n_features} columns, got {len(sv)}")
            if not all(_finite(v) for v in sv):
                out.append(f"{where}.support_vectors[{j}]: must be finite")
        if len(mc.dual_coefs) != len(mc.support_vectors):
            out.append(f"{where}.dual_coefs: expected {len(mc.support_vectors)} entries, got {len(mc.dual_coefs)}")
        if not all(_finite(d) for d in mc.dual_coefs):
            out.append(f"{where}.dual_coefs: must be finite")
        if not _finite(mc.intercept):
            out.append(f"{where}.intercept: must be finite")
    missing = expected_pairs - seen
    if missing:
        out.append(f"KernelSVMModel.machines: missing pairs {sorted(missing)}")


_PAYLOAD_TYPES = {
    "tree": TreeModel,
    "linear": LinearModel,
    "mlp": MLPModel,
    "kernel_svm": KernelSVMModel,
}


def validate(model: ModelIR) -> list:
    """Return all invariant violations as 'Type.field: rule' strings (empty if valid)."""
    out: list = []
    if model.schema_version != SCHEMA_VERSION:
        out.append(f"ModelIR.schema_version: unsupported {model.schema_version}")
    if model.family not in FAMILIES:
        out.append(f"ModelIR.family: unknown {model.family!r}")
        return out
    if not isinstance(model.n_features, int) or model.n_features < 1:
        out.append(f"ModelIR.n_features: must be a positive integer, got {model.n_features!r}")
    if len(model.class_labels) < 2:
        out.append("ModelIR.class_labels: need at least 2 classes")
    if len(set(model.class_labels)) != len(model.class_labels):
        out.append("ModelIR.class_labels: labels must be distinct")
    if any(not isinstance(c, str) or not c for c in model.class_labels):
        out.append("ModelIR.class_labels: labels must be non-empty strings")
    want_type = _PAYLOAD_TYPES[model.family]
    if not isinstance(model.payload, want_type):
        out.append(f"ModelIR.payload: family {model.family} needs {want_type.__name__}, "
                   f"got {type(model.payload).__name__}")
        return out
    if out:
        return out
    if model.family == "tree":
        _check_tree(model, out)
    elif model.family == "linear":
        _check_linear(model, out)
    elif model.family == "mlp":
        _check_mlp(model, out)
    else:
        _check_svm(model, out)
    return out


# ---------------------------------------------------------------------------
# serialization

def _tree_doc(tree: TreeModel, class_labels) -> dict:
    nodes = []
    for nd in tree.nodes:
        if nd.is_leaf:
            nodes.append({"leaf": class_labels[nd.leaf_class]})
        else:
            nodes.append({"feature": nd.feature, "threshold": nd.threshold,
                          "left": nd.left, "right": nd.right})
    return {"nodes": nodes}


def _linear_doc(lin: LinearModel) -> dict:
    return {"weights": [list(r) for r in lin.weights],
            "bias": list(lin.bias),
            "score_rule": lin.score_rule}


def _mlp_doc(mlp: MLPModel) -> dict:
    return {"layers": [{"weights": [list(r) for r in ly.weights],
                        "bias": list(ly.bias),
                        "activation": ly.activation} for ly in mlp.layers]}


def _svm_doc(svm: KernelSVMModel) -> dict:
    k = svm.kernel
    kernel = {"type": k.kind, "gamma": k.gamma}
    if k.kind == "poly":
        kernel["coef0"] = k.coef0
        kernel["degree"] = k.degree
    return {"kernel": kernel,
            "machines": [{"class_a": mc.class_a, "class_b": mc.class_b,
                          "support_vectors": [list(r) for r in mc.support_vectors],
                          "dual_coefs": list(mc.dual_coefs),
                          "intercept": mc.intercept} for mc in svm.machines]}


def model_to_dict(model: ModelIR) -> dict:
    if model.family == "tree":
        payload = _tree_doc(model.payload, model.class_labels)
    elif model.family == "linear":
        payload = _linear_doc(model.payload)
    elif model.family == "mlp":
        payload = _mlp_doc(model.payload)
    else:
        payload = _svm_doc(model.payload)
    return {
        "schema_version": model.schema_version,
        "family": model.family,
        "n_features": model.n_features,
        "classes": list(model.class_labels),
        "payload": payload,
        "metadata": dict(sorted(model.metadata.items())),
    }


def serialize_model(model: ModelIR, indent: Optional[int] = None) -> str:
    doc = model_to_dict(model)
    if indent is None:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return json.dumps(doc, sort_keys=True, indent=indent)


def model_fingerprint(model: ModelIR) -> str:
    """SHA-256 of the canonical serialization; identifies the exact model."""
    return hashlib.sha256(serialize_model(model).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# stats

def _tree_depth(nodes, i=0, d=0) -> int:
    # trees are shallow relative to recursion limits only when balanced;
    # walk iteratively to survive degenerate chains
    best = 0
    stack = [(i, d)]
    while stack:
        idx, depth = stack.pop()
        nd = nodes[idx]
        if nd.is_leaf:
            best = max(best, depth)
        else:
            stack.append((nd.left, depth + 1))
            stack.append((nd.right, depth + 1))
    return best


def model_stats(model: ModelIR) -> ModelStats:
    """Size accounting used by memory estimation and reports."""
    if model.family == "tree":
        nodes = model.payload.nodes
        internal = sum(1 for nd in nodes if not nd.is_leaf)
        return ModelStats(
            param_count=internal,
            node_count=len(nodes),
            internal_count=internal,
            leaf_count=len(nodes) - internal,
            max_depth=_tree_depth(nodes),
        )
    if model.family == "linear":
        lin = model.payload
        rows = len(lin.weights)
        return ModelStats(param_count=rows * model.n_features + rows)
    if model.family == "mlp":
        mlp = model.payload
        widths = tuple(len(ly.weights) for ly in mlp.layers)
        params = 0
        in_dim = model.n_features
        for ly in mlp.layers:
            out_dim = len(ly.weights)
            params += out_dim * in_dim + out_dim
            in_dim = out_dim
        return ModelStats(
            param_count=params,
            layer_widths=widths,
            max_layer_width=max((model.n_features,) + widths),
        )
    svm = model.payload
    total_sv = sum(len(mc.support_vectors) for mc in svm.machines)
    params = total_sv * model.n_features + total_sv + len(svm.machines)
    return ModelStats(
        param_count=params,
        machine_count=len(svm.machines),
        sv_count=total_sv,
    )
