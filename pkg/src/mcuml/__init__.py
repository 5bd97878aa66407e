"""mcuml: turn small trained classifiers into standalone C++ for
microcontrollers, and predict on the host how the numeric choices
(float32 vs saturating fixed point) will change accuracy and memory
before anything is flashed.

The pipeline: a JSON model interchange (`ir`), bit-faithful host
emulation of the emitted arithmetic (`fixedpoint`, `inference`),
source emission with flash/SRAM estimates (`codegen`), and dataset
evaluation reports (`evaluation`), all tied together by a CLI (`cli`).
"""

from .codegen import (
    GeneratedSource,
    GenOptions,
    MemoryEstimate,
    estimate_memory,
    gen_fixedpoint_runtime,
    generate,
)
from .errors import (
    DegenerateClass,
    DimensionMismatch,
    DivisionByZero,
    FormatMismatch,
    LabelMismatch,
    McumlError,
    MismatchedRuns,
    MissingLabelColumn,
    NegativeInput,
    ParseError,
    SchemaError,
    StructureError,
    Unsupported,
)
from .evaluation import (
    Comparison,
    Dataset,
    EvalReport,
    compare_many,
    compare_reports,
    evaluate,
    holdout_split,
    load_csv,
    memory_estimate,
)
from .fixedpoint import (
    FixedValue,
    FxpContext,
    OpCounters,
    Q12_4,
    Q22_10,
    QFormat,
    from_fixed,
    fxp_add,
    fxp_div,
    fxp_exp,
    fxp_mul,
    fxp_neg,
    fxp_pow_int,
    fxp_sqrt,
    fxp_sub,
    quantize_param,
    to_fixed,
)
from .inference import (
    MODE_FLT,
    NumericMode,
    Prediction,
    Predictor,
    SIGMOID_VARIANTS,
    TREE_STYLES,
    exp_f32,
    predict,
    predict_linear,
    predict_mlp,
    predict_svm_kernel,
    predict_tree,
    sigmoid_eval,
    sigmoid_f32,
)
from .ir import (
    FAMILIES,
    SCHEMA_VERSION,
    KernelSpec,
    KernelSVMModel,
    LinearModel,
    MLPLayer,
    MLPModel,
    ModelIR,
    SVMMachine,
    TreeModel,
    TreeNode,
    model_fingerprint,
    model_stats,
    model_to_dict,
    parse_model,
    serialize_model,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Comparison",
    "Dataset",
    "DegenerateClass",
    "DimensionMismatch",
    "DivisionByZero",
    "EvalReport",
    "FAMILIES",
    "FixedValue",
    "FormatMismatch",
    "FxpContext",
    "GenOptions",
    "GeneratedSource",
    "KernelSVMModel",
    "KernelSpec",
    "LabelMismatch",
    "LinearModel",
    "MLPLayer",
    "MLPModel",
    "MODE_FLT",
    "McumlError",
    "MemoryEstimate",
    "MismatchedRuns",
    "MissingLabelColumn",
    "ModelIR",
    "NegativeInput",
    "NumericMode",
    "OpCounters",
    "ParseError",
    "Prediction",
    "Predictor",
    "Q12_4",
    "Q22_10",
    "QFormat",
    "SCHEMA_VERSION",
    "SIGMOID_VARIANTS",
    "SVMMachine",
    "SchemaError",
    "StructureError",
    "TREE_STYLES",
    "TreeModel",
    "TreeNode",
    "Unsupported",
    "compare_many",
    "compare_reports",
    "estimate_memory",
    "evaluate",
    "exp_f32",
    "from_fixed",
    "fxp_add",
    "fxp_div",
    "fxp_exp",
    "fxp_mul",
    "fxp_neg",
    "fxp_pow_int",
    "fxp_sqrt",
    "fxp_sub",
    "gen_fixedpoint_runtime",
    "generate",
    "holdout_split",
    "load_csv",
    "memory_estimate",
    "model_fingerprint",
    "model_stats",
    "model_to_dict",
    "parse_model",
    "predict",
    "predict_linear",
    "predict_mlp",
    "predict_svm_kernel",
    "predict_tree",
    "quantize_param",
    "serialize_model",
    "sigmoid_eval",
    "sigmoid_f32",
    "to_fixed",
    "validate",
]
