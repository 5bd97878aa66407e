"""Reference inference engine.

Predicts with one of two numeric kernels:

* FLT: strict 32-bit float emulation. Every scalar operation is performed
  on np.float32 operands, so each step is correctly rounded binary32 and
  matches emitted C++ float code compiled with FP contraction off.
* FXP: Q-format fixed point on raw integers via the fixedpoint module,
  with saturation/underflow counters in an explicit FxpContext.

Feature vectors are converted to the active representation once, at the
prediction entry point.  Input conversions count as arithmetic ops;
comparisons and selects (tree splits, relu, clamps, argmax) are free.
Ties always resolve to the lowest class index so host and emitted code
stay bit-comparable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import fixedpoint as fx
from .errors import DimensionMismatch, Unsupported
from .ir import ModelIR, model_stats

SIGMOID_VARIANTS = ("exact", "rational", "pwl2", "pwl4")
TREE_STYLES = ("iterative", "if_else")
IF_ELSE_DEPTH_CAP = 512


@dataclass(frozen=True)
class NumericMode:
    kind: str  # "flt" or "fxp"
    fmt: Optional[fx.QFormat] = None

    def __post_init__(self):
        if self.kind not in ("flt", "fxp"):
            raise ValueError(f"unknown numeric mode kind {self.kind!r}")
        if self.kind == "fxp" and self.fmt is None:
            raise ValueError("fxp mode requires a QFormat")
        if self.kind == "flt" and self.fmt is not None:
            raise ValueError("flt mode takes no QFormat")

    @property
    def is_fxp(self) -> bool:
        return self.kind == "fxp"

    @property
    def name(self) -> str:
        if self.kind == "flt":
            return "flt"
        return f"fxp{self.fmt.total_bits}"

    @classmethod
    def flt(cls) -> "NumericMode":
        return cls("flt")

    @classmethod
    def fxp(cls, fmt: fx.QFormat) -> "NumericMode":
        return cls("fxp", fmt)

    @classmethod
    def fxp32(cls) -> "NumericMode":
        return cls("fxp", fx.Q22_10)

    @classmethod
    def fxp16(cls) -> "NumericMode":
        return cls("fxp", fx.Q12_4)


MODE_FLT = NumericMode.flt()


@dataclass(frozen=True)
class Prediction:
    class_index: int
    label: str
    scores: tuple  # real-valued per-class scores
    counters_snapshot: fx.OpCounters
    raw_scores: Optional[tuple] = None  # fixed-point raw scores (FXP modes)


# ---------------------------------------------------------------------------
# float32 kernel
#
# exp_f32 is hand-rolled (range reduction by ln2, degree-5 polynomial,
# exact power-of-two rescale) because emitted code may not call libm; the
# generated C++ repeats this function literally, so both sides round alike.

F32_ZERO = np.float32(0.0)
F32_HALF = np.float32(0.5)
F32_ONE = np.float32(1.0)

EXPF_MAX_X = np.float32(89.0)
EXPF_MIN_X = np.float32(-88.0)
EXPF_INV_LN2 = np.float32(1.4426950408889634)
EXPF_LN2_HI = np.float32(0.693359375)  # exact in binary32
EXPF_LN2_LO = np.float32(-2.12194440e-4)
EXPF_COEFFS = tuple(np.float32(np.float64(1.0) / f) for f in (1, 1, 2, 6, 24, 120))

SIG_PWL2_SLOPE = np.float32(0.25)
SIG_PWL4_SLOPE_MID = np.float32(0.231)
SIG_PWL4_SLOPE_OUT = np.float32(np.float64(0.251) / 3)
SIG_PWL4_KNEE_LO = np.float32(0.269)
SIG_PWL4_KNEE_HI = np.float32(0.731)
SIG_PWL4_FLOOR = np.float32(0.018)
SIG_PWL4_CEIL = np.float32(0.982)


def exp_f32(x: np.float32) -> np.float32:
    """binary32 e^x: clamps to inf/0 outside [-88, 89), else 2^k * p5(r)."""
    if x >= EXPF_MAX_X:
        return np.float32(np.inf)
    if x <= EXPF_MIN_X:
        return F32_ZERO
    t = x * EXPF_INV_LN2
    t2 = t + F32_HALF
    k = int(math.floor(float(t2)))
    if k > 127:
        return np.float32(np.inf)
    if k < -126:
        return F32_ZERO
    kf = np.float32(k)
    r = (x - kf * EXPF_LN2_HI) - kf * EXPF_LN2_LO
    c = EXPF_COEFFS
    p = c[5]
    p = c[4] + r * p
    p = c[3] + r * p
    p = c[2] + r * p
    p = c[1] + r * p
    p = c[0] + r * p
    return p * np.float32(2.0 ** k)  # scale is an exact power of two


def sigmoid_f32(x: np.float32, variant: str) -> np.float32:
    if variant == "exact":
        e = exp_f32(-x)
        return F32_ONE / (F32_ONE + e)
    if variant == "rational":
        ax = -x if x < 0 else x
        q = x / (F32_ONE + ax)
        return F32_HALF + F32_HALF * q
    if variant == "pwl2":
        s = F32_HALF + SIG_PWL2_SLOPE * x
        if s < F32_ZERO:
            return F32_ZERO
        if s > F32_ONE:
            return F32_ONE
        return s
    if variant == "pwl4":
        if x <= -F32_ONE:
            y = SIG_PWL4_KNEE_LO + SIG_PWL4_SLOPE_OUT * (x + F32_ONE)
            return SIG_PWL4_FLOOR if y < SIG_PWL4_FLOOR else y
        if x <= F32_ONE:
            return F32_HALF + SIG_PWL4_SLOPE_MID * x
        y = SIG_PWL4_KNEE_HI + SIG_PWL4_SLOPE_OUT * (x - F32_ONE)
        return SIG_PWL4_CEIL if y > SIG_PWL4_CEIL else y
    raise ValueError(f"unknown sigmoid variant {variant!r}")


# ---------------------------------------------------------------------------
# fixed-point sigmoid (raw integers, same branch structure as sigmoid_f32)

@lru_cache(maxsize=None)
def _sig_raws(fmt: fx.QFormat) -> dict:
    q = lambda v: fx.quantize_param(v, fmt)
    return {
        "one": q(1.0),
        "half": q(0.5),
        "pwl2_slope": q(float(SIG_PWL2_SLOPE)),
        "mid_slope": q(float(SIG_PWL4_SLOPE_MID)),
        "out_slope": q(float(SIG_PWL4_SLOPE_OUT)),
        "knee_lo": q(float(SIG_PWL4_KNEE_LO)),
        "knee_hi": q(float(SIG_PWL4_KNEE_HI)),
        "floor": q(float(SIG_PWL4_FLOOR)),
        "ceil": q(float(SIG_PWL4_CEIL)),
    }


def sigmoid_raw(x: int, fmt: fx.QFormat, c: fx.OpCounters, variant: str) -> int:
    k = _sig_raws(fmt)
    one = k["one"]
    if variant == "exact":
        e = fx.raw_exp(fx.raw_neg(x, fmt, c), fmt, c)
        return fx.raw_div(one, fx.raw_add(one, e, fmt, c), fmt, c)
    if variant == "rational":
        ax = fx.raw_abs(x, fmt, c)
        q = fx.raw_div(x, fx.raw_add(one, ax, fmt, c), fmt, c)
        return fx.raw_add(k["half"], fx.raw_mul(k["half"], q, fmt, c), fmt, c)
    if variant == "pwl2":
        s = fx.raw_add(k["half"], fx.raw_mul(k["pwl2_slope"], x, fmt, c), fmt, c)
        if s < 0:
            return 0
        if s > one:
            return one
        return s
    if variant == "pwl4":
        if x <= -one:
            y = fx.raw_add(k["knee_lo"],
                           fx.raw_mul(k["out_slope"], fx.raw_add(x, one, fmt, c), fmt, c),
                           fmt, c)
            return k["floor"] if y < k["floor"] else y
        if x <= one:
            return fx.raw_add(k["half"], fx.raw_mul(k["mid_slope"], x, fmt, c), fmt, c)
        y = fx.raw_add(k["knee_hi"],
                       fx.raw_mul(k["out_slope"], fx.raw_sub(x, one, fmt, c), fmt, c),
                       fmt, c)
        return k["ceil"] if y > k["ceil"] else y
    raise ValueError(f"unknown sigmoid variant {variant!r}")


def sigmoid_eval(x, variant: str, mode: NumericMode, ctx: Optional[fx.FxpContext] = None):
    """Evaluate one sigmoid variant: float in FLT mode, FixedValue in FXP mode."""
    if variant not in SIGMOID_VARIANTS:
        raise ValueError(f"unknown sigmoid variant {variant!r}")
    if mode.is_fxp:
        if not isinstance(x, fx.FixedValue):
            raise TypeError("fxp mode expects a FixedValue input")
        c = (ctx or fx.FxpContext()).counters
        return fx.FixedValue(sigmoid_raw(x.raw, x.fmt, c, variant), x.fmt)
    return float(sigmoid_f32(np.float32(x), variant))


# ---------------------------------------------------------------------------
# predictor

def _argmax(scores) -> int:
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


class Predictor:
    """One model prepared for repeated prediction under a fixed mode/variant.

    Parameters are narrowed (FLT) or quantized (FXP) once at construction;
    predict() then runs the scalar reference semantics per row.
    """

    def __init__(self, model: ModelIR, mode: NumericMode, sigmoid: str = "exact",
                 tree_style: str = "iterative"):
        if sigmoid not in SIGMOID_VARIANTS:
            raise ValueError(f"unknown sigmoid variant {sigmoid!r}")
        if tree_style not in TREE_STYLES:
            raise ValueError(f"unknown tree style {tree_style!r}")
        self.model = model
        self.mode = mode
        self.sigmoid = sigmoid
        self.tree_style = tree_style
        self._stats = model_stats(model)
        if mode.is_fxp:
            conv = lambda v: fx.quantize_param(v, mode.fmt)
        else:
            conv = np.float32
        self._prepare(conv)

    def _prepare(self, conv):
        m = self.model
        if m.family == "tree":
            self._nodes = [
                (nd.leaf_class, nd.feature,
                 None if nd.is_leaf else conv(nd.threshold), nd.left, nd.right)
                for nd in m.payload.nodes
            ]
            if self.tree_style == "if_else" and self._stats.max_depth > IF_ELSE_DEPTH_CAP:
                warnings.warn(
                    f"tree depth {self._stats.max_depth} exceeds the if_else cap "
                    f"of {IF_ELSE_DEPTH_CAP}; using the iterative path instead")
                self.tree_style = "iterative"
        elif m.family == "linear":
            self._weights = [[conv(w) for w in row] for row in m.payload.weights]
            self._bias = [conv(b) for b in m.payload.bias]
        elif m.family == "mlp":
            self._layers = [([[conv(w) for w in row] for row in ly.weights],
                             [conv(b) for b in ly.bias], ly.activation)
                            for ly in m.payload.layers]
        else:
            kr = m.payload.kernel
            self._gamma = conv(kr.gamma)
            self._coef0 = conv(kr.coef0) if kr.kind == "poly" else None
            self._machines = [(mc.class_a, mc.class_b,
                               [[conv(v) for v in sv] for sv in mc.support_vectors],
                               [conv(d) for d in mc.dual_coefs],
                               conv(mc.intercept))
                              for mc in m.payload.machines]

    # -- input conversion ---------------------------------------------------

    def _convert_input(self, x: Sequence, c: fx.OpCounters):
        if len(x) != self.model.n_features:
            raise DimensionMismatch(
                f"model takes {self.model.n_features} features, got {len(x)}")
        if self.mode.is_fxp:
            fmt = self.mode.fmt
            return [fx.raw_to_fixed(float(np.float32(v)), fmt, c) for v in x]
        return [np.float32(v) for v in x]

    # -- family paths ---------------------------------------------------------

    def _tree_scores(self, xv, c):
        nodes = self._nodes
        if self.tree_style == "if_else":
            def descend(i):
                leaf_class, feat, thr, left, right = nodes[i]
                if leaf_class is not None:
                    return leaf_class
                return descend(left) if xv[feat] <= thr else descend(right)
            cls = descend(0)
        else:
            i = 0
            while True:
                leaf_class, feat, thr, left, right = nodes[i]
                if leaf_class is not None:
                    cls = leaf_class
                    break
                i = left if xv[feat] <= thr else right
        k = self.model.n_classes
        if self.mode.is_fxp:
            one = fx.quantize_param(1.0, self.mode.fmt)
            return [one if j == cls else 0 for j in range(k)]
        return [F32_ONE if j == cls else F32_ZERO for j in range(k)]

    def _dot_from(self, acc, row, xv, c):
        if self.mode.is_fxp:
            fmt = self.mode.fmt
            for w, v in zip(row, xv):
                acc = fx.raw_add(acc, fx.raw_mul(w, v, fmt, c), fmt, c)
            return acc
        for w, v in zip(row, xv):
            acc = acc + w * v
        return acc

    def _linear_scores(self, xv, c):
        lin = self.model.payload
        scores = [self._dot_from(self._bias[k], self._weights[k], xv, c)
                  for k in range(len(self._weights))]
        if lin.score_rule == "binary_sign":
            zero = 0 if self.mode.is_fxp else F32_ZERO
            return [zero, scores[0]]
        return scores

    def _activate(self, v, act, c):
        if act == "identity":
            return v
        if act == "relu":
            if self.mode.is_fxp:
                return v if v > 0 else 0
            return v if v > F32_ZERO else F32_ZERO
        if self.mode.is_fxp:
            return sigmoid_raw(v, self.mode.fmt, c, self.sigmoid)
        return sigmoid_f32(v, self.sigmoid)

    def _mlp_scores(self, xv, c):
        width = self._stats.max_layer_width
        # the buffer-reuse contract: exactly two ping-pong buffers
        buf_a = [None] * width
        buf_b = [None] * width
        n = len(xv)
        buf_a[:n] = xv
        for rows, bias, act in self._layers:
            for u in range(len(rows)):
                acc = self._dot_from(bias[u], rows[u], buf_a[:n], c)
                buf_b[u] = self._activate(acc, act, c)
            n = len(rows)
            buf_a, buf_b = buf_b, buf_a
        out = buf_a[:n]
        if n == 1:  # binary sigmoid head: scores are [1 - o, o]
            o = out[0]
            if self.mode.is_fxp:
                one = fx.quantize_param(1.0, self.mode.fmt)
                return [fx.raw_sub(one, o, self.mode.fmt, c), o]
            return [F32_ONE - o, o]
        return out

    def _kernel(self, sv, xv, c):
        kr = self.model.payload.kernel
        if self.mode.is_fxp:
            fmt = self.mode.fmt
            if kr.kind == "poly":
                dot = self._dot_from(0, sv, xv, c)
                t = fx.raw_add(fx.raw_mul(self._gamma, dot, fmt, c), self._coef0, fmt, c)
                return fx.raw_pow_int(t, kr.degree, fmt, c)
            d2 = 0
            for u, v in zip(sv, xv):
                diff = fx.raw_sub(u, v, fmt, c)
                d2 = fx.raw_add(d2, fx.raw_mul(diff, diff, fmt, c), fmt, c)
            return fx.raw_exp(fx.raw_neg(fx.raw_mul(self._gamma, d2, fmt, c), fmt, c), fmt, c)
        if kr.kind == "poly":
            dot = self._dot_from(F32_ZERO, sv, xv, c)
            t = self._gamma * dot + self._coef0
            p = F32_ONE
            b = t
            e = kr.degree
            while True:  # same squaring schedule as fxp_pow_int
                if e & 1:
                    p = p * b
                e >>= 1
                if not e:
                    return p
                b = b * b
        d2 = F32_ZERO
        for u, v in zip(sv, xv):
            diff = u - v
            d2 = d2 + diff * diff
        return exp_f32(-(self._gamma * d2))

    def _svm_scores(self, xv, c):
        votes = [0] * self.model.n_classes
        for a, b, svs, duals, intercept in self._machines:
            s = intercept
            if self.mode.is_fxp:
                fmt = self.mode.fmt
                for sv, d in zip(svs, duals):
                    s = fx.raw_add(s, fx.raw_mul(d, self._kernel(sv, xv, c), fmt, c), fmt, c)
                votes[a if s > 0 else b] += 1
            else:
                for sv, d in zip(svs, duals):
                    s = s + d * self._kernel(sv, xv, c)
                votes[a if s > F32_ZERO else b] += 1
        return votes

    # -- entry point ----------------------------------------------------------

    def predict(self, x: Sequence, ctx: Optional[fx.FxpContext] = None) -> Prediction:
        c = (ctx or fx.FxpContext()).counters
        xv = self._convert_input(x, c)
        family = self.model.family
        if family == "tree":
            scores = self._tree_scores(xv, c)
        elif family == "linear":
            scores = self._linear_scores(xv, c)
        elif family == "mlp":
            scores = self._mlp_scores(xv, c)
        else:
            scores = self._svm_scores(xv, c)
        cls = _argmax(scores)
        snap = c.snapshot()
        if self.mode.is_fxp:
            fmt = self.mode.fmt
            if family == "kernel_svm":  # vote counts, encoded at the format's scale
                raw = [min(v << fmt.frac_bits, fmt.raw_max) for v in scores]
            else:
                raw = list(scores)
            return Prediction(
                class_index=cls,
                label=self.model.class_labels[cls],
                scores=tuple(r * fmt.resolution for r in raw),
                counters_snapshot=snap,
                raw_scores=tuple(raw),
            )
        return Prediction(
            class_index=cls,
            label=self.model.class_labels[cls],
            scores=tuple(float(s) for s in scores),
            counters_snapshot=snap,
        )


# ---------------------------------------------------------------------------
# one-shot helpers

def _family_predict(model: ModelIR, family: str, x, mode, ctx, **kw) -> Prediction:
    if model.family != family:
        raise ValueError(f"expected a {family} model, got {model.family}")
    return Predictor(model, mode, **kw).predict(x, ctx)


def predict_tree(model: ModelIR, x, mode: NumericMode, style: str = "iterative",
                 ctx: Optional[fx.FxpContext] = None) -> Prediction:
    return _family_predict(model, "tree", x, mode, ctx, tree_style=style)


def predict_linear(model: ModelIR, x, mode: NumericMode,
                   ctx: Optional[fx.FxpContext] = None) -> Prediction:
    return _family_predict(model, "linear", x, mode, ctx)


def predict_mlp(model: ModelIR, x, mode: NumericMode, variant: str = "exact",
                ctx: Optional[fx.FxpContext] = None) -> Prediction:
    return _family_predict(model, "mlp", x, mode, ctx, sigmoid=variant)


def predict_svm_kernel(model: ModelIR, x, mode: NumericMode,
                       ctx: Optional[fx.FxpContext] = None) -> Prediction:
    return _family_predict(model, "kernel_svm", x, mode, ctx)


def predict(model: ModelIR, x, mode: NumericMode, variant: str = "exact",
            style: str = "iterative", ctx: Optional[fx.FxpContext] = None) -> Prediction:
    """Family-dispatching predict; the style/variant apply where relevant."""
    return Predictor(model, mode, sigmoid=variant, tree_style=style).predict(x, ctx)
