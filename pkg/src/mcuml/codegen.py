"""Deterministic C++ source emission.

generate() turns one validated ModelIR plus GenOptions into a single
self-contained source file: fixed-width-integer header only, every
parameter array const-qualified, no heap, and (for FXP modes) an inlined
fixed-point runtime whose integer algorithms repeat the fixedpoint module
literally.  The emitted text is byte-identical for identical inputs, so
its hash identifies a build.

Emitted-code contract:
  int32_t <prefix>_classify(const <elem>*)   elem = float | <prefix>_fixed_t
  <prefix>_fixed_t <prefix>_to_fixed(float)  FXP modes only
  void <prefix>_scores(const <elem>*, <elem>*)  only with emit_test_hook
  enum { <prefix>_n_features, <prefix>_n_classes }
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import inference as inf
from .errors import StructureError, Unsupported
from .fixedpoint import EXP_COEFFS, EXP_F, EXP_LN2, QFormat, quantize_param
from .ir import ModelIR, model_fingerprint, model_stats, validate

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class GenOptions:
    mode: inf.NumericMode
    sigmoid: Optional[str] = None  # MLP only
    tree_style: Optional[str] = None  # trees only
    symbol_prefix: str = "mc"
    emit_test_hook: bool = False


@dataclass(frozen=True)
class MemoryEstimate:
    flash_const_bytes: int
    sram_bytes: int
    elem_bytes: int

    def to_dict(self) -> dict:
        return {"flash_const_bytes": self.flash_const_bytes,
                "sram_bytes": self.sram_bytes,
                "elem_bytes": self.elem_bytes}


@dataclass(frozen=True)
class GeneratedSource:
    text: str
    memory: MemoryEstimate
    options_echo: GenOptions
    model_fingerprint: str
    notes: tuple = ()


def _check_options(model: ModelIR, opts: GenOptions):
    if not _IDENT.match(opts.symbol_prefix):
        raise Unsupported(f"symbol_prefix {opts.symbol_prefix!r} is not a valid identifier")
    if opts.tree_style is not None:
        if model.family != "tree":
            raise Unsupported(f"tree_style applies to trees, not {model.family}")
        if opts.tree_style not in inf.TREE_STYLES:
            raise Unsupported(f"unknown tree style {opts.tree_style!r}")
    if opts.sigmoid is not None:
        if model.family != "mlp":
            raise Unsupported(f"sigmoid variant applies to MLPs, not {model.family}")
        if opts.sigmoid not in inf.SIGMOID_VARIANTS:
            raise Unsupported(f"unknown sigmoid variant {opts.sigmoid!r}")
    if (model.family == "mlp" and opts.mode.is_fxp and opts.mode.fmt.total_bits == 8
            and (opts.sigmoid or "exact") in ("exact", "rational")):
        raise Unsupported("exact/rational sigmoid is not emitted for 8-bit formats")


# ---------------------------------------------------------------------------
# literals and array formatting

def f32_lit(x) -> str:
    v = np.float32(x)
    if not np.isfinite(v):
        raise Unsupported(f"parameter {x!r} does not fit binary32")
    # str() of a float32 scalar is the shortest decimal that round-trips,
    # so strtof recovers the identical bits
    return str(v) + "f"


def _storage(fmt: QFormat) -> str:
    return f"int{fmt.total_bits}_t"


def _inter(fmt: QFormat) -> str:
    return {8: "int16_t", 16: "int32_t", 32: "int64_t"}[fmt.total_bits]


def _u_width(maxval: int) -> int:
    if maxval <= 0xFF:
        return 1
    if maxval <= 0xFFFF:
        return 2
    return 4


def _i_width(lo: int, hi: int) -> int:
    if -128 <= lo and hi <= 127:
        return 1
    if -32768 <= lo and hi <= 32767:
        return 2
    return 4


def _u_type(width: int) -> str:
    return {1: "uint8_t", 2: "uint16_t", 4: "uint32_t"}[width]


def _i_type(width: int) -> str:
    return {1: "int8_t", 2: "int16_t", 4: "int32_t"}[width]


def _array(ctype: str, name: str, values, per_line: int = 12) -> str:
    vals = list(values)
    lines = [f"static const {ctype} {name}[{len(vals)}] = {{"]
    for i in range(0, len(vals), per_line):
        lines.append("    " + ", ".join(str(v) for v in vals[i:i + per_line]) + ",")
    lines.append("};")
    return "\n".join(lines)


class _Emit:
    """Per-generate context: element type, value conversion, runtime op set."""

    def __init__(self, model: ModelIR, opts: GenOptions):
        self.model = model
        self.p = opts.symbol_prefix
        self.mode = opts.mode
        self.fxp = opts.mode.is_fxp
        self.fmt = opts.mode.fmt
        if self.fxp:
            self.elem = f"{self.p}_fixed_t"
            self.elem_bytes = self.fmt.total_bits // 8
        else:
            self.elem = "float"
            self.elem_bytes = 4
        self.ops: set = set()
        self.need_expf = False

    def lit(self, x) -> str:
        if self.fxp:
            return str(quantize_param(x, self.fmt))
        return f32_lit(x)

    def q(self, x) -> int:
        return quantize_param(x, self.fmt)

    def zero(self) -> str:
        return "0" if self.fxp else "0.0f"

    # arithmetic expression builders; FXP forms call the runtime and record
    # which functions have to be emitted
    def add(self, a: str, b: str) -> str:
        if self.fxp:
            self.ops.add("add")
            return f"{self.p}_add({a}, {b})"
        return f"{a} + {b}"

    def sub(self, a: str, b: str) -> str:
        if self.fxp:
            self.ops.add("sub")
            return f"{self.p}_sub({a}, {b})"
        return f"{a} - {b}"

    def mul(self, a: str, b: str) -> str:
        if self.fxp:
            self.ops.add("mul")
            return f"{self.p}_mul({a}, {b})"
        return f"{a} * {b}"


# ---------------------------------------------------------------------------
# fixed-point runtime fragment

def _runtime_lines(fmt: QFormat, p: str, ops: set) -> list:
    s = _storage(fmt)
    i = _inter(fmt)
    m = fmt.frac_bits
    total = fmt.total_bits
    raw_max = fmt.raw_max
    half = (1 << (m - 1)) if m > 0 else 0
    out = [f"/* fixed-point runtime: Q{fmt.int_bits}.{m}, "
           "round half away from zero, saturating */"]
    out += [
        f"static inline {s} {p}_sat(int64_t v) {{",
        f"    if (v > {raw_max}LL) return ({s}){raw_max};",
        f"    if (v < -{raw_max}LL - 1) return ({s})(-{raw_max} - 1);",
        f"    return ({s})v;",
        "}",
    ]
    if "add" in ops:
        out += [
            f"static inline {s} {p}_add({s} a, {s} b) {{",
            f"    return {p}_sat(({i})a + ({i})b);",
            "}",
        ]
    if "sub" in ops:
        out += [
            f"static inline {s} {p}_sub({s} a, {s} b) {{",
            f"    return {p}_sat(({i})a - ({i})b);",
            "}",
        ]
    if "neg" in ops:
        out += [
            f"static inline {s} {p}_neg({s} a) {{",
            f"    return {p}_sat(-({i})a);",
            "}",
        ]
    if "abs" in ops:
        out += [
            f"static inline {s} {p}_abs({s} a) {{",
            f"    return (a < 0) ? {p}_sat(-({i})a) : a;",
            "}",
        ]
    if "mul" in ops:
        out += [
            f"static inline {s} {p}_mul({s} a, {s} b) {{",
            f"    {i} pr = ({i})a * ({i})b;",
            f"    {i} r = (pr >= 0) ? ({i})((pr + {half}) >> {m})"
            f" : ({i})(-((-pr + {half}) >> {m}));",
            f"    return {p}_sat(r);",
            "}",
        ]
    if "div" in ops:
        out += [
            f"/* b must be non-zero (the host engine raises before emitting such calls) */",
            f"static inline {s} {p}_div({s} a, {s} b) {{",
            f"    {i} n = ({i})a * {1 << m};",
            f"    {i} an = (n < 0) ? -n : n;",
            f"    {i} ab = (b < 0) ? -({i})b : ({i})b;",
            f"    {i} q = (an + (ab >> 1)) / ab;",
            f"    return {p}_sat(((a < 0) != (b < 0)) ? -q : q);",
            "}",
        ]
    if "exp" in ops:
        c = EXP_COEFFS
        fm = EXP_F - m
        if fm >= 0:
            big_expr = f"(int64_t)x * {1 << fm}LL"
        else:  # m = 31: drop one bit, rounded half away
            big_expr = "((x >= 0) ? (((int64_t)x + 1) >> 1) : -((-(int64_t)x + 1) >> 1))"
        out += [
            f"static inline int64_t {p}_expmul(int64_t a, int64_t b) {{",
            "    int64_t pr = a * b;",
            f"    return (pr >= 0) ? ((pr + {1 << (EXP_F - 1)}LL) >> {EXP_F})"
            f" : -((-pr + {1 << (EXP_F - 1)}LL) >> {EXP_F});",
            "}",
            f"/* e^x via 2^k * p5(r): internal precision 2^-{EXP_F}, int64 arithmetic */",
            f"static inline {s} {p}_exp({s} x) {{",
            f"    int64_t big = {big_expr};",
            f"    int64_t k = (big >= 0) ? ((2 * big + {EXP_LN2}LL) / {2 * EXP_LN2}LL)"
            f" : -((-2 * big + {EXP_LN2}LL) / {2 * EXP_LN2}LL);",
            f"    int64_t r = big - k * {EXP_LN2}LL;",
            f"    int64_t acc = {c[5]}LL;",
            f"    acc = {c[4]}LL + {p}_expmul(r, acc);",
            f"    acc = {c[3]}LL + {p}_expmul(r, acc);",
            f"    acc = {c[2]}LL + {p}_expmul(r, acc);",
            f"    acc = {c[1]}LL + {p}_expmul(r, acc);",
            f"    acc = {c[0]}LL + {p}_expmul(r, acc);",
            f"    int64_t sh = {EXP_F - m} - k;",
            f"    if (sh >= {EXP_F + 2}) return 0;",
            f"    if (sh <= {EXP_F - total}) return ({s}){raw_max};",
            "    int64_t res;",
            "    if (sh > 0) res = (acc + ((int64_t)1 << (sh - 1))) >> sh;",
            "    else if (sh == 0) res = acc;",
            "    else res = acc << -sh;",
            f"    return {p}_sat(res);",
            "}",
        ]
    if "sqrt" in ops:
        out += [
            f"static inline {s} {p}_sqrt({s} x) {{",
            "    if (x < 0) return 0; /* domain error on host */",
            f"    uint64_t rem = (uint64_t)x << {m};",
            "    uint64_t root = 0;",
            "    uint64_t bit = (uint64_t)1 << 62;",
            "    while (bit > rem) bit >>= 2;",
            "    while (bit) {",
            "        if (rem >= root + bit) { rem -= root + bit; root = (root >> 1) + bit; }",
            "        else root >>= 1;",
            "        bit >>= 2;",
            "    }",
            "    if (rem > root) root += 1; /* round to nearest */",
            f"    return {p}_sat((int64_t)root);",
            "}",
        ]
    if "pow" in ops:
        one = quantize_param(1.0, fmt)
        out += [
            f"static inline {s} {p}_pow({s} b, uint32_t e) {{",
            f"    {s} r = {one};",
            "    for (;;) {",
            f"        if (e & 1u) r = {p}_mul(r, b);",
            "        e >>= 1;",
            "        if (!e) return r;",
            f"        b = {p}_mul(b, b);",
            "    }",
            "}",
        ]
    return out


def _to_fixed_lines(fmt: QFormat, p: str) -> list:
    s = _storage(fmt)
    raw_max = fmt.raw_max
    return [
        "/* input conversion: round half away from zero, then saturate */",
        f"{s} {p}_to_fixed(float v) {{",
        f"    double t = (double)v * {float(1 << fmt.frac_bits)!r};",
        f"    if (t > 9.2e18) return ({s}){raw_max};",
        f"    if (t < -9.2e18) return ({s})(-{raw_max} - 1);",
        "    int64_t r = (t >= 0) ? (int64_t)(t + 0.5) : -(int64_t)(-t + 0.5);",
        f"    return {p}_sat(r);",
        "}",
    ]


def _expf_lines(p: str) -> list:
    c = [f32_lit(v) for v in inf.EXPF_COEFFS]
    return [
        "/* binary32 e^x without libm; bit-identical to the host engine */",
        f"static inline float {p}_expf(float x) {{",
        f"    if (x >= {f32_lit(inf.EXPF_MAX_X)}) {{ float h = 3.0e38f; return h * h; }}",
        f"    if (x <= {f32_lit(inf.EXPF_MIN_X)}) return 0.0f;",
        f"    float t = x * {f32_lit(inf.EXPF_INV_LN2)};",
        "    float t2 = t + 0.5f;",
        "    int k = (int)t2;",
        "    if ((float)k > t2) k -= 1;",
        "    if (k > 127) { float h = 3.0e38f; return h * h; }",
        "    if (k < -126) return 0.0f;",
        "    float kf = (float)k;",
        f"    float r = (x - kf * {f32_lit(inf.EXPF_LN2_HI)}) - kf * ({f32_lit(inf.EXPF_LN2_LO)});",
        f"    float acc = {c[5]};",
        f"    acc = {c[4]} + r * acc;",
        f"    acc = {c[3]} + r * acc;",
        f"    acc = {c[2]} + r * acc;",
        f"    acc = {c[1]} + r * acc;",
        f"    acc = {c[0]} + r * acc;",
        "    float sc = 1.0f;",
        "    float mlt = (k >= 0) ? 2.0f : 0.5f;",
        "    int n = (k >= 0) ? k : -k;",
        "    while (n--) sc *= mlt; /* exact power-of-two scale */",
        "    return acc * sc;",
        "}",
    ]


def _sigmoid_lines(e: _Emit, variant: str) -> list:
    p, elem = e.p, e.elem
    head = [f"/* sigmoid, {variant} variant */",
            f"static inline {elem} {p}_sigmoid({elem} v) {{"]
    if e.fxp:
        one = e.q(1.0)
        half = e.q(0.5)
        if variant == "exact":
            e.ops.update(("neg", "exp", "add", "div"))
            body = [
                f"    {elem} ev = {p}_exp({p}_neg(v));",
                f"    return {p}_div({one}, {p}_add({one}, ev));",
            ]
        elif variant == "rational":
            e.ops.update(("abs", "add", "div", "mul"))
            body = [
                f"    {elem} av = {p}_abs(v);",
                f"    {elem} q = {p}_div(v, {p}_add({one}, av));",
                f"    return {p}_add({half}, {p}_mul({half}, q));",
            ]
        elif variant == "pwl2":
            e.ops.update(("add", "mul"))
            body = [
                f"    {elem} s = {p}_add({half}, {p}_mul({e.q(float(inf.SIG_PWL2_SLOPE))}, v));",
                "    if (s < 0) return 0;",
                f"    if (s > {one}) return {one};",
                "    return s;",
            ]
        else:  # pwl4
            e.ops.update(("add", "sub", "mul"))
            klo, khi = e.q(float(inf.SIG_PWL4_KNEE_LO)), e.q(float(inf.SIG_PWL4_KNEE_HI))
            flo, cei = e.q(float(inf.SIG_PWL4_FLOOR)), e.q(float(inf.SIG_PWL4_CEIL))
            smid, sout = e.q(float(inf.SIG_PWL4_SLOPE_MID)), e.q(float(inf.SIG_PWL4_SLOPE_OUT))
            body = [
                f"    if (v <= -{one}) {{",
                f"        {elem} y = {p}_add({klo}, {p}_mul({sout}, {p}_add(v, {one})));",
                f"        return (y < {flo}) ? {flo} : y;",
                "    }",
                f"    if (v <= {one}) return {p}_add({half}, {p}_mul({smid}, v));",
                f"    {elem} y = {p}_add({khi}, {p}_mul({sout}, {p}_sub(v, {one})));",
                f"    return (y > {cei}) ? {cei} : y;",
            ]
    else:
        if variant == "exact":
            e.need_expf = True
            body = [
                f"    float ev = {p}_expf(-v);",
                "    return 1.0f / (1.0f + ev);",
            ]
        elif variant == "rational":
            body = [
                "    float av = (v < 0.0f) ? -v : v;",
                "    float q = v / (1.0f + av);",
                "    return 0.5f + 0.5f * q;",
            ]
        elif variant == "pwl2":
            body = [
                f"    float s = 0.5f + {f32_lit(inf.SIG_PWL2_SLOPE)} * v;",
                "    if (s < 0.0f) return 0.0f;",
                "    if (s > 1.0f) return 1.0f;",
                "    return s;",
            ]
        else:
            klo, khi = f32_lit(inf.SIG_PWL4_KNEE_LO), f32_lit(inf.SIG_PWL4_KNEE_HI)
            flo, cei = f32_lit(inf.SIG_PWL4_FLOOR), f32_lit(inf.SIG_PWL4_CEIL)
            smid, sout = f32_lit(inf.SIG_PWL4_SLOPE_MID), f32_lit(inf.SIG_PWL4_SLOPE_OUT)
            body = [
                "    if (v <= -1.0f) {",
                f"        float y = {klo} + {sout} * (v + 1.0f);",
                f"        return (y < {flo}) ? {flo} : y;",
                "    }",
                f"    if (v <= 1.0f) return 0.5f + {smid} * v;",
                f"    float y = {khi} + {sout} * (v - 1.0f);",
                f"    return (y > {cei}) ? {cei} : y;",
            ]
    return head + body + ["}"]


def _argmax_lines(p: str, arr: str) -> list:
    return [
        "    int best = 0;",
        f"    for (int k = 1; k < {p}_n_classes; ++k) {{",
        f"        if ({arr}[k] > {arr}[best]) best = k;",
        "    }",
        "    return best;",
    ]


# ---------------------------------------------------------------------------
# family emitters: (const arrays, functions, memory) per family

def _gen_tree(e: _Emit, style: str, hook: bool):
    model = e.model
    nodes = model.payload.nodes
    p, elem = e.p, e.elem
    internal = [i for i, nd in enumerate(nodes) if not nd.is_leaf]
    remap = {orig: new for new, orig in enumerate(internal)}
    n_int = len(internal)
    one_lit = str(e.q(1.0)) if e.fxp else "1.0f"

    def child_code(idx: int) -> int:
        nd = nodes[idx]
        return ~nd.leaf_class if nd.is_leaf else remap[idx]

    const_lines: list = []
    fn_lines: list = []
    flash = 0
    if n_int == 0:
        cls = nodes[0].leaf_class
        fn_lines += [
            f"int32_t {p}_classify(const {elem} *x) {{",
            "    (void)x;",
            f"    return {cls};",
            "}",
        ]
    else:
        thr = [e.lit(nodes[i].threshold) for i in internal]
        feat = [nodes[i].feature for i in internal]
        fw = _u_width(max(feat) if feat else 0)
        children = []
        for i in internal:
            children.append(child_code(nodes[i].left))
            children.append(child_code(nodes[i].right))
        cw = _i_width(min(children), max(children))
        const_lines.append(_array(elem, f"{p}_thr", thr))
        flash += n_int * e.elem_bytes
        if style == "iterative":
            const_lines.append(_array(_u_type(fw), f"{p}_feat", feat))
            const_lines.append(_array(_i_type(cw), f"{p}_left", children[0::2]))
            const_lines.append(_array(_i_type(cw), f"{p}_right", children[1::2]))
            flash += n_int * (fw + 2 * cw)
            fn_lines += [
                f"int32_t {p}_classify(const {elem} *x) {{",
                "    int i = 0;",
                "    for (;;) {",
                f"        i = (x[{p}_feat[i]] <= {p}_thr[i]) ? {p}_left[i] : {p}_right[i];",
                "        if (i < 0) return ~i; /* negative entries encode ~class */",
                "    }",
                "}",
            ]
        else:
            fn_lines.append(f"int32_t {p}_classify(const {elem} *x) {{")

            def emit_branch(idx: int, depth: int):
                pad = "    " * (depth + 1)
                nd = nodes[idx]
                if nd.is_leaf:
                    fn_lines.append(f"{pad}return {nd.leaf_class};")
                    return
                fn_lines.append(f"{pad}if (x[{nd.feature}] <= {p}_thr[{remap[idx]}]) {{")
                emit_branch(nd.left, depth + 1)
                fn_lines.append(f"{pad}}} else {{")
                emit_branch(nd.right, depth + 1)
                fn_lines.append(f"{pad}}}")

            emit_branch(0, 0)
            fn_lines.append("}")
    if hook:
        fn_lines += [
            f"void {p}_scores(const {elem} *x, {elem} *out) {{",
            f"    int cls = (int){p}_classify(x);",
            f"    for (int k = 0; k < {p}_n_classes; ++k) out[k] = {e.zero()};",
            f"    out[cls] = {one_lit};",
            "}",
        ]
    return const_lines, fn_lines, flash, 0


def _dot_loop(e: _Emit, acc: str, warr: str, xarr: str, count: str, indent: str) -> list:
    body = e.add(acc, e.mul(f"{warr}[j]", f"{xarr}[j]"))
    return [
        f"{indent}for (int j = 0; j < {count}; ++j) {{",
        f"{indent}    {acc} = {body};",
        f"{indent}}}",
    ]


def _gen_linear(e: _Emit, hook: bool):
    model = e.model
    lin = model.payload
    p, elem = e.p, e.elem
    rows = len(lin.weights)
    d = model.n_features
    k_classes = model.n_classes
    const_lines = [
        _array(elem, f"{p}_weights", [e.lit(w) for row in lin.weights for w in row]),
        _array(elem, f"{p}_bias", [e.lit(b) for b in lin.bias]),
    ]
    flash = (rows * d + rows) * e.elem_bytes
    fn_lines = []
    if lin.score_rule == "binary_sign":
        fn_lines += [
            f"static {elem} {p}_decision(const {elem} *x) {{",
            f"    {elem} acc = {p}_bias[0];",
        ]
        fn_lines += _dot_loop(e, "acc", f"{p}_weights", "x", f"{p}_n_features", "    ")
        fn_lines += [
            "    return acc;",
            "}",
            f"int32_t {p}_classify(const {elem} *x) {{",
            f"    return ({p}_decision(x) > {e.zero()}) ? 1 : 0;",
            "}",
        ]
        if hook:
            fn_lines += [
                f"void {p}_scores(const {elem} *x, {elem} *out) {{",
                f"    out[0] = {e.zero()};",
                f"    out[1] = {p}_decision(x);",
                "}",
            ]
        sram = 0
    else:
        fn_lines += [
            f"static void {p}_eval_scores(const {elem} *x, {elem} *out) {{",
            f"    for (int k = 0; k < {p}_n_classes; ++k) {{",
            f"        {elem} acc = {p}_bias[k];",
            f"        const {elem} *w = {p}_weights + k * {p}_n_features;",
        ]
        fn_lines += _dot_loop(e, "acc", "w", "x", f"{p}_n_features", "        ")
        fn_lines += [
            "        out[k] = acc;",
            "    }",
            "}",
            f"int32_t {p}_classify(const {elem} *x) {{",
            f"    {elem} sc[{p}_n_classes];",
            f"    {p}_eval_scores(x, sc);",
        ]
        fn_lines += _argmax_lines(p, "sc")
        fn_lines += ["}"]
        if hook:
            fn_lines += [
                f"void {p}_scores(const {elem} *x, {elem} *out) {{",
                f"    {p}_eval_scores(x, out);",
                "}",
            ]
        sram = k_classes * e.elem_bytes
    return const_lines, fn_lines, flash, sram


def _gen_mlp(e: _Emit, variant: str, hook: bool):
    model = e.model
    mlp = model.payload
    p, elem = e.p, e.elem
    stats = model_stats(model)
    maxw = stats.max_layer_width
    const_lines = []
    flash = 0
    in_dim = model.n_features
    dims = []
    for li, ly in enumerate(mlp.layers):
        out_dim = len(ly.weights)
        const_lines.append(_array(elem, f"{p}_w{li}",
                                  [e.lit(w) for row in ly.weights for w in row]))
        const_lines.append(_array(elem, f"{p}_b{li}", [e.lit(b) for b in ly.bias]))
        flash += (out_dim * in_dim + out_dim) * e.elem_bytes
        dims.append((in_dim, out_dim, ly.activation))
        in_dim = out_dim
    final_dim = dims[-1][1]
    uses_sigmoid = any(act == "sigmoid" for _, _, act in dims)

    fn_lines = []
    if uses_sigmoid:
        fn_lines += _sigmoid_lines(e, variant)
    fn_lines += [
        f"static void {p}_eval_scores(const {elem} *x, {elem} *out) {{",
        f"    {elem} buf_a[{maxw}]; /* two ping-pong layer buffers */",
        f"    {elem} buf_b[{maxw}];",
        f"    for (int j = 0; j < {p}_n_features; ++j) buf_a[j] = x[j];",
    ]
    src, dst = "buf_a", "buf_b"
    for li, (din, dout, act) in enumerate(dims):
        fn_lines.append(f"    /* layer {li}: {din} -> {dout}, {act} */")
        fn_lines += [
            f"    for (int u = 0; u < {dout}; ++u) {{",
            f"        {elem} acc = {p}_b{li}[u];",
            f"        const {elem} *w = {p}_w{li} + u * {din};",
        ]
        fn_lines += _dot_loop(e, "acc", "w", src, str(din), "        ")
        if act == "sigmoid":
            fn_lines.append(f"        {dst}[u] = {p}_sigmoid(acc);")
        elif act == "relu":
            fn_lines.append(f"        {dst}[u] = (acc > {e.zero()}) ? acc : {e.zero()};")
        else:
            fn_lines.append(f"        {dst}[u] = acc;")
        fn_lines.append("    }")
        src, dst = dst, src
    if final_dim == 1:  # binary head: scores are [1 - o, o]
        one_lit = str(e.q(1.0)) if e.fxp else "1.0f"
        o = f"{src}[0]"
        fn_lines += [
            f"    out[0] = {e.sub(one_lit, o)};",
            f"    out[1] = {o};",
        ]
    else:
        fn_lines.append(f"    for (int k = 0; k < {p}_n_classes; ++k) out[k] = {src}[k];")
    fn_lines += [
        "}",
        f"int32_t {p}_classify(const {elem} *x) {{",
        f"    {elem} sc[{p}_n_classes];",
        f"    {p}_eval_scores(x, sc);",
    ]
    fn_lines += _argmax_lines(p, "sc")
    fn_lines += ["}"]
    if hook:
        fn_lines += [
            f"void {p}_scores(const {elem} *x, {elem} *out) {{",
            f"    {p}_eval_scores(x, out);",
            "}",
        ]
    return const_lines, fn_lines, flash, 2 * maxw * e.elem_bytes


def _gen_svm(e: _Emit, hook: bool):
    model = e.model
    svm = model.payload
    kr = svm.kernel
    p, elem = e.p, e.elem
    d = model.n_features
    machines = svm.machines
    sv_flat = []
    duals = []
    offs = []
    cnts = []
    for mc in machines:
        offs.append(len(duals))
        cnts.append(len(mc.support_vectors))
        for sv in mc.support_vectors:
            sv_flat.extend(e.lit(v) for v in sv)
        duals.extend(e.lit(dc) for dc in mc.dual_coefs)
    total_sv = len(duals)
    ow = _u_width(max(offs + cnts))
    pw = _u_width(model.n_classes - 1)
    const_lines = [
        _array(elem, f"{p}_sv", sv_flat),
        _array(elem, f"{p}_dual", duals),
        _array(elem, f"{p}_rho", [e.lit(mc.intercept) for mc in machines]),
        _array(_u_type(pw), f"{p}_pair_a", [mc.class_a for mc in machines]),
        _array(_u_type(pw), f"{p}_pair_b", [mc.class_b for mc in machines]),
        _array(_u_type(ow), f"{p}_sv_off", offs),
        _array(_u_type(ow), f"{p}_sv_cnt", cnts),
    ]
    flash = (total_sv * d + total_sv + len(machines)) * e.elem_bytes
    flash_structural = len(machines) * (2 * pw + 2 * ow)

    fn_lines = []
    if e.fxp:
        gamma_lit = str(e.q(kr.gamma))
    else:
        gamma_lit = f32_lit(kr.gamma)
    fn_lines.append(f"static {elem} {p}_kernel(const {elem} *u, const {elem} *x) {{")
    if kr.kind == "poly":
        coef0_lit = str(e.q(kr.coef0)) if e.fxp else f32_lit(kr.coef0)
        fn_lines.append(f"    {elem} dot = {e.zero()};")
        fn_lines += _dot_loop(e, "dot", "u", "x", f"{p}_n_features", "    ")
        base = e.add(e.mul(gamma_lit, "dot"), coef0_lit)
        if e.fxp:
            e.ops.add("pow")
            fn_lines.append(f"    return {p}_pow({base}, {kr.degree}u);")
        else:
            fn_lines += [
                f"    {elem} t = {base};",
                f"    {elem} r = 1.0f;",
                f"    {elem} b = t;",
                f"    uint32_t dg = {kr.degree}u;",
                "    for (;;) {",
                "        if (dg & 1u) r = r * b;",
                "        dg >>= 1;",
                "        if (!dg) return r;",
                "        b = b * b;",
                "    }",
            ]
    else:
        fn_lines.append(f"    {elem} d2 = {e.zero()};")
        if e.fxp:
            e.ops.update(("sub", "add", "mul", "neg", "exp"))
            fn_lines += [
                f"    for (int j = 0; j < {p}_n_features; ++j) {{",
                f"        {elem} df = {p}_sub(u[j], x[j]);",
                f"        d2 = {p}_add(d2, {p}_mul(df, df));",
                "    }",
                f"    return {p}_exp({p}_neg({p}_mul({gamma_lit}, d2)));",
            ]
        else:
            e.need_expf = True
            fn_lines += [
                f"    for (int j = 0; j < {p}_n_features; ++j) {{",
                "        float df = u[j] - x[j];",
                "        d2 = d2 + df * df;",
                "    }",
                f"    return {p}_expf(-({gamma_lit} * d2));",
            ]
    fn_lines.append("}")
    fn_lines += [
        f"static void {p}_eval_votes(const {elem} *x, int32_t *votes) {{",
        f"    for (int k = 0; k < {p}_n_classes; ++k) votes[k] = 0;",
        f"    for (int mi = 0; mi < {len(machines)}; ++mi) {{",
        f"        {elem} s = {p}_rho[mi];",
        f"        int base = (int){p}_sv_off[mi];",
        f"        for (int i = 0; i < (int){p}_sv_cnt[mi]; ++i) {{",
        f"            const {elem} *u = {p}_sv + (base + i) * {p}_n_features;",
        f"            s = {e.add('s', e.mul(f'{p}_dual[base + i]', f'{p}_kernel(u, x)'))};",
        "        }",
        f"        votes[(s > {e.zero()}) ? {p}_pair_a[mi] : {p}_pair_b[mi]] += 1;",
        "    }",
        "}",
        f"int32_t {p}_classify(const {elem} *x) {{",
        f"    int32_t votes[{p}_n_classes];",
        f"    {p}_eval_votes(x, votes);",
    ]
    fn_lines += _argmax_lines(p, "votes")
    fn_lines += ["}"]
    if hook:
        fn_lines += [
            f"void {p}_scores(const {elem} *x, {elem} *out) {{",
            f"    int32_t votes[{p}_n_classes];",
            f"    {p}_eval_votes(x, votes);",
        ]
        if e.fxp:
            fn_lines.append(
                f"    for (int k = 0; k < {p}_n_classes; ++k) "
                f"out[k] = {p}_sat((int64_t)votes[k] << {e.fmt.frac_bits});")
        else:
            fn_lines.append(
                f"    for (int k = 0; k < {p}_n_classes; ++k) out[k] = (float)votes[k];")
        fn_lines += ["}"]
    return const_lines, fn_lines, flash + flash_structural, model.n_classes * 4


# ---------------------------------------------------------------------------
# public API

def estimate_memory(model: ModelIR, opts: GenOptions) -> MemoryEstimate:
    """Flash/SRAM accounting for the source generate() would emit."""
    return generate(model, opts).memory


def gen_fixedpoint_runtime(fmt: QFormat, symbol_prefix: str = "fxp") -> str:
    """Standalone full fixed-point runtime (all ops + to_fixed)."""
    if not _IDENT.match(symbol_prefix):
        raise Unsupported(f"symbol_prefix {symbol_prefix!r} is not a valid identifier")
    p = symbol_prefix
    lines = [
        f"// {p}: saturating {fmt.name} fixed-point runtime",
        "#include <stdint.h>",
        "",
        f"typedef {_storage(fmt)} {p}_fixed_t;",
    ]
    lines += _runtime_lines(fmt, p, {"add", "sub", "neg", "abs", "mul", "div",
                                     "exp", "sqrt", "pow"})
    lines += _to_fixed_lines(fmt, p)
    return "\n".join(lines) + "\n"


_MODE_DESC = {
    "flt": "32-bit float",
}


def generate(model: ModelIR, opts: GenOptions) -> GeneratedSource:
    """Emit the self-contained classifier source for one model + options."""
    violations = validate(model)
    if violations:
        raise StructureError(violations)
    _check_options(model, opts)
    p = opts.symbol_prefix
    notes: list = []

    style = opts.tree_style or "iterative"
    if model.family == "tree" and style == "if_else":
        depth = model_stats(model).max_depth
        if depth > inf.IF_ELSE_DEPTH_CAP:
            msg = (f"tree depth {depth} exceeds the if_else cap of "
                   f"{inf.IF_ELSE_DEPTH_CAP}; emitting iterative style instead")
            warnings.warn(msg)
            notes.append(msg)
            style = "iterative"
    variant = opts.sigmoid or "exact"

    e = _Emit(model, opts)
    hook = opts.emit_test_hook
    if model.family == "tree":
        const_lines, fn_lines, flash, sram = _gen_tree(e, style, hook)
    elif model.family == "linear":
        const_lines, fn_lines, flash, sram = _gen_linear(e, hook)
    elif model.family == "mlp":
        const_lines, fn_lines, flash, sram = _gen_mlp(e, variant, hook)
    else:
        const_lines, fn_lines, flash, sram = _gen_svm(e, hook)

    fp = model_fingerprint(model)
    if e.fxp:
        mode_desc = f"{e.fmt.name} fixed point"
    else:
        mode_desc = _MODE_DESC["flt"]
    head = [
        f"// {p}: {model.family} classifier, {mode_desc}",
        "// self-contained output; compile as C++17 or C99 with FP contraction",
        "// disabled (-ffp-contract=off) for bit-exact float behavior",
        f"// model fingerprint: {fp}",
        f"// options: mode={opts.mode.name} style={style if model.family == 'tree' else '-'}"
        f" sigmoid={variant if model.family == 'mlp' else '-'}"
        f" test_hook={'yes' if hook else 'no'}",
        "",
        "#include <stdint.h>",
        "",
    ]
    body = []
    if e.fxp:
        body.append(f"typedef {_storage(e.fmt)} {p}_fixed_t;")
        body.append("")
    body.append(f"enum {{ {p}_n_features = {model.n_features}, "
                f"{p}_n_classes = {model.n_classes} }};")
    body.append("")
    if e.fxp:
        body += _runtime_lines(e.fmt, p, e.ops)
        body.append("")
        body += _to_fixed_lines(e.fmt, p)
        body.append("")
    elif e.need_expf:
        body += _expf_lines(p)
        body.append("")
    for arr in const_lines:
        body.append(arr)
    if const_lines:
        body.append("")
    body += fn_lines
    text = "\n".join(head + body) + "\n"

    memory = MemoryEstimate(flash_const_bytes=flash, sram_bytes=sram,
                            elem_bytes=e.elem_bytes)
    return GeneratedSource(
        text=text,
        memory=memory,
        options_echo=opts,
        model_fingerprint=fp,
        notes=tuple(notes),
    )
