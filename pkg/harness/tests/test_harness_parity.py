"""Full-matrix agreement between emitted code and the reference engine.

Every toy model is generated in every applicable (mode, variant, style)
combination, compiled with warnings as errors, and run on 1000 random
vectors.  The compiled code must pick the same class as the engine on
every row; in fixed-point modes the raw score vectors must match bit for
bit, and in float mode the scores must be the same binary32 values.
"""

import json
import time

import numpy as np
import pytest

import mcuml
from harness_helpers import (
    float32_exact_rows,
    generate_source,
    make_mode,
    write_text_rows,
)
from mcuml_harness import compile_and_run
from toymodels import MATRIX_DOCS, option_matrix

N_VECTORS = 1000
TIME_BUDGET_S = 300.0


def _combos():
    for name in sorted(MATRIX_DOCS):
        doc = MATRIX_DOCS[name]
        for mode, variant, style in option_matrix(doc["family"]):
            yield name, doc, mode, variant, style


def _combo_tag(name, mode, variant, style):
    return "_".join(p for p in (name, mode, variant, style) if p)


def test_criterion_9_emitted_code_parity(tmp_path):
    started = time.monotonic()
    rng = np.random.default_rng(20240819)
    failures = []
    combos = 0
    for name, doc, mode, variant, style in _combos():
        combos += 1
        tag = _combo_tag(name, mode, variant, style)
        src = tmp_path / f"{tag}.cpp"
        generate_source(doc, src, mode, sigmoid=variant, tree_style=style)

        model = mcuml.parse_model(json.dumps(doc))
        text_rows, values = float32_exact_rows(rng, N_VECTORS, model.n_features)
        vec = tmp_path / f"{tag}.csv"
        write_text_rows(vec, text_rows)

        run = compile_and_run(src, vec)  # -Werror: any warning fails here
        assert len(run.predictions) == N_VECTORS
        assert run.raw_scores is not None and len(run.raw_scores) == N_VECTORS

        m = make_mode(mode)
        for i, x in enumerate(values):
            p = mcuml.predict(model, x, m,
                              variant=variant or "exact",
                              style=style or "iterative")
            if run.predictions[i] != p.class_index:
                failures.append(f"{tag} row {i}: emitted class {run.predictions[i]}, "
                                f"engine {p.class_index}")
                break
            if m.is_fxp:
                if tuple(run.raw_scores[i]) != tuple(p.raw_scores):
                    failures.append(f"{tag} row {i}: raw {run.raw_scores[i]} "
                                    f"!= engine {p.raw_scores}")
                    break
            else:
                got = tuple(np.float32(v) for v in run.raw_scores[i])
                want = tuple(np.float32(v) for v in p.scores)
                if got != want:
                    failures.append(f"{tag} row {i}: scores {got} != engine {want}")
                    break

    elapsed = time.monotonic() - started
    assert combos == 66, f"expected the full 66-combination matrix, saw {combos}"
    assert not failures, "\n".join(failures[:20])
    assert elapsed < TIME_BUDGET_S, f"sweep took {elapsed:.0f} s"
