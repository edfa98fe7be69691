#!/usr/bin/env python3
"""Smoke test for the promptlift_py extension module.

Builds nothing itself: run `cargo build -p promptlift-py` first, then
`python3 python/smoke_test.py`. The script copies the built cdylib next to
a temp dir under an importable name, imports it, and exercises each binding
against known answers.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / "libpromptlift_py.so"
        for profile in ("release", "debug")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run `cargo build -p promptlift-py` first")
    stage = Path(tempfile.mkdtemp(prefix="promptlift-py-"))
    shutil.copy2(built, stage / "promptlift_py.so")
    sys.path.insert(0, str(stage))
    import promptlift_py

    return promptlift_py


def check(name, condition):
    if not condition:
        sys.exit(f"FAIL — {name}")
    print(f"ok — {name}")


def main():
    pl = load_module()

    got = pl.bleu("the cat sat on the mat", ["the cat is on the mat"])
    want = (5 / 6 * 4 / 6 * 2 / 5 * 1 / 4) ** 0.25
    check("bleu matches the hand-computed value", math.isclose(got, want))

    same = pl.syntactic_similarity("the cat sat on the mat", "the dog sat on the rug")
    check("word substitution leaves syntax score at 1.0", math.isclose(same, 1.0))
    check(
        "different shapes score below 1.0",
        pl.syntactic_similarity("the cat sat on the mat", "sat") < 1.0,
    )

    js = pl.js_divergence("a a b", "a b b")
    check("js divergence is symmetric", math.isclose(js, pl.js_divergence("a b b", "a a b")))
    check(
        "structural similarity inverts the divergence",
        math.isclose(pl.structural_similarity("a a b", "a b b"), 1 / (js + 1e-6)),
    )

    triple = pl.consistency(
        [["alpha beta", "alpha beta gamma"]],
        [["alpha beta", "alpha beta gamma"]],
    )
    check("self-consistency is perfect on every axis", triple.meets(pl.Thresholds(1, 1, 1)))

    thresholds, accuracy = pl.calibrate(
        [
            (0.9, 0.9, 0.95, True),
            (0.2, 0.9, 0.95, False),
            (0.8, 0.3, 0.95, False),
        ],
        grid_step=0.1,
    )
    check("calibration separates the labeled samples", accuracy == 1.0)
    check("calibrated thresholds are per-axis", 0 < thresholds.semantic <= 0.9)

    text, found, count = pl.mask_prompt("write about cats and dogs", ["cats", "dogs"])
    check("mask_prompt replaces whole words", text == "write about {} and {}")
    check("mask_prompt reports what it hit", found == ["cats", "dogs"] and count == 2)

    selected, masked = pl.select_mask_words(
        "write a short poem about the sea for kids",
        ["sea", "kids"],
        lambda candidate: candidate.count("{}"),
    )
    check("beam search masks every input-related word", selected == ["sea", "kids"])
    check("masked text carries the placeholders", masked.count("{}") == 2)

    with tempfile.TemporaryDirectory() as out:
        n = pl.write_mock_suite(out)
        lines = (Path(out) / "records.jsonl").read_text().splitlines()
        inputs = json.loads((Path(out) / "eval_inputs.json").read_text())
        check("mock suite writes one line per record", n == len(lines) == 20)
        check("mock suite ships held-out inputs", len(inputs["inputs"]) == n)

    report = json.loads(pl.run_mock_campaign(["naive", "no-mutation"]))
    check("campaign covers the whole suite", report["record_count"] == 20)
    check("campaign runs without backend failures", report["failure_rate"] == 0.0)
    asr = {a["ablation"]: a["asr"] for a in report["ablations"]}
    check("unguided ablations stay weak", asr["naive"] == 0.0 and asr["no-mutation"] <= 0.2)

    check("protected mock refuses extraction probes", pl.mock_injection(True) == (0, 4))
    check("unprotected mock leaks on every probe", pl.mock_injection(False) == (4, 4))

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
