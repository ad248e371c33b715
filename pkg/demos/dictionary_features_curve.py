"""How much does a dictionary feature help a sequence tagger?

Trains the tagger at several training-set sizes, once with lexical features
only and once with an added dictionary-match feature (using the planted
truth as an oracle dictionary), and prints the F1 curve side by side. The
gap is largest when labeled data is scarce.

    python3 demos/dictionary_features_curve.py
"""

import argparse
import tempfile
from pathlib import Path

from dictforge.crf import CurveVariant, FeatureConfig, learning_curve
from dictforge.synth import SynthSpec, generate
from dictforge.tagging import Dictionary, read_conll


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="10,50,200")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(v) for v in args.sizes.split(",")]

    print("generating benchmark corpus...")
    sc = generate(SynthSpec(n_sentences=4000, seed=args.seed))
    with tempfile.TemporaryDirectory() as td:
        paths = sc.write(td)
        train = read_conll(paths["train"], strict=True)
        test = read_conll(paths["test"], strict=True)

    oracle = Dictionary({e: 1.0 for e in sc.entities}, provenance="manual")
    variants = [
        CurveVariant("baseline", FeatureConfig()),
        CurveVariant("with-dict", FeatureConfig(dict_match=True), dictionaries=(oracle,)),
    ]
    print(f"training at sizes {sizes} (two variants each)...")
    rows = learning_curve(train, test, sizes, variants, regularizer=0.05, max_iters=200)

    by = {(r["size"], r["variant"]): r for r in rows}
    print(f"\n{'size':>6}  {'baseline F1':>12}  {'with-dict F1':>12}")
    for size in sizes:
        base = by[(size, "baseline")]["f1"]
        lift = by[(size, "with-dict")]["f1"]
        print(f"{size:>6}  {base:>12.3f}  {lift:>12.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
