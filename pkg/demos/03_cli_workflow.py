"""
Drive the command-line interface from Python
============================================

The `semilab` CLI wraps the library in ten subcommands with a spec-file
interface and deterministic artifacts. This demo runs three of them against
the bundled fixture specs and shows the exit-code contract:

    0  every check certified-holds
    1  usage or validation error
    2  at least one check certified-fails
    3  at least one check inconclusive

Run:  python3 demos/03_cli_workflow.py
"""

import json
import tempfile
from pathlib import Path

from semilab.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# 1. a passing run: the three-coin mixture satisfies the bound chain
code = main(["verify-hellinger-bounds",
             "--spec", str(FIXTURES / "bern3_mix.json"),
             "--depth", "6"])
print("verify-hellinger-bounds ->", code)

# 2. a certified failure: the spec scales the right-hand side down by 1/20,
#    an inequality that exact arithmetic proves false
code = main(["chain-lemma", "--spec", str(FIXTURES / "chain_falsified.json")])
print("chain-lemma (falsified) ->", code)

# 3. artifacts on disk: verdicts, traces and a manifest
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"
    code = main(["w-vs-d", "--spec", str(FIXTURES / "quasi_leaky.json"),
                 "--depth", "6", "--seed", "7", "--out", str(out)])
    print("w-vs-d ->", code)
    for f in sorted(out.iterdir()):
        print("  wrote", f.name)
    manifest = json.loads((out / "manifest.json").read_text())
    print("  outcome counts:", manifest["outcomes"])
