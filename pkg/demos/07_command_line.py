"""
Reproducible runs from the command line
=======================================

Each subcommand resolves its flags into a RunConfig.  Emitting it and
re-running from it reproduces every artifact byte for byte, whatever the
worker count.
"""

import tempfile
from pathlib import Path

from orbitlab.cli import main

data = Path(__file__).resolve().parent.parent / "data"
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    main(["best-approx", "--field", str(data / "fields" / "golden.toml"), "--gens", "b-1",
          "--max-q", "100", "--out", str(tmp / "a.csv"), "--emit-config", str(tmp / "cfg.json")])
    first = (tmp / "a.csv").read_bytes()
    print((tmp / "cfg.json").read_text())
    main(["best-approx", "--config", str(tmp / "cfg.json"), "--jobs", "2"])
    print("identical after re-run:", (tmp / "a.csv").read_bytes() == first)

    # configuration mistakes exit with code 2, broken hypotheses with 3
    code = main(["equidist-test", "--field", str(data / "fields" / "sqrt2.toml"),
                 "--basis", str(data / "bases" / "one_b.json"), "--schedule", "0,1;0,1;0,1"])
    print("exit code for a non-divergent schedule:", code)
