"""End-to-end experiment through the config-driven harness.

Writes a TOML config, runs a seed sweep through the same entry point the CLI
uses, and prints the emitted CSVs.  Equivalent shell usage:

    mflq run demo.toml --out results --jobs 4
"""

import tempfile
from pathlib import Path

from mflq.harness import load_config, run_experiment

CONFIG = """
system = "dean2017"
algorithm = "mflq_v3"
T = 16384
seeds = [0, 1, 2, 3]
"""

workdir = Path(tempfile.mkdtemp(prefix="mflq_demo_"))
cfg_path = workdir / "demo.toml"
cfg_path.write_text(CONFIG, encoding="utf-8")

config = load_config(cfg_path)
res = run_experiment(config, out_dir=workdir / "results", jobs=2)

print(f"results written under {workdir / 'results'}\n")
print("summary.csv:")
print((workdir / "results" / "summary.csv").read_text())
print("first rows of results.csv:")
for line in (workdir / "results" / "results.csv").read_text().splitlines()[:6]:
    print(" ", line)
