"""Running several seeds, writing result files and comparing modes.

Equivalent CLI::

    pspblemo run --problem SPEC-TOY1 --mode psp ne --seed 0 1 2 --stop none --max-gen 10 --out demo_results
    pspblemo compare --out demo_results
    pspblemo plots --out demo_results
"""

import json
import tempfile
from pathlib import Path

from pspblemo import harness

out = Path(tempfile.mkdtemp(prefix="pspblemo_demo_"))
spec = harness.ExperimentSpec(problems=["SPEC-TOY1"], seeds=[0, 1, 2], modes=["psp", "ne"],
                              overrides={"stop": "none", "max_ul_gen": 10, "pf_size": 200}, out=str(out))
report = harness.run_experiment(spec)

# %% Per-mode aggregates and the pairwise rank-sum verdicts
for mode, s in report["problems"]["SPEC-TOY1_default"]["modes"].items():
    print(f"{mode}: IGD mean {s['igd']['mean']:.4f}  LL FE median {s['ll_fe']['median']:.0f}")
print(json.dumps(report["problems"]["SPEC-TOY1_default"]["pairs"], indent=1))

# %% Metric of the baseline at the prediction run's FE budget
psp_rows = harness.read_convergence(harness.run_dir(out, "SPEC-TOY1", "default", "psp", 0) / "convergence.csv")
ne_rows = harness.read_convergence(harness.run_dir(out, "SPEC-TOY1", "default", "ne", 0) / "convergence.csv")
print("NE IGD at the PSP total FE:", harness.truncate_at_fe(ne_rows, psp_rows))

# %% Plot scripts are written next to the data; run them with matplotlib installed
for script in harness.emit_plots(harness.find_run_dirs(out))[:2]:
    print("wrote", script)
