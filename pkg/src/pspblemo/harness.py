"""Experiment runner, result files, statistical comparison and plot scripts.

Run directory layout::

    <out>/<problem>_<set>/<mode>/seed_<k>/
        convergence.csv   generation,ul_fe,ll_fe,igd,hv (one row per UL generation)
        final_front.csv   F1,F2,x_u1..,x_l1..
        archive.csv       F1,F2,x_u1..,x_l1.. (non-dominated UL archive)
        true_pf.csv       reference front, when the problem has one
        run_meta.json     config echo, FE totals, final metrics, seed, wall time
        model.json        trained predictor (psp/os modes)
        error.txt         only when the run failed

The aggregate report goes to ``<out>/comparison.json`` and ``<out>/comparison.csv``.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import psp
from .framework import RunConfig, RunResult, run
from .problems import make_problem, write_pf_csv
from .stats import verdict

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentSpec",
    "load_experiment",
    "write_run",
    "read_convergence",
    "run_experiment",
    "compare",
    "truncate_at_fe",
    "emit_plots",
    "write_report",
    "find_run_dirs",
]

CONVERGENCE_COLUMNS = ["generation", "ul_fe", "ll_fe", "igd", "hv"]


@dataclass
class ExperimentSpec:
    problems: list[str]
    seeds: list[int]
    modes: list[str] = field(default_factory=lambda: ["psp"])
    variable_set: str = "default"
    overrides: dict = field(default_factory=dict)
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("experiment needs at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if not self.problems or not self.modes:
            raise ValueError("experiment needs at least one problem and one mode")


def load_experiment(path: str | Path) -> ExperimentSpec:
    """Read an experiment file (YAML or JSON).

    Keys: ``problems``, ``seeds``, ``modes``, ``set``, ``config`` (RunConfig
    overrides), ``out``, ``workers``.
    """
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        doc = json.loads(text)
    else:
        import yaml

        doc = yaml.safe_load(text)
    problems = doc.get("problems") or [doc["problem"]]
    seeds = doc.get("seeds")
    if seeds is None:
        seeds = [doc.get("seed", 0)]
    return ExperimentSpec(
        problems=list(problems),
        seeds=[int(s) for s in seeds],
        modes=list(doc.get("modes", [doc.get("mode", "psp")])),
        variable_set=doc.get("set", "default"),
        overrides=dict(doc.get("config", {})),
        out=doc.get("out", "results"),
        workers=int(doc.get("workers", 1)),
    )


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_pairs(path: Path, F, xu, xl):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["F1", "F2"] + [f"x_u{i + 1}" for i in range(xu.shape[1])] + [f"x_l{i + 1}" for i in range(xl.shape[1])])
        for row in np.hstack([F, xu, xl]):
            w.writerow([_fmt(v) for v in row])


def write_run(result: RunResult, out_dir: str | Path, wall_clock: bool = True) -> Path:
    """Persist one run. ``wall_clock=False`` omits timing from the metadata."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    L = result.ledger
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONVERGENCE_COLUMNS)
        for r in L.rows:
            w.writerow([r.generation, r.ul_fe, r.ll_fe, _fmt(r.igd), _fmt(r.hv)])
    _write_pairs(out / "final_front.csv", result.final_F, result.final_xu, result.final_xl)
    _write_pairs(out / "archive.csv", result.archive_F, result.archive_xu, result.archive_xl)
    if result.true_pf is not None:
        write_pf_csv(out / "true_pf.csv", result.problem, result.true_pf)
    if result.model is not None:
        psp.save_model(result.model, out / "model.json")
    meta = {
        "problem": result.problem.name,
        "set": result.problem.variant,
        "mode": result.config.mode,
        "seed": result.config.seed,
        "config": result.config.to_dict(),
        "ul_fe": L.ul_fe,
        "ll_fe": L.ll_fe,
        "total_fe": L.ul_fe + L.ll_fe,
        "generations": len(L.rows),
        "final_igd": L.final_igd,
        "final_hv": L.final_hv,
        "final_size": int(len(result.final_F)),
        "stop_reason": L.stop_reason,
        "search_generations": len(L.search_generations),
        "predict_generations": len(L.predict_generations),
        "trainings": len(L.trainings),
        "vaa": result.vaa.v.tolist(),
        "ref_point": None if result.ref_point is None else list(map(float, result.ref_point)),
    }
    if wall_clock:
        meta["wall_time_s"] = L.wall_time
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, default=float))
    return out


def read_convergence(path: str | Path) -> list[dict]:
    """Rows of a convergence CSV as dicts.

    Raises:
        ValueError: If a required column is missing.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CONVERGENCE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return [
            {"generation": int(r["generation"]), "ul_fe": int(r["ul_fe"]), "ll_fe": int(r["ll_fe"]),
             "igd": float(r["igd"]), "hv": float(r["hv"])}
            for r in reader
        ]


def run_dir(out: str | Path, problem: str, variable_set: str, mode: str, seed: int) -> Path:
    return Path(out) / f"{problem}_{variable_set}" / mode / f"seed_{seed}"


def _one(job) -> tuple[str, str | None]:
    problem_id, variable_set, mode, seed, overrides, out = job
    target = run_dir(out, problem_id, variable_set, mode, seed)
    try:
        problem = make_problem(problem_id, variable_set)
        cfg = RunConfig(**{**overrides, "mode": mode, "seed": seed})
        write_run(run(problem, cfg), target)
        return str(target), None
    except Exception:  # one failed run must not stop the others
        target.mkdir(parents=True, exist_ok=True)
        msg = traceback.format_exc()
        (target / "error.txt").write_text(msg)
        log.error("run %s failed:\n%s", target, msg)
        return str(target), msg


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every (problem, mode, seed) combination and write the aggregate report.

    Returns:
        The comparison report (also written under ``spec.out``).
    """
    jobs = [(p, spec.variable_set, m, s, dict(spec.overrides), spec.out)
            for p in spec.problems for m in spec.modes for s in spec.seeds]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_one, jobs))
    else:
        outcomes = [_one(j) for j in jobs]
    failed = [d for d, err in outcomes if err]
    report = compare(spec.out)
    report["failed_runs"] = failed
    write_report(Path(spec.out), report)
    return report


def _summary(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
            "median": float(np.median(v)), "n": int(len(v))}


def _fe_summary(values: Sequence[int]) -> dict:
    v = np.asarray(values)
    return {"min": int(v.min()), "median": float(np.median(v)), "max": int(v.max())}


def _collect(root: Path) -> dict:
    groups: dict = {}
    for meta_path in sorted(root.glob("*/*/seed_*/run_meta.json")):
        meta = json.loads(meta_path.read_text())
        key = f"{meta['problem']}_{meta['set']}"
        groups.setdefault(key, {}).setdefault(meta["mode"], []).append(meta)
    return groups


def compare(root: str | Path, alpha: float = 0.05) -> dict:
    """Aggregate every run under ``root`` into a comparison report.

    For each problem and mode: mean/std/median of the final IGD and HV and
    min/median/max of UL, LL and total FE. For each pair of modes: rank-sum
    p-values and verdicts (IGD lower is better, HV higher is better).
    """
    root = Path(root)
    report: dict = {"problems": {}}
    for key, by_mode in sorted(_collect(root).items()):
        entry: dict = {"modes": {}, "pairs": []}
        for mode, metas in sorted(by_mode.items()):
            metas = sorted(metas, key=lambda m: m["seed"])
            entry["modes"][mode] = {
                "seeds": [m["seed"] for m in metas],
                "igd": _summary([m["final_igd"] for m in metas]),
                "hv": _summary([m["final_hv"] for m in metas]),
                "ul_fe": _fe_summary([m["ul_fe"] for m in metas]),
                "ll_fe": _fe_summary([m["ll_fe"] for m in metas]),
                "total_fe": _fe_summary([m["total_fe"] for m in metas]),
            }
        modes = sorted(by_mode)
        for i, a in enumerate(modes):
            for b in modes[i + 1:]:
                ma, mb = by_mode[a], by_mode[b]
                pair = {"a": a, "b": b}
                for metric, lower in (("igd", True), ("hv", False)):
                    va = [m[f"final_{metric}"] for m in ma]
                    vb = [m[f"final_{metric}"] for m in mb]
                    if min(len(va), len(vb)) < 3 or not np.all(np.isfinite(va + vb)):
                        pair[metric] = {"verdict": "n/a", "p": float("nan")}
                        continue
                    v, p = verdict(va, vb, alpha, lower_is_better=lower)
                    pair[metric] = {"verdict": v, "p": p}
                entry["pairs"].append(pair)
        report["problems"][key] = entry
    return report


def write_report(root: Path, report: dict) -> None:
    root.mkdir(parents=True, exist_ok=True)
    (root / "comparison.json").write_text(json.dumps(report, indent=2, default=float))
    with open(root / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "mode", "n", "igd_mean", "igd_std", "igd_median", "hv_mean", "hv_std", "hv_median",
                    "total_fe_min", "total_fe_median", "total_fe_max"])
        for key, entry in report["problems"].items():
            for mode, s in entry["modes"].items():
                w.writerow([key, mode, s["igd"]["n"], s["igd"]["mean"], s["igd"]["std"], s["igd"]["median"],
                            s["hv"]["mean"], s["hv"]["std"], s["hv"]["median"], s["total_fe"]["min"],
                            s["total_fe"]["median"], s["total_fe"]["max"]])


def truncate_at_fe(ledger_a: Iterable, ledger_b: Iterable | float, metric: str = "igd") -> float:
    """Metric of run A at the first generation whose total FE exceeds B's budget.

    Args:
        ledger_a: Rows of run A (dicts or :class:`MetricPoint`), sorted by FE.
        ledger_b: Rows of run B, or B's total FE budget directly.
        metric: ``"igd"`` or ``"hv"``.

    Returns:
        A's final value when A never exceeds the budget.
    """
    def get(row, name):
        return row[name] if isinstance(row, dict) else getattr(row, name)

    rows_a = list(ledger_a)
    if not rows_a:
        raise ValueError("run A has no ledger rows")
    if isinstance(ledger_b, (int, float)):
        budget = float(ledger_b)
    else:
        rows_b = list(ledger_b)
        budget = float(get(rows_b[-1], "ul_fe") + get(rows_b[-1], "ll_fe"))
    for row in rows_a:
        if get(row, "ul_fe") + get(row, "ll_fe") > budget:
            return float(get(row, metric))
    return float(get(rows_a[-1], metric))


_CONVERGENCE_SCRIPT = '''"""Convergence of one run: IGD against total function evaluations."""
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "convergence.csv", newline="") as fh:
    rows = list(csv.DictReader(fh))
fe = [int(r["ul_fe"]) + int(r["ll_fe"]) for r in rows]
igd = [float(r["igd"]) for r in rows]

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(fe, igd, marker=".")
ax.set_yscale("log")
ax.set_xlabel("total FE (UL + LL)")
ax.set_ylabel("IGD")
ax.set_title("{title}")
fig.tight_layout()
fig.savefig(here / "convergence.png", dpi=150)
'''

_FRONT_SCRIPT = '''"""Final UL front of one run against the true front."""
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent


def load(name):
    with open(here / name, newline="") as fh:
        rows = [ln for ln in fh if not ln.startswith("#")]
    data = list(csv.DictReader(rows))
    return [float(r["F1"]) for r in data], [float(r["F2"]) for r in data]


fig, ax = plt.subplots(figsize=(4.5, 4))
if (here / "true_pf.csv").exists():
    f1, f2 = load("true_pf.csv")
    ax.plot(f1, f2, ".", ms=2, color="0.6", label="true PF")
f1, f2 = load("final_front.csv")
ax.plot(f1, f2, "o", mfc="none", label="final front")
ax.set_xlabel("F1")
ax.set_ylabel("F2")
ax.set_title("{title}")
ax.legend()
fig.tight_layout()
fig.savefig(here / "front.png", dpi=150)
'''


def emit_plots(run_dirs: Iterable[str | Path]) -> list[Path]:
    """Write self-contained matplotlib scripts next to each run's data.

    Raises:
        ValueError: If a convergence CSV is missing or lacks required columns.
    """
    written = []
    for d in run_dirs:
        d = Path(d)
        conv = d / "convergence.csv"
        if not conv.exists():
            raise ValueError(f"{d}: no convergence.csv")
        read_convergence(conv)
        title = d.as_posix().replace('"', "")[-60:]
        p1 = d / "plot_convergence.py"
        p1.write_text(_CONVERGENCE_SCRIPT.replace("{title}", title))
        written.append(p1)
        if (d / "final_front.csv").exists():
            p2 = d / "plot_front.py"
            p2.write_text(_FRONT_SCRIPT.replace("{title}", title))
            written.append(p2)
    return written


def find_run_dirs(root: str | Path) -> list[Path]:
    root = Path(root)
    if (root / "convergence.csv").exists():
        return [root]
    return sorted(p.parent for p in root.glob("**/convergence.csv"))

