"""Experiment configuration, figure tables, deterministic CSV/JSON output and SVG export."""
from __future__ import annotations

import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import design
from .errors import ConfigError, UnsupportedError
from .nplayer import RewardVector, n_equilibrium
from .reward import RewardFunction
from .scale import ModelParams
from .svg import PlotSpec, render

DEFAULT_SWEEP = tuple(2 ** e for e in range(4, 13))
DEFAULT_CURVES = (16, 64, 256, 1024)
FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams = ModelParams()
    alpha: float = 0.5
    n_sweep: tuple = DEFAULT_SWEEP
    curve_ns: tuple = DEFAULT_CURVES
    reward: Optional[dict] = None
    seed: int = 0
    rounds: int = 100_000
    output_dir: str = "out"
    formats: tuple = ("csv",)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Validate every field and report all problems at once."""
        if not isinstance(d, dict):
            raise ConfigError(["config: expected a JSON object"])
        problems = []
        known = {"params", "alpha", "n_sweep", "curve_ns", "reward", "seed", "rounds",
                 "output_dir", "formats"}
        for key in sorted(set(d) - known):
            problems.append(f"{key}: unknown field")
        kw = {}
        try:
            kw["params"] = ModelParams.from_dict(d.get("params", {}))
        except (TypeError, ValueError) as exc:
            problems.append(f"params: {exc}")
        alpha = d.get("alpha", 0.5)
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or not 0 < alpha < 1:
            problems.append(f"alpha: must be a number in (0, 1), got {alpha!r}")
        else:
            kw["alpha"] = float(alpha)
        for key, default in (("n_sweep", DEFAULT_SWEEP), ("curve_ns", DEFAULT_CURVES)):
            ns = d.get(key, list(default))
            if (not isinstance(ns, list) or not ns
                    or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 2 for n in ns)):
                problems.append(f"{key}: must be a non-empty list of integers >= 2")
            else:
                kw[key] = tuple(ns)
        if d.get("reward") is not None:
            try:
                RewardFunction.from_dict(d["reward"])
                kw["reward"] = d["reward"]
            except (TypeError, ValueError, KeyError) as exc:
                problems.append(f"reward: {exc}")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            problems.append("seed: must be an integer in [0, 2^64)")
        else:
            kw["seed"] = seed
        rounds = d.get("rounds", 100_000)
        if not isinstance(rounds, int) or isinstance(rounds, bool) or rounds < 1:
            problems.append("rounds: must be a positive integer")
        else:
            kw["rounds"] = rounds
        out = d.get("output_dir", "out")
        if not isinstance(out, str) or not out:
            problems.append("output_dir: must be a non-empty string")
        else:
            kw["output_dir"] = out
        fmts = d.get("formats", ["csv"])
        if not isinstance(fmts, list) or not fmts or any(f not in FORMATS for f in fmts):
            problems.append(f"formats: must be a non-empty subset of {list(FORMATS)}")
        else:
            kw["formats"] = tuple(fmts)
        if problems:
            raise ConfigError(problems)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError([f"config file {path}: {exc.strerror}"]) from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file {path}: invalid JSON ({exc.msg} at line {exc.lineno})"]) from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "alpha": self.alpha, "n_sweep": list(self.n_sweep),
                "curve_ns": list(self.curve_ns), "reward": self.reward, "seed": self.seed,
                "rounds": self.rounds, "output_dir": self.output_dir, "formats": list(self.formats)}

    def digest(self) -> str:
        """sha256 of the fields that determine numeric output."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("formats")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# -- tables ------------------------------------------------------------------

@dataclass
class Table:
    name: str
    columns: list
    rows: list
    notes: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def as_columns(self) -> dict:
        return {c: self.column(c) for c in self.columns}


def fmt_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def to_csv(table: Table, digest: str, seed) -> str:
    buf = io.StringIO()
    buf.write(f"# config_sha256={digest} seed={seed}\n")
    for k in sorted(table.notes):
        buf.write(f"# {k}={fmt_number(table.notes[k]) if isinstance(table.notes[k], (int, float)) else table.notes[k]}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(fmt_number(v) for v in row) + "\n")
    return buf.getvalue()


def to_json(table: Table, digest: str, seed) -> str:
    rows = [{c: (v.item() if isinstance(v, np.generic) else v) for c, v in zip(table.columns, r)}
            for r in table.rows]
    doc = {"name": table.name, "config_sha256": digest, "seed": seed, "notes": table.notes, "rows": rows}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


# -- figures -------------------------------------------------------------------

def _zero_drift(config: ExperimentConfig) -> None:
    if config.params.mu != 0:
        raise UnsupportedError("cutoff-rank experiments need zero drift")


def loglog_fit(n: Sequence[float], d: Sequence[float]) -> dict:
    """Least-squares line through (log n, log d)."""
    ln, ld = np.log(np.asarray(n, float)), np.log(np.asarray(d, float))
    slope, intercept = np.polyfit(ln, ld, 1)
    resid = ld - (slope * ln + intercept)
    return {"slope": float(slope), "intercept": float(intercept),
            "residual_rms": float(np.sqrt(np.mean(resid ** 2)))}


def fig_cutoff_convergence(config: ExperimentConfig) -> Table:
    """Optimal cutoff ratio k*_n / n against the target alpha."""
    _zero_drift(config)
    rows = []
    for n in config.n_sweep:
        k = max(1, math.ceil(config.alpha * n - 1e-12))
        ks = design.optimal_cutoff_rank(n, k)
        rows.append([n, k, ks, ks / n, ks / n - config.alpha])
    table = Table("cutoff_convergence", ["n", "k", "k_star", "ratio", "ratio_minus_alpha"], rows)
    pos = [(r[0], r[4]) for r in rows if r[4] > 0]
    if len(pos) >= 2:
        fit = loglog_fit(*zip(*pos))
        table.notes.update({f"loglog_{k}": v for k, v in fit.items()})
    return table


def proxy_rank(n: int, alpha: float) -> int:
    return min(n - 1, max(1, int(math.floor(alpha * n + 0.5))))


def fig_proxy_divergence(config: ExperimentConfig) -> tuple:
    """Target-rank performance of the mean field proxy cutoff versus the exact optimum.

    Returns the summary table and one {j, performance} table per curve n.
    """
    _zero_drift(config)
    x0 = config.params.x0
    rows = []
    for n in config.n_sweep:
        k = max(1, math.ceil(config.alpha * n - 1e-12))
        j_proxy = proxy_rank(n, config.alpha)
        ks = design.optimal_cutoff_rank(n, k)
        proxy = design.cutoff_rank_performance(n, k, j_proxy, x0)
        exact = design.cutoff_rank_performance(n, k, ks, x0)
        rows.append([n, k, j_proxy, ks, proxy, exact, exact / proxy])
    summary = Table("proxy_divergence",
                    ["n", "k", "j_proxy", "k_star", "perf_proxy", "perf_exact", "ratio"], rows)
    curves = []
    for n in config.curve_ns:
        k = max(1, math.ceil(config.alpha * n - 1e-12))
        perf = design.performance_curve(n, k, x0)
        j = np.arange(1, n)
        curves.append(Table(f"proxy_curve_n{n}", ["j", "ratio", "performance"],
                            [[int(a), a / n, float(b)] for a, b in zip(j, perf[:-1])],
                            {"n": n, "k": k, "j_proxy": proxy_rank(n, config.alpha),
                             "k_star": design.optimal_cutoff_rank(n, k)}))
    return summary, curves


def proxy_quantile(params: ModelParams, n: int, alpha: float) -> float:
    """(1 - alpha)-quantile of the n-player equilibrium under the proxy cutoff vector."""
    vec = RewardVector.cutoff(n, proxy_rank(n, alpha))
    return float(n_equilibrium(params, vec).cdf.quantile_right(1.0 - alpha))


def emit_svg(table: Table, spec: PlotSpec) -> str:
    return render(table.as_columns(), spec)


def read_csv_table(path) -> Table:
    """Parse a CSV written by :func:`to_csv` (comment lines skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return Table(Path(path).stem, cols, rows)


_SPECS = {
    "cutoff_convergence": [
        ("", PlotSpec("n", ["ratio"], "Optimal cutoff ratio", "n", "k*/n", logx=True, mode="both")),
        ("_loglog", PlotSpec("n", ["ratio_minus_alpha"], "k*/n - alpha", "n", "difference",
                             logx=True, logy=True, mode="both")),
    ],
    "proxy_divergence": [
        ("", PlotSpec("n", ["perf_proxy", "perf_exact"], "Target-rank performance", "n",
                      "performance", logx=True, mode="both", labels=("proxy", "exact"))),
    ],
}


def run_experiment(config: ExperimentConfig, out_dir: Optional[str] = None) -> dict:
    """Compute both figure tables and write them; returns {artifact name: path}."""
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    fig1 = fig_cutoff_convergence(config)
    fig2, curves = fig_proxy_divergence(config)
    written = {}
    for table in [fig1, fig2] + curves:
        if "csv" in config.formats:
            written[f"{table.name}.csv"] = str(write_text(out / f"{table.name}.csv",
                                                          to_csv(table, digest, config.seed)))
        if "json" in config.formats:
            written[f"{table.name}.json"] = str(write_text(out / f"{table.name}.json",
                                                           to_json(table, digest, config.seed)))
        if "svg" in config.formats:
            specs = _SPECS.get(table.name) or [
                ("", PlotSpec("ratio", ["performance"], f"Cutoff performance, {table.name}",
                              "j / n", "performance"))]
            for suffix, spec in specs:
                name = f"{table.name}{suffix}.svg"
                written[name] = str(write_text(out / name, emit_svg(table, spec)))
    manifest = {"config": config.to_dict(), "config_sha256": digest,
                "artifacts": sorted(os.path.basename(p) for p in written.values())}
    written["manifest.json"] = str(write_text(out / "manifest.json",
                                              json.dumps(manifest, indent=2, sort_keys=True) + "\n"))
    return written


# -- equilibrium exports -----------------------------------------------------------

def export_grid(sol, points: int = 401) -> np.ndarray:
    """Uniform grid on [0, 1.25 x-bar] plus every breakpoint of the cdf."""
    x = np.linspace(0.0, 1.25 * sol.support_end, points)
    return np.unique(np.concatenate([x, sol.cdf.breakpoints()]))


def equilibrium_table(sol, x: Optional[np.ndarray] = None, n: Optional[int] = None) -> Table:
    """Rows (x, F_left, F_right, u), prefixed by n for n-player tables."""
    x = export_grid(sol) if x is None else np.asarray(x, dtype=float)
    cols = ["x", "F_left", "F_right", "u"]
    data = [x, sol.cdf.cdf_left(x), sol.cdf.cdf(x), sol.u(x)]
    if n is not None:
        cols = ["n"] + cols
        rows = [[n] + [float(c[i]) for c in data] for i in range(len(x))]
    else:
        rows = [[float(c[i]) for c in data] for i in range(len(x))]
    return Table("equilibrium" if n is None else f"equilibrium_n{n}", cols, rows,
                 {"support_end": float(sol.support_end)})


def atoms_sidecar(sol) -> str:
    doc = {"atoms": [{"x": x, "mass": m} for x, m in sol.cdf.atoms],
           "support_end": float(sol.support_end),
           "diagnostics": {k: v for k, v in sol.diagnostics.items()
                           if isinstance(v, (int, float, bool, str))}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
