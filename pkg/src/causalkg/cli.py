"""Command-line pipeline: KG -> TuckER -> projection -> LiNGAM, plus benchmark and synthetic data."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dag import CausalModel, DataMatrix
from .direct import DEFAULT_SAMPLE_CAP, discover
from .errors import AnalysisError, ConfigError, InputError, StageError
from .experiments import time_algorithms
from .ica import ica_lingam
from .kg import load_dataset, synthetic_kg, write_dictionaries, write_triples
from .projection import ProjectionMatrix, project, select_relations
from .stats import DEFAULT_ALPHA, SynthSpec, gaussianity_test, random_lower_b, residual_independence, synth_lingam
from .rng import stream
from .tucker import TrainConfig, TuckerModel, train

log = logging.getLogger("causalkg")

MIN_TEST_SAMPLES = 20


@dataclass
class PipelineConfig:
    dataset_dir: str = "."
    out: str = "out"
    d_e: int = 5
    d_r: int = 5
    w_r_count: int = 100
    relation_policy: str = "first"
    epochs: int = 50
    learning_rate: float = 0.01
    negatives: int = 1
    seed: int = 0
    algo: str = "direct"
    tau: float | None = None
    alpha: float = DEFAULT_ALPHA
    edge_threshold: float = 0.05
    sample_cap: int | None = DEFAULT_SAMPLE_CAP
    max_iter: int = 200
    tol: float = 1e-4
    skip_train: bool = False
    model_path: str | None = None

    def __post_init__(self):
        if self.relation_policy not in ("first", "most-frequent"):
            raise ConfigError(f"policy must be first or most-frequent, got {self.relation_policy!r}")
        if self.algo not in ("direct", "ica", "both"):
            raise ConfigError(f"algo must be direct, ica or both, got {self.algo!r}")
        if self.w_r_count < 1:
            raise ConfigError("w_r_count must be >= 1")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.edge_threshold < 0:
            raise ConfigError("edge_threshold must be non-negative")
        if self.sample_cap is not None and self.sample_cap < 3:
            raise ConfigError("sample_cap must be >= 3")
        if self.max_iter < 0 or not self.tol > 0:
            raise ConfigError("max_iter must be >= 0 and tol positive")
        self.train_config()  # validates the trainer knobs

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            d_e=self.d_e,
            d_r=self.d_r,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            negatives_per_positive=self.negatives,
            seed=self.seed,
        )

    @property
    def algos(self) -> list[str]:
        return ["direct", "ica"] if self.algo == "both" else [self.algo]


@dataclass
class RunReport:
    out_dir: Path
    artifacts: dict[str, Path] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    stages: list[dict] = field(default_factory=list)
    failed_stage: str | None = None


class _Run:
    """Bookkeeping for one pipeline run: stage status, timings, manifest."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.report = RunReport(Path(cfg.out))
        self.report.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.report.out_dir / name
        self.report.artifacts[name] = p
        return p

    def stage(self, name: str, fn, *args):
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                result = fn(*args)
        except Exception as exc:
            self.report.timings[name] = time.perf_counter() - t0
            self.report.stages.append({"stage": name, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
            self.report.failed_stage = name
            self.finish()
            raise StageError(name, exc) from exc
        self.report.timings[name] = time.perf_counter() - t0
        entry = {"stage": name, "status": "ok"}
        msgs = sorted({str(w.message) for w in caught})
        for msg in msgs:
            log.warning("[%s] %s", name, msg)
        if msgs:
            entry["warnings"] = msgs
        self.report.stages.append(entry)
        return result

    def skip(self, name: str, reason: str) -> None:
        self.report.stages.append({"stage": name, "status": "skipped", "reason": reason})

    def finish(self) -> None:
        r = self.report
        manifest = {
            "config": asdict(self.cfg),
            "stages": r.stages,
            "failed_stage": r.failed_stage,
            "artifacts": sorted(r.artifacts),
            "summary": r.summary,
        }
        (r.out_dir / "MANIFEST.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
        with open(r.out_dir / "timings.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["stage", "seconds"])
            for k, v in r.timings.items():
                w.writerow([k, f"{v:.6f}"])


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _data_matrix(pm: ProjectionMatrix) -> DataMatrix:
    # relations are samples, slice features are variables
    return DataMatrix(pm.centered().T, pm.labels)


def _analyse(run: _Run, X: DataMatrix) -> None:
    """Kurtosis test, causal discovery and residual independence on ``X``."""
    cfg, summary = run.cfg, run.report.summary
    enough = X.n >= MIN_TEST_SAMPLES
    note = f"n={X.n} samples is below the {MIN_TEST_SAMPLES} required by the test"
    if enough:
        rep = run.stage("kurtosis", gaussianity_test, X, cfg.alpha)
        _write_json(run.path("kurtosis.json"), rep.to_dict())
        summary["non_gaussian"] = rep.non_gaussian
    else:
        run.skip("kurtosis", note)

    models: dict[str, CausalModel] = {}
    if "direct" in cfg.algos:
        m = run.stage("discover_direct", discover, X, cfg.tau, None, cfg.sample_cap, cfg.seed)
        m.write_json(run.path("causal_direct.json"))
        m.write_dot(run.path("causal_direct.dot"), cfg.edge_threshold)
        models["direct"] = m
        summary["direct"] = {"converged": True, "rounds": m.diagnostics["rounds"], "order_length": len(m.order)}
    if "ica" in cfg.algos:
        m, conv = run.stage("discover_ica", ica_lingam, X, cfg.max_iter, cfg.tol, cfg.seed)
        extra = {"converged": conv, "iterations": m.diagnostics["iterations"]}
        m.write_json(run.path("causal_ica.json"), **extra)
        m.write_dot(run.path("causal_ica.dot"), cfg.edge_threshold)
        models["ica"] = m
        summary["ica"] = {"converged": conv, "iterations": m.diagnostics["iterations"]}

    if enough:
        doc = {}
        for algo, m in models.items():
            keep = unexplained_residuals(X.X, m.residuals)
            if len(keep) < 2:
                run.skip(f"independence_{algo}", "fewer than two residuals are unexplained")
                doc[algo] = {"skipped": "fewer than two residuals are unexplained"}
                continue
            rep = run.stage(f"independence_{algo}", residual_independence, m.residuals[keep], cfg.alpha)
            d = rep.to_dict()
            for pair in d["pairs"]:
                pair["i"], pair["j"] = keep[pair["i"]], keep[pair["j"]]
            d["excluded"] = [i for i in range(X.p) if i not in keep]
            doc[algo] = d
            summary[algo]["mean_p"] = rep.mean_p
        _write_json(run.path("independence.json"), doc)
    else:
        run.skip("independence", note)
        _write_json(run.path("independence.json"), {"skipped": note})


def unexplained_residuals(X: np.ndarray, residuals: np.ndarray, rel: float = 1e-10) -> list[int]:
    """Indices whose residual variance is not negligible next to the variable's own.

    Q has rank at most d_r, so later variables in the order can be reproduced
    exactly by their predecessors; their residuals are rounding noise and
    carry no information for an independence test.
    """
    var_x = np.var(X, axis=1)
    var_r = np.var(residuals, axis=1)
    return [i for i in range(len(X)) if var_r[i] > rel * var_x[i] and var_r[i] > 0]


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    run = _Run(cfg)
    ds = run.stage("ingest", load_dataset, cfg.dataset_dir)
    write_dictionaries(ds.index, run.report.out_dir)
    run.path("entities.tsv")
    run.path("relations.tsv")
    run.report.summary["dataset"] = {"entities": ds.index.n_e, "relations": ds.index.n_r, "triples": len(ds.train)}

    if cfg.skip_train:
        model_path = Path(cfg.model_path) if cfg.model_path else run.report.out_dir / "model.json"
        model = run.stage("train", TuckerModel.load, model_path)
        run.report.stages[-1]["status"] = "loaded"
        if model.n_e != ds.index.n_e or model.n_r != ds.index.n_r:
            exc = ConfigError(f"checkpoint shape ({model.n_e}, {model.n_r}) does not match the dataset")
            run.report.failed_stage = "train"
            run.finish()
            raise StageError("train", exc)
        if model_path.resolve() != (run.report.out_dir / "model.json").resolve():
            model.save(run.path("model.json"))
        else:
            run.path("model.json")
    else:
        model = run.stage("train", train, ds.tensor, cfg.train_config())
        model.save(run.path("model.json"))

    def _project():
        ids = select_relations(ds.index, cfg.w_r_count, cfg.relation_policy, ds.tensor)
        return project(model, ids)

    pm = run.stage("project", _project)
    pm.to_csv(run.path("q_matrix.csv"))
    X = _data_matrix(pm)
    run.report.summary["data_matrix"] = {"p": X.p, "n": X.n}
    _analyse(run, X)
    run.finish()
    return run.report


def format_table(report: RunReport) -> str:
    """Fixed-width summary with convergence, execution time and mean p-value per estimator."""
    rows = [("algorithm", "convergence", "execution time", "mean p-value")]
    for algo, stage in (("direct", "discover_direct"), ("ica", "discover_ica")):
        info = report.summary.get(algo)
        if info is None:
            continue
        secs = report.timings.get(stage, float("nan"))
        label = f"{secs:.3f}s" if info["converged"] else f"{secs:.3f}s (abandoned)"
        mp = info.get("mean_p")
        rows.append((algo, "yes" if info["converged"] else "no", label, "n/a" if mp is None else f"{mp:.4f}"))
    widths = [max(len(r[k]) for r in rows) for k in range(4)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def benchmark(p_grid: list[int], n: int, trials: int, seed: int = 0) -> list[dict]:
    if not p_grid or any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise ConfigError("p_grid must be non-empty and strictly ascending")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rows = []
    for p in p_grid:
        runs = [time_algorithms(p, n, seed + t) for t in range(trials)]
        for algo in ("direct", "ica"):
            row = {"algo": algo, "p": p, "mean_time": float(np.mean([r[algo] for r in runs]))}
            if algo == "ica":
                row["converged_fraction"] = float(np.mean([r["ica_converged"] for r in runs]))
            rows.append(row)
    return rows


def write_benchmark(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algo", "p", "mean_time"])
        for r in rows:
            w.writerow([r["algo"], r["p"], f"{r['mean_time']:.6f}"])


def loglog_slope(ps, times) -> float:
    return float(np.polyfit(np.log(ps), np.log(times), 1)[0])


def read_samples_csv(path: str | Path) -> DataMatrix:
    """CSV with an id column followed by one column per variable, one row per sample."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path}: no data rows")
    labels = rows[0][1:]
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return DataMatrix(data.T, labels)


def write_samples_csv(X: DataMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", *X.labels])
        for k, col in enumerate(X.X.T.tolist()):
            w.writerow([k, *(f"{v:.17g}" for v in col)])


# --- argument handling ---------------------------------------------------------

_CFG_KEYS = {
    "data": "dataset_dir",
    "out": "out",
    "de": "d_e",
    "dr": "d_r",
    "wr": "w_r_count",
    "policy": "relation_policy",
    "epochs": "epochs",
    "lr": "learning_rate",
    "neg": "negatives",
    "seed": "seed",
    "algo": "algo",
    "tau": "tau",
    "alpha": "alpha",
    "edge_threshold": "edge_threshold",
    "sample_cap": "sample_cap",
    "max_iter": "max_iter",
    "tol": "tol",
    "skip_train": "skip_train",
    "model": "model_path",
}


def _cap(text: str) -> int | None:
    return None if text.lower() in ("none", "0") else int(text)


def _add_data(sp):
    sp.add_argument("--data", metavar="DIR", help="directory holding train.txt (valid.txt, test.txt optional)")


def _add_out(sp, default="out"):
    sp.add_argument("--out", metavar="DIR", default=default)


def _add_train(sp):
    sp.add_argument("--de", type=int, default=5, help="entity embedding dimension")
    sp.add_argument("--dr", type=int, default=5, help="relation embedding dimension")
    sp.add_argument("--epochs", type=int, default=50)
    sp.add_argument("--lr", type=float, default=0.01)
    sp.add_argument("--neg", type=int, default=1, help="negatives per positive")


def _add_project(sp):
    sp.add_argument("--wr", type=int, default=100, help="number of relations to project")
    sp.add_argument("--policy", choices=["first", "most-frequent"], default="first")


def _add_analysis(sp):
    sp.add_argument("--algo", choices=["direct", "ica", "both"], default="direct")
    sp.add_argument("--tau", type=float, default=None, help="kernel regularizer (default depends on n)")
    sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    sp.add_argument("--edge-threshold", type=float, default=0.05)
    sp.add_argument("--sample-cap", type=_cap, default=DEFAULT_SAMPLE_CAP, help="max columns in kernel MI (none = all)")
    sp.add_argument("--max-iter", type=int, default=200, help="FastICA iteration limit")
    sp.add_argument("--tol", type=float, default=1e-4, help="FastICA tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalkg", description=__doc__)
    parser.add_argument("--config", metavar="FILE", help="key=value file; command-line flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="parse triples and write the id dictionaries")
    _add_data(sp)
    _add_out(sp)

    sp = sub.add_parser("train", help="fit TuckER and write model.json")
    _add_data(sp)
    _add_out(sp)
    _add_train(sp)

    sp = sub.add_parser("project", help="write q_matrix.csv from a checkpoint")
    _add_data(sp)
    _add_out(sp)
    _add_project(sp)
    sp.add_argument("--model", metavar="FILE", help="checkpoint (default OUT/model.json)")

    sp = sub.add_parser("discover", help="causal discovery on a samples CSV (e.g. q_matrix.csv)")
    sp.add_argument("--input", metavar="CSV", help="default OUT/q_matrix.csv")
    _add_out(sp)
    _add_analysis(sp)

    sp = sub.add_parser("pipeline", help="ingest, train, project, and discover in one run")
    _add_data(sp)
    _add_out(sp)
    _add_train(sp)
    _add_project(sp)
    _add_analysis(sp)
    sp.add_argument("--skip-train", action="store_true", help="reuse an existing checkpoint")
    sp.add_argument("--model", metavar="FILE", help="checkpoint for --skip-train (default OUT/model.json)")

    sp = sub.add_parser("benchmark", help="time both estimators on synthetic data")
    sp.add_argument("--p-grid", default="4,9,16", help="comma-separated ascending dimensions")
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--trials", type=int, default=3)
    _add_out(sp, "benchmark.csv")

    sp = sub.add_parser("synth", help="write synthetic LiNGAM samples or a synthetic KG")
    sp.add_argument("--kind", choices=["lingam", "kg"], default="lingam")
    sp.add_argument("--p", type=int, default=4)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--noise", choices=["uniform", "laplace"], default="uniform")
    sp.add_argument("--entities", type=int, default=2000)
    sp.add_argument("--relations", type=int, default=11)
    sp.add_argument("--triples", type=int, default=10000)
    _add_out(sp, "synth")

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=0)
    return parser


def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{k}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    if not pre.config:
        return parser.parse_args(argv)
    try:
        raw = read_config(pre.config)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    sp = parser._subparsers._group_actions[0].choices[pre.command]  # noqa: SLF001
    actions = {a.dest: a for a in sp._actions}  # noqa: SLF001
    by_field = {field: key for key, field in _CFG_KEYS.items()}
    defaults = {}
    for key, value in raw.items():
        key = by_field.get(key, key)
        action = actions.get(key)
        if action is None:
            if key in _CFG_KEYS:
                continue  # valid key, but not used by this subcommand
            raise ConfigError(f"unknown config key {key!r}")
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            conv = action.type or str
            try:
                defaults[key] = conv(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
            if action.choices is not None and defaults[key] not in action.choices:
                raise ConfigError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


_NULLABLE = ("tau", "sample_cap")


def _config_from_args(a: argparse.Namespace) -> PipelineConfig:
    kw = {
        field: getattr(a, key)
        for key, field in _CFG_KEYS.items()
        if getattr(a, key, None) is not None or (key in _NULLABLE and hasattr(a, key))
    }
    return PipelineConfig(**kw)


def _need_data(a) -> str:
    if not a.data:
        raise ConfigError("--data is required")
    return a.data


def _cmd_ingest(a) -> int:
    run = _Run(_config_from_args(a))
    ds = run.stage("ingest", load_dataset, _need_data(a))
    write_dictionaries(ds.index, a.out)
    run.path("entities.tsv")
    run.path("relations.tsv")
    run.report.summary["dataset"] = {"entities": ds.index.n_e, "relations": ds.index.n_r, "triples": len(ds.train)}
    run.finish()
    print(f"{ds.index.n_e} entities, {ds.index.n_r} relations, {len(ds.train)} triples ({ds.duplicates} duplicates dropped)")
    return 0


def _cmd_train(a) -> int:
    cfg = _config_from_args(a)
    run = _Run(cfg)
    ds = run.stage("ingest", load_dataset, _need_data(a))
    write_dictionaries(ds.index, a.out)
    model = run.stage("train", train, ds.tensor, cfg.train_config())
    model.save(run.path("model.json"))
    run.finish()
    print(f"loss {model.history[0]:.4f} -> {model.history[-1]:.4f} over {model.epochs} epochs")
    return 0


def _cmd_project(a) -> int:
    cfg = _config_from_args(a)
    run = _Run(cfg)
    ds = run.stage("ingest", load_dataset, _need_data(a))
    model = run.stage("load_model", TuckerModel.load, a.model or Path(a.out) / "model.json")
    ids = run.stage("select", select_relations, ds.index, cfg.w_r_count, cfg.relation_policy, ds.tensor)
    pm = run.stage("project", project, model, ids)
    pm.to_csv(run.path("q_matrix.csv"))
    run.finish()
    print(f"Q is {pm.Q.shape[0]} x {pm.Q.shape[1]}")
    return 0


def _cmd_discover(a) -> int:
    cfg = _config_from_args(a)
    run = _Run(cfg)
    X = run.stage("load", read_samples_csv, a.input or Path(a.out) / "q_matrix.csv")
    _analyse(run, X)
    run.finish()
    print(format_table(run.report))
    return 0


def _cmd_pipeline(a) -> int:
    cfg = _config_from_args(a)
    _need_data(a)
    report = run_pipeline(cfg)
    print(format_table(report))
    return 0


def _cmd_benchmark(a) -> int:
    try:
        grid = [int(v) for v in a.p_grid.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--p-grid: {exc}") from exc
    rows = benchmark(grid, a.n, a.trials, a.seed)
    write_benchmark(rows, a.out)
    for r in rows:
        print(f"{r['algo']:>6}  p={r['p']:<4d} {r['mean_time']:.4f}s")
    direct = [r["mean_time"] for r in rows if r["algo"] == "direct"]
    if len(grid) > 1:
        print(f"direct log-log slope {loglog_slope(grid, direct):.2f}")
    return 0


def _cmd_synth(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.kind == "kg":
        triples = synthetic_kg(a.entities, a.relations, a.triples, seed=a.seed)
        write_triples(triples, out / "train.txt")
        print(f"wrote {len(triples)} triples to {out / 'train.txt'}")
        return 0
    B = random_lower_b(a.p, stream(a.seed, "synth", 2))
    X, truth = synth_lingam(SynthSpec(B, n=a.n, noise_family=a.noise, seed=a.seed))
    write_samples_csv(X, out / "samples.csv")
    truth.write_json(out / "truth.json")
    print(f"wrote {X.n} samples of {X.p} variables to {out / 'samples.csv'}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "project": _cmd_project,
    "discover": _cmd_discover,
    "pipeline": _cmd_pipeline,
    "benchmark": _cmd_benchmark,
    "synth": _cmd_synth,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, AnalysisError):
        return 1
    if isinstance(exc, (InputError, OSError, ValueError)):
        return 2
    return 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except ConfigError as exc:
        print(f"causalkg: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except StageError as exc:
        print(f"causalkg: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (InputError, AnalysisError, OSError) as exc:
        print(f"causalkg: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
