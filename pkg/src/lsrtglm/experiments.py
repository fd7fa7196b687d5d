"""Experiment harness: seeded trial ensembles, CSV artifacts, plot data.

Three experiment kinds are supported:

* ``synthetic``    -- fixed sample size, both solvers from a shared
  near-truth initialization, per-iteration trajectories;
* ``sample_sweep`` -- final errors (and, for Poisson, convergence success
  rates) across a grid of training-set sizes;
* ``vessel``       -- binary classification of 3D vessel volumes with
  early stopping on the mean test-error curve.

Every trial derives its random streams from ``(seed, trial, purpose)`` seed
sequences, so ensembles are reproducible and order-independent.  Within a
trial both solvers see the identical dataset and identical initialization.

Wall-clock columns are written as zeros unless timing is enabled, which
keeps every artifact byte-stable across reruns with the same seed; the
vessel summary is the one exception, since running time is itself a
reported metric there.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .dataset_io import balanced_subsample, load_vessel
from .glm import Dataset, get_family, predict_many
from .lsr import LsrParams, LsrRank, orthonormalize_qr, perturbed_init
from .metrics import (
    TrialRecord,
    classification_report,
    convergence_success_rate,
    early_stop_select,
    mean_curve_and_band,
    prediction_error,
)
from .optim import ALGORITHMS, OptConfig, run
from .synth import SynthSpec, generate

__all__ = [
    "ConfigError",
    "DataError",
    "AllTrialsDivergedError",
    "ExperimentConfig",
    "default_config",
    "load_config_file",
    "apply_overrides",
    "run_synthetic",
    "run_sample_sweep",
    "run_vessel",
    "emit_plot_data",
    "TRAJECTORY_COLUMNS",
]

KINDS = ("synthetic", "sample_sweep", "vessel")
TRAJECTORY_COLUMNS = (
    "algorithm",
    "trial",
    "iter",
    "loss",
    "est_error",
    "pred_error",
    "elapsed_s",
    "diverged",
)
SERIES = ("loss", "est_error", "pred_error", "elapsed_s")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


class DataError(RuntimeError):
    """Missing or malformed input data (CLI exit code 2)."""


class AllTrialsDivergedError(RuntimeError):
    """Every trial of some solver produced non-finite values (exit code 3)."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "synthetic"
    family: str = "linear"
    shape: tuple = (10, 15, 20)
    ranks: tuple = (2, 2, 2)
    sep_rank: int = 2
    n_train: int = 500
    n_test: int = 100
    noise_var: float = 0.1
    init_scale: float = 0.1
    iters: int = 40
    n_trials: int = 50
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    timing: bool = False
    workers: int = 1
    out_dir: str = "out"
    n_values: tuple = ()
    dataset: str = ""
    balanced: bool = True
    per_class_train: int = 150
    per_class_test: int = 43
    init_core_scale: float = 0.01
    lsrtr_alpha: float = 0.5
    m_alpha: float = 0.5
    m_alpha_m: float = 0.05
    m_beta: float = 0.1
    m_weight_decay: float = 1e-3
    ns_iters: int = 5
    rel_tol: float = 0.0
    sweep_mode: str = "jacobi"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        get_family(self.family)
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.kind == "sample_sweep" and not self.n_values:
            raise ConfigError("sample_sweep needs a nonempty n_values list")

    def opt_config(self, algorithm):
        common = dict(
            max_iters=self.iters,
            ns_iters=self.ns_iters,
            rel_tol=self.rel_tol,
            sweep_mode=self.sweep_mode,
        )
        if algorithm == "lsrtr":
            return OptConfig(alpha=self.lsrtr_alpha, **common)
        return OptConfig(
            alpha=self.m_alpha,
            alpha_m=self.m_alpha_m,
            beta=self.m_beta,
            weight_decay=self.m_weight_decay,
            **common,
        )


# Per-family protocol defaults: sample sizes, iteration budgets and
# stepsizes for the fixed-size experiments and the sample-size sweeps.
_SYNTH_PRESETS = {
    "linear": dict(
        n_train=500, n_test=100, iters=40,
        lsrtr_alpha=0.5, m_alpha=0.5, m_alpha_m=0.05, m_beta=0.1, m_weight_decay=1e-3,
    ),
    "logistic": dict(
        n_train=20000, n_test=10000, iters=30,
        lsrtr_alpha=0.1, m_alpha=0.1, m_alpha_m=0.05, m_beta=0.1, m_weight_decay=1e-3,
    ),
    "poisson": dict(
        n_train=5000, n_test=1000, iters=20,
        lsrtr_alpha=0.05, m_alpha=0.05, m_alpha_m=0.05, m_beta=0.1, m_weight_decay=1e-3,
    ),
}
_SWEEP_PRESETS = {
    "linear": dict(n_test=100, n_values=(100, 250, 500, 1000, 2000)),
    "logistic": dict(n_test=5000, n_values=(2000, 5000, 10000, 20000), lsrtr_alpha=0.5),
    "poisson": dict(n_test=5000, n_values=(1000, 2000, 5000, 10000)),
}
_VESSEL_PRESETS = {
    True: dict(iters=50, lsrtr_alpha=0.5, m_alpha=0.5, m_alpha_m=0.07, m_beta=0.1,
               m_weight_decay=0.01),
    False: dict(iters=30, lsrtr_alpha=0.7, m_alpha=0.7, m_alpha_m=0.08, m_beta=0.3,
                m_weight_decay=0.05),
}


def default_config(kind, family="linear", balanced=True, **overrides):
    """Protocol defaults for one experiment kind (and family, when synthetic)."""
    if kind == "vessel":
        base = dict(
            kind=kind, family="logistic", shape=(28, 28, 28), ranks=(5, 5, 5),
            sep_rank=3, n_trials=10, balanced=balanced, **_VESSEL_PRESETS[balanced],
        )
    elif kind in ("synthetic", "sample_sweep"):
        family = get_family(family).name
        base = dict(kind=kind, family=family, **_SYNTH_PRESETS[family])
        if kind == "sample_sweep":
            base.update(_SWEEP_PRESETS[family])
    else:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    base.update(overrides)
    return ExperimentConfig(**base)


# --- configuration files -------------------------------------------------

_FIELD_TYPES = {
    f.name: (f.type if isinstance(f.type, str) else f.type.__name__)
    for f in fields(ExperimentConfig)
}


def _coerce(key, raw):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown key {key!r}")
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "tuple":
            if key == "algorithms":
                return tuple(part.strip() for part in raw.split(",") if part.strip())
            return tuple(int(part) for part in raw.split(",") if part.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


def apply_overrides(cfg, assignments):
    """Apply ``key=value`` strings on top of a config."""
    updates = {}
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        updates[key] = _coerce(key, raw)
    try:
        return replace(cfg, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path, base=None):
    """Parse a flat ``key = value`` file into a config.

    ``kind`` (and ``family``/``balanced``, when present) select the protocol
    defaults; every other line overrides one field.  Errors carry the
    offending line number.
    """
    entries = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        try:
            entries.append((key, _coerce(key, raw)))
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    mapping = dict(entries)
    if base is None:
        base = default_config(
            mapping.get("kind", "synthetic"),
            family=mapping.get("family", "linear"),
            balanced=mapping.get("balanced", True),
        )
    try:
        return replace(base, **mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# --- CSV helpers ----------------------------------------------------------

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return Path(path)


def _slug(algorithm):
    return algorithm.replace("-", "_")


def _echo_config(cfg, out_dir):
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    path = Path(out_dir) / "effective_config.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def _ensure_out(cfg):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- synthetic trials -----------------------------------------------------

def _synthetic_trial(cfg, trial):
    """Run every configured solver on one freshly drawn problem instance."""
    spec = SynthSpec(
        family=cfg.family,
        shape=cfg.shape,
        rank=LsrRank(cfg.ranks, cfg.sep_rank),
        n_train=cfg.n_train,
        n_test=cfg.n_test,
        noise_var=cfg.noise_var,
        seed=(cfg.seed, trial, 0),
    )
    truth, train, test = generate(spec)
    rng_init = np.random.default_rng(np.random.SeedSequence((cfg.seed, trial, 1)))
    init = perturbed_init(truth, cfg.init_scale, rng_init)

    records = {}
    for algorithm in cfg.algorithms:
        pred_curve = []

        def on_iterate(t, params):
            yhat = predict_many(cfg.family, params, test.covariates)
            with np.errstate(invalid="ignore", over="ignore"):
                pred_curve.append(prediction_error(cfg.family, test.responses, yhat))

        final, log = run(
            algorithm, cfg.family, init, train, cfg.opt_config(algorithm),
            truth=truth, on_iterate=on_iterate,
        )
        records[algorithm] = TrialRecord(
            algorithm=algorithm,
            trial=trial,
            seed=(cfg.seed, trial),
            loss=np.asarray(log.loss),
            est_error=np.asarray(log.est_error),
            pred_error=np.asarray(pred_curve + [float("nan")] * (len(log.loss) - len(pred_curve))),
            elapsed_s=np.asarray(log.elapsed_s),
            ortho_residual=np.asarray(log.ortho_residual),
            diverged=log.diverged,
        )
    return trial, records


def _run_trials(cfg, worker, trials):
    """Execute trials, possibly in a bounded process pool, keyed by index."""
    results = {}
    if cfg.workers == 1:
        for trial in trials:
            idx, value = worker(cfg, trial)
            results[idx] = value
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for idx, value in pool.map(worker, [cfg] * len(trials), trials):
                results[idx] = value
    return [results[t] for t in sorted(results)]


def _records_by_algorithm(cfg, per_trial):
    by_algo = {a: [] for a in cfg.algorithms}
    for records in per_trial:
        for a in cfg.algorithms:
            by_algo[a].append(records[a])
    return by_algo


def _trajectory_rows(cfg, by_algo):
    for algorithm in cfg.algorithms:
        for rec in by_algo[algorithm]:
            for t in range(len(rec.loss)):
                elapsed = rec.elapsed_s[t] if cfg.timing else 0.0
                yield (
                    algorithm, rec.trial, t, rec.loss[t], rec.est_error[t],
                    rec.pred_error[t], elapsed, rec.diverged,
                )


def _aggregate_table(cfg, by_algo):
    """Wide per-iteration table of mean/std for every logged series."""
    columns = ["iter"]
    curves = {}
    length = None
    for algorithm in cfg.algorithms:
        records = by_algo[algorithm]
        if all(r.diverged for r in records):
            raise AllTrialsDivergedError(f"every {algorithm} trial diverged")
        for series in SERIES:
            mean, std = mean_curve_and_band(records, series)
            if series == "elapsed_s" and not cfg.timing:
                mean = np.zeros_like(mean)
                std = np.zeros_like(std)
            slug = _slug(algorithm)
            curves[f"{slug}_{series}_mean"] = mean
            curves[f"{slug}_{series}_std"] = std
            columns += [f"{slug}_{series}_mean", f"{slug}_{series}_std"]
            length = len(mean) if length is None else min(length, len(mean))
    rows = [
        [t] + [curves[c][t] for c in columns[1:]]
        for t in range(length)
    ]
    return columns, rows


def run_synthetic(cfg):
    """Trial ensemble at fixed sample size; writes trajectory CSVs.

    Returns ``(records_by_algorithm, written_paths)``.
    """
    if cfg.kind != "synthetic":
        raise ConfigError(f"run_synthetic got kind {cfg.kind!r}")
    out = _ensure_out(cfg)
    per_trial = _run_trials(cfg, _synthetic_trial, range(cfg.n_trials))
    by_algo = _records_by_algorithm(cfg, per_trial)

    paths = [_echo_config(cfg, out)]
    paths.append(
        _write_csv(out / "trajectories.csv", TRAJECTORY_COLUMNS, _trajectory_rows(cfg, by_algo))
    )
    columns, rows = _aggregate_table(cfg, by_algo)
    paths.append(_write_csv(out / "aggregates.csv", columns, rows))

    summary_rows = []
    for algorithm in cfg.algorithms:
        records = by_algo[algorithm]
        kept = [r for r in records if not r.diverged]
        finals = {
            series: np.array([getattr(r, series)[-1] for r in kept]) for series in SERIES[:3]
        }
        summary_rows.append(
            (
                algorithm,
                len(records),
                len(records) - len(kept),
                convergence_success_rate(records),
                finals["loss"].mean(),
                finals["est_error"].mean(),
                finals["est_error"].std(ddof=1) if len(kept) > 1 else 0.0,
                finals["pred_error"].mean(),
                finals["pred_error"].std(ddof=1) if len(kept) > 1 else 0.0,
            )
        )
    paths.append(
        _write_csv(
            out / "summary.csv",
            (
                "algorithm", "n_trials", "n_diverged", "success_rate",
                "final_loss_mean", "final_est_error_mean", "final_est_error_std",
                "final_pred_error_mean", "final_pred_error_std",
            ),
            summary_rows,
        )
    )
    paths.extend(emit_plot_data(out))
    return by_algo, paths


# --- sample-size sweep ----------------------------------------------------

def run_sample_sweep(cfg, n_values=None):
    """Final-error statistics across training-set sizes.

    Diverged trials are excluded from the error means; their frequency shows
    up in the ``success_rate`` column.  Returns ``(rows, written_paths)``.
    """
    if cfg.kind != "sample_sweep":
        raise ConfigError(f"run_sample_sweep got kind {cfg.kind!r}")
    n_values = tuple(n_values) if n_values else cfg.n_values
    if not n_values:
        raise ConfigError("empty n_values")
    out = _ensure_out(cfg)
    paths = [_echo_config(cfg, out)]
    rows = []
    for n in n_values:
        sized = replace(cfg, kind="synthetic", n_train=int(n), out_dir=cfg.out_dir)
        per_trial = _run_trials(sized, _synthetic_trial, range(cfg.n_trials))
        by_algo = _records_by_algorithm(sized, per_trial)
        for algorithm in cfg.algorithms:
            records = by_algo[algorithm]
            kept = [r for r in records if not r.diverged]
            est = np.array([r.est_error[-1] for r in kept])
            pred = np.array([r.pred_error[-1] for r in kept])
            rows.append(
                (
                    algorithm,
                    int(n),
                    est.mean() if kept else float("nan"),
                    est.std(ddof=1) if len(kept) > 1 else 0.0,
                    pred.mean() if kept else float("nan"),
                    pred.std(ddof=1) if len(kept) > 1 else 0.0,
                    convergence_success_rate(records),
                )
            )
    paths.append(
        _write_csv(
            out / "sweep.csv",
            ("algorithm", "n", "mean_est", "std_est", "mean_pred", "std_pred", "success_rate"),
            rows,
        )
    )
    paths.extend(emit_plot_data(out))
    return rows, paths


# --- vessel classification -------------------------------------------------

def _vessel_init(cfg, trial):
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, trial, 1)))
    core = cfg.init_core_scale * rng.standard_normal(cfg.ranks)
    factors = [
        [orthonormalize_qr(rng.standard_normal((m, r))) for m, r in zip(cfg.shape, cfg.ranks)]
        for _ in range(cfg.sep_rank)
    ]
    return LsrParams(core, factors)


def run_vessel(cfg):
    """Classification study on the vessel volumes.

    Both solvers run ``n_trials`` times from seeded random initializations;
    the per-iteration misclassification rate on the test split drives early
    stopping on the mean curve, and the confusion/AUC metrics are averaged
    over trials at the selected checkpoint.  Running time is always measured.
    Returns ``(summary_rows, written_paths)``.
    """
    if cfg.kind != "vessel":
        raise ConfigError(f"run_vessel got kind {cfg.kind!r}")
    if not cfg.dataset:
        raise DataError("no dataset path configured")
    try:
        train_vol, test_vol = load_vessel(cfg.dataset)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc

    if cfg.balanced:
        rng_train = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, 2)))
        rng_test = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, 3)))
        try:
            train_vol = balanced_subsample(train_vol, cfg.per_class_train, rng_train)
            test_vol = balanced_subsample(test_vol, cfg.per_class_test, rng_test)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    if len(set(test_vol.labels.tolist())) < 2 or len(set(train_vol.labels.tolist())) < 2:
        raise DataError("single-class split; classification metrics undefined")

    train = Dataset(train_vol.volumes, train_vol.labels.astype(float))
    test_x = test_vol.volumes
    test_y = test_vol.labels

    out = _ensure_out(cfg)
    paths = [_echo_config(cfg, out)]
    records, scores = {a: [] for a in cfg.algorithms}, {a: [] for a in cfg.algorithms}
    for trial in range(cfg.n_trials):
        init = _vessel_init(cfg, trial)
        for algorithm in cfg.algorithms:
            curve = []

            def on_iterate(t, params):
                curve.append(predict_many("logistic", params, test_x))

            final, log = run(
                algorithm, "logistic", init, train, cfg.opt_config(algorithm),
                on_iterate=on_iterate,
            )
            score_curve = np.asarray(curve)
            test_error = np.mean((score_curve >= 0.5).astype(int) != test_y[None, :], axis=1)
            records[algorithm].append(
                TrialRecord(
                    algorithm=algorithm,
                    trial=trial,
                    seed=(cfg.seed, trial),
                    loss=np.asarray(log.loss),
                    est_error=np.asarray(log.est_error),
                    pred_error=test_error,
                    elapsed_s=np.asarray(log.elapsed_s),
                    ortho_residual=np.asarray(log.ortho_residual),
                    diverged=log.diverged,
                )
            )
            scores[algorithm].append(score_curve)

    curve_columns = ["iter"]
    curve_data = {}
    chosen = {}
    summary_rows = []
    length = None
    for algorithm in cfg.algorithms:
        recs = records[algorithm]
        if all(r.diverged for r in recs):
            raise AllTrialsDivergedError(f"every {algorithm} trial diverged")
        mean, std = mean_curve_and_band(recs, "pred_error")
        chosen[algorithm] = early_stop_select(mean)
        slug = _slug(algorithm)
        curve_data[f"{slug}_test_error_mean"] = mean
        curve_data[f"{slug}_test_error_std"] = std
        curve_data[f"{slug}_selected"] = (np.arange(len(mean)) == chosen[algorithm]).astype(int)
        curve_columns += [f"{slug}_test_error_mean", f"{slug}_test_error_std", f"{slug}_selected"]
        length = len(mean) if length is None else min(length, len(mean))

        reports = []
        runtimes = []
        for rec, score_curve in zip(recs, scores[algorithm]):
            if rec.diverged and len(score_curve) <= chosen[algorithm]:
                continue
            reports.append(classification_report(score_curve[chosen[algorithm]], test_y))
            runtimes.append(float(np.sum(rec.elapsed_s)))
        summary_rows.append(
            (
                algorithm,
                float(np.mean([r.sensitivity for r in reports])),
                float(np.mean([r.specificity for r in reports])),
                float(np.mean([r.f1 for r in reports])),
                float(np.mean([r.auc for r in reports])),
                float(np.mean([r.accuracy for r in reports])),
                float(np.mean(runtimes)),
                chosen[algorithm],
            )
        )

    curve_rows = [[t] + [curve_data[c][t] for c in curve_columns[1:]] for t in range(length)]
    paths.append(_write_csv(out / "vessel_curve.csv", curve_columns, curve_rows))
    paths.append(
        _write_csv(
            out / "vessel_summary.csv",
            (
                "algorithm", "sensitivity", "specificity", "f1", "auc",
                "accuracy", "runtime_seconds", "chosen_iteration",
            ),
            summary_rows,
        )
    )
    return summary_rows, paths


# --- plot data -------------------------------------------------------------

_GNUPLOT_PREAMBLE = """\
# Render experiment panels: gnuplot plots.gp
set datafile separator ","
set key autotitle columnhead
set term pngcairo size 720,480
set style fill transparent solid 0.25 noborder
"""


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    data = {name: np.array([float(row[i]) for row in rows]) for i, name in enumerate(header)}
    return header, data


def emit_plot_data(out_dir):
    """Derive one CSV per figure panel from the aggregate tables in ``out_dir``.

    Panels carry columns ``(x, mean_A, std_A, mean_B, std_B)`` with x being
    the iteration index, the per-trial-mean cumulative elapsed seconds, or
    the training-set size.  A gnuplot script rendering every panel is written
    alongside.
    """
    out = Path(out_dir)
    written = []
    script = [_GNUPLOT_PREAMBLE]

    def panel(name, xlabel, xs, algos, series_of):
        columns = ["x"] + [f"{stat}_{_slug(a)}" for a in algos for stat in ("mean", "std")]
        rows = []
        for i, x in enumerate(xs):
            row = [x]
            for a in algos:
                mean, std = series_of(a)
                row += [mean[i], std[i]]
            rows.append(row)
        path = _write_csv(out / f"panel_{name}.csv", columns, rows)
        written.append(path)
        plots = []
        for j, a in enumerate(algos):
            m, s = 2 + 2 * j, 3 + 2 * j
            plots.append(
                f'"panel_{name}.csv" using 1:(${m}-${s}):(${m}+${s}) with filledcurves notitle'
            )
            plots.append(f'"panel_{name}.csv" using 1:{m} with lines title "{_slug(a)}"')
        script.append(f'set output "{name}.png"')
        script.append(f'set xlabel "{xlabel}"')
        script.append("plot " + ", \\\n     ".join(plots))
        script.append("")

    agg_path = out / "aggregates.csv"
    if agg_path.exists():
        header, data = _read_csv(agg_path)
        algos = [a for a in ("lsrtr", "lsrtr-m") if f"{_slug(a)}_loss_mean" in data]
        iters = data["iter"]
        for series in ("loss", "est_error", "pred_error"):
            panel(
                f"{series}_vs_iter", "iteration", iters, algos,
                lambda a, s=series: (data[f"{_slug(a)}_{s}_mean"], data[f"{_slug(a)}_{s}_std"]),
            )
        for series in ("loss", "est_error", "pred_error"):
            for a in algos:
                xs = np.cumsum(data[f"{_slug(a)}_elapsed_s_mean"])
                panel(
                    f"{series}_vs_time_{_slug(a)}", "seconds", xs, [a],
                    lambda aa, s=series: (data[f"{_slug(aa)}_{s}_mean"], data[f"{_slug(aa)}_{s}_std"]),
                )

    sweep_path = out / "sweep.csv"
    if sweep_path.exists():
        with open(sweep_path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        algos = sorted({row["algorithm"] for row in rows}, key=lambda a: ALGORITHMS.index(a))
        ns = sorted({int(row["n"]) for row in rows})
        table = {
            (row["algorithm"], int(row["n"])): row for row in rows
        }
        for series, mean_key, std_key in (
            ("est_error_vs_n", "mean_est", "std_est"),
            ("pred_error_vs_n", "mean_pred", "std_pred"),
            ("success_rate_vs_n", "success_rate", None),
        ):
            panel(
                series, "training samples", np.array(ns, dtype=float), algos,
                lambda a, mk=mean_key, sk=std_key: (
                    np.array([float(table[(a, n)][mk]) for n in ns]),
                    np.array([float(table[(a, n)][sk]) if sk else 0.0 for n in ns]),
                ),
            )

    curve_path = out / "vessel_curve.csv"
    if curve_path.exists():
        header, data = _read_csv(curve_path)
        algos = [a for a in ("lsrtr", "lsrtr-m") if f"{_slug(a)}_test_error_mean" in data]
        panel(
            "test_error_vs_iter", "iteration", data["iter"], algos,
            lambda a: (data[f"{_slug(a)}_test_error_mean"], data[f"{_slug(a)}_test_error_std"]),
        )

    if written:
        gp = out / "plots.gp"
        gp.write_text("\n".join(script))
        written.append(gp)
    return written
