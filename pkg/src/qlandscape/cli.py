"""Experiment driver: one subcommand per experiment, CSV artifacts out.

    qlandscape <experiment> [--config FILE] [--out DIR] [--seed N] [--set section.key=value ...]

Each run writes ``config.ini`` (the resolved configuration) next to its CSV
files; every CSV starts with ``#`` comment lines holding the same settings.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import data, losses, models, optim, qsim, spectral
from .config import ExperimentConfig
from .errors import ConfigError, ContractError
from .outputs import write_atomic, write_csv
from .shiftcalc import CircuitObjective, GradHess


@dataclass
class RunResult:
    files: list[Path] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)


# --------------------------------------------------------------------------
# builders


def build_circuit(cfg: ExperimentConfig) -> qsim.Circuit:
    m = cfg.model
    if m.kind == "toy":
        return models.build_toy(m.num_qubits)
    if m.kind == "layered":
        return models.build_layered(m.num_qubits, m.num_layers)
    if m.kind == "reuploading":
        return models.build_reuploading(m.num_qubits, m.num_layers)
    raise ConfigError(f"model.kind = {m.kind!r} is not a circuit")


def build_target(kind: str, num_qubits: int) -> qsim.StateVector:
    if kind == "zero":
        return qsim.StateVector.zero(num_qubits)
    if kind == "uniform":
        return qsim.uniform_superposition(num_qubits)
    return qsim.ghz_state(num_qubits)


def build_state_loss(cfg: ExperimentConfig, circuit: qsim.Circuit):
    if cfg.loss.kind == "global":
        return losses.GlobalFidelity(build_target(cfg.loss.target, circuit.num_qubits))
    if cfg.loss.kind == "local":
        return losses.LocalZ()
    raise ConfigError("state-preparation experiments need loss.kind = global or local")


def state_objective(cfg: ExperimentConfig) -> CircuitObjective:
    circuit = build_circuit(cfg)
    if circuit.num_data:
        raise ConfigError("this experiment needs a data-free circuit (toy or layered)")
    return CircuitObjective(circuit, build_state_loss(cfg, circuit))


def optimizer_config(cfg: ExperimentConfig, kind: str | None = None) -> optim.OptimizerConfig:
    o = cfg.optimizer
    return optim.OptimizerConfig(
        kind=kind or o.kind, eta=o.eta, eta_cap=o.eta_cap, recompute_every=o.recompute_every,
        lambda_reg=o.lambda_reg, epochs=o.epochs, seed=cfg.run.seed,
    )


def circle_data(cfg: ExperimentConfig) -> tuple[data.Dataset, data.Dataset | None]:
    d = cfg.data
    full = data.generate_circle_dataset(d.n_train + d.n_test, cfg.seed_for("data"))
    if d.n_test == 0:
        return full, None
    return data.train_test_split(full, d.n_train / (d.n_train + d.n_test), cfg.seed_for("split"))


class SubspaceObjective:
    """Restriction of an objective to a few free coordinates; the rest stay fixed."""

    def __init__(self, objective, base, free):
        self.objective = objective
        self.base = np.asarray(base, dtype=np.float64)
        self.free = np.asarray(free, dtype=int)

    has_data = False

    @property
    def num_params(self) -> int:
        return self.free.shape[0]

    def embed(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        full = np.repeat(self.base[None, :], rows.shape[0], axis=0)
        full[:, self.free] = rows
        return full

    def losses(self, rows) -> np.ndarray:
        return self.objective.losses(self.embed(rows))

    def value(self, params) -> float:
        return float(self.losses(params)[0])

    def value_and_gradient(self, params):
        value, grad = self.objective.value_and_gradient(self.embed(params)[0])
        return value, grad[self.free]

    def gradient(self, params):
        return self.value_and_gradient(params)[1]

    def hessian(self, params) -> GradHess:
        gh = self.objective.hessian(self.embed(params)[0])
        sub = np.ix_(self.free, self.free)
        return GradHess(gh.value, gh.gradient[self.free], gh.hessian[sub], gh.eval_count)


def _grad_hess_spectrum(objective, params):
    gh = objective.hessian(params)
    return gh, spectral.eigendecompose(gh.hessian)


def _tails(spectrum: spectral.Spectrum) -> tuple[int, int, float]:
    tau = spectrum.default_tau()
    ev = spectrum.eigenvalues
    return int(np.sum(ev < -tau)), int(np.sum(ev > tau)), tau


def _summary_rows(summary: dict) -> list[tuple[str, object]]:
    return [(k, v) for k, v in summary.items()]


def _write_summary(out: Path, cfg, summary: dict, result: RunResult, name="summary.csv"):
    result.files.append(write_csv(out / name, ("metric", "value"), _summary_rows(summary), cfg))
    result.summary.update(summary)


def _spectrum_rows(snapshots):
    return spectral.spectrum_series(snapshots)


# --------------------------------------------------------------------------
# experiments


def cmd_landscape(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = RunResult()
    objective = state_objective(cfg)
    p = objective.num_params
    free = cfgmod.parse_int_list(cfg.grid.free)
    if len(free) != 2:
        raise ConfigError(f"landscape needs exactly two free parameters, got {len(free)}")
    if len(set(free)) != 2 or min(free) < 0 or max(free) >= p:
        raise ConfigError(f"free parameter indices must be distinct and in [0, {p})")
    base = np.full(p, cfg.grid.fixed_value)
    sub = SubspaceObjective(objective, base, free)
    hess_obj = sub if cfg.grid.hessian_scope == "free" else objective

    axis = np.linspace(cfg.grid.low, cfg.grid.high, cfg.grid.resolution)
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([t1.ravel(), t2.ravel()])
    values = sub.losses(pts)
    rows = [(a, b, v) for (a, b), v in zip(pts.tolist(), values.tolist())]
    result.files.append(write_csv(out / "landscape.csv", ("theta1", "theta2", "loss"), rows, cfg))

    def describe(point):
        params = point if hess_obj is sub else sub.embed(point)[0]
        gh, spectrum = _grad_hess_spectrum(hess_obj, params)
        cls = spectral.classify_stationary(gh.gradient, spectrum)
        return gh, spectrum, cls

    point_rows, spec_rows = [], []
    columns = ("point", "theta1", "theta2", "loss", "grad_norm", "label",
               "n_negative", "n_zero", "n_positive", "tau", "lambda_min", "lambda_max")
    marked = cfgmod.parse_points(cfg.grid.marked)
    for k, point in enumerate(marked):
        gh, spectrum, cls = describe(np.array(point))
        point_rows.append((k, point[0], point[1], gh.value, cls.grad_norm, cls.label, cls.n_negative,
                           cls.n_zero, cls.n_positive, cls.tau, spectrum.lambda_min, spectrum.lambda_max))
        spec_rows += [(k, rank, v) for rank, v in enumerate(spectrum.eigenvalues.tolist())]
        result.summary[f"point{k}_label"] = cls.label
        result.summary[f"point{k}_max_abs_eigenvalue"] = float(np.max(np.abs(spectrum.eigenvalues)))
    result.files.append(write_csv(out / "marked_points.csv", columns, point_rows, cfg))
    result.files.append(write_csv(out / "marked_spectra.csv", ("point", "rank", "eigenvalue"), spec_rows, cfg))

    if cfg.descent.epochs > 0:
        start = np.array(cfgmod.parse_points(cfg.descent.start)[0])
        oc = optim.OptimizerConfig(kind="gd", eta=cfg.descent.eta, epochs=cfg.descent.epochs,
                                   seed=cfg.run.seed)
        trace = optim.train(sub, start, oc)
        result.files.append(write_csv(out / "descent_trace.csv",
                                      ("epoch", "loss", "grad_norm", "learning_rate"), trace.rows(), cfg))
        end = trace.params
        gh, spectrum, cls = describe(end)
        flat = int(np.argmin(np.abs(spectrum.eigenvalues)))
        eps = cfg.descent.epsilon
        grid = np.linspace(-eps, eps, 21)
        if hess_obj is sub:
            direction, start_point, fn = spectrum.eigenvectors[:, flat], end, sub.losses
        else:
            direction, start_point, fn = spectrum.eigenvectors[:, flat], sub.embed(end)[0], objective.losses
        curve = spectral.perturbation_scan(fn, start_point, direction, grid,
                                           float(spectrum.eigenvalues[flat]))
        change = float(np.max(np.abs(curve.losses - gh.value)))
        summary = {
            "descent_theta1": float(end[0]), "descent_theta2": float(end[1]),
            "descent_loss": gh.value, "descent_grad_norm": cls.grad_norm, "descent_label": cls.label,
            "descent_tau": cls.tau, "descent_flat_eigenvalue": float(spectrum.eigenvalues[flat]),
            "descent_max_loss_change": change,
        }
        result.files.append(write_csv(out / "descent_perturb.csv",
                                      ("epsilon", "loss", "quadratic_model"), curve.rows(), cfg,
                                      {"eigenvalue": float(spectrum.eigenvalues[flat])}))
        result.summary.update(summary)
        _write_summary(out, cfg, summary, result, "descent_summary.csv")
    return result


def _train_state(cfg: ExperimentConfig, snapshot_every: int = 0):
    objective = state_objective(cfg)
    params0 = models.init_circuit_params(objective.num_params, cfg.seed_for("init"))
    trace = optim.train(objective, params0, optimizer_config(cfg), snapshot_every=snapshot_every)
    return objective, trace


def cmd_spectrum_evolution(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = RunResult()
    every = cfg.optimizer.snapshot_every or max(1, cfg.optimizer.epochs)
    objective, trace = _train_state(cfg, snapshot_every=every)
    result.files.append(write_csv(out / "spectrum_series.csv", ("epoch", "rank", "eigenvalue"),
                                  _spectrum_rows(trace.snapshots), cfg))
    result.files.append(write_csv(out / "trace.csv", ("epoch", "loss", "grad_norm", "learning_rate"),
                                  trace.rows(), cfg))
    result.files.append(write_csv(out / "params_final.csv", ("index", "value"),
                                  list(enumerate(trace.params.tolist())), cfg))
    first, last = trace.snapshots[0][1], trace.snapshots[-1][1]
    summary = {
        "initial_loss": trace.records[0].loss,
        "final_loss": trace.final_loss,
        "epoch0_max_abs_eigenvalue": float(np.max(np.abs(first.eigenvalues))),
        "final_lambda_min": last.lambda_min,
        "final_lambda_max": last.lambda_max,
        "final_tau": last.default_tau(),
    }
    _write_summary(out, cfg, summary, result)
    return result


def load_params(path) -> np.ndarray:
    from .outputs import read_csv

    _, columns, rows = read_csv(path)
    if columns != ["index", "value"]:
        raise ConfigError(f"{path}: expected an index,value parameter file")
    return np.array([float(r[1]) for r in rows])


def cmd_perturb(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = RunResult()
    if cfg.perturb.params_file:
        objective = state_objective(cfg)
        params = load_params(cfg.perturb.params_file)
        if params.shape != (objective.num_params,):
            raise ConfigError("parameter file does not match the model")
    else:
        objective, trace = _train_state(cfg)
        params = trace.params
    gh, spectrum = _grad_hess_spectrum(objective, params)
    ev = spectrum.eigenvalues
    p = ev.shape[0]
    picks = {"top": p - 1, "middle": p // 2, "zero": int(np.argmin(np.abs(ev)))}
    eps = np.linspace(-cfg.perturb.eps_max, cfg.perturb.eps_max, cfg.perturb.eps_count)
    rows = []
    for name, rank in picks.items():
        curve = spectral.perturbation_scan(objective.losses, params, spectrum.eigenvectors[:, rank],
                                           eps, float(ev[rank]))
        result.files.append(write_csv(out / f"perturb_{name}.csv", ("epsilon", "loss", "quadratic_model"),
                                      curve.rows(), cfg, {"direction": name, "rank": rank,
                                                          "eigenvalue": float(ev[rank])}))
        rows.append((name, rank, float(ev[rank])))
    result.files.append(write_csv(out / "directions.csv", ("direction", "rank", "eigenvalue"), rows, cfg))
    summary = {"loss": gh.value, "grad_norm": float(np.max(np.abs(gh.gradient))),
               "lambda_min": spectrum.lambda_min, "lambda_max": spectrum.lambda_max}
    _write_summary(out, cfg, summary, result)
    return result


def _data_run(cfg: ExperimentConfig, objective, params0, evaluator, result: RunResult, extra: dict):
    """Shared part of the QNN and FFNN runs: spectra, maps, training, accuracy."""
    out = Path(cfg.run.out)
    train_set, test_set = circle_data(cfg)
    res = cfg.data.map_resolution

    def snapshot(params, tag):
        gh, spectrum = _grad_hess_spectrum(objective, params)
        result.files.append(write_csv(out / f"spectrum_{tag}.csv", ("epoch", "rank", "eigenvalue"),
                                      _spectrum_rows([(0 if tag == "init" else cfg.optimizer.epochs,
                                                       spectrum)]), cfg))
        grid = data.prediction_map(lambda pts: evaluator(params, pts), res)
        result.files.append(write_csv(out / f"prediction_{tag}.csv", ("x1", "x2", "expectation_z"),
                                      grid.rows(), cfg))
        agree = data.accuracy(grid.values.ravel(), data.circle_label(grid.points()))
        return spectrum, agree

    init_spec, _ = snapshot(params0, "init")
    trace = optim.train(objective, params0, optimizer_config(cfg))
    final_spec, agree = snapshot(trace.params, "final")
    result.files.append(write_csv(out / "trace.csv", ("epoch", "loss", "grad_norm", "learning_rate"),
                                  trace.rows(), cfg))
    i_neg, i_pos, i_tau = _tails(init_spec)
    f_neg, f_pos, f_tau = _tails(final_spec)
    summary = {
        "num_params": objective.num_params,
        "initial_loss": trace.records[0].loss,
        "final_loss": trace.final_loss,
        "train_accuracy": data.accuracy(evaluator(trace.params, train_set.points), train_set.labels),
        "test_accuracy": (data.accuracy(evaluator(trace.params, test_set.points), test_set.labels)
                          if test_set is not None else float("nan")),
        "grid_agreement": agree,
        "init_n_negative": i_neg, "init_n_positive": i_pos, "init_tau": i_tau,
        "init_spectral_radius": float(np.max(np.abs(init_spec.eigenvalues))),
        "final_n_negative": f_neg, "final_n_positive": f_pos, "final_tau": f_tau,
        "final_lambda_min": final_spec.lambda_min, "final_lambda_max": final_spec.lambda_max,
    }
    summary.update(extra)
    _write_summary(out, cfg, summary, result)
    return trace


def _write_datasets(cfg, result: RunResult):
    out = Path(cfg.run.out)
    train_set, test_set = circle_data(cfg)
    for name, ds in (("train", train_set), ("test", test_set)):
        if ds is None:
            continue
        rows = [(x1, x2, lab) for (x1, x2), lab in zip(ds.points.tolist(), ds.labels.tolist())]
        result.files.append(write_csv(out / f"{name}.csv", ("x1", "x2", "label"), rows, cfg))
    return train_set


def qnn_objective(cfg: ExperimentConfig, train_set: data.Dataset) -> CircuitObjective:
    circuit = models.build_reuploading(cfg.model.num_qubits, cfg.model.num_layers)
    loss = losses.SquareZ(qubit=cfg.loss.readout_qubit)
    return CircuitObjective(circuit, loss, train_set.points, train_set.labels)


def _qnn_evaluator(objective: CircuitObjective):
    return lambda params, pts: losses.circuit_outputs(objective.circuit, objective.loss, params, pts)[0]


def cmd_train_qnn(cfg: ExperimentConfig) -> RunResult:
    if cfg.model.kind != "reuploading" or cfg.loss.kind != "square":
        raise ConfigError("train-qnn needs model.kind = reuploading and loss.kind = square")
    if cfg.optimizer.kind == "qng":
        raise ConfigError("QNG is only available for data-free circuits")
    result = RunResult()
    train_set = _write_datasets(cfg, result)
    objective = qnn_objective(cfg, train_set)
    params0 = models.init_circuit_params(objective.num_params, cfg.seed_for("init"))
    _data_run(cfg, objective, params0, _qnn_evaluator(objective), result, {})
    return result


def cmd_train_ffnn(cfg: ExperimentConfig) -> RunResult:
    if cfg.model.kind != "ffnn" or cfg.loss.kind != "square":
        raise ConfigError("train-ffnn needs model.kind = ffnn and loss.kind = square")
    if cfg.optimizer.kind == "qng":
        raise ConfigError("QNG is only available for data-free circuits")
    hidden = tuple(cfgmod.parse_int_list(cfg.model.hidden))
    net = models.Ffnn(sizes=(2, *hidden, 1))
    result = RunResult()
    train_set = _write_datasets(cfg, result)
    objective = models.FfnnObjective(net, train_set.points, train_set.labels, cfg.data.fd_eps)
    params0 = net.init_params(cfg.seed_for("ffnn"))
    # reference QNN at its own initialization, same data, for the spectral-radius ratio
    qnn = qnn_objective(cfg, train_set)
    qnn_spec = spectral.eigendecompose(
        qnn.hessian(models.init_circuit_params(qnn.num_params, cfg.seed_for("init"))).hessian)
    ffnn_spec = spectral.eigendecompose(objective.hessian(params0).hessian)
    q_rad = float(np.max(np.abs(qnn_spec.eigenvalues)))
    f_rad = float(np.max(np.abs(ffnn_spec.eigenvalues)))
    extra = {"qnn_init_spectral_radius": q_rad,
             "init_spectral_radius_ratio_qnn_over_ffnn": q_rad / f_rad if f_rad > 0 else float("inf")}
    _data_run(cfg, objective, params0, lambda params, pts: net.forward(params, pts), result, extra)
    return result


def cmd_compare_optimizers(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = RunResult()
    objective = state_objective(cfg)
    kinds = [k.strip() for k in cfg.compare.optimizers.split(",") if k.strip()]
    for k in kinds:
        if k not in optim.OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {k!r} in compare.optimizers")
    threshold = cfg.compare.threshold
    epochs = cfg.optimizer.epochs
    curves = {k: [] for k in kinds}
    reach = {k: [] for k in kinds}
    rows = []
    for s in range(cfg.compare.seeds):
        init_seed = cfg.seed_for("init") + s
        params0 = models.init_circuit_params(objective.num_params, init_seed)
        for kind in kinds:
            trace = optim.train(objective, params0, optimizer_config(cfg, kind))
            result.files.append(write_csv(out / f"trace_{kind}_seed{s}.csv",
                                          ("epoch", "loss", "grad_norm", "learning_rate"),
                                          trace.rows(), cfg, {"init_seed": init_seed, "optimizer": kind}))
            hit = trace.epochs_to_reach(threshold)
            curves[kind].append(trace.losses)
            reach[kind].append(float(hit) if hit is not None else float("inf"))
            rows.append((init_seed, kind, trace.records[0].loss, trace.final_loss,
                         hit if hit is not None else -1))
    result.files.append(write_csv(out / "runs.csv", ("seed", "optimizer", "initial_loss", "final_loss",
                                                     "epochs_to_threshold"), rows, cfg))
    medians = {k: np.median(np.stack(curves[k]), axis=0) for k in kinds}
    med_rows = [(e, *[medians[k][e] for k in kinds]) for e in range(epochs + 1)]
    result.files.append(write_csv(out / "median_loss.csv", ("epoch", *kinds), med_rows, cfg))
    summary = {f"median_epochs_to_threshold_{k}": float(np.median(reach[k])) for k in kinds}
    _write_summary(out, cfg, summary, result)
    return result


def cmd_gen_data(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = RunResult()
    n = cfg.data.n_train + cfg.data.n_test
    ds = data.generate_circle_dataset(n, cfg.seed_for("data"))
    rows = [(x1, x2, lab) for (x1, x2), lab in zip(ds.points.tolist(), ds.labels.tolist())]
    result.files.append(write_csv(out / "dataset.csv", ("x1", "x2", "label"), rows, cfg))
    neg = ds.balance()
    summary = {"n": n, "fraction_negative": neg, "fraction_positive": 1.0 - neg,
               "imbalance": abs(2.0 * neg - 1.0)}
    _write_summary(out, cfg, summary, result, "balance.csv")
    return result


COMMANDS = {
    "landscape": cmd_landscape,
    "spectrum-evolution": cmd_spectrum_evolution,
    "perturb": cmd_perturb,
    "train-qnn": cmd_train_qnn,
    "train-ffnn": cmd_train_ffnn,
    "compare-optimizers": cmd_compare_optimizers,
    "gen-data": cmd_gen_data,
}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    out = Path(cfg.run.out)
    result = COMMANDS[cfg.run.experiment](cfg)
    result.files.insert(0, write_atomic(out / "config.ini", cfgmod.to_text(cfg)))
    return result


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlandscape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI file with [section] key = value entries")
        p.add_argument("--out", help="output directory (run.out)")
        p.add_argument("--seed", type=int, help="master seed (run.seed)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one setting, e.g. --set optimizer.eta=0.2")
    sub.add_parser("show-config", help="print the defaults of an experiment").add_argument(
        "name", choices=list(COMMANDS))
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.experiment == "show-config":
            sys.stdout.write(cfgmod.to_text(cfgmod.defaults_for(args.name)))
            return 0
        text = args.config.read_text(encoding="utf-8") if args.config else None
        cfg = cfgmod.resolve(args.experiment, text, args.seed, args.out, args.overrides)
        result = run_experiment(cfg)
    except (ConfigError, ContractError, OSError) as exc:
        print(f"qlandscape: error: {exc}", file=sys.stderr)
        return 2
    for path in result.files:
        print(f"wrote {path}")
    for key, value in result.summary.items():
        print(f"{key} = {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
