"""Active-learning loop over a homotop space.

One run: draw an initial observed set, then repeat for ``n_cycles``:
split observed 95/5, fit the surrogate, log train/test MAE, predict every
unobserved homotop, pick ``n_selected`` by the acquisition rule, evaluate
them with the oracle and move them into the observed set.
"""
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend, gpr
from .config import AlConfig
from .descriptors import MbtrParams, fit_pca, mbtr2, minmax_scale, pca_project, read_xyz
from .encodings import EncodingSpec
from .errors import ConfigError, QalError, SizeError
from .kernels import RBF, Constant, DotProduct, QuantumFeatureCache, QuantumKernelSpec, White
from .space import (
    CandidateSpace,
    CommandOracle,
    TableOracle,
    ToyOracle,
    homotop_geometry,
    oracle_evaluate,
)

log = logging.getLogger(__name__)

RUN_HEADER = (
    "cycle",
    "n_observed",
    "n_new_calcs_cum",
    "best_energy_hartree",
    "mae_train_hartree",
    "mae_test_hartree",
)
AGGREGATE_HEADER = ("n_new_calcs", "mean_best_energy_hartree", "std_best_energy_hartree")
MAE_CHECKPOINTS = (20, 100, 200)


class RunAborted(QalError):
    def __init__(self, cycle, cause):
        super().__init__(f"run aborted in cycle {cycle}: {type(cause).__name__}: {cause}")
        self.cycle = cycle
        self.cause = cause


# --- model construction ---------------------------------------------------


def classical_kernel_setup(name):
    """Initial kernel and search bounds for the two classical kernels."""
    if name == "dotproduct_white":
        return DotProduct(1.0) + White(10.0), gpr.HyperBounds(((1e-3, 1e3), (1e-3, 1e3)))
    if name == "constant_rbf":
        return Constant(1.0) * RBF(10.0), gpr.HyperBounds(((1e-3, 1e3), (1e-2, 1e2)))
    raise ConfigError(f"unknown classical kernel {name!r}")


def build_kernel(config):
    """(kernel, bounds); bounds is None for quantum kernels."""
    if config.model == "gpr":
        return classical_kernel_setup(config.kernel)
    kind = {"yz_cx": "YZ_CX", "highdim": "HighDim"}[config.feature_map]
    enc = EncodingSpec(kind, config.pca_components, config.reps)
    return QuantumKernelSpec(config.kernel.upper(), enc, config.gamma), None


def build_oracle(config):
    if config.oracle == "table":
        return TableOracle.from_csv(config.energy_table)
    if config.oracle == "toy":
        return ToyOracle(config.toy_j_sisi, config.toy_j_sial, config.toy_j_alal, config.toy_rho,
                         dopant_element=config.dopant_element)
    return CommandOracle(config.command)


def mbtr_params(config, host_element):
    dop = config.dopant_element
    return MbtrParams(
        config.mbtr_grid_min,
        config.mbtr_grid_max,
        config.mbtr_grid_points,
        config.mbtr_sigma,
        config.mbtr_decay,
        ((host_element, host_element), (host_element, dop), (dop, dop)),
    )


@dataclass
class Problem:
    """Everything shared by the runs of one experiment.

    ``features`` holds the scaled PCA coordinates of every homotop, rows
    aligned with ``ids``. PCA and scaling are fit once over the whole space.
    """

    space: CandidateSpace
    oracle: object
    ids: list
    features: np.ndarray
    table: dict = None
    qcache: object = None

    def rows(self, ids):
        return self.features[[self._index[i] for i in ids]]

    def __post_init__(self):
        self._index = {h: k for k, h in enumerate(self.ids)}


def descriptor_matrix(space, params):
    return np.array([mbtr2(homotop_geometry(space, h), params) for h in space.homotops])


def prepare(config, descriptors=None):
    """Build the candidate space, oracle and scaled features for ``config``."""
    host = read_xyz(config.geometry_xyz)
    if len(host) != config.n_sites:
        raise ConfigError(f"geometry has {len(host)} atoms but n_sites = {config.n_sites}")
    host_elements = set(host.elements)
    if len(host_elements) != 1:
        raise ConfigError(f"host geometry must contain a single element, found {sorted(host_elements)}")
    space = CandidateSpace(host, config.n_dopants, config.dopant_element)
    if descriptors is None:
        descriptors = descriptor_matrix(space, mbtr_params(config, host.elements[0]))
    pca = fit_pca(descriptors, config.pca_components)
    scaled, _ = minmax_scale(pca_project(pca, descriptors), (0.0, math.pi))
    oracle = build_oracle(config)
    table = oracle.tabulate(space) if hasattr(oracle, "tabulate") else None
    kernel, _ = build_kernel(config)
    qcache = QuantumFeatureCache(kernel) if config.model == "qgpr" else None
    return Problem(space, oracle, space.ids, scaled, table, qcache)


# --- run state -------------------------------------------------------------


@dataclass
class CycleRecord:
    cycle: int
    n_observed: int
    selected: list
    energies: list
    best_energy: float
    mae_train: float
    mae_test: float
    n_new_calcs_cum: int


@dataclass
class RunState:
    observed: dict
    virtual: list
    rng: np.random.Generator
    history: list = field(default_factory=list)
    initial_best: float = math.inf
    n_oracle_calls: int = 0
    exhausted: bool = False
    known: dict = field(default_factory=dict, repr=False)

    @property
    def best_energy(self):
        return min(self.observed.values())

    @property
    def n_new_calcs(self):
        return sum(len(r.selected) for r in self.history)


def _passes(energy, threshold):
    return energy >= threshold


def init_database(space, oracle, config, rng, table=None):
    """Draw the initial observed set from homotops passing the init filter.

    The filter keeps energies >= a threshold (absolute, or a quantile of
    the full table). Only the initial draw is filtered; everything else,
    including homotops that fail the filter, stays in the virtual set.
    """
    ids = [h.id for h in space.homotops]
    n = config.n_initial
    if table is not None:
        energies = np.array([table[i] for i in ids])
        if config.init_threshold_hartree is not None:
            threshold = config.init_threshold_hartree
        else:
            q = 0.5 if config.init_quantile is None else config.init_quantile
            threshold = float(np.quantile(energies, q))
        pool = [i for i, e in zip(ids, energies) if _passes(e, threshold)]
        if len(pool) < n:
            raise ConfigError(f"only {len(pool)} homotops pass the initial filter, need {n}")
        chosen = [pool[k] for k in sorted(rng.choice(len(pool), size=n, replace=False))]
        observed = {i: float(table[i]) for i in chosen}
        calls = n
        known = {}
    else:
        if config.init_threshold_hartree is None:
            raise ConfigError("oracles without a table need init_threshold_hartree (quantiles need the full table)")
        threshold = config.init_threshold_hartree
        observed, known, calls = {}, {}, 0
        for k in rng.permutation(len(ids)):
            if len(observed) == n:
                break
            e = oracle_evaluate(oracle, space, ids[k])
            calls += 1
            if _passes(e, threshold):
                observed[ids[k]] = e
            else:
                known[ids[k]] = e
        if len(observed) < n:
            raise ConfigError(f"rejection sampling found only {len(observed)} homotops passing the filter")
    virtual = [i for i in ids if i not in observed]
    state = RunState(observed, virtual, rng, n_oracle_calls=calls, known=known)
    state.initial_best = state.best_energy
    return state


def split_train_test(observed_ids, train_fraction, rng):
    """Uniform random partition with round(f N) clamped to [1, N - 1] train."""
    ids = list(observed_ids)
    n = len(ids)
    if n < 2:
        raise SizeError("need at least two observed homotops to split")
    n_train = min(max(int(math.floor(train_fraction * n + 0.5)), 1), n - 1)
    perm = rng.permutation(n)
    return [ids[k] for k in perm[:n_train]], [ids[k] for k in perm[n_train:]]


def acquire(strategy, ids, means, variances, k, kappa=2.0, rng=None):
    """Pick ``k`` ids; returns (selected, exhausted).

    ``exploitation`` takes the lowest predicted means, ``lcb`` the lowest
    ``mean - kappa * sqrt(variance)``; ties go to the smaller id string.
    ``random`` is a uniform baseline that ignores the model.
    """
    ids = list(ids)
    exhausted = k >= len(ids)
    k = min(k, len(ids))
    if strategy == "random":
        picks = rng.choice(len(ids), size=k, replace=False)
        return [ids[p] for p in sorted(picks)], exhausted
    means = np.asarray(means, dtype=np.float64)
    if strategy == "exploitation":
        score = means
    elif strategy == "lcb":
        score = means - kappa * np.sqrt(np.maximum(np.asarray(variances, dtype=np.float64), 0.0))
    else:
        raise ValueError(f"unknown acquisition strategy {strategy!r}")
    order = sorted(range(len(ids)), key=lambda p: (score[p], ids[p]))
    return [ids[p] for p in order[:k]], exhausted


def _evaluate_many(problem, state, ids, workers):
    def one(i):
        if i in state.known:
            return state.known[i]
        if problem.table is not None:
            return problem.table[i]
        return oracle_evaluate(problem.oracle, problem.space, i)

    fresh = [i for i in ids if i not in state.known]
    state.n_oracle_calls += len(fresh)
    if workers > 1 and problem.table is None and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, ids))
    return [one(i) for i in ids]


def fit_surrogate(problem, config, X, y, rng):
    kernel, bounds = build_kernel(config)
    diag_reg = config.effective_diag_reg
    if bounds is not None:
        kernel = gpr.optimize_hyperparameters(kernel, bounds, X, y, diag_reg, config.n_restarts, rng)
    return gpr.fit(kernel, X, y, diag_reg, cache=problem.qcache)


def run_cycle(state, problem, config):
    """Advance one cycle in place and return ``state``."""
    if not state.virtual:
        raise SizeError("no virtual homotops left")
    cycle = len(state.history)
    n_obs = len(state.observed)
    try:
        if config.acquisition == "random":
            mae_train = mae_test = math.nan
            means = variances = None
        else:
            train, test = split_train_test(list(state.observed), config.train_fraction, state.rng)
            Xtr = problem.rows(train)
            ytr = np.array([state.observed[i] for i in train])
            model = fit_surrogate(problem, config, Xtr, ytr, state.rng)
            mae_train = gpr.mae(gpr.predict(model, Xtr)[0], ytr)
            mae_test = gpr.mae(gpr.predict(model, problem.rows(test))[0], [state.observed[i] for i in test])
            means, variances = gpr.predict(model, problem.rows(state.virtual))
        selected, exhausted = acquire(config.acquisition, state.virtual, means, variances,
                                      config.n_selected, config.kappa, state.rng)
        energies = _evaluate_many(problem, state, selected, config.workers)
    except QalError as exc:
        raise RunAborted(cycle, exc) from exc
    except np.linalg.LinAlgError as exc:
        raise RunAborted(cycle, exc) from exc
    prev_best = state.history[-1].best_energy if state.history else state.initial_best
    for i, e in zip(selected, energies):
        state.observed[i] = float(e)
    chosen = set(selected)
    state.virtual = [i for i in state.virtual if i not in chosen]
    state.history.append(
        CycleRecord(
            cycle,
            n_obs,
            selected,
            [float(e) for e in energies],
            min(prev_best, min(energies)),
            mae_train,
            mae_test,
            state.n_new_calcs + len(selected),
        )
    )
    state.exhausted = exhausted or not state.virtual
    return state


@dataclass
class RunResult:
    run_index: int
    seed: int
    history: list
    initial_best: float
    n_oracle_calls: int
    error: str = None


def run_single(problem, config, run_index):
    seed = config.base_seed + run_index
    rng = np.random.default_rng(seed)
    state = init_database(problem.space, problem.oracle, config, rng, table=problem.table)
    error = None
    for _ in range(config.n_cycles):
        if state.exhausted or not state.virtual:
            break
        try:
            run_cycle(state, problem, config)
        except RunAborted as exc:
            log.error("run %d: %s", run_index, exc)
            error = str(exc)
            break
    return RunResult(run_index, seed, state.history, state.initial_best, state.n_oracle_calls, error)


@dataclass
class ExperimentResult:
    config: AlConfig
    runs: list
    aggregate: dict

    @property
    def failures(self):
        return [r for r in self.runs if r.error]

    @property
    def histories(self):
        return [r.history for r in self.runs]


def _run_worker(args):
    problem, config, run_index = args
    return run_single(problem, config, run_index)


def run_experiment(config, problem=None, out_dir=None):
    """Execute ``config.runs`` independent runs with seeds base_seed + i."""
    problem = problem or prepare(config)
    jobs = [(problem, config, i) for i in range(config.runs)]
    if config.workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(_run_worker, jobs))
    else:
        runs = [_run_worker(j) for j in jobs]
    histories = [r.history for r in runs if r.history]
    agg = aggregate_runs(histories) if histories else None
    result = ExperimentResult(config, runs, agg)
    if out_dir is not None:
        write_experiment(result, out_dir)
    return result


def aggregate_runs(histories):
    """Mean and sample std of best-so-far energy at each new-calc count.

    Runs that stopped early carry their final best forward.
    """
    if not histories:
        raise SizeError("aggregate_runs needs at least one history")
    curves = []
    for h in histories:
        if not h:
            raise SizeError("cannot aggregate an empty history")
        curves.append(([r.n_new_calcs_cum for r in h], [r.best_energy for r in h]))
    grid = sorted({x for xs, _ in curves for x in xs})
    values = np.empty((len(curves), len(grid)))
    for row, (xs, bests) in enumerate(curves):
        pos = np.searchsorted(xs, grid, side="right") - 1
        values[row] = np.asarray(bests)[np.maximum(pos, 0)]
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if len(curves) > 1 else np.zeros(len(grid))
    return {"n_new_calcs": np.array(grid), "mean": mean, "std": std}


# --- reports and files ----------------------------------------------------


def mae_report(histories, checkpoints=MAE_CHECKPOINTS):
    """Mean train/test MAE at the cycles whose observed count is nearest each checkpoint."""
    rows = []
    for target in checkpoints:
        picks = []
        for h in histories:
            if not h:
                continue
            rec = min(h, key=lambda r: (abs(r.n_observed - target), r.n_observed))
            picks.append(rec)
        if not picks:
            continue
        rows.append(
            {
                "target": target,
                "n_observed": float(np.mean([r.n_observed for r in picks])),
                "mae_train": float(np.mean([r.mae_train for r in picks])),
                "mae_test": float(np.mean([r.mae_test for r in picks])),
            }
        )
    return rows


def write_run_csv(run, config, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config.config_hash()}\n")
        fh.write(f"# label={config.label}\n")
        fh.write(f"# seed={run.seed}\n")
        fh.write(f"# run_index={run.run_index}\n")
        fh.write(f"# initial_best_energy_hartree={run.initial_best!r}\n")
        if run.error:
            fh.write(f"# error={run.error.splitlines()[0]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_HEADER)
        for r in run.history:
            w.writerow([r.cycle, r.n_observed, r.n_new_calcs_cum, repr(r.best_energy),
                        repr(r.mae_train), repr(r.mae_test)])


def read_run_csv(path):
    """History records (selected ids are not stored) from a per-run CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != RUN_HEADER:
        raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
    out = []
    prev = 0
    for row in reader:
        cum = int(row["n_new_calcs_cum"])
        out.append(
            CycleRecord(int(row["cycle"]), int(row["n_observed"]), [None] * (cum - prev), [],
                        float(row["best_energy_hartree"]), float(row["mae_train_hartree"]),
                        float(row["mae_test_hartree"]), cum)
        )
        prev = cum
    return out


def write_aggregate_csv(agg, path, comments=()):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for x, m, s in zip(agg["n_new_calcs"], agg["mean"], agg["std"]):
            w.writerow([int(x), repr(float(m)), repr(float(s))])


def read_aggregate_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != AGGREGATE_HEADER:
        raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
    rows = list(reader)
    return {
        "n_new_calcs": np.array([int(r["n_new_calcs"]) for r in rows]),
        "mean": np.array([float(r["mean_best_energy_hartree"]) for r in rows]),
        "std": np.array([float(r["std_best_energy_hartree"]) for r in rows]),
    }


def write_mae_report(reports, path):
    """Table-shaped MAE summary: one row per configuration label."""
    cols = ["configuration"]
    for t in MAE_CHECKPOINTS:
        cols += [f"mae_train_{t}_hartree", f"mae_test_{t}_hartree"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for label, rows in reports.items():
            by_target = {r["target"]: r for r in rows}
            line = [label]
            for t in MAE_CHECKPOINTS:
                r = by_target.get(t)
                line += [repr(r["mae_train"]), repr(r["mae_test"])] if r else ["nan", "nan"]
            w.writerow(line)


def write_experiment(result, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    for run in result.runs:
        write_run_csv(run, cfg, out / f"run_{run.run_index:02d}.csv")
    if result.aggregate is not None:
        seeds = ",".join(str(r.seed) for r in result.runs)
        write_aggregate_csv(
            result.aggregate,
            out / "aggregate.csv",
            comments=(f"config_hash={cfg.config_hash()}", f"label={cfg.label}", f"seeds={seeds}",
                      f"backend={_backend.BACKEND}"),
        )
        write_mae_report({cfg.label: mae_report(result.histories)}, out / "mae_report.csv")
    return out
