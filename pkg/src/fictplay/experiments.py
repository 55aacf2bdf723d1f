"""Deterministic Monte Carlo harness for FP vs AFP comparisons.

Every replicate derives its own seeds from ``(base_seed, replicate, tag)``
(see ``rng.derive_seed``), runs sequentially, and returns plain arrays;
aggregation happens in replicate order, so output is independent of how
many worker processes were used.
"""
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._io import atomic_write
from .dynamics import (BestResponses, TiebreakRule, delta_stats, log_spaced_times, simulate,
                       steps_for_budget)
from .generators import SpecError, cyclic_game, random_gaussian, transitive_game
from .rng import derive_seed

SEED_DERIVATION = "base_seed XOR mix64(replicate * 0x9E3779B97F4A7C15 + crc32(tag))"


def agresti_coull(successes, trials, z=1.96):
    """Agresti-Coull interval for a binomial proportion, clamped to [0, 1]."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    n_adj = trials + z * z
    p_adj = (successes + z * z / 2.0) / n_adj
    half = z * math.sqrt(p_adj * (1.0 - p_adj) / n_adj)
    return max(0.0, p_adj - half), min(1.0, p_adj + half)


def rate_fit(t, values):
    """Least-squares slope of log(value) against log(t)."""
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.shape != v.shape or t.size < 10:
        raise ValueError("need at least 10 (t, value) points")
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("rate_fit needs positive values")
    x, y = np.log(t), np.log(v)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


@dataclass
class SeriesRecord:
    """Long-format series: rows of ``(x, stat_name, algorithm, value)``."""

    name: str
    x_kind: str
    rows: list = field(default_factory=list)

    def add(self, x, stat, algorithm, value):
        self.rows.append((x, stat, algorithm, float(value)))

    def add_summary(self, x, algorithm, samples):
        samples = np.asarray(samples, dtype=np.float64)
        p10, med, p90 = np.percentile(samples, [10, 50, 90])
        self.add(x, "mean", algorithm, samples.mean())
        self.add(x, "median", algorithm, med)
        self.add(x, "p10", algorithm, p10)
        self.add(x, "p90", algorithm, p90)

    def add_proportion(self, x, algorithm, successes, trials, z):
        lo, hi = agresti_coull(successes, trials, z)
        p = successes / trials
        self.add(x, "proportion", algorithm, p)
        self.add(x, "ci_lo", algorithm, min(lo, p))
        self.add(x, "ci_hi", algorithm, max(hi, p))

    def value(self, x, stat, algorithm):
        for row in self.rows:
            if row[0] == x and row[1] == stat and row[2] == algorithm:
                return row[3]
        raise KeyError((x, stat, algorithm))

    def column(self, stat, algorithm):
        pts = [(r[0], r[3]) for r in self.rows if r[1] == stat and r[2] == algorithm]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])

    def to_csv(self):
        lines = ["x,stat_name,algorithm,value"]
        for x, stat, alg, val in self.rows:
            lines.append(f"{x},{stat},{alg},{val!r}")
        return "\n".join(lines) + "\n"


PRESETS = {
    "fig2": "rps_band",
    "fig3": "proportion_better",
    "fig4": "size_sweep",
    "rates-cyclic": "cyclic_rates",
    "rates-transitive": "transitive_rates",
    "fp-init-sweep": "fp_init_sweep",
}

# desk-scale replicate counts, and the full-scale ones used by ``full``
DESK_REPLICATES = {"fig2": 1000, "fig3": 200, "fig4": 100, "rates-cyclic": 20,
                   "rates-transitive": 20, "fp-init-sweep": 200}
FULL_REPLICATES = {"fig2": 10000, "fig3": 1000, "fig4": 1000, "rates-cyclic": 10000,
                   "rates-transitive": 10000, "fp-init-sweep": 1000}


@dataclass
class ExperimentConfig:
    """Configuration of one preset run.

    Fields irrelevant to a preset are ignored by it.  ``jobs`` only affects
    wall time and is left out of the manifest.
    """

    preset: str
    replicates: int = 0
    base_seed: int = 0
    sizes: list = None
    brs: int = 0
    steps: int = 0
    fit_from: int = 0
    fp_init_steps: list = None
    z: float = 1.96
    split_ties: bool = False
    tiebreak: str = "random"
    jobs: int = 1
    full: bool = False

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        defaults = _PRESET_DEFAULTS[self.preset]
        if not self.replicates:
            table = FULL_REPLICATES if self.full else DESK_REPLICATES
            self.replicates = table[self.preset]
        for key, val in defaults.items():
            if getattr(self, key) in (None, 0):
                setattr(self, key, val)
        self.sizes = [int(s) for s in self.sizes] if self.sizes else []
        self.fp_init_steps = [int(k) for k in self.fp_init_steps] if self.fp_init_steps else []
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def manifest_dict(self):
        d = asdict(self)
        d.pop("jobs")
        return d


_PRESET_DEFAULTS = {
    "fig2": {"brs": 100},
    "fig3": {"sizes": [30], "brs": 200},
    "fig4": {"sizes": [5, 10, 15, 20, 30, 40, 50, 60], "brs": 100},
    "rates-cyclic": {"sizes": [3, 4, 5, 20], "steps": 10000, "fit_from": 100},
    "rates-transitive": {"sizes": [10, 20], "steps": 1000},
    "fp-init-sweep": {"sizes": [30], "brs": 200, "fp_init_steps": [0, 1, 2, 3, 5]},
}


def parallel_map(fn, items, jobs=1):
    """Ordered map, optionally over worker processes."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


# -- replicate workers (module level so they pickle) ------------------------

def _band_replicate(args):
    base, r, brs, tiebreak = args
    game = cyclic_game(3)
    rule = TiebreakRule.parse(tiebreak)
    fp = simulate(game, "fp", "symmetric", brs, rule, derive_seed(base, r, "fp"))
    afp = simulate(game, "afp", "symmetric", brs // 2, rule, derive_seed(base, r, "afp"))
    return fp.wc_row, afp.wc_row


def _duel_replicate(args):
    """Worst-case payoff per BR budget for FP and one challenger on a gauss game."""
    base, r, m, n, brs, tiebreak, challenger, fp_init = args
    game = random_gaussian(m, n, derive_seed(base, r, f"game-{m}x{n}"))
    rule = TiebreakRule.parse(tiebreak)
    fp = simulate(game, "fp", "two-player", brs, rule, derive_seed(base, r, "fp"))
    if challenger == "fp":
        other = fp
    else:
        steps = _steps_within("afp", brs, fp_init)
        other = simulate(game, "afp", "two-player", steps, rule,
                         derive_seed(base, r, f"afp-{fp_init}"), fp_init=fp_init)
    return fp.wc_row, other


def _steps_within(algorithm, brs, fp_init):
    """Plays affordable with at most ``brs`` best responses."""
    try:
        return steps_for_budget(algorithm, BestResponses(brs), fp_init)
    except SpecError:
        return steps_for_budget(algorithm, BestResponses(brs - 1), fp_init)


def _compare_at_budgets(fp_wc, other, budgets, split_ties):
    scores = []
    for b in budgets:
        k = other.at_best_responses(b)
        mine, theirs = other.wc_row[k], fp_wc[b - 1]
        if mine > theirs:
            scores.append(1.0)
        elif mine == theirs:
            scores.append(0.5 if split_ties else 1.0)
        else:
            scores.append(0.0)
    return scores


def _proportion_replicate(args):
    base, r, m, n, budgets, tiebreak, challenger, fp_init, split_ties = args
    fp_wc, other = _duel_replicate((base, r, m, n, max(budgets), tiebreak, challenger, fp_init))
    return _compare_at_budgets(fp_wc, other, budgets, split_ties)


def _size_replicate(args):
    base, r, size, brs, tiebreak = args
    rule = TiebreakRule.parse(tiebreak)
    game = random_gaussian(size, size, derive_seed(base, r, f"game-{size}x{size}"))
    fp = simulate(game, "fp", "two-player", brs, rule, derive_seed(base, r, "fp"))
    afp = simulate(game, "afp", "two-player", brs // 2, rule, derive_seed(base, r, "afp"))
    return fp.wc_row[-1], afp.wc_row[-1]


def _cyclic_replicate(args):
    base, r, n, alg, steps, times, tiebreak = args
    game = cyclic_game(n)
    trace = simulate(game, alg, "symmetric", steps, TiebreakRule.parse(tiebreak),
                     derive_seed(base, r, f"{alg}-c{n}"))
    return delta_stats(trace, game).max_delta[times - 1]


def _transitive_replicate(args):
    base, r, n, alg, steps, times, tiebreak = args
    game = transitive_game(n, scaled=True)
    trace = simulate(game, alg, "symmetric", steps, TiebreakRule.parse(tiebreak),
                     derive_seed(base, r, f"{alg}-t{n}"))
    # wc_col is -max(V)/t; V is exact on the scaled integer game
    return -trace.wc_col[times - 1] / n


# -- presets ---------------------------------------------------------------

def rps_band(replicates=1000, brs=100, seed=0, tiebreak="random", jobs=1):
    """Percentile bands of the worst-case payoff on RPS, indexed by BRs."""
    if brs % 2:
        raise ValueError("BR budget must be even")
    res = parallel_map(_band_replicate, [(seed, r, brs, tiebreak) for r in range(replicates)], jobs)
    fp = np.stack([x[0] for x in res])
    afp = np.stack([x[1] for x in res])
    rec = SeriesRecord("fig2_worst_case", "best_responses")
    for b in range(1, brs + 1):
        rec.add_summary(b, "fp", fp[:, b - 1])
        if b % 2 == 0:
            rec.add_summary(b, "afp", afp[:, b // 2 - 1])
        rec.add(b, "value", "reference", 0.0)
    return rec


def proportion_better(size=(30, 30), num_matrices=200, budgets=None, seed=0, tiebreak="random",
                      z=1.96, challenger="afp", fp_init=0, split_ties=False, jobs=1, name=None):
    """Share of matrices where the challenger's worst-case payoff at BR
    budget r is at least FP's at r, with Agresti-Coull intervals.

    Ties count as challenger wins unless ``split_ties``, which scores them
    one half.
    """
    budgets = list(budgets or range(2, 201, 2))
    if challenger == "afp" and fp_init == 0 and any(b % 2 for b in budgets):
        raise ValueError("AFP comparisons need even BR budgets")
    m, n = size
    args = [(seed, r, m, n, budgets, tiebreak, challenger, fp_init, split_ties)
            for r in range(num_matrices)]
    scores = np.array(parallel_map(_proportion_replicate, args, jobs))
    label = challenger if challenger == "fp" else ("afp" if fp_init == 0 else f"afp-init{fp_init}")
    rec = SeriesRecord(name or "fig3_proportion", "best_responses")
    for k, b in enumerate(budgets):
        rec.add_proportion(b, label, float(scores[:, k].sum()), num_matrices, z)
    return rec


def size_sweep(sizes=(5, 15, 30, 60), num_matrices=100, br_budget=100, seed=0,
               tiebreak="random", jobs=1):
    """Worst-case payoff at a fixed BR budget across square matrix sizes."""
    if br_budget % 2:
        raise ValueError("BR budget must be even")
    rec = SeriesRecord("fig4_size", "matrix_size")
    for size in sizes:
        args = [(seed, r, size, br_budget, tiebreak) for r in range(num_matrices)]
        res = np.array(parallel_map(_size_replicate, args, jobs))
        rec.add_summary(size, "fp", res[:, 0])
        rec.add_summary(size, "afp", res[:, 1])
        rec.add(size, "mean_gap", "afp-fp", res[:, 1].mean() - res[:, 0].mean())
    return rec


def _rates(worker, prefix, sizes, replicates, steps, fit_from, seed, tiebreak, jobs, points=60):
    times = log_spaced_times(1, steps, points)
    series, slopes = [], SeriesRecord(f"{prefix}_slopes", "matrix_size")
    for n in sizes:
        fit_mask = times >= (fit_from if fit_from > 0 else n)
        rec = SeriesRecord(f"{prefix}_n{n}", "steps")
        for alg in ("fp", "afp"):
            args = [(seed, r, n, alg, steps, times, tiebreak) for r in range(replicates)]
            vals = np.array(parallel_map(worker, args, jobs), dtype=np.float64)
            for k, t in enumerate(times):
                rec.add_summary(int(t), alg, vals[:, k])
            fits = []
            for row in vals:
                keep = fit_mask & (row > 0)
                if keep.sum() >= 10:
                    fits.append(rate_fit(times[keep], row[keep]))
            if fits:
                slopes.add(n, "slope_mean", alg, np.mean(fits))
                slopes.add(n, "slope_sd", alg, np.std(fits))
        series.append(rec)
    return series + [slopes]


def cyclic_rates(sizes=(3, 4, 5, 20), replicates=20, steps=10000, fit_from=100, seed=0,
                 tiebreak="random", jobs=1):
    """Growth of max Delta_t for FP and AFP on C^n, with log-log slopes."""
    return _rates(_cyclic_replicate, "rates-cyclic", sizes, replicates, steps, fit_from,
                  seed, tiebreak, jobs)


def transitive_rates(sizes=(10, 20), replicates=20, steps=1000, fit_from=0, seed=0,
                     tiebreak="random", jobs=1):
    """Decay of ``max T^n xbar_t`` for FP and AFP, with log-log slopes.

    ``fit_from=0`` starts each fit at t = n, past the initial climb.
    """
    return _rates(_transitive_replicate, "rates-transitive", sizes, replicates, steps, fit_from,
                  seed, tiebreak, jobs)


def fp_init_sweep(size=(30, 30), num_matrices=200, brs=200, fp_init_steps=(0, 1, 2, 3, 5),
                  seed=0, tiebreak="random", z=1.96, split_ties=False, jobs=1):
    """FP against itself (ties split) and AFP with k initial FP steps."""
    budgets = list(range(2, brs + 1, 2))
    rec = SeriesRecord("fp-init-sweep_proportion", "best_responses")
    parts = [proportion_better(size, num_matrices, budgets, seed, tiebreak, z, "fp", 0, True, jobs)]
    for k in fp_init_steps:
        parts.append(proportion_better(size, num_matrices, budgets, seed, tiebreak, z, "afp", k,
                                       split_ties, jobs))
    for p in parts:
        rec.rows.extend(p.rows)
    return rec


def run_preset(config):
    """Run the preset described by ``config``; returns a list of SeriesRecord."""
    c = config
    if c.preset == "fig2":
        return [rps_band(c.replicates, c.brs, c.base_seed, c.tiebreak, c.jobs)]
    if c.preset == "fig3":
        m = c.sizes[0]
        return [proportion_better((m, m), c.replicates, range(2, c.brs + 1, 2), c.base_seed,
                                  c.tiebreak, c.z, split_ties=c.split_ties, jobs=c.jobs)]
    if c.preset == "fig4":
        return [size_sweep(c.sizes, c.replicates, c.brs, c.base_seed, c.tiebreak, c.jobs)]
    if c.preset == "rates-cyclic":
        return cyclic_rates(c.sizes, c.replicates, c.steps, c.fit_from, c.base_seed,
                            c.tiebreak, c.jobs)
    if c.preset == "rates-transitive":
        return transitive_rates(c.sizes, c.replicates, c.steps, c.fit_from, c.base_seed,
                                c.tiebreak, c.jobs)
    m = c.sizes[0]
    return [fp_init_sweep((m, m), c.replicates, c.brs, c.fp_init_steps, c.base_seed,
                          c.tiebreak, c.z, c.split_ties, c.jobs)]


def _seed_tags(config):
    c = config
    if c.preset == "fig2":
        return ["fp", "afp"]
    if c.preset in ("fig3", "fp-init-sweep"):
        m = c.sizes[0]
        tags = [f"game-{m}x{m}", "fp"]
        ks = c.fp_init_steps if c.preset == "fp-init-sweep" else [0]
        return tags + [f"afp-{k}" for k in ks]
    if c.preset == "fig4":
        return [f"game-{s}x{s}" for s in c.sizes] + ["fp", "afp"]
    letter = "c" if c.preset == "rates-cyclic" else "t"
    return [f"{alg}-{letter}{n}" for n in c.sizes for alg in ("fp", "afp")]


def manifest(config, files):
    tags = _seed_tags(config)
    seeds = {tag: [derive_seed(config.base_seed, r, tag) for r in range(config.replicates)]
             for tag in tags}
    return {
        "preset": config.preset,
        "config": config.manifest_dict(),
        "seed_derivation": SEED_DERIVATION,
        "replicate_seeds": seeds,
        "files": files,
    }


def write_outputs(config, records, out_dir):
    """One CSV per series plus ``manifest.json``; every file written atomically."""
    files = []
    for rec in records:
        fname = f"{rec.name}.csv"
        atomic_write(out_dir / fname, rec.to_csv())
        files.append(fname)
    doc = manifest(config, files)
    atomic_write(out_dir / "manifest.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return files + ["manifest.json"]


def run_experiment(config, out_dir):
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return write_outputs(config, run_preset(config), out_dir)
