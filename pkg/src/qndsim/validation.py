"""Self-contained validation suite: every acceptance criterion of the
package, runnable from the CLI (``qndsim validate``) and from the test
suite, with one pass/fail line per criterion.

Criteria are evaluated at the active configuration; the frozen reference
numbers quoted in the details correspond to the default configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import RunConfig
from .core import (
    BathParams,
    PopulationVector,
    bath_from_gamma,
    build_generator,
    mean_photon,
    pure_level,
    thermal_populations,
)
from .dynamics import mean_relaxation, propagate
from .measurement import ProjectorPartition, luders_collapse, outcome_probabilities
from .protocol import (
    MeasurementSchedule,
    run_ensemble,
    run_trajectory_gillespie,
    survival_exponential,
    survival_product,
)
from .stats import SurvivalCurve, dwell_statistics, estimate_survival, fit_decay, ks_distance, time_average


@dataclass(frozen=True)
class CriterionResult:
    label: str
    passed: bool
    details: tuple[str, ...]


def render_results(results: list[CriterionResult]) -> str:
    lines = []
    for r in results:
        lines.append(f"{r.label}: {'PASS' if r.passed else 'FAIL'}")
        lines.extend(f"    {d}" for d in r.details)
    failed = [r.label for r in results if not r.passed]
    lines.append(
        f"{len(results) - len(failed)}/{len(results)} criteria passed"
        + (f"; failed: {', '.join(failed)}" if failed else "")
    )
    return "\n".join(lines) + "\n"


def _tv(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(a - b).sum())


class _Shared:
    """Lazily built artifacts reused across criteria."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.params = config.bath()

    @cached_property
    def two_level_schedule(self) -> MeasurementSchedule:
        return MeasurementSchedule(self.config.dt, self.config.steps, ProjectorPartition.fine(1))

    @cached_property
    def ensemble_from_0(self):
        return run_ensemble(
            self.params, self.two_level_schedule, 0, 1, self.config.traj, self.config.seed
        )

    @cached_property
    def curve_from_0(self) -> SurvivalCurve:
        return estimate_survival(self.ensemble_from_0, 0)

    @cached_property
    def ensemble_from_1(self):
        return run_ensemble(
            self.params, self.two_level_schedule, 1, 1, self.config.traj, self.config.seed + 1
        )

    @cached_property
    def curve_from_1(self) -> SurvivalCurve:
        return estimate_survival(self.ensemble_from_1, 1)


def check_ac1(shared: _Shared) -> CriterionResult:
    """Mean relaxation of the exact chain matches the analytic law."""
    config, params = shared.config, shared.params
    gen = build_generator(params, config.trunc)
    start = pure_level(0, config.trunc)
    tol = 1e-8
    details, ok = [], True
    for gt in (0.1, 0.5, 1.0, 2.0, 5.0):
        t = gt / config.gamma
        numeric = mean_photon(propagate(gen, start, t))
        analytic = mean_relaxation(params, 0.0, t)
        err = abs(numeric - analytic)
        ok &= err <= tol
        details.append(f"gt={gt:g}: |numeric-analytic| = {err:.3e} (tol {tol:g})")
    return CriterionResult("AC1 mean-relaxation closure", ok, tuple(details))


def check_ac2(shared: _Shared) -> CriterionResult:
    """Monte Carlo survival from level 0 sits in the 3-sigma band of the
    repeated-measurement product prediction."""
    config, params = shared.config, shared.params
    target = survival_product(params, 0, config.dt, config.steps)
    first_exit = math.exp(-params.emission_rate * config.horizon / config.gamma)
    empirical = float(shared.curve_from_0.survival[-1])
    sigma = math.sqrt(target * (1.0 - target) / config.traj)
    ok = abs(empirical - target) <= 3.0 * sigma
    details = (
        f"empirical = {empirical:.6f}, product prediction = {target:.6f}, "
        f"|diff| = {abs(empirical - target):.2e} (3 sigma = {3 * sigma:.2e})",
        f"continuous first-exit value = {first_exit:.6f} "
        f"(in band: {abs(empirical - first_exit) <= 3 * sigma})",
    )
    return CriterionResult("AC2 survival-from-ground Monte Carlo", ok, details)


def check_ac3(shared: _Shared) -> CriterionResult:
    """Fitted persistence rates: measurement slows relaxation as predicted,
    and the analytic level-1 rate differs from the exact-chain one."""
    config, params = shared.config, shared.params
    gamma, nth = config.gamma, config.n_thermal
    details, ok = [], True

    fit0 = fit_decay(shared.curve_from_0)
    target0 = nth * gamma
    ok &= abs(fit0.rate - target0) <= 0.05 * target0
    tau_ratio = gamma / fit0.rate
    details.append(
        f"level 0: fitted rate = {fit0.rate:.5f} +/- {fit0.stderr:.1e}, "
        f"target n_thermal*gamma = {target0:g} (5% band); tau_0/tau = {tau_ratio:.3f}"
    )

    fit1 = fit_decay(shared.curve_from_1)
    target1_chain = (1.0 + nth) * gamma
    ok &= abs(fit1.rate - target1_chain) <= 0.05 * target1_chain
    details.append(
        f"level 1 Monte Carlo: fitted rate = {fit1.rate:.5f} +/- {fit1.stderr:.1e}, "
        f"exact-chain target (1+n_thermal)*gamma = {target1_chain:g} (5% band)"
    )

    steps = config.steps
    times = config.dt * np.arange(steps + 1)
    analytic = np.concatenate(
        ([1.0], [survival_product(params, 1, config.dt, i) for i in range(1, steps + 1)])
    )
    fit1_analytic = fit_decay(SurvivalCurve.from_probabilities(times, analytic))
    target1_analytic = (1.0 - nth) * gamma
    ok &= abs(fit1_analytic.rate - target1_analytic) <= 0.01 * target1_analytic
    details.append(
        f"level 1 analytic product curve: fitted rate = {fit1_analytic.rate:.5f}, "
        f"target (1-n_thermal)*gamma = {target1_analytic:g} (1% band)"
    )
    details.append(
        f"chain-vs-analytic level-1 rate gap = {abs(fit1.rate - fit1_analytic.rate):.4f}"
    )
    return CriterionResult("AC3 partial-Zeno slowdown rates", ok, tuple(details))


def check_ac4(shared: _Shared) -> CriterionResult:
    """Dwell fractions of one long record match the exact stationary
    occupancy, with the first-order thermal target shown alongside."""
    config, params = shared.config, shared.params
    steps = 4_000_000
    schedule = MeasurementSchedule(config.dt, steps, ProjectorPartition.fine(1))
    record = run_trajectory_gillespie(params, schedule, 0, 1, (config.seed, 0))
    dwell = dwell_statistics(record)
    fraction = float(dwell.fractions[1])
    pi1 = params.emission_rate / (params.emission_rate + params.absorption_rate)
    ok = abs(fraction - pi1) <= 0.01
    avg = time_average(record, 1)
    ok &= avg == fraction
    details = (
        f"fraction of outcome 1 over {steps} steps = {fraction:.6f}, "
        f"exact stationary value = {pi1:.6f}, |diff| = {abs(fraction - pi1):.2e} (tol 0.01)",
        f"first-order thermal target = {config.n_thermal:g} "
        f"(gap to exact = {abs(config.n_thermal - pi1):.4f})",
        f"time_average == dwell fraction exactly: {avg == fraction}",
    )
    return CriterionResult("AC4 dwell fractions and ergodicity", ok, details)


def check_ac5(shared: _Shared) -> CriterionResult:
    """The measurement-loop and jump engines generate the same statistics."""
    config, params = shared.config, shared.params
    n_records, steps = 2000, 1000
    schedule = MeasurementSchedule(config.dt, steps, ProjectorPartition.fine(config.trunc))
    luders = run_ensemble(
        params, schedule, 0, config.trunc, n_records, config.seed, engine="luders"
    )
    gillespie = run_ensemble(
        params, schedule, 0, config.trunc, n_records, config.seed + 11, engine="gillespie"
    )
    details, ok = [], True
    for level in (0, 1):
        a = np.concatenate([dwell_statistics(r).interior_dwell_lengths[level] for r in luders])
        b = np.concatenate([dwell_statistics(r).interior_dwell_lengths[level] for r in gillespie])
        stat, pvalue = ks_distance(a, b)
        ok &= pvalue > 0.01
        details.append(
            f"level-{level} interior dwells: KS stat = {stat:.4f}, p = {pvalue:.4f} "
            f"(n = {a.size}/{b.size}, need p > 0.01)"
        )
    freq_l = (np.stack([r.outcomes for r in luders]) == 1).mean(axis=0)
    freq_g = (np.stack([r.outcomes for r in gillespie]) == 1).mean(axis=0)
    pooled = 0.5 * (freq_l + freq_g)
    var = pooled * (1.0 - pooled) * (2.0 / n_records)
    with np.errstate(invalid="ignore"):
        z = np.where(var > 0.0, np.abs(freq_l - freq_g) / np.sqrt(var), 0.0)
    ok &= float(z.max()) <= 3.0
    details.append(f"per-step outcome-1 marginals: max |z| = {float(z.max()):.2f} (need <= 3)")
    return CriterionResult("AC5 engine equivalence", ok, tuple(details))


def check_ac6(shared: _Shared) -> CriterionResult:
    """The survival product converges to its quasicontinuous exponential
    limit as the sampling interval shrinks."""
    params = shared.params
    gamma = shared.config.gamma
    gt = 1.0
    exponential = survival_exponential(params, 0, gt / gamma)
    gaps = []
    details, ok = [], True
    for x in (0.1, 0.01, 0.001):
        steps = round(gt / x)
        product = survival_product(params, 0, x / gamma, steps)
        gap = abs(product - exponential)
        gaps.append(gap)
        ok &= gap <= x
        details.append(f"x={x:g}: |product - exponential| = {gap:.3e} (bound {x:g})")
    ok &= gaps[0] > gaps[1] > gaps[2]
    ok &= gaps[2] <= 1e-4
    details.append(f"monotone decreasing: {gaps[0] > gaps[1] > gaps[2]}; gap at x=0.001 <= 1e-4")
    return CriterionResult("AC6 quasicontinuity convergence", ok, tuple(details))


def _random_bath(rng) -> BathParams:
    return bath_from_gamma(rng.uniform(0.2, 5.0), rng.uniform(0.02, 0.9))


def _random_population(rng, truncation: int) -> PopulationVector:
    w = rng.random(truncation + 1) ** 2 + 1e-3
    return PopulationVector(w / w.sum())


def _random_partition(rng, truncation: int) -> ProjectorPartition:
    levels = rng.permutation(truncation + 1)
    n_bins = int(rng.integers(1, min(4, truncation + 1) + 1))
    cuts = np.sort(rng.choice(np.arange(1, truncation + 1), size=n_bins - 1, replace=False))
    return ProjectorPartition(truncation, tuple(tuple(b) for b in np.split(levels, cuts)))


def check_ac7(shared: _Shared, cases: int = 100) -> CriterionResult:
    """Randomized-parameter invariant suite (seeded, >= 100 cases each)."""
    seed = shared.config.seed
    details, ok = [], True

    def report(name, failures, note=""):
        nonlocal ok
        ok &= failures == 0
        details.append(f"{name}: {cases - failures}/{cases} cases{note}")

    rng = np.random.default_rng((seed, 71))
    fails = 0
    for _ in range(cases):
        params = _random_bath(rng)
        n = int(rng.integers(1, 25))
        gen = build_generator(params, n)
        pop = _random_population(rng, n)
        t = rng.uniform(0.0, 5.0) / params.gamma
        out = propagate(gen, pop, t).weights
        if abs(out.sum() - 1.0) > 1e-9 or out.min() < 0.0:
            fails += 1
    report("propagate normalization and positivity", fails)

    rng = np.random.default_rng((seed, 72))
    fails = 0
    for _ in range(cases):
        params = _random_bath(rng)
        n = int(rng.integers(1, 25))
        thermal = thermal_populations(params, n)
        drift = _tv(propagate(build_generator(params, n), thermal, rng.uniform(0.0, 5.0) / params.gamma).weights, thermal.weights)
        if drift > 1e-10:
            fails += 1
    report("thermal stationarity (TV <= 1e-10)", fails)

    rng = np.random.default_rng((seed, 73))
    fails = 0
    for _ in range(cases):
        params = _random_bath(rng)
        n = int(rng.integers(1, 40))
        gen = build_generator(params, n)
        pi = thermal_populations(params, n).weights
        flux_up = gen.up * pi[:-1]
        flux_down = gen.down * pi[1:]
        if np.any(np.abs(flux_up - flux_down) > 1e-12 * np.maximum(flux_up, 1.0)):
            fails += 1
    report("generator detailed balance (rel <= 1e-12)", fails)

    rng = np.random.default_rng((seed, 74))
    fails = 0
    for _ in range(cases):
        params = _random_bath(rng)
        n = int(rng.integers(1, 25))
        gen = build_generator(params, n)
        pop = _random_population(rng, n)
        s, t = rng.uniform(0.0, 2.5, size=2) / params.gamma
        direct = propagate(gen, pop, s + t).weights
        chained = propagate(gen, propagate(gen, pop, s), t).weights
        if _tv(direct, chained) > 1e-9:
            fails += 1
    report("semigroup property (TV <= 1e-9)", fails)

    rng = np.random.default_rng((seed, 75))
    fails = 0
    for _ in range(cases):
        n = int(rng.integers(1, 25))
        pop = _random_population(rng, n)
        part = _random_partition(rng, n)
        j = int(rng.integers(part.n_bins))
        once = luders_collapse(pop, part, j)
        twice = luders_collapse(once, part, j)
        if not np.array_equal(once.weights, twice.weights):
            fails += 1
    report("collapse idempotence (exact)", fails)

    rng = np.random.default_rng((seed, 76))
    fails = 0
    for _ in range(cases):
        n = int(rng.integers(1, 25))
        part = _random_partition(rng, n)
        j = int(rng.integers(part.n_bins))
        inside = np.zeros(n + 1)
        idx = np.asarray(part.bins[j])
        w = rng.random(idx.size) + 1e-3
        inside[idx] = w / w.sum()
        supported = PopulationVector(inside)
        if luders_collapse(supported, part, j) is not supported:
            fails += 1
        if part.n_bins > 1:
            mixed = _random_population(rng, n)  # >= 1e-3 everywhere: mass outside j
            if np.array_equal(luders_collapse(mixed, part, j).weights, mixed.weights):
                fails += 1
    report("no-destruction iff support inside bin", fails)

    rng = np.random.default_rng((seed, 77))
    fails = 0
    for _ in range(cases):
        n = int(rng.integers(1, 25))
        pop = _random_population(rng, n)
        part = _random_partition(rng, n)
        probs = outcome_probabilities(pop, part)
        mixture = np.zeros(n + 1)
        for j, p in enumerate(probs):
            if p > 0.0:
                mixture += p * luders_collapse(pop, part, j).weights
        if np.abs(mixture - pop.weights).max() > 1e-12:
            fails += 1
    report("law of total probability (<= 1e-12)", fails)

    # The renewal split is an exact identity; in floating point each side
    # carries its own rounding, so equality is asserted at a few ulp.
    rng = np.random.default_rng((seed, 78))
    fails = 0
    for _ in range(cases):
        params = _random_bath(rng)
        k = int(rng.integers(2))
        dt = rng.uniform(0.001, 0.5) / params.gamma
        a, b = int(rng.integers(1, 400)), int(rng.integers(1, 400))
        whole = survival_product(params, k, dt, a + b)
        split = survival_product(params, k, dt, a) * survival_product(params, k, dt, b)
        if abs(whole - split) > 1e-13 * abs(whole):
            fails += 1
    report("renewal product identity (<= 1e-13 relative)", fails)

    rng = np.random.default_rng((seed, 79))
    fails = 0
    occupancies = [0.02, 0.05, 0.1, 0.2] + list(rng.uniform(0.005, 0.2, size=cases - 4))
    for nth in occupancies:
        params = bath_from_gamma(1.0, float(nth))
        w1 = float(thermal_populations(params, 30).weights[1])
        if abs(w1 - nth) > 3.0 * nth**2:
            fails += 1
    report("thermal w_1 vs n_thermal bound (<= 3*n^2)", fails)

    return CriterionResult("AC7 invariant property suite", ok, tuple(details))


def check_ac8(shared: _Shared, earlier: list[CriterionResult]) -> CriterionResult:
    """Byte-identical reruns and parallelism-independence."""
    from . import cli  # deferred: cli imports this module for the validate command

    config, params = shared.config, shared.params
    details, ok = [], True

    rerun = [check(_Shared(config)) for check in
             (check_ac1, check_ac2, check_ac3, check_ac4, check_ac5, check_ac6, check_ac7)]
    identical = render_results(rerun) == render_results(earlier)
    ok &= identical
    details.append(f"criteria AC1-AC7 rerun byte-identical: {identical}")

    for name, command in (
        ("relax", cli.cmd_relax),
        ("survival", cli.cmd_survival),
        ("dwell", cli.cmd_dwell),
        ("zeno", cli.cmd_zeno),
    ):
        same = command(config) == command(config)
        ok &= same
        details.append(f"{name} output byte-identical across reruns: {same}")

    schedule = MeasurementSchedule(config.dt, 200, ProjectorPartition.fine(config.trunc))
    serial = run_ensemble(params, schedule, 0, config.trunc, 400, config.seed, engine="gillespie")
    threaded = run_ensemble(
        params, schedule, 0, config.trunc, 400, config.seed, engine="gillespie", workers=4
    )
    same = all(np.array_equal(a.outcomes, b.outcomes) for a, b in zip(serial, threaded))
    ok &= same
    details.append(f"jump-engine ensemble independent of worker count: {same}")

    coarse = ProjectorPartition(config.trunc, ((0,), tuple(range(1, config.trunc + 1))))
    sched_c = MeasurementSchedule(config.dt, 40, coarse)
    serial = run_ensemble(params, sched_c, 0, config.trunc, 60, config.seed, workers=1)
    threaded = run_ensemble(params, sched_c, 0, config.trunc, 60, config.seed, workers=4)
    same = all(np.array_equal(a.outcomes, b.outcomes) for a, b in zip(serial, threaded))
    ok &= same
    details.append(f"measurement-loop ensemble independent of worker count: {same}")

    return CriterionResult("AC8 determinism and parallelism independence", ok, tuple(details))


ALL_CHECKS = (check_ac1, check_ac2, check_ac3, check_ac4, check_ac5, check_ac6, check_ac7)


def run_all(config: RunConfig | None = None) -> list[CriterionResult]:
    """Run every criterion; deterministic for a fixed configuration."""
    shared = _Shared(config or RunConfig())
    results = [check(shared) for check in ALL_CHECKS]
    results.append(check_ac8(shared, results))
    return results
