"""Simulation design, illustration report and Monte Carlo rate study."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .fairness import (FairnessDefinition, empirical_norm, fairness_violation, parity_gap,
                       sample_spec)
from .npiv import (Sample, StackedFunction, Tuning, build_system, curve_on_grid,
                   estimate_projected, estimate_restricted, estimate_unconstrained,
                   evaluation_grid, rho_grid, rho_path, select_rho, select_tuning)

METHODS = ("unconstrained", "projected", "restricted", "penalized")


@dataclass(frozen=True)
class DgpConfig:
    n: int = 1000
    seed: int = 0
    mean_tau: tuple = (0.0, 0.5)
    cov_offdiag: float = 2.0 * math.sin(math.pi / 12.0)
    var_eta: float = 0.16
    var_u: float = 0.25

    def __post_init__(self):
        if self.n < 10:
            raise ValueError(f"n must be at least 10, got {self.n}")
        if not abs(self.cov_offdiag) < 1:
            raise ValueError("tau covariance must be positive definite (|offdiag| < 1)")
        if not (self.var_eta > 0 and self.var_u > 0):
            raise ValueError("noise variances must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def true_phi(z):
    """``(3 z^2, 1 - 5 z^3)``."""
    z = np.asarray(z, dtype=float)
    return 3.0 * z ** 2, 1.0 - 5.0 * z ** 3


def generate_sample(config: DgpConfig) -> Sample:
    rng = np.random.Generator(np.random.PCG64(int(config.seed)))
    n = config.n
    c = config.cov_offdiag
    chol = np.linalg.cholesky(np.array([[1.0, c], [c, 1.0]]))
    tau = np.asarray(config.mean_tau, dtype=float) + rng.standard_normal((n, 2)) @ chol.T
    w = -1.0 + 2.0 * ndtr(tau[:, 0])
    s = (rng.random(n) < ndtr(tau[:, 1])).astype(float)
    u = math.sqrt(config.var_u) * rng.standard_normal(n)
    eta = math.sqrt(config.var_eta) * rng.standard_normal(n)
    z = -1.0 + 2.0 * ndtr(w - 0.5 * s - 0.5 * w * s + 0.5 * u + eta)
    phi0, phi1 = true_phi(z)
    y = phi0 + phi1 * s + u
    return Sample(y=y, z=z, s=s, w=w)


def empirical_cdf(values, grid) -> np.ndarray:
    values = np.sort(np.asarray(values, dtype=float).ravel())
    if values.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    return np.searchsorted(values, grid, side="right") / values.size


def true_stacked(sample: Sample) -> StackedFunction:
    phi0, phi1 = true_phi(sample.z[:, 0])
    return StackedFunction(phi0, phi1)


@dataclass
class DefinitionReport:
    definition: FairnessDefinition
    estimates: dict
    curves: dict
    violations: dict
    parity_gaps: dict
    rho_star: dict
    rho_curves: dict
    tradeoff: dict
    cdfs: dict

    def tradeoff_records(self) -> list[dict]:
        return [{"rho": r, "loss": l, "violation": v}
                for r, l, v in zip(self.tradeoff["rho"], self.tradeoff["loss"],
                                   self.tradeoff["violation"])]

    def rho_curve_records(self) -> list[dict]:
        keys = sorted(self.rho_curves)
        return [{"rho": r, **{f"criterion_varsigma{i + 1}": float(self.rho_curves[k][j])
                              for i, k in enumerate(keys)}}
                for j, r in enumerate(self.tradeoff["rho"])]

    def curve_records(self, grid) -> list[dict]:
        rows = []
        for name, (c0, c1) in self.curves.items():
            rows.extend({"curve": name, "z": float(g), "phi0": float(a), "phi1": float(b)}
                        for g, a, b in zip(grid, c0, c1))
        return rows

    def cdf_records(self) -> list[dict]:
        rows = []
        for source, (grid, c0, c1) in self.cdfs.items():
            rows.extend({"grid": float(g), "cdf_s0": float(a), "cdf_s1": float(b),
                         "source": source} for g, a, b in zip(grid, c0, c1))
        return rows


@dataclass
class IllustrationReport:
    config: DgpConfig
    tuning: Tuning
    varsigma: float
    grid: np.ndarray
    z_cdf: tuple
    sample: Sample | None = None
    reports: dict = field(default_factory=dict)


def group_cdfs(values, s, grid) -> tuple:
    """Empirical CDFs of ``values`` within ``S = 0`` and ``S = 1``."""
    values = np.asarray(values, dtype=float)
    s = np.asarray(s).astype(bool)
    grid = np.asarray(grid, dtype=float)
    return grid, empirical_cdf(values[~s], grid), empirical_cdf(values[s], grid)


def _definition_report(sample: Sample, system, tuning: Tuning, definition,
                       varsigma: float, grid: np.ndarray, rhos) -> DefinitionReport:
    definition = FairnessDefinition.parse(definition)
    spec = sample_spec(definition, sample.s)
    alpha, n = tuning.alpha, sample.n
    path = rho_path(system, spec, alpha, rhos)
    sel = select_rho(sample, system, spec, alpha, varsigma, path=path)
    sel2 = select_rho(sample, system, spec, alpha, 2.0 * varsigma, path=path)
    estimates = {
        "unconstrained": path.estimates[int(np.flatnonzero(path.rhos == 0)[0])]
        if np.any(path.rhos == 0) else estimate_unconstrained(system, alpha),
        "projected": estimate_projected(system, spec, alpha),
        "restricted": estimate_restricted(system, spec, alpha),
        "penalized": path.estimates[int(np.flatnonzero(path.rhos == sel.rho)[0])],
    }
    truth = true_stacked(sample)
    fair_truth = StackedFunction.unstack(spec.P @ truth.stack())
    curves = {"true": true_phi(grid),
              "true_fair": curve_on_grid(fair_truth, sample.z, tuning.h_z, grid)}
    for name, est in estimates.items():
        curves[name] = curve_on_grid(est, sample.z, tuning.h_z, grid)
    violations = {name: fairness_violation(spec.F, est.stack(), n)
                  for name, est in estimates.items()}
    gaps = {name: parity_gap(est.phi0, est.phi1, sample.s) for name, est in estimates.items()}
    gaps["data"] = parity_gap(sample.y, np.zeros(n), sample.s)
    predicted = {"data": sample.y}
    predicted.update({name: est.scores(sample.s) for name, est in estimates.items()})
    lo = min(float(v.min()) for v in predicted.values())
    hi = max(float(v.max()) for v in predicted.values())
    value_grid = np.linspace(lo, hi, len(grid))
    cdfs = {name: group_cdfs(v, sample.s, value_grid) for name, v in predicted.items()}
    return DefinitionReport(
        definition=definition, estimates=estimates, curves=curves, violations=violations,
        parity_gaps=gaps, rho_star={sel.varsigma: sel.rho, sel2.varsigma: sel2.rho},
        rho_curves={sel.varsigma: sel.criterion, sel2.varsigma: sel2.criterion},
        tradeoff={"rho": path.rhos, "loss": path.loss, "violation": path.violation},
        cdfs=cdfs)


def run_illustration(config: DgpConfig = DgpConfig(), varsigma: float = 1.0,
                     tuning: Tuning | None = None, rhos=None,
                     definitions=tuple(FairnessDefinition)) -> IllustrationReport:
    """Simulate, tune and fit every estimator under each fairness definition.

    The penalized estimator uses the ``rho`` selected with ``varsigma``; the
    criterion is also reported for ``2 * varsigma``.
    """
    if not varsigma > 0:
        raise ValueError("varsigma must be positive")
    sample = generate_sample(config)
    if tuning is None:
        tuning = select_tuning(sample)
    system = build_system(sample, tuning.h_z, tuning.h_w)
    grid = evaluation_grid()
    rhos = rho_grid() if rhos is None else np.asarray(rhos, dtype=float)
    report = IllustrationReport(config=config, tuning=tuning, varsigma=float(varsigma),
                                grid=grid, z_cdf=group_cdfs(sample.z[:, 0], sample.s, grid),
                                sample=sample)
    for definition in definitions:
        d = FairnessDefinition.parse(definition)
        report.reports[d] = _definition_report(sample, system, tuning, d, varsigma, grid, rhos)
    return report


@dataclass
class RateTable:
    ns: list
    errors_unconstrained: np.ndarray  # len(ns) x reps
    errors_projected: np.ndarray

    @property
    def median_unconstrained(self) -> np.ndarray:
        return np.median(self.errors_unconstrained, axis=1)

    @property
    def median_projected(self) -> np.ndarray:
        return np.median(self.errors_projected, axis=1)

    def records(self) -> list[dict]:
        return [{"n": int(n), "median_err_unconstrained": float(a),
                 "median_err_projected": float(b)}
                for n, a, b in zip(self.ns, self.median_unconstrained, self.median_projected)]


def replication_errors(n: int, seed: int, definition=FairnessDefinition.STATISTICAL_PARITY):
    """Errors of the unconstrained and projected estimators for one simulated sample.

    Returns ``(||phi_alpha - phi||_n, ||P phi_alpha - P phi||_n)`` with the
    true function evaluated at the sample points and tuning chosen by
    cross-validation.
    """
    sample = generate_sample(DgpConfig(n=n, seed=seed))
    tuning = select_tuning(sample)
    system = build_system(sample, tuning.h_z, tuning.h_w)
    spec = sample_spec(definition, sample.s)
    truth = true_stacked(sample).stack()
    unc = estimate_unconstrained(system, tuning.alpha).stack()
    return (empirical_norm(unc - truth, n),
            empirical_norm(spec.P @ (unc - truth), n))


def rate_study(ns, reps: int, base_seed: int = 0,
               definition=FairnessDefinition.STATISTICAL_PARITY) -> RateTable:
    """Median estimation errors across sample sizes.

    Replication ``i`` uses seed ``base_seed + i`` at every sample size.
    """
    ns = [int(n) for n in ns]
    if any(n < 50 for n in ns):
        raise ValueError("each sample size must be at least 50")
    if reps < 1:
        raise ValueError("reps must be positive")
    unc = np.empty((len(ns), reps))
    proj = np.empty((len(ns), reps))
    for a, n in enumerate(ns):
        for i in range(reps):
            unc[a, i], proj[a, i] = replication_errors(n, base_seed + i, definition)
    return RateTable(ns, unc, proj)
