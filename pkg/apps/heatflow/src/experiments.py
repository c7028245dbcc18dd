"""Drivers behind the CLI verbs and the MCP tools."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.stats

from .config import ExperimentConfig, LatticeSource
from .errors import ErrorCode, HeatflowError
from .heat import (
    HeatCurrentMatrix,
    SymmetricEstimate,
    TransmissionSpectrum,
    heat_finite_cutoff,
    heat_from_covariance,
    heat_infinite_cutoff,
    heat_symmetric_estimate,
    heat_weak_coupling,
    transmission_spectrum,
)
from .lattice import LatticeSpec, build_lattice, contacts_for_lattice, realization_rng, slab_reversal
from .network import HarmonicNetwork, ReservoirSet, ValidationReport, random_network, validate
from .normal_modes import closed_modes
from .oracle import DiscrepancyReport, QuadratureConfig, compare_covariance, compare_heat, quadrature_covariance, quadrature_heat
from .settings import Settings
from .spectral import ModeSet, assemble_cubic, assemble_quadratic, solve_modes
from .stationary import (
    CovarianceBlocks,
    LocalTemperatures,
    Regime,
    covariance_finite_cutoff,
    covariance_infinite_cutoff,
    covariance_weak_coupling,
    local_temperatures,
)

logger = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.2


@dataclass
class Problem:
    network: HarmonicNetwork
    reservoirs: ReservoirSet
    lattice: Optional[LatticeSpec] = None


def lattice_spec(source: LatticeSource, seed: int, N: Optional[int] = None) -> LatticeSpec:
    return LatticeSpec(
        dim=source.dim,
        N=source.N if N is None else N,
        k0=source.k0,
        coupling=source.coupling,
        mass_mean=source.mass_mean,
        mass_spread=source.mass_spread,
        seed=seed,
        boundary=source.boundary,
    )


def build_problem(config: ExperimentConfig) -> Problem:
    """Network and reservoirs for STATE, HEAT and VERIFY runs."""
    res = config.reservoirs
    seed = config.ensemble.master_seed
    source = config.network
    spec = None
    contacts = res.contacts
    if source.lattice is not None:
        spec = lattice_spec(source.lattice, seed)
        network, _ = build_lattice(spec)
        if contacts is None:
            contacts = [list(c) for c in contacts_for_lattice(spec)]
    elif source.matrices is not None:
        network = HarmonicNetwork.from_files(source.matrices.mass_path, source.matrices.potential_path)
    else:
        network, generated = random_network(realization_rng(seed, 0), source.random.K, len(res.temperatures))
        contacts = contacts or generated
    reservoirs = ReservoirSet(tuple(tuple(c) for c in contacts), tuple(res.temperatures), res.gamma0, res.cutoff_value)
    return Problem(network, reservoirs, spec)


def require_valid(network: HarmonicNetwork, reservoirs: ReservoirSet) -> ValidationReport:
    report = validate(network, reservoirs)
    for warning in report.warnings:
        logger.warning(warning)
    if not report.ok:
        if reservoirs.has_overlap():
            code = ErrorCode.CONTACT_OVERLAP
        elif report.min_potential_eigenvalue <= 0:
            code = ErrorCode.UNSTABLE_NETWORK
        else:
            code = ErrorCode.INVALID_INPUT
        raise HeatflowError(code, "; ".join(report.errors), errors=report.errors)
    return report


def solve_regime_modes(network: HarmonicNetwork, reservoirs: ReservoirSet, report: ValidationReport) -> ModeSet:
    if reservoirs.is_infinite_cutoff:
        return solve_modes(assemble_quadratic(network, reservoirs))
    modes = solve_modes(assemble_cubic(network, reservoirs))
    if len(modes.lambda_pole_indices) != report.lambda_pole_multiplicity:
        logger.warning(
            "found %d poles at s = -Λ, expected K - rank(P_T) = %d",
            len(modes.lambda_pole_indices),
            report.lambda_pole_multiplicity,
        )
    return modes


def compute_covariance(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    regime: Regime,
    classical: bool = False,
    quantum_weak: bool = False,
    deterministic: bool = False,
    classicality_factor: float = 10.0,
) -> CovarianceBlocks:
    report = require_valid(network, reservoirs)
    if regime is Regime.WEAK:
        return covariance_weak_coupling(
            closed_modes(network), reservoirs, network, quantum=quantum_weak, classicality_factor=classicality_factor
        )
    modes = solve_regime_modes(network, reservoirs, report)
    if regime is Regime.FINITE_CUTOFF:
        return covariance_finite_cutoff(modes, reservoirs, network, classical, deterministic, classicality_factor)
    return covariance_infinite_cutoff(modes, reservoirs, network, classical, deterministic, classicality_factor)


def compute_heat(
    network: HarmonicNetwork,
    reservoirs: ReservoirSet,
    regime: Regime,
    classical: bool = False,
) -> HeatCurrentMatrix:
    report = require_valid(network, reservoirs)
    if regime is Regime.WEAK:
        return heat_weak_coupling(closed_modes(network), reservoirs, classical)
    modes = solve_regime_modes(network, reservoirs, report)
    if regime is Regime.FINITE_CUTOFF:
        return heat_finite_cutoff(modes, reservoirs, classical)
    return heat_infinite_cutoff(modes, reservoirs, classical)


def _deterministic(config: ExperimentConfig, settings: Settings) -> bool:
    return settings.deterministic if config.options.deterministic is None else config.options.deterministic


@dataclass
class StateResult:
    covariance: CovarianceBlocks
    temperatures: LocalTemperatures
    validation: ValidationReport

    def to_document(self) -> Dict[str, Any]:
        cov = self.covariance
        return {
            "mode": "STATE",
            "regime": cov.regime.value,
            "K": cov.K,
            "sigma_xx": cov.sigma_xx.tolist(),
            "sigma_xp": cov.sigma_xp.tolist(),
            "sigma_pp": cov.sigma_pp.tolist(),
            "local_temperatures": self.temperatures.values.tolist(),
            "high_t_only": self.temperatures.high_t_only,
            "imag_residual": cov.imag_residual,
            "notes": cov.notes,
            "warnings": self.validation.warnings,
        }


def run_state(config: ExperimentConfig, settings: Optional[Settings] = None) -> StateResult:
    settings = settings or Settings()
    problem = build_problem(config)
    report = validate(problem.network, problem.reservoirs)
    cov = compute_covariance(
        problem.network,
        problem.reservoirs,
        Regime(config.regime),
        classical=config.classical,
        quantum_weak=config.options.quantum_weak,
        deterministic=_deterministic(config, settings),
        classicality_factor=config.options.classicality_factor,
    )
    logger.info("covariance computed for K=%d in regime %s", problem.network.K, config.regime)
    return StateResult(cov, local_temperatures(cov, problem.network), report)


@dataclass
class HeatResult:
    currents: HeatCurrentMatrix
    temperatures: Tuple[float, ...]
    transmission: Optional[TransmissionSpectrum] = None
    symmetric: Optional[SymmetricEstimate] = None

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "mode": "HEAT",
            "regime": self.currents.regime.value,
            "temperatures": list(self.temperatures),
            "pairwise": self.currents.pairwise.tolist(),
            "totals": self.currents.totals.tolist(),
            "conservation_residual": self.currents.conservation_residual(),
            "imag_residual": self.currents.imag_residual,
        }
        if self.currents.per_mode is not None:
            doc["per_mode"] = self.currents.per_mode.tolist()
        if self.symmetric is not None:
            doc["symmetric_estimate"] = {
                "current": self.symmetric.current,
                "per_site": self.symmetric.per_site,
                "contact_size": self.symmetric.contact_size,
                "mean_inverse_mass": self.symmetric.mean_inverse_mass,
            }
        return doc


def run_heat(config: ExperimentConfig, settings: Optional[Settings] = None) -> HeatResult:
    problem = build_problem(config)
    network, reservoirs = problem.network, problem.reservoirs
    currents = compute_heat(network, reservoirs, Regime(config.regime), classical=config.classical)
    residual = currents.conservation_residual()
    if residual > 1e-8:
        logger.warning("heat currents violate conservation: relative residual %.3g", residual)

    spectrum = None
    grid = config.options.transmission
    if grid is not None:
        spectrum = transmission_spectrum(network, reservoirs, np.linspace(grid.omega_min, grid.omega_max, grid.points))

    symmetric = None
    if reservoirs.L == 2:
        permutation = slab_reversal(problem.lattice) if problem.lattice is not None else None
        try:
            symmetric = heat_symmetric_estimate(network, reservoirs, permutation)
        except HeatflowError as e:
            logger.debug("no symmetric estimate: %s", e)
    logger.info("heat currents computed: totals %s", np.array2string(currents.totals, precision=6))
    return HeatResult(currents, reservoirs.temperatures, spectrum, symmetric)


@dataclass
class VerifyResult:
    covariance: DiscrepancyReport
    heat: DiscrepancyReport

    @property
    def passed(self) -> bool:
        return self.covariance.passed and self.heat.passed

    def to_text(self) -> str:
        return "Covariance\n" + self.covariance.to_text() + "\n\nHeat currents\n" + self.heat.to_text()

    def to_document(self) -> Dict[str, Any]:
        return {
            "mode": "VERIFY",
            "passed": self.passed,
            "covariance_max_rel_error": self.covariance.max_rel_error,
            "heat_max_rel_error": self.heat.max_rel_error,
            "failures": [row.__dict__ for row in self.covariance.failures + self.heat.failures],
        }


def run_verify(config: ExperimentConfig, settings: Optional[Settings] = None) -> VerifyResult:
    """Pole sums against brute-force quadrature, entry by entry."""
    settings = settings or Settings()
    problem = build_problem(config)
    network, reservoirs = problem.network, problem.reservoirs
    regime = Regime(config.regime)
    classical = config.classical
    tolerance = config.options.verify_tolerance
    quadrature = QuadratureConfig(rel_tol=config.options.quadrature_rel_tol)

    cov = compute_covariance(
        network, reservoirs, regime, classical=classical, deterministic=_deterministic(config, settings)
    )
    cov_report = compare_covariance(cov, quadrature_covariance(network, reservoirs, quadrature, classical), tolerance)

    currents = compute_heat(network, reservoirs, regime, classical=classical)
    oracle_heat = quadrature_heat(network, reservoirs, quadrature, classical)
    heat_report = compare_heat(
        currents, oracle_heat, tolerance, reference_scale=reservoirs.gamma0 * max(reservoirs.temperatures)
    )
    heat_report.extend("heat_cov", heat_from_covariance(cov, network, reservoirs), currents.totals)

    logger.info(
        "verification: covariance max rel_err %.3g, heat max rel_err %.3g",
        cov_report.max_rel_error,
        heat_report.max_rel_error,
    )
    return VerifyResult(cov_report, heat_report)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    mu_fit: float
    std_error: float
    intercept: float
    sizes: Tuple[int, ...]

    def predict(self, N) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(N, dtype=float) ** self.slope


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Least squares on (log N, log J); J ∝ N^(-mu_fit), so mu_fit = -slope."""
    sizes = np.array([p[0] for p in points], dtype=float)
    values = np.array([p[1] for p in points], dtype=float)
    if len(np.unique(sizes)) < 3:
        raise HeatflowError(ErrorCode.FIT_DOMAIN, "power-law fit needs at least three distinct sizes", sizes=sizes.tolist())
    if np.any(sizes <= 0) or not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise HeatflowError(ErrorCode.FIT_DOMAIN, "power-law fit needs positive sizes and currents", values=values.tolist())
    fit = scipy.stats.linregress(np.log(sizes), np.log(values))
    return PowerLawFit(
        slope=float(fit.slope),
        mu_fit=float(-fit.slope),
        std_error=float(fit.stderr),
        intercept=float(fit.intercept),
        sizes=tuple(int(n) for n in sizes),
    )


@dataclass
class ScalingResult:
    records: pd.DataFrame
    cells: pd.DataFrame
    fits: Dict[float, Optional[PowerLawFit]] = field(default_factory=dict)
    failures: int = 0

    def fit_lines(self) -> pd.DataFrame:
        """Plot data: fitted log J against log N per coupling."""
        rows = []
        for gamma0, fit in self.fits.items():
            if fit is None:
                continue
            for N in fit.sizes:
                rows.append({"gamma0": gamma0, "N": N, "log_N": np.log(N), "log_J_fit": np.log(fit.predict(N))})
        return pd.DataFrame(rows, columns=["gamma0", "N", "log_N", "log_J_fit"])

    def to_document(self) -> Dict[str, Any]:
        fits = {}
        for gamma0, fit in self.fits.items():
            fits[repr(gamma0)] = None if fit is None else {
                "slope": fit.slope,
                "mu_fit": fit.mu_fit,
                "std_error": fit.std_error,
                "fit_window": list(fit.sizes),
            }
        return {
            "mode": "SCALING",
            "cells": self.cells.to_dict(orient="records"),
            "fits": fits,
            "failures": self.failures,
        }


def scaling_cell(
    config: ExperimentConfig,
    gamma0: float,
    N: int,
    realization: int,
) -> Dict[str, Any]:
    """J/ΔT for one disorder realization; failures are returned, not raised."""
    spec = lattice_spec(config.network.lattice, config.ensemble.master_seed, N)
    t_a, t_b = config.reservoirs.temperatures
    record: Dict[str, Any] = {"gamma0": gamma0, "N": N, "realization": realization, "J_over_dT": np.nan, "error": ""}
    try:
        network, _ = build_lattice(spec, realization)
        reservoirs = ReservoirSet(contacts_for_lattice(spec), (t_a, t_b), gamma0, config.reservoirs.cutoff_value)
        currents = compute_heat(network, reservoirs, Regime(config.regime), classical=config.classical)
        record["J_over_dT"] = float(currents.totals[0]) / (spec.slab_size * (t_a - t_b))
    except HeatflowError as e:
        logger.warning("realization %d (γ0=%g, N=%d) failed: %s", realization, gamma0, N, e)
        record["error"] = e.code.value
    except np.linalg.LinAlgError as e:
        logger.warning("realization %d (γ0=%g, N=%d) failed in linear algebra: %s", realization, gamma0, N, e)
        record["error"] = ErrorCode.NUMERICAL_DEGENERACY.value
    return record


def run_scaling(config: ExperimentConfig, settings: Optional[Settings] = None) -> ScalingResult:
    """Disorder ensembles over the (γ0, N) sweep, aggregated in a fixed order."""
    if config.mode != "SCALING":
        raise HeatflowError(ErrorCode.CONFIG_ERROR, "run_scaling needs a SCALING config", mode=config.mode)
    settings = settings or Settings()
    threads = config.options.threads or settings.threads
    t_a, t_b = config.reservoirs.temperatures
    if t_a == t_b:
        raise HeatflowError(ErrorCode.INVALID_INPUT, "scaling needs T_A != T_B")

    cells = [
        (gamma0, N, r)
        for gamma0 in config.gamma0s
        for N in config.sweep.sizes
        for r in range(config.ensemble.realizations)
    ]
    logger.info("📊 scaling study: %d solves on %d thread(s)", len(cells), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        records = list(pool.map(lambda cell: scaling_cell(config, *cell), cells))

    frame = pd.DataFrame(records).sort_values(["gamma0", "N", "realization"], kind="mergesort").reset_index(drop=True)
    failed = frame["error"] != ""
    grouped = frame.groupby(["gamma0", "N"], sort=True)
    summary = pd.DataFrame(
        {
            "mean_J_over_dT": grouped["J_over_dT"].mean(),
            "std_J_over_dT": grouped["J_over_dT"].std(ddof=0),
            "count": grouped["J_over_dT"].count(),
        }
    )
    summary["failures"] = failed.groupby([frame["gamma0"], frame["N"]]).sum().astype(int)
    aborted = summary["failures"] > MAX_FAILURE_FRACTION * config.ensemble.realizations
    if aborted.any():
        for gamma0, N in summary.index[aborted]:
            logger.warning("cell γ0=%g, N=%d aborted: too many failed realizations", gamma0, N)
        summary.loc[aborted, ["mean_J_over_dT", "std_J_over_dT"]] = np.nan
    summary = summary.reset_index()

    fits: Dict[float, Optional[PowerLawFit]] = {}
    min_n = config.sweep.fit_min_N or 0
    for gamma0, rows in summary.groupby("gamma0", sort=True):
        window = rows[(rows["N"] >= min_n) & rows["mean_J_over_dT"].notna()]
        try:
            fits[float(gamma0)] = fit_power_law(list(zip(window["N"], window["mean_J_over_dT"])))
            logger.info("γ0=%g: slope %.4f, mu_fit %.4f", gamma0, fits[float(gamma0)].slope, fits[float(gamma0)].mu_fit)
        except HeatflowError as e:
            logger.warning("γ0=%g: no power-law fit (%s)", gamma0, e.message)
            fits[float(gamma0)] = None

    return ScalingResult(
        records=frame[["gamma0", "N", "realization", "J_over_dT"]],
        cells=summary[["gamma0", "N", "mean_J_over_dT", "std_J_over_dT", "count", "failures"]],
        fits=fits,
        failures=int(failed.sum()),
    )
