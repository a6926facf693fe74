"""Schmidt purity, heralding efficiency, pump-bandwidth and duty-cycle optimization.

Heralded single-photon spectral purity is P = sum_j c_j^4 where the c_j are
the normalized singular values of the JSA matrix (sum c_j^2 = 1).  Purity is
invariant under global scaling/phase and under transposition of the matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dispersion import DispersionModel
from .gvm import PhaseMatchConfig, phase_mismatch_and_lc
from .poling import (
    DesignResult,
    DomainArray,
    DutyCycleStructure,
    dc_domains,
    erf_duty_profile,
)
from .spectrum import (
    JointSpectrum,
    PumpSpec,
    build_jsa,
    make_grid,
    measure_delta_omega,
)

__all__ = [
    "ZeroSpectrum",
    "WindowExceedsGrid",
    "NoInteriorMaximum",
    "SchmidtSpectrum",
    "RangeSweepCurve",
    "PsoSettings",
    "schmidt_decompose",
    "purity",
    "heralding_efficiency",
    "heralding_efficiency_extended",
    "optimize_pump_bandwidth",
    "purity_vs_range",
    "pso_optimize_dc",
    "write_schmidt_csv",
    "write_curve_csv",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ZeroSpectrum(ValueError):
    """The JSA matrix is identically zero."""


class WindowExceedsGrid(ValueError):
    """A collection window is not contained in the evaluation grid."""


class NoInteriorMaximum(RuntimeError):
    """The coarse bandwidth scan peaked at a search bound."""


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients c_j: descending, nonnegative, sum c_j^2 = 1."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        object.__setattr__(self, "coefficients", c)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty 1-D array")
        if np.any(c < 0) or np.any(np.diff(c) > 0):
            raise ValueError("coefficients must be nonnegative and descending")
        if abs(float(np.sum(c**2)) - 1.0) > 1e-9:
            raise ValueError("coefficients must satisfy sum c_j^2 = 1")


def schmidt_decompose(jsa: JointSpectrum | np.ndarray) -> SchmidtSpectrum:
    """Normalized singular values of the JSA amplitude matrix."""
    amp = jsa.amplitude if isinstance(jsa, JointSpectrum) else np.asarray(jsa)
    if not np.all(np.isfinite(amp)):
        raise ValueError("JSA contains non-finite entries")
    svals = np.linalg.svd(amp, compute_uv=False)
    total = float(np.sum(svals**2))
    if total == 0.0:
        raise ZeroSpectrum("all singular values vanish")
    return SchmidtSpectrum(coefficients=svals / math.sqrt(total))


def purity(spectrum: SchmidtSpectrum | np.ndarray) -> float:
    """P = sum_j c_j^4; equals 1 iff the spectrum is rank one."""
    c = spectrum.coefficients if isinstance(spectrum, SchmidtSpectrum) else np.asarray(spectrum)
    return float(np.sum(c**4))


def _jsa_purity(jsa: JointSpectrum) -> float:
    return purity(schmidt_decompose(jsa))


def heralding_efficiency(
    jsa: JointSpectrum,
    signal_window: tuple[float, float],
    idler_window: tuple[float, float],
) -> float:
    """Probability the signal lies in its window given the idler is in its own.

    eta = sum |f|^2 over (signal in W_s and idler in W_i)
          / sum |f|^2 over (idler in W_i),
    with the signal marginal taken over the whole (extended) grid.
    """
    ws = jsa.grid.omega_s
    wi = jsa.grid.omega_i
    for (lo, hi), axis in ((signal_window, ws), (idler_window, wi)):
        if lo >= hi:
            raise ValueError("window bounds must be ordered")
        if lo < axis[0] or hi > axis[-1]:
            raise WindowExceedsGrid(
                f"window [{lo:.6e}, {hi:.6e}] not contained in grid "
                f"[{axis[0]:.6e}, {axis[-1]:.6e}]"
            )
    power = np.abs(jsa.amplitude) ** 2
    in_s = (ws >= signal_window[0]) & (ws <= signal_window[1])
    in_i = (wi >= idler_window[0]) & (wi <= idler_window[1])
    denominator = float(power[:, in_i].sum())
    if denominator == 0.0:
        raise ZeroSpectrum("no weight in the idler window")
    numerator = float(power[np.ix_(in_s, in_i)].sum())
    return numerator / denominator


def heralding_efficiency_extended(
    model: DispersionModel,
    cfg: PhaseMatchConfig,
    structure: DomainArray | DutyCycleStructure | None,
    pump: PumpSpec,
    theta_deg: float,
    delta_omega: float,
    r_window: float = 10.0,
    extension: float = 7.0,
    scheme: str = "piecewise",
) -> float:
    """Heralding efficiency for symmetric +-(r_window/2) dw windows, with the
    signal marginal integrated on an `extension`-times-wider grid."""
    grid = make_grid(
        theta_deg, delta_omega, cfg.omega_s0, cfg.omega_i0, r_mult=extension * r_window
    )
    jsa = build_jsa(model, cfg, structure, pump, grid, scheme=scheme, mask_invalid=True)
    half = 0.5 * r_window * delta_omega
    return heralding_efficiency(
        jsa,
        (cfg.omega_s0 - half, cfg.omega_s0 + half),
        (cfg.omega_i0 - half, cfg.omega_i0 + half),
    )


def optimize_pump_bandwidth(
    model: DispersionModel,
    cfg: PhaseMatchConfig,
    structure: DomainArray | DutyCycleStructure | None,
    theta_deg: float,
    scheme: str = "piecewise",
    bounds_nm: tuple[float, float] = (0.05, 50.0),
    n_coarse: int = 21,
    rel_tol: float = 1e-3,
) -> tuple[float, float]:
    """Maximize purity over the pump bandwidth; returns (bandwidth_nm, purity).

    Coarse log-spaced scan followed by golden-section refinement in log
    bandwidth down to a relative tolerance of `rel_tol`; the spectral grid is
    rebuilt (dw re-measured) for every candidate.  Raises NoInteriorMaximum if
    the coarse scan peaks at a bound.
    """

    def purity_at(log_bw: float) -> float:
        pump = PumpSpec.from_bandwidth_nm(cfg.lambda_p_um, math.exp(log_bw))
        dw = measure_delta_omega(model, cfg, structure, pump, theta_deg, scheme=scheme)
        grid = make_grid(theta_deg, dw, cfg.omega_s0, cfg.omega_i0)
        jsa = build_jsa(model, cfg, structure, pump, grid, scheme=scheme, mask_invalid=True)
        return _jsa_purity(jsa)

    logs = np.log(np.geomspace(bounds_nm[0], bounds_nm[1], n_coarse))
    values = [purity_at(x) for x in logs]
    best = int(np.argmax(values))
    if best in (0, n_coarse - 1):
        raise NoInteriorMaximum(
            f"purity maximal at search bound {math.exp(logs[best]):.3g} nm"
        )

    a, b = logs[best - 1], logs[best + 1]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = purity_at(x1), purity_at(x2)
    while (b - a) > rel_tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = purity_at(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = purity_at(x1)
    x_best = 0.5 * (a + b)
    return math.exp(x_best), purity_at(x_best)


@dataclass
class RangeSweepCurve:
    """Purity versus spectral range R (in dw units) for one poling scheme."""

    r_values: np.ndarray
    purities: np.ndarray
    scheme: str
    masked_fractions: np.ndarray = field(default=None)  # type: ignore[assignment]
    delta_omega: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        p = np.asarray(self.purities, dtype=float)
        if np.any(np.diff(r) <= 0):
            raise ValueError("R values must be ascending")
        if np.any((p <= 0) | (p > 1 + 1e-12)):
            raise ValueError("purities must lie in (0, 1]")
        self.r_values = r
        self.purities = p
        if self.masked_fractions is None:
            self.masked_fractions = np.zeros_like(r)


def purity_vs_range(
    model: DispersionModel,
    cfg: PhaseMatchConfig,
    structure: DomainArray | DutyCycleStructure | None,
    pump: PumpSpec,
    r_values: list[float] | np.ndarray,
    theta_deg: float,
    scheme: str = "piecewise",
    delta_omega: float | None = None,
    tag: str | None = None,
) -> RangeSweepCurve:
    """Purity for each spectral range R (in dw units) at the fixed D rule.

    dw is measured once at the R = 10 baseline and frozen for the whole sweep
    so the R axis keeps a single unit; grid points that leave the transparency
    window are masked to zero and the masked fraction reported per point.
    `tag` labels the curve (poling scheme name) in exports.
    """
    r_values = np.asarray(r_values, dtype=float)
    if np.any(r_values < 2.0):
        raise ValueError("spectral range must be at least 2 dw")
    if delta_omega is None:
        delta_omega = measure_delta_omega(model, cfg, structure, pump, theta_deg, scheme=scheme)
    purities = np.empty(r_values.size)
    masked = np.empty(r_values.size)
    for n, r in enumerate(r_values):
        grid = make_grid(theta_deg, delta_omega, cfg.omega_s0, cfg.omega_i0, r_mult=float(r))
        jsa = build_jsa(model, cfg, structure, pump, grid, scheme=scheme, mask_invalid=True)
        purities[n] = _jsa_purity(jsa)
        masked[n] = jsa.masked_fraction
    return RangeSweepCurve(
        r_values=r_values,
        purities=purities,
        scheme=tag if tag is not None else scheme,
        masked_fractions=masked,
        delta_omega=delta_omega,
    )


@dataclass(frozen=True)
class PsoSettings:
    """Constriction-style particle swarm hyperparameters."""

    n_particles: int = 40
    n_iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.49
    social: float = 1.49
    init_spread: float = 0.05
    duty_min: float = 0.02
    duty_max: float = 0.98
    coarse_points: int = 100
    target_purity: float | None = None


def pso_optimize_dc(
    model: DispersionModel,
    cfg: PhaseMatchConfig,
    pump: PumpSpec,
    n_periods: int,
    settings: PsoSettings = PsoSettings(),
    seed: int = 0,
    initial_profile: np.ndarray | None = None,
) -> tuple[np.ndarray, DesignResult]:
    """Particle-swarm optimization of the per-period duty-cycle profile.

    The swarm is initialized around the error-function profile (first
    particle exactly on it; `initial_profile` overrides it), evaluated on a
    coarse `coarse_points`-squared grid, with reflecting bounds; the best
    profile is re-scored on the standard grid.  Fully deterministic for a
    fixed seed.
    """
    gp = phase_mismatch_and_lc(model, cfg)
    lc = gp.coherence_length_m
    expected = int(math.floor(cfg.length_m / (2.0 * lc) + 1e-12))
    if n_periods != expected:
        raise ValueError(f"n_periods must be floor(L / 2 l_c) = {expected}")

    if initial_profile is None:
        init = erf_duty_profile(cfg.length_m, lc, alpha=5.0)
    else:
        init = np.asarray(initial_profile, dtype=float)
        if init.size != n_periods:
            raise ValueError("initial profile size must equal n_periods")
    lo, hi = settings.duty_min, settings.duty_max
    init = np.clip(init, lo, hi)

    dw = measure_delta_omega(
        model, cfg, dc_domains(cfg.length_m, lc, init), pump, gp.theta_deg
    )
    coarse_grid = make_grid(
        gp.theta_deg,
        dw,
        cfg.omega_s0,
        cfg.omega_i0,
        r_mult=10.0,
        step_divisor=settings.coarse_points // 10,
    )

    def score(profile: np.ndarray) -> float:
        structure = dc_domains(cfg.length_m, lc, profile)
        jsa = build_jsa(model, cfg, structure, pump, coarse_grid, mask_invalid=True)
        return _jsa_purity(jsa)

    rng = np.random.default_rng(seed)
    x = np.clip(
        init[None, :]
        + settings.init_spread * rng.uniform(-1.0, 1.0, (settings.n_particles, n_periods)),
        lo,
        hi,
    )
    x[0] = init
    v = np.zeros_like(x)
    best_x = x.copy()
    best_f = np.array([score(p) for p in x])
    g_idx = int(np.argmax(best_f))
    g_x = best_x[g_idx].copy()
    g_f = float(best_f[g_idx])

    exhausted = True
    for _ in range(settings.n_iterations):
        r1 = rng.uniform(size=x.shape)
        r2 = rng.uniform(size=x.shape)
        v = (
            settings.inertia * v
            + settings.cognitive * r1 * (best_x - x)
            + settings.social * r2 * (g_x[None, :] - x)
        )
        x = x + v
        # reflecting bounds
        over = x > hi
        under = x < lo
        x[over] = 2 * hi - x[over]
        x[under] = 2 * lo - x[under]
        v[over | under] *= -1.0
        x = np.clip(x, lo, hi)
        f = np.array([score(p) for p in x])
        improved = f > best_f
        best_x[improved] = x[improved]
        best_f[improved] = f[improved]
        if float(best_f.max()) > g_f:
            g_idx = int(np.argmax(best_f))
            g_x = best_x[g_idx].copy()
            g_f = float(best_f[g_idx])
        if settings.target_purity is not None and g_f >= settings.target_purity:
            exhausted = False
            break

    structure = dc_domains(cfg.length_m, lc, g_x)
    final_dw = measure_delta_omega(model, cfg, structure, pump, gp.theta_deg)
    grid = make_grid(gp.theta_deg, final_dw, cfg.omega_s0, cfg.omega_i0)
    final_purity = _jsa_purity(
        build_jsa(model, cfg, structure, pump, grid, mask_invalid=True)
    )
    result = DesignResult(
        domains=structure,
        scheme="dc",
        config=cfg,
        alpha=None,
        beta=None,
        pump_bandwidth_nm=pump.bandwidth_nm,
        purity=final_purity,
        theta_deg=gp.theta_deg,
        coherence_length_m=lc,
        below_threshold=exhausted and settings.target_purity is not None,
    )
    return g_x, result


def write_schmidt_csv(path: str | Path, spectrum: SchmidtSpectrum, header_lines: list[str] | None = None) -> None:
    lines = [f"# {h}" for h in (header_lines or [])]
    lines.append("j,c_j")
    for j, cj in enumerate(spectrum.coefficients, start=1):
        lines.append(f"{j},{cj:.12e}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_curve_csv(path: str | Path, curve: RangeSweepCurve, header_lines: list[str] | None = None) -> None:
    lines = [f"# {h}" for h in (header_lines or [])]
    lines.append(f"# delta_omega_rad_s: {curve.delta_omega!r}")
    lines.append("R_over_dw,purity,scheme,masked_fraction")
    for r, p, m in zip(curve.r_values, curve.purities, curve.masked_fractions):
        lines.append(f"{r:g},{p:.10f},{curve.scheme},{m:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")
