"""Batch command-line front end.

Three subcommands:

    gvm-map      scan pump/signal wavelengths, export GVM angle and coherence
                 length maps as plot-ready CSV
    design       design one source (schemes: pp, cl-scl, mqpm, dc), export
                 the poling structure, JSA, Schmidt spectrum and a summary row
    sweep-range  purity versus spectral range for one or more schemes

Every machine-readable output embeds the run-configuration digest and the
Sellmeier set name, and a fixed seed makes reruns byte-identical.  Exit
codes: 0 success, 2 configuration error, 3 design finished below the purity
threshold (best effort still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    PsoSettings,
    pso_optimize_dc,
    optimize_pump_bandwidth,
    purity_vs_range,
    schmidt_decompose,
    write_curve_csv,
    write_schmidt_csv,
)
from .design import DesignOptions, design_cl_scl
from .dispersion import Axis, DispersionModel, KTP_KATO_2002
from .gvm import (
    EmptyRange,
    PhaseMatchConfig,
    gvm_map,
    phase_mismatch_and_lc,
    write_gvm_map_csv,
)
from .poling import (
    DesignResult,
    DomainArray,
    DutyCycleStructure,
    TargetProfile,
    mqpm_domains,
    periodic_domains,
    write_poling_file,
)
from .spectrum import (
    PumpSpec,
    build_jsa,
    make_grid,
    measure_delta_omega,
    write_jsa_binary,
    write_jsa_csv,
)

__all__ = ["RunConfig", "PRESETS", "main", "run"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BELOW_THRESHOLD = 3

# (pump nm, heralded signal nm, signal axis); the idler follows from energy
# conservation and sits on the other axis.
PRESETS: dict[str, tuple[float, float, str]] = {
    "o-band-i": (710.0, 1310.0, "Z"),
    "o-band-ii": (626.3, 1310.0, "Z"),
    "o-band-iii": (655.0, 1310.0, "Z"),
    "o-band-iv": (779.5, 1310.0, "Z"),
    "o-band-v": (887.3, 1310.0, "Z"),
    "o-band-vi": (710.0, 1310.0, "Y"),
    "o-band-vii": (603.8, 1310.0, "Y"),
    "o-band-viii": (787.8, 1310.0, "Y"),
    "c-band-ix": (643.4, 1550.0, "Z"),
    "c-band-x": (775.0, 1550.0, "Z"),
    "c-band-xi": (797.7, 1550.0, "Z"),
    "c-band-xii": (971.1, 1550.0, "Z"),
    "c-band-xiii": (569.4, 1550.0, "Y"),
    "c-band-xiv": (799.2, 1550.0, "Y"),
}

MQPM_DEFAULT_ORDERS = (1, 3, 5, 7, 9, 11)


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclass
class RunConfig:
    """Fully serializable description of one CLI run."""

    command: str
    preset: str | None = None
    pump_nm: float | None = None
    signal_nm: float | None = None
    signal_axis: str = "Z"
    length_mm: float = 5.0
    scheme: str = "cl-scl"
    r_mult: float = 10.0
    out_dir: str = "."
    seed: int = 0
    sellmeier: str = "ktp-kato-takaoka-2002"
    threads: int = 1
    # gvm-map ranges, nm: (lo, hi, step)
    pump_range_nm: tuple[float, float, float] | None = None
    signal_range_nm: tuple[float, float, float] | None = None
    # sweep-range inputs
    schemes: tuple[str, ...] = ()
    r_list: tuple[float, ...] = ()
    design_dir: str | None = None
    # scheme-specific knobs
    mqpm_orders: tuple[int, ...] = MQPM_DEFAULT_ORDERS
    alpha: float | None = None
    beta_ladder: tuple[float, ...] | None = None
    purity_threshold: float = 0.995
    pso_particles: int = 40
    pso_iterations: int = 200
    pump_bandwidth_nm: float | None = None

    def digest(self) -> str:
        """sha256 over the canonical JSON, omitting execution-only fields
        (out_dir, threads) so identical physics gives identical artifacts."""
        payload = asdict(self)
        payload.pop("out_dir")
        payload.pop("threads")
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
        coerced = dict(data)
        for key in ("pump_range_nm", "signal_range_nm", "schemes", "r_list",
                    "mqpm_orders", "beta_ladder"):
            if coerced.get(key) is not None:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)


def _resolve_model(cfg: RunConfig) -> DispersionModel:
    if cfg.sellmeier in ("", KTP_KATO_2002.name, "default"):
        return KTP_KATO_2002
    path = Path(cfg.sellmeier)
    if not path.exists():
        raise ConfigError(f"sellmeier: no built-in set or file named {cfg.sellmeier!r}")
    return DispersionModel.from_file(path)


def _resolve_case(cfg: RunConfig, model: DispersionModel) -> PhaseMatchConfig:
    if cfg.preset is not None:
        if cfg.preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {cfg.preset!r}")
        pump_nm, signal_nm, axis = PRESETS[cfg.preset]
    else:
        if cfg.pump_nm is None or cfg.signal_nm is None:
            raise ConfigError("pump_nm: required when no preset is given")
        pump_nm, signal_nm, axis = cfg.pump_nm, cfg.signal_nm, cfg.signal_axis
    try:
        return PhaseMatchConfig.from_pump_signal(
            pump_nm * 1e-3,
            signal_nm * 1e-3,
            Axis(axis),
            length_m=cfg.length_mm * 1e-3,
            model=model,
        )
    except ValueError as exc:
        raise ConfigError(f"pump_nm/signal_nm: {exc}") from exc


def _header(cfg: RunConfig) -> list[str]:
    return [f"run_config_digest: {cfg.digest()}", f"sellmeier: {cfg.sellmeier}"]


def _structure_to_dict(structure: DomainArray | DutyCycleStructure) -> dict:
    if isinstance(structure, DomainArray):
        return {
            "kind": "uniform",
            "width_m": structure.width_m,
            "signs": "".join("+" if s > 0 else "-" for s in structure.signs),
        }
    return {
        "kind": "duty-cycle",
        "period_m": structure.period_m,
        "fractions": [float(v) for v in structure.fractions],
    }


def _structure_from_dict(data: dict) -> DomainArray | DutyCycleStructure:
    if data["kind"] == "uniform":
        signs = np.array([1 if ch == "+" else -1 for ch in data["signs"]], dtype=np.int8)
        return DomainArray(width_m=data["width_m"], signs=signs)
    return DutyCycleStructure(
        period_m=data["period_m"], fractions=np.array(data["fractions"])
    )


# -- subcommands ---------------------------------------------------------------


def cmd_gvm_map(cfg: RunConfig) -> int:
    model = _resolve_model(cfg)
    if cfg.pump_range_nm is None or cfg.signal_range_nm is None:
        raise ConfigError("pump_range_nm: gvm-map requires pump and signal ranges")
    axis = Axis(cfg.signal_axis)
    try:
        gmap = gvm_map(
            model,
            (cfg.pump_range_nm[0] * 1e-3, cfg.pump_range_nm[1] * 1e-3),
            (cfg.signal_range_nm[0] * 1e-3, cfg.signal_range_nm[1] * 1e-3),
            axis,
            pump_step_um=cfg.pump_range_nm[2] * 1e-3,
            signal_step_um=cfg.signal_range_nm[2] * 1e-3,
        )
    except EmptyRange as exc:
        raise ConfigError(f"pump_range_nm/signal_range_nm: {exc}") from exc

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_gvm_map_csv(out / "gvm_theta_map.csv", gmap, _header(cfg))
    lc_lines = [f"# {h}" for h in _header(cfg)]
    lc_lines.append("lambda_p_nm,lambda_s_nm,lambda_i_nm,l_c_um")
    for i, lp in enumerate(gmap.lambda_p_um):
        for j, ls in enumerate(gmap.lambda_s_um):
            lc_lines.append(
                f"{lp * 1e3:.4f},{ls * 1e3:.4f},"
                f"{gmap.lambda_i_um[i, j] * 1e3:.4f},{gmap.coherence_length_um[i, j]:.6f}"
            )
    (out / "gvm_lc_map.csv").write_text("\n".join(lc_lines) + "\n")
    (out / "mask_legend.txt").write_text(
        "\n".join(
            [
                *(f"# {h}" for h in _header(cfg)),
                "nan in theta_deg: cell invalid (wavelength outside the transparency",
                "window or signal <= pump) or GVM angle outside the [0, 90] degree map",
                "convention.",
                "nan in l_c_um: cell invalid only.",
            ]
        )
        + "\n"
    )
    (out / "run_config.json").write_text(cfg.to_json() + "\n")
    print(f"gvm-map: wrote {out / 'gvm_theta_map.csv'} and {out / 'gvm_lc_map.csv'}")
    return EXIT_OK


def _design_structure(
    cfg: RunConfig, model: DispersionModel, case: PhaseMatchConfig
) -> DesignResult:
    """Run the scheme selected in the config and return its DesignResult."""
    gp = phase_mismatch_and_lc(model, case)
    lc = gp.coherence_length_m

    if cfg.scheme == "cl-scl":
        options = DesignOptions(
            purity_threshold=cfg.purity_threshold,
            threads=cfg.threads,
            **({"beta_ladder": tuple(cfg.beta_ladder)} if cfg.beta_ladder else {}),
        )
        return design_cl_scl(model, case, options)

    if cfg.scheme == "pp":
        structure = periodic_domains(case.length_m, lc)
        alpha = beta = None
    elif cfg.scheme == "mqpm":
        alpha = cfg.alpha if cfg.alpha is not None else 5.0
        profile = TargetProfile.from_alpha(alpha, case.length_m, math.pi / lc)
        structure = mqpm_domains(case.length_m, lc, list(cfg.mqpm_orders), profile)
        beta = None
    elif cfg.scheme == "dc":
        n_periods = int(math.floor(case.length_m / (2.0 * lc) + 1e-12))
        if cfg.pump_bandwidth_nm is None:
            # seed the duty-cycle optimization with the periodic optimum
            bw0, _ = optimize_pump_bandwidth(model, case, periodic_domains(case.length_m, lc), gp.theta_deg)
        else:
            bw0 = cfg.pump_bandwidth_nm
        pump = PumpSpec.from_bandwidth_nm(case.lambda_p_um, bw0)
        settings = PsoSettings(
            n_particles=cfg.pso_particles,
            n_iterations=cfg.pso_iterations,
            target_purity=cfg.purity_threshold,
        )
        _, result = pso_optimize_dc(model, case, pump, n_periods, settings, seed=cfg.seed)
        return result
    else:
        raise ConfigError(f"scheme: unknown scheme {cfg.scheme!r}")

    if cfg.pump_bandwidth_nm is not None:
        pump = PumpSpec.from_bandwidth_nm(case.lambda_p_um, cfg.pump_bandwidth_nm)
        dw = measure_delta_omega(model, case, structure, pump, gp.theta_deg)
        grid = make_grid(gp.theta_deg, dw, case.omega_s0, case.omega_i0)
        jsa = build_jsa(model, case, structure, pump, grid, mask_invalid=True)
        svals = schmidt_decompose(jsa)
        bw_nm, pur = cfg.pump_bandwidth_nm, float(np.sum(svals.coefficients**4))
    else:
        bw_nm, pur = optimize_pump_bandwidth(model, case, structure, gp.theta_deg)
    return DesignResult(
        domains=structure,
        scheme=cfg.scheme,
        config=case,
        alpha=alpha,
        beta=beta,
        pump_bandwidth_nm=bw_nm,
        purity=pur,
        theta_deg=gp.theta_deg,
        coherence_length_m=lc,
    )


def _fmt(value, spec=".4g", empty="-"):
    return empty if value is None else format(value, spec)


def cmd_design(cfg: RunConfig) -> int:
    model = _resolve_model(cfg)
    case = _resolve_case(cfg, model)
    result = _design_structure(cfg, model, case)

    # periodic baseline purity for the summary row
    if cfg.scheme == "pp":
        result.pp_purity = result.purity
        result.pp_pump_bandwidth_nm = result.pump_bandwidth_nm
    else:
        pp = periodic_domains(case.length_m, result.coherence_length_m)
        result.pp_pump_bandwidth_nm, result.pp_purity = optimize_pump_bandwidth(
            model, case, pp, result.theta_deg
        )

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(cfg)

    pump = PumpSpec.from_bandwidth_nm(case.lambda_p_um, result.pump_bandwidth_nm)
    dw = measure_delta_omega(model, case, result.domains, pump, result.theta_deg)
    grid = make_grid(result.theta_deg, dw, case.omega_s0, case.omega_i0, r_mult=cfg.r_mult)
    jsa = build_jsa(model, case, result.domains, pump, grid, mask_invalid=True)
    schmidt = schmidt_decompose(jsa)

    write_poling_file(
        out / "poling.txt",
        result.domains,
        header={
            "run_config_digest": cfg.digest(),
            "sellmeier": cfg.sellmeier,
            "scheme": result.scheme,
            "alpha": result.alpha,
            "beta": result.beta,
            "l_c_um": f"{result.coherence_length_m * 1e6:.6f}",
            "crystal_length_mm": f"{case.length_m * 1e3:.6f}",
        },
    )
    write_jsa_csv(out / "jsa_abs.csv", jsa, header)
    write_jsa_binary(out / "jsa.bin", jsa, cfg.digest(), cfg.sellmeier)
    write_schmidt_csv(out / "schmidt.csv", schmidt, header)

    summary = {
        "run_config_digest": cfg.digest(),
        "sellmeier": cfg.sellmeier,
        "preset": cfg.preset,
        "lambda_p_nm": case.lambda_p_um * 1e3,
        "lambda_s_nm": case.lambda_s_um * 1e3,
        "lambda_i_nm": case.lambda_i_um * 1e3,
        "signal_axis": case.signal_axis.value,
        "theta_deg": result.theta_deg,
        "l_c_um": result.coherence_length_m * 1e6,
        "scheme": result.scheme,
        "alpha": result.alpha,
        "beta": result.beta,
        "pump_bandwidth_nm": result.pump_bandwidth_nm,
        "purity": result.purity,
        "pp_purity": result.pp_purity,
        "pp_pump_bandwidth_nm": result.pp_pump_bandwidth_nm,
        "below_threshold": result.below_threshold,
        "delta_omega_rad_s": dw,
        "structure": _structure_to_dict(result.domains),
    }
    (out / "design_result.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    (out / "run_config.json").write_text(cfg.to_json() + "\n")

    row = (
        f"{case.lambda_p_um * 1e3:.1f} -> {case.lambda_s_um * 1e3:.1f} + "
        f"{case.lambda_i_um * 1e3:.1f} nm | theta {result.theta_deg:6.2f} deg | "
        f"l_c {result.coherence_length_m * 1e6:6.2f} um | alpha {_fmt(result.alpha, '.1f')} | "
        f"beta {_fmt(result.beta, 'g')} | pump bw {result.pump_bandwidth_nm:.3g} nm | "
        f"P_PP {100 * result.pp_purity:.2f}% | P_opt {100 * result.purity:.2f}%"
    )
    summary_text = "\n".join([*(f"# {h}" for h in header), row]) + "\n"
    (out / "design_summary.txt").write_text(summary_text)
    print(row)
    if result.below_threshold:
        print(
            f"design: purity {result.purity:.4f} below threshold "
            f"{cfg.purity_threshold}; best effort written",
            file=sys.stderr,
        )
        return EXIT_BELOW_THRESHOLD
    return EXIT_OK


def cmd_sweep_range(cfg: RunConfig) -> int:
    model = _resolve_model(cfg)
    case = _resolve_case(cfg, model)
    gp = phase_mismatch_and_lc(model, case)
    if not cfg.schemes:
        raise ConfigError("schemes: sweep-range requires at least one scheme")
    if not cfg.r_list:
        raise ConfigError("r_list: sweep-range requires a list of spectral ranges")

    design_data = None
    if cfg.design_dir is not None:
        path = Path(cfg.design_dir) / "design_result.json"
        if not path.exists():
            raise ConfigError(f"design_dir: missing design artifact {path}")
        design_data = json.loads(path.read_text())

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for scheme in cfg.schemes:
        if scheme == "pp":
            structure = periodic_domains(case.length_m, gp.coherence_length_m)
            if cfg.pump_bandwidth_nm is not None:
                bw = cfg.pump_bandwidth_nm
            else:
                bw, _ = optimize_pump_bandwidth(model, case, structure, gp.theta_deg)
        else:
            if design_data is None:
                raise ConfigError(
                    f"design_dir: scheme {scheme!r} needs an existing design artifact"
                )
            structure = _structure_from_dict(design_data["structure"])
            bw = design_data["pump_bandwidth_nm"]
        pump = PumpSpec.from_bandwidth_nm(case.lambda_p_um, bw)
        curve = purity_vs_range(
            model, case, structure, pump, list(cfg.r_list), gp.theta_deg, tag=scheme
        )
        dest = out / f"purity_vs_range_{scheme}.csv"
        write_curve_csv(dest, curve, _header(cfg) + [f"pump_bandwidth_nm: {bw!r}"])
        written.append(dest)
    (out / "run_config.json").write_text(cfg.to_json() + "\n")
    print("sweep-range: wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("range must be LO:HI:STEP in nm")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="purepole",
        description="Design custom-poled KTP sources of spectrally pure heralded photons",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key-value or JSON config file; flags override it")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named wavelength case")
        p.add_argument("--pump-nm", type=float, dest="pump_nm")
        p.add_argument("--signal-nm", type=float, dest="signal_nm")
        p.add_argument("--signal-axis", choices=["Y", "Z"], dest="signal_axis")
        p.add_argument("--length-mm", type=float, dest="length_mm")
        p.add_argument("--r-mult", type=float, dest="r_mult")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--seed", type=int, dest="seed")
        p.add_argument("--sellmeier", dest="sellmeier", help="set name or coefficient file")
        p.add_argument("--threads", type=int, dest="threads")

    p_map = sub.add_parser("gvm-map", help="scan GVM angle and coherence length maps")
    common(p_map)
    p_map.add_argument("--pump-range-nm", type=_parse_range, dest="pump_range_nm",
                       help="LO:HI:STEP in nm")
    p_map.add_argument("--signal-range-nm", type=_parse_range, dest="signal_range_nm",
                       help="LO:HI:STEP in nm")

    p_design = sub.add_parser("design", help="design and evaluate one source")
    common(p_design)
    p_design.add_argument("--scheme", choices=["pp", "cl-scl", "mqpm", "dc"], dest="scheme")
    p_design.add_argument("--alpha", type=float, dest="alpha",
                          help="Gaussian width factor for mqpm")
    p_design.add_argument("--beta-ladder", dest="beta_ladder",
                          help="comma list overriding the division-factor ladder")
    p_design.add_argument("--purity-threshold", type=float, dest="purity_threshold")
    p_design.add_argument("--mqpm-orders", dest="mqpm_orders",
                          help="comma list of odd QPM orders")
    p_design.add_argument("--pso-particles", type=int, dest="pso_particles")
    p_design.add_argument("--pso-iterations", type=int, dest="pso_iterations")
    p_design.add_argument("--pump-bw-nm", type=float, dest="pump_bandwidth_nm",
                          help="fix the pump bandwidth instead of optimizing it")

    p_sweep = sub.add_parser("sweep-range", help="purity versus spectral range")
    common(p_sweep)
    p_sweep.add_argument("--schemes", dest="schemes",
                         help="comma list from {pp, cl-scl, mqpm, dc}")
    p_sweep.add_argument("--r-list", dest="r_list", help="comma list of R in dw units")
    p_sweep.add_argument("--design-dir", dest="design_dir",
                         help="directory holding design_result.json for optimized schemes")
    p_sweep.add_argument("--pump-bw-nm", type=float, dest="pump_bandwidth_nm")
    return parser


def _read_config_file(path: str) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    data: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config file: malformed line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        data[key.replace("-", "_")] = value
    return data


_TUPLE_KEYS = {"pump_range_nm", "signal_range_nm", "schemes", "r_list",
               "mqpm_orders", "beta_ladder"}
_FLOAT_KEYS = {"pump_nm", "signal_nm", "length_mm", "r_mult", "alpha",
               "purity_threshold", "pump_bandwidth_nm"}
_INT_KEYS = {"seed", "threads", "pso_particles", "pso_iterations"}


def _coerce_config_value(key: str, value):
    if not isinstance(value, str):
        return value
    if key in _TUPLE_KEYS:
        items = value.replace(":", ",").split(",")
        if key == "schemes":
            return tuple(item.strip() for item in items)
        if key == "mqpm_orders":
            return tuple(int(item) for item in items)
        return tuple(float(item) for item in items)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    return value


def build_run_config(argv: list[str]) -> RunConfig:
    args = vars(_build_parser().parse_args(argv))
    config_path = args.pop("config", None)
    merged: dict = {}
    if config_path:
        for key, value in _read_config_file(config_path).items():
            merged[key] = _coerce_config_value(key, value)
    for key, value in args.items():
        if value is None:
            continue
        merged[key] = _coerce_config_value(key, value) if isinstance(value, str) else value
    if "command" not in merged:
        raise ConfigError("command: missing")
    for key in ("schemes", "r_list", "mqpm_orders", "beta_ladder"):
        if key in merged and isinstance(merged[key], str):
            merged[key] = _coerce_config_value(key, merged[key])
    return RunConfig.from_dict(merged)


def run(argv: list[str]) -> int:
    try:
        cfg = build_run_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # argparse exits on bad flags (status 2) and on --help (status 0)
        return int(exc.code or 0)

    handlers = {
        "gvm-map": cmd_gvm_map,
        "design": cmd_design,
        "sweep-range": cmd_sweep_range,
    }
    try:
        return handlers[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
