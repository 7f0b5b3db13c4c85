"""Experiment configuration, sweep driver and tabular output.

An experiment is described by one YAML file whose keys carry explicit
unit suffixes (mass_kg, dt_s, dpsi_max_deg, ...); everything is converted
to normalized quantities once, up front.  For each spatial frequency in
the sweep the reference heading sweep runs once and each requested
strategy's sweep is compared against it, yielding one benefit row per
(frequency, strategy).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import yaml

from windward.dynamics import NormContext, PhysicalUavParams, build_norm_context
from windward.guidance import GuidanceLimits, StrategyKind, guidance_limit_bounds, optimal_loiter_speed
from windward.simulator import EpisodeConfig, SweepError, benefit, heading_sweep
from windward.tracking import TrackingGains
from windward.windfield import WindFieldSpec

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "BenefitRow",
    "default_config_dict",
    "validate_config",
    "load_config",
    "run_experiment",
    "emit_results",
    "load_results",
]

RESULT_COLUMNS = (
    "omega_m",
    "strategy",
    "p_ref_avg",
    "p_strategy_avg",
    "benefit",
    "n_headings",
    "n_invalid",
)

_STRATEGY_NAMES = {
    "airspeed": StrategyKind.AIRSPEED_ONLY,
    "heading": StrategyKind.HEADING_ONLY,
    "combined": StrategyKind.COMBINED,
}


class ConfigError(ValueError):
    """Aggregated configuration problems, one human-readable line each."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def default_config_dict() -> dict:
    """Complete default experiment: ScanEagle-class UAV, 9.5 m/s easterly
    wind, 10 s updates, 5 deg heading increments."""
    return {
        "uav": {
            "mass_kg": 20.0,
            "wing_area_m2": 0.55,
            "c_d0": 0.03,
            "e_max": 12.0,
            "p_max_w": 1400.0,
            "p_min_w": 0.0,
            "v_min_mps": 20.0,
            "v_max_mps": 41.0,
            "c_l_min": 0.0,
            "c_l_max": 1.5,
            "mu_max_deg": 40.0,
        },
        "environment": {
            "v_n_mps": 20.0,
            "rho_air_kgpm3": 1.225,
            "g_mps2": 9.80665,
        },
        "wind": {
            "w_m0_mps": 9.5,
            "psi_w_deg": 90.0,
            "a_x": 0.4,
            "a_y": 0.4,
            # rad per normalized length unit (v_n^2/g, about 40.8 m here)
            "omega_m": [0.3],
        },
        "guidance": {
            "dv_max_mps": 1.524,  # 5 ft/s
            "dpsi_max_deg": 30.0,
            "epsilon": 1.0e-4,
            "eta": 1.0,
        },
        "tracking": {
            "k_v_per_s": 0.5,
            "k_psi_per_s": 0.5,
            "k_gamma_per_s": 0.5,
        },
        "episode": {
            "dt_s": 10.0,
            "steps_per_update": 50,
            "num_updates": 50,
            "dpsi0_deg": 5.0,
        },
        "strategies": ["airspeed", "heading", "combined"],
        "output": {
            "path": "results.csv",
            "format": "csv",
        },
    }


@dataclass
class ExperimentConfig:
    params: PhysicalUavParams
    ctx: NormContext
    w_m0_mps: float
    psi_w_rad: float
    a_x: float
    a_y: float
    omega_m_list: list
    strategies: list
    gains: TrackingGains
    limits: GuidanceLimits
    dt_s: float
    steps_per_update: int
    num_updates: int
    dpsi0_deg: float
    output_path: str
    output_format: str
    warnings: list = field(default_factory=list)

    def wind_spec(self, omega_m: float) -> WindFieldSpec:
        return WindFieldSpec(
            w_m0_mps=self.w_m0_mps,
            v_n_mps=self.ctx.v_n_mps,
            a_x=self.a_x,
            a_y=self.a_y,
            omega_mx=omega_m,
            omega_my=omega_m,
            psi_w_rad=self.psi_w_rad,
        )

    def episode_template(
        self, omega_m: float, strategy: StrategyKind, backend: str = "auto"
    ) -> EpisodeConfig:
        return EpisodeConfig(
            params=self.params,
            ctx=self.ctx,
            wind=self.wind_spec(omega_m),
            gains=self.gains,
            limits=self.limits,
            strategy=strategy,
            dt_s=self.dt_s,
            steps_per_update=self.steps_per_update,
            num_updates=self.num_updates,
            backend=backend,
        )


@dataclass
class BenefitRow:
    """One (spatial frequency, strategy) comparison against the reference."""

    omega_m: float
    strategy: str  # "airspeed" | "heading" | "combined"
    p_ref_avg: float
    p_strategy_avg: float
    benefit: float
    n_headings: int
    n_invalid: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def strategy_id(self) -> int:
        return _STRATEGY_NAMES[self.strategy].strategy_id

    def to_record(self) -> dict:
        return {
            "omega_m": self.omega_m,
            "strategy": self.strategy,
            "p_ref_avg": self.p_ref_avg,
            "p_strategy_avg": self.p_strategy_avg,
            "benefit": self.benefit,
            "n_headings": self.n_headings,
            "n_invalid": self.n_invalid,
        }


def _require_number(errors, section, key, value, minimum=None, maximum=None):
    path = f"{section}.{key}"
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    v = float(value)
    if minimum is not None and v < minimum:
        errors.append(f"{path}: {v} is below the minimum {minimum}")
    if maximum is not None and v > maximum:
        errors.append(f"{path}: {v} is above the maximum {maximum}")
    return v


def _check_unknown_keys(errors, raw: dict, defaults: dict):
    for section, content in raw.items():
        if section not in defaults:
            errors.append(f"{section}: unknown section")
            continue
        if isinstance(defaults[section], dict):
            if not isinstance(content, dict):
                errors.append(f"{section}: expected a mapping")
                continue
            for key in content:
                if key not in defaults[section]:
                    errors.append(f"{section}.{key}: unknown key")


def _merged(raw: dict) -> dict:
    merged = default_config_dict()
    for section, content in raw.items():
        if isinstance(content, dict) and isinstance(merged.get(section), dict):
            merged[section].update(content)
        else:
            merged[section] = content
    return merged


def validate_config(raw) -> ExperimentConfig:
    """Build an ExperimentConfig from YAML text or a dict.

    Unknown keys are rejected; all failed invariants are aggregated into
    one ConfigError rather than stopping at the first.  Omitted keys take
    the documented defaults.
    """
    if isinstance(raw, str):
        raw = yaml.safe_load(raw) or {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a mapping of sections"])

    errors: list
    errors = []
    _check_unknown_keys(errors, raw, default_config_dict())
    cfg = _merged(raw)
    warnings = []

    u = cfg["uav"]
    for key in ("mass_kg", "wing_area_m2", "c_d0", "e_max", "p_max_w"):
        _require_number(errors, "uav", key, u[key], minimum=1e-12)
    _require_number(errors, "uav", "p_min_w", u["p_min_w"])
    _require_number(errors, "uav", "v_min_mps", u["v_min_mps"], minimum=1e-12)
    _require_number(errors, "uav", "v_max_mps", u["v_max_mps"], minimum=1e-12)
    _require_number(errors, "uav", "c_l_min", u["c_l_min"], minimum=0.0)
    _require_number(errors, "uav", "c_l_max", u["c_l_max"], minimum=1e-12)
    _require_number(errors, "uav", "mu_max_deg", u["mu_max_deg"], minimum=1e-9, maximum=90.0 - 1e-9)

    e = cfg["environment"]
    for key in ("v_n_mps", "rho_air_kgpm3", "g_mps2"):
        _require_number(errors, "environment", key, e[key], minimum=1e-12)

    w = cfg["wind"]
    _require_number(errors, "wind", "w_m0_mps", w["w_m0_mps"], minimum=0.0)
    _require_number(errors, "wind", "psi_w_deg", w["psi_w_deg"])
    _require_number(errors, "wind", "a_x", w["a_x"])
    _require_number(errors, "wind", "a_y", w["a_y"])
    if not isinstance(w["omega_m"], list) or not w["omega_m"]:
        errors.append("wind.omega_m: expected a non-empty list of frequencies")
    else:
        for i, om in enumerate(w["omega_m"]):
            _require_number(errors, "wind", f"omega_m[{i}]", om, minimum=0.0)

    g = cfg["guidance"]
    _require_number(errors, "guidance", "dv_max_mps", g["dv_max_mps"], minimum=1e-12)
    _require_number(errors, "guidance", "dpsi_max_deg", g["dpsi_max_deg"], minimum=1e-12)
    _require_number(errors, "guidance", "epsilon", g["epsilon"], minimum=1e-300)
    _require_number(errors, "guidance", "eta", g["eta"], minimum=1e-12, maximum=1.0)

    t = cfg["tracking"]
    for key in ("k_v_per_s", "k_psi_per_s", "k_gamma_per_s"):
        _require_number(errors, "tracking", key, t[key], minimum=1e-12)

    ep = cfg["episode"]
    _require_number(errors, "episode", "dt_s", ep["dt_s"], minimum=1e-12)
    _require_number(errors, "episode", "dpsi0_deg", ep["dpsi0_deg"], minimum=1e-9)
    for key in ("steps_per_update", "num_updates"):
        val = ep[key]
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            errors.append(f"episode.{key}: expected an integer >= 1, got {val!r}")
    if isinstance(ep["dpsi0_deg"], (int, float)):
        n = round(360.0 / ep["dpsi0_deg"]) if ep["dpsi0_deg"] else 0
        if n < 1 or abs(n * ep["dpsi0_deg"] - 360.0) > 1e-9:
            errors.append(f"episode.dpsi0_deg: {ep['dpsi0_deg']} must divide 360")

    strategies = cfg["strategies"]
    if not isinstance(strategies, list) or not strategies:
        errors.append("strategies: expected a non-empty list")
        strategies = []
    strategy_kinds = []
    for name in strategies:
        if name not in _STRATEGY_NAMES:
            errors.append(
                f"strategies: unknown strategy {name!r} "
                f"(choose from {sorted(_STRATEGY_NAMES)})"
            )
        else:
            strategy_kinds.append(_STRATEGY_NAMES[name])

    out = cfg["output"]
    if not isinstance(out.get("path"), str) or not out["path"]:
        errors.append("output.path: expected a non-empty string")
    if out.get("format") not in ("csv", "json"):
        errors.append("output.format: expected 'csv' or 'json'")

    if errors:
        raise ConfigError(errors)

    try:
        params = PhysicalUavParams(
            mass_kg=float(u["mass_kg"]),
            wing_area_m2=float(u["wing_area_m2"]),
            c_d0=float(u["c_d0"]),
            e_max=float(u["e_max"]),
            p_max_w=float(u["p_max_w"]),
            p_min_w=float(u["p_min_w"]),
            v_max_mps=float(u["v_max_mps"]),
            v_min_mps=float(u["v_min_mps"]),
            c_l_max=float(u["c_l_max"]),
            c_l_min=float(u["c_l_min"]),
            mu_max_rad=math.radians(float(u["mu_max_deg"])),
        )
        ctx = build_norm_context(
            params,
            v_n_mps=float(e["v_n_mps"]),
            rho_air_kgpm3=float(e["rho_air_kgpm3"]),
            g_mps2=float(e["g_mps2"]),
        )
        limits = GuidanceLimits(
            dv_max=ctx.speed_bar(float(g["dv_max_mps"])),
            dpsi_max_rad=math.radians(float(g["dpsi_max_deg"])),
            v_bar_min=ctx.v_min_bar,
            v_bar_max=ctx.v_max_bar,
            dt_bar=ctx.time_bar(float(ep["dt_s"])),
            epsilon=float(g["epsilon"]),
            eta=float(g["eta"]),
        )
        gains = TrackingGains(
            k_v_per_s=float(t["k_v_per_s"]),
            k_psi_per_s=float(t["k_psi_per_s"]),
            k_gamma_per_s=float(t["k_gamma_per_s"]),
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc

    # The per-update increments must be achievable by the closed loop at
    # the loiter speed, otherwise commanded steps silently lag.
    v_star = optimal_loiter_speed(ctx)
    dv_bound, dpsi_bound = guidance_limit_bounds(v_star, ctx, params, limits.dt_bar)
    if limits.dv_max > dv_bound:
        errors.append(
            f"guidance.dv_max_mps: configured {limits.dv_max:.6g} (normalized) "
            f"exceeds the achievable bound {dv_bound:.6g} at loiter speed"
        )
    if limits.dpsi_max_rad > dpsi_bound:
        errors.append(
            f"guidance.dpsi_max_deg: configured {limits.dpsi_max_rad:.6g} rad "
            f"exceeds the achievable bound {dpsi_bound:.6g} rad at loiter speed"
        )
    if errors:
        raise ConfigError(errors)

    if abs(float(w["a_x"])) + abs(float(w["a_y"])) > 1.0:
        warnings.append(
            "wind.a_x + wind.a_y amplitudes exceed 1 in magnitude; "
            "the wind magnitude can go negative (direction flips)"
        )

    return ExperimentConfig(
        params=params,
        ctx=ctx,
        w_m0_mps=float(w["w_m0_mps"]),
        psi_w_rad=math.radians(float(w["psi_w_deg"])),
        a_x=float(w["a_x"]),
        a_y=float(w["a_y"]),
        omega_m_list=[float(om) for om in w["omega_m"]],
        strategies=strategy_kinds,
        gains=gains,
        limits=limits,
        dt_s=float(ep["dt_s"]),
        steps_per_update=int(ep["steps_per_update"]),
        num_updates=int(ep["num_updates"]),
        dpsi0_deg=float(ep["dpsi0_deg"]),
        output_path=out["path"],
        output_format=out["format"],
        warnings=warnings,
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r") as fp:
        return validate_config(fp.read())


def _box_violations(episodes, limits: GuidanceLimits) -> int:
    """Count emitted command increments outside the per-update box."""
    bad = 0
    for ep in episodes:
        for t_bar, v0, psi0, dv, dpsi, _ in ep.adjustments:
            dv_lo = max(-limits.dv_max, limits.v_bar_min - v0)
            dv_hi = min(limits.dv_max, limits.v_bar_max - v0)
            dpsi_lo = max(-limits.dpsi_max_rad, limits.psi_min_rad - psi0)
            dpsi_hi = min(limits.dpsi_max_rad, limits.psi_max_rad - psi0)
            if not (dv_lo <= dv <= dv_hi and dpsi_lo <= dpsi <= dpsi_hi):
                bad += 1
    return bad


def _aggregate_diagnostics(sweeps, limits: GuidanceLimits) -> dict:
    episodes = [ep for sweep in sweeps for ep in sweep.episodes]
    counts = {"c_l_low": 0, "c_l_high": 0, "mu": 0, "p_low": 0, "p_high": 0}
    for ep in episodes:
        for key in counts:
            counts[key] += ep.saturation_counts[key]
    return {
        "n_singular": sum(ep.n_singular for ep in episodes),
        "min_c_l": min(ep.min_c_l for ep in episodes),
        "max_c_l": max(ep.max_c_l for ep in episodes),
        "max_abs_mu_rad": max(ep.max_abs_mu_rad for ep in episodes),
        "box_violations": _box_violations(episodes, limits),
        "saturation_counts": counts,
    }


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1, backend: str = "auto", progress=None
) -> list:
    """Run the full sweep grid and return one BenefitRow per
    (spatial frequency, strategy).

    The reference sweep runs once per frequency and is shared by that
    frequency's rows.  A sweep failure (any invalid episode) aborts the
    affected rows but the remaining frequencies still run; the failure is
    recorded as a row with NaN powers and the error message in the
    diagnostics.
    """
    pool = None
    rows = []
    try:
        if workers > 1:
            import multiprocessing

            pool = multiprocessing.get_context("spawn").Pool(workers)
        for omega in cfg.omega_m_list:
            template = cfg.episode_template(omega, StrategyKind.REFERENCE, backend)
            try:
                ref = heading_sweep(template, cfg.dpsi0_deg, pool)
            except SweepError as exc:
                for strategy in cfg.strategies:
                    rows.append(
                        BenefitRow(
                            omega_m=omega,
                            strategy=strategy.value,
                            p_ref_avg=math.nan,
                            p_strategy_avg=math.nan,
                            benefit=math.nan,
                            n_headings=0,
                            n_invalid=-1,
                            diagnostics={"error": f"reference sweep failed: {exc}"},
                        )
                    )
                continue
            for strategy in cfg.strategies:
                if progress is not None:
                    progress(omega, strategy.value)
                try:
                    sweep = heading_sweep(
                        replace(template, strategy=strategy), cfg.dpsi0_deg, pool
                    )
                except SweepError as exc:
                    rows.append(
                        BenefitRow(
                            omega_m=omega,
                            strategy=strategy.value,
                            p_ref_avg=ref.avg_power,
                            p_strategy_avg=math.nan,
                            benefit=math.nan,
                            n_headings=len(ref.per_heading_power),
                            n_invalid=-1,
                            diagnostics={"error": str(exc)},
                        )
                    )
                    continue
                rows.append(
                    BenefitRow(
                        omega_m=omega,
                        strategy=strategy.value,
                        p_ref_avg=ref.avg_power,
                        p_strategy_avg=sweep.avg_power,
                        benefit=benefit(ref.avg_power, sweep.avg_power),
                        n_headings=len(sweep.per_heading_power),
                        n_invalid=0,
                        diagnostics=_aggregate_diagnostics([ref, sweep], cfg.limits),
                    )
                )
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return rows


def _fmt_float(x: float) -> str:
    return f"{x:.17g}"


def emit_results(rows, fmt: str, path: str) -> None:
    """Write benefit rows as CSV or JSON with 17-significant-digit floats."""
    if not rows:
        raise ValueError("no result rows to emit")
    records = [row.to_record() for row in rows]
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fp:
                writer = csv.writer(fp)
                writer.writerow(RESULT_COLUMNS)
                for rec in records:
                    writer.writerow(
                        [
                            _fmt_float(rec[c]) if isinstance(rec[c], float) else rec[c]
                            for c in RESULT_COLUMNS
                        ]
                    )
        elif fmt == "json":
            parts = []
            for rec in records:
                fields = ", ".join(
                    f"{json.dumps(c)}: "
                    + (_fmt_float(rec[c]) if isinstance(rec[c], float) else json.dumps(rec[c]))
                    for c in RESULT_COLUMNS
                )
                parts.append("  {" + fields + "}")
            with open(path, "w") as fp:
                fp.write("[\n" + ",\n".join(parts) + "\n]\n")
        else:
            raise ValueError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def load_results(path: str, fmt: str) -> list:
    """Read emitted results back as records (inverse of emit_results)."""
    if fmt == "csv":
        with open(path, newline="") as fp:
            reader = csv.DictReader(fp)
            records = []
            for row in reader:
                records.append(
                    {
                        "omega_m": float(row["omega_m"]),
                        "strategy": row["strategy"],
                        "p_ref_avg": float(row["p_ref_avg"]),
                        "p_strategy_avg": float(row["p_strategy_avg"]),
                        "benefit": float(row["benefit"]),
                        "n_headings": int(row["n_headings"]),
                        "n_invalid": int(row["n_invalid"]),
                    }
                )
            return records
    if fmt == "json":
        with open(path) as fp:
            return json.load(fp)
    raise ValueError(f"unknown output format {fmt!r}")
