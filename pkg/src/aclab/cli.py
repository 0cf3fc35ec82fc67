"""Experiment runner: parses flat key-value configs, executes the selected
analyses on a scenario, and writes CSV tables plus a JSON summary.

Exit codes: 0 success, 1 analysis failure (or tolerance warning under
--strict), 2 config error. CSV bodies are byte-identical across reruns of
the same config; timestamps live only in the summary metadata.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fields import Grid, ZERO_FLUX, PERIODIC
from .measures import (AnalysisParams, corollary_holder_check,
                       diffuse_mean_curvature_norm, eta_lq_norm,
                       first_variation_identity, norm_report,
                       smooth_test_field)
from .monotonicity import monotonicity_report, slab_report
from .proofdevices import GDeltaParams, g_delta_ledger
from .quantization import quantization_check
from .scenarios import (ConstantProfile, LayerStackProfile, RadialProfile,
                        Scenario, ScenarioError, SolvedBubbleProfile,
                        SolvedFromForcingProfile, build, default_center,
                        default_lines, default_radii, standard_corpus)

ANALYSES = ("norms", "monotonicity", "slab", "quantize", "gdelta",
            "firstvar", "sweep")

# Tolerances reported as pass/warn flags in the summary (--strict escalates
# warnings to failures).
TOLERANCES = {
    "monotonicity.aggregate": 0.05,
    "slab.aggregate": 0.05,
    "quantize.max_residual": 0.05,
    "firstvar.residual": 1e-3,
    "gdelta.margin": -1e-10,
    "norms.excluded_mass_fraction": 1e-6,
}


class ConfigError(ValueError):
    """The config file cannot be parsed or validated."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines with dotted section keys and '#' comments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {value!r}") from exc


def _ints(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {value!r}") from exc


def _bool(value: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {value!r}")


@dataclass
class RunConfig:
    scenario: Scenario
    analyses: tuple[str, ...]
    out_dir: Path
    strict: bool = False
    threads: int = 1
    geometry: dict = field(default_factory=dict)


def _inline_grid(kv: dict, default: Grid = None) -> Grid:
    if not any(k.startswith("grid.") for k in kv):
        if default is not None:
            return default
        raise ConfigError("inline scenario needs grid.extent and grid.points")
    try:
        extent = _floats(kv["grid.extent"])
        points = _ints(kv["grid.points"])
    except KeyError as exc:
        raise ConfigError(f"missing grid key: {exc}") from exc
    boundary = kv.get("grid.boundary", ZERO_FLUX)
    if boundary not in (ZERO_FLUX, PERIODIC):
        raise ConfigError(f"unknown grid.boundary {boundary!r}")
    origin = _floats(kv["grid.origin"]) if "grid.origin" in kv else None
    try:
        return Grid(extent=extent, points=points, boundary=boundary,
                    origin=origin)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _analysis_params(kv: dict) -> AnalysisParams:
    kwargs = {}
    if "analysis.q0" in kv:
        kwargs["q0"] = float(kv["analysis.q0"])
    if "analysis.tau" in kv:
        kwargs["tau"] = float(kv["analysis.tau"])
    if "analysis.supersample" in kv:
        kwargs["supersample"] = int(kv["analysis.supersample"])
    if "analysis.grad_threshold" in kv:
        kwargs["grad_threshold"] = float(kv["analysis.grad_threshold"])
    try:
        return AnalysisParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _inline_scenario(kv: dict) -> Scenario:
    kind = kv["scenario.kind"]
    grid = _inline_grid(kv)
    epsilons = _floats(kv.get("scenario.epsilon", "0.05"))
    if any(e <= 0 for e in epsilons):
        raise ConfigError("scenario.epsilon entries must be positive")
    seed = int(kv.get("scenario.seed", "0"))
    if kind in ("planar", "stack"):
        positions = _floats(kv.get("scenario.positions", "0.0"))
        axis = int(kv.get("scenario.axis", "-1"))
        first_sign = int(kv.get("scenario.first_sign", "1"))
        profile = LayerStackProfile(positions=positions, axis=axis,
                                    first_sign=first_sign)
    elif kind == "circle":
        profile = RadialProfile(
            center=_floats(kv.get("scenario.center", "0,0")),
            radius=float(kv.get("scenario.radius", "0.5")))
    elif kind == "bubble":
        profile = SolvedBubbleProfile(
            center=_floats(kv.get("scenario.center", "0,0")),
            radius=float(kv.get("scenario.radius", "0.5")))
    elif kind == "constant":
        profile = ConstantProfile(float(kv.get("scenario.value", "0.0")))
    elif kind == "solved-circle":
        profile = SolvedFromForcingProfile(
            base=RadialProfile(center=_floats(kv.get("scenario.center", "0,0")),
                               radius=float(kv.get("scenario.radius", "0.5"))),
            noise_amplitude=float(kv.get("scenario.noise", "0.01")))
    else:
        raise ConfigError(f"unknown scenario.kind {kind!r}")
    try:
        return Scenario(name=kv.get("scenario.name", f"inline-{kind}"),
                        grid=grid, epsilons=epsilons, profile=profile,
                        params=_analysis_params(kv), seed=seed)
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Path, out_override=None, strict_override=None,
                threads: int = 1) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    kv = parse_config_text(text)

    if "scenario" in kv:
        corpus = standard_corpus()
        name = kv["scenario"]
        if name not in corpus:
            raise ConfigError(f"unknown scenario {name!r}; "
                              f"known: {', '.join(sorted(corpus))}")
        scenario = corpus[name]
        if "scenario.epsilon" in kv:
            eps = _floats(kv["scenario.epsilon"])
            if any(e <= 0 for e in eps):
                raise ConfigError("scenario.epsilon entries must be positive")
            try:
                scenario = Scenario(
                    name=scenario.name, grid=scenario.grid, epsilons=eps,
                    profile=scenario.profile, params=_analysis_params(kv),
                    seed=scenario.seed, solver_tol=scenario.solver_tol,
                    solver_max_iter=scenario.solver_max_iter)
            except ScenarioError as exc:
                raise ConfigError(str(exc)) from exc
        elif any(k.startswith("analysis.") for k in kv):
            scenario = Scenario(
                name=scenario.name, grid=scenario.grid,
                epsilons=scenario.epsilons, profile=scenario.profile,
                params=_analysis_params(kv), seed=scenario.seed,
                solver_tol=scenario.solver_tol,
                solver_max_iter=scenario.solver_max_iter)
    elif "scenario.kind" in kv:
        scenario = _inline_scenario(kv)
    else:
        raise ConfigError("config needs 'scenario = <name>' or 'scenario.kind'")

    analyses = tuple(a.strip() for a in kv.get("analyses", "norms").split(",")
                     if a.strip())
    if not analyses:
        raise ConfigError("at least one analysis must be selected")
    for a in analyses:
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis {a!r}; known: {ANALYSES}")

    out_dir = Path(out_override) if out_override else Path(kv.get("out", "out"))
    strict = _bool(kv["strict"]) if "strict" in kv else False
    if strict_override is not None:
        strict = strict_override

    geometry = {k: v for k, v in kv.items()
                if k.split(".", 1)[0] in ("monotonicity", "slab", "quantize",
                                          "gdelta", "firstvar")}
    return RunConfig(scenario=scenario, analyses=analyses, out_dir=out_dir,
                     strict=strict, threads=max(1, int(threads)),
                     geometry=geometry)


def _geometry_radii(cfg: RunConfig, key: str, scenario, eps, center):
    if key in cfg.geometry:
        start, stop, count = _floats(cfg.geometry[key])
        return np.linspace(start, stop, int(count))
    return default_radii(scenario, eps, center)


# ---------------------------------------------------------------------------
# Analyses
# ---------------------------------------------------------------------------

def _flag(value, key, larger_is_bad=True):
    tol = TOLERANCES[key]
    ok = value <= tol if larger_is_bad else value >= tol
    return "pass" if ok else "warn"


def _run_norms(cfg: RunConfig, states):
    scenario = cfg.scenario
    rows = []
    values = {}
    flags = {}
    multi = len(states) > 1
    for eps, st in zip(scenario.epsilons, states):
        rep = norm_report(st, scenario.params)
        hold = corollary_holder_check(st, s=3.0, t=6.0, params=scenario.params)
        scalars = {
            "total_energy": rep.total_energy,
            "sup_u": rep.sup_u,
            "lambda_hat": rep.lambda_hat,
            "sup_eps_grad": rep.sup_eps_grad,
            "xi_plus_mass": rep.xi_plus_mass,
            "xi_abs_mass": rep.xi_abs_mass,
            "f_l2_over_eps": rep.f_l2_over_eps,
            "excluded_mass_fraction": rep.excluded_mass_fraction,
            "residual_norm": st.residual_norm,
            "holder_lhs": hold.lhs,
            "holder_rhs": hold.rhs,
            "holder_holds": 1.0 if hold.holds else 0.0,
        }
        for name, val in scalars.items():
            label = f"{name}@eps={eps:g}" if multi else name
            rows.append((label, _fmt(val)))
            values[label] = val
        flags[f"excluded_mass@eps={eps:g}" if multi else "excluded_mass"] = \
            _flag(rep.excluded_mass_fraction, "norms.excluded_mass_fraction")
        if not hold.holds:
            flags["holder"] = "warn"
    return ("norms.csv", ("name", "value"), rows,
            {"values": values, "flags": flags})


def _run_sweep(cfg: RunConfig, states):
    scenario = cfg.scenario
    rows = []
    values = {}
    xi_plus = []
    for eps, st in zip(scenario.epsilons, states):
        rep = norm_report(st, scenario.params)
        xi_plus.append(rep.xi_plus_mass)
        rows.append((_fmt(eps), _fmt(rep.xi_plus_mass),
                     _fmt(rep.xi_abs_mass / rep.total_energy
                          if rep.total_energy > 0 else 0.0),
                     _fmt(rep.lambda_hat), _fmt(rep.sup_eps_grad),
                     _fmt(rep.total_energy)))
        values[f"xi_plus_mass@eps={eps:g}"] = rep.xi_plus_mass
    decreasing = all(b < a for a, b in zip(xi_plus, xi_plus[1:]))
    flags = {"xi_plus_decreasing": "pass" if (decreasing or len(xi_plus) < 2)
             else "warn"}
    header = ("epsilon", "xi_plus_mass", "xi_abs_over_mu", "lambda_hat",
              "sup_eps_grad", "total_energy")
    return ("sweep.csv", header, rows, {"values": values, "flags": flags})


def _run_monotonicity(cfg: RunConfig, states):
    scenario = cfg.scenario
    eps, st = scenario.epsilons[0], states[0]
    center = (_floats(cfg.geometry["monotonicity.center"])
              if "monotonicity.center" in cfg.geometry
              else default_center(scenario))
    radii = _geometry_radii(cfg, "monotonicity.radii", scenario, eps, center)
    rep = monotonicity_report(st, center, radii,
                              supersample=scenario.params.supersample)
    rows = [tuple(_fmt(v) for v in row)
            for row in zip(rep.radii, rep.ratio, rep.lhs, rep.term_xi,
                           rep.term_boundary, rep.term_forcing, rep.residual)]
    header = ("r", "ratio", "lhs", "term_xi", "term_boundary",
              "term_forcing", "residual")
    frag = {"values": {"aggregate_residual": rep.aggregate, "scale": rep.scale},
            "flags": {"aggregate": _flag(rep.aggregate, "monotonicity.aggregate")}}
    return ("monotonicity.csv", header, rows, frag)


def _run_slab(cfg: RunConfig, states):
    scenario = cfg.scenario
    eps, st = scenario.epsilons[0], states[0]
    g = scenario.grid
    center = (_floats(cfg.geometry["slab.center"])
              if "slab.center" in cfg.geometry else default_center(scenario))
    if "slab.t" in cfg.geometry:
        t_lo, t_hi = _floats(cfg.geometry["slab.t"])
    else:
        # widest slab clearing the default radii's sphere poles by > 2h
        t_lo = g.lo[-1] + 0.5 * g.h
        t_hi = g.hi[-1] - 0.5 * g.h
    radii = _geometry_radii(cfg, "slab.radii", scenario, eps, center)
    rep = slab_report(st, center, radii, t_lo, t_hi,
                      supersample=scenario.params.supersample)
    rows = [tuple(_fmt(v) for v in row)
            for row in zip(rep.radii, rep.ratio, rep.lhs, rep.term_xi,
                           rep.term_boundary, rep.term_forcing,
                           rep.term_plane_lo, rep.term_plane_hi, rep.residual)]
    header = ("r", "ratio", "lhs", "term_xi", "term_boundary", "term_forcing",
              "term_plane_lo", "term_plane_hi", "residual")
    frag = {"values": {"aggregate_residual": rep.aggregate, "scale": rep.scale},
            "flags": {"aggregate": _flag(rep.aggregate, "slab.aggregate")}}
    return ("slab.csv", header, rows, frag)


def _run_quantize(cfg: RunConfig, states):
    scenario = cfg.scenario
    eps, st = scenario.epsilons[0], states[0]
    tau = (float(cfg.geometry["quantize.tau"])
           if "quantize.tau" in cfg.geometry else scenario.params.tau)
    lines = default_lines(scenario, eps)
    rep = quantization_check(st, lines, tau=tau)
    rows = []
    for r in rep.rows:
        pot_min = min(r.potential_per_layer) if r.potential_per_layer else 0.0
        pot_max = max(r.potential_per_layer) if r.potential_per_layer else 0.0
        rows.append((str(r.line_id), str(r.layer_count), _fmt(r.theta_hat),
                     str(r.nearest_k), _fmt(r.quantization_residual),
                     _fmt(pot_min), _fmt(pot_max)))
    header = ("line_id", "K", "theta_hat", "nearest_k", "residual",
              "potential_per_layer_min", "potential_per_layer_max")
    frag = {"values": {"mean_residual": rep.mean_residual,
                       "max_residual": rep.max_residual,
                       "mean_theta_hat": rep.mean_theta_hat},
            "flags": {"max_residual": _flag(rep.max_residual,
                                            "quantize.max_residual")}}
    return ("quantize.csv", header, rows, frag)


def _run_gdelta(cfg: RunConfig, states):
    deltas = (_floats(cfg.geometry["gdelta.delta"])
              if "gdelta.delta" in cfg.geometry else (0.1, 0.01))
    c0 = (float(cfg.geometry["gdelta.c0"])
          if "gdelta.c0" in cfg.geometry else 2.0)
    rows = []
    values = {}
    worst = np.inf
    for delta in deltas:
        led = g_delta_ledger(GDeltaParams(delta=delta, c0=c0))
        for name, margin in (("lower_bound", led.margin_lower),
                             ("derivative_bound", led.margin_derivative),
                             ("concavity", led.margin_concavity),
                             ("differential", led.margin_differential)):
            label = f"{name}[delta={delta:g}]"
            rows.append((label, _fmt(margin)))
            values[label] = margin
            worst = min(worst, margin)
        values[f"upper_constant[delta={delta:g}]"] = led.upper_constant
    flags = {"margins": "pass" if worst >= TOLERANCES["gdelta.margin"]
             else "warn"}
    return ("gdelta.csv", ("inequality", "min_margin"), rows,
            {"values": values, "flags": flags})


def _run_firstvar(cfg: RunConfig, states):
    scenario = cfg.scenario
    st = states[0]
    count = (int(cfg.geometry["firstvar.count"])
             if "firstvar.count" in cfg.geometry else 5)
    seed = (int(cfg.geometry["firstvar.seed"])
            if "firstvar.seed" in cfg.geometry else scenario.seed + 100)
    params = scenario.params
    q0 = params.resolve_q0(st.grid.ndim)
    lam, _ = diffuse_mean_curvature_norm(st, params)
    rows = []
    worst = 0.0
    duality_ok = True
    for k in range(count):
        eta = smooth_test_field(st.grid, seed + k)
        res = first_variation_identity(st, eta, params)
        bound = lam ** (1.0 / q0) * eta_lq_norm(st, eta, q0 / (q0 - 1.0))
        ok = abs(res.lhs) <= bound * (1.0 + 1e-6)
        duality_ok &= ok
        worst = max(worst, res.residual)
        rows.append((str(k), _fmt(res.lhs), _fmt(res.rhs), _fmt(res.residual),
                     _fmt(bound), "1" if ok else "0"))
    header = ("field_id", "lhs", "rhs", "residual", "duality_bound",
              "duality_holds")
    frag = {"values": {"max_residual": worst},
            "flags": {"residual": _flag(worst, "firstvar.residual"),
                      "duality": "pass" if duality_ok else "warn"}}
    return ("firstvar.csv", header, rows, frag)


_RUNNERS = {
    "norms": _run_norms,
    "sweep": _run_sweep,
    "monotonicity": _run_monotonicity,
    "slab": _run_slab,
    "quantize": _run_quantize,
    "gdelta": _run_gdelta,
    "firstvar": _run_firstvar,
}


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run(cfg: RunConfig) -> int:
    """Execute the configured analyses; returns the process exit code."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        states = build(cfg.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def job(name):
        return name, _RUNNERS[name](cfg, states)

    results = {}
    failures = []
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(job, name) for name in cfg.analyses]
            for fut in futures:
                try:
                    name, res = fut.result()
                    results[name] = res
                except Exception as exc:
                    failures.append(str(exc))
    else:
        for name in cfg.analyses:
            try:
                results[name] = job(name)[1]
            except Exception as exc:
                failures.append(f"{name}: {exc}")

    summary = {"scenario": cfg.scenario.name,
               "epsilons": list(cfg.scenario.epsilons),
               "analyses": {}, "status": "ok",
               "meta": {"created": datetime.datetime.now(
                   datetime.timezone.utc).isoformat(),
                   "package_version": __version__}}
    warned = False
    for name in cfg.analyses:
        if name not in results:
            continue
        fname, header, rows, frag = results[name]
        _write_csv(out / fname, header, rows)
        summary["analyses"][name] = frag
        warned |= any(v == "warn" for v in frag.get("flags", {}).values())

    if failures:
        summary["status"] = "failed"
        summary["failures"] = failures
    elif warned:
        summary["status"] = "warn"
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    for msg in failures:
        print(f"analysis failure: {msg}", file=sys.stderr)
    if failures:
        return 1
    if warned and cfg.strict:
        print("tolerance warnings escalated by --strict", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="aclab",
        description="Interface-energy measure laboratory experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute analyses from a config file")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--out", type=Path, default=None)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--strict", action="store_true", default=None)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", required=True, type=Path)

    sub.add_parser("list-scenarios", help="print the named scenario corpus")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name, sc in sorted(standard_corpus().items()):
            eps = ", ".join(f"{e:g}" for e in sc.epsilons)
            print(f"{name:14s} {type(sc.profile).__name__:26s} "
                  f"grid={sc.grid.points} eps=[{eps}]")
        return 0

    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(f"ok: scenario={cfg.scenario.name} analyses={list(cfg.analyses)} "
              f"out={cfg.out_dir}")
        return 0

    try:
        cfg = load_config(args.config, out_override=args.out,
                          strict_override=args.strict, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
