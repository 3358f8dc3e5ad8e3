"""Command-line experiment runner.

Subcommands map one-to-one onto the experiment families:

    spectrum          dump the sorted box eigensystem as JSON
    heat-profile      heat profile + error certificate over a (rho, eps) grid
    wave-profile      overdamped wave profile over a (rho, eps) grid
    wave-window       oscillatory window diagnostics
    mult-profile      multiplicative Brownian profile along a schedule
    levy-check        multiplicative jump flow: pathwise + moment checks
    wasserstein-test  shift-linearity / homogeneity sampling checks
    selftest          fast deterministic invariant sweep

Every run is driven by a JSON config (--config), an optional master seed
override (--seed), an output directory (--out), and a worker count
(--threads).  Outputs are a CSV in the fixed schema plus a JSON sidecar;
reruns with identical config and seed are byte-identical.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._rng import stream
from .errors import ConfigError, SpdeCutoffError
from .spectral_core import (
    EigenSystem,
    ModeCoefficients,
    build_box_eigensystem,
    heat_leading_data,
    wave_decompose,
    wave_spectrum,
)
from .semigroup import decay_constants, wave_overdamped_leader
from .noise_sim import NoiseSpec
from .wasserstein import homogeneity_check, shift_linearity_check
from .cutoff import (
    CutoffReport,
    gaussian_abs_moment_surrogate,
    heat_cutoff_time,
    heat_error_bound,
    heat_profile,
    renormalized_distance_heat,
    simple_cutoff_scan,
    wave_cutoff_time,
    wave_error_bound,
    wave_profile_overdamped,
    renormalized_distance_wave,
    wave_window_diagnostics,
)
from .multiplicative import (
    LevyMark,
    MultLevySpec,
    levy_flow_oracle,
    levy_second_moment_exact,
    levy_stochexp_batch,
    levy_stochexp_sample,
    mult_profile,
    levy_mult_profile,
)

SCHEMA_VERSION = 1


# --------------------------------------------------------------------------
# Config loading and validation (JSON-pointer style error paths)
# --------------------------------------------------------------------------


def _get(cfg: dict, key: str, kind, pointer: str, default=None, required=True):
    if key not in cfg:
        if required:
            raise ConfigError(f"{pointer}/{key}", "missing required field")
        return default
    val = cfg[key]
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if kind is list and isinstance(val, list):
        return val
    if kind is str and isinstance(val, str):
        return val
    if kind is dict and isinstance(val, dict):
        return val
    raise ConfigError(f"{pointer}/{key}", f"expected {kind.__name__}")


def _float_list(cfg: dict, key: str, pointer: str, required=True, default=None):
    raw = _get(cfg, key, list, pointer, required=required, default=default)
    if raw is None:
        return None
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{pointer}/{key}/{i}", "expected number")
        out.append(float(v))
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("/", f"invalid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("/", "config must be a JSON object")
    ver = _get(cfg, "schema_version", int, "")
    if ver != SCHEMA_VERSION:
        raise ConfigError("/schema_version", f"unsupported version {ver}")
    return cfg


def _build_system(cfg: dict) -> EigenSystem:
    if "lambdas" in cfg:
        lam = _float_list(cfg, "lambdas", "")
        return EigenSystem.from_lambdas(lam)
    dims_raw = _get(cfg, "dims", list, "")
    dims = []
    for i, d in enumerate(dims_raw):
        if (not isinstance(d, list)) or len(d) != 2:
            raise ConfigError(f"/dims/{i}", "expected [side_length, mode_count]")
        dims.append((float(d[0]), int(d[1])))
    return build_box_eigensystem(dims)


def _coeffs(system: EigenSystem, raw, pointer: str) -> ModeCoefficients:
    vals = np.zeros(system.n_modes)
    if len(raw) > system.n_modes:
        raise ConfigError(pointer, "more coefficients than modes")
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{pointer}/{i}", "expected number")
        vals[i] = float(v)
    return ModeCoefficients(system, vals)


def _noise_spec(cfg: dict, system: EigenSystem) -> NoiseSpec:
    noise = _get(cfg, "noise", dict, "")
    q_raw = noise.get("gaussian_q", "inverse-square")
    if q_raw == "inverse-square":
        q = 1.0 / (np.arange(1, system.n_modes + 1) ** 2).astype(float)
    elif q_raw == "flat":
        q = np.ones(system.n_modes)
    elif isinstance(q_raw, list):
        q = np.asarray(
            _float_list({"gaussian_q": q_raw}, "gaussian_q", "/noise"), dtype=float
        )
        if q.size != system.n_modes:
            raise ConfigError("/noise/gaussian_q", "length must equal mode count")
    else:
        raise ConfigError("/noise/gaussian_q", "expected list or preset name")
    return NoiseSpec(system=system, gaussian_q=q)


def _check_p(p: float):
    if p <= 0:
        raise ConfigError("/p", f"order p must be positive, got {p}")


def _eps_grid(cfg: dict) -> list[float]:
    grid = _float_list(cfg, "eps_grid", "")
    for i, e in enumerate(grid):
        if not (0.0 < e < 1.0):
            raise ConfigError(f"/eps_grid/{i}", f"eps must lie in (0, 1), got {e}")
    return grid


def _ordered_map(fn, items, threads: int):
    """Apply fn over items, preserving order; thread pool when threads > 1.
    Each item carries everything it needs, so scheduling cannot change the
    result."""
    if threads <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# Experiment drivers
# --------------------------------------------------------------------------


def run_heat_profile(cfg: dict, seed: int, threads: int) -> CutoffReport:
    system = _build_system(cfg)
    h = _coeffs(system, _get(cfg, "initial", list, ""), "/initial")
    spec = _noise_spec(cfg, system)
    p = _get(cfg, "p", float, "", default=2.0, required=False)
    _check_p(p)
    if p != 2.0:
        raise ConfigError("/p", "exact heat profile runs support p = 2 only")
    leading = heat_leading_data(h)
    c_star, rate = decay_constants("heat", system=system)
    moment = gaussian_abs_moment_surrogate(spec)
    variant = _get(cfg, "error_bound_variant", str, "", default="proof", required=False)
    eps_grid = _eps_grid(cfg)
    rho_grid = _float_list(cfg, "rho_grid", "")
    report = CutoffReport()
    report.meta = {
        "experiment": "heat-profile",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
        "lambda_lead": leading.lambda_lead,
        "shape_norm": leading.v_norm,
        "error_bound_variant": variant,
    }

    def cell(args):
        rho, eps = args
        t = heat_cutoff_time(eps, leading) + rho
        dist = renormalized_distance_heat(t, h, eps, spec)
        prof = heat_profile(rho, leading, p)
        bound = heat_error_bound(rho, eps, leading, c_star, rate, moment, h.norm, variant)
        return rho, eps, dist, prof, bound

    cells = [(rho, eps) for rho in rho_grid for eps in eps_grid]
    for rho, eps, dist, prof, bound in _ordered_map(cell, cells, threads):
        report.add("heat-additive", p, eps, rho, dist, prof, bound,
                   abs(dist - prof) <= bound)
    delta_grid = _float_list(cfg, "delta_grid", "", required=False)
    if delta_grid:
        for row in simple_cutoff_scan(delta_grid, eps_grid, h, spec):
            report.add("heat-simple", p, row["eps"], row["delta"],
                       row["distance"], 0.0, 0.0, True)
    return report


def run_wave_profile(cfg: dict, seed: int, threads: int) -> CutoffReport:
    system = _build_system(cfg)
    gamma = _get(cfg, "gamma", float, "")
    wsp = wave_spectrum(gamma, system)
    initial = _get(cfg, "initial", dict, "")
    u = _coeffs(system, _get(initial, "position", list, "/initial"), "/initial/position")
    w = _coeffs(system, _get(initial, "velocity", list, "/initial"), "/initial/velocity")
    z = wave_decompose(wsp, u.values, w.values)
    spec = _noise_spec(cfg, system)
    p = _get(cfg, "p", float, "", default=2.0, required=False)
    _check_p(p)
    if p != 2.0:
        raise ConfigError("/p", "exact wave profile runs support p = 2 only")
    leader = wave_overdamped_leader(z)
    c_star, rate = decay_constants("wave", wave_spec=wsp)
    # unit-noise equilibrium root second moment in the graph norm
    from .noise_sim import wave_gaussian_convolution_law

    covs = wave_gaussian_convolution_law(math.inf, spec, wsp)
    lam = system.lambdas
    moment = math.sqrt(
        float(np.sum((1.0 + lam) * covs[:, 0, 0] + covs[:, 1, 1]))
    )
    eps_grid = _eps_grid(cfg)
    rho_grid = _float_list(cfg, "rho_grid", "")
    report = CutoffReport()
    report.meta = {
        "experiment": "wave-profile",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
        "rate": leader.rate,
        "shape_norm": leader.shape_norm,
        "leader_case": leader.case,
    }

    def cell(args):
        rho, eps = args
        t = wave_cutoff_time(eps, leader=leader) + rho
        dist = renormalized_distance_wave(t, z, eps, spec)
        prof = wave_profile_overdamped(rho, leader, p)
        bound = wave_error_bound(rho, eps, leader, c_star, rate, moment)
        return rho, eps, dist, prof, bound

    cells = [(rho, eps) for rho in rho_grid for eps in eps_grid]
    for rho, eps, dist, prof, bound in _ordered_map(cell, cells, threads):
        report.add("wave-overdamped", p, eps, rho, dist, prof, bound,
                   abs(dist - prof) <= bound)
    return report


def run_wave_window(cfg: dict, seed: int, threads: int) -> CutoffReport:
    system = _build_system(cfg)
    gamma = _get(cfg, "gamma", float, "")
    wsp = wave_spectrum(gamma, system)
    initial = _get(cfg, "initial", dict, "")
    u = _coeffs(system, _get(initial, "position", list, "/initial"), "/initial/position")
    w = _coeffs(system, _get(initial, "velocity", list, "/initial"), "/initial/velocity")
    z = wave_decompose(wsp, u.values, w.values)
    spec = _noise_spec(cfg, system)
    p = _get(cfg, "p", float, "", default=2.0, required=False)
    _check_p(p)
    eps_grid = _eps_grid(cfg)
    rho_grid = _float_list(cfg, "rho_grid", "")
    rows = wave_window_diagnostics(rho_grid, eps_grid, z, spec)
    report = CutoffReport()
    report.meta = {
        "experiment": "wave-window",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
        "gamma": gamma,
    }
    for row in rows:
        report.add("wave-window", p, row["eps"], row["rho"],
                   row["distance"], row["center"], row["slack"], row["pass"])
    return report


def run_mult_profile(cfg: dict, seed: int, threads: int) -> CutoffReport:
    system = _build_system(cfg)
    h = _coeffs(system, _get(cfg, "initial", list, ""), "/initial")
    eps_grid = _eps_grid(cfg)
    rho_grid = _float_list(cfg, "rho_grid", "")
    schedule = _get(cfg, "schedule", str, "", default="eps", required=False)
    p = 2.0
    report = CutoffReport()
    kind = _get(cfg, "noise_kind", str, "", default="brownian", required=False)
    report.meta = {
        "experiment": "mult-profile",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
        "schedule": schedule,
        "noise_kind": kind,
    }
    for rho in rho_grid:
        if kind == "brownian":
            g_raw = _get(cfg, "g", list, "")
            g = np.asarray(g_raw, dtype=float)
            rows = mult_profile(rho, h, g, eps_grid, schedule)
            case = "mult-brownian"
        elif kind == "levy":
            marks_raw = _get(cfg, "marks", list, "")
            marks = []
            for i, m in enumerate(marks_raw):
                if not isinstance(m, dict):
                    raise ConfigError(f"/marks/{i}", "expected object")
                marks.append(
                    LevyMark(
                        np.asarray(_float_list(m, "values", f"/marks/{i}")),
                        _get(m, "rate", float, f"/marks/{i}"),
                    )
                )
            eta = _get(cfg, "eta", float, "", default=0.05, required=False)
            rows = levy_mult_profile(rho, h, marks, eta, eps_grid, schedule)
            case = "mult-levy"
        else:
            raise ConfigError("/noise_kind", f"unknown noise kind {kind!r}")
        # certificate constant fixed at the coarsest grid point
        k0 = rows[0]["rate_ratio"]
        for row in rows:
            bound = k0 * (row["residual"] / row["rate_ratio"] if row["rate_ratio"] > 0
                          else 0.0)
            report.add(case, p, row["eps"], rho, row["distance"],
                       row["profile"], bound, row["residual"] <= bound + 1e-15)
    return report


def run_levy_check(cfg: dict, seed: int, threads: int) -> CutoffReport:
    system = _build_system(cfg)
    h = _coeffs(system, _get(cfg, "initial", list, ""), "/initial")
    marks_raw = _get(cfg, "marks", list, "")
    marks = []
    for i, m in enumerate(marks_raw):
        if not isinstance(m, dict):
            raise ConfigError(f"/marks/{i}", "expected object")
        marks.append(
            LevyMark(
                np.asarray(_float_list(m, "values", f"/marks/{i}")),
                _get(m, "rate", float, f"/marks/{i}"),
            )
        )
    eta = _get(cfg, "eta", float, "", default=0.05, required=False)
    eps = _get(cfg, "eps", float, "")
    t = _get(cfg, "t", float, "")
    n_paths = _get(cfg, "n_paths", int, "", default=1000, required=False)
    spec = MultLevySpec(system, tuple(marks), eta, eps)

    worst = 0.0
    for r in range(min(n_paths, 1000)):
        rng = stream(seed, 0, r)
        x, jumps = levy_stochexp_sample(t, h, spec, rng)
        y = levy_flow_oracle(t, h, spec, jumps)
        denom = np.maximum(np.abs(y), 1e-300)
        worst = max(worst, float(np.max(np.abs(x - y) / denom)))

    batch = levy_stochexp_batch(t, h, spec, stream(seed, 1), n_paths)
    sq = np.sum(batch ** 2, axis=1)
    mc = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(len(sq)))
    exact = levy_second_moment_exact(t, h, spec)

    report = CutoffReport()
    report.meta = {
        "experiment": "levy-check",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
        "pathwise_worst_relative": worst,
        "mc_second_moment": mc,
        "mc_se": se,
        "exact_second_moment": exact,
    }
    report.add("levy-pathwise", 2.0, eps, 0.0, worst, 0.0, 1e-10, worst <= 1e-10)
    report.add("levy-moment", 2.0, eps, 0.0, mc, exact, 4.0 * se,
               abs(mc - exact) <= 4.0 * se)
    return report


def run_wasserstein_test(cfg: dict, seed: int, threads: int) -> CutoffReport:
    u = _get(cfg, "u", float, "", default=2.0, required=False)
    n = _get(cfg, "n", int, "", default=100_000, required=False)
    p_list = _float_list(cfg, "p_grid", "", required=False, default=[2.0, 0.5])
    report = CutoffReport()
    report.meta = {
        "experiment": "wasserstein-test",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "version": __version__,
    }
    for i, p in enumerate(p_list):
        if p <= 0:
            raise ConfigError(f"/p_grid/{i}", "order p must be positive")
        rng = stream(seed, 7, i)
        res = shift_linearity_check(u, lambda k, r: r.standard_normal(k), p, n, rng)
        report.add("shift-linearity", p, 0.5, 0.0, res["estimate"],
                   res["upper"], 4.0 * res["se"], res["pass"])
        rng2 = stream(seed, 8, i)
        hom = homogeneity_check(3.0, lambda k, r: r.standard_normal(k), p, n, rng2)
        report.add("homogeneity", p, 0.5, 0.0, hom["estimate"], 0.0,
                   4.0 * hom["se"], hom["pass"])
    return report


def run_selftest(seed: int) -> int:
    """Fast invariant sweep; returns the number of failures."""
    failures = 0

    def check(name: str, ok: bool):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures += 1

    system = build_box_eigensystem([(math.pi, 8)])
    check("spectrum sorted", bool(np.all(np.diff(system.lambdas) > 0)))
    check("spectrum squares", bool(np.allclose(system.lambdas,
                                               np.arange(1, 9) ** 2, rtol=1e-12)))
    h = ModeCoefficients(system, np.array([0, 1, 0.5, 0, 0, 0, 0, 0.0]))
    leading = heat_leading_data(h)
    check("leading eigenvalue", abs(leading.lambda_lead - 4.0) < 1e-12)
    spec = NoiseSpec(system=system, gaussian_q=1.0 / np.arange(1, 9.0) ** 2)
    eps = 1e-6
    t = heat_cutoff_time(eps, leading)
    d0 = renormalized_distance_heat(t, h, eps, spec)
    check("distance near profile at cutoff",
          abs(d0 - leading.v_norm) < 0.1 * leading.v_norm)
    rows = simple_cutoff_scan([0.5, 2.0], [1e-8], h, spec)
    check("pre-cutoff large", rows[0]["distance"] > 1e3)
    check("post-cutoff small", rows[1]["distance"] < 1e-3)
    wsys = build_box_eigensystem([(1.0, 4)])
    wsp = wave_spectrum(10.0, wsys)
    z = wave_decompose(wsp, np.array([1.0, 0.3, 0, 0]), np.zeros(4))
    leader = wave_overdamped_leader(z)
    check("wave leader margin negative", leader.margin < 0)
    rng = stream(seed, 99)
    res = shift_linearity_check(2.0, lambda k, r: r.standard_normal(k), 2.0, 20000, rng)
    check("shift linearity MC", res["pass"])
    print(f"selftest: {8 - failures}/8 passed")
    return failures


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

_RUNNERS = {
    "heat-profile": run_heat_profile,
    "wave-profile": run_wave_profile,
    "wave-window": run_wave_window,
    "mult-profile": run_mult_profile,
    "levy-check": run_levy_check,
    "wasserstein-test": run_wasserstein_test,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="spdecutoff",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    spect = sub.add_parser("spectrum", help="dump the sorted box eigensystem")
    spect.add_argument("--config", required=True)
    spect.add_argument("--out", default=None)

    for name in _RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None,
                        help="override master_seed from the config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=1)

    st = sub.add_parser("selftest")
    st.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return 1 if run_selftest(args.seed) else 0
        cfg = load_config(args.config)
        if args.command == "spectrum":
            system = _build_system(cfg)
            text = system.to_json()
            if args.out:
                with open(args.out, "w") as f:
                    f.write(text + "\n")
            else:
                print(text)
            return 0
        seed = args.seed
        if seed is None:
            seed = _get(cfg, "master_seed", int, "", default=0, required=False)
        report = _RUNNERS[args.command](cfg, seed, max(1, args.threads))
        os.makedirs(args.out, exist_ok=True)
        base = os.path.join(args.out, args.command.replace("-", "_"))
        report.write(base + ".csv", base + ".json")
        n_fail = sum(0 if r["pass"] else 1 for r in report.rows)
        print(f"{args.command}: {len(report.rows)} rows, {n_fail} failing "
              f"-> {base}.csv")
        return 0 if n_fail == 0 else 1
    except SpdeCutoffError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
