"""Experiment orchestration: configuration ingestion, the verification
subcommands, artifact emission, and the run manifest.

Every subcommand validates the configuration, runs its checks with seeds
drawn from the configured master seed, writes its delimited artifacts and a
rendered figure into the output directory, and contributes named pass/fail
flags to ``manifest.json``.  Exit codes: 0 all checks pass, 1 a check
failed, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .convest import (
    ConvPoint,
    ModelSymbol,
    a3_convolve,
    verify_derivative_gain,
    verify_interval_estimates,
    verify_lemma_bound,
)
from .errors import (
    ConfigError,
    ConstantError,
    ConvergenceError,
    GreenfioError,
    NumericsError,
    QuadratureError,
)
from .ledger import Dyadic, build_recursion_schedule, schedule_to_csv
from .oscint import KernelGrid, gauss_dyadic_nodes, reduction_fidelity
from .parametrix import build_parametrix, residual_test
from .partition import PartitionConstants, build_chi, build_good_bad, build_psi, bump_window
from .symbols import (
    CurvedInterface,
    FlatInterface,
    SymbolWindow,
    check_symbol_estimate,
    gamma_eval,
    gamma_symbol,
    make_model,
    reconstruct_gamma,
)
from .util import fit_loglog_slope
from .zerosec import check_bad2_smoothness, compose_zero_section, iterated_regularity_diagnostic

SCHEMA_VERSION = 1

_DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "experiment_id": "default",
    "seed": 12345,
    "model": {
        "n": 1,
        "L": 1.0,
        "h": "flat",
        "kappa": 0.0,
        "mu": "-3/2",
        "jump_plus": 0.4,
        "jump_minus": 0.15,
        "edge_taper": True,
        "symbol_L": 3.0,
    },
    "partition": {"delta": [0.30, 0.40, 0.92, 0.96]},
    "build": {"M": 2, "N": 2, "K": 8},
    "quadrature": {"R": 128.0, "grid_size": 1024, "tolerance": 1e-3},
    "modes": [8, 16, 32, 64],
    "scan_points": 100_000,
    "lemma": {"order1": -1.5, "order2": -1.5, "r_max": 128.0},
    "zero_section": {"m1": -1, "m2": -1, "n": 1, "D": 2, "ladder": [16.0, 32.0, 64.0, 128.0]},
}


@dataclass
class ExperimentConfig:
    """Validated experiment parameters; see the module defaults for shape."""

    data: dict
    path: str = ""

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def constants(self) -> PartitionConstants:
        return PartitionConstants.from_delta(tuple(self.data["partition"]["delta"]))

    def model(self, **overrides):
        m = dict(self.data["model"])
        m.update(overrides)
        return make_model(
            n=int(m["n"]),
            mu=m["mu"],
            L=float(m["L"]),
            jump_plus=float(m["jump_plus"]),
            jump_minus=float(m["jump_minus"]),
            edge_taper=bool(m["edge_taper"]),
            kappa=float(m.get("kappa", 0.0)),
        )


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path=None, seed_override=None) -> ExperimentConfig:
    """Read, merge with defaults, and validate the configuration."""
    if path is None:
        data = json.loads(json.dumps(_DEFAULT_CONFIG))
    else:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
        if "model" in user and "mu" not in user["model"]:
            raise ConfigError("model section must pin the conormal order mu")
        data = _merge(_DEFAULT_CONFIG, user)
    if seed_override is not None:
        data["seed"] = int(seed_override)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data.get('schema_version')}")
    model = data["model"]
    try:
        mu = Dyadic.from_any(model["mu"])
    except Exception as exc:
        raise ConfigError(f"bad mu: {exc}") from exc
    if not mu < Dyadic(-1):
        raise ConfigError(f"mu={mu} must be below -1")
    if int(model["n"]) not in (1, 2):
        raise ConfigError("dimension n must be 1 or 2")
    if int(data["build"]["M"]) < 1 or int(data["build"]["N"]) < 1:
        raise ConfigError("build stages and substages must be at least 1")
    try:
        PartitionConstants.from_delta(tuple(data["partition"]["delta"]))
    except ConstantError as exc:
        raise ConfigError(str(exc)) from exc
    if any(int(k) <= 0 for k in data["modes"]):
        raise ConfigError("modes must be positive integers")
    return ExperimentConfig(data=data, path=str(path) if path else "")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def run_ledger_schedule(cfg: ExperimentConfig, out: Path) -> dict:
    from .plotting import save_schedule_chart

    M, N = int(cfg["build"]["M"]), int(cfg["build"]["N"])
    M = max(M, 3)
    N = max(N, 3)
    checks = {}
    for mu in ("-5/4", cfg["model"]["mu"], -2):
        sched = build_recursion_schedule(mu, M, N)  # closed forms re-checked inside
        checks[f"ledger_schedule_mu_{str(Dyadic.from_any(mu)).replace('/', '_')}"] = True
    sched = build_recursion_schedule(cfg["model"]["mu"], M, N)
    schedule_to_csv(sched, out / "schedule.csv")
    save_schedule_chart(out / "schedule.png", sched)
    checks["ledger_schedule_rows"] = sum(1 for _ in open(out / "schedule.csv")) == 1 + M * N * 4 + 1
    return checks


def run_verify_partition(cfg: ExperimentConfig, out: Path) -> dict:
    from .plotting import save_partition_profiles

    consts = cfg.constants()
    consts.to_json(out / "partition_constants.json")
    rng = np.random.default_rng(cfg.seed)
    n = int(cfg["model"]["n"])
    m = int(cfg["scan_points"])
    chis = build_chi(consts, n)
    psis = build_psi(consts, n)
    h = CurvedInterface(0.5) if n == 2 else FlatInterface(1)
    good, bad = build_good_bad(h)

    freq = rng.normal(size=(m, n + 1)) * np.exp(rng.uniform(0, 6, size=(m, 1)))
    chi_err = float(np.max(np.abs(sum(c(freq) for c in chis) - 1.0)))
    psi_err = float(np.max(np.abs(sum(p(freq) for p in psis) - 1.0)))
    z = rng.uniform(-1, 1, size=(m, n))
    sig = rng.normal(size=(m, n)) * np.exp(rng.uniform(0, 5, size=(m, 1)))
    rho = rng.normal(size=m) * np.exp(rng.uniform(0, 5, size=m))
    gb_err = float(np.max(np.abs(good(z, sig, rho) + bad(z, sig, rho) - 1.0)))

    ns = np.linalg.norm(freq[:, :n], axis=1)
    tau = np.abs(freq[:, n])
    c = consts.c
    violations = int(np.count_nonzero((chis[0](freq) > 0) & ~(tau < c[1] * ns)))
    violations += int(np.count_nonzero((chis[2](freq) > 0) & ~(tau > c[2] * ns)))
    violations += int(np.count_nonzero((chis[1](freq) > 0) & ~((tau > c[0] * ns) & (tau < c[3] * ns))))

    lam = np.exp(rng.uniform(np.log(0.25), np.log(64.0), size=m))[:, None]
    hom_err = float(max(np.max(np.abs(c_(lam * freq) - c_(freq))) for c_ in chis))
    dyadic_exact = all(np.array_equal(c_(4.0 * freq[:256]), c_(freq[:256])) for c_ in chis)

    payload = {
        "sum_error_chi": chi_err,
        "sum_error_psi": psi_err,
        "sum_error_good_bad": gb_err,
        "support_violations": violations,
        "homogeneity_error": hom_err,
        "homogeneity_dyadic_exact": dyadic_exact,
        "points": m,
    }
    with open(out / "partition_checks.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    save_partition_profiles(out / "partition.png", consts, chis, psis, n)
    return {
        "partition_sum_identity": chi_err <= 1e-12 and psi_err <= 1e-12 and gb_err <= 1e-12,
        "partition_support_containment": violations == 0,
        "partition_homogeneity": hom_err <= 1e-12 and dyadic_exact,
    }


def run_verify_symbols(cfg: ExperimentConfig, out: Path) -> dict:
    from .parametrix import decompose_Lgamma
    from .plotting import save_loglog_decay

    window = SymbolWindow()
    symbol_L = float(cfg["model"]["symbol_L"])
    g_unit = cfg.model(L=symbol_L, jump_plus=1.0, jump_minus=0.0, edge_taper=False)
    g_model = cfg.model(L=symbol_L, edge_taper=False)
    g_smooth = cfg.model(L=symbol_L, jump_plus=0.0, jump_minus=0.0, edge_taper=False)

    theta = np.geomspace(16.0, 256.0, 9)
    sym_unit = gamma_symbol(g_unit, window)
    sym_model = gamma_symbol(g_model, window)
    sym_smooth = gamma_symbol(g_smooth, window, check_reconstruction=False)
    y0 = np.zeros(int(cfg["model"]["n"]))
    vals_unit = np.abs(sym_unit.eval(y0, theta[:, None]))
    vals_smooth = np.maximum(np.abs(sym_smooth.eval(y0, theta[:, None])), 1e-300)
    slope_unit, icpt = fit_loglog_slope(theta, vals_unit)
    slope_smooth, _ = fit_loglog_slope(theta, vals_smooth)
    recon_err = sym_model.meta["reconstruction_error"]

    reports = []
    rep_amu = check_symbol_estimate(sym_model, max_order=2, r_max=256.0, include_spatial=False)
    reports.append(("gamma_amplitude", rep_amu))
    consts = cfg.constants()
    pieces = decompose_Lgamma(g_model, consts, sym_model)
    piece_pass = True
    for name, piece in pieces.items():
        rep = check_symbol_estimate(
            piece.symbol, max_order=2, r_max=256.0, n_dirs=8, n_radii=7,
            x_points=[np.full(int(cfg["model"]["n"]), 0.2)],
            include_spatial=False,
        )
        reports.append((name, rep))
        piece_pass = piece_pass and rep.passed

    with open(out / "symbol_reports.json", "w") as fh:
        json.dump([json.loads(rep.to_json()) | {"name": name} for name, rep in reports], fh, indent=2)
    save_loglog_decay(
        out / "symbols.png", theta, vals_unit, slope_unit, icpt,
        title="interface amplitude decay", xlabel="|theta|", ylabel="|a|",
    )
    return {
        "symbols_interface_decay": -1.6 <= slope_unit <= -1.4,
        "symbols_smooth_decay": slope_smooth <= -10.0,
        "symbols_reconstruction": recon_err <= 1e-6,
        "symbols_class_certification": rep_amu.passed and piece_pass,
    }


def run_stationary_phase(cfg: ExperimentConfig, out: Path) -> dict:
    from .plotting import save_loglog_decay
    from .symbols import DiffFn

    window = SymbolWindow()
    symbol_L = float(cfg["model"]["symbol_L"])
    g_unit = cfg.model(L=symbol_L, jump_plus=1.0, jump_minus=0.0, edge_taper=False)
    sym = gamma_symbol(g_unit, window)
    h = FlatInterface(1)
    profile = DiffFn.cosine(0.3, 1.5, 0.0, offset=1.0)
    scales = [float(k) for k in cfg["modes"]]
    report = reduction_fidelity(
        h,
        lambda th: sym.eval(np.zeros(1), np.array([[th]]))[0],
        lambda yv: profile(yv),
        lambda yv: bump_window(yv, 0.7, 1.1),
        scales,
    )
    with open(out / "stationary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scale", "direct_re", "direct_im", "stationary_re", "stationary_im", "rel_error", "det"])
        for i, lam in enumerate(report.scales):
            writer.writerow(
                [lam, report.direct[i].real, report.direct[i].imag,
                 report.stationary[i].real, report.stationary[i].imag,
                 report.rel_errors[i], report.hessian_dets[i]]
            )
    with open(out / "stationary.json", "w") as fh:
        json.dump({"slope": report.slope, "rel_errors": report.rel_errors.tolist()}, fh, indent=2)
    save_loglog_decay(
        out / "stationary.png", report.scales, report.rel_errors, report.slope,
        title="direct vs critical-point reduction", xlabel="outer frequency", ylabel="relative error",
    )
    det_err = float(np.max(np.abs(report.hessian_dets - 1.0)))
    return {
        "stationary_phase_slope": report.slope <= -1.0 + 0.3,
        "stationary_phase_unit_determinant": det_err <= 1e-10,
    }


def run_build_parametrix(cfg: ExperimentConfig, out: Path) -> dict:
    g = cfg.model()
    M, N, K = (int(cfg["build"][k]) for k in ("M", "N", "K"))
    build = build_parametrix(g, M=M, N=N, K=K, consts=cfg.constants())
    build.manifest(out / "build_manifest.json", model=dict(cfg["model"]))
    classes_ok = all(
        piece.ledger_class == build.schedule.entry(*_piece_indices(piece.name), "B") for piece in build.pieces
    )
    return {
        "build_classes_match_schedule": classes_ok,
        "build_series_ratio_converges": build.diagnostics["series_ratio"] < 1.0,
    }


def _piece_indices(name: str):
    _, i, j = name.split("_")
    return int(i), int(j)


def run_residual(cfg: ExperimentConfig, out: Path) -> dict:
    from .plotting import save_loglog_decay

    g = cfg.model()
    modes = [int(k) for k in cfg["modes"]]
    grid_size = int(cfg["quadrature"]["grid_size"])
    M, N, K = (int(cfg["build"][k]) for k in ("M", "N", "K"))
    consts = cfg.constants()
    mu = float(Dyadic.from_any(cfg["model"]["mu"]))

    g0 = cfg.model(jump_plus=0.0, jump_minus=0.0)
    rep0 = residual_test(g0, build_parametrix(g0, 1, 1, K, consts), modes=modes, grid_size=grid_size)
    rep11 = residual_test(g, build_parametrix(g, 1, 1, K, consts), modes=modes, grid_size=grid_size)
    rep_full = residual_test(g, build_parametrix(g, M, N, K, consts), modes=modes, grid_size=grid_size)

    with open(out / "residual.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "ratio_constant", "ratio_single_stage", "ratio_full"])
        for i, k in enumerate(modes):
            writer.writerow([k, rep0.ratios[i], rep11.ratios[i], rep_full.ratios[i]])
    with open(out / "residual.json", "w") as fh:
        json.dump(
            {"slope_constant": rep0.slope, "slope_single_stage": rep11.slope, "slope_full": rep_full.slope},
            fh,
            indent=2,
        )
    save_loglog_decay(
        out / "residual.png", modes, rep_full.ratios, rep_full.slope,
        title="inverse residual per mode", xlabel="mode", ylabel="ratio",
    )
    mid = rep0.ratios[1:-1] if len(modes) > 2 else rep0.ratios
    return {
        "residual_full_slope": rep_full.slope <= (2.0 * mu + 2.0) + 0.5,
        "residual_monotone_stages": rep_full.slope <= rep11.slope + 1e-9,
        "residual_constant_control": float(np.max(mid)) <= float(cfg["quadrature"]["tolerance"]),
    }


def run_lemma_conv(cfg: ExperimentConfig, out: Path) -> dict:
    from .plotting import save_region_ratios

    o1 = float(cfg["lemma"]["order1"])
    o2 = float(cfg["lemma"]["order2"])
    r_max = float(cfg["lemma"]["r_max"])
    a1 = ModelSymbol(o1)
    a2 = ModelSymbol(o2)
    rep = verify_lemma_bound(a1, a2, n=1, r_max=r_max, seed=cfg.seed)
    rep.to_json(out / "lemma_bounds.json")
    gains = {}
    gains_pass = True
    for direction in ("sigma", "sigma_tilde", "rho_tilde"):
        grep = verify_derivative_gain(a1, a2, direction, n=1, r_max=r_max / 2, seed=cfg.seed)
        gains[direction] = json.loads(grep.to_json())
        gains_pass = gains_pass and grep.passed
    with open(out / "lemma_gains.json", "w") as fh:
        json.dump(gains, fh, indent=2)
    closed = a3_convolve(ModelSymbol(-2.0), ModelSymbol(-2.0), ConvPoint(sigma=[0.0], sigma_tilde=[0.0], rho_tilde=0.0))
    intervals = verify_interval_estimates(a1, a2, n=1, r_max=r_max / 2, seed=cfg.seed)
    with open(out / "lemma.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "count", "sup_ratio", "growth", "pass"])
        for key, row in rep.per_region.items():
            writer.writerow([key, row["count"], row["sup_ratio"], row["growth"], row["pass"]])
    save_region_ratios(out / "lemma.png", rep.per_region)
    return {
        "lemma_envelopes": rep.passed,
        "lemma_closed_form": abs(closed - np.pi / 2.0) <= 1e-6,
        "lemma_derivative_gains": gains_pass,
        "lemma_interval_estimates": intervals.passed,
    }


def run_zero_section(cfg: ExperimentConfig, out: Path) -> dict:
    from .ledger import predict_zero_section_orders
    from .plotting import save_cauchy_diffs

    zc = cfg["zero_section"]
    n = int(zc["n"])
    m1, m2 = int(zc["m1"]), int(zc["m2"])
    a1 = ModelSymbol(m1 - 0.5)
    a2 = ModelSymbol(m2 - 0.5)
    h = FlatInterface(n)
    consts = cfg.constants()
    res = compose_zero_section(a1, a2, n=n, h=h, consts=consts)
    p, good_cls, bad_cls = predict_zero_section_orders(m1, m2, n)
    classes_ok = res.good_class == good_cls and res.bad_class == bad_cls and res.p == p

    cert = check_symbol_estimate(
        res.good_amplitude, max_order=2, r_max=64.0, n_dirs=8, n_radii=7,
        x_points=[np.concatenate([np.full(n, 0.08), np.full(n, -0.05)])],
        include_spatial=False,
    )
    bad2 = check_bad2_smoothness(a1, a2, n=1, D=int(zc["D"]), consts=consts, R_ladder=tuple(zc["ladder"]))
    bad2.to_json(out / "bad2_cauchy.json")
    save_cauchy_diffs(out / "zerosec.png", bad2.R_ladder, bad2.diffs)

    # classifier scans
    rng = np.random.default_rng(cfg.seed)
    m = int(cfg["scan_points"])
    c2 = consts.c[1]
    hs = CurvedInterface(0.5)
    x = rng.uniform(-1, 1, size=(m, 2))
    t = rng.normal(size=m) * np.exp(rng.uniform(0, 4, size=m))
    xi = rng.normal(size=(m, 2)) * np.exp(rng.uniform(0, 4, size=(m, 1)))
    xi[: m // 10] = 0.0
    xi[m // 10 : m // 5] = t[m // 10 : m // 5, None] * hs.gradient(x[m // 10 : m // 5])
    tol = 1e-12
    norm_xi = np.linalg.norm(xi, axis=1)
    eta = xi - t[:, None] * hs.gradient(x)
    both = np.count_nonzero(
        (norm_xi <= tol * np.abs(t)) & (np.linalg.norm(eta, axis=1) <= tol * (norm_xi + np.abs(t)))
    )
    xi1 = np.abs(rng.normal(size=m)) + 0.1
    t1 = rng.uniform(-0.999, 0.999, size=m) * c2 * xi1
    eta1 = xi1 - t1
    t2 = rng.uniform(-0.999, 0.999, size=m) * c2 * np.abs(eta1)
    eta2 = eta1 - t2
    chain_viol = int(np.count_nonzero(~(np.abs(eta2) > (1 - c2) ** 2 * xi1)))

    # small sampled kernel of the elliptic branch (spatially constant model
    # amplitudes and a flat interface: the amplitude is point independent)
    N_grid = 64
    axis = np.linspace(-0.9, 0.9, N_grid, endpoint=False)
    sig_nodes, sig_w = gauss_dyadic_nodes(64.0, 16, 6)
    rho_nodes, rho_w = gauss_dyadic_nodes(32.0, 12, 5)
    SS, RRh = np.meshgrid(sig_nodes, rho_nodes, indexing="ij")
    amp = res.good_amplitude.eval(
        np.concatenate([np.zeros(n), np.zeros(n)]),
        np.stack([SS.ravel(), RRh.ravel()], axis=-1),
    ).reshape(SS.shape)
    ker = np.zeros((N_grid, N_grid), dtype=complex)
    phase_x = np.exp(1j * np.outer(axis, sig_nodes))
    for j, yv in enumerate(axis):
        ph = np.exp(1j * (-yv * sig_nodes))[:, None] * np.exp(1j * yv * rho_nodes)[None, :]
        ker[:, j] = phase_x @ ((amp * ph) @ rho_w * sig_w) / (2.0 * np.pi) ** 2
    K = KernelGrid(x_axis=axis, y_axis=axis.copy(), values=ker, box_length=1.8, R=64.0)
    K.save(out / "good_kernel.bin")
    K.export_slice_csv(out / "good_kernel_slice.csv", row=N_grid // 2)
    regularity = iterated_regularity_diagnostic(K, FlatInterface(1), s=0.5)

    res.diagnostics["bad2_pass"] = bad2.passed
    res.diagnostics["iterated_regularity"] = regularity
    res.manifest(out / "zero_section.json")
    return {
        "zero_section_classes": classes_ok,
        "zero_section_good_branch_class": cert.passed,
        "zero_section_cauchy": bad2.passed,
        "zero_section_classifier_exclusive": both == 0,
        "zero_section_chain_bound": chain_viol == 0,
        "zero_section_iterated_regularity": regularity["pass"],
    }


SUBCOMMANDS = {
    "ledger-schedule": run_ledger_schedule,
    "verify-partition": run_verify_partition,
    "verify-symbols": run_verify_symbols,
    "stationary-phase": run_stationary_phase,
    "build-parametrix": run_build_parametrix,
    "residual": run_residual,
    "lemma-conv": run_lemma_conv,
    "zero-section": run_zero_section,
}


def run_all(cfg: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    checks = {}
    names = list(SUBCOMMANDS)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(SUBCOMMANDS[name], cfg, out) for name in names}
            for name in names:
                checks.update(futures[name].result())
    else:
        for name in names:
            checks.update(SUBCOMMANDS[name](cfg, out))
    return checks


def _results_hash(checks: dict) -> str:
    return hashlib.sha256(json.dumps(checks, sort_keys=True).encode()).hexdigest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="greenfio", description=__doc__)
    parser.add_argument("subcommand", choices=list(SUBCOMMANDS) + ["all"])
    parser.add_argument("--config", default=None, help="JSON configuration path")
    parser.add_argument("--out", default="greenfio_out", help="artifact directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, seed_override=args.seed)
    except (ConfigError, ConstantError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    timings = {}
    try:
        if args.subcommand == "all":
            t1 = time.time()
            checks = run_all(cfg, out, threads=args.threads)
            timings["all"] = time.time() - t1
        else:
            t1 = time.time()
            checks = SUBCOMMANDS[args.subcommand](cfg, out)
            timings[args.subcommand] = time.time() - t1
    except (QuadratureError, ConvergenceError, NumericsError) as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3
    except GreenfioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    checks = {k: bool(v) for k, v in checks.items()}

    manifest = {
        "experiment_id": cfg["experiment_id"],
        "config_hash": cfg.hash(),
        "results_hash": _results_hash(checks),
        "versions": {
            "greenfio": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "seed": cfg.seed,
        "threads": args.threads,
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
        "wall_s": round(time.time() - t0, 3),
        "checks": checks,
        "pass": all(checks.values()),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    for name, ok in checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
