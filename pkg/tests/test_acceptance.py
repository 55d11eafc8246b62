"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``acceptance N: PASS|FAIL`` line (also collected in
the pytest terminal summary) and asserts at the documented tolerance.
"""

import itertools
import json
import math
import time
from importlib import resources

import numpy as np
import pytest

from levy_spde_lab.cli import main
from levy_spde_lab.config import load_config
from levy_spde_lab.experiments import run_experiment
from levy_spde_lab.noise import DiagonalJumpCoefficient, JumpSpec
from levy_spde_lab.rates import RateFunctionSet, alpha_T, big_lambda, gamma_star
from levy_spde_lab.spectral import CubicReaction, eval_reaction
from levy_spde_lab.transport import w_p_empirical

CONFIGS = resources.files("levy_spde_lab") / "configs"
SHIPPED = [
    "contraction",
    "concentration",
    "concentration_jumps",
    "certificates",
    "galerkin_lipschitz",
    "galerkin_cubic",
    "moments",
    "rates",
]


@pytest.fixture(scope="session")
def shipped_reports(tmp_path_factory):
    """Every shipped config run once in-process with one thread, written to disk."""
    root = tmp_path_factory.mktemp("reference")
    reports = {}
    for name in SHIPPED:
        start = time.perf_counter()
        cfg = load_config(CONFIGS / f"{name}.json")
        report = run_experiment(cfg, threads=1)
        report.write(root / name)
        reports[name] = (report, time.perf_counter() - start, root / name / "report.json")
    return reports


def _exp_minus_linear(x):
    """e^x - x - 1 by a correctly rounded Taylor sum (no cancellation)."""
    return math.fsum(x**k / math.factorial(k) for k in range(2, 60))


def test_rate_function_closed_forms(acceptance_line):
    start = time.perf_counter()
    errs = []
    sigma = 1.3
    for r in (0.1, 1.0, 10.0):
        for a in (0.5, 1.0):
            exact = r**2 / (2 * a * sigma**2)
            errs.append(abs(gamma_star(r, a, sigma, None) - exact) / exact)
        for T in (0.1, 0.5, 2.0):
            K = 15.0
            exact = K * r**2 / (sigma**2 * -math.expm1(-2 * K * T))
            errs.append(abs(alpha_T(r, T, K, sigma, None) - exact) / exact)
    quad_err = max(errs)
    lam_errs = []
    for c, g in ((2.0, 0.5), (0.3, 1.7), (5.0, 0.01)):
        spec = JumpSpec.discrete([1.0], [c], DiagonalJumpCoefficient([g], [0.0]))
        for lam in (0.5, 1.0, 3.0):
            exact = c * _exp_minus_linear(lam * g)
            lam_errs.append(abs(big_lambda(lam, spec) - exact) / exact)
    elapsed = time.perf_counter() - start
    ok = quad_err <= 1e-9 and max(lam_errs) <= 1e-12 and elapsed < 1.0
    acceptance_line(1, "rate-function oracles", ok,
                    f"max rel err {quad_err:.1e} (quadratic), {max(lam_errs):.1e} (Lambda), {elapsed:.2f}s")
    assert ok


def _shipped_jump_specs():
    out = {}
    for name in ("contraction", "concentration_jumps", "galerkin_cubic"):
        model = load_config(CONFIGS / f"{name}.json").model
        out[name] = model
    return out


def test_inequality_chains(acceptance_line):
    models = _shipped_jump_specs()
    start = time.perf_counter()
    worst = math.inf
    for model in models.values():
        rates = RateFunctionSet.from_model(model, 0.5)
        for r in np.linspace(0.01, 3.0, 20):
            worst = min(worst, rates.alpha_T(r) - rates.alpha_T_lower(r))
            worst = min(worst, rates.alpha_path_T(r) - rates.alpha_path_T_lower(r))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-8 and elapsed < 1.0
    acceptance_line(2, "deviation-function lower-bound chains", ok,
                    f"min slack {worst:.2e} over {len(models)} jump specs, {elapsed:.2f}s")
    assert ok


def test_cubic_oracle(acceptance_line):
    start = time.perf_counter()
    out = eval_reaction(CubicReaction(0.0), np.r_[1.0, np.zeros(7)])
    expected = np.r_[-1.5, 0.0, 0.5, np.zeros(5)]
    err = float(np.max(np.abs(out - expected)))
    # independent quadrature of -(sqrt2 sin(pi xi))^3 against the basis
    grid = 10_000
    xi = (np.arange(grid) + 0.5) / grid
    basis = np.sqrt(2) * np.sin(np.outer(np.arange(1, 9), np.pi * xi))
    quad_err = float(np.max(np.abs(basis @ (-(basis[0] ** 3)) / grid - expected)))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-10 and quad_err <= 1e-8 and elapsed < 1.0
    acceptance_line(3, "cubic nonlinearity oracle", ok, f"max err {err:.1e}, quadrature oracle {quad_err:.1e}")
    assert ok


def test_transport_solver_oracle(acceptance_line):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for i in range(100):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 5))
        p = 1 + i % 2
        a, b = rng.standard_normal((2, m, n))
        cost = np.linalg.norm(a[:, None] - b[None], axis=-1) ** p
        brute = min(cost[np.arange(m), list(s)].mean() for s in itertools.permutations(range(m)))
        worst = max(worst, abs(w_p_empirical(a, b, p) ** p - brute))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 10.0
    acceptance_line(4, "transport solver vs exhaustive permutations", ok,
                    f"100 instances, max cost gap {worst:.1e}, {elapsed:.2f}s")
    assert ok


def _check_summary(report):
    failing = [c.name for c in report.checks if c.status not in ("pass", "info", "skipped")]
    return failing


@pytest.mark.slow
def test_contraction(acceptance_line, shipped_reports):
    report, elapsed, _ = shipped_reports["contraction"]
    cfg = report.config
    checks = {c.name: c for c in report.checks}
    rate = checks["squared-gap decay rate"]
    K = report.results["K"]
    failing = _check_summary(report)
    ok = (
        report.status == "pass"
        and not failing
        and 17.0 <= K <= 19.0
        and rate.ci_bound >= 0.75 * K
        and cfg["run"]["m"] == 500
        and cfg["model"]["n_modes"] == 32
        and elapsed < 120
    )
    acceptance_line(5, "contraction of coupled pairs", ok,
                    f"K={K:.3f}, rate lower CI {rate.ci_bound:.3f} vs {0.75 * K:.3f}, {elapsed:.1f}s")
    assert ok, failing


@pytest.mark.slow
def test_concentration(acceptance_line, shipped_reports):
    report, elapsed, _ = shipped_reports["concentration"]
    tails = [c for c in report.checks if " tail r=" in c.name and c.status in ("pass", "fail")]
    failing = _check_summary(report)
    ok = (
        report.status == "pass"
        and report.config["run"]["m"] == 10_000
        and report.config["model"].get("jumps") is None
        and len(tails) > 0
        and all(c.ci_bound <= c.theoretical_bound for c in tails)
        and elapsed < 600
    )
    acceptance_line(6, "path concentration, additive Gaussian noise", ok,
                    f"{len(tails)} resolvable tail checks, {elapsed:.1f}s")
    assert ok, failing


@pytest.mark.slow
def test_galerkin_convergence(acceptance_line, shipped_reports):
    lines, ok = [], True
    total = 0.0
    for name in ("galerkin_lipschitz", "galerkin_cubic"):
        report, elapsed, _ = shipped_reports[name]
        total += elapsed
        errs = report.results["mean_sup_gap2"]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        ratio = errs[-1] / errs[0]
        ok &= (
            report.status == "pass"
            and decreasing
            and ratio <= 0.1
            and report.results["modes"] == [4, 8, 16, 32]
            and report.results["reference_modes"] == 128
            and report.config["run"]["m"] == 200
        )
        lines.append(f"{name.split('_')[1]} ratio {ratio:.1e}")
    ok &= total < 600
    acceptance_line(7, "Galerkin convergence, both models", ok, ", ".join(lines) + f", {total:.1f}s")
    assert ok


@pytest.mark.slow
def test_moment_uniformity(acceptance_line, shipped_reports):
    report, elapsed, _ = shipped_reports["moments"]
    rows = report.results["rows"]
    spread_n = max(r["c_sup"] for r in rows if r["members"] == 400) / min(
        r["c_sup"] for r in rows if r["members"] == 400
    )
    ok = (
        report.status == "pass"
        and report.config["model"]["reaction"]["type"] == "cubic"
        and report.config["experiment"]["modes"] == [8, 16, 32]
        and report.config["run"]["m"] == 400
        and spread_n < 1.5
        and elapsed < 600
    )
    acceptance_line(8, "sixth-moment uniformity in n and m", ok,
                    f"point spread across n {spread_n:.3f}, {elapsed:.1f}s")
    assert ok, _check_summary(report)


def _strip_runtime(path):
    data = json.loads(path.read_text())
    data.pop("runtime_seconds", None)
    return data


@pytest.mark.slow
def test_determinism_across_threads(acceptance_line, shipped_reports, tmp_path):
    mismatched = []
    for name in SHIPPED:
        _, _, reference = shipped_reports[name]
        cfg = load_config(CONFIGS / f"{name}.json")
        out = tmp_path / name
        code = main([cfg.experiment, "--config", str(CONFIGS / f"{name}.json"), "--out", str(out),
                     "--threads", "2", "-q"])
        if code not in (0, 2, 3) or _strip_runtime(out / "report.json") != _strip_runtime(reference):
            mismatched.append(name)
        for curve in reference.parent.glob("*.csv"):
            if curve.read_bytes() != (out / curve.name).read_bytes():
                mismatched.append(f"{name}/{curve.name}")
    ok = not mismatched
    acceptance_line(9, "bit-exact determinism, 1 vs 2 threads", ok,
                    f"{len(SHIPPED)} shipped configs" + (f", mismatched: {mismatched}" if mismatched else ""))
    assert ok
