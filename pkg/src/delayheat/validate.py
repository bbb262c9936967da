"""Named verification suites over the solvers and diagnostics.

Each suite runs a set of quantitative checks (closed form vs independent
oracles, identity ratios, jump laws, convergence orders) and returns one row
per check.  The CLI ``validate`` subcommand prints these rows; the acceptance
tests assert on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics as diag
from .basis import EigenBasis, SpectralField, dirac_coeffs, semigroup_apply
from .errors import InvalidArgumentError
from .flow import (ExpModeHistory, FlowParams, compatible_history, delayed_exp,
                   flow_apply, picard_solve, right_limit_derivative, solve_trace)
from .refsolvers import MeshParams, ModeDDEConfig, hybrid_simulate, rk4_dde_mode

__all__ = ["CheckRow", "SuiteResult", "SUITE_NAMES", "run_suite", "figure_panels", "figure_checks"]

_SEED = 20250809


@dataclass(frozen=True)
class CheckRow:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    rows: list[CheckRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _random_field(basis: EigenBasis, rng: np.random.Generator) -> SpectralField:
    return SpectralField(basis, rng.standard_normal(basis.K))


# ---------------------------------------------------------------------------
# per-mode: closed form vs method-of-steps RK4, plus hand-computable spot values


def suite_per_mode(dt_frac: int = 1000) -> SuiteResult:
    """Delayed exponential vs RK4 on u' = -lam u + a u(t - tau), zero history, u(0)=1."""
    rows = []
    for t, expect in ((0.5, 1.0), (1.5, 1.5), (2.5, 2.625)):
        got = delayed_exp(0.0, t, FlowParams(a=1.0, tau=1.0))
        err = abs(got - expect)
        rows.append(CheckRow(f"spot u({t})={expect}", err <= 1e-14, err, 1e-14))
    for lam in (0.0, math.pi**2, 4 * math.pi**2, 100.0):
        for a in (-1.0, 1.0, 2.0):
            for tau in (0.5, 1.0):
                params = FlowParams(a=a, tau=tau)
                cfg = ModeDDEConfig(lam=lam, a=a, tau=tau, dt=tau / dt_frac)
                trace = rk4_dde_mode(cfg, 3.0 * tau)
                exact = np.array([delayed_exp(lam, float(t), params) for t in trace.times])
                # relative to the trajectory scale; pointwise relative error is
                # meaningless once the solution decays below rounding
                rel = float(np.max(np.abs(trace.values - exact)) / np.max(np.abs(exact)))
                rows.append(CheckRow(f"rk4 lam={lam:g} a={a:g} tau={tau:g}",
                                     rel <= 1e-6, rel, 1e-6))
    return SuiteResult("per-mode", rows)


# ---------------------------------------------------------------------------
# identity: weighted-orbit energy identity over random fields


def suite_identity(n_fields: int = 20, K: int = 60) -> SuiteResult:
    rng = np.random.default_rng(_SEED)
    basis = EigenBasis(1.0, K)
    lams = basis.eigenvalues()
    fields = [_random_field(basis, rng) for _ in range(n_fields)]
    rows = []
    for alpha in range(4):
        for beta in range(4):
            integrals = np.array([np.sum(diag._mode_time_integral(float(lam), alpha, beta))
                                  for lam in lams])
            factor = diag.weight_factor(alpha, beta)
            for s in (-1.0, 0.0, 2.0):
                idx = s + 2.0 * (beta - alpha) + 1.0
                worst = 0.0
                for fld in fields:
                    lhs = float(np.sum(integrals * fld.coeffs**2 * lams**idx))
                    rhs = factor * float(np.sum(fld.coeffs**2 * lams**s))
                    worst = max(worst, abs(lhs / rhs - 1.0))
                rows.append(CheckRow(f"identity a={alpha} b={beta} s={s:g}",
                                     worst <= 1e-6, worst, 1e-6))
    return SuiteResult("identity", rows)


# ---------------------------------------------------------------------------
# jumps: lattice jump law and off-lattice smoothness


def suite_jumps(K: int = 60) -> SuiteResult:
    rng = np.random.default_rng(_SEED + 1)
    basis = EigenBasis(1.0, K)
    y0 = _random_field(basis, rng)
    rows = []
    for a in (1.0, 2.0):
        params = FlowParams(a=a, tau=1.0)
        for r in diag.lattice_jump_report(y0, params, j_max=4):
            rows.append(CheckRow(f"jump a={a:g} j={r.j}", r.rel_error <= 1e-6,
                                 r.rel_error, 1e-6))
        worst = max(diag.off_lattice_probe(y0, params, (j + 0.5) * params.tau, order)
                    for j in range(4) for order in range(1, 5))
        rows.append(CheckRow(f"off-lattice probes a={a:g}", worst <= 1e-8, worst, 1e-8))
    return SuiteResult("jumps", rows)


# ---------------------------------------------------------------------------
# picard: factorial contraction of the integral-equation iteration


def suite_picard(T: float = 3.0, K: int = 8, n_sub: int = 64) -> SuiteResult:
    # tau = T/12 keeps 12 series terms alive on [0, T]; with tau = T the series
    # terminates after a couple of terms and there is nothing to contract
    basis = EigenBasis(1.0, K)
    params = FlowParams(a=1.0, tau=0.25)
    y0 = SpectralField(basis, 1.0 / np.arange(1, K + 1))
    exact = None
    errors = {}
    for n in range(1, 17):
        trace = picard_solve(y0, None, T, n_iter=n, dt=params.tau / n_sub, params=params)
        if exact is None:
            exact = solve_trace(y0, None, trace.times, params)
        errors[n] = float(np.max(np.linalg.norm(trace.coeffs - exact.coeffs, axis=1)))

    def bound(n):
        return (abs(params.a) * T) ** (n + 1) / math.factorial(n + 1)

    C = max(errors[n] / bound(n) for n in (1, 2, 3))
    floor = 2.0 * min(errors.values())
    rows = []
    worst_excess = 0.0
    for n, e in errors.items():
        worst_excess = max(worst_excess, e / (C * bound(n) + floor))
    rows.append(CheckRow("picard factorial envelope", worst_excess <= 1.0, worst_excess, 1.0,
                         detail=f"floor={floor:.3g} C={C:.3g}"))
    rows.append(CheckRow("picard reaches grid floor", errors[16] <= 10.0 * floor, errors[16],
                         10.0 * floor))
    rows.append(CheckRow("picard envelope spans decades", errors[1] >= 100.0 * floor,
                         errors[1] / max(floor, 1e-300), 100.0))
    # a = 0 converges in a single iteration, exactly
    params0 = FlowParams(a=0.0, tau=1.0)
    tr0 = picard_solve(y0, None, 1.0, n_iter=1, dt=1.0 / 16, params=params0)
    ref0 = np.stack([semigroup_apply(y0, float(t)).coeffs for t in tr0.times])
    gap0 = float(np.max(np.abs(tr0.coeffs - ref0)))
    rows.append(CheckRow("picard a=0 one-shot", gap0 == 0.0, gap0, 0.0))
    return SuiteResult("picard", rows)


# ---------------------------------------------------------------------------
# hybrid: state-space simulator converges to the closed form


def _hybrid_error_at(n: int, t_end: float, params: FlowParams, basis: EigenBasis,
                     y0: SpectralField, phi=None) -> float:
    mesh = MeshParams(nx=n, ns=n, dt=params.tau / (2 * n))
    xs = np.linspace(0.0, basis.L, n + 1)
    emat = basis.eval_matrix(xs)
    y0_grid = emat @ y0.coeffs
    hist_fn = None if phi is None else (lambda g: emat @ phi.coeffs(g))
    trace = hybrid_simulate(y0_grid, hist_fn, mesh, t_end, params.a, params.tau, basis.L)
    if phi is None:
        ref_grid = emat @ flow_apply(y0, t_end, params).coeffs
    else:
        ref_grid = emat @ (y0.coeffs * np.exp(phi.rates * t_end))
    diff = trace.values[-1] - ref_grid
    dx = basis.L / n
    return float(math.sqrt(dx * np.sum(diff[1:-1] ** 2)))


def suite_hybrid() -> SuiteResult:
    params = FlowParams(a=1.0, tau=1.0)
    basis = EigenBasis(1.0, 8)
    y0 = SpectralField.from_modes(basis, {1: 1.0 / math.sqrt(2.0)})  # sin(pi x)
    # the order test needs genuinely smooth transported data: a history that
    # matches y0 at the inflow corner.  With zero history the delay-line data
    # has a step at the corner and upwind smears it at order 1/2.
    phi = compatible_history(y0, params)
    errs = [_hybrid_error_at(n, 2.0 * params.tau, params, basis, y0, phi)
            for n in (100, 200, 400)]
    slope = float(np.polyfit(np.log2([100, 200, 400]), np.log2(errs), 1)[0])
    order = -slope
    err_zero_hist = _hybrid_error_at(400, 2.0 * params.tau, params, basis, y0)
    rows = [
        CheckRow("hybrid L2 error (finest, smooth history)", errs[-1] <= 1e-3, errs[-1], 1e-3,
                 detail=f"errors={['%.3g' % e for e in errs]}"),
        CheckRow("hybrid convergence order", 0.8 <= order <= 1.2, order, 1.2,
                 detail="expected in [0.8, 1.2]"),
        CheckRow("hybrid L2 error (finest, zero history)", err_zero_hist <= 1e-3,
                 err_zero_hist, 1e-3),
    ]
    return SuiteResult("hybrid", rows)


# ---------------------------------------------------------------------------
# compatibility: endpoint matching and measured endpoint smoothness


def suite_compatibility(K: int = 16, r: int = 2) -> SuiteResult:
    basis = EigenBasis(1.0, K)
    params = FlowParams(a=1.0, tau=1.0)
    y0 = SpectralField.from_modes(basis, {1: 1.0, 2: 0.3})
    phi = compatible_history(y0, params)
    report = diag.compatibility_check(y0, phi, params, r=r, tol=1e-9)
    worst = float(np.max(report.violations))
    rows = [CheckRow("compatible history: violations", report.flag_matching, worst, 1e-9)]
    scan = diag.endpoint_jump_scan(y0, phi, params, r=r, modes=(1, 2))
    worst_gap = max(row.rel_gap for row in scan)
    rows.append(CheckRow("compatible history: measured endpoint jumps", worst_gap <= 1e-3,
                         worst_gap, 1e-3))
    perturbed = ExpModeHistory(y0 + SpectralField.from_modes(basis, {3: 1.0}), phi.rates)
    report_p = diag.compatibility_check(y0, perturbed, params, r=0, tol=1e-9)
    v0 = float(report_p.violations[0])
    rows.append(CheckRow("unit perturbation of phi(0): violation norm", abs(v0 - 1.0) <= 1e-9,
                         v0, 1.0, detail="expected 1.00"))
    return SuiteResult("compatibility", rows)


# ---------------------------------------------------------------------------
# figure experiment: lattice-time spikes of the derivative profiles


def figure_panels(times=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5), x0: float = 0.3, K: int = 60,
                  nx: int = 300, L: float = 1.0,
                  params: FlowParams | None = None) -> tuple[np.ndarray, dict[float, np.ndarray]]:
    """Profiles of the floor(t/tau)-th right derivative for point-mass data.

    Returns the mesh and one value row per requested instant.  At lattice
    instants the profile reproduces the spike of the initial point mass at x0;
    between lattice instants it is smooth.
    """
    params = params or FlowParams(a=1.0, tau=1.0)
    basis = EigenBasis(L, K)
    y0 = dirac_coeffs(x0, basis)
    xs = basis.mesh(nx)
    emat = basis.eval_matrix(xs)
    panels = {}
    for t in times:
        fld = right_limit_derivative(y0, float(t), params)
        panels[float(t)] = emat @ fld.coeffs
    return xs, panels


def figure_checks(nx: int = 300) -> SuiteResult:
    """Spike-location and smoothness checks on the default panels."""
    xs, panels = figure_panels(nx=nx)
    rows = []

    def ratio(vals):
        mags = np.abs(vals)
        return float(np.max(mags) / np.median(mags))

    ref_ratio = ratio(panels[1.0])
    for t in (1.0, 2.0):
        vals = panels[t]
        x_peak = float(xs[int(np.argmax(np.abs(vals)))])
        ok = abs(x_peak - 0.3) <= 1.0 / nx + 1e-12
        rows.append(CheckRow(f"panel t={t:g}: peak at x=0.3", ok, x_peak, 1.0 / nx,
                             detail=f"peak at x={x_peak:.6f}"))
    threshold = 0.1 * ref_ratio
    for t in (0.5, 1.5, 2.5):
        r = ratio(panels[t])
        rows.append(CheckRow(f"panel t={t:g}: smooth (max/median below spike threshold)",
                             r < threshold, r, threshold))
    return SuiteResult("figure", rows)


# ---------------------------------------------------------------------------

SUITE_NAMES = ("per-mode", "picard", "hybrid", "identity", "jumps", "compatibility", "all")

_SUITES = {
    "per-mode": suite_per_mode,
    "picard": suite_picard,
    "hybrid": suite_hybrid,
    "identity": suite_identity,
    "jumps": suite_jumps,
    "compatibility": suite_compatibility,
}


def run_suite(name: str) -> list[SuiteResult]:
    if name == "all":
        return [fn() for fn in _SUITES.values()]
    if name not in _SUITES:
        raise InvalidArgumentError(
            f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}"
        )
    return [_SUITES[name]()]
