"""Parameter sweeps: phase boundaries, lobe tip, decay of superfluidity, hopping ramps."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _kernels
from .meanfield import (
    SingleSiteBasis,
    SolverOptions,
    build_basis,
    build_mf_hamiltonian,
    ground_state,
    order_parameter_fixed_point,
    site_observables,
)
from .model import ModelParams, total_decay
from .perturbation import SQRT2, critical_coupling, psi_analytic

BISECT_HI = 1.0  # in units of beta
BISECT_XTOL = 1e-6
BISECT_MAX = 60
SF_THRESHOLD = 1e-6
TIP_XTOL = 1e-6


@dataclass(frozen=True)
class PhaseBoundaryPoint:
    mu: float
    zkappa_c_analytic: float | None
    zkappa_c_numeric: float | None
    t: float
    mott_n: int | None = None
    error: str = ""


@dataclass(frozen=True)
class TimeEvolutionSample:
    t: float
    psi_analytic: float
    psi_numeric: float
    envelope: float
    mean_n: float
    var_n: float


@dataclass(frozen=True)
class RampSpec:
    kappa0: float
    rate: float  # d(zkappa)/dt
    t_end: float
    samples: int

    def __post_init__(self):
        if self.kappa0 < 0 or self.rate < 0:
            raise ValueError("kappa0 and rate must be non-negative")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.samples)


@dataclass(frozen=True)
class RampReport:
    reached: bool
    t_transition: float | None
    sample_index: int | None
    zkappa_c: float | None
    peak_zkappa_eff: float
    t_peak: float


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("JCHD_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def map_ordered(func: Callable, items: Iterable, threads: int | None = None) -> list:
    """``list(map(func, items))``, spread over a thread pool; order is preserved."""
    items = list(items)
    n = min(thread_count(threads), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def lobe_interval(params: ModelParams) -> tuple[float, float]:
    """mu range of the lossless one-excitation lobe (F1 < 0 and F2 < 0)."""
    lo = params.omega_c - params.beta
    hi = params.omega_c - (SQRT2 - 1.0) * params.beta
    if not params.is_resonant() or not lo < hi:
        raise ValueError("the n = 1 lobe is only defined at zero detuning")
    return lo, hi


def lobe_mu_grid(params: ModelParams, points: int) -> np.ndarray:
    """Cell-centred mu points across the interior of the n = 1 lobe."""
    lo, hi = lobe_interval(params)
    half = 0.5 * (hi - lo) / points
    return np.linspace(lo + half, hi - half, points)


def mott_excitations(params: ModelParams, basis: SingleSiteBasis) -> int:
    """Excitation number of the hopping-free ground level at this mu."""
    h = build_mf_hamiltonian(params, 0.0, basis, zkappa=0.0)
    _, vec = ground_state(h)
    return int(round(site_observables(vec, basis)[0]))


def numeric_critical_coupling(params: ModelParams, basis: SingleSiteBasis, t: float = 0.0,
                              opts: SolverOptions | None = None) -> float | None:
    """Boundary zkappa from bisection on the fixed-point solver.

    Bisection runs on the effective hopping in [0, beta]; the result is
    scaled back by e^{2 gamma t}. None if the site stays Mott-like.
    """
    opts = opts or SolverOptions()
    zc, status = _kernels.bisect_boundary(
        float(params.omega_a), float(params.gamma_a), float(params.omega_c),
        float(params.gamma_c), float(params.beta), float(params.mu), basis.n_max,
        0.0, BISECT_HI * params.beta, BISECT_XTOL * params.beta, BISECT_MAX, SF_THRESHOLD,
        float(opts.psi0), float(opts.tol), int(opts.max_iter), float(opts.mixing),
        bool(opts.accelerate),
    )
    if status == 2:
        raise RuntimeError(f"fixed-point solver failed during bisection at mu={params.mu!r}")
    if status == 1:
        return None
    return float(zc) * math.exp(2.0 * params.gamma * t)


def _boundary_point(params, basis, t, opts):
    analytic = numeric = mott_n = None
    errors = []
    try:
        analytic = critical_coupling(params, t)
    except ValueError as exc:
        errors.append(str(exc))
    try:
        mott_n = mott_excitations(params, basis)
        numeric = numeric_critical_coupling(params, basis, t, opts)
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        errors.append(str(exc))
    return PhaseBoundaryPoint(float(params.mu), analytic, numeric, float(t), mott_n,
                              "; ".join(errors))


def phase_boundary(params_template: ModelParams, mu_grid: Sequence[float], t: float = 0.0,
                   basis: SingleSiteBasis | None = None, opts: SolverOptions | None = None,
                   threads: int | None = None) -> list[PhaseBoundaryPoint]:
    if len(mu_grid) == 0:
        raise ValueError("mu_grid is empty")
    basis = basis or build_basis(8)
    return map_ordered(
        lambda mu: _boundary_point(params_template.replace(mu=float(mu)), basis, t, opts),
        mu_grid, threads)


def lobe_tip(params_template: ModelParams, t: float = 0.0, method: str = "analytic",
             basis: SingleSiteBasis | None = None, opts: SolverOptions | None = None,
             xtol: float | None = None) -> tuple[float, float]:
    """(mu*, zkappa_c(mu*)) at the maximum of the n = 1 boundary.

    The search is bounded to the lobe shrunk by 2 * gamma on both sides, so
    with losses it returns the interior maximum.

    ``method="numeric"`` maximizes the bisected fixed-point boundary instead of
    the closed form; its default mu tolerance is looser (1e-3 beta) because
    each evaluation carries the 1e-6 bisection noise.
    """
    lo, hi = lobe_interval(params_template)
    # within ~gamma of a lobe edge the broadened gaps make the boundary turn up again
    margin = 2.0 * params_template.gamma
    lo, hi = lo + margin, hi - margin
    if not lo < hi:
        raise ValueError("losses too large: no lobe interior left for the tip search")
    beta = params_template.beta
    if method == "analytic":
        xtol = TIP_XTOL * beta if xtol is None else xtol

        def objective(mu):
            zc = critical_coupling(params_template.replace(mu=mu), t)
            return -zc if zc is not None else 0.0
    elif method == "numeric":
        basis = basis or build_basis(8)
        xtol = 1e-3 * beta if xtol is None else xtol

        def objective(mu):
            zc = numeric_critical_coupling(params_template.replace(mu=mu), basis, t, opts)
            return -zc if zc is not None else 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol})
    if not res.fun < 0:
        raise RuntimeError("no superfluid boundary found inside the n = 1 lobe")
    return float(res.x), float(-res.fun)


def _envelope(params, t, energy):
    if params.is_resonant():
        return math.exp(-total_decay(params, 1) * t)
    # detuned: decay of the numeric ground level
    return math.exp(min(energy.imag, 0.0) * t)


def _evolution_sample(params, t, basis, opts):
    sol = order_parameter_fixed_point(params, basis, t, opts)
    if not sol.converged:
        raise RuntimeError(f"fixed-point solver did not converge at t={t!r} "
                           f"(residual {sol.residual:.3g})")
    env = _envelope(params, t, sol.ground_energy)
    if not params.is_resonant():
        analytic = math.nan
    elif params.zkappa == 0:
        analytic = 0.0
    else:
        analytic = psi_analytic(params, t)
    mean_n, var_n, _ = site_observables(sol.state, basis)
    return TimeEvolutionSample(float(t), analytic, sol.psi * env, env, mean_n, var_n)


def time_evolution(params: ModelParams, t_grid: Sequence[float],
                   basis: SingleSiteBasis | None = None, opts: SolverOptions | None = None,
                   threads: int | None = None) -> list[TimeEvolutionSample]:
    """psi(t), the e^{-Gamma t} envelope and site number statistics on ``t_grid``.

    The numeric column is the fixed point at hopping zkappa e^{-2 gamma t}
    times the envelope. Off resonance psi_analytic is NaN and the envelope
    uses the decay of the numeric ground level.
    """
    if any(t < 0 for t in t_grid):
        raise ValueError("times must be non-negative")
    basis = basis or build_basis(8)
    return map_ordered(lambda t: _evolution_sample(params, float(t), basis, opts),
                       t_grid, threads)


def _ramp_peak(params, ramp):
    g = params.gamma
    if g == 0:
        t_peak = ramp.t_end if ramp.rate > 0 else 0.0
    elif ramp.rate == 0:
        t_peak = 0.0
    else:
        t_peak = min(max(1.0 / (2.0 * g) - params.z * ramp.kappa0 / ramp.rate, 0.0), ramp.t_end)
    return t_peak


def ramp_trajectory(params: ModelParams, ramp: RampSpec, basis: SingleSiteBasis | None = None,
                    opts: SolverOptions | None = None, threads: int | None = None
                    ) -> tuple[list[TimeEvolutionSample], RampReport]:
    """Quasi-static hopping ramp zkappa(t) = z kappa0 + rate * t under decay.

    The transition is reached once (z kappa0 + rate t) e^{-2 gamma t} meets the
    loss-shifted t = 0 boundary. ``params.kappa`` is ignored.
    """
    basis = basis or build_basis(8)
    z, g = params.z, params.gamma

    def eff(t):
        return (z * ramp.kappa0 + ramp.rate * t) * math.exp(-2.0 * g * t)

    times = ramp.times()
    samples = map_ordered(
        lambda t: _evolution_sample(params.replace(kappa=ramp.kappa0 + ramp.rate * t / z),
                                    float(t), basis, opts),
        times, threads)

    zc = critical_coupling(params, 0.0) if params.is_resonant() else None
    t_peak = _ramp_peak(params, ramp)
    peak = eff(t_peak)
    t_cross = index = None
    if zc is not None and peak >= zc:
        if eff(0.0) >= zc:
            t_cross = 0.0
        else:
            t_cross = float(brentq(lambda t: eff(t) - zc, 0.0, t_peak, xtol=1e-14, rtol=1e-15))
        above = [i for i, t in enumerate(times) if eff(t) >= zc]
        index = above[0] if above else None
    report = RampReport(t_cross is not None, t_cross, index, zc, peak, t_peak)
    return samples, report
