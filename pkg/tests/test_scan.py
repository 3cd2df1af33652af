import math

import numpy as np
import pytest

from jchd.meanfield import build_basis
from jchd.perturbation import critical_coupling, crossing_time, gaps
from jchd.scan import (
    RampSpec,
    lobe_interval,
    lobe_mu_grid,
    lobe_tip,
    phase_boundary,
    ramp_trajectory,
    time_evolution,
)

from conftest import TIP_OFFSET, resonant

TIP_ZKC = 0.15986689303  # brute-force grid maximum of -1/S, lossless


def test_boundary_example_inside_lobe():
    (pt,) = phase_boundary(resonant(), [0.3])
    assert pt.zkappa_c_analytic == pytest.approx(0.14781413536667048, rel=1e-12)
    assert pt.zkappa_c_numeric == pytest.approx(pt.zkappa_c_analytic, rel=0.15)
    assert pt.mott_n == 1 and pt.error == ""


def test_boundary_of_empty_lobe():
    # below the n = 1 lobe: analytic branch has no answer; the numeric one finds the
    # vacuum boundary -1/S with S = -1/2 / (E(-,1) - mu) - 1/2 / (E(+,1) - mu)
    (pt,) = phase_boundary(resonant(), [-0.5])
    assert pt.zkappa_c_analytic is None
    assert pt.mott_n == 0
    assert pt.zkappa_c_numeric == pytest.approx(1 / (0.5 / 0.5 + 0.5 / 2.5), abs=2e-6)
    # deeper down the vacuum boundary leaves the [0, beta] bracket
    (pt,) = phase_boundary(resonant(), [-3.0])
    assert pt.zkappa_c_analytic is None and pt.zkappa_c_numeric is None


def test_boundary_collapses_at_lobe_edge():
    p = resonant()
    lo, hi = lobe_interval(p)
    pts = phase_boundary(p, [hi - 1e-2, hi - 1e-4, hi - 1e-6])
    an = [q.zkappa_c_analytic for q in pts]
    assert an[0] > an[1] > an[2] and an[2] < 1e-4
    assert all(q.zkappa_c_numeric == pytest.approx(q.zkappa_c_analytic, rel=0.15, abs=2e-6)
               for q in pts)


def test_boundary_rejects_empty_grid():
    with pytest.raises(ValueError):
        phase_boundary(resonant(), [])


def test_boundary_loss_consistency_in_lobe_interior():
    # within ~gamma of the lobe edges the closed form and the lossy matrix differ in
    # how levels are broadened; the 15% window is checked where |F1|, |F2| >= 2 gamma
    gamma = 0.05
    p = resonant(gamma_c=gamma)
    mus = [mu for mu in lobe_mu_grid(p, 30)
           if min(abs(f) for f in gaps(p.replace(mu=mu))) >= 2 * gamma]
    assert len(mus) >= 20
    for pt in phase_boundary(p, mus):
        assert pt.zkappa_c_numeric == pytest.approx(pt.zkappa_c_analytic, rel=0.15)


def test_boundary_erodes_exponentially():
    p = resonant(gamma_c=0.02)
    mus = lobe_mu_grid(p, 5)
    a = phase_boundary(p, mus, t=0.0)
    b = phase_boundary(p, mus, t=3.0)
    for x, y in zip(a, b):
        assert y.zkappa_c_analytic == pytest.approx(x.zkappa_c_analytic * math.exp(0.12),
                                                    rel=1e-13)
        assert y.zkappa_c_numeric == pytest.approx(x.zkappa_c_numeric * math.exp(0.12),
                                                   rel=1e-13)


def test_boundary_schedule_independent():
    p = resonant(gamma_c=0.01)
    mus = lobe_mu_grid(p, 8)
    assert phase_boundary(p, mus, threads=1) == phase_boundary(p, mus, threads=4)


def test_lobe_tip_lossless():
    mu, zc = lobe_tip(resonant())
    assert zc == pytest.approx(TIP_ZKC, rel=1e-9)
    assert mu - 1.0 == pytest.approx(TIP_OFFSET, abs=1e-5)


def test_lobe_tip_with_loss():
    _, zc0 = lobe_tip(resonant())
    _, zc = lobe_tip(resonant(gamma_c=0.05))
    assert zc == pytest.approx(0.165, abs=5e-4)
    assert zc - zc0 == pytest.approx(0.005, rel=0.2)
    _, later = lobe_tip(resonant(gamma_c=0.05), t=0.1 / 0.05)
    assert later == pytest.approx(zc * math.exp(0.2), rel=1e-9)


def test_lobe_tip_shift_invariance():
    mu0, zc0 = lobe_tip(resonant(omega=1.0))
    mu1, zc1 = lobe_tip(resonant(omega=7.25))
    assert zc1 == pytest.approx(zc0, rel=1e-8)
    assert mu1 - mu0 == pytest.approx(6.25, abs=1e-5)


def test_lobe_tip_numeric():
    _, zc = lobe_tip(resonant(), method="numeric")
    assert zc == pytest.approx(TIP_ZKC, rel=0.15)
    with pytest.raises(ValueError):
        lobe_tip(resonant(), method="magic")


def test_time_evolution_crossing(tip_params):
    p = tip_params.replace(gamma_c=0.05)
    tc = crossing_time(p)
    assert tc == pytest.approx(1.93, abs=0.01)
    samples = time_evolution(p, [0.0, tc + 1e-9, 2.5])
    assert samples[0].psi_analytic > 0
    assert samples[1].psi_analytic == 0 and samples[2].psi_analytic == 0


def test_time_evolution_zero_crossing_on_grid(tip_params):
    p = tip_params.replace(gamma_c=0.05)
    tc = crossing_time(p)
    grid = np.linspace(0.0, 4.0, 401)
    samples = time_evolution(p, grid)
    first_zero = next(s.t for s in samples if s.psi_analytic == 0)
    assert 0 <= first_zero - tc <= grid[1] - grid[0]


def test_time_evolution_lossless_constant(tip_params):
    samples = time_evolution(tip_params, [0.0, 1.0, 5.0, 50.0])
    assert all(s == samples[0].__class__(s.t, *list(samples[0].__dict__.values())[1:])
               for s in samples)
    assert samples[0].psi_numeric > 0 and samples[0].envelope == 1.0


def test_time_evolution_beyond_crossing_is_mott(tip_params):
    p = tip_params.replace(gamma_c=0.05)
    tc = crossing_time(p)
    late = time_evolution(p, [tc + 1.0, tc + 3.0])
    for s in late:
        assert s.psi_numeric == 0 and s.psi_analytic == 0
        # |-,1> Mott state: one excitation, no number fluctuation
        assert s.mean_n == pytest.approx(1.0, abs=1e-12)
        assert s.var_n == pytest.approx(0.0, abs=1e-12)
        assert s.envelope == pytest.approx(math.exp(-0.05 * s.t))


def test_time_evolution_detuned():
    p = resonant(gamma_c=0.02, zkappa=0.3).replace(omega_a=0.95)
    (s,) = time_evolution(p, [1.0])
    assert math.isnan(s.psi_analytic)
    assert 0 < s.envelope < 1 and s.psi_numeric > 0


def test_ramp_without_growth_never_transitions():
    p = resonant(gamma_c=0.05)
    _, rep = ramp_trajectory(p, RampSpec(kappa0=0.1 / 4, rate=0.0, t_end=10.0, samples=11))
    assert not rep.reached and rep.t_transition is None


def test_ramp_lossless_linear_crossing():
    p = resonant()
    zc = critical_coupling(p)
    samples, rep = ramp_trajectory(p, RampSpec(kappa0=0.0, rate=0.04, t_end=10.0, samples=11))
    assert rep.reached
    assert rep.t_transition == pytest.approx(zc / 0.04, rel=1e-12)
    assert rep.sample_index == 4
    assert samples[0].psi_analytic == 0 and samples[-1].psi_analytic > 0


@pytest.mark.parametrize("factor, reached", [(0.99, False), (1.01, True)])
def test_ramp_against_decay(factor, reached):
    gamma = 0.05
    p = resonant(gamma_c=gamma)
    zc = critical_coupling(p)
    # max of r t e^{-2 gamma t} sits at t = 1/(2 gamma) with value r / (2 gamma e)
    rate = factor * zc * 2 * gamma * math.e
    _, rep = ramp_trajectory(p, RampSpec(kappa0=0.0, rate=rate, t_end=30.0, samples=31))
    assert rep.reached is reached
    assert rep.t_peak == pytest.approx(1 / (2 * gamma))
    if reached:
        assert 0 < rep.t_transition < rep.t_peak


def test_ramp_spec_validation():
    with pytest.raises(ValueError):
        RampSpec(0.0, 0.1, 0.0, 5)
    with pytest.raises(ValueError):
        RampSpec(0.0, 0.1, 1.0, 1)
