"""Second-order results for the one-excitation Mott lobe on resonance.

With the site prepared in |-,1>, hopping couples it to the empty level and
to the two-excitation level |-,2>. Writing the grand-canonical gaps

    F1 = omega_c - beta - mu           (|-,1> relative to |0>)
    F2 = -omega_c + (sqrt2 - 1) beta + mu   (|-,1> relative to |-,2>)

and giving an n-excitation level the decay n * gamma, the hopping-free
part of the Landau coefficient is

    S = F1 / (2 F1^2 + 2 gamma^2) + (3 + 2 sqrt2) F2 / (4 F2^2 + 4 gamma^2)

so that chi = S + 1 / (zkappa e^{-2 gamma t}) and
psi = e^{-gamma t} sqrt(-chi / (zkappa e^{-2 gamma t} theta)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .meanfield import SingleSiteBasis, annihilation_matrix, build_mf_hamiltonian
from .model import ModelParams, total_decay

SQRT2 = math.sqrt(2.0)
# |<-,2| C^dag |-,1>|^2 = (1 + sqrt2)^2 / 4
UPPER_WEIGHT = 3.0 + 2.0 * SQRT2


class Outcome(enum.Enum):
    NEVER = "never"
    ALREADY_MOTT = "already Mott"


class NoHoppingError(ValueError):
    """chi diverges at zero hopping: the site is Mott-like for all times."""


@dataclass(frozen=True)
class ResonantCoefficients:
    f1: float
    f2: float
    theta: float
    chi: float
    t: float
    s: float


def _require_resonant(params):
    if not params.is_resonant():
        raise ValueError(f"closed form needs zero detuning (detuning={params.detuning!r})")


def gaps(params: ModelParams) -> tuple[float, float]:
    f1 = params.omega_c - params.beta - params.mu
    f2 = -params.omega_c + (SQRT2 - 1.0) * params.beta + params.mu
    return f1, f2


def _s_theta(f1, f2, gamma):
    d1 = 2.0 * f1 * f1 + 2.0 * gamma * gamma
    d2 = 4.0 * f2 * f2 + 4.0 * gamma * gamma
    s = f1 / d1 + UPPER_WEIGHT * f2 / d2
    theta = 1.0 / d1 + UPPER_WEIGHT / d2
    return s, theta


def in_lobe(params: ModelParams) -> bool:
    """True when |-,1> is the lossless site ground level (F1 < 0 and F2 < 0)."""
    f1, f2 = gaps(params)
    return f1 < 0 and f2 < 0


def hopping_free_coefficient(params: ModelParams) -> float:
    _require_resonant(params)
    return _s_theta(*gaps(params), params.gamma)[0]


def resonant_coefficients(params: ModelParams, t: float = 0.0) -> ResonantCoefficients:
    _require_resonant(params)
    if t < 0:
        raise ValueError("t must be non-negative")
    if params.zkappa == 0:
        raise NoHoppingError("zero hopping: chi diverges, Mott-like for all couplings")
    f1, f2 = gaps(params)
    g = params.gamma
    s, theta = _s_theta(f1, f2, g)
    chi = s + 1.0 / (params.zkappa * math.exp(-2.0 * g * t))
    return ResonantCoefficients(f1, f2, theta, chi, t, s)


def psi_analytic(params: ModelParams, t: float = 0.0) -> float:
    rc = resonant_coefficients(params, t)
    if not rc.chi < 0:
        return 0.0
    g = params.gamma
    zk_eff = params.zkappa * math.exp(-2.0 * g * t)
    return math.exp(-g * t) * math.sqrt(-rc.chi / (zk_eff * rc.theta))


def critical_coupling(params: ModelParams, t: float = 0.0) -> float | None:
    """zkappa where chi(t) = 0, or None when no coupling reaches the superfluid.

    None covers S >= 0 and any mu outside the lossless n = 1 lobe, where the
    closed form does not describe the site ground level.
    """
    _require_resonant(params)
    if t < 0:
        raise ValueError("t must be non-negative")
    if not in_lobe(params):
        return None
    s = hopping_free_coefficient(params)
    if s >= 0:
        return None
    return -math.exp(2.0 * params.gamma * t) / s


def crossing_time(params: ModelParams) -> float | Outcome:
    """Time at which the decaying hopping zkappa e^{-2 gamma t} meets the t=0 boundary.

    The positive root ln(zkappa / zkappa_c) / (2 gamma) is returned;
    ``Outcome.ALREADY_MOTT`` when zkappa is below the boundary from the start
    and ``Outcome.NEVER`` for a lossless superfluid.
    """
    _require_resonant(params)
    zc = critical_coupling(params, 0.0)
    if zc is None or params.zkappa < zc:
        return Outcome.ALREADY_MOTT
    if params.gamma == 0:
        return Outcome.NEVER
    return math.log(params.zkappa / zc) / (2.0 * params.gamma)


def _block(h, excit, n):
    idx = np.flatnonzero(excit == n)
    w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
    full = np.zeros((h.shape[0], len(idx)), dtype=np.complex128)
    full[idx, :] = v
    return w, full


def pt_coefficients_numeric(params: ModelParams, basis: SingleSiteBasis, t: float = 0.0,
                            intermediates: str = "negative") -> tuple[float, float]:
    """(chi, theta) by explicit second-order sums over diagonalized dressed levels.

    The hopping-free lossless site matrix is diagonalized block by block in
    excitation number; the reference level is the lower one-excitation
    eigenvector. Each level with n excitations gets the complex energy
    E - 1j * n * gamma, and for every intermediate level m

        chi   += |<m|C + C^dag|ref>|^2 * Re(1 / (eps_ref - eps_m))
        theta += |<m|C + C^dag|ref>|^2 / |eps_ref - eps_m|^2

    ``intermediates="negative"`` keeps {|0>, |-,2>} as the closed form does;
    ``"all"`` adds |+,2>.
    """
    if basis.n_max < 2:
        raise ValueError("n_max >= 2 needed: two-excitation intermediate levels are truncated")
    if intermediates not in ("negative", "all"):
        raise ValueError(f"unknown intermediate set {intermediates!r}")
    if t < 0:
        raise ValueError("t must be non-negative")
    if params.gamma > 0 and not params.is_resonant():
        raise ValueError("level decay rates are only defined at zero detuning")
    zk_eff = params.zkappa * math.exp(-2.0 * params.gamma * t)
    if zk_eff == 0:
        raise NoHoppingError("zero hopping: chi diverges, Mott-like for all couplings")

    h0 = build_mf_hamiltonian(params.replace(gamma_a=0.0, gamma_c=0.0), 0.0, basis, zkappa=0.0)
    excit = basis.excitations()
    e0, v0 = _block(h0, excit, 0)
    e1, v1 = _block(h0, excit, 1)
    e2, v2 = _block(h0, excit, 2)
    decay = [total_decay(params, n) if params.gamma > 0 else 0.0 for n in range(3)]

    c = annihilation_matrix(basis)
    x = c + c.T
    ref = v1[:, 0]
    eps_ref = e1[0] - 1j * decay[1]
    levels = [(e0[0] - 1j * decay[0], v0[:, 0]), (e2[0] - 1j * decay[2], v2[:, 0])]
    if intermediates == "all":
        levels.append((e2[1] - 1j * decay[2], v2[:, 1]))

    chi = 1.0 / zk_eff
    theta = 0.0
    for eps, vec in levels:
        weight = abs(np.vdot(vec, x @ ref)) ** 2
        d = eps_ref - eps
        chi += weight * (1.0 / d).real
        theta += weight / abs(d) ** 2
    return float(chi), float(theta)
