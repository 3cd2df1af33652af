"""Single-site mean-field Hamiltonian with lossy quasi-boson modes.

The decoupled hopping acts on the photon mode only, so the mean field is
``-zkappa * psi * (C^dag + C) + zkappa * psi**2``. Losses enter through the
complex mode frequencies ``omega - 1j * gamma``, which makes the matrix
non-Hermitian; its "ground state" is the right eigenvector whose eigenvalue
has the smallest real part.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import ModelParams

DEGENERACY_GAP = 1e-10
NORM_TOL = 1e-8


class EigensolverError(RuntimeError):
    """The dense eigendecomposition did not converge."""


class NearDegeneracyWarning(UserWarning):
    """Two eigenvalues share the minimal real part to within 1e-10."""


@dataclass(frozen=True)
class SingleSiteBasis:
    n_max: int
    states: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        states = tuple((atom, n) for n in range(self.n_max + 1) for atom in ("g", "e"))
        object.__setattr__(self, "states", states)

    @property
    def dimension(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, atom: str, photons: int) -> int:
        if atom not in ("g", "e") or not 0 <= photons <= self.n_max:
            raise ValueError(f"state |{atom},{photons}> not in basis")
        return 2 * photons + (atom == "e")

    def excitations(self) -> np.ndarray:
        """Total excitation number of each basis state."""
        return np.array([n + (atom == "e") for atom, n in self.states])


@dataclass(frozen=True)
class SolverOptions:
    psi0: float = 0.1
    tol: float = 1e-10
    max_iter: int = 10_000
    mixing: float = 0.5
    accelerate: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.mixing <= 1:
            raise ValueError("mixing must lie in (0, 1]")
        if not self.psi0 >= 0:
            raise ValueError("psi0 must be non-negative")


@dataclass(frozen=True)
class OrderParameterSolution:
    psi: float
    psi_gamma: float
    ground_energy: complex
    iterations: int
    residual: float
    converged: bool
    state: np.ndarray = field(repr=False, compare=False)
    zkappa_eff: float = 0.0

    @property
    def is_superfluid(self) -> bool:
        return self.converged and self.psi > 0


def build_basis(n_max: int) -> SingleSiteBasis:
    return SingleSiteBasis(n_max)


def _check_basis(basis):
    if not isinstance(basis, SingleSiteBasis):
        raise TypeError(f"expected SingleSiteBasis, got {type(basis).__name__}")


def build_mf_hamiltonian(params: ModelParams, psi: float, basis: SingleSiteBasis,
                         zkappa: float | None = None) -> np.ndarray:
    """Dense mean-field matrix for the order parameter ``psi``.

    ``zkappa`` overrides ``params.zkappa`` (used for the time-rescaled hopping).
    """
    _check_basis(basis)
    zk = params.zkappa if zkappa is None else zkappa
    return _kernels.build_hamiltonian(
        float(params.omega_a), float(params.gamma_a), float(params.omega_c),
        float(params.gamma_c), float(params.beta), float(params.mu),
        float(zk), float(psi), basis.n_max,
    )


def annihilation_matrix(basis: SingleSiteBasis) -> np.ndarray:
    """Photon annihilation operator C on the truncated basis."""
    _check_basis(basis)
    c = np.zeros((basis.dimension, basis.dimension))
    for n in range(1, basis.n_max + 1):
        for atom in (0, 1):
            c[2 * (n - 1) + atom, 2 * n + atom] = math.sqrt(n)
    return c


def ground_state(h: np.ndarray) -> tuple[complex, np.ndarray]:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {h.shape}")
    try:
        energy, vec, gap = _kernels.lowest_eigenpair(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    if gap < DEGENERACY_GAP:
        warnings.warn(f"near-degenerate ground state (gap {gap:.3g})", NearDegeneracyWarning,
                      stacklevel=2)
    return complex(energy), vec


def effective_zkappa(params: ModelParams, t: float) -> float:
    """Hopping zkappa * exp(-2 gamma t) seen by a site after time t."""
    return params.zkappa * math.exp(-2.0 * params.gamma * t)


def order_parameter_fixed_point(params: ModelParams, basis: SingleSiteBasis, t: float = 0.0,
                                opts: SolverOptions | None = None) -> OrderParameterSolution:
    """Self-consistent order parameter at time ``t``.

    A run that hits ``max_iter`` comes back with ``converged=False`` and the
    last residual; it is never silently reported as a Mott state.
    """
    _check_basis(basis)
    if t < 0:
        raise ValueError("t must be non-negative")
    opts = opts or SolverOptions()
    zk = effective_zkappa(params, t)
    try:
        psi, psi_g, energy, vec, it, resid, conv, gap = _kernels.solve_fixed_point(
            float(params.omega_a), float(params.gamma_a), float(params.omega_c),
            float(params.gamma_c), float(params.beta), float(params.mu), float(zk),
            basis.n_max, float(opts.psi0), float(opts.tol), int(opts.max_iter),
            float(opts.mixing), bool(opts.accelerate),
        )
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    if gap < DEGENERACY_GAP:
        warnings.warn(f"near-degenerate ground state (gap {gap:.3g})", NearDegeneracyWarning,
                      stacklevel=2)
    if conv and psi == 0.0:
        psi_g = 0.0
    return OrderParameterSolution(float(psi), float(psi_g), complex(energy), int(it),
                                  float(resid), bool(conv), vec, zk)


def truncation_check(params: ModelParams, n_max: int = 8, t: float = 0.0,
                     opts: SolverOptions | None = None) -> float:
    """|psi(n_max) - psi(n_max + 2)|; should stay below 1e-4."""
    a = order_parameter_fixed_point(params, build_basis(n_max), t, opts)
    b = order_parameter_fixed_point(params, build_basis(n_max + 2), t, opts)
    return abs(a.psi - b.psi)


def site_observables(state: np.ndarray, basis: SingleSiteBasis) -> tuple[float, float, float]:
    """(<n>, <n^2> - <n>^2, <C^dag C>) of a unit-norm state."""
    _check_basis(basis)
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (basis.dimension,):
        raise ValueError(f"state has shape {state.shape}, basis needs ({basis.dimension},)")
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm {norm!r})")
    mean_n, var_n, photons = _kernels.number_moments(state, basis.n_max)
    return float(mean_n), float(var_n), float(photons)
