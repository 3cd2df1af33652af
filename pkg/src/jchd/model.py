"""Single-site physics: parameters, dressed Jaynes-Cummings spectrum and loss rates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

Branch = Literal["plus", "minus"]

DETUNING_RTOL = 1e-9
HIGH_Q_THRESHOLD = 1e-2


@dataclass(frozen=True)
class ModelParams:
    """Rates of one lattice site plus the lattice coordination number.

    All quantities share one energy unit (hbar = 1). ``kappa`` is the
    hopping rate to each of the ``z`` nearest neighbours.
    """

    omega_a: float
    omega_c: float
    beta: float
    gamma_a: float = 0.0
    gamma_c: float = 0.0
    mu: float = 0.0
    z: int = 4
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("omega_a", "omega_c", "beta", "gamma_a", "gamma_c", "mu", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.gamma_a < 0 or self.gamma_c < 0:
            raise ValueError("decay rates must be non-negative")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if int(self.z) != self.z or self.z < 1:
            raise ValueError("z must be a positive integer")

    @property
    def detuning(self) -> float:
        return self.omega_c - self.omega_a

    @property
    def gamma(self) -> float:
        """Total single-excitation loss rate gamma_a + gamma_c."""
        return self.gamma_a + self.gamma_c

    @property
    def zkappa(self) -> float:
        return self.z * self.kappa

    def is_resonant(self, rtol: float = DETUNING_RTOL) -> bool:
        return abs(self.detuning) <= rtol * self.beta

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)

    def with_zkappa(self, zkappa: float) -> "ModelParams":
        return self.replace(kappa=zkappa / self.z)


@dataclass(frozen=True, eq=False)
class ComplexFrequency:
    """Complex quasi-boson frequency ``real - 1j * imag_decay``."""

    real: float
    imag_decay: float

    def __post_init__(self):
        if self.imag_decay < 0:
            raise ValueError("decay rate must be non-negative")

    @property
    def value(self) -> complex:
        return complex(self.real, -self.imag_decay)

    def __complex__(self) -> complex:
        return self.value

    def __eq__(self, other):
        if isinstance(other, ComplexFrequency):
            return self.value == other.value
        if isinstance(other, (int, float, complex)):
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash(self.value)


@dataclass(frozen=True)
class DressedLevel:
    n: int
    branch: str
    energy: float
    decay: float


def complex_frequency(omega: float, gamma: float) -> ComplexFrequency:
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    return ComplexFrequency(float(omega), float(gamma))


def dressed_energy(params: ModelParams, n: int, branch: Branch) -> float:
    """Energy of the dressed state |branch, n> for n >= 1.

    The empty level |0> (energy 0) is not a dressed state and is left to
    the caller.
    """
    if n < 1:
        raise ValueError(f"dressed states need n >= 1, got {n}")
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    d = params.detuning
    split = math.sqrt(n * params.beta**2 + d * d / 4.0)
    sign = 1.0 if branch == "plus" else -1.0
    return n * params.omega_c + sign * split - d / 2.0


def total_decay(params: ModelParams, n: int, rtol: float = DETUNING_RTOL) -> float:
    """Decay rate n * (gamma_a + gamma_c) of an n-excitation dressed level.

    Only valid on resonance; detuned parameters raise ``ValueError`` so that
    callers fall back to complex diagonalization.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if not params.is_resonant(rtol):
        raise ValueError(
            f"total_decay has a closed form only at zero detuning (detuning={params.detuning!r})"
        )
    return n * params.gamma


def quality_check(params: ModelParams, threshold: float = HIGH_Q_THRESHOLD) -> tuple[float, bool]:
    """Return the commutator correction gamma_c / omega_c and whether it is too large.

    The quasi-boson commutator is ``1 + 1j * gamma_c / omega_c``; the bosonic
    picture holds only while that correction is small (high-Q cavities).
    """
    if not params.omega_c > 0:
        raise ValueError("omega_c must be positive")
    ratio = params.gamma_c / params.omega_c
    return ratio, ratio > threshold


def dressed_levels(params: ModelParams, n_max: int) -> list[DressedLevel]:
    """Dressed ladder up to n_max, preceded by the empty level."""
    resonant = params.is_resonant()
    levels = [DressedLevel(0, "0", 0.0, 0.0)]
    for n in range(1, n_max + 1):
        decay = total_decay(params, n) if resonant else math.nan
        for branch in ("minus", "plus"):
            levels.append(DressedLevel(n, branch, dressed_energy(params, n, branch), decay))
    return levels
