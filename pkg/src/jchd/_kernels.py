"""Hot loops of the mean-field solver.

Every kernel is written in the nopython subset so the same source runs either
compiled by numba or as plain numpy. Set ``JCHD_DISABLE_NUMBA=1`` to force the
numpy path (also used automatically when numba is missing).

Basis index of |atom, photons> is ``2 * photons + atom`` with atom 0 = g, 1 = e.
"""
import os

import numpy as np

_disabled = os.environ.get("JCHD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    import numba

    USING_NUMBA = True

    def jit(func):
        return numba.njit(cache=True, nogil=True)(func)

except ImportError:
    USING_NUMBA = False

    def jit(func):
        return func


@jit
def build_hamiltonian(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, psi, n_max):
    dim = 2 * (n_max + 1)
    h = np.zeros((dim, dim), dtype=np.complex128)
    om_a = complex(omega_a - mu, -gamma_a)
    om_c = complex(omega_c - mu, -gamma_c)
    offset = zkappa * psi * psi
    for n in range(n_max + 1):
        g = 2 * n
        e = 2 * n + 1
        h[g, g] = n * om_c + offset
        h[e, e] = om_a + n * om_c + offset
        if n > 0:
            root = np.sqrt(n)
            # atom-photon exchange |g,n> <-> |e,n-1>
            h[e - 2, g] = beta * root
            h[g, e - 2] = beta * root
            # decoupled hopping field on the photon mode
            h[g - 2, g] = -zkappa * psi * root
            h[g, g - 2] = -zkappa * psi * root
            h[e - 2, e] = -zkappa * psi * root
            h[e, e - 2] = -zkappa * psi * root
    return h


@jit
def lowest_eigenpair(h):
    """Eigenpair with minimal real eigenvalue and the gap to the next one."""
    w, v = np.linalg.eig(h)
    re = w.real
    k = np.argmin(re)
    gap = np.inf
    for i in range(re.shape[0]):
        if i != k and re[i] - re[k] < gap:
            gap = re[i] - re[k]
    vec = v[:, k].copy()
    vec = vec / np.sqrt(np.sum(np.abs(vec) ** 2))
    j = np.argmax(np.abs(vec))
    vec = vec * (np.conj(vec[j]) / np.abs(vec[j]))
    return w[k], vec, gap


@jit
def expect_annihilation(vec, n_max):
    """<vec| C |vec> for the photon annihilation operator."""
    acc = 0j
    for n in range(1, n_max + 1):
        root = np.sqrt(n)
        for atom in range(2):
            acc += np.conj(vec[2 * (n - 1) + atom]) * root * vec[2 * n + atom]
    return acc


@jit
def number_moments(vec, n_max):
    """Mean and variance of A^dag A + C^dag C, and the mean photon number."""
    mean_n = 0.0
    mean_n2 = 0.0
    photons = 0.0
    for n in range(n_max + 1):
        for atom in range(2):
            p = np.abs(vec[2 * n + atom]) ** 2
            k = n + atom
            mean_n += k * p
            mean_n2 += k * k * p
            photons += n * p
    return mean_n, max(mean_n2 - mean_n * mean_n, 0.0), photons


@jit
def _self_consistency_map(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, psi, n_max):
    h = build_hamiltonian(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, psi, n_max)
    energy, vec, gap = lowest_eigenpair(h)
    c = expect_annihilation(vec, n_max)
    return max(c.real, 0.0), c.imag, energy, vec, gap


@jit
def _zero_is_stable(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, n_max):
    probe = 1e-8
    slope = _self_consistency_map(
        omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, probe, n_max)[0] / probe
    return slope < 1.0


@jit
def solve_fixed_point(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, n_max,
                      psi0, tol, max_iter, mixing, accelerate):
    """Iterate psi -> max(0, Re<C>) to self-consistency.

    With ``accelerate`` each sweep takes an Aitken (Steffensen) extrapolation
    of two map evaluations; critical slowing down near the phase boundary
    otherwise needs ~1/|distance| sweeps. Sign flips of successive steps
    switch on linear mixing in the plain iteration.

    Convergence is declared on the error estimate |step| / |1 - slope|, with
    the slope of the map taken from consecutive steps, so a slowly creeping
    iteration is not mistaken for a fixed point.
    """
    upper = np.sqrt(n_max) + 1.0
    psi = psi0
    prev_step = 0.0
    residual = np.inf
    converged = False
    min_gap = np.inf
    g1, im1, energy, vec, gap = _self_consistency_map(
        omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, psi, n_max)
    it = 0
    while it < max_iter:
        it += 1
        if gap < min_gap:
            min_gap = gap
        step = g1 - psi
        residual = abs(step)
        if step == 0.0:
            converged = True
            break
        new = g1
        if accelerate:
            g2 = _self_consistency_map(
                omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, g1, n_max)[0]
            slope = (g2 - g1) / step
        else:
            slope = step / prev_step if prev_step != 0.0 else 0.0
        if residual < tol * max(abs(1.0 - slope), 1e-12):
            converged = True
            psi = g1
            break
        if accelerate:
            denom = g2 - 2.0 * g1 + psi
            new = g2
            if denom != 0.0:
                cand = psi - step * step / denom
                if cand >= 0.0 and cand <= upper:
                    new = cand
                elif cand < 0.0 and _zero_is_stable(omega_a, gamma_a, omega_c, gamma_c,
                                                    beta, mu, zkappa, n_max):
                    new = 0.0
        elif prev_step * step < 0.0:
            new = psi + mixing * step
        prev_step = step
        psi = new
        g1, im1, energy, vec, gap = _self_consistency_map(
            omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, psi, n_max)
    if converged and 0.0 < psi < 1e-6:
        # linear regime: psi = 0 is the fixed point iff it is stable
        if _zero_is_stable(omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, n_max):
            psi = 0.0
            g1, im1, energy, vec, gap = _self_consistency_map(
                omega_a, gamma_a, omega_c, gamma_c, beta, mu, zkappa, 0.0, n_max)
    return psi, abs(im1), energy, vec, it, residual, converged, min_gap


@jit
def bisect_boundary(omega_a, gamma_a, omega_c, gamma_c, beta, mu, n_max,
                    lo, hi, xtol, max_bisect, threshold,
                    psi0, tol, max_iter, mixing, accelerate):
    """Smallest superfluid hopping zkappa in [lo, hi] by bisection.

    Returns (zkappa_c, status): status 0 ok, 1 Mott up to ``hi``,
    2 solver failure.
    """
    out = solve_fixed_point(omega_a, gamma_a, omega_c, gamma_c, beta, mu, hi, n_max,
                            psi0, tol, max_iter, mixing, accelerate)
    if not out[6]:
        return np.nan, 2
    if out[0] <= threshold:
        return np.nan, 1
    for _ in range(max_bisect):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        out = solve_fixed_point(omega_a, gamma_a, omega_c, gamma_c, beta, mu, mid, n_max,
                                psi0, tol, max_iter, mixing, accelerate)
        if not out[6]:
            return np.nan, 2
        if out[0] > threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), 0
