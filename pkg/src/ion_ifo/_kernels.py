"""Inner loops shared by the dynamics, overlap and tdse modules.

Each kernel has a numba implementation (``*_nb``) and a numpy implementation
(``*_np``) with identical signatures. The public names are bound according to
:data:`ion_ifo._backend.USE_NUMBA`; both variants stay importable so the
benchmark and the equivalence tests can call them side by side.
"""

import math

import numpy as np

from ._backend import USE_NUMBA, njit

__all__ = [
    "rk4_oscillator",
    "apply_potential_phase",
    "hermite_functions",
    "shoelace_area",
    "IMPLEMENTATIONS",
]


# --- RK4 for y'' + w^2 y = F/m -------------------------------------------------

@njit(cache=True)
def rk4_oscillator_nb(force, omega2, inv_mass, dt, y0, v0):
    steps = (force.shape[0] - 1) // 2
    y = np.empty(steps + 1)
    v = np.empty(steps + 1)
    y[0] = y0
    v[0] = v0
    h = 0.5 * dt
    for n in range(steps):
        yn = y[n]
        vn = v[n]
        a0 = force[2 * n] * inv_mass
        ah = force[2 * n + 1] * inv_mass
        a1 = force[2 * n + 2] * inv_mass
        k1y = vn
        k1v = a0 - omega2 * yn
        k2y = vn + h * k1v
        k2v = ah - omega2 * (yn + h * k1y)
        k3y = vn + h * k2v
        k3v = ah - omega2 * (yn + h * k2y)
        k4y = vn + dt * k3v
        k4v = a1 - omega2 * (yn + dt * k3y)
        y[n + 1] = yn + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v[n + 1] = vn + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return y, v


def rk4_oscillator_np(force, omega2, inv_mass, dt, y0, v0):
    # RK4 is inherently sequential; the fallback is a plain loop over floats.
    acc = (np.asarray(force, dtype=float) * inv_mass).tolist()
    steps = (len(acc) - 1) // 2
    ys = [float(y0)]
    vs = [float(v0)]
    yn, vn = float(y0), float(v0)
    h = 0.5 * dt
    for n in range(steps):
        a0, ah, a1 = acc[2 * n], acc[2 * n + 1], acc[2 * n + 2]
        k1y = vn
        k1v = a0 - omega2 * yn
        k2y = vn + h * k1v
        k2v = ah - omega2 * (yn + h * k1y)
        k3y = vn + h * k2v
        k3v = ah - omega2 * (yn + h * k2y)
        k4y = vn + dt * k3v
        k4v = a1 - omega2 * (yn + dt * k3y)
        yn = yn + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        vn = vn + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        ys.append(yn)
        vs.append(vn)
    return np.array(ys), np.array(vs)


# --- split-step potential factor ---------------------------------------------

@njit(cache=True)
def apply_potential_phase_nb(psi, base, profile, coef):
    nb, nx = psi.shape
    for b in range(nb):
        cb = coef[b]
        for i in range(nx):
            ph = base[b, i] + cb * profile[b, i]
            psi[b, i] *= complex(math.cos(ph), -math.sin(ph))


def apply_potential_phase_np(psi, base, profile, coef):
    psi *= np.exp(-1j * (base + coef[:, None] * profile))


# --- normalized Hermite functions --------------------------------------------

@njit(cache=True)
def hermite_functions_nb(n_max, xi):
    m = xi.shape[0]
    out = np.empty((n_max + 1, m))
    norm0 = math.pi ** -0.25
    for i in range(m):
        out[0, i] = norm0 * math.exp(-0.5 * xi[i] * xi[i])
    if n_max >= 1:
        r2 = math.sqrt(2.0)
        for i in range(m):
            out[1, i] = r2 * xi[i] * out[0, i]
    for n in range(1, n_max):
        a = math.sqrt(2.0 / (n + 1))
        b = math.sqrt(n / (n + 1.0))
        for i in range(m):
            out[n + 1, i] = a * xi[i] * out[n, i] - b * out[n - 1, i]
    return out


def hermite_functions_np(n_max, xi):
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1, xi.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xi * xi)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


# --- polygon area in the (Y, P) plane -----------------------------------------

@njit(cache=True)
def shoelace_area_nb(y, p):
    acc = 0.0
    for i in range(y.shape[0] - 1):
        acc += y[i] * p[i + 1] - p[i] * y[i + 1]
    return 0.5 * acc


def shoelace_area_np(y, p):
    return 0.5 * float(np.sum(y[:-1] * p[1:] - p[:-1] * y[1:]))


IMPLEMENTATIONS = {
    "numba": {
        "rk4_oscillator": rk4_oscillator_nb,
        "apply_potential_phase": apply_potential_phase_nb,
        "hermite_functions": hermite_functions_nb,
        "shoelace_area": shoelace_area_nb,
    },
    "numpy": {
        "rk4_oscillator": rk4_oscillator_np,
        "apply_potential_phase": apply_potential_phase_np,
        "hermite_functions": hermite_functions_np,
        "shoelace_area": shoelace_area_np,
    },
}

_active = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]
rk4_oscillator = _active["rk4_oscillator"]
apply_potential_phase = _active["apply_potential_phase"]
hermite_functions = _active["hermite_functions"]
shoelace_area = _active["shoelace_area"]
