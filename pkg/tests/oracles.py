"""Independent reference implementations used only by the tests.

None of these call into the closed-form kernels under test: they integrate or
solve the underlying equations directly.
"""

import numpy as np
from scipy.linalg import null_space
from scipy.stats import norm

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def hamiltonian(delta, rabi):
    return 0.5 * delta * SZ + 0.5 * rabi * SX


def rk4_schrodinger(psi0, delta, rabi, t, dt=1e-4):
    """Fixed-step RK4 on i dpsi/dt = H psi; the last step is shortened to land on ``t``."""
    h = hamiltonian(delta, rabi)
    psi = np.asarray(psi0, dtype=complex).copy()
    n = int(np.ceil(t / dt - 1e-12))
    step = t / n if n else 0.0

    def f(y):
        return -1j * (h @ y)

    for _ in range(n):
        k1 = f(psi)
        k2 = f(psi + 0.5 * step * k1)
        k3 = f(psi + 0.5 * step * k2)
        k4 = f(psi + step * k3)
        psi = psi + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def rk4_master(rho0, delta, rabi, gamma, t, dt=1e-4):
    """RK4 on d rho/dt = -i[H, rho] + (gamma/2)(sz rho sz - rho)."""
    h = hamiltonian(delta, rabi)
    rho = np.asarray(rho0, dtype=complex).copy()
    n = int(np.ceil(t / dt - 1e-12))
    step = t / n if n else 0.0

    def f(r):
        return -1j * (h @ r - r @ h) + 0.5 * gamma * (SZ @ r @ SZ - r)

    for _ in range(n):
        k1 = f(rho)
        k2 = f(rho + 0.5 * step * k1)
        k3 = f(rho + 0.5 * step * k2)
        k4 = f(rho + step * k3)
        rho = rho + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def ramsey_by_integration(delta, rabi, t_half, tau, dt=1e-4):
    """pi/2 - free precession - pi/2 from |0>, each step integrated with RK4."""
    psi = np.array([1.0, 0.0], dtype=complex)
    psi = rk4_schrodinger(psi, delta, rabi, t_half, dt)
    psi = rk4_schrodinger(psi, delta, 0.0, tau, dt)
    psi = rk4_schrodinger(psi, delta, rabi, t_half, dt)
    return abs(psi[1]) ** 2


def rabi_formula(delta, rabi, t):
    w2 = delta**2 + rabi**2
    if w2 == 0:
        return 0.0
    return rabi**2 / w2 * np.sin(0.5 * np.sqrt(w2) * t) ** 2


def five_level_null_space(delta, rabi, pump, gamma2p, k):
    """Steady state of the five-level populations plus the ground-state MW coherence.

    Unknowns ``[p1, p2, p3, p4, p5, x, y]`` with ``rho12 = x + i y``.  Returns
    the populations normalised to unit trace.
    """
    k31, k32, k41, k42 = k["k31"], k["k32"], k["k41"], k["k42"]
    k35, k45, k51, k52, k21 = k["k35"], k["k45"], k["k51"], k["k52"], k["k21"]
    a = np.zeros((7, 7))
    # p1
    a[0] = [-pump - k21 / 2, k21 / 2, k31, k41, k51, 0, -rabi]
    # p2
    a[1] = [k21 / 2, -pump - k21 / 2, k32, k42, k52, 0, rabi]
    # p3, p4, p5
    a[2] = [pump, 0, -(k31 + k32 + k35), 0, 0, 0, 0]
    a[3] = [0, pump, 0, -(k41 + k42 + k45), 0, 0, 0]
    a[4] = [0, 0, k35, k45, -(k51 + k52), 0, 0]
    # coherence: H = -delta/2 |1><1| + delta/2 |2><2| + rabi/2 (|1><2| + |2><1|)
    a[5] = [0, 0, 0, 0, 0, -gamma2p, -delta]
    a[6] = [rabi / 2, -rabi / 2, 0, 0, 0, delta, -gamma2p]
    ns = null_space(a)
    assert ns.shape[1] == 1, "steady state is not unique"
    v = ns[:, 0]
    p = v[:5] / v[:5].sum()
    return p


def five_level_intensity(delta, rabi, pump, gamma2p, k):
    p = five_level_null_space(delta, rabi, pump, gamma2p, k)
    b3 = (k["k31"] + k["k32"]) / (k["k31"] + k["k32"] + k["k35"])
    b4 = (k["k41"] + k["k42"]) / (k["k41"] + k["k42"] + k["k45"])
    return b3 * p[2] + b4 * p[3]


def truncated_gaussian_quantiles(fwhm, n):
    """Direct re-implementation of the truncated-Gaussian midpoint quantile sampler."""
    sigma = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    dist = norm(scale=sigma)
    lo, hi = dist.cdf(-fwhm), dist.cdf(fwhm)
    return np.array([dist.ppf(lo + (k - 0.5) / n * (hi - lo)) for k in range(1, n + 1)])
