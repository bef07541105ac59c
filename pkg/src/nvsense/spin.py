"""
Two-level spin evolution in the rotating frame.

The Hamiltonian of one ensemble member is

    H = (Delta / 2) sigma_z + (Omega_eff / 2) sigma_x

with ``Delta`` the total detuning and ``Omega_eff = alpha * Omega_R`` the
member's effective Rabi frequency, both in rad/us.  Pure states are propagated
with the closed-form SU(2) propagator.  Density matrices are propagated with the
exact exponential of the 4x4 Liouvillian acting on the row-major vectorised
density matrix ``[rho00, rho01, rho10, rho11]``.

Two dephasing forms are available:

``trace-preserving`` (default)
    (Gamma/2) (sz rho sz - rho); coherences decay as exp(-Gamma t).
``literal``
    Gamma (sz rho sz - sz sz rho / 8 - rho sz sz / 8), the one-eighth form
    taken at face value.  It does not preserve the trace and is provided only
    for comparison.

The array kernels (:func:`rabi_propagator`, :func:`superpropagator`, ...)
broadcast over arbitrary leading shapes and are what the sweep modules use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

TRACE_PRESERVING = "trace-preserving"
LITERAL = "literal"
_FORM_ALIASES = {
    "trace-preserving": TRACE_PRESERVING,
    "literal": LITERAL,
    "paper-literal": LITERAL,
}

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def canonical_dephasing_form(form: str) -> str:
    try:
        return _FORM_ALIASES[form]
    except KeyError:
        raise ValueError(
            f"unknown dephasing form {form!r}; expected one of {sorted(_FORM_ALIASES)}"
        ) from None


@dataclass(frozen=True)
class SpinState:
    """Pure state ``amp0 |0> + amp1 |1>``."""

    amp0: complex
    amp1: complex

    @classmethod
    def ground(cls) -> "SpinState":
        return cls(1.0 + 0j, 0j)

    def as_array(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    def norm(self) -> float:
        return float(abs(self.amp0) ** 2 + abs(self.amp1) ** 2)


@dataclass(frozen=True)
class DensityMatrix2:
    """2x2 density matrix; ``rho10`` is derived from ``rho01`` so the matrix is Hermitian by construction."""

    rho00: float
    rho01: complex
    rho11: float

    @property
    def rho10(self) -> complex:
        return complex(np.conj(self.rho01))

    @classmethod
    def ground(cls) -> "DensityMatrix2":
        return cls(1.0, 0j, 0.0)

    @classmethod
    def from_state(cls, state: SpinState) -> "DensityMatrix2":
        a, b = state.amp0, state.amp1
        return cls(float(abs(a) ** 2), complex(a * np.conj(b)), float(abs(b) ** 2))

    @classmethod
    def from_array(cls, rho) -> "DensityMatrix2":
        rho = np.asarray(rho, dtype=complex).reshape(2, 2)
        # Hermitian part only; discards antihermitian round-off.
        off = 0.5 * (rho[0, 1] + np.conj(rho[1, 0]))
        return cls(float(rho[0, 0].real), complex(off), float(rho[1, 1].real))

    def as_array(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)

    def vec(self) -> np.ndarray:
        return self.as_array().reshape(4)

    def trace(self) -> float:
        return float(self.rho00 + self.rho11)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())


@dataclass(frozen=True)
class DriveSettings:
    """Drive seen by one member: total detuning and effective Rabi frequency in rad/us, dephasing rate in 1/us."""

    delta_total: float
    rabi_effective: float
    gamma_pure: float = 0.0
    dephasing_form: str = TRACE_PRESERVING

    def __post_init__(self):
        if self.rabi_effective < 0:
            raise ValueError(f"rabi_effective must be >= 0, got {self.rabi_effective}")
        if self.gamma_pure < 0:
            raise ValueError(f"gamma_pure must be >= 0, got {self.gamma_pure}")
        object.__setattr__(self, "dephasing_form", canonical_dephasing_form(self.dephasing_form))


# ---------------------------------------------------------------------------
# Array kernels
# ---------------------------------------------------------------------------

def _half_angle_terms(delta, rabi, t):
    delta = np.asarray(delta, dtype=float)
    rabi = np.asarray(rabi, dtype=float)
    t = np.asarray(t, dtype=float)
    omega_gen = np.sqrt(delta**2 + rabi**2)
    half = 0.5 * omega_gen * t
    # sin(Omega_gen t / 2) / Omega_gen, finite as Omega_gen -> 0
    s_over = 0.5 * t * np.sinc(half / np.pi)
    return np.cos(half), s_over, delta, rabi


def rabi_propagator(delta, rabi, t) -> np.ndarray:
    """Closed-form ``exp(-i H t)``; returns shape ``broadcast(delta, rabi, t).shape + (2, 2)``.

    ``U = cos(W t/2) I - i sin(W t/2)/W (delta sz + rabi sx)`` with
    ``W = sqrt(delta**2 + rabi**2)``.
    """
    c, s_over, delta, rabi = _half_angle_terms(delta, rabi, t)
    shape = np.broadcast(c, s_over, delta, rabi).shape
    u = np.empty(shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * s_over * delta
    u[..., 1, 1] = c + 1j * s_over * delta
    u[..., 0, 1] = -1j * s_over * rabi
    u[..., 1, 0] = -1j * s_over * rabi
    return u


def transition_probability(delta, rabi, t):
    """Rabi formula ``(rabi/W)^2 sin^2(W t / 2)`` for a spin starting in |0>."""
    _, s_over, _, rabi = _half_angle_terms(delta, rabi, t)
    return (rabi * s_over) ** 2


def liouvillian(delta, rabi, gamma_pure, form: str = TRACE_PRESERVING) -> np.ndarray:
    """Generator of ``d vec(rho)/dt`` for the row-major vectorisation; shape ``(..., 4, 4)``."""
    form = canonical_dephasing_form(form)
    delta, rabi, gamma_pure = np.broadcast_arrays(
        np.asarray(delta, dtype=float),
        np.asarray(rabi, dtype=float),
        np.asarray(gamma_pure, dtype=float),
    )
    h = 0.5 * (delta[..., None, None] * SIGMA_Z + rabi[..., None, None] * SIGMA_X)
    eye = _I2
    # vec(A rho B) = (A kron B^T) vec(rho)
    gen = -1j * (
        np.einsum("...ij,kl->...ikjl", h, eye).reshape(h.shape[:-2] + (4, 4))
        - np.einsum("ij,...lk->...ikjl", eye, h).reshape(h.shape[:-2] + (4, 4))
    )
    zz = np.kron(SIGMA_Z, SIGMA_Z.T)
    if form == TRACE_PRESERVING:
        dephase = 0.5 * (zz - np.eye(4))
    else:
        # sz sz = I, so both one-eighth anticommutator terms reduce to rho / 8
        dephase = zz - 0.25 * np.eye(4)
    return gen + gamma_pure[..., None, None] * dephase


def superpropagator(delta, rabi, gamma_pure, t, form: str = TRACE_PRESERVING) -> np.ndarray:
    """``expm(L t)`` for the (broadcast) Liouvillian; shape ``(..., 4, 4)``."""
    gen = liouvillian(delta, rabi, gamma_pure, form)
    t = np.asarray(t, dtype=float)
    gen = gen * t[..., None, None]
    if gen.ndim == 2:
        return expm(gen)
    flat = gen.reshape((-1, 4, 4))
    return expm(flat).reshape(gen.shape)


def free_precession_rates(delta, gamma_pure, form: str = TRACE_PRESERVING) -> np.ndarray:
    """Diagonal of the Liouvillian at zero drive, shape ``(..., 4)``.

    With no drive the generator is diagonal, so free precession over ``tau`` is
    the elementwise factor ``exp(rates * tau)``.
    """
    form = canonical_dephasing_form(form)
    delta, gamma_pure = np.broadcast_arrays(
        np.asarray(delta, dtype=float), np.asarray(gamma_pure, dtype=float)
    )
    rates = np.empty(delta.shape + (4,), dtype=complex)
    if form == TRACE_PRESERVING:
        pop, coh = 0.0, -gamma_pure
    else:
        pop, coh = 0.75 * gamma_pure, -1.25 * gamma_pure
    rates[..., 0] = pop
    rates[..., 3] = pop
    rates[..., 1] = -1j * delta + coh
    rates[..., 2] = 1j * delta + coh
    return rates


# ---------------------------------------------------------------------------
# Object-level operations
# ---------------------------------------------------------------------------

def _check_duration(t: float) -> None:
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")


def evolve_pure(state: SpinState, drive: DriveSettings, t: float) -> SpinState:
    """Propagate a pure state for ``t`` us; dephasing in ``drive`` is ignored."""
    _check_duration(t)
    u = rabi_propagator(drive.delta_total, drive.rabi_effective, t)
    out = u @ state.as_array()
    return SpinState(complex(out[0]), complex(out[1]))


def evolve_density(rho: DensityMatrix2, drive: DriveSettings, t: float) -> DensityMatrix2:
    """Propagate a density matrix for ``t`` us under the drive and its dephasing."""
    _check_duration(t)
    prop = superpropagator(
        drive.delta_total, drive.rabi_effective, drive.gamma_pure, t, drive.dephasing_form
    )
    return DensityMatrix2.from_array(prop @ rho.vec())


def contrast(state) -> float:
    """Population of |1>: ``|<1|psi>|^2`` for a pure state, ``rho11`` for a density matrix."""
    if isinstance(state, SpinState):
        return float(abs(state.amp1) ** 2)
    if isinstance(state, DensityMatrix2):
        return float(state.rho11)
    raise TypeError(f"expected SpinState or DensityMatrix2, got {type(state).__name__}")
