"""Laser-ion interaction: resonant pulse unitaries and a numeric propagator.

All Hamiltonians here are divided by hbar, so they are angular
frequencies in rad/s and ``exp(-1j * H * t)`` is the propagator.

Pulse unitaries share one 2x2 form on the pair of kets a resonance
connects (lower-energy ket first)::

    [[cos(b/2),                  -1j*exp(-1j*phase)*sin(b/2)],
     [-1j*exp(1j*phase)*sin(b/2), cos(b/2)                  ]]

For the carrier the pair is ``(|g,n>, |e,n>)`` and ``b = beta``.  For the
red sideband it is ``(|g,n>, |e,n-1>)`` with ``b = beta*sqrt(n)``; for the
blue sideband ``(|g,n>, |e,n+1>)`` with ``b = beta*sqrt(n+1)``.  A
sideband ``beta`` is therefore the area ``eta*Omega*t`` of the n=1 rung.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .state import TRUNCATION_TOL, ChainSpec, HybridState, TruncationError

TWO_PI = 2 * math.pi
MAX_STEPS = 10_000_000
_AUX_TOL = 1e-9


class PulseKind(enum.Enum):
    CARRIER = "CARRIER"
    RED_SIDEBAND = "RSB"
    BLUE_SIDEBAND = "BSB"
    AUX_BLUE_SIDEBAND = "AUXBSB"


@dataclass(frozen=True)
class PulseInstruction:
    """One resonant laser pulse on one ion.

    ``phase`` is the phase that appears in the 2x2 unitary: the laser phase
    for the carrier and the shifted sideband phase (laser phase + pi/2) for
    sidebands.  It is reduced to ``[0, 2*pi)``.
    """

    kind: PulseKind
    ion: int
    beta: float
    phase: float = 0.0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, PulseKind) else PulseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.ion) != self.ion or self.ion < 0:
            raise ValueError(f"ion index must be a non-negative integer, got {self.ion!r}")
        object.__setattr__(self, "ion", int(self.ion))
        beta = float(self.beta)
        phase = float(self.phase)
        if not math.isfinite(beta) or not math.isfinite(phase):
            raise ValueError("pulse area and phase must be finite")
        if kind is PulseKind.AUX_BLUE_SIDEBAND:
            aux_cycles(beta)
            phase = 0.0
        phase = math.fmod(phase, TWO_PI)
        if phase < 0:
            phase += TWO_PI
        if phase >= TWO_PI:  # fmod of values just below 0 can round up to 2*pi
            phase = 0.0
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "phase", phase)

    def validate(self, spec: ChainSpec):
        if self.ion >= spec.n_ions:
            raise IndexError(f"pulse addresses ion {self.ion} but the chain has {spec.n_ions}")


@dataclass(frozen=True)
class LaserDrive:
    """Classical drive for the full interaction-picture Hamiltonian.

    ``detuning`` is laser minus atomic frequency.  ``eta`` overrides the
    chain's Lamb-Dicke parameter for this beam (it depends on the beam's
    projection onto the trap axis); ``None`` uses the chain value.
    """

    detuning: float
    omega_rabi: float
    phase: float = 0.0
    duration: float = 0.0
    eta: float | None = None

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"duration must be >= 0, got {self.duration!r}")
        if self.eta is not None and self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta!r}")


def aux_cycles(beta: float) -> int:
    """Number of full Rabi cycles in an auxiliary-level pulse of area ``beta``."""
    m = round(beta / TWO_PI)
    if abs(beta - TWO_PI * m) > _AUX_TOL:
        raise ValueError(f"auxiliary sideband area must be a multiple of 2*pi, got {beta!r}")
    return int(m)


def pulse_unitary(beta: float, phase: float) -> np.ndarray:
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return np.array(
        [
            [c, -1j * np.exp(-1j * phase) * s],
            [-1j * np.exp(1j * phase) * s, c],
        ]
    )


def carrier_unitary(beta: float, phase: float) -> np.ndarray:
    """2x2 carrier unitary on ``(|g,n>, |e,n>)``."""
    return pulse_unitary(beta, phase)


def _apply_array(arr: np.ndarray, spec: ChainSpec, instr: PulseInstruction) -> np.ndarray:
    """Apply ``instr`` to the columns of ``arr`` (shape ``(dim, K)``); returns a new array."""
    instr.validate(spec)
    d = spec.fock_cutoff
    out = np.array(arr, dtype=complex, copy=True)
    k = out.shape[1]
    view = out.reshape(2**instr.ion, 2, 2 ** (spec.n_ions - instr.ion - 1), d, k)
    g = view[:, 0]
    e = view[:, 1]
    kind = instr.kind
    if kind is PulseKind.AUX_BLUE_SIDEBAND:
        if aux_cycles(instr.beta) % 2:
            e[:, :, 1] *= -1
        return out

    off_lo = -1j * np.exp(-1j * instr.phase)  # multiplies sin on the upper-right entry
    off_hi = -1j * np.exp(1j * instr.phase)
    if kind is PulseKind.CARRIER:
        c, s = math.cos(instr.beta / 2), math.sin(instr.beta / 2)
        g0 = g.copy()
        g[...] = c * g0 + off_lo * s * e
        e[...] = off_hi * s * g0 + c * e
        return out

    rungs = np.sqrt(np.arange(1, d, dtype=float))
    half = (instr.beta * rungs / 2)[None, None, :, None]
    c, s = np.cos(half), np.sin(half)
    if kind is PulseKind.RED_SIDEBAND:
        lo, hi = g[:, :, 1:], e[:, :, :-1]  # |g,n> <-> |e,n-1>, n >= 1
    else:
        lo, hi = g[:, :, :-1], e[:, :, 1:]  # |g,n> <-> |e,n+1>
    lo0 = lo.copy()
    lo[...] = c * lo0 + off_lo * s * hi
    hi[...] = off_hi * s * lo0 + c * hi
    return out


def _top_level_amplitude(arr: np.ndarray, spec: ChainSpec) -> float:
    return float(np.max(np.abs(arr.reshape(spec.n_atomic, spec.fock_cutoff, -1)[:, -1])))


def apply_pulse(s: HybridState, instr: PulseInstruction) -> HybridState:
    out = _apply_array(s.amplitudes.reshape(-1, 1), s.spec, instr)
    if instr.kind is PulseKind.BLUE_SIDEBAND:
        top = _top_level_amplitude(out, s.spec)
        if top > TRUNCATION_TOL:
            raise TruncationError(
                f"blue sideband on ion {instr.ion} put amplitude {top:.3g} on the last "
                f"Fock level (cutoff {s.spec.fock_cutoff})"
            )
    return HybridState(s.spec, out[:, 0])


def apply_carrier(s: HybridState, ion: int, beta: float, phase: float) -> HybridState:
    return apply_pulse(s, PulseInstruction(PulseKind.CARRIER, ion, beta, phase))


def apply_red_sideband(s: HybridState, ion: int, beta: float, phase: float) -> HybridState:
    return apply_pulse(s, PulseInstruction(PulseKind.RED_SIDEBAND, ion, beta, phase))


def apply_blue_sideband(s: HybridState, ion: int, beta: float, phase: float) -> HybridState:
    return apply_pulse(s, PulseInstruction(PulseKind.BLUE_SIDEBAND, ion, beta, phase))


def apply_aux_blue_sideband(s: HybridState, ion: int, beta: float = TWO_PI) -> HybridState:
    """Closed 2*pi cycle(s) through an auxiliary level reachable only from ``|e,1>``.

    The auxiliary level is never populated at the end of the pulse, so it is
    not stored; the net effect is the sign ``(-1)**m`` on ``|e,1>``.
    """
    return apply_pulse(s, PulseInstruction(PulseKind.AUX_BLUE_SIDEBAND, ion, beta))


def pulse_full_unitary(spec: ChainSpec, instr: PulseInstruction) -> np.ndarray:
    """Full-space matrix of one pulse (truncation is not checked)."""
    return _apply_array(np.eye(spec.dim, dtype=complex), spec, instr)


def _single_ion_operators(d: int):
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)
    raise_atom = np.array([[0.0, 0.0], [1.0, 0.0]])
    return np.kron(raise_atom, np.eye(d)), np.kron(raise_atom, a), np.kron(raise_atom, a.T)


def full_interaction_hamiltonian(spec: ChainSpec, drive: LaserDrive, t: float) -> np.ndarray:
    """First-order Lamb-Dicke interaction Hamiltonian at time ``t``.

    Acts on one ion's internal states times the shared mode, ordered
    ``|g,0..d-1>`` then ``|e,0..d-1>`` (the single-ion flat layout).  All
    three resonances are kept: carrier, red and blue sideband.
    """
    eta = spec.eta if drive.eta is None else drive.eta
    carrier, red, blue = _single_ion_operators(spec.fock_cutoff)
    omega = drive.omega_rabi
    delta = drive.detuning
    phase_sb = drive.phase + math.pi / 2
    upper = (
        0.5 * omega * np.exp(-1j * (delta * t - drive.phase)) * carrier
        + 0.5 * eta * omega * np.exp(-1j * (delta + spec.omega_z) * t + 1j * phase_sb) * red
        + 0.5 * eta * omega * np.exp(-1j * (delta - spec.omega_z) * t + 1j * phase_sb) * blue
    )
    return upper + upper.conj().T


def resonant_hamiltonian(spec: ChainSpec, kind: PulseKind, phase: float, omega_rabi: float | None = None) -> np.ndarray:
    """Time-independent Hamiltonian left at one resonance, same layout as above."""
    omega = spec.omega_rabi if omega_rabi is None else omega_rabi
    carrier, red, blue = _single_ion_operators(spec.fock_cutoff)
    if kind is PulseKind.CARRIER:
        upper = 0.5 * omega * np.exp(1j * phase) * carrier
    elif kind is PulseKind.RED_SIDEBAND:
        upper = 0.5 * spec.eta * omega * np.exp(1j * phase) * red
    elif kind is PulseKind.BLUE_SIDEBAND:
        upper = 0.5 * spec.eta * omega * np.exp(1j * phase) * blue
    else:
        raise ValueError(f"no resonant Hamiltonian for {kind}")
    return upper + upper.conj().T


def default_dt_max(spec: ChainSpec) -> float:
    return TWO_PI / (200 * spec.omega_z)


def propagate_numeric(
    s: HybridState,
    ion: int,
    drive: LaserDrive,
    dt_max: float | None = None,
    backend: str | None = None,
) -> HybridState:
    """Integrate the full interaction Hamiltonian with piecewise-constant steps.

    The drive starts at ``t = 0``.  Steps have equal length no larger than
    ``dt_max`` (default: 200 samples per trap period) and use the
    Hamiltonian at the step midpoint.
    """
    spec = s.spec
    if not 0 <= ion < spec.n_ions:
        raise IndexError(f"ion {ion} outside chain of {spec.n_ions}")
    if dt_max is None:
        dt_max = default_dt_max(spec)
    if not dt_max > 0:
        raise ValueError(f"dt_max must be positive, got {dt_max!r}")
    if drive.duration == 0:
        return s
    n_steps = math.ceil(drive.duration / dt_max)
    if n_steps > MAX_STEPS:
        raise ValueError(f"{n_steps} steps requested; the limit is {MAX_STEPS}")
    dt = drive.duration / n_steps
    eta = spec.eta if drive.eta is None else drive.eta

    d = spec.fock_cutoff
    a_dim, b_dim = 2**ion, 2 ** (spec.n_ions - ion - 1)
    view = s.amplitudes.reshape(a_dim, 2, b_dim, d)
    batch = np.array(view.transpose(0, 2, 1, 3).reshape(a_dim * b_dim, 2, d), dtype=complex, order="C")
    propagate = _kernels.get_backend(backend)[0]
    propagate(batch, drive.omega_rabi, eta, spec.omega_z, drive.detuning, drive.phase, dt, n_steps)
    out = batch.reshape(a_dim, b_dim, 2, d).transpose(0, 2, 1, 3).reshape(-1)
    top = _top_level_amplitude(out.reshape(-1, 1), spec)
    if top > TRUNCATION_TOL:
        raise TruncationError(f"numeric evolution put amplitude {top:.3g} on the last Fock level")
    return HybridState(spec, out)


def rsb_pi_pulse_infidelity(spec: ChainSpec, phase: float = 0.0, dt_max: float | None = None, backend: str | None = None) -> float:
    """Infidelity between numeric and analytic red-sideband pi pulses from ``|g,1>``.

    Uses ion 0 of ``spec`` with every other ion in ``g``.  ``phase`` is the
    sideband phase of the analytic pulse; the numeric drive uses the
    corresponding laser phase ``phase - pi/2``.
    """
    from .state import basis_state, fidelity

    start = basis_state(spec, ("g",) * spec.n_ions, 1)
    analytic = apply_red_sideband(start, 0, math.pi, phase)
    drive = LaserDrive(
        detuning=-spec.omega_z,
        omega_rabi=spec.omega_rabi,
        phase=phase - math.pi / 2,
        duration=math.pi / (spec.eta * spec.omega_rabi),
    )
    numeric = propagate_numeric(start, 0, drive, dt_max=dt_max, backend=backend)
    return 1.0 - fidelity(numeric, analytic)
