"""Doppler cooling (classical, Monte Carlo) and resolved-sideband cooling.

Doppler geometry is one-dimensional.  The cooling beam propagates along
``-z``, so a signed velocity ``v > 0`` means the ion moves towards the
laser source and ``k_vec . v_vec = -k * v``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .dynamics import apply_red_sideband
from .state import ChainSpec, HybridState, TruncationError, TRUNCATION_TOL, basis_state, fidelity, new_ground, phonon_distribution

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J/K
AMU = 1.66053906660e-27  # kg

_CHUNK = 4096


@dataclass(frozen=True)
class DopplerParams:
    """Doppler-cooling inputs (SI units, angular frequencies).

    ``detuning_delta`` is the red detuning ``omega_0 - omega_laser > 0``.
    With ``counter_propagating_only`` (the default) photons are only
    absorbed while the ion moves towards the laser; otherwise the Lorentzian
    alone decides.
    """

    mass: float
    wavevector_k: float
    gamma_linewidth: float
    detuning_delta: float
    initial_speed: float
    seed: int = 0
    max_rejects: int = 1000
    counter_propagating_only: bool = True

    def __post_init__(self):
        for name in ("mass", "wavevector_k", "gamma_linewidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.detuning_delta > 0:
            raise ValueError("detuning_delta must be positive (red detuning)")
        if self.max_rejects < 1:
            raise ValueError("max_rejects must be >= 1")

    @classmethod
    def calcium40(cls, initial_speed_recoils: float = 50.0, seed: int = 0, **overrides) -> "DopplerParams":
        """40Ca+ on the 397 nm line, red-detuned by half a linewidth."""
        mass = 39.962590863 * AMU
        k = 2 * math.pi / 396.959e-9
        gamma = 2 * math.pi * 21.6e6
        v_r = HBAR * k / mass
        params = dict(
            mass=mass,
            wavevector_k=k,
            gamma_linewidth=gamma,
            detuning_delta=gamma / 2,
            initial_speed=initial_speed_recoils * v_r,
            seed=seed,
        )
        params.update(overrides)
        return cls(**params)

    @property
    def recoil_speed(self) -> float:
        return HBAR * self.wavevector_k / self.mass

    @property
    def recoil_energy(self) -> float:
        """``hbar^2 k^2 / 2M``."""
        return 0.5 * self.mass * self.recoil_speed**2


def mean_energy_step(v: float, p: DopplerParams) -> float:
    """Average kinetic-energy change per scattering event, recoil included."""
    v_dot_k = -p.wavevector_k * v
    return HBAR * v_dot_k + HBAR**2 * p.wavevector_k**2 / p.mass


def recoil_terminal_speed(p: DopplerParams) -> float:
    """Speed below which a scattering event no longer removes energy on average."""
    return HBAR * p.wavevector_k / p.mass


def kinetic_temperature(energy: float) -> float:
    """Pseudo-temperature from ``(3/2) k_B T = E_K``."""
    return 2.0 * energy / (3.0 * K_B)


EVENT_NAMES = {_kernels.ABSORB: "absorb", _kernels.EMIT: "emit"}


@dataclass(frozen=True, eq=False)
class CoolingTrajectory:
    initial_velocity: float
    velocities: np.ndarray
    event_types: np.ndarray
    mass: float
    stop_reason: str

    @property
    def energies(self) -> np.ndarray:
        return 0.5 * self.mass * self.velocities**2

    @property
    def final_velocity(self) -> float:
        return float(self.velocities[-1]) if len(self.velocities) else self.initial_velocity

    def __len__(self):
        return len(self.velocities)

    def records(self):
        """Yield ``(event, velocity, energy, type)`` for every absorption and emission."""
        for i, (v, e, t) in enumerate(zip(self.velocities, self.energies, self.event_types)):
            yield i, float(v), float(e), EVENT_NAMES[int(t)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["event", "velocity_m_s", "energy_J", "type"])
        for i, v, e, kind in self.records():
            writer.writerow([i, repr(v), repr(e), kind])
        return buf.getvalue()


def doppler_mc_run(p: DopplerParams, max_events: int, backend: str | None = None) -> CoolingTrajectory:
    """Seeded Monte Carlo of absorb/emit cycles.

    Each attempt accepts an absorption with probability equal to a unit-peak
    Lorentzian (FWHM ``gamma_linewidth``) of the Doppler-shifted detuning.
    Absorption kicks the ion by one recoil along the beam; emission adds a
    recoil times a uniform cosine in ``[-1, 1]``.  Stops after
    ``max_events`` recorded events or ``max_rejects`` failed attempts in a row.
    """
    if max_events < 1:
        raise ValueError("max_events must be >= 1")
    events = _kernels.get_backend(backend)[1]
    rng = np.random.default_rng(p.seed)
    out_v = np.empty(max_events)
    out_t = np.empty(max_events, dtype=np.int8)
    v, reject_run, n_rec = float(p.initial_speed), 0, 0
    stream = rng.random(_CHUNK)
    while True:
        v, reject_run, n_rec, used, status = events(
            v, reject_run, stream, out_v, out_t, n_rec, max_events,
            p.recoil_speed, p.wavevector_k, 0.5 * p.gamma_linewidth, p.detuning_delta,
            p.max_rejects, p.counter_propagating_only,
        )
        if status != _kernels.NEED_MORE:
            break
        stream = np.concatenate([stream[used:], rng.random(_CHUNK)])
    reason = "max_events" if status == _kernels.HIT_MAX_EVENTS else "stalled"
    return CoolingTrajectory(float(p.initial_speed), out_v[:n_rec].copy(), out_t[:n_rec].copy(), p.mass, reason)


def doppler_ensemble(p: DopplerParams, seeds: Iterable[int], max_events: int, backend: str | None = None) -> list[CoolingTrajectory]:
    return [doppler_mc_run(replace(p, seed=int(s)), max_events, backend=backend) for s in seeds]


def padded_energies(trajectories: Sequence[CoolingTrajectory], n_events: int | None = None) -> np.ndarray:
    """``(n_runs, n_events)`` energies; finished runs hold their last value."""
    if n_events is None:
        n_events = max(len(t) for t in trajectories)
    out = np.empty((len(trajectories), n_events))
    for row, traj in zip(out, trajectories):
        e = traj.energies[:n_events]
        row[: len(e)] = e
        row[len(e):] = e[-1] if len(e) else 0.5 * traj.mass * traj.initial_velocity**2
    return out


def window_mean_energies(trajectories: Sequence[CoolingTrajectory], window: int = 100, n_events: int | None = None) -> np.ndarray:
    """Ensemble-mean kinetic energy averaged over consecutive event windows."""
    energies = padded_energies(trajectories, n_events)
    n_win = energies.shape[1] // window
    if n_win == 0:
        raise ValueError("fewer events than one window")
    return energies[:, : n_win * window].reshape(len(trajectories), n_win, window).mean(axis=(0, 2))


# --- sideband cooling ---------------------------------------------------------


def pi_pulse_time(n: int, spec: ChainSpec) -> float:
    """Red-sideband pi time on the ``|g,n> <-> |e,n-1>`` rung."""
    if n < 1:
        raise ValueError(f"no red-sideband transition from n={n}")
    return math.pi / (spec.eta * spec.omega_rabi * math.sqrt(n))


class SidebandStep(NamedTuple):
    n: int
    pulse_time: float
    state: HybridState


def decay_to_ground(s: HybridState, ion: int) -> HybridState:
    """Spontaneous decay ``|e, n> -> |g, n>`` of one ion, no motional change.

    Population is moved onto ``g`` with the phase reset to zero; coherences
    between branches are not tracked.
    """
    d = s.spec.fock_cutoff
    view = s.amplitudes.reshape(2**ion, 2, 2 ** (s.spec.n_ions - ion - 1), d)
    pop = np.abs(view[:, 0]) ** 2 + np.abs(view[:, 1]) ** 2
    out = np.zeros_like(view)
    out[:, 0] = np.sqrt(pop)
    return HybridState(s.spec, out.reshape(-1))


def _heat(s: HybridState) -> HybridState:
    amps = s.amplitudes.reshape(s.spec.n_atomic, s.spec.fock_cutoff)
    if np.max(np.abs(amps[:, -1])) > TRUNCATION_TOL:
        raise TruncationError("heating kick would leave the Fock space")
    out = np.zeros_like(amps)
    out[:, 1:] = amps[:, :-1]
    return HybridState(s.spec, out.reshape(-1))


def sideband_cool(
    spec: ChainSpec,
    n0: int,
    ion: int = 0,
    heating_probability: float = 0.0,
    seed: int | None = None,
    max_cycles: int | None = None,
) -> list[SidebandStep]:
    """Cool ``|g...g, n0>`` to the motional ground state.

    Every cycle fires a red-sideband pulse for the pi time of the current
    rung and then lets the ion decay.  ``heating_probability`` adds one
    phonon after a decay with that probability.
    """
    if not 1 <= n0 < spec.fock_cutoff:
        raise ValueError(f"n0 must lie in [1, {spec.fock_cutoff}), got {n0}")
    if not 0.0 <= heating_probability <= 1.0:
        raise ValueError("heating_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    if max_cycles is None:
        max_cycles = n0 if heating_probability == 0 else 100 * n0
    state = basis_state(spec, ("g",) * spec.n_ions, n0)
    n = n0
    steps = []
    while n > 0 and len(steps) < max_cycles:
        t = pi_pulse_time(n, spec)
        beta = spec.eta * spec.omega_rabi * t  # n=1-referenced sideband area
        state = apply_red_sideband(state, ion, beta, 0.0)
        state = decay_to_ground(state, ion)
        if heating_probability and rng.random() < heating_probability:
            state = _heat(state)
        steps.append(SidebandStep(n, t, state))
        n = int(round(float(np.dot(np.arange(spec.fock_cutoff), phonon_distribution(state)))))
    return steps


def sideband_log_csv(steps: Sequence[SidebandStep]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cycle", "n_before", "pulse_time_s", "fidelity_ground"])
    for cycle, step in enumerate(steps, start=1):
        f = fidelity(step.state, new_ground(step.state.spec))
        writer.writerow([cycle, step.n, repr(step.pulse_time), repr(f)])
    return buf.getvalue()
