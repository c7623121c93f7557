"""Lowering of gate circuits to resonant pulse schedules.

Schedules are chronological: the first instruction in the list is the
first pulse fired.  Operator products written in the usual
right-to-left notation therefore appear reversed, e.g. the operator
``U2 @ U1`` is the schedule ``[U1, U2]``.

Lowerings (per ion ``i``; all pulse phases are the ones in the 2x2
pulse unitary, see :mod:`trapion.dynamics`):

=============  =========================================================
``Rot(t, p)``  ``CARRIER i t p+pi/2``  maps ``|0>`` to
               ``cos(t/2)|0> + exp(1j*p) sin(t/2)|1>`` up to phase
``X``          ``CARRIER i pi 0``  (= -1j * X)
``Z``          ``CARRIER i pi 0``, ``CARRIER i pi pi/2``  (= 1j * Z)
``H``          ``CARRIER i pi pi``, ``CARRIER i pi/2 3pi/2``  (= 1j * H)
``CZ(c, t)``   ``RSB t pi 3pi/2``, ``AUXBSB c 2pi``, ``RSB t pi pi/2``
``CNOT(c, t)`` ``H(t)``, ``CZ(c, t)``, ``H(t)``
``BELL(a, b)`` ``H(a)``, ``CNOT(a, b)``
=============  =========================================================

The CZ block swaps the target's atomic excitation into the shared mode,
flips the sign of ``|e,1>`` on the control through an auxiliary level and
swaps back.  It is exact only when the mode starts in ``|0>``; schedule
execution checks that before every CZ block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import PulseInstruction, PulseKind, _apply_array, apply_pulse
from .state import (
    ChainSpec,
    HybridState,
    PhononPreconditionError,
    PhysicsError,
    phonon_distribution,
)

PI = math.pi
GROUND_TOL = 1e-9


class CircuitParseError(ValueError):
    def __init__(self, line_no: int, token: str, message: str):
        self.line_no = line_no
        self.token = token
        super().__init__(f"line {line_no}: {message} (at {token!r})")


def _norm_angle(x: float) -> float:
    x = math.fmod(float(x), 2 * PI)
    if x < 0:
        x += 2 * PI
    return 0.0 if x >= 2 * PI else x


@dataclass(frozen=True)
class Gate:
    """Base class for abstract gates."""

    def ions(self) -> tuple[int, ...]:
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class _OneIon(Gate):
    ion: int

    def __post_init__(self):
        if int(self.ion) != self.ion or self.ion < 0:
            raise ValueError(f"ion index must be a non-negative integer, got {self.ion!r}")

    def ions(self):
        return (self.ion,)

    def to_text(self):
        return f"{self.token} {self.ion}"


@dataclass(frozen=True)
class Rot(_OneIon):
    """General single-qubit rotation preparing ``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``."""

    theta: float = 0.0
    phi: float = 0.0
    token = "ROT"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "theta", _norm_angle(self.theta))
        object.__setattr__(self, "phi", _norm_angle(self.phi))

    def to_text(self):
        return f"ROT {self.ion} {self.theta!r} {self.phi!r}"


@dataclass(frozen=True)
class H(_OneIon):
    token = "H"


@dataclass(frozen=True)
class X(_OneIon):
    token = "X"


@dataclass(frozen=True)
class Z(_OneIon):
    token = "Z"


@dataclass(frozen=True)
class _TwoIon(Gate):
    control: int
    target: int

    def __post_init__(self):
        for ion in (self.control, self.target):
            if int(ion) != ion or ion < 0:
                raise ValueError(f"ion index must be a non-negative integer, got {ion!r}")
        if self.control == self.target:
            raise ValueError(f"control equals target ({self.control})")

    def ions(self):
        return (self.control, self.target)

    def to_text(self):
        return f"{self.token} {self.control} {self.target}"


@dataclass(frozen=True)
class CZ(_TwoIon):
    token = "CZ"


@dataclass(frozen=True)
class CNOT(_TwoIon):
    token = "CNOT"


@dataclass(frozen=True)
class BellPrep(_TwoIon):
    """``CNOT(a, b) (H x I)``: takes ``|gg>`` to ``(|gg> + |ee>)/sqrt(2)``."""

    token = "BELL"


@dataclass(frozen=True)
class PulseSchedule:
    """Chronological pulse list plus provenance metadata.

    Equality and hashing only look at the instructions.
    """

    instructions: tuple[PulseInstruction, ...] = ()
    source: str = field(default="", compare=False)
    spec_fingerprint: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        return PulseSchedule(self.instructions + other.instructions, source=self.source)

    def validate(self, spec: ChainSpec):
        for i, instr in enumerate(self.instructions):
            try:
                instr.validate(spec)
            except IndexError as exc:
                raise IndexError(f"pulse {i}: {exc}") from None

    def cz_blocks(self) -> list[int]:
        """Start indices of the three-pulse CZ pattern."""
        starts = []
        ins = self.instructions
        for i in range(len(ins) - 2):
            a, b, c = ins[i : i + 3]
            if (
                a.kind is PulseKind.RED_SIDEBAND
                and c.kind is PulseKind.RED_SIDEBAND
                and b.kind is PulseKind.AUX_BLUE_SIDEBAND
                and a.ion == c.ion != b.ion
                and _close(a.beta, PI) and _close(c.beta, PI)
                and _close(a.phase, 1.5 * PI) and _close(c.phase, 0.5 * PI)
            ):
                starts.append(i)
        return starts

    def to_text(self) -> str:
        return "".join(format_instruction(p) + "\n" for p in self.instructions)


def _close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def format_instruction(p: PulseInstruction) -> str:
    if p.kind is PulseKind.AUX_BLUE_SIDEBAND:
        return f"AUXBSB {p.ion} {p.beta!r}"
    return f"{p.kind.value} {p.ion} {p.beta!r} {p.phase!r}"


def _schedule(*pulses: tuple, source: str = "") -> PulseSchedule:
    return PulseSchedule(tuple(PulseInstruction(*p) for p in pulses), source=source)


def compile_rotation(ion: int, theta: float, phi: float) -> PulseSchedule:
    return _schedule((PulseKind.CARRIER, ion, theta, phi + PI / 2), source=f"ROT {ion} {theta!r} {phi!r}")


def compile_x(ion: int) -> PulseSchedule:
    return _schedule((PulseKind.CARRIER, ion, PI, 0.0), source=f"X {ion}")


def compile_z(ion: int) -> PulseSchedule:
    return _schedule(
        (PulseKind.CARRIER, ion, PI, 0.0),
        (PulseKind.CARRIER, ion, PI, PI / 2),
        source=f"Z {ion}",
    )


def compile_hadamard(ion: int) -> PulseSchedule:
    # The (pi, pi) pulse must fire first: the opposite order gives -1j*Z@H@Z, not H.
    return _schedule(
        (PulseKind.CARRIER, ion, PI, PI),
        (PulseKind.CARRIER, ion, PI / 2, -PI / 2),
        source=f"H {ion}",
    )


def compile_swap_av(ion: int, inverse: bool = False) -> PulseSchedule:
    """Red-sideband pi pulse exchanging ``|e,0>`` and ``|g,1>`` of one ion.

    Forward: ``|e,0> -> |g,1>``, ``|g,1> -> -|e,0>``.
    """
    phase = PI / 2 if inverse else 1.5 * PI
    return _schedule((PulseKind.RED_SIDEBAND, ion, PI, phase), source=f"SWAP_AV{'^-1' if inverse else ''} {ion}")


def compile_cz_av(ion: int) -> PulseSchedule:
    return _schedule((PulseKind.AUX_BLUE_SIDEBAND, ion, 2 * PI), source=f"CZ_AV {ion}")


def compile_cz(control: int, target: int) -> PulseSchedule:
    CZ(control, target)
    sched = compile_swap_av(target) + compile_cz_av(control) + compile_swap_av(target, inverse=True)
    return PulseSchedule(sched.instructions, source=f"CZ {control} {target}")


def compile_cnot(control: int, target: int) -> PulseSchedule:
    CNOT(control, target)
    sched = compile_hadamard(target) + compile_cz(control, target) + compile_hadamard(target)
    return PulseSchedule(sched.instructions, source=f"CNOT {control} {target}")


def compile_bell(ion_a: int, ion_b: int) -> PulseSchedule:
    BellPrep(ion_a, ion_b)
    sched = compile_hadamard(ion_a) + compile_cnot(ion_a, ion_b)
    return PulseSchedule(sched.instructions, source=f"BELL {ion_a} {ion_b}")


def compile_gate(gate: Gate) -> PulseSchedule:
    if isinstance(gate, Rot):
        return compile_rotation(gate.ion, gate.theta, gate.phi)
    if isinstance(gate, H):
        return compile_hadamard(gate.ion)
    if isinstance(gate, X):
        return compile_x(gate.ion)
    if isinstance(gate, Z):
        return compile_z(gate.ion)
    if isinstance(gate, CZ):
        return compile_cz(gate.control, gate.target)
    if isinstance(gate, CNOT):
        return compile_cnot(gate.control, gate.target)
    if isinstance(gate, BellPrep):
        return compile_bell(gate.control, gate.target)
    raise TypeError(f"cannot compile {gate!r}")


def compile_circuit(circuit: Iterable[Gate], spec: ChainSpec | None = None) -> PulseSchedule:
    circuit = list(circuit)
    pulses: list[PulseInstruction] = []
    for gate in circuit:
        if spec is not None:
            for ion in gate.ions():
                if ion >= spec.n_ions:
                    raise IndexError(f"{gate.to_text()}: ion {ion} outside chain of {spec.n_ions}")
        pulses.extend(compile_gate(gate).instructions)
    return PulseSchedule(
        tuple(pulses),
        source="\n".join(g.to_text() for g in circuit),
        spec_fingerprint=spec.fingerprint() if spec is not None else "",
    )


# --- text formats ---------------------------------------------------------

_GATE_ARITY = {"H": (1, 0), "X": (1, 0), "Z": (1, 0), "ROT": (1, 2), "CZ": (2, 0), "CNOT": (2, 0), "BELL": (2, 0)}
_GATE_TYPES = {"H": H, "X": X, "Z": Z, "CZ": CZ, "CNOT": CNOT, "BELL": BellPrep}
_PULSE_ARITY = {"CARRIER": 3, "RSB": 3, "BSB": 3, "AUXBSB": 2}


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_int(token: str, line_no: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise CircuitParseError(line_no, token, "expected an ion index") from None
    if value < 0:
        raise CircuitParseError(line_no, token, "ion index must be non-negative")
    return value


def _parse_float(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CircuitParseError(line_no, token, "expected a number") from None
    if not math.isfinite(value):
        raise CircuitParseError(line_no, token, "angle must be finite")
    return value


def parse_circuit(text: str) -> list[Gate]:
    """Parse one gate per line: ``H 0``, ``ROT 0 1.5708 0.0``, ``CZ 0 1``, ``CNOT 0 1``, ``BELL 0 1``.

    ``X i`` and ``Z i`` are accepted too; ``#`` starts a comment.
    """
    gates = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _strip(raw).split()
        if not tokens:
            continue
        name = tokens[0].upper()
        if name not in _GATE_ARITY:
            raise CircuitParseError(line_no, tokens[0], "unknown gate")
        n_ions, n_angles = _GATE_ARITY[name]
        if len(tokens) != 1 + n_ions + n_angles:
            bad = tokens[1 + n_ions + n_angles] if len(tokens) > 1 + n_ions + n_angles else tokens[-1]
            raise CircuitParseError(
                line_no, bad, f"{name} takes {n_ions} ion index(es) and {n_angles} angle(s)"
            )
        ions = [_parse_int(t, line_no) for t in tokens[1 : 1 + n_ions]]
        angles = [_parse_float(t, line_no) for t in tokens[1 + n_ions :]]
        try:
            if name == "ROT":
                gate = Rot(ions[0], *angles)
            else:
                gate = _GATE_TYPES[name](*ions)
        except ValueError as exc:
            raise CircuitParseError(line_no, " ".join(tokens[1:]), str(exc)) from None
        gates.append(gate)
    return gates


def parse_schedule(text: str) -> PulseSchedule:
    pulses = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _strip(raw).split()
        if not tokens:
            continue
        name = tokens[0].upper()
        if name not in _PULSE_ARITY:
            raise CircuitParseError(line_no, tokens[0], "unknown pulse kind")
        if len(tokens) != 1 + _PULSE_ARITY[name]:
            raise CircuitParseError(line_no, tokens[-1], f"{name} takes {_PULSE_ARITY[name]} fields")
        ion = _parse_int(tokens[1], line_no)
        numbers = [_parse_float(t, line_no) for t in tokens[2:]]
        try:
            pulses.append(PulseInstruction(PulseKind(name), ion, *numbers))
        except ValueError as exc:
            raise CircuitParseError(line_no, tokens[2], str(exc)) from None
    return PulseSchedule(tuple(pulses))


# --- execution and verification --------------------------------------------


class ScheduleError(PhysicsError):
    def __init__(self, pulse_index: int, cause: PhysicsError):
        self.pulse_index = pulse_index
        self.cause = cause
        super().__init__(f"pulse {pulse_index}: {cause}")


def run_schedule(state: HybridState, schedule: PulseSchedule, check_phonon: bool = True) -> HybridState:
    """Apply ``schedule`` to ``state`` in time order.

    Physics failures are re-raised as :class:`ScheduleError` carrying the
    offending pulse index.  With ``check_phonon`` the shared mode must be in
    its ground state (to ``1 - 1e-9``) at the start of each CZ block.
    """
    schedule.validate(state.spec)
    cz_starts = set(schedule.cz_blocks()) if check_phonon else set()
    for i, instr in enumerate(schedule.instructions):
        if i in cz_starts:
            p0 = phonon_distribution(state)[0]
            if p0 < 1 - GROUND_TOL:
                raise ScheduleError(
                    i,
                    PhononPreconditionError(
                        f"CZ block needs the shared mode in |0>, ground population is {p0:.12f}"
                    ),
                )
        try:
            state = apply_pulse(state, instr)
        except PhysicsError as exc:
            raise ScheduleError(i, exc) from exc
    return state


def schedule_unitary(spec: ChainSpec, schedule: PulseSchedule) -> np.ndarray:
    """Full-space matrix of the whole schedule (later pulses multiply on the left)."""
    schedule.validate(spec)
    u = np.eye(spec.dim, dtype=complex)
    for instr in schedule.instructions:
        u = _apply_array(u, spec, instr)
    return u


def atomic_block(spec: ChainSpec, u: np.ndarray, phonon: int = 0) -> np.ndarray:
    """Restriction of a full-space matrix to the atomic states at one phonon number."""
    idx = np.arange(spec.n_atomic) * spec.fock_cutoff + phonon
    return u[np.ix_(idx, idx)]


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """``min_chi max|u - exp(i chi) v|`` and the aligning ``chi``.

    ``chi`` is taken from ``arg tr(v^H u)``, which is optimal whenever the
    two matrices agree up to a phase.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.vdot(v, u)
    chi = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    return float(np.max(np.abs(u - np.exp(1j * chi) * v))), chi


def equal_up_to_phase(u, v, tol: float = 1e-10) -> bool:
    return global_phase_distance(u, v)[0] < tol


def restricted_gate_matrix(spec: ChainSpec, schedule: PulseSchedule, ions: Sequence[int]) -> np.ndarray:
    """Matrix of ``schedule`` on the computational states of ``ions``, phonon 0.

    Every other ion is held in ``g``; rows and columns follow the order of
    ``ions`` with the first listed ion as the most significant bit.
    """
    u = schedule_unitary(spec, schedule)
    k = len(ions)
    idx = []
    for word in range(2**k):
        bits = [0] * spec.n_ions
        for pos, ion in enumerate(ions):
            bits[ion] = (word >> (k - 1 - pos)) & 1
        idx.append(spec.flatten(bits, 0))
    return u[np.ix_(idx, idx)]
