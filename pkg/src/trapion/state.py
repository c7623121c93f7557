"""Hybrid atomic/phonon state of an ion chain.

The basis is ``|a_1 ... a_N; n>`` with every ion's internal state in
``{g, e}`` (encoded ``g -> 0``, ``e -> 1``) and a single shared motional
mode truncated to ``fock_cutoff`` levels.  Amplitudes are stored densely
with the atomic bitstring as the major index (ion 0 is the most
significant bit) and the phonon number as the minor index::

    flat = atomic_bits * fock_cutoff + n

so the computational states ``|0> = |g,0>`` and ``|1> = |e,0>`` of a
single ion sit at the low flat indices 0 and ``fock_cutoff``.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12
TRUNCATION_TOL = 1e-8


class PhysicsError(RuntimeError):
    """A simulation left the regime the model is valid in."""


class TruncationError(PhysicsError):
    """Amplitude reached the last retained Fock level."""


class PhononPreconditionError(PhysicsError):
    """A gate that needs the shared mode in its ground state did not get it."""


@dataclass(frozen=True)
class ChainSpec:
    """Static description of the ion chain, trap and laser coupling.

    Frequencies are angular (rad/s).  ``eta`` is the Lamb-Dicke parameter
    ``k * sqrt(hbar / (2 M omega_z))``; the ion mass only enters through it.
    """

    n_ions: int = 1
    omega_z: float = 2 * np.pi * 1e6
    eta: float = 0.1
    omega_rabi: float = 2 * np.pi * 1e5
    fock_cutoff: int = 20
    species_label: str = "Ca-40 optical"

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions!r}")
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff!r}")
        for name in ("omega_z", "eta", "omega_rabi"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.eta >= 0.3:
            warnings.warn(
                f"eta={self.eta} is outside the Lamb-Dicke regime; first-order sideband "
                "couplings will be inaccurate",
                stacklevel=3,
            )

    @property
    def n_atomic(self) -> int:
        return 2**self.n_ions

    @property
    def dim(self) -> int:
        return self.n_atomic * self.fock_cutoff

    def flatten(self, bits: Sequence[int], n: int) -> int:
        """Flat index of ``|bits; n>``; ``bits[0]`` is ion 0."""
        if len(bits) != self.n_ions:
            raise ValueError(f"expected {self.n_ions} atomic labels, got {len(bits)}")
        if not 0 <= n < self.fock_cutoff:
            raise IndexError(f"phonon number {n} outside [0, {self.fock_cutoff})")
        word = 0
        for b in bits:
            b = _atomic_bit(b)
            word = (word << 1) | b
        return word * self.fock_cutoff + n

    def unflatten(self, index: int) -> tuple[tuple[int, ...], int]:
        if not 0 <= index < self.dim:
            raise IndexError(f"flat index {index} outside [0, {self.dim})")
        word, n = divmod(index, self.fock_cutoff)
        bits = tuple((word >> (self.n_ions - 1 - i)) & 1 for i in range(self.n_ions))
        return bits, n

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _atomic_bit(label) -> int:
    if label in (0, "g", "0"):
        return 0
    if label in (1, "e", "1"):
        return 1
    raise ValueError(f"atomic label must be g/e or 0/1, got {label!r}")


@dataclass(frozen=True, eq=False)
class HybridState:
    """Normalized pure state over ``2**n_ions * fock_cutoff`` basis kets."""

    spec: ChainSpec
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.spec.dim:
            raise ValueError(f"expected {self.spec.dim} amplitudes, got {amps.size}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm:.15g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, spec: ChainSpec, amplitudes, normalize: bool = False) -> "HybridState":
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(spec, amps)

    def tensor(self) -> np.ndarray:
        """Read-only view with shape ``(2,) * n_ions + (fock_cutoff,)``."""
        return self.amplitudes.reshape((2,) * self.spec.n_ions + (self.spec.fock_cutoff,))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, bits: Sequence, n: int) -> complex:
        return complex(self.amplitudes[self.spec.flatten(bits, n)])

    def __repr__(self):
        return f"HybridState(n_ions={self.spec.n_ions}, fock_cutoff={self.spec.fock_cutoff})"


def new_ground(spec: ChainSpec) -> HybridState:
    """The fiducial state ``|g...g, 0>``."""
    amps = np.zeros(spec.dim, dtype=complex)
    amps[0] = 1.0
    return HybridState(spec, amps)


def basis_state(spec: ChainSpec, bits: Sequence, n: int = 0) -> HybridState:
    amps = np.zeros(spec.dim, dtype=complex)
    amps[spec.flatten(bits, n)] = 1.0
    return HybridState(spec, amps)


def superposition(spec: ChainSpec, terms: dict) -> HybridState:
    """Normalized state from ``{(bits, n): amplitude}``."""
    amps = np.zeros(spec.dim, dtype=complex)
    for (bits, n), coeff in terms.items():
        amps[spec.flatten(bits, n)] += coeff
    return HybridState.from_amplitudes(spec, amps, normalize=True)


def atomic_state(spec: ChainSpec, coefficients, n: int = 0) -> HybridState:
    """Embed a ``2**n_ions`` atomic vector with the phonon fixed at ``n``."""
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
    if coefficients.size != spec.n_atomic:
        raise ValueError(f"expected {spec.n_atomic} atomic coefficients, got {coefficients.size}")
    amps = np.zeros((spec.n_atomic, spec.fock_cutoff), dtype=complex)
    amps[:, n] = coefficients
    return HybridState.from_amplitudes(spec, amps, normalize=True)


def random_state(spec: ChainSpec, rng: np.random.Generator, max_phonon: int | None = None) -> HybridState:
    """Haar-like random state, optionally restricted to phonon levels ``0..max_phonon``."""
    shape = (spec.n_atomic, spec.fock_cutoff)
    amps = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    if max_phonon is not None:
        amps[:, max_phonon + 1 :] = 0
    return HybridState.from_amplitudes(spec, amps, normalize=True)


def _check_same_space(a: HybridState, b: HybridState):
    if a.spec.dim != b.spec.dim or a.spec.n_ions != b.spec.n_ions:
        raise ValueError(
            f"state dimensions differ: {a.spec.n_ions} ions x {a.spec.fock_cutoff} vs "
            f"{b.spec.n_ions} ions x {b.spec.fock_cutoff}"
        )


def fidelity(a: HybridState, b: HybridState) -> float:
    """``|<a|b>|**2``, blind to the global phase of either state."""
    _check_same_space(a, b)
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(overlap, 0.0), 1.0))


def phonon_distribution(s: HybridState) -> np.ndarray:
    probs = np.abs(s.amplitudes.reshape(s.spec.n_atomic, s.spec.fock_cutoff)) ** 2
    return probs.sum(axis=0)


def apply_subspace_rotation(s: HybridState, basis_pair: tuple[int, int], u) -> HybridState:
    """Rotate the amplitudes at two flat indices by the 2x2 unitary ``u``.

    ``u`` acts on the column vector ``(amp[i], amp[j])``; every other
    amplitude is left alone.
    """
    i, j = (int(k) for k in basis_pair)
    if i == j:
        raise ValueError("basis pair indices must be distinct")
    for k in (i, j):
        if not 0 <= k < s.spec.dim:
            raise IndexError(f"flat index {k} outside [0, {s.spec.dim})")
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
        raise ValueError("rotation matrix is not unitary")
    amps = s.amplitudes.copy()
    amps[i], amps[j] = u @ np.array([amps[i], amps[j]])
    return HybridState(s.spec, amps)
