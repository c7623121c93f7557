"""Bright/dark fluorescence readout.

An ion in ``g`` scatters photons (bright, recorded as 1); an ion in ``e``
stays dark (0).  The shared motional mode is never observed: every
probability here is marginalized over phonon number.

Random streams
--------------
All sampling uses NumPy's ``PCG64`` through ``SeedSequence``.  Shot ``j``
of a run seeded with ``seed`` belongs to block ``j // SHOT_BLOCK`` and the
block draws from ``SeedSequence(seed, spawn_key=(block,))``.  Blocks are
independent, so any split of the shots over workers reproduces the serial
result exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .state import HybridState

SHOT_BLOCK = 4096
_ZERO_PROB = 1e-15


@dataclass(frozen=True)
class ShotRecord:
    """Per-ion outcomes of one shot, 1 = bright (g), 0 = dark (e)."""

    outcomes: tuple[int, ...]
    shot: int = 0
    seed: tuple = ()


def _atomic_probs(s: HybridState) -> np.ndarray:
    return (np.abs(s.amplitudes.reshape(s.spec.n_atomic, s.spec.fock_cutoff)) ** 2).sum(axis=1)


def joint_distribution(s: HybridState) -> np.ndarray:
    """Probabilities of the ``2**n_ions`` bright/dark patterns.

    Entry ``w`` is the pattern whose bit for ion ``i`` (ion 0 most
    significant) is 1 when the ion is *dark*, i.e. the atomic index itself.
    """
    return _atomic_probs(s)


def bright_probability(s: HybridState, ion: int) -> float:
    if not 0 <= ion < s.spec.n_ions:
        raise IndexError(f"ion {ion} outside chain of {s.spec.n_ions}")
    probs = _atomic_probs(s).reshape((2,) * s.spec.n_ions)
    return float(np.take(probs, 0, axis=ion).sum())


def dark_probability(s: HybridState, ion: int) -> float:
    if not 0 <= ion < s.spec.n_ions:
        raise IndexError(f"ion {ion} outside chain of {s.spec.n_ions}")
    probs = _atomic_probs(s).reshape((2,) * s.spec.n_ions)
    return float(np.take(probs, 1, axis=ion).sum())


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _project(s: HybridState, ion: int, bright: bool) -> tuple[float, HybridState]:
    view = s.amplitudes.reshape(2**ion, 2, 2 ** (s.spec.n_ions - ion - 1), s.spec.fock_cutoff).copy()
    view[:, 1 if bright else 0] = 0
    prob = float(np.vdot(view, view).real)
    return prob, view.reshape(-1)


def measure_chain(s: HybridState, seed=None, detection_error: float = 0.0, shot: int = 0) -> tuple[ShotRecord, HybridState]:
    """Measure every ion in index order and collapse the state.

    Each outcome is drawn from its distribution conditioned on the earlier
    ones.  With ``detection_error`` the *recorded* bit is flipped with that
    probability; the collapse follows the true outcome.
    """
    if not 0.0 <= detection_error <= 1.0:
        raise ValueError("detection_error must lie in [0, 1]")
    rng = _generator(seed)
    outcomes = []
    state = s
    for ion in range(s.spec.n_ions):
        p_bright = bright_probability(state, ion)
        bright = rng.random() < p_bright
        prob, amps = _project(state, ion, bright)
        if prob < _ZERO_PROB:
            raise ValueError(f"measured outcome on ion {ion} has zero probability")
        state = HybridState(s.spec, amps / np.sqrt(prob))
        recorded = bright
        if detection_error and rng.random() < detection_error:
            recorded = not recorded
        outcomes.append(int(recorded))
    lineage = (seed,) if isinstance(seed, (int, np.integer)) else ()
    return ShotRecord(tuple(outcomes), shot, lineage), state


def sample_shots(s: HybridState, shots: int, seed: int = 0, detection_error: float = 0.0,
                 blocks: Iterable[int] | None = None) -> np.ndarray:
    """Draw ``shots`` readout patterns; returns an ``(shots, n_ions)`` int8 array, 1 = bright.

    Sampling from the joint pattern distribution is equivalent to the
    sequential conditional collapse of :func:`measure_chain`.  ``blocks``
    restricts the draw to some shot blocks (for parallel workers); the
    concatenation of all blocks equals the full serial draw.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 <= detection_error <= 1.0:
        raise ValueError("detection_error must lie in [0, 1]")
    n = s.spec.n_ions
    probs = joint_distribution(s)
    probs = probs / probs.sum()
    n_blocks = -(-shots // SHOT_BLOCK)
    chosen = range(n_blocks) if blocks is None else blocks
    parts = []
    for b in chosen:
        size = min(SHOT_BLOCK, shots - b * SHOT_BLOCK)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        words = rng.choice(len(probs), size=size, p=probs)
        shifts = np.arange(n - 1, -1, -1)
        dark = (words[:, None] >> shifts) & 1
        bits = (1 - dark).astype(np.int8)
        if detection_error:
            flips = rng.random(bits.shape) < detection_error
            bits = np.where(flips, 1 - bits, bits).astype(np.int8)
        parts.append(bits)
    if not parts:
        return np.empty((0, n), dtype=np.int8)
    return np.concatenate(parts)


def shot_records(bits: np.ndarray, seed: int = 0) -> list[ShotRecord]:
    return [
        ShotRecord(tuple(int(b) for b in row), j, (seed, j // SHOT_BLOCK))
        for j, row in enumerate(bits)
    ]


def _as_bit_rows(records) -> np.ndarray:
    if isinstance(records, np.ndarray):
        return records.reshape(len(records), -1)
    rows = [r.outcomes if isinstance(r, ShotRecord) else tuple(r) for r in records]
    return np.array(rows, dtype=np.int8).reshape(len(rows), -1) if rows else np.empty((0, 0))


def estimate_probabilities(records) -> dict[tuple[int, ...], tuple[float, float]]:
    """Pattern frequencies with binomial standard errors ``sqrt(p(1-p)/n)``.

    Accepts :class:`ShotRecord` objects, bit tuples, or a 2-D bit array.
    Keys are outcome tuples (1 = bright); only observed patterns appear.
    """
    bits = _as_bit_rows(records)
    n = len(bits)
    if n == 0:
        raise ValueError("cannot estimate probabilities from zero shots")
    patterns, counts = np.unique(bits, axis=0, return_counts=True)
    out = {}
    for pattern, count in zip(patterns, counts):
        p = count / n
        out[tuple(int(b) for b in pattern)] = (float(p), float(np.sqrt(p * (1 - p) / n)))
    return out


def pattern_counts(bits: np.ndarray) -> dict[tuple[int, ...], int]:
    patterns, counts = np.unique(bits, axis=0, return_counts=True)
    return {tuple(int(b) for b in p): int(c) for p, c in zip(patterns, counts)}


def shots_csv(bits: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["shot"] + [f"ion{i}" for i in range(bits.shape[1])])
    for j, row in enumerate(bits):
        writer.writerow([j, *(int(b) for b in row)])
    return buf.getvalue()
