"""Pulse-level simulator and gate-to-pulse compiler for trapped-ion qubits."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .compiler import (
    CNOT,
    CZ,
    BellPrep,
    H,
    PulseSchedule,
    Rot,
    X,
    Z,
    compile_bell,
    compile_circuit,
    compile_cnot,
    compile_cz,
    compile_cz_av,
    compile_hadamard,
    compile_rotation,
    compile_swap_av,
    parse_circuit,
    parse_schedule,
    run_schedule,
    schedule_unitary,
)
from .cooling import DopplerParams, doppler_mc_run, mean_energy_step, pi_pulse_time, recoil_terminal_speed, sideband_cool
from .dynamics import (
    LaserDrive,
    PulseInstruction,
    PulseKind,
    apply_aux_blue_sideband,
    apply_blue_sideband,
    apply_carrier,
    apply_pulse,
    apply_red_sideband,
    carrier_unitary,
    full_interaction_hamiltonian,
    propagate_numeric,
)
from .readout import bright_probability, estimate_probabilities, measure_chain, sample_shots
from .state import (
    ChainSpec,
    HybridState,
    PhononPreconditionError,
    PhysicsError,
    TruncationError,
    apply_subspace_rotation,
    basis_state,
    fidelity,
    new_ground,
    phonon_distribution,
)
