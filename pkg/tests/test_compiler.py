import math

import numpy as np
import pytest

from trapion.compiler import (
    CNOT,
    CZ,
    BellPrep,
    CircuitParseError,
    H,
    PulseSchedule,
    Rot,
    ScheduleError,
    X,
    Z,
    atomic_block,
    compile_bell,
    compile_circuit,
    compile_cnot,
    compile_cz,
    compile_cz_av,
    compile_hadamard,
    compile_rotation,
    compile_swap_av,
    compile_x,
    compile_z,
    global_phase_distance,
    parse_circuit,
    parse_schedule,
    restricted_gate_matrix,
    run_schedule,
    schedule_unitary,
)
from trapion.dynamics import PulseInstruction, PulseKind
from trapion.readout import bright_probability, joint_distribution
from trapion.state import (
    ChainSpec,
    HybridState,
    PhononPreconditionError,
    TruncationError,
    atomic_state,
    basis_state,
    fidelity,
    new_ground,
    phonon_distribution,
    superposition,
)

PI = math.pi
S2 = math.sqrt(0.5)
HADAMARD = np.array([[1, 1], [1, -1]]) * S2
PAULI_X = np.array([[0, 1], [1, 0]])
PAULI_Z = np.diag([1, -1])
CZ_MATRIX = np.diag([1, 1, 1, -1])
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


@pytest.fixture
def spec2():
    return ChainSpec(n_ions=2, fock_cutoff=4)


def one_ion(schedule, d=4):
    spec = ChainSpec(n_ions=1, fock_cutoff=d)
    return atomic_block(spec, schedule_unitary(spec, schedule))


def random_atomic(spec, rng):
    c = rng.normal(size=spec.n_atomic) + 1j * rng.normal(size=spec.n_atomic)
    return atomic_state(spec, c / np.linalg.norm(c)), c / np.linalg.norm(c)


class TestSingleIonGates:
    def test_hadamard(self):
        sched = compile_hadamard(0)
        assert len(sched) == 2
        dist, chi = global_phase_distance(one_ion(sched), HADAMARD)
        print(f"hadamard global phase chi = {chi:.6f}")
        assert dist < 1e-10

    def test_hadamard_squared(self):
        assert global_phase_distance(one_ion(compile_hadamard(0) + compile_hadamard(0)), np.eye(2))[0] < 1e-10

    def test_x(self):
        assert len(compile_x(0)) == 1
        assert global_phase_distance(one_ion(compile_x(0)), PAULI_X)[0] < 1e-10

    def test_z(self):
        assert global_phase_distance(one_ion(compile_z(0)), PAULI_Z)[0] < 1e-10

    def test_rotation_identity(self):
        assert global_phase_distance(one_ion(compile_rotation(0, 0.0, 1.3)), np.eye(2))[0] < 1e-15

    def test_rotation_pi_half_pi(self, spec1):
        s = run_schedule(basis_state(spec1, "g", 0), compile_rotation(0, PI, PI / 2))
        assert fidelity(s, basis_state(spec1, "e", 0)) == pytest.approx(1.0, abs=1e-14)

    def test_rotation_draws(self, spec1, rng):
        for theta, phi in rng.uniform(0, 2 * PI, size=(50, 2)):
            s = run_schedule(new_ground(spec1), compile_rotation(0, theta, phi))
            want = atomic_state(spec1, [math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
            assert fidelity(s, want) == pytest.approx(1.0, abs=1e-12)

    def test_rotation_is_single_carrier(self):
        (p,) = compile_rotation(1, 0.4, 0.2).instructions
        assert p.kind is PulseKind.CARRIER and p.ion == 1 and p.beta == 0.4
        assert p.phase == pytest.approx(0.2 + PI / 2)


class TestSwapAndAux:
    def test_swap_forward(self, spec1):
        sw = compile_swap_av(0)
        out = run_schedule(basis_state(spec1, "e", 0), sw)
        np.testing.assert_allclose(out.amplitudes, basis_state(spec1, "g", 1).amplitudes, atol=1e-15)
        out = run_schedule(basis_state(spec1, "g", 1), sw)
        np.testing.assert_allclose(out.amplitudes, -basis_state(spec1, "e", 0).amplitudes, atol=1e-15)
        g0 = basis_state(spec1, "g", 0)
        np.testing.assert_array_equal(run_schedule(g0, sw).amplitudes, g0.amplitudes)

    def test_swap_inverse(self, spec2, rng):
        from trapion.state import random_state

        both = compile_swap_av(1) + compile_swap_av(1, inverse=True)
        for _ in range(10):
            s = random_state(spec2, rng)
            assert fidelity(run_schedule(s, both), s) == pytest.approx(1.0, abs=1e-10)

    def test_cz_av(self, spec1):
        aux = compile_cz_av(0)
        e1 = basis_state(spec1, "e", 1)
        np.testing.assert_array_equal(run_schedule(e1, aux).amplitudes, -e1.amplitudes)
        for label, n in [("g", 0), ("g", 1), ("e", 0)]:
            s = basis_state(spec1, label, n)
            np.testing.assert_array_equal(run_schedule(s, aux).amplitudes, s.amplitudes)
        np.testing.assert_allclose(schedule_unitary(spec1, aux + aux), np.eye(spec1.dim))


class TestCZ:
    def test_shape(self):
        sched = compile_cz(0, 1)
        assert [p.kind for p in sched] == [PulseKind.RED_SIDEBAND, PulseKind.AUX_BLUE_SIDEBAND, PulseKind.RED_SIDEBAND]
        assert [p.ion for p in sched] == [1, 0, 1]

    def test_random_states(self, spec2, rng):
        sched = compile_cz(0, 1)
        for _ in range(100):
            s, c = random_atomic(spec2, rng)
            out = run_schedule(s, sched)
            want = atomic_state(spec2, c * np.array([1, 1, 1, -1]))
            assert fidelity(out, want) >= 1 - 1e-10
            assert phonon_distribution(out)[0] >= 1 - 1e-10

    @pytest.mark.parametrize("c,t", [(0, 1), (1, 0)])
    def test_matrix(self, spec2, c, t):
        assert global_phase_distance(restricted_gate_matrix(spec2, compile_cz(c, t), [0, 1]), CZ_MATRIX)[0] < 1e-10

    def test_same_ion(self):
        with pytest.raises(ValueError, match="control equals target"):
            compile_cz(1, 1)


class TestCNOT:
    def test_length(self):
        assert len(compile_cnot(0, 1)) == 7

    def test_matrix(self, spec2):
        dist, chi = global_phase_distance(restricted_gate_matrix(spec2, compile_cnot(0, 1), [0, 1]), CNOT_MATRIX)
        print(f"cnot global phase chi = {chi:.6f}")
        assert dist < 1e-10

    def test_reversed_orientation(self, spec2):
        # with control 1 the matrix in (ion1, ion0) order is the same CNOT
        assert global_phase_distance(restricted_gate_matrix(spec2, compile_cnot(1, 0), [1, 0]), CNOT_MATRIX)[0] < 1e-10

    @pytest.mark.parametrize(
        "src,dst", [(("g", "g"), ("g", "g")), (("g", "e"), ("g", "e")), (("e", "g"), ("e", "e")), (("e", "e"), ("e", "g"))]
    )
    def test_truth_table(self, spec2, src, dst):
        out = run_schedule(basis_state(spec2, src, 0), compile_cnot(0, 1))
        assert fidelity(out, basis_state(spec2, dst, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_phonon_marginal(self, spec2, rng):
        sched = compile_cnot(0, 1)
        for _ in range(100):
            s, _ = random_atomic(spec2, rng)
            p = phonon_distribution(run_schedule(s, sched))
            np.testing.assert_allclose(p, np.eye(spec2.fock_cutoff)[0], atol=1e-10)

    def test_in_three_ion_chain(self):
        spec = ChainSpec(n_ions=3, fock_cutoff=3)
        u = restricted_gate_matrix(spec, compile_cnot(2, 0), [2, 0])
        assert global_phase_distance(u, CNOT_MATRIX)[0] < 1e-10


class TestBell:
    def test_fidelity(self, spec2):
        out = run_schedule(new_ground(spec2), compile_bell(0, 1))
        phi_plus = superposition(spec2, {(("g", "g"), 0): 1, (("e", "e"), 0): 1})
        assert fidelity(out, phi_plus) >= 1 - 1e-10

    def test_witness(self, spec2):
        out = run_schedule(new_ground(spec2), compile_bell(0, 1))
        for ion in (0, 1):
            assert bright_probability(out, ion) == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(joint_distribution(out), [0.5, 0, 0, 0.5], atol=1e-10)

    def test_from_eg(self, spec2):
        out = run_schedule(basis_state(spec2, ("e", "g"), 0), compile_bell(0, 1))
        oracle = CNOT_MATRIX @ np.kron(HADAMARD, np.eye(2)) @ np.array([0, 0, 1, 0])
        assert fidelity(out, atomic_state(spec2, oracle)) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(oracle, [S2, 0, 0, -S2])

    def test_length(self):
        assert len(compile_bell(0, 1)) == 9


class TestCircuit:
    def test_empty(self, spec2):
        sched = compile_circuit([])
        assert len(sched) == 0
        np.testing.assert_array_equal(schedule_unitary(spec2, sched), np.eye(spec2.dim))

    def test_hh(self, spec2):
        u = schedule_unitary(spec2, compile_circuit([H(0), H(0)]))
        assert global_phase_distance(u, np.eye(spec2.dim))[0] < 1e-10

    def test_bell_equivalence(self):
        assert compile_circuit([H(0), CNOT(0, 1)]) == compile_bell(0, 1)
        assert compile_circuit([BellPrep(0, 1)]) == compile_bell(0, 1)

    def test_deterministic(self, spec2):
        circ = [H(0), Rot(1, 0.3, 2.1), CNOT(0, 1), Z(1), X(0), CZ(1, 0)]
        assert compile_circuit(circ, spec2).to_text() == compile_circuit(list(circ), spec2).to_text()

    def test_ion_out_of_chain(self, spec2):
        with pytest.raises(IndexError):
            compile_circuit([H(2)], spec2)

    def test_rot_normalizes_angles(self):
        assert Rot(0, 2 * PI + 0.5, -0.25).theta == pytest.approx(0.5)

    def test_single_carrier_unitary(self, spec2):
        u = schedule_unitary(spec2, PulseSchedule((PulseInstruction(PulseKind.CARRIER, 0, PI, 0.0),)))
        d = spec2.fock_cutoff
        # |g x, n> <-> |e x, n> blocks with -1j off-diagonals
        for x in (0, 1):
            for n in range(d):
                g = spec2.flatten((0, x), n)
                e = spec2.flatten((1, x), n)
                assert u[e, g] == pytest.approx(-1j) and u[g, e] == pytest.approx(-1j)
                assert u[g, g] == pytest.approx(0)

    def test_unitary_composition_order(self, spec2):
        a = compile_rotation(0, 0.7, 0.1)
        b = compile_hadamard(0)
        np.testing.assert_allclose(
            schedule_unitary(spec2, a + b), schedule_unitary(spec2, b) @ schedule_unitary(spec2, a), atol=1e-14
        )


class TestTextFormats:
    def test_round_trip(self, spec2):
        sched = compile_circuit([H(0), Rot(1, 0.123456789, 5.4321), CNOT(0, 1), Z(0)], spec2)
        text = sched.to_text()
        again = parse_schedule(text)
        assert again == sched
        assert again.to_text() == text

    def test_parse_circuit(self):
        text = "# prep\nH 0\nrot 1 0.5 0.25  # trailing comment\n\nCNOT 0 1\nBELL 1 0\nX 0\nZ 1\nCZ 0 1\n"
        gates = parse_circuit(text)
        assert gates == [H(0), Rot(1, 0.5, 0.25), CNOT(0, 1), BellPrep(1, 0), X(0), Z(1), CZ(0, 1)]

    @pytest.mark.parametrize(
        "text,line,token",
        [
            ("H 0\nFOO 1\n", 2, "FOO"),
            ("H x\n", 1, "x"),
            ("CNOT 0\n", 1, "0"),
            ("ROT 0 1.0 abc\n", 1, "abc"),
            ("\n\nH -1\n", 3, "-1"),
            ("CNOT 0 0\n", 1, "0 0"),
            ("ROT 0 nan 0\n", 1, "nan"),
        ],
    )
    def test_parse_errors(self, text, line, token):
        with pytest.raises(CircuitParseError) as info:
            parse_circuit(text)
        assert info.value.line_no == line
        assert info.value.token == token
        assert f"line {line}" in str(info.value)

    def test_cnot_same_ion_message(self):
        with pytest.raises(CircuitParseError, match="control equals target"):
            parse_circuit("CNOT 0 0")

    @pytest.mark.parametrize("text", ["XYZ 0 1 2", "CARRIER 0 1.0", "AUXBSB 0 1.0", "RSB a 1 2"])
    def test_schedule_parse_errors(self, text):
        with pytest.raises(CircuitParseError):
            parse_schedule(text)


class TestRunSchedule:
    def test_phonon_precondition(self, spec2):
        excited = basis_state(spec2, ("g", "g"), 1)
        with pytest.raises(ScheduleError) as info:
            run_schedule(excited, compile_circuit([H(0), CNOT(0, 1)]))
        assert info.value.pulse_index == 4
        assert isinstance(info.value.cause, PhononPreconditionError)
        # the check can be switched off
        run_schedule(excited, compile_cz(0, 1), check_phonon=False)

    def test_truncation_reports_index(self):
        spec = ChainSpec(n_ions=1, fock_cutoff=3)
        sched = PulseSchedule(
            (
                PulseInstruction(PulseKind.BLUE_SIDEBAND, 0, PI, 0.0),
                PulseInstruction(PulseKind.CARRIER, 0, PI, 0.0),
                PulseInstruction(PulseKind.BLUE_SIDEBAND, 0, PI / 2, 0.0),
            )
        )
        with pytest.raises(ScheduleError) as info:
            run_schedule(new_ground(spec), sched)
        assert info.value.pulse_index == 2
        assert isinstance(info.value.cause, TruncationError)

    def test_ion_out_of_range(self, spec1):
        with pytest.raises(IndexError, match="pulse 0"):
            run_schedule(new_ground(spec1), compile_hadamard(1))
