"""Reference (NumPy / pure-Python) implementations of the hot loops.

Both functions here have compiled twins in ``_ckernels.pyx`` with the
same signatures and the same arithmetic order; the test-suite checks
that the two agree.
"""
import math

import numpy as np

# Taylor terms are summed until the largest entry of the next term drops below this.
TAYLOR_TOL = 1e-17
MAX_TAYLOR_TERMS = 40
# Sub-step so that ||H|| * h <= this bound.
SUBSTEP_NORM = 0.5

NEED_MORE = 0
HIT_MAX_EVENTS = 1
STALLED = 2

ABSORB = 0
EMIT = 1


def hamiltonian_norm_bound(omega_rabi, eta, d):
    return 0.5 * omega_rabi + eta * omega_rabi * math.sqrt(d - 1)


def _ladder_operators(d):
    # Single-ion operators on the (atom, phonon) block ordered g-block then e-block.
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)
    eye = np.eye(d)
    raise_atom = np.array([[0.0, 0.0], [1.0, 0.0]])  # |e><g|
    carrier = np.kron(raise_atom, eye)
    red = np.kron(raise_atom, a)
    blue = np.kron(raise_atom, a.T)
    return carrier, red, blue


def propagate_batch(psi, omega_rabi, eta, omega_z, detuning, phase, dt, n_steps, t0=0.0):
    """Evolve ``psi`` (shape ``(B, 2, d)``, complex128) in place.

    Each step of length ``dt`` freezes the interaction Hamiltonian at the
    step midpoint and applies ``exp(-i H dt)`` to the batch through a
    truncated Taylor series, sub-stepped so every series argument stays
    below ``SUBSTEP_NORM`` in norm.
    """
    batch, _, d = psi.shape
    carrier, red, blue = _ladder_operators(d)
    carrier = 0.5 * omega_rabi * carrier
    red = 0.5 * eta * omega_rabi * red
    blue = 0.5 * eta * omega_rabi * blue
    phase_sb = phase + 0.5 * math.pi

    n_sub = max(1, math.ceil(hamiltonian_norm_bound(omega_rabi, eta, d) * dt / SUBSTEP_NORM))
    h = dt / n_sub
    vec = psi.reshape(batch, 2 * d).T.copy()  # columns are batch members

    for k in range(n_steps):
        t = t0 + (k + 0.5) * dt
        c_coef = complex(math.cos(detuning * t - phase), -math.sin(detuning * t - phase))
        arg_r = -(detuning + omega_z) * t + phase_sb
        arg_b = -(detuning - omega_z) * t + phase_sb
        r_coef = complex(math.cos(arg_r), math.sin(arg_r))
        b_coef = complex(math.cos(arg_b), math.sin(arg_b))
        upper = c_coef * carrier + r_coef * red + b_coef * blue
        gen = -1j * h * (upper + upper.conj().T)
        for _ in range(n_sub):
            term = vec
            acc = vec.copy()
            for j in range(1, MAX_TAYLOR_TERMS + 1):
                term = (gen @ term) / j
                acc += term
                if max(np.max(np.abs(term.real)), np.max(np.abs(term.imag))) < TAYLOR_TOL:
                    break
            vec = acc
    psi[...] = vec.T.reshape(batch, 2, d)


def doppler_events(v, reject_run, uniforms, out_v, out_type, n_rec, max_events,
                   recoil_v, k, half_gamma, detuning, max_rejects, counter_only):
    """Consume ``uniforms`` driving the absorb/emit cycle.

    Returns ``(v, reject_run, n_rec, consumed, status)``.  A cycle is only
    started when two variates are available, so the caller can top up the
    stream between calls without changing the outcome.
    """
    pos = 0
    n_u = len(uniforms)
    g2 = half_gamma * half_gamma
    while True:
        if n_rec >= max_events:
            return v, reject_run, n_rec, pos, HIT_MAX_EVENTS
        if reject_run >= max_rejects:
            return v, reject_run, n_rec, pos, STALLED
        if pos + 2 > n_u:
            return v, reject_run, n_rec, pos, NEED_MORE
        x = k * v - detuning
        if counter_only and v <= 0.0:
            p_abs = 0.0
        else:
            p_abs = g2 / (x * x + g2)
        u = uniforms[pos]
        pos += 1
        if u >= p_abs:
            reject_run += 1
            continue
        reject_run = 0
        v -= recoil_v
        out_v[n_rec] = v
        out_type[n_rec] = ABSORB
        n_rec += 1
        if n_rec >= max_events:
            return v, reject_run, n_rec, pos, HIT_MAX_EVENTS
        v += recoil_v * (2.0 * uniforms[pos] - 1.0)
        pos += 1
        out_v[n_rec] = v
        out_type[n_rec] = EMIT
        n_rec += 1
