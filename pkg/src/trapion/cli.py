"""Command-line entry point.

Configuration is a flat JSON object with snake_case keys (see
:class:`RunConfig`); command-line flags override file values.  Angles are
in radians, frequencies in rad/s, masses in kg.

Exit codes: 0 success, 2 parse or validation error, 3 physics error
(Fock truncation, phonon precondition).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import (
    CircuitParseError,
    PulseSchedule,
    compile_bell,
    compile_circuit,
    parse_circuit,
    parse_schedule,
)
from .cooling import (
    DopplerParams,
    doppler_ensemble,
    doppler_mc_run,
    pi_pulse_time,
    sideband_cool,
    sideband_log_csv,
    window_mean_energies,
)
from .compiler import run_schedule
from .dynamics import rsb_pi_pulse_infidelity
from .readout import bright_probability, estimate_probabilities, pattern_counts, sample_shots, shots_csv
from .state import ChainSpec, PhysicsError, fidelity, new_ground, phonon_distribution

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_PHYSICS = 3


@dataclass
class RunConfig:
    n_ions: int = 2
    omega_z: float = 2 * math.pi * 1e6
    eta: float = 0.1
    omega_rabi: float = 2 * math.pi * 1e5
    fock_cutoff: int = 20
    shots: int = 0
    seed: int = 0
    out: str = ""
    experiment: str = ""
    detection_error: float = 0.0
    # sideband cooling
    n0: int = 10
    heating_probability: float = 0.0
    # Doppler cooling; None means the 40Ca+ default
    mass: float | None = None
    wavevector_k: float | None = None
    gamma_linewidth: float | None = None
    detuning_delta: float | None = None
    initial_speed_recoils: float = 50.0
    ensemble: int = 100
    max_events: int = 2000
    # RWA check
    ratios: list = field(default_factory=lambda: [0.1, 0.05, 0.025])

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.ensemble < 1 or self.max_events < 1:
            raise ValueError("ensemble and max_events must be >= 1")
        if not self.ratios or any(not r > 0 for r in self.ratios):
            raise ValueError("ratios must be a non-empty list of positive numbers")
        self.chain_spec()

    def chain_spec(self) -> ChainSpec:
        return ChainSpec(
            n_ions=self.n_ions,
            omega_z=self.omega_z,
            eta=self.eta,
            omega_rabi=self.omega_rabi,
            fock_cutoff=self.fock_cutoff,
        )

    def doppler_params(self) -> DopplerParams:
        overrides = {
            k: getattr(self, k)
            for k in ("mass", "wavevector_k", "gamma_linewidth", "detuning_delta")
            if getattr(self, k) is not None
        }
        base = DopplerParams.calcium40(seed=self.seed, **overrides)
        return dataclasses.replace(base, initial_speed=self.initial_speed_recoils * base.recoil_speed)

    @classmethod
    def load(cls, path: str | None, **overrides) -> "RunConfig":
        values = {}
        if path:
            with open(path) as fh:
                values = json.load(fh)
            if not isinstance(values, dict):
                raise ValueError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _write(out_dir: str, name: str, text: str) -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _pattern_key(pattern) -> str:
    return "".join(str(b) for b in pattern)


def simulate_schedule(schedule: PulseSchedule, config: RunConfig) -> tuple[dict, np.ndarray | None]:
    """Run ``schedule`` from the fiducial state; returns the record and the shot bits."""
    spec = config.chain_spec()
    start = time.perf_counter()
    state = run_schedule(new_ground(spec), schedule)
    record = {
        "tool": "trapion",
        "version": __version__,
        "config": config.to_dict(),
        "schedule": schedule.to_text().splitlines(),
        "final_state": {
            "bright_probability": [bright_probability(state, i) for i in range(spec.n_ions)],
            "phonon_distribution": phonon_distribution(state).tolist(),
            "ground_fidelity": fidelity(state, new_ground(spec)),
        },
    }
    bits = None
    if config.shots:
        bits = sample_shots(state, config.shots, seed=config.seed, detection_error=config.detection_error)
        estimates = estimate_probabilities(bits)
        record["shots"] = {
            "n": int(config.shots),
            "counts": {_pattern_key(p): c for p, c in pattern_counts(bits).items()},
            "estimates": {_pattern_key(p): {"p": v[0], "se": v[1]} for p, v in estimates.items()},
        }
    record["wall_clock_s"] = time.perf_counter() - start
    return record, bits


def _emit_simulation(record: dict, bits, out_dir: str):
    if out_dir:
        _write(out_dir, "run.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
        if bits is not None:
            _write(out_dir, "shots.csv", shots_csv(bits))
    fs = record["final_state"]
    print("bright probability per ion: " + ", ".join(f"{p:.6f}" for p in fs["bright_probability"]))
    print(f"phonon ground population: {fs['phonon_distribution'][0]:.12f}")
    if "shots" in record:
        counts = record["shots"]["counts"]
        print("counts (1 = bright): " + ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))


def cmd_compile(args, config: RunConfig) -> int:
    text = Path(args.circuit).read_text()
    circuit = parse_circuit(text)
    schedule = compile_circuit(circuit, config.chain_spec())
    out = schedule.to_text()
    if config.out:
        path = _write(config.out, "schedule.txt", out)
        print(f"wrote {len(schedule)} pulses to {path}")
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_simulate(args, config: RunConfig) -> int:
    schedule = parse_schedule(Path(args.schedule).read_text())
    record, bits = simulate_schedule(schedule, config)
    _emit_simulation(record, bits, config.out)
    return EXIT_OK


def cmd_bell_demo(args, config: RunConfig) -> int:
    if config.n_ions < 2:
        raise ValueError("bell-demo needs at least two ions")
    if not config.shots:
        config.shots = 10_000
    schedule = compile_bell(0, 1)
    record, bits = simulate_schedule(schedule, config)
    if config.out:
        _write(config.out, "schedule.txt", schedule.to_text())
    _emit_simulation(record, bits, config.out)
    return EXIT_OK


def cmd_cool(args, config: RunConfig) -> int:
    if args.kind == "sideband":
        spec = dataclasses.replace(config.chain_spec(), n_ions=1)
        steps = sideband_cool(spec, config.n0, heating_probability=config.heating_probability, seed=config.seed)
        final = fidelity(steps[-1].state, new_ground(spec)) if steps else 1.0
        if config.out:
            _write(config.out, "sideband_log.csv", sideband_log_csv(steps))
        print(f"cycles: {len(steps)}, final ground fidelity: {final:.12g}")
        if steps:
            print(f"first pulse: {steps[0].pulse_time:.6g} s (pi time at n={steps[0].n}: {pi_pulse_time(steps[0].n, spec):.6g} s)")
        return EXIT_OK

    params = config.doppler_params()
    v_r = params.recoil_speed
    first = doppler_mc_run(params, config.max_events)
    runs = doppler_ensemble(params, range(config.seed, config.seed + config.ensemble), config.max_events)
    terminal = np.array([abs(t.final_velocity) for t in runs])
    windows = window_mean_energies(runs, 100, config.max_events) / params.recoil_energy
    summary = {
        "seed": config.seed,
        "ensemble": config.ensemble,
        "recoil_speed_m_s": v_r,
        "initial_speed_m_s": params.initial_speed,
        "mean_terminal_speed_m_s": float(terminal.mean()),
        "mean_terminal_speed_recoils": float(terminal.mean() / v_r),
        "window_mean_energy_recoils": windows.tolist(),
    }
    if config.out:
        _write(config.out, "doppler_trajectory.csv", first.to_csv())
        _write(config.out, "doppler_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"events (seed {config.seed}): {len(first)}, stop: {first.stop_reason}")
    print(
        f"terminal speed: {abs(first.final_velocity) / v_r:.3f} hbar*k/M (seed {config.seed}); "
        f"ensemble mean over {config.ensemble}: {summary['mean_terminal_speed_recoils']:.3f} hbar*k/M"
    )
    return EXIT_OK


def rwa_table(config: RunConfig, backend: str | None = None) -> list[tuple[float, float]]:
    base = config.chain_spec()
    rows = []
    for ratio in config.ratios:
        spec = dataclasses.replace(base, n_ions=1, omega_rabi=ratio * base.omega_z)
        rows.append((float(ratio), rsb_pi_pulse_infidelity(spec, backend=backend)))
    return rows


def cmd_rwa_check(args, config: RunConfig) -> int:
    rows = rwa_table(config)
    lines = ["ratio,infidelity"] + [f"{r!r},{inf!r}" for r, inf in rows]
    if config.out:
        _write(config.out, "rwa_check.csv", "\n".join(lines) + "\n")
    print(f"{'Omega/omega_z':>14}  {'infidelity':>12}")
    for r, inf in rows:
        print(f"{r:>14.6g}  {inf:>12.4e}")
    infs = [inf for _, inf in rows]
    ordered = sorted(zip(config.ratios, infs), reverse=True)
    monotone = all(a[1] > b[1] for a, b in zip(ordered, ordered[1:]))
    print(f"monotone in ratio: {'yes' if monotone else 'no'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat JSON config (snake_case keys)")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--shots", type=int, help="number of readout shots")
    common.add_argument("--out", metavar="DIR", help="output directory")

    parser = argparse.ArgumentParser(
        prog="trapion",
        description=(
            "Trapped-ion pulse compiler and simulator. Config keys: n_ions, omega_z [rad/s], "
            "eta, omega_rabi [rad/s], fock_cutoff, shots, seed, out, detection_error, n0, "
            "heating_probability, mass [kg], wavevector_k [rad/m], gamma_linewidth [rad/s], "
            "detuning_delta [rad/s], initial_speed_recoils, ensemble, max_events, ratios."
        ),
    )
    parser.add_argument("--version", action="version", version=f"trapion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", parents=[common], help="lower a circuit file to a pulse schedule")
    p.add_argument("circuit")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", parents=[common], help="run a schedule from |g...g,0>")
    p.add_argument("schedule")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cool", parents=[common], help="Doppler or sideband cooling")
    p.add_argument("kind", choices=["doppler", "sideband"])
    p.add_argument("--n0", type=int, help="initial phonon number (sideband)")
    p.add_argument("--ensemble", type=int, help="number of seeds (doppler)")
    p.add_argument("--max-events", type=int, help="events per run (doppler)")
    p.set_defaults(func=cmd_cool)

    p = sub.add_parser("rwa-check", parents=[common], help="numeric vs analytic red-sideband pi pulse")
    p.add_argument("--ratios", help="comma-separated Omega/omega_z values")
    p.add_argument("--eta", type=float, help="Lamb-Dicke parameter")
    p.set_defaults(func=cmd_rwa_check)

    p = sub.add_parser("bell-demo", parents=[common], help="compile, run and sample a Bell pair")
    p.set_defaults(func=cmd_bell_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "shots": args.shots, "out": args.out, "experiment": args.command}
    for name in ("n0", "ensemble", "max_events", "eta"):
        overrides[name] = getattr(args, name, None)
    try:
        if getattr(args, "ratios", None):
            overrides["ratios"] = [float(x) for x in args.ratios.split(",") if x.strip()]
        config = RunConfig.load(args.config, **overrides)
        return args.func(args, config)
    except CircuitParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ValueError, IndexError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
