"""Batch command line: run gate- or pulse-level experiments, sweep all six
permutations, and compile gates to pulse sequences.

Exit codes: 0 = classified, 1 = usage/config error, 2 = unclassifiable
physics outcome. All outputs are deterministic given the config (seed
included), and files are written atomically.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import compiler, spectro, spin
from .core import DensityMatrix
from .permutations import (
    CauchyParseError,
    Parity,
    PermutationMap,
    name_of,
    parity_by_counting,
    resolve,
    run_parity_algorithm,
)

ENV_OUTPUT_DIR = "QUTRIT_PARITY_OUTPUT_DIR"

#: defaults mirror the reference experiment: Lambda/2pi = 156 Hz,
#: T1 = 170 ms, T2 = 50 ms, 30-degree detection
@dataclass
class RunConfig:
    mode: str = "pulse"
    permutation: str = "f1"
    lambda_q_hz: float = 156.0
    t1_s: float = 0.170
    t2_s: float = 0.050
    detection_flip_deg: float = 30.0
    n: int = 4096
    dwell_s: float = 1.0 / 4000.0
    pulse_angle_sigma_deg: float = 0.0
    seed: int = 0
    output_dir: str = "."

    def validate(self):
        if self.mode not in ("gate", "pulse"):
            raise ConfigError(f"mode must be 'gate' or 'pulse', got {self.mode!r}")
        for name in ("lambda_q_hz", "t1_s", "t2_s", "detection_flip_deg",
                     "dwell_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ConfigError(f"n must be a power of two >= 2, got {self.n}")
        if self.pulse_angle_sigma_deg < 0:
            raise ConfigError("pulse_angle_sigma_deg must be >= 0")

    def hamiltonian(self) -> spin.HamiltonianParams:
        return spin.HamiltonianParams(lambda_q=2.0 * np.pi * self.lambda_q_hz)

    def relaxation(self) -> spin.RelaxationParams:
        return spin.RelaxationParams(self.t1_s, self.t2_s)

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


class ConfigError(ValueError):
    pass


_SECTION_FIELDS = {
    "run": ("mode", "permutation", "lambda_q_hz", "t1_s", "t2_s",
            "detection_flip_deg", "output_dir"),
    "acquisition": ("n", "dwell_s"),
    "noise": ("pulse_angle_sigma_deg", "seed"),
}


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path!r}")
    cfg = RunConfig()
    for section, fields in _SECTION_FIELDS.items():
        if not parser.has_section(section):
            continue
        for key in parser[section]:
            if key not in fields:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            current = getattr(cfg, key)
            raw = parser[section][key]
            try:
                value = type(current)(raw) if not isinstance(current, str) else raw
            except ValueError:
                raise ConfigError(f"bad value {raw!r} for {key}") from None
            setattr(cfg, key, value)
    return cfg


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _oracle_gate_name(p: PermutationMap) -> str:
    return "U" + name_of(p)[1]


def build_pulse_program(p: PermutationMap) -> list:
    """Pseudopure prep, compiled F, compiled oracle, compiled F inverse."""
    events = list(spin.pseudopure_prep_events())
    for gate in ("F", _oracle_gate_name(p), "Finv"):
        events.extend(compiler.compile_gate(gate).events)
    return events


def _perturb_flips(events, sigma_deg: float, rng) -> list:
    out = []
    for event in events:
        if isinstance(event, spin.Pulse) and sigma_deg > 0:
            flip = (event.flip_deg + rng.normal(0.0, sigma_deg)) % 360.0
            out.append(spin.Pulse(event.target, flip if flip else 360.0,
                                  event.phase_deg, event.duration_s))
        else:
            out.append(event)
    return out


def run_pulse_experiment(cfg: RunConfig, p: PermutationMap, rng):
    """Full pulse-level pipeline; returns (program, fid, spectrum, readout)."""
    params = cfg.hamiltonian()
    program = _perturb_flips(build_pulse_program(p), cfg.pulse_angle_sigma_deg, rng)
    rho = spin.run_pulse_program(spin.thermal_deviation(), program, params)

    flip = cfg.detection_flip_deg
    if cfg.pulse_angle_sigma_deg > 0:
        flip = float(np.clip(flip + rng.normal(0.0, cfg.pulse_angle_sigma_deg),
                             1e-6, 360.0))
    detected = spectro.detect(rho, flip)
    fid = spectro.synthesize_fid(detected, params, cfg.relaxation(),
                                 cfg.n, cfg.dwell_s)
    spectrum = spectro.transform(fid)
    peaks = spectro.pick_peaks(spectrum)
    readout = spectro.classify_spectrum(peaks, params)
    return program, fid, spectrum, readout


def cmd_run(cfg: RunConfig) -> int:
    started = time.monotonic()
    perm = resolve(cfg.permutation)
    out = cfg.output_dir
    record = {"config": cfg.snapshot(), "permutation": name_of(perm),
              "cauchy": perm.cauchy()}

    if cfg.mode == "gate":
        if cfg.pulse_angle_sigma_deg:
            print("warning: noise settings are ignored in gate mode",
                  file=sys.stderr)
        trace = run_parity_algorithm(perm)
        record["trace"] = trace.to_record()
        record["verdict"] = trace.verdict.value
        _write_json(os.path.join(out, "trace.json"), trace.to_record())
        _write_json(os.path.join(out, "run_record.json"), record)
        print(f"{name_of(perm)}: verdict {trace.verdict.value} "
              f"(global phase {trace.global_phase:+.6f} rad)")
    else:
        rng = np.random.default_rng(cfg.seed)
        try:
            program, fid, spectrum, readout = run_pulse_experiment(cfg, perm, rng)
        except (spectro.UnclassifiableSpectrumError,
                spectro.EmptySpectrumError) as exc:
            print(f"unclassifiable: {exc}", file=sys.stderr)
            return 2
        record["pulse_program"] = spin.program_to_records(program)
        record["readout"] = readout.to_record()
        record["verdict"] = readout.verdict.value
        _write_json(os.path.join(out, "pulse_program.json"),
                    spin.program_to_records(program))
        _atomic_write(os.path.join(out, "fid.txt"), spectro.fid_to_text(fid))
        _atomic_write(os.path.join(out, "spectrum.txt"),
                      spectro.spectrum_to_text(spectrum))
        _write_json(os.path.join(out, "readout.json"), readout.to_record())
        _write_json(os.path.join(out, "run_record.json"), record)
        print(f"{name_of(perm)}: verdict {readout.verdict.value} "
              f"(line12 {readout.line12:+.6g}, line23 {readout.line23:+.6g})")

    print(f"wall time {time.monotonic() - started:.3f} s", file=sys.stderr)
    return 0


def cmd_sweep(cfg: RunConfig, repetitions: int = 1) -> int:
    rows = []
    correct = 0
    total = 0
    for index, name in enumerate(f"f{k}" for k in range(1, 7)):
        perm = resolve(name)
        expected = parity_by_counting(perm)
        for rep in range(repetitions):
            rng = np.random.default_rng([cfg.seed, index, rep])
            total += 1
            try:
                _, _, _, readout = run_pulse_experiment(cfg, perm, rng)
            except (spectro.UnclassifiableSpectrumError,
                    spectro.EmptySpectrumError):
                rows.append((name, rep, "unclassifiable", 0.0, 0.0, False))
                continue
            match = readout.verdict is expected
            correct += match
            rows.append((name, rep, readout.verdict.value,
                         readout.line12, readout.line23, match))
    accuracy = correct / total
    lines = ["permutation\trep\tverdict\tline12\tline23\tmatch"]
    for name, rep, verdict, l12, l23, match in rows:
        lines.append(f"{name}\t{rep}\t{verdict}\t{l12!r}\t{l23!r}\t{match}")
    lines.append(f"# accuracy = {correct}/{total} = {accuracy!r}")
    _atomic_write(os.path.join(cfg.output_dir, "sweep.tsv"),
                  "\n".join(lines) + "\n")
    print(f"accuracy {correct}/{total} = {accuracy:.3f}")
    return 0 if correct == total else 2


def cmd_compile(gate: str, output_dir: str) -> int:
    seq = compiler.compile_gate(gate)
    report = compiler.verify(seq)
    record = seq.to_record()
    record["worst_entry"] = report.worst_entry
    _write_json(os.path.join(output_dir, f"{gate}_sequence.json"), record)
    print(f"{gate}: fidelity {report.fidelity:.12f}, "
          f"phase_exact {report.phase_exact}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub):
    sub.add_argument("--config", help="INI config file")
    sub.add_argument("--mode", choices=["gate", "pulse"])
    sub.add_argument("--permutation", help="name f1..f6 or Cauchy text")
    sub.add_argument("--lambda-q-hz", type=float, dest="lambda_q_hz")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--noise-sigma-deg", type=float, dest="pulse_angle_sigma_deg")
    sub.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qutrit-parity",
                     description="Single-qutrit permutation-parity simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run one permutation")
    _add_common(run)

    sweep = subs.add_parser("sweep", help="run all six permutations")
    _add_common(sweep)
    sweep.add_argument("--repeat", type=int, default=1,
                       help="seeded repetitions per permutation")

    comp = subs.add_parser("compile", help="compile a gate to pulses")
    comp.add_argument("gate", help=f"one of {', '.join(compiler.GATE_NAMES)}")
    comp.add_argument("--output-dir", dest="output_dir")
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in ("mode", "permutation", "lambda_q_hz", "seed",
                "pulse_angle_sigma_deg"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = args.output_dir
    elif cfg.output_dir == "." and ENV_OUTPUT_DIR in os.environ:
        cfg.output_dir = os.environ[ENV_OUTPUT_DIR]
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compile":
            out = args.output_dir or os.environ.get(ENV_OUTPUT_DIR, ".")
            return cmd_compile(args.gate, out)
        cfg = _config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            if args.repeat < 1:
                raise ConfigError("--repeat must be >= 1")
            return cmd_sweep(cfg, args.repeat)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CauchyParseError, compiler.UnknownGateError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
