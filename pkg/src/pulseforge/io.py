"""Plain-text file formats: pulses, matrices and run configurations.

Pulse file::

    n dt
    x_1 y_1 [x_2 y_2 ...]      # one line per step, one (x, y) pair per channel, rad/s

Matrix file::

    N
    re im re im ...            # one line per row, N complex entries

Config file: ``[section]`` headers and ``key = value`` lines; ``#`` starts a
comment. Frequencies are given in Hz and durations in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gates import named_gate
from .optimize import OptimizerConfig, random_initial_pulse
from .propagators import ControlPulse
from .linalg import expm
from .spins import TWO_PI, SpinSystem, build_H0


class ParseError(ValueError):
    """Malformed input file; the message carries ``path:line``."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_pulse(pulse: ControlPulse) -> str:
    lines = [f"{pulse.n} {_fmt(pulse.dt)}"]
    flat = pulse.amplitudes.reshape(pulse.n, -1)
    lines.extend(" ".join(_fmt(v) for v in row) for row in flat)
    return "\n".join(lines) + "\n"


def write_pulse(path, pulse: ControlPulse):
    Path(path).write_text(format_pulse(pulse))


def read_pulse(path) -> ControlPulse:
    lines = [(i + 1, ln.split("#", 1)[0].split()) for i, ln in
             enumerate(Path(path).read_text().splitlines())]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise ParseError(path, None, "empty pulse file")
    lineno, header = lines[0]
    if len(header) != 2:
        raise ParseError(path, lineno, "header must be 'n dt'")
    try:
        n = int(header[0])
        dt = float(header[1])
    except ValueError as exc:
        raise ParseError(path, lineno, f"bad header: {exc}") from None
    if n < 1:
        raise ParseError(path, lineno, "pulse must have n ≥ 1 steps")
    if not dt > 0:
        raise ParseError(path, lineno, "dt must be positive")
    body = lines[1:]
    if len(body) != n:
        raise ParseError(path, lineno, f"header declares {n} steps but {len(body)} follow")
    width = len(body[0][1])
    rows = []
    for i, toks in body:
        if len(toks) != width or width % 2:
            raise ParseError(path, i, f"expected {width} values (x y per channel), got {len(toks)}")
        try:
            rows.append([float(t) for t in toks])
        except ValueError as exc:
            raise ParseError(path, i, str(exc)) from None
    amps = np.array(rows).reshape(n, width // 2, 2)
    if not np.all(np.isfinite(amps)):
        raise ParseError(path, None, "amplitudes must be finite")
    return ControlPulse(amps, dt)


def format_matrix(M: np.ndarray) -> str:
    M = np.asarray(M)
    lines = [str(M.shape[0])]
    for row in M:
        lines.append(" ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def write_matrix(path, M: np.ndarray):
    Path(path).write_text(format_matrix(M))


def read_matrix(path) -> np.ndarray:
    lines = [(i + 1, ln.split("#", 1)[0].split()) for i, ln in
             enumerate(Path(path).read_text().splitlines())]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise ParseError(path, None, "empty matrix file")
    lineno, header = lines[0]
    try:
        n = int(header[0])
    except (ValueError, IndexError):
        raise ParseError(path, lineno, "header must be the dimension N") from None
    if len(lines) - 1 != n:
        raise ParseError(path, lineno, f"expected {n} rows, found {len(lines) - 1}")
    M = np.empty((n, n), dtype=np.complex128)
    for r, (i, toks) in enumerate(lines[1:]):
        if len(toks) != 2 * n:
            raise ParseError(path, i, f"expected {2 * n} values, got {len(toks)}")
        try:
            vals = np.array([float(t) for t in toks])
        except ValueError as exc:
            raise ParseError(path, i, str(exc)) from None
        M[r] = vals[0::2] + 1j * vals[1::2]
    return M


@dataclass
class _Entry:
    value: str
    line: int


@dataclass
class ConfigFile:
    """Parsed sections with the source line of every value."""

    path: Path
    sections: dict = field(default_factory=dict)

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def raw(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry.value

    def get(self, section: str, key: str, convert=str, default=None, required: bool = False):
        entry = self.sections.get(section, {}).get(key)
        if entry is None:
            if required:
                raise ParseError(self.path, None, f"missing [{section}] {key}")
            return default
        try:
            return convert(entry.value)
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(self.path, entry.line, f"[{section}] {key}: {exc}") from None

    def line(self, section: str, key: str):
        entry = self.sections.get(section, {}).get(key)
        return None if entry is None else entry.line

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.path.parent / p


KNOWN_SECTIONS = ("system", "pulse", "target", "optimizer")


def read_config(path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, None, f"cannot read: {exc.strerror}") from None
    cfg = ConfigFile(path)
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(path, i, f"malformed section header {line!r}")
            section = line[1:-1].strip().lower()
            if section not in KNOWN_SECTIONS:
                raise ParseError(path, i, f"unknown section [{section}]")
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in line:
            raise ParseError(path, i, f"expected 'key = value', got {line!r}")
        if section is None:
            raise ParseError(path, i, "value outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in cfg.sections[section]:
            raise ParseError(path, i, f"duplicate key {key!r} in [{section}]")
        cfg.sections[section][key] = _Entry(value, i)
    return cfg


def _floats(text: str) -> list:
    return [float(t) for t in text.replace(",", " ").split()]


def _spin_index(token: str, labels: tuple) -> int:
    if token in labels:
        return labels.index(token)
    idx = int(token)
    if not 0 <= idx < len(labels):
        raise ValueError(f"spin {token!r} not in 0..{len(labels) - 1}")
    return idx


def _pairs(text: str, labels: tuple) -> dict:
    """``A-B:hz, C-D:hz`` with spin labels or 0-based indices."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        pair, _, hz = item.partition(":")
        a, sep, b = pair.partition("-")
        if not sep or not hz:
            raise ValueError(f"coupling {item!r} must look like 'A-B:hz'")
        out[(_spin_index(a.strip(), labels), _spin_index(b.strip(), labels))] = float(hz)
    return out


def system_from_config(cfg: ConfigFile) -> SpinSystem:
    offsets = cfg.get("system", "offsets_hz", _floats, required=True)
    q = len(offsets)
    labels = tuple(cfg.get("system", "labels", str.split, default=[f"S{r + 1}" for r in range(q)]))
    species = tuple(cfg.get("system", "species", str.split, default=["1H"] * q))
    couplings = cfg.get("system", "couplings_hz", lambda t: _pairs(t, labels), default={})
    dipolar = cfg.get("system", "dipolar_hz", lambda t: _pairs(t, labels), default={})
    model = cfg.get("system", "coupling_model", str.lower, default="weak")
    try:
        return SpinSystem.from_hz(offsets, couplings, dipolar, species=species,
                                  coupling_model=model, labels=labels)
    except (ValueError, KeyError) as exc:
        raise ParseError(cfg.path, cfg.line("system", "offsets_hz"), str(exc)) from None


def target_from_config(cfg: ConfigFile, system: SpinSystem, duration: float | None = None) -> np.ndarray:
    """Target unitary from ``matrix_file`` or a named gate.

    ``gate = free_evolution`` means ``exp(-i H0 T)`` with ``T`` the pulse
    duration, i.e. the propagator of a pulse with all amplitudes zero.
    """
    if cfg.has("target", "matrix_file"):
        M = read_matrix(cfg.resolve(cfg.raw("target", "matrix_file")))
        if M.shape != (system.dim, system.dim):
            raise ParseError(cfg.path, cfg.line("target", "matrix_file"),
                             f"target matrix is {M.shape[0]}x{M.shape[0]}, system needs {system.dim}")
        return M
    name = cfg.get("target", "gate", str, default="identity")
    if name.lower() == "free_evolution":
        if duration is None:
            raise ParseError(cfg.path, cfg.line("target", "gate"), "free_evolution needs a pulse duration")
        return expm(-1j * duration * build_H0(system))
    spins = cfg.get("target", "spins", lambda t: [_spin_index(s, system.labels) for s in t.split()],
                    default=[])
    angle = cfg.get("target", "angle", float)
    try:
        return named_gate(name, system.q, spins, angle)
    except ValueError as exc:
        raise ParseError(cfg.path, cfg.line("target", "gate"), str(exc)) from None


def parse_offsets(text: str) -> list:
    """Per-channel offset lists in Hz separated by ';', converted to rad/s.

    >>> parse_offsets("1250, 3750")  # doctest: +ELLIPSIS
    [[7853.98..., 23561.9...]]
    """
    return [[TWO_PI * v for v in _floats(part)] for part in text.split(";")]


def optimizer_from_config(cfg: ConfigFile, **overrides) -> OptimizerConfig:
    get = cfg.get
    kwargs = dict(
        alpha_max=TWO_PI * get("optimizer", "alpha_max_hz", float, required=True),
        max_iterations=get("optimizer", "max_iterations", int, default=500),
        target_fidelity=get("optimizer", "target_fidelity", float, default=0.999),
        backend=get("optimizer", "backend", str, default="suzuki_fixed_offset"),
        initial_step=get("optimizer", "initial_step", float, default=0.1),
        offsets=get("optimizer", "offsets_hz", parse_offsets, default=None),
        hybrid_threshold=get("optimizer", "hybrid_threshold", float, default=0.99),
        scalings=get("optimizer", "scalings", _floats, default=None),
        exact_sample_every=get("optimizer", "exact_sample_every", int, default=10),
        seed=get("optimizer", "seed", int, default=0),
    )
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return OptimizerConfig(**kwargs)
    except ValueError as exc:
        raise ParseError(cfg.path, None, f"[optimizer] {exc}") from None


def pulse_shape_from_config(cfg: ConfigFile) -> tuple:
    n = cfg.get("pulse", "n", int, required=True)
    dt = cfg.get("pulse", "dt", float, required=True)
    if n < 1:
        raise ParseError(cfg.path, cfg.line("pulse", "n"), "pulse must have n ≥ 1 steps")
    if not dt > 0:
        raise ParseError(cfg.path, cfg.line("pulse", "dt"), "dt must be positive")
    return n, dt


def initial_pulse_from_config(cfg: ConfigFile, n: int, dt: float, p: int, alpha_max: float,
                              seed: int) -> ControlPulse:
    """``[pulse] initial`` is ``random`` (default), ``zeros`` or a pulse file path."""
    kind = cfg.get("pulse", "initial", str, default="random")
    if kind == "random":
        return random_initial_pulse(n, p, alpha_max, dt, seed)
    if kind == "zeros":
        return ControlPulse.zeros(n, p, dt)
    pulse = read_pulse(cfg.resolve(kind))
    if (pulse.n, pulse.p) != (n, p) or not np.isclose(pulse.dt, dt, rtol=1e-12, atol=0.0):
        raise ParseError(cfg.path, cfg.line("pulse", "initial"),
                         f"initial pulse is {pulse.n} steps x {pulse.p} channels at dt={pulse.dt}, "
                         f"config needs {n} x {p} at dt={dt}")
    return pulse
