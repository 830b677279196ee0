"""INI-style experiment configuration.

    [problem]
    L = 1
    n_elems = 64            # or: nodes = 0, 0.1, 0.3, ..., 1
    T = 40
    n_steps = 5120
    bc.left = dirichlet
    bc.right = neumann
    neumann.g = -1
    probes = 0.25, 0.5, 1
    u0 = zero               # zero | sin:<m>  (sin(m pi x / L))
    u1 = zero
    load = zero             # zero | manufactured

    [kernel]
    type = prony            # zero | prony | gamma
    terms = 0.5, 1          # c1, gamma1, c2, gamma2, ...
    kappa = 0.3             # gamma kernel only
    alpha = 0.5
    gamma = 1

    [run]
    history_mode = direct   # direct | recurrence
    output = out

    [sweep]
    axis = h                # h | k
    levels = 4
    reference = manufactured  # manufactured | fine-grid

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .convolution import TimeGrid
from .errors import ConfigError, DomainError
from .fem1d import DIRICHLET, NEUMANN, BCSpec, Mesh1D
from .kernel import ExponentialSum, GammaKernel, KernelSpec, ZeroKernel


def _floats(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"nonfinite value in {text!r}")
    return vals


def _float(text: str) -> float:
    vals = _floats(text)
    if len(vals) != 1:
        raise ConfigError(f"expected one number, got {text!r}")
    return vals[0]


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ProblemSection:
    L: float = 1.0
    n_elems: Optional[int] = 64
    nodes: Optional[list] = None
    T: float = 40.0
    n_steps: int = 5120
    bc_left: str = DIRICHLET
    bc_right: str = NEUMANN
    neumann_g: float = -1.0
    probes: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    u0: str = "zero"
    u1: str = "zero"
    load: str = "zero"


@dataclass
class KernelSection:
    type: str = "prony"
    terms: list = field(default_factory=lambda: [0.5, 1.0])
    kappa: float = 0.3
    alpha: float = 0.5
    gamma: float = 1.0


@dataclass
class RunSection:
    history_mode: str = "direct"
    output: str = "out"


@dataclass
class SweepSection:
    axis: str = "h"
    levels: int = 4
    reference: str = "manufactured"


# ini key -> (attribute, parser)
_SCHEMA = {
    "problem": (ProblemSection, {
        "L": ("L", _float),
        "n_elems": ("n_elems", _int),
        "nodes": ("nodes", _floats),
        "T": ("T", _float),
        "n_steps": ("n_steps", _int),
        "bc.left": ("bc_left", str),
        "bc.right": ("bc_right", str),
        "neumann.g": ("neumann_g", _float),
        "probes": ("probes", _floats),
        "u0": ("u0", str),
        "u1": ("u1", str),
        "load": ("load", str),
    }),
    "kernel": (KernelSection, {
        "type": ("type", str),
        "terms": ("terms", _floats),
        "kappa": ("kappa", _float),
        "alpha": ("alpha", _float),
        "gamma": ("gamma", _float),
    }),
    "run": (RunSection, {
        "history_mode": ("history_mode", str),
        "output": ("output", str),
    }),
    "sweep": (SweepSection, {
        "axis": ("axis", str),
        "levels": ("levels", _int),
        "reference": ("reference", str),
    }),
}


@dataclass
class ConfigFile:
    problem: ProblemSection = field(default_factory=ProblemSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    run: RunSection = field(default_factory=RunSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    # ini keys given explicitly; serialization writes these back
    explicit: dict = field(default_factory=dict)

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ConfigFile":
        cfg = cls()
        for section, key, value in _ini_items(text):
            cfg.set(section, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ConfigFile":
        return cls.from_text(_read_text(path))

    def set(self, section: str, key: str, value: str) -> None:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        keys = _SCHEMA[section][1]
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        attr, parse = keys[key]
        setattr(getattr(self, section), attr, parse(value.strip()))
        self.explicit.setdefault(section, set()).add(key)
        if section == "problem" and key == "nodes":
            self.problem.n_elems = None
        elif section == "problem" and key == "n_elems":
            self.problem.nodes = None

    def apply_overrides(self, overrides) -> "ConfigFile":
        """Apply ``section.key=value`` strings, then re-validate."""
        for item in overrides or ():
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            lhs, value = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            self.set(section, key, value)
        self.validate()
        return self

    # -- serialization -----------------------------------------------------

    def to_text(self, only_explicit: bool = False) -> str:
        lines = []
        for section, (_, keys) in _SCHEMA.items():
            sec = getattr(self, section)
            chosen = []
            for key, (attr, _) in keys.items():
                if only_explicit and key not in self.explicit.get(section, ()):
                    continue
                value = getattr(sec, attr)
                if value is None:
                    continue
                chosen.append(f"{key} = {_fmt(value)}")
            if chosen:
                lines.append(f"[{section}]")
                lines.extend(chosen)
                lines.append("")
        return "\n".join(lines)

    # -- validation and builders ------------------------------------------

    def validate(self) -> None:
        p, r, s = self.problem, self.run, self.sweep
        if p.L <= 0 or p.T <= 0:
            raise ConfigError("L and T must be positive")
        if p.n_steps < 0:
            raise ConfigError("n_steps must be >= 0")
        if p.nodes is None and (p.n_elems is None or p.n_elems < 2):
            raise ConfigError("n_elems must be >= 2")
        for side in (p.bc_left, p.bc_right):
            if side not in (DIRICHLET, NEUMANN):
                raise ConfigError(f"unknown boundary condition {side!r}")
        for name in ("u0", "u1"):
            parse_initial(getattr(p, name))
        if p.load not in ("zero", "manufactured"):
            raise ConfigError(f"unknown load {p.load!r}")
        if r.history_mode not in ("direct", "recurrence"):
            raise ConfigError(f"unknown history mode {r.history_mode!r}")
        if s.axis not in ("h", "k"):
            raise ConfigError(f"sweep axis must be h or k, got {s.axis!r}")
        if s.reference not in ("manufactured", "fine-grid"):
            raise ConfigError(f"unknown sweep reference {s.reference!r}")
        self.build_kernel()
        self.build_bc()

    def build_kernel(self) -> KernelSpec:
        k = self.kernel
        try:
            if k.type == "zero":
                return ZeroKernel()
            if k.type == "prony":
                if len(k.terms) == 0 or len(k.terms) % 2:
                    raise ConfigError("prony terms must be c1, gamma1, c2, gamma2, ...")
                pairs = tuple(zip(k.terms[0::2], k.terms[1::2]))
                return ExponentialSum(pairs)
            if k.type == "gamma":
                return GammaKernel(k.kappa, k.alpha, k.gamma)
        except DomainError as exc:
            raise ConfigError(f"invalid kernel: {exc}") from exc
        raise ConfigError(f"unknown kernel type {k.type!r}")

    def build_mesh(self, n_elems: Optional[int] = None) -> Mesh1D:
        p = self.problem
        if n_elems is None and p.nodes is not None:
            nodes = np.asarray(p.nodes, dtype=float)
            if nodes[0] != 0.0 or not math.isclose(nodes[-1], p.L):
                raise ConfigError("explicit nodes must span [0, L]")
            return Mesh1D(nodes)
        return Mesh1D.uniform(p.L, n_elems if n_elems is not None else p.n_elems)

    def build_bc(self) -> BCSpec:
        p = self.problem
        return BCSpec(p.bc_left, p.bc_right,
                      p.neumann_g if p.bc_left == NEUMANN else 0.0,
                      p.neumann_g if p.bc_right == NEUMANN else 0.0)

    def build_grid(self, n_steps: Optional[int] = None) -> TimeGrid:
        return TimeGrid.uniform(self.problem.T, self.problem.n_steps if n_steps is None else n_steps)


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _ini_items(text: str):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return [(section, key, value) for section in parser.sections()
            for key, value in parser.items(section)]


def read_ini(path):
    """(section, key, raw value) triples of an INI file, unvalidated."""
    return _ini_items(_read_text(path))


def parse_initial(spec: str):
    """'zero' or 'sin:m' -> (callable, mode index or None)."""
    spec = spec.strip()
    if spec == "zero":
        return None
    if spec.startswith("sin:"):
        try:
            m = int(spec[4:])
        except ValueError as exc:
            raise ConfigError(f"bad initial data {spec!r}") from exc
        if m < 1:
            raise ConfigError("sine mode index must be >= 1")
        return m
    raise ConfigError(f"initial data must be 'zero' or 'sin:<m>', got {spec!r}")


def initial_function(spec: str, L: float):
    m = parse_initial(spec)
    if m is None:
        return lambda x: np.zeros_like(x)
    return lambda x: np.sin(m * np.pi * x / L)
