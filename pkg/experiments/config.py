import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

import torch
import yaml

from modeling.errors import ConfigError
from modeling.hjnet import NetConfig
from modeling.qboltz import coupling_operator
from modeling.witnesses import bell_state, plus_plus, product_state


def _split(data, cls, prefix: str):
    """Known fields of `cls` from a mapping, plus one violation per unknown key."""
    if data is None:
        return {}, []
    if not isinstance(data, dict):
        return {}, [f"{prefix}: expected a mapping (got {type(data).__name__})"]
    known = {f.name for f in fields(cls)}
    kwargs, violations = {}, []
    for key, value in data.items():
        if key in known:
            kwargs[key] = value
        else:
            violations.append(f"{prefix}.{key}: unknown key")
    return kwargs, violations


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _section_dict(section) -> dict:
    out = {}
    for f in fields(section):
        value = getattr(section, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


@dataclass(frozen=True)
class CouplingConfig:
    r"""
    Args:
        scale (`float`, defaults to 1.0):
            Rate constant multiplying the interaction energy to give g(t).
        gamma (`float`, defaults to 0.1):
            Damping rate of the double-commutator term.
        c_op (`str`, defaults to `"zz"`):
            `zz`, `xx`, or the path of a YAML file with `real` and `imag` 4x4 lists.
    """

    scale: float = 1.0
    gamma: float = 0.1
    c_op: str = "zz"

    def validate(self, prefix: str = "coupling") -> list:
        violations = []
        if not _finite(self.scale):
            violations.append(f"{prefix}.scale must be a finite real (got {self.scale!r})")
        if not (_finite(self.gamma) and self.gamma >= 0):
            violations.append(f"{prefix}.gamma must be >= 0 (got {self.gamma!r})")
        if self.c_op not in ("zz", "xx") and not os.path.isfile(str(self.c_op)):
            violations.append(f"{prefix}.c_op: expected 'zz', 'xx' or an existing file (got {self.c_op!r})")
        return violations

    def operator(self) -> torch.Tensor:
        if self.c_op in ("zz", "xx"):
            return coupling_operator(self.c_op)
        with open(self.c_op, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
        real = torch.tensor(data["real"], dtype=torch.float64)
        imag = torch.tensor(data.get("imag", [[0.0] * 4] * 4), dtype=torch.float64)
        op = torch.complex(real, imag)
        if op.shape != (4, 4) or (op - op.conj().T).abs().max().item() > 1e-12:
            raise ConfigError(f"coupling.c_op: {self.c_op} does not hold a Hermitian 4x4 matrix")
        return op


@dataclass(frozen=True)
class ConstantCoupling:
    """Debug drive: constant g0 over n_steps of size dt, bypassing the network."""

    g0: float = 1.0
    n_steps: int = 31416
    dt: float = 1e-4

    def validate(self, prefix: str = "constant_g") -> list:
        violations = []
        if not _finite(self.g0):
            violations.append(f"{prefix}.g0 must be a finite real (got {self.g0!r})")
        if not isinstance(self.n_steps, int) or self.n_steps <= 0:
            violations.append(f"{prefix}.n_steps must be a positive integer (got {self.n_steps!r})")
        if not (_finite(self.dt) and self.dt > 0):
            violations.append(f"{prefix}.dt must be > 0 (got {self.dt!r})")
        return violations


@dataclass(frozen=True)
class CanonicalConfig:
    r"""
    Args:
        epsilons (`tuple[float]`):
            Perturbation strengths of the pendulum sweep.
        action_J (`float`, defaults to 1.0):
            Action at which the generator is solved.
        order (`int`, defaults to 8):
            Fourier truncation order.
        grid (`int`, defaults to 64):
            Torus samples per dimension, at least `2 * order + 2`.
        tol (`float`, defaults to 1e-12):
            Sup-norm stop of the fixed-point iteration.
        max_iter (`int`, defaults to 200)
        symplectic_grid (`int`, defaults to 128)
        torus_points (`int`, defaults to 256):
            Samples of the exported invariant torus.
    """

    epsilons: Tuple[float, ...] = (0.0, 0.1, 0.08, 0.04, 0.02, 0.01, 0.005)
    action_J: float = 1.0
    order: int = 8
    grid: int = 64
    tol: float = 1e-12
    max_iter: int = 200
    symplectic_grid: int = 128
    torus_points: int = 256

    def __post_init__(self):
        if isinstance(self.epsilons, (list, tuple)):
            object.__setattr__(self, "epsilons", tuple(self.epsilons))

    def validate(self, prefix: str = "canonical") -> list:
        violations = []
        if not isinstance(self.epsilons, tuple) or not self.epsilons or not all(_finite(e) for e in self.epsilons):
            violations.append(f"{prefix}.epsilons must be a non-empty list of finite reals")
        if not _finite(self.action_J):
            violations.append(f"{prefix}.action_J must be a finite real")
        for key in ("order", "grid", "max_iter", "symplectic_grid", "torus_points"):
            value = getattr(self, key)
            if not isinstance(value, int) or value <= 0:
                violations.append(f"{prefix}.{key} must be a positive integer (got {value!r})")
        if isinstance(self.order, int) and isinstance(self.grid, int) and self.grid < 2 * self.order + 2:
            violations.append(f"{prefix}.grid must be >= 2*order+2 = {2 * self.order + 2} (got {self.grid})")
        if not (_finite(self.tol) and self.tol >= 0):
            violations.append(f"{prefix}.tol must be >= 0")
        return violations


_RHO0 = ("plus-plus", "bell")


@dataclass(frozen=True)
class ExperimentConfig:
    r"""
    Everything one invocation of the CLI needs. The master seed is `net.seed`;
    ensemble member i uses `net.seed + i` (mod 2**64).

    Args:
        net (`NetConfig`)
        coupling (`CouplingConfig`)
        rho0 (`str`, defaults to `"plus-plus"`):
            Initial two-qubit state: `plus-plus`, `bell` (witness self-tests only), or the path
            of a YAML file with single-qubit states `a` and `b` (kets or 2x2 matrices).
        ensemble_size (`int`, defaults to 64)
        warmup_fraction (`float`, defaults to 0.05):
            Share of the early steps cut from the reported witness series, in [0, 0.5).
        output_dir (`str`, defaults to `"outputs"`)
        emit_plots (`bool`, defaults to `True`)
        canonical (`CanonicalConfig`)
        constant_g (`ConstantCoupling`, *optional*):
            When set, `entangle` drives the evolution with a constant coupling.
    """

    net: NetConfig = field(default_factory=NetConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    rho0: str = "plus-plus"
    ensemble_size: int = 64
    warmup_fraction: float = 0.05
    output_dir: str = "outputs"
    emit_plots: bool = True
    canonical: CanonicalConfig = field(default_factory=CanonicalConfig)
    constant_g: Optional[ConstantCoupling] = None

    def validate(self) -> list:
        violations = self.net.validate() + self.coupling.validate() + self.canonical.validate()
        if self.constant_g is not None:
            violations += self.constant_g.validate()
        if self.rho0 not in _RHO0 and not os.path.isfile(str(self.rho0)):
            violations.append(f"rho0: expected one of {list(_RHO0)} or an existing file (got {self.rho0!r})")
        if not isinstance(self.ensemble_size, int) or isinstance(self.ensemble_size, bool) or self.ensemble_size < 1:
            violations.append(f"ensemble_size must be >= 1 (got {self.ensemble_size!r})")
        if not (_finite(self.warmup_fraction) and 0 <= self.warmup_fraction < 0.5):
            violations.append(f"warmup_fraction must lie in [0, 0.5) (got {self.warmup_fraction!r})")
        if not isinstance(self.emit_plots, bool):
            violations.append(f"emit_plots must be a boolean (got {self.emit_plots!r})")
        return violations

    def check(self) -> "ExperimentConfig":
        violations = self.validate()
        if violations:
            raise ConfigError(violations)
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ExperimentConfig(**values)

    @property
    def seeds(self) -> list:
        return [(self.net.seed + i) % 2 ** 64 for i in range(self.ensemble_size)]

    def initial_rho(self) -> torch.Tensor:
        if self.rho0 == "plus-plus":
            return plus_plus()
        if self.rho0 == "bell":
            return bell_state("phi+")
        with open(self.rho0, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
        a, b = (torch.tensor(data[k], dtype=torch.float64) for k in ("a", "b"))
        return product_state(a, b)

    def to_dict(self) -> dict:
        return {
            "net": self.net.to_dict(),
            "coupling": _section_dict(self.coupling),
            "rho0": self.rho0,
            "ensemble_size": self.ensemble_size,
            "warmup_fraction": self.warmup_fraction,
            "output_dir": self.output_dir,
            "emit_plots": self.emit_plots,
            "canonical": _section_dict(self.canonical),
            "constant_g": None if self.constant_g is None else _section_dict(self.constant_g),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build and validate, reporting every violation at once."""
        kwargs, violations = _split(data, cls, "config")
        try:
            kwargs["net"] = NetConfig.from_dict(kwargs.get("net"))
        except ConfigError as e:
            violations += e.violations
            kwargs.pop("net", None)
        for key, section in (("coupling", CouplingConfig), ("canonical", CanonicalConfig), ("constant_g", ConstantCoupling)):
            if key not in kwargs or (key == "constant_g" and kwargs[key] is None):
                continue
            values, problems = _split(kwargs[key], section, key)
            violations += problems
            try:
                kwargs[key] = section(**values)
            except (TypeError, ValueError) as e:
                violations.append(f"{key}: {e}")
                kwargs.pop(key)
        cfg = cls(**kwargs)
        violations += [v for v in cfg.validate() if not v.startswith("net.")]
        if violations:
            raise ConfigError(violations)
        return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read a YAML (or JSON) experiment file strictly."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            # YAML 1.1 reads 1e-4 as a string, JSON does not
            data = json.load(f) if path.lower().endswith(".json") else yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config ({e.strerror})")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}")
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: parse error{where}: {getattr(e, 'problem', e)}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(data)
