import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional, Tuple

import torch

from ..errors import ConfigError


class Transfer(str, Enum):
    TANH = "tanh"
    LOGISTIC = "logistic"
    IDENTITY = "identity"

    def __call__(self, x: torch.Tensor) -> torch.Tensor:
        if self is Transfer.TANH:
            return torch.tanh(x)
        if self is Transfer.LOGISTIC:
            return torch.sigmoid(x)
        return x

    def derivative(self, x: torch.Tensor) -> torch.Tensor:
        if self is Transfer.TANH:
            return 1.0 - torch.tanh(x) ** 2
        if self is Transfer.LOGISTIC:
            # sigma' = sigma (1 - sigma)
            s = torch.sigmoid(x)
            return s * (1.0 - s)
        return torch.ones_like(x)


# YAML keys that are Python keywords
_KEY_ALIASES = {"lambda": "lambda_"}


@dataclass(frozen=True)
class NetConfig:
    r"""
    Configuration of the Hamilton-Jacobi network: neuron model, epoch structure,
    integration grid and supervised target.

    Args:
        n_neurons (`int`, defaults to 2):
            Number of neurons N.
        lambda_ (`float`, defaults to 1.0):
            Neuron time constant. Read from the `lambda` key of a config file.
        transfer (`str`, defaults to `"tanh"`):
            Transfer function applied per neuron, one of `tanh`, `logistic`, `identity`.
        omega (`float`, defaults to 10.0):
            Inertia constant of the weight kinetic term.
        epoch_length_T (`float`, defaults to 1.0):
            Length of one learning epoch; the shift operator looks back in multiples of it.
        dt (`float`, defaults to 0.01):
            Fixed RK4 step.
        n_epochs (`int`, defaults to 6):
            The run covers `[0, n_epochs * epoch_length_T]`.
        external_input (`tuple[float]`, *optional*):
            External inputs Y_i, zeros when omitted.
        thresholds (`tuple[float]`, *optional*):
            Threshold terms, zeros when omitted.
        target (`tuple[float]`, *optional*):
            Reference outputs of the mean-squared error, zeros when omitted.
        seed (`int`, defaults to 0):
            Seed of the initial weights, unsigned 64-bit.
        initial_y (`tuple[float]`, *optional*):
            Initial neuron outputs, zeros when omitted.
        layers (`tuple[int]`, *optional*):
            Layer sizes summing to `n_neurons`. When given the weights are restricted to
            feed-forward connections between consecutive layers.
        hbar_eff (`float`, defaults to 1.0):
            Effective Planck constant used when turning the action into a phase.
        max_state_magnitude (`float`, defaults to 1e6):
            Largest absolute entry of y, Delta, W or M tolerated after a step; a run that
            grows past it stops with an `IntegrationError` stamped with the step time.
    """

    n_neurons: int = 2
    lambda_: float = 1.0
    transfer: Transfer = Transfer.TANH
    omega: float = 10.0
    epoch_length_T: float = 1.0
    dt: float = 1e-2
    n_epochs: int = 6
    external_input: Optional[Tuple[float, ...]] = None
    thresholds: Optional[Tuple[float, ...]] = None
    target: Optional[Tuple[float, ...]] = None
    seed: int = 0
    initial_y: Optional[Tuple[float, ...]] = None
    layers: Optional[Tuple[int, ...]] = None
    hbar_eff: float = 1.0
    max_state_magnitude: float = 1e6

    def __post_init__(self):
        if not isinstance(self.transfer, Transfer):
            try:
                object.__setattr__(self, "transfer", Transfer(self.transfer))
            except ValueError:
                raise ConfigError(f"net.transfer: unknown transfer function {self.transfer!r}")
        n = self.n_neurons if isinstance(self.n_neurons, int) and self.n_neurons > 0 else 0
        for name in ("external_input", "thresholds", "target", "initial_y"):
            value = getattr(self, name)
            value = (0.0,) * n if value is None else tuple(float(v) for v in value)
            object.__setattr__(self, name, value)
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(int(v) for v in self.layers))

    @property
    def n_steps(self) -> int:
        return int(round(self.n_epochs * self.epoch_length_T / self.dt))

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    def validate(self, prefix: str = "net") -> list:
        violations = []
        if not isinstance(self.n_neurons, int) or self.n_neurons <= 0:
            violations.append(f"{prefix}.n_neurons must be a positive integer (got {self.n_neurons!r})")
        positive = (
            ("lambda", self.lambda_),
            ("omega", self.omega),
            ("dt", self.dt),
            ("hbar_eff", self.hbar_eff),
            ("max_state_magnitude", self.max_state_magnitude),
        )
        for key, value in positive:
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                violations.append(f"{prefix}.{key} must be > 0 (got {value!r})")
        if not (isinstance(self.epoch_length_T, (int, float)) and math.isfinite(self.epoch_length_T)):
            violations.append(f"{prefix}.epoch_length_T must be a finite real (got {self.epoch_length_T!r})")
        elif isinstance(self.dt, (int, float)) and self.dt > 0 and self.epoch_length_T < self.dt:
            violations.append(f"{prefix}.epoch_length_T must be >= dt (got {self.epoch_length_T!r} < {self.dt!r})")
        if not isinstance(self.n_epochs, int) or self.n_epochs <= 0:
            violations.append(f"{prefix}.n_epochs must be a positive integer (got {self.n_epochs!r})")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            violations.append(f"{prefix}.seed must be an unsigned 64-bit integer (got {self.seed!r})")
        for name in ("external_input", "thresholds", "target", "initial_y"):
            value = getattr(self, name)
            if isinstance(self.n_neurons, int) and len(value) != self.n_neurons:
                violations.append(f"{prefix}.{name} must have length n_neurons={self.n_neurons} (got {len(value)})")
            if not all(math.isfinite(v) for v in value):
                violations.append(f"{prefix}.{name} must be finite")
        if self.layers is not None:
            if len(self.layers) < 2 or any(size <= 0 for size in self.layers):
                violations.append(f"{prefix}.layers must list at least two positive layer sizes (got {list(self.layers)})")
            elif sum(self.layers) != self.n_neurons:
                violations.append(f"{prefix}.layers must sum to n_neurons={self.n_neurons} (got {sum(self.layers)})")
        return violations

    def check(self):
        violations = self.validate()
        if violations:
            raise ConfigError(violations)
        return self

    def replace(self, **changes) -> "NetConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return NetConfig(**values)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            key = "lambda" if f.name == "lambda_" else f.name
            if isinstance(value, Transfer):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict, prefix: str = "net") -> "NetConfig":
        known = {f.name for f in fields(cls)}
        kwargs, violations = {}, []
        for key, value in (data or {}).items():
            name = _KEY_ALIASES.get(key, key)
            if name not in known or key in _KEY_ALIASES.values():
                violations.append(f"{prefix}.{key}: unknown key")
                continue
            kwargs[name] = value
        try:
            cfg = cls(**kwargs)
        except ConfigError as e:
            raise ConfigError(violations + e.violations)
        except (TypeError, ValueError) as e:
            raise ConfigError(violations + [f"{prefix}: {e}"])
        violations += cfg.validate(prefix)
        if violations:
            raise ConfigError(violations)
        return cfg

    def tensor(self, name: str, dtype=torch.float64) -> torch.Tensor:
        return torch.tensor(getattr(self, name), dtype=dtype)

    def weight_mask(self, dtype=torch.float64) -> torch.Tensor:
        """Connectivity mask; W_ij may be non-zero only where mask_ij = 1."""
        n = self.n_neurons
        if self.layers is None:
            return torch.ones(n, n, dtype=dtype)
        mask = torch.zeros(n, n, dtype=dtype)
        starts = [0]
        for size in self.layers:
            starts.append(starts[-1] + size)
        # neuron i of layer k+1 reads neuron j of layer k
        for k in range(len(self.layers) - 1):
            mask[starts[k + 1]:starts[k + 2], starts[k]:starts[k + 1]] = 1.0
        return mask
