import csv
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional

import torch

from ..errors import IntegrationError, InvariantError


@dataclass(frozen=True)
class NetState:
    """
    Snapshot of the characteristic system. Tensors may carry a leading batch
    dimension (one entry per ensemble member): y, delta are (..., N) and w, m are
    (..., N, N).
    """

    t: float
    y: torch.Tensor
    delta: torch.Tensor
    w: torch.Tensor
    m: torch.Tensor

    @property
    def n_neurons(self) -> int:
        return self.y.shape[-1]

    @property
    def batch_shape(self) -> torch.Size:
        return self.y.shape[:-1]

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(x).all()) for x in (self.y, self.delta, self.w, self.m))

    def max_abs(self) -> float:
        return max(x.abs().max().item() for x in (self.y, self.delta, self.w, self.m))

    def member(self, index: int) -> "NetState":
        return NetState(self.t, self.y[index], self.delta[index], self.w[index], self.m[index])


class EpochBuffer:
    """
    History of the weights and their conjugates on the uniform time grid, read back by
    the epoch-shift operator: lookup(X, t - v*T) returns the stored sample nearest to
    the requested time. Times before the first sample read as zero.
    """

    def __init__(self, dt: float, t0: float = 0.0):
        self.dt = dt
        self.t0 = t0
        self.history: Dict[str, List[torch.Tensor]] = {"w": [], "m": []}

    def __len__(self):
        return len(self.history["w"])

    def append(self, w: torch.Tensor, m: torch.Tensor):
        self.history["w"].append(w)
        self.history["m"].append(m)

    def lookup(self, field: str, t: float) -> torch.Tensor:
        samples = self.history[field]
        if not samples:
            raise IntegrationError("epoch buffer is empty", t=t)
        if t - self.t0 < -1e-9 * max(1.0, abs(t)):
            return torch.zeros_like(samples[0])
        index = max(0, int(math.floor((t - self.t0) / self.dt + 0.5)))
        if index >= len(samples):
            # nothing is stored in the future of the integration front
            raise IntegrationError(
                f"epoch buffer holds {len(samples)} samples, lookup needs sample {index}", t=t
            )
        return samples[index]


class Trajectory:
    """
    Time-ordered record of a run. Every appended state may come with scalar samples
    (error, Hamiltonian, interaction energy, ...) recorded under a name; `action_J`
    is filled once the run is complete.
    """

    def __init__(self, dt: float, t0: float = 0.0, epoch_length_T: Optional[float] = None):
        self.dt = dt
        self.t0 = t0
        self.epoch_length_T = epoch_length_T
        self.states: List[NetState] = []
        self.samples: Dict[str, List[torch.Tensor]] = {}
        self.action_J: Optional[torch.Tensor] = None
        self.epoch_buffer = EpochBuffer(dt, t0)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, index):
        return self.states[index]

    @property
    def tail(self) -> NetState:
        return self.states[-1]

    @property
    def times(self) -> torch.Tensor:
        return torch.tensor([s.t for s in self.states], dtype=torch.float64)

    @property
    def batch_shape(self) -> torch.Size:
        return self.states[0].batch_shape if self.states else torch.Size()

    def expected_time(self, index: int) -> float:
        return self.t0 + index * self.dt

    def append(self, state: NetState, **samples):
        expected = self.expected_time(len(self.states))
        if abs(state.t - expected) > 1e-9 * max(1.0, abs(expected)):
            raise InvariantError(f"state at t={state.t!r} breaks the uniform grid (expected t={expected!r})")
        self.states.append(state)
        self.epoch_buffer.append(state.w, state.m)
        self.record(**samples)

    def record(self, **samples):
        for name, value in samples.items():
            self.samples.setdefault(name, []).append(torch.as_tensor(value, dtype=torch.float64))

    def sample(self, name: str) -> torch.Tensor:
        """Stacked samples of one recorded quantity, shape (steps, *batch)."""
        values = self.samples.get(name)
        if values is None or len(values) != len(self.states):
            raise KeyError(f"trajectory has no complete '{name}' record")
        return torch.stack(values)

    def stack(self, field: str) -> torch.Tensor:
        return torch.stack([getattr(s, field) for s in self.states])

    def member(self, index: int) -> "Trajectory":
        """Slice one ensemble member out of a batched trajectory."""
        out = Trajectory(self.dt, self.t0, self.epoch_length_T)
        for k, state in enumerate(self.states):
            out.append(state.member(index), **{name: values[k][index] for name, values in self.samples.items()})
        if self.action_J is not None:
            out.action_J = self.action_J[:, index]
        return out

    def validate(self) -> list:
        violations = []
        for k, state in enumerate(self.states):
            expected = self.expected_time(k)
            if abs(state.t - expected) > 1e-9 * max(1.0, abs(expected)):
                violations.append(f"state {k} at t={state.t!r}, expected {expected!r}")
            if not state.is_finite():
                violations.append(f"state {k} holds non-finite entries")
        if self.action_J is not None and self.action_J.shape[0] != len(self.states):
            violations.append("action_J and states differ in length")
        return violations

    def csv_header(self, with_psi: bool = False) -> List[str]:
        n = self.states[0].n_neurons
        header = ["t", "J", "E", "H"]
        header += [f"y_{i}" for i in range(n)]
        header += [f"delta_{i}" for i in range(n)]
        header += [f"W_{i}_{j}" for i in range(n) for j in range(n)]
        header += [f"M_{i}_{j}" for i in range(n) for j in range(n)]
        if with_psi:
            header += ["re_psi", "im_psi"]
        return header

    def to_csv(self, path: str, psi: Optional[torch.Tensor] = None):
        """Write one row per stored step; values printed with 17 significant digits. `psi` adds re_psi,im_psi columns."""
        if self.batch_shape:
            raise InvariantError("export a single member: call member(i) on batched trajectories")
        if psi is not None and psi.shape != (len(self),):
            raise InvariantError(f"wavefunction has shape {tuple(psi.shape)}, trajectory has {len(self)} steps")
        errors, energies = self.sample("E"), self.sample("H")
        action = self.action_J if self.action_J is not None else torch.full((len(self),), float("nan"))
        dir_path = os.path.dirname(path)
        if dir_path:
            os.makedirs(dir_path, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.csv_header(with_psi=psi is not None))
            for k, state in enumerate(self.states):
                values = [state.t, action[k], errors[k], energies[k]]
                values += state.y.tolist() + state.delta.tolist()
                values += state.w.reshape(-1).tolist() + state.m.reshape(-1).tolist()
                if psi is not None:
                    values += [psi[k].real, psi[k].imag]
                writer.writerow([f"{float(v):.17g}" for v in values])
