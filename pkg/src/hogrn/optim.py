"""Trainable parameter bookkeeping, Xavier init, Adam, and gradient verification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor


def xavier_init(rows: int, cols: int, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Uniform Xavier/Glorot draw on [-a, a] with a = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype, copy=False)


def embedding_init(rows: int, cols: int, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Uniform draw with unit per-coordinate variance, for embedding tables.

    The weight-free aggregation multiplies three embedding factors per hop
    (attention, entity state, relation state), so fan-based scales collapse
    the states to zero within two layers and gradients fall below the
    optimizer's eps floor. Unit variance is the scale at which the layer map
    neither collapses nor blows up; only the mixing matrices, which are true
    linear maps, use `xavier_init`.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    bound = np.sqrt(3.0)
    return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype, copy=False)


class ParameterStore:
    """Named leaf tensors with their gradient accumulators.

    Iteration order is insertion order, which keeps optimizer traversal and
    checkpoint layout deterministic.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        self._params[name] = Tensor(value)
        return self._params[name]

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def num_values(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Current gradients, copied; missing gradients come back as zeros."""
        return {
            name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
            for name, p in self._params.items()
        }

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        if set(state) != set(self._params):
            missing = set(self._params) - set(state)
            extra = set(state) - set(self._params)
            raise ValueError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, value in state.items():
            p = self._params[name]
            if p.data.shape != value.shape:
                raise ValueError(f"shape mismatch for {name}: {p.data.shape} vs {value.shape}")
            p.data = value.copy()
            p.grad = None


class Adam:
    """Adam with bias correction; gradients are zeroed after each step."""

    def __init__(self, store: ParameterStore, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.store.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in parameter '{name}'")
            if name not in self.m:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)
            self.m[name] *= self.beta1
            self.m[name] += (1.0 - self.beta1) * g
            self.v[name] *= self.beta2
            self.v[name] += (1.0 - self.beta2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.store.zero_grad()

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict):
        self.t = int(state["t"])
        self.m = {k: v.copy() for k, v in state["m"].items()}
        self.v = {k: v.copy() for k, v in state["v"].items()}


@dataclass
class GradCheckFailure:
    param: str
    index: tuple
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradCheckReport:
    max_rel_err: float
    num_checked: int
    tol: float
    failures: list[GradCheckFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "ok" if self.passed else f"{len(self.failures)} failure(s)"
        return (f"gradient check: {self.num_checked} coordinates, "
                f"max rel err {self.max_rel_err:.3e} (tol {self.tol:.1e}) -> {status}")


def finite_difference_check(loss_fn, store: ParameterStore, eps: float = 1e-5,
                            tol: float = 1e-4, max_coords_per_param: int | None = None,
                            rng: np.random.Generator | None = None,
                            fault_scale: float = 0.0) -> GradCheckReport:
    """Compare reverse-mode gradients of `loss_fn(store)` against central differences.

    `loss_fn` must be deterministic. Every coordinate is checked unless
    `max_coords_per_param` caps the sample (drawn from `rng`). Relative error is
    |g - g_fd| / max(1e-8, |g| + |g_fd|). `fault_scale` deliberately perturbs the
    analytic gradients before comparison; it exists so self-verification can
    prove the checker detects a corrupted adjoint.
    """
    store.zero_grad()
    loss_fn(store).backward()
    analytic = store.gradients()
    store.zero_grad()
    if fault_scale:
        analytic = {k: v * (1.0 + fault_scale) + fault_scale for k, v in analytic.items()}

    max_rel = 0.0
    checked = 0
    failures: list[GradCheckFailure] = []
    for name, p in store.items():
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_param is not None and flat.size > max_coords_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(flat.size, size=max_coords_per_param, replace=False)
        for i in coords:
            original = flat[i]
            flat[i] = original + eps
            f_plus = loss_fn(store).item()
            flat[i] = original - eps
            f_minus = loss_fn(store).item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            g = float(analytic[name].reshape(-1)[i])
            rel = abs(g - numeric) / max(1e-8, abs(g) + abs(numeric))
            max_rel = max(max_rel, rel)
            checked += 1
            if rel > tol:
                index = tuple(int(v) for v in np.unravel_index(i, p.data.shape))
                failures.append(GradCheckFailure(name, index, g, numeric, rel))
    store.zero_grad()
    return GradCheckReport(max_rel_err=max_rel, num_checked=checked, tol=tol, failures=failures)
