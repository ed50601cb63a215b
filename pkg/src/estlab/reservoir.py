"""Working memory built from leaky reservoir units.

Each unit is a recurrent network with fixed random sparse weights, rescaled
at init to unit spectral radius. What the optimizer sees per unit: an
effective spectral radius (scalar), the input matrix, and an affine score
map. The per-step leak rates come from a softmax over the unit scores, so
units compete for how much of their state to overwrite; a unit can protect
its contents by scoring low. The recurrent matrix itself is never trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .rng import rng_for
from .tensor import (Tensor, add, concat_cols, concat_rows, leaky_unit_update,
                     matmul, slice_cols, slice_rows, softmax_rows)


def spectral_radius(mat: np.ndarray, iters: int = 1000, seed: int = 0,
                    block: int = 8) -> float:
    """Largest |eigenvalue| via block power (subspace) iteration.

    Single-vector power iteration oscillates on the complex-conjugate pairs
    that dominate real nonsymmetric matrices, so we iterate an orthonormal
    block instead and read the magnitude off the block's small projected
    matrix (Ritz values). The block buys a convergence factor of
    |lambda_{b+1}/lambda_1| per sweep, which handles clustered spectra.
    Works matrix-free style: the full matrix is only ever applied, never
    factored. Returns once the estimate is stable to ~1e-13 or after iters
    sweeps.
    """
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise DimensionError(f"spectral_radius: matrix must be square, got {mat.shape}")
    if n == 1:
        return abs(float(mat[0, 0]))
    b = min(n, block)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, b)))
    last = None
    for i in range(iters):
        z = mat @ q
        if np.linalg.norm(z) == 0.0:
            return 0.0
        if (i + 1) % 25 == 0:
            est = float(np.abs(np.linalg.eigvals(q.T @ z)).max())
            if last is not None and abs(est - last) <= 1e-13 * max(1.0, est):
                return est
            last = est
        q, _ = np.linalg.qr(z)
    return float(np.abs(np.linalg.eigvals(q.T @ (mat @ q))).max())


@dataclass
class ReservoirUnit:
    """One memory unit: fixed recurrent matrix plus its trainable dynamics."""

    w_hat: Tensor          # fixed, unit spectral radius, excluded from training
    rho: Tensor            # 1x1 effective spectral radius, trainable
    w_in: Tensor           # d_a x d_m input matrix, trainable
    score_w: Tensor        # d_a x 1 leak-score weights, trainable
    score_b: Tensor        # 1x1 leak-score bias, trainable
    w_hat_t: Tensor = field(repr=False, default=None)  # cached transpose

    def __post_init__(self):
        if self.w_hat_t is None:
            self.w_hat_t = Tensor(self.w_hat.data.T)

    @property
    def memory_dim(self) -> int:
        return self.w_hat.data.shape[0]

    def params(self) -> list[Tensor]:
        """Trainable tensors only; w_hat stays fixed by construction."""
        return [self.rho, self.w_in, self.score_w, self.score_b]


@dataclass
class WorkingMemoryState:
    """All recurrent state of one layer: M unit-state rows."""

    states: Tensor  # M x d_m

    @classmethod
    def zeros(cls, memory_units: int, memory_dim: int) -> "WorkingMemoryState":
        return cls(states=Tensor(np.zeros((memory_units, memory_dim))))


def init_reservoir(d_m: int, d_a: int, connectivity: float, seed: int) -> ReservoirUnit:
    """Build one unit deterministically from its seed.

    The recurrent matrix is standard-normal with entries kept at the given
    density, rescaled so its spectral radius is exactly 1; the trainable rho
    then *is* the unit's effective spectral radius. An all-zero draw (tiny
    matrices at low density) is resampled with an incremented sub-seed.
    """
    if not 0.0 < connectivity <= 1.0:
        raise ConfigError(f"connectivity must be in (0, 1], got {connectivity}")
    if d_m < 1 or d_a < 1:
        raise ConfigError("reservoir dims must be positive")

    sub = 0
    while True:
        rng = rng_for(seed, f"w_hat:{sub}")
        w = rng.normal(size=(d_m, d_m))
        w *= rng.random(size=(d_m, d_m)) < connectivity
        radius = spectral_radius(w, seed=0)
        if radius > 1e-12:
            break
        sub += 1
    w /= radius

    in_rng = rng_for(seed, "w_in")
    bound = 1.0 / math.sqrt(d_a)
    return ReservoirUnit(
        w_hat=Tensor(w),
        rho=Tensor([[0.9]], requires_grad=True),
        w_in=Tensor(in_rng.uniform(-bound, bound, size=(d_a, d_m)), requires_grad=True),
        score_w=Tensor(in_rng.uniform(-bound, bound, size=(d_a, 1)), requires_grad=True),
        score_b=Tensor([[0.0]], requires_grad=True),
    )


def unit_step(unit: ReservoirUnit, s_prev: Tensor, x: Tensor, alpha) -> Tensor:
    """Leaky update: (1 - a) * s_prev + a * tanh(x w_in + s_prev (rho w_hat)^T).

    alpha is a 1x1 tensor (gradient flows to the score parameters) or a plain
    float for open-loop use. Differentiable w.r.t. w_in, rho, alpha and x.
    Runs as one fused op; this is the recurrent hot path.
    """
    if not isinstance(alpha, Tensor):
        alpha = Tensor([[float(alpha)]])
    if alpha.data.shape != (1, 1):
        raise DimensionError(f"unit_step: alpha must be 1x1, got {alpha.shape}")
    return leaky_unit_update(s_prev, x, alpha, unit.w_in, unit.rho, unit.w_hat_t)


def adaptive_leak_rates(inputs: Tensor, units: list[ReservoirUnit]) -> Tensor:
    """Softmax-normalized leak rates, one per unit (a 1xM row).

    Each unit scores its own information vector with a trainable affine map;
    the softmax couples the scores so the units compete: a unit with a very
    low relative score gets a near-zero rate and effectively freezes.
    """
    m = len(units)
    if m < 1:
        raise ConfigError("adaptive_leak_rates: need at least one unit")
    if inputs.data.shape[0] != m:
        raise DimensionError(f"{inputs.data.shape[0]} input rows for {m} units")
    scores = [add(matmul(slice_rows(inputs, i, i + 1), u.score_w), u.score_b)
              for i, u in enumerate(units)]
    return softmax_rows(concat_cols(scores))


def memory_step(mem: WorkingMemoryState, inputs: Tensor,
                units: list[ReservoirUnit]) -> WorkingMemoryState:
    """One synchronous update of all units under shared competitive rates.

    Value semantics: returns a fresh state; the input state is untouched.
    """
    alphas = adaptive_leak_rates(inputs, units)
    rows = []
    for i, unit in enumerate(units):
        rows.append(unit_step(
            unit,
            slice_rows(mem.states, i, i + 1),
            slice_rows(inputs, i, i + 1),
            slice_cols(alphas, i, i + 1),
        ))
    return WorkingMemoryState(states=concat_rows(rows))
