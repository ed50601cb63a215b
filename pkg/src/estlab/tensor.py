"""Reverse-mode automatic differentiation over dense 2-D float64 tensors.

Design: define-by-run. Ops execute eagerly with numpy and, when a Tape is
active and an input requires grad, append (output, backward_closure) to the
tape. The tape's append order is a topological order of the graph, so
backward() is a single reverse sweep that visits each recorded op exactly
once. Gradients accumulate additively across fan-out; zeroing between
optimizer steps is the caller's job (see zero_grad).

Everything is float64 and strictly 2-D (scalars are 1x1). Broadcasting is
limited to scalar-times-matrix and row-wise bias adds, which keeps every
backward rule short enough to audit by eye.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError

_ACTIVE_TAPE: "Tape | None" = None
_CHECK_FINITE = False


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every op output (off by default)."""
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


def _checked(data: np.ndarray, opname: str) -> np.ndarray:
    if _CHECK_FINITE and not np.all(np.isfinite(data)):
        raise FloatingPointError(f"{opname}: non-finite values in output")
    return data


class Tensor:
    """Dense 2-D float64 value, optionally carrying a gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, values, requires_grad: bool = False):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise DimensionError(f"tensors are 2-D, got shape {arr.shape}")
        self.data = np.ascontiguousarray(arr)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; the module-level functions are the canonical API
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _make(data: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = data
    t.grad = None
    t.requires_grad = False
    return t


class Tape:
    """Ordered record of ops for one forward pass (a context manager).

    Inputs of an op always precede it on the tape, so the reverse sweep in
    backward() is a valid reverse-topological traversal.
    """

    __slots__ = ("_ops", "_prev")

    def __init__(self):
        self._ops: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []
        self._prev: Tape | None = None

    def __enter__(self) -> "Tape":
        global _ACTIVE_TAPE
        self._prev = _ACTIVE_TAPE
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._prev
        return False

    def record(self, out: Tensor, backward_fn: Callable[[np.ndarray], None]) -> None:
        """Register a custom op: backward_fn(out_grad) accumulates into inputs."""
        out.requires_grad = True
        self._ops.append((out, backward_fn))

    def __len__(self) -> int:
        return len(self._ops)


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate .grad of every requires_grad tensor reachable from loss."""
    if loss.data.shape != (1, 1):
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any requires_grad tensor")
    loss.grad = np.ones((1, 1))
    for out, fn in reversed(tape._ops):
        g = out.grad
        if g is not None:
            fn(g)


def zero_grad(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad = None


# gradient accumulation helpers -------------------------------------------
#
# _acc_own: incoming array is freshly allocated by the backward rule and may
# be adopted as-is. _acc_shared: incoming array aliases another grad buffer
# or is a view of one, so it must be copied before adoption (later in-place
# += on it would otherwise corrupt the aliased buffer).


def _acc_own(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g
    else:
        t.grad += g


def _acc_shared(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _ensure_grad(t: Tensor) -> np.ndarray:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    return t.grad


# primitive ops ------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.shape[1] != bd.shape[0]:
        raise DimensionError(f"matmul: {ad.shape} x {bd.shape}")
    out = _make(_checked(ad @ bd, "matmul"))
    tape = _ACTIVE_TAPE
    if tape is not None and (a.requires_grad or b.requires_grad):
        def bw(g):
            if a.requires_grad:
                _acc_own(a, g @ bd.T)
            if b.requires_grad:
                _acc_own(b, ad.T @ g)
        tape.record(out, bw)
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with b broadcast over rows (fused affine map)."""
    xd, wd, bd = x.data, w.data, b.data
    if xd.shape[1] != wd.shape[0] or bd.shape != (1, wd.shape[1]):
        raise DimensionError(f"linear: {xd.shape} x {wd.shape} + {bd.shape}")
    out = _make(_checked(xd @ wd + bd, "linear"))
    tape = _ACTIVE_TAPE
    if tape is not None and (x.requires_grad or w.requires_grad or b.requires_grad):
        def bw(g):
            if x.requires_grad:
                _acc_own(x, g @ wd.T)
            if w.requires_grad:
                _acc_own(w, xd.T @ g)
            if b.requires_grad:
                _acc_own(b, g.sum(axis=0, keepdims=True))
        tape.record(out, bw)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may also be a 1xN row bias added to each row of a."""
    ad, bd = a.data, b.data
    if ad.shape == bd.shape:
        bias = False
    elif bd.shape == (1, ad.shape[1]):
        bias = True
    else:
        raise DimensionError(f"add: {ad.shape} + {bd.shape}")
    out = _make(_checked(ad + bd, "add"))
    tape = _ACTIVE_TAPE
    if tape is not None and (a.requires_grad or b.requires_grad):
        def bw(g):
            if a.requires_grad:
                _acc_shared(a, g)
            if b.requires_grad:
                if bias:
                    _acc_own(b, g.sum(axis=0, keepdims=True))
                else:
                    _acc_shared(b, g)
        tape.record(out, bw)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.shape != bd.shape:
        raise DimensionError(f"sub: {ad.shape} - {bd.shape}")
    out = _make(_checked(ad - bd, "sub"))
    tape = _ACTIVE_TAPE
    if tape is not None and (a.requires_grad or b.requires_grad):
        def bw(g):
            if a.requires_grad:
                _acc_shared(a, g)
            if b.requires_grad:
                _acc_own(b, -g)
        tape.record(out, bw)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; additionally either side may be a 1x1 scalar."""
    ad, bd = a.data, b.data
    if not (ad.shape == bd.shape or ad.shape == (1, 1) or bd.shape == (1, 1)):
        raise DimensionError(f"mul: {ad.shape} * {bd.shape}")
    out = _make(_checked(ad * bd, "mul"))
    tape = _ACTIVE_TAPE
    if tape is not None and (a.requires_grad or b.requires_grad):
        def bw(g):
            if a.requires_grad:
                ga = g * bd
                if ad.shape == (1, 1) and ga.shape != (1, 1):
                    ga = np.array([[ga.sum()]])
                _acc_own(a, ga)
            if b.requires_grad:
                gb = g * ad
                if bd.shape == (1, 1) and gb.shape != (1, 1):
                    gb = np.array([[gb.sum()]])
                _acc_own(b, gb)
        tape.record(out, bw)
    return out


def scale(x: Tensor, c: float) -> Tensor:
    out = _make(_checked(x.data * c, "scale"))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g * c)
        tape.record(out, bw)
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = _make(_checked(y, "tanh"))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g * (1.0 - y * y))
        tape.record(out, bw)
    return out


def sigmoid(x: Tensor) -> Tensor:
    # numerically stable on both tails
    y = np.where(x.data >= 0,
                 1.0 / (1.0 + np.exp(-np.abs(x.data))),
                 np.exp(-np.abs(x.data)) / (1.0 + np.exp(-np.abs(x.data))))
    out = _make(_checked(y, "sigmoid"))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g * y * (1.0 - y))
        tape.record(out, bw)
    return out


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = _make(x.data * mask)
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g * mask)
        tape.record(out, bw)
    return out


def log(x: Tensor) -> Tensor:
    with np.errstate(invalid="ignore", divide="ignore"):
        out = _make(_checked(np.log(x.data), "log"))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g / x.data)
        tape.record(out, bw)
    return out


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax, stabilized by row-max subtraction.

    Rows of -inf scores (from masking) are rejected: a fully-masked row has
    no valid distribution.
    """
    m = x.data.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise DimensionError("softmax_rows: row with no finite entries")
    e = np.exp(x.data - m)
    p = e / e.sum(axis=1, keepdims=True)
    out = _make(p)
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            # softmax Jacobian: dx = p * (g - sum(p * g))
            _acc_own(x, p * (g - (p * g).sum(axis=1, keepdims=True)))
        tape.record(out, bw)
    return out


def log_softmax_rows(x: Tensor) -> Tensor:
    m = x.data.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise DimensionError("log_softmax_rows: row with no finite entries")
    shifted = x.data - m
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = _make(shifted - lse)
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        p = np.exp(shifted - lse)
        def bw(g):
            _acc_own(x, g - p * g.sum(axis=1, keepdims=True))
        tape.record(out, bw)
    return out


def masked_fill(x: Tensor, keep: np.ndarray) -> Tensor:
    """Replace entries where keep is False with -inf (pre-softmax masking)."""
    if keep.shape != x.data.shape:
        raise DimensionError(f"masked_fill: mask {keep.shape} vs {x.data.shape}")
    out = _make(np.where(keep, x.data, -np.inf))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_own(x, g * keep)
        tape.record(out, bw)
    return out


def sum_all(x: Tensor) -> Tensor:
    out = _make(np.array([[x.data.sum()]]))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            if x.grad is None:
                x.grad = np.full_like(x.data, g[0, 0])
            else:
                x.grad += g[0, 0]
        tape.record(out, bw)
    return out


def concat_rows(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise DimensionError("concat_rows: empty input")
    cols = tensors[0].data.shape[1]
    for t in tensors:
        if t.data.shape[1] != cols:
            raise DimensionError("concat_rows: column counts differ")
    out = _make(np.vstack([t.data for t in tensors]))
    tape = _ACTIVE_TAPE
    if tape is not None and any(t.requires_grad for t in tensors):
        offsets = np.cumsum([0] + [t.data.shape[0] for t in tensors])
        def bw(g):
            for t, o, e in zip(tensors, offsets[:-1], offsets[1:]):
                if t.requires_grad:
                    _acc_shared(t, g[o:e])
        tape.record(out, bw)
    return out


def concat_cols(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise DimensionError("concat_cols: empty input")
    rows = tensors[0].data.shape[0]
    for t in tensors:
        if t.data.shape[0] != rows:
            raise DimensionError("concat_cols: row counts differ")
    out = _make(np.hstack([t.data for t in tensors]))
    tape = _ACTIVE_TAPE
    if tape is not None and any(t.requires_grad for t in tensors):
        offsets = np.cumsum([0] + [t.data.shape[1] for t in tensors])
        def bw(g):
            for t, o, e in zip(tensors, offsets[:-1], offsets[1:]):
                if t.requires_grad:
                    _acc_shared(t, g[:, o:e])
        tape.record(out, bw)
    return out


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= x.data.shape[0]):
        raise DimensionError(f"slice_rows: [{start}:{stop}] of {x.shape}")
    out = _make(x.data[start:stop].copy())
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _ensure_grad(x)[start:stop] += g
        tape.record(out, bw)
    return out


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start < stop <= x.data.shape[1]):
        raise DimensionError(f"slice_cols: [{start}:{stop}] of {x.shape}")
    out = _make(x.data[:, start:stop].copy())
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _ensure_grad(x)[:, start:stop] += g
        tape.record(out, bw)
    return out


def reshape(x: Tensor, rows: int, cols: int) -> Tensor:
    if rows * cols != x.data.size:
        raise DimensionError(f"reshape: {x.shape} -> ({rows}, {cols})")
    out = _make(x.data.reshape(rows, cols).copy())
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_shared(x, g.reshape(x.data.shape))
        tape.record(out, bw)
    return out


def transpose(x: Tensor) -> Tensor:
    out = _make(np.ascontiguousarray(x.data.T))
    tape = _ACTIVE_TAPE
    if tape is not None and x.requires_grad:
        def bw(g):
            _acc_shared(x, g.T)
        tape.record(out, bw)
    return out


def layer_norm_rows(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization with learnable gain/bias (transformer baseline)."""
    n = x.data.shape[1]
    if gain.data.shape != (1, n) or bias.data.shape != (1, n):
        raise DimensionError("layer_norm_rows: gain/bias must be 1xN")
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=1, keepdims=True) + eps)
    xhat = xc * inv
    out = _make(_checked(xhat * gain.data + bias.data, "layer_norm_rows"))
    tape = _ACTIVE_TAPE
    if tape is not None and (x.requires_grad or gain.requires_grad or bias.requires_grad):
        def bw(g):
            if bias.requires_grad:
                _acc_own(bias, g.sum(axis=0, keepdims=True))
            if gain.requires_grad:
                _acc_own(gain, (g * xhat).sum(axis=0, keepdims=True))
            if x.requires_grad:
                gx = g * gain.data
                mean_gx = gx.mean(axis=1, keepdims=True)
                mean_gx_xhat = (gx * xhat).mean(axis=1, keepdims=True)
                _acc_own(x, inv * (gx - mean_gx - xhat * mean_gx_xhat))
        tape.record(out, bw)
    return out


_ELEMENTWISE = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "relu": relu,
    "log": log,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "concat_rows": concat_rows,
    "slice": slice_rows,
}


def elementwise(kind: str, *args):
    """Dispatch by op name; mirrors the per-kind functions above."""
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ValueError(f"unknown elementwise kind {kind!r}") from None
    return fn(*args)


# fused kernels --------------------------------------------------------------
#
# The two inner loops of the recurrent models run hundreds of thousands of
# times per epoch, so they get single-op implementations with hand-derived
# backward rules instead of compositions of ~10 primitives each. Both rules
# are pinned by finite-difference tests and straight-line numpy references.


def attention_product(q: Tensor, k: Tensor, v: Tensor,
                      keep: np.ndarray | None = None) -> Tensor:
    """softmax(q k^T / sqrt(d_k)) v as one op (optionally masked).

    Backward: with p the weights and s the scaled scores,
      dv = p^T g,  dp = g v^T,  ds = p * (dp - sum(p*dp, rows)),
      dq = ds k / sqrt(d_k),  dk = ds^T q / sqrt(d_k).
    Masked entries have p = 0, so they get zero score gradient for free.
    """
    inv = 1.0 / math.sqrt(q.data.shape[1])
    scores = (q.data @ k.data.T) * inv
    if keep is not None:
        scores = np.where(keep, scores, -np.inf)
    m = scores.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise DimensionError("attention_product: fully-masked score row")
    e = np.exp(scores - m)
    p = e / e.sum(axis=1, keepdims=True)
    out = _make(p @ v.data)
    tape = _ACTIVE_TAPE
    if tape is not None and (q.requires_grad or k.requires_grad or v.requires_grad):
        def bw(g):
            if v.requires_grad:
                _acc_own(v, p.T @ g)
            if q.requires_grad or k.requires_grad:
                dp = g @ v.data.T
                ds = p * (dp - (p * dp).sum(axis=1, keepdims=True))
                if q.requires_grad:
                    _acc_own(q, (ds @ k.data) * inv)
                if k.requires_grad:
                    _acc_own(k, (ds.T @ q.data) * inv)
        tape.record(out, bw)
    return out


def leaky_unit_update(s_prev: Tensor, x: Tensor, alpha: Tensor,
                      w_in: Tensor, rho: Tensor, w_hat_t: Tensor) -> Tensor:
    """(1 - a) s + a tanh(x w_in + rho (s w_hat^T)) as one op.

    w_hat_t holds the fixed recurrent matrix already transposed; it never
    receives a gradient. alpha and rho are 1x1. Backward, with
    u = s w_hat^T, c = tanh(x w_in + rho u), dpre = a g (1 - c^2):
      da   = sum(g * (c - s))
      ds   = g (1 - a) + rho (dpre w_hat_t^T)
      dw_in = x^T dpre,  dx = dpre w_in^T,  drho = sum(dpre * u)
    """
    a = alpha.data[0, 0]
    r = rho.data[0, 0]
    u = s_prev.data @ w_hat_t.data
    cand = np.tanh(x.data @ w_in.data + r * u)
    out = _make((1.0 - a) * s_prev.data + a * cand)
    tape = _ACTIVE_TAPE
    if tape is not None and (s_prev.requires_grad or x.requires_grad
                             or alpha.requires_grad or w_in.requires_grad
                             or rho.requires_grad):
        def bw(g):
            if alpha.requires_grad:
                _acc_own(alpha, np.array([[(g * (cand - s_prev.data)).sum()]]))
            dpre = (a * g) * (1.0 - cand * cand)
            if w_in.requires_grad:
                _acc_own(w_in, x.data.T @ dpre)
            if x.requires_grad:
                _acc_own(x, dpre @ w_in.data.T)
            if rho.requires_grad:
                _acc_own(rho, np.array([[(dpre * u).sum()]]))
            if s_prev.requires_grad:
                _acc_own(s_prev, (1.0 - a) * g + r * (dpre @ w_hat_t.data.T))
        tape.record(out, bw)
    return out


# verification -------------------------------------------------------------


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    f rebuilds the scalar loss from scratch on each call (define-by-run), so
    perturbing a parameter in place and re-evaluating gives the numeric
    derivative. Relative error uses max(1, |numeric|) as the denominator.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    for p in params:
        p.grad = None
    tape = Tape()
    with tape:
        loss = f()
    backward(loss, tape)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]

    def value() -> float:
        out = f()  # no active tape: forward only
        return float(out.data[0, 0])

    max_rel = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.ravel()
        gaf = ga.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp = value()
            flat[i] = orig - eps
            lm = value()
            flat[i] = orig
            num = (lp - lm) / (2.0 * eps)
            rel = abs(gaf[i] - num) / max(1.0, abs(num))
            if rel > max_rel:
                max_rel = rel
    return max_rel
