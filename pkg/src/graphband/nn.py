"""Minimal reverse-mode differentiation core.

A Tensor wraps a float64 ndarray and records enough structure to run the
backward pass over the (small, static) computation graphs used here:
affine layers, ReLU, inverted dropout, masked softmax cross-entropy and
a symmetric-operator propagation step. Gradients accumulate into .grad.

Everything is full batch and single threaded; distinct models never share
Tensors, so independent trainings can run in parallel processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def backward(self):
        """Accumulate gradients of this scalar into every ancestor."""
        if self.data.ndim != 0 and self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    t.grad = g if t.grad is None else t.grad + g


@dataclass
class LayerParams:
    """Weight and bias of one affine layer."""

    weight: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)

    def arrays(self) -> list[np.ndarray]:
        return [self.weight, self.bias]


def glorot_init(in_dim: int, out_dim: int, rng: np.random.Generator) -> LayerParams:
    """Uniform fan-in/fan-out scaled weights, zero bias."""
    bound = np.sqrt(6.0 / (in_dim + out_dim))
    weight = rng.uniform(-bound, bound, size=(in_dim, out_dim))
    return LayerParams(weight=weight, bias=np.zeros(out_dim))


def affine(x: Tensor, params: LayerParams, weight: Tensor | None = None,
           bias: Tensor | None = None) -> Tensor:
    """x @ W + b. Pass Tensors for weight/bias to collect their gradients."""
    w = weight if weight is not None else Tensor(params.weight)
    b = bias if bias is not None else Tensor(params.bias)
    if x.data.shape[1] != w.data.shape[0]:
        raise ValueError(
            f"affine shape mismatch: input has {x.data.shape[1]} columns, "
            f"weight expects {w.data.shape[0]}"
        )
    out_data = x.data @ w.data + b.data

    def backward(g):
        _accumulate(x, g @ w.data.T)
        _accumulate(w, x.data.T @ g)
        _accumulate(b, g.sum(axis=0))

    return Tensor(out_data, parents=(x, w, b), backward=backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        _accumulate(x, g * mask)

    return Tensor(np.where(mask, x.data, 0.0), parents=(x,), backward=backward)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability rate, scale survivors by
    1/(1-rate). Identity (the same Tensor) outside training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.data.shape) >= rate
    scale = 1.0 / (1.0 - rate)

    def backward(g):
        _accumulate(x, g * keep * scale)

    return Tensor(x.data * keep * scale, parents=(x,), backward=backward)


def propagate(op, h: Tensor) -> Tensor:
    """Apply a symmetric operator (dense, sparse or band-factored) to the
    rows of h. If op is a Tensor the gradient w.r.t. the operator matrix is
    collected too, which is how the loss sensitivity to the operator is
    extracted."""
    if isinstance(op, Tensor):
        out = op.data @ h.data

        def backward(g):
            _accumulate(op, g @ h.data.T)
            _accumulate(h, op.data.T @ g)

        return Tensor(out, parents=(op, h), backward=backward)

    out = op.matmul(h.data)

    def backward_fixed(g):
        # symmetric operator: transpose application equals application
        _accumulate(h, op.matmul(g))

    return Tensor(out, parents=(h,), backward=backward_fixed)


def masked_softmax_xent(logits: Tensor, labels: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean over masked rows of -log softmax(logits)[label].

    Rows outside the mask receive exactly zero gradient.
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mask must select at least one row")
    if np.unique(mask).size != mask.size:
        raise ValueError("mask is an index set, duplicates are not allowed")
    labels = np.asarray(labels, dtype=np.int64)
    sel = logits.data[mask]
    lab = labels[mask]
    if lab.min() < 0 or lab.max() >= sel.shape[1]:
        raise ValueError("label outside [0, num_classes) on a masked row")
    shifted = sel - sel.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - logsumexp
    loss = -log_probs[np.arange(mask.size), lab].mean()

    def backward(g):
        probs = np.exp(log_probs)
        probs[np.arange(mask.size), lab] -= 1.0
        full = np.zeros_like(logits.data)
        full[mask] = probs / mask.size
        _accumulate(logits, g * full)

    return Tensor(loss, parents=(logits,), backward=backward)


@dataclass
class AdamState:
    """Adam moments plus hyper-parameters; weight decay defaults to the
    classic L2-in-gradient form, set decoupled=True for the AdamW variant."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    decoupled: bool = False
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, in place."""
    if len(params) != len(grads):
        raise ValueError("params and grads must align")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch in adam_step: {p.shape} vs {g.shape}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if state.weight_decay and not state.decoupled:
            g = g + state.weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        update = (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        if state.weight_decay and state.decoupled:
            update = update + state.weight_decay * p
        p -= state.lr * update


def grad_check(f, params: list[np.ndarray], h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` maps a list of parameter Tensors to a scalar Tensor; the analytic
    side runs the recorded backward pass, the numeric side perturbs one
    coordinate at a time.
    """
    tensors = [Tensor(p.copy()) for p in params]
    out = f(tensors)
    out.backward()
    analytic = [
        t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors
    ]

    worst = 0.0
    for pi, p in enumerate(params):
        flat = p.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            for sign, store in ((+1.0, "hi"), (-1.0, "lo")):
                flat[j] = orig + sign * h
                val = float(f([Tensor(q) for q in params]).data)
                if store == "hi":
                    hi = val
                else:
                    lo = val
            flat[j] = orig
            numeric = (hi - lo) / (2.0 * h)
            ana = analytic[pi].reshape(-1)[j]
            err = abs(ana - numeric) / max(abs(ana) + abs(numeric), 1e-6)
            worst = max(worst, err)
    return worst
