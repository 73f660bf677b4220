"""Scalar dual potentials as small ReLU networks, with hand-written backprop
and an Adam optimizer over flat parameter vectors."""

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, LayoutMismatch

DEFAULT_HIDDEN = (128, 256)


class PotentialNetwork:
    """Fully connected ``D -> hidden... -> 1`` network, ReLU on hidden layers.

    All weights and biases live in one flat ``params`` vector; the per-layer
    matrices are views into it, so in-place updates of ``params`` are seen by
    :meth:`forward` immediately.
    """

    def __init__(self, dim, hidden=DEFAULT_HIDDEN, rng=None, params=None):
        self.widths = (int(dim), *(int(h) for h in hidden), 1)
        self._shapes = [(a, b) for a, b in zip(self.widths[:-1], self.widths[1:])]
        size = sum(a * b + b for a, b in self._shapes)
        if params is None:
            params = np.zeros(size)
            if rng is not None:
                self._bind(params)
                for W, _ in self._layers:
                    limit = np.sqrt(6.0 / (W.shape[0] + W.shape[1]))
                    W[...] = rng.uniform(-limit, limit, size=W.shape)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (size,):
            raise LayoutMismatch(f"network with widths {self.widths} needs {size} parameters, got {params.shape}")
        self._bind(params)

    def _bind(self, params):
        self.params = params
        self._layers = []
        off = 0
        for a, b in self._shapes:
            W = params[off:off + a * b].reshape(a, b)
            off += a * b
            self._layers.append((W, params[off:off + b]))
            off += b

    @property
    def dim(self):
        return self.widths[0]

    @property
    def n_params(self):
        return self.params.size

    def copy(self):
        return PotentialNetwork(self.dim, self.widths[1:-1], params=self.params.copy())

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.dim:
            raise DimMismatch(f"network expects {self.dim} input columns, got {x.shape[1]}")
        return x

    def forward(self, x, keep=False):
        """Evaluate on an ``(S, D)`` batch; returns ``S`` values.

        With ``keep=True`` also returns the per-layer activations needed by
        :meth:`backward`.
        """
        h = self._check(x)
        acts = [h]
        last = len(self._layers) - 1
        for j, (W, b) in enumerate(self._layers):
            h = h @ W + b
            if j < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        out = h[:, 0]
        return (out, acts) if keep else out

    def backward(self, x, upstream, acts=None):
        """Gradient of ``sum_s upstream[s] * forward(x)[s]`` w.r.t. ``params``."""
        if acts is None:
            _, acts = self.forward(x, keep=True)
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (acts[0].shape[0],):
            raise DimMismatch(f"upstream has shape {upstream.shape}, batch has {acts[0].shape[0]} rows")
        grads = []
        delta = upstream[:, None]
        for j in range(len(self._layers) - 1, -1, -1):
            W, _ = self._layers[j]
            grads.append((acts[j].T @ delta, delta.sum(axis=0)))
            if j > 0:
                # ReLU subgradient at exactly 0 is taken as 0
                delta = (delta @ W.T) * (acts[j] > 0.0)
        flat = []
        for gW, gb in reversed(grads):
            flat.append(gW.ravel())
            flat.append(gb)
        return np.concatenate(flat)


def save_network(path, net):
    """Write widths and the flat parameter vector to an ``.npz`` file."""
    np.savez(path, widths=np.array(net.widths), params=net.params)


def load_network(path):
    with np.load(path) as data:
        widths = tuple(int(w) for w in data["widths"])
        return PotentialNetwork(widths[0], widths[1:-1], params=data["params"].copy())


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n, **hyper):
        return cls(np.zeros(n), np.zeros(n), **hyper)


def adam_step(state, params, grad, direction="descent"):
    """One bias-corrected Adam update.

    Returns ``(new_params, new_state)``; inputs are not modified. ``ascent``
    adds the step, ``descent`` subtracts it.
    """
    if direction not in ("ascent", "descent"):
        raise ValueError(f"direction must be 'ascent' or 'descent', not {direction!r}")
    grad = np.asarray(grad, dtype=np.float64)
    if not (params.shape == grad.shape == state.m.shape):
        raise LayoutMismatch(f"params {params.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = m / (1.0 - state.beta1**t)
    vhat = v / (1.0 - state.beta2**t)
    step = state.lr * mhat / (np.sqrt(vhat) + state.eps)
    new = params + step if direction == "ascent" else params - step
    return new, AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)


def adam_update_(state, params, grad, direction="descent"):
    """In-place form of :func:`adam_step`: mutates ``state`` and ``params``.

    Produces the same numbers as :func:`adam_step` up to floating point
    evaluation order; used in the training loop where allocation dominates.
    """
    t = state.t + 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grad
    g2 = np.multiply(grad, grad)
    state.v *= state.beta2
    g2 *= 1.0 - state.beta2
    state.v += g2
    denom = np.sqrt(state.v, out=g2)
    denom *= 1.0 / np.sqrt(1.0 - state.beta2**t)
    denom += state.eps
    step = np.divide(state.m, denom, out=denom)
    step *= state.lr / (1.0 - state.beta1**t)
    if direction == "ascent":
        params += step
    else:
        params -= step
    state.t = t
