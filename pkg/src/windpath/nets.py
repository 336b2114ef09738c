"""Small MLPs with hand-written backprop, LayerNorm, dropout, and Adam.

Everything is plain numpy so gradients can be checked against finite
differences and training is bit-reproducible from a seed. Hidden blocks are
Linear -> LayerNorm -> tanh -> Dropout; the head is a bare Linear layer.
"""

from __future__ import annotations

import numpy as np

from . import kernels

LN_EPS = 1e-5


class MLP:
    """Fully-connected network. dims = [in, hidden..., out]."""

    def __init__(self, dims, rng: np.random.Generator, dropout: float = 0.1,
                 dtype=np.float32, out_scale: float = 1.0):
        self.dims = list(int(d) for d in dims)
        self.dropout = float(dropout)
        self.dtype = np.dtype(dtype)
        self.Ws: list[np.ndarray] = []
        self.bs: list[np.ndarray] = []
        self.gammas: list[np.ndarray] = []  # LayerNorm scale, hidden layers only
        self.betas: list[np.ndarray] = []   # LayerNorm shift
        n_layers = len(self.dims) - 1
        for i in range(n_layers):
            fan_in, fan_out = self.dims[i], self.dims[i + 1]
            scale = np.sqrt(2.0 / fan_in)
            if i == n_layers - 1:
                scale *= out_scale
            W = rng.normal(0.0, scale, size=(fan_in, fan_out))
            self.Ws.append(W.astype(self.dtype))
            self.bs.append(np.zeros(fan_out, dtype=self.dtype))
            if i < n_layers - 1:
                self.gammas.append(np.ones(fan_out, dtype=self.dtype))
                self.betas.append(np.zeros(fan_out, dtype=self.dtype))
        self._param_cache = None

    @property
    def n_hidden(self) -> int:
        return len(self.dims) - 2

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in the serialization order: per layer the
        weight matrix (row-major), bias, then LayerNorm scale and shift."""
        out = []
        for i in range(len(self.Ws)):
            out.append(self.Ws[i])
            out.append(self.bs[i])
            if i < self.n_hidden:
                out.append(self.gammas[i])
                out.append(self.betas[i])
        return out

    def set_parameters(self, arrays) -> None:
        mine = self.parameters()
        if len(arrays) != len(mine):
            raise ValueError("parameter count mismatch")
        for dst, src in zip(mine, arrays):
            if dst.shape != src.shape:
                raise ValueError(f"shape mismatch {dst.shape} vs {src.shape}")
            dst[...] = src.astype(self.dtype)

    def astype(self, dtype) -> "MLP":
        """Copy of the network in another dtype (float64 for gradient checks)."""
        clone = MLP(self.dims, np.random.default_rng(0), dropout=self.dropout,
                    dtype=dtype)
        clone.set_parameters(self.parameters())
        return clone

    # -- forward/backward ----------------------------------------------------

    def forward(self, x, train: bool = False, rng: np.random.Generator | None = None):
        """Returns (output, cache). Dropout only fires when train=True."""
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        cache = {"inputs": [], "zhat": [], "inv_std": [], "act": [], "masks": [],
                 "squeeze": squeeze}
        h = x
        for i in range(self.n_hidden):
            cache["inputs"].append(h)
            z = h @ self.Ws[i] + self.bs[i]
            mu = z.mean(axis=1, keepdims=True)
            var = z.var(axis=1, keepdims=True)
            inv_std = 1.0 / np.sqrt(var + LN_EPS)
            zhat = (z - mu) * inv_std
            a = np.tanh(self.gammas[i] * zhat + self.betas[i])
            if train and self.dropout > 0.0:
                if rng is None:
                    raise ValueError("train-mode forward needs an rng for dropout")
                keep = 1.0 - self.dropout
                mask = (rng.random(a.shape) < keep).astype(self.dtype) / self.dtype.type(keep)
            else:
                mask = None
            cache["zhat"].append(zhat)
            cache["inv_std"].append(inv_std)
            cache["act"].append(a)
            cache["masks"].append(mask)
            h = a if mask is None else a * mask
            if mask is not None:
                cache["act"][-1] = a  # pre-mask activation, needed for backprop
        cache["head_in"] = h
        out = h @ self.Ws[-1] + self.bs[-1]
        if squeeze:
            out = out[0]
        return out, cache

    def forward_infer(self, x) -> np.ndarray:
        """Inference-only forward for a single observation.

        Uses the compiled two-hidden-layer kernel when the architecture
        allows it; otherwise falls back to the generic forward pass.
        Dropout is never applied here.
        """
        x = np.ascontiguousarray(x, dtype=np.float32)
        if x.ndim == 1 and self.n_hidden == 2 and self.dtype == np.float32:
            if self._param_cache is None:
                # Adam and set_parameters mutate arrays in place, so the
                # list of references stays valid across updates
                self._param_cache = self.parameters()
            out = kernels.mlp2_forward(x, *self._param_cache)
            return np.asarray(out, dtype=np.float64)
        out, _ = self.forward(x, train=False)
        return np.asarray(out, dtype=np.float64)

    def backward(self, cache, dout) -> list[np.ndarray]:
        """Gradients w.r.t. every parameter, in parameters() order."""
        dout = np.asarray(dout, dtype=self.dtype)
        if cache["squeeze"]:
            dout = dout[None, :]
        gWs = [None] * len(self.Ws)
        gbs = [None] * len(self.bs)
        ggam = [None] * self.n_hidden
        gbet = [None] * self.n_hidden

        h = cache["head_in"]
        gWs[-1] = h.T @ dout
        gbs[-1] = dout.sum(axis=0)
        dh = dout @ self.Ws[-1].T

        for i in range(self.n_hidden - 1, -1, -1):
            mask = cache["masks"][i]
            if mask is not None:
                dh = dh * mask
            a = cache["act"][i]
            dpre = dh * (1.0 - a * a)  # tanh'
            zhat = cache["zhat"][i]
            ggam[i] = (dpre * zhat).sum(axis=0)
            gbet[i] = dpre.sum(axis=0)
            dzhat = dpre * self.gammas[i]
            n = zhat.shape[1]
            inv_std = cache["inv_std"][i]
            dz = (inv_std / n) * (
                n * dzhat
                - dzhat.sum(axis=1, keepdims=True)
                - zhat * (dzhat * zhat).sum(axis=1, keepdims=True)
            )
            x = cache["inputs"][i]
            gWs[i] = x.T @ dz
            gbs[i] = dz.sum(axis=0)
            dh = dz @ self.Ws[i].T

        grads = []
        for i in range(len(self.Ws)):
            grads.append(gWs[i].astype(self.dtype))
            grads.append(gbs[i].astype(self.dtype))
            if i < self.n_hidden:
                grads.append(ggam[i].astype(self.dtype))
                grads.append(gbet[i].astype(self.dtype))
        return grads


class Adam:
    """Adaptive-moment optimizer over one network's parameter list."""

    def __init__(self, params: list[np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            g = g.astype(p.dtype)
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= (lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)).astype(p.dtype)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
