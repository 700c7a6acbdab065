"""Lipschitz-constrained multi-layer perceptron.

The residual blocks in the maps module need a scalar network NN with a
certified Lipschitz constant L < 1: that is what makes x + NN(x) invertible
by fixed-point iteration and keeps the induced map bi-Lipschitz.  The
certificate is the product of per-layer spectral norms (tanh is
1-Lipschitz); constrain() rescales each weight matrix so the product stays
at or below the target.

All evaluators accept scalars or 1-D arrays of points and are pure.  A
constrained net should be treated as immutable; parameter updates go
through with_params(), which returns a fresh network.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


def spectral_norm(w: np.ndarray, iters: int = 100, tol: float = 1e-12) -> float:
    """Largest singular value of w via power iteration on w^T w.

    The returned value is padded upward by 1.01 times the gap between the
    final two Rayleigh-quotient iterates, so under early stopping the
    estimate errs on the conservative side (the side that keeps Lipschitz
    certificates valid).  A zero matrix returns 0.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ValueError("empty matrix")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if not np.any(w):
        return 0.0
    # deterministic start vector, mildly tilted to avoid symmetric stalls
    v = np.linspace(1.0, 2.0, w.shape[1])
    v /= np.linalg.norm(v)
    sigma_prev = 0.0
    sigma = float(np.linalg.norm(w @ v))
    for _ in range(iters):
        z = w.T @ (w @ v)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        v = z / nz
        sigma_prev, sigma = sigma, float(np.linalg.norm(w @ v))
        if abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
            break
    return sigma + 1.01 * abs(sigma - sigma_prev)


@dataclass(frozen=True, eq=False)
class LipMlp:
    """Scalar in, scalar out MLP with tanh hidden activations.

    weights[k] has shape (out_k, in_k); the first in-dimension and the last
    out-dimension are both 1.  spectral_norms caches the per-layer
    certificates computed by constrain(); None means the net has not been
    constrained since its weights last changed.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    target_lipschitz: float
    spectral_norms: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.target_lipschitz < 1.0:
            raise ValueError(
                f"target Lipschitz constant must lie in (0, 1), got {self.target_lipschitz}")
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ValueError("need matching non-empty weight and bias lists")
        if self.weights[0].shape[1] != 1 or self.weights[-1].shape[0] != 1:
            raise ValueError("network must map dimension 1 to dimension 1")
        for k in range(len(self.weights) - 1):
            if self.weights[k].shape[0] != self.weights[k + 1].shape[1]:
                raise ValueError(f"layer {k} output does not feed layer {k + 1} input")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def lipschitz_bound(self) -> float:
        """Certified upper bound on the Lipschitz constant (product of the
        cached spectral norms)."""
        if self.spectral_norms is None:
            raise ValueError("net is not constrained; call constrain() first")
        return float(np.prod(self.spectral_norms))

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def param_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def with_params(self, vec: np.ndarray) -> "LipMlp":
        """New net with parameters taken from a flat vector (weights and
        biases interleaved layer by layer).  The result is unconstrained."""
        vec = np.asarray(vec, dtype=float)
        if vec.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {vec.size}")
        ws, bs, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(vec[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            bs.append(vec[pos:pos + b.size].reshape(b.shape).copy())
            pos += b.size
        return replace(self, weights=tuple(ws), biases=tuple(bs), spectral_norms=None)


def random_net(hidden: int = 8, lipschitz: float = 0.9, seed: int = 0,
               rng: np.random.Generator | None = None) -> LipMlp:
    """One-hidden-layer net with weights uniform in [-0.1, 0.1], constrained.

    The small initialization keeps x + NN(x) near the identity, so an
    optimization run starts from the unperturbed basis.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    shapes = [(hidden, 1), (1, hidden)]
    ws = tuple(rng.uniform(-0.1, 0.1, size=s) for s in shapes)
    bs = tuple(rng.uniform(-0.1, 0.1, size=s[0]) for s in shapes)
    return constrain(LipMlp(weights=ws, biases=bs, target_lipschitz=lipschitz))


def constrain(net: LipMlp) -> LipMlp:
    """Rescale each weight matrix to w * min(1, c / sigma_max(w)) with
    c = L^(1/num_layers), then cache the resulting spectral norms.

    The even per-layer budget makes the product of certificates <= L.
    """
    c = net.target_lipschitz ** (1.0 / net.num_layers)
    new_ws, norms = [], []
    for w in net.weights:
        w_new = w
        sigma = spectral_norm(w_new)
        # the conservative padding can leave the recomputed certificate a few
        # ulps above budget after one rescale; nudge until it holds
        for _ in range(4):
            if sigma <= c:
                break
            w_new = w_new * (c / sigma)
            sigma = spectral_norm(w_new)
        new_ws.append(w_new)
        norms.append(sigma)
    return replace(net, weights=tuple(new_ws), spectral_norms=tuple(norms))


def _forward_stack(net: LipMlp, x: np.ndarray) -> list[np.ndarray]:
    """Layer activations a_0 .. a_K for a batch of points; a_0 is the input
    row, hidden layers are post-tanh, the last layer is linear."""
    a = x[None, :]
    stack = [a]
    last = net.num_layers - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b[:, None]
        a = z if k == last else np.tanh(z)
        stack.append(a)
    return stack


def mlp_eval(net: LipMlp, x):
    """Forward pass NN(x); tanh after every layer except the last."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    out = _forward_stack(net, np.atleast_1d(x))[-1][0]
    return float(out[0]) if scalar else out


def mlp_deriv(net: LipMlp, x):
    """Exact derivative d NN / dx by the chain rule; bounded by the
    certified Lipschitz constant."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    _, d1, _ = input_jet(net, np.atleast_1d(x))
    return float(d1[0]) if scalar else d1


def input_jet(net: LipMlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """NN(x), NN'(x), NN''(x) for a 1-D array of points.

    Propagates a second-order jet through the layers; the second input
    derivative is what lets Jacobian determinants of block chains be
    differentiated analytically.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = x[None, :]
    s = np.ones_like(a)
    r = np.zeros_like(a)
    last = net.num_layers - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b[:, None]
        zs = w @ s
        zr = w @ r
        if k == last:
            a, s, r = z, zs, zr
        else:
            t = np.tanh(z)
            sech2 = 1.0 - t * t
            a = t
            r = sech2 * zr - 2.0 * t * sech2 * zs * zs
            s = sech2 * zs
    return a[0], s[0], r[0]


def param_jacobians(net: LipMlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sensitivities of NN(x) and NN'(x) to every network parameter.

    Returns (d_value, d_deriv), each of shape (num_params, len(x)), with
    rows ordered as in param_vector().  Computed by exact forward-mode
    propagation, one unit direction per parameter, vectorized over points.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = x.size
    last = net.num_layers - 1

    # cache the primal and first-derivative chains
    a_list, z_list, zeta_list, s_list = [x[None, :]], [], [], [np.ones((1, m))]
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a_list[-1] + b[:, None]
        zeta = w @ s_list[-1]
        z_list.append(z)
        zeta_list.append(zeta)
        if k == last:
            a_list.append(z)
            s_list.append(zeta)
        else:
            t = np.tanh(z)
            a_list.append(t)
            s_list.append((1.0 - t * t) * zeta)

    d_value = np.empty((net.num_params, m))
    d_deriv = np.empty((net.num_params, m))
    row = 0
    for layer in range(net.num_layers):
        w_shape = net.weights[layer].shape
        n_w = net.weights[layer].size
        n_b = net.biases[layer].size
        for j in range(n_w + n_b):
            if j < n_w:
                out_i, in_i = divmod(j, w_shape[1])
                dz = a_list[layer][in_i]
                dzeta = s_list[layer][in_i]
            else:
                out_i = j - n_w
                dz = np.ones(m)
                dzeta = np.zeros(m)
            da = np.zeros((w_shape[0], m))
            ds = np.zeros_like(da)
            if layer == last:
                da[out_i] = dz
                ds[out_i] = dzeta
            else:
                t = a_list[layer + 1]
                sech2 = 1.0 - t * t
                da[out_i] = sech2[out_i] * dz
                ds[out_i] = sech2[out_i] * dzeta - 2.0 * t[out_i] * sech2[out_i] * dz * zeta_list[layer][out_i]
            for k in range(layer + 1, net.num_layers):
                w = net.weights[k]
                dz_k = w @ da
                dzeta_k = w @ ds
                if k == last:
                    da, ds = dz_k, dzeta_k
                else:
                    t = a_list[k + 1]
                    sech2 = 1.0 - t * t
                    da = sech2 * dz_k
                    ds = sech2 * dzeta_k - 2.0 * t * sech2 * dz_k * zeta_list[k]
            d_value[row] = da[0]
            d_deriv[row] = ds[0]
            row += 1
    return d_value, d_deriv
