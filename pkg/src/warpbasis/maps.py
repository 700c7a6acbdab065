"""Parametric bi-Lipschitz maps of the real line.

A map is an ordered chain of blocks applied left to right:

* Affine(alpha, beta): x -> alpha * x + beta with alpha > 0, so every map
  here is orientation preserving and Jacobian determinants stay positive
  (no absolute values needed under square roots downstream).
* Residual(net): x -> x + NN(x) with a Lipschitz-constrained net, L < 1,
  invertible by contraction fixed-point iteration.

Each block carries a certified Lipschitz interval ([|alpha|, |alpha|] and
[1 - L, 1 + L] respectively); the chain's interval is the product, which in
one dimension also brackets the Jacobian determinant.

Evaluators accept scalars or 1-D arrays.  MapSpec values are immutable;
parameter updates produce new specs (with_parameters / constrain_map).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lipnet import (LipMlp, constrain, input_jet, mlp_deriv, mlp_eval,
                     param_jacobians)


class NonConvergenceError(RuntimeError):
    """Fixed-point inversion failed to reach tolerance; usually means a
    residual block's net is corrupted or was never constrained."""


class UnsupportedDimensionError(ValueError):
    """Only dimension 1 is implemented; higher dimensions are declared in
    the types but deliberately rejected rather than silently degraded."""


@dataclass(frozen=True)
class AffineBlock:
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"affine scale must be positive, got {self.alpha}")

    @property
    def lipschitz_interval(self) -> tuple[float, float]:
        return (self.alpha, self.alpha)


@dataclass(frozen=True, eq=False)
class ResidualBlock:
    net: LipMlp

    def __post_init__(self):
        if self.net.spectral_norms is None:
            raise ValueError("residual block requires a constrained net")

    @property
    def lipschitz_interval(self) -> tuple[float, float]:
        L = self.net.target_lipschitz
        return (1.0 - L, 1.0 + L)


Block = AffineBlock | ResidualBlock


class DensityKind(Enum):
    """Which push-forward density to evaluate.

    PUSH_FORWARD is the density of the image measure of h, equal to
    1/det(J_h) under the positive-Jacobian convention used here.
    INVERSE_PUSH_FORWARD is the density of the image measure of the inverse
    map, evaluated at the image point h(x): the argument passed in is
    always the pre-image x, and the value equals det(J_h(x)).  This is the
    composition-point convention every operator in this package needs; the
    two evaluations multiply to 1 identically.
    """

    PUSH_FORWARD = "push_forward"
    INVERSE_PUSH_FORWARD = "inverse_push_forward"


@dataclass(frozen=True, eq=False)
class MapSpec:
    """An ordered chain of blocks; the empty chain is the identity."""

    blocks: tuple[Block, ...] = ()
    dimension: int = 1

    def __post_init__(self):
        if self.dimension != 1:
            raise UnsupportedDimensionError(
                f"only dimension 1 is supported, got {self.dimension}")
        object.__setattr__(self, "blocks", tuple(self.blocks))


def identity_map() -> MapSpec:
    return MapSpec(blocks=())


def shift_map(offset: float) -> MapSpec:
    """h(x) = x + offset; measure preserving."""
    return MapSpec(blocks=(AffineBlock(alpha=1.0, beta=float(offset)),))


def scaling_map(alpha: float, beta: float = 0.0) -> MapSpec:
    return MapSpec(blocks=(AffineBlock(alpha=float(alpha), beta=float(beta)),))


def residual_affine_template(hidden: int = 8, lipschitz: float = 0.9,
                             seed: int = 0, alpha: float = 1.0,
                             beta: float = 0.0) -> MapSpec:
    """x -> alpha * (x + NN(x)) + beta with a freshly initialized net; the
    trainable family used by the optimization front end."""
    from .lipnet import random_net
    net = random_net(hidden=hidden, lipschitz=lipschitz, seed=seed)
    return MapSpec(blocks=(ResidualBlock(net=net), AffineBlock(alpha=alpha, beta=beta)))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def map_forward(m: MapSpec, x):
    """Apply the block chain left to right."""
    arr, scalar = _as_array(x)
    t = np.atleast_1d(arr).astype(float)
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            t = block.alpha * t + block.beta
        else:
            t = t + mlp_eval(block.net, t)
    return float(t[0]) if scalar else t


def jacobian_det(m: MapSpec, x):
    """Chain-rule product of per-block derivatives; strictly positive."""
    arr, scalar = _as_array(x)
    t = np.atleast_1d(arr).astype(float)
    d = np.ones_like(t)
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            d = d * block.alpha
            t = block.alpha * t + block.beta
        else:
            d = d * (1.0 + mlp_deriv(block.net, t))
            t = t + mlp_eval(block.net, t)
    return float(d[0]) if scalar else d


def forward_and_jacobian(m: MapSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """h(x) and det J_h(x) in one pass over the chain."""
    t = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    d = np.ones_like(t)
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            d *= block.alpha
            t = block.alpha * t + block.beta
        else:
            val, der, _ = input_jet(block.net, t)
            d *= 1.0 + der
            t = t + val
    return t, d


def _invert_residual(net: LipMlp, y: np.ndarray, tol: float,
                     max_iters: int) -> np.ndarray:
    """Solve x + NN(x) = y by the contraction x <- y - NN(x).

    L < 1 gives |x_k - x*| <= L/(1-L) |x_{k+1} - x_k|, so the stopping rule
    |step| < tol (1-L)/L guarantees the returned point is within tol of the
    true pre-image.
    """
    L = net.target_lipschitz
    threshold = tol * (1.0 - L) / L
    x = y.copy()
    for _ in range(max_iters):
        x_next = y - mlp_eval(net, x)
        step = float(np.max(np.abs(x_next - x)))
        x = x_next
        if step < threshold:
            return x
    raise NonConvergenceError(
        f"residual-block inversion did not reach step {threshold:.3e} in "
        f"{max_iters} iterations (net unconstrained or tolerance too tight)")


def map_inverse(m: MapSpec, y, tol: float = 1e-12, max_iters: int = 256):
    """Invert the chain right to left so |map_forward(m, x) - y| < tol.

    Affine blocks invert in closed form.  Residual blocks get per-block
    error budgets derived from the certified Lipschitz intervals, so the
    round-trip guarantee holds for the whole chain, not just one block.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    arr, scalar = _as_array(y)
    t = np.atleast_1d(arr).astype(float)
    intervals = [b.lipschitz_interval for b in m.blocks]
    upper_total = float(np.prod([hi for _, hi in intervals])) if intervals else 1.0
    n_blocks = max(len(m.blocks), 1)
    # prefix_r[k] = product of lower bounds of blocks 0..k-1: the Lipschitz
    # bound of the remaining inverse chain is its reciprocal
    prefix_r = np.cumprod([1.0] + [lo for lo, _ in intervals])
    for k in range(len(m.blocks) - 1, -1, -1):
        block = m.blocks[k]
        if isinstance(block, AffineBlock):
            t = (t - block.beta) / block.alpha
        else:
            budget = tol * prefix_r[k] / (upper_total * n_blocks)
            t = _invert_residual(block.net, t, budget, max_iters)
    return float(t[0]) if scalar else t


def density(m: MapSpec, kind: DensityKind, x):
    """Push-forward densities under the conventions documented on
    DensityKind; for both kinds the argument is the pre-image point."""
    d = jacobian_det(m, x)
    if kind is DensityKind.PUSH_FORWARD:
        return 1.0 / d
    return d


def lipschitz_interval(m: MapSpec) -> tuple[float, float]:
    """Certified (r, R) with r |x - y| <= |h(x) - h(y)| <= R |x - y|; in one
    dimension the same interval brackets det J_h."""
    lo, hi = 1.0, 1.0
    for block in m.blocks:
        b_lo, b_hi = block.lipschitz_interval
        lo *= b_lo
        hi *= b_hi
    return (lo, hi)


def constrain_map(m: MapSpec) -> MapSpec:
    """Re-constrain every residual net; affine blocks pass through."""
    blocks = tuple(
        ResidualBlock(net=constrain(b.net)) if isinstance(b, ResidualBlock) else b
        for b in m.blocks)
    return MapSpec(blocks=blocks, dimension=m.dimension)


# ---------------------------------------------------------------------------
# parameter flattening (used by the optimizer; updates copy, never mutate)

def num_parameters(m: MapSpec) -> int:
    total = 0
    for block in m.blocks:
        total += 2 if isinstance(block, AffineBlock) else block.net.num_params
    return total


def parameter_vector(m: MapSpec) -> np.ndarray:
    parts = []
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            parts.append(np.array([block.alpha, block.beta]))
        else:
            parts.append(block.net.param_vector())
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)


def with_parameters(m: MapSpec, vec: np.ndarray, alpha_floor: float = 1e-6) -> MapSpec:
    """New MapSpec with parameters from a flat vector.

    Affine scales are clamped to alpha_floor so every iterate of an
    optimizer stays orientation preserving and hence a valid bi-Lipschitz
    map.  Residual nets come back unconstrained; call constrain_map() to
    restore their certificates.
    """
    vec = np.asarray(vec, dtype=float)
    blocks, pos = [], 0
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            alpha = max(float(vec[pos]), alpha_floor)
            blocks.append(AffineBlock(alpha=alpha, beta=float(vec[pos + 1])))
            pos += 2
        else:
            n = block.net.num_params
            blocks.append(ResidualBlock(net=constrain(
                block.net.with_params(vec[pos:pos + n]))))
            pos += n
    if pos != vec.size:
        raise ValueError(f"parameter vector has {vec.size} entries, expected {pos}")
    return MapSpec(blocks=tuple(blocks), dimension=m.dimension)


def forward_jacobian_params(m: MapSpec, x: np.ndarray):
    """h(x), det J_h(x) and their sensitivities to every map parameter.

    Returns (u, d, du, dd) with du and dd of shape (num_parameters, len(x)).
    Exact forward-mode differentiation through the block chain; needs the
    second input derivative of residual nets because a parameter in one
    block changes the evaluation points of every later block.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mpts = x.size

    # forward pass, caching per-block inputs and residual jets
    t_in, s_in, jets = [], [], []
    t = x.copy()
    s = np.ones_like(t)
    for block in m.blocks:
        t_in.append(t)
        s_in.append(s)
        if isinstance(block, AffineBlock):
            jets.append(None)
            t = block.alpha * t + block.beta
            s = block.alpha * s
        else:
            jet = input_jet(block.net, t)
            jets.append(jet)
            val, der, _ = jet
            t = t + val
            s = (1.0 + der) * s
    u, d = t, s

    du = np.empty((num_parameters(m), mpts))
    dd = np.empty_like(du)
    row = 0
    for bi, block in enumerate(m.blocks):
        if isinstance(block, AffineBlock):
            # rows: d/d alpha, d/d beta
            dt = np.stack([t_in[bi], np.ones(mpts)])
            ds = np.stack([s_in[bi], np.zeros(mpts)])
        else:
            d_val, d_der = param_jacobians(block.net, t_in[bi])
            dt = d_val
            ds = d_der * s_in[bi]
        for k in range(bi + 1, len(m.blocks)):
            nxt = m.blocks[k]
            if isinstance(nxt, AffineBlock):
                dt = nxt.alpha * dt
                ds = nxt.alpha * ds
            else:
                _, der, der2 = jets[k]
                ds = der2 * dt * s_in[k] + (1.0 + der) * ds
                dt = (1.0 + der) * dt
        du[row:row + dt.shape[0]] = dt
        dd[row:row + ds.shape[0]] = ds
        row += dt.shape[0]
    return u, d, du, dd


# ---------------------------------------------------------------------------
# JSON serialization; plain decimal floats, bit-faithful on round trip

def to_jsonable(m: MapSpec) -> dict:
    blocks = []
    for block in m.blocks:
        if isinstance(block, AffineBlock):
            blocks.append({"affine": {"alpha": block.alpha, "beta": block.beta}})
        else:
            net = block.net
            blocks.append({"residual": {
                "lipschitz": net.target_lipschitz,
                "layers": [{"w": w.tolist(), "b": b.tolist()}
                           for w, b in zip(net.weights, net.biases)],
                "activation": "tanh",
            }})
    return {"dimension": m.dimension, "blocks": blocks}


def from_jsonable(data: dict) -> MapSpec:
    if not isinstance(data, dict) or "blocks" not in data:
        raise ValueError("map JSON must be an object with a 'blocks' list")
    blocks = []
    for entry in data["blocks"]:
        if "affine" in entry:
            aff = entry["affine"]
            blocks.append(AffineBlock(alpha=float(aff["alpha"]), beta=float(aff["beta"])))
        elif "residual" in entry:
            res = entry["residual"]
            if res.get("activation", "tanh") != "tanh":
                raise ValueError(f"unsupported activation {res.get('activation')!r}")
            ws = tuple(np.asarray(layer["w"], dtype=float) for layer in res["layers"])
            bs = tuple(np.asarray(layer["b"], dtype=float) for layer in res["layers"])
            net = constrain(LipMlp(weights=ws, biases=bs,
                                   target_lipschitz=float(res["lipschitz"])))
            blocks.append(ResidualBlock(net=net))
        else:
            raise ValueError(f"unknown block entry {sorted(entry)!r}")
    return MapSpec(blocks=tuple(blocks), dimension=int(data.get("dimension", 1)))


def dumps(m: MapSpec) -> str:
    return json.dumps(to_jsonable(m), indent=2)


def loads(text: str) -> MapSpec:
    return from_jsonable(json.loads(text))


def save_map(m: MapSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(m))
        fh.write("\n")


def load_map(path) -> MapSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def specs_equal(a: MapSpec, b: MapSpec) -> bool:
    """Structural equality via the serialized form (exact float compare)."""
    return to_jsonable(a) == to_jsonable(b)
