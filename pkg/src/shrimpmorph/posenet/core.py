"""Forward and backward passes of the heatmap pose network, in numpy.

The encoder is a stack of pre-norm transformer blocks computing

    a = x + attn(LN(x))
    out = a + mlp(a)

i.e. layer normalization is applied to the attention input only; the MLP
branch consumes the residual sum directly. The decoder bilinearly upsamples
the token grid, applies ReLU and maps channels to one heatmap per keypoint
with a pointwise convolution.

Everything runs in float64 and every gradient is written by hand; the test
suite checks each parameter tensor against central finite differences.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from ..errors import ShapeMismatch
from .config import PoseNetConfig

LN_EPS = 1e-6

Params = dict[str, np.ndarray]


def init_params(config: PoseNetConfig) -> Params:
    config.validate()
    rng = np.random.default_rng(config.seed)
    c = config.embed_dim
    p = config.patch_size * config.patch_size * config.in_channels
    ch = int(round(config.mlp_ratio * c))

    def w(shape, scale):
        return rng.normal(0.0, scale, size=shape)

    params: Params = {
        "patch.w": w((p, c), 1.0 / math.sqrt(p)),
        "patch.b": np.zeros(c),
        "pos": w((config.num_tokens, c), 0.02),
        # final encoder norm: keeps the decoder's ReLU input centered so the
        # rectifier cannot die wholesale during the early zero-collapse phase
        "ln_f.g": np.ones(c),
        "ln_f.b": np.zeros(c),
        "head.w": w((c, config.num_keypoints), 1.0 / math.sqrt(c)),
        "head.b": np.zeros(config.num_keypoints),
    }
    for i in range(config.num_layers):
        pre = f"blk{i}."
        params[pre + "ln_g"] = np.ones(c)
        params[pre + "ln_b"] = np.zeros(c)
        params[pre + "qkv_w"] = w((c, 3 * c), 1.0 / math.sqrt(c))
        params[pre + "qkv_b"] = np.zeros(3 * c)
        params[pre + "proj_w"] = w((c, c), 1.0 / math.sqrt(c))
        params[pre + "proj_b"] = np.zeros(c)
        params[pre + "mlp_w1"] = w((c, ch), 1.0 / math.sqrt(c))
        params[pre + "mlp_b1"] = np.zeros(ch)
        params[pre + "mlp_w2"] = w((ch, c), 1.0 / math.sqrt(ch))
        params[pre + "mlp_b2"] = np.zeros(c)
    return params


# --- primitive layers --------------------------------------------------------


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0))) + x * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv)


def _layer_norm_backward(dy, g, cache):
    xhat, inv = cache
    reduce_axes = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axis=reduce_axes)
    db = dy.sum(axis=reduce_axes)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def bilinear_matrix(n_in: int, scale: int) -> np.ndarray:
    """Row-stochastic interpolation matrix for 1-D upsampling by ``scale``.

    Output sample i reads the continuous position (i + 0.5)/scale - 0.5,
    clamped at the borders; rows sum to 1 so constants are preserved.
    """
    n_out = n_in * scale
    m = np.zeros((n_out, n_in))
    for i in range(n_out):
        src = (i + 0.5) / scale - 0.5
        src = min(max(src, 0.0), n_in - 1.0)
        i0 = int(math.floor(src))
        i1 = min(i0 + 1, n_in - 1)
        f = src - i0
        m[i, i0] += 1.0 - f
        m[i, i1] += f
    return m


def bilinear_interpolate(grid: np.ndarray, x: float, y: float) -> float:
    """Evaluate the bilinear interpolant of a 2-D grid at (x, y)."""
    h, w = grid.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(math.floor(x)), int(math.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    return float(
        grid[y0, x0] * (1 - fy) * (1 - fx)
        + grid[y0, x1] * (1 - fy) * fx
        + grid[y1, x0] * fy * (1 - fx)
        + grid[y1, x1] * fy * fx
    )


# --- forward -----------------------------------------------------------------


def patchify(x: np.ndarray, config: PoseNetConfig) -> np.ndarray:
    b, h, w, ch = x.shape
    if (h, w, ch) != (config.input_height, config.input_width, config.in_channels):
        raise ShapeMismatch(
            f"input {x.shape[1:]} does not match config "
            f"({config.input_height}, {config.input_width}, {config.in_channels})"
        )
    d = config.patch_size
    gh, gw = config.grid_height, config.grid_width
    x = x.reshape(b, gh, d, gw, d, ch)
    x = x.transpose(0, 1, 3, 2, 4, 5)
    return x.reshape(b, gh * gw, d * d * ch)


def patch_embed(x: np.ndarray, params: Params, config: PoseNetConfig) -> np.ndarray:
    """Linear patch projection plus learned positional embedding."""
    patches = patchify(x, config)
    return patches @ params["patch.w"] + params["patch.b"] + params["pos"]


def vit_block(x: np.ndarray, params: Params, prefix: str, config: PoseNetConfig, cache=None):
    """One encoder block. ``x`` is (batch, tokens, channels)."""
    nh = config.num_heads
    b, t, c = x.shape
    dh = c // nh
    scale = 1.0 / math.sqrt(dh)

    xh, ln_cache = _layer_norm(x, params[prefix + "ln_g"], params[prefix + "ln_b"])
    qkv = xh @ params[prefix + "qkv_w"] + params[prefix + "qkv_b"]
    q, k, v = (
        qkv.reshape(b, t, 3, nh, dh).transpose(2, 0, 3, 1, 4)
    )  # each (b, nh, t, dh)
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    att = _softmax(scores)
    ctx = (att @ v).transpose(0, 2, 1, 3).reshape(b, t, c)
    attn_out = ctx @ params[prefix + "proj_w"] + params[prefix + "proj_b"]
    a = x + attn_out

    m1 = a @ params[prefix + "mlp_w1"] + params[prefix + "mlp_b1"]
    g1 = _gelu(m1)
    out = a + g1 @ params[prefix + "mlp_w2"] + params[prefix + "mlp_b2"]

    if cache is not None:
        cache[prefix] = (x, xh, ln_cache, q, k, v, att, ctx, a, m1, g1)
    return out


def _flat_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum over leading dims of a[..., i] * b[..., j] -> (i, j), via BLAS."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _vit_block_backward(dout, params, prefix, config, cache, grads):
    x, xh, ln_cache, q, k, v, att, ctx, a, m1, g1 = cache[prefix]
    nh = config.num_heads
    b, t, c = x.shape
    dh = c // nh
    scale = 1.0 / math.sqrt(dh)

    # MLP branch
    grads[prefix + "mlp_b2"] = dout.sum(axis=(0, 1))
    grads[prefix + "mlp_w2"] = _flat_outer(g1, dout)
    dg1 = dout @ params[prefix + "mlp_w2"].T
    dm1 = dg1 * _gelu_grad(m1)
    grads[prefix + "mlp_b1"] = dm1.sum(axis=(0, 1))
    grads[prefix + "mlp_w1"] = _flat_outer(a, dm1)
    da = dout + dm1 @ params[prefix + "mlp_w1"].T

    # attention branch
    dattn_out = da
    grads[prefix + "proj_b"] = dattn_out.sum(axis=(0, 1))
    grads[prefix + "proj_w"] = _flat_outer(ctx, dattn_out)
    dctx = (dattn_out @ params[prefix + "proj_w"].T).reshape(b, t, nh, dh).transpose(0, 2, 1, 3)
    datt = dctx @ v.transpose(0, 1, 3, 2)
    dv = att.transpose(0, 1, 3, 2) @ dctx
    dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
    dq = (dscores @ k) * scale
    dk = (dscores.transpose(0, 1, 3, 2) @ q) * scale
    dqkv = np.stack([dq, dk, dv])  # (3, b, nh, t, dh)
    dqkv = dqkv.transpose(1, 3, 0, 2, 4).reshape(b, t, 3 * c)
    grads[prefix + "qkv_b"] = dqkv.sum(axis=(0, 1))
    grads[prefix + "qkv_w"] = _flat_outer(xh, dqkv)
    dxh = dqkv @ params[prefix + "qkv_w"].T
    dx_ln, dg, dbeta = _layer_norm_backward(dxh, params[prefix + "ln_g"], ln_cache)
    grads[prefix + "ln_g"] = dg
    grads[prefix + "ln_b"] = dbeta

    return da + dx_ln


def forward(x: np.ndarray, params: Params, config: PoseNetConfig, cache=None):
    """Full forward pass: (batch, H, W, 4) -> (batch, H/4, W/4, num_keypoints)."""
    tokens = patch_embed(x, params, config)
    if cache is not None:
        cache["patches"] = patchify(x, config)
    for i in range(config.num_layers):
        tokens = vit_block(tokens, params, f"blk{i}.", config, cache)
    tokens, lnf_cache = _layer_norm(tokens, params["ln_f.g"], params["ln_f.b"])
    if cache is not None:
        cache["ln_f"] = lnf_cache
    b = tokens.shape[0]
    grid = tokens.reshape(b, config.grid_height, config.grid_width, config.embed_dim)

    s = config.decoder_upscale
    if s > 1:
        uh = bilinear_matrix(config.grid_height, s)
        uw = bilinear_matrix(config.grid_width, s)
        up = np.einsum("ip,bpqc->biqc", uh, grid)
        up = np.einsum("jq,biqc->bijc", uw, up)
    else:
        up = grid
    r = np.maximum(up, 0.0)
    heat = r @ params["head.w"] + params["head.b"]
    if cache is not None:
        cache["decoder"] = (up, r)
    return heat


def loss_and_gradients(
    x: np.ndarray, target: np.ndarray, params: Params, config: PoseNetConfig
) -> tuple[float, Params]:
    """Mean-squared heatmap loss and exact analytic parameter gradients."""
    cache: dict = {}
    heat = forward(x, params, config, cache)
    if heat.shape != target.shape:
        raise ShapeMismatch(f"prediction {heat.shape} vs target {target.shape}")
    diff = heat - target
    loss = float(np.mean(diff * diff))
    dheat = 2.0 * diff / diff.size

    grads: Params = {}
    up, r = cache["decoder"]
    grads["head.b"] = dheat.sum(axis=(0, 1, 2))
    grads["head.w"] = _flat_outer(r, dheat)
    dr = dheat @ params["head.w"].T
    dup = dr * (up > 0.0)

    s = config.decoder_upscale
    if s > 1:
        uh = bilinear_matrix(config.grid_height, s)
        uw = bilinear_matrix(config.grid_width, s)
        dgrid = np.einsum("ip,bijc->bpjc", uh, dup)
        dgrid = np.einsum("jq,bpjc->bpqc", uw, dgrid)
    else:
        dgrid = dup
    dtokens = dgrid.reshape(x.shape[0], config.num_tokens, config.embed_dim)
    dtokens, grads["ln_f.g"], grads["ln_f.b"] = _layer_norm_backward(
        dtokens, params["ln_f.g"], cache["ln_f"]
    )

    for i in reversed(range(config.num_layers)):
        dtokens = _vit_block_backward(dtokens, params, f"blk{i}.", config, cache, grads)

    grads["pos"] = dtokens.sum(axis=0)
    grads["patch.b"] = dtokens.sum(axis=(0, 1))
    grads["patch.w"] = _flat_outer(cache["patches"], dtokens)
    return loss, grads
