"""Forward pass of the molecular model: tokenization, L token-mixing layers
(quantum attention or the classical encoder baseline), aggregation down to a
2*d_emb feature vector, and amplitude assembly over the Hartree-Fock state.

Token tensors are float arrays of shape (n, m, d_emb) — n electrons, m
nuclei — and every layer preserves that shape, so the quantum and classical
layer implementations are drop-in replacements for each other.

`forward_cached` additionally records the intermediates of the aggregation
and assembly stages; `downstream_gradient` consumes them to produce exact
gradients for the parameters downstream of the layer stack.
"""
from __future__ import annotations

import numpy as np

from .circuits import LayerParams, token_block_forward
from .molecules import MoleculeSpec
from .params import ClassicalLayerParams, ParamStore
from .pauli import QubitHamiltonian, apply_hamiltonian, expectation

__all__ = [
    "DegenerateScaleError",
    "DegenerateStateError",
    "SingularityError",
    "aggregate",
    "assemble_state",
    "classical_layer",
    "downstream_gradient",
    "energy_forward",
    "forward_cached",
    "layer_norm",
    "qt_layer",
    "tokenize",
]

LN_EPS = 1e-5  # variance floor inside every normalization
COND_LIMIT = 1e8  # tokenizer weights beyond this are treated as rank deficient


class SingularityError(ValueError):
    """Tokenizer weight matrix is too ill-conditioned to invert."""


class DegenerateScaleError(ValueError):
    """Recovered distance channel has (numerically) zero spread."""


class DegenerateStateError(ValueError):
    """Assembled amplitude vector has vanishing norm."""


# ---------------------------------------------------------------------------
# shared normalization
# ---------------------------------------------------------------------------

def layer_norm(
    x: np.ndarray, scale: np.ndarray, shift: np.ndarray
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Standardize over the last axis, then apply the trainable affine.

    Returns (output, (xhat, inv_std)); the cache feeds the backward pass.
    """
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return scale * xhat + shift, (xhat, inv)


def _layer_norm_backward(g, scale, xhat, inv):
    gs = g * scale
    dx = inv * (gs - gs.mean(axis=-1, keepdims=True) - xhat * (gs * xhat).mean(axis=-1, keepdims=True))
    c = g.shape[-1]
    dscale = (g * xhat).reshape(-1, c).sum(axis=0)
    dshift = g.reshape(-1, c).sum(axis=0)
    return dx, dscale, dshift


# ---------------------------------------------------------------------------
# tokenization
# ---------------------------------------------------------------------------

def tokenize(
    mol: MoleculeSpec, r: float, store: ParamStore
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Token tensor plus raw electron-nucleus geometry at bond length r.

    Electron identifiers are one-hot rows into the embedding table, giving
    each electron a trainable position relative to its own atom; absolute
    positions then yield relative vectors p_en (n, m, 3), their norms
    r_en (n, m, 1), and tokens = [p_en | r_en] @ w_en of shape (n, m, d_emb).
    """
    if r <= 0:
        raise ValueError(f"bond length must be positive, got {r}")
    table = store["electron_embed"]
    ids = np.asarray(mol.electron_ids, dtype=int) - 1
    if ids.min() < 0 or ids.max() >= table.shape[0]:
        raise ValueError(
            f"electron ids {mol.electron_ids} outside embedding table of size {table.shape[0]}"
        )
    rel = table[ids]  # one-hot row pick: (n, 3)
    nuc = mol.positions(r)
    pos_e = rel + nuc[list(mol.electron_atom)]
    p_en = nuc[None, :, :] - pos_e[:, None, :]
    r_en = np.linalg.norm(p_en, axis=-1, keepdims=True)
    feats = np.concatenate([p_en, r_en], axis=-1)  # (n, m, 4)
    return feats @ store["w_en"], p_en, r_en


# ---------------------------------------------------------------------------
# token-mixing layers
# ---------------------------------------------------------------------------

def qt_layer(
    tokens: np.ndarray,
    lp: LayerParams,
    proton_numbers: np.ndarray,
    max_branches: int | None = 4,
) -> np.ndarray:
    """Quantum layer: squash to angles, mix each electron's nucleus tokens
    through the attention channel, then residual + normalization."""
    n, m, d = tokens.shape
    if not np.all(np.isfinite(tokens)):
        raise ValueError("token tensor contains non-finite entries")
    angles = np.arccos(np.tanh(proton_numbers[None, :, None] * tokens))
    feats = np.stack(
        [token_block_forward(angles[i], lp.attention, max_branches) for i in range(n)]
    )
    out, _ = layer_norm(tokens + feats, lp.norm_scale, lp.norm_shift)
    return out


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def classical_layer(tokens: np.ndarray, cp: ClassicalLayerParams) -> np.ndarray:
    """Baseline encoder layer on each electron's m-token sequence:
    pre-norm single-head scaled dot-product attention, output projection,
    residual + norm, tanh FFN, residual + norm."""
    n, m, d = tokens.shape
    zh, _ = layer_norm(tokens, cp.norm_in_scale, cp.norm_in_shift)
    q = zh @ cp.wq
    k = zh @ cp.wk
    v = zh @ cp.wv
    attn = _softmax(q @ k.swapaxes(-1, -2) / np.sqrt(d))  # (n, m, m)
    mixed = tokens + (attn @ v) @ cp.wo
    zh2, _ = layer_norm(mixed, cp.norm_attn_scale, cp.norm_attn_shift)
    ffn = np.tanh(zh2 @ cp.ffn_w1 + cp.ffn_b1) @ cp.ffn_w2 + cp.ffn_b2
    out, _ = layer_norm(zh2 + ffn, cp.norm_ffn_scale, cp.norm_ffn_shift)
    return out


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _conv_reduce(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Stride-2/kernel-2 conv along axis -2 with channel mixing, then reduce.

    Odd lengths are right-padded with zeros; conv outputs are duplicated back
    to the input length (nearest neighbor), truncated, and averaged, so the
    result matches the mean path's shape (..., channels).
    """
    s = x.shape[-2]
    if s % 2:
        pad = [(0, 0)] * x.ndim
        pad[-2] = (0, 1)
        x_padded = np.pad(x, pad)
    else:
        x_padded = x
    t_len = x_padded.shape[-2] // 2
    xp = x_padded.reshape(*x.shape[:-2], t_len, 2, x.shape[-1])
    co = np.einsum("...tuc,ocu->...to", xp, w) + b
    dup = np.repeat(co, 2, axis=-2)[..., :s, :]
    counts = np.where(2 * np.arange(t_len) + 1 < s, 2.0, 1.0)
    return dup.mean(axis=-2), {"xp": xp, "s": s, "counts": counts}


def _conv_reduce_backward(g_out: np.ndarray, w: np.ndarray, cache: dict):
    xp, s, counts = cache["xp"], cache["s"], cache["counts"]
    g_co = g_out[..., None, :] * (counts / s)[:, None]
    c = xp.shape[-1]
    t_len = xp.shape[-3]
    xp_flat = xp.reshape(-1, t_len, 2, c)
    g_co_flat = g_co.reshape(-1, t_len, c)
    dw = np.einsum("btuc,bto->ocu", xp_flat, g_co_flat)
    db = g_co_flat.sum(axis=(0, 1))
    g_xp = np.einsum("...to,ocu->...tuc", g_co, w)
    g_x = g_xp.reshape(*xp.shape[:-3], 2 * t_len, c)[..., :s, :]
    return g_x, dw, db


def aggregate(
    y: np.ndarray,
    w_en: np.ndarray,
    r_en_in: np.ndarray,
    proton_numbers: np.ndarray,
    store: ParamStore,
    want_cache: bool = False,
):
    """Collapse the layer-stack output (n, m, d_emb) to a 2*d_emb vector.

    Steps: (a) recover the 4 raw token features through the tokenizer
    pseudo-inverse, (b) rescale the recovered distance channel to the input
    distances' mean/std, (c) amplify y by exp(-r_en) * N_p, (d) FC to 2*d_emb,
    (e) mean + conv reduction over the nucleus axis, (f) normalize and damp
    by exp(-r_e), (g) mean + conv reduction over the electron axis,
    (h) normalize and damp by exp(-mean r_e).
    """
    n, m, d = y.shape
    cond = np.linalg.cond(w_en)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(f"tokenizer weights condition number {cond:.3e}")
    rec = y @ np.linalg.pinv(w_en)  # (n, m, 4)
    r_out = rec[..., 3]
    sd_out = float(r_out.std())
    if sd_out < 1e-12:
        raise DegenerateScaleError(f"recovered distance spread {sd_out:.3e}")
    r_en = float(r_en_in.std()) * (r_out - r_out.mean()) / sd_out + float(r_en_in.mean())

    amp = np.exp(-r_en) * proton_numbers[None, :]
    y_amp = amp[:, :, None] * y
    z = y_amp @ store["agg_fc.weight"] + store["agg_fc.bias"]

    conv_n, cc_n = _conv_reduce(z, store["conv_nuc.weight"], store["conv_nuc.bias"])
    e_out = z.mean(axis=1) + conv_n
    h1, ln_e = layer_norm(e_out, store["agg_norm_e.scale"], store["agg_norm_e.shift"])
    r_e = r_en.mean(axis=1)
    amp_e = np.exp(-r_e)
    f_out = h1 * amp_e[:, None]

    conv_e, cc_e = _conv_reduce(f_out, store["conv_elec.weight"], store["conv_elec.bias"])
    g_vec = f_out.mean(axis=0) + conv_e
    h2, ln_o = layer_norm(g_vec, store["agg_norm_out.scale"], store["agg_norm_out.shift"])
    amp_r = float(np.exp(-r_e.mean()))
    out = h2 * amp_r

    if not want_cache:
        return out
    cache = {
        "rec": rec,
        "r_en": r_en,
        "y_amp": y_amp,
        "conv_n": cc_n,
        "ln_e": ln_e,
        "amp_e": amp_e,
        "f_out": f_out,
        "conv_e": cc_e,
        "ln_o": ln_o,
        "amp_r": amp_r,
        "n": n,
        "m": m,
    }
    return out, cache


# ---------------------------------------------------------------------------
# state assembly and energy
# ---------------------------------------------------------------------------

def assemble_state(
    agg: np.ndarray, weight: np.ndarray, bias: np.ndarray, hf_index: int
) -> np.ndarray:
    """Unit state vector from head(agg) plus the Hartree-Fock basis vector."""
    v = agg @ weight + bias
    v = v.copy()
    v[hf_index] += 1.0
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise DegenerateStateError(f"assembled vector norm {nrm:.3e}")
    return v / nrm


def _check_match(mol: MoleculeSpec, h: QubitHamiltonian) -> None:
    if h.n_qubits != mol.n_q:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, molecule expects {mol.n_q}")
    if h.molecule and h.molecule != mol.name:
        raise ValueError(f"Hamiltonian for {h.molecule!r}, molecule is {mol.name!r}")


def _layer_stack(tokens: np.ndarray, mol: MoleculeSpec, store: ParamStore, max_branches):
    n_p = mol.proton_numbers
    for l in range(store.n_layers):
        lp = store.layer(l)
        if store.kind == "quantum":
            tokens = qt_layer(tokens, lp, n_p, max_branches)
        else:
            tokens = classical_layer(tokens, lp)
    return tokens


def energy_forward(
    mol: MoleculeSpec,
    r: float,
    h: QubitHamiltonian,
    store: ParamStore,
    max_branches: int | None = 4,
) -> float:
    """Energy expectation of the assembled state under h, in Hartree."""
    _check_match(mol, h)
    tokens, _, r_en_in = tokenize(mol, r, store)
    y = _layer_stack(tokens, mol, store, max_branches)
    agg = aggregate(y, store["w_en"], r_en_in, mol.proton_numbers, store)
    weight, bias = store.head(mol.name)
    state = assemble_state(agg, weight, bias, h.hf_index)
    return float(expectation(h, state))


def forward_cached(
    mol: MoleculeSpec,
    r: float,
    h: QubitHamiltonian,
    store: ParamStore,
    max_branches: int | None = 4,
) -> tuple[float, dict]:
    """energy_forward that also returns the downstream-gradient tape."""
    _check_match(mol, h)
    tokens, _, r_en_in = tokenize(mol, r, store)
    y = _layer_stack(tokens, mol, store, max_branches)
    agg, cache = aggregate(y, store["w_en"], r_en_in, mol.proton_numbers, store, want_cache=True)
    weight, bias = store.head(mol.name)
    v = agg @ weight + bias
    v = v.copy()
    v[h.hf_index] += 1.0
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise DegenerateStateError(f"assembled vector norm {nrm:.3e}")
    state = v / nrm
    energy = float(expectation(h, state))
    cache.update({"agg": agg, "v": v, "energy": energy})
    return energy, cache


def downstream_gradient(
    mol: MoleculeSpec, h: QubitHamiltonian, store: ParamStore, cache: dict
) -> dict[str, np.ndarray]:
    """Exact gradients of the cached energy w.r.t. every downstream tensor,
    by reverse accumulation through aggregation steps (c)-(h), the state
    assembly, and the Rayleigh quotient."""
    v = cache["v"]
    energy = cache["energy"]
    hv = np.real(apply_hamiltonian(h, v.astype(complex)))
    g_v = 2.0 * (hv - energy * v) / float(v @ v)

    weight, _ = store.head(mol.name)
    grads: dict[str, np.ndarray] = {
        f"final_fc.{mol.name}.weight": np.outer(cache["agg"], g_v),
        f"final_fc.{mol.name}.bias": g_v.copy(),
    }
    g_agg = weight @ g_v

    # (h) normalize + damp
    xhat_o, inv_o = cache["ln_o"]
    g_h2 = g_agg * cache["amp_r"]
    g_gvec, dscale_o, dshift_o = _layer_norm_backward(
        g_h2, store["agg_norm_out.scale"], xhat_o, inv_o
    )
    grads["agg_norm_out.scale"] = dscale_o
    grads["agg_norm_out.shift"] = dshift_o

    # (g) mean + conv over electrons
    n = cache["n"]
    g_f_conv, dw_e, db_e = _conv_reduce_backward(g_gvec, store["conv_elec.weight"], cache["conv_e"])
    grads["conv_elec.weight"] = dw_e
    grads["conv_elec.bias"] = db_e
    g_f = g_f_conv + g_gvec[None, :] / n

    # (f) normalize + damp
    xhat_e, inv_e = cache["ln_e"]
    g_h1 = g_f * cache["amp_e"][:, None]
    g_eout, dscale_e, dshift_e = _layer_norm_backward(
        g_h1, store["agg_norm_e.scale"], xhat_e, inv_e
    )
    grads["agg_norm_e.scale"] = dscale_e
    grads["agg_norm_e.shift"] = dshift_e

    # (e) mean + conv over nuclei
    m = cache["m"]
    g_z_conv, dw_n, db_n = _conv_reduce_backward(g_eout, store["conv_nuc.weight"], cache["conv_n"])
    grads["conv_nuc.weight"] = dw_n
    grads["conv_nuc.bias"] = db_n
    g_z = g_z_conv + g_eout[:, None, :] / m

    # (d) FC
    y_amp = cache["y_amp"]
    grads["agg_fc.weight"] = np.einsum("nmd,nmo->do", y_amp, g_z)
    grads["agg_fc.bias"] = g_z.sum(axis=(0, 1))
    return grads
