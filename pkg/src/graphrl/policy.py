"""Trainable policy: message-passing embedding, node scorer, exact gradients.

The embedding runs L recurrent layers. Per layer, each rank aggregates the
embeddings of locally-owned neighbor rows with one sparse product, the
partial neighbor sums are combined with one sum-all-reduce, and the node
update is relu(t1 * s_v + t3 relu(t2 * deg_v) + t4 * nbr_sum_v). The scorer
combines the all-reduced global embedding sum with each node's own embedding:
score_v = t7^T relu([t5 g ; t6 e_v]). Gradients are hand-derived for this
fixed architecture and back-propagated through the collectives (the adjoint
of a sum-all-reduce is a sum-all-reduce of adjoints).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .state import PartitionedState

PARAM_NAMES = ("theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "theta7")

_CKPT_MAGIC = b"GRLP"
_CKPT_VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def param_shapes(k: int) -> dict[str, tuple[int, int]]:
    return {
        "theta1": (k, 1),
        "theta2": (k, 1),
        "theta3": (k, k),
        "theta4": (k, k),
        "theta5": (k, k),
        "theta6": (k, k),
        "theta7": (2 * k, 1),
    }


@dataclass
class PolicyParams:
    """The seven trainable matrices plus embedding width K and depth L."""
    theta1: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray
    theta4: np.ndarray
    theta5: np.ndarray
    theta6: np.ndarray
    theta7: np.ndarray
    num_layers: int

    @property
    def embed_dim(self) -> int:
        return self.theta1.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.theta1.dtype

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        k = self.theta1.shape[0]
        expected = param_shapes(k)
        for name in PARAM_NAMES:
            arr = getattr(self, name)
            if arr.shape != expected[name]:
                raise ValueError(
                    f"{name} must have shape {expected[name]}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if self.num_layers < 1:
            raise ValueError(f"num_layers must be >= 1, got {self.num_layers}")

    @classmethod
    def initialize(cls, embed_dim: int, num_layers: int, seed: int,
                   scale: float = 0.05, dtype=np.float32,
                   orientation: str = "positive") -> "PolicyParams":
        """Seeded uniform init, identical on every rank.

        orientation "positive" draws the own-embedding scorer pathway
        (theta6 and the matching half of theta7) from uniform(0, scale), so
        the untrained score is monotone increasing in a node's embedding
        and greedy play starts out favoring structurally active nodes
        instead of flipping a seed-dependent coin between degree-first and
        leaves-first. "symmetric" draws every matrix from
        uniform(-scale, scale).
        """
        if orientation not in ("positive", "symmetric"):
            raise ValueError(f"unknown init orientation {orientation!r}")
        rng = np.random.default_rng(seed)
        shapes = param_shapes(embed_dim)
        arrays = {name: rng.uniform(-scale, scale, shapes[name]).astype(dtype)
                  for name in PARAM_NAMES}
        if orientation == "positive":
            arrays["theta6"] = np.abs(arrays["theta6"])
            arrays["theta7"][embed_dim:] = np.abs(arrays["theta7"][embed_dim:])
        return cls(num_layers=num_layers, **arrays)

    def astype(self, dtype) -> "PolicyParams":
        return PolicyParams(
            num_layers=self.num_layers,
            **{name: getattr(self, name).astype(dtype) for name in PARAM_NAMES})

    def copy(self) -> "PolicyParams":
        return self.astype(self.dtype)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


def zero_grads(params: PolicyParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}


def flatten_arrays(arrays: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([arrays[name].ravel() for name in PARAM_NAMES])


def unflatten_arrays(vec: np.ndarray, k: int) -> dict[str, np.ndarray]:
    shapes = param_shapes(k)
    out = {}
    offset = 0
    for name in PARAM_NAMES:
        size = shapes[name][0] * shapes[name][1]
        out[name] = vec[offset:offset + size].reshape(shapes[name]).copy()
        offset += size
    return out


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def _embed_forward_impl(state: PartitionedState, params: PolicyParams, comm,
                        keep_tape: bool):
    """Shared forward: returns (embed, tape or None).

    embed is (B, K, rows) for the locally owned nodes, after exactly L
    rounds each doing one local sparse aggregation and one sum-all-reduce
    of the (B, K, N) partial neighbor sums.
    """
    dtype = params.dtype
    part = state.part
    b, rows, n = state.batch, part.num_rows, state.num_nodes
    k = params.embed_dim

    sol = state.sol.astype(dtype)                          # (B, rows)
    deg = state.local_degrees().astype(dtype)              # (B, rows)
    w = _relu(params.theta2[:, 0][None, :, None] * deg[:, None, :])  # (B,K,rows)
    e1 = params.theta1[:, 0][None, :, None] * sol[:, None, :]
    e2 = np.matmul(params.theta3, w)

    h = np.zeros((b, k, rows), dtype=dtype)
    masks = []
    m_locs = []
    for _ in range(params.num_layers):
        partial = state.spmm(h)                            # (B, K, N)
        nbr = comm.all_reduce_sum(partial, tag="embed_fwd")
        m_loc = nbr[:, :, part.row_start:part.row_stop]
        z = e1 + e2 + np.matmul(params.theta4, m_loc)
        if keep_tape:
            masks.append(z > 0)
            m_locs.append(m_loc)
        h = _relu(z)
    tape = None
    if keep_tape:
        tape = {"sol": sol, "deg": deg, "w": w, "masks": masks, "m_locs": m_locs,
                "embed": h}
    return h, tape


def embed_forward(state: PartitionedState, params: PolicyParams, comm) -> np.ndarray:
    """(B, K, rows) embeddings of the locally owned nodes."""
    embed, _ = _embed_forward_impl(state, params, comm, keep_tape=False)
    return embed


def _q_forward_impl(embed: np.ndarray, cand: np.ndarray, params: PolicyParams,
                    comm, keep_tape: bool):
    """Shared scorer: returns (scores (B, rows), tape or None).

    cand acts as the sparse-diagonal extractor: non-candidate nodes are
    scored with a zeroed own-embedding term. Masking to -inf happens at
    selection time, not here.
    """
    dtype = params.dtype
    k = params.embed_dim
    cand = cand.astype(dtype)
    partial_sum = embed.sum(axis=2)                        # (B, K)
    g = comm.all_reduce_sum(partial_sum, tag="q_fwd")      # (B, K)
    u1 = g @ params.theta5.T                               # (B, K)
    cand_embed = embed * cand[:, None, :]                  # (B, K, rows)
    u2 = np.matmul(params.theta6, cand_embed)              # (B, K, rows)
    pre = np.concatenate(
        [np.broadcast_to(u1[:, :, None], u2.shape), u2], axis=1)  # (B, 2K, rows)
    r = _relu(pre)
    scores = np.einsum("bjv,j->bv", r, params.theta7[:, 0])
    tape = None
    if keep_tape:
        tape = {"g": g, "cand": cand, "pre": pre, "r": r, "embed": embed}
    return scores, tape


def q_forward(embed: np.ndarray, cand: np.ndarray, params: PolicyParams,
              comm) -> np.ndarray:
    """(B, rows) scores for every locally owned node."""
    scores, _ = _q_forward_impl(embed, cand, params, comm, keep_tape=False)
    return scores


def masked_scores(scores: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Scores with non-candidates pushed to -inf, ready for selection."""
    neg = np.array(-np.inf, dtype=scores.dtype)
    return np.where(cand.astype(bool), scores, neg)


# ---------------------------------------------------------------------------
# Loss and exact gradients
# ---------------------------------------------------------------------------


def loss_and_gradients(state: PartitionedState, actions, targets,
                       params: PolicyParams, comm):
    """Mean squared error of Q(s_t, v_t) against stored targets, with grads.

    actions are global node indices, one per batched graph; each is scored
    on the rank that owns its row (the candidate extractor is the one-hot
    action vector, so exactly that column carries the Q value). Returns
    (loss, grads) where grads maps each parameter name to an array identical
    on every rank after the final gradient all-reduce.
    """
    part = state.part
    b, rows, n = state.batch, part.num_rows, state.num_nodes
    k = params.embed_dim
    dtype = params.dtype
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=dtype)
    if actions.shape != (b,) or targets.shape != (b,):
        raise ValueError(f"need {b} actions and targets, got "
                         f"{actions.shape} and {targets.shape}")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    if np.any(actions < 0) or np.any(actions >= n):
        raise ValueError("action node index out of range")

    onehot = np.zeros((b, rows), dtype=np.uint8)
    owned = (actions >= part.row_start) & (actions < part.row_stop)
    a_loc = actions - part.row_start
    for i in np.flatnonzero(owned):
        onehot[i, a_loc[i]] = 1

    embed, etape = _embed_forward_impl(state, params, comm, keep_tape=True)
    scores, qtape = _q_forward_impl(embed, onehot, params, comm, keep_tape=True)

    grads = zero_grads(params)
    d_embed = np.zeros_like(embed)
    dg = np.zeros((b, k), dtype=dtype)
    sq_err_local = 0.0
    for i in np.flatnonzero(owned):
        col = a_loc[i]
        q_pred = scores[i, col]
        err = q_pred - targets[i]
        sq_err_local += float(err) ** 2
        delta = 2.0 * err / b
        pre_col = qtape["pre"][i, :, col]                  # (2K,)
        r_col = qtape["r"][i, :, col]
        dpre = delta * params.theta7[:, 0] * (pre_col > 0)
        grads["theta7"] += (delta * r_col)[:, None]
        d_alpha, d_beta = dpre[:k], dpre[k:]
        grads["theta5"] += np.outer(d_alpha, qtape["g"][i])
        grads["theta6"] += np.outer(d_beta, embed[i, :, col])
        dg[i] = params.theta5.T @ d_alpha
        d_embed[i, :, col] += params.theta6.T @ d_beta

    # g = sum over all nodes of embed: its adjoint reaches every rank's
    # columns, so the per-rank contributions are summed first.
    dg_all = comm.all_reduce_sum(dg, tag="q_bwd")
    d_embed += dg_all[:, :, None]

    dw_acc = np.zeros_like(etape["w"])
    grad_h = d_embed
    for layer in range(params.num_layers - 1, -1, -1):
        dz = grad_h * etape["masks"][layer]
        grads["theta1"][:, 0] += np.einsum("bkv,bv->k", dz, etape["sol"])
        grads["theta3"] += np.einsum("bkv,bjv->kj", dz, etape["w"])
        dw_acc += np.matmul(params.theta3.T, dz)
        grads["theta4"] += np.einsum("bkv,bjv->kj", dz, etape["m_locs"][layer])
        if layer == 0:
            break  # layer-0 input embeddings are the zero constant
        dm_loc = np.matmul(params.theta4.T, dz)            # (B, K, rows)
        dm_partial = np.zeros((b, k, n), dtype=dtype)
        dm_partial[:, :, part.row_start:part.row_stop] = dm_loc
        dm_all = comm.all_reduce_sum(dm_partial, tag="embed_bwd")
        grad_h = state.spmm_t(dm_all)
    grads["theta2"][:, 0] = np.einsum(
        "bkv,bv->k", dw_acc * (etape["w"] > 0), etape["deg"])

    # One gradient all-reduce per training iteration; the squared-error
    # partial rides along as a final extra element.
    packed = np.concatenate([flatten_arrays(grads),
                             np.array([sq_err_local], dtype=np.float64)])
    reduced = comm.all_reduce_sum(packed, tag="grad")
    grads = unflatten_arrays(reduced[:-1].astype(dtype), k)
    loss = float(reduced[-1]) / b
    return loss, grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for Adam."""
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 1e-5

    @classmethod
    def create(cls, params: PolicyParams, lr: float = 1e-5) -> "AdamState":
        return cls(m=zero_grads(params), v=zero_grads(params), lr=lr)


def adam_step(params: PolicyParams, grads: dict[str, np.ndarray],
              state: AdamState) -> None:
    """One bias-corrected Adam update, in place.

    Rejects non-finite gradients before touching any accumulator, so a bad
    step leaves parameters and moments untouched.
    """
    for name in PARAM_NAMES:
        if not np.all(np.isfinite(grads[name])):
            raise ValueError(f"non-finite gradient for {name}; step rejected")
    state.step += 1
    b1c = 1.0 - state.beta1 ** state.step
    b2c = 1.0 - state.beta2 ** state.step
    for name in PARAM_NAMES:
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1 - state.beta2) * g * g
        m_hat = state.m[name] / b1c
        v_hat = state.v[name] / b2c
        arr = getattr(params, name)
        arr -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(arr.dtype)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(params: PolicyParams, path) -> None:
    """Binary checkpoint: magic, version, K, L, dtype code, row-major arrays."""
    path = Path(path)
    code = _DTYPE_CODES.get(params.dtype)
    if code is None:
        raise ValueError(f"unsupported checkpoint dtype {params.dtype}")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<III B", _CKPT_VERSION, params.embed_dim,
                             params.num_layers, code))
        for name in PARAM_NAMES:
            fh.write(np.ascontiguousarray(getattr(params, name)).tobytes())


def load_checkpoint(path) -> PolicyParams:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CKPT_MAGIC:
            raise DataError(f"{path}: not a policy checkpoint (magic {magic!r})")
        version, k, layers, code = struct.unpack("<III B", fh.read(13))
        if version != _CKPT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        if code not in _CODE_DTYPES:
            raise DataError(f"{path}: unknown dtype code {code}")
        dtype = _CODE_DTYPES[code]
        shapes = param_shapes(k)
        arrays = {}
        for name in PARAM_NAMES:
            shape = shapes[name]
            nbytes = shape[0] * shape[1] * dtype.itemsize
            buf = fh.read(nbytes)
            if len(buf) != nbytes:
                raise DataError(f"{path}: truncated checkpoint at {name}")
            arrays[name] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise DataError(f"{path}: trailing bytes after parameters")
    return PolicyParams(num_layers=layers, **arrays)
