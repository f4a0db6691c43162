"""Pure numpy twin of the compiled ``_core`` module.

Same call signatures, same in-place semantics. Pairwise sums go through a
single helper that always sees a leading batch axis, so the full system and
a batch covering every index produce identical bits.
"""

import numpy as np

KIND_CONSTANT = 0
KIND_INVPOW = 1
KIND_TABULATED = 2


def _psi(r2, kind, par, grid, vals):
    if kind == KIND_CONSTANT:
        return np.full_like(r2, par[0])
    if kind == KIND_INVPOW:
        return (1.0 + r2) ** (-par[0])
    return np.interp(np.sqrt(r2), grid, vals)


def psi_many(r2, kind, par, grid, vals):
    return _psi(np.asarray(r2, dtype=np.float64), kind, par, grid, vals)


def _pair_acc(xb, vb, kind, par, grid, vals, mask=None):
    # xb, vb: (m, p, d); entry [.., i, j, :] below is (j) minus (i)
    dx = xb[:, None, :, :] - xb[:, :, None, :]
    w = _psi((dx * dx).sum(axis=-1), kind, par, grid, vals)
    contrib = w[..., None] * (vb[:, None, :, :] - vb[:, :, None, :])
    if mask is not None:
        contrib = contrib * mask[..., None]
    return contrib.sum(axis=-2)


def full_rhs(x, v, kind, par, grid, vals, kappa, dv):
    n = x.shape[0]
    acc = _pair_acc(np.asarray(x)[None], np.asarray(v)[None], kind, par, grid, vals)[0]
    dv[...] = (kappa / (n - 1)) * acc


def batch_rhs(x, v, batch, kind, par, grid, vals, kappa, dv):
    batch = np.asarray(batch)
    p = batch.shape[0]
    acc = _pair_acc(np.asarray(x)[batch][None], np.asarray(v)[batch][None],
                    kind, par, grid, vals)[0]
    dv[batch] = (kappa / (p - 1)) * acc


def _advance_stack(xb, vb, kind, par, grid, vals, kappa, dt, nsub, mask=None, scale=None):
    if scale is None:
        scale = kappa / (xb.shape[1] - 1)
    for _ in range(nsub):
        acc = _pair_acc(xb, vb, kind, par, grid, vals, mask)
        xb = xb + dt * vb
        vb = vb + dt * (scale * acc)
    return xb, vb


def advance_full(x, v, kind, par, grid, vals, kappa, dt, nsub):
    xb, vb = _advance_stack(x[None], v[None], kind, par, grid, vals, kappa, dt, nsub)
    x[...] = xb[0]
    v[...] = vb[0]


def advance_batches(x, v, batches, kind, par, grid, vals, kappa, dt, nsub):
    for row in np.asarray(batches):
        xb, vb = _advance_stack(x[row][None], v[row][None], kind, par, grid, vals,
                                kappa, dt, nsub)
        x[row] = xb[0]
        v[row] = vb[0]


def advance_disjoint(x, v, batches, kind, par, grid, vals, kappa, dt, nsub):
    batches = np.asarray(batches)
    if batches.shape[0] == 0:
        return
    xb, vb = _advance_stack(x[batches], v[batches], kind, par, grid, vals, kappa, dt, nsub)
    x[batches] = xb
    v[batches] = vb


def advance_mc(x, v, nbrs, kind, par, grid, vals, kappa, dt, nsub):
    nbrs = np.asarray(nbrs)
    n, q = nbrs.shape
    mask = np.zeros((1, n, n))
    mask[0, np.repeat(np.arange(n), q), nbrs.ravel()] = 1.0
    xb, vb = _advance_stack(x[None], v[None], kind, par, grid, vals, kappa, dt, nsub,
                            mask=mask, scale=kappa / q)
    x[...] = xb[0]
    v[...] = vb[0]


def fisher_yates(work, offsets, out):
    m, p = offsets.shape
    for r in range(m):
        for k in range(p):
            j = k + int(offsets[r, k])
            work[k], work[j] = work[j], work[k]
            out[r, k] = work[k]
        # undo the swaps so every row starts from the same array
        for k in range(p - 1, -1, -1):
            j = k + int(offsets[r, k])
            work[k], work[j] = work[j], work[k]
