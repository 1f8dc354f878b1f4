"""Numpy fallback for the compiled kernels.

Same algorithms and signatures as depctl._ext: cyclic Jacobi sweeps run
vectorized across the whole batch (one rotation index pair at a time), and
the Lindley recursion uses the prefix-minimum identity
B_t = S_t - min(0, min_{k<=t} S_k) with S the increment prefix sums.
"""

from __future__ import annotations

import numpy as np


def jacobi_eigh_batch(A: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60):
    A = np.asarray(A, dtype=np.complex128)
    b, n, _ = A.shape
    work = A.copy()
    vecs = np.broadcast_to(np.eye(n, dtype=np.complex128), (b, n, n)).copy()
    sweeps = np.zeros(b, dtype=np.int32)

    norms = np.linalg.norm(work.reshape(b, -1), axis=1)
    live_norm = np.where(norms > 0, norms, 1.0)

    idx = np.arange(b)
    for sweep in range(max_sweeps):
        off = _offdiag_mass(work)
        active = off >= tol * live_norm
        if not active.any():
            break
        sweeps[active] += 1
        for p in range(n):
            for q in range(p + 1, n):
                apq = work[:, p, q]
                r = np.abs(apq)
                rotate = active & (r > 1e-300)
                if not rotate.any():
                    continue
                sel = idx[rotate]
                rr = r[sel]
                w = apq[sel] / rr
                wc = np.conj(w)
                app = work[sel, p, p].real
                aqq = work[sel, q, q].real
                with np.errstate(over="ignore"):
                    tau = (aqq - app) / (2.0 * rr)
                    t = np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(tau == 0.0, 1.0, t)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cs = c[:, None]
                ss = s[:, None]
                # columns: A <- A G
                xp = work[sel, :, p]
                xq = work[sel, :, q]
                work[sel, :, p] = cs * xp - ss * wc[:, None] * xq
                work[sel, :, q] = ss * xp + cs * wc[:, None] * xq
                # rows: A <- G* A
                xp = work[sel, p, :]
                xq = work[sel, q, :]
                work[sel, p, :] = cs * xp - ss * w[:, None] * xq
                work[sel, q, :] = ss * xp + cs * w[:, None] * xq
                work[sel, p, q] = 0.0
                work[sel, q, p] = 0.0
                work[sel, p, p] = work[sel, p, p].real
                work[sel, q, q] = work[sel, q, q].real
                xp = vecs[sel, :, p]
                xq = vecs[sel, :, q]
                vecs[sel, :, p] = cs * xp - ss * wc[:, None] * xq
                vecs[sel, :, q] = ss * xp + cs * wc[:, None] * xq

    vals = np.einsum("bii->bi", work).real.copy()
    order = np.argsort(vals, axis=1, kind="stable")
    vals_sorted = np.take_along_axis(vals, order, axis=1)
    vecs_sorted = np.take_along_axis(vecs, order[:, None, :], axis=2)
    return vals_sorted, vecs_sorted, sweeps


def _offdiag_mass(work: np.ndarray) -> np.ndarray:
    # summed directly (not total minus diagonal: that cancellation floors the
    # result near sqrt(eps) * norm and convergence would never trigger)
    b, n, _ = work.shape
    abs2 = np.abs(work) ** 2
    idx = np.arange(n)
    abs2[:, idx, idx] = 0.0
    return np.sqrt(abs2.sum(axis=(1, 2)))


def lindley_batch(increments: np.ndarray) -> np.ndarray:
    x = np.asarray(increments, dtype=np.float64)
    prefix = np.cumsum(x, axis=1)
    running_min = np.minimum.accumulate(np.minimum(prefix, 0.0), axis=1)
    return prefix - running_min
