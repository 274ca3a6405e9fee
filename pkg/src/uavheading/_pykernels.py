"""Pure numpy implementations of the batched SINR kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not built or when ``UAVSIM_BACKEND=python``.
"""
import numpy as np


def sinr_batch(h, rho):
    """Max-SINR output SINR for every user of every channel realization.

    Parameters
    ----------
    h : complex array, shape (S, N, M)
        Path-loss scaled channels.
    rho : float
        Transmit power over noise power, P_t / sigma^2.

    Returns
    -------
    float array, shape (S, N)
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    s, n, m = h.shape
    outer = h[..., :, None] * h[..., None, :].conj()
    total = np.eye(m) + rho * outer.sum(axis=1)
    q = total[:, None] - rho * outer
    x = np.linalg.solve(q, h[..., None])[..., 0]
    return rho * np.einsum("snm,snm->sn", h.conj(), x).real


def jensen_bound_batch(a, r, gain, los_power, scatter_power):
    """Jensen lower bound on E{SINR} for every user at every candidate pose.

    Parameters
    ----------
    a : complex array, shape (G, N, M)
        Unit-modulus LOS steering vectors.
    r : complex array, shape (G, N, M, M)
        Receive correlation matrices.
    gain : float array, shape (G, N)
        rho / d^(2 alpha) per user.
    los_power, scatter_power : float
        K/(1+K) and 1/(1+K).
    """
    a = np.asarray(a, dtype=np.complex128)
    r = np.asarray(r, dtype=np.complex128)
    gain = np.asarray(gain, dtype=float)
    m = a.shape[-1]
    cov = los_power * (a[..., :, None] * a[..., None, :].conj()) + scatter_power * r
    weighted = gain[..., None, None] * cov
    eq = np.eye(m) + weighted.sum(axis=1, keepdims=True) - weighted
    rhs = np.concatenate([a[..., None], r], axis=-1)
    x = np.linalg.solve(eq, rhs)
    quad = np.einsum("gnm,gnm->gn", a.conj(), x[..., 0]).real
    trace = np.trace(x[..., 1:], axis1=-2, axis2=-1).real
    return gain * (los_power * quad + scatter_power * trace)
