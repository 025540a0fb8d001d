"""Closed-form divergences between 2-D Gaussians.

Every function has a scalar form taking :class:`Gaussian2` values and an
``*_arrays`` form over stacked means ``(..., 2)`` and covariances
``(..., 2, 2)`` that broadcasts. The scalar forms call the array forms, so
both paths produce bitwise-identical numbers.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import SingularCovariance
from .geometry import MIN_DET, Gaussian2

DEFAULT_ALPHA = 0.5


class DivergenceKind(str, enum.Enum):
    KLD = "kld"
    GWD = "gwd"
    GJSD = "gjsd"


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _det(sigma):
    return sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] * sigma[..., 1, 0]


def _checked_det(sigma):
    det = _det(sigma)
    if np.any(det <= MIN_DET):
        raise SingularCovariance(f"covariance determinant <= {MIN_DET}")
    return det


def _inv(sigma, det):
    inv = np.empty(sigma.shape, dtype=float)
    inv[..., 0, 0] = sigma[..., 1, 1] / det
    inv[..., 1, 1] = sigma[..., 0, 0] / det
    inv[..., 0, 1] = -sigma[..., 0, 1] / det
    inv[..., 1, 0] = -sigma[..., 1, 0] / det
    return inv


def _matvec(m, v):
    return np.stack(
        [m[..., 0, 0] * v[..., 0] + m[..., 0, 1] * v[..., 1],
         m[..., 1, 0] * v[..., 0] + m[..., 1, 1] * v[..., 1]],
        axis=-1,
    )


def _quad(m, v):
    # v^T m v
    return (m[..., 0, 0] * v[..., 0] * v[..., 0]
            + (m[..., 0, 1] + m[..., 1, 0]) * v[..., 0] * v[..., 1]
            + m[..., 1, 1] * v[..., 1] * v[..., 1])


def _trace_prod(a, b):
    # tr(a @ b)
    return (a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0]
            + a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1])


def alpha_interpolate_arrays(mu_p, sigma_p, mu_g, sigma_g, alpha=DEFAULT_ALPHA):
    mu_p, sigma_p = np.asarray(mu_p, float), np.asarray(sigma_p, float)
    mu_g, sigma_g = np.asarray(mu_g, float), np.asarray(sigma_g, float)
    inv_p = _inv(sigma_p, _checked_det(sigma_p))
    inv_g = _inv(sigma_g, _checked_det(sigma_g))
    prec = (1 - alpha) * inv_p + alpha * inv_g
    sigma_a = _inv(prec, _det(prec))
    # keep the result exactly symmetric
    off = 0.5 * (sigma_a[..., 0, 1] + sigma_a[..., 1, 0])
    sigma_a[..., 0, 1] = off
    sigma_a[..., 1, 0] = off
    mu_a = _matvec(sigma_a, (1 - alpha) * _matvec(inv_p, mu_p) + alpha * _matvec(inv_g, mu_g))
    return mu_a, sigma_a


def kld_arrays(mu_a, sigma_a, mu_b, sigma_b):
    mu_a, sigma_a = np.asarray(mu_a, float), np.asarray(sigma_a, float)
    mu_b, sigma_b = np.asarray(mu_b, float), np.asarray(sigma_b, float)
    det_a = _checked_det(sigma_a)
    det_b = _checked_det(sigma_b)
    inv_b = _inv(sigma_b, det_b)
    diff = mu_b - mu_a
    val = 0.5 * (_trace_prod(inv_b, sigma_a) + _quad(inv_b, diff) - 2.0 + np.log(det_b) - np.log(det_a))
    return np.maximum(val, 0.0)


def gjsd_arrays(mu_p, sigma_p, mu_g, sigma_g, alpha=DEFAULT_ALPHA):
    alpha = check_alpha(alpha)
    mu_a, sigma_a = alpha_interpolate_arrays(mu_p, sigma_p, mu_g, sigma_g, alpha)
    val = (1 - alpha) * kld_arrays(mu_a, sigma_a, mu_p, sigma_p) + alpha * kld_arrays(mu_a, sigma_a, mu_g, sigma_g)
    return np.maximum(val, 0.0)


def _sqrtm_spd(sigma):
    vals, vecs = np.linalg.eigh(sigma)
    roots = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * roots[..., None, :]) @ np.swapaxes(vecs, -1, -2)


def gwd_arrays(mu_a, sigma_a, mu_b, sigma_b):
    mu_a, sigma_a = np.asarray(mu_a, float), np.asarray(sigma_a, float)
    mu_b, sigma_b = np.asarray(mu_b, float), np.asarray(sigma_b, float)
    _checked_det(sigma_a)
    _checked_det(sigma_b)
    sigma_a, sigma_b = np.broadcast_arrays(sigma_a, sigma_b)
    root_a = _sqrtm_spd(sigma_a)
    cross = _sqrtm_spd(root_a @ sigma_b @ root_a)
    diff = mu_a - mu_b
    sq = (diff[..., 0] ** 2 + diff[..., 1] ** 2
          + np.trace(sigma_a + sigma_b - 2 * cross, axis1=-2, axis2=-1))
    same = np.all(mu_a == mu_b, axis=-1) & np.all(sigma_a == sigma_b, axis=(-2, -1))
    return np.where(same, 0.0, np.sqrt(np.clip(sq, 0.0, None)))


def alpha_interpolate(p: Gaussian2, g: Gaussian2, alpha: float = DEFAULT_ALPHA) -> Gaussian2:
    """Interpolated Gaussian ``N_alpha`` between ``p`` (weight ``1 - alpha``) and ``g``."""
    mu, sigma = alpha_interpolate_arrays(p.mu, p.sigma, g.mu, g.sigma, check_alpha(alpha))
    return Gaussian2(mu, sigma)


def kld(a: Gaussian2, b: Gaussian2) -> float:
    """KL(a || b) = E_a[ln a - ln b]."""
    return float(kld_arrays(a.mu, a.sigma, b.mu, b.sigma))


def gwd(a: Gaussian2, b: Gaussian2) -> float:
    """2-Wasserstein distance (not squared) between two Gaussians."""
    return float(gwd_arrays(a.mu, a.sigma, b.mu, b.sigma))


def gjsd(p: Gaussian2, g: Gaussian2, alpha: float = DEFAULT_ALPHA) -> float:
    """Generalized Jensen-Shannon divergence.

    ``(1 - alpha) KL(N_alpha || p) + alpha KL(N_alpha || g)`` where
    ``N_alpha`` is :func:`alpha_interpolate` of ``p`` and ``g``. Symmetric
    at ``alpha = 0.5``.
    """
    return float(gjsd_arrays(p.mu, p.sigma, g.mu, g.sigma, alpha))


def divergence_arrays(kind: DivergenceKind, mu_p, sigma_p, mu_g, sigma_g, alpha=DEFAULT_ALPHA):
    """Dispatch on ``kind``; prior-side arguments first."""
    kind = DivergenceKind(kind)
    if kind is DivergenceKind.GJSD:
        return gjsd_arrays(mu_p, sigma_p, mu_g, sigma_g, alpha)
    if kind is DivergenceKind.KLD:
        return kld_arrays(mu_p, sigma_p, mu_g, sigma_g)
    return gwd_arrays(mu_p, sigma_p, mu_g, sigma_g)


def divergence(kind: DivergenceKind, p: Gaussian2, g: Gaussian2, alpha: float = DEFAULT_ALPHA) -> float:
    return float(divergence_arrays(kind, p.mu, p.sigma, g.mu, g.sigma, alpha))
