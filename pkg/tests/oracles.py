"""Independent reference computations used only by the tests.

None of these reuse the code paths they check: IoU is estimated by sampling
points against box-local coordinates, KL by grid quadrature of the densities,
minimum-area rectangles by scipy's hull, and the assigner by a plain-Python
reimplementation that materializes every stage.
"""
import math

import numpy as np
from scipy.spatial import ConvexHull


def inside_box(box, pts):
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = pts[:, 0] - box.cx, pts[:, 1] - box.cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (np.abs(u) <= box.w / 2) & (np.abs(v) <= box.h / 2)


def mc_iou(a, b, n=1_000_000, rng=None):
    """Monte-Carlo IoU: sample uniformly over a square containing both boxes."""
    rng = np.random.default_rng(0) if rng is None else rng
    ra = math.hypot(a.w, a.h) / 2
    rb = math.hypot(b.w, b.h) / 2
    lo = np.array([min(a.cx - ra, b.cx - rb), min(a.cy - ra, b.cy - rb)])
    hi = np.array([max(a.cx + ra, b.cx + rb), max(a.cy + ra, b.cy + rb)])
    pts = rng.uniform(lo, hi, size=(n, 2))
    ia, ib = inside_box(a, pts), inside_box(b, pts)
    union = np.count_nonzero(ia | ib)
    return np.count_nonzero(ia & ib) / union if union else 0.0


def gauss_pdf(mu, sigma, x, y):
    inv = np.linalg.inv(sigma)
    dx, dy = x - mu[0], y - mu[1]
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dy + inv[1, 1] * dy * dy
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(sigma)))


def log_gauss_pdf(mu, sigma, x, y):
    inv = np.linalg.inv(sigma)
    dx, dy = x - mu[0], y - mu[1]
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dy + inv[1, 1] * dy * dy
    return -0.5 * q - math.log(2 * math.pi * math.sqrt(np.linalg.det(sigma)))


def quad_kld(a, b, n=801, span=8.0):
    """KL(a || b) by midpoint quadrature over +-span std of ``a``."""
    sd = np.sqrt(np.diag(a.sigma)) * span
    xs = np.linspace(a.mu[0] - sd[0], a.mu[0] + sd[0], n)
    ys = np.linspace(a.mu[1] - sd[1], a.mu[1] + sd[1], n)
    x, y = np.meshgrid(xs, ys)
    la = log_gauss_pdf(a.mu, a.sigma, x, y)
    lb = log_gauss_pdf(b.mu, b.sigma, x, y)
    integrand = np.exp(la) * (la - lb)
    return float(np.trapezoid(np.trapezoid(integrand, xs, axis=1), ys))


def brute_min_area(points):
    """Minimum enclosing-rectangle area over every hull-edge orientation."""
    pts = np.asarray(points, dtype=float)
    hull = pts[ConvexHull(pts).vertices]
    best = math.inf
    for i in range(len(hull)):
        e = hull[(i + 1) % len(hull)] - hull[i]
        t = math.atan2(e[1], e[0])
        rot = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
        p = hull @ rot.T
        best = min(best, float(np.ptp(p[:, 0]) * np.ptp(p[:, 1])))
    return best, float(ConvexHull(pts).volume)


def reference_assign(priors, gts, preds, cfg, div_fn, iou_fn):
    """Exhaustive three-stage reference assignment.

    Returns (labels, cps, mps, fps) with labels as a Python list.
    ``div_fn(prior_gaussian, gt_gaussian)`` and ``iou_fn(box_a, box_b)`` are
    the scalar building blocks, each checked against its own oracle.
    """
    n = len(priors)
    all_priors = [priors.prior(j) for j in range(n)]
    cps, mps, fps_raw, mixes = [], [], [], []
    thr = math.exp(-cfg.g)
    for gt in gts:
        scored = [(div_fn(p.gaussian, gt.gaussian), j) for j, p in enumerate(all_priors)]
        scored.sort()
        c = [j for _, j in scored[: cfg.k]]
        pts = [(0.5 * preds[j].cls_score + 0.5 * iou_fn(preds[j].box, gt.box), j) for j in c]
        pts.sort(key=lambda t: (-t[0], t[1]))
        m = [j for _, j in pts[: cfg.q]]
        if m:
            sx = sum(all_priors[j].s_dynamic[0] for j in m) / len(m)
            sy = sum(all_priors[j].s_dynamic[1] for j in m) / len(m)
        else:
            sx, sy = gt.box.cx, gt.box.cy
        inv = np.linalg.inv(gt.gaussian.sigma)

        def mix(loc, inv=inv, gt=gt, sx=sx, sy=sy):
            total = 0.0
            for w, (mx, my) in ((cfg.w1, (gt.box.cx, gt.box.cy)), (1 - cfg.w1, (sx, sy))):
                d = np.array([loc[0] - mx, loc[1] - my])
                total += w * math.exp(-0.5 * float(d @ inv @ d))
            return total

        f = [j for j in m if mix(all_priors[j].s_dynamic) >= thr]
        cps.append(c)
        mps.append(m)
        fps_raw.append(f)
        mixes.append(mix)
    labels = [-1] * n
    for j in range(n):
        claims = [(mixes[i](all_priors[j].s_dynamic), -i) for i in range(len(gts)) if j in fps_raw[i]]
        if claims:
            labels[j] = -max(claims)[1]
    fps = [[j for j in f if labels[j] == i] for i, f in enumerate(fps_raw)]
    return labels, cps, mps, fps


def kl_linalg(mu_a, sa, mu_b, sb):
    """Textbook KL(a || b) for 2-D normals via numpy.linalg."""
    inv_b = np.linalg.inv(sb)
    d = np.asarray(mu_b, float) - np.asarray(mu_a, float)
    return 0.5 * (np.trace(inv_b @ sa) + d @ inv_b @ d - 2
                  + math.log(np.linalg.det(sb) / np.linalg.det(sa)))


def gjsd_linalg(p, g, alpha=0.5):
    """Generalized JS divergence built from :func:`kl_linalg`."""
    inv_p, inv_g = np.linalg.inv(p.sigma), np.linalg.inv(g.sigma)
    s = np.linalg.inv((1 - alpha) * inv_p + alpha * inv_g)
    mu = s @ ((1 - alpha) * inv_p @ p.mu + alpha * inv_g @ g.mu)
    return ((1 - alpha) * kl_linalg(mu, s, p.mu, p.sigma)
            + alpha * kl_linalg(mu, s, g.mu, g.sigma))
