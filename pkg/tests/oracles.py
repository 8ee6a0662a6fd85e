"""Independent reference implementations used only by the test suite.

Everything here is written with explicit Python loops and scalar math (or
a third-party routine with a different algorithm), deliberately sharing no
code with the package's vectorized paths.
"""

import math


def rbf(x, y, gamma):
    d = 0.0
    for a, b in zip(x, y):
        diff = float(a) - float(b)
        d += diff * diff
    return math.exp(-gamma * d)


def kme_inner_double_loop(points_a, weights_a, points_b, weights_b, gamma):
    total = 0.0
    for i in range(len(points_a)):
        for j in range(len(points_b)):
            total += float(weights_a[i]) * float(weights_b[j]) * rbf(
                points_a[i], points_b[j], gamma
            )
    return total


def kme_sq_distance_loops(points_a, weights_a, points_b, weights_b, gamma):
    return (
        kme_inner_double_loop(points_a, weights_a, points_a, weights_a, gamma)
        - 2.0 * kme_inner_double_loop(points_a, weights_a, points_b, weights_b, gamma)
        + kme_inner_double_loop(points_b, weights_b, points_b, weights_b, gamma)
    )


def cosine(u, v):
    num = sum(float(a) * float(b) for a, b in zip(u, v))
    nu = math.sqrt(sum(float(a) * float(a) for a in u))
    nv = math.sqrt(sum(float(b) * float(b) for b in v))
    return num / (nu * nv)


def task_match_triple_loop(spec_images, spec_prompts, req_images, req_captions, gamma,
                           weighted=True):
    """Brute-force expansion of the per-example weighted-mixture distance."""
    n_m = len(spec_images)
    n_t = len(req_images)
    total = 0.0
    for i in range(n_t):
        if weighted:
            w = [cosine(spec_prompts[j], req_captions[i]) for j in range(n_m)]
        else:
            w = [1.0] * n_m
        s = 0.0
        for j in range(n_m):
            for jp in range(n_m):
                s += w[j] * w[jp] * rbf(spec_images[j], spec_images[jp], gamma)
        s /= n_m * n_m
        cross = 0.0
        for j in range(n_m):
            cross += w[j] * rbf(spec_images[j], req_images[i], gamma)
        s -= 2.0 * cross / n_m
        s += 1.0  # k(z_i, z_i) with an RBF kernel
        total += s
    return total / n_t
