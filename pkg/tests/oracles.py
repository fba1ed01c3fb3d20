"""Pure-Python reference computations, independent of numpy and of corrmetric."""

import math


def corr_distance(x, y):
    mx, my = sum(x) / len(x), sum(y) / len(y)
    cx = [a - mx for a in x]
    cy = [b - my for b in y]
    dot = sum(a * b for a, b in zip(cx, cy))
    return 1.0 - abs(dot) / math.sqrt(sum(a * a for a in cx) * sum(b * b for b in cy))


def gram_is_psd(alpha, beta, gamma, tol=1e-10):
    """Sylvester-style check on all principal minors of the 3x3 cosine Gram matrix."""
    ca, cb, cc = math.cos(alpha), math.cos(beta), math.cos(gamma)
    minors2 = (1 - ca * ca, 1 - cb * cb, 1 - cc * cc)
    det = 1 + 2 * ca * cb * cc - ca * ca - cb * cb - cc * cc
    return min(minors2) >= -tol and det >= -tol


def f(t):
    return 1.0 - abs(math.cos(t))


def grid_oracle(values, tol=1e-12):
    """Brute-force enumeration of the ratio over a list of grid angles."""
    best, arg, evaluated, skipped = -1.0, None, 0, 0
    for a in values:
        for b in values:
            for c in values:
                if abs(a - b) <= c + tol and c <= a + b + tol and a + b + c <= 2 * math.pi + tol:
                    den = f(a) + f(b)
                    if den < 1e-12:
                        skipped += 1
                        continue
                    evaluated += 1
                    r = f(c) / den
                    if r > best:
                        best, arg = r, (a, b, c)
    return best, arg, evaluated, skipped


def eq2_vectors():
    """Unit zero-mean vectors in R^3 with pairwise angles pi/4, pi/4, pi/2 (X, Y, Z)."""
    x = [1 / math.sqrt(2), -1 / math.sqrt(2), 0.0]
    z = [1 / math.sqrt(6), 1 / math.sqrt(6), -2 / math.sqrt(6)]
    s = [a + b for a, b in zip(x, z)]
    n = math.sqrt(sum(v * v for v in s))
    return x, [v / n for v in s], z


def helmert(n, k):
    """k-th (1-based) orthonormal zero-mean basis vector of R^n."""
    v = [1.0] * k + [-float(k)] + [0.0] * (n - k - 1)
    s = math.sqrt(k * (k + 1))
    return [a / s for a in v]


def false_dismissal_setup(n=5):
    """Query X and corpus [Z, Y, W] where K=1 pruning from vantage Z loses Y.

    d(X, Z) = 1, d(X, Y) = d(Y, Z) = 1 - sqrt(2)/2, d(X, W) = 0.5, d(Z, W) = 1.
    """
    e1, e2, e3 = helmert(n, 1), helmert(n, 2), helmert(n, 3)
    x = e1
    z = e2
    y = [(a + b) / math.sqrt(2) for a, b in zip(e1, e2)]
    w = [0.5 * a + math.sqrt(3) / 2 * c for a, c in zip(e1, e3)]
    return x, [z, y, w]
