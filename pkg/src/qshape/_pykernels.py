"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``.

Same arithmetic, same decision order, so both backends decode a given
uniform stream into the same paths.
"""

import math

import numpy as np


def _logaddexp(x, y):
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    if x >= y:
        return x + math.log1p(math.exp(y - x))
    return y + math.log1p(math.exp(x - y))


def logz_table(a, b, logq):
    out = np.zeros((a + 1, b + 1), dtype=np.float64)
    prev = [0.0] * (b + 1)
    for i in range(1, a + 1):
        row = [0.0] * (b + 1)
        for j in range(1, b + 1):
            row[j] = _logaddexp(row[j - 1], j * logq + prev[j])
        out[i] = row
        prev = row
    return out


def sample_paths(table, logq, uniforms):
    table = np.ascontiguousarray(table, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    a = table.shape[0] - 1
    b = table.shape[1] - 1
    if uniforms.shape[1] != a + b:
        raise ValueError("uniforms must have a + b columns")
    rows = table.tolist()
    out = np.empty(uniforms.shape, dtype=np.int8)
    for r, u in enumerate(uniforms.tolist()):
        ar, br = a, b
        steps = [0] * (a + b)
        for p in range(a + b - 1, -1, -1):
            if ar == 0:
                p_down = 0.0
            elif br == 0:
                p_down = 1.0
            else:
                p_down = min(1.0, math.exp(br * logq + rows[ar - 1][br] - rows[ar][br]))
            if u[p] < p_down:
                steps[p] = -1
                ar -= 1
            else:
                steps[p] = 1
                br -= 1
        out[r] = steps
    return out
