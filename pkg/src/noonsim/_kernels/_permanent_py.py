"""Pure-Python Glynn permanent, same Gray-code order as the compiled kernel."""
import numpy as np


def permanent(a):
    """Permanent of a square complex matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("permanent requires a square matrix")
    n = a.shape[0]
    if n == 0:
        return 1 + 0j
    rows = [[complex(v) for v in row] for row in a]
    rowsum = [sum(rows[i][j] for i in range(n)) for j in range(n)]
    delta = [1] * n
    prod = 1 + 0j
    for s in rowsum:
        prod *= s
    total = prod
    sign = 1
    count = 1 << (n - 1)
    for g in range(1, count):
        k = (g & -g).bit_length()
        delta[k] = -delta[k]
        sign = -sign
        step = 2 * delta[k]
        row = rows[k]
        prod = 1 + 0j
        for j in range(n):
            rowsum[j] += step * row[j]
            prod *= rowsum[j]
        total += sign * prod
    return total / count
