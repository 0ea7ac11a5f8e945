"""Regenerates the Shapiro-Wilk reference table used by tests/oracles.rs.

Each sample is a closed-form sequence so the Rust side can rebuild it
without shipping data files.
"""
import numpy as np
from scipy import stats

PHI = 0.6180339887498949


def frac(x):
    return x - np.floor(x)


def samples():
    i = lambda n: np.arange(n, dtype=float)
    q20 = stats.norm.ppf((i(20) + 1) / 21)
    return [
        q20,
        np.exp(q20),
        np.array([1.0, 2.0, 4.0]),
        np.array([0.1, 0.5, 0.6, 2.0]),
        frac(i(5) * PHI),
        i(7) ** 2,
        np.sin(i(11) * 1.7),
        np.sin(i(12) * 1.7) + 0.05 * i(12),
        np.log(i(15) + 1),
        2 * frac(i(25) * 0.7548776662) - 1,
        np.sin(i(30) * 0.9) ** 3,
        stats.norm.ppf((i(50) + 0.5) / 50) + 0.3 * np.sin(i(50) * 2.1),
        np.mod(i(64), 7),
        np.exp(0.5 * stats.norm.ppf((i(100) + 1) / 101)),
        stats.norm.ppf(frac(i(150) * PHI) * 0.98 + 0.01) ** 3,
        np.sqrt(i(200)),
        np.sin(i(333)) * np.cos(i(333) * 0.37),
        stats.norm.ppf(frac(i(500) * PHI) * 0.98 + 0.01),
        stats.norm.ppf((i(1000) + 0.5) / 1000) * (1 + 0.001 * i(1000)),
        frac(i(4000) * PHI) ** 2,
    ]


for k, x in enumerate(samples()):
    w, p = stats.shapiro(x)
    print(f"    ({k}, {w:.17e}, {p:.17e}),")
