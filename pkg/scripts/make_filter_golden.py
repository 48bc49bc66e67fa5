"""Regenerate tests/data/filter_p4_sigma0.6.json in 40-digit arithmetic.

Nodes are Legendre roots refined by mpmath.findroot; the kernel is evaluated
scalar by scalar and each row divided by its sum. Nothing from frlab is used.
"""
import json
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def legendre_roots(n):
    guesses = [mp.cos(mp.pi * (4 * i + 3) / (4 * n + 2)) for i in range(n)]
    return sorted(mp.findroot(lambda x: mp.legendre(n, x), g) for g in guesses)


def filter_table(p, sigma):
    xi = legendre_roots(p + 1)
    s = mp.mpf(sigma)
    amp = mp.sqrt(6 / (mp.pi * s**2))
    rows = []
    for a in xi:
        raw = [amp * mp.exp(-6 * (a - b) ** 2 / s**2) for b in xi]
        tot = mp.fsum(raw)
        rows.append([r / tot for r in raw])
    return xi, rows


def main(out):
    xi, rows = filter_table(4, "0.6")
    data = {
        "p": 4,
        "sigma": 0.6,
        "nodes": [mp.nstr(x, 30) for x in xi],
        "S": [[mp.nstr(v, 30) for v in row] for row in rows],
    }
    Path(out).write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "tests/data/filter_p4_sigma0.6.json")
