"""Shared fixtures: the worked example maps, random generators, oracles."""

import math
import os

import numpy as np
import pytest

import conespec as cs
from conespec.maps import (Coord, Linear, Max, Min, PowerMean, Scale, Sum,
                           from_exprs, monomial)

# Five fixed seeds for the property suites; CONESPEC_SEED shifts the base.
_BASE = int(os.environ.get("CONESPEC_SEED", "0"))
SEEDS = [_BASE + s for s in (11, 23, 37, 53, 71)]


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria")


# ---------------------------------------------------------------------------
# Example maps

def make_tensor_example(a1=1.0, a2=1.0, b1=1.0, b2=1.0, b3=1.0,
                        c1=1.0, c2=1.0, c3=1.0, d1=1.0, d2=1.0, d3=1.0):
    """The order-3 tensor map with square-root coordinate combinations."""
    n = 4
    A = [[[0.0] * n for _ in range(n)] for _ in range(n)]
    A[0][0][1] = a1
    A[0][1][1] = a2
    A[1][0][0] = b1
    A[1][0][1] = b2
    A[1][1][1] = b3
    A[2][0][0] = c1
    A[2][0][1] = c2
    A[2][1][2] = c3
    A[3][0][3] = d1
    A[3][2][2] = d2
    A[3][3][3] = d3
    return cs.build_tensor_map(A)


def tensor_example_raw(params):
    """Plain-formula evaluator for the tensor example (independent oracle)."""
    a1, a2, b1, b2, b3, c1, c2, c3, d1, d2, d3 = params

    def f(x):
        x1, x2, x3, x4 = x
        return (math.sqrt(a1 * x1 * x2 + a2 * x2 ** 2),
                math.sqrt(b1 * x1 ** 2 + b2 * x1 * x2 + b3 * x2 ** 2),
                math.sqrt(c1 * x1 ** 2 + c2 * x1 * x2 + c3 * x2 * x3),
                math.sqrt(d1 * x1 * x4 + d2 * x3 ** 2 + d3 * x4 ** 2))

    return f


def make_schoen(a=(1, 1, 1, 1), b=(1, 1, 1, 1), c=(1, 1, 1, 1),
                d=(1, 1, 1, 1)):
    return cs.schoen_map(a, b, c, d)


def make_game(r1, r2, r3, r4, r5, r6, p1, p2) -> cs.GameSpec:
    """The three-state turn-based game: max controls 1, min controls 2, 3."""
    A = cs.GameAction
    return cs.GameSpec(
        controllers=("max", "min", "min"),
        actions=(
            (A(r1, (1.0, 0.0, 0.0)), A(r2, (p1, 1.0 - p1, 0.0))),
            (A(r3, (0.0, 1.0, 0.0)), A(r4, (p2, 0.0, 1.0 - p2))),
            (A(r5, (0.0, 0.0, 1.0)), A(r6, (1.0, 0.0, 0.0))),
        ))


GAME_CONEMAP_TEXT = """\
format: 1
dim: 3
param r1 = {r1}
param r2 = {r2}
param r3 = {r3}
param r4 = {r4}
param r5 = {r5}
param r6 = {r6}
param p1 = {p1}
param p2 = {p2}
coord 1: max(2.718281828459045^r1*x1, 2.718281828459045^r2*x1^p1*x2^(1-p1))
coord 2: min(2.718281828459045^r3*x2, 2.718281828459045^r4*x1^p2*x3^(1-p2))
coord 3: min(2.718281828459045^r5*x3, 2.718281828459045^r6*x1)
"""


def game_conjugate_text(r1, r2, r3, r4, r5, r6, p1, p2):
    return GAME_CONEMAP_TEXT.format(r1=r1, r2=r2, r3=r3, r4=r4, r5=r5,
                                    r6=r6, p1=p1, p2=p2)


# ---------------------------------------------------------------------------
# Random generators

def random_interior(rng, n, lo=0.2, hi=5.0) -> cs.ExtVec:
    return cs.ExtVec.interior(rng.uniform(lo, hi, size=n))


def random_mplus_map(rng, n) -> cs.ConeMap:
    """A random map whose coordinates are sums of nonneg-exponent means."""
    exprs = []
    for _ in range(n):
        terms = []
        for _ in range(rng.integers(1, 4)):
            k = int(rng.integers(1, n + 1))
            support = rng.choice(n, size=k, replace=False)
            weights = rng.uniform(0.2, 1.0, size=k)
            weights = tuple(float(w) for w in weights / weights.sum())
            r = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
            if k == 1:
                node = Coord(int(support[0]))
            else:
                node = PowerMean(r, weights,
                                 tuple(Coord(int(j)) for j in support))
            coeff = float(rng.uniform(0.3, 2.0))
            terms.append(Scale(coeff, node) if coeff != 1.0 else node)
        exprs.append(terms[0] if len(terms) == 1 else Sum(tuple(terms)))
    return from_exprs(exprs, n)


def random_irreducible_matrix(rng, n):
    """Nonnegative matrix containing a full cycle, hence irreducible."""
    mat = np.where(rng.random((n, n)) < 0.5, rng.uniform(0.1, 3.0, (n, n)), 0.0)
    for i in range(n):
        mat[i][(i + 1) % n] = rng.uniform(0.2, 2.0)
    return mat


# ---------------------------------------------------------------------------
# Oracles

def perron_oracle(rows) -> float:
    """Dense spectral radius of a nonnegative matrix (independent route)."""
    return float(max(abs(np.linalg.eigvals(np.asarray(rows, dtype=float)))))


def block_radius_oracle(g, tol=1e-13) -> float:
    """Spectral radius of a 2-dim map by bisecting for (tau, 1 - tau)."""
    def balance(t):
        y1, y2 = g((t, 1.0 - t))
        return y1 * (1.0 - t) - y2 * t

    lo, hi = 1e-12, 1.0 - 1e-12
    if balance(lo) < 0:
        lo, hi = hi, lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if balance(mid) > 0:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) < tol:
            break
    t = 0.5 * (lo + hi)
    y1, _ = g((t, 1.0 - t))
    return y1 / t


def value_iteration_oracle(T: cs.TopicalMap, k: int = 4096):
    """Per-state long-run average payoff via plain value iteration."""
    x = T.iterate_additive((0.0,) * T.n, k)
    return [v / k for v in x]


@pytest.fixture(params=SEEDS)
def rng(request):
    return np.random.default_rng(request.param)
