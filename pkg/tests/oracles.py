"""Shared graph builders, hypothesis strategies, and brute-force oracles."""
import math

import numpy as np
import scipy.linalg
from hypothesis import assume
from hypothesis import strategies as st

from infocut.graph import Graph, build_graph, is_connected, laplacian


def k4() -> Graph:
    return build_graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


def p3() -> Graph:
    return build_graph(3, [(0, 1), (1, 2)])


def two_triangles() -> Graph:
    return build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def random_connected_graph(rng: np.random.Generator, n: int, density: float = 0.4) -> Graph:
    """Random spanning tree plus extra edges, so the result is always connected."""
    order = rng.permutation(n)
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(i)])))) for i in range(1, n)}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                edges.add((u, v))
    return build_graph(n, sorted(edges))


def random_bisection_labels(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        labels = rng.integers(0, 2, size=n)
        if 0 < labels.sum() < n:
            return labels


@st.composite
def graphs(draw, min_n=2, max_n=12, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    g = build_graph(n, [e for e, b in zip(pairs, bits) if b])
    if connected:
        assume(is_connected(g))
    return g


@st.composite
def bisection_labels(draw, n):
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    assume(0 < sum(labels) < n)
    return np.array(labels)


# --- independent oracles ----------------------------------------------------


def expm_kernel(g: Graph, p: np.ndarray, t: float) -> np.ndarray:
    """exp(-t L P^-1) by scipy's Pade approximant."""
    return scipy.linalg.expm(-t * laplacian(g) / p[None, :])


def brute_joint(g: Graph, p: np.ndarray, labels: np.ndarray, k: int, t: float) -> np.ndarray:
    G = expm_kernel(g, p, t)
    n = g.n
    joint = np.zeros((n, k))
    for x in range(n):
        for y in range(n):
            joint[y, labels[x]] += G[y, x] * p[x]
    return joint


def brute_information(g, p, labels, k, t) -> float:
    joint = brute_joint(g, p, labels, k, t)
    py, pz = joint.sum(axis=1), joint.sum(axis=0)
    total = 0.0
    for y in range(g.n):
        for z in range(k):
            if joint[y, z] > 0:
                total += joint[y, z] * math.log(joint[y, z] / (py[y] * pz[z]))
    return total


def brute_chi2_iota(g, p, labels, k, t) -> float:
    """1/2 (sum p(y,z)^2 / (p(y) p(z)) - 1) with the joint at lag t."""
    joint = brute_joint(g, p, labels, k, t)
    py, pz = joint.sum(axis=1), joint.sum(axis=0)
    return 0.5 * (float(np.sum(joint**2 / np.outer(py, pz))) - 1.0)


def mp_information_and_iota(g: Graph, kind: str, labels, t: float, dps: int = 40) -> tuple[float, float, float]:
    """I[Y;Z], the chi^2 form of iota, and E1 at lag t, in extended precision.

    The prior is rebuilt exactly (1/n or d/2m); a rounded float prior is off
    normalization by ~1e-16, which is visible once I - iota is that small.
    """
    import mpmath

    with mpmath.workdps(dps):
        n = g.n
        L = laplacian(g)
        if kind == "uniform":
            P = [mpmath.mpf(1) / n] * n
        else:
            P = [mpmath.mpf(int(d)) / (2 * g.m) for d in g.degrees]
        M = mpmath.matrix(n, n)
        for y in range(n):
            for x in range(n):
                M[y, x] = -mpmath.mpf(float(t)) * mpmath.mpf(int(L[y, x])) / P[x]
        G = mpmath.expm(M)
        k = int(max(labels)) + 1
        joint = [[mpmath.mpf(0)] * k for _ in range(n)]
        for x in range(n):
            for y in range(n):
                joint[y][labels[x]] += G[y, x] * P[x]
        pz = [sum(joint[y][z] for y in range(n)) for z in range(k)]
        info = iota = mpmath.mpf(0)
        for y in range(n):
            for z in range(k):
                ratio = joint[y][z] / (P[y] * pz[z])
                if joint[y][z] > 0:
                    info += joint[y][z] * mpmath.log(ratio)
                iota += joint[y][z] * ratio
        return float(info), float((iota - 1) / 2), float(abs((info - (iota - 1) / 2) / info))
