"""Continuous-time diffusion kernel exp(-t L P^-1) and its timescale."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, InvalidInput, IsolatedNode
from .graph import Graph, laplacian

ZERO_MODE_RTOL = 1e-9
CLAMP_TOL = 1e-12


class PriorKind(str, enum.Enum):
    UNIFORM = "uniform"
    DEGREE = "degree"


@dataclass(frozen=True, eq=False)
class Prior:
    """Node distribution p; doubles as the stationary distribution of the walk."""

    kind: PriorKind
    p: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.p)


def make_prior(g: Graph, kind: PriorKind | str) -> Prior:
    kind = PriorKind(kind)
    if kind is PriorKind.UNIFORM:
        p = np.full(g.n, 1.0 / g.n)
    else:
        if np.any(g.degrees == 0):
            raise IsolatedNode(
                f"degree prior needs every node to have an edge; isolated: "
                f"{np.flatnonzero(g.degrees == 0).tolist()}"
            )
        p = g.degrees / (2.0 * g.m)
    p.setflags(write=False)
    return Prior(kind, p)


@dataclass(frozen=True, eq=False)
class DiffusionKernel:
    """Eigensystem of S = P^-1/2 L P^-1/2, from which G^t is assembled.

    ``vectors[:, 0]`` is exactly sqrt(p), the stationary mode. When the graph
    is disconnected (only with ``allow_disconnected``) the remaining zero modes
    are rotated to be orthogonal to it.
    """

    graph: Graph
    prior: Prior
    eigenvalues: np.ndarray
    vectors: np.ndarray
    n_zero: int
    tau: float

    @property
    def sqrt_p(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def generator(self) -> np.ndarray:
        """L P^-1, the exponent of the kernel."""
        return laplacian(self.graph) / self.prior.p[None, :]

    def evaluate(self, t: float) -> np.ndarray:
        """G^t with columns p^t(. | x), clamped and renormalized."""
        if t < 0:
            raise InvalidInput(f"diffusion time must be nonnegative, got {t}")
        if t == 0:
            return np.eye(self.graph.n)
        s = self.sqrt_p
        core = (self.vectors * np.exp(-t * self.eigenvalues)) @ self.vectors.T
        G = s[:, None] * core / s[None, :]
        neg = G < 0
        if neg.any():
            G[neg & (G > -CLAMP_TOL)] = 0.0
            G /= G.sum(axis=0, keepdims=True)
        return G

    def short_time_kernel(self, t: float) -> np.ndarray:
        """Linearization I - 2t L P^-1 of G at lag 2t."""
        return np.eye(self.graph.n) - 2.0 * t * self.generator

    def detailed_balance_check(self, t: float) -> float:
        """max |G_yx p_x - G_xy p_y|."""
        J = self.evaluate(t) * self.prior.p[None, :]
        return float(np.max(np.abs(J - J.T)))


def spectral_decomposition(L: np.ndarray, p: np.ndarray):
    """Eigenvalues and orthonormal vectors of P^-1/2 L P^-1/2.

    Zero modes (below ZERO_MODE_RTOL * lambda_max) are set to exactly zero and
    rotated so the first vector is sqrt(p). Returns (eigenvalues, vectors, n_zero).
    """
    s = np.sqrt(p)
    S = L / s[:, None] / s[None, :]
    lam, U = np.linalg.eigh(S)
    n_zero = int(np.sum(lam <= ZERO_MODE_RTOL * max(lam[-1], 0.0))) if lam[-1] > 0 else lam.size
    n_zero = max(n_zero, 1)
    lam = lam.copy()
    lam[:n_zero] = 0.0
    Z = U[:, :n_zero]
    coef = Z.T @ s
    rot, _ = np.linalg.qr(coef.reshape(-1, 1), mode="complete")
    Z = Z @ rot
    Z[:, 0] = s
    if n_zero > 1:
        # re-orthogonalize the other zero modes against the exact sqrt(p)
        Z[:, 1:] -= np.outer(s, s @ Z[:, 1:])
        Z[:, 1:], _ = np.linalg.qr(Z[:, 1:])
    U = U.copy()
    U[:, :n_zero] = Z
    return lam, U, n_zero


def build_kernel(g: Graph, prior: Prior, allow_disconnected: bool = False) -> DiffusionKernel:
    """Diagonalize the diffusion generator for graph ``g`` under ``prior``.

    tau is the inverse of the smallest nonzero eigenvalue. With
    ``allow_disconnected`` a graph with several components is accepted and
    tau refers to the slowest decaying non-stationary mode.
    """
    if prior.p.size != g.n:
        raise InvalidInput(f"prior has {prior.p.size} entries, graph has {g.n} nodes")
    if np.any(prior.p <= 0):
        raise IsolatedNode("prior must be strictly positive on every node")
    lam, U, n_zero = spectral_decomposition(laplacian(g), prior.p)
    if n_zero > 1 and not allow_disconnected:
        raise DisconnectedGraph(f"graph has {n_zero} connected components")
    if n_zero >= g.n:
        raise DisconnectedGraph("graph has no edges; the diffusion timescale is undefined")
    lam.setflags(write=False)
    U.setflags(write=False)
    return DiffusionKernel(
        graph=g, prior=prior, eigenvalues=lam, vectors=U, n_zero=n_zero, tau=1.0 / lam[n_zero]
    )


def evaluate(k: DiffusionKernel, t: float) -> np.ndarray:
    return k.evaluate(t)


def short_time_kernel(k: DiffusionKernel, t: float) -> np.ndarray:
    return k.short_time_kernel(t)


def detailed_balance_check(k: DiffusionKernel, t: float) -> float:
    return k.detailed_balance_check(t)
