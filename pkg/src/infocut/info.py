"""Relevance information I[Y;Z] and its well-mixed approximation iota.

Everything is evaluated from the spectral form of the kernel with the
stationary mode removed, so the deviation p(y,z) - p(y)p(z) keeps full
relative precision even when diffusion is nearly mixed and the naive
``sum p ln p/(p p)`` would be pure rounding noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .diffusion import DiffusionKernel, Prior
from .errors import DegenerateBisection, InvalidInput, SizeMismatch
from .graph import Graph
from .partition import Bisection, Partition

_SERIES_CUTOFF = 0.02
_SERIES_ORDER = 12


def _cubic_series(eta: np.ndarray) -> np.ndarray:
    # sum_{k >= 3} (-1)^k eta^k / (k (k-1)), Horner from the top
    acc = np.zeros_like(eta)
    for k in range(_SERIES_ORDER, 2, -1):
        acc = acc * eta + (-1) ** k / (k * (k - 1))
    return acc * eta**3


def xlog1p_terms(eta) -> tuple[np.ndarray, np.ndarray]:
    """Both (1 + eta) ln(1 + eta) - eta and the same minus eta^2/2.

    The first sums to I[Y;Z], the second to I[Y;Z] - iota. Small |eta| uses
    the power series so neither loses relative precision; eta = -1 gives 0.
    """
    eta = np.asarray(eta, dtype=float)
    half_sq = 0.5 * eta * eta
    small = np.abs(eta) < _SERIES_CUTOFF
    if small.all():
        cubic = _cubic_series(eta)
        return half_sq + cubic, cubic
    full = np.empty_like(eta)
    cubic = np.empty_like(eta)
    cubic[small] = _cubic_series(eta[small])
    full[small] = half_sq[small] + cubic[small]
    e = eta[~small]
    full[~small] = xlogy(1 + e, 1 + e) - e
    cubic[~small] = full[~small] - half_sq[~small]
    return full, cubic


def xlog1p_excess(eta) -> np.ndarray:
    """(1 + eta) ln(1 + eta) - eta."""
    return xlog1p_terms(eta)[0]


def xlog1p_cubic(eta) -> np.ndarray:
    """(1 + eta) ln(1 + eta) - eta - eta^2/2."""
    return xlog1p_terms(eta)[1]


@dataclass(frozen=True, eq=False)
class JointYZ:
    """p(y, z) for walker endpoint y and cluster z, with its marginals.

    ``excess`` is p(y,z) - p(y)p(z) computed without cancellation; when it
    is absent it is recomputed from ``joint``.
    """

    joint: np.ndarray
    py: np.ndarray
    pz: np.ndarray
    excess: np.ndarray | None = None

    @classmethod
    def from_joint(cls, joint) -> "JointYZ":
        joint = np.asarray(joint, dtype=float)
        return cls(joint, joint.sum(axis=1), joint.sum(axis=0))

    def deviation(self) -> np.ndarray:
        if self.excess is not None:
            return self.excess
        return self.joint - np.outer(self.py, self.pz)

    def dependence(self) -> tuple[np.ndarray, np.ndarray]:
        """(eta, weight) on the support where p(y)p(z) > 0."""
        w = np.outer(self.py, self.pz)
        mask = w > 0
        eta = np.zeros_like(w)
        eta[mask] = self.deviation()[mask] / w[mask]
        return np.maximum(eta, -1.0), w


def _check(k: DiffusionKernel, n: int) -> None:
    if n != k.graph.n:
        raise SizeMismatch(f"partition covers {n} nodes, graph has {k.graph.n}")


def _mode_overlaps(k: DiffusionKernel, p: Partition) -> np.ndarray:
    """B[i, z] = u_i . (sqrt(p) * Q_z); row 0 is p(z)."""
    return k.vectors.T @ (k.sqrt_p[:, None] * p.Q.T)


def joint_yz(k: DiffusionKernel, p: Partition, t: float) -> JointYZ:
    """p(y,z) = sum_x Q[z,x] G^t[y,x] p(x)."""
    _check(k, p.n)
    if t < 0:
        raise InvalidInput(f"diffusion time must be nonnegative, got {t}")
    p.require_nonempty()
    py = k.prior.p
    B = _mode_overlaps(k, p)
    pz = np.ones(1) if p.k == 1 else B[0].copy()
    if t == 0 or p.k == 1:
        # exact: no spectral sum needed, and a single cluster never depends on y
        joint = p.Q.T * py[:, None]
        excess = joint - np.outer(py, pz)
    else:
        decay = np.exp(-t * k.eigenvalues[1:])
        excess = (k.sqrt_p[:, None] * (k.vectors[:, 1:] * decay)) @ B[1:]
        joint = np.outer(py, pz) + excess
        np.maximum(joint, 0.0, out=joint)
    return JointYZ(joint=joint, py=py.copy(), pz=pz, excess=excess)


def relevance_information(j: JointYZ) -> float:
    """I[Y;Z] in nats."""
    eta, w = j.dependence()
    # the first-order term sum w * eta vanishes identically
    return float(np.sum(w * xlog1p_excess(eta)))


def information_residual(j: JointYZ) -> float:
    """I[Y;Z] - iota without cancellation."""
    eta, w = j.dependence()
    return float(np.sum(w * xlog1p_cubic(eta)))


def iota_chi2(j: JointYZ) -> float:
    """1/2 (sum p(y,z)^2 / (p(y)p(z)) - 1), written as 1/2 sum p(y)p(z) eta^2."""
    eta, w = j.dependence()
    return 0.5 * float(np.sum(w * eta**2))


def iota_kpartition(k: DiffusionKernel, p: Partition, t: float) -> float:
    """Closed form 1/2 (sum_z [Q G^2t P Q^T]_zz / [Q P Q^T]_zz - 1).

    The stationary mode contributes exactly p(z) to each numerator and so
    cancels the -1; only the decaying modes are summed.
    """
    _check(k, p.n)
    p.require_nonempty()
    if p.k == 1:
        return 0.0
    B = _mode_overlaps(k, p)
    pz = B[0]
    decay = np.exp(-2.0 * t * k.eigenvalues[1:])
    return 0.5 * float(np.sum((decay @ B[1:] ** 2) / pz))


def _h_modes(k: DiffusionKernel, b: Bisection) -> np.ndarray:
    _check(k, b.n)
    return k.vectors.T @ (k.sqrt_p * b.h)


def h_correlation(k: DiffusionKernel, b: Bisection, t: float) -> float:
    """<h_x h_x'>_{2t} = h^T G^{2t} P h."""
    c = _h_modes(k, b)
    return float(np.exp(-2.0 * t * k.eigenvalues) @ c**2)


def iota_bisection(k: DiffusionKernel, b: Bisection, t: float) -> float:
    """1/2 (<h h'>_{2t} - <h>^2) / (1 - <h>^2) with <h> the prior mean."""
    c = _h_modes(k, b)
    hm = k.prior.p @ b.h
    if hm**2 >= 1:
        raise DegenerateBisection("bisection puts all prior mass on one side")
    var = np.exp(-2.0 * t * k.eigenvalues[1:]) @ c[1:] ** 2
    return 0.5 * float(var) / (1.0 - hm**2)


def iota_short_time(g: Graph, b: Bisection, prior: Prior, t: float) -> float:
    """Linearized iota: 1/2 - t h^T L h / (1 - <h>^2), <h> taken under ``prior``."""
    if b.n != g.n:
        raise SizeMismatch(f"bisection covers {b.n} nodes, graph has {g.n}")
    hm = prior.p @ b.h
    if hm**2 >= 1:
        raise DegenerateBisection("bisection puts all prior mass on one side")
    hLh = float(b.h @ (np.diag(g.degrees) - g.adjacency) @ b.h)
    return 0.5 - t * hLh / (1.0 - hm**2)


def cluster_entropy(p: Partition, prior: Prior) -> float:
    pz = np.bincount(p.assignment, weights=prior.p, minlength=p.k)
    return float(-np.sum(xlogy(pz, pz)))


def ib_functional(k: DiffusionKernel, p: Partition, t: float, temperature: float) -> float:
    """-I[Y;Z] + T I[X;Z]; for a hard partition I[X;Z] = H(Z)."""
    if temperature < 0:
        raise InvalidInput(f"temperature must be nonnegative, got {temperature}")
    info = relevance_information(joint_yz(k, p, t))
    if temperature == 0:
        return -info
    return -info + temperature * cluster_entropy(p, k.prior)
