"""Local-move search for E* minima and the min-cut vs max-information comparison."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .diffusion import (
    ZERO_MODE_RTOL,
    DiffusionKernel,
    Prior,
    PriorKind,
    build_kernel,
    make_prior,
)
from .errors import (
    DegenerateInit,
    DisconnectedStart,
    InvalidInput,
    NonConvergence,
    SizeMismatch,
)
from .graph import Graph, SbmSpec, is_connected, sample_connected_sbm
from .mixing import (
    TimeGrid,
    assemble_curve,
    bisection_information,
    default_grid,
    e0_curves,
    e1_values,
    fast_mixing_stats,
    mode_coefficients,
)
from .partition import Bisection

log = logging.getLogger(__name__)

MAX_SWEEPS = 1000
IMPROVE_RTOL = 1e-12
ESTAR_ATOL = 1e-12
COARSE_STRIDE = 8


class CutObjective(str, enum.Enum):
    AVERAGE = "average"
    NORMALIZED = "normalized"


def matching_objective(prior: PriorKind | str) -> CutObjective:
    return CutObjective.AVERAGE if PriorKind(prior) is PriorKind.UNIFORM else CutObjective.NORMALIZED


def bisections_equal(a: Bisection, b: Bisection) -> bool:
    """Equal up to the global sign, which carries no information."""
    if a.n != b.n:
        raise SizeMismatch(f"bisections have {a.n} and {b.n} nodes")
    return bool(np.array_equal(a.h, b.h) or np.array_equal(a.h, -b.h))


def _check_init(n: int, init: Bisection) -> None:
    if init.n != n:
        raise SizeMismatch(f"bisection covers {init.n} nodes, graph has {n}")
    if init.is_one_sided():
        raise DegenerateInit("initial bisection has an empty side")


def _flip_cut_objectives(g: Graph, h: np.ndarray, objective: CutObjective) -> tuple[float, np.ndarray]:
    """Objective of h and of every single-node flip (NaN where a side empties)."""
    A, d = g.adjacency, g.degrees
    balance = A @ h * h  # same-side minus cross neighbours
    cross = (d - balance) // 2
    c = int(cross.sum()) // 2
    c_flip = c - cross + (d - cross)
    plus = h > 0
    if objective is CutObjective.AVERAGE:
        w = np.ones(g.n)
    else:
        w = d.astype(float)
    wp, wm = w[plus].sum(), w[~plus].sum()
    wp_flip = np.where(plus, wp - w, wp + w)
    wm_flip = np.where(plus, wm + w, wm - w)
    with np.errstate(divide="ignore", invalid="ignore"):
        cur = c / wp + c / wm
        vals = c_flip / wp_flip + c_flip / wm_flip
    vals = np.where((wp_flip > 0) & (wm_flip > 0), vals, np.nan)
    return float(cur), vals


def coordinate_descent_cut(g: Graph, init: Bisection, objective: CutObjective | str) -> Bisection:
    """Best-improvement single-node relabelling on the average or normalized cut."""
    objective = CutObjective(objective)
    _check_init(g.n, init)
    h = init.h.copy()
    cur, _ = _flip_cut_objectives(g, h, objective)
    if not np.isfinite(cur):
        raise DegenerateInit("initial bisection has a side with zero volume")
    for _ in range(MAX_SWEEPS):
        cur, vals = _flip_cut_objectives(g, h, objective)
        if np.all(np.isnan(vals)):
            return Bisection(h)
        x = int(np.nanargmin(vals))
        if not vals[x] < cur - IMPROVE_RTOL * abs(cur):
            return Bisection(h)
        h[x] = -h[x]
    raise NonConvergence(f"cut descent did not settle in {MAX_SWEEPS} sweeps")


def _flip_informations(k: DiffusionKernel, h: np.ndarray, t: float) -> tuple[float, np.ndarray]:
    """I[Y;Z](t) of h and of every single-node flip (NaN where a side empties)."""
    n = h.size
    H = np.repeat(h[None, :].astype(float), n + 1, axis=0)
    H[np.arange(1, n + 1), np.arange(n)] *= -1
    sides = H.sum(axis=1)
    ok = np.abs(sides) < n
    c = mode_coefficients(k.vectors, k.sqrt_p, H[ok])
    info, _, _ = e1_values(k.eigenvalues, k.vectors, k.sqrt_p, c, np.array([t]))
    out = np.full(n + 1, np.nan)
    out[ok] = info[:, 0]
    return float(out[0]), out[1:]


def coordinate_descent_info(
    k: DiffusionKernel, init: Bisection, t: float, maximize: bool = True
) -> Bisection:
    """Best-improvement single-node relabelling on I[Y;Z](t).

    ``maximize=False`` flips the sense for replication studies.
    """
    _check_init(k.graph.n, init)
    if t <= 0:
        raise InvalidInput(f"diffusion time must be positive, got {t}")
    sign = 1.0 if maximize else -1.0
    h = init.h.copy()
    for _ in range(MAX_SWEEPS):
        cur, vals = _flip_informations(k, h, t)
        cur, vals = sign * cur, sign * vals
        if np.all(np.isnan(vals)):
            return Bisection(h)
        x = int(np.nanargmax(vals))
        if not vals[x] > cur + IMPROVE_RTOL * abs(cur):
            return Bisection(h)
        h[x] = -h[x]
    raise NonConvergence(f"information descent did not settle in {MAX_SWEEPS} sweeps")


# --- E* local search ------------------------------------------------------


class MoveKind(str, enum.Enum):
    EDGE = "edge"
    FLIP = "flip"
    BOTH = "both"


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    edge: tuple[int, int] | None
    node: int | None


@dataclass(frozen=True)
class SearchStep:
    move: Move
    estar: float
    delta: float
    tstar_minus: float
    tstar_plus: float
    tau: float


@dataclass(frozen=True, eq=False)
class LocalSearchResult:
    final_graph: Graph
    final_bisection: Bisection
    prior: PriorKind
    estar: float
    tstar_minus: float
    tstar_plus: float
    tau: float
    initial_estar: float
    steps: list[SearchStep] = field(default_factory=list)
    candidates_evaluated: int = 0
    initial_tstar: tuple[float, float] = (float("nan"), float("nan"))
    initial_tau: float = float("nan")

    def trajectory(self) -> np.ndarray:
        """Rows (estar, tstar_minus, tstar_plus, tau) for every graph visited, start first."""
        rows = [(self.initial_estar, *self.initial_tstar, self.initial_tau)]
        rows += [(s.estar, s.tstar_minus, s.tstar_plus, s.tau) for s in self.steps]
        return np.array(rows, dtype=float)


@dataclass
class _Spectra:
    eigenvalues: np.ndarray  # (G, n)
    vectors: np.ndarray  # (G, n, n)
    sqrt_p: np.ndarray  # (G, n)
    tau: np.ndarray  # (G,)
    valid: np.ndarray  # (G,) connected and prior well defined


def _batch_spectra(adj: np.ndarray, prior: PriorKind) -> _Spectra:
    """Eigensystems of P^-1/2 L P^-1/2 for a stack of adjacency matrices."""
    G, n, _ = adj.shape
    deg = adj.sum(axis=2).astype(float)
    m2 = deg.sum(axis=1)
    if prior is PriorKind.UNIFORM:
        p = np.full((G, n), 1.0 / n)
        valid = m2 > 0
    else:
        valid = np.all(deg > 0, axis=1)
        p = np.where(valid[:, None], deg / np.where(m2 > 0, m2, 1.0)[:, None], 1.0 / n)
    s = np.sqrt(p)
    L = -adj.astype(float)
    idx = np.arange(n)
    L[:, idx, idx] = deg
    S = L / s[:, :, None] / s[:, None, :]
    lam, U = np.linalg.eigh(S)
    n_zero = np.sum(lam <= ZERO_MODE_RTOL * lam[:, -1:], axis=1)
    valid &= n_zero == 1
    lam[:, 0] = 0.0
    U[:, :, 0] = s
    lam1 = np.where(valid, lam[:, 1], 1.0)
    return _Spectra(lam, U, s, 1.0 / lam1, valid)


def _candidate_moves(n: int):
    """Moves in tie-break order: edges, then flips, then both, lexicographic."""
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    moves = [Move(MoveKind.EDGE, e, None) for e in pairs]
    moves += [Move(MoveKind.FLIP, None, x) for x in range(n)]
    moves += [Move(MoveKind.BOTH, e, x) for e in pairs for x in range(n)]
    return pairs, moves


def _e1_curves(spec: _Spectra, gi: np.ndarray, c: np.ndarray, t: np.ndarray) -> np.ndarray:
    """E1 for candidates (graph index gi, coefficients c[S, n]) at times t[S, T]."""
    out = np.empty(t.shape)
    chunk = max(1, 16384 // t.shape[1])
    for lo in range(0, gi.size, chunk):
        sl = slice(lo, lo + chunk)
        g = gi[sl]
        lam, U, s = spec.eigenvalues[g], spec.vectors[g], spec.sqrt_p[g]
        cc = c[sl]
        w = np.exp(-t[sl, :, None] * lam[:, None, 1:]) * cc[:, None, 1:]  # (S, T, n-1)
        v = (w @ np.swapaxes(U[:, :, 1:], 1, 2)) / s[:, None, :]  # (S, T, n)
        _, _, out[sl] = bisection_information(v, cc[:, 0], s * s)
    return out


def _e1_grid(spec: _Spectra, C: np.ndarray, t: np.ndarray) -> np.ndarray:
    """E1 for every (graph, variant) pair, C[G, V, n] at times t[G, V]."""
    G, V, n = C.shape
    w = np.exp(-t[:, :, None] * spec.eigenvalues[:, None, 1:]) * C[:, :, 1:]
    v = (w @ np.swapaxes(spec.vectors[:, :, 1:], 1, 2)) / spec.sqrt_p[:, None, :]
    py = np.repeat(spec.sqrt_p**2, V, axis=0)
    _, _, e1 = bisection_information(v.reshape(G * V, 1, n), C[:, :, 0].ravel(), py)
    return e1.reshape(G, V)


def _best_neighbour(adj: np.ndarray, h: np.ndarray, prior: PriorKind, grid: TimeGrid, threshold: float):
    """Lowest-E* neighbour with E* < threshold, or None.

    Candidates are pruned exactly. With t_c the last grid point where E0 is
    below the threshold, every t after t_c has E >= E0 >= threshold and every
    t up to t_c has E >= E_inf(t_c) >= any E1 seen at or after t_c. So the
    largest E1 seen on the tail is a lower bound on the candidate's E*
    (unless that bound exceeds the threshold, in which case it is rejected).
    """
    n = h.size
    pairs, moves = _candidate_moves(n)
    P = len(pairs)
    stack = np.repeat(adj[None], P + 1, axis=0)
    iu = np.array(pairs).T
    stack[np.arange(1, P + 1), iu[0], iu[1]] ^= 1
    stack[np.arange(1, P + 1), iu[1], iu[0]] ^= 1
    spec = _batch_spectra(stack, prior)

    # variants per graph: row 0 = h, row 1 + x = h with x flipped
    H = np.repeat(h[None, :].astype(float), n + 1, axis=0)
    H[np.arange(1, n + 1), np.arange(n)] *= -1
    one_sided = np.abs(H.sum(axis=1)) == n
    # move index -> (graph, variant)
    gi = np.concatenate([np.arange(1, P + 1), np.zeros(n, int), np.repeat(np.arange(1, P + 1), n)])
    vi = np.concatenate([np.zeros(P, int), np.arange(1, n + 1), np.tile(np.arange(1, n + 1), P)])
    alive = spec.valid[gi] & ~one_sided[vi]
    n_valid = int(np.count_nonzero(alive))

    C = mode_coefficients(spec.vectors, spec.sqrt_p, np.broadcast_to(H, (P + 1, n + 1, n)))
    times = grid.t_tilde[None, :] * spec.tau[:, None]  # (G, T)
    _, e0 = e0_curves(spec.eigenvalues, C, times)  # (G, V, T)
    below = e0[gi, vi] < threshold  # (M, T)
    alive &= below.any(axis=1)
    T = grid.count
    tc = T - 1 - np.argmax(below[:, ::-1], axis=1)

    # first look at t_c itself for all candidates at once, on the graph x variant grid
    tc_grid = np.zeros(C.shape[:2], dtype=int)
    tc_grid[gi, vi] = tc
    e1 = _e1_grid(spec, C, np.take_along_axis(times, tc_grid, axis=1))[gi, vi]
    e1 = np.where(alive, e1, np.nan)
    lower = np.where(np.isnan(e1), 0.0, e1)
    alive &= ~(e1 >= threshold)
    # coarse pass: E1 every COARSE_STRIDE points plus t_c, then bound
    # E* >= min_t max(E0(t), max_{s >= t, s evaluated} E1(s))
    idx = np.flatnonzero(alive)
    if idx.size:
        cols = np.sort(np.concatenate([
            np.broadcast_to(np.arange(0, T, COARSE_STRIDE), (idx.size, -(-T // COARSE_STRIDE))),
            tc[idx, None],
        ], axis=1), axis=1)
        for lo in range(0, idx.size, 2048):
            sl = idx[lo:lo + 2048]
            cl = cols[lo:lo + 2048]
            e1 = _e1_curves(spec, gi[sl], C[gi[sl], vi[sl]], np.take_along_axis(times[gi[sl]], cl, axis=1))
            scattered = np.full((sl.size, T), -np.inf)
            np.put_along_axis(scattered, cl, np.where(np.isnan(e1), -np.inf, e1), axis=1)
            tail_max = np.maximum.accumulate(scattered[:, ::-1], axis=1)[:, ::-1]
            bound = np.min(np.maximum(e0[gi[sl], vi[sl]], tail_max), axis=1)
            lower[sl] = np.maximum(lower[sl], bound)
        alive &= ~(lower >= threshold)

    survivors = np.flatnonzero(alive)
    survivors = survivors[np.argsort(lower[survivors], kind="stable")]
    best_mi, best_curve = None, None
    for lo in range(0, survivors.size, 32):
        chunk = survivors[lo:lo + 32]
        if best_curve is not None:
            chunk = chunk[lower[chunk] <= best_curve.estar]
        if chunk.size == 0:
            continue
        e1 = _e1_curves(spec, gi[chunk], C[gi[chunk], vi[chunk]], times[gi[chunk]])
        for j, mi in enumerate(chunk):
            g = gi[mi]
            curve = assemble_curve(grid, spec.tau[g], e0[g, vi[mi]], e1[j])
            if curve.estar >= threshold:
                continue
            if best_curve is None or (curve.estar, mi) < (best_curve.estar, best_mi):
                best_mi, best_curve = mi, curve
    if best_curve is None:
        return None, n_valid
    return (moves[best_mi], best_curve), n_valid


def apply_move(g: Graph, b: Bisection, move: Move) -> tuple[Graph, Bisection]:
    if move.edge is not None:
        g = g.toggle_edge(*move.edge)
    if move.node is not None:
        b = b.flip(move.node)
    return g, b


def estar_local_search(
    g0: Graph,
    b0: Bisection,
    prior: Prior | PriorKind | str,
    grid: TimeGrid | None = None,
    max_steps: int = 10_000,
) -> LocalSearchResult:
    """Greedy descent on E* over edge toggles, node flips, and both at once.

    Each step takes the strictly best neighbour (by more than 1e-12); moves
    that disconnect the graph or empty a side are skipped.
    """
    kind = prior.kind if isinstance(prior, Prior) else PriorKind(prior)
    grid = grid or default_grid()
    if not is_connected(g0):
        raise DisconnectedStart("local search needs a connected starting graph")
    _check_init(g0.n, b0)
    g, b = g0, b0
    curve = fast_mixing_stats(build_kernel(g, make_prior(g, kind)), b, grid)
    initial = curve
    steps: list[SearchStep] = []
    evaluated = 0
    for _ in range(max_steps):
        found, count = _best_neighbour(np.array(g.adjacency), b.h, kind, grid, curve.estar - ESTAR_ATOL)
        evaluated += count
        if found is None:
            break
        move, new_curve = found
        g, b = apply_move(g, b, move)
        steps.append(
            SearchStep(move, new_curve.estar, new_curve.estar - curve.estar,
                       new_curve.tstar_minus, new_curve.tstar_plus, new_curve.tau)
        )
        log.debug("step %d: %s -> E*=%.6g", len(steps), move, new_curve.estar)
        curve = new_curve
    else:
        raise NonConvergence(f"local search exceeded {max_steps} steps")
    return LocalSearchResult(
        final_graph=g,
        final_bisection=b,
        prior=kind,
        estar=curve.estar,
        tstar_minus=curve.tstar_minus,
        tstar_plus=curve.tstar_plus,
        tau=curve.tau,
        initial_estar=initial.estar,
        steps=steps,
        candidates_evaluated=evaluated,
        initial_tstar=(initial.tstar_minus, initial.tstar_plus),
        initial_tau=initial.tau,
    )


# --- min-cut vs max-information comparison --------------------------------


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    p_minus: float
    grid: TimeGrid
    disagreement: np.ndarray
    stderr: np.ndarray
    n_graphs: int
    seeds: list[int]
    objective: CutObjective
    prior: PriorKind
    draws: list[int]


def run_comparison(
    spec: SbmSpec,
    n_graphs: int,
    grid: TimeGrid | None = None,
    objective: CutObjective | str | None = None,
    prior: PriorKind | str = PriorKind.UNIFORM,
    maximize_info: bool = True,
) -> ComparisonResult:
    """Fraction of sampled graphs where h_inf(t) differs from h_cut, per grid time.

    Graph i uses seed ``spec.seed + i``. Both descents start at the planted
    block bisection. With p_minus = 0 the blocks are the components and the
    kernel is built on the disconnected graph.
    """
    prior = PriorKind(prior)
    objective = CutObjective(objective) if objective is not None else matching_objective(prior)
    grid = grid or default_grid()
    if n_graphs < 1:
        raise InvalidInput("n_graphs must be positive")
    init = Bisection.from_labels(spec.block_assignment)
    seeds = [spec.seed + i for i in range(n_graphs)]
    differs = np.zeros((n_graphs, grid.count), dtype=bool)
    draws = []
    for row, seed in enumerate(seeds):
        g, tries = sample_connected_sbm(replace(spec, seed=seed))
        draws.append(tries)
        k = build_kernel(g, make_prior(g, prior), allow_disconnected=spec.p_minus == 0)
        h_cut = coordinate_descent_cut(g, init, objective)
        for col, t in enumerate(grid.times(k.tau)):
            h_inf = coordinate_descent_info(k, init, t, maximize=maximize_info)
            differs[row, col] = not bisections_equal(h_inf, h_cut)
    d = differs.mean(axis=0)
    se = np.sqrt(d * (1 - d) / n_graphs)
    return ComparisonResult(spec.p_minus, grid, d, se, n_graphs, seeds, objective, prior, draws)


# --- normalized-time collapse ---------------------------------------------


def binned_spread(x: np.ndarray, y: np.ndarray, edges: np.ndarray) -> float:
    """Count-weighted mean of the within-bin standard deviation of y, binned on log10 x.

    Bins with fewer than two points are skipped.
    """
    lx = np.log10(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    which = np.digitize(lx, edges)
    num = den = 0.0
    for b in np.unique(which):
        sel = which == b
        if sel.sum() >= 2:
            num += sel.sum() * np.std(y[sel])
            den += sel.sum()
    if den == 0:
        return float("nan")
    return num / den


COLLAPSE_BIN_WIDTH = 0.25


def scatter_points(results: list[LocalSearchResult], visited: bool = True) -> np.ndarray:
    """Rows (estar, t_tilde, t) with one row for each of t*_- and t*_+.

    With ``visited`` every graph on each search path contributes, otherwise
    only the final local minima.
    """
    rows = []
    for r in results:
        traj = r.trajectory() if visited else r.trajectory()[-1:]
        for estar, tm, tp, tau in traj:
            rows.append((estar, tm, tm * tau))
            rows.append((estar, tp, tp * tau))
    return np.array(rows, dtype=float).reshape(-1, 3)


@dataclass(frozen=True)
class CollapseStats:
    """Pooled over single-size spread of E*, against t_tilde and against t.

    Ratios are NaN when no bin holds at least two points of every size.
    """

    normalized_ratio: float
    absolute_ratio: float
    normalized_bins: int
    absolute_bins: int


def _shared_bin_ratio(groups: list[np.ndarray], col: int, width: float) -> tuple[float, int]:
    pooled = np.concatenate(groups)
    lx = np.log10(pooled[:, col])
    edges = np.arange(np.floor(lx.min() / width) * width, lx.max() + width, width)
    which = [np.digitize(np.log10(v[:, col]), edges) for v in groups]
    num_p = den_p = num_s = den_s = 0.0
    shared = 0
    for b in np.unique(np.concatenate(which)):
        parts = [v[w == b, 0] for v, w in zip(groups, which)]
        if min(len(y) for y in parts) < 2:
            continue
        shared += 1
        y = np.concatenate(parts)
        num_p += len(y) * np.std(y)
        den_p += len(y)
        for part in parts:
            num_s += len(part) * np.std(part)
            den_s += len(part)
    if shared == 0 or num_s == 0:
        return float("nan"), 0
    return float((num_p / den_p) / (num_s / den_s)), shared


def collapse_stats(groups: dict[int, np.ndarray], width: float = COLLAPSE_BIN_WIDTH) -> CollapseStats:
    """How much pooling graph sizes widens the binned spread of E*.

    ``groups`` maps a graph size to rows from ``scatter_points``. Time is
    binned in ``width`` decades and only bins holding at least two points of
    every size are used, so sizes that merely occupy different time ranges
    cannot look collapsed. Each ratio is the count-weighted within-bin
    standard deviation of the pooled points over that of each size alone;
    1 means the sizes are indistinguishable.
    """
    if len(groups) < 2:
        raise InvalidInput("collapse needs at least two graph sizes")
    parts = list(groups.values())
    norm, nb = _shared_bin_ratio(parts, 1, width)
    absolute, ab = _shared_bin_ratio(parts, 2, width)
    return CollapseStats(norm, absolute, nb, ab)
