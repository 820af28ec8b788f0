"""Metropolis chain over perfect and near-perfect matchings of K_{n,n}.

Every row-column pair is usable as a matching edge; pairs absent from the
problem instance carry the activity penalty lambda instead of 1. States are
matchings, weighted as

    w(M) = lambda^(# non-instance pairs in M)              if M is perfect
    w(M) = w(u, v) * lambda^(# non-instance pairs in M)    if M has hole (u, v)

with all weight arithmetic in natural-log space, since the activity reaches
1/n! and hole weights reach factorial scale.

Transitions from a perfect matching remove one uniformly chosen pair. From a
near-perfect matching with hole (u, v), a vertex x is drawn uniformly from
all 2n vertices (indices below n are rows, the rest are columns):

* x is u or v: propose adding the pair (u, v), making the matching perfect.
* x is a matched column: propose replacing the pair (w, x) by (u, x), which
  moves the hole to (w, v).
* x is a matched row: propose replacing the pair (x, z) by (x, v), which
  moves the hole to (u, z).

In a near-perfect matching only u and v are uncovered, so exactly one rule
applies to every draw. Each proposal is accepted with probability
min(1, w(M') / w(M)), computed as exp of the log-weight difference; a
rejected proposal still consumes a step. Exactly one draw selects the
proposal and at most one more decides acceptance (none when the weight
ratio is at least 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .matrix import Matching, Matrix
from .rng import BufferedDraws


class StationaryConvergenceError(RuntimeError):
    """Power iteration failed to reach the requested residual."""


@dataclass(frozen=True)
class WeightTable:
    """Activity and hole weights for one annealing stage, in log space.

    ``edge_present`` is the instance matrix, flattened row-major; ``log_w``
    is the n x n hole-weight table, also flattened.
    """

    n: int
    log_lambda: float
    log_w: tuple[float, ...]
    edge_present: tuple[int, ...]

    @classmethod
    def initial(cls, m: Matrix, log_lambda: float = 0.0) -> "WeightTable":
        """Starting table: every hole weight n, activity 1."""
        n = m.n
        flat_edges = tuple(cell for row in m.rows for cell in row)
        return cls(n, log_lambda, tuple([math.log(n)] * (n * n)), flat_edges)

    def with_updates(self, log_lambda: float | None = None, log_w=None) -> "WeightTable":
        return WeightTable(
            self.n,
            self.log_lambda if log_lambda is None else log_lambda,
            self.log_w if log_w is None else tuple(log_w),
            self.edge_present,
        )

    def hole_log_w(self, u: int, v: int) -> float:
        return self.log_w[u * self.n + v]


@dataclass(frozen=True)
class ChainState:
    """A chain state: the matching plus its cached non-instance pair count.

    ``lambda_edge_count`` is the number of matched pairs that are absent
    from the instance matrix. It is None for states produced without an
    instance in hand (pure enumeration); weight computations recount it
    directly from the matching, and the sampler maintains it incrementally.
    """

    matching: Matching
    lambda_edge_count: int | None = None


def lambda_edges(matching: Matching, wt: WeightTable) -> int:
    """Recount of matched pairs absent from the instance."""
    n = wt.n
    return sum(1 for u, v in matching.pairs if not wt.edge_present[u * n + v])


def log_weight(state: ChainState, wt: WeightTable) -> float:
    """ln w(M): activity count times ln(lambda), plus the hole weight."""
    k = lambda_edges(state.matching, wt)
    value = k * wt.log_lambda
    if state.matching.hole is not None:
        u, v = state.matching.hole
        value += wt.hole_log_w(u, v)
    return value


def propose(state: ChainState, draws: BufferedDraws) -> ChainState:
    """The proposal M' for one transition, before the acceptance filter."""
    matching = state.matching
    n = matching.n
    if matching.is_perfect:
        # Each row owns exactly one pair, so a uniform row index selects a
        # uniform matched pair.
        target = draws.edge_index()
        removed = (target, matching.row_to_col()[target])
        return ChainState(Matching(n, matching.pairs - {removed}, removed))
    hu, hv = matching.hole
    x = draws.vertex_index()
    assignment = matching.row_to_col()
    if x < n:
        if x == hu:
            return ChainState(Matching(n, matching.pairs | {(hu, hv)}, None))
        z = assignment[x]
        new_pairs = (matching.pairs - {(x, z)}) | {(x, hv)}
        return ChainState(Matching(n, new_pairs, (hu, z)))
    xc = x - n
    if xc == hv:
        return ChainState(Matching(n, matching.pairs | {(hu, hv)}, None))
    w = next(u for u, v in matching.pairs if v == xc)
    new_pairs = (matching.pairs - {(w, xc)}) | {(hu, xc)}
    return ChainState(Matching(n, new_pairs, (w, hv)))


def step(state: ChainState, wt: WeightTable, draws: BufferedDraws) -> ChainState:
    """One Metropolis transition; returns the new state (possibly the old)."""
    proposal = propose(state, draws)
    delta = log_weight(proposal, wt) - log_weight(state, wt)
    if delta >= 0.0:
        return proposal
    if draws.unit() < math.exp(delta):
        return proposal
    return state


def enumerate_states(n: int) -> list[ChainState]:
    """Every perfect and near-perfect matching of K_{n,n}, in canonical order.

    There are n! perfect matchings and n^2 * (n-1)! near-perfect ones, or
    (n+1)! states in total. States are keyed by their row-assignment tuple
    (-1 marking the hole row) and returned in sorted key order.
    """
    if not 1 <= n <= 6:
        raise ValueError(f"state enumeration is practical only for 1 <= n <= 6, got {n}")
    assignments: list[tuple[int, ...]] = []
    for perm in itertools.permutations(range(n)):
        assignments.append(perm)
    for hu in range(n):
        for hv in range(n):
            other_rows = [u for u in range(n) if u != hu]
            other_cols = [v for v in range(n) if v != hv]
            for perm in itertools.permutations(other_cols):
                assignment = [-1] * n
                for u, v in zip(other_rows, perm):
                    assignment[u] = v
                assignments.append(tuple(assignment))
    assignments.sort()
    return [ChainState(Matching.from_row_to_col(a)) for a in assignments]


def _proposal_distribution(state: ChainState, n: int) -> list[tuple[ChainState, float]]:
    """All proposals from a state with their selection probabilities."""
    matching = state.matching
    out: list[tuple[ChainState, float]] = []
    if matching.is_perfect:
        for removed in matching.pairs:
            out.append(
                (ChainState(Matching(n, matching.pairs - {removed}, removed)), 1.0 / n)
            )
        return out
    hu, hv = matching.hole
    # x = u and x = v both propose completing the hole pair.
    out.append((ChainState(Matching(n, matching.pairs | {(hu, hv)}, None)), 2.0 / (2 * n)))
    for u, v in matching.pairs:
        # Drawing matched column v slides the hole row to u's place.
        new_pairs = (matching.pairs - {(u, v)}) | {(hu, v)}
        out.append((ChainState(Matching(n, new_pairs, (u, hv))), 1.0 / (2 * n)))
        # Drawing matched row u slides the hole column to v's place.
        new_pairs = (matching.pairs - {(u, v)}) | {(u, hv)}
        out.append((ChainState(Matching(n, new_pairs, (hu, v))), 1.0 / (2 * n)))
    return out


def state_key(state: ChainState) -> tuple[int, ...]:
    return tuple(state.matching.row_to_col())


def build_transition_matrix(n: int, wt: WeightTable) -> tuple[list[ChainState], np.ndarray]:
    """Explicit transition matrix from the proposal and acceptance rules."""
    states = enumerate_states(n)
    index = {state_key(s): i for i, s in enumerate(states)}
    size = len(states)
    matrix = np.zeros((size, size))
    log_weights = [log_weight(s, wt) for s in states]
    for i, state in enumerate(states):
        for proposal, select_p in _proposal_distribution(state, n):
            j = index[state_key(proposal)]
            accept = min(1.0, math.exp(log_weights[j] - log_weights[i]))
            matrix[i, j] += select_p * accept
            matrix[i, i] += select_p * (1.0 - accept)
    return states, matrix


def exact_stationary(
    n: int,
    wt: WeightTable,
    residual: float = 1e-12,
    max_iterations: int = 500_000,
) -> tuple[list[ChainState], np.ndarray]:
    """Stationary distribution of the enumerated chain by power iteration.

    Iterates pi <- pi P until the L1 residual drops below ``residual``.
    Returns the states (in enumeration order) with their probabilities.
    """
    if n > 5:
        raise ValueError(f"exact stationary distribution is limited to n <= 5, got {n}")
    states, matrix = build_transition_matrix(n, wt)
    pi = np.full(len(states), 1.0 / len(states))
    for _ in range(max_iterations):
        nxt = pi @ matrix
        if np.abs(nxt - pi).sum() < residual:
            return states, nxt
        pi = nxt
    raise StationaryConvergenceError(
        f"no convergence to L1 residual {residual} within {max_iterations} iterations"
    )


class ChainSampler:
    """Mutable walker used by the estimator's inner loop.

    Keeps the matching as paired row/column assignment arrays plus the hole,
    maintains the non-instance pair count incrementally, and consumes draws
    from a BufferedDraws in exactly the same order as the reference ``step``
    function, so short trajectories of the two are interchangeable.
    """

    def __init__(self, wt: WeightTable, start: ChainState, draws: BufferedDraws):
        n = wt.n
        if draws.n != n:
            raise ValueError("draw source sized for a different n")
        self.n = n
        self.draws = draws
        self.edge_flat = list(wt.edge_present)
        self.log_w = list(wt.log_w)
        self.log_lambda = wt.log_lambda
        matching = start.matching
        matching.validate()
        self.row_to_col = matching.row_to_col()
        self.col_to_row = [-1] * n
        for u, v in matching.pairs:
            self.col_to_row[v] = u
        if matching.hole is None:
            self.hole_u = -1
            self.hole_v = -1
        else:
            self.hole_u, self.hole_v = matching.hole
        self.lambda_count = sum(
            1 for u, v in matching.pairs if not self.edge_flat[u * n + v]
        )
        self.steps_taken = 0

    def set_weights(self, wt: WeightTable) -> None:
        """Swap in the next stage's activity and hole weights."""
        if wt.n != self.n or list(wt.edge_present) != self.edge_flat:
            raise ValueError("weight table belongs to a different instance")
        self.log_w = list(wt.log_w)
        self.log_lambda = wt.log_lambda

    def recount_lambda_edges(self) -> int:
        """Direct recount of matched non-instance pairs, for verification."""
        n = self.n
        return sum(
            1
            for u, v in enumerate(self.row_to_col)
            if v >= 0 and not self.edge_flat[u * n + v]
        )

    def state(self) -> ChainState:
        n = self.n
        pairs = frozenset((u, v) for u, v in enumerate(self.row_to_col) if v >= 0)
        hole = None if self.hole_u < 0 else (self.hole_u, self.hole_v)
        return ChainState(Matching(n, pairs, hole), self.lambda_count)

    @property
    def is_perfect(self) -> bool:
        return self.hole_u < 0

    def hole(self) -> tuple[int, int] | None:
        return None if self.hole_u < 0 else (self.hole_u, self.hole_v)

    def walk(self, steps: int) -> None:
        """Advance the chain by ``steps`` Metropolis transitions."""
        n = self.n
        edge = self.edge_flat
        log_w = self.log_w
        log_lambda = self.log_lambda
        r2c = self.row_to_col
        c2r = self.col_to_row
        hu = self.hole_u
        hv = self.hole_v
        k = self.lambda_count
        draws = self.draws
        ebuf = draws.edge_buf
        ei = draws.edge_pos
        vbuf = draws.vert_buf
        vi = draws.vert_pos
        ubuf = draws.unit_buf
        ui = draws.unit_pos
        exp = math.exp

        for _ in range(steps):
            if hu < 0:
                # Perfect: drop a uniformly chosen matched pair.
                if ei >= len(ebuf):
                    ebuf = draws.refill_edge()
                    ei = 0
                u = ebuf[ei]
                ei += 1
                v = r2c[u]
                dk = edge[u * n + v] - 1
                delta = dk * log_lambda + log_w[u * n + v]
                if delta >= 0.0:
                    accept = True
                else:
                    if ui >= len(ubuf):
                        ubuf = draws.refill_unit()
                        ui = 0
                    accept = ubuf[ui] < exp(delta)
                    ui += 1
                if accept:
                    r2c[u] = -1
                    c2r[v] = -1
                    hu = u
                    hv = v
                    k += dk
            else:
                if vi >= len(vbuf):
                    vbuf = draws.refill_vert()
                    vi = 0
                x = vbuf[vi]
                vi += 1
                if x < n:
                    if x == hu:
                        # Complete the hole pair.
                        dk = 1 - edge[hu * n + hv]
                        delta = dk * log_lambda - log_w[hu * n + hv]
                        if delta >= 0.0:
                            accept = True
                        else:
                            if ui >= len(ubuf):
                                ubuf = draws.refill_unit()
                                ui = 0
                            accept = ubuf[ui] < exp(delta)
                            ui += 1
                        if accept:
                            r2c[hu] = hv
                            c2r[hv] = hu
                            hu = -1
                            k += dk
                    else:
                        # Matched row x: swing its column onto the hole column.
                        z = r2c[x]
                        base = x * n
                        dk = edge[base + z] - edge[base + hv]
                        delta = (
                            dk * log_lambda
                            + log_w[hu * n + z]
                            - log_w[hu * n + hv]
                        )
                        if delta >= 0.0:
                            accept = True
                        else:
                            if ui >= len(ubuf):
                                ubuf = draws.refill_unit()
                                ui = 0
                            accept = ubuf[ui] < exp(delta)
                            ui += 1
                        if accept:
                            r2c[x] = hv
                            c2r[hv] = x
                            c2r[z] = -1
                            hv = z
                            k += dk
                else:
                    xc = x - n
                    if xc == hv:
                        dk = 1 - edge[hu * n + hv]
                        delta = dk * log_lambda - log_w[hu * n + hv]
                        if delta >= 0.0:
                            accept = True
                        else:
                            if ui >= len(ubuf):
                                ubuf = draws.refill_unit()
                                ui = 0
                            accept = ubuf[ui] < exp(delta)
                            ui += 1
                        if accept:
                            r2c[hu] = hv
                            c2r[hv] = hu
                            hu = -1
                            k += dk
                    else:
                        # Matched column xc: pull it onto the hole row.
                        w = c2r[xc]
                        dk = edge[w * n + xc] - edge[hu * n + xc]
                        delta = (
                            dk * log_lambda
                            + log_w[w * n + hv]
                            - log_w[hu * n + hv]
                        )
                        if delta >= 0.0:
                            accept = True
                        else:
                            if ui >= len(ubuf):
                                ubuf = draws.refill_unit()
                                ui = 0
                            accept = ubuf[ui] < exp(delta)
                            ui += 1
                        if accept:
                            r2c[w] = -1
                            r2c[hu] = xc
                            c2r[xc] = hu
                            hu = w
                            k += dk

        self.hole_u = hu
        self.hole_v = hv
        self.lambda_count = k
        self.steps_taken += steps
        draws.edge_pos = ei
        draws.vert_pos = vi
        draws.unit_pos = ui
