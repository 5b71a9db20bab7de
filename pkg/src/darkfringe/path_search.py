"""Plan paths over the unit grid that avoid invalid boundaries.

The product strategy is a column relay: first vertical runs inside the origin
column, then a sweep outward column by column where each new column is entered
through valid horizontal edges from units already reached and filled in by
vertical runs that stop at invalid vertical boundaries. The sweep never
returns to an earlier column, so a pocket whose only opening points away from
the origin along the sweep axis defeats it; rerunning on the transposed grid
(matrix_a and matrix_b swapped and transposed, coordinates flipped) turns that
opening sideways and recovers almost all such units, and any leftovers can be
retried from additional origins whose own paths are already known.

A plain breadth-first search over valid edges lives alongside as a correctness
oracle only; it is not the planner.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .boundary_logic import InvalidBoundaryMaps

MOVES = {"U": (-1, 0), "D": (1, 0), "L": (0, -1), "R": (0, 1)}
_TRANSPOSE_MOVE = str.maketrans("UDLR", "LRUD")


@dataclass
class PathPlan:
    """Per-unit move sequences from a single origin.

    paths[r][c] is a string over UDLR, or None for UNREACHABLE. provenance
    names the pass that found each unit's path.
    """

    origin: tuple[int, int]
    paths: list[list[str | None]]
    provenance: list[list[str | None]]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.paths), len(self.paths[0])

    def reachable_mask(self) -> np.ndarray:
        return np.array([[p is not None for p in row] for row in self.paths])


@dataclass(frozen=True)
class BlockingStats:
    sigma: float
    trials: int
    single_pass_block_rate: float
    retry_block_rate: float


def horizontal_edge_valid(invalid: InvalidBoundaryMaps, r: int, c_left: int) -> bool:
    return not invalid.matrix_a[r, c_left]


def vertical_edge_valid(invalid: InvalidBoundaryMaps, r_upper: int, c: int) -> bool:
    return not invalid.matrix_b[r_upper, c]


def _column_segments(invalid: InvalidBoundaryMaps, c: int) -> np.ndarray:
    """Segment id per row of column c; rows in one segment are mutually
    reachable by vertical moves."""
    s1 = invalid.s1
    seg = np.zeros(s1, dtype=int)
    for r in range(1, s1):
        seg[r] = seg[r - 1] + (0 if vertical_edge_valid(invalid, r - 1, c) else 1)
    return seg


def _vertical_path(r_from: int, r_to: int) -> str:
    if r_to >= r_from:
        return "D" * (r_to - r_from)
    return "U" * (r_from - r_to)


def plan_paths(invalid: InvalidBoundaryMaps, origin: tuple[int, int]) -> PathPlan:
    """Single column-relay pass from one origin.

    Stage 1 fills the origin column by vertical runs. The sweep then moves
    outward one column at a time (right, then left), entering each column
    through valid horizontal edges from reached units of the previous column
    and extending vertically to every row the entries' segments cover. The
    origin column alone has swept neighbors on both sides, so its leftover
    segments are re-entered from them, and the outward sweeps are repeated
    until nothing new is reached (a relay through the origin column can
    unlock further columns). The sweep direction is never reversed anywhere
    else: a pocket whose only valid opening faces away from the origin stays
    UNREACHABLE (a value, not an error).
    """
    s1, s2 = invalid.s1, invalid.s2
    r0, c0 = origin
    if not (0 <= r0 < s1 and 0 <= c0 < s2):
        raise ValueError(f"origin {origin} outside {s1} x {s2} grid")
    paths: list[list[str | None]] = [[None] * s2 for _ in range(s1)]
    prov: list[list[str | None]] = [[None] * s2 for _ in range(s1)]
    segments = [_column_segments(invalid, c) for c in range(s2)]

    def fill_column(c: int, entries: list[tuple[int, str]]) -> bool:
        """Assign paths to unreached rows of column c from candidate entries.

        Each entry is (row, path-to-that-row-in-column-c). Targets take the
        nearest entry within their vertical segment; ties go to the smaller
        row, then to the earlier entry in the list.
        """
        seg = segments[c]
        by_segment: dict[int, list[tuple[int, str]]] = {}
        for row, path in entries:
            by_segment.setdefault(seg[row], []).append((row, path))
        changed = False
        for r in range(s1):
            if paths[r][c] is not None:
                continue
            candidates = by_segment.get(seg[r])
            if not candidates:
                continue
            e_row, e_path = min(candidates, key=lambda rp: (abs(rp[0] - r), rp[0]))
            paths[r][c] = e_path + _vertical_path(e_row, r)
            prov[r][c] = "primary"
            changed = True
        return changed

    def crossings(c_from: int, c_to: int, move: str) -> list[tuple[int, str]]:
        entries = []
        for r in range(s1):
            if paths[r][c_from] is None:
                continue
            if horizontal_edge_valid(invalid, r, min(c_from, c_to)):
                entries.append((r, paths[r][c_from] + move))
        return entries

    fill_column(c0, [(r0, "")])
    while True:
        changed = False
        for direction, move in ((1, "R"), (-1, "L")):
            c = c0 + direction
            while 0 <= c < s2:
                changed |= fill_column(c, crossings(c - direction, c, move))
                c += direction
        reentry = []
        if c0 + 1 < s2:
            reentry += crossings(c0 + 1, c0, "L")
        if c0 - 1 >= 0:
            reentry += crossings(c0 - 1, c0, "R")
        changed |= fill_column(c0, reentry)
        if not changed:
            break
    return PathPlan(origin=origin, paths=paths, provenance=prov)


def transpose_invalid(invalid: InvalidBoundaryMaps) -> InvalidBoundaryMaps:
    """Swap and transpose the two matrices; unit (r, c) maps to (c, r)."""
    return InvalidBoundaryMaps(matrix_a=invalid.matrix_b.T.copy(),
                               matrix_b=invalid.matrix_a.T.copy())


def _transpose_path(path: str) -> str:
    return path.translate(_TRANSPOSE_MOVE)


def plan_with_retry(invalid: InvalidBoundaryMaps,
                    origins: list[tuple[int, int]]) -> PathPlan:
    """Column-relay plan with the transpose-exchange retry and extra origins.

    Runs :func:`plan_paths` from the first origin, replans the leftovers on
    the transposed grid, and finally retries remaining gaps from the other
    origins, rebasing their paths through the first origin so every emitted
    path starts there. Units no pass can reach stay UNREACHABLE.
    """
    if not origins:
        raise ValueError("need at least one origin")
    s1, s2 = invalid.s1, invalid.s2
    plan = plan_paths(invalid, origins[0])
    transposed = None

    def fill_from(sub: PathPlan, prefix: str, label: str, transpose: bool):
        for r in range(s1):
            for c in range(s2):
                if plan.paths[r][c] is not None:
                    continue
                sub_path = sub.paths[c][r] if transpose else sub.paths[r][c]
                if sub_path is None:
                    continue
                if transpose:
                    sub_path = _transpose_path(sub_path)
                plan.paths[r][c] = prefix + sub_path
                plan.provenance[r][c] = label

    if any(p is None for row in plan.paths for p in row):
        transposed = transpose_invalid(invalid)
        r0, c0 = origins[0]
        sub = plan_paths(transposed, (c0, r0))
        fill_from(sub, "", "transpose", transpose=True)

    for k, (rk, ck) in enumerate(origins[1:], start=2):
        if not any(p is None for row in plan.paths for p in row):
            break
        prefix = plan.paths[rk][ck]
        if prefix is None:
            continue   # this origin is itself unreached; cannot rebase through it
        sub = plan_paths(invalid, (rk, ck))
        fill_from(sub, prefix, f"origin{k}", transpose=False)
        if transposed is None:
            transposed = transpose_invalid(invalid)
        sub_t = plan_paths(transposed, (ck, rk))
        fill_from(sub_t, prefix, f"origin{k}+transpose", transpose=True)
    return plan


def replay(plan: PathPlan, r: int, c: int,
           invalid: InvalidBoundaryMaps | None = None) -> tuple[int, int]:
    """Walk the stored path for unit (r, c) from the plan origin.

    Returns the landing unit; raises if the path leaves the grid or, when
    `invalid` is given, crosses a flagged boundary. Used by tests to check
    plan soundness.
    """
    path = plan.paths[r][c]
    if path is None:
        raise ValueError(f"unit {(r, c)} is unreachable")
    rr, cc = plan.origin
    s1 = len(plan.paths)
    s2 = len(plan.paths[0])
    for mv in path:
        dr, dc = MOVES[mv]
        nr, nc = rr + dr, cc + dc
        if not (0 <= nr < s1 and 0 <= nc < s2):
            raise ValueError(f"path for {(r, c)} leaves the grid at {(nr, nc)}")
        if invalid is not None:
            if dr == 0:
                ok = horizontal_edge_valid(invalid, rr, min(cc, nc))
            else:
                ok = vertical_edge_valid(invalid, min(rr, nr), cc)
            if not ok:
                raise ValueError(f"path for {(r, c)} crosses an invalid boundary")
        rr, cc = nr, nc
    return rr, cc


def reachable_bfs(invalid: InvalidBoundaryMaps, origin: tuple[int, int]) -> np.ndarray:
    """Ground-truth reachability over valid edges (oracle, not the planner)."""
    s1, s2 = invalid.s1, invalid.s2
    seen = np.zeros((s1, s2), dtype=bool)
    r0, c0 = origin
    seen[r0, c0] = True
    queue = deque([(r0, c0)])
    while queue:
        r, c = queue.popleft()
        if r > 0 and not seen[r - 1, c] and vertical_edge_valid(invalid, r - 1, c):
            seen[r - 1, c] = True
            queue.append((r - 1, c))
        if r + 1 < s1 and not seen[r + 1, c] and vertical_edge_valid(invalid, r, c):
            seen[r + 1, c] = True
            queue.append((r + 1, c))
        if c > 0 and not seen[r, c - 1] and horizontal_edge_valid(invalid, r, c - 1):
            seen[r, c - 1] = True
            queue.append((r, c - 1))
        if c + 1 < s2 and not seen[r, c + 1] and horizontal_edge_valid(invalid, r, c):
            seen[r, c + 1] = True
            queue.append((r, c + 1))
    return seen


def random_invalid_maps(s1: int, s2: int, sigma: float,
                        rng: np.random.Generator) -> InvalidBoundaryMaps:
    """Each boundary independently invalid with probability sigma."""
    return InvalidBoundaryMaps(
        matrix_a=rng.random((s1, s2 - 1)) < sigma,
        matrix_b=rng.random((s1 - 1, s2)) < sigma)


def blocking_montecarlo(grid: tuple[int, int], sigmas, trials: int, seed: int,
                        origin: tuple[int, int] = (0, 0)) -> list[BlockingStats]:
    """Estimate how often the planner misses units that are actually connected.

    For each sigma, random invalid maps are drawn; a unit counts as blocked
    when breadth-first search proves it connected to the origin but the plan
    leaves it UNREACHABLE (true enclosures are dead ends, not blocking). The
    reported rate is the blocked fraction of all oracle-connected units
    pooled over the trials, i.e. the per-path blocking probability, for the
    single pass and for the transpose retry. Per-trial seeds derive from the
    batch seed, so results do not depend on evaluation order.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials for meaningful rates")
    s1, s2 = grid
    out = []
    for si, sigma in enumerate(sigmas):
        single_blocked = 0
        retry_blocked = 0
        connected_total = 0
        for t in range(trials):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(si, t)))
            invalid = random_invalid_maps(s1, s2, sigma, rng)
            connected = reachable_bfs(invalid, origin)
            connected_total += int(connected.sum())
            single = plan_paths(invalid, origin).reachable_mask()
            missed = connected & ~single
            if missed.any():
                single_blocked += int(missed.sum())
                retry = plan_with_retry(invalid, [origin]).reachable_mask()
                retry_blocked += int((connected & ~retry).sum())
        out.append(BlockingStats(sigma=float(sigma), trials=trials,
                                 single_pass_block_rate=single_blocked / connected_total,
                                 retry_block_rate=retry_blocked / connected_total))
    return out
