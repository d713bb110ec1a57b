"""Equilibrium approximation.

Outer loop: best-response dynamics — starting from an empty grid, players are
visited in fixed index order and, with probability p_player each visit, have
their whole subgrid re-optimized against everyone else's current planting.

Inner loop ("OPT"): sampled fictitious play — each of the player's cells acts
as a cooperative sub-player.  Every iteration draws a reference strategy from
a short history window (uniform random bits when the history is empty or with
exploration probability alpha), sets a random subset of the reference's cells
to their myopically better action against it, and keeps the resulting
candidate only if it strictly improves the player's exact utility.

All randomness flows through a single numpy Generator per run; draw order is
fixed (one uniform per player per outer round; per inner iteration the
reference strategy first, then one uniform per cell in row-major order), so a
(parameters, seed) pair reproduces a run bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field
from itertools import product

import numpy as np
from scipy import ndimage

from . import __version__
from .grid import (
    ComponentLabeling,
    GridConfig,
    PlayerPartition,
    neighbor_structure,
    player_utility,
    welfare,
)

# (outer, inner) iteration counts keyed by cells-per-player; tuned so that
# results stop changing appreciably with more iterations.
ITERATION_SCHEDULE = {
    16384: (1, 200),
    4096: (5, 120),
    1024: (20, 80),
    256: (20, 80),
    64: (20, 80),
    16: (40, 80),
    4: (20, 35),
    1: (50, 1),
}


def default_iterations(m: int, cells_per_player: int) -> tuple[int, int]:
    """Default (outer, inner) iteration counts.

    A single player always gets one outer round (re-optimizing from scratch a
    second time cannot help a lone optimizer) with the full inner budget;
    otherwise the schedule is keyed on cells-per-player, falling back to the
    nearest key in log-space for off-schedule sizes.
    """
    if m == 1:
        return (1, 200)
    if cells_per_player in ITERATION_SCHEDULE:
        return ITERATION_SCHEDULE[cells_per_player]
    keys = np.array(sorted(ITERATION_SCHEDULE))
    nearest = keys[np.argmin(np.abs(np.log(keys) - np.log(cells_per_player)))]
    return ITERATION_SCHEDULE[int(nearest)]


def default_p_cell(cells_per_player: int) -> float:
    return max(0.05, 1.0 / cells_per_player)


@dataclass
class DynamicsParams:
    """Knobs of the equilibrium approximation.

    t_br/t_opt/p_cell left as None are resolved from the player count at run
    time (see default_iterations / default_p_cell).
    """

    t_br: int | None = None
    t_opt: int | None = None
    p_player: float = 0.9
    p_cell: float | None = None
    alpha: float = 0.0
    history: int = 1
    seed: int = 0
    shuffle_players: bool = False
    connectivity: int = 4
    collect_trace: bool = True

    def validate(self) -> None:
        for name in ("p_player", "alpha"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {val}")
        if self.p_cell is not None and not 0.0 <= self.p_cell <= 1.0:
            raise ValueError(f"p_cell must be in [0, 1], got {self.p_cell}")
        if self.history < 1:
            raise ValueError("history window must be >= 1")
        for name in ("t_br", "t_opt"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be >= 1, got {val}")
        neighbor_structure(self.connectivity)


@dataclass
class RunResult:
    """Final profile plus everything needed to reproduce and audit a run."""

    config: GridConfig
    player_utilities: np.ndarray
    welfare_trajectory: list
    trace: list = _field(repr=False)
    manifest: dict = _field(default_factory=dict)

    @property
    def welfare(self) -> float:
        return self.welfare_trajectory[-1]


def choose_actions(n_cells: int, alpha: float, history: list, rng: np.random.Generator) -> np.ndarray:
    """Reference strategy for one inner iteration.

    Per cell: with probability alpha, or whenever the history is empty, a
    uniform random bit; otherwise the cell's value in a uniformly drawn
    history entry.  Draw order: alpha-uniforms for all cells (row-major),
    then the random bits (if any cell needs one), then the history indices.
    """
    u = rng.random(n_cells)
    random_cell = (u <= alpha) | (len(history) == 0)
    out = np.empty(n_cells, dtype=np.uint8)
    if random_cell.any():
        bits = rng.integers(0, 2, size=n_cells, dtype=np.uint8)
        out[random_cell] = bits[random_cell]
    if history and not random_cell.all():
        idx = rng.integers(0, len(history), size=n_cells)
        keep = ~random_cell
        if len(history) == 1:
            out[keep] = history[0][keep]
        else:
            stacked = np.stack(history)
            out[keep] = stacked[idx[keep], np.flatnonzero(keep)]
    return out


def _label_stats(cells: np.ndarray, p: np.ndarray, structure: np.ndarray):
    labels, n = ndimage.label(cells, structure=structure)
    masses = np.bincount(labels.ravel(), weights=p.ravel(), minlength=n + 1)[1:]
    return labels, masses


def _plant_gain(labels: np.ndarray, masses: np.ndarray, own_counts: np.ndarray,
                y: int, x: int, p_cell_val: float, cost: float, connectivity: int) -> float:
    """Utility change for the owning player from planting empty cell (y, x).

    Planting merges the distinct neighboring components into one whose mass is
    the sum of theirs plus this cell's strike probability; the new tree earns
    (1 - merged mass - cost) and every other tree the player owns in a merged
    component loses the mass increase.
    """
    h, w = labels.shape
    if connectivity == 4:
        offs = ((0, 1), (0, -1), (1, 0), (-1, 0))
    else:
        offs = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))
    neigh = []
    for dy, dx in offs:
        ny, nx = y + dy, x + dx
        if 0 <= ny < h and 0 <= nx < w:
            lab = labels[ny, nx]
            if lab and lab not in neigh:
                neigh.append(lab)
    merged = p_cell_val + sum(masses[lab - 1] for lab in neigh)
    gain = 1.0 - merged - cost
    for lab in neigh:
        gain -= own_counts[lab - 1] * (merged - masses[lab - 1])
    return gain


def opt_sampled_fp(i: int, base_cells: np.ndarray, field, part: PlayerPartition,
                   cost: float, t_opt: int, p_cell: float, alpha: float, h: int,
                   rng: np.random.Generator, connectivity: int = 4) -> np.ndarray:
    """Approximate best response of player i to the rest of the grid.

    base_cells holds the other players' planting (player i's cells are
    ignored).  Returns player i's strategy as a 0/1 vector over their cells in
    row-major order.
    """
    rows, cols = part.player_cells(i)
    n_i = rows.size
    structure = neighbor_structure(connectivity)
    p = field.p
    p_own = p[rows, cols]

    work = base_cells.copy()
    incumbent = np.zeros(n_i, dtype=np.uint8)
    incumbent_util = 0.0
    history: list[np.ndarray] = []

    for _ in range(t_opt):
        ref = choose_actions(n_i, alpha, history, rng)
        sel = rng.random(n_i)
        selected = (sel <= p_cell) | (n_i == 1)
        # The candidate is the reference with the selected cells replaced by
        # their best responses; mutating the reference (rather than the
        # incumbent) keeps the search moving past one-flip-stable layouts,
        # and the strict-improvement gate below still protects the incumbent.
        candidate = ref.copy()
        if selected.any():
            work[rows, cols] = ref
            labels, masses = _label_stats(work, p, structure)
            own_counts = np.bincount(labels[rows, cols], minlength=len(masses) + 1)[1:]
            for j in np.flatnonzero(selected):
                y, x = int(rows[j]), int(cols[j])
                if ref[j]:
                    # Gain formula needs the labeling with this cell empty.
                    work[y, x] = 0
                    labels0, masses0 = _label_stats(work, p, structure)
                    counts0 = np.bincount(labels0[rows, cols], minlength=len(masses0) + 1)[1:]
                    gain = _plant_gain(labels0, masses0, counts0, y, x,
                                       p[y, x], cost, connectivity)
                    work[y, x] = 1
                else:
                    gain = _plant_gain(labels, masses, own_counts, y, x,
                                       p[y, x], cost, connectivity)
                candidate[j] = 1 if gain > 0 else 0
        history.append(candidate)
        if len(history) > h:
            history.pop(0)
        if not np.array_equal(candidate, incumbent):
            work[rows, cols] = candidate
            labels, masses = _label_stats(work, p, structure)
            labs = labels[rows, cols]
            planted = labs > 0
            cand_util = float(np.sum(1.0 - masses[labs[planted] - 1])
                              - cost * planted.sum()) if planted.any() else 0.0
            if cand_util > incumbent_util:
                incumbent = candidate
                incumbent_util = cand_util
    return incumbent


def best_response_dynamics(field, part: PlayerPartition, cost: float,
                           params: DynamicsParams | None = None,
                           rng: np.random.Generator | None = None) -> RunResult:
    """Run best-response dynamics from the all-empty grid and return the
    final profile, utilities, welfare trajectory, and a reproducibility
    manifest."""
    if params is None:
        params = DynamicsParams()
    params.validate()
    if cost < 0:
        raise ValueError("cost must be nonnegative")
    n_i_max = max(part.n_player_cells(i) for i in range(part.m))
    sched = default_iterations(part.m, n_i_max)
    t_br = params.t_br if params.t_br is not None else sched[0]
    t_opt = params.t_opt if params.t_opt is not None else sched[1]
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(params.seed))

    structure = neighbor_structure(params.connectivity)
    cells = np.zeros((part.height, part.width), dtype=np.uint8)
    trajectory = []
    trace = []
    p = field.p
    if (field.width, field.height) != (part.width, part.height):
        raise ValueError("field dimensions do not match partition")

    player_cells = [part.player_cells(i) for i in range(part.m)]
    p_cells = [params.p_cell if params.p_cell is not None
               else default_p_cell(rc[0].size) for rc in player_cells]

    for rnd in range(t_br):
        order = rng.permutation(part.m) if params.shuffle_players else range(part.m)
        for i in order:
            # The per-visit skip only desynchronizes players; with a single
            # player it would just void the whole run 1 - p_player of the
            # time, so the lone player always re-optimizes.
            updated = rng.random() <= params.p_player or part.m == 1
            if updated:
                s_i = opt_sampled_fp(i, cells, field, part, cost, t_opt,
                                     p_cells[i], params.alpha, params.history,
                                     rng, params.connectivity)
                rows, cols = player_cells[i]
                cells[rows, cols] = s_i
            if params.collect_trace:
                labels, masses = _label_stats(cells, p, structure)
                rows, cols = player_cells[i]
                labs = labels[rows, cols]
                planted = labs > 0
                u_i = float(np.sum(1.0 - masses[labs[planted] - 1])
                            - cost * planted.sum()) if planted.any() else 0.0
                sizes = np.bincount(labels.ravel(), minlength=len(masses) + 1)[1:]
                n_planted = int(sizes.sum())
                w = n_planted - float(np.dot(sizes, masses)) - cost * n_planted
                trace.append((rnd, int(i), int(updated), u_i, w))
        config = GridConfig(cells)
        trajectory.append(welfare(config, field, cost, connectivity=params.connectivity))

    config = GridConfig(cells)
    utilities = np.array([player_utility(config, field, part, i, cost,
                                         connectivity=params.connectivity)
                          for i in range(part.m)])
    manifest = {
        "version": __version__,
        "width": part.width,
        "height": part.height,
        "m": part.m,
        "cost": cost,
        "field_v": field.v,
        "field_center": list(field.center) if field.center is not None else None,
        "t_br": t_br,
        "t_opt": t_opt,
        "p_player": params.p_player,
        "p_cell": params.p_cell if params.p_cell is not None else "max(0.05, 1/N_i)",
        "alpha": params.alpha,
        "history": params.history,
        "seed": params.seed,
        "shuffle_players": params.shuffle_players,
        "connectivity": params.connectivity,
    }
    return RunResult(config, utilities, trajectory, trace, manifest)


@dataclass
class NashCheck:
    """Outcome of a unilateral-deviation scan: an epsilon-equilibrium
    certificate when is_nash is True (no in-scope deviation gains more than
    tol)."""

    is_nash: bool
    max_gain: float
    witness: tuple | None = None


def is_nash(config: GridConfig, field, part: PlayerPartition, cost: float,
            scope: str = "single_flip", connectivity: int = 4,
            tol: float = 1e-9) -> NashCheck:
    """Check whether any in-scope unilateral deviation strictly improves some
    player's utility.

    scope "single_flip" tries every one-cell change; "exhaustive" tries every
    strategy of every player and is refused for players with more than 16
    cells.
    """
    part.check_dims(config.width, config.height)
    base = [player_utility(config, field, part, i, cost, connectivity=connectivity)
            for i in range(part.m)]
    max_gain = -np.inf
    witness = None

    if scope == "single_flip":
        owner_flat = part.owner.ravel()
        cells = config.cells
        for g in range(config.n_cells):
            y, x = divmod(g, config.width)
            flipped = cells.copy()
            flipped[y, x] ^= 1
            i = int(owner_flat[g])
            u = player_utility(GridConfig(flipped), field, part, i, cost,
                               connectivity=connectivity)
            gain = u - base[i]
            if gain > max_gain:
                max_gain, witness = gain, (i, ("flip", g))
    elif scope == "exhaustive":
        for i in range(part.m):
            rows, cols = part.player_cells(i)
            n_i = rows.size
            if n_i > 16:
                raise ValueError(
                    f"exhaustive deviation scan refused for player with {n_i} > 16 cells")
            trial = config.cells.copy()
            for bits in product((0, 1), repeat=n_i):
                trial[rows, cols] = bits
                u = player_utility(GridConfig(trial), field, part, i, cost,
                                   connectivity=connectivity)
                gain = u - base[i]
                if gain > max_gain:
                    max_gain, witness = gain, (i, bits)
    else:
        raise ValueError(f"unknown deviation scope {scope!r}")

    return NashCheck(is_nash=max_gain <= tol, max_gain=float(max_gain), witness=witness)
