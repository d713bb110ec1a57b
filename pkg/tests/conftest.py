"""Shared test oracles: deliberately naive reimplementations used to verify
the fast production code paths."""

import numpy as np


def flood_fill_labels(cells: np.ndarray, connectivity: int = 4) -> np.ndarray:
    """Naive BFS component labeling of planted cells; the oracle for
    label_components."""
    h, w = cells.shape
    if connectivity == 4:
        offs = ((0, 1), (0, -1), (1, 0), (-1, 0))
    else:
        offs = ((0, 1), (0, -1), (1, 0), (-1, 0),
                (1, 1), (1, -1), (-1, 1), (-1, -1))
    labels = np.zeros((h, w), dtype=np.int64)
    next_label = 0
    for y in range(h):
        for x in range(w):
            if cells[y, x] and not labels[y, x]:
                next_label += 1
                stack = [(y, x)]
                labels[y, x] = next_label
                while stack:
                    cy, cx = stack.pop()
                    for dy, dx in offs:
                        ny, nx = cy + dy, cx + dx
                        if (0 <= ny < h and 0 <= nx < w
                                and cells[ny, nx] and not labels[ny, nx]):
                            labels[ny, nx] = next_label
                            stack.append((ny, nx))
    return labels


def label_partition_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two labelings induce the same partition of the nonzero cells
    (label numbering may differ)."""
    if ((a > 0) != (b > 0)).any():
        return False
    pairs = {}
    for la, lb in zip(a.ravel().tolist(), b.ravel().tolist()):
        if la == 0:
            continue
        if pairs.setdefault(la, lb) != lb:
            return False
    return len(set(pairs.values())) == len(pairs)


def brute_force_player_utility(cells, p, owner, i, cost, connectivity=4):
    """Player utility straight from the definition: for each planted cell the
    player owns, survival probability = 1 - mass of its flood-fill component."""
    labels = flood_fill_labels(np.asarray(cells), connectivity)
    total = 0.0
    h, w = labels.shape
    for y in range(h):
        for x in range(w):
            if owner[y, x] == i and cells[y, x]:
                mass = p[labels == labels[y, x]].sum()
                total += (1.0 - mass) - cost
    return total
