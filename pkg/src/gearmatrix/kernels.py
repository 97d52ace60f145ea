"""Array kernels with an optional numba backend.

Set ``GEARMATRIX_NO_NUMBA=1`` to force the pure-numpy implementations (also
used automatically when numba is not importable).  Both paths return
identical results; ``tests/test_kernels.py`` runs them side by side.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("GEARMATRIX_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised through USING_NUMBA
    if _DISABLED:
        raise ImportError
    from numba import njit

    USING_NUMBA = True
except ImportError:  # pragma: no cover
    USING_NUMBA = False


# -- numpy reference implementations ----------------------------------------


def pair_conflicts_np(occupied: np.ndarray, pairs: np.ndarray) -> int:
    """Number of connected pairs whose two slots are both occupied."""
    if len(pairs) == 0:
        return 0
    return int(np.count_nonzero(occupied[pairs[:, 0]] & occupied[pairs[:, 1]]))


def pair_conflicts_batch_np(occupied: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Row-wise ``pair_conflicts`` over a (batch, n_slots) occupancy matrix."""
    if len(pairs) == 0:
        return np.zeros(len(occupied), dtype=np.int64)
    return np.count_nonzero(occupied[:, pairs[:, 0]] & occupied[:, pairs[:, 1]], axis=1)


def manhattan_sum_np(cur: np.ndarray, tgt: np.ndarray) -> int:
    return int(np.abs(cur - tgt).sum())


def grid_independent_np(mask: np.ndarray, rows: int, cols: int) -> bool:
    """True when no two 4-adjacent cells of the ``rows x cols`` mask are set."""
    m = mask.reshape(rows, cols).astype(bool)
    return not (m[:, 1:] & m[:, :-1]).any() and not (m[1:, :] & m[:-1, :]).any()


# -- numba versions ---------------------------------------------------------

if USING_NUMBA:

    @njit(cache=True)
    def _pair_conflicts_nb(occupied, pairs):
        n = 0
        for i in range(pairs.shape[0]):
            if occupied[pairs[i, 0]] and occupied[pairs[i, 1]]:
                n += 1
        return n

    @njit(cache=True)
    def _pair_conflicts_batch_nb(occupied, pairs):
        out = np.zeros(occupied.shape[0], dtype=np.int64)
        for b in range(occupied.shape[0]):
            n = 0
            for i in range(pairs.shape[0]):
                if occupied[b, pairs[i, 0]] and occupied[b, pairs[i, 1]]:
                    n += 1
            out[b] = n
        return out

    @njit(cache=True)
    def _manhattan_sum_nb(cur, tgt):
        s = 0
        for i in range(cur.shape[0]):
            for j in range(cur.shape[1]):
                s += abs(cur[i, j] - tgt[i, j])
        return s

    @njit(cache=True)
    def _grid_independent_nb(mask, rows, cols):
        for r in range(rows):
            for c in range(cols):
                if mask[r * cols + c]:
                    if c + 1 < cols and mask[r * cols + c + 1]:
                        return False
                    if r + 1 < rows and mask[(r + 1) * cols + c]:
                        return False
        return True

    def pair_conflicts(occupied, pairs):
        return int(_pair_conflicts_nb(occupied, pairs))

    def pair_conflicts_batch(occupied, pairs):
        return _pair_conflicts_batch_nb(occupied, pairs)

    def manhattan_sum(cur, tgt):
        if cur.size == 0:
            return 0
        return int(_manhattan_sum_nb(cur.reshape(len(cur), -1), tgt.reshape(len(tgt), -1)))

    def grid_independent(mask, rows, cols):
        return bool(_grid_independent_nb(mask, rows, cols))

else:
    pair_conflicts = pair_conflicts_np
    pair_conflicts_batch = pair_conflicts_batch_np
    manhattan_sum = manhattan_sum_np
    grid_independent = grid_independent_np
