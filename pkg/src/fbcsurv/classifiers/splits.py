"""Flat-histogram split scanning for integer feature matrices.

Features are binned once per fit: dense value codes for narrow columns,
rank codes (np.unique) for wide ones. Every column's bins live in one flat
code space, so a node's class/gradient sums over all (feature, bin) cells
come from a single bincount pass, and the best split is an argmax over the
flat gain vector. Flat order is column-major by feature then ascending value,
which makes "first max" exactly the deterministic tie-break: lowest feature
index, then lowest threshold.

Splits are `feature <= t` with t the midpoint between consecutive distinct
values present at the node, so integer features give a finite, exact set.
"""

from __future__ import annotations

import numpy as np

_DENSE_SPAN_CAP = 512


class BinnedMatrix:
    """Per-column integer binning of a feature matrix, shared across rounds/nodes."""

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        self.n, self.d = X.shape
        offsets = [0]
        codes = np.empty_like(X)
        values: list[np.ndarray] = []
        for j in range(self.d):
            col = X[:, j]
            vmin = int(col.min())
            vmax = int(col.max())
            span = vmax - vmin + 1
            if span <= _DENSE_SPAN_CAP:
                codes[:, j] = col - vmin
                values.append(np.arange(vmin, vmax + 1, dtype=np.float64))
            else:
                uniq, inverse = np.unique(col, return_inverse=True)
                codes[:, j] = inverse
                values.append(uniq.astype(np.float64))
            offsets.append(offsets[-1] + len(values[-1]))
        self.offsets = np.asarray(offsets, dtype=np.int64)  # segment bounds, len d+1
        self.n_bins = int(self.offsets[-1])
        self.bin_values = np.concatenate(values)
        self.col_of_bin = np.repeat(np.arange(self.d, dtype=np.int64), np.diff(self.offsets))
        self.flat_codes = codes + self.offsets[:-1][np.newaxis, :]
        # cumulative count just before each bin's column segment starts
        self._seg_start = self.offsets[self.col_of_bin]

    def scan(self, idx: np.ndarray, weights: tuple[np.ndarray, ...]):
        """Per flat bin: node row counts, left-cumulative counts and weight sums.

        `weights` entries must already be sliced to the node rows (same order
        as idx). Returns (counts, left_counts, left_sums, valid) where valid
        marks bins usable as split points (occupied, with rows on both sides).
        """
        fc = self.flat_codes[idx].ravel()
        counts = np.bincount(fc, minlength=self.n_bins)
        cum = np.concatenate(([0], np.cumsum(counts)))
        left_counts = cum[1:] - cum[self._seg_start]
        left_sums = []
        for w in weights:
            ws = np.bincount(fc, weights=np.repeat(w, self.d), minlength=self.n_bins)
            wcum = np.concatenate(([0.0], np.cumsum(ws)))
            left_sums.append(wcum[1:] - wcum[self._seg_start])
        valid = (counts > 0) & (left_counts < len(idx))
        return counts, left_counts, left_sums, valid

    def split_at(self, flat_bin: int, counts: np.ndarray) -> tuple[int, float]:
        """Resolve a chosen flat bin to (feature index, midpoint threshold)."""
        j = int(self.col_of_bin[flat_bin])
        seg_end = int(self.offsets[j + 1])
        nxt = flat_bin + 1 + int(np.argmax(counts[flat_bin + 1 : seg_end] > 0))
        return j, (self.bin_values[flat_bin] + self.bin_values[nxt]) / 2.0

    def left_mask(self, idx: np.ndarray, feature: int, flat_bin: int) -> np.ndarray:
        """Rows of idx going left for a split chosen at flat_bin (value <= threshold)."""
        return self.flat_codes[idx, feature] <= flat_bin


def argbest(scores: np.ndarray, valid: np.ndarray, maximize: bool = True) -> int | None:
    """Index of the best valid score; first occurrence wins ties. None if no valid cell."""
    if not valid.any():
        return None
    masked = np.where(valid, scores, -np.inf if maximize else np.inf)
    best = int(np.argmax(masked) if maximize else np.argmin(masked))
    if not valid[best]:
        return None
    return best
