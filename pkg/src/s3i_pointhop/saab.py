"""One-hop Saab transform: a constant DC kernel plus PCA-derived AC kernels.

Fitting needs only the first two moments of the training rows, so the model
can be built either from an in-memory matrix or by streaming batches through
`SaabStats` (the pipeline does the latter to keep full datasets out of RAM).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_EPS = 1e-12


@dataclass
class SaabModel:
    """Fitted kernels and per-channel training variances (energies).

    energies[0] belongs to the DC channel; energies[1:] are the AC channel
    variances in descending order. `bias` is kept at 0 for forward
    compatibility with cascaded variants; it is mathematically inert here.
    """

    feature_mean: np.ndarray
    dc_kernel: np.ndarray
    ac_kernels: np.ndarray
    energies: np.ndarray
    num_channels: int
    bias: float = 0.0
    rank_deficient: bool = False

    @property
    def input_dim(self) -> int:
        return self.feature_mean.shape[0]


def dc_kernel(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / np.sqrt(dim))


def _complement_basis(dim: int) -> np.ndarray:
    """Orthonormal basis (dim x (dim-1)) of the DC kernel's complement.

    Built from the Householder reflection that maps e0 to the DC kernel, so it
    is deterministic and exactly orthogonal to DC up to rounding.
    """
    dc = dc_kernel(dim)
    u = -dc.copy()
    u[0] += 1.0  # e0 - dc
    h = np.eye(dim) - 2.0 * np.outer(u, u) / (u @ u)
    return h[:, 1:]


class SaabStats:
    """Streaming first/second-moment accumulator for Saab fitting."""

    def __init__(self, dim: int):
        self.dim = dim
        self.count = 0
        self._sum = np.zeros(dim)
        self._outer = np.zeros((dim, dim))

    def update(self, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise ValueError(f"rows must be (M, {self.dim}), got {rows.shape}")
        self.count += rows.shape[0]
        self._sum += rows.sum(axis=0)
        self._outer += rows.T @ rows

    def finalize(self, num_channels: int | None = None,
                 energy_threshold: float | None = None) -> SaabModel:
        """Build the model; channel count is fixed or driven by an AC-energy cutoff."""
        if (num_channels is None) == (energy_threshold is None):
            raise ValueError("specify exactly one of num_channels / energy_threshold")
        if self.count < self.dim:
            raise ValueError(f"need at least {self.dim} training rows, got {self.count}")
        dim = self.dim
        mean = self._sum / self.count
        cov = self._outer / self.count - np.outer(mean, mean)

        dc = dc_kernel(dim)
        dc_energy = max(float(dc @ cov @ dc), 0.0)
        basis = _complement_basis(dim)
        eigvals, eigvecs = np.linalg.eigh(basis.T @ cov @ basis)
        ac_energies = np.clip(eigvals[::-1], 0.0, None)
        kernels = (basis @ eigvecs[:, ::-1]).T  # rows, descending energy
        # deterministic sign: the largest-magnitude entry of each kernel is positive
        flip = kernels[np.arange(dim - 1), np.abs(kernels).argmax(axis=1)] < 0
        kernels[flip] *= -1.0

        if num_channels is not None:
            d = int(num_channels)
            if not 1 <= d <= dim:
                raise ValueError(f"num_channels must be in [1, {dim}], got {d}")
        else:
            total_ac = ac_energies.sum()
            if total_ac <= 0.0:
                d = 1
            else:
                cumulative = np.cumsum(ac_energies) / total_ac
                d = 1 + int(np.searchsorted(cumulative, energy_threshold) + 1)
                d = min(d, dim)

        # numerical rank relative to the raw second moment, so clouds of
        # identical rows (covariance = cancellation residue) count as rank 0
        raw_scale = max(float(np.trace(self._outer)) / self.count, RANK_EPS)
        rank = int((ac_energies > RANK_EPS * raw_scale).sum())
        return SaabModel(
            feature_mean=mean,
            dc_kernel=dc,
            ac_kernels=kernels[: d - 1],
            energies=np.concatenate([[dc_energy], ac_energies[: d - 1]]),
            num_channels=d,
            rank_deficient=d - 1 > rank,
        )


def fit_saab(training_rows: np.ndarray, num_channels: int | None = None,
             energy_threshold: float | None = None) -> SaabModel:
    """Fit a Saab model from a full (M, dim) matrix of training rows."""
    training_rows = np.asarray(training_rows, dtype=np.float64)
    stats = SaabStats(training_rows.shape[1])
    stats.update(training_rows)
    return stats.finalize(num_channels=num_channels, energy_threshold=energy_threshold)


def apply_saab(model: SaabModel, rows: np.ndarray) -> np.ndarray:
    """Project (N, dim) rows to (N, D): DC response first, then AC responses."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.input_dim:
        raise ValueError(f"rows must be (N, {model.input_dim}), got {rows.shape}")
    centered = rows - model.feature_mean
    out = np.empty((rows.shape[0], model.num_channels))
    out[:, 0] = centered @ model.dc_kernel
    if model.num_channels > 1:
        out[:, 1:] = centered @ model.ac_kernels.T
    return out
