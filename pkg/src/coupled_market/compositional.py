"""Simplex utilities and search-to-booking gap metrics.

Compositions are 1-d arrays of strictly positive parts summing to one; a
series of compositions is a ``(T, K)`` array with one row per period.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SUM_TOL = 1e-9


def check_composition(c, name: str = "composition") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape[-1] < 2:
        raise ValueError(f"{name} needs at least 2 parts")
    if np.any(~(c > 0)):
        raise ValueError(f"{name} has non-positive parts; apply zero_replace first")
    if np.any(np.abs(c.sum(axis=-1) - 1.0) > SUM_TOL):
        raise ValueError(f"{name} does not sum to 1")
    return c


def close(v) -> np.ndarray:
    """Rescale a nonnegative vector (or rows of a matrix) to sum to one."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("parts must be finite and nonnegative")
    total = v.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("cannot close an all-zero vector")
    return v / total


def zero_replace(c, delta: float = 1e-6) -> np.ndarray:
    """Multiplicative replacement: zeros become ``delta``, the rest shrink to keep the sum at one."""
    c = close(c)
    zeros = c == 0
    nz = np.where(zeros, np.inf, c)
    if not (0 < delta < nz.min(axis=-1)).all():
        raise ValueError("delta must lie in (0, smallest nonzero part)")
    z = zeros.sum(axis=-1, keepdims=True)
    return np.where(zeros, delta, c * (1 - z * delta))


def clr(c) -> np.ndarray:
    logc = np.log(check_composition(c))
    return logc - logc.mean(axis=-1, keepdims=True)


def perturb(p, q) -> np.ndarray:
    """Aitchison perturbation: componentwise product, then closure."""
    return close(np.asarray(p, dtype=float) * np.asarray(q, dtype=float))


def aitchison_distance(p, q):
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError("dimension mismatch")
    return np.linalg.norm(clr(p) - clr(q), axis=-1)


def l1_distance(p, q):
    """Total-variation distance ``sum|p - q| / 2``, in [0, 1]."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError("dimension mismatch")
    return 0.5 * np.abs(p - q).sum(axis=-1)


@dataclass(frozen=True)
class GapSeries:
    t: np.ndarray
    d_aitchison: np.ndarray
    d_l1: np.ndarray

    def rows(self, binding=None, rep: int | None = None) -> list[tuple]:
        binding = np.zeros(len(self.t), dtype=int) if binding is None else np.asarray(binding, dtype=int)
        rows = zip(self.t.tolist(), self.d_aitchison.tolist(), self.d_l1.tolist(), binding.tolist())
        return [r if rep is None else (rep,) + r for r in rows]

    def to_csv(self, path: str | Path, binding=None) -> None:
        from .io import write_csv

        write_csv(path, GAP_COLUMNS, self.rows(binding))


GAP_COLUMNS = ("t", "d_aitchison", "d_l1", "binding")


def gap_series(search, book, t=None) -> GapSeries:
    search = check_composition(np.atleast_2d(search), "search")
    book = check_composition(np.atleast_2d(book), "book")
    if search.shape != book.shape:
        raise ValueError(f"shape mismatch: {search.shape} vs {book.shape}")
    t = np.arange(1, len(search) + 1) if t is None else np.asarray(t)
    return GapSeries(t, aitchison_distance(search, book), l1_distance(search, book))


def simulate_gap_compositions(
    K: int,
    binding,
    shift_strength: float,
    concentration: float,
    rng: np.random.Generator,
    target_bin: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic paired lead-time compositions.

    Search compositions are Dirichlet draws around a fixed declining profile
    (bin 0 is the shortest lead time).  In slack periods bookings mirror
    searches; in binding periods they are perturbed toward ``target_bin`` by
    a factor ``exp(shift_strength)`` on that bin, so the Aitchison gap there
    is ``shift_strength * sqrt(1 - 1/K)``.
    """
    binding = np.asarray(binding, dtype=bool)
    if K < 2:
        raise ValueError("K must be >= 2")
    if shift_strength < 0:
        raise ValueError("shift_strength must be >= 0")
    if concentration <= 0:
        raise ValueError("concentration must be > 0")
    if not 0 <= target_bin < K:
        raise ValueError("target_bin out of range")
    profile = close(np.linspace(2.0, 1.0, K))
    search = rng.dirichlet(concentration * K * profile, size=len(binding))
    # Dirichlet draws can underflow to exact zeros at low concentration
    search = close(np.maximum(search, np.finfo(float).tiny))
    tilt = np.ones(K)
    tilt[target_bin] = np.exp(shift_strength)
    book = np.where(binding[:, None], perturb(search, tilt), search)
    return search, book
