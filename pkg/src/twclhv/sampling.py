"""Ancestral sampling of events from a :class:`~twclhv.lhv.FullModel`.

Pick a submodel by weight.  Trivial submodels emit their index.  Larsson-like
submodels draw ``lam ~ U[0, 2 pi)`` and ``x ~ Bernoulli(1/2)``, then each party
samples its outcome from its own local response only.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .events import Event, Settings
from .lhv import LARSSON, FullModel

CHUNK = 1 << 20


@dataclass(frozen=True)
class _Tables:
    cum: np.ndarray
    index: np.ndarray
    larsson: np.ndarray
    vis: np.ndarray


@lru_cache(maxsize=8)
def _tables(model: FullModel) -> _Tables:
    w = np.array([s.weight for s in model.submodels], dtype=float)
    cum = np.cumsum(w)
    cum /= cum[-1]
    index = np.array([tuple(s.index) for s in model.submodels], dtype=np.int64).reshape(-1, 4)
    larsson = np.array([s.kind == LARSSON for s in model.submodels])
    dkl = (index[:, 0] - index[:, 1]).astype(float)
    drs = (index[:, 2] - index[:, 3]).astype(float)
    denom = np.where(larsson, dkl * dkl + drs * drs, 1.0)
    vis = np.where(larsson, 2.0 * dkl * drs / denom, 0.0)
    return _Tables(cum, index, larsson, vis)


def _heaviside(u: np.ndarray) -> np.ndarray:
    return np.where(u > 0, 1.0, np.where(u < 0, 0.0, 0.5))


def _stochastic(hi, lo, vis, s, u):
    """Sample the R response given ``s = sin(phase)``; returns (first, second) counts."""
    p_hi = (1.0 - vis) / math.pi + vis * np.abs(s) * _heaviside(s)
    p_lo = (1.0 - vis) / math.pi + vis * np.abs(s) * _heaviside(-s)
    first = np.where(u < p_hi, hi, np.where(u < p_hi + p_lo, lo, 0))
    second = np.where(u < p_hi, lo, np.where(u < p_hi + p_lo, hi, 0))
    return first, second


def _deterministic(hi, lo, c, u):
    """Sample the Q response given ``c = cos(phase)``; ties go to a fair coin."""
    up = (c > 0) | ((c == 0) & (u < 0.5))
    return np.where(up, hi, lo), np.where(up, lo, hi)


def _sample_chunk(tab: _Tables, settings: Settings, size: int, rng: np.random.Generator) -> np.ndarray:
    u_sub = rng.random(size)
    lam = rng.random(size) * (2.0 * math.pi)
    coin = rng.integers(0, 2, size)
    u_a = rng.random(size)
    u_b = rng.random(size)

    pick = np.minimum(np.searchsorted(tab.cum, u_sub, side="right"), len(tab.cum) - 1)
    out = tab.index[pick].copy()
    lars = tab.larsson[pick]
    if not lars.any():
        return out

    sel = np.nonzero(lars)[0]
    k, l, r, s = (out[sel, i] for i in range(4))
    vis = tab.vis[pick[sel]]
    lam, coin, u_a, u_b = lam[sel], coin[sel], u_a[sel], u_b[sel]
    t1, t2 = settings.theta1, settings.theta2

    # x = 0: Alice stochastic in sin(t1 - lam), Bob deterministic in cos(t2 - lam)
    a0 = _stochastic(k, l, vis, np.sin(t1 - lam), u_a)
    b0 = _deterministic(r, s, np.cos(t2 - lam), u_b)
    # x = 1: forms exchanged, phases mirrored
    a1 = _deterministic(k, l, np.cos(lam - t1), u_a)
    b1 = _stochastic(r, s, vis, np.sin(lam - t2), u_b)

    x1 = coin == 1
    out[sel, 0] = np.where(x1, a1[0], a0[0])
    out[sel, 1] = np.where(x1, a1[1], a0[1])
    out[sel, 2] = np.where(x1, b1[0], b0[0])
    out[sel, 3] = np.where(x1, b1[1], b0[1])
    return out


def sample_events(model: FullModel, settings: Settings, size: int, seed=None) -> np.ndarray:
    """Draw ``size`` events; returns an int array of shape ``(size, 4)``.

    The random stream is consumed in fixed chunks, so a given seed always
    yields the same sequence regardless of ``size`` splitting elsewhere.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    size = int(size)
    if size < 0:
        raise ValueError(f"size must be >= 0, got {size}")
    tab = _tables(model)
    parts = []
    remaining = size
    while remaining > 0:
        m = min(CHUNK, remaining)
        parts.append(_sample_chunk(tab, settings, m, rng))
        remaining -= m
    if not parts:
        return np.zeros((0, 4), dtype=np.int64)
    return np.concatenate(parts)


def sample_event(model: FullModel, settings: Settings, rng_seed=None) -> Event:
    return Event(*map(int, sample_events(model, settings, 1, rng_seed)[0]))


def sample_counts(model: FullModel, settings: Settings, size: int, seed=None) -> Counter:
    """Histogram of ``size`` sampled events without materialising them all."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    tab = _tables(model)
    base = model.cutoff + 1
    counts: Counter = Counter()
    remaining = int(size)
    while remaining > 0:
        m = min(CHUNK, remaining)
        ev = _sample_chunk(tab, settings, m, rng)
        code = ((ev[:, 0] * base + ev[:, 1]) * base + ev[:, 2]) * base + ev[:, 3]
        keys, cnt = np.unique(code, return_counts=True)
        for key, c in zip(keys.tolist(), cnt.tolist()):
            s = key % base
            key //= base
            r = key % base
            key //= base
            counts[Event(key // base, key % base, r, s)] += c
        remaining -= m
    return counts
