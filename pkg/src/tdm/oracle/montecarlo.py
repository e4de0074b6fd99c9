"""Finite-N sampler of the inverse delay times and empirical cumulants.

The joint law ``prod |l_i - l_j|**beta prod l_k**(beta N/2) exp(-beta N l_k / 2)``
is sampled through the bidiagonal beta-Laguerre model: with ``B`` lower
bidiagonal, ``B[i, i] ~ chi(beta(2N-1) + 2 - beta(i-1))`` and
``B[i+1, i] ~ chi(beta(N-i))`` (1-based ``i``), the eigenvalues of ``B B^T``
have density ``prod |dl|**beta prod l**(beta N/2) exp(-l/2)``; dividing by
``beta N`` gives the target weight.

Reproducibility contract
------------------------
Sample ``k`` of a run with seed ``s`` is drawn from
``numpy.random.Generator(PCG64(SeedSequence(s, spawn_key=(k,))))``.  Results
therefore depend only on ``(N, beta, s, k)``, never on how samples are split
across threads.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

__all__ = [
    "EnsembleSample",
    "InsufficientSamplesError",
    "sample_spectrum",
    "sample_ensemble",
    "power_traces",
    "set_partitions",
    "partition_cumulant",
    "empirical_cumulants",
    "BOOTSTRAP_RESAMPLES",
]

BOOTSTRAP_RESAMPLES = 200
MIN_SAMPLES = 100


class InsufficientSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSample:
    n_channels: int
    beta: int
    seed: int
    stream: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        if not np.all(self.eigenvalues > 0):
            raise ValueError("eigenvalues must be strictly positive")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def sample_spectrum(N: int, beta: int, seed: int, stream: int = 0) -> EnsembleSample:
    """One draw of ``(lambda_1, ..., lambda_N)`` from the inverse-delay-time law."""
    if beta not in (1, 2, 4):
        raise ValueError(f"beta must be 1, 2 or 4, got {beta}")
    if N < 2:
        raise ValueError("N must be >= 2")
    rng = _rng(seed, stream)
    i = np.arange(1, N + 1)
    diag_dof = beta * (2 * N - 1) + 2 - beta * (i - 1)
    sub_dof = beta * (N - i[:-1])
    x = np.sqrt(rng.chisquare(diag_dof))
    y = np.sqrt(rng.chisquare(sub_dof))
    d = x * x
    d[1:] += y * y
    e = x[:-1] * y
    lam = eigvalsh_tridiagonal(d, e) / (beta * N)
    return EnsembleSample(N, beta, seed, stream, lam)


def sample_ensemble(N: int, beta: int, samples: int, seed: int, threads: int = 1) -> list[EnsembleSample]:
    """``samples`` independent draws, streams ``0 .. samples-1``, in stream order."""
    if threads <= 1:
        return [sample_spectrum(N, beta, seed, k) for k in range(samples)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda k: sample_spectrum(N, beta, seed, k), range(samples)))


def power_traces(samples: Sequence[EnsembleSample], kappas: Sequence[int]) -> np.ndarray:
    """``T_k = N^(k-1) Tr Q^k = N^-1 sum_i lambda_i^-k`` for each sample (rows) and ``k`` (columns)."""
    out = np.empty((len(samples), len(kappas)))
    for r, s in enumerate(samples):
        inv = 1.0 / s.eigenvalues
        for c, k in enumerate(kappas):
            out[r, c] = np.mean(inv**k)
    return out


def set_partitions(items: Sequence[int]):
    """All set partitions of ``items`` (as lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for n in range(len(part)):
            yield part[:n] + [[first] + part[n]] + part[n + 1 :]
        yield [[first]] + part


def partition_cumulant(data: np.ndarray) -> float:
    """Plug-in joint cumulant of the columns of ``data`` (moment-partition formula)."""
    v = data.shape[1]
    total = 0.0
    for part in set_partitions(range(v)):
        k = len(part)
        term = (-1) ** (k - 1) * math.factorial(k - 1)
        for block in part:
            term *= float(np.mean(np.prod(data[:, block], axis=1)))
        total += term
    return total


def empirical_cumulants(
    samples: Sequence[EnsembleSample],
    kappa: Sequence[int],
    v: int | None = None,
    bootstrap_seed: int = 0,
) -> tuple[float, float]:
    """``N**(2(v-1)) C_v(T_k1, ..., T_kv)`` and its bootstrap standard error."""
    kappa = tuple(kappa)
    v = len(kappa) if v is None else v
    if v != len(kappa):
        raise ValueError("v must equal len(kappa)")
    if not 1 <= v <= 3:
        raise ValueError("empirical cumulants are supported for v in {1, 2, 3}")
    if len(samples) < MIN_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_SAMPLES} samples, got {len(samples)}")
    Ns = {s.n_channels for s in samples}
    betas = {s.beta for s in samples}
    if len(Ns) != 1 or len(betas) != 1:
        raise ValueError("samples must share N and beta")
    N = Ns.pop()
    scale = float(N) ** (2 * (v - 1))
    data = power_traces(samples, kappa)
    estimate = scale * partition_cumulant(data)
    rng = np.random.Generator(np.random.PCG64(bootstrap_seed))
    boots = np.empty(BOOTSTRAP_RESAMPLES)
    n = len(samples)
    for r in range(BOOTSTRAP_RESAMPLES):
        idx = rng.integers(0, n, size=n)
        boots[r] = scale * partition_cumulant(data[idx])
    return estimate, float(np.std(boots, ddof=1))


def mc_grid(kmax: int, v: int) -> list[tuple[int, ...]]:
    """Non-decreasing index tuples with entries in ``1..kmax``."""
    return [k for k in itertools.product(range(1, kmax + 1), repeat=v) if list(k) == sorted(k)]
