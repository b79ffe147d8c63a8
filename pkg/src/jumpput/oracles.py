"""Independent reference pricers.

* ``merton_european_put`` -- Merton's series: condition on the number of jumps
  and sum Black-Scholes prices.  A lower bound for the American value.
* ``binomial_american_put`` -- Cox-Ross-Rubinstein tree, no jumps.
* ``lsmc_american_put`` -- Longstaff-Schwartz regression on simulated
  jump-diffusion paths.  Biased low.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import poisson

from .exceptions import LambdaNotZero, SeriesNotConverged, ValidationError
from .model import ModelParams, payoff_eval

CHUNK_PATHS = 1 << 14
MAX_TERMS = 1000


@dataclass(frozen=True)
class OracleQuote:
    price: float
    std_error: float
    method: str

    def to_dict(self):
        return {"method": self.method, "price": self.price, "std_error": self.std_error}


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    steps: int = 200
    seed: int = 12345
    basis_degree: int = 3
    antithetic: bool = True

    def __post_init__(self):
        if self.paths < 2 or self.steps < 1:
            raise ValidationError("need paths >= 2 and steps >= 1")
        if self.basis_degree < 0:
            raise ValidationError("basis_degree must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


def bs_put(x, K, T, r, sigma):
    """Black-Scholes European put."""
    if T <= 0:
        return max(K - x, 0.0)
    if x <= 0:
        return K * math.exp(-r * T)
    sd = sigma * math.sqrt(T)
    d1 = (math.log(x / K) + (r + 0.5 * sigma**2) * T) / sd
    d2 = d1 - sd
    return float(K * math.exp(-r * T) * ndtr(-d2) - x * ndtr(-d1))


def merton_european_put(params: ModelParams, x: float, T: float, tail=1e-12) -> OracleQuote:
    """European put under lognormal jumps (Merton 1976 series).

    With ``k = xi - 1`` and ``lambda' = lambda xi`` the price is
    ``sum_n Poisson(n; lambda' T) * BS(x, K, T, r_n, sigma_n)`` where
    ``sigma_n^2 = sigma^2 + n s^2 / T`` and ``r_n = r - lambda k + n log(xi) / T``.
    """
    payoff_eval(x, params.K)
    if params.lam == 0 or T <= 0:
        return OracleQuote(bs_put(x, params.K, T, params.r, params.sigma), 0.0, "black_scholes")
    if params.jump.kind != "lognormal":
        raise ValidationError("the Merton series needs lognormal jumps")
    s = params.jump.s
    xi = params.xi
    lam_p = params.lam * xi
    mean = lam_p * T
    total = 0.0
    for n in range(MAX_TERMS):
        w = poisson.pmf(n, mean)
        sig_n = math.sqrt(params.sigma**2 + n * s**2 / T)
        r_n = params.r - params.lam * (xi - 1.0) + n * math.log(xi) / T
        total += w * bs_put(x, params.K, T, r_n, sig_n)
        if n > mean and poisson.sf(n, mean) < tail:
            return OracleQuote(float(total), 0.0, "merton_series")
    raise SeriesNotConverged(f"Poisson tail above {tail:g} after {MAX_TERMS} terms")


def _crr(x, K, T, r, sigma, steps):
    dt = T / steps
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    disc = math.exp(-r * dt)
    p = (math.exp(r * dt) - d) / (u - d)
    if not 0 < p < 1:
        raise ValidationError("tree too coarse: risk-neutral probability outside (0, 1)")
    k = np.arange(steps + 1)
    S = x * u ** (steps - 2.0 * k)
    V = np.maximum(K - S, 0.0)
    for n in range(steps - 1, -1, -1):
        S = S[:n + 1] * d
        V = np.maximum(disc * (p * V[:n + 1] + (1 - p) * V[1:n + 2]), K - S)
    return float(V[0])


def binomial_american_put(params: ModelParams, x: float, T: float, steps: int = 2000) -> OracleQuote:
    """CRR American put; the odd/even oscillation is removed by averaging
    the trees with ``steps`` and ``steps + 1`` levels."""
    if params.lam != 0:
        raise LambdaNotZero("the binomial oracle has no jumps; lambda must be 0")
    payoff_eval(x, params.K)
    if T <= 0:
        return OracleQuote(max(params.K - x, 0.0), 0.0, "binomial_crr")
    a = _crr(x, params.K, T, params.r, params.sigma, steps)
    b = _crr(x, params.K, T, params.r, params.sigma, steps + 1)
    return OracleQuote(0.5 * (a + b), 0.0, "binomial_crr")


def _threads():
    try:
        return max(1, int(os.environ.get("PRICE_THREADS", "1")))
    except ValueError:
        return 1


def _log_jumps(rng, counts, params: ModelParams, sign=1.0, normals=None):
    """Sum of ``counts`` log jump sizes per entry."""
    jm = params.jump
    out = np.zeros(counts.shape)
    hit = counts > 0
    if not hit.any():
        return out
    n = counts[hit]
    if jm.kind == "lognormal":
        out[hit] = n * jm.m + np.sqrt(n) * jm.s * sign * normals[hit]
    else:
        logs = np.log(np.array(jm.atoms))
        w = np.array(jm.weights)
        sums = np.zeros(n.shape)
        for level in range(1, int(n.max()) + 1):
            active = n >= level
            pick = rng.choice(len(logs), size=int(active.sum()), p=w)
            sums[active] += logs[pick]
        out[hit] = sums
    return out


def simulate_paths(params: ModelParams, x: float, T: float, steps: int, paths: int,
                   seed_seq: np.random.SeedSequence, antithetic: bool) -> np.ndarray:
    """Log-Euler paths with per-step Poisson jump counts; shape ``(paths, steps + 1)``.

    Between jump counts the diffusion step is exact.  With ``antithetic`` the
    second half of the paths reuses the first half's jump counts with every
    normal draw negated.
    """
    rng = np.random.default_rng(seed_seq)
    dt = T / steps
    half = (paths + 1) // 2 if antithetic else paths
    drift = (params.mu - 0.5 * params.sigma**2) * dt
    vol = params.sigma * math.sqrt(dt)
    logS = np.empty((paths, steps + 1))
    logS[:, 0] = math.log(x)
    for k in range(steps):
        z = rng.standard_normal(half)
        if params.lam > 0:
            counts = rng.poisson(params.lam * dt, half)
            zj = rng.standard_normal(half) if params.jump.kind == "lognormal" else None
            jumps = _log_jumps(rng, counts, params, 1.0, zj)
        else:
            counts = None
            jumps = np.zeros(half)
        inc = drift + vol * z + jumps
        if antithetic:
            if params.lam > 0 and params.jump.kind == "lognormal":
                jumps_a = _log_jumps(rng, counts, params, -1.0, zj)
            else:
                jumps_a = jumps
            inc = np.concatenate([inc, (drift - vol * z + jumps_a)])[:paths]
        logS[:, k + 1] = logS[:, k] + inc
    return np.exp(logS)


def lsmc_american_put(params: ModelParams, x: float, T: float, mc: McConfig = McConfig()) -> OracleQuote:
    """Longstaff-Schwartz estimate of the American put.

    Regresses discounted realized cash flows on monomials of ``S / K`` up to
    ``basis_degree`` over in-the-money paths.  ``basis_degree = 0`` disables
    early exercise before ``T`` (European estimate).  Paths are simulated in
    chunks of ``CHUNK_PATHS`` with seeds spawned from ``mc.seed``, so results do
    not depend on ``PRICE_THREADS``.
    """
    K = params.K
    payoff_eval(x, K)
    if x == 0 or T <= 0:
        return OracleQuote(max(K - x, 0.0), 0.0, "lsmc")
    n_chunks = -(-mc.paths // CHUNK_PATHS)
    seeds = np.random.SeedSequence(mc.seed).spawn(n_chunks)
    sizes = [min(CHUNK_PATHS, mc.paths - i * CHUNK_PATHS) for i in range(n_chunks)]
    jobs = [(params, x, T, mc.steps, sz, sd, mc.antithetic) for sz, sd in zip(sizes, seeds)]
    workers = min(_threads(), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda a: simulate_paths(*a), jobs))
    else:
        chunks = [simulate_paths(*a) for a in jobs]
    S = np.concatenate(chunks)

    disc = math.exp(-params.r * T / mc.steps)
    cash = np.maximum(K - S[:, -1], 0.0)
    if mc.basis_degree > 0:
        for k in range(mc.steps - 1, 0, -1):
            cash *= disc
            exercise = np.maximum(K - S[:, k], 0.0)
            itm = exercise > 0
            if itm.sum() <= mc.basis_degree + 1:
                continue
            y = S[itm, k] / K
            basis = np.vander(y, mc.basis_degree + 1, increasing=True)
            coef, *_ = np.linalg.lstsq(basis, cash[itm], rcond=None)
            cont = basis @ coef
            stop = exercise[itm] > cont
            idx = np.flatnonzero(itm)[stop]
            cash[idx] = exercise[idx]
        cash *= disc
    else:
        cash *= disc ** mc.steps
    if mc.antithetic:
        # average antithetic partners before estimating the variance
        per_chunk = []
        start = 0
        for sz in sizes:
            h = (sz + 1) // 2
            block = cash[start:start + sz]
            a, b = block[:h], block[h:]
            per_chunk.append(np.concatenate([0.5 * (a[:len(b)] + b), a[len(b):]]))
            start += sz
        samples = np.concatenate(per_chunk)
    else:
        samples = cash
    price = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(len(samples)))
    immediate = max(K - x, 0.0)
    if immediate >= price:
        return OracleQuote(immediate, 0.0, "lsmc")
    return OracleQuote(price, se, "lsmc")
