"""Closed-form prices and Greeks used as exact solutions.

All functions broadcast over numpy arrays in ``s``. ``t`` is time to
expiry (the forward PDE time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .models import MarketData

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GreekSet:
    price: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray

    def __sub__(self, other: "GreekSet") -> "GreekSet":
        return GreekSet(self.price - other.price, self.delta - other.delta, self.gamma - other.gamma)

    def scaled(self, factor) -> "GreekSet":
        return GreekSet(self.price * factor, self.delta * factor, self.gamma * factor)


def norm_cdf(x):
    return ndtr(x)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def d1_d2(s, K, t, market: MarketData):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(np.asarray(K) <= 0):
        raise DomainError("d1/d2 need s > 0 and K > 0")
    if np.any(np.asarray(t) <= 0):
        raise DomainError("d1/d2 need t > 0")
    vol = market.sigma * np.sqrt(t)
    nu = market.r - market.q + 0.5 * market.sigma**2
    d1 = (np.log(s / K) + nu * t) / vol
    return d1, d1 - vol


def _check_spot(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise DomainError("spot must be finite and nonnegative")
    return s


def _vanilla(s, K, t, market: MarketData, call: bool) -> GreekSet:
    s = _check_spot(s)
    if K < 0 or t < 0:
        raise DomainError("strike and time must be nonnegative")
    sign = 1.0 if call else -1.0
    if t == 0:
        intrinsic = np.maximum(sign * (s - K), 0.0)
        delta = np.where(sign * (s - K) > 0, sign, 0.0)
        return GreekSet(intrinsic, delta, np.zeros_like(s))
    disc_q = np.exp(-market.q * t)
    disc_r = np.exp(-market.r * t)
    if K == 0:
        price = s * disc_q if call else np.zeros_like(s)
        delta = np.full_like(s, disc_q if call else 0.0)
        return GreekSet(price, delta, np.zeros_like(s))
    # s = 0 is the limit d1 -> -inf
    safe = np.where(s > 0, s, 1.0)
    d1, d2 = d1_d2(safe, K, t, market)
    d1 = np.where(s > 0, d1, -np.inf)
    d2 = np.where(s > 0, d2, -np.inf)
    price = sign * (s * disc_q * ndtr(sign * d1) - K * disc_r * ndtr(sign * d2))
    delta = sign * disc_q * ndtr(sign * d1)
    gamma = np.where(s > 0, disc_q * norm_pdf(d1) / (safe * market.sigma * np.sqrt(t)), 0.0)
    return GreekSet(price, delta, gamma)


def bs_call_price_scalar(s: float, K: float, t: float, market: MarketData) -> float:
    """Scalar call price via ``math.erfc``; for hot loops such as boundary data."""
    if t <= 0:
        return max(s - K, 0.0)
    if s <= 0:
        return 0.0
    vol = market.sigma * math.sqrt(t)
    d1 = (math.log(s / K) + (market.r - market.q + 0.5 * market.sigma**2) * t) / vol
    d2 = d1 - vol
    cdf = lambda x: 0.5 * math.erfc(-x / math.sqrt(2.0))
    return s * math.exp(-market.q * t) * cdf(d1) - K * math.exp(-market.r * t) * cdf(d2)


def bs_call(s, K, t, market: MarketData) -> GreekSet:
    return _vanilla(s, K, t, market, call=True)


def bs_put(s, K, t, market: MarketData) -> GreekSet:
    return _vanilla(s, K, t, market, call=False)


def _require_barrier(s, market: MarketData) -> tuple[np.ndarray, float]:
    if market.B is None or market.B <= 0:
        raise DomainError("barrier formulas need B > 0")
    s = _check_spot(s)
    if np.any(s < market.B):
        raise DomainError("spot below the barrier is in the knocked region")
    return s, float(market.B)


def _digital_leg(s, strike, t, market: MarketData, notional: float) -> GreekSet:
    """notional * e^{-rt} N(d2(s, strike)): cash paid if s_T > strike."""
    if notional == 0.0:
        zero = np.zeros_like(s)
        return GreekSet(zero, zero, zero)
    vol = market.sigma * np.sqrt(t)
    _, d2 = d1_d2(s, strike, t, market)
    disc = notional * np.exp(-market.r * t)
    pdf = norm_pdf(d2)
    price = disc * ndtr(d2)
    delta = disc * pdf / (s * vol)
    gamma = -disc * pdf / (s * s * vol) * (d2 / vol + 1.0)
    return GreekSet(price, delta, gamma)


def _knock_source(s, t, market: MarketData) -> GreekSet:
    """Value of the payoff (s - K) 1{s > max(B, K)} without the barrier."""
    K = market.K
    k_bar = max(market.B, K)
    return _combine(bs_call(s, k_bar, t, market), _digital_leg(s, k_bar, t, market, k_bar - K))


def _combine(a: GreekSet, b: GreekSet) -> GreekSet:
    return GreekSet(a.price + b.price, a.delta + b.delta, a.gamma + b.gamma)


def _image(s, t, market: MarketData) -> GreekSet:
    """(B/s)^lam V(B^2/s) with V the knock source, and its s-derivatives."""
    B = market.B
    lam = 2.0 / market.sigma**2 * (market.r - market.q - 0.5 * market.sigma**2)
    y = B * B / s
    v = _knock_source(y, t, market)
    p = (B / s) ** lam
    dp = -lam * p / s
    d2p = lam * (lam + 1.0) * p / (s * s)
    dy = -y / s
    d2y = 2.0 * y / (s * s)
    price = p * v.price
    delta = dp * v.price + p * v.delta * dy
    gamma = d2p * v.price + 2.0 * dp * v.delta * dy + p * (v.gamma * dy * dy + v.delta * d2y)
    return GreekSet(price, delta, gamma)


def down_and_out_call(s, K, t, market: MarketData) -> GreekSet:
    """Continuously monitored down-and-out call (method of images).

    ``K`` overrides ``market.K``. At t = 0 the payoff is returned.
    """
    m = market if K == market.K else market.with_updates(K=K)
    s, B = _require_barrier(s, m)
    if t == 0:
        alive = s > B
        return GreekSet(
            np.where(alive, np.maximum(s - K, 0.0), 0.0),
            np.where(alive & (s > K), 1.0, 0.0),
            np.zeros_like(s),
        )
    return _knock_source(s, t, m) - _image(s, t, m)


def down_and_in_call(s, K, t, market: MarketData) -> GreekSet:
    m = market if K == market.K else market.with_updates(K=K)
    s, _ = _require_barrier(s, m)
    return bs_call(s, K, t, m) - down_and_out_call(s, K, t, m)


def down_and_in_call_as_printed(s, K, t, market: MarketData):
    """Price of the down-and-in call exactly as the source formula is typeset.

    Kept for comparison only. For B > K this expression does not vanish
    against the vanilla price at s = B, so it is not used as an oracle;
    see :func:`down_and_in_call` for the consistent version.
    """
    m = market if K == market.K else market.with_updates(K=K)
    s, B = _require_barrier(s, m)
    lam = 2.0 / m.sigma**2 * (m.r - m.q - 0.5 * m.sigma**2)
    k_bar = max(B, K)
    y = B * B / s
    d1_img, _ = d1_d2(y, k_bar, t, m)
    value = (B / s) ** lam * (bs_call(y, k_bar, t, m).price + (k_bar - K) * ndtr(d1_img))
    if B > K:
        d1_sb, _ = d1_d2(s, B, t, m)
        value = value + (
            bs_put(s, K, t, m).price
            - bs_put(s, B, t, m).price
            + (B - K) * np.exp(-m.r * t) / (m.sigma * s * np.sqrt(t)) * ndtr(-d1_sb)
        )
    return value


def xva_call(s, K, t, market: MarketData) -> GreekSet:
    """Credit/funding-adjusted call: the vanilla call discounted at beta.

    The call value stays nonnegative, so only the max(u, 0) branch of the
    source is active and the adjustment is a pure exponential decay.
    """
    beta = market.positive_decay
    return bs_call(s, K, t, market).scaled(np.exp(-beta * t))
