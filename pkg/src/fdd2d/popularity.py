"""Content popularity: Zipf request distribution, request sampling, hitting probability."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PopularityProfile",
    "build_zipf",
    "hitting_probability",
    "sample_request",
]


@dataclass(frozen=True)
class PopularityProfile:
    """Request popularity over a library of ``m`` contents, most popular first.

    Attributes
    ----------
    m : int
        Library size.
    gamma_r : float
        Skew exponent of the power-law popularity; 0 gives a uniform library.
    rho : ndarray, shape (m,)
        Request probability of each content.
    p_hit_prefix : ndarray, shape (m,)
        Partial sums ``rho[0] + ... + rho[n-1]``.  Entry ``n-1`` is the
        probability that a random request falls in the ``n`` most popular
        contents, i.e. the hitting probability when those are the contents
        cached across ``n`` users.
    """

    m: int
    gamma_r: float
    rho: np.ndarray
    p_hit_prefix: np.ndarray

    def __post_init__(self):
        self.rho.setflags(write=False)
        self.p_hit_prefix.setflags(write=False)

    def hitting_probability(self, n_users: int) -> float:
        return hitting_probability(self, n_users)


def build_zipf(m: int, gamma_r: float) -> PopularityProfile:
    """Build a Zipf popularity profile over ``m`` contents.

    Content ``k`` (1-based rank) is requested with probability
    ``k**-gamma_r / sum(j**-gamma_r for j in 1..m)``.

    Parameters
    ----------
    m : int
        Library size, at least 1.
    gamma_r : float
        Skew exponent, finite and nonnegative.  0 yields the uniform library.
    """
    if m < 1:
        raise ValueError(f"library size must be at least 1, got m={m}")
    if not math.isfinite(gamma_r) or gamma_r < 0:
        raise ValueError(f"skew exponent must be finite and nonnegative, got gamma_r={gamma_r}")
    ranks = np.arange(1, m + 1, dtype=np.float64)
    weights = ranks ** -float(gamma_r)
    rho = weights / np.sum(weights)
    # plain float64 cumsum can drift past the 1e-12 budget for m near 1e6
    prefix = np.cumsum(rho.astype(np.longdouble)).astype(np.float64)
    return PopularityProfile(m=int(m), gamma_r=float(gamma_r), rho=rho, p_hit_prefix=prefix)


def hitting_probability(profile: PopularityProfile, n_users: int) -> float:
    """Probability that a random request falls in the contents cached by ``n_users``.

    Users cache the ``n_users`` most popular contents, one distinct content
    each, so this is the prefix sum ``rho[0] + ... + rho[n_users-1]``.
    """
    if not 1 <= n_users <= profile.m:
        raise ValueError(
            f"n_users must be in [1, m={profile.m}] (each user caches a distinct "
            f"content), got {n_users}"
        )
    return float(profile.p_hit_prefix[n_users - 1])


def sample_request(profile: PopularityProfile, rng: np.random.Generator, size=None):
    """Draw content requests from the popularity distribution.

    Inverse-CDF lookup over the stored prefix sums, O(log m) per draw.

    Parameters
    ----------
    profile : PopularityProfile
    rng : numpy.random.Generator
    size : int or tuple, optional
        ``None`` returns a single 1-based content index; otherwise an
        integer array of that shape.

    Returns
    -------
    int or ndarray
        Content indices in ``1..m``.
    """
    u = rng.random(size)
    idx = np.searchsorted(profile.p_hit_prefix, u, side="left")
    # prefix[-1] may round a hair below 1; u just under 1 must still map to m
    idx = np.minimum(idx, profile.m - 1)
    if size is None:
        return int(idx) + 1
    return idx + 1
