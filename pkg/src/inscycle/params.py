"""Exogenous market parameters and the local equilibrium state.

All quantities are annualized.  The default field values of
:class:`MarketParams` are the benchmark calibration used throughout the
numerical experiments, so ``MarketParams()`` is the benchmark market.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

import numpy as np

# Below this magnitude of u'(M) the market risk-aversion R is treated as
# exactly zero, which kills sign noise in g2 and the generator identities
# at the barriers.
DU_ZERO_GUARD = 1e-14


@dataclass(frozen=True)
class MarketParams:
    """Constants of the insurance and financial markets.

    lam     : shareholder discount rate
    l       : expected instantaneous loss intensity
    eta     : volatility of the systematic loss shock (> 0)
    r       : risk-free rate
    mu      : expected return on the risky asset
    sigma   : volatility of the risky asset (> 0)
    gamma   : per-unit cost of external financing (> 0)
    alpha   : insuree risk aversion (> 0)
    theta   : robustness degree (> 0); 1/theta is ambiguity aversion
    rho     : correlation of loss and financial shocks, in (-1, 1)
    """

    lam: float = 0.04
    l: float = 1.0
    eta: float = 0.28
    r: float = 0.01528
    mu: float = 0.03528
    sigma: float = 0.18
    gamma: float = 0.2
    alpha: float = 2.0
    theta: float = 2.8
    rho: float = -0.2

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if self.lam < self.r or self.lam <= 0:
            raise ValueError(
                f"discount rate lam must satisfy lam >= r and lam > 0, "
                f"got lam={self.lam}, r={self.r}"
            )
        if self.mu < self.r:
            raise ValueError(f"mu must be >= r, got mu={self.mu}, r={self.r}")
        q = self.q
        if q > 0 and abs(self.rho) > self.alpha * self.eta / q:
            raise ValueError(
                f"|rho| = {abs(self.rho)} exceeds alpha*eta/q = "
                f"{self.alpha * self.eta / q}: correlation too high for an "
                f"interior underwriting equilibrium"
            )

    @property
    def q(self) -> float:
        """Sharpe ratio (mu - r) / sigma of the risky asset."""
        return (self.mu - self.r) / self.sigma

    def with_(self, **changes) -> "MarketParams":
        """Copy with the given fields replaced (re-validates)."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MarketParams":
        return cls(**d)


@dataclass(frozen=True)
class LocalState:
    """Pointwise state of the equilibrium at capacity level M.

    Fields may be scalars or aligned numpy arrays; every closed-form
    operation broadcasts over them.

    M  : aggregate capacity (liquid reserves of the whole sector)
    u  : market-to-book ratio u(M), in [1, 1 + gamma] for valid states
    du : derivative u'(M), <= 0 for valid states
    """

    M: float | np.ndarray
    u: float | np.ndarray
    du: float | np.ndarray

    @property
    def R(self) -> float | np.ndarray:
        """Market risk-aversion -u'/u, snapped to 0 when |u'| is below
        the boundary guard."""
        du = np.asarray(self.du)
        R = np.where(np.abs(du) < DU_ZERO_GUARD, 0.0, -du / np.asarray(self.u))
        return float(R) if R.ndim == 0 else R
