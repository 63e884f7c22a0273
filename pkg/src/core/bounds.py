"""
Learning-to-Rank Generalization Workbench
Core module - generalization bound calculators: the sqrt(m) baseline, the
online-to-batch and regularized ERM rates, covering numbers, Rademacher
corollaries, the entropy integral and the smooth fast-rate chain

Covering numbers are in log base 2; every other log is natural.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize_scalar

from src.core.errors import (
    BoundDomainError,
    DudleyDivergenceError,
    InapplicableBoundError,
)
from src.core.ranking import ClassSpec, NormKind

logger = logging.getLogger(__name__)


class CoverVariant(str, Enum):
    L2 = "L2"
    L1 = "L1"
    LOCAL = "local"


class GenTheorem(str, Enum):
    LIPSCHITZ_L2 = "lipschitz_l2"
    LIPSCHITZ_L1 = "lipschitz_l1"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound formula may read: loss constants, class radii,
    list length m, sample size n, dimension d, confidence delta and L*"""
    G_inf: float
    G_l2: float
    H_inf: Optional[float]
    B: float
    spec: ClassSpec
    m: int
    n: int
    d: int = 1
    delta: float = 0.05
    L_star: Optional[float] = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.d < 1:
            raise ValueError(f"m, n and d must be positive, got m={self.m} n={self.n} d={self.d}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if self.L_star is not None and self.L_star < 0:
            raise ValueError(f"L_star must be nonnegative, got {self.L_star}")

    @classmethod
    def from_constants(cls, constants, spec, m, n, d=1, delta=0.05, L_star=None):
        return cls(
            G_inf=constants.lipschitz_inf,
            G_l2=constants.lipschitz_l2,
            H_inf=constants.smoothness_inf,
            B=constants.uniform_bound,
            spec=spec,
            m=m,
            n=n,
            d=d,
            delta=delta,
            L_star=L_star,
        )

    @property
    def W(self):
        return self.spec.weight_radius

    @property
    def R(self):
        return self.spec.input_radius

    @property
    def log_inv_delta(self):
        return math.log(1.0 / self.delta)


def _require_l2(inputs, name):
    if inputs.spec.norm_kind is not NormKind.L2:
        raise InapplicableBoundError(f"{name} applies to the l2 class only")


def _require_l1(inputs, name):
    if inputs.spec.norm_kind is not NormKind.L1:
        raise InapplicableBoundError(f"{name} applies to the l1 class only")


def _ceil(x, relax=False):
    return x if relax else float(math.ceil(round(x, 9)))


# =============================================================================
# Core Module: Baseline and Online Bounds
# =============================================================================

def chapelle_complexity(inputs):
    """Complexity term 3 G_cw W R sqrt(m/n) of the sqrt(m) baseline"""
    _require_l2(inputs, "the sqrt(m) baseline")
    return 3.0 * inputs.G_l2 * inputs.W * inputs.R * math.sqrt(inputs.m / inputs.n)


def bound_chapelle(inputs):
    """3 G_cw W R sqrt(m/n) + sqrt(8 log(1/delta)/n)"""
    return chapelle_complexity(inputs) + math.sqrt(8.0 * inputs.log_inv_delta / inputs.n)


def bound_ogd(inputs):
    """G W R sqrt(2/n); no m anywhere"""
    _require_l2(inputs, "the OGD bound")
    return inputs.G_inf * inputs.W * inputs.R * math.sqrt(2.0 / inputs.n)


def bound_rerm(inputs):
    _require_l2(inputs, "the regularized ERM bound")
    n = inputs.n
    return 2.0 * inputs.G_inf * inputs.R * inputs.W * (8.0 / n + math.sqrt(2.0 / n))


# =============================================================================
# Core Module: Covering Numbers and Rademacher Corollaries
# =============================================================================

def covering_bound(variant, inputs, epsilon, r=None, relax_ceiling=False):
    """log2 of the covering number of the loss class at scale epsilon

    relax_ceiling drops the ceilings, giving the envelope the closed-form
    Rademacher corollaries integrate.
    """
    variant = CoverVariant(variant)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    G, W, R, m, n = inputs.G_inf, inputs.W, inputs.R, inputs.m, inputs.n
    if variant is CoverVariant.L2:
        _require_l2(inputs, "the l2 covering bound")
        count = _ceil(G ** 2 * W ** 2 * R ** 2 / epsilon ** 2, relax_ceiling)
        return count * math.log2(2 * m * n + 1)
    if variant is CoverVariant.L1:
        _require_l1(inputs, "the l1 covering bound")
        count = _ceil(288.0 * G ** 2 * W ** 2 * R ** 2 * (2.0 + math.log(inputs.d)) / epsilon ** 2, relax_ceiling)
        grid = _ceil(8.0 * G * W * R / epsilon, relax_ceiling)
        return count * math.log2(2.0 * grid * m * n + 1)
    _require_l2(inputs, "the local covering bound")
    if inputs.H_inf is None or r is None:
        raise BoundDomainError("the local covering bound needs H_inf and a radius r")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    if r == 0:
        return 0.0
    count = _ceil(12.0 * inputs.H_inf * W ** 2 * R ** 2 * r / epsilon ** 2, relax_ceiling)
    return count * math.log2(2 * m * n + 1)


def _checked_log(argument, what):
    if not argument > 1.0:
        raise BoundDomainError(
            f"{what}: log argument {argument:.4g} <= 1, the uniform bound B is too small "
            "relative to the complexity scale for the closed form to hold"
        )
    return math.log(argument)


# Below this log argument the optimal alpha of the closed forms lies past the
# integration limit.
_INTERIOR_ARGUMENT = 3.0


def _within_limit(closed, upper_limit, argument, what):
    """Closed form capped by 4 * limit, the entropy bound with alpha at the limit"""
    cap = 4.0 * upper_limit
    if argument < _INTERIOR_ARGUMENT:
        logger.debug("%s closed form outside its range (log argument %.4g); using 4 * limit", what, argument)
        return cap
    return min(closed, cap)


def local_scale(inputs):
    """C = 5 sqrt(3) W R sqrt(H log2(3mn) / n)"""
    if inputs.H_inf is None:
        raise BoundDomainError("the local scale needs a smoothness constant H_inf")
    m, n = inputs.m, inputs.n
    return 5.0 * math.sqrt(3.0) * inputs.W * inputs.R * math.sqrt(inputs.H_inf * math.log2(3 * m * n) / n)


def subroot_psi(r, C, B):
    """psi(r) = 4 sqrt(r) C log(3 sqrt(B) / C)"""
    return 4.0 * math.sqrt(r) * C * _checked_log(3.0 * math.sqrt(B) / C, "sub-root function")


def rademacher_bound(variant, inputs, r=None):
    """Closed-form bound on the empirical Rademacher complexity of the loss class"""
    variant = CoverVariant(variant)
    G, W, R, B, m, n = inputs.G_inf, inputs.W, inputs.R, inputs.B, inputs.m, inputs.n
    if not B > 0:
        raise BoundDomainError(f"uniform bound B must be positive, got {B}")

    if variant is CoverVariant.L2:
        _require_l2(inputs, "the l2 Rademacher bound")
        scale = G * W * R * math.sqrt(math.log2(3 * m * n) / n)
        argument = 6.0 * B * math.sqrt(n) / (5.0 * G * W * R * math.sqrt(math.log2(3 * m * n)))
        log_term = _checked_log(argument, "l2 Rademacher bound")
        return _within_limit(10.0 * scale * log_term, B, argument, "l2")

    if variant is CoverVariant.L1:
        _require_l1(inputs, "the l1 Rademacher bound")
        if inputs.d < 2:
            raise BoundDomainError("the l1 Rademacher bound needs d >= 2")
        grid = 24.0 * m * n * G * W * R
        if not grid > 2.0:
            raise BoundDomainError(f"24 m n G W R = {grid:.4g} must exceed 2")
        root = math.sqrt(math.log(inputs.d) * math.log2(grid))
        log_term = _checked_log((B + grid) / (40.0 * math.sqrt(2.0) * G * W * R * root), "l1 Rademacher bound")
        closed = 120.0 * math.sqrt(2.0) * G * W * R * root / math.sqrt(n) * log_term ** 2
        integral, _ = optimize_dudley(
            lambda eps: covering_bound(CoverVariant.L1, inputs, eps, relax_ceiling=True), B, n
        )
        if integral > closed:
            logger.debug("l1 closed form %.6g falls below the entropy integral %.6g", closed, integral)
        return max(closed, integral)

    _require_l2(inputs, "the local Rademacher bound")
    if r is None or r < 0:
        raise ValueError("the local Rademacher bound needs a radius r >= 0")
    C = local_scale(inputs)
    return _within_limit(subroot_psi(r, C, B), math.sqrt(B * r), 3.0 * math.sqrt(B) / C, "local")


# =============================================================================
# Core Module: Entropy Integral
# =============================================================================

def dudley_integral(log_covering, alpha, upper_limit, n):
    """4 alpha + 10 * integral_alpha^upper sqrt(log2 N(eps) / n) d eps"""
    if alpha < 0 or not upper_limit > alpha:
        raise ValueError(f"need 0 <= alpha < upper_limit, got alpha={alpha} upper={upper_limit}")
    if alpha == 0:
        near_zero = log_covering(upper_limit * 1e-10)
        if not math.isfinite(near_zero) or near_zero > 1e12:
            raise DudleyDivergenceError(
                "the integrand blows up at 0; pass alpha > 0 or use optimize_dudley"
            )

    def integrand(eps):
        return math.sqrt(max(log_covering(eps), 0.0) / n)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, _ = quad(integrand, alpha, upper_limit, epsabs=1e-8, limit=200)
    return 4.0 * alpha + 10.0 * value


def optimize_dudley(log_covering, upper_limit, n, grid_size=60):
    """Minimize the entropy integral over alpha; returns (value, alpha)"""
    alphas = np.geomspace(upper_limit * 1e-8, upper_limit, grid_size, endpoint=False)
    values = np.array([dudley_integral(log_covering, a, upper_limit, n) for a in alphas])
    best = int(np.argmin(values))
    lo = alphas[max(best - 1, 0)]
    hi = alphas[best + 1] if best + 1 < grid_size else upper_limit * (1.0 - 1e-9)
    result = minimize_scalar(
        lambda a: dudley_integral(log_covering, a, upper_limit, n),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10 * upper_limit},
    )
    if result.fun < values[best]:
        return float(result.fun), float(result.x)
    return float(values[best]), float(alphas[best])


# =============================================================================
# Core Module: Generalization Bounds
# =============================================================================

@dataclass(frozen=True)
class SmoothChain:
    """Every quantity of the local Rademacher argument for smooth losses"""
    C: float
    r_star: float
    r0: float
    uniform_excess: float
    erm_bound: float
    erm_simplified: float
    d0_chain: float
    d0_display: float


def _r0(inputs):
    n = inputs.n
    log_log = math.log(math.log(n)) if n >= 3 else 0.0
    return inputs.B * (inputs.log_inv_delta + max(log_log, 0.0)) / n


def smooth_chain(inputs):
    """Fixed point r* = (4 C log(3 sqrt(B)/C))^2, r0 and the assembled excess bounds

    The ERM bound chains L_hat(w*) <= L* + sqrt(4 r0 L*) + 4 r0 into
    L(w_hat) <= L_hat(w*) + 45 r* + 20 r0 + (sqrt(8 r*) + sqrt(4 r0)) sqrt(L(w_hat))
    and solves the quadratic in sqrt(L(w_hat)).
    """
    _require_l2(inputs, "the smooth chain")
    if inputs.H_inf is None or inputs.L_star is None:
        raise BoundDomainError("the smooth chain needs H_inf and L_star")
    C = local_scale(inputs)
    r_star = (4.0 * C * _checked_log(3.0 * math.sqrt(inputs.B) / C, "fixed point")) ** 2
    r0 = _r0(inputs)
    L = inputs.L_star

    uniform = 45.0 * r_star + math.sqrt(8.0 * r_star * L) + math.sqrt(4.0 * r0 * L) + 20.0 * r0
    a = L + math.sqrt(4.0 * r0 * L) + 4.0 * r0 + 45.0 * r_star + 20.0 * r0
    b = math.sqrt(8.0 * r_star) + math.sqrt(4.0 * r0)
    root = (b + math.sqrt(b * b + 4.0 * a)) / 2.0
    d0_chain = 45.0 * r_star + 20.0 * r0
    return SmoothChain(
        C=C,
        r_star=r_star,
        r0=r0,
        uniform_excess=uniform,
        erm_bound=root * root,
        erm_simplified=math.sqrt(d0_chain * L) / 2.0 + 2.0 * d0_chain,
        d0_chain=d0_chain,
        d0_display=inputs.B * inputs.log_inv_delta + inputs.W ** 2 * inputs.R ** 2 * inputs.H_inf,
    )


def gen_bound(theorem, inputs, erm_form=False):
    """Explicit generalization bound with assembled constants

    Lipschitz forms: 2 * Rademacher corollary + 3 B sqrt(log(1/delta) / (2n)).
    Smooth form: the uniform excess at L = L*, or the ERM bound on L(w_hat).
    """
    theorem = GenTheorem(theorem)
    if theorem is GenTheorem.SMOOTH:
        chain = smooth_chain(inputs)
        return chain.erm_bound if erm_form else chain.uniform_excess
    variant = CoverVariant.L2 if theorem is GenTheorem.LIPSCHITZ_L2 else CoverVariant.L1
    confidence = 3.0 * inputs.B * math.sqrt(inputs.log_inv_delta / (2.0 * inputs.n))
    return 2.0 * rademacher_bound(variant, inputs) + confidence


def fast_rate_bound(inputs):
    """L* + 2 sqrt(2 H W^2 L* / n) + 8 H W^2 / n with H = H_phi R^2"""
    if inputs.H_inf is None or inputs.L_star is None:
        raise BoundDomainError("the fast rate needs H_inf and L_star")
    x = inputs.H_inf * inputs.R ** 2 * inputs.W ** 2 / inputs.n
    return inputs.L_star + 2.0 * math.sqrt(2.0 * x * inputs.L_star) + 8.0 * x


# =============================================================================
# Core Module: Reports
# =============================================================================

@dataclass
class BoundReport:
    chapelle_wu: Optional[float] = None
    chapelle_complexity: Optional[float] = None
    ogd_theorem2: Optional[float] = None
    rerm_theorem3: Optional[float] = None
    rademacher_l2: Optional[float] = None
    gen_l2_theorem4: Optional[float] = None
    rademacher_l1: Optional[float] = None
    gen_l1_theorem6: Optional[float] = None
    smooth_theorem7: Optional[float] = None
    fast_rate: Optional[float] = None
    notes: dict = field(default_factory=dict)

    def to_row(self):
        row = asdict(self)
        row.pop("notes")
        return {key: ("NA" if value is None else value) for key, value in row.items()}


def bound_report(inputs):
    """Evaluate every bound, recording inapplicable ones as None with a note"""
    entries = {
        "chapelle_wu": lambda: bound_chapelle(inputs),
        "chapelle_complexity": lambda: chapelle_complexity(inputs),
        "ogd_theorem2": lambda: bound_ogd(inputs),
        "rerm_theorem3": lambda: bound_rerm(inputs),
        "rademacher_l2": lambda: rademacher_bound(CoverVariant.L2, inputs),
        "gen_l2_theorem4": lambda: gen_bound(GenTheorem.LIPSCHITZ_L2, inputs),
        "rademacher_l1": lambda: rademacher_bound(CoverVariant.L1, inputs),
        "gen_l1_theorem6": lambda: gen_bound(GenTheorem.LIPSCHITZ_L1, inputs),
        "smooth_theorem7": lambda: gen_bound(GenTheorem.SMOOTH, inputs),
        "fast_rate": lambda: fast_rate_bound(inputs),
    }
    report = BoundReport()
    for name, evaluate in entries.items():
        try:
            setattr(report, name, evaluate())
        except (InapplicableBoundError, BoundDomainError) as exc:
            report.notes[name] = str(exc)
            logger.debug("bound %s not available: %s", name, exc)
    return report
