"""Closed-form distributions, channels, and consistency checks.

Everything here is deterministic: the Fokker-Planck solution of the
Born-coupled collapse walk, the ensemble-averaged dephasing channel in its
Lindblad and Kraus forms, the discrete biased-walk elementary step, the
two-point split of the jump ensemble, and the fluctuation-dissipation
residuals used to validate the stochastic engines against their own noise
bookkeeping.

The collapse coordinate ``z`` (``tanh z = rho00 - rho11``) makes the
ensemble solvable: at the Born coupling the distribution of ``z`` at
collapse time ``tau = g t`` is an equal-variance two-Gaussian mixture

    p(z, tau) = x N(z; z0 + tau, tau) + (1 - x) N(z; z0 - tau, tau),

with ``z0 = atanh(2x - 1)``.  Its tanh moment equals ``2x - 1`` for every
``tau`` (the martingale line) and its sech moment decays as
``e^{-tau/2} sech(z0)`` (the coherence line).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .states import QubitState, ZCoordinate

KRAUS_FORMS = ("orthogonal", "symmetric")
LINDBLAD_MODELS = ("diffusion", "jump")

#: Integration window half-width in standard deviations per Gaussian peak.
_QUAD_SIGMAS = 8.0


def _gauss(z, center: float, var: float):
    return np.exp(-((z - center) ** 2) / (2.0 * var)) / math.sqrt(
        2.0 * math.pi * var
    )


@dataclass(frozen=True)
class GaussianMixture:
    """Two-Gaussian mixture: the collapse-walk distribution in ``z``.

    ``weight_plus`` sits on the peak drifting up (toward eigenstate 0).
    Both peaks share the same ``variance``.
    """

    weight_plus: float
    z_plus: float
    z_minus: float
    variance: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.weight_plus <= 1.0):
            raise ValueError(
                f"weight_plus must lie in [0, 1], got {self.weight_plus}"
            )
        if self.variance <= 0.0:
            raise ValueError(f"variance must be positive, got {self.variance}")

    @classmethod
    def from_initial(cls, x: float, tau: float) -> "GaussianMixture":
        """Mixture after collapse time ``tau`` from initial population ``x``.

        Peaks at ``atanh(2x - 1) +/- tau`` with weights ``x`` and ``1 - x``
        and common variance ``tau``.

        Raises
        ------
        ValueError
            If ``x`` is 0 or 1 (the distribution degenerates; use the
            delta-function limit directly) or out of range, or ``tau <= 0``.
        """
        if not (0.0 < x < 1.0):
            raise ValueError(
                f"initial population x = {x} is degenerate here; "
                "use the delta-function limit"
            )
        if tau <= 0.0:
            raise ValueError(f"tau must be positive, got {tau}")
        z0 = math.atanh(2.0 * x - 1.0)
        return cls(x, z0 + tau, z0 - tau, tau)

    def density(self, z):
        """Mixture density, vectorized over ``z``."""
        return self.weight_plus * _gauss(z, self.z_plus, self.variance) + (
            1.0 - self.weight_plus
        ) * _gauss(z, self.z_minus, self.variance)

    def _moment(self, f) -> float:
        sd = math.sqrt(self.variance)
        total = 0.0
        for w, c in (
            (self.weight_plus, self.z_plus),
            (1.0 - self.weight_plus, self.z_minus),
        ):
            if w == 0.0:
                continue
            val, _ = quad(
                lambda z: f(z) * _gauss(z, c, self.variance),
                c - _QUAD_SIGMAS * sd,
                c + _QUAD_SIGMAS * sd,
                epsabs=1e-10,
                epsrel=1e-10,
                limit=200,
            )
            total += w * val
        return total

    def normalization(self) -> float:
        """Quadrature of the density; equals 1 up to integration error."""
        return self._moment(lambda z: 1.0)

    def tanh_moment(self) -> float:
        """Quadrature of ``tanh(z)``; equals ``2x - 1`` for all ``tau``."""
        return self._moment(np.tanh)

    def sech_moment(self) -> float:
        """Quadrature of ``sech(z)``; equals ``e^{-tau/2} sech(z0)``."""
        return self._moment(lambda z: 1.0 / np.cosh(z))

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        """Exact mixture probability mass of each histogram bin."""
        edges = np.asarray(edges, dtype=float)
        sd = math.sqrt(self.variance)
        cdf = self.weight_plus * ndtr((edges - self.z_plus) / sd) + (
            1.0 - self.weight_plus
        ) * ndtr((edges - self.z_minus) / sd)
        return np.diff(cdf)


def fokker_planck_density(x: float, tau: float, z):
    """Collapse-walk density ``p(z, tau)`` from initial population ``x``."""
    return GaussianMixture.from_initial(x, tau).density(z)


def diffusion_ensemble_mean(initial: QubitState, tau: float) -> QubitState:
    """Ensemble-averaged state of the diffusive unraveling at time ``tau``.

    Populations are conserved on average (martingale); the coherence decays
    by the universal factor ``e^{-tau/2}``.
    """
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return QubitState(initial.rho00, initial.rho01 * math.exp(-tau / 2.0))


def lindblad_gamma(g: float, model: str) -> float:
    """Dephasing rate whose Lindblad channel matches the given unraveling.

    The diffusive ensemble decays coherence as ``e^{-g t / 2}`` and the jump
    ensemble as ``e^{-g t}``; against the channel factor ``e^{-2 gamma t}``
    that gives ``gamma = g/4`` and ``gamma = g/2`` respectively.
    """
    if g <= 0.0:
        raise ValueError(f"coupling g must be positive, got {g}")
    if model == "diffusion":
        return g / 4.0
    if model == "jump":
        return g / 2.0
    raise ValueError(f"unknown model {model!r}; choose from {LINDBLAD_MODELS}")


def lindblad_solution(
    initial: QubitState, gamma: float, t: float, model: str = "diffusion"
) -> QubitState:
    """Exact solution of the dephasing master equation at time ``t``.

    The populations are constant and the coherence is multiplied by
    ``e^{-2 gamma t}``.  ``model`` only records which unraveling the rate is
    meant to reproduce (see ``lindblad_gamma``); the channel itself is the
    same dephasing map either way.
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    if model not in LINDBLAD_MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {LINDBLAD_MODELS}")
    return QubitState(initial.rho00, initial.rho01 * math.exp(-2.0 * gamma * t))


@dataclass(frozen=True)
class KrausPair:
    """Two-operator Kraus decomposition of the dephasing channel.

    ``orthogonal`` uses ``M0 = cosh(eps/2)/sqrt(cosh eps) * I`` and
    ``M3 = sinh(eps/2)/sqrt(cosh eps) * sigma3`` (trace-orthogonal pair);
    ``symmetric`` uses the two balanced filters
    ``M± = diag(e^{±eps/2}, e^{∓eps/2}) / sqrt(2 cosh eps)`` (equal weight).
    Both squeeze the coherence by exactly ``sech(eps)`` and leave the
    populations alone, so they are the same channel in two dresses.
    """

    epsilon: float
    form: str = "orthogonal"

    def __post_init__(self) -> None:
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.form not in KRAUS_FORMS:
            raise ValueError(
                f"unknown form {self.form!r}; choose from {KRAUS_FORMS}"
            )

    @classmethod
    def from_tau(cls, tau: float, form: str = "orthogonal") -> "KrausPair":
        """Pair reproducing the diffusive ensemble at collapse time ``tau``.

        The coherence factor must satisfy ``sech(eps) = e^{-tau/2}``, i.e.
        ``eps = arccosh(e^{tau/2})``.
        """
        if tau < 0.0:
            raise ValueError(f"tau must be >= 0, got {tau}")
        return cls(float(np.arccosh(math.exp(tau / 2.0))), form)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """The two Kraus operators as 2x2 float arrays."""
        eps = self.epsilon
        if self.form == "orthogonal":
            norm = math.sqrt(math.cosh(eps))
            m_a = (math.cosh(eps / 2.0) / norm) * np.eye(2)
            m_b = (math.sinh(eps / 2.0) / norm) * np.diag([1.0, -1.0])
        else:
            norm = math.sqrt(2.0 * math.cosh(eps))
            m_a = np.diag([math.exp(eps / 2.0), math.exp(-eps / 2.0)]) / norm
            m_b = np.diag([math.exp(-eps / 2.0), math.exp(eps / 2.0)]) / norm
        return m_a, m_b

    def completeness_defect(self) -> float:
        """Max-norm of ``M_a^2 + M_b^2 - I`` (operators are Hermitian here)."""
        m_a, m_b = self.matrices()
        return float(np.max(np.abs(m_a @ m_a + m_b @ m_b - np.eye(2))))

    def cross_defect(self) -> float:
        """Deviation from the form's defining symmetry.

        For the orthogonal form, ``|Tr(M0 M3)|``; for the symmetric form,
        ``|Tr(M+^2) - Tr(M-^2)|``.
        """
        m_a, m_b = self.matrices()
        if self.form == "orthogonal":
            return float(abs(np.trace(m_a @ m_b)))
        return float(abs(np.trace(m_a @ m_a) - np.trace(m_b @ m_b)))


def kraus_apply(state: QubitState, pair: KrausPair) -> QubitState:
    """Apply ``rho -> M_a rho M_a + M_b rho M_b`` to a qubit state."""
    m_a, m_b = pair.matrices()
    rho = state.matrix()
    out = m_a @ rho @ m_a + m_b @ rho @ m_b
    return QubitState(float(out[0, 0].real), complex(out[0, 1]))


def walk_epsilon(dtau: float) -> float:
    """Step size whose biased walk reproduces collapse time ``dtau`` per step.

    Matching the walk's one-step coherence factor ``sech(eps)`` to the
    ensemble factor ``e^{-dtau/2}`` gives ``eps = arccosh(e^{dtau/2})``,
    which is ``sqrt(dtau)`` to leading order.
    """
    if dtau < 0.0:
        raise ValueError(f"dtau must be >= 0, got {dtau}")
    return float(np.arccosh(math.exp(dtau / 2.0)))


def biased_walk_step(
    zc: ZCoordinate, epsilon: float
) -> tuple[tuple[ZCoordinate, float], tuple[ZCoordinate, float]]:
    """Elementary discrete step of the collapse walk in ``z``.

    From position ``z`` the walk moves to ``z ± eps`` with probabilities

        p± = (1 ± tanh(z) tanh(eps)) / 2,

    which sum to one and make ``tanh(z)`` (the population difference) an
    exact martingale.  Returns the two branches as (state, probability)
    pairs, up-move first.  Each branch keeps the frozen-phase coherence
    references, so pure states stay pure on both branches.
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    bias = math.tanh(zc.z) * math.tanh(epsilon)
    p_up = 0.5 * (1.0 + bias)
    p_down = 0.5 * (1.0 - bias)
    return (zc.with_z(zc.z + epsilon), p_up), (zc.with_z(zc.z - epsilon), p_down)


@dataclass(frozen=True)
class JumpSplit:
    """Two-point ensemble distribution of the jump unraveling.

    At collapse time ``tau`` every trajectory is either still on the
    deterministic no-click branch (the moving point) or has clicked down to
    ``rho00 = 0`` (the stationary point).
    """

    x: float
    tau: float
    moving_position: float
    moving_weight: float
    stationary_weight: float

    def mean(self) -> float:
        """Ensemble-mean population; equals ``x`` at the Born rate."""
        return self.moving_position * self.moving_weight

    def coherence_factor(self) -> float:
        """Ensemble coherence ratio ``<rho01>(tau) / rho01(0) = e^{-tau}``."""
        d = self.x * math.exp(self.tau) + (1.0 - self.x) * math.exp(-self.tau)
        return self.moving_weight / d


def jump_distribution(x: float, tau: float) -> JumpSplit:
    """Born-rate jump ensemble at collapse time ``tau``.

    The no-click branch sits at ``x / (x + (1-x) e^{-2 tau})`` with weight
    ``x + (1-x) e^{-2 tau}``; the clicked mass rests at 0 with the
    complementary weight.  The mean is ``x`` for every ``tau``.
    """
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"initial population x must lie in [0, 1], got {x}")
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    survival = x + (1.0 - x) * math.exp(-2.0 * tau)
    position = x / survival if survival > 0.0 else 0.0
    return JumpSplit(x, tau, position, survival, 1.0 - survival)


def _check_fd_inputs(samples: np.ndarray, rho00: float, g: float, dt: float):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("samples must be a 1-d array with at least 2 entries")
    if not (0.0 < rho00 < 1.0):
        raise ValueError(f"rho00 must lie strictly inside (0, 1), got {rho00}")
    if g <= 0.0 or dt <= 0.0:
        raise ValueError("g and dt must be positive")
    return samples


def fd_check_diffusion(
    samples: np.ndarray, rho00: float, g: float, dt: float
) -> float:
    """Fluctuation-dissipation residual of the diffusive unraveling.

    Compares the measured one-step variance ``<(d rho00 - d rho11)^2>``
    against the Born-coupled benchmark ``16 g rho00^2 rho11^2 dt`` and
    returns the relative deviation ``lhs/rhs - 1``.  At the Born coupling
    the residual is pure shot noise; at coupling ``g S_xi`` the ratio
    ``lhs/rhs`` equals ``g S_xi``, so the residual reads the coupling
    directly.

    Raises
    ------
    ValueError
        At the symmetric state ``rho00 = rho11``, where the dissipation
        side of the relation degenerates: evaluate at an asymmetric state.
    """
    samples = _check_fd_inputs(samples, rho00, g, dt)
    if abs(rho00 - 0.5) < 1e-12:
        raise ValueError(
            "fluctuation-dissipation check degenerates at rho00 = rho11; "
            "evaluate at an asymmetric state"
        )
    rho11 = 1.0 - rho00
    rhs = 16.0 * g * rho00**2 * rho11**2 * dt
    lhs = float(np.mean(samples**2))
    return lhs / rhs - 1.0


def fd_check_jump(samples: np.ndarray, rho00: float, g: float, dt: float) -> float:
    """Fluctuation-dissipation residual of the jump unraveling.

    Compares the measured one-step variance ``<(d rho00)^2>`` against the
    Born-rate benchmark ``2 g rho00^2 rho11 dt`` and returns the relative
    deviation ``lhs/rhs - 1``; at click rate ``lambda`` times Born the
    ratio equals ``lambda``.
    """
    samples = _check_fd_inputs(samples, rho00, g, dt)
    rho11 = 1.0 - rho00
    rhs = 2.0 * g * rho00**2 * rho11 * dt
    lhs = float(np.mean(samples**2))
    return lhs / rhs - 1.0
