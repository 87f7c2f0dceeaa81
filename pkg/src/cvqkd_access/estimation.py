"""Channel parameter estimation with finite-size worst-case bounds.

The receiver regresses its quadratures on the disclosed transmitter values:

    t_hat = sum(x_A x_B) / sum(x_A^2)          amplitude gain, -> sqrt(eta*T)
    s^2   = mean((x_B - t_hat x_A)^2)          residual variance, -> 1 + eta*T*xi + v_el

Detector efficiency and electronic noise are trusted calibrated constants,
so the channel quantities follow as T_hat = t_hat^2/eta and
xi_hat = (s^2 - 1 - v_el) / (t_hat^2/eta). Worst-case bounds take the
Gaussian confidence interval at failure probability eps_pe:

    z       = PPF(1 - eps_pe/2)
    t_min   = t_hat - z*sqrt(s^2/(n*V_A))
    s^2_max = s^2 + z*s^2*sqrt(2/n)

A negative xi_hat from statistical fluctuation is reported as-is so
diagnostics stay unbiased; clamping to zero happens in the key-rate engine.
Sufficient statistics are exposed so chunks can be accumulated concurrently
and merged associatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np

from .simulate import QuadratureDataset
from .units import ChannelModel, SystemParams


class EstimationError(RuntimeError):
    """Parameter estimation failed; the security block must be discarded."""


@dataclass(frozen=True)
class SufficientStats:
    """Additive statistics of a paired-quadrature sample."""

    n: int
    sum_aa: float
    sum_ab: float
    sum_bb: float

    @classmethod
    def from_samples(cls, x_a, x_b) -> "SufficientStats":
        a = np.asarray(x_a, dtype=float)
        b = np.asarray(x_b, dtype=float)
        if a.shape != b.shape:
            raise ValueError(f"sample shapes differ: {a.shape} vs {b.shape}")
        return cls(n=a.size, sum_aa=float(a @ a), sum_ab=float(a @ b), sum_bb=float(b @ b))

    def merge(self, other: "SufficientStats") -> "SufficientStats":
        return SufficientStats(
            n=self.n + other.n,
            sum_aa=self.sum_aa + other.sum_aa,
            sum_ab=self.sum_ab + other.sum_ab,
            sum_bb=self.sum_bb + other.sum_bb,
        )


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated channel parameters and their worst-case bounds.

    ``t_hat`` is the amplitude gain sqrt(eta*T); ``T_hat`` and ``xi_hat`` are
    the detector-corrected point estimates; ``T_min``/``xi_max`` hold at
    confidence eps_pe. ``s_sq``, ``eta``, ``v_el`` are carried so bounds can
    be recomputed at a different eps_pe.
    """

    t_hat: float
    T_hat: float
    xi_hat: float
    n_pe: int
    T_min: float
    xi_max: float
    s_sq: float
    eta: float
    v_el: float
    eps_pe: float

    def to_dict(self) -> dict:
        return {
            "t_hat": self.t_hat,
            "T_hat": self.T_hat,
            "xi_hat": self.xi_hat,
            "n_pe": self.n_pe,
            "T_min": self.T_min,
            "xi_max": self.xi_max,
            "s_sq": self.s_sq,
            "eta": self.eta,
            "v_el": self.v_el,
            "eps_pe": self.eps_pe,
        }


def worst_case_bounds(est: ChannelEstimate, v_a: float, eps_pe: float) -> tuple[float, float]:
    """(T_min, xi_max) at confidence eps_pe for an existing estimate.

    xi_max is clamped at 0 (it bounds a non-negative quantity). If even the
    gain lower bound hits zero the block carries no usable signal and an
    EstimationError is raised, mirroring block-discard practice.
    """
    if not 0 < eps_pe < 1:
        raise ValueError(f"eps_pe must be in (0, 1), got {eps_pe}")
    if est.n_pe < 2:
        raise EstimationError(f"need at least 2 estimation samples, got {est.n_pe}")
    z = NormalDist().inv_cdf(1.0 - eps_pe / 2.0)
    t_min = est.t_hat - z * math.sqrt(est.s_sq / (est.n_pe * v_a))
    if t_min <= 0:
        raise EstimationError(
            f"worst-case gain bound t_min = {t_min} is not positive at eps_pe = {eps_pe}; "
            "block discarded")
    s_sq_max = est.s_sq + z * est.s_sq * math.sqrt(2.0 / est.n_pe)
    t_min_sq_over_eta = t_min * t_min / est.eta
    xi_max = max(0.0, (s_sq_max - 1.0 - est.v_el) / t_min_sq_over_eta)
    return t_min * t_min / est.eta, xi_max


def estimate_from_stats(stats: SufficientStats, params: SystemParams, *,
                        eps_pe: float | None = None) -> ChannelEstimate:
    """Channel estimate from accumulated sufficient statistics."""
    if eps_pe is None:
        eps_pe = params.eps_pe
    if stats.n < 2:
        raise EstimationError(f"need at least 2 estimation samples, got {stats.n}")
    if stats.sum_aa <= 0:
        raise EstimationError("transmitter quadratures are degenerate (zero variance)")
    t_hat = stats.sum_ab / stats.sum_aa
    if t_hat <= 0:
        raise EstimationError(
            f"estimated gain t_hat = {t_hat} is not positive; channel inverted or dead")
    # mean squared residual, expanded so chunks merge exactly
    s_sq = (stats.sum_bb - 2.0 * t_hat * stats.sum_ab + t_hat * t_hat * stats.sum_aa) / stats.n
    eta = params.det_efficiency
    v_el = params.elec_noise_snu
    t_hat_sq_over_eta = t_hat * t_hat / eta
    partial = ChannelEstimate(
        t_hat=t_hat,
        T_hat=t_hat_sq_over_eta,
        xi_hat=(s_sq - 1.0 - v_el) / t_hat_sq_over_eta,
        n_pe=stats.n,
        T_min=math.nan,
        xi_max=math.nan,
        s_sq=s_sq,
        eta=eta,
        v_el=v_el,
        eps_pe=eps_pe,
    )
    t_min, xi_max = worst_case_bounds(partial, params.mod_variance_snu, eps_pe)
    return replace(partial, T_min=t_min, xi_max=xi_max)


def estimate_channel(data: QuadratureDataset, params: SystemParams, *,
                     eps_pe: float | None = None) -> ChannelEstimate:
    """Estimate the channel from a quadrature dataset (SNU-calibrated).

    Every sample pair in ``data`` is treated as disclosed for estimation;
    splitting a block into key and estimation halves is the pipeline's job.
    """
    return estimate_from_stats(SufficientStats.from_samples(data.alice, data.bob),
                               params, eps_pe=eps_pe)


def exact_estimate(channel: ChannelModel, params: SystemParams, *,
                   n_pe: int | None = None,
                   eps_pe: float | None = None) -> ChannelEstimate:
    """Estimate whose point values equal the model's analytic statistics.

    Used to evaluate key rates directly from configured channel parameters,
    with the same finite-size worst-case treatment a measured block of
    ``n_pe`` estimation samples would receive (default: the block's
    estimation share).
    """
    if n_pe is None:
        n_pe = params.n_pe
    if eps_pe is None:
        eps_pe = params.eps_pe
    eta = params.det_efficiency
    v_el = params.elec_noise_snu
    t = channel.transmittance
    t_hat = math.sqrt(eta * t)
    s_sq = 1.0 + eta * t * channel.excess_noise_snu + v_el
    t_hat_sq_over_eta = t_hat * t_hat / eta
    partial = ChannelEstimate(
        t_hat=t_hat,
        T_hat=t_hat_sq_over_eta,
        xi_hat=(s_sq - 1.0 - v_el) / t_hat_sq_over_eta,
        n_pe=n_pe,
        T_min=math.nan,
        xi_max=math.nan,
        s_sq=s_sq,
        eta=eta,
        v_el=v_el,
        eps_pe=eps_pe,
    )
    t_min, xi_max = worst_case_bounds(partial, params.mod_variance_snu, eps_pe)
    return replace(partial, T_min=t_min, xi_max=xi_max)
