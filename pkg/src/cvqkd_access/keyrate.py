"""Secret key rate of the Gaussian-modulated coherent-state protocol.

Homodyne detection, reverse reconciliation, collective attacks, trusted
("realistic") receiver: the eavesdropper purifies the channel but not the
detector, whose efficiency eta and electronic noise v_el sit inside the
receiver station. Everything is evaluated in shot-noise units with channel
excess noise xi referenced at the channel input.

Noise bookkeeping (referred to the channel input):

    chi_line = (1 - T)/T + xi
    chi_hom  = (1 + v_el)/eta - 1
    chi_tot  = chi_line + chi_hom / T

Rates are in bits per pulse (log base 2) unless suffixed ``_bps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .units import SystemParams

# Symplectic eigenvalues of physical states satisfy lambda >= 1; anything
# below this tolerance indicates a non-physical covariance matrix rather
# than numerical noise.
PHYSICALITY_TOL = 1e-9


class PhysicalityError(ValueError):
    """Inputs describe a covariance matrix that is not a valid quantum state."""


@dataclass(frozen=True)
class KeyRateInputs:
    """One evaluation point for the rate formulas.

    V is the total transmitter variance ``V_A + 1`` (SNU); T and xi describe
    the channel (point estimates or worst-case bounds, depending on what the
    caller wants to evaluate); eta, v_el, beta are receiver efficiency,
    electronic noise, and reconciliation efficiency.
    """

    V: float
    T: float
    xi: float
    eta: float = 1.0
    v_el: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.V > 1:
            raise ValueError(f"V must exceed 1 (vacuum plus modulation), got {self.V}")
        if not 0 < self.T <= 1:
            raise ValueError(f"T must be in (0, 1], got {self.T}")
        if self.xi < 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.v_el < 0:
            raise ValueError(f"v_el must be >= 0, got {self.v_el}")
        if not 0 <= self.beta <= 1:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")

    @classmethod
    def from_params(cls, params: SystemParams, T: float, xi: float) -> "KeyRateInputs":
        """Evaluation point at channel (T, xi) with the link's fixed constants."""
        return cls(V=params.mod_variance_snu + 1.0, T=T, xi=xi,
                   eta=params.det_efficiency, v_el=params.elec_noise_snu,
                   beta=params.recon_efficiency)


def entropy_g(x: float) -> float:
    """Bosonic entropy term G(x) = (x+1)*log2(x+1) - x*log2(x), G(0) = 0.

    The thermal-state von Neumann entropy of a mode with symplectic
    eigenvalue lambda is G((lambda - 1)/2).
    """
    if x <= 0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def chi_line(T: float, xi: float) -> float:
    """Channel-added noise referred to the channel input."""
    return (1.0 - T) / T + xi


def chi_hom(eta: float, v_el: float) -> float:
    """Homodyne-detection-added noise referred to the receiver input."""
    return (1.0 + v_el) / eta - 1.0


def chi_tot(inputs: KeyRateInputs) -> float:
    """Total added noise referred to the channel input."""
    return chi_line(inputs.T, inputs.xi) + chi_hom(inputs.eta, inputs.v_el) / inputs.T


def mutual_information(inputs: KeyRateInputs) -> float:
    """Shannon information between the two measured quadrature sequences.

    I_AB = (1/2) * log2( (V + chi_tot) / (1 + chi_tot) ), bits per pulse.
    """
    c = chi_tot(inputs)
    return 0.5 * math.log2((inputs.V + c) / (1.0 + c))


def _sqrt_discriminant(sum_sq: float, prod_sq: float, label: str) -> float:
    disc = sum_sq * sum_sq - 4.0 * prod_sq
    if disc < -PHYSICALITY_TOL * max(1.0, sum_sq * sum_sq):
        raise PhysicalityError(f"negative discriminant in {label}: {disc}")
    return math.sqrt(max(disc, 0.0))


def _check_lambda(lam_sq: float, label: str) -> float:
    if lam_sq < 0:
        raise PhysicalityError(f"negative squared symplectic eigenvalue {label}: {lam_sq}")
    lam = math.sqrt(lam_sq)
    if lam < 1.0 - PHYSICALITY_TOL:
        raise PhysicalityError(f"symplectic eigenvalue {label} = {lam} below 1; state is unphysical")
    return lam


def holevo_bound(inputs: KeyRateInputs) -> float:
    """Eavesdropper information bound under collective attacks, bits per pulse.

    With A = V^2 (1 - 2T) + 2T + T^2 (V + chi_line)^2 and
    B = T^2 (V chi_line + 1)^2, the pre-measurement symplectic eigenvalues
    are lambda_{1,2}^2 = (A +/- sqrt(A^2 - 4B))/2. Conditioned on the
    homodyne outcome,

        C = (V sqrt(B) + T (V + chi_line) + A chi_hom) / (T (V + chi_tot))
        D = sqrt(B) (V + sqrt(B) chi_hom) / (T (V + chi_tot))

    give lambda_{3,4}^2 = (C +/- sqrt(C^2 - 4D))/2 (the remaining detector
    mode stays at the vacuum, contributing nothing), and

        chi_BE = G((l1-1)/2) + G((l2-1)/2) - G((l3-1)/2) - G((l4-1)/2).
    """
    V, T = inputs.V, inputs.T
    cl = chi_line(T, inputs.xi)
    ch = chi_hom(inputs.eta, inputs.v_el)
    ct = cl + ch / T

    A = V * V * (1.0 - 2.0 * T) + 2.0 * T + T * T * (V + cl) ** 2
    B = T * T * (V * cl + 1.0) ** 2
    root = _sqrt_discriminant(A, B, "lambda_1,2")
    lam1 = _check_lambda((A + root) / 2.0, "lambda_1")
    lam2 = _check_lambda((A - root) / 2.0, "lambda_2")

    sqrt_b = math.sqrt(B)
    denom = T * (V + ct)
    C = (V * sqrt_b + T * (V + cl) + A * ch) / denom
    D = sqrt_b * (V + sqrt_b * ch) / denom
    root2 = _sqrt_discriminant(C, D, "lambda_3,4")
    lam3 = _check_lambda((C + root2) / 2.0, "lambda_3")
    lam4 = _check_lambda((C - root2) / 2.0, "lambda_4")

    return (entropy_g((lam1 - 1.0) / 2.0) + entropy_g((lam2 - 1.0) / 2.0)
            - entropy_g((lam3 - 1.0) / 2.0) - entropy_g((lam4 - 1.0) / 2.0))


def symplectic_spectrum(inputs: KeyRateInputs) -> tuple[float, float, float, float]:
    """The four symplectic eigenvalues used by holevo_bound (diagnostics)."""
    V, T = inputs.V, inputs.T
    cl = chi_line(T, inputs.xi)
    ch = chi_hom(inputs.eta, inputs.v_el)
    ct = cl + ch / T
    A = V * V * (1.0 - 2.0 * T) + 2.0 * T + T * T * (V + cl) ** 2
    B = T * T * (V * cl + 1.0) ** 2
    root = _sqrt_discriminant(A, B, "lambda_1,2")
    sqrt_b = math.sqrt(B)
    denom = T * (V + ct)
    C = (V * sqrt_b + T * (V + cl) + A * ch) / denom
    D = sqrt_b * (V + sqrt_b * ch) / denom
    root2 = _sqrt_discriminant(C, D, "lambda_3,4")
    return (_check_lambda((A + root) / 2.0, "lambda_1"),
            _check_lambda((A - root) / 2.0, "lambda_2"),
            _check_lambda((C + root2) / 2.0, "lambda_3"),
            _check_lambda((C - root2) / 2.0, "lambda_4"))


def asymptotic_rate(inputs: KeyRateInputs) -> float:
    """Infinite-block rate max(0, beta*I_AB - chi_BE), bits per pulse."""
    return max(0.0, inputs.beta * mutual_information(inputs) - holevo_bound(inputs))


def finite_size_penalty(n_key: float, eps_bar: float) -> float:
    """Privacy-amplification penalty Delta(n) = 7*sqrt(log2(2/eps_bar)/n)."""
    if not 0 < eps_bar < 1:
        raise ValueError(f"eps_bar must be in (0, 1), got {eps_bar}")
    if n_key <= 0:
        raise ValueError(f"n_key must be positive, got {n_key}")
    return 7.0 * math.sqrt(math.log2(2.0 / eps_bar) / n_key)


@dataclass(frozen=True)
class KeyRateReport:
    """Key-rate breakdown for one link and one security block.

    ``raw_rate_per_pulse`` keeps the unfloored value for diagnostics; the
    reported ``rate_per_pulse`` is floored at zero.
    """

    i_ab: float
    chi_be: float
    delta_n: float
    rate_per_pulse: float
    skr_bps: float
    raw_rate_per_pulse: float

    def to_dict(self) -> dict:
        return {
            "i_ab_bits_per_pulse": self.i_ab,
            "chi_be_bits_per_pulse": self.chi_be,
            "delta_n_bits_per_pulse": self.delta_n,
            "rate_per_pulse": self.rate_per_pulse,
            "skr_bps": self.skr_bps,
            "raw_rate_per_pulse": self.raw_rate_per_pulse,
        }


# Finite-size analysis below this key length is meaningless noise.
MIN_N_KEY = 10_000


def finite_size_rate(est, params: SystemParams, *,
                     worst_case_mutual_info: bool = False) -> KeyRateReport:
    """Finite-size secret key rate from a channel estimate.

    Mutual information is evaluated at the point estimates (T_hat, xi_hat)
    while the eavesdropper bound uses the worst-case (T_min, xi_max) --
    the usual practical convention; pass ``worst_case_mutual_info=True`` to
    evaluate both at the worst case. Statistical fluctuations can push the
    estimates outside the physical domain (negative xi_hat, T_hat above 1
    on a near-lossless channel); they are clamped here, not in the estimate
    itself, so diagnostics stay unbiased.

        rate = max(0, (n_key/N) * (beta*I_AB - chi_BE - Delta(n_key)))
        skr_bps = rate * rep_rate_hz
    """
    n_key = params.n_key
    if n_key < MIN_N_KEY:
        raise ValueError(
            f"n_key = {n_key} below {MIN_N_KEY}; increase block_length or key_fraction")
    t_point = est.T_min if worst_case_mutual_info else est.T_hat
    xi_point = est.xi_max if worst_case_mutual_info else max(0.0, est.xi_hat)
    point = KeyRateInputs.from_params(params, min(1.0, t_point), xi_point)
    worst = KeyRateInputs.from_params(params, min(1.0, est.T_min), max(0.0, est.xi_max))

    i_ab = mutual_information(point)
    chi_be = holevo_bound(worst)
    delta = finite_size_penalty(n_key, params.eps_bar)
    raw = point.beta * i_ab - chi_be - delta
    rate = max(0.0, (n_key / params.block_length) * raw)
    return KeyRateReport(
        i_ab=i_ab,
        chi_be=chi_be,
        delta_n=delta,
        rate_per_pulse=rate,
        skr_bps=rate * params.rep_rate_hz,
        raw_rate_per_pulse=(n_key / params.block_length) * raw,
    )
