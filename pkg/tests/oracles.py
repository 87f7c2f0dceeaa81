"""Independent reference implementations used only by the tests.

These deliberately avoid the closed forms used by the package: the
eavesdropper bound is computed from full numeric covariance matrices with a
general symplectic eigensolver, confidence bounds use scipy's inverse normal
CDF, and the slot picker enumerates every candidate. Tests compare package
results against these.
"""

import numpy as np
from scipy.stats import norm

I2 = np.eye(2)
SZ = np.diag([1.0, -1.0])


def g_entropy(x: float) -> float:
    if x <= 0:
        return 0.0
    return (x + 1) * np.log2(x + 1) - x * np.log2(x)


def symplectic_eigenvalues(gamma: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of i*Omega*gamma, one per mode."""
    n = gamma.shape[0] // 2
    omega1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    omega = np.kron(np.eye(n), omega1)
    ev = np.linalg.eigvals(1j * omega @ gamma)
    return np.sort(np.abs(ev))[::2]  # eigenvalues come in +/- pairs


def gaussian_entropy(gamma: np.ndarray) -> float:
    return float(sum(g_entropy((nu - 1.0) / 2.0) for nu in symplectic_eigenvalues(gamma)))


def holevo_purification(V: float, T: float, xi: float,
                        eta: float = 1.0, v_el: float = 0.0) -> float:
    """chi_BE from numeric covariance matrices of the purified state.

    The channel is purified by the eavesdropper; an imperfect detector is a
    beamsplitter of transmittance eta mixing the signal with one arm of an
    EPR pair whose variance reproduces the electronic noise. chi_BE =
    S(E) - S(E | x_B) with both entropies evaluated through the pure global
    state: S(E) = S(A,B1) and S(E | x_B) = S(A,F,G | x_B).
    """
    chi_line = (1.0 - T) / T + xi
    a_block = V * I2
    b_block = T * (V + chi_line) * I2
    c_block = np.sqrt(T * (V * V - 1.0)) * SZ
    gamma_ab = np.block([[a_block, c_block], [c_block.T, b_block]])
    s_e = gaussian_entropy(gamma_ab)

    if eta == 1.0 and v_el == 0.0:
        bxx = gamma_ab[2, 2]
        sig = gamma_ab[:2, 2:]
        conditional = a_block - np.outer(sig[:, 0], sig[:, 0]) / bxx
        return s_e - gaussian_entropy(conditional)

    # EPR pair (F0, G) of variance v feeds the detector's loss port.
    v = 1.0 + v_el / (1.0 - eta)
    epr_c = np.sqrt(v * v - 1.0) * SZ
    gamma_full = np.zeros((8, 8))
    gamma_full[:4, :4] = gamma_ab
    gamma_full[4:, 4:] = np.block([[v * I2, epr_c], [epr_c.T, v * I2]])
    bs = np.eye(8)
    se, sr = np.sqrt(eta), np.sqrt(1.0 - eta)
    bs[2:4, 2:4] = se * I2
    bs[2:4, 4:6] = sr * I2
    bs[4:6, 2:4] = -sr * I2
    bs[4:6, 4:6] = se * I2
    gamma_out = bs @ gamma_full @ bs.T  # modes A, B2, F, G

    keep = [0, 1, 4, 5, 6, 7]
    gamma_afg = gamma_out[np.ix_(keep, keep)]
    sig = gamma_out[np.ix_(keep, [2, 3])]
    bxx = gamma_out[2, 2]
    conditional = gamma_afg - np.outer(sig[:, 0], sig[:, 0]) / bxx
    return s_e - gaussian_entropy(conditional)


def confidence_bounds(t_hat: float, s_sq: float, n_pe: int, v_a: float,
                      eps_pe: float, eta: float = 1.0,
                      v_el: float = 0.0) -> tuple[float, float]:
    """Worst-case (T_min, xi_max) via scipy's inverse normal CDF."""
    z = norm.ppf(1.0 - eps_pe / 2.0)
    t_min = t_hat - z * np.sqrt(s_sq / (n_pe * v_a))
    s_sq_max = s_sq + z * s_sq * np.sqrt(2.0 / n_pe)
    t_min_sq_over_eta = t_min * t_min / eta
    return t_min_sq_over_eta, max(0.0, (s_sq_max - 1.0 - v_el) / t_min_sq_over_eta)


def brute_force_farthest(occupied, n_slots: int) -> int:
    """Slot maximizing the minimum circular distance; lowest index on ties."""
    def min_dist(s):
        return min(min(abs(s - o) % n_slots, n_slots - abs(s - o) % n_slots)
                   for o in occupied)

    free = [s for s in range(n_slots) if s not in set(occupied)]
    if not occupied:
        return free[0]
    return max(free, key=lambda s: (min_dist(s), -s))
