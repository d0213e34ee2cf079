"""Pinching phase matrix, effective channel, ZF precoder, SNR and SE.

The precoder solves the K x K Gram system by Gaussian elimination with
partial pivoting (K is tiny, no external solver needed). Conditioning is
estimated from the pivot magnitude ratio; a single diagonal-loading retry
is allowed, but any result must still satisfy the zero-forcing identity,
otherwise the channel is reported as singular and the caller falls back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COND_THRESHOLD = 1e12        # max/min pivot magnitude ratio
DIAG_LOADING = 1e-9          # times trace(Gram)/K, applied once on retry
ZF_RESIDUAL_TOL = 1e-6       # max |H_eff @ raw - I| accepted as zero-forcing


class SingularChannelError(RuntimeError):
    """Effective channel too close to rank-deficient for ZF."""


@dataclass
class AntennaConfig:
    x: np.ndarray             # (N,) PA positions along waveguides, m
    y_wg: np.ndarray          # (N,) waveguide y coordinates, m, increasing
    guided_wavelength: float  # lambda_g, m
    height: float             # H, m
    area_side: float          # D, m (position bound)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y_wg = np.asarray(self.y_wg, dtype=float)
        if self.guided_wavelength <= 0:
            raise ValueError("guided_wavelength must be positive")
        if np.any(self.x < 0) or np.any(self.x > self.area_side):
            raise ValueError("PA positions must lie in [0, area_side]")
        if np.any(np.diff(self.y_wg) <= 0):
            raise ValueError("waveguide y coordinates must be strictly increasing")

    def copy(self) -> "AntennaConfig":
        return AntennaConfig(self.x.copy(), self.y_wg.copy(),
                             self.guided_wavelength, self.height, self.area_side)


@dataclass
class PrecodeResult:
    h_eff: np.ndarray   # (K, N) complex
    w: np.ndarray       # (N, K) complex, ||w||_F^2 = p_max
    zeta: float         # power normalization factor
    snr: np.ndarray     # (K,)
    se: np.ndarray      # (K,) bits/s/Hz


def pinching_matrix(antennas: AntennaConfig) -> np.ndarray:
    """Diagonal in-guide phase delays exp(-j 2 pi x_n / lambda_g)."""
    phases = np.exp(-2j * np.pi * antennas.x / antennas.guided_wavelength)
    return np.diag(phases)


def effective_channel(h_rows, g: np.ndarray) -> np.ndarray:
    """Stack h_k^H G as row k; h_rows holds the (unconjugated) h_k vectors."""
    h = np.atleast_2d(np.asarray(h_rows, dtype=complex))
    if h.shape[1] != g.shape[0]:
        raise ValueError(f"channel dim {h.shape[1]} != pinching dim {g.shape[0]}")
    return h.conj() @ g


def _solve_with_pivoting(a: np.ndarray, b: np.ndarray):
    """Solve a @ x = b by partial-pivot elimination.

    Returns (x, pivot_ratio); x is None when a zero pivot appears.
    """
    a = a.astype(complex).copy()
    b = b.astype(complex).copy()
    n = a.shape[0]
    pivots = np.empty(n)
    for c in range(n):
        p = int(np.argmax(np.abs(a[c:, c]))) + c
        if p != c:
            a[[c, p]] = a[[p, c]]
            b[[c, p]] = b[[p, c]]
        pivot = a[c, c]
        if pivot == 0:
            return None, np.inf
        pivots[c] = abs(pivot)
        for r in range(c + 1, n):
            f = a[r, c] / pivot
            if f != 0:
                a[r, c:] -= f * a[c, c:]
                b[r] -= f * b[c]
    x = np.zeros_like(b)
    for c in range(n - 1, -1, -1):
        x[c] = (b[c] - a[c, c + 1:] @ x[c + 1:]) / a[c, c]
    return x, float(pivots.max() / pivots.min())


def zf_precoder(h_eff: np.ndarray, p_max: float,
                noise_power: float) -> PrecodeResult:
    """Zero-forcing precoder with total-power normalization.

    raw = H_eff^H (H_eff H_eff^H)^-1, scaled so ||W||_F^2 = p_max. Under ZF
    every user sees the same received amplitude zeta, so snr_k = zeta^2 /
    noise_power.
    """
    h_eff = np.atleast_2d(np.asarray(h_eff, dtype=complex))
    k, n = h_eff.shape
    if n < k:
        raise ValueError(f"need at least as many PAs as users (N={n}, K={k})")
    gram = h_eff @ h_eff.conj().T
    eye = np.eye(k, dtype=complex)
    inv, cond = _solve_with_pivoting(gram, eye)
    if inv is None or cond > COND_THRESHOLD:
        delta = DIAG_LOADING * float(np.trace(gram).real) / k
        inv, cond = _solve_with_pivoting(gram + delta * eye, eye)
        if inv is None or cond > COND_THRESHOLD:
            raise SingularChannelError(f"Gram solve failed (pivot ratio {cond:.3g})")
    raw = h_eff.conj().T @ inv
    residual = float(np.max(np.abs(h_eff @ raw - eye)))
    if residual > ZF_RESIDUAL_TOL:
        raise SingularChannelError(f"ZF identity residual {residual:.3g}")
    zeta = float(np.sqrt(p_max) / np.linalg.norm(raw))
    w = zeta * raw
    snr = np.full(k, zeta * zeta / noise_power)
    return PrecodeResult(h_eff=h_eff, w=w, zeta=zeta, snr=snr,
                         se=np.log2(1.0 + snr))


def matched_filter_precoder(h_eff: np.ndarray, p_max: float) -> np.ndarray:
    """Power-normalized conjugate beamformer; the singular-channel fallback."""
    w = np.atleast_2d(np.asarray(h_eff, dtype=complex)).conj().T
    norm = np.linalg.norm(w)
    if norm == 0:
        raise SingularChannelError("all-zero effective channel")
    return w * (np.sqrt(p_max) / norm)


def snr_and_se(h_rows, g: np.ndarray, w: np.ndarray, noise_power: float):
    """Per-user SNR |h_k^H G w_k|^2 / sigma_n^2 and SE, from first principles."""
    rx = effective_channel(h_rows, g) @ w  # rx[k, j]: user k's gain on stream j
    signal = np.abs(np.diag(rx)) ** 2
    snr = signal / noise_power
    se = np.log2(1.0 + snr)
    return snr, se, float(se.sum())


def sinr_and_se(h_rows, g: np.ndarray, w: np.ndarray, noise_power: float):
    """Like snr_and_se but charging cross-stream leakage as interference.

    Used for non-ZF precoders (the fallback path), where inter-user
    interference is not nulled.
    """
    rx = effective_channel(h_rows, g) @ w
    power = np.abs(rx) ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    sinr = signal / (noise_power + interference)
    se = np.log2(1.0 + sinr)
    return sinr, se, float(se.sum())
