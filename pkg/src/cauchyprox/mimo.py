"""MIMO link simulation: linear detection and Cauchy sparse error recovery.

Model ``y = H s + v`` with ``H`` (m x n) i.i.d. CN(0, 1), unit-energy
symbols and ``v ~ CN(0, sigma_v2 I)``. The per-receive-antenna SNR is
``n / sigma_v2``. After a linear detector produces hard decisions
``s_hard``, the residual ``y - H s_hard = H e + v`` has a sparse error
vector ``e`` that is estimated with Cauchy proximal splitting.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .linops import RealCompositeOp
from .penalties import CauchyPenalty, gamma_min_step
from .solver import ConvexityWarning, DivergenceError, FBConfig, cps_solve, step_size_policy

__all__ = [
    "Constellation",
    "QPSK",
    "QAM16",
    "MimoScenario",
    "RecoveryResult",
    "gen_channel",
    "slice_symbols",
    "zf_detect",
    "mmse_detect",
    "error_recover_cps",
    "run_ber_curve",
]


@dataclass(frozen=True)
class Constellation:
    """Gray-mapped unit-energy alphabet.

    ``points[k]`` carries the bit pattern ``labels[k]`` (MSB first). Points
    are ordered by Gray index, so the index of a point is also its tie-break
    priority when slicing.
    """

    kind: str
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.points.size))

    @property
    def size(self) -> int:
        return int(self.points.size)

    def bit_table(self) -> np.ndarray:
        """``(size, bits_per_symbol)`` array of bits for each point index."""
        b = self.bits_per_symbol
        return ((self.labels[:, None] >> np.arange(b - 1, -1, -1)) & 1).astype(np.uint8)

    def random_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, n)


def _qpsk() -> Constellation:
    # Gray labels 00, 01, 11, 10 counterclockwise from (1 + 1j) / sqrt(2)
    pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)
    labels = np.array([0b00, 0b01, 0b11, 0b10])
    order = np.argsort(labels)
    return Constellation("QPSK", pts[order], labels[order])


def _qam16() -> Constellation:
    # per-axis Gray: -3 -> 00, -1 -> 01, +1 -> 11, +3 -> 10; label = (I bits, Q bits)
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    gray = np.array([0b00, 0b01, 0b11, 0b10])
    pts, labels = [], []
    for i in range(4):
        for q in range(4):
            pts.append(levels[i] + 1j * levels[q])
            labels.append((gray[i] << 2) | gray[q])
    pts = np.array(pts) / np.sqrt(10.0)
    labels = np.array(labels)
    order = np.argsort(labels)
    return Constellation("QAM16", pts[order], labels[order])


QPSK = _qpsk()
QAM16 = _qam16()

_BY_NAME = {"qpsk": QPSK, "qam16": QAM16, "16qam": QAM16}


def constellation(name: str) -> Constellation:
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; use QPSK or QAM16") from None


def gen_channel(m: int, n: int, seed) -> np.ndarray:
    """``m x n`` matrix of i.i.d. CN(0, 1) entries."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2.0)


def slice_indices(soft, const: Constellation) -> np.ndarray:
    """Index of the nearest point; exact ties go to the smaller Gray index."""
    soft = np.asarray(soft, dtype=complex)
    d = np.abs(soft[..., None] - const.points) ** 2
    # argmin returns the first minimum, i.e. the smallest Gray label
    return np.argmin(d, axis=-1)


def slice_symbols(soft, const: Constellation) -> np.ndarray:
    return const.points[slice_indices(soft, const)]


def bits(indices, const: Constellation) -> np.ndarray:
    """Flat bit vector for an array of point indices."""
    return const.bit_table()[np.asarray(indices)].reshape(-1)


def zf_detect(y, H, const: Constellation) -> np.ndarray:
    """Zero-forcing: least-squares solve, then slicing. ``y`` is ``m`` or ``m x k``."""
    soft = np.linalg.lstsq(H, y, rcond=None)[0]
    return slice_symbols(soft, const)


def mmse_detect(y, H, sigma_v2: float, const: Constellation) -> Tuple[np.ndarray, np.ndarray]:
    """Linear MMSE ``(H^H H + sigma_v2 I)^{-1} H^H y`` for unit-energy symbols."""
    Hh = H.conj().T
    G = Hh @ H + sigma_v2 * np.eye(H.shape[1])
    soft = np.linalg.solve(G, Hh @ y)
    return soft, slice_symbols(soft, const)


def _to_real(z):
    """Columns of a complex ``n x k`` array as ``k`` stacked ``[Re; Im]`` blocks."""
    zt = np.asarray(z).T
    return np.concatenate([zt.real, zt.imag], axis=1).ravel()


def _from_real(v, n, k):
    blocks = v.reshape(k, 2 * n)
    return (blocks[:, :n] + 1j * blocks[:, n:]).T


def error_recover_cps(y, H, s_hard, sigma_v2: float, const: Constellation,
                      gamma_multiplier: float = 10.0, eps: float = 1e-3,
                      max_iter: int = 500) -> np.ndarray:
    """Refine hard decisions by estimating the sparse error ``e = s - s_hard``.

    Solves ``y - H s_hard = H e + v`` with the Cauchy penalty on the
    real-composite model, fidelity weight ``1 / sigma_v2``, step
    ``mu = 3 / (2L)`` and ``gamma = gamma_multiplier * sqrt(mu) / 2``, then
    returns ``slice(s_hard + e_hat)``. ``y`` and ``s_hard`` may hold ``k``
    column vectors that share ``H``.
    """
    y = np.asarray(y, dtype=complex)
    s_hard = np.asarray(s_hard, dtype=complex)
    vec = y.ndim == 1
    Y = y[:, None] if vec else y
    S = s_hard[:, None] if vec else s_hard
    m, n = H.shape
    k = Y.shape[1]
    resid = Y - H @ S
    op = RealCompositeOp(H, batch=k)
    w = 1.0 / sigma_v2 if sigma_v2 > 0 else 1.0
    mu = step_size_policy(w * op.norm_sq(), 1.5)
    cfg = FBConfig(mu=mu, eps=eps, max_iter=max_iter, fidelity_weight=w, check_step=False)
    res = cps_solve(_to_real(resid), op, CauchyPenalty(gamma_multiplier * gamma_min_step(mu)), cfg)
    e_hat = _from_real(res.x_hat, n, k)
    out = slice_symbols(S + e_hat, const)
    return out[:, 0] if vec else out


@dataclass
class MimoScenario:
    """One BER-vs-SNR experiment.

    ``n_symbols`` counts transmitted symbols per trial over all antennas, so
    each trial sends ``n_symbols / n_tx`` vectors through one channel draw.
    """

    n_tx: int = 16
    n_rx: int = 16
    constellation: str = "QPSK"
    snr_grid_db: Sequence[float] = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0)
    n_symbols: int = 10_000
    n_trials: int = 10
    seed: int = 0
    gamma_multiplier: float = 10.0
    eps: float = 1e-3
    max_iter: int = 500

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("n_tx and n_rx must be >= 1")
        if self.n_symbols < self.n_tx or self.n_symbols % self.n_tx:
            raise ValueError("n_symbols must be a positive multiple of n_tx")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        constellation(self.constellation)
        self.snr_grid_db = tuple(float(s) for s in self.snr_grid_db)
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db is empty")

    @property
    def const(self) -> Constellation:
        return constellation(self.constellation)

    def sigma_v2(self, snr_db: float) -> float:
        return self.n_tx / 10.0 ** (snr_db / 10.0)


@dataclass
class RecoveryResult:
    snr_db: np.ndarray
    ber_zf: np.ndarray
    ber_mmse: np.ndarray
    ber_cauchy: np.ndarray
    trials: int
    symbols_counted: int
    bits_per_point: int = 0
    # raw error counts, shape (len(snr), n_trials), for standard errors
    errors: dict = field(default_factory=dict)

    def std_error(self, name: str) -> np.ndarray:
        """Standard error of a BER column from the spread of per-trial BERs.

        Trials are the independent units (one channel draw each), so this
        accounts for the fading as well as the noise.
        """
        per_trial = self.errors[name] / (self.bits_per_point / self.trials)
        if self.trials < 2:
            return np.full(per_trial.shape[0], np.inf)
        return per_trial.std(axis=1, ddof=1) / np.sqrt(self.trials)


def _trial(sc: MimoScenario, snr_idx: int, trial: int):
    const = sc.const
    snr = sc.snr_grid_db[snr_idx]
    rng = np.random.default_rng([sc.seed, snr_idx, trial])
    H = gen_channel(sc.n_rx, sc.n_tx, rng)
    k = sc.n_symbols // sc.n_tx
    idx = const.random_indices(sc.n_tx * k, rng).reshape(sc.n_tx, k)
    s = const.points[idx]
    s2 = sc.sigma_v2(snr)
    v = np.sqrt(s2 / 2.0) * (rng.standard_normal((sc.n_rx, k)) + 1j * rng.standard_normal((sc.n_rx, k)))
    y = H @ s + v
    ref = bits(idx, const)

    def count(sym):
        return int(np.count_nonzero(bits(slice_indices(sym, const), const) != ref))

    s_zf = zf_detect(y, H, const)
    _, s_mmse = mmse_detect(y, H, s2, const)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvexityWarning)
        try:
            s_c = error_recover_cps(y, H, s_mmse, s2, const, sc.gamma_multiplier, sc.eps, sc.max_iter)
        except DivergenceError as exc:
            raise DivergenceError(exc.iteration, f"CPS diverged at SNR {snr} dB, trial {trial}") from exc
    return count(s_zf), count(s_mmse), count(s_c)


def run_ber_curve(sc: MimoScenario, threads: int = 1) -> RecoveryResult:
    """Monte Carlo BER of ZF, MMSE and MMSE + Cauchy error recovery.

    Each (SNR point, trial) pair draws its own channel, symbols and noise
    from ``default_rng([seed, snr_index, trial])``; counts are summed in
    index order so the result does not depend on ``threads``.
    """
    jobs = [(i, t) for i in range(len(sc.snr_grid_db)) for t in range(sc.n_trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            counts = list(ex.map(lambda jt: _trial(sc, *jt), jobs))
    else:
        counts = [_trial(sc, *jt) for jt in jobs]
    c = np.array(counts, dtype=np.int64).reshape(len(sc.snr_grid_db), sc.n_trials, 3)
    nbits = sc.n_symbols * sc.const.bits_per_symbol * sc.n_trials
    ber = c.sum(axis=1) / nbits
    return RecoveryResult(
        snr_db=np.array(sc.snr_grid_db),
        ber_zf=ber[:, 0],
        ber_mmse=ber[:, 1],
        ber_cauchy=ber[:, 2],
        trials=sc.n_trials,
        symbols_counted=sc.n_symbols * sc.n_trials,
        bits_per_point=nbits,
        errors={"zf": c[:, :, 0], "mmse": c[:, :, 1], "cauchy": c[:, :, 2]},
    )
