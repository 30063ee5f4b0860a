"""Stochastic-field ensemble estimator, the reference the closed forms are checked against.

The chaotic source is discretized into point emitters on a uniform grid across
the slit. Each realization draws independent circular complex Gaussian
amplitudes per emitter and propagates them with paraxial kernels; intensities
are correlated across the two arms over the ensemble. Realizations are keyed
by (seed, realization index) through a counter-based generator, so any
partition of the ensemble across batches or threads reproduces identical
numbers.

Constant prefactors common to all paths of an arm are dropped; they cancel in
the normalized correlations this module reports.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import C_LIGHT
from .geometry import GateAngles, SetupBasic, SetupGate, SetupMZ
from .analytic import CorrelationPattern
from .gate import (
    BASIS_LABELS,
    TruthTable,
    basis_angles,
    envelope_power,
    mz_effective_positions,
)

_UINT64_MASK = (1 << 64) - 1

THREADS_ENV_VAR = "GHOSTFRINGE_THREADS"


@dataclass(frozen=True)
class SourceModel:
    """Discretized chaotic source: n_emitters points across the slit [-a, a].

    Emitters sit at cell midpoints, strictly inside the slit. The ensemble
    estimators require at least 64 emitters; single fields may be built on
    fewer for diagnostics.
    """

    a: float
    n_emitters: int = 256
    mean_photon_number: float = 1.0

    def __post_init__(self) -> None:
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got a={self.a}")
        if self.n_emitters < 1:
            raise ValueError(f"n_emitters must be at least 1, got {self.n_emitters}")
        if self.mean_photon_number <= 0.0:
            raise ValueError(
                f"mean_photon_number must be positive, got {self.mean_photon_number}"
            )

    @property
    def positions(self) -> np.ndarray:
        step = 2.0 * self.a / self.n_emitters
        return -self.a + step * (np.arange(self.n_emitters) + 0.5)


@dataclass(frozen=True)
class Realization:
    """One draw of emitter amplitudes, reproducible from (seed, index)."""

    amplitudes: np.ndarray
    seed: int
    index: int
    source: SourceModel


def sample_realization(source: SourceModel, seed: int, index: int) -> Realization:
    """Draw circular complex Gaussian amplitudes with <|alpha|^2> = mean_photon_number.

    The generator is keyed by (seed, index); emitters consume consecutive
    counter positions. Identical arguments give identical draws regardless of
    call order or interleaving.
    """
    if index < 0:
        raise ValueError(f"realization index must be nonnegative, got {index}")
    bitgen = np.random.Philox(key=[seed & _UINT64_MASK, index & _UINT64_MASK])
    z = np.random.Generator(bitgen).standard_normal(2 * source.n_emitters)
    scale = math.sqrt(source.mean_photon_number / 2.0)
    amplitudes = scale * (z[0::2] + 1j * z[1::2])
    return Realization(amplitudes=amplitudes, seed=seed, index=index, source=source)


# ---------------------------------------------------------------------------
# Propagation kernels
# ---------------------------------------------------------------------------


def _bs_factor(arm: str, convention: str) -> complex:
    # Arm T is the reflected output. The factor is common to all paths of the
    # arm, so intensities and correlations cannot depend on the convention.
    if convention == "i":
        return 1j if arm == "T" else 1.0
    if convention == "pi":
        return -1.0 if arm == "T" else 1.0
    raise ValueError(f"bs_convention must be 'i' or 'pi', got {convention!r}")


def _require_angles(setup, angles) -> GateAngles:
    if angles is None:
        raise ValueError(
            f"{type(setup).__name__} is polarized: preparation and analyzer angles are required"
        )
    return angles


def _mask_path_terms(setup: SetupBasic, arm: str, angles: GateAngles | None):
    """(coefficient, pinhole position) per open path of a masked arm."""
    if arm == "C":
        positions = (setup.x1, setup.x2)
    elif arm == "T":
        positions = (setup.x1p, setup.x2p)
    else:
        raise ValueError(f"arm must be 'C' or 'T', got {arm!r}")
    if isinstance(setup, SetupGate):
        angles = _require_angles(setup, angles)
        if arm == "C":
            coeffs = (
                math.cos(angles.theta_c) * math.cos(angles.phi_c),
                math.sin(angles.theta_c) * math.sin(angles.phi_c),
            )
        else:
            coeffs = (
                math.cos(angles.theta_t - angles.phi_t),
                math.sin(angles.theta_t + angles.phi_t),
            )
    else:
        if angles is not None:
            raise ValueError("SetupBasic is unpolarized: angles must be None")
        coeffs = (1.0, 1.0)
    return list(zip(coeffs, positions))


def _mz_path_terms(setup: SetupMZ, arm: str, angles: GateAngles | None):
    """(coefficient, detector shift) per path; the tilted path comes first.

    The polarizing splitter routes V through the second path with a sign
    flip, hence the negative second coefficient.
    """
    angles = _require_angles(setup, angles)
    if arm == "C":
        shift = 2.0 * setup.zbar * setup.delta_c
        coeffs = (
            math.cos(angles.theta_c) * math.cos(angles.phi_c),
            -math.sin(angles.theta_c) * math.sin(angles.phi_c),
        )
    elif arm == "T":
        shift = 2.0 * setup.zbar * setup.delta_t
        coeffs = (
            math.cos(angles.theta_t - angles.phi_t),
            -math.sin(angles.theta_t + angles.phi_t),
        )
    else:
        raise ValueError(f"arm must be 'C' or 'T', got {arm!r}")
    return [(coeffs[0], shift), (coeffs[1], 0.0)]


def _select_paths(terms, open_paths):
    if open_paths is None:
        return terms
    open_paths = tuple(open_paths)
    if not open_paths or any(p not in (1, 2) for p in open_paths):
        raise ValueError(f"open_paths must be a nonempty subset of (1, 2), got {open_paths}")
    return [terms[p - 1] for p in open_paths]


def _kernel_matrix(
    source: SourceModel,
    setup: SetupBasic | SetupMZ,
    arm: str,
    detector_positions,
    angles: GateAngles | None,
    bs_convention: str,
    open_paths=None,
) -> np.ndarray:
    """Propagation matrix K with K[m, g] = sum over open paths of the arm.

    Mask geometries use exp(i*k*(x_m - x_p)^2/(2z)) * exp(i*k*(x_p - x_d)^2/(2f));
    the tilted-mirror geometry uses exp(i*k*(x_m - x_d - shift)^2/(2z)) with the
    per-path detector shift. Multiplying emitter amplitudes by K gives the arm
    field at each detector position.
    """
    xs = np.atleast_1d(np.asarray(detector_positions, dtype=float))
    k = 2.0 * math.pi / setup.wavelength
    factor = _bs_factor(arm, bs_convention)
    if isinstance(setup, SetupMZ):
        terms = _select_paths(_mz_path_terms(setup, arm, angles), open_paths)
    else:
        terms = _select_paths(_mask_path_terms(setup, arm, angles), open_paths)
    xm = source.positions
    out = np.zeros((source.n_emitters, xs.size), dtype=complex)
    if isinstance(setup, SetupMZ):
        for coeff, shift in terms:
            dx = xm[:, None] - (xs[None, :] + shift)
            out += coeff * np.exp(1j * k / (2.0 * setup.z) * dx * dx)
    else:
        for coeff, xp in terms:
            source_leg = np.exp(1j * k / (2.0 * setup.z) * (xm - xp) ** 2)
            detector_leg = np.exp(1j * k / (2.0 * setup.f) * (xp - xs) ** 2)
            out += coeff * source_leg[:, None] * detector_leg[None, :]
    return factor * out


def field_at_detector(
    realization: Realization,
    setup: SetupBasic | SetupGate | SetupMZ,
    arm: str,
    x_d: float,
    angles: GateAngles | None = None,
    open_paths=None,
    bs_convention: str = "i",
) -> complex:
    """Scalar analyzer-projected field at detector position x_d.

    For polarized setups (SetupGate, SetupMZ) the GateAngles carry both the
    preparation plate and the analyzer for each arm and are required; for
    SetupBasic they must be omitted. open_paths restricts which of the two
    paths of the arm are open, e.g. (1,) to close the second pinhole.
    """
    kernel = _kernel_matrix(
        realization.source, setup, arm, [x_d], angles, bs_convention, open_paths
    )
    return complex(realization.amplitudes @ kernel[:, 0])


def field_hv_at_detector(
    realization: Realization,
    setup: SetupGate | SetupMZ,
    arm: str,
    x_d: float,
    angles: GateAngles,
    bs_convention: str = "i",
) -> tuple[complex, complex]:
    """Unprojected (H, V) field components, a diagnostic for polarized setups.

    The summed modulus squared of the two components is the intensity a
    polarization-blind detector would see.
    """
    if not isinstance(setup, (SetupGate, SetupMZ)):
        raise TypeError("field_hv_at_detector needs a polarized setup")
    e_h = field_at_detector(
        realization, setup, arm, x_d,
        angles=GateAngles(angles.phi_c, angles.phi_t, 0.0, 0.0),
        bs_convention=bs_convention,
    )
    e_v = field_at_detector(
        realization, setup, arm, x_d,
        angles=GateAngles(angles.phi_c, angles.phi_t, math.pi / 2.0, math.pi / 2.0),
        bs_convention=bs_convention,
    )
    return e_h, e_v


def free_field(realization: Realization, setup, x_d: float) -> complex:
    """Field at x_d with all masks and interferometers removed.

    Plain paraxial propagation over the source-to-mask distance z of the
    setup; the baseline every structured geometry is compared against.
    """
    k = 2.0 * math.pi / setup.wavelength
    xm = realization.source.positions
    kernel = np.exp(1j * k / (2.0 * setup.z) * (xm - x_d) ** 2)
    return complex(realization.amplitudes @ kernel)


# ---------------------------------------------------------------------------
# Ensemble estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleEstimate:
    """Monte-Carlo correlation pattern, normalized to its maximum.

    raw_values and raw_stderr keep the unnormalized covariances; scale is the
    peak envelope-weighted covariance the pattern was divided by.
    """

    pattern: CorrelationPattern
    n_realizations: int
    raw_values: np.ndarray
    raw_stderr: np.ndarray
    scale: float

    @property
    def stderr(self) -> np.ndarray:
        return self.pattern.stderr


def _batch_sizes(n: int, n_batches: int) -> list[int]:
    base, rem = divmod(n, n_batches)
    return [base + (1 if b < rem else 0) for b in range(n_batches)]


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc


def _amplitude_block(source: SourceModel, seed: int, start: int, count: int) -> np.ndarray:
    block = np.empty((count, source.n_emitters), dtype=complex)
    for row in range(count):
        block[row] = sample_realization(source, seed, start + row).amplitudes
    return block


def _batch_moments(source, seed, start, count, kernel_c, kernel_t):
    amplitudes = _amplitude_block(source, seed, start, count)
    e_c = amplitudes @ kernel_c
    e_t = amplitudes @ kernel_t
    i_c = e_c.real**2 + e_c.imag**2
    i_t = e_t.real**2 + e_t.imag**2
    return i_c.sum(axis=0), i_t.sum(axis=0), (i_c * i_t).sum(axis=0)


def _raw_covariance(
    setup,
    grid: np.ndarray,
    n_realizations: int,
    seed: int,
    angles: GateAngles | None,
    n_emitters: int,
    mean_photon_number: float,
    n_batches: int,
    bs_convention: str,
):
    """Covariance estimate plus batch-means stderr over a joint-position grid."""
    if n_realizations < 100:
        raise ValueError(f"n_realizations must be at least 100, got {n_realizations}")
    if n_emitters < 64:
        raise ValueError(f"ensemble estimation needs n_emitters >= 64, got {n_emitters}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != 2:
        raise ValueError(f"grid must have shape (N, 2), got {grid.shape}")
    source = SourceModel(a=setup.a, n_emitters=n_emitters, mean_photon_number=mean_photon_number)
    kernel_c = _kernel_matrix(source, setup, "C", grid[:, 0], angles, bs_convention)
    kernel_t = _kernel_matrix(source, setup, "T", grid[:, 1], angles, bs_convention)

    sizes = _batch_sizes(n_realizations, n_batches)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    jobs = [
        (source, seed, int(start), int(count), kernel_c, kernel_t)
        for start, count in zip(starts, sizes)
        if count > 0
    ]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda args: _batch_moments(*args), jobs))
    else:
        results = [_batch_moments(*job) for job in jobs]

    batch_covs = []
    total_ic = np.zeros(grid.shape[0])
    total_it = np.zeros(grid.shape[0])
    total_icit = np.zeros(grid.shape[0])
    for (s_ic, s_it, s_icit), count in zip(results, [j[3] for j in jobs]):
        batch_covs.append(s_icit / count - (s_ic / count) * (s_it / count))
        total_ic += s_ic
        total_it += s_it
        total_icit += s_icit
    n = float(n_realizations)
    covariance = total_icit / n - (total_ic / n) * (total_it / n)
    batch_covs = np.asarray(batch_covs)
    stderr = batch_covs.std(axis=0, ddof=1) / math.sqrt(batch_covs.shape[0])
    return covariance, stderr


def estimate_dn_corr(
    setup: SetupBasic | SetupGate | SetupMZ,
    grid,
    n_realizations: int,
    seed: int,
    angles: GateAngles | None = None,
    n_emitters: int = 256,
    mean_photon_number: float = 1.0,
    n_batches: int = 10,
    bs_convention: str = "i",
) -> EnsembleEstimate:
    """Ensemble estimate of the fluctuation correlation over a (N, 2) grid.

    Raw covariances are divided pointwise by the envelope power of the
    geometry, the same denominator the closed forms use, then the pattern is
    normalized to its maximum with batch-means standard errors (same scale).
    For pinhole-mask setups the envelope power is constant along any detector
    scan, so only tilted-mirror patterns are reshaped by it. Identical
    arguments give bit-identical results; the GHOSTFRINGE_THREADS environment
    variable caps worker threads without changing any value.
    """
    grid = np.asarray(grid, dtype=float)
    covariance, stderr = _raw_covariance(
        setup, grid, n_realizations, seed, angles,
        n_emitters, mean_photon_number, n_batches, bs_convention,
    )
    weight = np.array([envelope_power(setup, x_c, x_t) for x_c, x_t in grid])
    weighted = covariance / weight
    weighted_err = stderr / weight
    scale = float(weighted.max())
    if scale <= 0.0:
        raise ValueError("estimated pattern has no positive peak to normalize by")
    pattern = CorrelationPattern(
        grid=grid,
        values=np.clip(weighted, 0.0, None) / scale,
        mode="monte-carlo",
        stderr=weighted_err / scale,
    )
    return EnsembleEstimate(
        pattern=pattern,
        n_realizations=n_realizations,
        raw_values=covariance,
        raw_stderr=stderr,
        scale=scale,
    )


def estimate_mean_intensity(
    setup,
    arm: str,
    detector_positions,
    n_realizations: int,
    seed: int,
    angles: GateAngles | None = None,
    n_emitters: int = 256,
    mean_photon_number: float = 1.0,
    bs_convention: str = "i",
) -> tuple[np.ndarray, np.ndarray]:
    """Single-detector mean intensity over a position scan, with its stderr."""
    if n_realizations < 100:
        raise ValueError(f"n_realizations must be at least 100, got {n_realizations}")
    if n_emitters < 64:
        raise ValueError(f"ensemble estimation needs n_emitters >= 64, got {n_emitters}")
    xs = np.atleast_1d(np.asarray(detector_positions, dtype=float))
    source = SourceModel(a=setup.a, n_emitters=n_emitters, mean_photon_number=mean_photon_number)
    kernel = _kernel_matrix(source, setup, arm, xs, angles, bs_convention)
    total = np.zeros(xs.size)
    total_sq = np.zeros(xs.size)
    for index in range(n_realizations):
        amps = sample_realization(source, seed, index).amplitudes
        e = amps @ kernel
        i = e.real**2 + e.imag**2
        total += i
        total_sq += i * i
    mean = total / n_realizations
    var = total_sq / n_realizations - mean * mean
    stderr = np.sqrt(np.clip(var, 0.0, None) / n_realizations)
    return mean, stderr


def estimate_truth_table(
    setup: SetupGate | SetupMZ,
    x_c: float,
    x_t: float,
    n_realizations: int,
    seed: int,
    n_emitters: int = 256,
    mean_photon_number: float = 1.0,
    n_batches: int = 10,
    bs_convention: str = "i",
) -> TruthTable:
    """Monte-Carlo joint-probability table over the 16 basis combinations.

    All combinations share the same realizations (same seed), and the table
    is normalized by its largest raw entry: per-entry normalization would
    erase the scale the truth table is about.
    """
    grid = np.array([[x_c, x_t]])
    values = np.zeros((4, 4))
    errors = np.zeros((4, 4))
    for row, input_label in enumerate(BASIS_LABELS):
        phi_c, phi_t = basis_angles(input_label)
        for col, output_label in enumerate(BASIS_LABELS):
            theta_c, theta_t = basis_angles(output_label)
            angles = GateAngles(phi_c=phi_c, phi_t=phi_t, theta_c=theta_c, theta_t=theta_t)
            cov, err = _raw_covariance(
                setup, grid, n_realizations, seed, angles,
                n_emitters, mean_photon_number, n_batches, bs_convention,
            )
            values[row, col] = cov[0]
            errors[row, col] = err[0]
    scale = values.max()
    if scale <= 0.0:
        raise ValueError("truth table has no positive entry to normalize by")
    return TruthTable(
        inputs=BASIS_LABELS,
        outputs=BASIS_LABELS,
        values=values / scale,
        stderr=errors / scale,
    )


def compare_patterns(analytic: CorrelationPattern, mc) -> dict[str, float]:
    """Agreement metrics between a closed-form pattern and an ensemble estimate.

    Both patterns are brought to unit peak before comparison. Returns nrmse
    (rms difference in units of the peak), the Pearson correlation of the two
    curves, and the largest deviation in units of the ensemble stderr.
    """
    mc_pattern = mc.pattern if isinstance(mc, EnsembleEstimate) else mc
    if not np.array_equal(analytic.grid, mc_pattern.grid):
        raise ValueError("patterns are on different grids")
    a = np.asarray(analytic.values, dtype=float)
    b = np.asarray(mc_pattern.values, dtype=float)
    a_peak = a.max()
    b_peak = b.max()
    a = a / a_peak if a_peak > 0 else a
    b = b / b_peak if b_peak > 0 else b
    diff = a - b
    nrmse = float(np.sqrt(np.mean(diff * diff)))
    if a.std() == 0.0 or b.std() == 0.0:
        pearson = 1.0 if np.allclose(a, b) else 0.0
    else:
        pearson = float(np.corrcoef(a, b)[0, 1])
    if mc_pattern.stderr is None:
        max_sigma_dev = math.nan
    else:
        # stderr lives on the same scale as the values, so rescale alongside.
        stderr = np.asarray(mc_pattern.stderr, dtype=float)
        if b_peak > 0:
            stderr = stderr / b_peak
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(
                stderr > 0.0,
                np.abs(diff) / np.where(stderr > 0.0, stderr, 1.0),
                np.where(np.abs(diff) > 0.0, np.inf, 0.0),
            )
        max_sigma_dev = float(ratios.max())
    return {"nrmse": nrmse, "pearson": pearson, "max_sigma_dev": max_sigma_dev}


__all__ = [
    "EnsembleEstimate",
    "Realization",
    "SourceModel",
    "THREADS_ENV_VAR",
    "compare_patterns",
    "estimate_dn_corr",
    "estimate_mean_intensity",
    "estimate_truth_table",
    "field_at_detector",
    "field_hv_at_detector",
    "free_field",
    "sample_realization",
]
