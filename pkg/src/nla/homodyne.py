"""Lossy balanced homodyne simulation.

Detection efficiency eta is applied as a pre-measurement loss channel on the
state (beam splitter with vacuum, ancilla traced out); quadrature probability
densities come from the real oscillator wavefunctions scaled so that the
vacuum density is the standard normal; sampling is inverse-CDF on a cached
dense grid, deterministic under a seed with per-phase subseeds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from . import fock
from .fock import DensityMatrix, FockCutoff, PureState, State
from .errors import EstimationError, GridError

_MAX_PDF_SPACING = 0.02
_PDF_NORM_TOL = 1e-6
_SAMPLING_SPACING = 0.01


def quadrature_wavefunctions(x: np.ndarray, n_max: int) -> np.ndarray:
    """psi_n(x) for n = 0..n_max, rows indexed by n.

    Three-term recurrence psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1})/sqrt(n+1),
    stable far beyond n = 60; psi_0^2 is the standard normal density, matching
    the shot-noise-unit quadrature scaling.
    """
    x = np.asarray(x, dtype=np.float64)
    psi = np.zeros((n_max + 1, x.size), dtype=np.float64)
    psi[0] = (2.0 * np.pi) ** -0.25 * np.exp(-0.25 * x * x)
    if n_max >= 1:
        psi[1] = x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = (x * psi[n] - np.sqrt(n) * psi[n - 1]) / np.sqrt(n + 1.0)
    return psi


def loss_kraus(eta: float, cutoff: FockCutoff) -> list[np.ndarray]:
    """Kraus operators A_k of the efficiency-eta loss channel.

    A_k[m, m+k] = sqrt(C(m+k, k) eta^m (1-eta)^k); k photons lost.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {eta}")
    d = cutoff.dim
    if eta == 1.0:
        return [np.eye(d, dtype=np.complex128)]
    ops = []
    log_eta, log_loss = np.log(eta), np.log(1.0 - eta)
    for k in range(d):
        m = np.arange(d - k)
        log_amp = 0.5 * (
            gammaln(m + k + 1.0)
            - gammaln(m + 1.0)
            - gammaln(k + 1.0)
            + m * log_eta
            + k * log_loss
        )
        a = np.zeros((d, d), dtype=np.complex128)
        a[m, m + k] = np.exp(log_amp)
        ops.append(a)
    return ops


def loss_channel(state: State, eta: float) -> DensityMatrix:
    """Efficiency-eta loss: trace-preserving, maps |alpha> to |sqrt(eta) alpha>."""
    if isinstance(state, PureState):
        rho = state.to_density().elements * min(state.norm_squared, 1.0)
        cutoff = state.cutoff
    elif isinstance(state, DensityMatrix):
        rho = state.elements
        cutoff = state.cutoff
    else:
        raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")
    out = np.zeros_like(rho)
    for a in loss_kraus(eta, cutoff):
        out += a @ rho @ a.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, cutoff)


def loss_channel_adjoint(operator: np.ndarray, eta: float, cutoff: FockCutoff) -> np.ndarray:
    """Heisenberg-picture loss map sum_k A_k^dag O A_k (unital)."""
    out = np.zeros_like(operator, dtype=np.complex128)
    for a in loss_kraus(eta, cutoff):
        out += a.conj().T @ operator @ a
    return 0.5 * (out + out.conj().T)


def _as_density(state: State) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.to_density()
    if isinstance(state, DensityMatrix):
        return state.normalized()
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def quadrature_pdf(state: State, theta: float, x_grid: np.ndarray) -> np.ndarray:
    """p(x|theta) of the normalized state on the given grid.

    p(x|theta) = sum_{mn} rho_mn e^{i(n-m) theta} psi_m(x) psi_n(x); the grid
    must be dense (spacing <= 0.02) and wide enough that the density
    integrates to 1 within 1e-6.
    """
    x_grid = np.asarray(x_grid, dtype=np.float64)
    if x_grid.size < 2:
        raise GridError("quadrature grid needs at least two points")
    spacing = np.diff(x_grid)
    if np.max(spacing) > _MAX_PDF_SPACING * (1.0 + 1e-9):
        raise GridError(
            f"quadrature grid too coarse: spacing {np.max(spacing):.4g} > {_MAX_PDF_SPACING}"
        )
    rho = _as_density(state)
    psi = quadrature_wavefunctions(x_grid, rho.cutoff.n_max)
    phases = np.exp(1j * theta * np.arange(rho.dim))
    phi = phases[:, None] * psi
    pdf = np.einsum("nj,nm,mj->j", phi.conj(), rho.elements, phi).real
    pdf = np.maximum(pdf, 0.0)
    total = float(np.trapezoid(pdf, x_grid))
    if abs(total - 1.0) > _PDF_NORM_TOL:
        raise GridError(
            f"quadrature grid too narrow: density integrates to {total:.8f}"
        )
    return pdf


def default_x_grid(state: State, spacing: float = _SAMPLING_SPACING) -> np.ndarray:
    """Symmetric grid wide enough for the state's quadrature support."""
    half = 4.0 * np.sqrt(max(fock.mean_photon(state), 0.0)) + 8.0
    n = int(np.ceil(half / spacing))
    return np.linspace(-n * spacing, n * spacing, 2 * n + 1)


@dataclass(frozen=True)
class QuadratureDataset:
    """Phase-tagged homodyne samples plus the acquisition metadata.

    Every (tag, theta) pair holds exactly counts_per_phase records, with
    theta drawn from the declared phase grid.
    """

    theta: np.ndarray
    x: np.ndarray
    tag: np.ndarray
    phases: np.ndarray
    eta: float
    seed: int
    counts_per_phase: int
    description: str = ""

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64, copy=True)
        x = np.array(self.x, dtype=np.float64, copy=True)
        tag = np.array(self.tag, dtype=object, copy=True)
        phases = np.array(self.phases, dtype=np.float64, copy=True)
        if not theta.shape == x.shape == tag.shape:
            raise ValueError("theta, x, tag must have identical shapes")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.eta}")
        if self.counts_per_phase < 1:
            raise ValueError("counts_per_phase must be >= 1")
        phase_set = set(phases.tolist())
        for t in np.unique(tag):
            sel = theta[tag == t]
            seen = set(sel.tolist())
            if not seen <= phase_set:
                raise ValueError(f"tag {t!r} contains phases outside the declared grid")
            for ph in seen:
                if int(np.sum(sel == ph)) != self.counts_per_phase:
                    raise ValueError(
                        f"tag {t!r} phase {ph!r} does not hold counts_per_phase records"
                    )
        for arr in (theta, x, tag, phases):
            arr.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "phases", phases)

    @property
    def n_records(self) -> int:
        return self.x.size

    def select(self, tag: str, theta: float | None = None) -> np.ndarray:
        """x values of one tag, optionally restricted to one phase."""
        mask = self.tag == tag
        if theta is not None:
            mask &= np.isclose(self.theta, theta, rtol=0.0, atol=1e-12)
        return self.x[mask]

    def merged_with(self, other: "QuadratureDataset") -> "QuadratureDataset":
        """Concatenate records of two same-profile acquisitions (distinct tags)."""
        if other.eta != self.eta or other.counts_per_phase != self.counts_per_phase:
            raise ValueError("datasets must share eta and counts_per_phase to merge")
        if not np.array_equal(other.phases, self.phases):
            raise ValueError("datasets must share the phase grid to merge")
        return QuadratureDataset(
            theta=np.concatenate([self.theta, other.theta]),
            x=np.concatenate([self.x, other.x]),
            tag=np.concatenate([self.tag, other.tag]),
            phases=self.phases,
            eta=self.eta,
            seed=self.seed,
            counts_per_phase=self.counts_per_phase,
            description="; ".join(s for s in (self.description, other.description) if s),
        )


def _inverse_cdf_sample(pdf: np.ndarray, grid: np.ndarray, u: np.ndarray) -> np.ndarray:
    mids = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(mids)])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0.0])
    return np.interp(u, cdf[keep], grid[keep])


def sample_quadratures(
    state: State,
    phases: np.ndarray,
    counts_per_phase: int,
    eta: float,
    seed: int,
    *,
    tag: str,
    description: str = "",
) -> QuadratureDataset:
    """Monte-Carlo homodyne record of the state seen through efficiency eta.

    The loss channel is applied first, then each phase is sampled by
    inverse-CDF lookup on a dense cached grid (spacing 0.01, linear
    interpolation). Per-phase streams are seeded by (seed, phase index), so
    the dataset is bit-reproducible and phase order independent.
    """
    if counts_per_phase < 1:
        raise ValueError("counts_per_phase must be >= 1")
    phases = np.asarray(phases, dtype=np.float64)
    lossy = loss_channel(state, eta)
    grid = default_x_grid(lossy)
    xs, thetas = [], []
    for k, theta in enumerate(phases):
        pdf = quadrature_pdf(lossy, theta, grid)
        rng = np.random.default_rng([seed, k])
        u = rng.random(counts_per_phase)
        xs.append(_inverse_cdf_sample(pdf, grid, u))
        thetas.append(np.full(counts_per_phase, theta))
    return QuadratureDataset(
        theta=np.concatenate(thetas),
        x=np.concatenate(xs),
        tag=np.array([tag] * counts_per_phase * phases.size, dtype=object),
        phases=phases,
        eta=eta,
        seed=seed,
        counts_per_phase=counts_per_phase,
        description=description,
    )


def uniform_phases(count: int) -> np.ndarray:
    """count LO phases uniform on [0, pi)."""
    if count < 1:
        raise ValueError("phase count must be >= 1")
    return np.arange(count) * np.pi / count


@dataclass(frozen=True)
class GainEstimate:
    gain: float
    stderr: float
    n_amplified: int
    n_input: int


def gain_from_samples(amplified: np.ndarray, input_: np.ndarray) -> GainEstimate:
    """Amplitude gain as the ratio of sample means at theta = 0.

    Both records must come through the same efficiency: detection loss scales
    both means by sqrt(eta) and factors out of the ratio. The standard error
    is propagated from the two sample means.
    """
    amplified = np.asarray(amplified, dtype=np.float64)
    input_ = np.asarray(input_, dtype=np.float64)
    if amplified.size < 2 or input_.size < 2:
        raise EstimationError("need at least two samples in each record")
    ma, mi = float(np.mean(amplified)), float(np.mean(input_))
    sa = float(np.std(amplified, ddof=1)) / np.sqrt(amplified.size)
    si = float(np.std(input_, ddof=1)) / np.sqrt(input_.size)
    if abs(mi) < 5.0 * si:
        raise EstimationError(
            f"input mean {mi:.4g} indistinguishable from zero (SE {si:.4g}); "
            "gain ratio is unstable"
        )
    gain = ma / mi
    stderr = float(np.hypot(sa / mi, ma * si / (mi * mi)))
    return GainEstimate(gain, stderr, amplified.size, input_.size)


def save_dataset_csv(
    dataset: QuadratureDataset, path: str | Path, extra_meta: dict | None = None
) -> Path:
    """Write records as theta,x,tag rows plus a .meta.json sidecar; floats use
    repr so the round trip is bit-exact. extra_meta entries (e.g. provenance
    hashes) are merged into the sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "x", "tag"])
        for t, x, tag in zip(dataset.theta, dataset.x, dataset.tag):
            writer.writerow([repr(float(t)), repr(float(x)), tag])
    meta = {
        "eta": dataset.eta,
        "seed": dataset.seed,
        "counts_per_phase": dataset.counts_per_phase,
        "phases": [float(p) for p in dataset.phases],
        "description": dataset.description,
    }
    if extra_meta:
        meta.update(extra_meta)
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_dataset_csv(path: str | Path) -> QuadratureDataset:
    path = Path(path)
    thetas, xs, tags = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["theta", "x", "tag"]:
            raise ValueError(f"unexpected CSV header {header!r}")
        for row in reader:
            thetas.append(float(row[0]))
            xs.append(float(row[1]))
            tags.append(row[2])
    meta = json.loads(path.with_suffix(path.suffix + ".meta.json").read_text())
    return QuadratureDataset(
        theta=np.array(thetas),
        x=np.array(xs),
        tag=np.array(tags, dtype=object),
        phases=np.array(meta["phases"]),
        eta=meta["eta"],
        seed=meta["seed"],
        counts_per_phase=meta["counts_per_phase"],
        description=meta.get("description", ""),
    )
