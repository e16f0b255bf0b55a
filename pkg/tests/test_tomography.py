import numpy as np
import pytest

from nla import amplifiers, fock, homodyne, tomography
from nla.fock import FockCutoff


def make_roundtrip(state, cutoff, counts, eta, seed):
    data = homodyne.sample_quadratures(
        state, homodyne.uniform_phases(11), counts, eta, seed, tag="amplified"
    )
    settings = tomography.TomographySettings(cutoff=cutoff, eta=eta)
    return data, tomography.maxlik_reconstruct(data, settings)


@pytest.fixture(scope="module")
def amplified_roundtrip():
    """Shared medium-scale reconstruction of the amplified state at alpha=0.4."""
    cutoff = fock.default_cutoff(0.4)
    truth = amplifiers.amplify_ideal(fock.coherent_state(0.4, cutoff), 2.0).normalized()
    data, result = make_roundtrip(truth, cutoff, 2000, 0.6, 314)
    return cutoff, truth, data, result


class TestMeasurementOperator:
    def test_lossless_vacuum_element_is_normal_density(self):
        cut = FockCutoff(12)
        for x in (-1.3, 0.0, 0.7):
            op = tomography.measurement_operator(0.4, x, 1.0, cut)
            expected = np.exp(-x * x / 2.0) / np.sqrt(2.0 * np.pi)
            assert abs(op[0, 0].real - expected) < 1e-12

    def test_hermitian_psd(self):
        cut = FockCutoff(12)
        op = tomography.measurement_operator(0.9, 1.1, 0.6, cut)
        assert np.max(np.abs(op - op.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(op)[0] > -1e-12

    def test_completeness_by_quadrature(self):
        cut = FockCutoff(10)
        rho = amplifiers.amplify_ideal(
            fock.coherent_state(0.4, cut), 2.0
        ).to_density()
        grid = np.arange(-12.0, 12.0001, 0.02)
        total = np.trapezoid(tomography.predicted_pdf(rho, 0.7, grid, 0.6), grid)
        assert abs(total - 1.0) < 1e-6

    def test_duality_with_loss_channel(self):
        cut = FockCutoff(12)
        rho1 = fock.fock_state(1, cut).to_density()
        lossy = homodyne.loss_channel(rho1, 0.6)
        grid = np.arange(-8.0, 8.0001, 0.01)
        pdf = homodyne.quadrature_pdf(lossy, 0.0, grid)
        for idx in range(0, grid.size, 200):
            op = tomography.measurement_operator(0.0, float(grid[idx]), 0.6, cut)
            assert abs(np.trace(op @ rho1.elements).real - pdf[idx]) < 1e-8


class TestMaxlikReconstruct:
    def test_vacuum_roundtrip(self):
        cut = FockCutoff(10)
        data, result = make_roundtrip(fock.vacuum_state(cut), cut, 909, 1.0, 0)
        assert fock.state_fidelity(result.rho, fock.vacuum_state(cut)) >= 0.995
        assert result.converged

    def test_log_likelihood_nondecreasing(self, amplified_roundtrip):
        _, _, _, result = amplified_roundtrip
        diffs = np.diff(result.log_likelihood_trace)
        assert np.all(diffs >= -1e-9)

    def test_output_is_physical(self, amplified_roundtrip):
        _, _, _, result = amplified_roundtrip
        rho = result.rho.elements
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-10
        assert abs(np.trace(rho).real - 1.0) < 1e-10

    def test_fidelity_to_truth(self, amplified_roundtrip):
        _, truth, _, result = amplified_roundtrip
        assert fock.state_fidelity(result.rho, truth) >= 0.98

    def test_diagnostic_close_to_closed_form(self, amplified_roundtrip):
        _, _, _, result = amplified_roundtrip
        diag = tomography.amplified_fidelity_diagnostic(result.rho, 0.4)
        assert abs(diag - amplifiers.fidelity_analytic(2.0, 0.4)) < 0.02

    def test_seed_stable(self):
        cut = FockCutoff(8)
        data = homodyne.sample_quadratures(
            fock.coherent_state(0.3, cut),
            homodyne.uniform_phases(5),
            300,
            1.0,
            8,
            tag="input",
        )
        settings = tomography.TomographySettings(cutoff=cut, eta=1.0, max_iters=60)
        first = tomography.maxlik_reconstruct(data, settings)
        second = tomography.maxlik_reconstruct(data, settings)
        assert np.array_equal(first.rho.elements, second.rho.elements)
        assert np.array_equal(first.log_likelihood_trace, second.log_likelihood_trace)

    def test_single_phase_warns_but_converges(self):
        cut = FockCutoff(8)
        data = homodyne.sample_quadratures(
            fock.coherent_state(0.3, cut), np.array([0.0]), 2000, 1.0, 9, tag="input"
        )
        # flat likelihood directions make the degenerate problem converge slowly
        settings = tomography.TomographySettings(cutoff=cut, eta=1.0, max_iters=4000)
        with pytest.warns(UserWarning, match="single-phase"):
            result = tomography.maxlik_reconstruct(data, settings)
        assert result.converged
        # phase-averaged information only: the x-quadrature density must still
        # match, even though the phase-space orientation is unconstrained
        grid = np.arange(-8.0, 8.0001, 0.01)
        pdf_rec = homodyne.quadrature_pdf(result.rho, 0.0, grid)
        pdf_true = homodyne.quadrature_pdf(fock.coherent_state(0.3, cut), 0.0, grid)
        assert np.max(np.abs(pdf_rec - pdf_true)) < 0.05

    def test_empty_data_rejected(self):
        cut = FockCutoff(8)
        data = homodyne.sample_quadratures(
            fock.vacuum_state(cut), np.array([0.0]), 10, 1.0, 1, tag="vacuum"
        )
        settings = tomography.TomographySettings(cutoff=cut, eta=1.0)
        with pytest.raises(ValueError):
            tomography.maxlik_reconstruct(data, settings, tag="amplified")

    def test_settings_validation(self):
        cut = FockCutoff(8)
        with pytest.raises(ValueError):
            tomography.TomographySettings(cutoff=cut, eta=0.0)
        with pytest.raises(ValueError):
            tomography.TomographySettings(cutoff=cut, max_iters=0)

    def test_predicted_pdf_consistent_with_histogram(self, amplified_roundtrip):
        _, _, data, result = amplified_roundtrip
        x = data.select("amplified", theta=0.0)
        edges = np.linspace(-5.0, 6.0, 23)
        counts, _ = np.histogram(x, edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        model = tomography.predicted_pdf(result.rho, 0.0, centers, 0.6)
        expected = model * np.diff(edges) * x.size
        mask = expected > 5.0
        chi2 = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
        dof = int(np.sum(mask))
        assert chi2 < dof + 3.0 * np.sqrt(2.0 * dof)


class TestDiagnostic:
    def test_exact_target_gives_unity(self):
        cut = fock.default_cutoff(0.4)
        rho = fock.coherent_state(0.8, cut).to_density()
        assert abs(tomography.amplified_fidelity_diagnostic(rho, 0.4) - 1.0) < 1e-12
