import math

import numpy as np
import pytest

from mcphase import bench
from mcphase.bench import (
    CCNOT_MODES,
    THREE_QUBIT_SWEEP_DEGREES,
    TWO_QUBIT_SWEEP,
    Peak,
    Spectrum,
    carbon_pair,
    experiment_no_compensation,
    experiment_phase2,
    experiment_phase3,
    extract_spectrum,
    fit_phase_slope,
    phase3_circuit,
    phase3_target,
    prep_pseudo_pure_2,
    prep_rho2_3,
    run_sweep,
    sweep_csv,
)
from mcphase.gatelib import circuit_unitary
from mcphase.nmrpulse import HardPulse, PulseSequence, SpinSystem, simulate
from mcphase.qstate import DensityMatrix, fidelity_observables, fit_real_scale, single_qubit_op
from mcphase.gatelib import zrot_matrix

import oracles

J12, J23 = 103.1, 203.8
THREE_QUBIT_SWEEP = [math.radians(d) for d in THREE_QUBIT_SWEEP_DEGREES]


@pytest.fixture(scope="module")
def tce():
    return SpinSystem.tce()


def common_scale_residual(rho, model, cells):
    data = np.array([rho[i, j] for i, j in cells])
    ref = np.array([model[i, j] for i, j in cells])
    c, residual = fit_real_scale(data, ref)
    return c, residual / abs(c)


class TestPseudoPurePair:
    def test_proportional_to_target(self):
        rho = prep_pseudo_pure_2()
        c, residual = fit_real_scale(rho.data, oracles.pseudo_pure_pair())
        assert residual < 1e-6
        # the transcribed sequence lands on the target with a negative constant
        assert c == pytest.approx(-math.sqrt(1.5), abs=1e-9)

    def test_diagonal_pattern(self):
        d = np.diag(prep_pseudo_pure_2().data).real
        assert np.allclose(d / d[0], [1, -1 / 3, -1 / 3, -1 / 3])

    def test_off_diagonal_and_trace(self):
        rho = prep_pseudo_pure_2()
        assert np.abs(rho.data - np.diag(np.diag(rho.data))).max() < 1e-6
        assert rho.kind == "deviation" and abs(np.trace(rho.data)) < 1e-10

    def test_order_gradient_leaves_zero_quantum(self):
        rho = prep_pseudo_pure_2(gradient="order")
        assert abs(rho[1, 2]) > 0.1
        assert np.allclose(np.diag(rho.data), np.diag(prep_pseudo_pure_2().data))

    def test_accepts_three_spin_system(self, tce):
        assert prep_pseudo_pure_2(tce).data.shape == (4, 4)
        assert carbon_pair(tce).labels == ("C1", "C2")

    def test_bad_gradient_mode(self):
        with pytest.raises(ValueError):
            prep_pseudo_pure_2(gradient="soft")


class TestRho2:
    @pytest.mark.parametrize("ratio", [4.0, 1.0, 0.25])
    def test_proportional_and_ratio_independent(self, ratio):
        rho = prep_rho2_3(proton_ratio=ratio)
        c, residual = fit_real_scale(rho.data, oracles.pseudo_pure_pair_with_idle_proton())
        assert residual < 1e-6
        assert c == pytest.approx(-2 * math.sqrt(1.5), abs=1e-9)

    def test_traceless(self):
        assert abs(np.trace(prep_rho2_3().data)) < 1e-10

    def test_companion_term_gives_no_carbon_signal(self, tce):
        n = 3
        z1, z2, z3 = (single_qubit_op(np.diag([0.5, -0.5]), k, n) for k in range(3))
        rho1 = (z1 / 2 + z2 / 2 + z1 @ z2 + np.eye(8) / 4) @ z3
        seq = PulseSequence(tce, [HardPulse((1, 2), -np.pi / 2, "y")])
        out = simulate(seq, DensityMatrix(rho1, kind="deviation")).data
        carbon_cells = [(a, a | (1 << (2 - k))) for k in (0, 1) for a in range(8) if not a >> (2 - k) & 1]
        assert max(abs(out[i, j]) for i, j in carbon_cells) < 1e-10
        assert len(extract_spectrum(out, tce, (0, 1), reference=None)) == 0


class TestPhase2:
    @pytest.mark.parametrize("half", TWO_QUBIT_SWEEP)
    def test_cells_match(self, half):
        phi = -2 * half
        rho, _ = experiment_phase2(phi)
        assert fidelity_observables(rho, oracles.phase_on_11(phi), oracles.TWO_SPIN_CELLS) < 1e-6

    def test_common_scale_random(self):
        rng = np.random.default_rng(11)
        for phi in rng.uniform(-2 * np.pi, 2 * np.pi, size=20):
            rho, _ = experiment_phase2(phi)
            c, residual = common_scale_residual(rho, oracles.phase_on_11(phi), oracles.TWO_SPIN_CELLS)
            assert c > 0 and residual < 1e-6

    def test_zero_angle_all_in_phase(self):
        _, spec = experiment_phase2(0.0)
        assert len(spec) == 4
        assert all(abs(spec.relative_phase(pid)) < 1e-9 for pid in spec.ids)

    def test_half_pi_left_right_difference(self):
        _, spec = experiment_phase2(-np.pi)
        for spin in ("C1", "C2"):
            diff = spec.relative_phase(f"{spin}:1") - spec.relative_phase(f"{spin}:0")
            assert abs(abs(diff) - np.pi) < 1e-9

    def test_left_peak_tracks_twice_the_angle(self):
        for half in TWO_QUBIT_SWEEP:
            _, spec = experiment_phase2(-2 * half)
            diff = spec.relative_phase("C1:1") - 2 * half
            assert abs(math.remainder(diff, 2 * math.pi)) < 1e-9

    def test_peak_frequencies(self):
        _, spec = experiment_phase2(0.3)
        assert spec["C1:0"].frequency == pytest.approx(904.4 + J12 / 2)
        assert spec["C1:1"].frequency == pytest.approx(904.4 - J12 / 2)
        assert spec["C2:1"].frequency == pytest.approx(-J12 / 2)


class TestNoCompensation:
    @pytest.mark.parametrize("half", TWO_QUBIT_SWEEP)
    def test_cells_match(self, half):
        phi = -2 * half
        rho, _ = experiment_no_compensation(phi)
        assert fidelity_observables(rho, oracles.phase_without_compensation(phi), oracles.TWO_SPIN_CELLS) < 1e-6

    def test_zero_angle_equals_phase2(self):
        a, _ = experiment_no_compensation(0.0)
        b, _ = experiment_phase2(0.0)
        assert np.abs(a.data - b.data).max() < 1e-10

    def test_is_phase2_plus_rotation(self):
        rng = np.random.default_rng(12)
        for phi in rng.uniform(-2 * np.pi, 2 * np.pi, size=5):
            a, _ = experiment_no_compensation(phi)
            b, _ = experiment_phase2(phi)
            u = np.kron(zrot_matrix(-phi / 2), np.eye(2))
            assert np.abs(a.data - u @ b.data @ u.conj().T).max() < 1e-10

    @pytest.mark.parametrize("half", [np.pi / 2, np.pi])
    def test_carbons_out_of_phase(self, half):
        phi = -2 * half
        _, spec = experiment_no_compensation(phi)
        diff = spec.relative_phase("C1:0") - spec.relative_phase("C2:0")
        assert abs(math.remainder(diff - phi / 2, 2 * math.pi)) < 1e-9


class TestPhase3:
    @pytest.mark.parametrize("phi", [0.0, 0.7, -2.3, np.pi])
    def test_network_unitary(self, phi):
        assert np.abs(circuit_unitary(phase3_circuit(phi)) - phase3_target(phi)).max() < 1e-10
        assert bench.circuit_matches_target(phi) < 1e-10

    @pytest.mark.parametrize("mode", CCNOT_MODES)
    @pytest.mark.parametrize("half", THREE_QUBIT_SWEEP)
    def test_cells_match(self, mode, half):
        phi = 2 * half
        rho, _ = experiment_phase3(phi, mode)
        assert fidelity_observables(rho, oracles.three_spin_network_state(phi), oracles.THREE_SPIN_CELLS) < 1e-6

    def test_zero_angle(self):
        rho, spec = experiment_phase3(0.0)
        assert rho[0, 2].real < 0 and rho[1, 3].real < 0
        assert abs(spec.relative_phase("C2:01")) < 1e-9

    def test_ninety_degrees(self):
        _, spec = experiment_phase3(np.pi)
        assert abs(abs(spec.relative_phase("C2:01")) - np.pi) < 1e-9

    def test_peak_assignment(self):
        _, spec = experiment_phase3(0.4)
        assert spec.reference_peak == "C2:00"
        assert spec["C2:00"].frequency == pytest.approx(J12 / 2 + J23 / 2)
        assert spec["C2:01"].frequency == pytest.approx(J12 / 2 - J23 / 2)
        assert spec["C2:00"].source_cells == ((0, 2),)
        assert spec["C2:01"].source_cells == ((1, 3),)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            experiment_phase3(0.1, "soft")

    def test_hermitian_traceless(self):
        rho, _ = experiment_phase3(1.0, "line_selective")
        assert np.abs(rho.data - rho.data.conj().T).max() < 1e-12
        assert abs(np.trace(rho.data)) < 1e-10


class TestSpectrum:
    def test_diagonal_has_no_lines(self, tce):
        spec = extract_spectrum(np.diag(np.arange(8) - 3.5), tce, 1)
        assert len(spec) == 0 and spec.reference_peak is None

    def test_line_positions_and_cells(self, tce):
        rho = np.zeros((8, 8), dtype=complex)
        rho[0, 2] = rho[2, 0] = 0.5
        rho[1, 3], rho[3, 1] = 0.5j, -0.5j
        spec = extract_spectrum(rho, tce, "C2")
        assert spec.ids == ["C2:00", "C2:01"]
        assert spec["C2:00"].frequency == pytest.approx(J12 / 2 + J23 / 2)
        assert spec["C2:01"].frequency == pytest.approx(J12 / 2 - J23 / 2)
        assert spec.relative_phase("C2:00") == 0.0
        assert spec.relative_phase("C2:01") == pytest.approx(np.pi / 2)

    def test_decoupled_partner_merges_lines(self, tce):
        rho = np.zeros((8, 8), dtype=complex)
        rho[0, 2] = rho[2, 0] = 0.25
        rho[1, 3] = rho[3, 1] = 0.25
        spec = extract_spectrum(rho, tce.decouple("H3"), "C2")
        assert spec.ids == ["C2:0"]
        assert spec["C2:0"].amplitude == pytest.approx(0.5)
        assert spec["C2:0"].frequency == pytest.approx(J12 / 2)

    def test_reference_phase_is_zero(self):
        for phi in (0.3, 2.0, -1.0):
            _, spec = experiment_phase2(phi)
            assert spec.relative_phase(spec.reference_peak) == 0.0

    def test_bad_spin(self, tce):
        with pytest.raises(ValueError):
            extract_spectrum(np.zeros((8, 8)), tce, 5)
        with pytest.raises(ValueError):
            extract_spectrum(np.zeros((4, 4)), tce, 0)

    def test_validation(self):
        p = Peak("A:0", 0, 1.0, 1.0, ((0, 1),))
        with pytest.raises(ValueError):
            Spectrum((p, p))
        with pytest.raises(ValueError):
            Spectrum((p,), "A:1")
        with pytest.raises(ValueError):
            Peak("A:0", 0, math.inf, 1.0, ())


class TestFit:
    def test_exact_line(self):
        xs = [0.1, 0.5, 0.9, 1.3]
        result = fit_phase_slope([(x, 2 * x) for x in xs])
        assert result.slope == pytest.approx(2, abs=1e-12)
        assert result.residual < 1e-12

    def test_wrapped_input(self):
        xs = np.linspace(0, 3, 9)
        wrapped = [math.remainder(2 * x + 0.4, 2 * math.pi) for x in xs]
        result = fit_phase_slope(list(zip(xs, wrapped)))
        assert result.slope == pytest.approx(2, abs=1e-9)
        assert result.intercept == pytest.approx(0.4, abs=1e-9)

    def test_unsorted_input(self):
        pts = [(0.9, -1.8), (0.1, -0.2), (0.5, -1.0)]
        assert fit_phase_slope(pts).slope == pytest.approx(-2)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_phase_slope([(0, 0), (1, 1)])
        with pytest.raises(ValueError):
            fit_phase_slope([(1, 0), (1, 1), (1, 2)])

    def test_as_text(self):
        text = fit_phase_slope([(0, 0), (1, 2), (2, 4)]).as_text()
        fields = dict(line.split(" = ") for line in text.strip().splitlines())
        assert fields["slope"] == "2.000000" and fields["n_points"] == "3"


class TestSweep:
    def test_phase2_sweep(self):
        run = run_sweep("phase2", TWO_QUBIT_SWEEP)
        assert run.fit.slope == pytest.approx(2, abs=1e-6)
        assert len(list(run.rows())) == 16

    @pytest.mark.parametrize("mode", CCNOT_MODES)
    def test_phase3_sweep_both_modes(self, mode):
        run = run_sweep("phase3", THREE_QUBIT_SWEEP, ccnot_mode=mode)
        assert run.fit.slope == pytest.approx(-2, abs=1e-6)

    def test_preparation_runs(self):
        run = run_sweep("pps2")
        assert run.spectra == () and "scale" in run.notes[0]

    def test_errors(self):
        with pytest.raises(ValueError):
            run_sweep("phase4", [0.1])
        with pytest.raises(ValueError):
            run_sweep("phase2", [])

    def test_csv_deterministic(self):
        a = sweep_csv(run_sweep("nocomp2", TWO_QUBIT_SWEEP))
        b = sweep_csv(run_sweep("nocomp2", TWO_QUBIT_SWEEP))
        assert a == b
        assert a.splitlines()[0] == ",".join(bench.CSV_COLUMNS)
