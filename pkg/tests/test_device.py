"""Charge-basis transmon diagonalization, basis indexing, operator assembly.

The frequency oracle is the exact Mathieu-characteristic-value solution of
4 E_C n^2 - E_J cos(phi) with periodic boundary conditions; even-order
characteristic values a_0, b_2, a_2, b_4 give the four kept levels.
"""

import json

import numpy as np
import pytest
from scipy.special import mathieu_a, mathieu_b

from crsim.device import (BasisIndexer, DeviceError, TransmonSpec,
                          anharmonicity, build_system, convergence_check,
                          device_from_dict, device_to_dict,
                          diagonalize_transmon, qubit_frequency)

# (EC, EJ) of the five shipped transmons and their exact bare frequencies
TRANSMONS = [
    (0.30783, 11.914, 5.08801817, -0.363861),
    (0.30902, 11.412, 4.98105770, -0.367666),
    (0.31040, 10.993, 4.89225420, -0.371670),
    (0.34610, 9.9178, 4.86639076, -0.432794),
    (0.34210, 10.9781, 5.11345653, -0.416864),
]


def mathieu_levels(ec, ej, n_levels=4):
    q = ej / (2.0 * ec)
    chars = [mathieu_a(0, q), mathieu_b(2, q), mathieu_a(2, q), mathieu_b(4, q)]
    e = ec * np.sort(np.array(chars))[:n_levels]
    return e - e[0]


class TestDiagonalization:
    @pytest.mark.parametrize("ec,ej,w01,anh", TRANSMONS)
    def test_matches_mathieu_exactly(self, ec, ej, w01, anh):
        sol = diagonalize_transmon(TransmonSpec(ec, ej))
        ref = mathieu_levels(ec, ej)
        assert np.max(np.abs(sol.energies[:4] - ref)) < 1e-12

    @pytest.mark.parametrize("ec,ej,w01,anh", TRANSMONS)
    def test_frozen_frequencies(self, ec, ej, w01, anh):
        sol = diagonalize_transmon(TransmonSpec(ec, ej))
        assert qubit_frequency(sol) == pytest.approx(w01, abs=1e-7)
        assert anharmonicity(sol) == pytest.approx(anh, abs=1e-5)

    def test_energies_ascending_and_shifted(self):
        sol = diagonalize_transmon(TransmonSpec(0.3, 12.0))
        assert sol.energies[0] == 0.0
        assert np.all(np.diff(sol.energies) > 0)

    def test_charge_matrix_hermitian_offdiag(self):
        sol = diagonalize_transmon(TransmonSpec(0.30783, 11.914))
        n = sol.charge_matrix
        assert np.allclose(n, n.conj().T, atol=1e-14)
        # parity forbids diagonal charge elements at zero offset charge
        assert np.max(np.abs(np.diag(n))) < 1e-10
        assert abs(abs(n[0, 1]) - 1.016049) < 1e-5

    def test_gauge_keeps_charge_matrix_real(self):
        sol = diagonalize_transmon(TransmonSpec(0.31, 11.0))
        assert np.isrealobj(sol.charge_matrix)
        assert "real" in sol.gauge_convention or sol.gauge_convention

    def test_cutoff_convergence_at_shipped_value(self):
        conv = convergence_check(TransmonSpec(0.30783, 11.914), [10, 15, 20])
        assert max(conv["max_abs_delta"]) < 1e-12

    def test_small_cutoff_not_converged(self):
        conv = convergence_check(TransmonSpec(0.30783, 11.914), [5, 60])
        assert 1e-4 < max(conv["max_abs_delta"]) < 1e-2

    def test_cutoff_list_must_ascend(self):
        with pytest.raises(DeviceError):
            convergence_check(TransmonSpec(0.3, 12.0), [15, 10])


class TestPrintedDevices:
    def test_three_transmon_frequency_windows(self, dev3):
        printed = (5.0851, 4.9783, 4.8895)
        for t, w_ref in zip(dev3.transmons, printed):
            w = qubit_frequency(diagonalize_transmon(t))
            assert abs(w - w_ref) < 0.015

    def test_two_transmon_frequency_windows(self, dev2):
        printed = (4.8641, 5.1108)
        for t, w_ref in zip(dev2.transmons, printed):
            w = qubit_frequency(diagonalize_transmon(t))
            assert abs(w - w_ref) < 0.015

    def test_qubit_detunings_near_100_MHz(self, dev3):
        ws = [qubit_frequency(diagonalize_transmon(t)) for t in dev3.transmons]
        for i in range(2):
            assert 0.085 < ws[i] - ws[i + 1] < 0.115

    def test_resonator_2GHz_above(self, dev3):
        ws = [qubit_frequency(diagonalize_transmon(t)) for t in dev3.transmons]
        gaps = [dev3.resonator.frequency - w for w in ws]
        assert all(1.5 < g < 2.5 for g in gaps)


class TestBasisIndexer:
    @pytest.mark.parametrize("dims", [(4, 4, 4), (4, 4, 4, 4), (3, 4)])
    def test_flat_label_roundtrip(self, dims):
        idx = BasisIndexer(dims)
        for flat in range(idx.dimension):
            assert idx.flat_index(idx.labels(flat)) == flat

    def test_comp_indices_three_transmons(self):
        idx = BasisIndexer((4, 4, 4, 4))
        # k=0, each m in {0,1}: ((0*4+m0)*4+m1)*4+m2
        expect = [m0 * 16 + m1 * 4 + m2
                  for m0 in (0, 1) for m1 in (0, 1) for m2 in (0, 1)]
        assert list(idx.comp_indices) == expect

    def test_comp_bitstrings_are_binary_order(self):
        idx = BasisIndexer((4, 4, 4))
        assert idx.comp_bitstrings() == ["00", "01", "10", "11"]

    def test_is_computational(self):
        idx = BasisIndexer((4, 4, 4))
        assert idx.is_computational(idx.flat_index((0, 1, 1)))
        assert not idx.is_computational(idx.flat_index((1, 0, 0)))
        assert not idx.is_computational(idx.flat_index((0, 2, 0)))


class TestSystemOperators:
    def test_shapes_and_hermiticity(self, ops3):
        d = ops3.dimension
        assert d == 256
        assert ops3.static_diagonal.shape == (d,)
        assert np.allclose(ops3.h_int, ops3.h_int.conj().T, atol=1e-13)
        for op in ops3.drive_ops:
            assert np.allclose(op, op.conj().T, atol=1e-13)

    def test_interaction_eigen_factorization(self, ops3):
        # (kron of slot eigvecs) diag(lambda) (.)^T reassembles H_int
        v = ops3.slot_vecs[0]
        for vs in ops3.slot_vecs[1:]:
            v = np.kron(v, vs)
        h = (v * ops3.lambda_int) @ v.T
        assert np.max(np.abs(h - ops3.h_int)) < 1e-12

    def test_charging_energies(self, ops3, dev3):
        assert np.allclose(ops3.charging_energies,
                           [t.charging_energy for t in dev3.transmons])

    def test_dimension_cap(self):
        spec = {
            "transmons": [{"EC_GHz": 0.3, "EJ_GHz": 12.0}] * 7,
            "resonator": {"omega_GHz": 7.0, "levels": 4},
            "couplings_GHz": [0.07] * 7,
            "charge_cutoff": 15,
            "transmon_levels": 4,
        }
        with pytest.raises(DeviceError):
            build_system(device_from_dict(spec))


class TestSerialization:
    def test_device_dict_roundtrip(self, dev3):
        d = device_to_dict(dev3)
        again = device_to_dict(device_from_dict(d))
        assert d == again

    def test_roundtrip_through_json_text(self, dev2):
        text = json.dumps(device_to_dict(dev2))
        assert device_to_dict(device_from_dict(json.loads(text))) == \
            device_to_dict(dev2)
