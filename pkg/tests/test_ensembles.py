import json

import numpy as np
import pytest

from qcest.ensembles import (Ensemble, EnsembleFormatError, blind_guess_value,
                             fidelity_operator, lift_copies, load_ensemble,
                             make_builtin, save_ensemble)
from qcest.qmath import DimensionCapError, kron, max_entangled, proj, sym_isometry

ALL_BUILTINS = ["orthogonal", "pair:0.5", "bb84", "tetra", "octa", "equator:3"]


def builtin(spec):
    name, _, param = spec.partition(":")
    if name == "pair":
        return make_builtin("pair", c=float(param))
    if name == "equator":
        return make_builtin("equator", M=int(param))
    return make_builtin(name)


class TestBuiltins:
    def test_orthogonal(self):
        e = make_builtin("orthogonal")
        assert len(e) == 2
        assert np.allclose(e.weights, 0.5)
        assert abs(np.vdot(e.targets[0], e.targets[1])) < 1e-12

    def test_pair_overlap(self):
        e = make_builtin("pair", c=0.5)
        assert abs(np.vdot(e.targets[0], e.targets[1]) - 0.5) < 1e-12

    def test_bb84(self):
        e = make_builtin("bb84")
        assert len(e) == 4
        # two mutually unbiased bases
        assert abs(abs(np.vdot(e.targets[0], e.targets[2])) ** 2 - 0.5) < 1e-12

    def test_tetra_is_2design(self):
        e = make_builtin("tetra")
        avg = sum(p * proj(t) for p, t in zip(e.weights, e.targets))
        assert np.max(np.abs(avg - np.eye(2) / 2)) < 1e-12

    def test_octa_first_moment(self):
        e = make_builtin("octa")
        avg = sum(p * proj(t) for p, t in zip(e.weights, e.targets))
        assert np.max(np.abs(avg - np.eye(2) / 2)) < 1e-12

    def test_octa_is_3design(self):
        # third moment = symmetric projector / 4
        e = make_builtin("octa")
        third = sum(p * kron(kron(proj(t), proj(t)), proj(t))
                    for p, t in zip(e.weights, e.targets))
        v = sym_isometry(2, 3)
        assert np.max(np.abs(third - (v @ v.T) / 4)) < 1e-12

    def test_equator_pairwise_overlaps(self):
        e = make_builtin("equator", M=3)
        for j in range(3):
            for k in range(j + 1, 3):
                ov = abs(np.vdot(e.targets[j], e.targets[k])) ** 2
                assert abs(ov - 0.25) < 1e-12

    def test_equator_requires_three_points(self):
        with pytest.raises(ValueError):
            make_builtin("equator", M=2)

    def test_pair_overlap_range(self):
        with pytest.raises(ValueError):
            make_builtin("pair", c=1.0)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown builtin"):
            make_builtin("nosuch")


class TestLift:
    def test_single_copy_identity(self):
        e = make_builtin("tetra")
        l1 = lift_copies(e, 1)
        assert np.array_equal(l1.inputs, e.inputs)
        assert l1.d_in == e.d_in

    def test_two_copies_orthogonal(self):
        l2 = lift_copies(make_builtin("orthogonal"), 2)
        assert l2.d_in == 4 and l2.d_target == 2
        assert np.allclose(l2.inputs[0], [1, 0, 0, 0])
        assert np.allclose(l2.inputs[1], [0, 0, 0, 1])

    def test_overlap_multiplicativity(self):
        e = make_builtin("tetra")
        l2 = lift_copies(e, 2)
        for i in range(4):
            assert abs(np.linalg.norm(l2.inputs[i]) - 1) < 1e-12
            for j in range(4):
                lhs = abs(np.vdot(l2.inputs[i], l2.inputs[j]))
                rhs = abs(np.vdot(e.targets[i], e.targets[j])) ** 2
                assert abs(lhs - rhs) < 1e-12

    def test_cap(self):
        with pytest.raises(DimensionCapError):
            lift_copies(make_builtin("orthogonal"), 13)

    def test_rejects_double_lift(self):
        l2 = lift_copies(make_builtin("tetra"), 2)
        with pytest.raises(ValueError):
            lift_copies(l2, 2)


class TestFidelityOperator:
    @pytest.mark.parametrize("spec", ALL_BUILTINS)
    def test_unit_trace_psd(self, spec):
        om = fidelity_operator(builtin(spec))
        assert abs(np.trace(om).real - 1) < 1e-12
        assert np.linalg.eigvalsh(om)[0] >= -1e-12

    def test_tetra_closed_form(self):
        om = fidelity_operator(make_builtin("tetra"))
        target = (np.eye(4) + 2 * proj(max_entangled(2))) / 6
        assert np.max(np.abs(om - target)) < 1e-12

    @pytest.mark.parametrize("spec", ALL_BUILTINS)
    def test_identity_channel_fidelity_one(self, spec):
        e = builtin(spec)
        om = fidelity_operator(e)
        val = e.d_in * np.real(np.trace(om @ proj(max_entangled(2))))
        assert abs(val - 1) < 1e-12

    def test_equator_m_independent(self):
        om3 = fidelity_operator(make_builtin("equator", M=3))
        om8 = fidelity_operator(make_builtin("equator", M=8))
        assert np.max(np.abs(om3 - om8)) < 1e-12


class TestBlindGuess:
    def test_orthogonal(self):
        assert abs(blind_guess_value(make_builtin("orthogonal")) - 0.5) < 1e-12

    def test_tetra(self):
        assert abs(blind_guess_value(make_builtin("tetra")) - 0.5) < 1e-12

    def test_pair(self):
        assert abs(blind_guess_value(make_builtin("pair", c=0.5)) - 0.75) < 1e-12


class TestFiles:
    def test_round_trip(self, tmp_path):
        e = make_builtin("tetra")
        path = tmp_path / "tetra.json"
        save_ensemble(e, path)
        loaded = load_ensemble(path)
        assert loaded.label == e.label
        assert np.array_equal(loaded.weights, e.weights)
        assert np.array_equal(loaded.inputs, e.inputs)
        assert np.array_equal(loaded.targets, e.targets)
        # byte-stable re-save
        path2 = tmp_path / "again.json"
        save_ensemble(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_round_trip_lifted(self, tmp_path):
        e = lift_copies(make_builtin("octa"), 2)
        path = tmp_path / "octa2.json"
        save_ensemble(e, path)
        loaded = load_ensemble(path)
        assert loaded.d_in == 4 and loaded.d_target == 2
        assert np.array_equal(loaded.inputs, e.inputs)

    def test_weight_sum_error(self, tmp_path):
        doc = {"label": "bad", "d_in": 2, "d_target": 2, "states": [
            {"p": 0.5, "target": [[1.0, 0.0], [0.0, 0.0]]},
            {"p": 0.6, "target": [[0.0, 0.0], [1.0, 0.0]]}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(EnsembleFormatError, match="weights sum"):
            load_ensemble(path)

    def test_norm_error(self, tmp_path):
        doc = {"label": "bad", "d_in": 2, "d_target": 2, "states": [
            {"p": 1.0, "target": [[0.9, 0.0], [0.0, 0.0]]}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(EnsembleFormatError, match="norm"):
            load_ensemble(path)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"label": "x", "states": []}))
        with pytest.raises(EnsembleFormatError, match="missing"):
            load_ensemble(path)

    def test_bad_complex_encoding(self, tmp_path):
        doc = {"label": "bad", "d_in": 2, "d_target": 2, "states": [
            {"p": 1.0, "target": [1.0, 0.0]}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(EnsembleFormatError):
            load_ensemble(path)

    def test_input_required_when_lifted(self, tmp_path):
        doc = {"label": "bad", "d_in": 4, "d_target": 2, "states": [
            {"p": 1.0, "target": [[1.0, 0.0], [0.0, 0.0]]}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(EnsembleFormatError, match="input"):
            load_ensemble(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json {")
        with pytest.raises(EnsembleFormatError, match="JSON"):
            load_ensemble(path)


class TestInvariants:
    def test_rejects_negative_weight(self):
        with pytest.raises(EnsembleFormatError):
            Ensemble(d_in=2, d_target=2, weights=np.array([1.5, -0.5]),
                     inputs=np.array([[1, 0], [0, 1]], dtype=complex),
                     targets=np.array([[1, 0], [0, 1]], dtype=complex))

    def test_rejects_weight_sum(self):
        with pytest.raises(EnsembleFormatError):
            Ensemble(d_in=2, d_target=2, weights=np.array([0.5, 0.6]),
                     inputs=np.array([[1, 0], [0, 1]], dtype=complex),
                     targets=np.array([[1, 0], [0, 1]], dtype=complex))

    def test_is_unlifted(self):
        assert make_builtin("tetra").is_unlifted
        assert not lift_copies(make_builtin("tetra"), 2).is_unlifted
