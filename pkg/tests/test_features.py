import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfstcap.data import Specimen, generate_synthetic
from cfstcap.errors import DataError
from cfstcap.features import (FEATURE_VOCAB, PAPER_SELECTED, build_frame,
                              correlation_matrix, design_matrix, engineer,
                              pearson, select_features)

REF = Specimen(D=100, t=5, L=300, fy=300, fc=30, N=650)


class TestEngineer:
    def test_hand_values(self):
        e = engineer(REF)
        assert e["As"] == pytest.approx(1492.257, abs=1e-3)
        assert e["Nu0"] == pytest.approx(638.53, abs=0.01)   # kN
        assert e["lambda"] == pytest.approx(12.0)
        assert e["D_over_t"] == pytest.approx(20.0)
        assert e["alpha_sc"] == pytest.approx(0.23457, abs=1e-5)

    def test_full_circle_identity(self):
        e = engineer(REF)
        assert e["Asc"] == pytest.approx(np.pi * 100**2 / 4, rel=1e-12)

    def test_nu0_decomposition_exact(self):
        for s in generate_synthetic(100, 0, 0.1).specimens:
            e = engineer(s)
            assert e["Nu0"] == e["Ns"] + e["Nc"]

    @given(st.floats(0.5, 2.0))
    @settings(max_examples=30, deadline=None)
    def test_scaling_law(self, s):
        base = engineer(REF)
        scaled = engineer(Specimen(D=REF.D * s, t=REF.t * s, L=REF.L * s,
                                   fy=REF.fy, fc=REF.fc, N=REF.N))
        for name, power in (("As", 2), ("Ac", 2), ("Asc", 2), ("C", 1),
                            ("Vs", 3), ("Vc", 3)):
            assert scaled[name] == pytest.approx(base[name] * s**power, rel=1e-9)
        for name in ("D_over_t", "lambda", "alpha_sc", "xi", "SEF"):
            assert scaled[name] == pytest.approx(base[name], rel=1e-9)

    def test_vectorized_matches_scalar(self):
        specs = generate_synthetic(20, 1, 0.1).specimens
        M = design_matrix([s.D for s in specs], [s.t for s in specs],
                          [s.L for s in specs], [s.fy for s in specs],
                          [s.fc for s in specs], FEATURE_VOCAB)
        frame = build_frame(specs)
        assert np.allclose(M, frame.X, rtol=1e-12)


class TestPearson:
    def test_perfect_linear(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)

    def test_perfect_inverse(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_hand_value(self):
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)

    def test_zero_variance(self):
        with pytest.raises(DataError):
            pearson([1, 1, 1], [1, 2, 3])

    @given(st.floats(0.01, 100), st.floats(-50, 50))
    @settings(max_examples=30, deadline=None)
    def test_affine_invariance(self, a, b):
        x = np.array([1.0, 4.0, 2.0, 7.0, 5.0])
        y = np.array([2.0, 1.0, 6.0, 3.0, 4.0])
        assert pearson(a * x + b, y) == pytest.approx(pearson(x, y), abs=1e-12)


class TestCorrelationMatrix:
    def test_shape_and_symmetry(self):
        frame = build_frame(generate_synthetic(60, 2, 0.1).specimens)
        corr = correlation_matrix(frame)
        m = corr.values
        assert corr.names[-1] == "N"
        assert np.allclose(m, m.T)
        assert np.allclose(np.diag(m), 1.0)
        assert np.all(m >= -1) and np.all(m <= 1)

    def test_proportional_columns(self):
        from cfstcap.features import FeatureFrame
        x = np.array([1.0, 4.0, 2.0, 7.0])
        frame = FeatureFrame(("D", "t"), np.column_stack([x, 2 * x]), x + 1)
        corr = correlation_matrix(frame)
        assert corr.values[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_affine_rescaling_invariance(self):
        frame = build_frame(generate_synthetic(40, 2, 0.1).specimens)
        corr1 = correlation_matrix(frame)
        X2 = frame.X.copy()
        X2[:, 0] = 3.5 * X2[:, 0] + 10.0
        from cfstcap.features import FeatureFrame
        corr2 = correlation_matrix(FeatureFrame(frame.names, X2, frame.y))
        assert np.allclose(corr1.values, corr2.values, atol=1e-12)

    def test_constant_column_flagged(self):
        from cfstcap.features import FeatureFrame
        X = np.column_stack([np.ones(5), np.arange(5.0) + 1])
        frame = FeatureFrame(("D", "t"), X, np.arange(5.0) + 2)
        corr = correlation_matrix(frame)
        assert corr.flagged[0, 1]
        assert not corr.flagged[1, 2]


class TestSelectFeatures:
    VOCAB = ["D", "t", "L", "fy", "fc"]

    def test_paper_fixed(self):
        assert select_features([], [], [], 10, mode="paper_fixed") == PAPER_SELECTED

    def test_identical_rankings(self):
        r = ["fc", "D", "L", "t", "fy"]
        assert select_features(r, r, r, 3) == ["fc", "D", "L"]

    def test_rank_sum_rule(self):
        # F = fc placed 1st/2nd/3rd beats G = D placed 4th/4th/4th
        r1 = ["fc", "t", "L", "D", "fy"]
        r2 = ["t", "fc", "L", "D", "fy"]
        r3 = ["t", "L", "fc", "D", "fy"]
        out = select_features(r1, r2, r3, 4)
        assert out.index("fc") < out.index("D")

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            select_features(self.VOCAB, self.VOCAB, self.VOCAB, 9)

    def test_mismatched_vocab(self):
        with pytest.raises(ValueError):
            select_features(self.VOCAB, self.VOCAB[:-1] + ["As"], self.VOCAB, 2)
