"""Tests for the conditional-independence factorization checks.

The perturbation test recomputes both sides of the factorization with
explicit loops, independent of the vectorized implementation.
"""

import numpy as np
import pytest

from examine.errors import ValidationError
from examine.theory import DiscreteJoint, TheoremReport, make_ci_joint, verify_theorem


def _loop_reconstruction_residual(p: np.ndarray) -> float:
    """Brute-force evaluation of max |f*(x1) - (A.T h(x1))| with plain loops."""
    d1, d2, k = p.shape
    worst = 0.0
    for a in range(d1):
        pa = sum(p[a, b, y] for b in range(d2) for y in range(k))
        f_star = np.zeros(d2)
        for b in range(d2):
            f_star[b] = sum(p[a, b, y] for y in range(k)) / pa
        rhs = np.zeros(d2)
        for y in range(k):
            py = sum(p[i, b, y] for i in range(d1) for b in range(d2))
            h_ay = sum(p[a, b, y] for b in range(d2)) / pa
            for b in range(d2):
                cond_mean_b = sum(p[i, b, y] for i in range(d1)) / py
                rhs[b] += h_ay * cond_mean_b
        worst = max(worst, float(np.abs(f_star - rhs).max()))
    return worst


class TestDiscreteJoint:
    def test_rejects_negative_mass(self):
        p = np.full((2, 2, 2), 0.125)
        p[0, 0, 0] = -0.1
        p[1, 1, 1] = 0.35
        with pytest.raises(ValidationError):
            DiscreteJoint(p)

    def test_rejects_wrong_total(self):
        with pytest.raises(ValidationError):
            DiscreteJoint(np.full((2, 2, 2), 0.2))

    def test_default_embedding_is_one_hot(self):
        joint = DiscreteJoint(np.full((2, 3, 2), 1.0 / 12))
        assert np.array_equal(joint.x2_embedding, np.eye(3))


class TestMakeCiJoint:
    def test_factorizes_by_construction(self):
        joint = make_ci_joint(4, 5, 3, seed=0)
        p = joint.p
        py = p.sum(axis=(0, 1))
        for y in range(3):
            conditional = p[:, :, y] / py[y]
            outer = np.outer(conditional.sum(axis=1), conditional.sum(axis=0))
            assert np.abs(conditional - outer).max() < 1e-14

    def test_total_mass(self):
        joint = make_ci_joint(3, 4, 2, seed=1)
        assert abs(joint.p.sum() - 1.0) <= 1e-12

    def test_deterministic(self):
        a = make_ci_joint(3, 4, 2, seed=9)
        b = make_ci_joint(3, 4, 2, seed=9)
        assert np.array_equal(a.p, b.p)

    def test_rejects_k_not_below_d2(self):
        with pytest.raises(ValidationError):
            make_ci_joint(3, 3, 3, seed=0)


class TestVerifyTheorem:
    def test_deterministic_chain_is_exact(self):
        # X1 = X2 = Y uniform on k values: A is the identity and both
        # residuals vanish exactly.
        k = 4
        p = np.zeros((k, k, k))
        for y in range(k):
            p[y, y, y] = 1.0 / k
        report = verify_theorem(DiscreteJoint(p))
        assert report.reconstruction_residual == 0.0
        assert report.recovery_residual == 0.0
        assert report.a_rank == k
        assert report.ci_holds

    def test_ci_joints_have_tiny_residuals(self):
        for seed in range(100):
            report = verify_theorem(make_ci_joint(6, 5, 3, seed=seed))
            assert report.ci_holds
            assert report.a_rank == 3
            assert report.reconstruction_residual < 1e-10
            assert report.recovery_residual < 1e-10

    def test_non_ci_perturbation_breaks_factorization(self):
        joint = make_ci_joint(6, 5, 3, seed=0)
        p = joint.p.copy()
        p[0, 0, 0] += 0.05
        p /= p.sum()
        report = verify_theorem(DiscreteJoint(p))
        assert not report.ci_holds
        assert report.reconstruction_residual > 1e-3
        # Independent loop-based recomputation agrees with the report.
        assert report.reconstruction_residual == pytest.approx(
            _loop_reconstruction_residual(p), rel=1e-9
        )

    def test_relabeling_x2_keeps_residuals(self):
        joint = make_ci_joint(5, 6, 3, seed=4)
        base = verify_theorem(joint)
        perm = np.array([3, 0, 5, 1, 4, 2])
        relabeled = verify_theorem(DiscreteJoint(joint.p[:, perm, :]))
        assert relabeled.reconstruction_residual == pytest.approx(
            base.reconstruction_residual, abs=1e-14
        )
        assert relabeled.recovery_residual == pytest.approx(base.recovery_residual, abs=1e-12)

    def test_rank_deficient_a_is_flagged(self):
        # X2 independent of Y: all rows of A are equal, so rank is 1.
        d1, d2, k = 3, 4, 2
        rng = np.random.default_rng(2)
        py = np.array([0.4, 0.6])
        px1_y = rng.random((d1, k))
        px1_y /= px1_y.sum(axis=0, keepdims=True)
        px2 = rng.random(d2)
        px2 /= px2.sum()
        p = np.einsum("y,ay,b->aby", py, px1_y, px2)
        report = verify_theorem(DiscreteJoint(p / p.sum()))
        assert report.a_rank == 1
        assert report.recovery_residual is None
        assert report.reconstruction_residual < 1e-12

    def test_zero_x1_marginal_rejected(self):
        p = np.zeros((2, 2, 2))
        p[0, :, :] = 0.25
        with pytest.raises(ValidationError):
            verify_theorem(DiscreteJoint(p))
