import numpy as np
import pytest

from conftest import random_plant
from ncspassive.analysis import passivity_lmi, sms_oracle
from ncspassive.errors import AssumptionViolated, SingularTransform
from ncspassive.lmi import Indeterminate, SolveOptions
from ncspassive.model import (
    Gain,
    LossModel,
    Plant,
    closed_loop,
    full_packet_schedule,
    mode_distribution,
)
from ncspassive.synthesis import (
    SYNTHESIS_CONSTRAINT,
    build_synthesis_lmi,
    congruence_residual,
    recover_gain,
    round_trip_verify,
    synthesize,
)


def scalar_feasibility_grid(plant: Plant, dist, eta: float, k_range, p_range):
    """Brute-force feasible (K, P) region for the averaged dissipation form.

    Closed-form 2x2 negative definiteness only; independent of the LMI
    machinery. Returns the boolean feasibility mask over the K grid.
    """
    a = float(plant.A[0, 0])
    b1 = float(plant.B1[0, 0])
    b2 = float(plant.B2[0, 0])
    c1 = float(plant.C1[0, 0])
    d11 = float(plant.D11[0, 0])
    a11 = dist.prob(1, 1)
    ks = np.asarray(k_range)
    ps = np.asarray(p_range)
    feasible = np.zeros(ks.shape, dtype=bool)
    for idx, k in enumerate(ks):
        a_fb = a + b2 * k
        second_moment = a11 * a_fb**2 + (1.0 - a11) * a**2
        mean_a = a11 * a_fb + (1.0 - a11) * a
        t11 = (second_moment - 1.0) * ps
        t12 = mean_a * ps * b1 - c1
        t22 = b1 * b1 * ps + 2.0 * eta - 2.0 * d11
        ok = (t11 < 0) & (t22 < 0) & (t11 * t22 - t12 * t12 > 0)
        feasible[idx] = bool(ok.any())
    return feasible


class TestBuildSynthesisLmi:
    def test_lossless_reduces_to_single_active_mode_row(self, lossy_feedback_plant):
        dist = mode_distribution(LossModel(0.0, 0.0))
        prob = build_synthesis_lmi(lossy_feedback_plant, dist, 0.1)
        expr = dict(prob.constraints)[SYNTHESIS_CONSTRAINT]
        m = expr.assemble({"X": np.eye(1), "Y": np.zeros((1, 1))})
        # rows for the three zero-probability modes carry only their -X diagonal
        assert m.shape == (6, 6)
        np.testing.assert_allclose(m[2, 0], 0.0)  # mode (0,0) row empty
        np.testing.assert_allclose(m[5, 0], 1.2)  # mode (1,1) row carries A X
        np.testing.assert_allclose(np.diag(m)[2:], [-1.0] * 4)

    def test_all_sensor_messages_lost_drops_gain_variable(self, lossy_feedback_plant):
        dist = mode_distribution(LossModel(1.0, 0.0))
        prob = build_synthesis_lmi(lossy_feedback_plant, dist, 0.0)
        assert "Y" not in prob.variables
        assert "X" in prob.variables

    def test_open_loop_passive_plant_feasible_without_feedback(self, scalar_passive_plant):
        # alpha1 = 1 kills the gain entirely; open loop is passive, so the
        # problem must still be feasible.
        dist = mode_distribution(LossModel(1.0, 0.0))
        result = synthesize(scalar_passive_plant, LossModel(1.0, 0.0), eta=0.1)
        assert result.feasible
        np.testing.assert_allclose(result.gain.K, np.zeros((1, 1)))
        assert dist.prob(1, 1) == 0.0

    def test_open_loop_unstable_plant_infeasible_without_feedback(self, lossy_feedback_plant):
        result = synthesize(lossy_feedback_plant, LossModel(1.0, 0.0), eta=0.0)
        assert isinstance(result, Indeterminate)

    def test_assumption_checked(self):
        plant = Plant(A=[[0.5]], B1=[[1.0]], B2=[[1.0]], C1=[[0.5]], D11=[[0.0]], D12=[[0.0]])
        with pytest.raises(AssumptionViolated):
            build_synthesis_lmi(plant, mode_distribution(LossModel(0.0, 0.0)), 0.1)


class TestRecoverGain:
    def test_zero_y(self):
        gain = recover_gain(np.eye(2), np.zeros((1, 2)))
        np.testing.assert_allclose(gain.K, np.zeros((1, 2)))

    def test_identity_transform(self):
        y = np.array([[1.0, -2.0]])
        np.testing.assert_allclose(recover_gain(np.eye(2), y).K, y)

    def test_diagonal_inverse(self):
        gain = recover_gain(np.diag([2.0, 4.0]), np.array([[2.0, 4.0]]))
        np.testing.assert_allclose(gain.K, [[1.0, 1.0]])

    def test_singular_transform_rejected(self):
        with pytest.raises(SingularTransform):
            recover_gain(np.diag([1.0, 0.0]), np.array([[1.0, 1.0]]))


class TestSynthesize:
    def test_lossy_scalar_scenario(self, lossy_feedback_plant):
        loss = LossModel(0.0, 0.2)
        dist = mode_distribution(loss)
        # establish a nonempty feasible region independently first
        ks = np.arange(-2.0, 0.5, 5e-3)
        ps = np.arange(5e-3, 5.0, 5e-3)
        feasible = scalar_feasibility_grid(lossy_feedback_plant, dist, 0.1, ks, ps)
        assert feasible.any()

        result = synthesize(lossy_feedback_plant, loss, eta=0.1)
        assert result.feasible
        k = float(result.gain.K[0, 0])
        assert 0.8 * (1.2 + k) ** 2 + 0.2 * 1.44 < 1.0
        assert result.verification.passed
        # gain sits inside the independently computed feasible region
        assert feasible[np.argmin(np.abs(ks - k))]

    def test_stable_passive_plant_lossless(self):
        plant = Plant(A=[[0.5]], B1=[[1.0]], B2=[[1.0]], C1=[[0.5]], D11=[[1.0]], D12=[[0.0]])
        result = synthesize(plant, LossModel(0.0, 0.0), eta=0.3)
        assert result.feasible
        assert result.rho < 1.0

    def test_structurally_infeasible_scenario(self):
        # (1 - a11) * A^2 = 0.25 * 4 = 1: no gain can reach rho < 1
        plant = Plant(A=[[2.0]], B1=[[1.0]], B2=[[1.0]], C1=[[0.5]], D11=[[1.0]], D12=[[0.0]])
        for seed in (0, 1, 2):
            result = synthesize(plant, LossModel(0.0, 0.25), eta=0.0,
                                options=SolveOptions(seed=seed))
            assert isinstance(result, Indeterminate)

    def test_maximize_eta_bisects(self, lossy_feedback_plant):
        result = synthesize(lossy_feedback_plant, LossModel(0.0, 0.2), eta="maximize",
                            eta_tol=5e-3)
        assert result.feasible
        assert result.eta > 0.1
        # one notch above the certified level must not be certifiable
        probe = synthesize(lossy_feedback_plant, LossModel(0.0, 0.2),
                           eta=result.eta + 5e-2)
        assert isinstance(probe, Indeterminate) or probe.eta > result.eta

    def test_unweighted_output_row_variant(self, lossy_feedback_plant):
        result = synthesize(lossy_feedback_plant, LossModel(0.0, 0.2), eta=0.1,
                            weighting="unweighted")
        assert result.feasible
        assert result.verification.passed

    def test_monotone_loss_degradation_on_scalar_family(self, lossy_feedback_plant):
        # if certified at drop rate a2, every smaller rate must certify too
        rates = [0.2, 0.1, 0.0]
        feasible = [synthesize(lossy_feedback_plant, LossModel(0.0, a2), eta=0.1).feasible
                    for a2 in rates]
        assert feasible[0] is True
        for worse, better in zip(feasible, feasible[1:]):
            assert (not worse) or better


class TestRoundTrip:
    def test_congruence_identity_on_random_instances(self):
        rng = np.random.default_rng(41)
        done = 0
        attempts = 0
        while done < 8 and attempts < 60:
            attempts += 1
            plant = random_plant(rng, int(rng.integers(1, 3)), spectral_scale=0.9)
            loss = LossModel(float(rng.random() * 0.2), float(rng.random() * 0.2))
            result = synthesize(plant, loss, eta=0.01,
                                options=SolveOptions(max_iters=250, restarts=6))
            if not result.feasible:
                continue
            assert result.verification.congruence_rel_err <= 1e-6
            assert result.verification.verdicts_match
            done += 1
        assert done == 8

    def test_perturbed_gain_fails_rho_leg(self, lossy_feedback_plant):
        loss = LossModel(0.0, 0.2)
        dist = mode_distribution(loss)
        result = synthesize(lossy_feedback_plant, loss, eta=0.1)
        # destabilizing gain: push the closed loop out of the unit disc
        bad = type(result)(
            x=result.x, y=result.y, gain=Gain([[1.0]]), eta=result.eta,
            certificate=result.certificate, verification=None, rho=float("nan"),
        )
        report = round_trip_verify(lossy_feedback_plant, bad, dist)
        assert not report.rho_ok
        assert not report.passed

    def test_zero_gain_consistency_with_open_loop_passivity(self):
        # synthesis form at (X, Y=0) must agree with the open-loop averaged
        # dissipation form at P = X^{-1}: the congruence holds with zero gain.
        rng = np.random.default_rng(43)
        for _ in range(10):
            plant = random_plant(rng, 2, spectral_scale=0.8)
            loss = LossModel(float(rng.random() * 0.3), float(rng.random() * 0.3))
            dist = mode_distribution(loss)
            x = rng.standard_normal((2, 2))
            x = x @ x.T + 0.5 * np.eye(2)
            rel, verdict = congruence_residual(
                plant, dist, 0.05, x, np.zeros((1, 2)), Gain.zero(1, 2))
            assert rel <= 1e-6
            assert verdict

    def test_zero_gain_feasibility_equivalence(self):
        # a plant whose open loop is passive at eta: pinning Y to zero keeps
        # the synthesis problem feasible; an open-loop-unstable plant with
        # the gain path removed (alpha1 = 1) is infeasible.
        passive = Plant(A=[[0.5]], B1=[[1.0]], B2=[[1.0]], C1=[[0.5]], D11=[[1.0]], D12=[[0.0]])
        dist = mode_distribution(LossModel(0.0, 0.0))
        open_cert = passivity_lmi(passive, Gain.zero(1, 1), dist, 0.2)
        assert open_cert.feasible
        x = np.linalg.inv(open_cert.p)
        prob = build_synthesis_lmi(passive, dist, 0.2)
        expr = dict(prob.constraints)[SYNTHESIS_CONSTRAINT]
        m = expr.assemble({"X": x, "Y": np.zeros((1, 1))})
        assert np.linalg.eigvalsh(m)[-1] < 0

    def test_result_rho_matches_oracle(self, lossy_feedback_plant):
        loss = LossModel(0.0, 0.2)
        result = synthesize(lossy_feedback_plant, loss, eta=0.1)
        fam = closed_loop(lossy_feedback_plant, result.gain, 0, full_packet_schedule())
        rho = sms_oracle(fam, mode_distribution(loss)).rho
        assert result.rho == pytest.approx(rho)
