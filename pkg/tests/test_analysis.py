import numpy as np
import pytest

from qsslab.analysis import (
    bloch_mean_bound,
    bloch_mean_distance_bound,
    certify,
    check_imr,
    check_recoverability,
    check_secrecy,
    detection_bounds,
    format_certification,
    max_average_fidelity,
    r_of_s,
    recovery_amplitude,
)
from qsslab.errors import ValidationError
from qsslab.linalg import (
    TOL,
    bloch_from_density,
    density_from_bloch,
    fidelity,
    haar_state,
    pure_density,
)
from qsslab.nonces import (
    MINUS,
    MINUS_I,
    PLUS,
    PLUS_I,
    NonceSet,
    SECRETS,
    basis_state,
    builtin_nonce_set,
    reflection,
    share_state,
)

EYE2 = np.eye(2, dtype=complex)
BASIS_00_SET = NonceSet(name="basis00", states=(np.array([1, 0, 0, 0], dtype=complex),))


def state_with_overlap(s_vec, overlap, rng):
    """Random two-qubit pure state with |<s|psi>| equal to `overlap`."""
    raw = haar_state(4, rng)
    perp = raw - np.vdot(s_vec, raw) * s_vec
    perp = perp / np.linalg.norm(perp)
    phase = np.exp(2j * np.pi * rng.random())
    return overlap * phase * s_vec + np.sqrt(1.0 - overlap**2) * perp


def direct_recovery_probability(psi, s_vec):
    share = reflection(s_vec) @ psi
    return float(abs(np.vdot(s_vec, reflection(psi) @ share)) ** 2)


class TestRecoverability:
    def test_hsu_all_64_overlaps(self, hsu_set):
        report = check_recoverability(hsu_set)
        assert report.passed
        assert len(report.pairs) == 64
        assert report.worst_overlap_deviation < TOL
        assert report.worst_recovery_deviation < TOL

    def test_proposed_all_16_overlaps(self, proposed_set):
        report = check_recoverability(proposed_set)
        assert report.passed
        assert len(report.pairs) == 16
        assert all(abs(p.overlap - 0.5) < TOL for p in report.pairs)
        assert all(abs(p.recovery_probability - 1.0) < TOL for p in report.pairs)

    def test_entangled_quantum_secret_supported(self, proposed_set):
        # (|00> + i|11>)/sqrt(2) overlaps every nonce of the proposed set by
        # exactly 1/2, so it is a valid non-classical secret
        secret = np.array([1, 0, 0, 1j], dtype=complex) / np.sqrt(2)
        for psi in proposed_set.states:
            assert abs(abs(np.vdot(secret, psi)) - 0.5) < TOL
        report = check_recoverability(proposed_set, secrets=[secret])
        assert report.passed
        assert all(abs(p.recovery_probability - 1.0) < TOL for p in report.pairs)
        assert all(p.secret == "custom" for p in report.pairs)

    def test_degenerate_and_failing_sets(self):
        report = check_recoverability(BASIS_00_SET)
        assert not report.passed

    def test_equivalence_forward(self, rng):
        # overlap exactly 1/2 implies recovery probability 1
        s_vec = basis_state("01")
        for _ in range(1000):
            psi = state_with_overlap(s_vec, 0.5, rng)
            assert direct_recovery_probability(psi, s_vec) == pytest.approx(1.0, abs=1e-9)

    def test_equivalence_reverse(self, rng):
        # overlap away from 1/2 (and 1) leaves recovery strictly below 1,
        # and the closed-form amplitude matches the engine exactly
        s_vec = basis_state("10")
        for _ in range(1000):
            overlap = rng.uniform(0.0, 0.95)
            if abs(overlap - 0.5) < 0.05:
                continue
            psi = state_with_overlap(s_vec, overlap, rng)
            prob = direct_recovery_probability(psi, s_vec)
            assert prob < 1.0 - 1e-6
            assert prob == pytest.approx(recovery_amplitude(overlap**2), abs=1e-9)


class TestRecoveryAmplitude:
    def test_quarter_gives_one(self):
        assert recovery_amplitude(0.25) == pytest.approx(1.0, abs=TOL)

    def test_degenerate_one(self):
        assert recovery_amplitude(1.0) == pytest.approx(1.0, abs=TOL)

    def test_half(self, rng):
        assert recovery_amplitude(0.5) == pytest.approx(0.5, abs=TOL)
        s_vec = basis_state("11")
        psi = state_with_overlap(s_vec, np.sqrt(0.5), rng)
        assert direct_recovery_probability(psi, s_vec) == pytest.approx(0.5, abs=1e-9)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            recovery_amplitude(1.5)


class TestSecrecyAndImr:
    def test_proposed_secrecy(self, proposed_set):
        devs = check_secrecy(proposed_set)
        assert set(devs) == {1, 2, 3, 4}
        assert all(d < 1e-12 for d in devs.values())

    def test_hsu_secrecy(self, hsu_set):
        devs = check_secrecy(hsu_set)
        assert all(d < 1e-12 for d in devs.values())

    def test_basis_set_fails_secrecy(self):
        devs = check_secrecy(BASIS_00_SET)
        assert max(devs.values()) > 0.1

    def test_imr_builtin_sets(self, hsu_set, proposed_set):
        assert check_imr(hsu_set) < 1e-12
        assert check_imr(proposed_set) < 1e-12

    def test_imr_basis_set_fails(self):
        assert check_imr(BASIS_00_SET) > 0.1

    def test_secrecy_implies_imr(self, rng):
        # whenever the per-nonce average is I/4 for every nonce, the grand
        # average is too; spot-check on randomly scrambled recoverable sets
        for name in ("hsu-I", "proposed-J"):
            ns = builtin_nonce_set(name)
            if all(d < TOL for d in check_secrecy(ns).values()):
                assert check_imr(ns) < TOL


class TestRofS:
    def test_hsu_value_one(self, hsu_set):
        for s in SECRETS:
            value, opt = r_of_s(hsu_set, s)
            assert value == pytest.approx(1.0, abs=TOL)
            assert np.abs(opt - EYE2 / 2).max() < 1e-6

    def test_proposed_value_half(self, proposed_set):
        for s in SECRETS:
            value, opt = r_of_s(proposed_set, s)
            assert value == pytest.approx(0.5, abs=TOL)
            assert np.abs(opt - EYE2 / 2).max() < 1e-6

    def test_single_nonce_perfect(self):
        ns = NonceSet(name="pp", states=(0.5 * np.ones(4, dtype=complex),))
        value, opt = r_of_s(ns, "01")
        assert value == pytest.approx(1.0, abs=TOL)

    def test_grid_path_matches_fast_path_builtin(self, proposed_set):
        for s in SECRETS:
            fast, _ = r_of_s(proposed_set, s, method="fast")
            grid, _ = r_of_s(proposed_set, s, method="grid")
            assert abs(fast - grid) < 1e-6

    def test_hsu_grid_path(self, hsu_set):
        value, _ = r_of_s(hsu_set, "00", method="grid")
        assert value == pytest.approx(1.0, abs=TOL)

    def test_grid_vs_analytic_random_pure_sets(self, rng):
        for trial in range(200):
            k = int(rng.integers(1, 9))
            sigmas = [pure_density(haar_state(2, rng)) for _ in range(k)]
            fast, _ = max_average_fidelity(sigmas, method="fast")
            grid, _ = max_average_fidelity(sigmas, method="grid")
            assert abs(fast - grid) < 1e-6

    def test_optimizer_attains_value(self, rng):
        for trial in range(50):
            k = int(rng.integers(1, 6))
            sigmas = [pure_density(haar_state(2, rng)) for _ in range(k)]
            value, opt = max_average_fidelity(sigmas)
            attained = np.mean([fidelity(s, opt) for s in sigmas])
            assert attained == pytest.approx(value, abs=1e-9)

    def test_mixed_inputs_grid(self, rng):
        # optimizer of mixed collections is still the argmax over the ball
        sigmas = [0.6 * pure_density(haar_state(2, rng)) + 0.4 * EYE2 / 2 for _ in range(3)]
        value, opt = max_average_fidelity(sigmas)
        attained = np.mean([fidelity(s, opt) for s in sigmas])
        assert attained == pytest.approx(value, abs=1e-8)
        for _ in range(300):
            probe = density_from_bloch(bloch_from_density(opt) + rng.normal(scale=0.02, size=3) * 0.5) \
                if np.linalg.norm(bloch_from_density(opt)) < 0.5 else density_from_bloch(
                    bloch_from_density(opt) * (1 - 1e-3))
            probe_val = np.mean([fidelity(s, probe) for s in sigmas])
            assert probe_val <= value + 1e-7

    def test_fast_path_rejects_mixed(self):
        with pytest.raises(ValidationError):
            max_average_fidelity([EYE2 / 2], method="fast")


class TestBlochMeanBound:
    def test_single_state(self, rng):
        rho = pure_density(haar_state(2, rng))
        assert bloch_mean_bound([rho]) == pytest.approx(1.0, abs=TOL)
        assert bloch_mean_distance_bound([rho]) == pytest.approx(1.0, abs=TOL)

    def test_equatorial_quartet_mean_is_half(self):
        # the reduced-share quartet has zero Bloch mean: true average
        # fidelity at the mean (and over the whole ball) is only 1/2, while
        # the Euclidean surrogate the mean provably optimizes stays at 3/4
        quartet = [pure_density(v) for v in (PLUS, MINUS, PLUS_I, MINUS_I)]
        assert bloch_mean_bound(quartet) == pytest.approx(0.5, abs=TOL)
        assert max_average_fidelity(quartet)[0] == pytest.approx(0.5, abs=TOL)
        assert bloch_mean_distance_bound(quartet) == pytest.approx(0.75, abs=TOL)

    def test_distance_bound_floor(self, rng):
        for trial in range(1000):
            k = int(rng.integers(1, 17))
            states = [pure_density(haar_state(2, rng)) for _ in range(k)]
            assert bloch_mean_distance_bound(states) >= 0.75 - 1e-9

    def test_distance_bound_equals_formula(self, rng):
        for trial in range(100):
            k = int(rng.integers(1, 17))
            states = [pure_density(haar_state(2, rng)) for _ in range(k)]
            mean = np.mean([bloch_from_density(s) for s in states], axis=0)
            expected = 0.75 + 0.25 * float(mean @ mean)
            assert bloch_mean_distance_bound(states) == pytest.approx(expected, abs=1e-9)

    def test_mean_is_distance_optimal(self, rng):
        # no point in the ball has smaller average squared distance
        for trial in range(50):
            k = int(rng.integers(2, 9))
            blochs = np.array([bloch_from_density(pure_density(haar_state(2, rng)))
                               for _ in range(k)])
            mean = blochs.mean(axis=0)
            best = ((blochs - mean) ** 2).sum(axis=1).mean()
            for _ in range(50):
                probe = mean + rng.normal(scale=0.1, size=3)
                if np.linalg.norm(probe) > 1:
                    probe = probe / np.linalg.norm(probe)
                assert ((blochs - probe) ** 2).sum(axis=1).mean() >= best - 1e-12

    def test_rejects_mixed(self):
        with pytest.raises(ValidationError):
            bloch_mean_bound([EYE2 / 2])


class TestDetectionBounds:
    def test_proposed_floor_and_ceiling(self, proposed_set):
        bounds = detection_bounds(proposed_set)
        assert bounds["floor"] == pytest.approx(0.25, abs=TOL)
        assert bounds["floor"] >= 0.25 - TOL
        assert bounds["ceiling"] <= 0.625 + TOL
        assert bounds["per_policy"]["target-secret"] == pytest.approx(0.25, abs=TOL)
        assert bounds["per_policy"]["target-01"] == pytest.approx(0.5, abs=TOL)

    def test_hsu_floor_zero(self, hsu_set):
        bounds = detection_bounds(hsu_set)
        assert bounds["floor"] == pytest.approx(0.0, abs=1e-12)
        assert bounds["ceiling"] <= 0.625 + TOL


class TestCertify:
    def test_proposed_passes_everything(self, proposed_set):
        report = certify(proposed_set)
        assert report.all_passed
        assert report.recoverable and report.secret and report.imr_protected
        assert all(v == pytest.approx(0.5, abs=TOL) for v in report.r_of_s.values())
        assert report.detection_bounds is not None

    def test_hsu_passes_certification_but_is_attackable(self, hsu_set):
        report = certify(hsu_set)
        assert report.all_passed
        assert all(v == pytest.approx(1.0, abs=TOL) for v in report.r_of_s.values())
        assert report.detection_bounds["floor"] == pytest.approx(0.0, abs=1e-12)

    def test_basis_set_fails(self):
        report = certify(BASIS_00_SET)
        assert not report.all_passed
        assert not report.recoverable
        assert report.detection_bounds is None

    def test_json_dict_round_trips_through_json(self, proposed_set):
        import json
        report = certify(proposed_set)
        blob = json.dumps(report.to_json_dict(), sort_keys=True)
        assert json.loads(blob)["all_passed"] is True

    def test_format_mentions_reduced_states(self, proposed_set):
        report = certify(proposed_set)
        text = format_certification(proposed_set, report)
        assert "|-><-|" in text and "|+i><+i|" in text
        assert "recoverable" in text and "PASS" in text
