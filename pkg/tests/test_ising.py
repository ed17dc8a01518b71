"""Network validation, energy/Boltzmann oracles, dynamics convergence."""

from __future__ import annotations

import math

import numpy as np
import pytest

import bktirt.ising as ising_mod
from bktirt import (
    IsingNetwork,
    RngKey,
    boltzmann_exact,
    conditional_prob,
    empirical_state_frequencies,
    energy,
    flip_energy_delta,
    glauber_step,
    logistic,
    metropolis_step,
    simulate_field,
)
from bktirt.errors import OutOfRange, TooLarge


def _net(couplings, fields, guess=None, slip=None):
    n = len(fields)
    return IsingNetwork(
        couplings=np.asarray(couplings, dtype=float),
        fields=np.asarray(fields, dtype=float),
        p_guess=np.asarray(guess if guess is not None else [0.0] * n, dtype=float),
        p_slip=np.asarray(slip if slip is not None else [0.0] * n, dtype=float),
    )


def _random_net(n, seed, low=0.2, high=0.8, field_span=0.5, guess=0.1, slip=0.1):
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(low, high, size=(n, n))
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 0.0)
    fields = rng.uniform(-field_span, field_span, size=n)
    return _net(sigma, fields, [guess] * n, [slip] * n)


class TestNetworkValidation:
    def test_asymmetric_couplings_rejected(self):
        with pytest.raises(OutOfRange):
            _net([[0.0, 0.2], [0.3, 0.0]], [0.0, 0.0])

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(OutOfRange):
            _net([[0.1, 0.2], [0.2, 0.0]], [0.0, 0.0])

    def test_emission_bounds_checked(self):
        with pytest.raises(OutOfRange):
            _net([[0.0, 0.2], [0.2, 0.0]], [0.0, 0.0], guess=[0.1, 1.2])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(OutOfRange):
            _net([[0.0]], [0.0, 0.0])

    def test_dict_round_trip(self):
        net = _random_net(3, seed=1)
        again = IsingNetwork.from_dict(net.to_dict())
        np.testing.assert_allclose(again.couplings, net.couplings)
        np.testing.assert_allclose(again.fields, net.fields)
        np.testing.assert_allclose(again.p_guess, net.p_guess)

    def test_json_file_round_trip(self, tmp_path):
        import json

        net = _random_net(4, seed=2)
        path = tmp_path / "net.json"
        path.write_text(json.dumps(net.to_dict()))
        again = IsingNetwork.from_json_file(str(path))
        np.testing.assert_allclose(again.couplings, net.couplings)


class TestEnergy:
    def test_all_zero_state_has_zero_energy(self):
        net = _random_net(4, seed=3)
        assert energy(net, [0, 0, 0, 0]) == 0.0

    def test_single_node_field(self):
        net = _net([[0.0]], [0.7])
        assert energy(net, [1]) == pytest.approx(-0.7, abs=1e-15)

    def test_pair_coupling(self):
        net = _net([[0.0, math.log(2)], [math.log(2), 0.0]], [0.0, 0.0])
        assert energy(net, [1, 1]) == pytest.approx(-math.log(2), abs=1e-15)

    def test_invariant_under_node_relabeling(self):
        rng = np.random.default_rng(4)
        net = _random_net(5, seed=5, field_span=1.0)
        for _ in range(50):
            perm = rng.permutation(5)
            z = rng.integers(0, 2, size=5)
            permuted = _net(
                net.couplings[np.ix_(perm, perm)],
                net.fields[perm],
                net.p_guess[perm],
                net.p_slip[perm],
            )
            assert energy(permuted, z[perm]) == pytest.approx(
                energy(net, z), abs=1e-12
            )


class TestBoltzmannExact:
    def test_single_node_marginal_is_logistic(self):
        for h in (-2.0, -0.3, 0.0, 0.8, 3.0):
            probs = boltzmann_exact(_net([[0.0]], [h]))
            assert probs[1] == pytest.approx(logistic(h), abs=1e-12)

    def test_independent_zero_field_pair_is_uniform(self):
        probs = boltzmann_exact(_net([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0]))
        np.testing.assert_allclose(probs, 0.25, atol=1e-12)

    def test_log_two_coupling_weights(self):
        net = _net([[0.0, math.log(2)], [math.log(2), 0.0]], [0.0, 0.0])
        np.testing.assert_allclose(
            boltzmann_exact(net), [0.2, 0.2, 0.2, 0.4], atol=1e-12
        )

    def test_normalization(self):
        probs = boltzmann_exact(_random_net(6, seed=6, field_span=1.5))
        assert abs(probs.sum() - 1.0) < 1e-12

    def test_size_cap(self):
        with pytest.raises(TooLarge):
            boltzmann_exact(_net(np.zeros((21, 21)), np.zeros(21)))

    def test_positive_manifold_from_positive_couplings(self):
        # Uniformly positive interactions force nonnegative pairwise
        # covariance of the equilibrium states.
        for seed in range(8):
            for n in (2, 3, 4):
                net = _random_net(n, seed=100 + seed, low=0.05, high=1.0)
                probs = boltzmann_exact(net)
                bits = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float)
                mean = probs @ bits
                second = bits.T @ (probs[:, None] * bits)
                cov = second - np.outer(mean, mean)
                off_diag = cov[~np.eye(n, dtype=bool)]
                assert np.all(off_diag >= -1e-12)


class TestSingleSiteDynamics:
    def test_isolated_node_conditional_is_half(self):
        net = _net([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0])
        assert conditional_prob(net, [0, 1], 0) == 0.5

    def test_conditional_equals_boltzmann_ratio(self):
        # logistic form == exp(-E(z1)) / (exp(-E(z0)) + exp(-E(z1))).
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            net = _random_net(n, seed=int(rng.integers(10**6)), field_span=1.0)
            z = rng.integers(0, 2, size=n)
            node = int(rng.integers(n))
            z0, z1 = z.copy(), z.copy()
            z0[node], z1[node] = 0, 1
            w0, w1 = math.exp(-energy(net, z0)), math.exp(-energy(net, z1))
            assert conditional_prob(net, z, node) == pytest.approx(
                w1 / (w0 + w1), abs=1e-12
            )

    def test_conditional_monotone_in_field(self):
        sigma = [[0.0, 2.0, 2.0], [2.0, 0.0, 2.0], [2.0, 2.0, 0.0]]
        strong = _net(sigma, [0.0, 0.0, 8.0])
        weak = _net(sigma, [0.0, 0.0, 0.0])
        z = [1, 1, 0]
        assert conditional_prob(strong, z, 2) > conditional_prob(weak, z, 2)
        assert conditional_prob(strong, z, 2) > 0.999

    def test_metropolis_always_accepts_downhill(self):
        net = _net([[0.0]], [5.0])
        gen = RngKey(8).generator()
        for _ in range(50):
            new = metropolis_step(net, [0], 0, gen)
            assert new[0] == 1  # delta E = -5 < 0, acceptance probability 1

    def test_glauber_step_changes_only_target_node(self):
        net = _random_net(4, seed=9)
        gen = RngKey(9).generator()
        z = np.array([0, 1, 0, 1], dtype=np.uint8)
        new = glauber_step(net, z, 2, gen)
        assert list(new[[0, 1, 3]]) == [0, 1, 1]

    def test_flip_delta_matches_energy_difference(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            net = _random_net(4, seed=int(rng.integers(10**6)), field_span=1.0)
            z = rng.integers(0, 2, size=4)
            node = int(rng.integers(4))
            flipped = z.copy()
            flipped[node] ^= 1
            assert flip_energy_delta(net, z, node) == pytest.approx(
                energy(net, flipped) - energy(net, z), abs=1e-12
            )


class TestSimulateField:
    def test_deterministic_under_key(self):
        net = _random_net(3, seed=11)
        one = simulate_field(net, 200, RngKey(11, (2,)))
        two = simulate_field(net, 200, RngKey(11, (2,)))
        np.testing.assert_array_equal(one.latent, two.latent)
        np.testing.assert_array_equal(one.emitted, two.emitted)

    def test_table_and_reference_paths_identical(self, monkeypatch):
        net = _random_net(3, seed=12)
        for dynamics in ("glauber", "metropolis"):
            fast = simulate_field(net, 300, RngKey(12), dynamics=dynamics)
            monkeypatch.setattr(ising_mod, "_TABLE_MAX_NODES", 0)
            slow = simulate_field(net, 300, RngKey(12), dynamics=dynamics)
            monkeypatch.undo()
            np.testing.assert_array_equal(fast.latent, slow.latent)
            np.testing.assert_array_equal(fast.emitted, slow.emitted)

    def test_random_scan_runs_and_differs(self):
        net = _random_net(3, seed=13)
        fixed = simulate_field(net, 300, RngKey(13), scan="fixed")
        random_scan = simulate_field(net, 300, RngKey(13), scan="random")
        assert not np.array_equal(fixed.latent, random_scan.latent)

    def test_fair_independent_nodes_emit_half(self):
        net = _net(np.zeros((3, 3)), [0.0, 0.0, 0.0])
        trace = simulate_field(net, 40000, RngKey(14))
        marginals = trace.emitted[1000::5].mean(axis=0)
        sigma = 0.5 / math.sqrt(trace.emitted[1000::5].shape[0])
        assert np.all(np.abs(marginals - 0.5) < 4 * sigma)

    def test_uncoupled_node_matches_single_node_law(self):
        # sigma = 0 decouples nodes; each latent marginal is logistic(h_j).
        fields = [0.9, -0.4]
        net = _net(np.zeros((2, 2)), fields)
        trace = simulate_field(net, 60000, RngKey(15))
        thinned = trace.latent[2000::5]
        for j, h in enumerate(fields):
            want = boltzmann_exact(_net([[0.0]], [h]))[1]
            sigma = math.sqrt(want * (1 - want) / thinned.shape[0])
            assert abs(thinned[:, j].mean() - want) < 4 * sigma

    def test_emission_mixes_latent_marginal(self):
        net = _random_net(3, seed=16, guess=0.15, slip=0.2)
        sweeps = 120000
        trace = simulate_field(net, sweeps, RngKey(16))
        probs = boltzmann_exact(net)
        bits = ((np.arange(8)[:, None] >> np.arange(3)) & 1).astype(float)
        latent_marginal = probs @ bits
        want = 0.15 + (1.0 - 0.2 - 0.15) * latent_marginal
        thinned = trace.emitted[2000::10]
        got = thinned.mean(axis=0)
        sigma = np.sqrt(want * (1 - want) / thinned.shape[0])
        assert np.all(np.abs(got - want) < 4 * sigma)

    def test_long_run_frequencies_match_exact_law(self):
        net = _random_net(2, seed=17, field_span=0.6)
        exact = boltzmann_exact(net)
        for dynamics in ("glauber", "metropolis"):
            trace = simulate_field(net, 200000, RngKey(17), dynamics=dynamics)
            freqs = empirical_state_frequencies(trace, burn_in=1000, thin=10)
            assert np.max(np.abs(freqs - exact)) < 0.01

    def test_trace_indexing(self):
        net = _random_net(2, seed=18)
        trace = simulate_field(net, 50, RngKey(18))
        assert len(trace) == 50
        state = trace[10]
        np.testing.assert_array_equal(state.z, trace.latent[10])
        np.testing.assert_array_equal(state.x, trace.emitted[10])
        indices = trace.state_indices()
        assert indices.shape == (50,)
        np.testing.assert_array_equal(
            (indices[:, None] >> np.arange(2)) & 1, trace.latent
        )
