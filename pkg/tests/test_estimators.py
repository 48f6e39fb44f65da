import math

import numpy as np
import pytest

from wsmsce.dictionary import (
    build_angular_dictionary,
    build_intersub_dictionary,
    build_pad2d_dictionary,
    build_pd_dictionary,
    make_angle_grid,
    make_distance_grid,
)
from wsmsce.errors import SingularSystemError
from wsmsce.estimators import (
    EstimatorConfig,
    distance_stage,
    mad_omp,
    measure_stacked,
    nmse,
    ols_oracle,
    omp,
    pad2d_omp,
    pd_omp,
    somp_angle_stage,
    ts_pad_omp,
)
from wsmsce.geometry import (
    MODEL_CROSS,
    MODEL_EXACT,
    ArrayConfig,
    PathSet,
    fraunhofer_distance,
    steering_intersub,
    synth_channel,
)
from wsmsce.measurement import Observation, acquire, optimized_combiner
from wsmsce.numkern import vec


@pytest.fixture(scope="module")
def cfg():
    return ArrayConfig.from_frequency()


@pytest.fixture(scope="module")
def grids(cfg):
    # reciprocal distance sampling keeps atoms distinguishable out to 2 R_NF
    agrid = make_angle_grid(cfg.antennas_per_subarray)
    dgrid = make_distance_grid(10, 5.0, 2.0 * fraunhofer_distance(cfg), "reciprocal")
    return agrid, dgrid


@pytest.fixture(scope="module")
def dicts(cfg, grids):
    agrid, dgrid = grids
    return {
        "pd": build_pd_dictionary(cfg, agrid, dgrid),
        "ang": build_angular_dictionary(cfg, agrid),
        "isd": build_intersub_dictionary(cfg, agrid, dgrid),
        "pad": build_pad2d_dictionary(cfg, agrid, dgrid),
    }


@pytest.fixture(scope="module")
def combiner(cfg):
    return optimized_combiner(cfg.antennas_per_subarray, 16, seed=99)


def _on_grid_paths(grids, a_idx, c_idx, gains):
    agrid, dgrid = grids
    return PathSet(
        angles=agrid.angles[list(a_idx)],
        distances=dgrid.r_values[list(c_idx)],
        gains=np.asarray(gains, dtype=complex),
    )


def _observe(cfg, combiner, paths, model, sigma2=0.0, seed=0):
    chan = synth_channel(cfg, paths, model)
    return chan, acquire(chan, combiner, sigma2, seed=seed)


class TestNmse:
    def test_exact_match(self):
        h = np.array([1.0, 2.0j, -1.0])
        assert nmse(h, h) == 0.0

    def test_zero_estimate(self):
        h = np.array([1.0, 2.0j, -1.0])
        assert nmse(h, np.zeros(3)) == pytest.approx(1.0)

    def test_double_estimate(self):
        h = np.array([1.0, 2.0j, -1.0])
        assert nmse(h, 2.0 * h) == pytest.approx(1.0)

    def test_zero_truth_raises(self):
        with pytest.raises(ValueError):
            nmse(np.zeros(3), np.ones(3))


class TestOmpOp:
    def test_identity_dictionary(self):
        y = np.zeros(4, dtype=complex)
        y[1] = 3.0
        support, gains, resid = omp(y, np.eye(4, dtype=complex),
                                    EstimatorConfig(sparsity=1))
        assert support.tolist() == [1]
        assert gains[0] == pytest.approx(3.0)
        assert resid[-1] < 1e-12

    def test_recovers_on_grid_atom(self, cfg, combiner, dicts, grids):
        # brute-force correlation argmax is the selection oracle
        pd = dicts["pd"]
        psi = measure_stacked(combiner.matrix, pd.matrix,
                              cfg.antennas_per_subarray)
        paths = _on_grid_paths(grids, [12], [4], [1.0 - 0.7j])
        _, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        est = EstimatorConfig(sparsity=1)
        support, _, _ = omp(obs.stacked, psi, est)
        denom = np.linalg.norm(psi, axis=0) ** 2
        brute = int(np.argmax(np.abs(psi.conj().T @ obs.stacked) / denom))
        true_flat = pd.flat_index(12, 4)
        assert support.tolist() == [brute] == [true_flat]

    def test_support_scale_invariant(self, cfg, combiner, dicts, grids):
        pd = dicts["pd"]
        psi = measure_stacked(combiner.matrix, pd.matrix,
                              cfg.antennas_per_subarray)
        paths = _on_grid_paths(grids, [3, 17], [2, 7], [1.0, 0.5j])
        _, obs = _observe(cfg, combiner, paths, MODEL_EXACT, 0.1, seed=4)
        est = EstimatorConfig(sparsity=2)
        s1, _, _ = omp(obs.stacked, psi, est)
        s2, _, _ = omp(4.75 * obs.stacked, psi, est)
        assert np.array_equal(s1, s2)


class TestPdOmp:
    def test_single_path_exact(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [9], [3], [0.8 + 0.4j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = pd_omp(obs, combiner, dicts["pd"], EstimatorConfig(sparsity=1))
        assert res.support == [dicts["pd"].flat_index(9, 3)]
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-10

    def test_multipath_exact(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [5, 14, 20], [1, 6, 3],
                               [1.0, -0.6 + 0.2j, 0.3 - 0.9j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = pd_omp(obs, combiner, dicts["pd"], EstimatorConfig(sparsity=3))
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-8

    def test_zero_observation(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [9], [3], [1.0])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        q, m = obs.pilot_matrix.shape
        zero_obs = Observation(
            stacked=np.zeros(q * m, dtype=complex),
            pilot_matrix=np.zeros((q, m), dtype=complex),
            noise_variance=0.0,
        )
        res = pd_omp(zero_obs, combiner, dicts["pd"], EstimatorConfig(sparsity=2))
        assert np.allclose(res.gains, 0.0)
        assert nmse(chan.coeffs, res.channel_estimate) == pytest.approx(1.0)

    def test_parameter_readout(self, cfg, combiner, dicts, grids):
        agrid, dgrid = grids
        paths = _on_grid_paths(grids, [7], [5], [1.0])
        _, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = pd_omp(obs, combiner, dicts["pd"], EstimatorConfig(sparsity=1))
        assert res.angle_estimates[0] == pytest.approx(agrid.angles[7])
        assert res.distance_estimates[0] == pytest.approx(dgrid.r_values[5])


class TestMadOmp:
    def test_subarray_planewave_truth(self, cfg, combiner, dicts, grids):
        # per-subarray single-angle channel: each block is one angular atom
        agrid, _ = grids
        ang = dicts["ang"]
        rng = np.random.default_rng(3)
        n, m = cfg.antennas_per_subarray, cfg.num_subarrays
        idx = rng.integers(0, agrid.num_samples, size=m)
        gains = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        h_mat = ang.matrix[:, idx] * gains[None, :]
        chan_vec = vec(h_mat)
        obs = acquire_like(cfg, combiner, h_mat)
        res, sub = mad_omp(obs, combiner, ang, EstimatorConfig(sparsity=1))
        assert nmse(chan_vec, res.channel_estimate) < 1e-10
        assert [s[0] for s in sub.supports] == idx.tolist()

    def test_worse_than_pd_on_spherical_truth(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [4, 18], [2, 5], [1.0, 0.7j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        est = EstimatorConfig(sparsity=2)
        res_pd = pd_omp(obs, combiner, dicts["pd"], est)
        res_mad, _ = mad_omp(obs, combiner, dicts["ang"], est)
        assert nmse(chan.coeffs, res_mad.channel_estimate) > \
            nmse(chan.coeffs, res_pd.channel_estimate)

    def test_single_subarray_reduces_to_omp(self):
        tiny = ArrayConfig(1, 8, 0.0015, 0.012, 0.003)
        agrid = make_angle_grid(8)
        ang = build_angular_dictionary(tiny, agrid)
        comb = optimized_combiner(8, 4, seed=0)
        h_mat = 1.3 * ang.matrix[:, [5]]
        obs = acquire_like(tiny, comb, h_mat)
        est = EstimatorConfig(sparsity=1)
        res, sub = mad_omp(obs, comb, ang, est)
        psi = comb.matrix.conj().T @ ang.matrix
        support, gains, _ = omp(obs.pilot_matrix[:, 0], psi, est)
        assert sub.supports[0].tolist() == support.tolist()
        assert np.allclose(sub.gains[0], gains)


def acquire_like(cfg, combiner, h_mat):
    """Noiseless observation of an explicit per-subarray channel matrix."""
    y_mat = combiner.matrix.conj().T @ h_mat
    return Observation(stacked=vec(y_mat), pilot_matrix=y_mat, noise_variance=0.0)


class TestSompStage:
    def test_single_path_angle_and_row(self, cfg, combiner, dicts, grids):
        agrid, dgrid = grids
        z = 1.2 - 0.3j
        paths = _on_grid_paths(grids, [13], [4], [z])
        _, obs = _observe(cfg, combiner, paths, MODEL_CROSS)
        support, xi = somp_angle_stage(obs.pilot_matrix, combiner, dicts["ang"],
                                       EstimatorConfig(sparsity=1))
        assert support.tolist() == [13]
        # row approximates sqrt(MN/L) z b(theta, r)^T
        expected = math.sqrt(cfg.num_elements) * z * steering_intersub(
            cfg, agrid.angles[13], dgrid.r_values[4]
        )
        assert np.linalg.norm(xi[0] - expected) < 1e-8

    def test_residual_orthogonal_to_selected(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [6, 16], [2, 8], [1.0, -0.5 + 0.8j])
        _, obs = _observe(cfg, combiner, paths, MODEL_CROSS, 0.05, seed=8)
        est = EstimatorConfig(sparsity=2)
        support, xi = somp_angle_stage(obs.pilot_matrix, combiner, dicts["ang"], est)
        psi = combiner.matrix.conj().T @ dicts["ang"].matrix
        phi = psi[:, support]
        residual = obs.pilot_matrix - phi @ xi
        assert np.linalg.norm(phi.conj().T @ residual) < 1e-10

    def test_shared_angle_not_reselected(self, cfg, combiner, dicts, grids):
        # two paths on one angle atom: the angle appears once in the support
        paths = _on_grid_paths(grids, [10, 10], [1, 7], [1.0, 0.9j])
        _, obs = _observe(cfg, combiner, paths, MODEL_CROSS)
        support, _ = somp_angle_stage(obs.pilot_matrix, combiner, dicts["ang"],
                                      EstimatorConfig(sparsity=2))
        assert len(set(support.tolist())) == len(support)
        assert 10 in support.tolist()


class TestDistanceStage:
    def test_matched_filter_peak(self, cfg, dicts, grids):
        agrid, dgrid = grids
        isd = dicts["isd"]
        a_idx, c_idx = 8, 6
        z_row = 2.3 * steering_intersub(cfg, agrid.angles[a_idx],
                                        dgrid.r_values[c_idx])
        r_hat, idx = distance_stage(z_row[None, :], [a_idx], isd)
        assert idx[0] == c_idx
        assert r_hat[0] == dgrid.r_values[c_idx]

    def test_scalar_invariance(self, cfg, dicts, grids):
        agrid, dgrid = grids
        isd = dicts["isd"]
        z_row = steering_intersub(cfg, agrid.angles[2], dgrid.r_values[3])
        _, idx1 = distance_stage(z_row[None, :], [2], isd)
        _, idx2 = distance_stage((-0.3 + 4.1j) * z_row[None, :], [2], isd)
        assert idx1[0] == idx2[0] == 3


class TestTsPadOmp:
    def test_exact_truth_end_to_end(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [11], [5], [1.0 + 1.0j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = ts_pad_omp(obs, combiner, cfg, dicts["ang"], dicts["isd"],
                         EstimatorConfig(sparsity=1))
        assert res.support == [(11, 5)]
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-6

    def test_crossfield_truth_model_matched(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [4, 19], [2, 8], [1.0, -0.8 + 0.1j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_CROSS)
        res = ts_pad_omp(obs, combiner, cfg, dicts["ang"], dicts["isd"],
                         EstimatorConfig(sparsity=2), recon_model=MODEL_CROSS)
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-10

    def test_overfit_sparsity_harmless(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [9], [4], [1.0])
        chan, obs = _observe(cfg, combiner, paths, MODEL_CROSS)
        res = ts_pad_omp(obs, combiner, cfg, dicts["ang"], dicts["isd"],
                         EstimatorConfig(sparsity=3), recon_model=MODEL_CROSS)
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-8
        gains = np.abs(res.gains)
        assert np.sum(gains > 1e-6 * gains.max()) >= 1


class TestPad2dOmp:
    def test_single_path_crossfield(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [15], [6], [0.9 - 0.2j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_CROSS)
        res = pad2d_omp(obs, combiner, dicts["pad"], EstimatorConfig(sparsity=1))
        assert res.support == [(15, 6)]
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-10

    def test_first_pick_matches_brute_force(self, cfg, combiner, grids):
        # small instance (A*C <= 300): exhaustive double loop over pairs
        agrid = make_angle_grid(12)
        dgrid = make_distance_grid(8, 5.0, 307.2, "reciprocal")
        pad = build_pad2d_dictionary(cfg, agrid, dgrid)
        paths = PathSet(angles=[agrid.angles[5]], distances=[dgrid.r_values[2]],
                        gains=[1.0])
        chan, obs = _observe(cfg, combiner, paths, MODEL_CROSS, 0.02, seed=21)
        res = pad2d_omp(obs, combiner, pad, EstimatorConfig(sparsity=1))
        psi = combiner.matrix.conj().T @ pad.angular.matrix
        denom = np.linalg.norm(psi, axis=0) ** 2
        best, best_score = None, -1.0
        for c in range(pad.num_distances):
            for a in range(pad.num_angles):
                b_col = pad.factors[a, c]
                score = abs(psi[:, a].conj() @ obs.pilot_matrix @ b_col.conj())
                score /= denom[a]
                if score > best_score:
                    best, best_score = (a, c), score
        assert res.support[0] == best

    def test_residual_monotone(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [3, 12, 21], [1, 4, 8],
                               [1.0, 0.5j, -0.4 + 0.1j])
        _, obs = _observe(cfg, combiner, paths, MODEL_CROSS, 0.1, seed=5)
        from wsmsce import kernels

        psi = combiner.matrix.conj().T @ dicts["pad"].angular.matrix
        _, _, resid = kernels.pad2d_run(psi, obs.pilot_matrix,
                                        dicts["pad"].factors, 5)
        assert np.all(np.diff(resid) <= 1e-10)


class TestOlsOracle:
    def test_noiseless_exact(self, cfg, combiner, grids):
        paths = _on_grid_paths(grids, [8, 17], [3, 6], [1.0, 0.2 - 0.7j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = ols_oracle(obs, combiner, cfg, paths, MODEL_EXACT)
        assert nmse(chan.coeffs, res.channel_estimate) < 1e-12

    def test_single_path_gain(self, cfg, combiner, grids):
        z = 0.6 + 0.9j
        paths = _on_grid_paths(grids, [10], [4], [z])
        _, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        res = ols_oracle(obs, combiner, cfg, paths, MODEL_EXACT)
        expected = math.sqrt(cfg.num_elements / 1) * z
        assert abs(res.gains[0] - expected) < 1e-8

    def test_coincident_paths_singular(self, cfg, combiner, grids):
        paths = _on_grid_paths(grids, [10, 10], [4, 4], [1.0, 1.0])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT)
        with pytest.raises(SingularSystemError):
            ols_oracle(obs, combiner, cfg, paths, MODEL_EXACT)


class TestModelMatchedExactness:
    def test_all_pipelines(self, cfg, combiner, dicts, grids):
        # every pipeline is exact on noiseless on-grid truth from its own
        # dictionary model with Q >= 2 L
        rng = np.random.default_rng(77)
        agrid, dgrid = grids
        for trial in range(5):
            a_idx = rng.choice(np.arange(3, 22), size=2, replace=False)
            c_idx = rng.integers(0, dgrid.num_samples, size=2)
            gains = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            paths = _on_grid_paths(grids, a_idx, c_idx, gains)
            est = EstimatorConfig(sparsity=2)

            chan_e, obs_e = _observe(cfg, combiner, paths, MODEL_EXACT)
            assert nmse(chan_e.coeffs,
                        pd_omp(obs_e, combiner, dicts["pd"], est)
                        .channel_estimate) < 1e-8

            chan_c, obs_c = _observe(cfg, combiner, paths, MODEL_CROSS)
            assert nmse(chan_c.coeffs,
                        pad2d_omp(obs_c, combiner, dicts["pad"], est)
                        .channel_estimate) < 1e-8
            assert nmse(chan_c.coeffs,
                        ts_pad_omp(obs_c, combiner, cfg, dicts["ang"],
                                   dicts["isd"], est,
                                   recon_model=MODEL_CROSS)
                        .channel_estimate) < 1e-8

    def test_scale_invariance_of_supports(self, cfg, combiner, dicts, grids):
        paths = _on_grid_paths(grids, [6, 13], [2, 7], [1.0, 0.4 - 0.6j])
        chan, obs = _observe(cfg, combiner, paths, MODEL_EXACT, 0.1, seed=3)
        scaled = Observation(
            stacked=3.0 * obs.stacked,
            pilot_matrix=3.0 * obs.pilot_matrix,
            noise_variance=obs.noise_variance,
        )
        est = EstimatorConfig(sparsity=2)
        assert pd_omp(obs, combiner, dicts["pd"], est).support == \
            pd_omp(scaled, combiner, dicts["pd"], est).support
        assert pad2d_omp(obs, combiner, dicts["pad"], est).support == \
            pad2d_omp(scaled, combiner, dicts["pad"], est).support
        s1, _ = somp_angle_stage(obs.pilot_matrix, combiner, dicts["ang"], est)
        s2, _ = somp_angle_stage(scaled.pilot_matrix, combiner, dicts["ang"], est)
        assert np.array_equal(s1, s2)


class TestEstimatorConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EstimatorConfig(sparsity=0)
        with pytest.raises(ValueError):
            EstimatorConfig(sparsity=1, denominator_mode="rms")
        with pytest.raises(ValueError):
            EstimatorConfig(sparsity=1, residual_tolerance=-1.0)

    def test_denominator_modes_can_disagree(self, cfg, combiner, dicts, grids):
        # the two scoring conventions are genuinely different rankings
        paths = _on_grid_paths(grids, [5, 16], [1, 8], [1.0, 0.6j])
        _, obs = _observe(cfg, combiner, paths, MODEL_EXACT, 1.0, seed=12)
        res_sq = pd_omp(obs, combiner, dicts["pd"],
                        EstimatorConfig(sparsity=2,
                                        denominator_mode="squared-norm"))
        res_nm = pd_omp(obs, combiner, dicts["pd"],
                        EstimatorConfig(sparsity=2, denominator_mode="norm"))
        assert res_sq.support is not None and res_nm.support is not None
