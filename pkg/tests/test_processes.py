import numpy as np
import pytest
from scipy import stats

from seqemp.errors import ValidationError
from seqemp.processes import (AffineMap, FiniteChainSpec, IfsSpec, MaSpec,
                              SamplePath, chain_block_sums,
                              check_contraction_average, half_maps_ifs,
                              ifs_condition_report, simulate_chain,
                              simulate_chain_batch, simulate_expanding_map,
                              simulate_ifs, simulate_ma, sobol_probe_triples,
                              two_state_chain)


# ---------------------------------------------------------------------------
# finite chains
# ---------------------------------------------------------------------------

def test_chain_spec_validation():
    with pytest.raises(ValidationError):
        FiniteChainSpec(np.array([[0.5, 0.6], [0.5, 0.5]]))  # row sum != 1
    with pytest.raises(ValidationError):
        FiniteChainSpec(np.array([[1.5, -0.5], [0.5, 0.5]]))  # negative entry
    spec = two_state_chain(0.2, 0.3)
    assert np.allclose(spec.stationary, [0.6, 0.4], atol=1e-12)
    assert np.abs(spec.stationary @ spec.transition - spec.stationary).max() < 1e-10


def test_symmetric_chain_frequencies():
    spec = two_state_chain(0.5, 0.5)
    path = simulate_chain(spec, 100_000, seed=7)
    freq = (path.values == 1.0).mean()
    assert abs(freq - 0.5) <= 0.01


def test_identity_chain_constant_path():
    spec = FiniteChainSpec(np.eye(2))
    path = simulate_chain(spec, 100, seed=5)
    assert np.all(path.values == path.values[0])


def test_three_state_transition_frequencies():
    # multinomial oracle: each empirical row entry is binomial with
    # se = sqrt(p (1 - p) / count of visits to the source state)
    p = np.array([[0.2, 0.5, 0.3], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
    spec = FiniteChainSpec(p)
    path = simulate_chain(spec, 1_000_000, seed=12)
    states = path.values.astype(int)
    counts = np.zeros((3, 3))
    np.add.at(counts, (states[:-1], states[1:]), 1)
    visits = counts.sum(axis=1)
    phat = counts / visits[:, None]
    se = np.sqrt(p * (1 - p) / visits[:, None])
    assert (np.abs(phat - p) <= 3 * se).all()


def test_markov_property_second_order():
    # P(X_{k+1}=j | X_k=i, X_{k-1}=l) should not depend on l
    p = np.array([[0.2, 0.5, 0.3], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
    spec = FiniteChainSpec(p)
    states = simulate_chain(spec, 1_000_000, seed=12).values.astype(int)
    counts = np.zeros((3, 3, 3))
    np.add.at(counts, (states[:-2], states[1:-1], states[2:]), 1)
    pair_visits = counts.sum(axis=2)
    for l in range(3):
        for i in range(3):
            n_li = pair_visits[l, i]
            phat = counts[l, i] / n_li
            se = np.sqrt(p[i] * (1 - p[i]) / n_li)
            assert (np.abs(phat - p[i]) <= 3 * se).all()


def test_chain_determinism_bit_for_bit():
    spec = two_state_chain(0.2, 0.3)
    a = simulate_chain(spec, 5000, seed=99)
    b = simulate_chain(spec, 5000, seed=99)
    assert np.array_equal(a.values, b.values)
    c = simulate_chain(spec, 5000, seed=100)
    assert not np.array_equal(a.values, c.values)


def test_chain_batch_matches_per_rep_streams():
    spec = two_state_chain(0.2, 0.3)
    full = simulate_chain_batch(spec, 200, 8, seed=31)
    # a worker holding replicates 3..7 reproduces exactly its rows
    part = simulate_chain_batch(spec, 200, 5, seed=31, first_rep=3)
    assert np.array_equal(full[3:], part)


def test_chain_stationarity_proxy():
    # law of X_k across replications should not depend on k
    spec = two_state_chain(0.2, 0.3)
    states = simulate_chain_batch(spec, 10, 1000, seed=13)
    for k in (0, 4, 9):
        ones = (states[:, k] == 1).sum()
        chi2 = ((ones - 400.0) ** 2 / 400.0
                + ((1000 - ones) - 600.0) ** 2 / 600.0)
        assert chi2 < stats.chi2.ppf(0.99, df=1)


def test_chain_block_sums_against_direct_path():
    spec = two_state_chain(0.2, 0.3)
    f = np.array([1.0, -1.0])
    g = np.array([0.5, 2.0])
    n = 57
    sums = chain_block_sums(spec, f, g, split=0.4, n=n, reps=3, seed=77)
    states = simulate_chain_batch(spec, n, 3, seed=77)
    k = int(np.floor(n * 0.4))
    direct = f[states[:, :k]].sum(axis=1) + g[states[:, k:]].sum(axis=1)
    assert np.allclose(sums, direct, atol=1e-12)


# ---------------------------------------------------------------------------
# iterated function systems
# ---------------------------------------------------------------------------

def test_ifs_invariant_measure_uniform():
    # T_0(x)=x/2, T_1(x)=x/2+1/2 with equal weights leaves Uniform[0,1]
    # invariant; oracle is the exact uniform CDF
    spec = half_maps_ifs()
    path = simulate_ifs(spec, 100_000, burn_in=1000, seed=3)
    ks = stats.kstest(path.values, "uniform").statistic
    assert ks <= 0.02


def test_ifs_deterministic_contraction():
    spec = IfsSpec(maps=(AffineMap(0.5, 0.0),), probs=(1.0,),
                   domain=np.array([[0.0], [1.0]]))
    path = simulate_ifs(spec, 60, burn_in=0, seed=1, x0=np.array([1.0]))
    bound = 1.0 * 0.5 ** np.arange(1, 61)
    assert (np.abs(path.values) <= bound + 1e-15).all()


def test_ifs_state_dependent_probs():
    # p_0(x) = (1+x)/3 sums with p_1 to 1; oracle = independent plain
    # simulator written out by hand
    spec = IfsSpec(maps=(AffineMap(0.5, 0.0), AffineMap(0.5, 0.5)),
                   probs=(lambda x: (1.0 + float(x[0])) / 3.0,
                          lambda x: 1.0 - (1.0 + float(x[0])) / 3.0),
                   domain=np.array([[0.0], [1.0]]))
    path = simulate_ifs(spec, 40_000, burn_in=1000, seed=17)

    rng = np.random.default_rng(555)
    x = 0.5
    ref = np.empty(40_000)
    for i in range(1000 + 40_000):
        p0 = (1.0 + x) / 3.0
        x = x / 2.0 if rng.random() < p0 else x / 2.0 + 0.5
        if i >= 1000:
            ref[i - 1000] = x
    se = np.sqrt(path.values.var() / path.values.size
                 + ref.var() / ref.size)
    assert abs(path.values.mean() - ref.mean()) <= 3 * se


def test_ifs_prob_validation():
    with pytest.raises(ValidationError):
        IfsSpec(maps=(AffineMap(0.5, 0.0), AffineMap(0.5, 0.5)),
                probs=(0.6, 0.6), domain=np.array([[0.0], [1.0]]))
    with pytest.raises(ValidationError):
        IfsSpec(maps=(), probs=(), domain=np.array([[0.0], [1.0]]))


def test_contraction_average_exact_rates():
    spec = half_maps_ifs()
    probes = sobol_probe_triples(spec, 64, seed=0)
    rep = check_contraction_average(spec, probes)
    assert rep.contracts and abs(rep.rho - 0.5) < 1e-12

    spec9 = IfsSpec(maps=(AffineMap(0.9, 0.0), AffineMap(0.9, 0.1)),
                    probs=(0.5, 0.5), domain=np.array([[0.0], [1.0]]))
    rep9 = check_contraction_average(spec9, sobol_probe_triples(spec9, 64, seed=0))
    assert abs(rep9.rho - 0.9) < 1e-12

    expanding = IfsSpec(maps=(AffineMap(2.0, 0.0),), probs=(1.0,),
                        domain=np.array([[0.0], [1.0]]))
    repx = check_contraction_average(expanding,
                                     sobol_probe_triples(expanding, 64, seed=0))
    assert not repx.contracts and abs(repx.rho - 2.0) < 1e-12


def test_contraction_average_skips_degenerate_probes():
    spec = half_maps_ifs()
    x = np.array([0.3])
    with pytest.warns(UserWarning):
        rep = check_contraction_average(
            spec, [(x, x, x), (np.array([0.1]), np.array([0.9]), x)])
    assert rep.probes_skipped == 1 and rep.probes_used == 1


def test_ifs_condition_report_finite():
    spec = half_maps_ifs()
    rep = ifs_condition_report(spec, sobol_probe_triples(spec, 128, seed=1))
    assert rep.h0 == pytest.approx(0.5, abs=1e-12)
    assert np.isfinite(rep.h1) and np.isfinite(rep.h2)


# ---------------------------------------------------------------------------
# moving averages
# ---------------------------------------------------------------------------

def test_ma_degenerate_is_iid_normal():
    spec = MaSpec(np.array([1.0]), innovation="normal")
    path = simulate_ma(spec, 100_000, seed=2)
    assert abs(path.values.var() - 1.0) <= 0.02


def test_ma_truncated_variance():
    coeffs = 2.0 ** -np.arange(1, 13)
    spec = MaSpec(coeffs, innovation="uniform")
    path = simulate_ma(spec, 200_000, seed=8)
    target = (1.0 / 3.0) * (coeffs ** 2).sum()
    # variance-of-variance oracle for short-memory data: se ~ sqrt(2/n) * var
    se = target * np.sqrt(2.0 / path.n) * 2.0
    assert abs(path.values.var() - target) <= 3 * se


def test_ma_dependence_tail():
    spec = MaSpec(2.0 ** -np.arange(1, 11), innovation="uniform",
                  tail_bound=2.0 ** -10)
    # geometric series: sum_{j>=3} 2^-j = 2^-2
    assert spec.theta_tail(3) == pytest.approx(0.25, abs=1e-15)


def test_ma_determinism():
    spec = MaSpec(np.array([0.5, 0.25]), innovation="rademacher")
    assert np.array_equal(simulate_ma(spec, 1000, 4).values,
                          simulate_ma(spec, 1000, 4).values)


# ---------------------------------------------------------------------------
# expanding maps
# ---------------------------------------------------------------------------

def test_doubling_map_uniform():
    path = simulate_expanding_map("doubling", 100_000, seed=6)
    assert stats.kstest(path.values, "uniform").statistic <= 0.02


def test_tent_map_uniform():
    path = simulate_expanding_map("tent", 100_000, seed=6)
    assert stats.kstest(path.values, "uniform").statistic <= 0.02


def test_expanding_map_fixed_point():
    path = simulate_expanding_map("doubling", 50, seed=0, x0=0.0)
    assert np.all(path.values == 0.0)


def test_tent_map_known_orbit():
    # 0.25 -> 0.5 -> 1 -> 0 (values beyond the window carry a 2^-53 truncation)
    path = simulate_expanding_map("tent", 4, seed=0, x0=0.25)
    assert path.values[0] == pytest.approx(0.25, abs=1e-15)
    assert path.values[1] == pytest.approx(0.5, abs=1e-15)
    assert path.values[2] == pytest.approx(1.0, abs=1e-12)
    assert path.values[3] == pytest.approx(0.0, abs=1e-12)


def test_doubling_does_not_collapse():
    # float iteration of 2x mod 1 hits 0 within ~53 steps; the digit stream
    # must not
    path = simulate_expanding_map("doubling", 10_000, seed=12)
    assert (path.values[100:] > 0).mean() > 0.99


def test_expanding_map_unsupported_id():
    with pytest.raises(ValidationError):
        simulate_expanding_map("logistic", 10, seed=0)


# ---------------------------------------------------------------------------
# stationarity proxy for the other simulators
# ---------------------------------------------------------------------------

def test_ma_stationarity_proxy():
    spec = MaSpec(2.0 ** -np.arange(1, 6), innovation="normal")
    early = np.array([simulate_ma(spec, 12, seed=1000 + r).values[1]
                      for r in range(1000)])
    late = np.array([simulate_ma(spec, 12, seed=1000 + r).values[10]
                     for r in range(1000)])
    assert stats.ks_2samp(early, late).pvalue > 0.01


def test_ifs_stationarity_proxy():
    spec = half_maps_ifs()
    vals = np.array([simulate_ifs(spec, 10, burn_in=1000, seed=5000 + r).values
                     for r in range(1000)])
    assert stats.ks_2samp(vals[:, 0], vals[:, 9]).pvalue > 0.01


# ---------------------------------------------------------------------------
# sample path container
# ---------------------------------------------------------------------------

def test_sample_path_roundtrip(tmp_path):
    path = simulate_chain(two_state_chain(0.2, 0.3), 100, seed=1)
    csv = tmp_path / "p.csv"
    npz = tmp_path / "p.npz"
    path.to_csv(csv)
    path.save_npz(npz)
    loaded = SamplePath.load_npz(npz)
    assert np.array_equal(loaded.values, path.values)
    assert loaded.seed == path.seed and loaded.model_id == path.model_id
    assert np.loadtxt(csv, skiprows=1).shape == (100,)
