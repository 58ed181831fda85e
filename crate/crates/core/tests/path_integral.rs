use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use tfim_lab::ground_state::{ground_state, ground_state_marginal, SpinConfig};
use tfim_lab::lattice::{FieldProfile, Lattice};
use tfim_lab::spinflip::{estimate_marginal, estimate_marginal_with, EndpointLaw, MarginalOptions};

fn ed_marginal(profile: &FieldProfile) -> BTreeMap<SpinConfig, f64> {
    let g = ground_state(profile, 1e-12).unwrap();
    let all: Vec<i64> = profile.lattice().sites().collect();
    ground_state_marginal(&g, &all).unwrap()
}

#[test]
fn zero_coupling_is_uniform_chi_square() {
    let p = FieldProfile::new(Lattice::new(0, 1), vec![0.7, 1.9], 0.0).unwrap();
    let e = estimate_marginal(&p, 3.0, 100_000, 0, 5).unwrap();
    assert_eq!(e.samples, 100_000);
    let expected = e.samples as f64 / 4.0;
    let chi2: f64 = e.counts.values().map(|&n| (n as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi2 {chi2} p {p_value}");
}

#[test]
fn single_site_is_symmetric() {
    let p = FieldProfile::homogeneous(Lattice::new(0, 0), 0.8, 1.0).unwrap();
    let e = estimate_marginal(&p, 4.0, 50_000, 100, 9).unwrap();
    let plus = SpinConfig(vec![1]);
    assert!((e.estimate[&plus] - 0.5).abs() <= 4.0 * e.std_error[&plus]);
}

#[test]
fn spin_inversion_symmetry() {
    let p = FieldProfile::new(Lattice::new(0, 1), vec![0.6, 1.4], 1.0).unwrap();
    let e = estimate_marginal(&p, 4.0, 200_000, 1000, 21).unwrap();
    for (c, &r) in &e.estimate {
        let flipped = SpinConfig(c.0.iter().map(|s| -s).collect());
        let sigma = (e.std_error[c].powi(2) + e.std_error[&flipped].powi(2)).sqrt();
        assert!((r - e.estimate[&flipped]).abs() <= 4.0 * sigma, "{c}");
    }
}

#[test]
fn two_site_marginal_matches_exact_ground_state() {
    let p = FieldProfile::new(Lattice::new(0, 1), vec![1.0, 1.0], 1.0).unwrap();
    let exact = ed_marginal(&p);
    let e = estimate_marginal(&p, 8.0, 200_000, 1000, 42).unwrap();
    for (c, &r) in &exact {
        let z = (e.estimate[c] - r) / e.std_error[c];
        assert!(z.abs() <= 4.0, "{c}: mc {} ed {r} z {z}", e.estimate[c]);
    }
}

#[test]
fn distance_to_ground_state_shrinks_with_beta() {
    let p = FieldProfile::homogeneous(Lattice::new(1, 1), 2.0, 1.0).unwrap();
    let exact = ed_marginal(&p);
    let tv: Vec<f64> = [0.5, 2.0, 8.0]
        .iter()
        .map(|&b| estimate_marginal(&p, b, 100_000, 500, 3).unwrap().tv_distance(&exact))
        .collect();
    assert!(tv[1] < tv[0] && tv[2] < tv[0], "{tv:?}");
    assert!(tv[2] < 0.01, "{tv:?}");
}

#[test]
fn perron_endpoints_agree_with_free_endpoints_at_large_beta() {
    let p = FieldProfile::new(Lattice::new(1, 1), vec![3.0, 0.5, 0.5, 3.0], 1.0).unwrap();
    let d = tfim_lab::lattice::decompose_clusters(&p, 1.0).unwrap();
    let exact = ed_marginal(&p);
    let free = estimate_marginal(&p, 8.0, 60_000, 500, 1).unwrap();
    let opts = MarginalOptions { law: EndpointLaw::perron(&p, &d).unwrap(), ..Default::default() };
    let perron = estimate_marginal_with(&p, 8.0, 60_000, 500, 1, opts).unwrap();
    assert!(free.tv_distance(&exact) < 0.03);
    assert!(perron.tv_distance(&exact) < 0.03);
}

#[test]
fn feynman_kac_reproduces_transfer_entries() {
    use tfim_lab::transfer::{transfer, ClusterBlock, CouplingSign};
    for (fields, j, s, sign) in [
        (vec![0.7], 0.5, 1.0, CouplingSign::Ferromagnetic),
        (vec![0.4, 0.9], 1.0, 1.5, CouplingSign::Ferromagnetic),
        (vec![0.4, 0.9, 0.6], 0.8, 0.7, CouplingSign::Antiferromagnetic),
    ] {
        let block = ClusterBlock::new(fields, j).unwrap().with_sign(sign);
        let g = transfer(&block, s).unwrap();
        for (from, to) in [(0, 0), (0, 1), (1, block.dim() - 1)] {
            let (mean, err) = tfim_lab::spinflip::feynman_kac_entry(&block, s, from, to, 200_000, 17);
            let exact = g.matrix[(to, from)];
            assert!((mean - exact).abs() <= 3.0 * err + 1e-12, "{from}->{to}: {mean} ± {err} vs {exact}");
        }
    }
}

#[test]
fn finite_beta_oracle_matches_sampler_and_converges() {
    use tfim_lab::spinflip::finite_beta_marginal;
    let p = FieldProfile::new(Lattice::new(0, 2), vec![0.8, 0.5, 1.3], 1.0).unwrap();
    let exact = ed_marginal(&p);
    let mut previous = f64::INFINITY;
    for beta in [0.5, 1.0, 2.0, 4.0] {
        let r = finite_beta_marginal(&p, beta).unwrap();
        assert!((r.values().sum::<f64>() - 1.0).abs() < 1e-12);
        let tv = 0.5 * r.iter().map(|(c, x)| (x - exact[c]).abs()).sum::<f64>();
        assert!(tv < previous);
        previous = tv;
        let e = estimate_marginal(&p, beta, 100_000, 500, 8).unwrap();
        for (c, &x) in &r {
            let z = (e.estimate[c] - x) / e.std_error[c];
            assert!(z.abs() <= 4.0, "beta {beta} {c}: {z}");
        }
    }
    assert!(finite_beta_marginal(&p, 60.0).unwrap().iter().all(|(c, x)| (x - exact[c]).abs() < 1e-10));
}
