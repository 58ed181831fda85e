//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{connected_sum, dense_ground_state, miniature_grid};
use tfim_lab::entanglement::{
    entanglement_entropy, entropy_of_block, report_for, schmidt_spectrum_from, Side,
};
use tfim_lab::experiment::{
    fit_slope, run_entropy_scan, run_mc_compare, run_transfer_bounds, ExperimentConfig,
};
use tfim_lab::ground_state::{ground_state, GroundStateResult};
use tfim_lab::kp::{build_ledger, cluster_inventory, kp_check_ln, search_parameters, tree_bound, DEGREE};
use tfim_lab::lattice::{random_profile, FieldLaw, Lattice};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Lattices `(m, L)` with `n = 2m + L + 1` in `1..=max_n`.
fn lattices(max_n: usize) -> Vec<Lattice> {
    let mut v = Vec::new();
    for m in 0..max_n {
        for l in 0..max_n {
            if 2 * m + l < max_n {
                v.push(Lattice::new(m, l));
            }
        }
    }
    v
}

fn criterion_1() -> Outcome {
    let shapes = lattices(8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_e, mut worst_v) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let lattice = shapes[i % shapes.len()];
        let j = rng.random_range(0.0..2.0);
        let law = FieldLaw::Uniform { a: 0.1, b: 3.0 };
        let profile = random_profile(lattice, rng.random(), law, j).unwrap();
        let g = ground_state(&profile, 1e-12).unwrap();
        let (e0, v0) = dense_ground_state(&profile);
        let sign = if g.amplitudes.iter().zip(&v0).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let dv = g.amplitudes.iter().zip(&v0).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
        worst_e = worst_e.max((g.energy - e0).abs());
        worst_v = worst_v.max(dv);
    }
    outcome(
        worst_e <= 1e-10 && worst_v <= 1e-8,
        format!("50 profiles, n <= 8: max |dE| = {worst_e:.2e}, max |dpsi| = {worst_v:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_zero = 0.0f64;
    for lattice in [Lattice::new(1, 2), Lattice::new(2, 3), Lattice::new(3, 1)] {
        let p = random_profile(lattice, rng.random(), FieldLaw::Uniform { a: 0.2, b: 2.0 }, 0.0).unwrap();
        worst_zero = worst_zero.max(entropy_of_block(&p, 1e-12).unwrap().entropy_bits.abs());
    }

    // Site -1 in |+>, sites 0 and 1 in (|++> + |-->)/sqrt 2; block = {0}.
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![0.0; 8];
    amps[0b000] = r;
    amps[0b110] = r;
    let bell = GroundStateResult {
        lattice: Lattice::new(1, 0),
        energy: 0.0,
        amplitudes: amps,
        residual: 0.0,
        iterations: 0,
        warnings: vec![],
    };
    let bell_bits = report_for(&bell).unwrap().entropy_bits;

    let shapes = lattices(12);
    let mut worst_sym = 0.0f64;
    for i in 0..20 {
        let lattice = shapes[(7 * i + 3) % shapes.len()];
        let p = random_profile(lattice, rng.random(), FieldLaw::Uniform { a: 0.2, b: 2.0 }, rng.random_range(0.5..2.0))
            .unwrap();
        let g = ground_state(&p, 1e-12).unwrap();
        let a = entanglement_entropy(&schmidt_spectrum_from(&g, Side::Block).unwrap());
        let b = entanglement_entropy(&schmidt_spectrum_from(&g, Side::Environment).unwrap());
        worst_sym = worst_sym.max((a - b).abs());
    }
    outcome(
        worst_zero <= 1e-9 && (bell_bits - 1.0).abs() <= 1e-9 && worst_sym <= 1e-9,
        format!("J=0 max S = {worst_zero:.1e}; Bell S = {bell_bits:.12}; max |S_block - S_env| = {worst_sym:.1e}"),
    )
}

fn scan_config(profile: &str) -> ExperimentConfig {
    let text = format!("scenario = \"entropy-scan\"\n{profile}\n[scan]\nm = [3]\nL = {{ from = 1, to = 11 }}\nmax_n = 18\n");
    ExperimentConfig::from_toml(&text).unwrap()
}

fn scan_slope(profile: &str) -> f64 {
    let table = run_entropy_scan(&scan_config(profile), None, 4).unwrap();
    assert!(table.summary.failures.is_empty());
    fit_slope(&table.rows).unwrap()
}

fn criterion_3() -> Outcome {
    let bounded = scan_slope("[[profiles]]\nid = \"h2\"\nJ = 1.0\nfamily = \"homogeneous\"\nh = 2.0");
    let critical = scan_slope("[[profiles]]\nid = \"h0.5\"\nJ = 1.0\nfamily = \"homogeneous\"\nh = 0.5");
    let periodic = scan_slope("[[profiles]]\nid = \"p2\"\nJ = 1.0\nfamily = \"periodic\"\nvalues = [0.3, 8.0]");
    outcome(
        bounded <= 0.05 && critical >= 0.2 && periodic <= 0.05,
        format!(
            "m=3, L=1..11: slope h=2 {bounded:.4} (<= 0.05), h=0.5 {critical:.4} (>= 0.2), period-2 (0.3, 8) {periodic:.4} (<= 0.05)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let text = r#"
scenario = "mc-compare"
seed = 20240601
[[profiles]]
id = "pair"
J = 1.0
family = "homogeneous"
h = 1.0
[mc]
m = 0
L = 1
beta = [2.0, 4.0, 8.0]
sweeps = 1000000
burn_in = 1000
"#;
    let report = run_mc_compare(&ExperimentConfig::from_toml(text).unwrap(), 4).unwrap();
    let last = report.comparisons.last().unwrap();
    let tv: Vec<String> = report.comparisons.iter().map(|c| format!("{:.2e}", c.tv_distance)).collect();
    let tv_exact: Vec<String> =
        report.comparisons.iter().map(|c| format!("{:.2e}", c.tv_finite_beta.unwrap())).collect();
    outcome(
        last.pass && report.tv_decreasing && report.tv_finite_beta_decreasing == Some(true),
        format!(
            "n=2, beta=8, 1e6 sweeps: max |z| = {:.2}; TV along beta 2,4,8 = [{}] (exact finite-beta [{}])",
            last.max_abs_z,
            tv.join(", "),
            tv_exact.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let text = r#"
scenario = "transfer-bounds"
seed = 5
[transfer]
clusters = 200
max_len = 4
C1 = 0.5
field_ratio = 10.0
J = 1.0
s_min = 0.5
s_max = 8.0
fk_checks = 10
fk_samples = 200000
"#;
    let r = run_transfer_bounds(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
    outcome(
        r.eigenvalue_violations == 0
            && r.max_semigroup_error <= 1e-10
            && r.max_symmetry_error <= 1e-10
            && r.feynman_kac_failures == 0,
        format!(
            "200 clusters: {} eigenvalue-bound violations, semigroup {:.1e}, symmetry {:.1e}, Feynman-Kac {}/{} within 3 sigma",
            r.eigenvalue_violations,
            r.max_semigroup_error,
            r.max_symmetry_error,
            r.feynman_kac.len() - r.feynman_kac_failures,
            r.feynman_kac.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut certified = 0;
    let mut worst_ln_c2 = 0.0f64;
    let mut certificates = Vec::new();
    for c1 in [0.1, 0.5, 1.0] {
        for k in 1..=3 {
            for j in [0.1, 0.5] {
                let spectra = cluster_inventory(j, c1, k).unwrap();
                let out = search_parameters(j, c1, k, &spectra).unwrap();
                if let Some(cert) = out.certificate.filter(|c| out.found && c.valid) {
                    let ln_c2 = cert.bounds.unwrap().ln_c2;
                    if ln_c2.is_finite() {
                        certified += 1;
                        worst_ln_c2 = worst_ln_c2.max(ln_c2);
                    }
                    certificates.push((spectra, cert));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut monotone_failures = 0;
    for _ in 0..100 {
        if certificates.is_empty() {
            break;
        }
        let (spectra, cert) = &certificates[rng.random_range(0..certificates.len())];
        let mut bounds = cert.bounds.unwrap();
        bounds.ln_c2 += rng.random_range(0.0..100.0);
        let ledger = build_ledger(&bounds, &cert.grid.unwrap(), spectra).unwrap();
        if !kp_check_ln(&ledger, cert.ln_theta, cert.eta).valid {
            monotone_failures += 1;
        }
    }

    let mut enumeration_violations = 0;
    let grids = [
        (vec![false, false, false], 1, 4),
        (vec![false, true, false], 2, 4),
        (vec![true, false, true], 4, 4),
        (vec![false, true, false, false], 3, 3),
    ];
    for (long, q, horizon) in grids {
        let adj = miniature_grid(&long, q, horizon);
        let degree = adj.iter().map(Vec::len).max().unwrap();
        for eta in [0.005, 0.02, 0.04] {
            for d in [degree, DEGREE.max(degree)] {
                if let Some(bound) = tree_bound(eta, d) {
                    enumeration_violations += (0..adj.len()).filter(|&r| connected_sum(&adj, r, eta) > bound).count();
                }
            }
        }
    }
    outcome(
        certified == 18 && monotone_failures == 0 && enumeration_violations == 0,
        format!(
            "{certified}/18 grid points certified (largest ln C2 = {worst_ln_c2:.1}); {monotone_failures} C2-monotonicity failures in 100 draws; {enumeration_violations} tree-bound violations"
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tfim-lab")).current_dir(dir).args(args).output().unwrap()
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let configs = [
        (
            "scan.toml",
            "scenario = \"entropy-scan\"\n[[profiles]]\nid = \"a\"\nJ = 1.0\nfamily = \"random\"\na = 0.3\nb = 2.0\nseed = 4\n\
             [[profiles]]\nid = \"b\"\nJ = 1.0\nfamily = \"periodic\"\nvalues = [0.3, 8.0]\n[scan]\nm = [1, 2]\nL = { from = 1, to = 5 }\n",
        ),
        (
            "mc.toml",
            "scenario = \"mc-compare\"\nseed = 9\n[[profiles]]\nid = \"p\"\nJ = 1.0\nfamily = \"homogeneous\"\nh = 1.0\n\
             [mc]\nm = 0\nL = 2\nbeta = [2.0, 4.0]\nsweeps = 20000\nburn_in = 100\n",
        ),
        (
            "tb.toml",
            "scenario = \"transfer-bounds\"\nseed = 3\n[transfer]\nclusters = 20\nmax_len = 3\nC1 = 0.5\nfield_ratio = 10.0\n\
             J = 1.0\ns_min = 0.5\ns_max = 8.0\nfk_checks = 2\nfk_samples = 2000\n",
        ),
        ("kp.toml", "scenario = \"kp-search\"\n[kp]\nJ = 0.5\nC1 = 0.5\nK = 2\n"),
    ];
    for (name, text) in configs {
        std::fs::write(d.join(name), text).unwrap();
    }
    let runs: [(&str, &str, Vec<&str>); 4] = [
        ("entropy-scan", "scan.toml", vec!["out.csv", "out.summary.json"]),
        ("mc-compare", "mc.toml", vec!["out.json"]),
        ("transfer-bounds", "tb.toml", vec!["out.json"]),
        ("kp-search", "kp.toml", vec!["out.json"]),
    ];
    let mut mismatches = Vec::new();
    for (cmd, config, files) in runs {
        let mut outputs = Vec::new();
        for workers in ["1", "3"] {
            let out_file = if cmd == "entropy-scan" { "out.csv" } else { "out.json" };
            let flag = if cmd == "kp-search" { "--certificate-out" } else { "--out" };
            let status = run_cli(d, &[cmd, "--config", config, flag, out_file, "--workers", workers]);
            if !status.status.success() {
                mismatches.push(format!("{cmd} exited with {:?}", status.status.code()));
            }
            outputs.push(files.iter().map(|f| std::fs::read(d.join(f)).unwrap_or_default()).collect::<Vec<_>>());
        }
        if outputs[0] != outputs[1] || outputs[0].iter().any(|b| b.is_empty()) {
            mismatches.push(cmd.to_string());
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "all four scenarios byte-identical across reruns (1 and 3 workers)".to_string()
        } else {
            format!("differences: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence (ED)", criterion_1),
        ("2 entropy identities", criterion_2),
        ("3 regime discrimination", criterion_3),
        ("4 path-integral consistency", criterion_4),
        ("5 transfer-matrix bounds", criterion_5),
        ("6 KP certificate existence", criterion_6),
        ("7 determinism", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let r = check();
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {} [{:.1}s]", r.detail, start.elapsed().as_secs_f64());
        if !r.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
