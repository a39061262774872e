//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! All Monte Carlo runs use seed 7. Exit status is nonzero if any line fails.

use std::time::{Duration, Instant};

use dirichlet_lab::density::{log_rho, rho1_closed_form};
use dirichlet_lab::operator_lab::{
    assemble_1d, assemble_3d, detailed_balance_check, mosco::mosco_with, mosco_refinement, resolvent_checks,
    spectrum, TestFunction,
};
use dirichlet_lab::sampler::Truncation;
use dirichlet_lab::simulate::{stationarity_report, KS_THRESHOLD};
use dirichlet_lab::verify::{
    cross_validate_samplers, norm_growth_target, verify_bound41, verify_eq4, verify_ibp_catalog, verify_mean_identity,
    verify_sdf_pair, IdentityReport,
};
use dirichlet_lab::{BaseWeights, Params, SimplexPoint};

const SEED: u64 = 7;

struct Gate {
    failures: usize,
    lines: usize,
}

impl Gate {
    fn line(&mut self, id: &str, pass: bool, msg: impl AsRef<str>) {
        self.lines += 1;
        if !pass {
            self.failures += 1;
        }
        println!("[{}] {id:>3} {}", if pass { "PASS" } else { "FAIL" }, msg.as_ref());
    }

    fn identity(&mut self, id: &str, r: &IdentityReport) {
        let ess = r.ess.map(|e| format!(" ess={e:.0}")).unwrap_or_default();
        self.line(
            id,
            r.pass,
            format!(
                "{} d={} theta={}: estimate={:.6} stderr={:.2e} target={:.6} |z|={:.2} (<= {}) n={}{ess}",
                r.name,
                r.d,
                r.theta,
                r.estimate,
                r.stderr,
                r.target,
                r.z.abs(),
                r.z_threshold,
                r.n
            ),
        );
    }

    fn error(&mut self, id: &str, what: &str, e: impl std::fmt::Display) {
        self.line(id, false, format!("{what}: error {e}"));
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn c1_c2(g: &mut Gate) {
    for d in [3, 7] {
        let t = Instant::now();
        match verify_sdf_pair(d, 1_000_000, SEED) {
            Ok((r3, r4)) => {
                let el = secs(t.elapsed());
                g.identity("1", &r3);
                g.line("1", el < 60.0, format!("sdf3/sdf4 d={d} runtime {el:.2}s (< 60s)"));
                g.identity("2", &r4.expect("d >= 2"));
            }
            Err(e) => g.error("1", "sdf", e),
        }
    }
}

fn c3(g: &mut Gate) {
    for k in 1..=3 {
        match verify_eq4(k, 1_000_000, SEED) {
            Ok(r) => g.identity("3", &r),
            Err(e) => g.error("3", "eq4", e),
        }
    }
    let targets: Vec<f64> = (1..=4).map(norm_growth_target).collect();
    let increasing = targets.windows(2).all(|w| w[1] > w[0]);
    g.line("3", increasing, format!("norm growth 2^(2k-5)/(2^k+2), k=1..4: {targets:?} strictly increasing"));
}

fn c4(g: &mut Gate) {
    let t = Instant::now();
    let base = BaseWeights::symmetric(1).unwrap();
    let mut worst = 0.0f64;
    for theta in [0.0, 0.5, 2.0] {
        let params = Params::new(theta).unwrap();
        for k in 1..=200 {
            let x = k as f64 / 201.0;
            let ours = log_rho(&SimplexPoint::new(vec![x]).unwrap(), &base, &params).unwrap().density();
            let exact = rho1_closed_form(x, &params).unwrap();
            worst = worst.max((ours - exact).abs() / exact);
        }
    }
    let el = secs(t.elapsed());
    g.line("4", worst < 1e-10 && el < 1.0, format!("rho_1 vs Beta density, 200 points x 3 thetas: max rel err {worst:.2e} (< 1e-10), {el:.3}s (< 1s)"));
}

fn c5(g: &mut Gate) {
    for theta in [0.0, 0.5, 2.0] {
        let t = Instant::now();
        match spectrum(&Params::new(theta).unwrap(), 2000, 5) {
            Ok(r) => {
                let el = secs(t.elapsed());
                let worst = r.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
                let computed: Vec<String> = r.rows.iter().map(|r| format!("{:.5}", r.computed)).collect();
                let targets: Vec<f64> = r.rows.iter().map(|r| r.target).collect();
                g.line(
                    "5",
                    r.pass && el < 10.0,
                    format!(
                        "spectrum theta={theta}: [{}] vs {targets:?}, max rel err {worst:.2e} (< 1e-2); zero {:.1e}, constant defect {:.1e}; {el:.2}s (< 10s)",
                        computed.join(", "),
                        r.zero_eigenvalue,
                        r.constant_defect
                    ),
                );
            }
            Err(e) => g.error("5", "spectrum", e),
        }
    }
}

fn c6(g: &mut Gate) {
    for d in 1..=3 {
        for theta in [0.0, 0.7] {
            let base = BaseWeights::symmetric(d).unwrap();
            match verify_ibp_catalog(&base, &Params::new(theta).unwrap(), 1_000_000, SEED) {
                Ok(rs) => rs.iter().for_each(|r| g.identity("6", r)),
                Err(e) => g.error("6", "ibp", e),
            }
        }
    }
}

fn c7(g: &mut Gate) {
    for d in [1, 3] {
        let base = BaseWeights::symmetric(d).unwrap();
        match cross_validate_samplers(&base, Truncation::default(), 100_000, SEED) {
            Ok(rs) => rs.iter().for_each(|r| g.identity("7", r)),
            Err(e) => g.error("7", "cross validation", e),
        }
    }
    let base = BaseWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
    match verify_mean_identity(&base, &Params::new(1.0).unwrap(), 100_000, SEED) {
        Ok(rs) => rs.iter().for_each(|r| g.identity("7", r)),
        Err(e) => g.error("7", "mean identity", e),
    }
}

fn c8(g: &mut Gate) {
    let base = BaseWeights::symmetric(1).unwrap();
    for theta in [0.5, 1.0] {
        let t = Instant::now();
        match stationarity_report(&base, &Params::new(theta).unwrap(), 10_000, 1.0, 1e-4, SEED) {
            Ok(r) => {
                let el = secs(t.elapsed());
                let ks = r.ks_terminal.unwrap_or(f64::NAN);
                g.line(
                    "8",
                    r.pass && ks < KS_THRESHOLD && el < 300.0,
                    format!(
                        "stationarity theta={theta}: terminal KS {ks:.4} (< {KS_THRESHOLD}), initial KS {:.4}, {} paths, dt=1e-4, T=1; {el:.1}s (< 300s)",
                        r.ks_initial.unwrap_or(f64::NAN),
                        r.n_paths
                    ),
                );
            }
            Err(e) => g.error("8", "stationarity", e),
        }
    }
}

fn c9_to_c11(g: &mut Gate) {
    let params = Params::new(0.0).unwrap();
    let t = Instant::now();
    let fm1 = assemble_1d(&params, 2000).unwrap();
    let fm3 = match assemble_3d(&params, 16) {
        Ok(fm) => fm,
        Err(e) => return g.error("9", "assemble_3d", e),
    };
    let assembly = secs(t.elapsed());

    for (name, fm) in [("d=1, 2000 cells", &fm1), ("d=3, h=1/16", &fm3)] {
        let b = detailed_balance_check(fm);
        g.line(
            "9",
            b.pass,
            format!("{name}: stiffness asymmetry {:.1e}, mass asymmetry {:.1e} (< 1e-12); mass defect {:.1e}", b.stiffness, b.mass, fm.mass_defect),
        );
    }

    let betas = [0.5, 1.0, 2.0];
    let f1 = fm1.interpolate(|x| (std::f64::consts::PI * x[0]).cos() + x[0] * x[0]);
    let f3 = fm3.interpolate(|x| (std::f64::consts::PI * (x[0] + x[1])).cos() + x[2] * x[2]);
    for (name, fm, f) in [("d=1", &fm1, &f1), ("d=3", &fm3, &f3)] {
        match resolvent_checks(fm, &betas, f) {
            Ok(r) => g.line(
                "10",
                r.pass,
                format!(
                    "resolvent {name}, beta in {betas:?}: max |beta G F|/|F| {:.6} (<= 1), identity defect {:.1e} (< 1e-8)",
                    r.max_contraction_ratio, r.max_identity_defect
                ),
            ),
            Err(e) => g.error("10", "resolvent", e),
        }
    }

    let t = Instant::now();
    for f in TestFunction::CATALOG {
        match mosco_with(&fm1, &fm3, 1.0, f) {
            Ok(r) => g.line(
                "11",
                r.pass,
                format!(
                    "mosco {}: a_1={:.6} a_2={:.6} gap={:+.2e} (a_1 <= a_2 + {}), energy gap {:.2e}, (F,F) rel diff {:.1e}",
                    f.name(),
                    r.a_1,
                    r.a_2,
                    r.gap,
                    r.tolerance,
                    r.energy_gap,
                    r.norm_rel_diff
                ),
            ),
            Err(e) => g.error("11", "mosco", e),
        }
    }
    match mosco_refinement(&params, 1.0, TestFunction::Linear, 2000, &[8, 16]) {
        Ok(tr) => {
            let el = secs(t.elapsed()) + assembly;
            g.line(
                "11",
                el < 600.0,
                format!(
                    "mosco trend linear: a_2 over h=1/8,1/16 {:?}, Richardson {:.6}, a_1 {:.6}; {el:.1}s (< 600s)",
                    tr.a_2,
                    tr.extrapolated.unwrap_or(f64::NAN),
                    tr.a_1
                ),
            );
        }
        Err(e) => g.error("11", "mosco trend", e),
    }
}

fn c12(g: &mut Gate) {
    for theta in [0.0, 1.0] {
        match verify_bound41(0.5, &Params::new(theta).unwrap(), 1, &[3, 7, 15], 1_000_000, SEED) {
            Ok(r) => {
                let rescaled: Vec<String> = r.rows.iter().map(|row| format!("d={}:{:.4}", row.d, row.rescaled)).collect();
                g.line(
                    "12",
                    r.pass,
                    format!(
                        "bound41 geometric q=0.5 i=1 theta={theta}: rescaled [{}], spread {:.3} (< {})",
                        rescaled.join(", "),
                        r.spread,
                        r.max_spread
                    ),
                );
            }
            Err(e) => g.error("12", "bound41", e),
        }
    }
}

fn main() {
    let mut g = Gate { failures: 0, lines: 0 };
    let t = Instant::now();
    c1_c2(&mut g);
    c3(&mut g);
    c4(&mut g);
    c5(&mut g);
    c6(&mut g);
    c7(&mut g);
    c8(&mut g);
    c9_to_c11(&mut g);
    c12(&mut g);
    println!("acceptance: {} checks, {} failed, {:.1}s", g.lines, g.failures, secs(t.elapsed()));
    if g.failures > 0 {
        std::process::exit(1);
    }
}
