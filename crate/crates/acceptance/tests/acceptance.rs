//! Acceptance criteria at the default configuration (s = 1/2, x_max = 40,
//! 8192 nodes, grading 3). One PASS/FAIL line per criterion; exits non-zero
//! if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use watsonlab::verify::{reports_json, run_many, run_suite, SuiteConfig, SuiteReport};

struct Check<'a> {
    reports: &'a BTreeMap<String, SuiteReport>,
    notes: Vec<String>,
    ok: bool,
}

impl<'a> Check<'a> {
    fn new(reports: &'a BTreeMap<String, SuiteReport>) -> Self {
        Self { reports, notes: Vec::new(), ok: true }
    }

    fn metric(mut self, suite: &str, name: &str) -> Self {
        let m = self.reports[suite].metrics[name];
        self.ok &= m.passed();
        let cmp = match m.comparison {
            watsonlab::verify::Comparison::AtMost => "<=",
            watsonlab::verify::Comparison::AtLeast => ">=",
        };
        let mark = if m.passed() { "" } else { " (!)" };
        self.notes.push(format!("{name}={:.3e}{cmp}{:.1e}{mark}", m.value, m.tolerance));
        self
    }

    fn finish(self, n: usize, title: &str, failures: &mut usize) {
        if !self.ok {
            *failures += 1;
        }
        println!(
            "criterion {n}: {} {title}: {}",
            if self.ok { "PASS" } else { "FAIL" },
            self.notes.join(", ")
        );
    }
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let names = ["bruhat", "pitt", "q-unitarity", "phi", "psi", "full-unitarity", "prop21"];
    let first = run_many(&names, &cfg).expect("suites run");
    let watson = run_suite("watson", &SuiteConfig { refine: 2, ..cfg.clone() }).expect("watson runs");

    let mut reports: BTreeMap<String, SuiteReport> =
        first.iter().cloned().map(|r| (r.suite.clone(), r)).collect();
    reports.insert("watson".into(), watson);

    let mut failures = 0;
    Check::new(&reports).metric("bruhat", "max_roundtrip_err").finish(1, "Bruhat round trip", &mut failures);

    let mut c = Check::new(&reports);
    for f in ["lambda", "mu", "phi", "psi"] {
        c = c.metric("q-unitarity", &format!("closed_norm_err_{f}")).metric("q-unitarity", &format!("conj_norm_err_{f}"));
    }
    c.finish(2, "upper-triangular unitarity", &mut failures);

    Check::new(&reports)
        .metric("watson", "involution_err")
        .metric("watson", "intertwine_err")
        .metric("watson", "phi_fixed_err")
        .metric("watson", "involution_err@refine1")
        .metric("watson", "refine_increases")
        .finish(3, "Watson properties", &mut failures);

    Check::new(&reports)
        .metric("full-unitarity", "norm_err")
        .metric("full-unitarity", "homomorphism_err")
        .finish(4, "full unitarity", &mut failures);

    Check::new(&reports)
        .metric("phi", "two_route_err")
        .metric("phi", "phi0_err")
        .metric("phi", "phi1_boundary_err")
        .metric("psi", "fd_err")
        .metric("psi", "fd_order")
        .finish(5, "special functions", &mut failures);

    Check::new(&reports)
        .metric("pitt", "lambda_ratio_err")
        .metric("pitt", "dilation_sweep_max_over_lambda")
        .finish(6, "Pitt ratio", &mut failures);

    Check::new(&reports)
        .metric("prop21", "phi_orbit_unitarity")
        .metric("prop21", "phi_orbit_involution")
        .metric("prop21", "mixed_phi_psi_rel_imag")
        .metric("prop21", "mixed_phi_psi_unitarity")
        .metric("prop21", "analytic_agreement")
        .finish(7, "finite Watson construction", &mut failures);

    Check::new(&reports)
        .metric("prop21", "reality_phi")
        .metric("prop21", "reality_psi")
        .finish(8, "correlation reality", &mut failures);

    // a second run with a different thread count must serialize identically
    let second = run_many(&names, &SuiteConfig { jobs: cfg.jobs % 3 + 1, ..cfg.clone() }).expect("suites run");
    let same = reports_json(&cfg, &first, false) == reports_json(&cfg, &second, false);
    if !same {
        failures += 1;
    }
    println!(
        "criterion 9: {} determinism: JSON reports of two runs are {}",
        if same { "PASS" } else { "FAIL" },
        if same { "byte-identical" } else { "different" }
    );

    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
