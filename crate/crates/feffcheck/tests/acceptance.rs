//! The acceptance gate. Ten criteria, each a separate test with the
//! tolerance it must meet baked into the assertions, each printing one
//! summary line so a captured log shows the whole gate at a glance.

use feffcheck::corpus::ENTRIES;
use feffcheck::pipeline::{check_source, Options};
use feffcheck::report::{CheckLine, CheckReport, Verdict};

fn entry(name: &str) -> &'static str {
    ENTRIES
        .iter()
        .find(|&&(n, _)| n == name)
        .map(|&(_, t)| t)
        .unwrap_or_else(|| panic!("no corpus entry {name}"))
}

fn run(name: &str, opt: &Options) -> CheckReport {
    check_source(name, entry(name), opt).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn line<'r>(rep: &'r CheckReport, name: &str) -> &'r CheckLine {
    rep.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check line '{name}'", rep.input))
}

#[test]
fn criterion_01_commutator_curvature_matches_the_closed_formula() {
    for &(name, _) in ENTRIES {
        let rep = run(name, &Options::default());
        let l = line(&rep, "tractor_curvature_formula");
        assert!(
            l.pass && l.residual <= 1e-8,
            "{name}: residual {:e}",
            l.residual
        );
    }
    println!(
        "[PASS] criterion 1: commutator tractor curvature equals the Weyl/Cotton \
         closed formula on every corpus entry (<= 1e-8)"
    );
}

#[test]
fn criterion_02_flat_suite_is_exactly_flat() {
    for name in [
        "flat_null_translation_4d.geom",
        "flat_null_translation_3d.geom",
    ] {
        let rep = run(name, &Options::default());
        for c in &rep.checks {
            assert!(c.pass, "{name}: {} failed", c.name);
            assert!(
                c.residual <= 1e-10,
                "{name}: {} residual {:e}",
                c.name,
                c.residual
            );
        }
        for &v in &rep.lambda.values {
            assert!(v.abs() <= 1e-12, "{name}: lambda {v:e}");
        }
    }
    println!(
        "[PASS] criterion 2: flat (3,1) and (2,1) charts with null translations \
         stay <= 1e-10 on every check with lambda = 0 to 1e-12"
    );
}

#[test]
fn criterion_03_fefferman_positive_case() {
    let rep = run("heisenberg_fefferman.geom", &Options::default());
    for name in [
        "isotropy",
        "conformal_killing",
        "weyl_insertion",
        "cotton_insertion",
        "adjoint_parallelism",
        "omega_pairing_vanishing",
        "complex_trace",
        "gradient_insertion",
        "second_derivative_exchange",
    ] {
        let l = line(&rep, name);
        assert!(l.pass && l.residual <= 1e-8, "{name}: {:e}", l.residual);
    }
    assert!(rep.samples >= 20, "only {} samples", rep.samples);
    assert_eq!(rep.lambda.values.len(), rep.samples);
    assert!(rep.lambda.mean < 0.0, "mean {:e}", rep.lambda.mean);
    assert!(rep.lambda.spread <= 1e-8, "spread {:e}", rep.lambda.spread);
    assert_eq!(rep.verdict, Verdict::FeffermanLocal);
    println!(
        "[PASS] criterion 3: heisenberg_fefferman passes every hypothesis check \
         <= 1e-8, lambda < 0 with spread <= 1e-8 over {} samples, verdict FEFFERMAN_LOCAL",
        rep.samples
    );
}

#[test]
fn criterion_04_rescaling_preserves_lambda_and_verdict() {
    let opt = Options {
        rescale: true,
        ..Options::default()
    };
    let rep = run("heisenberg_fefferman.geom", &opt);
    let rs = rep.rescale.as_ref().expect("rescale record");
    assert!(rs.lambda_shift <= 1e-8, "shift {:e}", rs.lambda_shift);
    assert_eq!(rs.verdict_rescaled, Verdict::FeffermanLocal);
    assert_eq!(rep.verdict, Verdict::FeffermanLocal);
    assert!(rs.agrees);
    assert!(line(&rep, "conformal_invariance").pass);
    println!(
        "[PASS] criterion 4: rescaling by exp(2 x/10) shifts lambda by {:.1e} \
         and keeps the verdict FEFFERMAN_LOCAL",
        rs.lambda_shift
    );
}

#[test]
fn criterion_05_odd_dimension_collapse() {
    let rep = run("flat_null_translation_3d.geom", &Options::default());
    let lam = line(&rep, "odd_lambda_vanishes");
    let nil = line(&rep, "odd_nilpotency");
    let ker = line(&rep, "odd_kernel_nontrivial");
    assert!(lam.pass && lam.residual <= 1e-10, "{:e}", lam.residual);
    assert!(nil.pass && nil.residual <= 1e-10, "{:e}", nil.residual);
    assert!(
        ker.pass && ker.residual == 0.0,
        "samples with trivial kernel: {}",
        ker.residual
    );
    assert_eq!(rep.verdict, Verdict::OddDimNilpotent);
    println!(
        "[PASS] criterion 5: the 3d entry collapses with lambda <= 1e-10, \
         max|s o s| <= 1e-10, and a nontrivial kernel at every sample"
    );
}

#[test]
fn criterion_06_negative_control_fails_loudly() {
    let rep = run("perturbed_flat_negative_control.geom", &Options::default());
    assert_eq!(rep.verdict, Verdict::HypothesesFail);
    let worst = rep
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.residual)
        .fold(0.0f64, f64::max);
    assert!(worst >= 1e-3, "largest failing residual {worst:e}");
    for k in 4..=12 {
        let opt = Options {
            tolerance: 10f64.powi(-k),
            ..Options::default()
        };
        let rep = run("perturbed_flat_negative_control.geom", &opt);
        assert_ne!(
            rep.verdict,
            Verdict::FeffermanLocal,
            "tolerance 1e-{k} let the control through"
        );
    }
    println!(
        "[PASS] criterion 6: the perturbed control is HYPOTHESES_FAIL with a \
         residual >= 1e-3 and never FEFFERMAN_LOCAL for tolerances 1e-4 .. 1e-12"
    );
}

#[test]
fn criterion_07_pointwise_identity_suite() {
    for &(name, _) in ENTRIES {
        let rep = run(name, &Options::default());
        for check in [
            "omega_pairing_identity",
            "cotton_alternation",
            "tractor_curvature_x_insertion",
            "tractor_metric_compatibility",
        ] {
            let l = line(&rep, check);
            assert!(
                l.pass && l.residual <= 1e-8,
                "{name}/{check}: {:e}",
                l.residual
            );
        }
        if rep.dimension >= 4 {
            let l = line(&rep, "weyl_divergence");
            assert!(
                l.pass && l.residual <= 1e-8,
                "{name}/weyl_divergence: {:e}",
                l.residual
            );
        }
    }
    println!(
        "[PASS] criterion 7: the pairing identity, Cotton alternation, Weyl \
         divergence, X insertion, and tractor metric compatibility hold <= 1e-8 \
         on every entry including the negative control"
    );
}

#[test]
fn criterion_08_killing_specialization() {
    let rep = run("sphere_product_4d.geom", &Options::default());
    let l = line(&rep, "killing_specialization");
    assert!(l.pass && l.residual <= 1e-8, "{:e}", l.residual);
    println!(
        "[PASS] criterion 8: on the Killing entry |lambda + kappa^a P_ab kappa^b| \
         = {:.1e} <= 1e-8",
        l.residual
    );
}

#[test]
fn criterion_09_holonomy_probe() {
    let opt = Options {
        holonomy: true,
        ..Options::default()
    };
    let rep = run("heisenberg_fefferman.geom", &opt);
    let hol = rep.holonomy.as_ref().expect("holonomy report");

    let norm = line(&rep, "complex_structure_normalized");
    assert!(norm.pass && norm.residual <= 1e-8, "{:e}", norm.residual);
    for check in [
        "holonomy_metric_invariance",
        "holonomy_complex_commutation",
        "holonomy_complex_determinant",
    ] {
        let l = line(&rep, check);
        assert!(l.pass && l.residual <= 1e-6, "{check}: {:e}", l.residual);
    }
    let mut rated = 0;
    for r in &hol.ratios {
        if let Some(q) = r.ratio {
            assert!((3.5..=4.5).contains(&q), "{}: ratio {q}", r.label);
            rated += 1;
        }
    }
    assert!(rated >= 3, "only {rated} rated halvings");
    assert!(line(&rep, "holonomy_eps_scaling").pass);
    println!(
        "[PASS] criterion 9: all {} transported loops sit in the expected group \
         to 1e-6 and {rated} epsilon halvings scale the defect by ~4",
        hol.loops.len()
    );
}

#[test]
fn criterion_10_selftest_is_deterministic() {
    let exe = env!("CARGO_BIN_EXE_feffcheck");
    let capture = |threads: &str| {
        let out = std::process::Command::new(exe)
            .args(["selftest", "--json", "--threads", threads])
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = capture("1");
    let b = capture("1");
    let c = capture("3");
    assert_eq!(a, b, "repeat runs differ");
    assert_eq!(a, c, "worker count changed the report");
    println!(
        "[PASS] criterion 10: selftest JSON is byte-identical across repeat runs \
         and across worker counts"
    );
}
