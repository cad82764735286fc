//! Acceptance run: one line per criterion. Tolerances are restated here and
//! applied to the report values, independent of the builtins' own flags.

use g2forms::cli::builtins;
use g2forms::cli::report::Report;
use g2forms::cli::scenario::Settings;
use std::process::ExitCode;
use std::time::Instant;

enum Want {
    Below(f64),
    Above(f64),
}

struct Criterion {
    builtin: &'static str,
    budget: Option<f64>,
    checks: &'static [(&'static str, Want)],
}

use Want::{Above, Below};

const CRITERIA: [Criterion; 15] = [
    Criterion {
        builtin: "model-calibration",
        budget: Some(1.0),
        checks: &[
            ("complex_structure_deviation", Below(1e-12)),
            ("rho_tilde_vs_im_dz123", Below(1e-12)),
            ("metric_deviation", Below(1e-12)),
            ("phi0_norm_squared", Below(1e-10)),
        ],
    },
    Criterion {
        builtin: "variation-formulas",
        budget: Some(10.0),
        checks: &[("delta_vol_max_rel_error", Below(1e-5)), ("delta_rho_tilde_max_rel_error", Below(1e-5))],
    },
    Criterion {
        builtin: "s6-curvature-identities",
        budget: Some(60.0),
        checks: &[
            ("upper_id1_residual", Below(1e-3)),
            ("upper_id2_residual", Below(1e-3)),
            ("lower_id1_residual", Below(1e-3)),
            ("lower_id2_residual", Below(1e-3)),
            ("upper_halving_ratio_minus_4", Below(0.5)),
            ("lower_halving_ratio_minus_4", Below(0.5)),
        ],
    },
    Criterion {
        builtin: "s6-mean-curvature-bound",
        budget: Some(60.0),
        checks: &[
            ("sphere_mu_deviation", Below(1e-3)),
            ("sphere_det22_deviation", Below(0.5)),
            ("sphere_slack", Below(1e-3)),
            ("ellipsoid_min_slack", Above(0.05)),
        ],
    },
    Criterion {
        builtin: "ball-volume-bound",
        budget: Some(120.0),
        checks: &[("ball_ratio_minus_1", Below(0.01)), ("ellipsoid_slack", Above(0.0))],
    },
    Criterion {
        builtin: "off-type-corpus",
        budget: None,
        checks: &[
            ("torus_su2_off_type", Below(1e-5)),
            ("torus_su2_perturbed_off_type", Below(1e-5)),
            ("baraglia_s2_off_type", Below(1e-5)),
            ("s6_off_type", Below(1e-5)),
        ],
    },
    Criterion {
        builtin: "s2-surface-identity",
        budget: None,
        checks: &[("identity_residual", Below(1e-3)), ("max_abs_det22", Below(1e-8))],
    },
    Criterion {
        builtin: "torus-coframe",
        budget: None,
        checks: &[("sigma_roundtrip", Below(1e-12)), ("s_asymmetry", Below(1e-8)), ("rho_tilde_closed_form_mismatch", Below(1e-8))],
    },
    Criterion {
        builtin: "maximal-solver",
        budget: Some(300.0),
        checks: &[
            ("affine_sup_error", Below(1e-10)),
            ("p2_order_33_minus_2", Below(0.3)),
            ("p2_order_65_minus_2", Below(0.3)),
            ("p3_order_17_minus_2", Below(0.3)),
            ("p3_order_33_minus_2", Below(0.3)),
            ("perturbations_not_decreasing_volume", Below(0.5)),
        ],
    },
    Criterion {
        builtin: "b3-maximal-volume",
        budget: None,
        checks: &[("lhs_relative_error", Below(0.01)), ("rhs_relative_error", Below(0.01))],
    },
    Criterion {
        builtin: "baraglia-torsion",
        budget: None,
        checks: &[("solved_torsion", Below(1e-3)), ("perturbed_to_solved_ratio", Above(10.0))],
    },
    Criterion {
        builtin: "cylinder-product",
        budget: None,
        checks: &[("data1_product_deviation", Below(1e-7)), ("data2_product_deviation", Below(1e-7))],
    },
    Criterion {
        builtin: "mollified-jump",
        budget: None,
        checks: &[("closedness", Below(1e-8)), ("positivity_margin", Above(0.0)), ("deviation_outside_collar", Below(1e-15))],
    },
    Criterion {
        builtin: "phi-eps-family",
        budget: None,
        checks: &[
            ("admissible_min_margin", Above(0.0)),
            ("zero_epsilon_margin_at_origin", Below(1e-10)),
            ("boundary_mismatch", Below(1e-15)),
        ],
    },
    Criterion {
        builtin: "taming-threshold",
        budget: None,
        checks: &[("a_star_minus_1", Below(1e-6)), ("cobordism_flow_residual", Below(1e-5))],
    },
];

fn judge(c: &Criterion, report: &Report) -> Result<(), String> {
    for (name, want) in c.checks {
        let check = report.checks.iter().find(|k| k.name == *name).ok_or_else(|| format!("missing check {name}"))?;
        let v = check.value;
        let ok = match want {
            Below(t) => v < *t,
            Above(t) => v > *t,
        };
        if !ok {
            return Err(format!("{name} = {v:e}"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let settings = Settings::default();
    let mut failures = 0;
    let mut first_runs = Vec::new();
    for (i, c) in CRITERIA.iter().enumerate() {
        assert!(builtins::find(c.builtin).is_some(), "unknown builtin {}", c.builtin);
        let start = Instant::now();
        let result = g2forms::cli::run_builtin_json(c.builtin, &settings);
        let secs = start.elapsed().as_secs_f64();
        let verdict = match &result {
            Err(e) => Err(format!("error: {e}")),
            Ok(json) => {
                let report: Report = serde_json::from_str(json).expect("report parses");
                judge(c, &report).and_then(|_| match c.budget {
                    Some(b) if secs > b => Err(format!("runtime {secs:.1}s over {b}s")),
                    _ => Ok(()),
                })
            }
        };
        match verdict {
            Ok(()) => println!("criterion {:>2} {:<26} PASS ({secs:.2}s)", i + 1, c.builtin),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} {:<26} FAIL {why} ({secs:.2}s)", i + 1, c.builtin);
            }
        }
        first_runs.push(result.ok());
    }
    let mut mismatched = Vec::new();
    for (c, first) in CRITERIA.iter().zip(&first_runs) {
        let again = g2forms::cli::run_builtin_json(c.builtin, &settings).ok();
        if first.is_none() || *first != again {
            mismatched.push(c.builtin);
        }
    }
    if mismatched.is_empty() {
        println!("criterion 16 {:<26} PASS", "determinism");
    } else {
        failures += 1;
        println!("criterion 16 {:<26} FAIL differing reports: {}", "determinism", mismatched.join(", "));
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
