//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Thresholds are pinned here and re-applied to the metrics reported by
//! `landau_core::verify`, so a drift in the library constants cannot loosen them.

use std::collections::BTreeMap;
use std::process::ExitCode;

use landau_core::verify::{run_criterion, Criterion, CriterionOutcome, VerifySettings};

const EPS_PENROSE: [f64; 4] = [0.0, 0.02, 0.05, 0.1];

fn get(m: &BTreeMap<String, f64>, key: &str) -> f64 {
    *m.get(key).unwrap_or_else(|| panic!("metric {key} missing"))
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn recheck(o: &CriterionOutcome) -> Result<(), String> {
    let m = &o.metrics;
    let fail = |why: String| Err(why);
    match o.criterion {
        Criterion::PenroseCondition => {
            for model in ["lb", "fp"] {
                let c0 = get(m, &format!("{model}_c0"));
                let r2 = get(m, &format!("{model}_r2"));
                if r2 < 0.95 {
                    return fail(format!("{model}: R² {r2} < 0.95"));
                }
                let m0 = get(m, &format!("{model}_margin_0"));
                for e in EPS_PENROSE {
                    let v = get(m, &format!("{model}_margin_{e}"));
                    if v < 0.05 {
                        return fail(format!("{model}: margin {v} < 0.05 at ε = {e}"));
                    }
                    if v < m0 - c0 * e - 1e-4 {
                        return fail(format!("{model}: margin {v} below linear envelope at ε = {e}"));
                    }
                }
            }
        }
        Criterion::KernelCloseness => {
            for model in ["lb", "fp"] {
                let p = get(m, &format!("{model}_exponent"));
                let r2 = get(m, &format!("{model}_r2"));
                if !in_range(p, 0.8, 1.2) || r2 < 0.99 {
                    return fail(format!("{model}: exponent {p}, R² {r2}"));
                }
            }
        }
        Criterion::VolterraOrder => {
            for key in ["order_coarse", "order_fine"] {
                if get(m, key) < 1.9 {
                    return fail(format!("{key} = {}", get(m, key)));
                }
            }
            for dt in [0.1, 0.05, 0.025] {
                let err = get(m, &format!("constant_rel_error_{dt}"));
                let bound = 0.5 * dt * dt * 2.0 * (0.5f64 * 2.0).exp();
                if err > bound {
                    return fail(format!("constant kernel error {err} > {bound} at dt = {dt}"));
                }
            }
        }
        Criterion::VolterraVsKinetic => {
            for model in ["lb", "fp"] {
                for e in [0.0, 0.05] {
                    let d = get(m, &format!("{model}_deviation_{e}"));
                    if d > 1e-3 {
                        return fail(format!("{model} ε = {e}: deviation {d}"));
                    }
                }
            }
        }
        Criterion::DensityDecay => {
            if get(m, "bounded") != 1.0 || get(m, "trailing_growth") >= 0.05 {
                return fail("envelope not bounded".into());
            }
            if get(m, "algebraic_exponent") < 3.7 {
                return fail(format!("exponent {}", get(m, "algebraic_exponent")));
            }
        }
        Criterion::HomogeneousLinearBoltzmann => {
            if get(m, "relative_error") > 1e-10 {
                return fail(format!("relative error {}", get(m, "relative_error")));
            }
            if (get(m, "probe_rate") - 0.07).abs() > 1e-6 {
                return fail(format!("rate {}", get(m, "probe_rate")));
            }
        }
        Criterion::EnhancedDecay => {
            if get(m, "bounded") != 1.0 || get(m, "trailing_growth") >= 0.05 {
                return fail("envelope not bounded".into());
            }
        }
        Criterion::ModeEstimates => {
            for model in ["lb", "fp"] {
                for xi in [0.5, 1.0, 2.0, 4.0] {
                    let g = get(m, &format!("{model}_growth_xi_{xi}"));
                    if g >= 0.05 {
                        return fail(format!("{model} ξ = {xi}: growth {g}"));
                    }
                }
                let r = get(m, &format!("{model}_scaling_ratio"));
                if r > 3.0 {
                    return fail(format!("{model}: scaling ratio {r}"));
                }
            }
        }
        Criterion::HomogeneousFokkerPlanck => {
            for e in [0.05, 0.1] {
                let err = get(m, &format!("max_error_{e}"));
                let ratio = get(m, &format!("rate_over_eps_{e}"));
                if err > 1e-8 || ratio < 0.8 {
                    return fail(format!("ε = {e}: error {err}, rate/ε {ratio}"));
                }
            }
        }
        Criterion::Uniformity => {
            for model in ["lb", "fp"] {
                let p = get(m, &format!("{model}_exponent"));
                if !in_range(p, 0.8, 1.2) {
                    return fail(format!("{model}: exponent {p}"));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let settings = VerifySettings::default();
    let mut failed = 0;
    for c in Criterion::ALL {
        let label = format!("criterion {:>2}: {}", c.number(), c.title());
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let verdict = match run_criterion(c, &settings) {
            Ok(o) => match (o.passed, recheck(&o)) {
                (true, Ok(())) => Ok(format!("{} [{:.1}s]", o.detail, o.seconds)),
                (_, Err(why)) => Err(format!("{why}; {}", o.detail)),
                (false, Ok(())) => Err(format!("library verdict failed; {}", o.detail)),
            },
            Err(e) => Err(format!("error: {e}")),
        };
        match verdict {
            Ok(d) => println!("PASS {label} :: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {label} :: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
