//! Pass/fail rules for the comparative studies.

use serde::Serialize;

use super::studies::EvalOutcome;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Check { passed, detail }
    }
}

fn frac(n: usize, d: usize) -> String {
    format!("{n}/{d}")
}

/// Compares one baseline against the complete engine on the same scenario.
pub fn baseline_check(b: &EvalOutcome, full: &EvalOutcome) -> Check {
    let recall = frac(b.recalled, b.probes);
    let full_recall = frac(full.recalled, full.probes);
    match b.system.as_str() {
        "fifo" => Check::new(
            b.recalled < full.recalled,
            format!("recall {recall} < full {full_recall}"),
        ),
        "vector" => Check::new(
            b.recalled <= full.recalled && b.ltm_size > full.ltm_size,
            format!("recall {recall} <= full {full_recall}, size {} > {}", b.ltm_size, full.ltm_size),
        ),
        "noforget" => Check::new(
            b.recalled == full.recalled && b.ltm_size > full.ltm_size,
            format!("recall {recall} = full {full_recall}, size {} > {}", b.ltm_size, full.ltm_size),
        ),
        _ => Check::new(b.recalled == b.probes, format!("recall {recall}")),
    }
}

/// Expected direction of each ablation relative to the complete engine.
pub fn ablation_check(component: &str, a: &EvalOutcome, full: &EvalOutcome) -> Check {
    let noise = frac(a.noise_retained, a.noise_total);
    match component {
        "forget" | "tagger" => Check::new(
            a.noise_retained == a.noise_total,
            format!("noise retained {noise}, expected all"),
        ),
        "wm_limit" => Check::new(
            a.noise_retained > full.noise_retained,
            format!("noise retained {noise} > full {}", full.noise_retained),
        ),
        "self" => Check::new(
            a.recalled == full.recalled && a.noise_retained == full.noise_retained,
            format!(
                "recall {} = full {}, noise {noise} = full {}",
                frac(a.recalled, a.probes),
                frac(full.recalled, full.probes),
                full.noise_retained
            ),
        ),
        "rem" => Check::new(
            a.recalled == full.recalled && a.ltm_size >= full.ltm_size,
            format!(
                "recall {} = full {}, size {} >= {}",
                frac(a.recalled, a.probes),
                frac(full.recalled, full.probes),
                a.ltm_size,
                full.ltm_size
            ),
        ),
        _ => Check::new(true, format!("recall {}, noise retained {noise} (no directional rule)", frac(a.recalled, a.probes))),
    }
}

/// Without forgetting: strictly increasing and within 10% of 5.5 per cycle.
/// With forgetting: the last five counts spread by at most 10% of the peak.
pub fn growth_check(series: &[usize], forgetting: bool) -> Check {
    let Some(&last) = series.last() else {
        return Check::new(false, "empty series".into());
    };
    if forgetting {
        let tail = &series[series.len().saturating_sub(5)..];
        let (lo, hi) = (tail.iter().min().unwrap(), tail.iter().max().unwrap());
        let peak = *series.iter().max().unwrap();
        let spread = hi - lo;
        Check::new(
            spread as f64 <= 0.1 * peak as f64,
            format!("last-5 spread {spread} vs peak {peak} (limit {:.1})", 0.1 * peak as f64),
        )
    } else {
        let target = 5.5 * series.len() as f64;
        let increasing = series.windows(2).all(|w| w[1] > w[0]);
        let near = (last as f64 - target).abs() <= 0.1 * target;
        Check::new(
            increasing && near,
            format!("final {last} vs {target:.0} +/-10%, strictly increasing: {increasing}"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(system: &str, recalled: usize, size: usize, noise: usize) -> EvalOutcome {
        EvalOutcome {
            system: system.into(),
            recalled,
            probes: 22,
            ltm_size: size,
            noise_retained: noise,
            noise_total: 50,
        }
    }

    #[test]
    fn baseline_directions() {
        let full = eval("full", 22, 50, 20);
        assert!(baseline_check(&eval("fifo", 8, 7, 0), &full).passed);
        assert!(!baseline_check(&eval("fifo", 22, 7, 0), &full).passed);
        assert!(baseline_check(&eval("vector", 22, 73, 50), &full).passed);
        assert!(!baseline_check(&eval("noforget", 22, 50, 20), &full).passed);
        assert!(baseline_check(&full, &full).passed);
    }

    #[test]
    fn growth_rules() {
        let off: Vec<usize> = (1..=20).map(|i| (5.5 * i as f64) as usize + 1).collect();
        assert!(growth_check(&off, false).passed);
        assert!(!growth_check(&[5, 5, 6], false).passed);
        assert!(growth_check(&[3, 8, 10, 10, 10, 10, 10], true).passed);
        assert!(!growth_check(&[2, 4, 6, 8, 10], true).passed);
        assert!(!growth_check(&[], true).passed);
    }
}
