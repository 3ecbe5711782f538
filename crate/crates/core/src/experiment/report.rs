use std::fmt::Write as _;

/// Metrics for one round, measured on the model after aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub main_accuracy: f64,
    pub backdoor_accuracy: f64,
    pub cumulative_mean_backdoor: f64,
    pub adversary_count: usize,
    /// Percentiles of benign update norms before any clipping; `None` when
    /// every slot was adversarial.
    pub benign_norm_p50: Option<f64>,
    pub benign_norm_p90: Option<f64>,
    /// Norm of one attacker's submitted update, before clipping.
    pub attacker_norm: Option<f64>,
}

pub const CSV_HEADER: &str =
    "round,main_acc,backdoor_acc,backdoor_cummean,adversary_count,benign_norm_p50,benign_norm_p90,attacker_norm";

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NaN".to_string(),
    }
}

/// metrics.csv contents. Absent values are written as `NaN`.
pub fn to_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.main_accuracy,
            r.backdoor_accuracy,
            r.cumulative_mean_backdoor,
            r.adversary_count,
            opt(r.benign_norm_p50),
            opt(r.benign_norm_p90),
            opt(r.attacker_norm)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let r = RoundReport {
            round: 3,
            main_accuracy: 0.5,
            backdoor_accuracy: 0.25,
            cumulative_mean_backdoor: 0.125,
            adversary_count: 1,
            benign_norm_p50: Some(1.5),
            benign_norm_p90: Some(2.0),
            attacker_norm: None,
        };
        let csv = to_csv(&[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "3,0.5,0.25,0.125,1,1.5,2,NaN");
    }
}
