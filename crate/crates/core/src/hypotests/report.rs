use std::fmt::Write as _;
use std::time::Duration;

/// Outcome of one test.
///
/// `config` echoes every effective setting, defaults included. Timing is kept
/// out of the rendered forms unless asked for, so reruns with the same seed
/// give identical bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub test: &'static str,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: Option<f64>,
    pub reject: bool,
    pub seed: u64,
    pub config: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl TestReport {
    pub(crate) fn new(
        test: &'static str,
        statistic: f64,
        critical_value: f64,
        p_value: Option<f64>,
        seed: u64,
        config: Vec<(String, String)>,
        elapsed: Duration,
    ) -> Self {
        Self {
            test,
            statistic,
            critical_value,
            p_value,
            reject: statistic > critical_value,
            seed,
            config,
            elapsed,
        }
    }

    pub fn decision(&self) -> &'static str {
        if self.reject {
            "reject"
        } else {
            "retain"
        }
    }

    fn fields(&self, timing: bool) -> Vec<(String, String)> {
        let mut out = vec![
            ("test".to_string(), self.test.to_string()),
            ("statistic".into(), self.statistic.to_string()),
            ("critical_value".into(), self.critical_value.to_string()),
            (
                "p_value".into(),
                self.p_value.map_or_else(|| "NA".into(), |p| p.to_string()),
            ),
            ("decision".into(), self.decision().into()),
            ("seed".into(), self.seed.to_string()),
        ];
        out.extend(self.config.iter().cloned());
        if timing {
            out.push(("elapsed_s".into(), self.elapsed.as_secs_f64().to_string()));
        }
        out
    }

    /// Single-line `key=value` record, space separated.
    pub fn to_record(&self, timing: bool) -> String {
        self.fields(timing)
            .iter()
            .map(|(k, v)| format!("{k}={}", v.replace(' ', "_")))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Aligned human-readable block.
    pub fn to_text(&self, timing: bool) -> String {
        let fields = self.fields(timing);
        let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &fields {
            let _ = writeln!(s, "{k:<width$}  {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_and_rendering() {
        let r = TestReport::new(
            "simple",
            1.5,
            1.25,
            Some(0.01),
            7,
            vec![("kernel".into(), "stable(a=2, gamma=2)".into())],
            Duration::from_millis(30),
        );
        assert!(r.reject);
        let rec = r.to_record(false);
        assert_eq!(
            rec,
            "test=simple statistic=1.5 critical_value=1.25 p_value=0.01 decision=reject seed=7 kernel=stable(a=2,_gamma=2)"
        );
        assert!(!rec.contains('\n'));
        assert!(r.to_record(true).ends_with("elapsed_s=0.03"));
        assert!(r.to_text(false).contains("decision        reject\n"));
        let tie = TestReport::new("simple", 1.0, 1.0, None, 0, vec![], Duration::ZERO);
        assert!(!tie.reject);
        assert!(tie.to_record(false).contains("p_value=NA"));
    }
}
