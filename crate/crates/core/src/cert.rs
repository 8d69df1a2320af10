//! Outcome records for sampled verifications.

use serde::{Deserialize, Serialize};

/// Result of checking a property over a finite sample.
///
/// `margin` is the worst (smallest) observed slack; the certificate passes
/// when every sample had slack above `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub grid: String,
    pub samples: usize,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(name: impl Into<String>, grid: impl Into<String>, tolerance: f64) -> Self {
        Certificate {
            name: name.into(),
            grid: grid.into(),
            samples: 0,
            margin: f64::INFINITY,
            tolerance,
            pass: true,
            worst_point: None,
            notes: Vec::new(),
        }
    }

    /// Record one sample with the given slack. NaN slack counts as failure.
    pub fn record(&mut self, slack: f64, point: &[f64]) {
        self.samples += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if slack < self.margin {
            self.margin = slack;
            self.worst_point = Some(point.to_vec());
        }
        if slack <= self.tolerance {
            self.pass = false;
        }
    }

    /// Force a failure with an explanatory note.
    pub fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Combine two certificates over disjoint samples of the same property.
    pub fn merge(mut self, other: Certificate) -> Certificate {
        self.samples += other.samples;
        if other.margin < self.margin {
            self.margin = other.margin;
            self.worst_point = other.worst_point;
        }
        self.pass = self.pass && other.pass;
        self.notes.extend(other.notes);
        self
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "[{}] {} ({} samples, margin {:.3e}, tol {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.margin,
            self.tolerance
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_tracks_worst() {
        let mut c = Certificate::new("t", "g", 0.0);
        c.record(1.0, &[1.0]);
        c.record(0.5, &[2.0]);
        c.record(2.0, &[3.0]);
        assert!(c.pass);
        assert_eq!(c.samples, 3);
        assert_eq!(c.margin, 0.5);
        assert_eq!(c.worst_point, Some(vec![2.0]));
        c.record(-1.0, &[4.0]);
        assert!(!c.pass);
    }

    #[test]
    fn nan_fails() {
        let mut c = Certificate::new("t", "g", 0.0);
        c.record(f64::NAN, &[0.0]);
        assert!(!c.pass);
    }

    #[test]
    fn merge_is_associative_on_margin() {
        let mk = |m: f64| {
            let mut c = Certificate::new("t", "g", 0.0);
            c.record(m, &[m]);
            c
        };
        let a = mk(3.0).merge(mk(1.0)).merge(mk(2.0));
        let b = mk(3.0).merge(mk(1.0).merge(mk(2.0)));
        assert_eq!(a.margin, b.margin);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.worst_point, b.worst_point);
    }
}
