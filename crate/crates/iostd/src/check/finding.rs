use std::fmt;

use crate::spec::Severity;

/// One analysis finding. The witness, when present, is enough to re-check
/// the finding by hand: a concrete assignment, a message shape, or a
/// trace excerpt.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    /// What the finding is about: a description location, a trace step,
    /// or a configuration digest.
    pub subject: String,
    pub message: String,
    pub witness: Option<String>,
}

impl Finding {
    pub fn error(
        code: &'static str,
        subject: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            severity: Severity::Error,
            code,
            subject: subject.into(),
            message: message.into(),
            witness: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Into<String>) -> Self {
        self.witness = Some(witness.into());
        self
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.severity, self.code, self.subject, self.message
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness={}", w)?;
        }
        Ok(())
    }
}

/// Stable ordering for reports: subject first, then code.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| (&a.subject, a.code).cmp(&(&b.subject, b.code)));
}

/// One line per finding.
pub fn render_lines(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

/// One JSON object per line, fields `severity`, `code`, `subject`,
/// `witness` (and `message`).
pub fn render_json_lines(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        let value = serde_json::json!({
            "severity": f.severity.to_string(),
            "code": f.code,
            "subject": f.subject,
            "message": f.message,
            "witness": f.witness,
        });
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}
