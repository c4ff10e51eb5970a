//! Line-delimited persistence: one JSON object per case, fields in the
//! order `id, kind, context, problem, solution, outcome, use_count,
//! demoted, covered_by`. Floats are written in shortest round-trip form.

use std::path::Path;

use super::{Case, CaseBase, CaseError, CaseKind};
use crate::text::content_lines;

impl CaseBase {
    pub fn to_jsonl(&self) -> String {
        self.cases()
            .iter()
            .map(|c| serde_json::to_string(c).expect("cases serialize") + "\n")
            .collect()
    }

    /// Parses and re-validates every case. Blank and `#` lines are skipped.
    pub fn from_jsonl(text: &str) -> Result<Self, CaseError> {
        let mut base = CaseBase::new();
        for (line, content) in content_lines(text) {
            let fail = |reason: String| CaseError::Line { line, reason };
            let case: Case = serde_json::from_str(content).map_err(|e| fail(e.to_string()))?;
            base.add_case(case).map_err(|e| fail(e.to_string()))?;
        }
        for c in base.cases() {
            if let Some(p) = &c.covered_by {
                if base.get(p).is_none_or(|proto| proto.kind != CaseKind::Prototypical) {
                    return Err(CaseError::Invalid {
                        id: c.id.clone(),
                        reason: format!("covered by {p:?}, which is not a prototype"),
                    });
                }
            }
        }
        Ok(base)
    }

    pub fn save(&self, path: &Path) -> Result<(), CaseError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| CaseError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CaseError> {
        let text = std::fs::read_to_string(path).map_err(|e| CaseError::Io(e.to_string()))?;
        Self::from_jsonl(&text)
    }

    /// Like [`CaseBase::load`], but a missing file is an empty base.
    pub fn load_or_empty(path: &Path) -> Result<Self, CaseError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::snap;
    use super::super::{GeneralizeParams, Solution};
    use super::*;
    use crate::context::GoalClass;

    #[test]
    fn round_trip_with_prototype() {
        let mut b = CaseBase::new();
        for i in 0..5 {
            let s = snap(45.0 + f64::from(i) * 0.013, 26.1, "0.7,0.1,0,0.3");
            b.add_case(Case::point(format!("p{i}"), s, Solution::default())).unwrap();
        }
        b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap().unwrap();
        let text = b.to_jsonl();
        let back = CaseBase::from_jsonl(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_jsonl(), text);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        b.save(&path).unwrap();
        assert_eq!(CaseBase::load(&path).unwrap(), b);
        assert!(CaseBase::load_or_empty(&dir.path().join("none")).unwrap().is_empty());
    }

    #[test]
    fn bad_lines_reported() {
        assert!(matches!(CaseBase::from_jsonl("\n{not json}\n"), Err(CaseError::Line { line: 2, .. })));
        let mut b = CaseBase::new();
        b.add_case(Case::point("a", snap(45.0, 26.0, "1,0,0,0"), Solution::default())).unwrap();
        let line = b.to_jsonl();
        let dup = format!("{line}{line}");
        assert!(matches!(CaseBase::from_jsonl(&dup), Err(CaseError::Line { line: 2, .. })));
        let orphan = line.replace("\"covered_by\":null", "\"covered_by\":\"zz\"");
        assert!(matches!(CaseBase::from_jsonl(&orphan), Err(CaseError::Invalid { .. })));
        let bad_outcome = line.replace("\"outcome\":0.5", "\"outcome\":1.5");
        assert!(CaseBase::from_jsonl(&bad_outcome).is_err());
    }
}
