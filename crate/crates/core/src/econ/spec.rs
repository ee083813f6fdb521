use serde::{Deserialize, Serialize};

use crate::table::{FilterPredicate, RecodeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    Logit,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ols => "ols",
            ModelKind::Logit => "logit",
        })
    }
}

/// One dummy level, either a bare label or a label with its parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Label(String),
    Named { level: String, name: String },
}

impl LevelSpec {
    pub fn level(&self) -> &str {
        match self {
            LevelSpec::Label(l) | LevelSpec::Named { level: l, .. } => l,
        }
    }
}

/// A right-hand-side term. A bare string names a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    Column(String),
    /// Product of columns, e.g. `immigrant × family`.
    Interaction {
        interaction: Vec<String>,
        #[serde(default)]
        name: Option<String>,
    },
    /// One indicator per non-reference level of a categorical column.
    Dummies {
        dummies: String,
        reference: String,
        /// Levels to encode, in order. Defaults to every category except the
        /// reference; when given, any other level in the data is an error.
        #[serde(default)]
        levels: Option<Vec<LevelSpec>>,
        #[serde(default)]
        prefix: String,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub response: String,
    pub kind: ModelKind,
    pub terms: Vec<Term>,
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Applied after the replication-wide filter.
    #[serde(default)]
    pub filter: FilterPredicate,
}

/// Everything needed to rerun a set of regressions on any dataset with the
/// source columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicationSpec {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub recodes: RecodeSpec,
    #[serde(default)]
    pub filter: FilterPredicate,
    pub models: Vec<ModelSpec>,
    /// Heteroskedasticity-robust (HC1) errors for OLS models.
    #[serde(default)]
    pub robust_ols: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_parse() {
        let j = r#"[
            "immigrant",
            {"interaction": ["immigrant", "family"], "name": "immig_family"},
            {"dummies": "industry", "reference": "manuf", "levels": ["agric", {"level": "23", "name": "constr"}]}
        ]"#;
        let t: Vec<Term> = serde_json::from_str(j).unwrap();
        assert_eq!(t[0], Term::Column("immigrant".into()));
        assert!(matches!(&t[1], Term::Interaction { name: Some(n), .. } if n == "immig_family"));
        let Term::Dummies { levels: Some(l), .. } = &t[2] else { panic!() };
        assert_eq!(l[1].level(), "23");
    }
}
