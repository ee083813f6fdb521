use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    /// Entire interval above the threshold.
    Above,
    /// Entire interval below the threshold.
    Below,
    NotSignificant,
}

impl Significance {
    pub fn of(interval: (f64, f64), threshold: f64) -> Significance {
        if interval.0 > threshold {
            Significance::Above
        } else if interval.1 < threshold {
            Significance::Below
        } else {
            Significance::NotSignificant
        }
    }
}

/// Whether two estimates tell the same qualitative story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualitative {
    BothSignificantSameSign,
    BothInsignificant,
    /// Both significant, on opposite sides of the threshold.
    SignDisagreement,
    /// Significant in one dataset only.
    SignificanceDisagreement,
}

impl Qualitative {
    pub fn agrees(self) -> bool {
        matches!(self, Qualitative::BothSignificantSameSign | Qualitative::BothInsignificant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Lower,
    Higher,
}

/// Closed-interval overlap. `Disjoint` says where the second interval lies
/// relative to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overlap {
    Overlap,
    Disjoint(Direction),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalComparison {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub significance_a: Significance,
    pub significance_b: Significance,
    pub qualitative: Qualitative,
    pub overlap: Overlap,
}

impl IntervalComparison {
    /// Compact label, e.g. `both_significant_same_sign/disjoint_lower`.
    pub fn label(&self) -> String {
        let q = match self.qualitative {
            Qualitative::BothSignificantSameSign => "both_significant_same_sign",
            Qualitative::BothInsignificant => "both_insignificant",
            Qualitative::SignDisagreement => "sign_disagreement",
            Qualitative::SignificanceDisagreement => "significance_disagreement",
        };
        let o = match self.overlap {
            Overlap::Overlap => "overlap",
            Overlap::Disjoint(Direction::Lower) => "disjoint_lower",
            Overlap::Disjoint(Direction::Higher) => "disjoint_higher",
        };
        format!("{q}/{o}")
    }
}

/// Compares two confidence intervals. `threshold` is the null value: 1 for
/// odds ratios, 0 for coefficients.
pub fn ci_overlap_classify(a: (f64, f64), b: (f64, f64), threshold: f64) -> IntervalComparison {
    let sa = Significance::of(a, threshold);
    let sb = Significance::of(b, threshold);
    let qualitative = match (sa, sb) {
        (Significance::NotSignificant, Significance::NotSignificant) => Qualitative::BothInsignificant,
        (Significance::NotSignificant, _) | (_, Significance::NotSignificant) => Qualitative::SignificanceDisagreement,
        (x, y) if x == y => Qualitative::BothSignificantSameSign,
        _ => Qualitative::SignDisagreement,
    };
    let overlap = if b.1 < a.0 {
        Overlap::Disjoint(Direction::Lower)
    } else if a.1 < b.0 {
        Overlap::Disjoint(Direction::Higher)
    } else {
        Overlap::Overlap
    };
    IntervalComparison {
        a,
        b,
        significance_a: sa,
        significance_b: sb,
        qualitative,
        overlap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_odds_ratios() {
        let c = ci_overlap_classify((2.078, 2.385), (1.604, 1.860), 1.0);
        assert_eq!(c.overlap, Overlap::Disjoint(Direction::Lower));
        assert_eq!(c.qualitative, Qualitative::BothSignificantSameSign);
        let c = ci_overlap_classify((1.604, 1.860), (2.078, 2.385), 1.0);
        assert_eq!(c.overlap, Overlap::Disjoint(Direction::Higher));
    }

    #[test]
    fn straddling_one_is_insignificant() {
        assert_eq!(Significance::of((0.858, 1.055), 1.0), Significance::NotSignificant);
        assert_eq!(Significance::of((1.0, 1.2), 1.0), Significance::NotSignificant);
    }

    #[test]
    fn shared_endpoint_overlaps() {
        assert_eq!(ci_overlap_classify((1.0, 2.0), (2.0, 3.0), 0.0).overlap, Overlap::Overlap);
    }

    #[test]
    fn sign_disagreement() {
        let c = ci_overlap_classify((0.1, 0.5), (-0.5, -0.1), 0.0);
        assert_eq!(c.qualitative, Qualitative::SignDisagreement);
        assert_eq!(c.label(), "sign_disagreement/disjoint_lower");
        let c = ci_overlap_classify((0.1, 0.5), (-0.5, 0.2), 0.0);
        assert_eq!(c.qualitative, Qualitative::SignificanceDisagreement);
    }
}
