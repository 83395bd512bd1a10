//! Equality patterns on first-order parameters and random assignment draws.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::series::Assignment;
use crate::error::{Error, Result};
use crate::numtheory::{diag_gcd, param_keys, split_p1_p2sq, ParamKey};

/// Uniform draw from the closed unit disc.
pub fn unit_disc<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r = rng.random::<f64>().sqrt();
    let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Complex64::from_polar(r, t)
}

/// Independent unit-disc values for every key of dimension `n`, in key order.
pub fn random_assignment<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Assignment {
    param_keys(n).into_iter().map(|k| (k, unit_disc(rng))).collect()
}

/// Source of first-order assignments for a scan.
pub trait AssignmentSampler: Sync {
    fn dim(&self) -> usize;
    fn label(&self) -> String;
    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Assignment>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PatternLabel {
    None,
    TypeI,
    TypeII,
    Custom,
}

impl fmt::Display for PatternLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternLabel::None => "none",
            PatternLabel::TypeI => "typeI",
            PatternLabel::TypeII => "typeII",
            PatternLabel::Custom => "custom",
        })
    }
}

impl FromStr for PatternLabel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(PatternLabel::None),
            "typeI" => Ok(PatternLabel::TypeI),
            "typeII" => Ok(PatternLabel::TypeII),
            "custom" => Ok(PatternLabel::Custom),
            _ => Err(format!("unknown pattern '{s}'")),
        }
    }
}

/// One entry of the custom pattern file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagClasses {
    pub diag: usize,
    pub classes: Vec<Vec<usize>>,
}

/// Partition of first-order keys into equality classes (singletons omitted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintPattern {
    pub n: usize,
    pub label: PatternLabel,
    pub classes: Vec<Vec<ParamKey>>,
}

impl ConstraintPattern {
    pub fn none(n: usize) -> Self {
        ConstraintPattern { n, label: PatternLabel::None, classes: Vec::new() }
    }

    /// Builds and validates a pattern; classes are sorted and singletons dropped.
    pub fn new(n: usize, label: PatternLabel, classes: Vec<Vec<ParamKey>>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for mut class in classes {
            class.sort();
            class.dedup();
            for k in &class {
                if n == 0 || k.diag >= n || k.row_class >= diag_gcd(k.diag, n) {
                    return Err(Error::Domain(format!("{k} is not a key for N = {n}")));
                }
                if k.diag != class[0].diag {
                    return Err(Error::Domain("a class may only join keys of one diagonal".into()));
                }
                if seen.insert(*k, ()).is_some() {
                    return Err(Error::Domain(format!("{k} appears in two classes")));
                }
            }
            if class.len() > 1 {
                out.push(class);
            }
        }
        out.sort();
        Ok(ConstraintPattern { n, label, classes: out })
    }

    /// Parses the JSON list `[{"diag": d, "classes": [[i, ...], ...]}]`.
    pub fn from_custom_json(n: usize, text: &str) -> Result<Self> {
        let entries: Vec<DiagClasses> = serde_json::from_str(text)?;
        let classes = entries
            .into_iter()
            .flat_map(|e| {
                let d = e.diag;
                e.classes.into_iter().map(move |c| c.into_iter().map(|i| ParamKey::new(d, i)).collect())
            })
            .collect();
        Self::new(n, PatternLabel::Custom, classes)
    }

    pub fn to_custom_json(&self) -> Vec<DiagClasses> {
        let mut by_diag: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
        for c in &self.classes {
            by_diag.entry(c[0].diag).or_default().push(c.iter().map(|k| k.row_class).collect());
        }
        by_diag.into_iter().map(|(diag, classes)| DiagClasses { diag, classes }).collect()
    }

    /// Number of independent equalities imposed.
    pub fn conditions(&self) -> usize {
        self.classes.iter().map(|c| c.len() - 1).sum()
    }

    /// Smallest key of the class containing `k`.
    pub fn root(&self, k: ParamKey) -> ParamKey {
        self.classes.iter().find(|c| c.contains(&k)).map_or(k, |c| c[0])
    }

    /// Copies root values onto the other members of each class.
    pub fn enforce(&self, a: &mut Assignment) {
        for c in &self.classes {
            let v = a.get(&c[0]).copied().unwrap_or_default();
            for k in &c[1..] {
                a.insert(*k, v);
            }
        }
    }

    /// Largest violation of the pattern's equalities.
    pub fn violation(&self, a: &Assignment) -> f64 {
        let get = |k: &ParamKey| a.get(k).copied().unwrap_or_default();
        self.classes
            .iter()
            .flat_map(|c| c[1..].iter().map(move |k| (get(k) - get(&c[0])).norm()))
            .fold(0.0, f64::max)
    }
}

impl AssignmentSampler for ConstraintPattern {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        self.label.to_string()
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Assignment> {
        let mut a = Assignment::new();
        for k in param_keys(self.n) {
            let r = self.root(k);
            let v = if r == k { unit_disc(rng) } else { a[&r] };
            a.insert(k, v);
        }
        Ok(a)
    }
}

/// The Type I / Type II patterns for `N = p1·p2²`, or the empty pattern.
pub fn apply_pattern(n: usize, label: PatternLabel) -> Result<ConstraintPattern> {
    let split = || {
        split_p1_p2sq(n as u64)
            .map(|(a, b)| (a as usize, b as usize))
            .ok_or_else(|| Error::Domain(format!("N = {n} is not of the form p1·p2²")))
    };
    match label {
        PatternLabel::None => Ok(ConstraintPattern::none(n)),
        PatternLabel::Custom => Err(Error::Domain("custom patterns are read from a file".into())),
        PatternLabel::TypeI => {
            let (_, p2) = split()?;
            let g = p2 * p2;
            let mut classes = Vec::new();
            for d in (1..n).filter(|&d| diag_gcd(d, n) == g) {
                for t in 0..p2 {
                    classes.push((t..g).step_by(p2).map(|c| ParamKey::new(d, c)).collect());
                }
            }
            ConstraintPattern::new(n, PatternLabel::TypeI, classes)
        }
        PatternLabel::TypeII => {
            let (p1, _) = split()?;
            let classes = (1..n)
                .filter(|&d| diag_gcd(d, n) == p1)
                .map(|d| (0..p1).map(|c| ParamKey::new(d, c)).collect())
                .collect();
            ConstraintPattern::new(n, PatternLabel::TypeII, classes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn k(d: usize, c: usize) -> ParamKey {
        ParamKey::new(d, c)
    }

    #[test]
    fn type_one_n12() {
        let p = apply_pattern(12, PatternLabel::TypeI).unwrap();
        assert_eq!(
            p.classes,
            vec![vec![k(4, 0), k(4, 2)], vec![k(4, 1), k(4, 3)], vec![k(8, 0), k(8, 2)], vec![k(8, 1), k(8, 3)]]
        );
        assert_eq!(p.conditions(), 4);
    }

    #[test]
    fn type_two_n12() {
        let p = apply_pattern(12, PatternLabel::TypeII).unwrap();
        assert_eq!(p.classes, vec![vec![k(3, 0), k(3, 1), k(3, 2)], vec![k(9, 0), k(9, 1), k(9, 2)]]);
        assert_eq!(p.conditions(), 4);
    }

    #[test]
    fn condition_counts() {
        for (n, p1, p2) in [(12usize, 3usize, 2usize), (18, 2, 3), (20, 5, 2), (45, 5, 3), (50, 2, 5)] {
            let want = (p1 - 1) * p2 * (p2 - 1);
            assert_eq!(apply_pattern(n, PatternLabel::TypeI).unwrap().conditions(), want);
            assert_eq!(apply_pattern(n, PatternLabel::TypeII).unwrap().conditions(), want);
        }
        assert!(apply_pattern(10, PatternLabel::TypeI).is_err());
        assert!(apply_pattern(8, PatternLabel::TypeII).is_err());
    }

    #[test]
    fn custom_round_trip_and_validation() {
        let p = ConstraintPattern::from_custom_json(12, r#"[{"diag":4,"classes":[[0,2],[1,3]]}]"#).unwrap();
        assert_eq!(p.conditions(), 2);
        let back = serde_json::to_string(&p.to_custom_json()).unwrap();
        assert_eq!(ConstraintPattern::from_custom_json(12, &back).unwrap(), p);
        assert!(ConstraintPattern::from_custom_json(12, r#"[{"diag":4,"classes":[[0,5]]}]"#).is_err());
        assert!(ConstraintPattern::new(12, PatternLabel::Custom, vec![vec![k(4, 0), k(8, 0)]]).is_err());
        assert!(ConstraintPattern::new(12, PatternLabel::Custom, vec![vec![k(4, 0), k(4, 1)], vec![k(4, 1), k(4, 2)]]).is_err());
    }

    #[test]
    fn sampling_respects_pattern() {
        let p = apply_pattern(18, PatternLabel::TypeII).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let a = p.sample(&mut rng).unwrap();
        assert_eq!(a.len(), param_keys(18).len());
        assert_eq!(p.violation(&a), 0.0);
        assert!(a.values().all(|z| z.norm() <= 1.0));
    }
}
