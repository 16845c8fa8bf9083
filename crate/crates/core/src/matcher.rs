//! Term similarity and requirement matching.
//!
//! `sim` scores two terms through a lexicon of homonym and hyponym relations.
//! The requirement-level metrics aggregate best term matches in both
//! directions. Each sum evaluates `sim` with its first argument taken from the
//! bag being summed over:
//!
//! ```text
//! sa = Σ_{t∈A} max_{u∈B} sim(t,u)      sb = Σ_{u∈B} max_{t∈A} sim(u,t)
//! dice    = (sa + sb) / (|A| + |B|)
//! jaccard = m / (|A| + |B| - m)         with m = (sa + sb) / 2
//! cosine  = m / sqrt(|A|·|B|)
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FeatureId, FeatureModel};
use crate::rational::{decimal, format_decimal, ratio, Rational};
use crate::terms::TermBag;

/// Fractional digits kept when a cosine denominator is irrational.
const SQRT_DIGITS: u32 = 30;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("parameter {name} = {value} must lie strictly between 0 and 1")]
    ParameterRange { name: &'static str, value: String },
    #[error("terms `{0}` and `{1}` are related both as homonyms and by hyponymy")]
    MixedRelation(String, String),
    #[error("hyponymy between `{0}` and `{1}` is declared in both directions")]
    CyclicHyponym(String, String),
    #[error("a term cannot be related to itself: `{0}`")]
    SelfRelation(String),
    #[error("cannot compare an empty term bag")]
    EmptyBag,
    #[error("threshold {name} = {value} must lie in [0, 1]")]
    ThresholdRange { name: &'static str, value: String },
}

/// Term relations and the `a`, `b` parameters of `sim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    a: Rational,
    b: Rational,
    homonyms: BTreeSet<(String, String)>,
    hyponyms: BTreeSet<(String, String)>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon { a: ratio(1, 10), b: ratio(1, 4), homonyms: BTreeSet::new(), hyponyms: BTreeSet::new() }
    }
}

fn check_open_unit(name: &'static str, value: &Rational) -> Result<(), MatchError> {
    if value.is_zero() || *value >= Rational::one() || *value < Rational::zero() {
        return Err(MatchError::ParameterRange { name, value: format_decimal(value) });
    }
    Ok(())
}

fn unordered(t1: &str, t2: &str) -> (String, String) {
    if t1 <= t2 {
        (t1.to_owned(), t2.to_owned())
    } else {
        (t2.to_owned(), t1.to_owned())
    }
}

impl Lexicon {
    pub fn new(a: Rational, b: Rational) -> Result<Self, MatchError> {
        let mut lexicon = Lexicon::default();
        lexicon.set_a(a)?;
        lexicon.set_b(b)?;
        Ok(lexicon)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn set_a(&mut self, a: Rational) -> Result<(), MatchError> {
        check_open_unit("a", &a)?;
        self.a = a;
        Ok(())
    }

    pub fn set_b(&mut self, b: Rational) -> Result<(), MatchError> {
        check_open_unit("b", &b)?;
        self.b = b;
        Ok(())
    }

    pub fn add_homonym(&mut self, t1: &str, t2: &str) -> Result<(), MatchError> {
        if t1 == t2 {
            return Err(MatchError::SelfRelation(t1.to_owned()));
        }
        if self.is_hyponym(t1, t2) || self.is_hyponym(t2, t1) {
            return Err(MatchError::MixedRelation(t1.to_owned(), t2.to_owned()));
        }
        self.homonyms.insert(unordered(t1, t2));
        Ok(())
    }

    /// Records `child` as a hyponym (narrower term) of `parent`.
    pub fn add_hyponym(&mut self, child: &str, parent: &str) -> Result<(), MatchError> {
        if child == parent {
            return Err(MatchError::SelfRelation(child.to_owned()));
        }
        if self.are_homonyms(child, parent) {
            return Err(MatchError::MixedRelation(child.to_owned(), parent.to_owned()));
        }
        if self.is_hyponym(parent, child) {
            return Err(MatchError::CyclicHyponym(child.to_owned(), parent.to_owned()));
        }
        self.hyponyms.insert((child.to_owned(), parent.to_owned()));
        Ok(())
    }

    pub fn are_homonyms(&self, t1: &str, t2: &str) -> bool {
        self.homonyms.contains(&unordered(t1, t2))
    }

    pub fn is_hyponym(&self, child: &str, parent: &str) -> bool {
        self.hyponyms.contains(&(child.to_owned(), parent.to_owned()))
    }

    /// Unordered homonym pairs, each as (smaller, larger).
    pub fn homonyms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.homonyms.iter().map(|(x, y)| (x.as_str(), y.as_str()))
    }

    /// (child, parent) hyponym pairs.
    pub fn hyponyms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.hyponyms.iter().map(|(x, y)| (x.as_str(), y.as_str()))
    }
}

/// Similarity of two normalized terms.
pub fn sim(t1: &str, t2: &str, lexicon: &Lexicon) -> Rational {
    if t1 == t2 {
        Rational::one()
    } else if lexicon.are_homonyms(t1, t2) {
        Rational::one() - &lexicon.a
    } else if lexicon.is_hyponym(t1, t2) {
        Rational::one() - &lexicon.b
    } else if lexicon.is_hyponym(t2, t1) {
        lexicon.b.clone()
    } else {
        Rational::zero()
    }
}

/// `sa + sb` from the module formulas.
fn matched_mass(a: &TermBag, b: &TermBag, lexicon: &Lexicon) -> Result<Rational, MatchError> {
    if a.is_empty() || b.is_empty() {
        return Err(MatchError::EmptyBag);
    }
    let best = |scores: &mut dyn Iterator<Item = Rational>| scores.max().unwrap_or_else(Rational::zero);
    let sa: Rational = a.iter().map(|t| best(&mut b.iter().map(|u| sim(t, u, lexicon)))).sum();
    let sb: Rational = b.iter().map(|u| best(&mut a.iter().map(|t| sim(u, t, lexicon)))).sum();
    Ok(sa + sb)
}

fn size(bag: &TermBag) -> Rational {
    Rational::from_integer(BigInt::from(bag.len()))
}

pub fn dice(a: &TermBag, b: &TermBag, lexicon: &Lexicon) -> Result<Rational, MatchError> {
    Ok(matched_mass(a, b, lexicon)? / (size(a) + size(b)))
}

pub fn jaccard(a: &TermBag, b: &TermBag, lexicon: &Lexicon) -> Result<Rational, MatchError> {
    let m = matched_mass(a, b, lexicon)? / Rational::from_integer(2.into());
    Ok(&m / (size(a) + size(b) - &m))
}

/// Exact when `|A|·|B|` is a perfect square; otherwise the square root is
/// truncated to thirty fractional digits.
pub fn cosine(a: &TermBag, b: &TermBag, lexicon: &Lexicon) -> Result<Rational, MatchError> {
    let m = matched_mass(a, b, lexicon)? / Rational::from_integer(2.into());
    let product = BigInt::from(a.len() * b.len());
    let root = product.sqrt();
    let denominator = if &root * &root == product {
        Rational::from_integer(root)
    } else {
        let scale = BigInt::from(10).pow(SQRT_DIGITS);
        Rational::new((product * &scale * &scale).sqrt(), scale)
    };
    Ok(m / denominator)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Dice,
    Jaccard,
    Cosine,
}

impl Metric {
    pub fn score(self, a: &TermBag, b: &TermBag, lexicon: &Lexicon) -> Result<Rational, MatchError> {
        match self {
            Metric::Dice => dice(a, b, lexicon),
            Metric::Jaccard => jaccard(a, b, lexicon),
            Metric::Cosine => cosine(a, b, lexicon),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Dice => "dice",
            Metric::Jaccard => "jaccard",
            Metric::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dice" => Ok(Metric::Dice),
            "jaccard" => Ok(Metric::Jaccard),
            "cosine" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric `{other}` (expected dice, jaccard or cosine)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Must,
    Want,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StakeholderRequirement {
    pub id: String,
    pub terms: TermBag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Priority>,
}

/// Thresholds deciding how a requirement's best score is classified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(rename = "threshold", with = "decimal")]
    pub matched: Rational,
    #[serde(with = "decimal")]
    pub gap: Rational,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { matched: ratio(1, 2), gap: ratio(1, 10) }
    }
}

impl Thresholds {
    pub fn new(matched: Rational, gap: Rational) -> Result<Self, MatchError> {
        for (name, value) in [("threshold", &matched), ("gap", &gap)] {
            if *value < Rational::zero() || *value > Rational::one() {
                return Err(MatchError::ThresholdRange { name, value: format_decimal(value) });
            }
        }
        Ok(Thresholds { matched, gap })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchEntry {
    pub requirement: String,
    pub feature: FeatureId,
    pub metric: Metric,
    #[serde(with = "decimal")]
    pub score: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classification {
    Matched {
        feature: FeatureId,
    },
    /// Candidates in feature declaration order.
    Ambiguous {
        features: Vec<FeatureId>,
    },
    Unmatched,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RequirementOutcome {
    pub requirement: String,
    #[serde(flatten)]
    pub classification: Classification,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub metric: Metric,
    #[serde(with = "decimal")]
    pub a: Rational,
    #[serde(with = "decimal")]
    pub b: Rational,
    #[serde(flatten)]
    pub thresholds: Thresholds,
    /// Sorted by requirement id, descending score, feature id.
    pub entries: Vec<MatchEntry>,
    /// One outcome per requirement, in input order.
    pub classification: Vec<RequirementOutcome>,
}

impl MatchReport {
    pub fn outcome(&self, requirement: &str) -> Option<&Classification> {
        self.classification.iter().find(|o| o.requirement == requirement).map(|o| &o.classification)
    }

    /// Text form: a parameter header, one line per scored pair, then one
    /// classification line per requirement.
    pub fn render(&self) -> String {
        let mut out = format!(
            "# metric {} a {} b {} threshold {} gap {}\n",
            self.metric,
            format_decimal(&self.a),
            format_decimal(&self.b),
            format_decimal(&self.thresholds.matched),
            format_decimal(&self.thresholds.gap)
        );
        for e in &self.entries {
            out.push_str(&format!("{} {} {} {}\n", e.requirement, e.feature, e.metric, format_decimal(&e.score)));
        }
        for o in &self.classification {
            let verdict = match &o.classification {
                Classification::Matched { feature } => format!("matched {feature}"),
                Classification::Ambiguous { features } => {
                    let names: Vec<&str> = features.iter().map(FeatureId::as_str).collect();
                    format!("ambiguous {}", names.join(" "))
                }
                Classification::Unmatched => "unmatched (capitalization candidate)".to_owned(),
            };
            out.push_str(&format!("{} -> {verdict}\n", o.requirement));
        }
        out
    }
}

/// Scores every requirement against every feature with a non-empty term bag
/// and classifies each requirement by its best score.
pub fn match_requirements(
    requirements: &[StakeholderRequirement],
    model: &FeatureModel,
    lexicon: &Lexicon,
    metric: Metric,
    thresholds: &Thresholds,
) -> Result<MatchReport, MatchError> {
    let features: Vec<(&FeatureId, TermBag)> =
        model.features().iter().map(|f| (&f.id, f.term_bag())).filter(|(_, bag)| !bag.is_empty()).collect();
    let mut entries = Vec::new();
    let mut classification = Vec::new();
    for req in requirements {
        let scores = features
            .iter()
            .map(|(id, bag)| Ok((*id, metric.score(&req.terms, bag, lexicon)?)))
            .collect::<Result<Vec<(&FeatureId, Rational)>, MatchError>>()?;
        let best = scores.iter().map(|(_, s)| s).max().cloned();
        let verdict = match best {
            Some(best) if best >= thresholds.matched => {
                let close: Vec<FeatureId> = scores
                    .iter()
                    .filter(|(_, s)| *s == best || &best - s < thresholds.gap)
                    .map(|(f, _)| (*f).clone())
                    .collect();
                match <[FeatureId; 1]>::try_from(close) {
                    Ok([feature]) => Classification::Matched { feature },
                    Err(features) => Classification::Ambiguous { features },
                }
            }
            _ => Classification::Unmatched,
        };
        classification.push(RequirementOutcome { requirement: req.id.clone(), classification: verdict });
        entries.extend(scores.into_iter().map(|(feature, score)| MatchEntry {
            requirement: req.id.clone(),
            feature: feature.clone(),
            metric,
            score,
        }));
    }
    entries.sort_by(|x, y| {
        x.requirement.cmp(&y.requirement).then_with(|| y.score.cmp(&x.score)).then_with(|| x.feature.cmp(&y.feature))
    });
    Ok(MatchReport {
        metric,
        a: lexicon.a.clone(),
        b: lexicon.b.clone(),
        thresholds: thresholds.clone(),
        entries,
        classification,
    })
}
