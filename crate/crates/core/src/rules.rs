//! Threshold rule engine used as the rule-based baseline.
//!
//! A rule is a conjunction of predicates over named feature columns plus the
//! label it assigns. Rules are ordered by priority, lowest number first.
//! Column names are resolved once in [`RuleSet::bind`]; evaluation itself
//! cannot fail. A predicate on a `NaN` feature is never satisfied.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::nozzle::{Class, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparator {
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    /// Inclusive on both ends.
    Within(f64, f64),
}

impl Comparator {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Comparator::Lt(c) => v < c,
            Comparator::Le(c) => v <= c,
            Comparator::Gt(c) => v > c,
            Comparator::Ge(c) => v >= c,
            Comparator::Within(a, b) => a <= v && v <= b,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparator::Lt(c) => write!(f, "< {c}"),
            Comparator::Le(c) => write!(f, "<= {c}"),
            Comparator::Gt(c) => write!(f, "> {c}"),
            Comparator::Ge(c) => write!(f, ">= {c}"),
            Comparator::Within(a, b) => write!(f, "in[{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub column: String,
    pub cmp: Comparator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub priority: i64,
    pub label: Class,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// The top-priority satisfied rule decides.
    FirstMatch,
    /// Union of the labels of all satisfied rules.
    AllMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    mode: MatchMode,
}

impl RuleSet {
    pub fn new(mut rules: Vec<Rule>, mode: MatchMode) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::RuleConfig("rule set has no rules".into()));
        }
        rules.sort_by_key(|r| r.priority);
        if let Some(w) = rules.windows(2).find(|w| w[0].priority == w[1].priority) {
            return Err(Error::RuleConfig(format!("priority {} is used twice", w[0].priority)));
        }
        for r in &rules {
            if r.label == Class::Other {
                return Err(Error::RuleConfig(format!(
                    "rule {} assigns Other, which is the default label",
                    r.priority
                )));
            }
            if r.predicates.is_empty() {
                return Err(Error::RuleConfig(format!("rule {} has no predicates", r.priority)));
            }
        }
        Ok(RuleSet { rules, mode })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn default_label(&self) -> Class {
        Class::Other
    }

    /// A copy without the rules assigning `label`.
    pub fn without_label(&self, label: Class) -> Result<RuleSet> {
        RuleSet::new(
            self.rules.iter().filter(|r| r.label != label).cloned().collect(),
            self.mode,
        )
    }

    /// Resolves column names against a feature header.
    pub fn bind(&self, columns: &[String]) -> Result<BoundRuleSet> {
        let mut bound = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let mut preds = Vec::with_capacity(r.predicates.len());
            for p in &r.predicates {
                let j = columns.iter().position(|c| *c == p.column).ok_or_else(|| {
                    Error::RuleConfig(format!(
                        "rule {} references unknown column `{}`",
                        r.priority, p.column
                    ))
                })?;
                preds.push((j, p.cmp));
            }
            bound.push((r.label, preds));
        }
        Ok(BoundRuleSet {
            rules: bound,
            mode: self.mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRuleSet {
    rules: Vec<(Class, Vec<(usize, Comparator)>)>,
    mode: MatchMode,
}

impl BoundRuleSet {
    pub fn evaluate(&self, row: &[f64]) -> LabelSet {
        let satisfied = |preds: &[(usize, Comparator)]| preds.iter().all(|(j, c)| c.holds(row[*j]));
        match self.mode {
            MatchMode::FirstMatch => self
                .rules
                .iter()
                .find(|(_, p)| satisfied(p))
                .map_or(LabelSet::single(Class::Other), |(l, _)| LabelSet::single(*l)),
            MatchMode::AllMatch => {
                let bits = self
                    .rules
                    .iter()
                    .filter(|(_, p)| satisfied(p))
                    .fold(0u8, |b, (l, _)| b | (1 << l.index()));
                LabelSet::from_bits(bits).unwrap_or(LabelSet::single(Class::Other))
            }
        }
    }
}
