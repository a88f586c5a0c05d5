//! Fact base and inference over (model, scheduler) pairs.
//!
//! Only two primitives are stored: `Dominates(X, Y)` (X ≥ Y: every task
//! solvable in Y is solvable in X) and `Separates(X, Y, p)` (problem p is
//! solvable in X but not in Y). The closure rules are
//!
//! * D(X, Y) ∧ D(Y, Z) ⇒ D(X, Z)
//! * S(X, Y, p) ∧ D(X′, X) ⇒ S(X′, Y, p)
//! * S(X, Y, p) ∧ D(Y, Y′) ⇒ S(X, Y′, p)
//!
//! and >, ≡, ⊥ are read off the closed set.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::engine::Model;
use crate::schedulers::SchedulerKind;

const FACTS_JSON: &str = include_str!("../data/facts.json");
const CLAIMS_JSON: &str = include_str!("../data/claims.json");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationsError {
    #[error("cannot parse {0:?} as MODEL^SCHEDULER")]
    ParseModelSched(String),
    #[error("invalid fact: {0}")]
    InvalidFact(String),
    #[error("fact file: {0}")]
    Json(String),
}

/// A model under a scheduler, written `FSTA^A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelSched {
    pub model: Model,
    pub sched: SchedulerKind,
}

impl ModelSched {
    pub fn new(model: Model, sched: SchedulerKind) -> Self {
        ModelSched { model, sched }
    }

    pub fn all() -> Vec<ModelSched> {
        let scheds = [SchedulerKind::Fsync, SchedulerKind::Ssync, SchedulerKind::Async];
        Model::ALL
            .iter()
            .flat_map(|&m| scheds.iter().map(move |&s| ModelSched::new(m, s)))
            .collect()
    }
}

impl fmt::Display for ModelSched {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sched {
            SchedulerKind::Fsync => "F",
            SchedulerKind::Ssync => "S",
            SchedulerKind::Async => "A",
        };
        write!(f, "{}^{s}", self.model.name())
    }
}

impl FromStr for ModelSched {
    type Err = RelationsError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || RelationsError::ParseModelSched(text.to_string());
        let (m, s) = text.trim().split_once(['^', '-', '_']).ok_or_else(err)?;
        let model = m.parse::<Model>().map_err(|_| err())?;
        let sched = s.parse::<SchedulerKind>().map_err(|_| err())?;
        Ok(ModelSched { model, sched })
    }
}

impl Serialize for ModelSched {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelSched {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The logical content of a fact, without provenance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactKey {
    Dominates {
        x: ModelSched,
        y: ModelSched,
    },
    Separates {
        x: ModelSched,
        y: ModelSched,
        problem: String,
    },
}

impl fmt::Display for FactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactKey::Dominates { x, y } => write!(f, "{x} ≥ {y}"),
            FactKey::Separates { x, y, problem } => write!(f, "{problem} ∈ {x} \\ {y}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    #[serde(flatten)]
    pub key: FactKey,
    pub provenance: String,
    /// Established by this work rather than imported or axiomatic.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub contribution: bool,
}

impl Fact {
    pub fn dominates(x: ModelSched, y: ModelSched, provenance: &str) -> Fact {
        Fact {
            key: FactKey::Dominates { x, y },
            provenance: provenance.to_string(),
            contribution: false,
        }
    }

    pub fn separates(x: ModelSched, y: ModelSched, problem: &str, provenance: &str) -> Fact {
        Fact {
            key: FactKey::Separates {
                x,
                y,
                problem: problem.to_string(),
            },
            provenance: provenance.to_string(),
            contribution: false,
        }
    }

    pub fn validate(&self) -> Result<(), RelationsError> {
        if self.provenance.trim().is_empty() {
            return Err(RelationsError::InvalidFact(format!("{}: empty provenance", self.key)));
        }
        if let FactKey::Separates { x, y, .. } = &self.key {
            if x == y {
                return Err(RelationsError::InvalidFact(format!("{}: X = Y", self.key)));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct FactFile {
    facts: Vec<Fact>,
}

/// Parses a fact file (`{"facts": [...]}`), validating every entry.
pub fn parse_facts(json: &str) -> Result<Vec<Fact>, RelationsError> {
    let file: FactFile = serde_json::from_str(json).map_err(|e| RelationsError::Json(e.to_string()))?;
    for f in &file.facts {
        f.validate()?;
    }
    Ok(file.facts)
}

/// `M^F ≥ M^S ≥ M^A` per model and `LUMI ≥ FSTA, FCOM ≥ OBLOT` per scheduler.
pub fn axioms() -> Vec<Fact> {
    use Model::*;
    use SchedulerKind::*;
    let ms = ModelSched::new;
    let mut v = Vec::new();
    for m in Model::ALL {
        v.push(Fact::dominates(ms(m, Fsync), ms(m, Ssync), "axiom: M^F ≥ M^S ≥ M^A"));
        v.push(Fact::dominates(ms(m, Ssync), ms(m, Async), "axiom: M^F ≥ M^S ≥ M^A"));
    }
    for s in [Fsync, Ssync, Async] {
        for (hi, lo) in [(Lumi, Fsta), (Lumi, Fcom), (Fsta, Oblot), (Fcom, Oblot)] {
            v.push(Fact::dominates(
                ms(hi, s),
                ms(lo, s),
                "axiom: LUMI ≥ FSTA ≥ OBLOT and LUMI ≥ FCOM ≥ OBLOT",
            ));
        }
    }
    v
}

/// Axioms followed by the shipped fact file.
pub fn base_facts() -> Vec<Fact> {
    let mut v = axioms();
    v.extend(parse_facts(FACTS_JSON).expect("shipped fact file is valid"));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Given,
    Transitivity,
    SeparationLeft,
    SeparationRight,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Justification {
    pub rule: Rule,
    pub premises: Vec<FactKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    /// Closure round in which the fact first appeared (0 for given facts).
    pub depth: usize,
}

/// The closed fact set with one shallowest justification per fact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Closure {
    pub facts: BTreeMap<FactKey, Justification>,
}

/// Applies `rule` to `premises`, returning the conclusion if it fires.
pub fn apply_rule(rule: Rule, premises: &[FactKey]) -> Option<FactKey> {
    use FactKey::*;
    match (rule, premises) {
        (Rule::Transitivity, [Dominates { x, y }, Dominates { x: y2, y: z }]) if y == y2 && x != z => {
            Some(Dominates { x: *x, y: *z })
        }
        (Rule::SeparationLeft, [Separates { x, y, problem }, Dominates { x: x2, y: x1 }]) if x1 == x && x2 != y => {
            Some(Separates {
                x: *x2,
                y: *y,
                problem: problem.clone(),
            })
        }
        (Rule::SeparationRight, [Separates { x, y, problem }, Dominates { x: y1, y: y2 }]) if y1 == y && y2 != x => {
            Some(Separates {
                x: *x,
                y: *y2,
                problem: problem.clone(),
            })
        }
        _ => None,
    }
}

/// Fixpoint of the closure rules, computed in rounds so that each fact's
/// justification is one of minimal depth.
pub fn close(facts: &[Fact]) -> Closure {
    let mut known: BTreeMap<FactKey, Justification> = BTreeMap::new();
    for f in facts {
        if let FactKey::Dominates { x, y } = &f.key {
            if x == y {
                continue;
            }
        }
        known.entry(f.key.clone()).or_insert_with(|| Justification {
            rule: Rule::Given,
            premises: Vec::new(),
            provenance: Some(f.provenance.clone()),
            depth: 0,
        });
    }
    let mut depth = 0;
    loop {
        depth += 1;
        let doms: Vec<&FactKey> = known
            .keys()
            .filter(|k| matches!(k, FactKey::Dominates { .. }))
            .collect();
        let seps: Vec<&FactKey> = known
            .keys()
            .filter(|k| matches!(k, FactKey::Separates { .. }))
            .collect();
        let mut fresh: BTreeMap<FactKey, Justification> = BTreeMap::new();
        let mut offer = |rule: Rule, a: &FactKey, b: &FactKey| {
            let premises = [a.clone(), b.clone()];
            if let Some(c) = apply_rule(rule, &premises) {
                if !known.contains_key(&c) && !fresh.contains_key(&c) {
                    fresh.insert(
                        c,
                        Justification {
                            rule,
                            premises: premises.to_vec(),
                            provenance: None,
                            depth,
                        },
                    );
                }
            }
        };
        for a in &doms {
            for b in &doms {
                offer(Rule::Transitivity, a, b);
            }
        }
        for s in &seps {
            for d in &doms {
                offer(Rule::SeparationLeft, s, d);
                offer(Rule::SeparationRight, s, d);
            }
        }
        if fresh.is_empty() {
            break;
        }
        known.extend(fresh);
    }
    Closure { facts: known }
}

impl Closure {
    pub fn dominates(&self, x: ModelSched, y: ModelSched) -> bool {
        x == y || self.facts.contains_key(&FactKey::Dominates { x, y })
    }

    /// The shallowest separation of `x` from `y`, ties broken by problem
    /// name.
    pub fn separation(&self, x: ModelSched, y: ModelSched) -> Option<&FactKey> {
        self.facts
            .iter()
            .filter(|(k, _)| matches!(k, FactKey::Separates { x: a, y: b, .. } if *a == x && *b == y))
            .min_by_key(|(k, j)| (j.depth, (*k).clone()))
            .map(|(k, _)| k)
    }

    /// Separations contradicted by a dominance (`S(X, Y)` with `Y ≥ X`).
    pub fn conflicts(&self) -> Vec<(FactKey, FactKey)> {
        self.facts
            .keys()
            .filter_map(|k| match k {
                FactKey::Separates { x, y, .. } if self.dominates(*y, *x) => {
                    Some((k.clone(), FactKey::Dominates { x: *y, y: *x }))
                }
                _ => None,
            })
            .collect()
    }

    /// Every step needed to justify `goals`, premises before conclusions.
    pub fn chain(&self, goals: &[FactKey]) -> Vec<Step> {
        let mut out: Vec<Step> = Vec::new();
        fn visit(c: &Closure, k: &FactKey, out: &mut Vec<Step>) {
            if out.iter().any(|s| &s.fact == k) {
                return;
            }
            let Some(j) = c.facts.get(k) else { return };
            for p in &j.premises {
                visit(c, p, out);
            }
            out.push(Step {
                fact: k.clone(),
                rule: j.rule,
                premises: j.premises.clone(),
                provenance: j.provenance.clone(),
            });
        }
        for g in goals {
            visit(self, g, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub fact: FactKey,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<FactKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.rule, &self.provenance) {
            (Rule::Given, Some(p)) => write!(f, "{}  [{p}]", self.fact),
            _ => {
                let ps: Vec<String> = self.premises.iter().map(ToString::to_string).collect();
                write!(f, "{}  by {:?} from {}", self.fact, self.rule, ps.join(", "))
            }
        }
    }
}

/// Checks that every step is given (and present in `given`) or follows by
/// its rule from earlier steps.
pub fn replay_chain(chain: &[Step], given: &[Fact]) -> bool {
    chain.iter().enumerate().all(|(i, s)| match s.rule {
        Rule::Given => given.iter().any(|f| f.key == s.fact),
        rule => {
            s.premises.iter().all(|p| chain[..i].iter().any(|e| &e.fact == p))
                && apply_rule(rule, &s.premises).as_ref() == Some(&s.fact)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "≡")]
    Equivalent,
    #[serde(rename = "⊥")]
    Orthogonal,
    #[serde(rename = "unknown")]
    Unknown,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Greater => ">",
            Relation::Less => "<",
            Relation::Equivalent => "≡",
            Relation::Orthogonal => "⊥",
            Relation::Unknown => "unknown",
        })
    }
}

/// The relation between two model/scheduler pairs. `Unknown` still reports
/// whatever one-sided facts are known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedRelation {
    pub x: ModelSched,
    pub y: ModelSched,
    pub relation: Relation,
    pub x_dominates_y: bool,
    pub y_dominates_x: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_separates_y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_separates_x: Option<String>,
    pub derivation: Vec<Step>,
}

fn problem_of(k: &FactKey) -> String {
    match k {
        FactKey::Separates { problem, .. } => problem.clone(),
        FactKey::Dominates { .. } => unreachable!("separation expected"),
    }
}

pub fn derive(closure: &Closure, x: ModelSched, y: ModelSched) -> DerivedRelation {
    let dxy = closure.dominates(x, y);
    let dyx = closure.dominates(y, x);
    let sxy = closure.separation(x, y).cloned();
    let syx = closure.separation(y, x).cloned();
    let dom = |a, b| FactKey::Dominates { x: a, y: b };
    let (relation, goals): (Relation, Vec<FactKey>) = match (dxy, dyx, &sxy, &syx) {
        (true, true, _, _) if x == y => (Relation::Equivalent, vec![]),
        (true, true, _, _) => (Relation::Equivalent, vec![dom(x, y), dom(y, x)]),
        (true, false, Some(s), _) => (Relation::Greater, vec![dom(x, y), s.clone()]),
        (false, true, _, Some(s)) => (Relation::Less, vec![dom(y, x), s.clone()]),
        (_, _, Some(a), Some(b)) => (Relation::Orthogonal, vec![a.clone(), b.clone()]),
        _ => {
            let mut partial = Vec::new();
            if dxy {
                partial.push(dom(x, y));
            }
            if dyx {
                partial.push(dom(y, x));
            }
            partial.extend(sxy.iter().cloned());
            partial.extend(syx.iter().cloned());
            (Relation::Unknown, partial)
        }
    };
    DerivedRelation {
        x,
        y,
        relation,
        x_dominates_y: dxy,
        y_dominates_x: dyx,
        x_separates_y: sxy.as_ref().map(problem_of),
        y_separates_x: syx.as_ref().map(problem_of),
        derivation: closure.chain(&goals),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub x: ModelSched,
    pub y: ModelSched,
    pub expected: Relation,
}

#[derive(Deserialize)]
struct ClaimFile {
    claims: Vec<Claim>,
}

pub fn paper_claims() -> Vec<Claim> {
    let file: ClaimFile = serde_json::from_str(CLAIMS_JSON).expect("shipped claim file is valid");
    file.claims
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimResult {
    pub claim: Claim,
    pub pass: bool,
    pub derived: DerivedRelation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub all_pass: bool,
    pub results: Vec<ClaimResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<(FactKey, FactKey)>,
}

pub fn verify_claims(facts: &[Fact], claims: &[Claim]) -> ClaimReport {
    let closure = close(facts);
    let results: Vec<ClaimResult> = claims
        .iter()
        .map(|c| {
            let derived = derive(&closure, c.x, c.y);
            ClaimResult {
                claim: c.clone(),
                pass: derived.relation == c.expected,
                derived,
            }
        })
        .collect();
    let conflicts = closure.conflicts();
    ClaimReport {
        all_pass: conflicts.is_empty() && results.iter().all(|r| r.pass),
        results,
        conflicts,
    }
}

pub fn verify_paper_claims() -> ClaimReport {
    verify_claims(&base_facts(), &paper_claims())
}
