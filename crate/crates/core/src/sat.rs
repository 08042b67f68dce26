//! k-SAT instances: DIMACS I/O, the benchmark families, brute-force verification.
//!
//! Variables are 1-based in DIMACS text and 0-based everywhere in memory.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Largest `n` for which exhaustive enumeration is attempted.
pub const ENUMERATION_LIMIT: usize = 24;
/// Resampling attempts for unique-solution random 3-SAT.
pub const RANDOM3SAT_RETRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    /// `false` for a negated literal.
    pub positive: bool,
}

impl Literal {
    /// The sign l in {-1, +1}.
    pub fn sign(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause from 0-based variables and signs in {-1, +1}.
    pub fn new(vars: &[usize], signs: &[i8]) -> Result<Self> {
        if vars.is_empty() || vars.len() != signs.len() {
            return Err(Error::InvalidInstance(format!(
                "clause needs equal, nonzero vars/signs lengths (got {} and {})",
                vars.len(),
                signs.len()
            )));
        }
        let mut literals = Vec::with_capacity(vars.len());
        for (&var, &s) in vars.iter().zip(signs) {
            let positive = match s {
                1 => true,
                -1 => false,
                _ => return Err(Error::InvalidInstance(format!("sign must be +1 or -1, got {s}"))),
            };
            literals.push(Literal { var, positive });
        }
        Self::from_literals(literals)
    }

    pub fn from_literals(literals: Vec<Literal>) -> Result<Self> {
        if literals.is_empty() {
            return Err(Error::InvalidInstance("empty clause".into()));
        }
        let distinct: BTreeSet<usize> = literals.iter().map(|l| l.var).collect();
        if distinct.len() != literals.len() {
            return Err(Error::InvalidInstance("clause contains the same variable twice".into()));
        }
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn vars(&self) -> Vec<usize> {
        self.literals.iter().map(|l| l.var).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.literals.iter().map(|l| if l.positive { 1 } else { -1 }).collect()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.literals.iter().any(|l| l.var == var)
    }

    pub fn is_satisfied(&self, values: &[bool]) -> bool {
        self.literals.iter().any(|l| values[l.var] == l.positive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    n: usize,
    clauses: Vec<Clause>,
}

impl SatInstance {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be positive".into()));
        }
        if clauses.is_empty() {
            return Err(Error::InvalidInstance("instance has zero clauses".into()));
        }
        for (i, c) in clauses.iter().enumerate() {
            if let Some(l) = c.literals.iter().find(|l| l.var >= n) {
                return Err(Error::InvalidInstance(format!(
                    "clause {} references variable {} but n = {n}",
                    i + 1,
                    l.var + 1
                )));
            }
        }
        Ok(Self { n, clauses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn k(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    /// Assignment encoded by a basis index; variable 1 is the most significant bit, 1 = T.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_char(if b { 'T' } else { 'F' })?;
        }
        Ok(())
    }
}

pub fn parse_dimacs(text: &str) -> Result<SatInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse { line: line_no, msg: "duplicate header".into() });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::Parse { line: line_no, msg: format!("malformed header '{line}'") });
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse { line: line_no, msg: format!("malformed header count '{s}'") })
            };
            header = Some((parse(parts[2])?, parse(parts[3])?));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::Parse { line: line_no, msg: "clause before header".into() });
        };
        for tok in line.split_whitespace() {
            let v: i64 =
                tok.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("bad literal '{tok}'") })?;
            if v == 0 {
                let lits = std::mem::take(&mut pending);
                let clause = Clause::from_literals(lits)
                    .map_err(|e| Error::Parse { line: pending_line.max(line_no), msg: e.to_string() })?;
                clauses.push(clause);
                continue;
            }
            let var = v.unsigned_abs() as usize;
            if var > n {
                return Err(Error::Parse { line: line_no, msg: format!("literal index {var} out of range 1..{n}") });
            }
            if pending.is_empty() {
                pending_line = line_no;
            }
            pending.push(Literal { var: var - 1, positive: v > 0 });
        }
    }

    let Some((n, m)) = header else {
        return Err(Error::Parse { line: 0, msg: "missing 'p cnf' header".into() });
    };
    if !pending.is_empty() {
        return Err(Error::Parse { line: pending_line, msg: "clause not terminated by 0".into() });
    }
    if clauses.is_empty() {
        return Err(Error::Parse { line: 0, msg: "zero clauses".into() });
    }
    if clauses.len() != m {
        return Err(Error::Parse { line: 0, msg: format!("header declares {m} clauses, found {}", clauses.len()) });
    }
    SatInstance::new(n, clauses).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
}

pub fn render_dimacs(instance: &SatInstance) -> String {
    let mut out = format!("p cnf {} {}\n", instance.n(), instance.m());
    for c in instance.clauses() {
        for l in c.literals() {
            let v = (l.var + 1) as i64;
            let _ = write!(out, "{} ", if l.positive { v } else { -v });
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Ring2sat,
    SingleSolutionRing,
    Random3sat,
}

impl std::str::FromStr for InstanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring2sat" => Ok(Self::Ring2sat),
            "single_solution_ring" => Ok(Self::SingleSolutionRing),
            "random3sat" => Ok(Self::Random3sat),
            _ => Err(Error::InvalidParameter(format!("unknown instance kind '{s}'"))),
        }
    }
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ring2sat => "ring2sat",
            Self::SingleSolutionRing => "single_solution_ring",
            Self::Random3sat => "random3sat",
        })
    }
}

/// Clause count for unique-solution random 3-SAT.
///
/// ⌈4.26 n⌉, capped at one less than the number of distinct 3-clauses so that a
/// satisfying assignment can survive (n = 3 gives 7).
pub fn random3sat_clause_count(n: usize) -> usize {
    let threshold = (4.26 * n as f64).ceil() as usize;
    let triples = n * (n - 1) * (n - 2) / 6;
    threshold.min(8 * triples - 1)
}

pub fn generate_instance(kind: InstanceKind, n: usize, seed: u64) -> Result<SatInstance> {
    match kind {
        InstanceKind::Ring2sat | InstanceKind::SingleSolutionRing => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("{kind} needs n >= 2, got {n}")));
            }
            let mut clauses: Vec<Clause> =
                (0..n).map(|i| Clause::new(&[i, (i + 1) % n], &[1, -1])).collect::<Result<_>>()?;
            if kind == InstanceKind::SingleSolutionRing {
                clauses.push(Clause::new(&[0, 1], &[1, 1])?);
            }
            SatInstance::new(n, clauses)
        }
        InstanceKind::Random3sat => {
            if n < 3 {
                return Err(Error::InvalidParameter(format!("random3sat needs n >= 3, got {n}")));
            }
            random_unique_3sat(n, seed)
        }
    }
}

fn random_unique_3sat(n: usize, seed: u64) -> Result<SatInstance> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::InvalidParameter(format!("random3sat uniqueness check needs n <= {ENUMERATION_LIMIT}")));
    }
    let m = random3sat_clause_count(n);
    for attempt in 0..RANDOM3SAT_RETRIES {
        let mut rng = substream(seed, crate::rng::stream::INSTANCE, attempt as u64);
        let mut seen: BTreeSet<Vec<Literal>> = BTreeSet::new();
        let mut clauses = Vec::with_capacity(m);
        while clauses.len() < m {
            let mut vars: Vec<usize> = Vec::with_capacity(3);
            while vars.len() < 3 {
                let v = rng.random_range(0..n);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.sort_unstable();
            let lits: Vec<Literal> = vars.iter().map(|&var| Literal { var, positive: rng.random_bool(0.5) }).collect();
            if seen.insert(lits.clone()) {
                clauses.push(Clause::from_literals(lits)?);
            }
        }
        let instance = SatInstance::new(n, clauses)?;
        if count_solutions(&instance) == 1 {
            return Ok(instance);
        }
    }
    Err(Error::Generation(format!(
        "no unique-solution random 3-SAT instance with n = {n}, m = {m} after {RANDOM3SAT_RETRIES} draws"
    )))
}

pub fn evaluate(instance: &SatInstance, a: &Assignment) -> Result<bool> {
    if a.len() != instance.n() {
        return Err(Error::InvalidParameter(format!(
            "assignment length {} does not match n = {}",
            a.len(),
            instance.n()
        )));
    }
    Ok(instance.clauses().iter().all(|c| c.is_satisfied(&a.0)))
}

fn count_solutions(instance: &SatInstance) -> usize {
    let n = instance.n();
    (0..1usize << n)
        .filter(|&idx| {
            let a = Assignment::from_index(idx, n);
            instance.clauses().iter().all(|c| c.is_satisfied(&a.0))
        })
        .count()
}

/// All satisfying assignments, ordered F < T with variable 1 most significant.
pub fn enumerate_solutions(instance: &SatInstance) -> Result<Vec<Assignment>> {
    let n = instance.n();
    if n > ENUMERATION_LIMIT {
        return Err(Error::InvalidParameter(format!("enumeration limited to n <= {ENUMERATION_LIMIT}, got {n}")));
    }
    Ok((0..1usize << n)
        .map(|idx| Assignment::from_index(idx, n))
        .filter(|a| instance.clauses().iter().all(|c| c.is_satisfied(&a.0)))
        .collect())
}

/// (¬b1∨b3)∧(¬b2∨b3)∧(¬b1∨b3)∧(b1∨¬b2): uncorrelated third variable.
pub fn per_qubit_instance_one() -> SatInstance {
    let c = |v: [usize; 2], s: [i8; 2]| Clause::new(&v, &s).expect("static clause");
    SatInstance::new(3, vec![c([0, 2], [-1, 1]), c([1, 2], [-1, 1]), c([0, 2], [-1, 1]), c([0, 1], [1, -1])])
        .expect("static instance")
}

/// (b1∨¬b2)∧(b2∨¬b3)∧(¬b1∨b3): the 3-variable ring.
pub fn per_qubit_instance_two() -> SatInstance {
    let c = |v: [usize; 2], s: [i8; 2]| Clause::new(&v, &s).expect("static clause");
    SatInstance::new(3, vec![c([0, 1], [1, -1]), c([1, 2], [1, -1]), c([0, 2], [-1, 1])]).expect("static instance")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_header_and_clause() {
        let inst = parse_dimacs("p cnf 2 1\n1 -2 0").unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.m(), 1);
        assert_eq!(inst.clauses()[0].vars(), vec![0, 1]);
        assert_eq!(inst.clauses()[0].signs(), vec![1, -1]);
    }

    #[test]
    fn parses_comment_and_negated_unit() {
        let inst = parse_dimacs("c comment\np cnf 1 1\n-1 0").unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.clauses()[0].signs(), vec![-1]);
    }

    #[test]
    fn rejects_out_of_range_literal() {
        assert!(matches!(parse_dimacs("p cnf 2 1\n3 0"), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_bad_header_duplicates_and_empty() {
        assert!(parse_dimacs("p cnf x 1\n1 0").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 -1 0").is_err());
        assert!(parse_dimacs("p cnf 2 0\n").is_err());
        assert!(parse_dimacs("1 0\n").is_err());
    }

    #[test]
    fn duplicate_clauses_are_kept() {
        let inst = parse_dimacs("p cnf 2 2\n1 2 0\n1 2 0\n").unwrap();
        assert_eq!(inst.m(), 2);
    }

    #[test]
    fn ring_of_three() {
        let inst = generate_instance(InstanceKind::Ring2sat, 3, 0).unwrap();
        let expected = [(0, 1), (1, 2), (2, 0)];
        for (c, (a, b)) in inst.clauses().iter().zip(expected) {
            assert_eq!(c.vars(), vec![a, b]);
            assert_eq!(c.signs(), vec![1, -1]);
        }
        let sols = enumerate_solutions(&inst).unwrap();
        assert_eq!(sols.len(), 2);
        assert!(evaluate(&inst, &Assignment(vec![true; 3])).unwrap());
        assert!(evaluate(&inst, &Assignment(vec![false; 3])).unwrap());
    }

    #[test]
    fn single_solution_ring_three() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 3, 0).unwrap();
        assert_eq!(inst.m(), 4);
        assert_eq!(enumerate_solutions(&inst).unwrap(), vec![Assignment(vec![true; 3])]);
        assert!(!evaluate(&inst, &Assignment(vec![false; 3])).unwrap());
    }

    #[test]
    fn ring_of_four_solutions_in_order() {
        let inst = generate_instance(InstanceKind::Ring2sat, 4, 0).unwrap();
        let sols = enumerate_solutions(&inst).unwrap();
        assert_eq!(sols, vec![Assignment(vec![false; 4]), Assignment(vec![true; 4])]);
        let ss = generate_instance(InstanceKind::SingleSolutionRing, 4, 0).unwrap();
        assert_eq!(enumerate_solutions(&ss).unwrap(), vec![Assignment(vec![true; 4])]);
    }

    #[test]
    fn contradiction_has_no_solutions() {
        let inst =
            SatInstance::new(1, vec![Clause::new(&[0], &[1]).unwrap(), Clause::new(&[0], &[-1]).unwrap()]).unwrap();
        assert!(enumerate_solutions(&inst).unwrap().is_empty());
    }

    #[test]
    fn random3sat_three_has_seven_clauses() {
        let inst = generate_instance(InstanceKind::Random3sat, 3, 11).unwrap();
        assert_eq!(inst.m(), 7);
        assert_eq!(enumerate_solutions(&inst).unwrap().len(), 1);
    }

    #[test]
    fn random3sat_is_unique_and_seeded() {
        for n in 4..=6 {
            let a = generate_instance(InstanceKind::Random3sat, n, 5).unwrap();
            let b = generate_instance(InstanceKind::Random3sat, n, 5).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.m(), (4.26 * n as f64).ceil() as usize);
            assert_eq!(enumerate_solutions(&a).unwrap().len(), 1);
            assert!(a.clauses().iter().all(|c| c.len() == 3));
        }
    }

    #[test]
    fn generator_minimums() {
        assert!(generate_instance(InstanceKind::Ring2sat, 1, 0).is_err());
        assert!(generate_instance(InstanceKind::Random3sat, 2, 0).is_err());
    }

    #[test]
    fn evaluate_rejects_length_mismatch() {
        let inst = generate_instance(InstanceKind::Ring2sat, 3, 0).unwrap();
        assert!(evaluate(&inst, &Assignment(vec![true; 2])).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let inst = SatInstance::new(25, vec![Clause::new(&[0], &[1]).unwrap()]).unwrap();
        assert!(enumerate_solutions(&inst).is_err());
    }

    #[test]
    fn basis_index_round_trip() {
        for idx in 0..16 {
            assert_eq!(Assignment::from_index(idx, 4).to_index(), idx);
        }
        assert_eq!(Assignment::from_index(0b10, 2).0, vec![true, false]);
    }

    #[test]
    fn per_qubit_instances_match_formulas() {
        let one = per_qubit_instance_one();
        assert_eq!(one.m(), 4);
        assert_eq!(one.clauses()[0], one.clauses()[2]);
        let two = per_qubit_instance_two();
        assert_eq!(enumerate_solutions(&two).unwrap().len(), 2);
    }
}
