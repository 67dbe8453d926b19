//! Ground facts, literal patterns and closed-world conjunction matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Variable name to constant.
pub type Bindings = BTreeMap<String, String>;

/// A ground propositional statement, `pred(arg, ...)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new<P: Into<String>, A: Into<String>>(pred: P, args: impl IntoIterator<Item = A>) -> Self {
        Fact { pred: pred.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for Fact {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let atom: Atom = s.parse()?;
        atom.ground(&Bindings::new()).map_err(|_| SyntaxError::NotGround(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("empty expression")]
    Empty,
    #[error("malformed expression `{0}`")]
    Malformed(String),
    #[error("`{0}` must be ground (no ?variables)")]
    NotGround(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable ?{0} is unbound")]
pub struct UnboundVariable(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

/// A fact pattern: predicate plus constant or variable arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.vars().next().is_none()
    }

    /// Extends `bindings` so that this pattern equals `fact`, if possible.
    pub fn match_fact(&self, fact: &Fact, bindings: &Bindings) -> Option<Bindings> {
        if self.pred != fact.pred || self.args.len() != fact.args.len() {
            return None;
        }
        let mut out = bindings.clone();
        for (term, value) in self.args.iter().zip(&fact.args) {
            match term {
                Term::Const(c) if c == value => {}
                Term::Const(_) => return None,
                Term::Var(v) => match out.get(v) {
                    Some(bound) if bound == value => {}
                    Some(_) => return None,
                    None => {
                        out.insert(v.clone(), value.clone());
                    }
                },
            }
        }
        Some(out)
    }

    /// True when some instantiation of `self` could equal some instantiation
    /// of `other` (variables on either side act as wildcards).
    pub fn unifies_with(&self, other: &Atom) -> bool {
        self.pred == other.pred
            && self.args.len() == other.args.len()
            && self.args.iter().zip(&other.args).all(|pair| match pair {
                (Term::Const(a), Term::Const(b)) => a == b,
                _ => true,
            })
    }

    pub fn ground(&self, bindings: &Bindings) -> Result<Fact, UnboundVariable> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(c.clone()),
                Term::Var(v) => bindings.get(v).cloned().ok_or_else(|| UnboundVariable(v.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Fact { pred: self.pred.clone(), args })
    }

    /// Facts in `facts` matching this pattern under `bindings`, in sorted order.
    pub fn matches<'a>(
        &'a self,
        facts: &'a BTreeSet<Fact>,
        bindings: &'a Bindings,
    ) -> impl Iterator<Item = (&'a Fact, Bindings)> + 'a {
        let start = Fact { pred: self.pred.clone(), args: Vec::new() };
        facts
            .range(start..)
            .take_while(move |f| f.pred == self.pred)
            .filter_map(move |f| self.match_fact(f, bindings).map(|b| (f, b)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(Term::to_string).collect();
            write!(f, "({})", args.join(","))?;
        }
        Ok(())
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

impl FromStr for Atom {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(SyntaxError::Empty);
        }
        let malformed = || SyntaxError::Malformed(s.to_string());
        let (pred, args) = match s.find('(') {
            None => (s, Vec::new()),
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(malformed)?;
                let args = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|a| {
                            let a = a.trim();
                            match a.strip_prefix('?') {
                                Some(v) if is_ident(v) => Ok(Term::Var(v.to_string())),
                                None if is_ident(a) => Ok(Term::Const(a.to_string())),
                                _ => Err(malformed()),
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()?
                };
                (s[..open].trim(), args)
            }
        };
        if !is_ident(pred) {
            return Err(malformed());
        }
        Ok(Atom { pred: pred.to_string(), args })
    }
}

/// A positive or negated atom; the only wff form operators use.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    /// Closed-world truth of a single literal; unbound variables in a
    /// negated literal are read existentially ("no matching fact").
    pub fn holds(&self, facts: &BTreeSet<Fact>, bindings: &Bindings) -> bool {
        let found = self.atom.matches(facts, bindings).next().is_some();
        found == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl FromStr for Literal {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (positive, rest) = if let Some(rest) = s.strip_prefix('!') {
            (false, rest)
        } else if let Some(rest) = s.strip_prefix("not ") {
            (false, rest)
        } else {
            (true, s)
        };
        Ok(Literal { positive, atom: rest.parse()? })
    }
}

/// First solution (in sorted fact order) of a conjunction of literals under
/// the closed-world assumption.
pub fn solve(literals: &[Literal], facts: &BTreeSet<Fact>, bindings: &Bindings) -> Option<Bindings> {
    let Some((first, rest)) = literals.split_first() else {
        return Some(bindings.clone());
    };
    if first.positive {
        first
            .atom
            .matches(facts, bindings)
            .find_map(|(_, extended)| solve(rest, facts, &extended))
    } else if first.holds(facts, bindings) {
        solve(rest, facts, bindings)
    } else {
        None
    }
}

/// Literals in `literals` that do not hold individually under `bindings`.
pub fn unmet(literals: &[Literal], facts: &BTreeSet<Fact>, bindings: &Bindings) -> Vec<Literal> {
    literals.iter().filter(|l| !l.holds(facts, bindings)).cloned().collect()
}
