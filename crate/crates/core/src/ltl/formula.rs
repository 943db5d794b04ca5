use std::fmt;

/// LTL over action atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    /// Strong release `φ M ψ`.
    StrongRelease(Box<Formula>, Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Next(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Globally(Box::new(f))
    }

    pub fn finally(f: Formula) -> Self {
        Finally(Box::new(f))
    }

    pub fn weak_until(a: Formula, b: Formula) -> Self {
        WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Release(Box::new(a), Box::new(b))
    }

    /// Negation normal form: negations only on atoms; `->`, `<->`, `U`, `M`
    /// and `F` are kept only where they cannot be rewritten into the safe
    /// connectives.
    pub fn nnf(&self) -> Formula {
        self.push_neg(false)
    }

    fn push_neg(&self, neg: bool) -> Formula {
        let b = |f: Formula| Box::new(f);
        match (self, neg) {
            (True, false) | (False, true) => True,
            (True, true) | (False, false) => False,
            (Atom(a), false) => Atom(a.clone()),
            (Atom(a), true) => Not(b(Atom(a.clone()))),
            (Not(f), n) => f.push_neg(!n),
            (And(x, y), false) => And(b(x.nnf()), b(y.nnf())),
            (And(x, y), true) => Or(b(x.push_neg(true)), b(y.push_neg(true))),
            (Or(x, y), false) => Or(b(x.nnf()), b(y.nnf())),
            (Or(x, y), true) => And(b(x.push_neg(true)), b(y.push_neg(true))),
            (Implies(x, y), false) => Or(b(x.push_neg(true)), b(y.nnf())),
            (Implies(x, y), true) => And(b(x.nnf()), b(y.push_neg(true))),
            (Iff(x, y), false) => Or(
                b(And(b(x.nnf()), b(y.nnf()))),
                b(And(b(x.push_neg(true)), b(y.push_neg(true)))),
            ),
            (Iff(x, y), true) => Or(
                b(And(b(x.nnf()), b(y.push_neg(true)))),
                b(And(b(x.push_neg(true)), b(y.nnf()))),
            ),
            (Next(f), n) => Next(b(f.push_neg(n))),
            (Until(x, y), false) => Until(b(x.nnf()), b(y.nnf())),
            (Until(x, y), true) => Release(b(x.push_neg(true)), b(y.push_neg(true))),
            (Release(x, y), false) => Release(b(x.nnf()), b(y.nnf())),
            (Release(x, y), true) => Until(b(x.push_neg(true)), b(y.push_neg(true))),
            (WeakUntil(x, y), false) => WeakUntil(b(x.nnf()), b(y.nnf())),
            // ¬(φ W ψ) ≡ ¬ψ U (¬φ ∧ ¬ψ)
            (WeakUntil(x, y), true) => Until(
                b(y.push_neg(true)),
                b(And(b(x.push_neg(true)), b(y.push_neg(true)))),
            ),
            (StrongRelease(x, y), false) => StrongRelease(b(x.nnf()), b(y.nnf())),
            (StrongRelease(x, y), true) => WeakUntil(b(x.push_neg(true)), b(y.push_neg(true))),
            (Finally(f), false) => Finally(b(f.nnf())),
            (Finally(f), true) => Globally(b(f.push_neg(true))),
            (Globally(f), false) => Globally(b(f.nnf())),
            (Globally(f), true) => Finally(b(f.push_neg(true))),
        }
    }

    /// Syntactic safety: the NNF uses only literals, `&&`, `||`, `X`, `W`,
    /// `R` and `G`.
    pub fn is_safety(&self) -> bool {
        fn safe(f: &Formula) -> bool {
            match f {
                True | False | Atom(_) => true,
                Not(inner) => matches!(**inner, Atom(_)),
                And(a, b) | Or(a, b) | WeakUntil(a, b) | Release(a, b) => safe(a) && safe(b),
                Next(a) | Globally(a) => safe(a),
                Implies(..) | Iff(..) | Until(..) | StrongRelease(..) | Finally(_) => false,
            }
        }
        safe(&self.nnf())
    }

    /// All atom names, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            match f {
                True | False => {}
                Atom(a) => out.push(a.clone()),
                Not(x) | Next(x) | Finally(x) | Globally(x) => walk(x, out),
                And(x, y)
                | Or(x, y)
                | Implies(x, y)
                | Iff(x, y)
                | Until(x, y)
                | WeakUntil(x, y)
                | Release(x, y)
                | StrongRelease(x, y) => {
                    walk(x, out);
                    walk(y, out);
                }
            }
        }
        let mut v = Vec::new();
        walk(self, &mut v);
        v.sort();
        v.dedup();
        v
    }

    /// Nesting depth of operators (atoms and constants have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            True | False | Atom(_) => 0,
            Not(x) | Next(x) | Finally(x) | Globally(x) => 1 + x.depth(),
            And(x, y)
            | Or(x, y)
            | Implies(x, y)
            | Iff(x, y)
            | Until(x, y)
            | WeakUntil(x, y)
            | Release(x, y)
            | StrongRelease(x, y) => 1 + x.depth().max(y.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Iff(..) => 1,
            Implies(..) => 2,
            Or(..) => 3,
            And(..) => 4,
            Until(..) | WeakUntil(..) | Release(..) | StrongRelease(..) => 5,
            Not(_) | Next(_) | Finally(_) | Globally(_) => 6,
            True | False | Atom(_) => 7,
        }
    }
}

impl fmt::Display for Formula {
    /// Fully parenthesises binary sub-terms so the output re-parses to the
    /// same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |g: &Formula, f: &mut fmt::Formatter<'_>| {
            if g.precedence() >= 6 {
                write!(f, "{g}")
            } else {
                write!(f, "({g})")
            }
        };
        let bin = |x: &Formula, op: &str, y: &Formula, f: &mut fmt::Formatter<'_>| {
            sub(x, f)?;
            write!(f, " {op} ")?;
            sub(y, f)
        };
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(a) => write!(f, "{a}"),
            Not(x) => {
                write!(f, "!")?;
                sub(x, f)
            }
            Next(x) => {
                write!(f, "X ")?;
                sub(x, f)
            }
            Finally(x) => {
                write!(f, "F ")?;
                sub(x, f)
            }
            Globally(x) => {
                write!(f, "G ")?;
                sub(x, f)
            }
            And(x, y) => bin(x, "&&", y, f),
            Or(x, y) => bin(x, "||", y, f),
            Implies(x, y) => bin(x, "->", y, f),
            Iff(x, y) => bin(x, "<->", y, f),
            Until(x, y) => bin(x, "U", y, f),
            WeakUntil(x, y) => bin(x, "W", y, f),
            Release(x, y) => bin(x, "R", y, f),
            StrongRelease(x, y) => bin(x, "M", y, f),
        }
    }
}
