use std::fmt;

use serde::{Deserialize, Serialize};

/// A main effect or interaction column of the 2^3 design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    A,
    B,
    C,
    AB,
    AC,
    BC,
    ABC,
}

impl Term {
    pub const ALL: [Term; 7] = [Term::A, Term::B, Term::C, Term::AB, Term::AC, Term::BC, Term::ABC];

    pub fn is_main(self) -> bool {
        matches!(self, Term::A | Term::B | Term::C)
    }

    pub fn sign(self, s: Signs) -> i8 {
        match self {
            Term::A => s.a,
            Term::B => s.b,
            Term::C => s.c,
            Term::AB => s.a * s.b,
            Term::AC => s.a * s.c,
            Term::BC => s.b * s.c,
            Term::ABC => s.a * s.b * s.c,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::A => "A",
            Term::B => "B",
            Term::C => "C",
            Term::AB => "AB",
            Term::AC => "AC",
            Term::BC => "BC",
            Term::ABC => "ABC",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coded levels (-1 / +1) of the three factors for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signs {
    pub a: i8,
    pub b: i8,
    pub c: i8,
}

impl Signs {
    pub fn new(a: i8, b: i8, c: i8) -> Self {
        debug_assert!([a, b, c].iter().all(|s| s.abs() == 1));
        Signs { a, b, c }
    }
}

impl fmt::Display for Signs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |s: i8| if s > 0 { '+' } else { '-' };
        write!(f, "{}{}{}", c(self.a), c(self.b), c(self.c))
    }
}

pub const RUNS: usize = 8;

/// The eight runs in standard order: A changes slowest, C fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    rows: [Signs; RUNS],
}

pub fn design_matrix() -> DesignMatrix {
    let mut rows = [Signs::new(-1, -1, -1); RUNS];
    for (i, row) in rows.iter_mut().enumerate() {
        let bit = |k: usize| if (i >> k) & 1 == 1 { 1 } else { -1 };
        *row = Signs::new(bit(2), bit(1), bit(0));
    }
    DesignMatrix { rows }
}

impl DesignMatrix {
    pub fn rows(&self) -> &[Signs; RUNS] {
        &self.rows
    }

    pub fn column(&self, term: Term) -> [i8; RUNS] {
        self.rows.map(|r| term.sign(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_follow_standard_order() {
        let d = design_matrix();
        assert_eq!(d.column(Term::A), [-1, -1, -1, -1, 1, 1, 1, 1]);
        assert_eq!(d.column(Term::B), [-1, -1, 1, 1, -1, -1, 1, 1]);
        assert_eq!(d.column(Term::C), [-1, 1, -1, 1, -1, 1, -1, 1]);
    }

    #[test]
    fn interaction_signs_of_rows_one_and_five() {
        let d = design_matrix();
        let signs = |row: usize| Term::ALL.map(|t| t.sign(d.rows()[row]));
        assert_eq!(signs(0), [-1, -1, -1, 1, 1, 1, -1]);
        assert_eq!(signs(4), [1, -1, -1, -1, -1, 1, 1]);
    }

    #[test]
    fn columns_balanced_and_orthogonal() {
        let d = design_matrix();
        for (i, &s) in Term::ALL.iter().enumerate() {
            let cs = d.column(s);
            assert_eq!(cs.iter().map(|&x| x as i32).sum::<i32>(), 0);
            for &t in &Term::ALL[i + 1..] {
                let ct = d.column(t);
                let dot: i32 = cs.iter().zip(&ct).map(|(&x, &y)| (x * y) as i32).sum();
                assert_eq!(dot, 0, "{s} . {t}");
            }
        }
        let mut seen: Vec<Signs> = d.rows().to_vec();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn display() {
        assert_eq!(Signs::new(1, -1, -1).to_string(), "+--");
        assert_eq!(Term::ABC.to_string(), "ABC");
    }
}
