use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Does `L^q` embed into the multipliers `H^{s1} -> H^{-s2}` on a
/// `(d-1)`-dimensional boundary? `q` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqEmbeddingQuery {
    pub d: usize,
    pub s1: f64,
    pub s2: f64,
    pub q: f64,
}

impl LqEmbeddingQuery {
    pub fn kappa1(&self) -> f64 {
        2.0 * self.s1 / (self.d as f64 - 1.0)
    }

    pub fn kappa2(&self) -> f64 {
        2.0 * self.s2 / (self.d as f64 - 1.0)
    }

    pub fn pi1(&self) -> f64 {
        (1.0 - self.kappa1()) / 2.0
    }

    pub fn pi2(&self) -> f64 {
        (1.0 - self.kappa2()) / 2.0
    }

    pub fn pi0(&self) -> f64 {
        (self.s1 + self.s2) / (self.d as f64 - 1.0)
    }

    /// `(d - 1) / (s1 + s2)`, infinite when both exponents vanish.
    fn critical_q(&self) -> f64 {
        let s = self.s1 + self.s2;
        if s <= 0.0 {
            f64::INFINITY
        } else {
            (self.d as f64 - 1.0) / s
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LqCase {
    I,
    Ii,
    Iii,
    Iv,
    V,
    None,
}

impl LqCase {
    pub fn label(&self) -> &'static str {
        match self {
            LqCase::I => "i",
            LqCase::Ii => "ii",
            LqCase::Iii => "iii",
            LqCase::Iv => "iv",
            LqCase::V => "v",
            LqCase::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqVerdict {
    pub case: LqCase,
    /// `Some(true)` when a sufficient condition holds, `None` otherwise.
    pub embeds: Option<bool>,
}

/// First of the five sufficient conditions that applies.
///
/// Each condition is closed upward in `q` because `L^q` shrinks as `q` grows
/// on a finite measure space: the exact-exponent cases (iii) and (v) also
/// accept every larger `q`.
pub fn lq_embedding_case(query: &LqEmbeddingQuery) -> Result<LqVerdict> {
    let LqEmbeddingQuery { d, s1, s2, q } = *query;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension {d} < 2")));
    }
    if !(0.0..=1.0).contains(&s1) || !(0.0..=1.0).contains(&s2) {
        return Err(Error::InvalidParameter(format!("exponents ({s1}, {s2}) outside [0, 1]")));
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidParameter(format!("q = {q} outside [1, inf]")));
    }
    let (k1, k2) = (query.kappa1(), query.kappa2());
    let lt = |k: f64| k < 1.0 - EPS;
    let eq = |k: f64| (k - 1.0).abs() <= EPS;
    let gt = |k: f64| k > 1.0 + EPS;
    let ge = |a: f64, b: f64| a == b || a >= b - EPS * b.abs().max(1.0);
    let gt_strict = |a: f64, b: f64| a > b + EPS * b.abs().max(1.0);
    let qc = query.critical_q();

    let case = if lt(k1) && lt(k2) && ge(q, qc) {
        LqCase::I
    } else if !gt(k1) && !gt(k2) && (eq(k1) || eq(k2)) && gt_strict(q, qc) {
        LqCase::Ii
    } else if lt(k1.min(k2)) && gt(k1.max(k2)) && ge(q, 2.0 / (1.0 + k1.min(k2))) {
        LqCase::Iii
    } else if k1 + k2 > 2.0 + EPS && (eq(k1) || eq(k2)) && gt_strict(q, 1.0) {
        LqCase::Iv
    } else if gt(k1) && gt(k2) {
        LqCase::V
    } else {
        LqCase::None
    };
    Ok(LqVerdict { case, embeds: if case == LqCase::None { None } else { Some(true) } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(d: usize, s1: f64, s2: f64, q: f64) -> LqCase {
        lq_embedding_case(&LqEmbeddingQuery { d, s1, s2, q }).unwrap().case
    }

    #[test]
    fn reference_points() {
        assert_eq!(case(3, 0.5, 0.5, 2.0), LqCase::I);
        assert_eq!(case(2, 0.5, 0.5, 1.5), LqCase::Ii);
        assert_eq!(case(2, 1.0, 1.0, 1.0), LqCase::V);
        // Critical row: q at the threshold itself is not covered.
        assert_eq!(case(2, 0.5, 0.5, 1.0), LqCase::None);
        assert_eq!(case(2, 0.0, 0.0, f64::INFINITY), LqCase::I);
        assert_eq!(case(2, 0.0, 0.0, 100.0), LqCase::None);
    }

    #[test]
    fn derived_quantities() {
        let q = LqEmbeddingQuery { d: 3, s1: 0.5, s2: 1.0, q: 2.0 };
        assert_eq!(q.kappa1(), 0.5);
        assert_eq!(q.kappa2(), 1.0);
        assert_eq!(q.pi1(), 0.25);
        assert_eq!(q.pi0(), 0.75);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(lq_embedding_case(&LqEmbeddingQuery { d: 2, s1: 1.5, s2: 0.0, q: 2.0 }).is_err());
        assert!(lq_embedding_case(&LqEmbeddingQuery { d: 2, s1: 0.5, s2: 0.0, q: 0.5 }).is_err());
        assert!(lq_embedding_case(&LqEmbeddingQuery { d: 1, s1: 0.5, s2: 0.0, q: 2.0 }).is_err());
    }
}
