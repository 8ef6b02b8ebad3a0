//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A polynomial in `nvars` variables, keyed by exponent tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Polynomial::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::invalid_set("polynomial", format!("exponent tuple {e:?} has {} entries, expected {nvars}", e.len())));
            }
            if !c.is_finite() {
                return Err(Error::invalid_set("polynomial", format!("coefficient of {e:?} is not finite")));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Parses the textual key `"(i,j,k)"` into an exponent tuple.
    pub fn parse_exponents(key: &str) -> Result<Vec<u32>> {
        let inner = key
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::invalid_set("polynomial", format!("key `{key}` is not of the form (i,j,...)")))?;
        inner
            .split(',')
            .map(|s| {
                s.trim().parse::<u32>().map_err(|_| Error::invalid_set("polynomial", format!("key `{key}` has a non-integer exponent")))
            })
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let sum = self.terms.get(&e).copied().unwrap_or(0.0) + c;
        if sum == 0.0 {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, sum);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for (e, c) in &self.terms {
            for i in 0..self.nvars {
                if e[i] == 0 {
                    continue;
                }
                let mut d = e.clone();
                d[i] -= 1;
                g[i] += c * e[i] as f64 * monomial(&d, x);
            }
        }
        g
    }

    /// Homogeneous part of top degree.
    pub fn top_form(&self) -> Polynomial {
        let deg = self.degree();
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(e, _)| e.iter().sum::<u32>() == deg).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    /// Characteristic length of the zero set: the largest root-bound ratio
    /// `(|c_a| / max|c_top|)^(1/(D-|a|))` over lower-order terms, at least 1.
    pub fn coefficient_scale(&self) -> f64 {
        let deg = self.degree();
        let top = self.terms.iter().filter(|(e, _)| e.iter().sum::<u32>() == deg).map(|(_, c)| c.abs()).fold(0.0, f64::max);
        if top == 0.0 {
            return 1.0;
        }
        self.terms
            .iter()
            .filter_map(|(e, c)| {
                let d = e.iter().sum::<u32>();
                (d < deg).then(|| (c.abs() / top).powf(1.0 / (deg - d) as f64))
            })
            .fold(1.0, f64::max)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// `y ↦ f(x0 + F y)` with `F` an `n × k` matrix; a polynomial in `k`
    /// variables.
    pub fn compose_affine(&self, x0: &[f64], frame: &DMatrix<f64>) -> Polynomial {
        let k = frame.ncols();
        let coords: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                let mut p = Polynomial::constant(k, x0[i]);
                for j in 0..k {
                    p = p.add(&Polynomial::variable(k, j).scale(frame[(i, j)]));
                }
                p
            })
            .collect();
        let mut out = Polynomial::zero(k);
        for (e, c) in &self.terms {
            let mut m = Polynomial::constant(k, *c);
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    m = m.mul(&coords[i]);
                }
            }
            out = out.add(&m);
        }
        out
    }
}

fn monomial(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(&p, &xi)| if p == 0 { 1.0 } else { xi.powi(p as i32) }).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hyperboloid() -> Polynomial {
        Polynomial::from_terms(3, [(vec![2, 0, 0], 1.0), (vec![0, 2, 0], 1.0), (vec![0, 0, 2], -1.0), (vec![0, 0, 0], -1.0)]).unwrap()
    }

    #[test]
    fn parses_exponent_keys() {
        assert_eq!(Polynomial::parse_exponents("(2, 0,1)").unwrap(), vec![2, 0, 1]);
        assert!(Polynomial::parse_exponents("2,0").is_err());
        assert!(Polynomial::parse_exponents("(a,0)").is_err());
    }

    #[test]
    fn evaluates_and_differentiates() {
        let f = hyperboloid();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.eval(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(f.gradient(&[1.0, 2.0, 3.0]), vec![2.0, 4.0, -6.0]);
        assert_eq!(f.top_form().eval(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(f.coefficient_scale(), 1.0);
    }

    #[test]
    fn cancelling_terms_are_removed() {
        let p = Polynomial::variable(2, 0).add(&Polynomial::variable(2, 0).scale(-1.0));
        assert!(p.is_zero());
    }

    proptest! {
        #[test]
        fn composition_matches_pointwise_evaluation(
            x0 in prop::array::uniform3(-3.0f64..3.0),
            s in -2.0f64..2.0,
            t in -2.0f64..2.0,
        ) {
            let f = hyperboloid();
            let frame = DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0]);
            let g = f.compose_affine(&x0, &frame);
            let p: Vec<f64> = (0..3).map(|i| x0[i] + frame[(i, 0)] * s + frame[(i, 1)] * t).collect();
            prop_assert!((g.eval(&[s, t]) - f.eval(&p)).abs() < 1e-9 * (1.0 + f.eval(&p).abs()));
        }

        #[test]
        fn gradient_matches_finite_differences(x in prop::array::uniform3(-2.0f64..2.0)) {
            let f = hyperboloid().mul(&Polynomial::variable(3, 0)).add(&Polynomial::constant(3, 0.5));
            let g = f.gradient(&x);
            for i in 0..3 {
                let h = 1e-6;
                let mut xp = x; xp[i] += h;
                let mut xm = x; xm[i] -= h;
                let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()));
            }
        }
    }
}
