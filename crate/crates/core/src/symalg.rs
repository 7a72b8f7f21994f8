//! Truncated polynomials in the boundary symbols
//! `uf, uf', uf'', uf''', uf''''` (slots 0 to 4).
//!
//! Every product and derivative is followed by truncation: a monomial whose
//! exponent in any slot exceeds that slot's cap is discarded. Since exponents
//! never decrease under multiplication, truncated multiplication stays
//! commutative, associative and distributive.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GmlError, Result};

pub const N_SYMBOLS: usize = 5;

pub type Exponents = [u8; N_SYMBOLS];

/// Coefficients below this magnitude are not stored.
const CANONICAL_FLOOR: f64 = 1e-300;

const SYMBOL_NAMES: [&str; N_SYMBOLS] = ["uf", "uf'", "uf''", "uf'''", "uf''''"];

/// Largest exponent kept per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub caps: Exponents,
}

impl TruncationSpec {
    pub const fn new(caps: Exponents) -> Self {
        Self { caps }
    }

    #[inline]
    pub fn admits(&self, exp: &Exponents) -> bool {
        exp.iter().zip(&self.caps).all(|(e, c)| e <= c)
    }

    fn relaxed(&self, by: u8) -> Self {
        Self {
            caps: self.caps.map(|c| c.saturating_add(by)),
        }
    }
}

impl Default for TruncationSpec {
    /// `(3, 1, 1, 0, 0)`.
    fn default() -> Self {
        Self::new([3, 1, 1, 0, 0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolynomial {
    terms: BTreeMap<Exponents, f64>,
    trunc: TruncationSpec,
}

impl BoundaryPolynomial {
    pub fn zero(trunc: TruncationSpec) -> Self {
        Self {
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn constant(value: f64, trunc: TruncationSpec) -> Self {
        Self::monomial([0; N_SYMBOLS], value, trunc)
    }

    /// The `k`-th derivative symbol, `uf^(k)`.
    pub fn symbol(k: usize, trunc: TruncationSpec) -> Self {
        let mut exp = [0; N_SYMBOLS];
        exp[k] = 1;
        Self::monomial(exp, 1.0, trunc)
    }

    /// `coeff * prod_k uf^(k)^exp[k]`, empty if the caps reject it.
    pub fn monomial(exp: Exponents, coeff: f64, trunc: TruncationSpec) -> Self {
        let mut p = Self::zero(trunc);
        if trunc.admits(&exp) && coeff.abs() >= CANONICAL_FLOOR {
            p.terms.insert(exp, coeff);
        }
        p
    }

    /// Builds from raw terms, truncating and merging duplicates.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (Exponents, f64)>,
        trunc: TruncationSpec,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (exp, c) in terms {
            if trunc.admits(&exp) {
                *map.entry(exp).or_insert(0.0) += c;
            }
        }
        Self::canonical(map, trunc)
    }

    fn canonical(mut terms: BTreeMap<Exponents, f64>, trunc: TruncationSpec) -> Self {
        terms.retain(|_, c| c.abs() >= CANONICAL_FLOOR);
        Self { terms, trunc }
    }

    pub fn trunc(&self) -> TruncationSpec {
        self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: Exponents) -> f64 {
        self.terms.get(&exp).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff([0; N_SYMBOLS])
    }

    pub fn respects_caps(&self) -> bool {
        self.terms.keys().all(|e| self.trunc.admits(e))
    }

    fn same_trunc(&self, other: &Self) -> Result<()> {
        if self.trunc == other.trunc {
            Ok(())
        } else {
            Err(GmlError::TruncationMismatch(
                self.trunc.caps,
                other.trunc.caps,
            ))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.same_trunc(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(*e).or_insert(0.0) += s * c;
        }
        Ok(Self::canonical(terms, self.trunc))
    }

    pub fn scale(&self, s: f64) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (*e, s * c)).collect();
        Self::canonical(terms, self.trunc)
    }

    /// Adds `value` to the constant term.
    pub fn add_constant(&self, value: f64) -> Self {
        let mut terms = self.terms.clone();
        *terms.entry([0; N_SYMBOLS]).or_insert(0.0) += value;
        Self::canonical(terms, self.trunc)
    }

    /// Distributive product followed by truncation.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_trunc(other)?;
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut e = [0u8; N_SYMBOLS];
                let mut keep = true;
                for k in 0..N_SYMBOLS {
                    let s = e1[k] as u16 + e2[k] as u16;
                    if s > self.trunc.caps[k] as u16 {
                        keep = false;
                        break;
                    }
                    e[k] = s as u8;
                }
                if keep {
                    *terms.entry(e).or_insert(0.0) += c1 * c2;
                }
            }
        }
        Ok(Self::canonical(terms, self.trunc))
    }

    /// `d/dx`, where `uf^(k)` maps to `uf^(k+1)`; `uf''''` maps beyond the
    /// tracked symbols and its contribution is dropped. Truncates afterwards.
    pub fn diff(&self) -> Self {
        let terms = differentiate(&self.terms, &self.trunc);
        Self::canonical(terms, self.trunc)
    }

    /// `order`-th derivative computed exactly and truncated once at the end.
    ///
    /// Differs from iterating [`Self::diff`] when an intermediate term
    /// exceeds a cap but its derivative does not.
    pub fn diff_n(&self, order: u8) -> Self {
        let wide = self.trunc.relaxed(order);
        let mut terms = self.terms.clone();
        for _ in 0..order {
            terms = differentiate(&terms, &wide);
        }
        terms.retain(|e, _| self.trunc.admits(e));
        Self::canonical(terms, self.trunc)
    }

    /// Substitutes all five symbols.
    pub fn eval_full(&self, values: [f64; N_SYMBOLS]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(&values)
                    .fold(*c, |acc, (&k, &v)| acc * v.powi(k as i32))
            })
            .sum()
    }

    /// Substitutes `uf`, `uf'`, `uf''`; the polynomial must not depend on
    /// the higher derivatives (their caps are zero by default).
    pub fn eval(&self, uf: f64, uf1: f64, uf2: f64) -> f64 {
        debug_assert!(
            self.terms.keys().all(|e| e[3] == 0 && e[4] == 0),
            "polynomial depends on uf''' or uf''''"
        );
        self.eval_full([uf, uf1, uf2, 0.0, 0.0])
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (e, c) in &self.terms {
            m = m.max((c - other.coeff(*e)).abs());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                m = m.max(c.abs());
            }
        }
        m
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson { exp: *e, coeff: *c })
                .collect(),
        }
    }

    /// Rejects terms that exceed `trunc`.
    pub fn from_json(json: &PolynomialJson, trunc: TruncationSpec) -> Result<Self> {
        if let Some(t) = json.terms.iter().find(|t| !trunc.admits(&t.exp)) {
            return Err(GmlError::InvalidParameter(format!(
                "term {:?} exceeds caps {:?}",
                t.exp, trunc.caps
            )));
        }
        Ok(Self::from_terms(
            json.terms.iter().map(|t| (t.exp, t.coeff)),
            trunc,
        ))
    }
}

fn differentiate(
    terms: &BTreeMap<Exponents, f64>,
    caps: &TruncationSpec,
) -> BTreeMap<Exponents, f64> {
    let mut out = BTreeMap::new();
    for (e, c) in terms {
        for k in 0..N_SYMBOLS - 1 {
            if e[k] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[k] -= 1;
            ne[k + 1] += 1;
            if caps.admits(&ne) {
                *out.entry(ne).or_insert(0.0) += c * e[k] as f64;
            }
        }
    }
    out
}

/// `{"terms": [{"exp": [i, j, k, l, m], "coeff": c}, ...]}`, terms in
/// lexicographic exponent order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Exponents,
    pub coeff: f64,
}

impl Serialize for BoundaryPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryPolynomial {
    /// Uses the default truncation.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = PolynomialJson::deserialize(d)?;
        Self::from_json(&json, TruncationSpec::default()).map_err(serde::de::Error::custom)
    }
}

/// Six significant digits, scientific outside `[1e-4, 1e6)`.
fn format_coeff(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e6).contains(&a) {
        format!("{a:.5e}")
    } else {
        let digits = if a == 0.0 {
            5
        } else {
            (5 - a.log10().floor() as i32).max(0) as usize
        };
        let s = format!("{a:.digits$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

impl fmt::Display for BoundaryPolynomial {
    /// Printed order: constant, `uf` powers, then `uf''` products.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by_key(|(e, _)| [e[4], e[3], e[2], e[1], e[0]]);
        for (i, (e, c)) in ordered.into_iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            match (i, sign) {
                (0, "-") => f.write_str("-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let mut factors = Vec::new();
            for (k, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => factors.push(SYMBOL_NAMES[k].to_string()),
                    _ => factors.push(format!("{}^{p}", SYMBOL_NAMES[k])),
                }
            }
            write!(f, "{}", format_coeff(*c))?;
            for fac in factors {
                write!(f, " {fac}")?;
            }
        }
        Ok(())
    }
}
