//! Hamiltonian and classified-perturbation documents.
//!
//! One JSON document per Hamiltonian: sigma, c_effective, window, backend
//! and a terms array of {a, k, kp, re, im} with multi-indices as
//! {mode: exponent} objects. Exact-rational coefficients serialize as
//! decimal "numerator/denominator" strings. Classified terms additionally
//! carry class ∈ {R0, R1, R2} and a j_modes array. Serialization follows
//! the canonical key order, so serialize → parse → serialize is
//! byte-identical.

use crate::classify::{ClassifiedPerturbation, R1Key, R2Key};
use crate::coeff::{rat_from_string, rat_to_string, Backend, C64, CRat, Coeff};
use crate::error::{KamError, Result};
use crate::ham::{ActionVector, Hamiltonian};
use crate::index::{MonomialKey, MultiIndex};
use crate::weight::SigmaWeight;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA: &str = "kamtori-hamiltonian-v1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CoeffField {
    Num(f64),
    Rat(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDoc {
    pub a: BTreeMap<String, u32>,
    pub k: BTreeMap<String, u32>,
    pub kp: BTreeMap<String, u32>,
    pub re: CoeffField,
    pub im: CoeffField,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_modes: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamDoc {
    pub schema: String,
    pub sigma: f64,
    pub c_effective: f64,
    pub window: u32,
    pub backend: Backend,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i0: Option<BTreeMap<String, f64>>,
    pub terms: Vec<TermDoc>,
}

/// Backend-specific coefficient (de)serialization.
pub trait IoCoeff: Coeff {
    fn to_fields(&self) -> (CoeffField, CoeffField);
    fn from_fields(re: &CoeffField, im: &CoeffField) -> Result<Self>;
}

impl IoCoeff for C64 {
    fn to_fields(&self) -> (CoeffField, CoeffField) {
        (CoeffField::Num(self.0.re), CoeffField::Num(self.0.im))
    }
    fn from_fields(re: &CoeffField, im: &CoeffField) -> Result<Self> {
        match (re, im) {
            (CoeffField::Num(r), CoeffField::Num(i)) => Ok(C64::from_re_im(*r, *i)),
            _ => Err(KamError::InvalidParam(
                "float64 document carries rational coefficients".into(),
            )),
        }
    }
}

impl IoCoeff for CRat {
    fn to_fields(&self) -> (CoeffField, CoeffField) {
        (
            CoeffField::Rat(rat_to_string(&self.re)),
            CoeffField::Rat(rat_to_string(&self.im)),
        )
    }
    fn from_fields(re: &CoeffField, im: &CoeffField) -> Result<Self> {
        match (re, im) {
            (CoeffField::Rat(r), CoeffField::Rat(i)) => {
                let re = rat_from_string(r).ok_or_else(|| {
                    KamError::InvalidParam(format!("bad rational literal {r:?}"))
                })?;
                let im = rat_from_string(i).ok_or_else(|| {
                    KamError::InvalidParam(format!("bad rational literal {i:?}"))
                })?;
                Ok(CRat { re, im })
            }
            _ => Err(KamError::InvalidParam(
                "rational document carries float coefficients".into(),
            )),
        }
    }
}

fn index_to_doc(m: &MultiIndex) -> BTreeMap<String, u32> {
    m.iter().map(|(n, e)| (n.to_string(), e)).collect()
}

fn index_from_doc(m: &BTreeMap<String, u32>) -> Result<MultiIndex> {
    let mut out = MultiIndex::new();
    for (k, &e) in m {
        let n: i32 = k
            .parse()
            .map_err(|_| KamError::InvalidParam(format!("bad mode {k:?}")))?;
        if e > 0 {
            out.add(n, e as i64);
        }
    }
    Ok(out)
}

fn key_to_doc(key: &MonomialKey) -> (BTreeMap<String, u32>, BTreeMap<String, u32>, BTreeMap<String, u32>) {
    (
        index_to_doc(&key.a),
        index_to_doc(&key.k),
        index_to_doc(&key.kp),
    )
}

fn key_from_doc(t: &TermDoc) -> Result<MonomialKey> {
    Ok(MonomialKey::new(
        index_from_doc(&t.a)?,
        index_from_doc(&t.k)?,
        index_from_doc(&t.kp)?,
    ))
}

pub fn ham_to_doc<C: IoCoeff>(h: &Hamiltonian<C>) -> HamDoc {
    let terms = h
        .terms
        .iter()
        .map(|(key, c)| {
            let (a, k, kp) = key_to_doc(key);
            let (re, im) = c.to_fields();
            TermDoc {
                a,
                k,
                kp,
                re,
                im,
                class: None,
                j_modes: None,
            }
        })
        .collect();
    HamDoc {
        schema: SCHEMA.to_string(),
        sigma: h.weight.sigma,
        c_effective: h.weight.cutoff(),
        window: h.window,
        backend: C::BACKEND,
        i0: None,
        terms,
    }
}

pub fn doc_to_ham<C: IoCoeff>(doc: &HamDoc) -> Result<Hamiltonian<C>> {
    if doc.schema != SCHEMA {
        return Err(KamError::InvalidParam(format!(
            "unknown schema {:?}",
            doc.schema
        )));
    }
    if doc.backend != C::BACKEND {
        return Err(KamError::BackendMismatch);
    }
    let weight = SigmaWeight::new(doc.sigma, Some(doc.c_effective))?;
    let mut h = Hamiltonian::zero(weight, doc.window);
    for t in &doc.terms {
        if t.class.is_some() {
            return Err(KamError::InvalidParam(
                "classified document loaded as a plain Hamiltonian".into(),
            ));
        }
        h.insert(key_from_doc(t)?, C::from_fields(&t.re, &t.im)?);
    }
    Ok(h)
}

pub fn classified_to_doc<C: IoCoeff>(p: &ClassifiedPerturbation<C>) -> HamDoc {
    let mut terms = Vec::with_capacity(p.term_count());
    for (key, c) in &p.r0 {
        let (a, k, kp) = key_to_doc(key);
        let (re, im) = c.to_fields();
        terms.push(TermDoc {
            a,
            k,
            kp,
            re,
            im,
            class: Some("R0".into()),
            j_modes: Some(vec![]),
        });
    }
    for (rk, c) in &p.r1 {
        let (a, k, kp) = key_to_doc(&rk.key);
        let (re, im) = c.to_fields();
        terms.push(TermDoc {
            a,
            k,
            kp,
            re,
            im,
            class: Some("R1".into()),
            j_modes: Some(vec![rk.j]),
        });
    }
    for (rk, c) in &p.r2 {
        let (a, k, kp) = key_to_doc(&rk.key);
        let (re, im) = c.to_fields();
        terms.push(TermDoc {
            a,
            k,
            kp,
            re,
            im,
            class: Some("R2".into()),
            j_modes: Some(vec![rk.j1, rk.j2]),
        });
    }
    HamDoc {
        schema: SCHEMA.to_string(),
        sigma: p.weight.sigma,
        c_effective: p.weight.cutoff(),
        window: p.window,
        backend: C::BACKEND,
        i0: Some(
            p.i0.values
                .iter()
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
        ),
        terms,
    }
}

pub fn doc_to_classified<C: IoCoeff>(doc: &HamDoc) -> Result<ClassifiedPerturbation<C>> {
    if doc.schema != SCHEMA {
        return Err(KamError::InvalidParam(format!(
            "unknown schema {:?}",
            doc.schema
        )));
    }
    if doc.backend != C::BACKEND {
        return Err(KamError::BackendMismatch);
    }
    let weight = SigmaWeight::new(doc.sigma, Some(doc.c_effective))?;
    let mut values = BTreeMap::new();
    if let Some(i0) = &doc.i0 {
        for (k, v) in i0 {
            let n: i32 = k
                .parse()
                .map_err(|_| KamError::InvalidParam(format!("bad mode {k:?}")))?;
            values.insert(n, *v);
        }
    }
    let i0 = ActionVector::new(values, &weight)?;
    let mut p = ClassifiedPerturbation::empty(weight, doc.window, i0);
    for t in &doc.terms {
        let key = key_from_doc(t)?;
        let c = C::from_fields(&t.re, &t.im)?;
        let class = t.class.as_deref().ok_or_else(|| {
            KamError::InvalidParam("classified document term lacks a class".into())
        })?;
        let j = t.j_modes.clone().unwrap_or_default();
        match (class, j.as_slice()) {
            ("R0", []) => p.merge_r0(key, c),
            ("R1", [m]) => p.merge_r1(R1Key { j: *m, key }, c),
            ("R2", [m1, m2]) => {
                let (j1, j2) = if m1 <= m2 { (*m1, *m2) } else { (*m2, *m1) };
                p.merge_r2(R2Key { j1, j2, key }, c)
            }
            _ => {
                return Err(KamError::InvalidParam(format!(
                    "term class {class:?} inconsistent with j_modes {j:?}"
                )))
            }
        }
    }
    Ok(p)
}

pub fn to_json(doc: &HamDoc) -> String {
    serde_json::to_string_pretty(doc).expect("document serializes")
}

pub fn from_json(s: &str) -> Result<HamDoc> {
    serde_json::from_str(s).map_err(|e| KamError::InvalidParam(format!("parse error: {e}")))
}
