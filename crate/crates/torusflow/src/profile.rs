//! JSON serialization of frequency profiles and the derived series specs.
//!
//! Coefficients and frequencies are decimal strings (they reach ~10^1300);
//! amplitudes carry an explicit underflow marker when they are stored as
//! exactly zero. Loading re-derives convergents and growth certificates from
//! the coefficients instead of trusting the stored ones.

use std::path::Path;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{
    build_y_vector, BuildOptions, FrequencyVector, GrowthCheck, Profile,
};
use crate::ceiling::{CeilingSpec, ReparamSpec};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "torusflow-profile-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileTag {
    Exact,
    Relaxed { base: String, cap: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionDoc {
    pub j: usize,
    pub coeffs: Vec<String>,
    /// Deepest convergent p_N/q_N (informational; re-derived on load).
    pub stand_in: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub subject: (usize, usize),
    pub reference: (usize, usize),
    pub factor: usize,
    pub holds: bool,
    pub capped: bool,
    pub auxiliary: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDoc {
    pub j: usize,
    pub n: usize,
    pub freq: String,
    pub amp: String,
    pub underflow: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CeilingDoc {
    pub n0: usize,
    pub nmax: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReparamTermDoc {
    pub j: usize,
    pub n: usize,
    pub l: String,
    pub d_re: f64,
    pub d_im: f64,
    pub omega: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub format: String,
    pub tool_version: String,
    pub profile: ProfileTag,
    pub depth: usize,
    pub aux_levels: usize,
    pub directions: Vec<DirectionDoc>,
    pub certificates: Vec<CertificateDoc>,
    pub fully_certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<CeilingDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reparam: Option<Vec<ReparamTermDoc>>,
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let parts: Vec<&str> = s.split('/').collect();
    let parse_int = |v: &str| -> Result<BigInt> {
        v.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::InvalidInput(format!("bad integer {v:?}: {e}")))
    };
    match parts.as_slice() {
        [n] => Ok(BigRational::from(parse_int(n)?)),
        [n, d] => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::InvalidInput("zero denominator".into()));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        _ => Err(Error::InvalidInput(format!("bad rational {s:?}"))),
    }
}

pub fn document_from(fv: &FrequencyVector, spec: Option<&ReparamSpec>) -> ProfileDocument {
    let profile = match &fv.profile {
        Profile::Exact => ProfileTag::Exact,
        Profile::Relaxed { base, cap } => ProfileTag::Relaxed {
            base: rational_string(base),
            cap: cap.to_string(),
        },
    };
    let directions = (1..=4)
        .map(|j| DirectionDoc {
            j,
            coeffs: fv.cf[j - 1].coeffs().iter().map(|a| a.to_string()).collect(),
            stand_in: rational_string(&fv.stand_in(j)),
        })
        .collect();
    let certificates = fv
        .certificates
        .iter()
        .map(|c: &GrowthCheck| CertificateDoc {
            subject: (c.subject_dir, c.subject_level),
            reference: (c.ref_dir, c.ref_level),
            factor: c.factor,
            holds: c.holds,
            capped: c.capped,
            auxiliary: c.auxiliary,
        })
        .collect();
    let ceiling = spec.map(|r| CeilingDoc {
        n0: r.base.n0,
        nmax: r.base.nmax,
        terms: r
            .base
            .terms
            .iter()
            .map(|t| TermDoc {
                j: t.j,
                n: t.n,
                freq: t.freq.to_string(),
                amp: if t.underflow {
                    "0".into()
                } else {
                    format!("{:e}", t.amp)
                },
                underflow: t.underflow,
            })
            .collect(),
    });
    let reparam = spec.map(|r| {
        r.terms
            .iter()
            .map(|t| ReparamTermDoc {
                j: t.j,
                n: t.n,
                l: t.l.to_string(),
                d_re: t.d.re,
                d_im: t.d.im,
                omega: rational_string(&t.omega),
            })
            .collect()
    });
    ProfileDocument {
        format: FORMAT_TAG.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        profile,
        depth: fv.depth,
        aux_levels: fv.aux_levels,
        directions,
        certificates,
        fully_certified: fv.fully_certified(),
        ceiling,
        reparam,
    }
}

/// Rebuild the frequency vector from a document: the stored coefficients are
/// replayed through the constructor, so convergents and certificates are
/// re-derived rather than trusted.
pub fn vector_from_document(doc: &ProfileDocument) -> Result<FrequencyVector> {
    if doc.format != FORMAT_TAG {
        return Err(Error::InvalidInput(format!(
            "unknown profile format {:?}",
            doc.format
        )));
    }
    let profile = match &doc.profile {
        ProfileTag::Exact => Profile::Exact,
        ProfileTag::Relaxed { base, cap } => Profile::Relaxed {
            base: parse_rational(base)?,
            cap: cap
                .parse::<BigUint>()
                .map_err(|e| Error::InvalidInput(format!("bad cap: {e}")))?,
        },
    };
    let mut seed: [Vec<BigUint>; 4] = Default::default();
    for d in &doc.directions {
        if !(1..=4).contains(&d.j) {
            return Err(Error::InvalidInput(format!("bad direction {}", d.j)));
        }
        seed[d.j - 1] = d
            .coeffs
            .iter()
            .map(|s| {
                s.parse::<BigUint>()
                    .map_err(|e| Error::InvalidInput(format!("bad coefficient {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
    }
    // Replaying seeded coefficients reconstructs exactly the stored vector;
    // the auxiliary tail is part of the seed, so no aux is appended here.
    let total_depth = doc.depth + doc.aux_levels;
    let mut fv = build_y_vector(
        seed,
        total_depth,
        profile,
        &BuildOptions {
            digit_budget: usize::MAX >> 1,
            aux_coeff: None,
        },
    )?;
    fv.depth = doc.depth;
    fv.aux_levels = doc.aux_levels;
    // re-tag the trailing certificates as auxiliary
    for c in fv.certificates.iter_mut() {
        if c.subject_level > doc.depth {
            c.auxiliary = true;
        }
    }
    Ok(fv)
}

pub fn save_profile(
    path: &Path,
    fv: &FrequencyVector,
    spec: Option<&ReparamSpec>,
) -> Result<()> {
    let doc = document_from(fv, spec);
    let json = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_profile(path: &Path) -> Result<(FrequencyVector, Option<(usize, usize)>)> {
    let text = std::fs::read_to_string(path)?;
    let doc: ProfileDocument = serde_json::from_str(&text)?;
    let fv = vector_from_document(&doc)?;
    let spec_params = doc.ceiling.as_ref().map(|c| (c.n0, c.nmax));
    Ok((fv, spec_params))
}

/// Ceiling spec from a loaded profile (falls back to the full spec).
pub fn spec_from_loaded(
    fv: FrequencyVector,
    params: Option<(usize, usize)>,
) -> Result<CeilingSpec> {
    let fv = Arc::new(fv);
    match params {
        Some((n0, nmax)) => CeilingSpec::new(fv, n0, nmax),
        None => CeilingSpec::full(fv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{exact_level1_profile, relaxed_default_profile};

    #[test]
    fn round_trip_exact_profile() {
        let fv = exact_level1_profile().unwrap();
        let spec = CeilingSpec::full(Arc::new(fv.clone())).unwrap();
        let rspec = ReparamSpec::new(spec).unwrap();
        let doc = document_from(&fv, Some(&rspec));
        let json = serde_json::to_string(&doc).unwrap();
        let doc2: ProfileDocument = serde_json::from_str(&json).unwrap();
        let fv2 = vector_from_document(&doc2).unwrap();
        for j in 1..=4 {
            assert_eq!(fv.cf[j - 1], fv2.cf[j - 1]);
        }
        assert_eq!(fv2.depth, 1);
        assert_eq!(fv2.aux_levels, 1);
        assert!(fv2.fully_certified());
    }

    #[test]
    fn round_trip_relaxed_profile() {
        let fv = relaxed_default_profile().unwrap();
        let doc = document_from(&fv, None);
        let fv2 = vector_from_document(&doc).unwrap();
        for j in 1..=4 {
            assert_eq!(fv.cf[j - 1], fv2.cf[j - 1]);
        }
        assert_eq!(
            fv.certificates.len(),
            fv2.certificates.len(),
            "re-derived certificates must match"
        );
        for (a, b) in fv.certificates.iter().zip(&fv2.certificates) {
            assert_eq!(a.holds, b.holds);
        }
    }
}
