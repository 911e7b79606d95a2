use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hensynth::formula::read_henkin_vector;
use hensynth::oracle::{check_vector, decide_truth, Truth, MAX_CHECK_UNIVERSALS};
use hensynth::sat::Limits;
use hensynth::verifier::{Verdict, Verifier};

use crate::run::{load_instance, EXIT_FALSE, EXIT_SYNTHESIZED};

const EXIT_INVALID: u8 = 2;

/// Certificates are checked by enumeration when X is small enough and by
/// the error formula otherwise.
pub fn verify(instance: &Path, certificate: &Path) -> Result<u8> {
    let inst = load_instance(instance)?;
    let text = fs::read_to_string(certificate).with_context(|| format!("reading {}", certificate.display()))?;
    let cert = read_henkin_vector(&text).with_context(|| format!("parsing {}", certificate.display()))?;
    let invalid = |msg: String| {
        println!("INVALID: {msg}");
        Ok(EXIT_INVALID)
    };
    if cert.num_existentials != inst.existentials().len() {
        return invalid(format!(
            "header declares {} existentials, instance has {}",
            cert.num_existentials,
            inst.existentials().len()
        ));
    }
    for &y in inst.existentials() {
        if cert.vector.get(y).is_none() {
            return invalid(format!("no function for existential {y}"));
        }
    }
    if let Some((y, _)) = cert.vector.iter().find(|(y, _)| !inst.is_existential(*y)) {
        return invalid(format!("definition for {y}, which is not an existential"));
    }
    if let Some((y, v)) = cert.vector.henkin_violations(&inst).first() {
        return invalid(format!("function of {y} reads {v} outside its dependency set"));
    }
    let valid = if inst.universals().len() <= MAX_CHECK_UNIVERSALS {
        check_vector(&inst, &cert.vector)?
    } else {
        let mut verifier = Verifier::new(&inst, &Limits::default());
        verifier.verify(&cert.vector, &[])? == Verdict::Verified
    };
    if valid {
        println!("VALID");
        Ok(0)
    } else {
        invalid("matrix is falsified for some universal assignment".into())
    }
}

pub fn decide(instance: &Path) -> Result<u8> {
    let inst = load_instance(instance)?;
    match decide_truth(&inst)? {
        Truth::True(_) => {
            println!("RESULT: TRUE");
            Ok(EXIT_SYNTHESIZED)
        }
        Truth::False => {
            println!("RESULT: FALSE");
            Ok(EXIT_FALSE)
        }
    }
}
