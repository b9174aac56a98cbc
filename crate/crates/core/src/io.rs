//! JSON documents for quivers and matrices, and the `a+bi` complex syntax.
//!
//! Complex entries are `[re, im]` pairs; matrices are row-major nested lists.
//! Numbers are written in shortest round-trip form, so save/load is bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cxmat::{c, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::normal_form::BorelElement;
use crate::quiver::{DimensionVector, Quiver, ScalarChain};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverDocument {
    pub dims: Vec<usize>,
    pub alpha: Vec<JsonMatrix>,
    pub beta: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<JsonComplex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub matrix: JsonMatrix,
    /// `"B"` or `"B1"` for Borel elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

pub fn complex_to_json(z: Complex) -> JsonComplex {
    [z.re, z.im]
}

pub fn complex_from_json(z: &JsonComplex) -> Complex {
    c(z[0], z[1])
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.rows()).map(|i| m.row(i).into_iter().map(complex_to_json).collect()).collect()
}

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { line: None, field: field.into(), message: message.into() }
}

/// Builds a `rows x cols` matrix; an empty list is accepted for zero-row shapes.
pub fn matrix_from_json(m: &JsonMatrix, field: &str, cols_hint: Option<usize>) -> Result<CMatrix> {
    let rows = m.len();
    let cols = m.first().map(Vec::len).or(cols_hint).unwrap_or(0);
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(parse_err(format!("{field} row {i}"), format!("has {} entries, expected {cols}", row.len())));
        }
        data.extend(row.iter().map(complex_from_json));
    }
    CMatrix::from_vec(rows, cols, data).map_err(|e| parse_err(field, e.to_string()))
}

impl QuiverDocument {
    pub fn from_quiver(q: &Quiver, s: Option<&ScalarChain>, metadata: Option<Metadata>) -> Self {
        QuiverDocument {
            dims: q.dims().as_slice().to_vec(),
            alpha: q.alphas().iter().map(matrix_to_json).collect(),
            beta: q.betas().iter().map(matrix_to_json).collect(),
            q: s.map(|s| s.q().iter().copied().map(complex_to_json).collect()),
            metadata,
        }
    }

    /// Validates shapes, invertibility and the chain length.
    pub fn to_quiver(&self) -> Result<(Quiver, Option<ScalarChain>)> {
        let dims = DimensionVector::new(self.dims.clone())?;
        let levels = self.dims.len() - 1;
        for (name, maps) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if maps.len() != levels {
                return Err(parse_err(name, format!("has {} matrices, expected {levels}", maps.len())));
            }
        }
        let d = &self.dims;
        let alphas = self
            .alpha
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_json(m, &format!("alpha[{k}]"), Some(d[k])))
            .collect::<Result<Vec<_>>>()?;
        let betas = self
            .beta
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_json(m, &format!("beta[{k}]"), Some(d[k + 1])))
            .collect::<Result<Vec<_>>>()?;
        let quiver = Quiver::new(dims, alphas, betas)?;
        let chain = match &self.q {
            None => None,
            Some(q) if q.len() != levels => {
                return Err(parse_err("q", format!("has {} entries, expected {levels}", q.len())));
            }
            Some(q) => Some(
                ScalarChain::new(q.iter().map(complex_from_json).collect()).map_err(|e| parse_err("q", e.to_string()))?,
            ),
        };
        Ok((quiver, chain))
    }
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMatrix, variant: Option<&str>) -> Self {
        MatrixDocument { matrix: matrix_to_json(m), variant: variant.map(str::to_owned) }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        matrix_from_json(&self.matrix, "matrix", None)
    }

    /// Interprets the document as an element of `B` or `B_1`; `default` applies when
    /// the document names no variant.
    pub fn to_borel(&self, default: &str) -> Result<BorelElement> {
        let m = self.to_matrix()?;
        match self.variant.as_deref().unwrap_or(default) {
            "B" => BorelElement::b(m),
            "B1" => BorelElement::b1(m),
            other => Err(parse_err("variant", format!("unknown Borel variant {other:?}"))),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn from_json_text<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        field: "document".into(),
        message: e.to_string(),
    })
}

pub fn parse_quiver_document(text: &str) -> Result<QuiverDocument> {
    from_json_text(text)
}

pub fn parse_matrix_document(text: &str) -> Result<MatrixDocument> {
    from_json_text(text)
}

pub fn load_quiver_document(path: &Path) -> Result<QuiverDocument> {
    parse_quiver_document(&read(path)?)
}

pub fn load_quiver(path: &Path) -> Result<(Quiver, Option<ScalarChain>)> {
    load_quiver_document(path)?.to_quiver()
}

pub fn save_quiver(q: &Quiver, s: Option<&ScalarChain>, path: &Path) -> Result<()> {
    save_quiver_document(&QuiverDocument::from_quiver(q, s, None), path)
}

pub fn save_quiver_document(doc: &QuiverDocument, path: &Path) -> Result<()> {
    write(path, &to_pretty_json(doc))
}

pub fn load_matrix(path: &Path) -> Result<MatrixDocument> {
    parse_matrix_document(&read(path)?)
}

pub fn save_matrix(doc: &MatrixDocument, path: &Path) -> Result<()> {
    write(path, &to_pretty_json(doc))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}

/// Parses `a+bi` with optional parts: `2`, `-1.5e-3`, `i`, `-2i`, `1-i`, `0.5+2.25i`.
pub fn parse_complex(text: &str) -> Result<Complex> {
    let s: String = text.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || Error::InvalidInput(format!("cannot parse complex number {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse::<f64>().ok().filter(|x| x.is_finite()).map(|re| c(re, 0.0)).ok_or_else(bad);
    };
    // the sign separating real and imaginary parts is the last one not in an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re_part.is_empty() { 0.0 } else { re_part.parse::<f64>().map_err(|_| bad())? };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    let z = c(re, im);
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(bad());
    }
    Ok(z)
}

/// Comma-separated list of complex numbers.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex>> {
    text.split(',').map(parse_complex).collect()
}

/// Comma-separated list of reals.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("cannot parse real number {t:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cxmat::cr;
    use crate::quiver::{gen_toric, ToricSplit};

    #[test]
    fn complex_syntax() {
        let cases = [
            ("2", c(2.0, 0.0)),
            ("-1.5e-3", c(-1.5e-3, 0.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("+2i", c(0.0, 2.0)),
            ("1-i", c(1.0, -1.0)),
            ("0.5+2.25i", c(0.5, 2.25)),
            ("1e-3-2E+2i", c(1e-3, -200.0)),
            (" -3 + 4i ", c(-3.0, 4.0)),
        ];
        for (text, z) in cases {
            assert_eq!(parse_complex(text).unwrap(), z, "{text}");
        }
        for bad in ["", "abc", "1+", "i2", "1++2i", "nan"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_complex_list("1,-1,i").unwrap(), vec![cr(1.0), cr(-1.0), c(0.0, 1.0)]);
    }

    #[test]
    fn quiver_round_trip_is_bit_exact() {
        let w = Complex::from_polar(1.0, 0.7);
        let s = ScalarChain::new(vec![w, c(0.3, -1.1)]).unwrap();
        let q = gen_toric(3, &s, &ToricSplit::Principal).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toric3.json");
        save_quiver(&q, Some(&s), &path).unwrap();
        let (back, chain) = load_quiver(&path).unwrap();
        assert_eq!(back, q);
        assert_eq!(chain.unwrap(), s);
    }

    #[test]
    fn validation_messages() {
        let doc = r#"{"dims":[2,1,3],"alpha":[[],[]],"beta":[[],[]]}"#;
        let err = parse_quiver_document(doc).unwrap().to_quiver().unwrap_err();
        assert_eq!(err, Error::InvalidQuiver("dims not strictly increasing".into()));

        let doc = r#"{"dims":[1,2],"alpha":[[[[0,0]],[[0,0]]]],"beta":[[[[0,0],[0,0]]]],"q":[[1,0],[1,0]]}"#;
        let err = parse_quiver_document(doc).unwrap().to_quiver().unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "q"), "{err}");

        let doc = "{\n  \"dims\": [1, 2],\n  \"alpha\": oops\n}";
        let err = parse_quiver_document(doc).unwrap_err();
        assert!(matches!(err, Error::Parse { line: Some(3), .. }), "{err}");

        let doc = r#"{"dims":[1,2],"alpha":[[[[0,0]],[[0,0],[1,1]]]],"beta":[[[[0,0],[0,0]]]]}"#;
        let err = parse_quiver_document(doc).unwrap().to_quiver().unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "alpha[0] row 1"), "{err}");
    }

    #[test]
    fn matrix_document_variants() {
        let doc = parse_matrix_document(r#"{"matrix":[[[1,0],[3,0]],[[0,0],[2,0]]],"variant":"B1"}"#).unwrap();
        assert!(doc.to_borel("B").is_ok());
        let doc = parse_matrix_document(r#"{"matrix":[[[1,0],[3,0]],[[0,0],[2,0]]]}"#).unwrap();
        assert!(doc.to_borel("B").is_err());
        assert!(doc.to_borel("B1").is_ok());
    }
}
