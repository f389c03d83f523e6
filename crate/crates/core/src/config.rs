//! JSON description of an emitter.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::emitter::EmitterModel;
use crate::error::{Error, Result};

fn default_unit() -> String {
    "arb".into()
}

/// Real and imaginary parts are separate arrays; missing imaginary parts
/// are zero. `frequency_unit` is a label only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub n: usize,
    pub h_m_re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_m_im: Option<Vec<Vec<f64>>>,
    pub gamma_vec_re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_vec_im: Option<Vec<f64>>,
    pub gamma_rate: f64,
    #[serde(default = "default_unit")]
    pub frequency_unit: String,
}

fn shape_error(detail: String) -> Error {
    Error::InvalidModel {
        invariant: "dimension",
        detail,
    }
}

impl EmitterConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("emitter block: {e}")))
    }

    pub fn to_model(&self) -> Result<EmitterModel> {
        let n = self.n;
        if n == 0 {
            return Err(shape_error("n must be positive".into()));
        }
        let check_matrix = |name: &str, m: &[Vec<f64>]| -> Result<()> {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(shape_error(format!("{name} must be {n} x {n}")));
            }
            Ok(())
        };
        check_matrix("h_m_re", &self.h_m_re)?;
        if let Some(im) = &self.h_m_im {
            check_matrix("h_m_im", im)?;
        }
        if self.gamma_vec_re.len() != n || self.gamma_vec_im.as_ref().is_some_and(|v| v.len() != n) {
            return Err(shape_error(format!(
                "gamma_vec_re and gamma_vec_im must have length {n}"
            )));
        }
        let h = DMatrix::from_fn(n, n, |i, j| {
            C64::new(self.h_m_re[i][j], self.h_m_im.as_ref().map_or(0.0, |m| m[i][j]))
        });
        let g = DVector::from_fn(n, |i, _| {
            C64::new(self.gamma_vec_re[i], self.gamma_vec_im.as_ref().map_or(0.0, |v| v[i]))
        });
        EmitterModel::new(h, g, self.gamma_rate)
    }

    pub fn from_model(model: &EmitterModel, frequency_unit: &str) -> Self {
        let n = model.n();
        let h = model.h_m();
        let g = model.gamma_vec();
        let rows =
            |f: fn(&C64) -> f64| -> Vec<Vec<f64>> { (0..n).map(|i| (0..n).map(|j| f(&h[(i, j)])).collect()).collect() };
        let has_im = h.iter().any(|z| z.im != 0.0);
        let g_im = g.iter().any(|z| z.im != 0.0);
        Self {
            n,
            h_m_re: rows(|z| z.re),
            h_m_im: has_im.then(|| rows(|z| z.im)),
            gamma_vec_re: g.iter().map(|z| z.re).collect(),
            gamma_vec_im: g_im.then(|| g.iter().map(|z| z.im).collect()),
            gamma_rate: model.gamma_rate(),
            frequency_unit: frequency_unit.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_model, rng};

    #[test]
    fn tls_block() {
        let c = EmitterConfig::from_json(r#"{"n": 1, "h_m_re": [[0.25]], "gamma_vec_re": [1.0], "gamma_rate": 2.0}"#)
            .unwrap();
        let m = c.to_model().unwrap();
        assert_eq!((m.detuning(1), m.gamma_rate()), (0.25, 2.0));
        assert_eq!(c.frequency_unit, "arb");
    }

    #[test]
    fn round_trip() {
        let mut r = rng(1);
        let m = random_model(&mut r, 3, 1e-3);
        let c = EmitterConfig::from_model(&m, "GHz");
        let text = serde_json::to_string(&c).unwrap();
        let back = EmitterConfig::from_json(&text).unwrap().to_model().unwrap();
        assert_eq!(back.h_m(), m.h_m());
        assert_eq!(back.gamma_vec(), m.gamma_vec());
    }

    #[test]
    fn violations_name_their_invariant() {
        let cases = [
            (
                r#"{"n": 2, "h_m_re": [[0.0]], "gamma_vec_re": [1.0, 0.0], "gamma_rate": 1.0}"#,
                "dimension",
            ),
            (
                r#"{"n": 1, "h_m_re": [[0.0]], "gamma_vec_re": [1.0], "gamma_rate": 0.0}"#,
                "gamma_rate_positive",
            ),
            (
                r#"{"n": 1, "h_m_re": [[0.0]], "gamma_vec_re": [0.5], "gamma_rate": 1.0}"#,
                "gamma_vec_normalized",
            ),
            (
                r#"{"n": 2, "h_m_re": [[0.0, 1.0], [0.0, 0.0]], "gamma_vec_re": [1.0, 0.0], "gamma_rate": 1.0}"#,
                "h_m_hermitian",
            ),
        ];
        for (text, name) in cases {
            match EmitterConfig::from_json(text).unwrap().to_model() {
                Err(Error::InvalidModel { invariant, .. }) => assert_eq!(invariant, name),
                other => panic!("{name}: {other:?}"),
            }
        }
        assert!(matches!(
            EmitterConfig::from_json(
                r#"{"n": 1, "h_m_re": [[0.0]], "gamma_vec_re": [1.0], "gamma_rate": 1.0, "typo": 1}"#
            ),
            Err(Error::Format(_))
        ));
    }
}
