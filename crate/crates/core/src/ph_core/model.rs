//! JSON model files.
//!
//! ```json
//! {"n":2,"m":1,"J":[[0,-1],[1,0]],"R":[[0,0],[0,1]],"G":[[1],[0]],
//!  "Q":[[1,0],[0,1]],"b":[0,0],"c0":0}
//! ```

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::numerics::{from_rows, to_rows};
use super::{LtiPhSystem, QuadraticHamiltonian};
use crate::error::{PhError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c0: f64,
}

impl ModelFile {
    pub fn from_system(sys: &LtiPhSystem) -> Self {
        Self {
            n: sys.n(),
            m: sys.m(),
            j: to_rows(sys.j()),
            r: to_rows(sys.r()),
            g: to_rows(sys.g()),
            q: to_rows(sys.ham().q()),
            b: sys.ham().b().iter().copied().collect(),
            c0: sys.ham().c0(),
        }
    }

    pub fn to_system(&self) -> Result<LtiPhSystem> {
        let (n, m) = (self.n, self.m);
        let j = from_rows(&self.j, n, n, "J")?;
        let r = from_rows(&self.r, n, n, "R")?;
        let g = from_rows(&self.g, n, m, "G")?;
        let q = from_rows(&self.q, n, n, "Q")?;
        if self.b.len() != n {
            return Err(PhError::DimensionMismatch(format!(
                "b: expected length {n}, got {}",
                self.b.len()
            )));
        }
        let ham = QuadraticHamiltonian::new(q, DVector::from_column_slice(&self.b), self.c0)?;
        LtiPhSystem::new(j, r, g, ham)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PhError::Model(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization")
    }
}

pub fn load_system(path: &Path) -> Result<LtiPhSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PhError::Model(format!("{}: {e}", path.display())))?;
    ModelFile::parse(&text)?.to_system()
}

pub fn save_system(sys: &LtiPhSystem, path: &Path) -> Result<()> {
    std::fs::write(path, ModelFile::from_system(sys).to_json())
        .map_err(|e| PhError::Model(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RLC: &str = r#"{"n":2,"m":1,"J":[[0,-1],[1,0]],"R":[[0,0],[0,1]],
        "G":[[1],[0]],"Q":[[1,0],[0,1]],"b":[0,0],"c0":0}"#;

    #[test]
    fn parses_rlc_model() {
        let sys = ModelFile::parse(RLC).unwrap().to_system().unwrap();
        assert_eq!((sys.n(), sys.m()), (2, 1));
        assert_eq!(sys.r()[(1, 1)], 1.0);
    }

    #[test]
    fn non_skew_model_names_the_invariant() {
        let bad = RLC.replace("[[0,-1],[1,0]]", "[[0,1],[1,0]]");
        let err = ModelFile::parse(&bad).unwrap().to_system().unwrap_err();
        assert!(err.to_string().contains("skew"));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let bad = RLC.replace("[[1],[0]]", "[[1],[0, 2]]");
        assert!(ModelFile::parse(&bad).unwrap().to_system().is_err());
        assert!(ModelFile::parse("{\"n\":2}").is_err());
    }

    proptest! {
        #[test]
        fn written_models_reparse_bit_identically(
            a in -1e6f64..1e6, r in 0.0f64..1e3, g0 in -10.0f64..10.0,
            q0 in 1e-6f64..1e4, q1 in 1e-6f64..1e4, b0 in -1.0f64..1.0, c0 in -5.0f64..5.0,
        ) {
            let file = ModelFile {
                n: 2, m: 1,
                j: vec![vec![0.0, -a], vec![a, 0.0]],
                r: vec![vec![0.0, 0.0], vec![0.0, r]],
                g: vec![vec![g0], vec![0.1 * g0]],
                q: vec![vec![q0, 0.0], vec![0.0, q1]],
                b: vec![b0, -b0 / 3.0],
                c0,
            };
            let sys = file.to_system().unwrap();
            let text = ModelFile::from_system(&sys).to_json();
            let back = ModelFile::parse(&text).unwrap().to_system().unwrap();
            prop_assert_eq!(back, sys);
        }
    }
}
