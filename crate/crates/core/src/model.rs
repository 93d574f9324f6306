//! Resonator parameters and the complex combinations the exact solvers use.
//!
//! All rates are absolute frequencies (ħ = 1). Parameter files and the CLI may
//! express them as ratios to `gamma` or `chi`; [`ModelParams::from_json_map`]
//! converts those to absolute values once, at the boundary.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Driven-dissipative Kerr resonator:
/// `H = Δc a†a + χ a†²a² + iΩ(a† − a) + ½(Λ a†² + Λ* a²)`,
/// one-photon loss `γ D[a]` and two-photon loss `κ D[a²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta_c: f64,
    pub chi: f64,
    pub omega: f64,
    pub gamma: f64,
    pub lambda_2ph: Complex64,
    pub kappa: f64,
}

/// `ε = Ω/(iχ)` and `x = (2Δc − iγ)/(2χ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDerived {
    pub epsilon: Complex64,
    pub x: Complex64,
}

/// Displacement `λ`, and `y`, `z` of the displaced recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonDerived {
    pub lambda_disp: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

/// Frequency used as the unit for ratio-form parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitAnchor {
    Gamma,
    Chi,
}

impl UnitAnchor {
    fn key(self) -> &'static str {
        match self {
            UnitAnchor::Gamma => "gamma",
            UnitAnchor::Chi => "chi",
        }
    }
}

const PARAM_KEYS: [&str; 7] = [
    "delta_c",
    "chi",
    "omega",
    "gamma",
    "lambda_re",
    "lambda_im",
    "kappa",
];

impl ModelParams {
    /// Coherently driven Kerr resonator with one-photon loss only.
    pub fn coherent(delta_c: f64, chi: f64, omega: f64, gamma: f64) -> Self {
        ModelParams {
            delta_c,
            chi,
            omega,
            gamma,
            lambda_2ph: Complex64::new(0.0, 0.0),
            kappa: 0.0,
        }
    }

    pub fn with_two_photon(mut self, lambda_2ph: Complex64, kappa: f64) -> Self {
        self.lambda_2ph = lambda_2ph;
        self.kappa = kappa;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_delta_c(mut self, delta_c: f64) -> Self {
        self.delta_c = delta_c;
        self
    }

    /// Every rate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        ModelParams {
            delta_c: self.delta_c * s,
            chi: self.chi * s,
            omega: self.omega * s,
            gamma: self.gamma * s,
            lambda_2ph: self.lambda_2ph * s,
            kappa: self.kappa * s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.delta_c,
            self.chi,
            self.omega,
            self.gamma,
            self.lambda_2ph.re,
            self.lambda_2ph.im,
            self.kappa,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega must be >= 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// True when only the coherent drive and one-photon loss are present.
    pub fn is_coherent_only(&self) -> bool {
        self.lambda_2ph == Complex64::new(0.0, 0.0) && self.kappa == 0.0
    }

    /// Parses a flat JSON object.
    ///
    /// Absolute keys: `delta_c, chi, omega, gamma, lambda_re, lambda_im, kappa`.
    /// Ratio keys take the form `<key>_over_gamma` or `<key>_over_chi`; the
    /// anchor's own absolute value may be given (defaults to 1) and a single
    /// object may use only one anchor. Keys listed in `extra` are ignored;
    /// anything else is rejected.
    pub fn from_json_map(map: &serde_json::Map<String, Value>, extra: &[&str]) -> Result<Self> {
        let mut absolute: BTreeMap<&str, f64> = BTreeMap::new();
        let mut ratio: BTreeMap<&str, f64> = BTreeMap::new();
        let mut anchor: Option<UnitAnchor> = None;

        for (key, value) in map {
            if extra.contains(&key.as_str()) {
                continue;
            }
            let num = value
                .as_f64()
                .ok_or_else(|| Error::InvalidParams(format!("`{key}` must be a number")))?;
            if let Some(k) = PARAM_KEYS.iter().find(|k| **k == key) {
                absolute.insert(k, num);
                continue;
            }
            let split = key
                .rsplit_once("_over_")
                .and_then(|(base, unit)| {
                    let unit = match unit {
                        "gamma" => UnitAnchor::Gamma,
                        "chi" => UnitAnchor::Chi,
                        _ => return None,
                    };
                    PARAM_KEYS.iter().find(|k| **k == base).map(|k| (*k, unit))
                })
                .ok_or_else(|| Error::InvalidParams(format!("unknown parameter key `{key}`")))?;
            match anchor {
                Some(a) if a != split.1 => {
                    return Err(Error::InvalidParams(
                        "ratio keys must all use the same anchor".into(),
                    ))
                }
                _ => anchor = Some(split.1),
            }
            if split.0 == split.1.key() {
                return Err(Error::InvalidParams(format!("`{key}` is trivially 1")));
            }
            ratio.insert(split.0, num);
        }

        if let Some(a) = anchor {
            let scale = *absolute.entry(a.key()).or_insert(1.0);
            for (k, r) in ratio {
                if absolute.insert(k, r * scale).is_some() {
                    return Err(Error::InvalidParams(format!(
                        "`{k}` given both absolutely and as a ratio"
                    )));
                }
            }
        }

        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            absolute
                .get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::InvalidParams(format!("missing parameter `{k}`")))
        };
        let params = ModelParams {
            delta_c: get("delta_c", None)?,
            chi: get("chi", None)?,
            omega: get("omega", Some(0.0))?,
            gamma: get("gamma", None)?,
            lambda_2ph: Complex64::new(get("lambda_re", Some(0.0))?, get("lambda_im", Some(0.0))?),
            kappa: get("kappa", Some(0.0))?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("malformed JSON: {e}")))?;
        let map = value
            .as_object()
            .ok_or_else(|| Error::InvalidParams("expected a JSON object".into()))?;
        Self::from_json_map(map, &[])
    }

    /// Flat absolute-unit JSON object, readable by [`ModelParams::from_json_map`].
    pub fn to_json_map(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        let vals = [
            self.delta_c,
            self.chi,
            self.omega,
            self.gamma,
            self.lambda_2ph.re,
            self.lambda_2ph.im,
            self.kappa,
        ];
        for (k, v) in PARAM_KEYS.iter().zip(vals) {
            m.insert((*k).to_string(), Value::from(v));
        }
        m
    }
}

pub fn derive_linear(params: &ModelParams) -> Result<LinearDerived> {
    if params.chi == 0.0 {
        return Err(Error::InvalidParams("chi must be nonzero".into()));
    }
    let i = Complex64::i();
    Ok(LinearDerived {
        epsilon: Complex64::new(params.omega, 0.0) / (i * params.chi),
        x: Complex64::new(2.0 * params.delta_c, -params.gamma) / (2.0 * params.chi),
    })
}

/// Uses the principal square root for `λ = i√(2Λ/(2χ − iκ))`.
pub fn derive_twophoton(params: &ModelParams) -> Result<TwoPhotonDerived> {
    let den = Complex64::new(2.0 * params.chi, -params.kappa);
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParams("2chi - i kappa vanishes".into()));
    }
    if params.lambda_2ph == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParams(
            "two-photon drive Lambda must be nonzero".into(),
        ));
    }
    let lambda_disp = Complex64::i() * (2.0 * params.lambda_2ph / den).sqrt();
    Ok(TwoPhotonDerived::from_lambda(params, lambda_disp))
}

impl TwoPhotonDerived {
    /// `y` and `z` for a given displacement; both square-root branches of `λ`
    /// are valid displacements.
    pub fn from_lambda(params: &ModelParams, lambda_disp: Complex64) -> Self {
        let den = Complex64::new(2.0 * params.chi, -params.kappa);
        let detune = Complex64::new(2.0 * params.delta_c, -params.gamma);
        let drive = Complex64::new(0.0, -2.0 * std::f64::consts::SQRT_2 * params.omega);
        TwoPhotonDerived {
            lambda_disp,
            y: (drive + lambda_disp * detune) / (2.0 * lambda_disp * den),
            z: detune / den,
        }
    }

    /// The same quantities on the other square-root branch (`λ → −λ`).
    pub fn negated_branch(&self, params: &ModelParams) -> Self {
        Self::from_lambda(params, -self.lambda_disp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear_substitution() {
        let d = derive_linear(&ModelParams::coherent(5.0, -0.25, 4.0, 1.0)).unwrap();
        assert_eq!(d.epsilon, c(0.0, 16.0));
        assert_eq!(d.x, c(-20.0, 2.0));

        let d = derive_linear(&ModelParams::coherent(1.0, 1.0, 1.0, 2.0)).unwrap();
        assert_eq!(d.epsilon, c(0.0, -1.0));
        assert_eq!(d.x, c(1.0, -1.0));

        let d = derive_linear(&ModelParams::coherent(3.0, 0.7, 0.0, 1.0)).unwrap();
        assert_eq!(d.epsilon.norm(), 0.0);
    }

    #[test]
    fn linear_requires_kerr() {
        let e = derive_linear(&ModelParams::coherent(1.0, 0.0, 1.0, 1.0));
        assert!(matches!(e, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn imag_x_sign_follows_chi() {
        for chi in [-2.0, -0.1, 0.3, 5.0] {
            let d = derive_linear(&ModelParams::coherent(0.4, chi, 1.0, 0.8)).unwrap();
            assert_eq!(d.x.im, -0.8 / (2.0 * chi));
            assert_eq!(d.x.im < 0.0, chi > 0.0);
        }
    }

    #[test]
    fn twophoton_substitution() {
        let p = ModelParams::coherent(-1.0, 1.0, 0.0, 0.1).with_two_photon(c(0.5, 0.0), 0.0);
        let d = derive_twophoton(&p).unwrap();
        assert!((d.lambda_disp - c(0.0, 0.5f64.sqrt())).norm() < 1e-16);
        assert!((d.z - c(-1.0, -0.05)).norm() < 1e-16);
        // no coherent drive: y = z/2 whatever λ is
        assert!((d.y - d.z / 2.0).norm() < 1e-15);
        let flipped = d.negated_branch(&p);
        assert!((flipped.y - d.z / 2.0).norm() < 1e-15);
    }

    #[test]
    fn twophoton_rejects_degenerate_inputs() {
        let p = ModelParams::coherent(-1.0, 0.0, 0.1, 0.1).with_two_photon(c(0.2, 0.0), 0.0);
        assert!(derive_twophoton(&p).is_err());
        let p = ModelParams::coherent(-1.0, 1.0, 0.1, 0.1);
        assert!(derive_twophoton(&p).is_err());
    }

    #[test]
    fn ratio_keys_resolve_against_anchor() {
        let p = ModelParams::from_json_str(
            r#"{"delta_c_over_gamma": 5, "chi_over_gamma": -0.25, "omega_over_gamma": 4, "gamma": 2}"#,
        )
        .unwrap();
        assert_eq!(p, ModelParams::coherent(10.0, -0.5, 8.0, 2.0));

        let p = ModelParams::from_json_str(
            r#"{"delta_c_over_chi": -1, "gamma_over_chi": 0.1, "kappa_over_chi": 0.1,
                "lambda_re_over_chi": 0.2}"#,
        )
        .unwrap();
        assert_eq!(p.chi, 1.0);
        assert_eq!(p.lambda_2ph, c(0.2, 0.0));
        assert_eq!(p.kappa, 0.1);
    }

    #[test]
    fn json_rejects_mixed_or_unknown_keys() {
        for bad in [
            r#"{"delta_c_over_gamma": 5, "chi_over_chi": 1, "gamma": 1}"#,
            r#"{"delta_c_over_gamma": 5, "chi_over_chi": 1}"#,
            r#"{"delta_c": 1, "chi": 1, "gamma": 1, "omga": 3}"#,
            r#"{"delta_c": 1, "delta_c_over_gamma": 1, "chi": 1, "gamma": 1}"#,
            r#"{"delta_c": 1, "chi": 1, "gamma": -1}"#,
            r#"{"delta_c": 1, "chi": 1}"#,
            r#"[1, 2]"#,
        ] {
            assert!(ModelParams::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_round_trip() {
        let p = ModelParams::coherent(-1.5, 0.9, 0.3, 0.1).with_two_photon(c(0.2, -0.05), 0.07);
        let text = serde_json::to_string(&Value::Object(p.to_json_map())).unwrap();
        assert_eq!(ModelParams::from_json_str(&text).unwrap(), p);
    }
}
