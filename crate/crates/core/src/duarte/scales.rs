use serde::Serialize;

use crate::error::{Error, Result};

/// Scales of the droplet construction. `n` and `blocks` are `None` when
/// `N` does not fit in a `u64`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuarteScales {
    pub q: Option<f64>,
    pub epsilon: Option<f64>,
    /// `ℓ`.
    pub ell: u64,
    /// `N`.
    pub n: Option<u64>,
    /// `ln N` before flooring, kept when `N` is too large to hold.
    pub log_n: f64,
    pub n1: u64,
    pub n2: u64,
    /// `m = 4 n₁ n₂`.
    pub m: u64,
    /// `M = ⌈N/m⌉`.
    pub blocks: Option<u64>,
    pub warnings: Vec<String>,
}

/// `ℓ = ⌊log(1/q)/(εq)⌋`, `N = ⌊e^{ε(log q)²/q}⌋`, `n₁ = ⌊ε(log q)²/(2q)⌋`,
/// `n₂ = ⌊q^{−6}⌋`.
pub fn paper_scales(q: f64, epsilon: f64) -> Result<DuarteScales> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Probability(q));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let lq = q.ln();
    let ell = ((1.0 / q).ln() / (epsilon * q)).floor();
    let log_n = epsilon * lq * lq / q;
    let n1 = (epsilon * lq * lq / (2.0 * q)).floor();
    let n2 = (1.0 / q).powi(6).floor();
    let mut warnings = Vec::new();
    let n = if log_n < 64.0 * std::f64::consts::LN_2 {
        Some(log_n.exp().floor() as u64)
    } else {
        warnings.push(format!("N = e^{log_n:.3} exceeds 2^64 and cannot be materialised"));
        None
    };
    let to_int = |v: f64, name: &str, warnings: &mut Vec<String>| {
        if v >= u64::MAX as f64 {
            warnings.push(format!("{name} saturates at 2^64"));
            u64::MAX
        } else {
            v as u64
        }
    };
    let ell = to_int(ell, "ℓ", &mut warnings);
    let n1 = to_int(n1, "n₁", &mut warnings);
    let n2 = to_int(n2, "n₂", &mut warnings);
    let mut scales = DuarteScales {
        q: Some(q),
        epsilon: Some(epsilon),
        ell,
        n,
        log_n,
        n1,
        n2,
        m: 0,
        blocks: None,
        warnings,
    };
    scales.finish();
    Ok(scales)
}

impl DuarteScales {
    /// Free choice of `(ℓ, N, n₁, n₂)`.
    pub fn toy(ell: u64, n: u64, n1: u64, n2: u64) -> Result<Self> {
        let mut scales = DuarteScales {
            q: None,
            epsilon: None,
            ell,
            n: Some(n),
            log_n: (n as f64).ln(),
            n1,
            n2,
            m: 0,
            blocks: None,
            warnings: Vec::new(),
        };
        scales.finish();
        scales.validate_toy()?;
        Ok(scales)
    }

    fn finish(&mut self) {
        self.m = 4u64.saturating_mul(self.n1).saturating_mul(self.n2);
        if self.m == 0 {
            self.warnings.push("block size m = 4n₁n₂ is zero".into());
        }
        self.blocks = match (self.n, self.m) {
            (Some(n), m) if m > 0 => {
                if n % m != 0 {
                    self.warnings.push(format!("m = {m} does not divide N = {n}; last block padded"));
                }
                Some(n.div_ceil(m))
            }
            _ => None,
        };
        if self.ell == 0 {
            self.warnings.push("ℓ = 0".into());
        }
    }

    /// All of `ℓ, N, n₁, n₂, m, M` are positive and `N` is finite.
    pub fn validate_toy(&self) -> Result<()> {
        let ok = self.ell > 0 && self.n.is_some_and(|n| n > 0) && self.n1 > 0 && self.n2 > 0 && self.m > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "scales ℓ = {}, N = {:?}, n₁ = {}, n₂ = {} are not all positive",
                self.ell, self.n, self.n1, self.n2
            )))
        }
    }
}
