//! File formats: CSV tables with nine significant digits and the JSON run
//! summary.

use std::io::Write;

use serde::Serialize;

use crate::correlator::{ChannelPair, EnsembleResult};
use crate::error::{Error, Result};
use crate::fit::ExponentialFit;

pub const G2_HEADER: &str = "tau,g2_dd,g2_aa,g2_da,g2_ad";
pub const ADIABATIC_HEADER: &str = "tau,g2_aa_adiabatic";

/// Decimal (never exponent) notation with nine significant digits.
/// Non-finite values print as `NaN`, `inf` or `-inf`.
pub fn format_sig9(x: f64) -> String {
    const SIG: i32 = 9;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", (SIG - 1) as usize, 0.0);
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (SIG - 1 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit, e.g. 9.9999999996 -> 10.00000000
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > SIG as usize && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Writes `g2.csv`. The ensemble must contain all four channel pairs.
pub fn write_g2_csv<W: Write>(ensemble: &EnsembleResult, mut out: W) -> Result<()> {
    let columns: Vec<_> = ChannelPair::ALL
        .iter()
        .map(|p| {
            ensemble
                .get(*p)
                .ok_or_else(|| Error::invalid("pairs", format!("g2.csv needs pair {}", p.label())))
        })
        .collect::<Result<_>>()?;
    writeln!(out, "{G2_HEADER}")?;
    for (m, tau) in columns[0].taus.iter().enumerate() {
        write!(out, "{}", format_sig9(*tau))?;
        for c in &columns {
            write!(out, ",{}", format_sig9(c.g2[m]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_adiabatic_csv<W: Write>(taus: &[f64], g2: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "{ADIABATIC_HEADER}")?;
    for (t, g) in taus.iter().zip(g2) {
        writeln!(out, "{},{}", format_sig9(*t), format_sig9(*g))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub pair: String,
    pub mean_intensity_i: f64,
    pub mean_intensity_j: f64,
    pub peak_g2: f64,
    pub peak_tau: f64,
    pub g2_at_tau_max: f64,
    pub fit: Option<ExponentialFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: String,
    pub seed: u64,
    pub n_realizations: usize,
    pub n_samples: usize,
    pub mean_gamma5: f64,
    pub mean_intensity_donor: f64,
    pub mean_intensity_acceptor: f64,
    pub normalization: String,
    pub fit_window: [f64; 2],
    pub pairs: Vec<PairSummary>,
    /// Fully resolved configuration as `key -> value` text, re-readable by
    /// the config parser.
    pub config: serde_json::Map<String, serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(28.0), "28.0000000");
        assert_eq!(format_sig9(0.65), "0.650000000");
        assert_eq!(format_sig9(-0.0123456789), "-0.0123456789");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1234567890");
        assert_eq!(format_sig9(9.9999999996), "10.0000000");
        assert_eq!(format_sig9(f64::NAN), "NaN");
        assert!(!format_sig9(1e-300).contains('e'));
    }
}
