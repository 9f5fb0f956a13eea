//! JSON input documents. Gap, tooth and box numbers are 1-based here.

use serde::{Deserialize, Serialize};

use crate::abel::{BoxFactor, Character};
use crate::comb::{CombData, DivisorSpec, Tooth};
use crate::error::{Error, Result};
use crate::herglotz::{Divisor, DivisorPoint, Sign};
use crate::spectral_set::GapSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisorEntry {
    pub x: f64,
    pub eps: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxEntry {
    pub gap: usize,
    pub a: f64,
    pub b: f64,
    pub eps: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToothEntry {
    pub omega: f64,
    pub h: f64,
}

/// Divisor point for a comb tooth: relative position `s` in its gap, or the
/// critical point when `s` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToothDivisorEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub eps: i64,
}

/// A number, or the string "inf".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailBound {
    Number(f64),
    Text(String),
}

impl TailBound {
    pub fn value(&self) -> Result<f64> {
        match self {
            TailBound::Number(v) => Ok(*v),
            TailBound::Text(t) if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
                Ok(f64::INFINITY)
            }
            TailBound::Text(t) => Err(Error::invalid("tail_bound", format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// One input document; each subcommand reads the parts it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<Vec<DivisorEntry>>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<BoxEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teeth: Option<Vec<ToothEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<TailBound>,
    /// character for `invert`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// divisor positions per tooth for the kernel truncation report
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tooth_divisor: Option<Vec<ToothDivisorEntry>>,
    /// truncation levels for the comb reports
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<f64>>,
}

fn required<T>(v: &Option<T>, field: &str) -> Result<T>
where
    T: Clone,
{
    v.clone().ok_or_else(|| Error::invalid(field, "required field is missing"))
}

impl InputDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("json", e.to_string()))
    }

    pub fn has_gap_system(&self) -> bool {
        self.band.is_some()
    }

    pub fn gap_system(&self) -> Result<GapSystem> {
        let [b0, a0] = required(&self.band, "band")?;
        let gaps = self.gaps.clone().unwrap_or_default();
        GapSystem::new(b0, a0, gaps.into_iter().map(|[a, b]| (a, b)).collect())
    }

    pub fn divisor(&self, gs: &GapSystem) -> Result<Divisor> {
        let entries = required(&self.divisor, "divisor")?;
        let points = entries
            .iter()
            .map(|e| Ok(DivisorPoint { x: e.x, eps: parse_sign("divisor", e.eps)? }))
            .collect::<Result<Vec<_>>>()?;
        Divisor::new(gs, points)
    }

    pub fn boxes(&self) -> Result<Vec<BoxFactor>> {
        let entries = required(&self.boxes, "box")?;
        entries
            .iter()
            .map(|e| {
                if e.gap == 0 {
                    return Err(Error::invalid("box", "gap numbers start at 1"));
                }
                Ok(BoxFactor { gap: e.gap - 1, a: e.a, b: e.b, eps: parse_sign("box", e.eps)? })
            })
            .collect()
    }

    pub fn comb(&self) -> Result<CombData> {
        let teeth = required(&self.teeth, "teeth")?;
        let tail = match &self.tail_bound {
            Some(t) => t.value()?,
            None => 0.0,
        };
        CombData::new(teeth.iter().map(|t| Tooth { omega: t.omega, h: t.h }).collect(), tail)
    }

    pub fn alpha(&self) -> Result<Character> {
        let a = required(&self.alpha, "alpha")?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("alpha", "coordinates must be finite"));
        }
        Ok(Character::new(a))
    }

    pub fn tooth_divisor(&self) -> Result<Vec<DivisorSpec>> {
        let entries = required(&self.tooth_divisor, "tooth_divisor")?;
        entries
            .iter()
            .map(|e| {
                let eps = parse_sign("tooth_divisor", e.eps)?;
                Ok(match e.s {
                    Some(s) => DivisorSpec::Relative { s, eps },
                    None => DivisorSpec::Critical { eps },
                })
            })
            .collect()
    }
}

fn parse_sign(field: &str, v: i64) -> Result<Sign> {
    Sign::from_i64(v).map_err(|_| Error::invalid(field, format!("eps must be 1 or -1, got {v}")))
}

impl From<&GapSystem> for InputDoc {
    fn from(gs: &GapSystem) -> Self {
        InputDoc {
            band: Some([gs.b0(), gs.a0()]),
            gaps: Some(gs.gaps().iter().map(|&(a, b)| [a, b]).collect()),
            ..InputDoc::default()
        }
    }
}

pub fn divisor_entries(d: &Divisor) -> Vec<DivisorEntry> {
    d.points()
        .iter()
        .map(|p| DivisorEntry { x: p.x, eps: p.eps.value() as i64 })
        .collect()
}
