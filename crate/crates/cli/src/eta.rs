//! Stepsize expressions: a literal number, or a named threshold with an
//! optional offset or factor (`eta_c+0.005`, `0.3*eta_dppa`).

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use dppa_core::theory::AnalysisReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Base {
    Literal(f64),
    EtaC,
    EtaDppa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSpec {
    base: Base,
    factor: f64,
    offset: f64,
}

impl EtaSpec {
    pub fn literal(eta: f64) -> Self {
        EtaSpec {
            base: Base::Literal(eta),
            factor: 1.0,
            offset: 0.0,
        }
    }

    pub fn needs_constants(&self) -> bool {
        !matches!(self.base, Base::Literal(_))
    }

    pub fn resolve(&self, report: Option<&AnalysisReport>) -> Result<f64> {
        let base = match self.base {
            Base::Literal(v) => v,
            Base::EtaC => report
                .and_then(|r| r.eta_c)
                .ok_or_else(|| anyhow!("eta_c is undefined for this instance"))?,
            Base::EtaDppa => report
                .and_then(|r| r.eta_dppa)
                .ok_or_else(|| anyhow!("eta_dppa is undefined for this instance"))?,
        };
        let eta = self.factor * base + self.offset;
        if !(eta > 0.0 && eta.is_finite()) {
            bail!("stepsize {self} evaluates to {eta}, which is not positive");
        }
        Ok(eta)
    }
}

fn parse_base(s: &str) -> Result<Base> {
    match s {
        "eta_c" => Ok(Base::EtaC),
        "eta_dppa" => Ok(Base::EtaDppa),
        _ => s
            .parse::<f64>()
            .map(Base::Literal)
            .map_err(|_| anyhow!("expected a number, eta_c or eta_dppa, got {s:?}")),
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| anyhow!("bad number {s:?}"))?;
    if !v.is_finite() {
        bail!("non-finite number {s:?}");
    }
    Ok(v)
}

impl FromStr for EtaSpec {
    type Err = anyhow::Error;

    fn from_str(raw: &str) -> Result<Self> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some((k, rest)) = s.split_once('*') {
            let (k, base) = match parse_base(k)? {
                Base::Literal(k) => (k, parse_base(rest)?),
                b => (parse_num(rest)?, b),
            };
            return Ok(EtaSpec {
                base,
                factor: k,
                offset: 0.0,
            });
        }
        // Split on the first sign that is not part of an exponent.
        let bytes = s.as_bytes();
        let split = (1..bytes.len()).find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
        });
        let (base, offset) = match split {
            Some(i) => (parse_base(&s[..i])?, parse_num(&s[i..])?),
            None => (parse_base(&s)?, 0.0),
        };
        if matches!(base, Base::Literal(_)) && split.is_some() {
            bail!("offsets apply to eta_c or eta_dppa, not to a literal: {raw:?}");
        }
        Ok(EtaSpec {
            base,
            factor: 1.0,
            offset,
        })
    }
}

impl fmt::Display for EtaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.base {
            Base::Literal(v) => return write!(f, "{}", self.factor * v + self.offset),
            Base::EtaC => "eta_c",
            Base::EtaDppa => "eta_dppa",
        };
        if self.factor != 1.0 {
            write!(f, "{}*", self.factor)?;
        }
        f.write_str(name)?;
        if self.offset != 0.0 {
            write!(f, "{:+}", self.offset)?;
        }
        Ok(())
    }
}
