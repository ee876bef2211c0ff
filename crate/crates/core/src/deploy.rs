//! Throughput estimates for a network on clocked hardware whose spike I/O
//! runs at a coarser time resolution than its compute clock.
//!
//! All quantities are exact rationals. Model: feeding one frame costs one
//! I/O slot per event (events enter serially), computing costs one clock
//! tick per timestep, and the network can accept the next frame after its
//! reuse interval. The sustained frame rate is set by whichever of input
//! time and reuse time is larger; output spikes are not modeled since the
//! sparse label spikes are strictly fewer than the input events.

use num_rational::Ratio;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::flat::{FLAT_REUSE_INTERVAL, FLAT_SOLUTION_STEPS};
use crate::grid::DbscanParams;
use crate::network::BuilderKind;
use crate::systolic::{systolic_reuse_interval, systolic_solution_steps};

pub type Exact = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeploymentModel {
    clock_hz: Exact,
    io_slot_seconds: Exact,
    events_per_frame: u64,
}

impl DeploymentModel {
    /// Clock and I/O slot must be positive; zero events is a legal
    /// degenerate frame.
    pub fn new(clock_hz: Exact, io_slot_seconds: Exact, events_per_frame: u64) -> Result<Self> {
        if clock_hz <= Exact::from_integer(0) {
            return Err(Error::Deployment(format!("clock must be positive, got {clock_hz}")));
        }
        if io_slot_seconds <= Exact::from_integer(0) {
            return Err(Error::Deployment(format!(
                "I/O time resolution must be positive, got {io_slot_seconds}"
            )));
        }
        Ok(Self {
            clock_hz,
            io_slot_seconds,
            events_per_frame,
        })
    }

    pub fn clock_hz(&self) -> Exact {
        self.clock_hz
    }

    pub fn io_slot_seconds(&self) -> Exact {
        self.io_slot_seconds
    }

    pub fn events_per_frame(&self) -> u64 {
        self.events_per_frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bottleneck {
    Io,
    Compute,
}

impl Bottleneck {
    pub fn token(&self) -> &'static str {
        match self {
            Bottleneck::Io => "I/O",
            Bottleneck::Compute => "compute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeploymentReport {
    /// Seconds from injection to the last output spike of one frame.
    pub compute_time: Exact,
    /// Seconds to feed one frame's events through the I/O channel.
    pub input_time: Exact,
    /// Seconds before the network can accept the next frame.
    pub reuse_time: Exact,
    /// Sustained frames per second: 1 / max(input_time, reuse_time).
    pub rate_hz: Exact,
    pub bottleneck: Bottleneck,
    pub timesteps_to_solution: u32,
    pub reuse_interval: u32,
}

/// Timesteps-to-solution and reuse interval for a construction on an
/// instance. Width-independent constructions take the column count from
/// the instance.
pub fn timing_contract(builder: BuilderKind, params: &DbscanParams) -> Result<(u32, u32)> {
    match builder {
        BuilderKind::Flat | BuilderKind::PartialFlat => {
            Ok((FLAT_SOLUTION_STEPS, FLAT_REUSE_INTERVAL))
        }
        BuilderKind::Systolic | BuilderKind::PartialSystolic => Ok((
            systolic_solution_steps(params.cols(), params.epsilon()),
            systolic_reuse_interval(params.cols(), params.epsilon()),
        )),
        BuilderKind::Custom => Err(Error::Deployment(
            "no timing contract for custom networks".into(),
        )),
    }
}

pub fn estimate_deployment(
    builder: BuilderKind,
    params: &DbscanParams,
    model: &DeploymentModel,
) -> Result<DeploymentReport> {
    let (tts, reuse) = timing_contract(builder, params)?;
    let compute_time = Exact::from_integer(tts as i128) / model.clock_hz;
    let input_time = Exact::from_integer(model.events_per_frame as i128) * model.io_slot_seconds;
    let reuse_time = Exact::from_integer(reuse as i128) / model.clock_hz;
    let limit = input_time.max(reuse_time);
    let bottleneck = if input_time > reuse_time {
        Bottleneck::Io
    } else {
        Bottleneck::Compute
    };
    Ok(DeploymentReport {
        compute_time,
        input_time,
        reuse_time,
        rate_hz: limit.recip(),
        bottleneck,
        timesteps_to_solution: tts,
        reuse_interval: reuse,
    })
}

/// Parses a decimal like `2.5e-6`, `100e6`, or `0.25`, or a fraction like
/// `1/400000`, into an exact rational.
pub fn parse_exact(s: &str) -> Result<Exact> {
    let bad = |msg: &str| Error::Deployment(format!("cannot parse {s:?}: {msg}"));
    let s = s.trim();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i128 = num.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: i128 = den.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d == 0 {
            return Err(bad("zero denominator"));
        }
        return Ok(Exact::new(n, d));
    }

    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad("bad exponent"))?),
        None => (s, 0),
    };
    let (mantissa, sign) = match mantissa.strip_prefix('-') {
        Some(rest) => (rest, -1i128),
        None => (mantissa.strip_prefix('+').unwrap_or(mantissa), 1),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad("non-digit in mantissa"));
    }
    if digits.len() > 30 {
        return Err(bad("too many digits"));
    }
    let value: i128 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| bad("mantissa overflow"))?
    };
    let exp = exp - frac_part.len() as i32;
    if exp.unsigned_abs() > 30 {
        return Err(bad("exponent out of range"));
    }
    let scale = 10i128.pow(exp.unsigned_abs());
    let ratio = if exp >= 0 {
        Exact::from_integer(sign * value * scale)
    } else {
        Exact::new(sign * value, scale)
    };
    Ok(ratio)
}

/// Renders seconds with an engineering unit, exactly when the value
/// terminates in that unit, otherwise approximately.
pub fn format_seconds(v: Exact) -> String {
    format_scaled(v, &[(1, "s"), (1_000, "ms"), (1_000_000, "us"), (1_000_000_000, "ns")])
}

/// Renders a rate in Hz, kHz, or MHz.
pub fn format_hz(v: Exact) -> String {
    let units = [(1i128, "Hz"), (1_000, "kHz"), (1_000_000, "MHz")];
    let mut chosen = units[0];
    for &(scale, unit) in &units {
        if v.abs() >= Exact::from_integer(scale) {
            chosen = (scale, unit);
        }
    }
    let x = v / Exact::from_integer(chosen.0);
    format_terminating(x, chosen.1).unwrap_or_else(|| format_approx(x, chosen.1))
}

fn format_scaled(v: Exact, units: &[(i128, &str)]) -> String {
    for &(scale, unit) in units {
        let x = v * Exact::from_integer(scale);
        if x.abs() >= Exact::from_integer(1) || scale == units.last().unwrap().0 {
            if let Some(s) = format_terminating(x, unit) {
                return s;
            }
            return format_approx(x, unit);
        }
    }
    format_approx(v, units[0].1)
}

/// Exact decimal rendering when the denominator is of the form 2^a 5^b
/// with at most 6 decimal places.
fn format_terminating(x: Exact, unit: &str) -> Option<String> {
    let mut den = *x.denom();
    for p in [2i128, 5] {
        while den % p == 0 {
            den /= p;
        }
    }
    if den != 1 && den != -1 {
        return None;
    }
    for places in 0..=6u32 {
        let scaled = x * Exact::from_integer(10i128.checked_pow(places)?);
        if scaled.is_integer() {
            let n = scaled.to_integer();
            if places == 0 {
                return Some(format!("{n}{unit}"));
            }
            let sign = if n < 0 { "-" } else { "" };
            let n = n.unsigned_abs();
            let base = 10u128.pow(places);
            let (int, frac) = (n / base, n % base);
            let frac = format!("{frac:0width$}", width = places as usize);
            let frac = frac.trim_end_matches('0');
            return Some(if frac.is_empty() {
                format!("{sign}{int}{unit}")
            } else {
                format!("{sign}{int}.{frac}{unit}")
            });
        }
    }
    None
}

fn format_approx(x: Exact, unit: &str) -> String {
    let v = *x.numer() as f64 / *x.denom() as f64;
    format!("{v:.4}{unit}")
}
