//! Piecewise-constant control modulation produced by ideal π-pulse trains.
//!
//! A [`ModulationFunction`] is `f(t) = s · (−1)^{#pulses ≤ t}` on `[0, T_s]`,
//! where `s` is the initial sign. Pulses are instantaneous; coincident pulses
//! cancel pairwise and a pulse sitting on `t = 0` is folded into `s`.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Relative tolerance (in units of `T_s`) under which two pulse instants are
/// treated as the same instant.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn flipped_if(self, odd: bool) -> Sign {
        if odd {
            self.flip()
        } else {
            self
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// A maximal interval on which the modulation is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: Sign,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Kernels with closed-form integrals against a piecewise-constant `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `1`
    Constant,
    /// `exp(−t/τ)`
    DecayFromStart { tau: f64 },
    /// `exp(−(T_s − t)/τ)`
    DecayToEnd { tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFunction {
    sensing_time: f64,
    pulse_times: Vec<f64>,
    initial_sign: Sign,
}

impl ModulationFunction {
    /// Builds a modulation from arbitrary pulse instants in `[0, T_s]`.
    ///
    /// Instants are sorted and coalesced: groups of coincident pulses cancel
    /// pairwise, an odd pulse left at `t = 0` flips the initial sign, and an
    /// odd pulse left at `t = T_s` is dropped (it only acts after sensing).
    pub fn new(
        sensing_time: f64,
        pulses: impl IntoIterator<Item = f64>,
        initial_sign: Sign,
    ) -> Result<Self> {
        if !(sensing_time.is_finite() && sensing_time > 0.0) {
            return Err(invalid("sensing_time", format!("must be positive, got {sensing_time}")));
        }
        let tol = COINCIDENCE_TOLERANCE * sensing_time;
        let mut raw: Vec<f64> = pulses.into_iter().collect();
        for &t in &raw {
            if !t.is_finite() || t < -tol || t > sensing_time + tol {
                return Err(invalid(
                    "pulse_times",
                    format!("pulse at {t} lies outside [0, {sensing_time}]"),
                ));
            }
        }
        raw.sort_by(f64::total_cmp);

        let mut sign = initial_sign;
        let mut pulse_times = Vec::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            let anchor = raw[i];
            let mut j = i + 1;
            while j < raw.len() && raw[j] - anchor <= tol {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                if anchor <= tol {
                    sign = sign.flip();
                } else if anchor < sensing_time - tol {
                    pulse_times.push(anchor);
                }
            }
            i = j;
        }

        Ok(Self { sensing_time, pulse_times, initial_sign: sign })
    }

    pub fn sensing_time(&self) -> f64 {
        self.sensing_time
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn initial_sign(&self) -> Sign {
        self.initial_sign
    }

    pub fn n_pulses(&self) -> usize {
        self.pulse_times.len()
    }

    /// Sign of `f` after the last pulse.
    pub fn final_sign(&self) -> Sign {
        self.initial_sign.flipped_if(self.pulse_times.len() % 2 == 1)
    }

    /// `f(t)`; at a pulse instant the pulse is counted as already applied.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.sensing_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, sensing_time: self.sensing_time });
        }
        let applied = self.pulse_times.partition_point(|&p| p <= t);
        Ok(self.initial_sign.flipped_if(applied % 2 == 1).value())
    }

    /// Constant-sign pieces covering `[0, T_s]` in time order.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.pulse_times.len() + 1);
        let mut start = 0.0;
        let mut sign = self.initial_sign;
        for &p in &self.pulse_times {
            out.push(Segment { start, end: p, sign });
            start = p;
            sign = sign.flip();
        }
        out.push(Segment { start, end: self.sensing_time, sign });
        out
    }

    /// `f_T(t) = f(T_s − t)`.
    pub fn time_reverse(&self) -> Self {
        let ts = self.sensing_time;
        let pulse_times = self.pulse_times.iter().rev().map(|&p| ts - p).collect();
        Self { sensing_time: ts, pulse_times, initial_sign: self.final_sign() }
    }

    /// True when the pulse set is mirror symmetric, i.e. `f_T = ±f`. The
    /// overall sign only conjugates the signal, so it is ignored here.
    pub fn is_time_symmetric(&self) -> bool {
        let rev = self.time_reverse();
        let tol = 1e-12 * self.sensing_time;
        self.pulse_times.len() == rev.pulse_times.len()
            && self.pulse_times.iter().zip(&rev.pulse_times).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Same sensing time, same initial sign and pulse instants within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.sensing_time - other.sensing_time).abs() <= tol
            && self.initial_sign == other.initial_sign
            && self.pulse_times.len() == other.pulse_times.len()
            && self
                .pulse_times
                .iter()
                .zip(&other.pulse_times)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Exact `∫₀^{T_s} f(t) k(t) dt`, summed segment by segment.
    pub fn integrate_against(&self, kernel: Kernel) -> Result<f64> {
        let ts = self.sensing_time;
        let piece: Box<dyn Fn(f64, f64) -> f64> = match kernel {
            Kernel::Constant => Box::new(|a, b| b - a),
            Kernel::DecayFromStart { tau } => {
                check_tau(tau)?;
                Box::new(move |a, b| -tau * (-a / tau).exp() * (-(b - a) / tau).exp_m1())
            }
            Kernel::DecayToEnd { tau } => {
                check_tau(tau)?;
                Box::new(move |a, b| -tau * (-(ts - b) / tau).exp() * (-(b - a) / tau).exp_m1())
            }
        };
        Ok(self
            .segments()
            .iter()
            .map(|s| s.sign.value() * piece(s.start, s.end))
            .sum())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(invalid("tau", format!("kernel correlation time must be positive, got {tau}")))
    }
}

/// Hahn echo: a single π pulse at `T_s/2`.
pub fn make_hahn(sensing_time: f64) -> Result<ModulationFunction> {
    ModulationFunction::new(sensing_time, [sensing_time / 2.0], Sign::Plus)
}

/// CPMG train of `n` equidistant pulses at `(k − ½)·T_s/n`.
pub fn make_cpmg(n: usize, sensing_time: f64) -> Result<ModulationFunction> {
    if n < 1 {
        return Err(invalid("n_pulses", "CPMG needs at least one pulse"));
    }
    let spacing = sensing_time / n as f64;
    ModulationFunction::new(
        sensing_time,
        (1..=n).map(|k| (k as f64 - 0.5) * spacing),
        Sign::Plus,
    )
}

/// Parameters of a selective dynamical recoupling sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrParams {
    n_pulses: usize,
    asymmetry: f64,
    sensing_time: f64,
}

impl SdrParams {
    pub fn new(n_pulses: usize, asymmetry: f64, sensing_time: f64) -> Result<Self> {
        if n_pulses < 2 {
            return Err(invalid("n_pulses", format!("SDR needs N ≥ 2, got {n_pulses}")));
        }
        if !(sensing_time.is_finite() && sensing_time > 0.0) {
            return Err(invalid("sensing_time", format!("must be positive, got {sensing_time}")));
        }
        let x_max = max_asymmetry(n_pulses);
        if !asymmetry.is_finite() || asymmetry < 0.0 || asymmetry > x_max + 1e-12 {
            return Err(invalid(
                "x",
                format!("asymmetry {asymmetry} outside [0, {x_max}] for N = {n_pulses}"),
            ));
        }
        Ok(Self { n_pulses, asymmetry: asymmetry.min(x_max), sensing_time })
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn sensing_time(&self) -> f64 {
        self.sensing_time
    }
}

/// Upper end `(N − 1)/N` of the SDR asymmetry range, where SDR becomes CPMG.
pub fn max_asymmetry(n_pulses: usize) -> f64 {
    (n_pulses as f64 - 1.0) / n_pulses as f64
}

/// SDR: `N − 1` CPMG pulses packed into `[0, x·T_s]`, then one echo pulse at
/// `(x + 1)·T_s/2`.
pub fn make_sdr(p: SdrParams) -> Result<ModulationFunction> {
    let ts = p.sensing_time;
    let x = p.asymmetry;
    let train = p.n_pulses - 1;
    let spacing = x * ts / train as f64;
    let pulses = (1..=train)
        .map(|k| (k as f64 - 0.5) * spacing)
        .chain(std::iter::once(0.5 * (x + 1.0) * ts));
    ModulationFunction::new(ts, pulses, Sign::Plus)
}

/// Time-reversed SDR: the long echo first, then the packed CPMG train.
pub fn make_tsdr(p: SdrParams) -> Result<ModulationFunction> {
    Ok(make_sdr(p)?.time_reverse())
}

/// Sequence families addressable from configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKind {
    Hahn,
    Cpmg { n_pulses: usize },
    Sdr { n_pulses: usize, x: f64 },
    Tsdr { n_pulses: usize, x: f64 },
}

impl SequenceKind {
    pub fn build(&self, sensing_time: f64) -> Result<ModulationFunction> {
        match *self {
            SequenceKind::Hahn => make_hahn(sensing_time),
            SequenceKind::Cpmg { n_pulses } => make_cpmg(n_pulses, sensing_time),
            SequenceKind::Sdr { n_pulses, x } => make_sdr(SdrParams::new(n_pulses, x, sensing_time)?),
            SequenceKind::Tsdr { n_pulses, x } => {
                make_tsdr(SdrParams::new(n_pulses, x, sensing_time)?)
            }
        }
    }
}
