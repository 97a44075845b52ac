//! Population dynamics of the donor-acceptor pair.
//!
//! With optical coherences dropped, the pair is a four-state Markov chain
//! over `|donor, acceptor>` in {00, 01, 10, 11}. Five jump channels act on it:
//! donor decay (gamma1), acceptor decay (gamma2), donor excitation (gamma3),
//! acceptor excitation (gamma4) and energy transfer (gamma5), the last
//! moving `|10>` to `|01>` only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const P00: usize = 0;
pub const P01: usize = 1;
pub const P10: usize = 2;
pub const P11: usize = 3;

/// Largest tolerated change of the total probability in one RK4 step.
pub const MAX_STEP_DRIFT: f64 = 1e-6;
/// Entries in `(-NEGATIVE_TOLERANCE, 0)` are clamped to zero; anything
/// further below is an integration failure.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Emission channel of a detected photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Donor,
    Acceptor,
}

impl Channel {
    pub fn swapped(self) -> Self {
        match self {
            Channel::Donor => Channel::Acceptor,
            Channel::Acceptor => Channel::Donor,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Channel::Donor => 'd',
            Channel::Acceptor => 'a',
        }
    }
}

/// Which dye hands its excitation to the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferDirection {
    /// `|10> -> |01>`, the physical FRET direction.
    #[default]
    DonorToAcceptor,
    /// `|01> -> |10>`; only used to check relabeling symmetry.
    AcceptorToDonor,
}

/// Constant rate coefficients. The transfer rate is supplied separately since
/// it may follow a noisy trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    /// Donor spontaneous emission.
    pub gamma1: f64,
    /// Acceptor spontaneous emission.
    pub gamma2: f64,
    /// Donor laser excitation.
    pub gamma3: f64,
    /// Acceptor (off-resonant) laser excitation.
    pub gamma4: f64,
    #[serde(default)]
    pub transfer: TransferDirection,
}

impl Default for RateSet {
    /// `gamma1 = gamma2 = gamma3 = 1`, `gamma4 = 0.1 gamma3`.
    fn default() -> Self {
        Self::with_acceptor_fraction(1.0, 1.0, 1.0, 0.1)
    }
}

impl RateSet {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64, gamma4: f64) -> Self {
        Self {
            gamma1,
            gamma2,
            gamma3,
            gamma4,
            transfer: TransferDirection::DonorToAcceptor,
        }
    }

    /// Acceptor excitation given as a fraction `f` of the donor excitation.
    pub fn with_acceptor_fraction(gamma1: f64, gamma2: f64, gamma3: f64, f: f64) -> Self {
        Self::new(gamma1, gamma2, gamma3, f * gamma3)
    }

    /// `gamma4 / gamma3`, or `None` when the donor is not driven.
    pub fn acceptor_fraction(&self) -> Option<f64> {
        (self.gamma3 > 0.0).then(|| self.gamma4 / self.gamma3)
    }

    /// The same physics with the roles of the two dyes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            gamma1: self.gamma2,
            gamma2: self.gamma1,
            gamma3: self.gamma4,
            gamma4: self.gamma3,
            transfer: match self.transfer {
                TransferDirection::DonorToAcceptor => TransferDirection::AcceptorToDonor,
                TransferDirection::AcceptorToDonor => TransferDirection::DonorToAcceptor,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Relaxation rate of the slower dye when the two are uncoupled.
    pub fn slowest_relaxation_rate(&self) -> f64 {
        (self.gamma1 + self.gamma3).min(self.gamma2 + self.gamma4)
    }
}

/// Populations `(p00, p01, p10, p11)`, donor index first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState(pub [f64; 4]);

impl PopulationState {
    pub const GROUND: PopulationState = PopulationState([1.0, 0.0, 0.0, 0.0]);
    pub const UNIFORM: PopulationState = PopulationState([0.25; 4]);

    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Self {
        Self([p00, p01, p10, p11])
    }

    pub fn basis(index: usize) -> Self {
        let mut p = [0.0; 4];
        p[index] = 1.0;
        Self(p)
    }

    pub fn p00(&self) -> f64 {
        self.0[P00]
    }
    pub fn p01(&self) -> f64 {
        self.0[P01]
    }
    pub fn p10(&self) -> f64 {
        self.0[P10]
    }
    pub fn p11(&self) -> f64 {
        self.0[P11]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Rescaled to unit total; `None` if the total is zero.
    pub fn normalized(&self) -> Option<Self> {
        let total = self.total();
        (total > 0.0).then(|| Self(self.0.map(|p| p / total)))
    }

    /// Exchanges the donor and acceptor labels: `|qp> -> |pq>`.
    pub fn swapped(&self) -> Self {
        Self([self.0[P00], self.0[P10], self.0[P01], self.0[P11]])
    }
}

/// Transition-rate matrix `M` with `dP/dt = M P`. `entry(to, from)` is the
/// rate from basis state `from` into `to`; every column sums to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator(pub [[f64; 4]; 4]);

impl Generator {
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        self.0[to][from]
    }

    #[inline]
    pub fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        let m = &self.0;
        let mut out = [0.0; 4];
        for (row, o) in m.iter().zip(out.iter_mut()) {
            *o = row[0] * p[0] + row[1] * p[1] + row[2] * p[2] + row[3] * p[3];
        }
        out
    }

    pub fn column_sums(&self) -> [f64; 4] {
        let mut sums = [0.0; 4];
        for row in &self.0 {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

pub fn build_generator(rates: &RateSet, gamma5: f64) -> Result<Generator> {
    rates.validate()?;
    if !(gamma5.is_finite() && gamma5 >= 0.0) {
        return Err(Error::invalid("gamma5", format!("rate must be finite and >= 0, got {gamma5}")));
    }
    Ok(generator_unchecked(rates, gamma5))
}

#[inline]
fn generator_unchecked(rates: &RateSet, gamma5: f64) -> Generator {
    let mut m = [[0.0; 4]; 4];
    let mut jump = |from: usize, to: usize, rate: f64| {
        m[to][from] += rate;
        m[from][from] -= rate;
    };
    jump(P00, P10, rates.gamma3);
    jump(P01, P11, rates.gamma3);
    jump(P00, P01, rates.gamma4);
    jump(P10, P11, rates.gamma4);
    jump(P10, P00, rates.gamma1);
    jump(P11, P01, rates.gamma1);
    jump(P01, P00, rates.gamma2);
    jump(P11, P10, rates.gamma2);
    match rates.transfer {
        TransferDirection::DonorToAcceptor => jump(P10, P01, gamma5),
        TransferDirection::AcceptorToDonor => jump(P01, P10, gamma5),
    }
    Generator(m)
}

/// Emission intensity of a channel: the excited-state population of that dye.
#[inline]
pub fn intensity(state: &PopulationState, channel: Channel) -> f64 {
    match channel {
        Channel::Donor => state.0[P10] + state.0[P11],
        Channel::Acceptor => state.0[P01] + state.0[P11],
    }
}

/// Conditions the state on a photon from `channel`: the emitting dye drops
/// to its ground state. Returns the unnormalized post-emission populations
/// and their total weight, which equals the pre-emission intensity.
pub fn apply_emission_collapse(state: &PopulationState, channel: Channel) -> (PopulationState, f64) {
    let p = &state.0;
    let collapsed = match channel {
        Channel::Donor => PopulationState([p[P10], p[P11], 0.0, 0.0]),
        Channel::Acceptor => PopulationState([p[P01], 0.0, p[P11], 0.0]),
    };
    (collapsed, intensity(state, channel))
}

/// Running statistics of an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    /// Largest `|sum p - 1|` seen before renormalizing.
    pub max_drift: f64,
    /// Number of entries clamped from tiny negatives to zero.
    pub clamped: usize,
}

/// Fixed-step RK4 for `dP/dt = M(gamma5) P` with the transfer rate held
/// constant over each step.
#[derive(Debug, Clone)]
pub struct Rk4 {
    rates: RateSet,
    dt: f64,
    pub stats: IntegrationStats,
}

impl Rk4 {
    pub fn new(rates: &RateSet, dt: f64) -> Result<Self> {
        rates.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        Ok(Self {
            rates: rates.clone(),
            dt,
            stats: IntegrationStats::default(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances a normalized state by one step and renormalizes it.
    pub fn step(&mut self, state: &mut PopulationState, gamma5: f64) -> Result<()> {
        if !(gamma5.is_finite() && gamma5 >= 0.0) {
            return Err(Error::invalid("gamma5", format!("rate must be finite and >= 0, got {gamma5}")));
        }
        let m = generator_unchecked(&self.rates, gamma5);
        let h = self.dt;
        let p = state.0;
        let before: f64 = p.iter().sum();

        let k1 = m.apply(&p);
        let k2 = m.apply(&axpy(&p, 0.5 * h, &k1));
        let k3 = m.apply(&axpy(&p, 0.5 * h, &k2));
        let k4 = m.apply(&axpy(&p, h, &k3));
        let mut next = [0.0; 4];
        for i in 0..4 {
            next[i] = p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let after: f64 = next.iter().sum();
        let drift = (after - before).abs();
        if !(drift <= MAX_STEP_DRIFT) {
            return Err(Error::IntegrationDrift { drift });
        }
        for v in next.iter_mut() {
            if *v < 0.0 {
                if *v < -NEGATIVE_TOLERANCE {
                    return Err(Error::NegativePopulation { value: *v });
                }
                *v = 0.0;
                self.stats.clamped += 1;
            }
        }
        let total: f64 = next.iter().sum();
        self.stats.max_drift = self.stats.max_drift.max((total - 1.0).abs());
        self.stats.steps += 1;
        state.0 = next.map(|v| v / total);
        Ok(())
    }
}

#[inline]
fn axpy(p: &[f64; 4], a: f64, k: &[f64; 4]) -> [f64; 4] {
    [p[0] + a * k[0], p[1] + a * k[1], p[2] + a * k[2], p[3] + a * k[3]]
}

/// Result of [`propagate`].
#[derive(Debug, Clone, Copy)]
pub struct Propagation {
    pub state: PopulationState,
    pub stats: IntegrationStats,
}

/// Integrates across a rate segment, one RK4 step per entry of `gamma5`, so
/// the covered time is `gamma5.len() * dt`.
pub fn propagate(
    state: &PopulationState,
    rates: &RateSet,
    gamma5: &[f64],
    dt: f64,
) -> Result<Propagation> {
    let mut rk4 = Rk4::new(rates, dt)?;
    let mut s = state
        .normalized()
        .ok_or_else(|| Error::invalid("state", "populations sum to zero"))?;
    for &g in gamma5 {
        rk4.step(&mut s, g)?;
    }
    Ok(Propagation { state: s, stats: rk4.stats })
}

/// Integrates for `t_span` at a constant transfer rate. `t_span` is rounded
/// to a whole number of steps.
pub fn propagate_constant(
    state: &PopulationState,
    rates: &RateSet,
    gamma5: f64,
    t_span: f64,
    dt: f64,
) -> Result<Propagation> {
    if !(t_span >= 0.0) {
        return Err(Error::invalid("t_span", "must be non-negative"));
    }
    let steps = (t_span / dt).round() as usize;
    let mut rk4 = Rk4::new(rates, dt)?;
    let mut s = state
        .normalized()
        .ok_or_else(|| Error::invalid("state", "populations sum to zero"))?;
    for _ in 0..steps {
        rk4.step(&mut s, gamma5)?;
    }
    Ok(Propagation { state: s, stats: rk4.stats })
}

/// Stationary populations at a constant transfer rate: solves `M P = 0`,
/// `sum P = 1` by Gaussian elimination with partial pivoting.
pub fn steady_state_fixed(rates: &RateSet, gamma5: f64) -> Result<PopulationState> {
    let m = build_generator(rates, gamma5)?;
    let excitation = rates.gamma3 + rates.gamma4;
    let decay = rates.gamma1 + rates.gamma2;
    if excitation <= 0.0 || decay <= 0.0 {
        return Err(Error::SingularGenerator(
            "need at least one positive excitation and one positive decay rate".into(),
        ));
    }

    // rows 0..3 of M, with the last replaced by the normalization condition
    let mut a = m.0;
    a[3] = [1.0; 4];
    let mut b = [0.0, 0.0, 0.0, 1.0];
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));

    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= 1e-13 * scale {
            return Err(Error::SingularGenerator(format!(
                "no unique stationary state (pivot {:e} in column {col})",
                a[pivot][col]
            )));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    // clean rounding-level negatives
    for v in x.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    Ok(PopulationState(x.map(|v| v / total)))
}
