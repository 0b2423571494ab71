//! Relay scheduling as a Markov chain over `(Q_a, Q_rb)`: the queue at A and
//! the relay's queue of packets bound for B.
//!
//! Each slot the relay picks one of four modes with probabilities `f`:
//! I uplink with hybrid relaying, II broadcast to both, III relay to B,
//! IV relay to A. Mode I moves up to `n ~ c` packets from A into the relay
//! queue unless the relay decided to forward B's data directly; modes II and
//! III drain the relay queue by `n ~ r` and `n ~ q`; mode IV leaves both
//! tracked queues alone. Poisson arrivals are added to A afterwards. Both
//! queues are truncated at their caps and overflow is folded onto the cap.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;

use crate::error::{config, Error, Result};
use crate::theory::selection_probs_avg;

/// Truncated Poisson arrival pmf `a_0..=a_{i_max}` with the tail folded into `a_{i_max}`.
pub fn poisson_pmf(lambda: f64, slot: f64, i_max: usize) -> Result<Vec<f64>> {
    if !(lambda >= 0.0 && slot >= 0.0 && lambda.is_finite() && slot.is_finite()) {
        return config(format!("arrival rate and slot length must be non-negative, got {lambda}, {slot}"));
    }
    let mean = lambda * slot;
    let mut a = Vec::with_capacity(i_max + 1);
    let mut term = (-mean).exp();
    let mut acc = 0.0;
    for i in 0..i_max {
        a.push(term);
        acc += term;
        term *= mean / (i + 1) as f64;
    }
    a.push((1.0 - acc).max(0.0));
    Ok(a)
}

/// Distribution of the number of packets a Rayleigh link of average SNR `rho`
/// supports in one slot: `n = min(n_rate, floor(log2(1 + |h|^2 rho)))`.
pub fn rate_pmf_from_fading(delta: f64, rho: f64, n_rate: usize) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return config(format!("Rayleigh scale must be positive, got {delta}"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return config(format!("SNR must be non-negative, got {rho}"));
    }
    // P(n >= j) = P(|h|^2 >= (2^j - 1) / rho), |h|^2 exponential with mean 2 delta^2.
    let tail = |j: usize| -> f64 {
        if j == 0 {
            1.0
        } else if rho == 0.0 {
            0.0
        } else {
            (-((2f64).powi(j as i32) - 1.0) / (2.0 * delta * delta * rho)).exp()
        }
    };
    Ok((0..=n_rate)
        .map(|j| if j == n_rate { tail(j) } else { tail(j) - tail(j + 1) })
        .collect())
}

fn pmf_mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

fn check_pmf(name: &str, pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() || pmf.iter().any(|p| p.is_nan() || *p < 0.0 || !p.is_finite()) {
        return config(format!("{name} must be a non-empty vector of non-negative numbers"));
    }
    let s: f64 = pmf.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return config(format!("{name} sums to {s}, not 1"));
    }
    Ok(())
}

/// HDMF outcome probabilities for an uplink slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub p_abr: f64,
    pub p_ar: f64,
    pub p_br: f64,
}

impl Selection {
    pub fn from_snr(rho_a: f64, rho_b: f64) -> Result<Self> {
        let (p_abr, p_ar, p_br) = selection_probs_avg(rho_a, rho_b)?;
        Ok(Selection { p_abr, p_ar, p_br })
    }

    /// Probability that A's packets enter the relay queue.
    pub fn towards_b(&self) -> f64 {
        self.p_abr + self.p_ar
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerModel {
    /// Arrival rate at A in frames per time unit.
    pub lambda: f64,
    /// Slot length in the same time unit.
    pub slot: f64,
    /// Mode probabilities f_1..f_4.
    pub f: [f64; 4],
    /// Supported packets per slot on A-relay, relay-A and relay-B.
    pub c_pmf: Vec<f64>,
    pub r_pmf: Vec<f64>,
    pub q_pmf: Vec<f64>,
    pub p: Selection,
    pub n_a: usize,
    pub n_r: usize,
}

impl SchedulerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.slot >= 0.0 && self.lambda.is_finite() && self.slot.is_finite()) {
            return config("arrival rate and slot length must be non-negative");
        }
        if self.f.iter().any(|v| v.is_nan() || *v < 0.0) || (self.f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return config(format!("mode probabilities {:?} must be non-negative and sum to 1", self.f));
        }
        check_pmf("c_pmf", &self.c_pmf)?;
        check_pmf("r_pmf", &self.r_pmf)?;
        check_pmf("q_pmf", &self.q_pmf)?;
        check_pmf("selection probabilities", &[self.p.p_abr, self.p.p_ar, self.p.p_br])?;
        if self.n_a < 1 || self.n_r < 1 {
            return config("buffer caps must be at least 1");
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        (self.n_a + 1) * (self.n_r + 1)
    }

    pub fn index(&self, m: usize, k: usize) -> usize {
        m * (self.n_r + 1) + k
    }

    /// Arrivals per slot.
    pub fn arrival_mean(&self) -> f64 {
        self.lambda * self.slot
    }

    /// Mean packets per slot moved from A towards B while A is backlogged.
    pub fn uplink_service(&self) -> f64 {
        self.f[0] * self.p.towards_b() * pmf_mean(&self.c_pmf)
    }

    /// Queue states after the mode's service, before arrivals, with weights.
    fn service_outcomes(&self, m: usize, k: usize, out: &mut Vec<(usize, usize, f64)>) {
        out.clear();
        let [f1, f2, f3, f4] = self.f;
        if f1 > 0.0 {
            if m == 0 {
                out.push((0, k, f1));
            } else {
                for (n, &c) in self.c_pmf.iter().enumerate() {
                    let t = n.min(m);
                    out.push((m - t, (k + t).min(self.n_r), f1 * c * self.p.towards_b()));
                    out.push((m, k, f1 * c * self.p.p_br));
                }
            }
        }
        for (fm, pmf) in [(f2, &self.r_pmf), (f3, &self.q_pmf)] {
            if fm > 0.0 {
                for (n, &w) in pmf.iter().enumerate() {
                    out.push((m, k.saturating_sub(n), fm * w));
                }
            }
        }
        if f4 > 0.0 {
            out.push((m, k, f4));
        }
    }
}

/// Dense row-stochastic matrix over states `m * (n_r + 1) + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub n_a: usize,
    pub n_r: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Wraps a square row-major matrix. Used for generic chains (`n_r = 0`).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InputShape("transition matrix must be square and non-empty".into()));
        }
        Ok(TransitionMatrix {
            n_a: n - 1,
            n_r: 0,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        (self.n_a + 1) * (self.n_r + 1)
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.dim() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let d = self.dim();
        &self.data[from * d..(from + 1) * d]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|x| self.row(x).iter().sum()).collect()
    }

    /// One step of `pi <- pi P`.
    pub fn step(&self, pi: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (x, &w) in pi.iter().enumerate() {
            if w != 0.0 {
                for (o, p) in out.iter_mut().zip(self.row(x)) {
                    *o += w * p;
                }
            }
        }
        out
    }
}

pub fn build_transition_matrix(model: &SchedulerModel) -> Result<TransitionMatrix> {
    model.validate()?;
    let a = poisson_pmf(model.lambda, model.slot, model.n_a)?;
    let d = model.states();
    let mut data = vec![0.0; d * d];
    let mut outcomes = Vec::new();
    for m in 0..=model.n_a {
        for k in 0..=model.n_r {
            let row = model.index(m, k) * d;
            model.service_outcomes(m, k, &mut outcomes);
            for &(m1, k1, w) in &outcomes {
                if w == 0.0 {
                    continue;
                }
                for (arr, &ai) in a.iter().enumerate() {
                    let i = (m1 + arr).min(model.n_a);
                    data[row + model.index(i, k1)] += w * ai;
                }
            }
        }
    }
    Ok(TransitionMatrix {
        n_a: model.n_a,
        n_r: model.n_r,
        data,
    })
}

/// Stationary distribution and queue averages.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueStateDist {
    pub pi: Vec<f64>,
    pub n_a: usize,
    pub n_r: usize,
    pub qa_mean: f64,
    pub qrb_mean: f64,
}

impl QueueStateDist {
    fn new(pi: Vec<f64>, n_a: usize, n_r: usize) -> Self {
        let w = n_r + 1;
        let qa_mean = pi.iter().enumerate().map(|(x, p)| (x / w) as f64 * p).sum();
        let qrb_mean = pi.iter().enumerate().map(|(x, p)| (x % w) as f64 * p).sum();
        QueueStateDist {
            pi,
            n_a,
            n_r,
            qa_mean,
            qrb_mean,
        }
    }

    /// Probability of sitting on either cap, an upper bound on the effect of truncation.
    /// Mass on the `Q_A = N_A` edge and on the `Q_RB = N_R` edge.
    pub fn edge_masses(&self) -> (f64, f64) {
        let w = self.n_r + 1;
        let mut m = (0.0, 0.0);
        for (x, p) in self.pi.iter().enumerate() {
            if x / w == self.n_a {
                m.0 += p;
            }
            if x % w == self.n_r {
                m.1 += p;
            }
        }
        m
    }

    pub fn boundary_mass(&self) -> f64 {
        let w = self.n_r + 1;
        self.pi
            .iter()
            .enumerate()
            .filter(|(x, _)| x / w == self.n_a || x % w == self.n_r)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Solves `Pi = 1 (I - P + U)^-1` and checks `Pi P = Pi`.
pub fn stationary(p: &TransitionMatrix) -> Result<QueueStateDist> {
    let d = p.dim();
    if d < 1 {
        return Err(Error::InputShape("empty chain".into()));
    }
    // Pi A = 1 is A^T Pi^T = 1^T.
    let at = Mat::<f64>::from_fn(d, d, |i, j| f64::from(u8::from(i == j)) - p.get(j, i) + 1.0);
    let ones = Mat::<f64>::from_fn(d, 1, |_, _| 1.0);
    let x = at.partial_piv_lu().solve(&ones);
    let mut pi: Vec<f64> = (0..d).map(|i| x[(i, 0)]).collect();
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonErgodic("I - P + U is singular".into()));
    }
    let total: f64 = pi.iter().sum();
    let min = pi.iter().copied().fold(f64::INFINITY, f64::min);
    if (total - 1.0).abs() > 1e-8 || min < -1e-9 {
        return Err(Error::NonErgodic(format!(
            "no unique stationary distribution (mass {total}, min entry {min})"
        )));
    }
    for v in &mut pi {
        *v = v.max(0.0) / total;
    }
    let residual = p
        .step(&pi)
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::NonErgodic(format!("stationary residual {residual:e}")));
    }
    Ok(QueueStateDist::new(pi, p.n_a, p.n_r))
}

/// Iterates `pi <- pi P` from `init` for `steps` slots.
pub fn evolve(p: &TransitionMatrix, init: &[f64], steps: usize) -> Result<QueueStateDist> {
    if init.len() != p.dim() {
        return Err(Error::InputShape(format!("initial distribution has {} entries, chain has {}", init.len(), p.dim())));
    }
    let mut pi = init.to_vec();
    for _ in 0..steps {
        pi = p.step(&pi);
    }
    Ok(QueueStateDist::new(pi, p.n_a, p.n_r))
}

/// Power iteration from the uniform distribution until successive iterates
/// differ by less than `tol` in max norm.
pub fn power_iteration(p: &TransitionMatrix, tol: f64, max_steps: usize) -> Result<QueueStateDist> {
    let d = p.dim();
    let mut pi = vec![1.0 / d as f64; d];
    for _ in 0..max_steps {
        let next = p.step(&pi);
        let diff = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if diff < tol {
            return Ok(QueueStateDist::new(pi, p.n_a, p.n_r));
        }
    }
    Err(Error::Numerical(format!("power iteration did not converge in {max_steps} steps")))
}

/// Slot-by-slot simulation of the scheduling rules. Returns the time averages
/// of `(Q_a, Q_rb)` over the slots after `warmup`, starting from `init`.
pub fn simulate_schedule<R: Rng + ?Sized>(
    model: &SchedulerModel,
    slots: u64,
    warmup: u64,
    init: (usize, usize),
    rng: &mut R,
) -> Result<(f64, f64)> {
    model.validate()?;
    if slots <= warmup {
        return config(format!("slots ({slots}) must exceed warmup ({warmup})"));
    }
    let weighted = |w: &[f64]| WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()));
    let modes = weighted(&model.f)?;
    let rates = [weighted(&model.c_pmf)?, weighted(&model.r_pmf)?, weighted(&model.q_pmf)?];
    let outcome = weighted(&[model.p.p_abr, model.p.p_ar, model.p.p_br])?;
    let mean = model.arrival_mean();
    let arrivals = if mean > 0.0 {
        Some(Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let (mut qa, mut qrb) = (init.0.min(model.n_a), init.1.min(model.n_r));
    let (mut sum_a, mut sum_rb) = (0u64, 0u64);
    for t in 0..slots {
        match modes.sample(rng) {
            0 if qa > 0 => {
                let n = rates[0].sample(rng);
                if outcome.sample(rng) != 2 {
                    let moved = n.min(qa);
                    qa -= moved;
                    qrb = (qrb + moved).min(model.n_r);
                }
            }
            mode @ (1 | 2) => {
                let n = rates[mode].sample(rng);
                qrb = qrb.saturating_sub(n);
            }
            _ => {}
        }
        if let Some(dist) = &arrivals {
            let arr: f64 = dist.sample(rng);
            qa = (qa + arr as usize).min(model.n_a);
        }
        if t >= warmup {
            sum_a += qa as u64;
            sum_rb += qrb as u64;
        }
    }
    let n = (slots - warmup) as f64;
    Ok((sum_a as f64 / n, sum_rb as f64 / n))
}

/// Inputs from which a [`SchedulerModel`] is provisioned.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueScenario {
    pub lambda: f64,
    pub slot: f64,
    pub f: [f64; 4],
    pub snr_db: f64,
    pub delta: f64,
    pub n_rate: usize,
    /// Extra service margin: uplink service is provisioned for `lambda (1 + epsilon)`.
    pub epsilon: f64,
    /// Overrides the closed-form selection probabilities.
    pub selection: Option<Selection>,
}

impl Default for QueueScenario {
    /// 0.5 frames per 1 ms slot, uniform modes, 20 dB links.
    fn default() -> Self {
        QueueScenario {
            lambda: 0.5,
            slot: 1.0,
            f: [0.25; 4],
            snr_db: 20.0,
            delta: crate::channel::UNIT_POWER_DELTA,
            n_rate: 8,
            epsilon: 0.5,
            selection: None,
        }
    }
}

impl QueueScenario {
    /// SNR scaling applied to all three links so that mean uplink service
    /// reaches `lambda T (1 + epsilon)`.
    pub fn snr_scale(&self) -> Result<f64> {
        let rho = 10f64.powf(self.snr_db / 10.0);
        let sel = self.selection()?;
        let per_slot = self.f[0] * sel.towards_b();
        let target = self.lambda * self.slot * (1.0 + self.epsilon);
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return config(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if target == 0.0 {
            return Ok(1.0);
        }
        if per_slot <= 0.0 || target / per_slot >= self.n_rate as f64 {
            return config(format!(
                "cannot provision {target} packets per slot with mode I probability {} and at most {} packets per slot",
                self.f[0], self.n_rate
            ));
        }
        let need = target / per_slot;
        let mean_at = |s: f64| -> Result<f64> { Ok(pmf_mean(&rate_pmf_from_fading(self.delta, s * rho, self.n_rate)?)) };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while mean_at(hi)? < need {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical("SNR scaling search diverged".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_at(mid)? < need {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub fn selection(&self) -> Result<Selection> {
        match self.selection {
            Some(s) => Ok(s),
            None => {
                let rho = 10f64.powf(self.snr_db / 10.0);
                Selection::from_snr(rho, rho)
            }
        }
    }

    pub fn model(&self, n_a: usize, n_r: usize) -> Result<SchedulerModel> {
        let rho = 10f64.powf(self.snr_db / 10.0) * self.snr_scale()?;
        let pmf = rate_pmf_from_fading(self.delta, rho, self.n_rate)?;
        let m = SchedulerModel {
            lambda: self.lambda,
            slot: self.slot,
            f: self.f,
            c_pmf: pmf.clone(),
            r_pmf: pmf.clone(),
            q_pmf: pmf,
            p: self.selection()?,
            n_a,
            n_r,
        };
        m.validate()?;
        Ok(m)
    }

    /// Grows the caps until the stationary mass on them is below `tol`.
    pub fn solve_with_auto_caps(&self, tol: f64, max_states: usize) -> Result<(SchedulerModel, QueueStateDist)> {
        let (mut n_a, mut n_r) = (16usize, 8usize);
        loop {
            let model = self.model(n_a, n_r)?;
            let dist = stationary(&build_transition_matrix(&model)?)?;
            if dist.boundary_mass() < tol {
                return Ok((model, dist));
            }
            // Grow only the axes whose edge still holds mass.
            let (ma, mr) = dist.edge_masses();
            let na2 = if ma >= tol / 2.0 { n_a * 3 / 2 } else { n_a };
            let nr2 = if mr >= tol / 2.0 { n_r * 3 / 2 } else { n_r };
            if (na2 + 1) * (nr2 + 1) > max_states {
                return Err(Error::Numerical(format!(
                    "boundary mass {:e} still above {tol:e} with caps ({n_a}, {n_r})",
                    dist.boundary_mass()
                )));
            }
            n_a = na2;
            n_r = nr2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn tiny(lambda: f64, f: [f64; 4]) -> SchedulerModel {
        SchedulerModel {
            lambda,
            slot: 1.0,
            f,
            c_pmf: vec![0.0, 1.0],
            r_pmf: vec![0.0, 1.0],
            q_pmf: vec![0.0, 1.0],
            p: Selection {
                p_abr: 1.0,
                p_ar: 0.0,
                p_br: 0.0,
            },
            n_a: 2,
            n_r: 2,
        }
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_pmf(0.0, 1.0, 4).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let a = poisson_pmf(0.5, 1.0, 6).unwrap();
        assert!((a[0] - 0.606_530_66).abs() < 1e-6);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let a = poisson_pmf(3.0, 1.0, 2).unwrap();
        assert!((a[2] - (1.0 - 4.0 * (-3.0f64).exp())).abs() < 1e-12);
        assert!(poisson_pmf(-1.0, 1.0, 2).is_err());
    }

    #[test]
    fn rate_pmf_examples() {
        let p = rate_pmf_from_fading(0.7, 0.0, 8).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&v| v == 0.0));
        let p = rate_pmf_from_fading(0.7, 37.0, 8).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_pmf_matches_monte_carlo() {
        let delta = crate::channel::UNIT_POWER_DELTA;
        let (rho, nr) = (100.0, 8);
        let pmf = rate_pmf_from_fading(delta, rho, nr).unwrap();
        let mut rng = stream_rng(50, 0);
        let n = 1_000_000;
        let mut counts = vec![0usize; nr + 1];
        for _ in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let g = delta * delta * (x * x + y * y);
            let bin = ((1.0 + g * rho).log2().floor() as usize).min(nr);
            counts[bin] += 1;
        }
        for (c, p) in counts.iter().zip(&pmf) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005);
        }
    }

    #[test]
    fn validation() {
        let mut m = tiny(0.5, [1.0, 0.0, 0.0, 0.0]);
        assert!(m.validate().is_ok());
        m.f = [0.5, 0.0, 0.0, 0.0];
        assert!(matches!(build_transition_matrix(&m), Err(Error::Config(_))));
        let mut m = tiny(0.5, [1.0, 0.0, 0.0, 0.0]);
        m.c_pmf = vec![0.5, 0.4];
        assert!(build_transition_matrix(&m).is_err());
        let mut m = tiny(0.5, [1.0, 0.0, 0.0, 0.0]);
        m.n_r = 0;
        assert!(build_transition_matrix(&m).is_err());
    }

    #[test]
    fn no_arrivals_makes_origin_absorbing() {
        let p = build_transition_matrix(&tiny(0.0, [0.25; 4])).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        let d = stationary(&p).unwrap();
        assert!((d.pi[0] - 1.0).abs() < 1e-12 && d.qa_mean.abs() < 1e-12 && d.qrb_mean.abs() < 1e-12);
    }

    #[test]
    fn mode_four_only_keeps_relay_queue() {
        let m = tiny(0.5, [0.0, 0.0, 0.0, 1.0]);
        let p = build_transition_matrix(&m).unwrap();
        let a = poisson_pmf(0.5, 1.0, 2).unwrap();
        for mm in 0..=2 {
            for k in 0..=2 {
                for i in 0..=2 {
                    for j in 0..=2 {
                        let want = if j == k && i >= mm { a[i - mm] } else { 0.0 };
                        // Folding: the cap state collects the tail.
                        let want = if j == k && i == 2 { a[(2 - mm)..].iter().sum() } else { want };
                        assert!((p.get(m.index(mm, k), m.index(i, j)) - want).abs() < 1e-15);
                    }
                }
            }
        }
        assert!(matches!(stationary(&p), Err(Error::NonErgodic(_))));
        let mut init = vec![0.0; m.states()];
        init[m.index(0, 1)] = 0.25;
        init[m.index(1, 2)] = 0.75;
        let d = evolve(&p, &init, 200).unwrap();
        assert!((d.qrb_mean - 1.75).abs() < 1e-12);
    }

    #[test]
    fn small_chains() {
        let p = TransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let d = stationary(&p).unwrap();
        assert!((d.pi[0] - 0.5).abs() < 1e-15);
        let p = TransitionMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let d = stationary(&p).unwrap();
        // balance: 0.1 pi_0 = 0.2 pi_1
        assert!((d.pi[0] - 2.0 / 3.0).abs() < 1e-14 && (d.pi[1] - 1.0 / 3.0).abs() < 1e-14);
        let id = TransitionMatrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let err = stationary(&id).unwrap_err();
        assert!(matches!(err, Error::NonErgodic(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(TransitionMatrix::from_rows(vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn stationary_agrees_with_power_iteration() {
        let s = QueueScenario {
            epsilon: 1.0,
            ..QueueScenario::default()
        };
        let m = s.model(30, 15).unwrap();
        let p = build_transition_matrix(&m).unwrap();
        let a = stationary(&p).unwrap();
        let b = power_iteration(&p, 1e-14, 200_000).unwrap();
        let diff = a.pi.iter().zip(&b.pi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let res = p.step(&a.pi).iter().zip(&a.pi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(res < 1e-10);
    }

    #[test]
    fn deterministic_drain() {
        let mut m = tiny(0.0, [0.0, 1.0, 0.0, 0.0]);
        m.n_r = 10;
        let mut rng = stream_rng(51, 0);
        // Averages over slots 1..=5 of 4,3,2,1,0 then zeros.
        let (_, qrb) = simulate_schedule(&m, 5, 0, (0, 5), &mut rng).unwrap();
        assert!((qrb - 2.0).abs() < 1e-15);
        let (qa, qrb) = simulate_schedule(&m, 100, 5, (0, 5), &mut rng).unwrap();
        assert_eq!((qa, qrb), (0.0, 0.0));
        assert!(simulate_schedule(&m, 5, 5, (0, 0), &mut rng).is_err());
    }

    #[test]
    fn provisioning_hits_target() {
        for eps in [0.0, 0.5, 1.5] {
            let s = QueueScenario {
                epsilon: eps,
                ..QueueScenario::default()
            };
            let m = s.model(10, 10).unwrap();
            assert!((m.uplink_service() - 0.5 * (1.0 + eps)).abs() < 1e-9);
        }
        let s = QueueScenario {
            epsilon: 5.0,
            ..QueueScenario::default()
        };
        assert!(matches!(s.model(10, 10), Err(Error::Config(_))));
    }

    #[test]
    fn arrival_rate_monotonicity() {
        let base = QueueScenario {
            epsilon: 1.0,
            ..QueueScenario::default()
        }
        .model(30, 15)
        .unwrap();
        let mut prev = -1.0;
        for lambda in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6] {
            let m = SchedulerModel { lambda, ..base.clone() };
            let d = stationary(&build_transition_matrix(&m).unwrap()).unwrap();
            assert!(d.qa_mean >= prev);
            prev = d.qa_mean;
        }
    }

    fn random_pmf(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    pub(super) fn random_model(rng: &mut impl Rng) -> SchedulerModel {
        let f = random_pmf(rng, 4);
        let p = random_pmf(rng, 3);
        let nr = rng.random_range(1..6);
        SchedulerModel {
            lambda: rng.random_range(0.0..3.0),
            slot: rng.random_range(0.1..2.0),
            f: [f[0], f[1], f[2], f[3]],
            c_pmf: random_pmf(rng, nr),
            r_pmf: random_pmf(rng, nr),
            q_pmf: random_pmf(rng, nr + 1),
            p: Selection {
                p_abr: p[0],
                p_ar: p[1],
                p_br: p[2],
            },
            n_a: rng.random_range(1..8),
            n_r: rng.random_range(1..8),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn rows_are_stochastic(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let m = random_model(&mut rng);
            let p = build_transition_matrix(&m).unwrap();
            for s in p.row_sums() {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
