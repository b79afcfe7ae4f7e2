//! Shared data model of the corrupted linear-bandit protocol: action sets,
//! reward vectors, per-round corruption plans, the running corruption
//! ledger and per-run records.
//!
//! All norm and inequality checks use an absolute tolerance of [`TOL`].

use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for norm and inequality invariants.
pub const TOL: f64 = 1e-9;

/// A finite, non-empty set of actions in `R^d`, each with `‖a‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ActionSet {
    actions: Vec<DVector<f64>>,
    dim: usize,
}

impl ActionSet {
    pub fn new(actions: Vec<DVector<f64>>) -> Result<Self> {
        let dim = actions
            .first()
            .map(|a| a.len())
            .ok_or_else(|| Error::Invariant("action set is empty".into()))?;
        if dim == 0 {
            return Err(Error::Invariant("actions must have dimension >= 1".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::Shape(format!(
                    "action {i} has length {} (expected {dim})",
                    a.len()
                )));
            }
            if !a.iter().all(|x| x.is_finite()) {
                return Err(Error::Invariant(format!("action {i} is not finite")));
            }
            let norm = a.norm();
            if norm > 1.0 + TOL {
                return Err(Error::Invariant(format!("action {i} has norm {norm} > 1")));
            }
        }
        Ok(Self { actions, dim })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(DVector::from_vec).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&DVector<f64>> {
        self.actions.get(index).ok_or(Error::InvalidAction {
            index,
            len: self.actions.len(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.actions.iter()
    }

    pub fn as_slice(&self) -> &[DVector<f64>] {
        &self.actions
    }

    /// Actions at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<ActionSet> {
        let picked = indices
            .iter()
            .map(|&i| self.get(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        ActionSet::new(picked)
    }

    /// Index of the action maximizing `aᵀθ`, lowest index on ties.
    pub fn argmax(&self, theta: &DVector<f64>) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, a) in self.actions.iter().enumerate() {
            let v = a.dot(theta);
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }

    pub fn check(&self) -> Result<()> {
        ActionSet::new(self.actions.clone()).map(|_| ())
    }
}

impl TryFrom<Vec<Vec<f64>>> for ActionSet {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        ActionSet::from_rows(rows)
    }
}

impl From<ActionSet> for Vec<Vec<f64>> {
    fn from(set: ActionSet) -> Self {
        set.actions.iter().map(|a| a.iter().copied().collect()).collect()
    }
}

/// Reward parameter `θ` valid against a companion action set:
/// `‖θ‖₂ ≤ √d` and `aᵀθ ∈ [−1, 1]` for every action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    theta: DVector<f64>,
}

impl RewardVector {
    pub fn new(theta: DVector<f64>, actions: &ActionSet) -> Result<Self> {
        let rv = Self { theta };
        rv.check(actions)?;
        Ok(rv)
    }

    pub fn from_slice(theta: &[f64], actions: &ActionSet) -> Result<Self> {
        Self::new(DVector::from_column_slice(theta), actions)
    }

    pub fn check(&self, actions: &ActionSet) -> Result<()> {
        let d = actions.dim();
        if self.theta.len() != d {
            return Err(Error::Shape(format!(
                "theta has length {} (expected {d})",
                self.theta.len()
            )));
        }
        let norm = self.theta.norm();
        if norm > (d as f64).sqrt() + TOL {
            return Err(Error::Invariant(format!("‖θ‖ = {norm} exceeds √d")));
        }
        for (i, a) in actions.iter().enumerate() {
            let m = a.dot(&self.theta);
            if m.abs() > 1.0 + TOL {
                return Err(Error::Invariant(format!(
                    "mean reward of action {i} is {m}, outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn mean(&self, action: &DVector<f64>) -> f64 {
        action.dot(&self.theta)
    }
}

/// One round's corruption `ε_t(·)` as a dense vector over the action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionPlan {
    eps: Vec<f64>,
}

impl CorruptionPlan {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        for (i, e) in eps.iter().enumerate() {
            if !e.is_finite() || e.abs() > 1.0 + TOL {
                return Err(Error::Invariant(format!(
                    "corruption {e} on action {i} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { eps })
    }

    pub fn zero(n: usize) -> Self {
        Self { eps: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn eps(&self, index: usize) -> Result<f64> {
        self.eps.get(index).copied().ok_or(Error::InvalidAction {
            index,
            len: self.eps.len(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eps
    }

    /// `ε_t = max_a |ε_t(a)|`.
    pub fn max_abs(&self) -> f64 {
        self.eps.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Running accumulators for the five corruption measures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionLedger {
    /// `Σ_t |ε_t(a_t)|`
    pub c_strong: f64,
    /// `Σ_t max_a |ε_t(a)|`
    pub c_weak: f64,
    /// `Σ_t ε_t(a_t)²`
    pub c_sq_raw: f64,
    /// `Σ_t max_a ε_t(a)²`
    pub c_sq_inf_raw: f64,
    /// `max_{t,a} |ε_t(a)|`
    pub c_ms_max: f64,
    pub rounds: usize,
}

impl CorruptionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one round into the ledger.
    pub fn record_round(&self, plan: &CorruptionPlan, chosen: usize) -> Result<Self> {
        let charged = plan.eps(chosen)?;
        let worst = plan.max_abs();
        Ok(Self {
            c_strong: self.c_strong + charged.abs(),
            c_weak: self.c_weak + worst,
            c_sq_raw: self.c_sq_raw + charged * charged,
            c_sq_inf_raw: self.c_sq_inf_raw + worst * worst,
            c_ms_max: self.c_ms_max.max(worst),
            rounds: self.rounds + 1,
        })
    }

    pub fn summary(&self) -> LedgerSummary {
        let t = self.rounds as f64;
        LedgerSummary {
            c: self.c_strong,
            c_inf: self.c_weak,
            c_sq: (t * self.c_sq_raw).sqrt(),
            c_sq_inf: (t * self.c_sq_inf_raw).sqrt(),
            c_ms: t * self.c_ms_max,
            t: self.rounds,
        }
    }
}

/// The five derived corruption measures over `T` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub c: f64,
    pub c_inf: f64,
    pub c_sq: f64,
    pub c_sq_inf: f64,
    pub c_ms: f64,
    pub t: usize,
}

impl LedgerSummary {
    pub const CSV_HEADER: &'static str = "C,Cinf,Csq,Csqinf,Cms,T";

    /// `C ≤ min{C∞, C_sq}`, `max{C∞, C_sq} ≤ C_sq∞ ≤ C_ms`.
    pub fn check_chain(&self) -> Result<()> {
        let le = |a: f64, b: f64| a <= b + TOL * (1.0 + b.abs());
        let pairs = [
            ("C", self.c, "Cinf", self.c_inf),
            ("C", self.c, "Csq", self.c_sq),
            ("Cinf", self.c_inf, "Csqinf", self.c_sq_inf),
            ("Csq", self.c_sq, "Csqinf", self.c_sq_inf),
            ("Csqinf", self.c_sq_inf, "Cms", self.c_ms),
        ];
        for (na, a, nb, b) in pairs {
            if !le(a, b) {
                return Err(Error::Invariant(format!("{na} = {a} > {nb} = {b}")));
            }
        }
        Ok(())
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.c, self.c_inf, self.c_sq, self.c_sq_inf, self.c_ms, self.t
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(w, "{}", self.csv_row())?;
        Ok(())
    }
}

/// One row of a [`RunRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: usize,
    pub action: usize,
    pub reward: f64,
    pub mean_reward: f64,
    pub eps_charged: f64,
    pub cum_regret: f64,
}

/// Per-round log of one run plus its final ledger.
///
/// `cum_regret` is measured against the single best fixed action of the
/// whole run (for a stationary `θ` this is the per-round optimum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rounds: Vec<RoundLog>,
    pub ledger: CorruptionLedger,
    pub seed: u64,
    /// Free-form `key=value` pairs written as `#` lines above the CSV header.
    #[serde(default)]
    pub metadata: Vec<(String, String)>,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str = "t,action,reward,mean_reward,eps_charged,cum_regret";

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn actions_played(&self) -> impl Iterator<Item = usize> + '_ {
        self.rounds.iter().map(|r| r.action)
    }

    pub fn push_metadata(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(Self::CSV_HEADER.split(','))?;
        for r in &self.rounds {
            wtr.serialize((
                r.t,
                r.action,
                r.reward,
                r.mean_reward,
                r.eps_charged,
                r.cum_regret,
            ))?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the per-round rows (and metadata) of a CSV written by
    /// [`RunRecord::write_csv`]. The ledger is rebuilt from the charged
    /// corruption only, so only `C`, `C_sq` and `T` are meaningful in it.
    pub fn read_csv<R: Read>(r: R) -> Result<RunRecord> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
                metadata.push((k.to_string(), v.to_string()));
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rounds = Vec::new();
        let mut ledger = CorruptionLedger::new();
        for row in rdr.deserialize() {
            let (t, action, reward, mean_reward, eps_charged, cum_regret): (
                usize,
                usize,
                f64,
                f64,
                f64,
                f64,
            ) = row?;
            ledger.c_strong += eps_charged.abs();
            ledger.c_sq_raw += eps_charged * eps_charged;
            ledger.rounds += 1;
            rounds.push(RoundLog {
                t,
                action,
                reward,
                mean_reward,
                eps_charged,
                cum_regret,
            });
        }
        Ok(RunRecord {
            rounds,
            ledger,
            seed: 0,
            metadata,
        })
    }
}

/// `max_u Σ_t uᵀθ_t − Σ_t a_tᵀθ_t`, on true means (not observed rewards).
pub fn regret(record: &RunRecord, thetas: &[RewardVector], actions: &ActionSet) -> Result<f64> {
    if record.rounds.len() != thetas.len() {
        return Err(Error::Shape(format!(
            "record has {} rounds but {} reward vectors were given",
            record.rounds.len(),
            thetas.len()
        )));
    }
    let mut total = DVector::zeros(actions.dim());
    let mut earned = 0.0;
    for (round, theta) in record.rounds.iter().zip(thetas) {
        if theta.theta().len() != actions.dim() {
            return Err(Error::Shape("reward vector dimension mismatch".into()));
        }
        total += theta.theta();
        earned += actions.get(round.action)?.dot(theta.theta());
    }
    let best = actions
        .iter()
        .map(|u| u.dot(&total))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best - earned)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize) -> ActionSet {
        ActionSet::new((0..d).map(|i| DVector::from_fn(d, |j, _| (i == j) as u8 as f64)).collect())
            .unwrap()
    }

    #[test]
    fn action_set_rejects_long_vectors_and_empty() {
        assert!(ActionSet::from_rows(vec![vec![1.0, 0.1]]).is_err());
        assert!(ActionSet::from_rows(vec![]).is_err());
        assert!(ActionSet::from_rows(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
        assert!(ActionSet::from_rows(vec![vec![1.0 + 1e-10, 0.0]]).is_ok());
    }

    #[test]
    fn reward_vector_checks_both_constraints() {
        let acts = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(RewardVector::from_slice(&[1.0, -1.0], &acts).is_ok());
        // norm ok (≤ √2) but mean 1.2 > 1
        assert!(RewardVector::from_slice(&[1.2, 0.0], &acts).is_err());
        let one = ActionSet::from_rows(vec![vec![0.1, 0.0]]).unwrap();
        // mean ok but norm 5 > √2
        assert!(RewardVector::from_slice(&[5.0, 0.0], &one).is_err());
    }

    #[test]
    fn zero_plan_leaves_accumulators() {
        let l = CorruptionLedger::new()
            .record_round(&CorruptionPlan::zero(3), 1)
            .unwrap();
        assert_eq!(l.rounds, 1);
        assert_eq!(l.c_strong, 0.0);
        assert_eq!(l.c_weak, 0.0);
        assert_eq!(l.c_sq_raw, 0.0);
        assert_eq!(l.c_sq_inf_raw, 0.0);
        assert_eq!(l.c_ms_max, 0.0);
    }

    #[test]
    fn uniform_half_corruption_ten_rounds() {
        let plan = CorruptionPlan::new(vec![0.5; 4]).unwrap();
        let mut l = CorruptionLedger::new();
        for t in 0..10 {
            l = l.record_round(&plan, t % 4).unwrap();
        }
        let s = l.summary();
        assert!((s.c - 5.0).abs() < 1e-12);
        assert!((s.c_inf - 5.0).abs() < 1e-12);
        assert!((s.c_ms - 5.0).abs() < 1e-12);
        s.check_chain().unwrap();
    }

    #[test]
    fn strong_weak_gap() {
        let plan = CorruptionPlan::new(vec![1.0, 0.0]).unwrap();
        let mut l = CorruptionLedger::new();
        for _ in 0..4 {
            l = l.record_round(&plan, 1).unwrap();
        }
        assert_eq!(l.summary().c, 0.0);
        assert_eq!(l.summary().c_inf, 4.0);
    }

    #[test]
    fn out_of_range_index_is_invalid_action() {
        let err = CorruptionLedger::new()
            .record_round(&CorruptionPlan::zero(2), 5)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidAction { index: 5, len: 2 }));
    }

    #[test]
    fn plan_bounds() {
        assert!(CorruptionPlan::new(vec![1.5]).is_err());
        assert!(CorruptionPlan::new(vec![-1.0, 1.0]).is_ok());
    }

    fn record_of(actions: &[usize]) -> RunRecord {
        RunRecord {
            rounds: actions
                .iter()
                .enumerate()
                .map(|(t, &a)| RoundLog {
                    t: t + 1,
                    action: a,
                    reward: 0.0,
                    mean_reward: 0.0,
                    eps_charged: 0.0,
                    cum_regret: 0.0,
                })
                .collect(),
            ledger: CorruptionLedger::new(),
            seed: 0,
            metadata: vec![],
        }
    }

    #[test]
    fn regret_examples() {
        let acts = basis(2);
        let theta = RewardVector::from_slice(&[1.0, 0.0], &acts).unwrap();
        let thetas = vec![theta; 10];
        assert_eq!(regret(&record_of(&[0; 10]), &thetas, &acts).unwrap(), 0.0);
        let plays = [1, 0, 1, 0, 0, 1, 0, 0, 0, 0];
        assert!((regret(&record_of(&plays), &thetas, &acts).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            regret(&record_of(&plays[..4]), &thetas, &acts),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn regret_symmetric_adversary_is_zero() {
        let acts = basis(2);
        let up = RewardVector::from_slice(&[1.0, -1.0], &acts).unwrap();
        let down = RewardVector::from_slice(&[-1.0, 1.0], &acts).unwrap();
        let thetas: Vec<_> = (0..6).map(|t| if t % 2 == 0 { up.clone() } else { down.clone() }).collect();
        let r = regret(&record_of(&[0, 0, 1, 1, 0, 0]), &thetas, &acts).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_keeps_metadata() {
        let mut rec = record_of(&[0, 1]);
        rec.push_metadata("beta", 38.5);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# beta=38.5\nt,action,reward,mean_reward,eps_charged,cum_regret\n"));
        let back = RunRecord::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rounds, rec.rounds);
        assert_eq!(back.metadata("beta"), Some("38.5"));
    }
}
