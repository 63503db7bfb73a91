//! One-shot signaling games: a sender sees a private state, sends a cheap-talk
//! message, the receiver acts, and both are paid `R(state, action)`.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classic climbing-game payoffs (rows are states, columns are actions).
pub const CLIMBING_RAW: [[f64; 3]; 3] = [[11.0, -30.0, 0.0], [-30.0, 7.0, 6.0], [0.0, 0.0, 5.0]];

/// Reward table indexed `(state, action)`, max-normalized to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PayoffMatrix {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    row_max: Vec<f64>,
}

impl PayoffMatrix {
    /// Wraps values that already satisfy the normalized invariants.
    pub fn from_normalized(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (n_states, n_actions, values) = flatten(rows)?;
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("normalized payoffs must lie in [0, 1]".into()));
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max != 1.0 {
            return Err(Error::InvalidInput(format!(
                "normalized payoffs must have max exactly 1, got {max}"
            )));
        }
        Ok(Self::build(n_states, n_actions, values))
    }

    fn build(n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        let row_max = values
            .chunks_exact(n_actions)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        PayoffMatrix {
            n_states,
            n_actions,
            values,
            row_max,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Best attainable payoff in `state`.
    #[inline]
    pub fn row_max(&self, state: usize) -> f64 {
        self.row_max[state]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks_exact(self.n_actions).map(<[f64]>::to_vec).collect()
    }

    /// One row per state, comma-separated decimal reals, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for row in self.values.chunks_exact(self.n_actions) {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads raw payoffs from CSV and normalizes them.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| Error::Malformed {
                        path: "<payoff csv>".into(),
                        line,
                        message: format!("not a number: {field:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        normalize_payoffs(rows)
    }
}

impl TryFrom<Vec<Vec<f64>>> for PayoffMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        normalize_payoffs(rows)
    }
}

impl From<PayoffMatrix> for Vec<Vec<f64>> {
    fn from(m: PayoffMatrix) -> Self {
        m.rows()
    }
}

fn flatten(rows: Vec<Vec<f64>>) -> Result<(usize, usize, Vec<f64>)> {
    let n_states = rows.len();
    let n_actions = rows.first().map_or(0, Vec::len);
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidInput("payoff matrix must be non-empty".into()));
    }
    if rows.iter().any(|r| r.len() != n_actions) {
        return Err(Error::InvalidInput("payoff matrix rows differ in length".into()));
    }
    Ok((n_states, n_actions, rows.into_iter().flatten().collect()))
}

/// Divides every entry by the matrix maximum.
pub fn normalize_payoffs(raw: Vec<Vec<f64>>) -> Result<PayoffMatrix> {
    let (n_states, n_actions, mut values) = flatten(raw)?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite payoff {v}")));
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidInput(format!("negative payoff {v}")));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::InvalidInput("all-zero payoff matrix".into()));
    }
    for v in &mut values {
        *v /= max;
    }
    Ok(PayoffMatrix::build(n_states, n_actions, values))
}

/// A signaling game with uniformly distributed states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingGame {
    pub payoff: PayoffMatrix,
    pub n_messages: usize,
}

impl SignalingGame {
    /// Game with as many messages as states.
    pub fn new(payoff: PayoffMatrix) -> Self {
        let n_messages = payoff.n_states();
        SignalingGame { payoff, n_messages }
    }

    pub fn with_messages(payoff: PayoffMatrix, n_messages: usize) -> Result<Self> {
        if n_messages == 0 {
            return Err(Error::InvalidInput("a game needs at least one message".into()));
        }
        Ok(SignalingGame { payoff, n_messages })
    }

    pub fn n_states(&self) -> usize {
        self.payoff.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.payoff.n_actions()
    }

    pub fn state_probability(&self, _state: usize) -> f64 {
        1.0 / self.n_states() as f64
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.n_states())
    }

    /// Returns `(reward, reward / best reward in this state)`.
    pub fn step(&self, state: usize, action: usize) -> Result<(f64, f64)> {
        if state >= self.n_states() {
            return Err(Error::OutOfRange {
                what: "state",
                index: state,
                size: self.n_states(),
            });
        }
        if action >= self.n_actions() {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                size: self.n_actions(),
            });
        }
        Ok(self.step_unchecked(state, action))
    }

    #[inline]
    pub(crate) fn step_unchecked(&self, state: usize, action: usize) -> (f64, f64) {
        let r = self.payoff.get(state, action);
        let best = self.payoff.row_max(state);
        let norm = if best > 0.0 { r / best } else { 1.0 };
        (r, norm)
    }

    /// Whether `action` attains the best payoff in `state` (within `1e-9`).
    #[inline]
    pub fn is_best_action(&self, state: usize, action: usize) -> bool {
        self.payoff.get(state, action) >= self.payoff.row_max(state) - 1e-9
    }
}

/// Climbing game mapped affinely onto `[0, 1]`: `(v + 30) / 41`.
pub fn climbing_game() -> SignalingGame {
    let (lo, hi) = (-30.0, 11.0);
    let rows = CLIMBING_RAW
        .iter()
        .map(|row| row.iter().map(|v| (v - lo) / (hi - lo)).collect())
        .collect();
    SignalingGame::new(PayoffMatrix::from_normalized(rows).expect("climbing payoffs are normalized"))
}

/// `n x n` game with entries drawn from `[0, 1)` and divided by their max.
pub fn generate_random_game<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SignalingGame> {
    if n == 0 {
        return Err(Error::InvalidInput("random game size must be at least 1".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    Ok(SignalingGame::new(normalize_payoffs(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalize_divides_by_max() {
        let m = normalize_payoffs(vec![vec![0.5, 0.25], vec![0.1, 0.4]]).unwrap();
        assert_eq!(m.rows(), vec![vec![1.0, 0.5], vec![0.2, 0.8]]);
    }

    #[test]
    fn normalize_constant_and_identity() {
        let m = normalize_payoffs(vec![vec![3.0; 2]; 2]).unwrap();
        assert!(m.rows().iter().flatten().all(|v| *v == 1.0));
        let raw = vec![vec![1.0, 0.3], vec![0.7, 0.0]];
        assert_eq!(normalize_payoffs(raw.clone()).unwrap().rows(), raw);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(normalize_payoffs(vec![vec![0.0, 0.0]]).is_err());
        assert!(normalize_payoffs(vec![vec![1.0, -0.1]]).is_err());
        assert!(normalize_payoffs(vec![vec![1.0, f64::NAN]]).is_err());
        assert!(normalize_payoffs(vec![vec![f64::INFINITY]]).is_err());
        assert!(normalize_payoffs(vec![]).is_err());
        assert!(normalize_payoffs(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn random_game_shape_and_determinism() {
        let a = generate_random_game(3, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = generate_random_game(3, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_states(), 3);
        assert_eq!(a.n_messages, 3);
        let max = a.payoff.rows().into_iter().flatten().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        let one = generate_random_game(1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(one.payoff.rows(), vec![vec![1.0]]);
        assert!(generate_random_game(0, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn climbing_values() {
        let g = climbing_game();
        let expected = [[1.0, 0.0, 0.7317], [0.0, 0.9024, 0.8780], [0.7317, 0.7317, 0.8537]];
        for (s, row) in expected.iter().enumerate() {
            for (a, want) in row.iter().enumerate() {
                assert!((g.payoff.get(s, a) - want).abs() < 1e-4);
            }
        }
        // a2 is best in s2, with a3 close behind
        assert!(g.is_best_action(1, 1));
        assert!(!g.is_best_action(1, 2));
        assert!(g.payoff.get(1, 1) - g.payoff.get(1, 2) < 0.03);
    }

    #[test]
    fn step_rewards() {
        let g = climbing_game();
        let (r, n) = g.step(1, 1).unwrap();
        assert!((r - 37.0 / 41.0).abs() < 1e-12);
        assert_eq!(n, 1.0);
        assert_eq!(g.step(0, 1).unwrap(), (0.0, 0.0));
        assert!(g.step(3, 0).is_err());
        assert!(g.step(0, 3).is_err());
        for s in 0..3 {
            let best = (0..3)
                .max_by(|a, b| g.payoff.get(s, *a).total_cmp(&g.payoff.get(s, *b)))
                .unwrap();
            assert_eq!(g.step(s, best).unwrap().1, 1.0);
        }
    }

    #[test]
    fn sample_state_is_uniform() {
        let g = generate_random_game(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[g.sample_state(&mut rng)] += 1;
        }
        for c in counts {
            let f = c as f64 / 30_000.0;
            assert!((0.31..=0.36).contains(&f), "{f}");
        }
        let single = SignalingGame::new(normalize_payoffs(vec![vec![2.0]]).unwrap());
        assert!((0..100).all(|_| single.sample_state(&mut rng) == 0));
    }

    #[test]
    fn csv_roundtrip() {
        let g = generate_random_game(4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mut buf = Vec::new();
        g.payoff.write_csv(&mut buf).unwrap();
        let back = PayoffMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, g.payoff);
        assert!(PayoffMatrix::read_csv("1,x\n".as_bytes()).is_err());
    }
}
