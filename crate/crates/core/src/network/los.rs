//! Delay-based airside level of service.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LosGrade {
    A,
    B,
    C,
    D,
}

impl LosGrade {
    /// Grade for a 95th-percentile slot delay in seconds.
    pub fn from_p95(p95_s: f64) -> Self {
        if p95_s <= 60.0 {
            LosGrade::A
        } else if p95_s <= 180.0 {
            LosGrade::B
        } else if p95_s <= 600.0 {
            LosGrade::C
        } else {
            LosGrade::D
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LosGrade::A => "A",
            LosGrade::B => "B",
            LosGrade::C => "C",
            LosGrade::D => "D",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirsideLoS {
    pub vertidrome: String,
    pub movements: usize,
    pub mean_delay_s: f64,
    pub p95_delay_s: f64,
    /// `None` when there was no traffic.
    pub grade: Option<LosGrade>,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[u64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1] as f64
}

pub fn airside_los(vertidrome: &str, delays_s: &[u64]) -> AirsideLoS {
    if delays_s.is_empty() {
        return AirsideLoS { vertidrome: vertidrome.into(), movements: 0, mean_delay_s: 0.0, p95_delay_s: 0.0, grade: None };
    }
    let mean = delays_s.iter().sum::<u64>() as f64 / delays_s.len() as f64;
    let p95 = percentile(delays_s, 0.95);
    AirsideLoS {
        vertidrome: vertidrome.into(),
        movements: delays_s.len(),
        mean_delay_s: mean,
        p95_delay_s: p95,
        grade: Some(LosGrade::from_p95(p95)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grades() {
        assert_eq!(airside_los("v", &[0, 0, 0]).grade, Some(LosGrade::A));
        assert_eq!(airside_los("v", &[200; 20]).grade, Some(LosGrade::C));
        assert_eq!(airside_los("v", &[]).grade, None);
        assert_eq!(LosGrade::from_p95(180.0), LosGrade::B);
        assert_eq!(LosGrade::from_p95(601.0), LosGrade::D);
    }

    #[test]
    fn nearest_rank_p95() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&[5], 0.95), 5.0);
    }
}
