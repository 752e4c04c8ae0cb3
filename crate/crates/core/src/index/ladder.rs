//! Unknown-radius queries through a geometric grid of fixed-radius indices.
//!
//! Rung i serves radius r_min·c^i. A query walks the rungs upward and stops
//! at the first one that returns a point within c times its radius. If the
//! true nearest distance lies in (r_{i−1}, r_i], that rung's guarantee gives
//! a point within c·r_i ≤ c²·(true distance), so the effective factor is c².

use super::{Answer, IndexParams, LshIndex, QueryResult};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scheme::{scale_to_unit, SchemeParams};

#[derive(Clone, Debug)]
pub struct RadiusLadder {
    c: f64,
    radii: Vec<f64>,
    rungs: Vec<LshIndex>,
}

/// Outcome of a ladder query. Distances are in the original units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderResult {
    pub result: QueryResult,
    /// Rung that produced an in-contract answer.
    pub rung: Option<usize>,
    pub radius: Option<f64>,
    /// Overall approximation factor, c².
    pub effective_c: f64,
}

impl RadiusLadder {
    /// Builds one index per radius r_min·c^i, up to the first radius ≥ r_max.
    pub fn build(points: &Dataset, scheme: &SchemeParams, params: IndexParams, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
            return Err(Error::invalid(format!("radius range must satisfy 0 < r_min <= r_max, got [{r_min}, {r_max}]")));
        }
        let c = scheme.c;
        let mut radii = vec![r_min];
        while *radii.last().unwrap() < r_max {
            radii.push(r_min * c.powi(radii.len() as i32));
        }
        let rungs = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let scaled = scale_to_unit(points, r)?;
                let mut idx = LshIndex::build(
                    &scaled,
                    scheme,
                    IndexParams {
                        seed: derive_seed(params.seed, i as u64),
                        ..params
                    },
                )?;
                idx.set_radius(r);
                Ok(idx)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { c, radii, rungs })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn effective_c(&self) -> f64 {
        self.c * self.c
    }

    pub fn query(&self, q: &[f64]) -> Result<LadderResult> {
        let mut examined = 0;
        let mut probed = 0;
        let mut best: Option<Answer> = None;
        for (i, (idx, &r)) in self.rungs.iter().zip(&self.radii).enumerate() {
            let unit: Vec<f64> = q.iter().map(|v| v / r).collect();
            let res = idx.query(&unit)?;
            examined += res.candidates_examined;
            probed += res.tables_probed;
            let Some(a) = res.answer else { continue };
            let answer = Answer {
                distance: a.distance * r,
                ..a
            };
            if a.in_contract {
                return Ok(LadderResult {
                    result: QueryResult {
                        answer: Some(answer),
                        candidates_examined: examined,
                        tables_probed: probed,
                    },
                    rung: Some(i),
                    radius: Some(r),
                    effective_c: self.effective_c(),
                });
            }
            if best.is_none_or(|b| (answer.distance, answer.id) < (b.distance, b.id)) {
                best = Some(Answer {
                    in_contract: false,
                    ..answer
                });
            }
        }
        Ok(LadderResult {
            result: QueryResult {
                answer: best,
                candidates_examined: examined,
                tables_probed: probed,
            },
            rung: None,
            radius: None,
            effective_c: self.effective_c(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::small_scheme;
    use super::*;

    #[test]
    fn radii_form_a_geometric_grid_covering_the_range() {
        let data = Dataset::from_rows(2, [[0.0, 0.0], [5.0, 5.0]]).unwrap();
        let s = small_scheme();
        let ladder = RadiusLadder::build(&data, &s, IndexParams::new(1, 2, 1), 0.5, 3.0).unwrap();
        assert_eq!(ladder.radii(), &[0.5, 1.0, 2.0, 4.0]);
        assert_eq!(ladder.effective_c(), 4.0);
        assert!(RadiusLadder::build(&data, &s, IndexParams::new(1, 2, 1), 2.0, 1.0).is_err());
        assert!(RadiusLadder::build(&data, &s, IndexParams::new(1, 2, 1), 0.0, 1.0).is_err());
    }

    #[test]
    fn exact_match_succeeds_at_first_rung() {
        let data = Dataset::from_rows(2, [[0.0, 0.0], [5.0, 5.0], [-3.0, 1.0]]).unwrap();
        let ladder = RadiusLadder::build(&data, &small_scheme(), IndexParams::new(1, 2, 1), 0.1, 10.0).unwrap();
        let res = ladder.query(&[5.0, 5.0]).unwrap();
        assert_eq!(res.rung, Some(0));
        assert_eq!(res.result.answer.unwrap().id, 1);
        assert_eq!(res.result.answer.unwrap().distance, 0.0);
    }
}
