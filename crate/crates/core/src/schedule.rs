//! Exact event timeline of the reservoir method.
//!
//! Row `k` moves one cell each time `t·v_k` is an integer, i.e. at
//! `t = i / |v_k|`. The union of these times over all rows, deduplicated
//! exactly, is the simulation clock. Velocity advection happens at the subset
//! of events that are integer multiples of `T = Δx / max|v_k|`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::Range;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Rational,
    /// Rows shifted by one cell at this time, ascending.
    pub rows: Vec<usize>,
    /// True iff `time / T` is an integer.
    pub velocity_step: bool,
}

/// Time-ordered events `0 = t_0 < t_1 < … ≤ horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSchedule {
    events: Vec<Event>,
    characteristic_time: Rational,
    horizon: Rational,
}

/// Events up to `cycles` shear cycles (`cycles · 2Δx/Δv`).
pub fn build_schedule(grid: &GridConfig, cycles: u32) -> Result<EventSchedule> {
    if cycles == 0 {
        return Err(Error::InvalidParameter(
            "schedule horizon must be at least one cycle".into(),
        ));
    }
    EventSchedule::until(grid, grid.cycle() * cycles as i64)
}

impl EventSchedule {
    /// Events with `0 ≤ t ≤ horizon`.
    pub fn until(grid: &GridConfig, horizon: Rational) -> Result<Self> {
        if horizon.is_negative() {
            return Err(Error::InvalidParameter(format!(
                "negative horizon {horizon}"
            )));
        }
        let mut times: BTreeMap<Rational, BTreeSet<usize>> = BTreeMap::new();
        for k in 0..grid.nv_cells() {
            let period = Rational::from_integer(1) / grid.velocity_of(k)?.abs();
            let mut t = Rational::zero();
            while t <= horizon {
                times.entry(t).or_default().insert(k);
                t += period;
            }
        }
        let characteristic_time = grid.characteristic_time();
        let events = times
            .into_iter()
            .map(|(time, rows)| Event {
                time,
                velocity_step: (time / characteristic_time).is_integer(),
                rows: rows.into_iter().collect(),
            })
            .collect();
        Ok(Self {
            events,
            characteristic_time,
            horizon,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn horizon(&self) -> Rational {
        self.horizon
    }

    pub fn characteristic_time(&self) -> Rational {
        self.characteristic_time
    }

    /// Number of complete characteristic times within the horizon.
    pub fn num_epochs(&self) -> usize {
        (self.horizon / self.characteristic_time)
            .floor()
            .to_integer() as usize
    }

    /// Index range of the events of epoch `n`: `t = 0` for `n = 0`, otherwise
    /// `(n-1)T < t ≤ nT`.
    pub fn epoch_range(&self, n: usize) -> Range<usize> {
        let upper = self.characteristic_time * n as i64;
        let end = self.events.partition_point(|e| e.time <= upper);
        let start = if n == 0 {
            0
        } else {
            let lower = self.characteristic_time * (n as i64 - 1);
            self.events.partition_point(|e| e.time <= lower)
        };
        start..end.max(start)
    }

    pub fn epoch(&self, n: usize) -> &[Event] {
        &self.events[self.epoch_range(n)]
    }

    /// Net number of cells row `k` has moved after all events with `t ≤ time`,
    /// signed by the direction of `v_k`.
    pub fn row_shift(&self, grid: &GridConfig, k: usize, time: Rational) -> Result<i64> {
        let v = grid.velocity_of(k)?;
        let hits = self
            .events
            .iter()
            .take_while(|e| e.time <= time)
            .filter(|e| e.rows.binary_search(&k).is_ok())
            .count() as i64;
        Ok(if v.is_positive() { hits } else { -hits })
    }

    /// `t_num,t_den,k_list,velocity_step` with `k_list` space-separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_num,t_den,k_list,velocity_step")?;
        for e in &self.events {
            let rows: Vec<String> = e.rows.iter().map(|k| k.to_string()).collect();
            writeln!(
                out,
                "{},{},{},{}",
                e.time.numer(),
                e.time.denom(),
                rows.join(" "),
                e.velocity_step
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn single_speed_grid_steps_every_unit() {
        let g = GridConfig::new(2, 1, r(2, 1), 0.0).unwrap();
        let s = build_schedule(&g, 1).unwrap();
        // cycle = N_v / V = 1
        let times: Vec<_> = s.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![r(0, 1), r(1, 1)]);
        let s = EventSchedule::until(&g, r(5, 1)).unwrap();
        assert_eq!(s.len(), 6);
        for e in s.events() {
            assert_eq!(e.rows, vec![0, 1]);
            assert!(e.velocity_step);
        }
    }

    /// Brute force: every `i/|v_k|` up to the horizon, sorted and deduplicated.
    #[test]
    fn two_speed_grid_matches_enumeration() {
        let g = GridConfig::new(2, 2, r(1, 1), 0.0).unwrap();
        // speeds 3/4 and 1/4
        let horizon = r(12, 1);
        let s = EventSchedule::until(&g, horizon).unwrap();
        let mut brute: Vec<(Rational, usize)> = Vec::new();
        for k in 0..4 {
            let speed = g.velocity_of(k).unwrap().abs();
            for i in 0..100 {
                let t = Rational::from_integer(i) / speed;
                if t <= horizon {
                    brute.push((t, k));
                }
            }
        }
        let mut times: Vec<Rational> = brute.iter().map(|p| p.0).collect();
        times.sort();
        times.dedup();
        let got: Vec<Rational> = s.events().iter().map(|e| e.time).collect();
        assert_eq!(got, times);
        assert_eq!(&got[..4], &[r(0, 1), r(4, 3), r(8, 3), r(4, 1)]);
        assert_eq!(s.events()[1].rows, vec![0, 3]);
        assert_eq!(s.events()[3].rows, vec![0, 1, 2, 3]);
        for e in s.events() {
            let expected: Vec<usize> = brute
                .iter()
                .filter(|p| p.0 == e.time)
                .map(|p| p.1)
                .collect();
            let mut expected = expected;
            expected.sort();
            assert_eq!(e.rows, expected);
        }
    }

    #[test]
    fn velocity_step_count_matches_definition() {
        for (nv, v) in [(1, r(2, 1)), (2, r(1, 1)), (3, r(3, 2)), (4, r(7, 4))] {
            let g = GridConfig::new(3, nv, v, 0.0).unwrap();
            for cycles in 1..4 {
                let s = build_schedule(&g, cycles).unwrap();
                let h = s.horizon();
                let expected = (h * g.max_speed()).floor().to_integer() + 1;
                let got = s.events().iter().filter(|e| e.velocity_step).count() as i64;
                assert_eq!(got, expected, "n_v={nv} cycles={cycles}");
            }
        }
    }

    #[test]
    fn epochs_partition_the_events() {
        let g = GridConfig::new(3, 3, r(1, 1), 0.0).unwrap();
        let s = build_schedule(&g, 2).unwrap();
        assert_eq!(s.num_epochs(), 2 * g.epochs_per_cycle());
        assert_eq!(s.epoch(0).len(), 1);
        let mut covered = 0;
        for n in 0..=s.num_epochs() {
            let range = s.epoch_range(n);
            assert_eq!(range.start, covered);
            covered = range.end;
            let last = s.events()[range.end - 1].clone();
            assert!(last.velocity_step, "epoch {n} must end on a velocity step");
            assert_eq!(last.time, s.characteristic_time() * n as i64);
            assert_eq!(
                s.events()[range.clone()]
                    .iter()
                    .filter(|e| e.velocity_step)
                    .count(),
                1
            );
        }
        assert_eq!(covered, s.len());
    }

    #[test]
    fn full_cycle_returns_every_row_home() {
        let g = GridConfig::new(3, 3, r(1, 1), 0.0).unwrap();
        let s = build_schedule(&g, 1).unwrap();
        for k in 0..8 {
            // (2k+1-N_v) cells per cycle, plus the t = 0 event
            let cells = s.row_shift(&g, k, s.horizon()).unwrap();
            let v = g.velocity_of(k).unwrap();
            let expected = (v * g.cycle()).to_integer() + v.signum().to_integer();
            assert_eq!(cells, expected);
        }
    }

    #[test]
    fn csv_export() {
        let g = GridConfig::new(2, 1, r(2, 1), 0.0).unwrap();
        let s = build_schedule(&g, 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_num,t_den,k_list,velocity_step\n0,1,0 1,true\n1,1,0 1,true\n"
        );
    }

    proptest! {
        #[test]
        fn schedule_invariants(n_v in 1u32..5, num in 1i64..9, den in 1i64..5, cycles in 1u32..3) {
            let g = GridConfig::new(2, n_v, Rational::new(num, den), 0.0).unwrap();
            let s = build_schedule(&g, cycles).unwrap();
            let ev = s.events();
            prop_assert_eq!(ev[0].time, Rational::zero());
            prop_assert_eq!(ev[0].rows.len(), g.nv_cells());
            prop_assert!(ev[0].velocity_step);
            for w in ev.windows(2) {
                prop_assert!(w[0].time < w[1].time);
            }
            for k in 0..g.nv_cells() {
                let period = Rational::from_integer(1) / g.velocity_of(k).unwrap().abs();
                let hits: Vec<Rational> = ev.iter().filter(|e| e.rows.contains(&k)).map(|e| e.time).collect();
                for w in hits.windows(2) {
                    prop_assert_eq!(w[1] - w[0], period);
                }
            }
            // events per characteristic time are bounded by the number of rows
            for n in 1..=s.num_epochs() {
                prop_assert!(s.epoch(n).len() <= g.nv_cells());
            }
        }
    }
}
