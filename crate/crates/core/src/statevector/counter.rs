use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which part of the algorithm a gate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    VelocityAdvection,
    ConfigurationAdvection,
    Extraction,
    Tomography,
    Other,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Section::VelocityAdvection => "velocity_advection",
            Section::ConfigurationAdvection => "configuration_advection",
            Section::Extraction => "extraction",
            Section::Tomography => "tomography",
            Section::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "controls")]
pub enum GateKind {
    X,
    H,
    Sdg,
    Swap,
    ControlledPhase,
    /// Multi-controlled NOT with the given number of controls.
    Mcx(u32),
}

/// Aggregate statistics of emitted increment-by-p circuits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub circuits: u64,
    pub mcx_total: u64,
    /// Circuits whose multi-controlled NOT count exceeded `n (floor(log2 |p|) + 1)`.
    pub bound_violations: u64,
    /// Largest observed `mcx / bound` ratio.
    pub worst_ratio: f64,
    pub max_shift: u64,
}

/// Gate tallies keyed by section and gate kind. Counts only ever grow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateCounter {
    section: Option<Section>,
    counts: BTreeMap<(Section, GateKind), u64>,
    increments: IncrementStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCountEntry {
    pub section: Section,
    pub gate: GateKind,
    pub count: u64,
}

impl GateCounter {
    pub fn section(&self) -> Section {
        self.section.unwrap_or(Section::Other)
    }

    pub fn set_section(&mut self, section: Section) {
        self.section = Some(section);
    }

    pub(crate) fn record(&mut self, gate: GateKind) {
        *self.counts.entry((self.section(), gate)).or_insert(0) += 1;
    }

    pub(crate) fn record_increment(&mut self, register_size: usize, shift: u64, mcx: u64) {
        let stats = &mut self.increments;
        stats.circuits += 1;
        stats.mcx_total += mcx;
        stats.max_shift = stats.max_shift.max(shift);
        let bound = increment_mcx_bound(register_size, shift);
        if bound > 0 {
            let ratio = mcx as f64 / bound as f64;
            if ratio > stats.worst_ratio {
                stats.worst_ratio = ratio;
            }
        }
        if mcx > bound {
            stats.bound_violations += 1;
        }
    }

    pub fn get(&self, section: Section, gate: GateKind) -> u64 {
        self.counts.get(&(section, gate)).copied().unwrap_or(0)
    }

    /// Multi-controlled NOT gates (any control count, including zero) in a section.
    pub fn mcx_in(&self, section: Section) -> u64 {
        self.counts
            .iter()
            .filter(|((s, g), _)| *s == section && matches!(g, GateKind::Mcx(_)))
            .map(|(_, c)| c)
            .sum()
    }

    /// Sum over multi-controlled NOTs of their control counts in a section.
    pub fn mcx_control_weight_in(&self, section: Section) -> u64 {
        self.counts
            .iter()
            .filter_map(|((s, g), c)| match g {
                GateKind::Mcx(n) if *s == section => Some(*n as u64 * c),
                _ => None,
            })
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn increments(&self) -> &IncrementStats {
        &self.increments
    }

    pub fn entries(&self) -> Vec<GateCountEntry> {
        self.counts
            .iter()
            .map(|(&(section, gate), &count)| GateCountEntry {
                section,
                gate,
                count,
            })
            .collect()
    }

    /// Adds another counter's tallies into this one.
    pub fn merge(&mut self, other: &GateCounter) {
        for (key, c) in &other.counts {
            *self.counts.entry(*key).or_insert(0) += c;
        }
        let a = &mut self.increments;
        let b = &other.increments;
        a.circuits += b.circuits;
        a.mcx_total += b.mcx_total;
        a.bound_violations += b.bound_violations;
        a.worst_ratio = a.worst_ratio.max(b.worst_ratio);
        a.max_shift = a.max_shift.max(b.max_shift);
    }
}

/// `n (floor(log2 p) + 1)` for `p > 0`, zero for `p = 0`.
pub fn increment_mcx_bound(register_size: usize, shift: u64) -> u64 {
    if shift == 0 {
        0
    } else {
        register_size as u64 * (u64::from(63 - shift.leading_zeros()) + 1)
    }
}
