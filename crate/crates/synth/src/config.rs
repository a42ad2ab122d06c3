use serde::{Deserialize, Serialize};

use crate::{Result, SynthError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistributionMode {
    #[default]
    Iid,
    NonIid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Training points per client.
    pub n_points: usize,
    pub n_clients: usize,
    /// Size of the shared held-out test set.
    pub n_test: usize,
    pub d_in: usize,
    /// Label dimensions; label 0 is the finding indicator.
    pub n_labels: usize,
    pub mode: DistributionMode,
    /// Norm of each label's contribution to the feature mean.
    pub separation: f64,
    /// Isotropic noise standard deviation of every cluster.
    pub noise_std: f64,
    /// Per-subject offset standard deviation shared by a subject's scans.
    pub subject_std: f64,
    /// Condition prevalence of source 0.
    pub base_prevalence: f64,
    /// Prevalence added per source index (non-IID label skew).
    pub prevalence_offset: f64,
    /// Norm of each source's feature mean shift.
    pub source_shift: f64,
    /// Probability of a finding without any condition.
    pub undefined_finding_rate: f64,
    pub max_scans_per_subject: usize,
    /// Per-client label flip probability; empty means no flipping.
    pub flip_fractions: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_points: 2000,
            n_clients: 6,
            n_test: 400,
            d_in: 20,
            n_labels: 8,
            mode: DistributionMode::Iid,
            separation: 1.5,
            noise_std: 1.0,
            subject_std: 0.3,
            base_prevalence: 0.15,
            prevalence_offset: 0.05,
            source_shift: 1.0,
            undefined_finding_rate: 0.1,
            max_scans_per_subject: 3,
            flip_fractions: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if self.n_clients == 0 || self.n_points == 0 {
            return bad("need at least one client with one point");
        }
        if self.n_test == 0 {
            return bad("test set must not be empty");
        }
        if self.d_in == 0 || self.n_labels == 0 {
            return bad("feature and label dimensions must be positive");
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(SynthError::DegenerateCovariance(self.noise_std));
        }
        if !(self.subject_std.is_finite() && self.subject_std >= 0.0) {
            return bad("subject_std must be finite and non-negative");
        }
        for p in [self.base_prevalence, self.undefined_finding_rate] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.max_scans_per_subject == 0 {
            return bad("subjects need at least one scan");
        }
        if !self.flip_fractions.is_empty() && self.flip_fractions.len() != self.n_clients {
            return bad("flip_fractions needs one entry per client");
        }
        if let Some(&f) = self.flip_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(SynthError::InvalidFraction(f));
        }
        Ok(())
    }

    /// Condition prevalence of a source, clamped to [0, 1].
    pub fn prevalence(&self, source: usize) -> f64 {
        (self.base_prevalence + self.prevalence_offset * source as f64).clamp(0.0, 1.0)
    }
}
