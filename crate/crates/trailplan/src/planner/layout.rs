//! Column layout of the QP decision vector.
//!
//! Variables are blocked as: states `z_0..z_N` (3 components each), inputs
//! `kappa_0..kappa_{N-1}`, two corridor slacks per station (lower/upper
//! violation), then global epigraph auxiliaries.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    /// Number of stations (N + 1).
    pub n_stations: usize,
    /// Number of steps N.
    pub n_steps: usize,
    pub aux_count: usize,
}

impl VariableLayout {
    pub fn new(n_steps: usize, aux_count: usize) -> Self {
        VariableLayout {
            n_stations: n_steps + 1,
            n_steps,
            aux_count,
        }
    }

    /// Column of state component `comp` (0 = e_y, 1 = e_psi, 2 = beta1) at
    /// station `i`.
    pub fn state(&self, station: usize, comp: usize) -> usize {
        debug_assert!(station < self.n_stations && comp < 3);
        3 * station + comp
    }

    /// Column of the curvature input applied over step `i`.
    pub fn input(&self, step: usize) -> usize {
        debug_assert!(step < self.n_steps);
        3 * self.n_stations + step
    }

    /// Column of the lower-violation slack at station `i`.
    pub fn slack_lo(&self, station: usize) -> usize {
        3 * self.n_stations + self.n_steps + 2 * station
    }

    /// Column of the upper-violation slack at station `i`.
    pub fn slack_hi(&self, station: usize) -> usize {
        self.slack_lo(station) + 1
    }

    /// Column of epigraph auxiliary `k`.
    pub fn aux(&self, k: usize) -> usize {
        debug_assert!(k < self.aux_count);
        3 * self.n_stations + self.n_steps + 2 * self.n_stations + k
    }

    pub fn total(&self) -> usize {
        3 * self.n_stations + self.n_steps + 2 * self.n_stations + self.aux_count
    }

    pub fn stage_layout(&self) -> stageqp::StageLayout {
        stageqp::StageLayout {
            num_stages: self.n_stations,
            states_per_stage: 3,
            inputs_per_stage: 1,
            slacks_per_stage: 2,
            aux_vars: self.aux_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_disjoint_and_dense() {
        let l = VariableLayout::new(4, 1);
        let mut seen = vec![false; l.total()];
        for i in 0..l.n_stations {
            for c in 0..3 {
                seen[l.state(i, c)] = true;
            }
            seen[l.slack_lo(i)] = true;
            seen[l.slack_hi(i)] = true;
        }
        for i in 0..l.n_steps {
            seen[l.input(i)] = true;
        }
        seen[l.aux(0)] = true;
        assert!(seen.iter().all(|&b| b));
    }
}
