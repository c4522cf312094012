use crate::sparse::BlockedVector;

/// Current Newton iterate and the converged previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// `xi_n`, updated in place by Newton.
    pub xi: BlockedVector,
    /// `xi_{n-1}`.
    pub previous_xi: BlockedVector,
    /// Time `t_n` the iterate belongs to.
    pub t: f64,
    /// Fixed step size.
    pub h: f64,
    pub step_index: usize,
}

impl SystemState {
    /// State at `t` with `xi = previous_xi = initial`.
    pub fn new(initial: BlockedVector, t: f64, h: f64) -> Self {
        Self { previous_xi: initial.clone(), xi: initial, t, h, step_index: 0 }
    }
}
