//! Layerwise progression: which unit is freezing when, and the per-step mask
//! update that drives it.
//!
//! A scheduled unit is a block's weight tensor together with its following
//! binary activation; both share one transition window. The plan walks units
//! in a configurable order through three phases: `FrozenPrefix` (mask all
//! ones), `Transition` (stochastic refresh toward the schedule target), and
//! `UnfrozenSuffix` (mask all zeros). The moment a unit leaves its window its
//! masks are finalized unconditionally: Bernoulli redraws at p = 1 only
//! converge in expectation, so the boundary applies a hard close.

use crate::error::{Error, Result};
use crate::masking::{finalize, schedule_p, soft_refresh, Mask, ScheduleKind};
use crate::model::{Model, Profile};
use crate::tape::Tape;
use crate::tensor::Tensor;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitOrdering {
    /// Input-side unit freezes first.
    ForwardLayerwise,
    /// Output-side unit freezes first.
    ReverseLayerwise,
    /// Every unit transitions simultaneously over the whole run.
    Global,
}

impl UnitOrdering {
    pub fn name(self) -> &'static str {
        match self {
            UnitOrdering::ForwardLayerwise => "forward",
            UnitOrdering::ReverseLayerwise => "reverse",
            UnitOrdering::Global => "global",
        }
    }

    pub fn parse(s: &str) -> Result<UnitOrdering> {
        match s {
            "forward" => Ok(UnitOrdering::ForwardLayerwise),
            "reverse" => Ok(UnitOrdering::ReverseLayerwise),
            "global" => Ok(UnitOrdering::Global),
            _ => Err(Error::Config(format!(
                "unknown ordering '{}' (expected forward, reverse, or global)",
                s
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerPhase {
    /// Fully frozen: mask all ones.
    FrozenPrefix,
    /// Inside the transition window at the given local step.
    Transition { local_t: u64 },
    /// Not yet scheduled: mask all zeros, fully continuous.
    UnfrozenSuffix,
}

#[derive(Debug, Clone)]
pub struct ProgressionPlan {
    pub ordering: UnitOrdering,
    pub units: usize,
    /// Transition window length in optimizer steps (layerwise orderings).
    pub window_steps: u64,
    /// Total optimizer steps in the run; the Global window spans all of them.
    pub total_steps: u64,
}

impl ProgressionPlan {
    /// Validates the freezing budget: layerwise orderings must fit all windows
    /// within the run, otherwise later units would never freeze honestly.
    pub fn new(
        ordering: UnitOrdering,
        units: usize,
        window_steps: u64,
        total_steps: u64,
    ) -> Result<ProgressionPlan> {
        if total_steps == 0 {
            return Err(Error::Config("training run must have at least one step".into()));
        }
        match ordering {
            UnitOrdering::Global => {}
            _ => {
                if units > 0 {
                    if window_steps == 0 {
                        return Err(Error::Config(
                            "layerwise ordering needs a transition window of >= 1 step".into(),
                        ));
                    }
                    let budget = units as u64 * window_steps;
                    if budget > total_steps {
                        return Err(Error::Config(format!(
                            "freezing budget ({} units x {} steps = {}) exceeds the run's {} optimizer steps",
                            units, window_steps, budget, total_steps
                        )));
                    }
                }
            }
        }
        Ok(ProgressionPlan {
            ordering,
            units,
            window_steps,
            total_steps,
        })
    }

    /// Schedule window for a single unit's transition.
    pub fn window(&self) -> u64 {
        match self.ordering {
            UnitOrdering::Global => self.total_steps,
            _ => self.window_steps,
        }
    }

    /// Phase of `unit` at optimizer step `step`. Steps past the freezing
    /// budget put every unit in `FrozenPrefix`.
    pub fn phase_of(&self, unit: usize, step: u64) -> Result<LayerPhase> {
        if unit >= self.units {
            return Err(Error::Contract(format!(
                "unit {} out of range for {} scheduled units",
                unit, self.units
            )));
        }
        Ok(match self.ordering {
            UnitOrdering::Global => {
                if step >= self.total_steps {
                    LayerPhase::FrozenPrefix
                } else {
                    LayerPhase::Transition { local_t: step }
                }
            }
            UnitOrdering::ForwardLayerwise | UnitOrdering::ReverseLayerwise => {
                let pos = match self.ordering {
                    UnitOrdering::ForwardLayerwise => unit as u64,
                    _ => (self.units - 1 - unit) as u64,
                };
                let current = step / self.window_steps;
                if pos < current {
                    LayerPhase::FrozenPrefix
                } else if pos == current {
                    LayerPhase::Transition {
                        local_t: step % self.window_steps,
                    }
                } else {
                    LayerPhase::UnfrozenSuffix
                }
            }
        })
    }

    /// Natural index of the unit currently in transition, if any.
    pub fn transition_unit(&self, step: u64) -> Option<usize> {
        if self.units == 0 {
            return None;
        }
        match self.ordering {
            UnitOrdering::Global => None,
            UnitOrdering::ForwardLayerwise | UnitOrdering::ReverseLayerwise => {
                let current = (step / self.window_steps) as usize;
                if current >= self.units {
                    None
                } else if self.ordering == UnitOrdering::ForwardLayerwise {
                    Some(current)
                } else {
                    Some(self.units - 1 - current)
                }
            }
        }
    }

    /// Optimizer steps at which a new unit enters its transition window
    /// (window starts after the first). Empty for Global.
    pub fn boundary_steps(&self) -> Vec<u64> {
        match self.ordering {
            UnitOrdering::Global => vec![],
            _ => (1..self.units as u64).map(|j| j * self.window_steps).collect(),
        }
    }
}

/// Mutable view of one unit's masks plus its refresh streams.
pub struct UnitMaskState<'a> {
    pub weight: Option<&'a mut Mask>,
    pub act: Option<&'a mut Mask>,
    pub rng_w: &'a mut ChaCha12Rng,
    pub rng_a: &'a mut ChaCha12Rng,
}

/// Advances every unit's masks to their state for optimizer step `step`.
/// Transition units get one stochastic refresh per tensor role; prefix units
/// are finalized; suffix units are cleared.
pub fn step_masks(
    units: &mut [UnitMaskState<'_>],
    plan: &ProgressionPlan,
    kind: ScheduleKind,
    r: usize,
    step: u64,
) -> Result<()> {
    for (i, u) in units.iter_mut().enumerate() {
        match plan.phase_of(i, step)? {
            LayerPhase::FrozenPrefix => {
                if let Some(m) = u.weight.as_deref_mut() {
                    if !m.all_frozen() {
                        finalize(m);
                    }
                }
                if let Some(m) = u.act.as_deref_mut() {
                    if !m.all_frozen() {
                        finalize(m);
                    }
                }
            }
            LayerPhase::UnfrozenSuffix => {
                if let Some(m) = u.weight.as_deref_mut() {
                    if m.frozen_count() > 0 {
                        m.set_all(false);
                    }
                }
                if let Some(m) = u.act.as_deref_mut() {
                    if m.frozen_count() > 0 {
                        m.set_all(false);
                    }
                }
            }
            LayerPhase::Transition { local_t } => {
                let p = schedule_p(kind, local_t, plan.window())?;
                if let Some(m) = u.weight.as_deref_mut() {
                    soft_refresh(m, p, r, u.rng_w)?;
                }
                if let Some(m) = u.act.as_deref_mut() {
                    soft_refresh(m, p, r, u.rng_a)?;
                }
            }
        }
    }
    Ok(())
}

/// Zero-gradient census for one unit's weight latent.
#[derive(Debug, Clone)]
pub struct UnitProbe {
    pub unit: usize,
    pub zero_grad: usize,
    pub total: usize,
}

impl UnitProbe {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.zero_grad as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockadeReport {
    pub per_unit: Vec<UnitProbe>,
}

impl BlockadeReport {
    /// Fraction of all scheduled trainable parameters whose gradient came back
    /// identically zero.
    pub fn fraction(&self) -> f64 {
        let total: usize = self.per_unit.iter().map(|u| u.total).sum();
        if total == 0 {
            return 0.0;
        }
        let zeros: usize = self.per_unit.iter().map(|u| u.zero_grad).sum();
        zeros as f64 / total as f64
    }
}

/// Runs one training-profile forward/backward on a probe batch and counts,
/// per scheduled unit, the weight-latent entries whose gradient is exactly
/// zero. The model is cloned internally, so running statistics and parameters
/// are untouched.
pub fn blockade_probe(model: &Model, images: &Tensor, labels: &[u32]) -> Result<BlockadeReport> {
    let mut probe = model.clone();
    let mut tape = Tape::new();
    let (logits, bindings) = probe.forward(&mut tape, images, Profile::Train)?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    tape.backward(loss)?;
    let mut per_unit = Vec::new();
    for (unit, var) in bindings.block_weight_vars() {
        let total = tape.value(var).len();
        let zero_grad = match tape.grad(var) {
            Some(g) => g.iter().filter(|&&x| x == 0.0).count(),
            None => total,
        };
        per_unit.push(UnitProbe {
            unit,
            zero_grad,
            total,
        });
    }
    Ok(BlockadeReport { per_unit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRole};

    #[test]
    fn forward_ordering_walks_units_front_to_back() {
        let plan = ProgressionPlan::new(UnitOrdering::ForwardLayerwise, 3, 10, 40).unwrap();
        assert_eq!(plan.phase_of(0, 0).unwrap(), LayerPhase::Transition { local_t: 0 });
        assert_eq!(plan.phase_of(1, 0).unwrap(), LayerPhase::UnfrozenSuffix);
        assert_eq!(plan.phase_of(2, 0).unwrap(), LayerPhase::UnfrozenSuffix);
        assert_eq!(plan.phase_of(0, 10).unwrap(), LayerPhase::FrozenPrefix);
        assert_eq!(plan.phase_of(1, 17).unwrap(), LayerPhase::Transition { local_t: 7 });
        assert_eq!(plan.phase_of(2, 17).unwrap(), LayerPhase::UnfrozenSuffix);
        // beyond the budget every unit is frozen
        for u in 0..3 {
            assert_eq!(plan.phase_of(u, 30).unwrap(), LayerPhase::FrozenPrefix);
            assert_eq!(plan.phase_of(u, 39).unwrap(), LayerPhase::FrozenPrefix);
        }
        assert_eq!(plan.transition_unit(0), Some(0));
        assert_eq!(plan.transition_unit(17), Some(1));
        assert_eq!(plan.transition_unit(29), Some(2));
        assert_eq!(plan.transition_unit(30), None);
        assert_eq!(plan.boundary_steps(), vec![10, 20]);
    }

    #[test]
    fn reverse_ordering_starts_at_the_output_side() {
        let plan = ProgressionPlan::new(UnitOrdering::ReverseLayerwise, 3, 10, 30).unwrap();
        assert_eq!(plan.phase_of(2, 0).unwrap(), LayerPhase::Transition { local_t: 0 });
        assert_eq!(plan.phase_of(0, 0).unwrap(), LayerPhase::UnfrozenSuffix);
        assert_eq!(plan.phase_of(2, 12).unwrap(), LayerPhase::FrozenPrefix);
        assert_eq!(plan.phase_of(1, 12).unwrap(), LayerPhase::Transition { local_t: 2 });
        assert_eq!(plan.phase_of(0, 12).unwrap(), LayerPhase::UnfrozenSuffix);
        assert_eq!(plan.transition_unit(0), Some(2));
        assert_eq!(plan.transition_unit(25), Some(0));
    }

    #[test]
    fn global_ordering_transitions_every_unit_over_the_run() {
        let plan = ProgressionPlan::new(UnitOrdering::Global, 4, 0, 100).unwrap();
        for u in 0..4 {
            assert_eq!(plan.phase_of(u, 0).unwrap(), LayerPhase::Transition { local_t: 0 });
            assert_eq!(plan.phase_of(u, 99).unwrap(), LayerPhase::Transition { local_t: 99 });
            assert_eq!(plan.phase_of(u, 100).unwrap(), LayerPhase::FrozenPrefix);
        }
        assert_eq!(plan.window(), 100);
        assert!(plan.boundary_steps().is_empty());
    }

    #[test]
    fn phases_partition_every_step() {
        for ordering in [
            UnitOrdering::ForwardLayerwise,
            UnitOrdering::ReverseLayerwise,
            UnitOrdering::Global,
        ] {
            let plan = ProgressionPlan::new(ordering, 5, 7, 50).unwrap();
            for step in 0..60 {
                for unit in 0..5 {
                    // phase_of is total: every (unit, step) maps to exactly one phase
                    plan.phase_of(unit, step).unwrap();
                }
            }
        }
    }

    #[test]
    fn budget_overflow_is_rejected() {
        assert!(ProgressionPlan::new(UnitOrdering::ForwardLayerwise, 5, 10, 49).is_err());
        assert!(ProgressionPlan::new(UnitOrdering::ForwardLayerwise, 5, 10, 50).is_ok());
        assert!(ProgressionPlan::new(UnitOrdering::Global, 5, 0, 50).is_ok());
    }

    #[test]
    fn step_masks_moves_units_through_their_phases() {
        let plan = ProgressionPlan::new(UnitOrdering::ForwardLayerwise, 2, 50, 120).unwrap();
        let mut w0 = Mask::zeros(vec![200]);
        let mut a0 = Mask::zeros(vec![50]);
        let mut w1 = Mask::zeros(vec![200]);
        let mut a1 = Mask::zeros(vec![50]);
        let mut rngs: Vec<_> = (0..4)
            .map(|i| stream(1, StreamRole::WeightMask, i))
            .collect();
        let (r0, rest) = rngs.split_at_mut(1);
        let (r1, rest2) = rest.split_at_mut(1);
        let (r2, r3) = rest2.split_at_mut(1);
        for step in 0..120 {
            let mut units = vec![
                UnitMaskState {
                    weight: Some(&mut w0),
                    act: Some(&mut a0),
                    rng_w: &mut r0[0],
                    rng_a: &mut r1[0],
                },
                UnitMaskState {
                    weight: Some(&mut w1),
                    act: Some(&mut a1),
                    rng_w: &mut r2[0],
                    rng_a: &mut r3[0],
                },
            ];
            step_masks(&mut units, &plan, ScheduleKind::Linear, 10, step).unwrap();
            if step == 0 {
                // p(0) = 0: the transition unit's refresh can only clear bits
                assert_eq!(w0.frozen_count(), 0);
                assert_eq!(w1.frozen_count(), 0);
            }
            if step == 50 {
                // unit 0's window closed: finalized regardless of sampling noise
                assert!(w0.all_frozen());
                assert!(a0.all_frozen());
            }
        }
        let mut units = vec![
            UnitMaskState {
                weight: Some(&mut w0),
                act: Some(&mut a0),
                rng_w: &mut r0[0],
                rng_a: &mut r1[0],
            },
            UnitMaskState {
                weight: Some(&mut w1),
                act: Some(&mut a1),
                rng_w: &mut r2[0],
                rng_a: &mut r3[0],
            },
        ];
        step_masks(&mut units, &plan, ScheduleKind::Linear, 10, 120).unwrap();
        assert!(w1.all_frozen() && a1.all_frozen());
    }
}
