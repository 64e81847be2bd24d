//! Optimizer and training loop: per-step mask advancement, forward/backward,
//! SGD with (Nesterov) momentum, per-epoch proxy and deploy evaluation, and
//! deterministic metrics collection.

use crate::data::{augment_normalize, epoch_order, gather, normalize, Dataset, Splits};
use crate::error::{Error, Result};
use crate::masking::ScheduleKind;
use crate::metrics::MetricsRow;
use crate::model::{ArchSpec, Model, Param, ParamId, Profile, QuantMode, Route};
use crate::progression::{step_masks, LayerPhase, ProgressionPlan, UnitMaskState, UnitOrdering};
use crate::rng::{stream, StreamRole};
use crate::tape::Tape;
use rand_chacha::ChaCha12Rng;

/// Optimizer and loop hyperparameters. The learning rate is constant for the
/// whole run and weight decay is fixed at zero.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub lr: f32,
    pub momentum: f32,
    pub nesterov: bool,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// Augmentation applied to training batches (evaluation only normalizes).
#[derive(Debug, Clone)]
pub struct AugmentSpec {
    pub pad: usize,
    pub flip_prob: f64,
}

/// Everything a run needs besides the data.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub arch: ArchSpec,
    pub mode: QuantMode,
    pub ordering: UnitOrdering,
    pub schedule: ScheduleKind,
    pub refresh_r: usize,
    /// Transition window per unit, in epochs (layerwise orderings).
    pub epochs_per_unit: usize,
    pub recipe: Recipe,
    pub augment: AugmentSpec,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub model: Model,
    pub rows: Vec<MetricsRow>,
    /// (epoch, wall seconds); kept out of the metrics CSV so that file is
    /// byte-identical across reruns.
    pub timings: Vec<(usize, f64)>,
    /// Epochs at which a new unit enters its transition window.
    pub boundary_epochs: Vec<usize>,
    /// Transition window in epochs, for dip-recovery detection.
    pub window_epochs: usize,
}

/// One SGD update. With `nesterov`:
///   v <- mu*v - lr*g;  w <- w + mu*v - lr*g
/// otherwise classical momentum:
///   v <- mu*v - lr*g;  w <- w + v
/// Entries whose mask bit is frozen are skipped entirely (their gradient is
/// exactly zero by the masking contract, and their velocity was zeroed on
/// freeze; skipping keeps even stale velocity from moving them). `clamp`
/// confines updated values to [-1, 1], the latent range surrogate-sign
/// training expects.
pub fn sgd_step(
    p: &mut Param,
    grad: &[f32],
    lr: f32,
    momentum: f32,
    nesterov: bool,
    frozen: Option<&crate::masking::Mask>,
    clamp: bool,
) -> Result<()> {
    if grad.len() != p.value.len() {
        return Err(Error::Contract(format!(
            "gradient has {} entries for a parameter of {}",
            grad.len(),
            p.value.len()
        )));
    }
    if let Some(m) = frozen {
        if m.len() != p.value.len() {
            return Err(Error::Contract(format!(
                "mask has {} entries for a parameter of {}",
                m.len(),
                p.value.len()
            )));
        }
    }
    let bits = frozen.map(|m| m.bits());
    for (i, (w, v)) in p
        .value
        .data_mut()
        .iter_mut()
        .zip(p.velocity.iter_mut())
        .enumerate()
    {
        if let Some(b) = bits {
            if b[i] == 1 {
                continue;
            }
        }
        let g = grad[i];
        let nv = momentum * *v - lr * g;
        *v = nv;
        *w += if nesterov { momentum * nv - lr * g } else { nv };
        if clamp {
            *w = w.clamp(-1.0, 1.0);
        }
    }
    Ok(())
}

/// Applies the gradients recorded on `tape` to every bound parameter. Block
/// weight latents respect their freeze mask and, on the surrogate-sign route,
/// the [-1, 1] clamp.
fn optimizer_pass(
    model: &mut Model,
    tape: &Tape,
    bindings: &crate::model::Bindings,
    recipe: &Recipe,
) -> Result<()> {
    for &(id, var) in bindings.iter() {
        let Some(grad) = tape.grad(var) else {
            continue;
        };
        match id {
            ParamId::BlockW(i) => {
                let clamp = model.mode.weight_route() == Route::Ste;
                let b = &mut model.blocks[i];
                sgd_step(
                    &mut b.w,
                    grad,
                    recipe.lr,
                    recipe.momentum,
                    recipe.nesterov,
                    b.w_mask.as_ref(),
                    clamp,
                )?;
            }
            _ => {
                sgd_step(
                    model.param_mut(id),
                    grad,
                    recipe.lr,
                    recipe.momentum,
                    recipe.nesterov,
                    None,
                    false,
                )?;
            }
        }
    }
    Ok(())
}

/// Accuracy of argmax predictions over a split; ties resolve to the lowest
/// class index. Evaluation normalizes but never augments.
pub fn evaluate(
    model: &mut Model,
    ds: &Dataset,
    stats: &crate::data::ChannelStats,
    batch: usize,
    profile: Profile,
) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Contract("evaluation split is empty".into()));
    }
    let n = ds.len();
    let mut correct = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let (mut images, labels) = gather(ds, &idx);
        normalize(&mut images, stats);
        let mut tape = Tape::new();
        let (logits, _) = model.forward(&mut tape, &images, profile)?;
        let out = tape.value(logits);
        let classes = out.shape()[1];
        for (row, &label) in out.data().chunks(classes).zip(&labels) {
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            if best as u32 == label {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / n as f64)
}

/// Mean schedule target over all units at `step`.
fn mean_target_p(plan: &ProgressionPlan, kind: ScheduleKind, step: u64) -> Result<f64> {
    if plan.units == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for unit in 0..plan.units {
        sum += match plan.phase_of(unit, step)? {
            LayerPhase::FrozenPrefix => 1.0,
            LayerPhase::UnfrozenSuffix => 0.0,
            LayerPhase::Transition { local_t } => crate::masking::schedule_p(kind, local_t, plan.window())?,
        };
    }
    Ok(sum / plan.units as f64)
}

/// Trains a freshly built model and logs one metrics row per epoch.
///
/// Per optimizer step: advance masks to this step, zero frozen velocity,
/// forward (train profile), cross-entropy, backward, SGD. After the last
/// epoch the masks advance once more to the step-count boundary, which
/// finalizes every scheduled unit. Train-split accuracy is measured on a
/// fixed prefix of at most 1000 samples to keep epochs cheap.
pub fn run_training(setup: &TrainSetup, data: &Splits) -> Result<RunOutcome> {
    let recipe = &setup.recipe;
    if recipe.batch == 0 || recipe.epochs == 0 {
        return Err(Error::Config("batch size and epochs must be >= 1".into()));
    }
    let n = data.train.len();
    if n == 0 {
        return Err(Error::Config("training split is empty".into()));
    }
    if data.train.images.shape()[1..] != [setup.arch.input.0, setup.arch.input.1, setup.arch.input.2] {
        return Err(Error::Config(format!(
            "arch input {:?} does not match dataset sample shape {:?}",
            setup.arch.input,
            &data.train.images.shape()[1..]
        )));
    }
    let steps_per_epoch = n.div_ceil(recipe.batch) as u64;
    let total_steps = recipe.epochs as u64 * steps_per_epoch;

    let mut model = Model::build(setup.arch.clone(), setup.mode, recipe.seed)?;
    let units = model.scheduled_units();
    let has_masks = model.has_masks();
    let plan = if has_masks {
        let window = match setup.ordering {
            UnitOrdering::Global => total_steps,
            _ => setup.epochs_per_unit as u64 * steps_per_epoch,
        };
        Some(ProgressionPlan::new(
            setup.ordering,
            units,
            window,
            total_steps,
        )?)
    } else {
        None
    };
    let boundary_epochs: Vec<usize> = plan
        .as_ref()
        .map(|p| {
            p.boundary_steps()
                .iter()
                .map(|&s| (s / steps_per_epoch) as usize)
                .collect()
        })
        .unwrap_or_default();

    let mut rng_order = stream(recipe.seed, StreamRole::DataOrder, 0);
    let mut rng_aug = stream(recipe.seed, StreamRole::Augment, 0);
    let mut rngs_w: Vec<ChaCha12Rng> = (0..units)
        .map(|u| stream(recipe.seed, StreamRole::WeightMask, u as u64))
        .collect();
    let mut rngs_a: Vec<ChaCha12Rng> = (0..units)
        .map(|u| stream(recipe.seed, StreamRole::ActMask, u as u64))
        .collect();

    let eval_train = {
        let mut d = data.train.clone();
        d.truncate(1000);
        d
    };

    let mut rows = Vec::with_capacity(recipe.epochs);
    let mut timings = Vec::with_capacity(recipe.epochs);
    let mut step: u64 = 0;
    for epoch in 0..recipe.epochs {
        let started = std::time::Instant::now();
        let order = epoch_order(n, &mut rng_order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(recipe.batch) {
            if let Some(plan) = &plan {
                advance_masks(&mut model, plan, setup, &mut rngs_w, &mut rngs_a, step)?;
            }
            let (mut images, labels) = gather(&data.train, chunk);
            augment_normalize(
                &mut images,
                &mut rng_aug,
                &data.stats,
                setup.augment.pad,
                setup.augment.flip_prob,
            );
            let mut tape = Tape::new();
            let (logits, bindings) = model.forward(&mut tape, &images, Profile::Train)?;
            let loss = tape.softmax_cross_entropy(logits, &labels)?;
            let loss_val = tape.value(loss).data()[0];
            if !loss_val.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss became non-finite ({}) at epoch {} step {}; aborting",
                    loss_val, epoch, step
                )));
            }
            loss_sum += loss_val as f64 * labels.len() as f64;
            tape.backward(loss)?;
            optimizer_pass(&mut model, &tape, &bindings, recipe)?;
            step += 1;
        }

        let proxy_train = evaluate(&mut model, &eval_train, &data.stats, recipe.batch, Profile::EvalProxy)?;
        let proxy_test = evaluate(&mut model, &data.test, &data.stats, recipe.batch, Profile::EvalProxy)?;
        let deploy_train = evaluate(&mut model, &eval_train, &data.stats, recipe.batch, Profile::Deploy)?;
        let deploy_test = evaluate(&mut model, &data.test, &data.stats, recipe.batch, Profile::Deploy)?;
        let (transition_unit, mean_p) = match &plan {
            Some(p) => {
                let probe_step = step.min(total_steps.saturating_sub(1));
                (
                    p.transition_unit(probe_step).map(|u| u as i64).unwrap_or(-1),
                    mean_target_p(p, setup.schedule, probe_step)?,
                )
            }
            None => (-1, 0.0),
        };
        rows.push(MetricsRow {
            epoch,
            transition_unit,
            mean_p,
            train_loss: loss_sum / n as f64,
            proxy_train,
            proxy_test,
            deploy_train,
            deploy_test,
            mean_frozen: model.mean_frozen_fraction(),
        });
        timings.push((epoch, started.elapsed().as_secs_f64()));
    }

    if let Some(plan) = &plan {
        // one step past the end closes every window
        advance_masks(&mut model, plan, setup, &mut rngs_w, &mut rngs_a, total_steps)?;
        if let Some(last) = rows.last_mut() {
            last.mean_frozen = model.mean_frozen_fraction();
        }
    }

    Ok(RunOutcome {
        model,
        rows,
        timings,
        boundary_epochs,
        window_epochs: setup.epochs_per_unit.max(1),
    })
}

fn advance_masks(
    model: &mut Model,
    plan: &ProgressionPlan,
    setup: &TrainSetup,
    rngs_w: &mut [ChaCha12Rng],
    rngs_a: &mut [ChaCha12Rng],
    step: u64,
) -> Result<()> {
    {
        let mut units: Vec<UnitMaskState> = model
            .blocks
            .iter_mut()
            .zip(rngs_w.iter_mut().zip(rngs_a.iter_mut()))
            .map(|(b, (rw, ra))| UnitMaskState {
                weight: b.w_mask.as_mut(),
                act: b.a_mask.as_mut(),
                rng_w: rw,
                rng_a: ra,
            })
            .collect();
        step_masks(&mut units, plan, setup.schedule, setup.refresh_r, step)?;
    }
    model.zero_frozen_velocity();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_splits;
    use crate::masking::Mask;
    use crate::model::ArchFamily;
    use crate::tensor::Tensor;

    fn scalar_param(v: f32) -> Param {
        Param::new(Tensor::new(vec![1], vec![v]).unwrap())
    }

    #[test]
    fn nesterov_matches_the_hand_trace() {
        // w0 = 1, g = 1 each step, lr = 0.1, mu = 0.9:
        // v1 = -0.1,  w1 = 1 + 0.9(-0.1) - 0.1      = 0.81
        // v2 = -0.19, w2 = 0.81 + 0.9(-0.19) - 0.1  = 0.539
        let mut p = scalar_param(1.0);
        sgd_step(&mut p, &[1.0], 0.1, 0.9, true, None, false).unwrap();
        assert!((p.value.data()[0] - 0.81).abs() < 1e-6, "{}", p.value.data()[0]);
        sgd_step(&mut p, &[1.0], 0.1, 0.9, true, None, false).unwrap();
        assert!((p.value.data()[0] - 0.539).abs() < 1e-6, "{}", p.value.data()[0]);
    }

    #[test]
    fn zero_momentum_is_plain_sgd_and_zero_grad_is_a_fixed_point() {
        let mut p = scalar_param(1.0);
        sgd_step(&mut p, &[2.0], 0.1, 0.0, true, None, false).unwrap();
        assert!((p.value.data()[0] - 0.8).abs() < 1e-7);

        let mut q = scalar_param(0.3);
        sgd_step(&mut q, &[0.0], 0.1, 0.9, true, None, false).unwrap();
        assert_eq!(q.value.data()[0], 0.3);
        assert_eq!(q.velocity[0], 0.0);
    }

    #[test]
    fn classical_momentum_differs_from_nesterov() {
        let mut p = scalar_param(1.0);
        sgd_step(&mut p, &[1.0], 0.1, 0.9, false, None, false).unwrap();
        assert!((p.value.data()[0] - 0.9).abs() < 1e-7);
        sgd_step(&mut p, &[1.0], 0.1, 0.9, false, None, false).unwrap();
        assert!((p.value.data()[0] - 0.71).abs() < 1e-6);
    }

    #[test]
    fn frozen_entries_never_move_and_clamp_confines_latents() {
        let mut p = Param::new(Tensor::new(vec![3], vec![0.5, -0.5, 0.95]).unwrap());
        p.velocity = vec![0.0, 0.7, 0.0]; // stale velocity on the frozen entry
        let mut m = Mask::zeros(vec![3]);
        m.set(1, true);
        sgd_step(&mut p, &[1.0, 1.0, -1.0], 0.1, 0.9, true, Some(&m), true).unwrap();
        assert_eq!(p.value.data()[1], -0.5); // untouched despite velocity
        assert_eq!(p.velocity[1], 0.7); // left for the caller to zero on freeze
        assert!((p.value.data()[0] - 0.31).abs() < 1e-6);
        assert_eq!(p.value.data()[2], 1.0); // 0.95 + 0.19 clamped
    }

    #[test]
    fn shape_mismatches_are_contract_errors() {
        let mut p = scalar_param(1.0);
        assert!(sgd_step(&mut p, &[1.0, 2.0], 0.1, 0.9, true, None, false).is_err());
        let m = Mask::zeros(vec![2]);
        assert!(sgd_step(&mut p, &[1.0], 0.1, 0.9, true, Some(&m), false).is_err());
    }

    fn tiny_setup(mode: QuantMode, epochs: usize) -> TrainSetup {
        TrainSetup {
            arch: ArchSpec {
                family: ArchFamily::Mlp,
                depth: 2,
                width: 12,
                input: (1, 16, 16),
                classes: 10,
            },
            mode,
            ordering: UnitOrdering::ForwardLayerwise,
            schedule: ScheduleKind::Cubic,
            refresh_r: 10,
            epochs_per_unit: 1,
            recipe: Recipe {
                lr: 0.05,
                momentum: 0.9,
                nesterov: true,
                batch: 20,
                epochs,
                seed: 7,
            },
            augment: AugmentSpec {
                pad: 2,
                flip_prob: 0.0,
            },
        }
    }

    #[test]
    fn training_is_deterministic_and_logs_one_row_per_epoch() {
        let data = synth_splits(60, 30, 3);
        let a = run_training(&tiny_setup(QuantMode::StomppBnn, 3), &data).unwrap();
        let b = run_training(&tiny_setup(QuantMode::StomppBnn, 3), &data).unwrap();
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.rows, b.rows);
        assert_eq!(
            a.model.blocks[0].w.value.data(),
            b.model.blocks[0].w.value.data()
        );
        for (i, r) in a.rows.iter().enumerate() {
            assert_eq!(r.epoch, i);
            assert!(r.train_loss.is_finite());
        }
    }

    #[test]
    fn scheduled_run_finalizes_and_proxy_equals_deploy() {
        let data = synth_splits(60, 30, 5);
        let out = run_training(&tiny_setup(QuantMode::StomppBnn, 3), &data).unwrap();
        let mut model = out.model;
        for b in &model.blocks {
            assert!(b.w_mask.as_ref().unwrap().all_frozen());
            assert!(b.a_mask.as_ref().unwrap().all_frozen());
        }
        assert_eq!(out.rows.last().unwrap().mean_frozen, 1.0);
        let proxy = evaluate(&mut model, &data.test, &data.stats, 20, Profile::EvalProxy).unwrap();
        let deploy = evaluate(&mut model, &data.test, &data.stats, 20, Profile::Deploy).unwrap();
        assert_eq!(proxy, deploy);
    }

    #[test]
    fn frozen_entries_are_immutable_once_their_unit_closes() {
        // Both runs share every RNG stream, so their first two epochs are
        // step-identical. Unit 0 finalizes at the end of epoch 1; during the
        // longer run's extra epoch it sits fully frozen, so its latent must
        // be bitwise unchanged from the shorter run's endpoint.
        let data = synth_splits(60, 30, 9);
        let mut prefix = tiny_setup(QuantMode::StomppBnn, 2);
        prefix.epochs_per_unit = 1;
        let mut full = tiny_setup(QuantMode::StomppBnn, 3);
        full.epochs_per_unit = 1;
        let short = run_training(&prefix, &data).unwrap();
        let long = run_training(&full, &data).unwrap();
        assert!(short.model.blocks[0].w_mask.as_ref().unwrap().all_frozen());
        assert_eq!(
            short.model.blocks[0].w.value.data(),
            long.model.blocks[0].w.value.data(),
            "frozen block moved during the extra epoch"
        );
    }

    #[test]
    fn budget_overflow_is_a_config_error_before_training() {
        let data = synth_splits(60, 30, 3);
        let mut setup = tiny_setup(QuantMode::StomppBnn, 3);
        setup.epochs_per_unit = 2; // 2 units x 2 epochs > 3 epochs
        let err = run_training(&setup, &data).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{}", err);
        assert!(err.to_string().contains("budget"), "{}", err);
    }

    #[test]
    fn ste_and_fp_modes_ignore_the_mask_plan() {
        let data = synth_splits(40, 20, 3);
        let mut setup = tiny_setup(QuantMode::SteBnn, 2);
        setup.epochs_per_unit = 100; // would blow the budget if masks existed
        let out = run_training(&setup, &data).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[0].transition_unit, -1);
        assert_eq!(out.rows[0].mean_frozen, 0.0);
        // surrogate-route latents stay inside the clamp
        for b in &out.model.blocks {
            assert!(b.w.value.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn evaluate_breaks_argmax_ties_toward_the_lowest_class() {
        let data = synth_splits(20, 10, 3);
        let mut model = Model::build(
            ArchSpec {
                family: ArchFamily::Mlp,
                depth: 1,
                width: 8,
                input: (1, 16, 16),
                classes: 10,
            },
            QuantMode::Fp,
            1,
        )
        .unwrap();
        // zero classifier -> all logits equal -> always predicts class 0
        for v in model.cls.value.data_mut() {
            *v = 0.0;
        }
        let acc = evaluate(&mut model, &data.test, &data.stats, 10, Profile::EvalProxy).unwrap();
        let zeros = data.test.labels.iter().filter(|&&l| l == 0).count();
        assert_eq!(acc, zeros as f64 / data.test.len() as f64);
    }
}
