use crate::error::Result;
use crate::numerics::params::{Gradients, ModelParams, ParamGroup};

/// Result of checking one parameter group against central finite differences.
#[derive(Debug, Clone)]
pub struct GroupCheck {
    pub group: ParamGroup,
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Relative error between an analytic and a numeric derivative.
///
/// Both values below 1e-8 in magnitude are treated as numerically zero and
/// compare equal: central differences carry ~1e-11 absolute noise, so
/// magnitudes in that range hold no signal either way.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale <= 1e-8 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Compare analytic gradients against central finite differences of `loss`
/// at the sampled coordinates, returning the max relative error per group.
///
/// `loss` must recompute the objective from `params` alone so a perturbed
/// coordinate flows through the whole computation. Coordinates are flat
/// indices into each group's storage; groups absent from `coords` are
/// reported with zero error over zero coordinates.
pub fn grad_check<F>(
    params: &ModelParams,
    grads: &Gradients,
    loss: F,
    coords: &[(ParamGroup, usize)],
    epsilon: f64,
) -> Result<Vec<GroupCheck>>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    let mut work = params.clone();
    let mut checks: Vec<GroupCheck> = ParamGroup::ALL
        .iter()
        .map(|&group| GroupCheck {
            group,
            max_rel_err: 0.0,
            coords_checked: 0,
        })
        .collect();

    for &(group, flat) in coords {
        let original = work.group(group)[flat];

        work.group_mut(group)[flat] = original + epsilon;
        let plus = loss(&work)?;
        work.group_mut(group)[flat] = original - epsilon;
        let minus = loss(&work)?;
        work.group_mut(group)[flat] = original;

        let numeric = (plus - minus) / (2.0 * epsilon);
        let analytic = grads.value_at(group, flat);
        let rel = relative_error(analytic, numeric);

        let entry = checks
            .iter_mut()
            .find(|c| c.group == group)
            .expect("all groups present");
        entry.coords_checked += 1;
        if rel > entry.max_rel_err {
            entry.max_rel_err = rel;
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::params::Dims;

    #[test]
    fn quadratic_loss_checks_out() {
        // loss = 0.5 * sum(b_k^2) over cf_bias; gradient is b itself.
        let dims = Dims {
            num_users: 1,
            num_target_items: 1,
            num_source_items: 1,
            d: 4,
            vocab_size: 1,
        };
        let mut params = ModelParams::zeros(dims, dims.d);
        params.cf_bias = vec![0.3, -1.2, 0.0, 2.5];
        let mut grads = Gradients::zeros_like(&params);
        grads.cf_bias = params.cf_bias.clone();

        let coords: Vec<_> = (0..4).map(|k| (ParamGroup::CfBias, k)).collect();
        let checks = grad_check(
            &params,
            &grads,
            |p| Ok(0.5 * p.cf_bias.iter().map(|b| b * b).sum::<f64>()),
            &coords,
            1e-5,
        )
        .unwrap();
        let bias = checks
            .iter()
            .find(|c| c.group == ParamGroup::CfBias)
            .unwrap();
        assert_eq!(bias.coords_checked, 4);
        assert!(bias.max_rel_err <= 1e-9, "err {}", bias.max_rel_err);
    }

    #[test]
    fn independent_group_reports_zero() {
        let dims = Dims {
            num_users: 1,
            num_target_items: 1,
            num_source_items: 1,
            d: 2,
            vocab_size: 2,
        };
        let params = ModelParams::zeros(dims, dims.d);
        let grads = Gradients::zeros_like(&params);
        let coords = vec![(ParamGroup::WordValue, 0), (ParamGroup::WordValue, 3)];
        let checks = grad_check(&params, &grads, |_| Ok(1.25), &coords, 1e-5).unwrap();
        let wv = checks
            .iter()
            .find(|c| c.group == ParamGroup::WordValue)
            .unwrap();
        assert_eq!(wv.max_rel_err, 0.0);
        assert_eq!(wv.coords_checked, 2);
    }

    #[test]
    fn relative_error_conventions() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-9, -1e-9), 0.0);
        assert!((relative_error(1.0, 1.0001) - 1e-4 / 1.0001).abs() < 1e-9);
    }
}
